//! Trial lists and score files.
//!
//! A trial list has one trial per line: `enroll_id test_id tgt|imp [condition]`.
//! Blank lines and lines starting with `#` are ignored. A score file has one
//! `enroll_id test_id score` line per trial, in trial-list order.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::metrics::MetricsReport;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trial {
    pub enroll: String,
    pub test: String,
    pub target: bool,
    /// Free-form condition tag such as a duration bucket.
    pub condition: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrialList {
    pub trials: Vec<Trial>,
}

impl TrialList {
    /// Builds a list, rejecting duplicate `(enroll, test)` pairs.
    pub fn new(trials: Vec<Trial>) -> Result<Self> {
        let mut seen = HashSet::new();
        for t in &trials {
            if !seen.insert((t.enroll.as_str(), t.test.as_str())) {
                return Err(Error::Input(format!(
                    "duplicate trial {} {}",
                    t.enroll, t.test
                )));
            }
        }
        Ok(TrialList { trials })
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn targets(&self) -> Vec<bool> {
        self.trials.iter().map(|t| t.target).collect()
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut trials = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = |detail: &str| Error::format(source, format!("line {}: {detail}", n + 1));
            if !(3..=4).contains(&fields.len()) {
                return Err(bad("expected `enroll test tgt|imp [condition]`"));
            }
            let target = match fields[2] {
                "tgt" | "target" => true,
                "imp" | "nontarget" => false,
                other => return Err(bad(&format!("unknown label {other:?}"))),
            };
            trials.push(Trial {
                enroll: fields[0].to_string(),
                test: fields[1].to_string(),
                target,
                condition: fields.get(3).map(|s| s.to_string()),
            });
        }
        TrialList::new(trials)
    }

    pub fn read(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact {
                path: path.to_path_buf(),
                hint: "trial list not found; generate one with `xvec gen-corpus`".into(),
            });
        }
        Self::parse(&std::fs::read_to_string(path)?, &path.display().to_string())
    }

    pub fn format(&self) -> String {
        let mut out = String::new();
        for t in &self.trials {
            let label = if t.target { "tgt" } else { "imp" };
            match &t.condition {
                Some(c) => writeln!(out, "{} {} {label} {c}", t.enroll, t.test),
                None => writeln!(out, "{} {} {label}", t.enroll, t.test),
            }
            .expect("writing to a String");
        }
        out
    }

    /// Trials tagged with `condition`.
    pub fn filter_condition(&self, condition: &str) -> TrialList {
        TrialList {
            trials: self
                .trials
                .iter()
                .filter(|t| t.condition.as_deref() == Some(condition))
                .cloned()
                .collect(),
        }
    }

    /// Distinct condition tags in order of first appearance.
    pub fn conditions(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for c in self.trials.iter().filter_map(|t| t.condition.as_ref()) {
            if !seen.contains(c) {
                seen.push(c.clone());
            }
        }
        seen
    }
}

/// A trial list with one score per trial.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredTrials {
    pub trials: TrialList,
    pub scores: Vec<f64>,
}

impl ScoredTrials {
    pub fn new(trials: TrialList, scores: Vec<f64>) -> Result<Self> {
        if trials.len() != scores.len() {
            return Err(Error::dim(
                "scored trials",
                format!("{} scores for {} trials", scores.len(), trials.len()),
            ));
        }
        Ok(ScoredTrials { trials, scores })
    }

    pub fn metrics(&self) -> Result<MetricsReport> {
        MetricsReport::compute(&self.scores, &self.trials.targets())
    }

    /// Metrics per condition tag, plus `"all"` over every trial.
    pub fn metrics_by_condition(&self) -> Result<BTreeMap<String, MetricsReport>> {
        let mut out = BTreeMap::new();
        out.insert("all".to_string(), self.metrics()?);
        for c in self.trials.conditions() {
            let (scores, targets): (Vec<f64>, Vec<bool>) = self
                .trials
                .trials
                .iter()
                .zip(&self.scores)
                .filter(|(t, _)| t.condition.as_deref() == Some(c.as_str()))
                .map(|(t, &s)| (s, t.target))
                .unzip();
            match MetricsReport::compute(&scores, &targets) {
                Ok(m) => {
                    out.insert(c, m);
                }
                Err(Error::Input(msg)) => log::warn!("condition {c} skipped: {msg}"),
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }

    /// `enroll test score` lines; scores use the shortest exact decimal form.
    pub fn format_scores(&self) -> String {
        let mut out = String::new();
        for (t, s) in self.trials.trials.iter().zip(&self.scores) {
            writeln!(out, "{} {} {s}", t.enroll, t.test).expect("writing to a String");
        }
        out
    }

    /// Parses a score file and attaches it to `trials`, matching by `(enroll, test)`.
    pub fn parse_scores(trials: TrialList, text: &str, source: &str) -> Result<Self> {
        let mut by_pair = std::collections::HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |detail: &str| Error::format(source, format!("line {}: {detail}", n + 1));
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(bad("expected `enroll test score`"));
            }
            let s: f64 = f[2].parse().map_err(|_| bad(&format!("bad score {:?}", f[2])))?;
            if by_pair.insert((f[0].to_string(), f[1].to_string()), s).is_some() {
                return Err(bad("duplicate trial"));
            }
        }
        let scores = trials
            .trials
            .iter()
            .map(|t| {
                by_pair
                    .get(&(t.enroll.clone(), t.test.clone()))
                    .copied()
                    .ok_or_else(|| Error::format(source, format!("no score for {} {}", t.enroll, t.test)))
            })
            .collect::<Result<Vec<_>>>()?;
        ScoredTrials::new(trials, scores)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LIST: &str = "# demo\nspk0-a spk0-b tgt 2s\nspk0-a spk1-a imp 2s\n\nspk1-a spk1-b tgt\n";

    #[test]
    fn parse_format_round_trip() {
        let l = TrialList::parse(LIST, "t").unwrap();
        assert_eq!(l.len(), 3);
        assert_eq!(l.targets(), vec![true, false, true]);
        assert_eq!(l.conditions(), vec!["2s".to_string()]);
        assert_eq!(TrialList::parse(&l.format(), "t").unwrap(), l);
        assert_eq!(l.filter_condition("2s").len(), 2);
    }

    #[test]
    fn rejects_bad_lines_and_duplicates() {
        assert!(TrialList::parse("a b maybe\n", "t").is_err());
        assert!(TrialList::parse("a b\n", "t").is_err());
        assert!(matches!(
            TrialList::parse("a b tgt\na b imp\n", "t"),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn scores_round_trip_exactly() {
        let l = TrialList::parse(LIST, "t").unwrap();
        let s = ScoredTrials::new(l.clone(), vec![0.1 + 0.2, -1.0 / 3.0, 1e-300]).unwrap();
        let back = ScoredTrials::parse_scores(l, &s.format_scores(), "s").unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn missing_score_is_reported() {
        let l = TrialList::parse(LIST, "t").unwrap();
        assert!(ScoredTrials::parse_scores(l, "spk0-a spk0-b 0.5\n", "s").is_err());
    }
}
