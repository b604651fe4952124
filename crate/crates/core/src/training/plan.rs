use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{LossConfig, Regime};

/// How baseline training segments are cut.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Methodology {
    /// Fixed-length segments of [`TrainPlan::long_secs`].
    Long,
    /// Segments of uniformly random length in [`TrainPlan::varied_secs`].
    Varied,
}

/// Which version of an utterance the primary sample `x` is drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleSource {
    /// The clean original and its corrupted copies, uniformly.
    Pool,
    Clean,
    Corrupted,
}

/// Everything that controls one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainPlan {
    pub loss: LossConfig,
    pub methodology: Methodology,
    pub long_secs: f64,
    pub varied_secs: (f64, f64),
    /// Length range of the truncated partner in length-variability training.
    pub truncation_secs: (f64, f64),
    pub init_checkpoint: Option<PathBuf>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    /// Learning rate multiplier applied after every epoch.
    pub lr_decay: f64,
    pub seed: u64,
    /// Overrides the regime's default source of `x`.
    pub sample_source: Option<SampleSource>,
    /// Clean utterances per speaker in the probe trial list.
    pub probe_utts_per_speaker: usize,
}

impl Default for TrainPlan {
    fn default() -> Self {
        TrainPlan {
            loss: LossConfig::for_regime(Regime::Amsm),
            methodology: Methodology::Long,
            long_secs: 8.0,
            varied_secs: (0.5, 8.5),
            truncation_secs: (0.5, 8.5),
            init_checkpoint: None,
            epochs: 30,
            batch_size: 32,
            lr: 0.01,
            momentum: 0.9,
            lr_decay: 0.95,
            seed: 0,
            sample_source: None,
            probe_utts_per_speaker: 4,
        }
    }
}

impl TrainPlan {
    /// The source of `x` actually used.
    pub fn effective_source(&self) -> SampleSource {
        self.sample_source.unwrap_or(match self.loss.regime {
            Regime::Amsm | Regime::Lvc => SampleSource::Pool,
            Regime::Irl => SampleSource::Clean,
            Regime::Ca => SampleSource::Corrupted,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        let bad = |m: String| Err(Error::Config(m));
        if matches!(self.loss.regime, Regime::Irl | Regime::Lvc) && self.init_checkpoint.is_none() {
            return bad(format!(
                "{} training starts from a baseline; set init_checkpoint",
                self.loss.regime
            ));
        }
        if self.loss.regime == Regime::Irl && self.sample_source.is_some_and(|s| s != SampleSource::Clean) {
            return bad("irl pairs a clean sample with its corrupted copy; sample_source must be clean".into());
        }
        let range_ok = |(lo, hi): (f64, f64)| lo > 0.0 && hi >= lo && hi.is_finite();
        if !(self.long_secs > 0.0 && self.long_secs.is_finite()) {
            return bad(format!("long_secs must be positive, got {}", self.long_secs));
        }
        if !range_ok(self.varied_secs) || !range_ok(self.truncation_secs) {
            return bad(format!(
                "duration ranges must be positive and ordered, got {:?} and {:?}",
                self.varied_secs, self.truncation_secs
            ));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be at least 1".into());
        }
        if !(self.lr > 0.0 && (0.0..1.0).contains(&self.momentum) && self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad(format!(
                "invalid optimizer settings lr={} momentum={} lr_decay={}",
                self.lr, self.momentum, self.lr_decay
            ));
        }
        if self.probe_utts_per_speaker < 2 {
            return bad("probe_utts_per_speaker must be at least 2 to form target trials".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alignment_regimes_need_a_baseline() {
        let mut p = TrainPlan {
            loss: LossConfig::for_regime(Regime::Lvc),
            ..TrainPlan::default()
        };
        assert!(matches!(p.validate(), Err(Error::Config(_))));
        p.init_checkpoint = Some("base.ckpt".into());
        p.validate().unwrap();
        TrainPlan::default().validate().unwrap();
    }

    #[test]
    fn durations_must_be_positive() {
        let p = TrainPlan {
            varied_secs: (0.0, 2.0),
            ..TrainPlan::default()
        };
        assert!(p.validate().is_err());
        let p = TrainPlan {
            long_secs: -1.0,
            ..TrainPlan::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn default_sources() {
        let mut p = TrainPlan::default();
        assert_eq!(p.effective_source(), SampleSource::Pool);
        p.loss = LossConfig::for_regime(Regime::Ca);
        assert_eq!(p.effective_source(), SampleSource::Corrupted);
    }
}
