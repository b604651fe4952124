//! Equal error rate and minimum detection cost.
//!
//! Both metrics are computed from the operating points obtained by sweeping
//! an acceptance threshold over the sorted unique scores: a trial is accepted
//! when its score is at least the threshold. The sweep starts above the
//! highest score (reject everything, `P_fa = 0`, `P_miss = 1`) and ends at the
//! lowest (accept everything).
//!
//! The EER is read off the lower convex hull of those points: adjacent hull
//! vertices are joined by straight lines, and the EER is where that polyline
//! crosses `P_fa = P_miss`. Using the hull makes the value independent of how
//! ties between target and non-target scores are broken, and it is the rate
//! a system can actually achieve by randomizing between two thresholds.

use serde::Serialize;

use crate::error::{Error, Result};

/// Detection cost parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DcfParams {
    pub p_target: f64,
    pub c_miss: f64,
    pub c_fa: f64,
}

impl Default for DcfParams {
    fn default() -> Self {
        DcfParams {
            p_target: 0.01,
            c_miss: 1.0,
            c_fa: 1.0,
        }
    }
}

/// One threshold setting: accept scores `>= threshold`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub p_fa: f64,
    pub p_miss: f64,
}

/// Summary metrics of a scored trial list.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub eer: f64,
    pub eer_threshold: f64,
    pub min_dcf: f64,
    pub n_target: usize,
    pub n_nontarget: usize,
}

impl MetricsReport {
    pub fn compute(scores: &[f64], targets: &[bool]) -> Result<Self> {
        let points = operating_points(scores, targets)?;
        let (eer, eer_threshold) = eer_from_points(&points);
        let min_dcf = min_dcf_from_points(&points, DcfParams::default());
        let n_target = targets.iter().filter(|&&t| t).count();
        Ok(MetricsReport {
            eer,
            eer_threshold,
            min_dcf,
            n_target,
            n_nontarget: targets.len() - n_target,
        })
    }
}

/// Counts of each class; errors unless both are present.
fn class_counts(scores: &[f64], targets: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != targets.len() {
        return Err(Error::dim(
            "metrics",
            format!("{} scores for {} labels", scores.len(), targets.len()),
        ));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::Input(format!("non-finite score {s}")));
    }
    let nt = targets.iter().filter(|&&t| t).count();
    let nn = targets.len() - nt;
    if nt == 0 || nn == 0 {
        return Err(Error::Input(format!(
            "metrics need both classes, got {nt} target and {nn} non-target trials"
        )));
    }
    Ok((nt, nn))
}

/// Operating points from rejecting everything down to accepting everything.
pub fn operating_points(scores: &[f64], targets: &[bool]) -> Result<Vec<OperatingPoint>> {
    let (nt, nn) = class_counts(scores, targets)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = Vec::with_capacity(scores.len() + 1);
    points.push(OperatingPoint {
        threshold: f64::INFINITY,
        p_fa: 0.0,
        p_miss: 1.0,
    });
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if targets[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(OperatingPoint {
            threshold: s,
            p_fa: fp as f64 / nn as f64,
            p_miss: (nt - tp) as f64 / nt as f64,
        });
    }
    Ok(points)
}

/// Lower convex hull of points ordered by increasing `p_fa`.
fn lower_hull(points: &[OperatingPoint]) -> Vec<OperatingPoint> {
    let mut hull: Vec<OperatingPoint> = Vec::new();
    for &p in points {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.p_fa - a.p_fa) * (p.p_miss - a.p_miss) - (b.p_miss - a.p_miss) * (p.p_fa - a.p_fa);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

fn eer_from_points(points: &[OperatingPoint]) -> (f64, f64) {
    let hull = lower_hull(points);
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        let da = a.p_miss - a.p_fa;
        let db = b.p_miss - b.p_fa;
        if da >= 0.0 && db <= 0.0 {
            if da == db {
                return (a.p_fa, a.threshold);
            }
            let t = da / (da - db);
            let eer = a.p_fa + t * (b.p_fa - a.p_fa);
            let threshold = if a.threshold.is_finite() {
                a.threshold + t * (b.threshold - a.threshold)
            } else {
                b.threshold
            };
            return (eer, threshold);
        }
    }
    unreachable!("hull runs from (0, 1) to (1, 0)")
}

fn min_dcf_from_points(points: &[OperatingPoint], c: DcfParams) -> f64 {
    let norm = (c.c_miss * c.p_target).min(c.c_fa * (1.0 - c.p_target));
    points
        .iter()
        .map(|p| c.c_miss * c.p_target * p.p_miss + c.c_fa * (1.0 - c.p_target) * p.p_fa)
        .fold(f64::INFINITY, f64::min)
        / norm
}

/// Equal error rate and the score threshold where it is reached.
pub fn eer(scores: &[f64], targets: &[bool]) -> Result<(f64, f64)> {
    Ok(eer_from_points(&operating_points(scores, targets)?))
}

/// Normalized minimum detection cost.
pub fn min_dcf(scores: &[f64], targets: &[bool], params: DcfParams) -> Result<f64> {
    if !(params.p_target > 0.0 && params.p_target < 1.0 && params.c_miss > 0.0 && params.c_fa > 0.0) {
        return Err(Error::Config(format!("invalid detection cost parameters {params:?}")));
    }
    Ok(min_dcf_from_points(&operating_points(scores, targets)?, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_case_crosses_at_a_quarter() {
        let (e, _) = eer(&[0.9, 0.8, 0.85, 0.1], &[true, true, false, false]).unwrap();
        assert!((e - 0.25).abs() < 1e-12);
    }

    #[test]
    fn separated_scores() {
        let s = [0.9, 0.7, 0.2, -0.4];
        let t = [true, true, false, false];
        let (e, thr) = eer(&s, &t).unwrap();
        assert_eq!(e, 0.0);
        assert!(thr > 0.2 && thr <= 0.7);
        assert_eq!(min_dcf(&s, &t, DcfParams::default()).unwrap(), 0.0);
    }

    #[test]
    fn tied_scores_give_trivial_cost() {
        let s = [0.5; 6];
        let t = [true, false, true, false, false, false];
        assert!((min_dcf(&s, &t, DcfParams::default()).unwrap() - 1.0).abs() < 1e-12);
        assert!((eer(&s, &t).unwrap().0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hull_eer_never_exceeds_chance() {
        let (e, _) = eer(&[0.1, 0.9], &[true, false]).unwrap();
        assert_eq!(e, 0.5);
        let (e, _) = eer(&[0.1, 0.2, 0.8, 0.9], &[true, true, false, false]).unwrap();
        assert_eq!(e, 0.5);
    }

    #[test]
    fn one_class_is_an_input_error() {
        assert!(matches!(eer(&[0.1, 0.2], &[true, true]), Err(Error::Input(_))));
        assert!(matches!(
            min_dcf(&[0.1], &[false], DcfParams::default()),
            Err(Error::Input(_))
        ));
        assert!(eer(&[0.1], &[true, false]).is_err());
    }
}
