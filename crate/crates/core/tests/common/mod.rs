//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls into the metric implementation under test: operating
//! points are counted directly for every candidate threshold, and the
//! equal error rate is the lowest point where any chord between two operating
//! points crosses the `P_fa = P_miss` diagonal.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `(P_fa, P_miss)` for accepting scores `>= threshold`, by direct counting.
pub fn rates_at(scores: &[f64], targets: &[bool], threshold: f64) -> (f64, f64) {
    let n_tar = targets.iter().filter(|&&t| t).count() as f64;
    let n_non = targets.len() as f64 - n_tar;
    let mut fa = 0usize;
    let mut miss = 0usize;
    for (&s, &t) in scores.iter().zip(targets) {
        let accept = s >= threshold;
        if t && !accept {
            miss += 1;
        }
        if !t && accept {
            fa += 1;
        }
    }
    (fa as f64 / n_non, miss as f64 / n_tar)
}

/// Operating points for every distinct score plus "reject everything".
///
/// Each threshold is counted on its own with binary searches over the
/// sorted scores of each class.
pub fn all_operating_points(scores: &[f64], targets: &[bool]) -> Vec<(f64, f64)> {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let mut tar: Vec<f64> = scores.iter().zip(targets).filter(|p| *p.1).map(|p| *p.0).collect();
    let mut non: Vec<f64> = scores.iter().zip(targets).filter(|p| !*p.1).map(|p| *p.0).collect();
    tar.sort_by(f64::total_cmp);
    non.sort_by(f64::total_cmp);
    let below = |v: &[f64], thr: f64| v.partition_point(|&s| s < thr);
    let mut pts = vec![(0.0, 1.0)];
    for &thr in &thresholds {
        let p_fa = (non.len() - below(&non, thr)) as f64 / non.len() as f64;
        let p_miss = below(&tar, thr) as f64 / tar.len() as f64;
        pts.push((p_fa, p_miss));
    }
    pts
}

/// Smallest diagonal crossing over all chords between an operating point on
/// or above the diagonal and one on or below it.
pub fn chord_eer(points: &[(f64, f64)]) -> f64 {
    let above: Vec<_> = points.iter().filter(|p| p.1 >= p.0).collect();
    let below: Vec<_> = points.iter().filter(|p| p.1 <= p.0).collect();
    let mut best = f64::INFINITY;
    for a in &above {
        let d1 = a.1 - a.0;
        for b in &below {
            let d2 = b.1 - b.0;
            let v = if d1 - d2 == 0.0 {
                a.0
            } else {
                let t = d1 / (d1 - d2);
                a.0 + t * (b.0 - a.0)
            };
            best = best.min(v);
        }
    }
    best
}

pub fn brute_eer(scores: &[f64], targets: &[bool]) -> f64 {
    chord_eer(&all_operating_points(scores, targets))
}

/// Minimum normalized detection cost over every operating point.
pub fn brute_min_dcf(scores: &[f64], targets: &[bool], p_target: f64, c_miss: f64, c_fa: f64) -> f64 {
    let norm = (c_miss * p_target).min(c_fa * (1.0 - p_target));
    all_operating_points(scores, targets)
        .iter()
        .map(|&(p_fa, p_miss)| (c_miss * p_target * p_miss + c_fa * (1.0 - p_target) * p_fa) / norm)
        .fold(f64::INFINITY, f64::min)
}

/// A random trial list with both classes present.
///
/// Target scores are shifted by `separation`; with `quantum > 0` scores are
/// rounded to multiples of it so that ties occur.
pub fn random_trials(r: &mut impl Rng, n: usize, separation: f64, quantum: f64) -> (Vec<f64>, Vec<bool>) {
    assert!(n >= 2);
    let mut targets: Vec<bool> = (0..n).map(|_| r.gen_bool(0.3)).collect();
    targets[0] = true;
    targets[1] = false;
    let scores = targets
        .iter()
        .map(|&t| {
            let s: f64 = r.gen_range(-1.0..1.0) + if t { separation } else { 0.0 };
            if quantum > 0.0 {
                (s / quantum).round() * quantum
            } else {
                s
            }
        })
        .collect();
    (scores, targets)
}

/// Plain triple-loop matrix product of row-major data.
pub fn naive_matmul(a: &[f64], b: &[f64], n: usize, k: usize, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for l in 0..k {
                s += a[i * k + l] * b[l * m + j];
            }
            out[i * m + j] = s;
        }
    }
    out
}
