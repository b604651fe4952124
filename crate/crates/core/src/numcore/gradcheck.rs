//! Central-difference gradient checking.
//!
//! The checked function builds a scalar on a fresh [`Graph`] from a list of
//! input matrices. Analytic gradients come from one backward pass; numeric
//! gradients from `(f(x + eps) - f(x - eps)) / 2 eps`, one coordinate at a
//! time, on freshly built graphs.
//!
//! A perturbation that straddles a ReLU kink makes the central difference
//! average two different slopes. Such a coordinate is recognised by its
//! one-sided differences disagreeing; it counts as a kink, not a failure,
//! only when the analytic value matches one of the two one-sided slopes.

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::rng::Rng;

use super::{Graph, Matrix, NodeId};

#[derive(Clone, Debug)]
pub struct GradCheckOptions {
    pub eps: f64,
    /// Upper bound on perturbed coordinates across all inputs.
    pub max_coords: usize,
    /// Pass threshold on the relative error.
    pub tolerance: f64,
    /// Denominator floor so that near-zero gradients are compared absolutely.
    pub abs_floor: f64,
    /// Further denominator floor as a fraction of the largest analytic
    /// gradient magnitude. Coordinates far smaller than the largest one are
    /// then held to an absolute error the central difference can resolve:
    /// its cancellation noise scales with the loss value, not the coordinate.
    pub scale_floor: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            eps: 1e-6,
            max_coords: 2000,
            tolerance: 1e-4,
            abs_floor: 1e-4,
            scale_floor: 1e-3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_err: f64,
    /// `(input, flat index, analytic, numeric)` of the worst coordinate.
    pub worst: Option<(usize, usize, f64, f64)>,
    pub tolerance: f64,
    /// Coordinates whose perturbation straddled a kink, excluded from `max_rel_err`.
    pub kinks: usize,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.tolerance
    }
}

/// Relative agreement required between the analytic value and a one-sided slope at a kink.
const KINK_MATCH: f64 = 1e-3;

pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares analytic and central-difference gradients of `f` at `inputs`.
pub fn check_gradients<F>(
    inputs: &[Matrix],
    f: F,
    opts: &GradCheckOptions,
    rng: &mut Rng,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph, &[NodeId]) -> Result<NodeId>,
{
    let eval = |xs: &[Matrix]| -> Result<f64> {
        let mut g = Graph::new();
        let ids: Vec<NodeId> = xs.iter().map(|m| g.param(m.clone())).collect();
        let root = f(&mut g, &ids)?;
        g.value(root).to_scalar()
    };

    let mut g = Graph::new();
    let ids: Vec<NodeId> = inputs.iter().map(|m| g.param(m.clone())).collect();
    let root = f(&mut g, &ids)?;
    let grads = g.backward(root)?;
    let analytic: Vec<Matrix> = ids
        .iter()
        .zip(inputs)
        .map(|(&id, m)| {
            grads
                .get(id)
                .cloned()
                .unwrap_or_else(|| Matrix::zeros(m.rows(), m.cols()))
        })
        .collect();

    let total: usize = inputs.iter().map(Matrix::len).sum();
    if total == 0 {
        return Err(Error::Input("nothing to check".into()));
    }
    let picks: Vec<usize> = if total <= opts.max_coords {
        (0..total).collect()
    } else {
        let mut v = sample(rng, total, opts.max_coords).into_vec();
        v.sort_unstable();
        v
    };

    let largest = analytic
        .iter()
        .flat_map(|m| m.as_slice().iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = opts.abs_floor.max(opts.scale_floor * largest);

    let centre = g.value(root).to_scalar()?;
    let mut work = inputs.to_vec();
    let mut report = GradCheckReport {
        checked: 0,
        max_rel_err: 0.0,
        worst: None,
        tolerance: opts.tolerance,
        kinks: 0,
    };
    for flat in picks {
        let (which, idx) = locate(inputs, flat);
        let orig = work[which].as_slice()[idx];
        work[which].as_mut_slice()[idx] = orig + opts.eps;
        let up = eval(&work)?;
        work[which].as_mut_slice()[idx] = orig - opts.eps;
        let down = eval(&work)?;
        work[which].as_mut_slice()[idx] = orig;
        let numeric = (up - down) / (2.0 * opts.eps);
        let a = analytic[which].as_slice()[idx];
        let err = relative_error(a, numeric, floor);
        report.checked += 1;
        if err >= opts.tolerance {
            let forward = (up - centre) / opts.eps;
            let backward = (centre - down) / opts.eps;
            let straddles = relative_error(forward, backward, floor) > opts.tolerance;
            let matches = relative_error(a, forward, floor).min(relative_error(a, backward, floor)) < KINK_MATCH;
            if straddles && matches {
                report.kinks += 1;
                continue;
            }
        }
        if report.worst.is_none() || err > report.max_rel_err {
            report.max_rel_err = err;
            report.worst = Some((which, idx, a, numeric));
        }
    }
    Ok(report)
}

fn locate(inputs: &[Matrix], mut flat: usize) -> (usize, usize) {
    for (i, m) in inputs.iter().enumerate() {
        if flat < m.len() {
            return (i, flat);
        }
        flat -= m.len();
    }
    unreachable!("flat index beyond total input size")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn clamped_region_has_zero_gradient() {
        // sqrt(clamp(x)) with x far below the floor: analytic gradient is zero,
        // numeric is zero too, so this must pass.
        let x = Matrix::row_vector(vec![-5.0, -3.0]);
        let rep = check_gradients(
            &[x],
            |g, ids| {
                let c = g.clamp_min(ids[0], 1e-3)?;
                let s = g.sqrt(c)?;
                g.sum_all(s)
            },
            &GradCheckOptions::default(),
            &mut substream(0, "t"),
        )
        .unwrap();
        assert!(rep.passed());
        assert_eq!(rep.checked, 2);
    }

    #[test]
    fn flags_a_function_whose_gradient_is_wrong() {
        // Branches on the value so the graph sees a constant where the
        // function actually varies: the analytic gradient misses `3 x^2`.
        let x = Matrix::row_vector(vec![0.7, -1.3]);
        let rep = check_gradients(
            &[x],
            |g, ids| {
                let cube = g.value(ids[0]).map(|v| v * v * v);
                let c = g.constant(cube);
                let s = g.add(ids[0], c)?;
                g.sum_all(s)
            },
            &GradCheckOptions::default(),
            &mut substream(0, "t"),
        )
        .unwrap();
        assert!(!rep.passed());
    }

    #[test]
    fn relative_error_uses_floor() {
        assert_eq!(relative_error(0.0, 0.0, 1e-5), 0.0);
        assert!((relative_error(2.0, 1.0, 1e-5) - 0.5).abs() < 1e-15);
        assert!((relative_error(1e-9, 0.0, 1e-5) - 1e-4).abs() < 1e-15);
    }
}
