//! Dense primitives and the tape: per-op gradient checks, algebraic
//! identities against naive oracles, and determinism.

mod common;

use proptest::prelude::*;
use rand::Rng;

use xvec::numcore::gradcheck::{check_gradients, GradCheckOptions};
use xvec::numcore::{Axis, Graph, Matrix, NodeId};
use xvec::rng::substream;
use xvec::Result;

fn random(r: &mut impl Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| r.gen_range(lo..hi)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Random values bounded away from zero, so kinks (relu) and poles (sqrt) are avoided.
fn away_from_zero(r: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| {
            let v: f64 = r.gen_range(0.1..1.5);
            if r.gen_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// `sum(out * R)` with a fixed random `R`, so every output coordinate matters.
fn projected(g: &mut Graph, out: NodeId, seed: u64) -> Result<NodeId> {
    let (rows, cols) = g.value(out).shape();
    let r = random(&mut substream(seed, "projection"), rows, cols, -1.0, 1.0);
    let r = g.constant(r);
    let p = g.mul(out, r)?;
    g.sum_all(p)
}

/// Checks `op` on five random shapes; `inputs` draws the inputs for `(rows, cols)`.
fn check_op(
    name: &str,
    inputs: impl Fn(&mut xvec::rng::Rng, usize, usize) -> Vec<Matrix>,
    op: impl Fn(&mut Graph, &[NodeId]) -> Result<NodeId>,
) {
    let mut r = substream(99, name);
    let opts = GradCheckOptions::default();
    for shape in 0..5 {
        let rows = r.gen_range(2..7);
        let cols = r.gen_range(2..7);
        let xs = inputs(&mut r, rows, cols);
        let report = check_gradients(
            &xs,
            |g, ids| {
                let out = op(g, ids)?;
                projected(g, out, shape)
            },
            &opts,
            &mut r,
        )
        .unwrap();
        assert!(
            report.passed(),
            "{name} shape {rows}x{cols}: rel. err {:.3e} at {:?}",
            report.max_rel_err,
            report.worst
        );
    }
}

#[test]
fn matmul_gradients() {
    check_op(
        "matmul",
        |r, n, k| {
            let m = r.gen_range(1..5);
            vec![random(r, n, k, -1.0, 1.0), random(r, k, m, -1.0, 1.0)]
        },
        |g, x| g.matmul(x[0], x[1]),
    );
}

#[test]
fn matmul_nt_gradients() {
    check_op(
        "matmul_nt",
        |r, n, k| {
            let m = r.gen_range(1..5);
            vec![random(r, n, k, -1.0, 1.0), random(r, m, k, -1.0, 1.0)]
        },
        |g, x| g.matmul_nt(x[0], x[1]),
    );
}

#[test]
fn elementwise_binary_gradients() {
    let two = |r: &mut xvec::rng::Rng, n, m| vec![random(r, n, m, -1.0, 1.0), random(r, n, m, -1.0, 1.0)];
    check_op("add", two, |g, x| g.add(x[0], x[1]));
    check_op("sub", two, |g, x| g.sub(x[0], x[1]));
    check_op("mul", two, |g, x| g.mul(x[0], x[1]));
    check_op(
        "add_bias",
        |r, n, m| vec![random(r, n, m, -1.0, 1.0), random(r, 1, m, -1.0, 1.0)],
        |g, x| g.add_bias(x[0], x[1]),
    );
}

#[test]
fn elementwise_unary_gradients() {
    let one = |r: &mut xvec::rng::Rng, n, m| vec![random(r, n, m, -2.0, 2.0)];
    check_op("scale", one, |g, x| g.scale(x[0], -1.7));
    check_op("sigmoid", one, |g, x| g.sigmoid(x[0]));
    check_op("relu", |r, n, m| vec![away_from_zero(r, n, m)], |g, x| g.relu(x[0]));
    check_op("sqrt", |r, n, m| vec![random(r, n, m, 0.2, 2.0)], |g, x| g.sqrt(x[0]));
    check_op(
        "clamp_min",
        |r, n, m| vec![away_from_zero(r, n, m)],
        |g, x| g.clamp_min(x[0], 0.0),
    );
}

#[test]
fn softmax_gradients() {
    let one = |r: &mut xvec::rng::Rng, n, m| vec![random(r, n, m, -2.0, 2.0)];
    check_op("softmax rows", one, |g, x| g.softmax(x[0], Axis::Rows));
    check_op("softmax cols", one, |g, x| g.softmax(x[0], Axis::Cols));
}

#[test]
fn reduction_and_layout_gradients() {
    let one = |r: &mut xvec::rng::Rng, n, m| vec![random(r, n, m, -1.0, 1.0)];
    check_op("sum_rows", one, |g, x| g.sum_rows(x[0]));
    check_op("sum_all", one, |g, x| g.sum_all(x[0]));
    check_op("mean_all", one, |g, x| g.mean_all(x[0]));
    check_op("repeat_cols", one, |g, x| g.repeat_cols(x[0], 3));
    check_op(
        "concat_cols",
        |r, n, m| vec![random(r, n, m, -1.0, 1.0), random(r, n, 2, -1.0, 1.0)],
        |g, x| g.concat_cols(&[x[0], x[1]]),
    );
    check_op(
        "splice",
        |r, n, m| vec![random(r, n + 4, m, -1.0, 1.0)],
        |g, x| g.splice(x[0], &[-2, 0, 2]),
    );
}

#[test]
fn normalization_and_loss_gradients() {
    let one = |r: &mut xvec::rng::Rng, n, m| vec![random(r, n, m, -1.0, 1.0)];
    check_op("normalize_rows", one, |g, x| g.normalize_rows(x[0]));
    check_op("normalize_rows_eps", one, |g, x| g.normalize_rows_eps(x[0], 1e-3));
    check_op("cross_entropy", one, |g, x| {
        let rows = g.value(x[0]).rows();
        let cols = g.value(x[0]).cols();
        let labels: Vec<usize> = (0..rows).map(|i| (i * 7 + 1) % cols).collect();
        g.cross_entropy(x[0], &labels)
    });
}

/// Backpropagation is linear in the loss: grad(a f + b h) = a grad f + b grad h.
#[test]
fn gradients_are_linear_in_the_loss() {
    let mut r = substream(5, "linearity");
    let x = random(&mut r, 4, 3, -1.0, 1.0);
    let w = random(&mut r, 3, 5, -1.0, 1.0);
    let grad_of = |a: f64, b: f64| {
        let mut g = Graph::new();
        let xi = g.param(x.clone());
        let wi = g.param(w.clone());
        let y = g.matmul(xi, wi).unwrap();
        let s = g.sigmoid(y).unwrap();
        let f = g.sum_all(s).unwrap();
        let sq = g.mul(y, y).unwrap();
        let h = g.mean_all(sq).unwrap();
        let fa = g.scale(f, a).unwrap();
        let hb = g.scale(h, b).unwrap();
        let root = g.add(fa, hb).unwrap();
        let grads = g.backward(root).unwrap();
        (grads.get(xi).unwrap().clone(), grads.get(wi).unwrap().clone())
    };
    let (fx, fw) = grad_of(1.0, 0.0);
    let (hx, hw) = grad_of(0.0, 1.0);
    let (cx, cw) = grad_of(2.5, -0.75);
    for (c, (f, h)) in [(&cx, (&fx, &hx)), (&cw, (&fw, &hw))] {
        for i in 0..c.len() {
            let expect = 2.5 * f.as_slice()[i] - 0.75 * h.as_slice()[i];
            assert!((c.as_slice()[i] - expect).abs() < 1e-12);
        }
    }
}

/// A node used twice receives the sum of both gradient contributions.
#[test]
fn fan_out_accumulates() {
    let mut g = Graph::new();
    let x = g.param(Matrix::from_rows(&[vec![1.0, -2.0]]).unwrap());
    let y = g.mul(x, x).unwrap();
    let root = g.sum_all(y).unwrap();
    let grads = g.backward(root).unwrap();
    assert_eq!(grads.get(x).unwrap().as_slice(), &[2.0, -4.0]);
}

#[test]
fn identical_graphs_give_identical_bits() {
    let build = || {
        let mut r = substream(8, "determinism");
        let mut g = Graph::new();
        let a = g.param(random(&mut r, 30, 40, -1.0, 1.0));
        let b = g.param(random(&mut r, 40, 20, -1.0, 1.0));
        let y = g.matmul(a, b).unwrap();
        let s = g.softmax(y, Axis::Rows).unwrap();
        let root = g.sum_all(s).unwrap();
        let root = g.scale(root, 3.0).unwrap();
        let v = g.value(root).as_slice()[0];
        let grads = g.backward(root).unwrap();
        (v.to_bits(), grads.get(a).unwrap().clone(), grads.get(b).unwrap().clone())
    };
    assert_eq!(build(), build());
}

#[test]
fn hand_computed_products() {
    let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    assert_eq!(Matrix::identity(2).matmul(&m).unwrap(), m);
    let ones = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
    assert_eq!(m.matmul(&ones).unwrap().as_slice(), &[3.0, 7.0]);
    assert!(m.matmul(&Matrix::zeros(3, 1)).is_err());
}

#[test]
fn non_finite_inputs_are_rejected() {
    let mut g = Graph::new();
    let x = g.param(Matrix::from_rows(&[vec![f64::NAN, 1.0]]).unwrap());
    assert!(matches!(g.sigmoid(x), Err(xvec::Error::NonFinite(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matmul_matches_triple_loop(n in 1usize..9, k in 1usize..9, m in 1usize..9, seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let a = random(&mut r, n, k, -3.0, 3.0);
        let b = random(&mut r, k, m, -3.0, 3.0);
        let fast = a.matmul(&b).unwrap();
        let slow = common::naive_matmul(a.as_slice(), b.as_slice(), n, k, m);
        for (x, y) in fast.as_slice().iter().zip(&slow) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn transpose_is_an_involution(n in 1usize..9, m in 1usize..9, seed in any::<u64>()) {
        let a = random(&mut common::rng(seed), n, m, -1.0, 1.0);
        prop_assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn softmax_columns_sum_to_one(n in 1usize..12, m in 1usize..6, seed in any::<u64>()) {
        let mut g = Graph::new();
        let x = g.constant(random(&mut common::rng(seed), n, m, -30.0, 30.0));
        let s = g.softmax(x, Axis::Rows).unwrap();
        let v = g.value(s);
        for c in 0..m {
            let total: f64 = (0..n).map(|t| v.get(t, c)).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
