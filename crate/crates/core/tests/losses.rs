//! Loss properties: closed forms, exact additivity of the combined loss,
//! the constant centroid, and monotonicity in the cosine term.

mod common;

use std::collections::HashSet;

use proptest::prelude::*;
use rand::Rng;

use xvec::losses::{
    am_softmax, combined_loss, cos_loss, l2_loss, AlignTarget, LossConfig, LossTerms, Pass, Regime,
};
use xvec::model::{Embedding, COSINE_EPS};
use xvec::numcore::{Graph, Matrix, NodeId};

fn random_vec(r: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
}

fn random_matrix(r: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(rows, cols, random_vec(r, rows * cols)).unwrap()
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// Cross-entropy of `scale * (cos - margin * onehot)`, computed directly.
///
/// The classifier input is normalized with the same softening term as the
/// network (an all-zero ReLU output must stay finite).
fn am_oracle(x: &[f64], w: &Matrix, label: usize, margin: f64, scale: f64) -> f64 {
    let n = (x.iter().map(|v| v * v).sum::<f64>() + COSINE_EPS).sqrt();
    let ux: Vec<f64> = x.iter().map(|v| v / n).collect();
    let logits: Vec<f64> = (0..w.rows())
        .map(|j| {
            let c: f64 = ux.iter().zip(unit(w.row(j))).map(|(a, b)| a * b).sum();
            scale * (c - if j == label { margin } else { 0.0 })
        })
        .collect();
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    lse - logits[label]
}

#[test]
fn am_softmax_matches_the_direct_formula() {
    let mut r = common::rng(1);
    for _ in 0..20 {
        let e = r.gen_range(2..12);
        let n = r.gen_range(2..9);
        let x = random_vec(&mut r, e);
        let w = random_matrix(&mut r, n, e);
        let y = r.gen_range(0..n);
        for (m, s) in [(0.0, 1.0), (0.0, 30.0), (0.2, 30.0), (0.35, 10.0)] {
            let got = am_softmax(&Embedding::new(x.clone()), &w, y, m, s).unwrap();
            assert!((got - am_oracle(&x, &w, y, m, s)).abs() < 1e-12);
        }
    }
}

#[test]
fn aligned_embedding_closed_form() {
    for n in [2usize, 5, 20] {
        let w = Matrix::identity(n);
        let mut x = vec![0.0; n];
        x[1] = 3.0;
        let got = am_softmax(&Embedding::new(x), &w, 1, 0.2, 30.0).unwrap();
        let expect = -(24f64.exp() / (24f64.exp() + (n - 1) as f64)).ln();
        assert!((got - expect).abs() < 1e-12);
    }
}

#[test]
fn cosine_and_l2_cases() {
    let a = Embedding::new(vec![1.0, 2.0, -2.0]);
    let neg = Embedding::new(vec![-1.0, -2.0, 2.0]);
    let orth = Embedding::new(vec![2.0, -1.0, 0.0]);
    assert!((cos_loss(&a, &a).unwrap() - 1.0).abs() < 1e-15);
    assert!((cos_loss(&a, &neg).unwrap() + 1.0).abs() < 1e-15);
    assert!(cos_loss(&a, &orth).unwrap().abs() < 1e-15);
    assert!(cos_loss(&a, &Embedding::new(vec![0.0; 3])).is_err());
    assert_eq!(l2_loss(&a, &a).unwrap(), 0.0);
    let shifted = Embedding::new(a.values.iter().map(|v| v + 1.0).collect());
    assert!((l2_loss(&shifted, &a).unwrap() - 1.0).abs() < 1e-15);
}

struct Setup {
    g: Graph,
    weights: NodeId,
    x: Pass,
    x2: Pass,
    w: Matrix,
    xv: (Vec<f64>, Vec<f64>),
    x2v: (Vec<f64>, Vec<f64>),
}

/// Two passes whose classifier input and embedding are free parameters.
fn setup(seed: u64, e: usize, n: usize) -> Setup {
    let mut r = common::rng(seed);
    let w = random_matrix(&mut r, n, e);
    let xv = (random_vec(&mut r, e), random_vec(&mut r, e));
    let x2v = (random_vec(&mut r, e), random_vec(&mut r, e));
    let mut g = Graph::new();
    let weights = g.param(w.clone());
    let pass = |g: &mut Graph, v: &(Vec<f64>, Vec<f64>)| Pass {
        classifier_input: g.param(Matrix::row_vector(v.0.clone())),
        embedding: g.param(Matrix::row_vector(v.1.clone())),
    };
    let x = pass(&mut g, &xv);
    let x2 = pass(&mut g, &x2v);
    Setup { g, weights, x, x2, w, xv, x2v }
}

#[test]
fn combined_loss_is_exactly_its_weighted_terms() {
    for (seed, regime) in [(1, Regime::Irl), (2, Regime::Lvc), (3, Regime::Ca), (4, Regime::Amsm)] {
        let mut s = setup(seed, 7, 4);
        let cfg = LossConfig::for_regime(regime);
        let centroid = unit(&s.x2v.1);
        let target = match regime {
            Regime::Amsm => AlignTarget::None,
            Regime::Ca => AlignTarget::Centroid(Matrix::row_vector(centroid.clone())),
            _ => AlignTarget::Pass(s.x2),
        };
        let terms = combined_loss(&mut s.g, s.x, target, s.weights, 2, &cfg).unwrap();
        let v = terms.values(&s.g);
        assert!((v.recombine(&cfg) - v.total).abs() < 1e-12);

        // Independent recomputation of each term.
        let phi = Embedding::new(s.xv.1.clone());
        let partner = match regime {
            Regime::Ca => Embedding::new(centroid),
            _ => Embedding::new(s.x2v.1.clone()),
        };
        let am_x = am_oracle(&s.xv.0, &s.w, 2, cfg.margin, cfg.scale);
        let am_x2 = am_oracle(&s.x2v.0, &s.w, 2, cfg.margin, cfg.scale);
        let (cos, l2) = if regime == Regime::Amsm {
            (0.0, 0.0)
        } else {
            (cos_loss(&phi, &partner).unwrap(), l2_loss(&phi, &partner).unwrap())
        };
        let expect = am_x + cfg.alpha * am_x2 - cfg.gamma * cos + cfg.lambda * l2;
        assert!((v.total - expect).abs() < 1e-12, "{regime}: {} vs {expect}", v.total);
        assert!((v.am_x - am_x).abs() < 1e-12);
        if cfg.alpha != 0.0 {
            assert!((v.am_x2 - am_x2).abs() < 1e-12);
        }
    }
}

#[test]
fn identical_pair_algebra() {
    let mut s = setup(5, 6, 3);
    let cfg = LossConfig::for_regime(Regime::Irl);
    // The partner pass reuses x's nodes.
    let terms = combined_loss(&mut s.g, s.x, AlignTarget::Pass(s.x), s.weights, 0, &cfg).unwrap();
    let v = terms.values(&s.g);
    assert!((v.total - (2.0 * v.am_x - cfg.gamma)).abs() < 1e-12);
    assert_eq!(v.l2, 0.0);
}

#[test]
fn degenerate_weights_reduce_to_am_softmax() {
    let mut s = setup(6, 5, 4);
    let cfg = LossConfig {
        gamma: 0.0,
        lambda: 0.0,
        ..LossConfig::for_regime(Regime::Ca)
    };
    let c = Matrix::row_vector(unit(&s.x2v.1));
    let terms = combined_loss(&mut s.g, s.x, AlignTarget::Centroid(c), s.weights, 1, &cfg).unwrap();
    let expect = am_oracle(&s.xv.0, &s.w, 1, cfg.margin, cfg.scale);
    assert!((s.g.value(terms.total).as_slice()[0] - expect).abs() < 1e-12);
}

/// Every node the root depends on, by walking parents.
fn ancestors(g: &Graph, root: NodeId) -> Vec<NodeId> {
    let mut seen = HashSet::new();
    let mut stack = vec![root];
    let mut out = Vec::new();
    while let Some(id) = stack.pop() {
        if seen.insert(id.index()) {
            out.push(id);
            stack.extend(g.parents(id));
        }
    }
    out
}

#[test]
fn centroid_never_receives_a_gradient() {
    let mut s = setup(7, 6, 3);
    let centroid = Matrix::row_vector(unit(&s.x2v.1));
    let cfg = LossConfig::for_regime(Regime::Ca);
    let terms: LossTerms<NodeId> =
        combined_loss(&mut s.g, s.x, AlignTarget::Centroid(centroid.clone()), s.weights, 0, &cfg).unwrap();
    let grads = s.g.backward(terms.total).unwrap();
    let holders: Vec<NodeId> = ancestors(&s.g, terms.total)
        .into_iter()
        .filter(|&id| s.g.value(id) == &centroid)
        .collect();
    assert!(!holders.is_empty(), "the centroid is part of the loss");
    for id in holders {
        assert!(!s.g.requires_grad(id));
        assert!(grads.get(id).is_none());
    }
    // The embedding does receive the alignment gradient.
    assert!(grads.get(s.x.embedding).unwrap().max_abs() > 0.0);
}

#[test]
fn regime_target_mismatch_is_a_config_error() {
    let mut s = setup(8, 4, 3);
    let err = combined_loss(&mut s.g, s.x, AlignTarget::None, s.weights, 0, &LossConfig::for_regime(Regime::Lvc));
    assert!(matches!(err, Err(xvec::Error::Config(_))));
    let bad = LossConfig {
        alpha: 0.5,
        ..LossConfig::for_regime(Regime::Irl)
    };
    assert!(matches!(bad.validate(), Err(xvec::Error::Config(_))));
}

#[test]
fn paper_default_weights() {
    let ca = LossConfig::for_regime(Regime::Ca);
    assert_eq!((ca.alpha, ca.gamma, ca.lambda), (0.0, 0.5, 0.01));
    for r in [Regime::Irl, Regime::Lvc] {
        let c = LossConfig::for_regime(r);
        assert_eq!((c.alpha, c.gamma, c.lambda), (1.0, 0.5, 0.5));
    }
    assert_eq!((ca.margin, ca.scale), (0.2, 30.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loss_is_invariant_to_positive_rescaling(scale in 0.01f64..100.0, seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let x = random_vec(&mut r, 6);
        let w = random_matrix(&mut r, 4, 6);
        let a = am_softmax(&Embedding::new(x.clone()), &w, 3, 0.2, 30.0).unwrap();
        let b = am_softmax(&Embedding::new(x.iter().map(|v| v * scale).collect()), &w, 3, 0.2, 30.0).unwrap();
        prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
    }

    /// Rotating a unit-norm partner away from `phi(x)` lowers the cosine and
    /// raises the mean-square distance while the AM-softmax term stays put,
    /// so the loss can only grow.
    #[test]
    fn lower_cosine_never_lowers_the_loss(t1 in 0.0f64..3.0, dt in 0.0f64..0.1, seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let w = random_matrix(&mut r, 3, 2);
        let x_in = random_vec(&mut r, 2);
        let loss = |angle: f64| {
            let mut g = Graph::new();
            let weights = g.param(w.clone());
            let x = Pass {
                classifier_input: g.param(Matrix::row_vector(x_in.clone())),
                embedding: g.param(Matrix::row_vector(vec![1.0, 0.0])),
            };
            let c = Matrix::row_vector(vec![angle.cos(), angle.sin()]);
            let cfg = LossConfig::for_regime(Regime::Ca);
            let t = combined_loss(&mut g, x, AlignTarget::Centroid(c), weights, 0, &cfg).unwrap();
            g.value(t.total).as_slice()[0]
        };
        prop_assert!(loss(t1 + dt) >= loss(t1) - 1e-12);
    }
}
