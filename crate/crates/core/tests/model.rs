//! Network and pooling properties checked against independent oracles.

mod common;

use proptest::prelude::*;
use rand::Rng;

use xvec::features::{FeatureSequence, N_MELS};
use xvec::model::{
    attentive_pool, decode_checkpoint, encode_checkpoint, stats_pool, ModelSpec, NetworkParams, PoolingMode,
    Topology, MIN_FRAMES, VAR_FLOOR,
};
use xvec::numcore::Matrix;

fn random(r: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| r.gen_range(-scale..scale)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Attentive pooling written out loop by loop.
fn pool_oracle(h: &Matrix, w: &Matrix, b: &Matrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (t, hidden) = h.shape();
    let k = w.cols();
    let width = hidden / k;
    let mut mu = vec![0.0; hidden];
    let mut sigma = vec![0.0; hidden];
    let mut alphas = Vec::new();
    for head in 0..k {
        let e: Vec<f64> = (0..t)
            .map(|s| {
                let z: f64 = (0..hidden).map(|d| w.get(d, head) * h.get(s, d)).sum::<f64>() + b.get(0, head);
                1.0 / (1.0 + (-z).exp())
            })
            .collect();
        let m = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = e.iter().map(|v| (v - m).exp()).sum();
        let alpha: Vec<f64> = e.iter().map(|v| (v - m).exp() / z).collect();
        for d in head * width..(head + 1) * width {
            let mean: f64 = (0..t).map(|s| alpha[s] * h.get(s, d)).sum();
            let var: f64 = (0..t).map(|s| alpha[s] * (h.get(s, d) - mean).powi(2)).sum();
            mu[d] = mean;
            sigma[d] = var.max(VAR_FLOOR).sqrt();
        }
        alphas.push(alpha);
    }
    mu.extend(sigma);
    (mu, alphas)
}

fn small_spec(pooling: PoolingMode) -> ModelSpec {
    ModelSpec {
        topology: Topology {
            frame_dims: [6, 5, 4, 6],
            hidden_dim: 8,
            embed_dim: 3,
        },
        pooling,
        heads: 4,
        n_speakers: 3,
    }
}

fn features(r: &mut impl Rng, t: usize) -> FeatureSequence {
    FeatureSequence::new(random(r, t, N_MELS, 2.0), "x").unwrap()
}

#[test]
fn forced_uniform_attention_is_statistics_pooling() {
    let mut r = common::rng(1);
    for k in [1usize, 4, 100] {
        let h = random(&mut r, 17, 1500, 3.0);
        let w = Matrix::zeros(1500, k);
        let b = random(&mut r, 1, k, 2.0);
        let (att, alpha) = attentive_pool(&h, &w, &b).unwrap();
        let stats = stats_pool(&h).unwrap();
        assert_eq!(att.len(), 3000);
        assert_eq!(stats.len(), 3000);
        for (a, s) in att.iter().zip(&stats) {
            assert!((a - s).abs() < 1e-9);
        }
        assert!(alpha.as_slice().iter().all(|&v| (v - 1.0 / 17.0).abs() < 1e-15));
    }
}

#[test]
fn pooled_vector_matches_the_loop_oracle() {
    let mut r = common::rng(2);
    for (t, hidden, k) in [(5, 6, 1), (9, 12, 3), (20, 20, 4), (3, 10, 10)] {
        let h = random(&mut r, t, hidden, 1.5);
        let w = random(&mut r, hidden, k, 0.8);
        let b = random(&mut r, 1, k, 0.5);
        let (pooled, alpha) = attentive_pool(&h, &w, &b).unwrap();
        let (oracle, oracle_alpha) = pool_oracle(&h, &w, &b);
        for (a, o) in pooled.iter().zip(&oracle) {
            assert!((a - o).abs() < 1e-10, "{a} vs {o}");
        }
        for (head, col) in oracle_alpha.iter().enumerate() {
            for (s, v) in col.iter().enumerate() {
                assert!((alpha.get(s, head) - v).abs() < 1e-14);
            }
        }
    }
}

/// Means occupy the first half of the output and deviations the second:
/// shifting every frame by `c` moves only the first half, scaling by a
/// positive `a` scales both halves.
#[test]
fn output_layout_is_means_then_deviations() {
    let mut r = common::rng(3);
    let (t, hidden, k) = (11, 12, 4);
    let h = random(&mut r, t, hidden, 1.0);
    // Zero weights keep the attention independent of the shift.
    let w = Matrix::zeros(hidden, k);
    let b = random(&mut r, 1, k, 1.0);
    let (base, _) = attentive_pool(&h, &w, &b).unwrap();
    let (shifted, _) = attentive_pool(&h.map(|v| v + 4.0), &w, &b).unwrap();
    for d in 0..hidden {
        assert!((shifted[d] - base[d] - 4.0).abs() < 1e-12);
        assert!((shifted[hidden + d] - base[hidden + d]).abs() < 1e-9);
    }
    // Content-dependent attention: each half equals the oracle's mean/deviation half.
    let w = random(&mut r, hidden, k, 1.0);
    let (pooled, _) = attentive_pool(&h, &w, &b).unwrap();
    let (oracle, _) = pool_oracle(&h, &w, &b);
    assert!(pooled[..hidden].iter().zip(&oracle[..hidden]).all(|(a, o)| (a - o).abs() < 1e-10));
    assert!(pooled[hidden..].iter().zip(&oracle[hidden..]).all(|(a, o)| (a - o).abs() < 1e-10));
}

#[test]
fn constant_input_gives_floored_deviation() {
    let h = Matrix::filled(6, 4, 0.25);
    let (pooled, _) = attentive_pool(&h, &Matrix::zeros(4, 2), &Matrix::zeros(1, 2)).unwrap();
    for v in &pooled[4..] {
        assert!((v - VAR_FLOOR.sqrt()).abs() < 1e-15);
    }
}

#[test]
fn heads_must_divide_the_hidden_width() {
    let h = Matrix::zeros(4, 10);
    assert!(attentive_pool(&h, &Matrix::zeros(10, 3), &Matrix::zeros(1, 3)).is_err());
    let mut spec = small_spec(PoolingMode::Attentive);
    spec.heads = 3;
    assert!(spec.validate().is_err());
}

#[test]
fn embeddings_have_the_configured_width_and_are_deterministic() {
    let mut r = common::rng(4);
    for pooling in [PoolingMode::Stats, PoolingMode::Attentive] {
        let p = NetworkParams::init(small_spec(pooling), 9).unwrap();
        let f = features(&mut r, 40);
        let a = p.forward(&f).unwrap();
        assert_eq!(a.embedding.dim(), 3);
        assert_eq!(a.pre_softmax.len(), 3);
        assert!(a.pre_softmax.iter().all(|c| c.abs() <= 1.0 + 1e-12), "cosine logits");
        assert_eq!(a.attention.is_some(), pooling == PoolingMode::Attentive);
        assert_eq!(p.forward(&f).unwrap().embedding, a.embedding);
        assert_eq!(NetworkParams::init(small_spec(pooling), 9).unwrap(), p);
    }
    let p = NetworkParams::init(small_spec(PoolingMode::Attentive), 9).unwrap();
    assert!(p.embed(&features(&mut r, MIN_FRAMES - 1)).is_err());
    assert!(p.embed(&features(&mut r, MIN_FRAMES)).is_ok());
}

#[test]
fn checkpoints_round_trip_byte_for_byte() {
    for pooling in [PoolingMode::Stats, PoolingMode::Attentive] {
        let p = NetworkParams::init(small_spec(pooling), 5).unwrap();
        let bytes = encode_checkpoint(&p);
        let back = decode_checkpoint(&bytes, "mem").unwrap();
        assert_eq!(back, p);
        assert_eq!(encode_checkpoint(&back), bytes);
        assert!(decode_checkpoint(&bytes[..bytes.len() - 1], "mem").is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn attention_columns_sum_to_one(t in 1usize..40, width in 1usize..5, k in 1usize..6, seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let h = random(&mut r, t, width * k, 3.0);
        let (_, alpha) = attentive_pool(&h, &random(&mut r, width * k, k, 2.0), &random(&mut r, 1, k, 2.0)).unwrap();
        for head in 0..k {
            let s: f64 = (0..t).map(|s| alpha.get(s, head)).sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn pooling_ignores_frame_order(t in 2usize..30, width in 1usize..5, k in 1usize..5, seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let h = random(&mut r, t, width * k, 2.0);
        let w = random(&mut r, width * k, k, 1.0);
        let b = random(&mut r, 1, k, 1.0);
        let mut order: Vec<usize> = (0..t).collect();
        for i in (1..t).rev() {
            order.swap(i, r.gen_range(0..=i));
        }
        let hp = h.permute_rows(&order);
        let (a, _) = attentive_pool(&h, &w, &b).unwrap();
        let (ap, _) = attentive_pool(&hp, &w, &b).unwrap();
        let s = stats_pool(&h).unwrap();
        let sp = stats_pool(&hp).unwrap();
        for (x, y) in a.iter().zip(&ap).chain(s.iter().zip(&sp)) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }
}
