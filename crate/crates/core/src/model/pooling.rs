//! Statistics pooling and multi-head sub-vector attentive pooling.
//!
//! Attentive pooling splits each `H`-dimensional frame `h_t` into `K`
//! contiguous sub-vectors of width `H/K`. Head `k` scores every frame with a
//! scalar `e_tk = sigmoid(w_k . h_t + b_k)`, normalizes the scores over time
//! with a softmax, and pools its own sub-vector into a weighted mean and a
//! weighted standard deviation. The output is `[mu_1..mu_K, sigma_1..sigma_K]`,
//! so the first `H` coordinates hold means and the last `H` hold deviations.

use crate::error::{Error, Result};
use crate::numcore::{Axis, Graph, Matrix, NodeId};

/// Variances are clamped to this floor before the square root.
pub const VAR_FLOOR: f64 = 1e-10;

/// Graph nodes produced by attentive pooling.
#[derive(Clone, Copy, Debug)]
pub struct AttentivePooled {
    /// `1 x 2H` pooled vector.
    pub output: NodeId,
    /// `T x K` attention weights.
    pub alpha: NodeId,
}

pub fn check_heads(hidden: usize, heads: usize) -> Result<usize> {
    if heads == 0 || hidden % heads != 0 {
        return Err(Error::Config(format!(
            "{heads} attention heads do not divide the {hidden}-dimensional hidden layer"
        )));
    }
    Ok(hidden / heads)
}

/// Mean and standard deviation over time of a `T x H` node.
pub fn stats_pool_node(g: &mut Graph, h: NodeId) -> Result<NodeId> {
    let t = g.value(h).rows();
    if t < 2 {
        return Err(Error::Input(format!(
            "statistics pooling needs at least 2 frames, got {t}"
        )));
    }
    let inv = 1.0 / t as f64;
    let sum = g.sum_rows(h)?;
    let mean = g.scale(sum, inv)?;
    let sq = g.mul(h, h)?;
    let sq_sum = g.sum_rows(sq)?;
    let second = g.scale(sq_sum, inv)?;
    let mean_sq = g.mul(mean, mean)?;
    finish_moments(g, mean, second, mean_sq)
}

fn finish_moments(g: &mut Graph, mean: NodeId, second: NodeId, mean_sq: NodeId) -> Result<NodeId> {
    let var = g.sub(second, mean_sq)?;
    let var = g.clamp_min(var, VAR_FLOOR)?;
    let std = g.sqrt(var)?;
    g.concat_cols(&[mean, std])
}

/// Attentive pooling of a `T x H` node with `H x K` head weights and `1 x K` biases.
pub fn attentive_pool_node(
    g: &mut Graph,
    h: NodeId,
    weight: NodeId,
    bias: NodeId,
) -> Result<AttentivePooled> {
    let (t, hidden) = g.value(h).shape();
    let heads = g.value(weight).cols();
    if g.value(weight).rows() != hidden {
        return Err(Error::dim(
            "attentive_pool",
            format!(
                "head weights have {} rows for a {hidden}-dimensional input",
                g.value(weight).rows()
            ),
        ));
    }
    let width = check_heads(hidden, heads)?;
    if t == 0 {
        return Err(Error::Input("attentive pooling needs at least 1 frame".into()));
    }
    let scores = g.matmul(h, weight)?;
    let scores = g.add_bias(scores, bias)?;
    let e = g.sigmoid(scores)?;
    let alpha = g.softmax(e, Axis::Rows)?;
    let wide = g.repeat_cols(alpha, width)?;
    let weighted = g.mul(wide, h)?;
    let mean = g.sum_rows(weighted)?;
    let weighted_sq = g.mul(weighted, h)?;
    let second = g.sum_rows(weighted_sq)?;
    let mean_sq = g.mul(mean, mean)?;
    let output = finish_moments(g, mean, second, mean_sq)?;
    Ok(AttentivePooled { output, alpha })
}

/// Statistics pooling of a plain matrix.
pub fn stats_pool(h: &Matrix) -> Result<Vec<f64>> {
    let mut g = Graph::new();
    let x = g.constant(h.clone());
    let z = stats_pool_node(&mut g, x)?;
    Ok(g.value(z).as_slice().to_vec())
}

/// Attentive pooling of a plain matrix; returns the pooled vector and the `T x K` weights.
pub fn attentive_pool(h: &Matrix, weight: &Matrix, bias: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let mut g = Graph::new();
    let x = g.constant(h.clone());
    let w = g.constant(weight.clone());
    let b = g.constant(bias.clone());
    let p = attentive_pool_node(&mut g, x, w, b)?;
    Ok((g.value(p.output).as_slice().to_vec(), g.value(p.alpha).clone()))
}
