//! Finite-difference gradient suite over every differentiable building block.
//!
//! Each case draws several random shapes and compares analytic gradients
//! against central differences with [`check_gradients`]. Non-scalar outputs
//! are reduced to a scalar by a fixed random projection `sum(out * R)`, so
//! every output coordinate contributes to the checked gradient.

use rand::Rng as _;

use crate::error::Result;
use crate::features::N_MELS;
use crate::losses::{am_softmax_node, combined_loss, AlignTarget, LossConfig, Pass, Regime};
use crate::model::{
    attentive_pool_node, stats_pool_node, tdnn_layer, ModelSpec, NetworkParams, PoolingMode,
    Topology, LAYER1_CONTEXT, LAYER23_CONTEXT, MIN_FRAMES,
};
use crate::numcore::gradcheck::{check_gradients, GradCheckOptions, GradCheckReport};
use crate::numcore::{Graph, Matrix, NodeId};
use crate::rng::{substream, Rng};

/// Result of one case on one shape.
#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub case: &'static str,
    pub shape: String,
    pub report: GradCheckReport,
}

fn random(rng: &mut Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.gen_range(-scale..scale)).collect();
    Matrix::from_vec(rows, cols, data).expect("shape")
}

/// `sum(out * r)` for a constant `r` shaped like `out`.
fn project(g: &mut Graph, out: NodeId, r: &Matrix) -> Result<NodeId> {
    let r = g.constant(r.clone());
    let p = g.mul(out, r)?;
    g.sum_all(p)
}

/// Number of random shapes per case.
pub const SHAPES_PER_CASE: usize = 5;

/// Runs every case on [`SHAPES_PER_CASE`] shapes drawn from `seed`.
pub fn gradient_suite(seed: u64, opts: &GradCheckOptions) -> Result<Vec<SuiteResult>> {
    let mut out = Vec::new();
    let mut rng = substream(seed, "gradcheck/shapes");
    let mut check_rng = substream(seed, "gradcheck/coords");
    for _ in 0..SHAPES_PER_CASE {
        let t = rng.gen_range(MIN_FRAMES..MIN_FRAMES + 10);
        let d = rng.gen_range(2..7);
        let heads = rng.gen_range(1..4);
        let h = heads * rng.gen_range(1..4);
        let e = rng.gen_range(2..6);
        let n = rng.gen_range(2..6);

        // TDNN layer with the dense layer-1 context.
        let x = random(&mut rng, t, N_MELS, 1.0);
        let w = random(&mut rng, N_MELS * LAYER1_CONTEXT.len(), d, 0.3);
        let b = random(&mut rng, 1, d, 0.3);
        let r = random(&mut rng, t - 4, d, 1.0);
        let report = check_gradients(
            &[x, w, b],
            |g, ids| {
                let y = tdnn_layer(g, ids[0], &LAYER1_CONTEXT, ids[1], ids[2])?;
                project(g, y, &r)
            },
            opts,
            &mut check_rng,
        )?;
        out.push(SuiteResult {
            case: "tdnn layer (context -2..2)",
            shape: format!("T={t} in={N_MELS} out={d}"),
            report,
        });

        // TDNN layer with the gapped context.
        let x = random(&mut rng, t, d, 1.0);
        let w = random(&mut rng, d * LAYER23_CONTEXT.len(), h, 0.5);
        let b = random(&mut rng, 1, h, 0.3);
        let r = random(&mut rng, t - 4, h, 1.0);
        let report = check_gradients(
            &[x, w, b],
            |g, ids| {
                let y = tdnn_layer(g, ids[0], &LAYER23_CONTEXT, ids[1], ids[2])?;
                project(g, y, &r)
            },
            opts,
            &mut check_rng,
        )?;
        out.push(SuiteResult {
            case: "tdnn layer (context -2,0,2)",
            shape: format!("T={t} in={d} out={h}"),
            report,
        });

        // Frame-level dense layer.
        let x = random(&mut rng, t, d, 1.0);
        let w = random(&mut rng, d, h, 0.5);
        let b = random(&mut rng, 1, h, 0.3);
        let r = random(&mut rng, t, h, 1.0);
        let report = check_gradients(
            &[x, w, b],
            |g, ids| {
                let y = tdnn_layer(g, ids[0], &[0], ids[1], ids[2])?;
                project(g, y, &r)
            },
            opts,
            &mut check_rng,
        )?;
        out.push(SuiteResult {
            case: "dense layer",
            shape: format!("T={t} in={d} out={h}"),
            report,
        });

        // Statistics pooling.
        let x = random(&mut rng, t, h, 1.0);
        let r = random(&mut rng, 1, 2 * h, 1.0);
        let report = check_gradients(
            &[x],
            |g, ids| {
                let y = stats_pool_node(g, ids[0])?;
                project(g, y, &r)
            },
            opts,
            &mut check_rng,
        )?;
        out.push(SuiteResult {
            case: "statistics pooling",
            shape: format!("T={t} H={h}"),
            report,
        });

        // Attentive pooling.
        let x = random(&mut rng, t, h, 1.0);
        let w = random(&mut rng, h, heads, 1.0);
        let b = random(&mut rng, 1, heads, 0.5);
        let r = random(&mut rng, 1, 2 * h, 1.0);
        let report = check_gradients(
            &[x, w, b],
            |g, ids| {
                let y = attentive_pool_node(g, ids[0], ids[1], ids[2])?;
                project(g, y.output, &r)
            },
            opts,
            &mut check_rng,
        )?;
        out.push(SuiteResult {
            case: "attentive pooling",
            shape: format!("T={t} H={h} K={heads}"),
            report,
        });

        // AM-softmax.
        let x = random(&mut rng, 1, e, 1.0);
        let w = random(&mut rng, n, e, 1.0);
        let label = rng.gen_range(0..n);
        let report = check_gradients(
            &[x, w],
            |g, ids| am_softmax_node(g, ids[0], ids[1], &[label], 0.2, 30.0),
            opts,
            &mut check_rng,
        )?;
        out.push(SuiteResult {
            case: "am-softmax",
            shape: format!("E={e} N={n}"),
            report,
        });

        // Combined loss with a paired pass.
        let inputs = [
            random(&mut rng, 1, e, 1.0),
            random(&mut rng, 1, e, 1.0),
            random(&mut rng, n, e, 1.0),
        ];
        let cfg = LossConfig::for_regime(Regime::Lvc);
        let report = check_gradients(
            &inputs,
            |g, ids| {
                let x = Pass {
                    classifier_input: ids[0],
                    embedding: ids[0],
                };
                let x2 = Pass {
                    classifier_input: ids[1],
                    embedding: ids[1],
                };
                Ok(combined_loss(g, x, AlignTarget::Pass(x2), ids[2], label, &cfg)?.total)
            },
            opts,
            &mut check_rng,
        )?;
        out.push(SuiteResult {
            case: "combined loss (paired)",
            shape: format!("E={e} N={n}"),
            report,
        });

        // Combined loss against a fixed centroid.
        let centroid = random(&mut rng, 1, e, 1.0);
        let inputs = [random(&mut rng, 1, e, 1.0), random(&mut rng, n, e, 1.0)];
        let cfg = LossConfig::for_regime(Regime::Ca);
        let report = check_gradients(
            &inputs,
            |g, ids| {
                let x = Pass {
                    classifier_input: ids[0],
                    embedding: ids[0],
                };
                Ok(combined_loss(g, x, AlignTarget::Centroid(centroid.clone()), ids[1], label, &cfg)?.total)
            },
            opts,
            &mut check_rng,
        )?;
        out.push(SuiteResult {
            case: "combined loss (centroid)",
            shape: format!("E={e} N={n}"),
            report,
        });

        // The whole network under the paired loss, with respect to all parameters.
        let spec = ModelSpec {
            topology: Topology {
                frame_dims: [d, d, d, d],
                hidden_dim: h,
                embed_dim: e,
            },
            pooling: PoolingMode::Attentive,
            heads,
            n_speakers: n,
        };
        let mut params = NetworkParams::init(spec, rng.gen())?;
        // Biases start at zero, which would put every frame whose previous
        // layer is entirely inactive exactly on a ReLU kink; move them off it.
        for t in params.tensors.iter_mut().filter(|t| t.name.ends_with(".bias")) {
            for v in t.value.as_mut_slice() {
                *v += rng.gen_range(-0.1..0.1);
            }
        }
        let frames = random(&mut rng, t, N_MELS, 1.0);
        let frames2 = random(&mut rng, t + 3, N_MELS, 1.0);
        let values: Vec<Matrix> = params.tensors.iter().map(|t| t.value.clone()).collect();
        let cfg = LossConfig::for_regime(Regime::Irl);
        let report = check_gradients(
            &values,
            |g, ids| {
                let p = &params;
                let nodes = p.nodes_from_ids(ids.to_vec())?;
                let f1 = p.build(g, &nodes, &frames)?;
                let f2 = p.build(g, &nodes, &frames2)?;
                let x = Pass {
                    classifier_input: NetworkParams::classifier_input(g, &f1)?,
                    embedding: f1.embedding,
                };
                let x2 = Pass {
                    classifier_input: NetworkParams::classifier_input(g, &f2)?,
                    embedding: f2.embedding,
                };
                Ok(combined_loss(g, x, AlignTarget::Pass(x2), nodes.classifier(), label, &cfg)?.total)
            },
            opts,
            &mut check_rng,
        )?;
        out.push(SuiteResult {
            case: "network end to end",
            shape: format!("T={t} widths={d} H={h} K={heads} E={e} N={n}"),
            report,
        });
    }
    Ok(out)
}
