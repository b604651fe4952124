use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureSequence, N_MELS};
use crate::numcore::{Graph, Matrix, NodeId};
use crate::rng::substream;

use super::embedding::Embedding;
use super::pooling::{attentive_pool_node, check_heads, stats_pool_node};

/// Dense context of layer 1.
pub const LAYER1_CONTEXT: [isize; 5] = [-2, -1, 0, 1, 2];
/// Gapped context of layers 2 and 3.
pub const LAYER23_CONTEXT: [isize; 3] = [-2, 0, 2];
/// Minimum input frames for a forward pass.
pub const MIN_FRAMES: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolingMode {
    Stats,
    Attentive,
}

/// Layer widths. The default is the full-size network.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Topology {
    /// Output widths of layers 1 to 4.
    pub frame_dims: [usize; 4],
    /// Output width of layer 5, the pooling input.
    pub hidden_dim: usize,
    /// Output width of layer 7, the embedding.
    pub embed_dim: usize,
}

impl Default for Topology {
    fn default() -> Self {
        Topology {
            frame_dims: [512; 4],
            hidden_dim: 1500,
            embed_dim: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub topology: Topology,
    pub pooling: PoolingMode,
    pub heads: usize,
    pub n_speakers: usize,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            topology: Topology::default(),
            pooling: PoolingMode::Attentive,
            heads: 100,
            n_speakers: 2,
        }
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        let t = &self.topology;
        if t.frame_dims.iter().any(|&d| d == 0) || t.hidden_dim == 0 || t.embed_dim == 0 {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if self.n_speakers < 2 {
            return Err(Error::Config("the classifier needs at least 2 speakers".into()));
        }
        if self.pooling == PoolingMode::Attentive {
            check_heads(t.hidden_dim, self.heads)?;
        }
        Ok(())
    }

    /// `(name, rows, cols)` of every tensor, in storage order.
    pub fn layout(&self) -> Vec<(String, usize, usize)> {
        let t = &self.topology;
        let [d1, d2, d3, d4] = t.frame_dims;
        let h = t.hidden_dim;
        let mut v = vec![
            ("tdnn1.weight".to_string(), N_MELS * LAYER1_CONTEXT.len(), d1),
            ("tdnn1.bias".to_string(), 1, d1),
            ("tdnn2.weight".to_string(), d1 * LAYER23_CONTEXT.len(), d2),
            ("tdnn2.bias".to_string(), 1, d2),
            ("tdnn3.weight".to_string(), d2 * LAYER23_CONTEXT.len(), d3),
            ("tdnn3.bias".to_string(), 1, d3),
            ("dense4.weight".to_string(), d3, d4),
            ("dense4.bias".to_string(), 1, d4),
            ("dense5.weight".to_string(), d4, h),
            ("dense5.bias".to_string(), 1, h),
        ];
        if self.pooling == PoolingMode::Attentive {
            v.push(("attention.weight".to_string(), h, self.heads));
            v.push(("attention.bias".to_string(), 1, self.heads));
        }
        v.push(("embedding.weight".to_string(), 2 * h, t.embed_dim));
        v.push(("embedding.bias".to_string(), 1, t.embed_dim));
        v.push(("classifier.weight".to_string(), self.n_speakers, t.embed_dim));
        v
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub value: Matrix,
}

/// All trainable tensors of the network, in [`ModelSpec::layout`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    pub spec: ModelSpec,
    pub tensors: Vec<Tensor>,
}

/// Graph handles of a registered parameter set.
#[derive(Clone, Debug)]
pub struct ParamNodes {
    pub ids: Vec<NodeId>,
    attentive: bool,
}

impl ParamNodes {
    fn layer(&self, i: usize) -> (NodeId, NodeId) {
        (self.ids[2 * i], self.ids[2 * i + 1])
    }

    pub fn attention(&self) -> Option<(NodeId, NodeId)> {
        self.attentive.then(|| (self.ids[10], self.ids[11]))
    }

    pub fn embedding(&self) -> (NodeId, NodeId) {
        let n = self.ids.len();
        (self.ids[n - 3], self.ids[n - 2])
    }

    pub fn classifier(&self) -> NodeId {
        *self.ids.last().expect("non-empty parameter list")
    }
}

/// Graph handles of one forward pass.
#[derive(Clone, Copy, Debug)]
pub struct ForwardNodes {
    /// Layer-5 output, `T' x H`.
    pub hidden: NodeId,
    /// Pooled statistics, `1 x 2H`.
    pub pooled: NodeId,
    /// Layer-7 affine output before its ReLU, `1 x E`.
    pub embedding: NodeId,
    /// `T' x K` attention weights for attentive models.
    pub alpha: Option<NodeId>,
}

/// Plain-value result of [`NetworkParams::forward`].
#[derive(Clone, Debug)]
pub struct ForwardOutput {
    /// Cosine between the layer-7 activation and each class weight row.
    pub pre_softmax: Vec<f64>,
    pub embedding: Embedding,
    pub attention: Option<Matrix>,
}

/// One TDNN layer: context splicing, affine map and ReLU.
pub fn tdnn_layer(
    g: &mut Graph,
    input: NodeId,
    context: &[isize],
    weight: NodeId,
    bias: NodeId,
) -> Result<NodeId> {
    let spliced = if context == [0] {
        input
    } else {
        g.splice(input, context)?
    };
    let a = g.matmul(spliced, weight)?;
    let a = g.add_bias(a, bias)?;
    g.relu(a)
}

/// Cosine logits of a `1 x E` activation against `N x E` class rows.
pub fn cosine_logits(g: &mut Graph, activation: NodeId, class_weights: NodeId) -> Result<NodeId> {
    let x = g.normalize_rows_eps(activation, COSINE_EPS)?;
    let w = g.normalize_rows(class_weights)?;
    g.matmul_nt(x, w)
}

/// Softening term for normalizing the classifier input, which may be all zero after its ReLU.
pub const COSINE_EPS: f64 = 1e-12;

impl NetworkParams {
    /// Seeded uniform He initialization with zero biases.
    pub fn init(spec: ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let tensors = spec
            .layout()
            .into_iter()
            .map(|(name, rows, cols)| {
                let value = if name.ends_with(".bias") {
                    Matrix::zeros(rows, cols)
                } else {
                    let fan_in = if name == "classifier.weight" { cols } else { rows };
                    let bound = (6.0 / fan_in as f64).sqrt();
                    let mut rng = substream(seed, &format!("model/init/{name}"));
                    let data = (0..rows * cols).map(|_| rng.gen_range(-bound..bound)).collect();
                    Matrix::from_vec(rows, cols, data).expect("layout shape")
                };
                Tensor { name, value }
            })
            .collect();
        Ok(NetworkParams { spec, tensors })
    }

    pub fn tensor(&self, name: &str) -> Option<&Matrix> {
        self.tensors.iter().find(|t| t.name == name).map(|t| &t.value)
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut Matrix> {
        self.tensors.iter_mut().find(|t| t.name == name).map(|t| &mut t.value)
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors.iter().map(|t| t.value.len()).sum()
    }

    /// Checks tensor names and shapes against the spec.
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let layout = self.spec.layout();
        if layout.len() != self.tensors.len() {
            return Err(Error::Contract(format!(
                "expected {} tensors, found {}",
                layout.len(),
                self.tensors.len()
            )));
        }
        for ((name, r, c), t) in layout.iter().zip(&self.tensors) {
            if &t.name != name || t.value.shape() != (*r, *c) {
                return Err(Error::Contract(format!(
                    "tensor {} {:?} does not match expected {name} {r}x{c}",
                    t.name,
                    t.value.shape()
                )));
            }
        }
        Ok(())
    }

    /// Adds every tensor to `g` as a trainable leaf.
    pub fn register(&self, g: &mut Graph) -> ParamNodes {
        self.register_with(g, true)
    }

    /// Adds every tensor to `g` as a constant.
    pub fn register_frozen(&self, g: &mut Graph) -> ParamNodes {
        self.register_with(g, false)
    }

    /// Wraps existing graph nodes, one per tensor in layout order, as this network's parameters.
    pub fn nodes_from_ids(&self, ids: Vec<NodeId>) -> Result<ParamNodes> {
        if ids.len() != self.tensors.len() {
            return Err(Error::dim(
                "nodes_from_ids",
                format!("{} nodes for {} tensors", ids.len(), self.tensors.len()),
            ));
        }
        Ok(ParamNodes {
            ids,
            attentive: self.spec.pooling == PoolingMode::Attentive,
        })
    }

    fn register_with(&self, g: &mut Graph, trainable: bool) -> ParamNodes {
        let ids = self
            .tensors
            .iter()
            .map(|t| {
                if trainable {
                    g.param(t.value.clone())
                } else {
                    g.constant(t.value.clone())
                }
            })
            .collect();
        ParamNodes {
            ids,
            attentive: self.spec.pooling == PoolingMode::Attentive,
        }
    }

    /// Builds layers 1 to 7 on `g` for a `T x 40` feature matrix.
    pub fn build(&self, g: &mut Graph, p: &ParamNodes, frames: &Matrix) -> Result<ForwardNodes> {
        if frames.cols() != N_MELS {
            return Err(Error::Input(format!(
                "expected {N_MELS}-dimensional features, got {}",
                frames.cols()
            )));
        }
        if frames.rows() < MIN_FRAMES {
            return Err(Error::Input(format!(
                "{} frames is shorter than the {MIN_FRAMES}-frame network context",
                frames.rows()
            )));
        }
        let x = g.constant(frames.clone());
        let (w, b) = p.layer(0);
        let l1 = tdnn_layer(g, x, &LAYER1_CONTEXT, w, b)?;
        let (w, b) = p.layer(1);
        let l2 = tdnn_layer(g, l1, &LAYER23_CONTEXT, w, b)?;
        let (w, b) = p.layer(2);
        let l3 = tdnn_layer(g, l2, &LAYER23_CONTEXT, w, b)?;
        let (w, b) = p.layer(3);
        let l4 = tdnn_layer(g, l3, &[0], w, b)?;
        let (w, b) = p.layer(4);
        let hidden = tdnn_layer(g, l4, &[0], w, b)?;
        let (pooled, alpha) = match p.attention() {
            Some((aw, ab)) => {
                let r = attentive_pool_node(g, hidden, aw, ab)?;
                (r.output, Some(r.alpha))
            }
            None => (stats_pool_node(g, hidden)?, None),
        };
        let (ew, eb) = p.embedding();
        let e = g.matmul(pooled, ew)?;
        let embedding = g.add_bias(e, eb)?;
        Ok(ForwardNodes {
            hidden,
            pooled,
            embedding,
            alpha,
        })
    }

    /// Layer 8 input: the layer-7 ReLU activation.
    pub fn classifier_input(g: &mut Graph, f: &ForwardNodes) -> Result<NodeId> {
        g.relu(f.embedding)
    }

    /// Runs the whole network without tracking gradients.
    pub fn forward(&self, features: &FeatureSequence) -> Result<ForwardOutput> {
        let mut g = Graph::new();
        let p = self.register_frozen(&mut g);
        let f = self.build(&mut g, &p, &features.frames)?;
        let act = Self::classifier_input(&mut g, &f)?;
        let logits = cosine_logits(&mut g, act, p.classifier())?;
        Ok(ForwardOutput {
            pre_softmax: g.value(logits).as_slice().to_vec(),
            embedding: Embedding::new(g.value(f.embedding).as_slice().to_vec()),
            attention: f.alpha.map(|a| g.value(a).clone()),
        })
    }

    /// Layer-7 embedding only.
    pub fn embed(&self, features: &FeatureSequence) -> Result<Embedding> {
        let mut g = Graph::new();
        let p = self.register_frozen(&mut g);
        let f = self.build(&mut g, &p, &features.frames)?;
        Ok(Embedding::new(g.value(f.embedding).as_slice().to_vec()))
    }
}
