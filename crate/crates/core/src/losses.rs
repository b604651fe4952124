//! Additive-margin softmax and the combined alignment loss.
//!
//! The combined loss for a sample `x` and its alignment partner `x'` is
//!
//! ```text
//! L = L_AM(x) + alpha * L_AM(x') - gamma * cos(phi(x), phi(x')) + lambda * mse(phi(x), phi(x'))
//! ```
//!
//! where `phi` is the embedding. The cosine term enters with a negative sign
//! so that similarity is maximized. In centroid alignment `x'` is a fixed
//! speaker centroid: it is inserted as a graph constant and `alpha` is zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{cosine_logits, Embedding};
use crate::numcore::{Graph, Matrix, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Plain AM-softmax.
    Amsm,
    /// Clean/corrupted pairs of the same segment.
    Irl,
    /// Full-length/truncated pairs of the same utterance.
    Lvc,
    /// Alignment to per-speaker centroids.
    Ca,
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "amsm" => Ok(Regime::Amsm),
            "irl" => Ok(Regime::Irl),
            "lvc" => Ok(Regime::Lvc),
            "ca" => Ok(Regime::Ca),
            other => Err(Error::Config(format!("unknown regime {other:?}"))),
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Amsm => "amsm",
            Regime::Irl => "irl",
            Regime::Lvc => "lvc",
            Regime::Ca => "ca",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    pub regime: Regime,
    pub alpha: f64,
    pub gamma: f64,
    pub lambda: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_margin() -> f64 {
    0.2
}

fn default_scale() -> f64 {
    30.0
}

impl LossConfig {
    /// Weights found to work best for each regime.
    pub fn for_regime(regime: Regime) -> Self {
        let (alpha, gamma, lambda) = match regime {
            Regime::Amsm => (0.0, 0.0, 0.0),
            Regime::Irl | Regime::Lvc => (1.0, 0.5, 0.5),
            Regime::Ca => (0.0, 0.5, 0.01),
        };
        LossConfig {
            regime,
            alpha,
            gamma,
            lambda,
            margin: default_margin(),
            scale: default_scale(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match self.regime {
            Regime::Irl | Regime::Lvc if self.alpha != 1.0 => {
                return bad(format!("{} requires alpha = 1, got {}", self.regime, self.alpha))
            }
            Regime::Ca if self.alpha != 0.0 => {
                return bad(format!("ca requires alpha = 0, got {}", self.alpha))
            }
            Regime::Amsm if self.alpha != 0.0 || self.gamma != 0.0 || self.lambda != 0.0 => {
                return bad("amsm has no alignment partner; alpha, gamma and lambda must be 0".into())
            }
            _ => {}
        }
        if !(self.gamma >= 0.0 && self.lambda >= 0.0) {
            return bad(format!(
                "gamma and lambda must be non-negative, got {} and {}",
                self.gamma, self.lambda
            ));
        }
        if !(self.scale > 0.0 && self.margin.is_finite()) {
            return bad(format!(
                "invalid AM-softmax margin {} / scale {}",
                self.margin, self.scale
            ));
        }
        Ok(())
    }
}

/// AM-softmax loss of `1 x E` (or `B x E`) inputs against `N x E` class rows.
pub fn am_softmax_node(
    g: &mut Graph,
    input: NodeId,
    class_weights: NodeId,
    labels: &[usize],
    margin: f64,
    scale: f64,
) -> Result<NodeId> {
    let cos = cosine_logits(g, input, class_weights)?;
    let (rows, n) = g.value(cos).shape();
    if labels.len() != rows {
        return Err(Error::dim(
            "am_softmax",
            format!("{} labels for {rows} inputs", labels.len()),
        ));
    }
    let mut m = Matrix::zeros(rows, n);
    for (r, &y) in labels.iter().enumerate() {
        if y >= n {
            return Err(Error::Input(format!("label {y} out of range for {n} classes")));
        }
        m.set(r, y, margin);
    }
    let m = g.constant(m);
    let shifted = g.sub(cos, m)?;
    let logits = g.scale(shifted, scale)?;
    g.cross_entropy(logits, labels)
}

/// Cosine similarity of two `1 x E` nodes.
pub fn cos_loss_node(g: &mut Graph, a: NodeId, b: NodeId) -> Result<NodeId> {
    let na = g.normalize_rows(a)?;
    let nb = g.normalize_rows(b)?;
    let p = g.mul(na, nb)?;
    g.sum_all(p)
}

/// Mean over coordinates of the squared difference.
pub fn l2_loss_node(g: &mut Graph, a: NodeId, b: NodeId) -> Result<NodeId> {
    let d = g.sub(a, b)?;
    let sq = g.mul(d, d)?;
    g.mean_all(sq)
}

/// One network pass as seen by the loss.
#[derive(Clone, Copy, Debug)]
pub struct Pass {
    /// Input to the cosine classifier.
    pub classifier_input: NodeId,
    /// The embedding `phi`.
    pub embedding: NodeId,
}

/// What `x` is aligned against.
#[derive(Clone, Debug)]
pub enum AlignTarget {
    None,
    Pass(Pass),
    /// Fixed `1 x E` centroid; never receives a gradient.
    Centroid(Matrix),
}

/// The four loss terms and their weighted sum.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossTerms<T> {
    pub am_x: T,
    pub am_x2: T,
    pub cos: T,
    pub l2: T,
    pub total: T,
}

impl LossTerms<NodeId> {
    pub fn values(&self, g: &Graph) -> LossTerms<f64> {
        let v = |id: NodeId| g.value(id).as_slice()[0];
        LossTerms {
            am_x: v(self.am_x),
            am_x2: v(self.am_x2),
            cos: v(self.cos),
            l2: v(self.l2),
            total: v(self.total),
        }
    }
}

impl LossTerms<f64> {
    /// Weighted sum of the four terms under `cfg`.
    pub fn recombine(&self, cfg: &LossConfig) -> f64 {
        self.am_x + cfg.alpha * self.am_x2 - cfg.gamma * self.cos + cfg.lambda * self.l2
    }
}

/// Builds the combined loss for one labelled sample.
pub fn combined_loss(
    g: &mut Graph,
    x: Pass,
    target: AlignTarget,
    class_weights: NodeId,
    label: usize,
    cfg: &LossConfig,
) -> Result<LossTerms<NodeId>> {
    cfg.validate()?;
    let partner = match (cfg.regime, target) {
        (Regime::Amsm, AlignTarget::None) => None,
        (Regime::Irl | Regime::Lvc, AlignTarget::Pass(p)) => Some((p.embedding, Some(p))),
        (Regime::Ca, AlignTarget::Centroid(c)) => Some((g.constant(c), None)),
        (regime, t) => {
            let kind = match t {
                AlignTarget::None => "no partner",
                AlignTarget::Pass(_) => "a paired pass",
                AlignTarget::Centroid(_) => "a centroid",
            };
            return Err(Error::Config(format!("regime {regime} cannot use {kind}")));
        }
    };
    let am_x = am_softmax_node(g, x.classifier_input, class_weights, &[label], cfg.margin, cfg.scale)?;
    let zero = g.constant(Matrix::scalar(0.0));
    let (am_x2, cos, l2) = match partner {
        None => (zero, zero, zero),
        Some((phi2, pass)) => {
            let am_x2 = match pass {
                Some(p) if cfg.alpha != 0.0 => am_softmax_node(
                    g,
                    p.classifier_input,
                    class_weights,
                    &[label],
                    cfg.margin,
                    cfg.scale,
                )?,
                _ => zero,
            };
            let cos = cos_loss_node(g, x.embedding, phi2)?;
            let l2 = l2_loss_node(g, x.embedding, phi2)?;
            (am_x2, cos, l2)
        }
    };
    let mut total = am_x;
    if cfg.alpha != 0.0 {
        let t = g.scale(am_x2, cfg.alpha)?;
        total = g.add(total, t)?;
    }
    if cfg.gamma != 0.0 {
        let t = g.scale(cos, cfg.gamma)?;
        total = g.sub(total, t)?;
    }
    if cfg.lambda != 0.0 {
        let t = g.scale(l2, cfg.lambda)?;
        total = g.add(total, t)?;
    }
    Ok(LossTerms {
        am_x,
        am_x2,
        cos,
        l2,
        total,
    })
}

/// AM-softmax loss of a plain embedding against plain class rows.
pub fn am_softmax(
    input: &Embedding,
    class_weights: &Matrix,
    label: usize,
    margin: f64,
    scale: f64,
) -> Result<f64> {
    let mut g = Graph::new();
    let x = g.constant(Matrix::row_vector(input.values.clone()));
    let w = g.constant(class_weights.clone());
    let l = am_softmax_node(&mut g, x, w, &[label], margin, scale)?;
    g.value(l).to_scalar()
}

pub fn cos_loss(a: &Embedding, b: &Embedding) -> Result<f64> {
    crate::model::cosine(&a.values, &b.values)
}

pub fn l2_loss(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dim() != b.dim() || a.dim() == 0 {
        return Err(Error::dim("l2_loss", format!("{} vs {}", a.dim(), b.dim())));
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.dim() as f64)
}
