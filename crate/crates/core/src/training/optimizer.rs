use crate::error::{Error, Result};
use crate::model::NetworkParams;
use crate::numcore::Matrix;

/// Mini-batch SGD with heavy-ball momentum and per-epoch exponential decay.
///
/// `v <- momentum * v + g`, then `p <- p - lr * v`.
#[derive(Clone, Debug)]
pub struct Sgd {
    pub lr: f64,
    pub momentum: f64,
    pub decay: f64,
    velocity: Vec<Matrix>,
}

impl Sgd {
    pub fn new(params: &NetworkParams, lr: f64, momentum: f64, decay: f64) -> Self {
        Sgd {
            lr,
            momentum,
            decay,
            velocity: params
                .tensors
                .iter()
                .map(|t| Matrix::zeros(t.value.rows(), t.value.cols()))
                .collect(),
        }
    }

    /// Applies one update; `grads` follows the tensor order of `params`.
    pub fn step(&mut self, params: &mut NetworkParams, grads: &[Matrix]) -> Result<()> {
        if grads.len() != params.tensors.len() {
            return Err(Error::dim(
                "sgd",
                format!("{} gradients for {} tensors", grads.len(), params.tensors.len()),
            ));
        }
        for ((t, v), g) in params.tensors.iter_mut().zip(&mut self.velocity).zip(grads) {
            if g.shape() != t.value.shape() {
                return Err(Error::dim(
                    "sgd",
                    format!("gradient {:?} for {} {:?}", g.shape(), t.name, t.value.shape()),
                ));
            }
            v.scale_in_place(self.momentum);
            v.add_scaled(g, 1.0);
            t.value.add_scaled(v, -self.lr);
        }
        Ok(())
    }

    pub fn end_epoch(&mut self) {
        self.lr *= self.decay;
    }
}
