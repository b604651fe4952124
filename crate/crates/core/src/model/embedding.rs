use crate::error::{Error, Result};
use crate::numcore::ZERO_NORM;

/// A speaker embedding, optionally length-normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    pub values: Vec<f64>,
    pub normalized: bool,
}

impl Embedding {
    pub fn new(values: Vec<f64>) -> Self {
        Embedding {
            values,
            normalized: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Unit-length copy; zero vectors trip the numeric guard.
    pub fn normalized(&self) -> Result<Embedding> {
        let n = self.norm();
        if n < ZERO_NORM {
            return Err(Error::NumericGuard(
                "cannot length-normalize a zero embedding".into(),
            ));
        }
        Ok(Embedding {
            values: self.values.iter().map(|v| v / n).collect(),
            normalized: true,
        })
    }
}

/// Cosine similarity; fails on zero vectors or mismatched dimensions.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dim(
            "cosine",
            format!("{} vs {} dimensions", a.len(), b.len()),
        ));
    }
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na < ZERO_NORM || nb < ZERO_NORM {
        return Err(Error::NumericGuard("cosine of a zero vector".into()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}
