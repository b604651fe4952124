use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::features::{extract_normalized, Waveform};
use crate::model::{Embedding, NetworkParams};
use crate::numcore::ZERO_NORM;

/// Unit-length speaker centroids and the epoch whose parameters produced them.
///
/// Epoch 0 means the initial parameters, before any update.
#[derive(Clone, Debug, PartialEq)]
pub struct CentroidTable {
    pub epoch: usize,
    pub centroids: BTreeMap<String, Vec<f64>>,
}

impl CentroidTable {
    pub fn get(&self, speaker: &str) -> Result<&[f64]> {
        self.centroids
            .get(speaker)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Contract(format!("no centroid for speaker {speaker}")))
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }
}

/// Averages length-normalized embeddings per speaker and normalizes the mean.
pub fn centroids_from_embeddings(
    groups: &BTreeMap<String, Vec<Embedding>>,
    speakers: &[String],
    epoch: usize,
) -> Result<CentroidTable> {
    let mut centroids = BTreeMap::new();
    for spk in speakers {
        let embs = groups.get(spk).filter(|e| !e.is_empty()).ok_or_else(|| {
            Error::Input(format!(
                "speaker {spk} has no clean full-length utterance; its centroid is undefined"
            ))
        })?;
        let dim = embs[0].dim();
        let mut mean = vec![0.0; dim];
        for e in embs {
            if e.dim() != dim {
                return Err(Error::dim("centroid", format!("{} vs {dim}", e.dim())));
            }
            for (m, v) in mean.iter_mut().zip(&e.normalized()?.values) {
                *m += v / embs.len() as f64;
            }
        }
        let norm = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
        // The mean of unit vectors has norm at most 1; a tiny norm means the
        // embeddings cancel and the direction is meaningless.
        if norm < 1e-6_f64.max(ZERO_NORM) {
            return Err(Error::NumericGuard(format!(
                "embeddings of speaker {spk} cancel out (mean norm {norm:e})"
            )));
        }
        centroids.insert(spk.clone(), mean.iter().map(|v| v / norm).collect());
    }
    Ok(CentroidTable { epoch, centroids })
}

/// Centroids of every speaker in `speakers` from clean full-length utterances.
pub fn refresh_centroids(
    params: &NetworkParams,
    clean: &[Waveform],
    speakers: &[String],
    epoch: usize,
) -> Result<CentroidTable> {
    let mut groups: BTreeMap<String, Vec<Embedding>> = BTreeMap::new();
    for w in clean {
        let e = params.embed(&extract_normalized(w)?)?;
        groups.entry(w.speaker_id.clone()).or_default().push(e);
    }
    centroids_from_embeddings(&groups, speakers, epoch)
}
