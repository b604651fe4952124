//! Within-speaker spread of length-normalized embeddings.
//!
//! For one speaker, the spread is the standard deviation of each embedding
//! coordinate across that speaker's utterances (after length normalization),
//! averaged over coordinates. A condition's spread is the mean over speakers.
//! Lower spread means tighter speaker clusters.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::augment::{corrupt, AugmentSpec};
use crate::error::{Error, Result};
use crate::features::{extract_normalized, truncate, OffsetPolicy, Waveform};
use crate::model::{Embedding, NetworkParams};
use crate::rng::derive_seed;

/// Recording conditions compared by the spread analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpreadCondition {
    Clean,
    Noisy,
    Short,
    NoisyShort,
}

impl SpreadCondition {
    pub const ALL: [SpreadCondition; 4] = [
        SpreadCondition::Clean,
        SpreadCondition::Noisy,
        SpreadCondition::Short,
        SpreadCondition::NoisyShort,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpreadCondition::Clean => "clean",
            SpreadCondition::Noisy => "noisy",
            SpreadCondition::Short => "short",
            SpreadCondition::NoisyShort => "noisy&short",
        }
    }
}

/// How each condition is derived from a clean utterance.
#[derive(Clone, Debug, PartialEq)]
pub struct SpreadSettings {
    /// Length of the short condition, in seconds.
    pub short_secs: f64,
    pub augment: AugmentSpec,
    pub seed: u64,
}

impl Default for SpreadSettings {
    fn default() -> Self {
        SpreadSettings {
            short_secs: 2.0,
            augment: AugmentSpec::default(),
            seed: 0,
        }
    }
}

/// Population standard deviation per coordinate of normalized embeddings, averaged over coordinates.
pub fn speaker_spread(embeddings: &[Embedding]) -> Result<f64> {
    let n = embeddings.len();
    if n < 2 {
        return Err(Error::Input(format!("spread needs at least 2 embeddings, got {n}")));
    }
    let dim = embeddings[0].dim();
    if embeddings.iter().any(|e| e.dim() != dim) || dim == 0 {
        return Err(Error::dim("speaker_spread", "embeddings differ in dimension"));
    }
    let unit = embeddings
        .iter()
        .map(|e| e.normalized())
        .collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    for d in 0..dim {
        let mean = unit.iter().map(|e| e.values[d]).sum::<f64>() / n as f64;
        let var = unit.iter().map(|e| (e.values[d] - mean).powi(2)).sum::<f64>() / n as f64;
        total += var.sqrt();
    }
    Ok(total / dim as f64)
}

/// Mean spread over speakers with at least two embeddings; `None` if there are none.
pub fn embedding_spread(groups: &BTreeMap<String, Vec<Embedding>>) -> Result<Option<f64>> {
    let mut values = Vec::new();
    for (speaker, embs) in groups {
        if embs.len() < 2 {
            log::warn!("speaker {speaker} has {} embedding(s); skipped in spread", embs.len());
            continue;
        }
        values.push(speaker_spread(embs)?);
    }
    Ok((!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64))
}

/// The version of `w` used for `condition`.
pub fn condition_waveform(
    w: &Waveform,
    condition: SpreadCondition,
    settings: &SpreadSettings,
) -> Result<Waveform> {
    let noisy = || {
        corrupt(
            w,
            &settings.augment,
            derive_seed(settings.seed, &format!("spread/noisy/{}", w.utterance_id)),
        )
    };
    let short = |x: &Waveform| {
        truncate(
            x,
            settings.short_secs,
            OffsetPolicy::Random(derive_seed(settings.seed, "spread/short")),
        )
    };
    match condition {
        SpreadCondition::Clean => Ok(w.clone()),
        SpreadCondition::Noisy => noisy(),
        SpreadCondition::Short => short(w),
        SpreadCondition::NoisyShort => short(&noisy()?),
    }
}

/// Embeddings of every utterance under `condition`, grouped by speaker.
///
/// Utterances too short for the condition are skipped with a warning.
pub fn condition_embeddings(
    params: &NetworkParams,
    clean: &[Waveform],
    condition: SpreadCondition,
    settings: &SpreadSettings,
) -> Result<BTreeMap<String, Vec<Embedding>>> {
    let mut groups: BTreeMap<String, Vec<Embedding>> = BTreeMap::new();
    for w in clean {
        let x = match condition_waveform(w, condition, settings) {
            Ok(x) => x,
            Err(Error::Input(msg)) => {
                log::warn!("{} skipped for {}: {msg}", w.utterance_id, condition.name());
                continue;
            }
            Err(e) => return Err(e),
        };
        let e = params.embed(&extract_normalized(&x)?)?;
        groups.entry(w.speaker_id.clone()).or_default().push(e);
    }
    Ok(groups)
}

/// Spread of each condition, in [`SpreadCondition::ALL`] order.
pub fn spread_table(
    params: &NetworkParams,
    clean: &[Waveform],
    settings: &SpreadSettings,
) -> Result<Vec<(SpreadCondition, Option<f64>)>> {
    SpreadCondition::ALL
        .iter()
        .map(|&c| {
            let groups = condition_embeddings(params, clean, c, settings)?;
            Ok((c, embedding_spread(&groups)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_have_zero_spread() {
        let e = Embedding::new(vec![0.3, -1.0, 2.0]);
        assert_eq!(speaker_spread(&[e.clone(), e.clone(), e]).unwrap(), 0.0);
    }

    #[test]
    fn scale_does_not_matter() {
        let a = Embedding::new(vec![1.0, 0.0]);
        let b = Embedding::new(vec![0.0, 5.0]);
        // Unit vectors (1,0) and (0,1): each coordinate has std 0.5.
        assert!((speaker_spread(&[a, b]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lonely_speakers_are_skipped() {
        let mut g = BTreeMap::new();
        g.insert("a".to_string(), vec![Embedding::new(vec![1.0, 0.0])]);
        assert_eq!(embedding_spread(&g).unwrap(), None);
        g.insert(
            "b".to_string(),
            vec![Embedding::new(vec![1.0, 0.0]), Embedding::new(vec![0.0, 1.0])],
        );
        assert_eq!(embedding_spread(&g).unwrap(), Some(0.5));
    }
}
