//! Trial scoring, verification metrics, embedding spread and attention export.

mod attention;
mod metrics;
mod spread;
mod trials;

use std::collections::HashMap;

pub use attention::{
    attention_weights, format_attention_csv, head_average, region_means, speech_silence_speech,
    CONTEXT_OFFSET,
};
pub use metrics::{eer, min_dcf, operating_points, DcfParams, MetricsReport, OperatingPoint};
pub use spread::{
    condition_embeddings, condition_waveform, embedding_spread, speaker_spread, spread_table,
    SpreadCondition, SpreadSettings,
};
pub use trials::{ScoredTrials, Trial, TrialList};

use crate::error::{Error, Result};
use crate::model::{cosine, Embedding};

/// Cosine similarity of two embeddings.
pub fn score(a: &Embedding, b: &Embedding) -> Result<f64> {
    cosine(&a.values, &b.values)
}

/// Scores every trial against a table of embeddings keyed by utterance id.
pub fn score_trials(trials: &TrialList, embeddings: &HashMap<String, Embedding>) -> Result<ScoredTrials> {
    let lookup = |id: &str| {
        embeddings
            .get(id)
            .ok_or_else(|| Error::Input(format!("no embedding for utterance {id}")))
    };
    let scores = trials
        .trials
        .iter()
        .map(|t| score(lookup(&t.enroll)?, lookup(&t.test)?))
        .collect::<Result<Vec<_>>>()?;
    ScoredTrials::new(trials.clone(), scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_cases() {
        let a = Embedding::new(vec![1.0, 2.0, -0.5]);
        let b = Embedding::new(vec![0.3, -0.1, 4.0]);
        assert!((score(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(score(&Embedding::new(vec![1.0, 0.0]), &Embedding::new(vec![0.0, 3.0])).unwrap(), 0.0);
        assert!((score(&a, &b).unwrap() - score(&b, &a).unwrap()).abs() < 1e-12);
        assert!(matches!(
            score(&a, &Embedding::new(vec![0.0; 3])),
            Err(Error::NumericGuard(_))
        ));
    }
}
