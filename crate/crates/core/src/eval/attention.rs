//! Export of per-frame attention weights.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::features::{FeatureSequence, Waveform, HOP_LENGTH, WIN_LENGTH};
use crate::model::{NetworkParams, PoolingMode, LAYER1_CONTEXT, LAYER23_CONTEXT};
use crate::numcore::Matrix;

/// Input frames consumed on the left by the TDNN context before pooling.
///
/// Row `t` of the attention matrix belongs to input frame `t + CONTEXT_OFFSET`.
pub const CONTEXT_OFFSET: usize =
    (-(LAYER1_CONTEXT[0] + LAYER23_CONTEXT[0] + LAYER23_CONTEXT[0])) as usize;

/// `T' x K` attention weights of an attentive model.
pub fn attention_weights(params: &NetworkParams, features: &FeatureSequence) -> Result<Matrix> {
    if params.spec.pooling != PoolingMode::Attentive {
        return Err(Error::Unsupported(
            "attention weights need an attentive-pooling model; this one uses statistics pooling".into(),
        ));
    }
    params
        .forward(features)?
        .attention
        .ok_or_else(|| Error::Contract("attentive model returned no attention weights".into()))
}

/// Mean weight over heads for each frame.
pub fn head_average(alpha: &Matrix) -> Vec<f64> {
    (0..alpha.rows())
        .map(|t| alpha.row(t).iter().sum::<f64>() / alpha.cols() as f64)
        .collect()
}

/// CSV with one row per frame: `K` head columns then their mean.
pub fn format_attention_csv(alpha: &Matrix) -> String {
    let mut out = String::new();
    let header: Vec<String> = (0..alpha.cols())
        .map(|k| format!("head_{k:03}"))
        .chain(std::iter::once("mean".to_string()))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for (t, mean) in head_average(alpha).into_iter().enumerate() {
        for v in alpha.row(t) {
            write!(out, "{v},").expect("writing to a String");
        }
        writeln!(out, "{mean}").expect("writing to a String");
    }
    out
}

/// `speech | silence | speech`: the two halves of the first `2 * third` samples
/// of `w` with `third` samples of digital silence between them.
pub fn speech_silence_speech(w: &Waveform, third: usize) -> Result<Waveform> {
    if third == 0 || 2 * third > w.samples.len() {
        return Err(Error::Input(format!(
            "{} has {} samples; need {} for two speech thirds",
            w.utterance_id,
            w.samples.len(),
            2 * third
        )));
    }
    let mut samples = Vec::with_capacity(3 * third);
    samples.extend_from_slice(&w.samples[..third]);
    samples.resize(2 * third, 0.0);
    samples.extend_from_slice(&w.samples[third..2 * third]);
    Ok(Waveform {
        samples,
        sample_rate: w.sample_rate,
        speaker_id: w.speaker_id.clone(),
        utterance_id: format!("{}-sss", w.utterance_id),
    })
}

/// Mean of per-row `values` within consecutive sample regions of length `region`.
///
/// Attention row `t` is placed at the centre sample of input frame
/// `t + CONTEXT_OFFSET`. Regions without any row get `NaN`.
pub fn region_means(values: &[f64], region: usize, n_regions: usize) -> Vec<f64> {
    let mut sum = vec![0.0; n_regions];
    let mut count = vec![0usize; n_regions];
    for (t, v) in values.iter().enumerate() {
        let centre = (t + CONTEXT_OFFSET) * HOP_LENGTH + WIN_LENGTH / 2;
        let r = centre / region;
        if r < n_regions {
            sum[r] += v;
            count[r] += 1;
        }
    }
    sum.iter()
        .zip(&count)
        .map(|(s, &c)| if c == 0 { f64::NAN } else { s / c as f64 })
        .collect()
}
