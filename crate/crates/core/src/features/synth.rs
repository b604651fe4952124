//! Synthetic speakers for desk-scale experiments.
//!
//! A speaker is a fixed set of 4 to 6 formant-like sinusoids at
//! speaker-specific frequencies, amplitude-modulated at a syllabic rate and
//! laid over a low pink-noise floor. Each utterance redraws phases, applies a
//! small per-utterance frequency jitter, picks its own duration and its own
//! noise-floor level. Voicing comes in phrases separated by short pauses in
//! which only the noise floor remains, as in read speech.

use std::f64::consts::PI;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::{substream, Rng};

use super::wave::{Waveform, SAMPLE_RATE};

const MIN_FORMANT_HZ: f64 = 180.0;
const MAX_FORMANT_HZ: f64 = 3800.0;
const FREQ_JITTER: f64 = 0.03;
const PEAK: f64 = 0.9;
/// Phrase and pause length ranges, and the fade at each phrase edge, in seconds.
const PHRASE_SECS: (f64, f64) = (0.8, 2.0);
const PAUSE_SECS: (f64, f64) = (0.15, 0.5);
const FADE_SECS: f64 = 0.02;
/// Background noise level range, relative to the voiced peak before normalization.
const NOISE_FLOOR: (f64, f64) = (0.02, 0.05);

#[derive(Clone, Debug, PartialEq)]
pub struct SpeakerProfile {
    pub speaker_id: String,
    pub formants: Vec<(f64, f64)>,
    pub syllable_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusSpec {
    pub n_speakers: usize,
    pub utts_per_speaker: usize,
    pub dur_range: (f64, f64),
    pub seed: u64,
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_speakers < 2 {
            return Err(Error::Config(format!(
                "need at least 2 speakers, got {}",
                self.n_speakers
            )));
        }
        if self.utts_per_speaker == 0 {
            return Err(Error::Config("utts_per_speaker must be positive".into()));
        }
        let (lo, hi) = self.dur_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Config(format!("invalid duration range [{lo}, {hi}]")));
        }
        Ok(())
    }
}

pub fn speaker_name(index: usize) -> String {
    format!("spk{index:03}")
}

pub fn utterance_name(speaker: usize, index: usize) -> String {
    format!("spk{speaker:03}-utt{index:03}")
}

impl SpeakerProfile {
    pub fn draw(seed: u64, index: usize) -> Self {
        let speaker_id = speaker_name(index);
        let mut rng = substream(seed, &format!("corpus/speaker/{speaker_id}"));
        let n = rng.gen_range(4..=6);
        let (lmin, lmax) = (MIN_FORMANT_HZ.ln(), MAX_FORMANT_HZ.ln());
        let mut formants: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen_range(lmin..lmax).exp(), rng.gen_range(0.3..1.0)))
            .collect();
        formants.sort_by(|a, b| a.0.total_cmp(&b.0));
        SpeakerProfile {
            speaker_id,
            formants,
            syllable_rate: rng.gen_range(3.0..6.0),
        }
    }

    /// One utterance of `secs` seconds.
    pub fn render(&self, secs: f64, utterance_id: &str, rng: &mut Rng) -> Result<Waveform> {
        let n = (secs * SAMPLE_RATE as f64).round() as usize;
        let sr = SAMPLE_RATE as f64;
        let mut out = vec![0.0; n];
        for &(freq, amp) in &self.formants {
            let f = freq * (1.0 + rng.gen_range(-FREQ_JITTER..FREQ_JITTER));
            let phase = rng.gen_range(0.0..2.0 * PI);
            let env_phase = rng.gen_range(0.0..2.0 * PI);
            let rate = self.syllable_rate * rng.gen_range(0.8..1.25);
            for (i, o) in out.iter_mut().enumerate() {
                let t = i as f64 / sr;
                let env = 0.55 + 0.45 * (2.0 * PI * rate * t + env_phase).sin();
                *o += amp * env * (2.0 * PI * f * t + phase).sin();
            }
        }
        let noise = pink_noise(n, rng);
        let gate = phrase_gate(n, rng);
        // The floor belongs to the recording, not the speaker.
        let level = rng.gen_range(NOISE_FLOOR.0..NOISE_FLOOR.1);
        for ((o, v), g) in out.iter_mut().zip(noise).zip(gate) {
            *o = g * *o + level * v;
        }
        peak_normalize(&mut out, PEAK);
        Waveform::new(out, self.speaker_id.clone(), utterance_id)
    }
}

/// Voicing gain per sample: 1 inside phrases, 0 in pauses, with raised-cosine fades.
///
/// The utterance starts at a random point of its first phrase.
pub fn phrase_gate(n: usize, rng: &mut Rng) -> Vec<f64> {
    let sr = SAMPLE_RATE as f64;
    let fade = (FADE_SECS * sr) as usize;
    let mut gate = vec![0.0; n];
    let first = rng.gen_range(PHRASE_SECS.0..PHRASE_SECS.1);
    let mut start = -(rng.gen_range(0.0..first) * sr) as isize;
    let mut len = (first * sr) as isize;
    while start < n as isize {
        for i in start.max(0)..(start + len).min(n as isize) {
            let k = (i - start).min(start + len - 1 - i) as usize;
            gate[i as usize] = if k < fade {
                0.5 - 0.5 * (PI * (k as f64 + 0.5) / fade as f64).cos()
            } else {
                1.0
            };
        }
        start += len + (rng.gen_range(PAUSE_SECS.0..PAUSE_SECS.1) * sr) as isize;
        len = (rng.gen_range(PHRASE_SECS.0..PHRASE_SECS.1) * sr) as isize;
    }
    gate
}

/// Pink (1/f) noise with unit peak, via Paul Kellet's economy filter.
pub fn pink_noise(n: usize, rng: &mut Rng) -> Vec<f64> {
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    let mut out: Vec<f64> = (0..n)
        .map(|_| {
            let white: f64 = rng.gen_range(-1.0..1.0);
            b0 = 0.99765 * b0 + white * 0.0990460;
            b1 = 0.96300 * b1 + white * 0.2965164;
            b2 = 0.57000 * b2 + white * 1.0526913;
            b0 + b1 + b2 + white * 0.1848
        })
        .collect();
    peak_normalize(&mut out, 1.0);
    out
}

/// Scales `x` so its largest magnitude is `peak`; silent input is left alone.
pub fn peak_normalize(x: &mut [f64], peak: f64) {
    let m = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if m > 0.0 {
        let s = peak / m;
        x.iter_mut().for_each(|v| *v *= s);
    }
}

/// Speaker profiles of the corpus described by `spec`.
pub fn speaker_profiles(spec: &CorpusSpec) -> Vec<SpeakerProfile> {
    (0..spec.n_speakers)
        .map(|i| SpeakerProfile::draw(spec.seed, i))
        .collect()
}

/// Deterministic synthetic corpus, speakers outermost.
pub fn synth_speaker_corpus(spec: &CorpusSpec) -> Result<Vec<Waveform>> {
    synth_corpus_from(spec, 0)
}

/// Like [`synth_speaker_corpus`], but with speakers `first..first + n_speakers`.
///
/// Speakers are drawn by index, so disjoint ranges give disjoint speaker sets
/// from the same seed, e.g. a training and a held-out evaluation split.
pub fn synth_corpus_from(spec: &CorpusSpec, first: usize) -> Result<Vec<Waveform>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.n_speakers * spec.utts_per_speaker);
    for s in first..first + spec.n_speakers {
        let profile = SpeakerProfile::draw(spec.seed, s);
        for u in 0..spec.utts_per_speaker {
            let id = utterance_name(s, u);
            let mut rng = substream(spec.seed, &format!("corpus/utt/{id}"));
            let (lo, hi) = spec.dur_range;
            let secs = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
            out.push(profile.render(secs, &id, &mut rng)?);
        }
    }
    Ok(out)
}
