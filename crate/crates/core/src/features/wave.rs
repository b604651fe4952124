use std::path::Path;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::substream;

/// The only supported sample rate.
pub const SAMPLE_RATE: u32 = 16_000;

/// Mono audio with speaker and utterance labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub speaker_id: String,
    pub utterance_id: String,
}

/// Where [`truncate`] takes its segment from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OffsetPolicy {
    Start,
    Random(u64),
}

impl Waveform {
    pub fn new(
        samples: Vec<f64>,
        speaker_id: impl Into<String>,
        utterance_id: impl Into<String>,
    ) -> Result<Self> {
        let w = Waveform {
            samples,
            sample_rate: SAMPLE_RATE,
            speaker_id: speaker_id.into(),
            utterance_id: utterance_id.into(),
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::Input(format!("{} is empty", self.utterance_id)));
        }
        if self.sample_rate != SAMPLE_RATE {
            return Err(Error::Input(format!(
                "{} has sample rate {}, expected {SAMPLE_RATE}",
                self.utterance_id, self.sample_rate
            )));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Same labels, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Waveform {
        Waveform {
            samples,
            sample_rate: self.sample_rate,
            speaker_id: self.speaker_id.clone(),
            utterance_id: self.utterance_id.clone(),
        }
    }
}

/// Number of samples closest to `secs` at the fixed sample rate.
pub fn secs_to_samples(secs: f64) -> usize {
    (secs * SAMPLE_RATE as f64).round() as usize
}

/// Contiguous segment of `dur` seconds.
pub fn truncate(w: &Waveform, dur: f64, policy: OffsetPolicy) -> Result<Waveform> {
    let n = secs_to_samples(dur);
    if n == 0 {
        return Err(Error::Input(format!("cannot truncate to {dur} s")));
    }
    if n > w.samples.len() {
        return Err(Error::Input(format!(
            "cannot take {dur} s from {} ({:.3} s long)",
            w.utterance_id,
            w.duration()
        )));
    }
    let slack = w.samples.len() - n;
    let start = match policy {
        OffsetPolicy::Start => 0,
        OffsetPolicy::Random(seed) => {
            substream(seed, &format!("truncate/{}", w.utterance_id)).gen_range(0..=slack)
        }
    };
    Ok(w.with_samples(w.samples[start..start + n].to_vec()))
}

/// Writes 16-bit mono PCM.
pub fn write_wav(path: &Path, w: &Waveform) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for &s in &w.samples {
        let q = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(q)?;
    }
    writer.finalize()?;
    Ok(())
}

/// Reads 16-bit mono PCM at 16 kHz.
pub fn read_wav(
    path: &Path,
    speaker_id: impl Into<String>,
    utterance_id: impl Into<String>,
) -> Result<Waveform> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::format(path, "expected 16-bit mono PCM"));
    }
    if spec.sample_rate != SAMPLE_RATE {
        return Err(Error::format(path, format!("sample rate {} != {SAMPLE_RATE}", spec.sample_rate)));
    }
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Waveform::new(samples, speaker_id, utterance_id)
}
