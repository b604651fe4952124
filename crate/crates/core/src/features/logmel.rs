use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::numcore::Matrix;

use super::wave::{Waveform, SAMPLE_RATE};

pub const N_MELS: usize = 40;
/// 25 ms analysis window.
pub const WIN_LENGTH: usize = 400;
/// 10 ms hop.
pub const HOP_LENGTH: usize = 160;
pub const N_FFT: usize = 512;
pub const LOG_FLOOR: f64 = 1e-10;
pub const FRAME_SHIFT_SECS: f64 = 0.010;
/// 3 s at a 10 ms hop.
pub const NORM_WINDOW: usize = 300;

/// `T x 40` log-mel frames.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSequence {
    pub frames: Matrix,
    pub frame_shift: f64,
    pub source: String,
}

impl FeatureSequence {
    pub fn new(frames: Matrix, source: impl Into<String>) -> Result<Self> {
        if frames.cols() != N_MELS || frames.rows() == 0 {
            return Err(Error::Input(format!(
                "feature matrix must be Tx{N_MELS} with T >= 1, got {}x{}",
                frames.rows(),
                frames.cols()
            )));
        }
        Ok(FeatureSequence {
            frames,
            frame_shift: FRAME_SHIFT_SECS,
            source: source.into(),
        })
    }

    pub fn num_frames(&self) -> usize {
        self.frames.rows()
    }
}

/// Frame count for `n` samples with valid framing.
pub fn num_frames(n: usize) -> usize {
    if n < WIN_LENGTH {
        0
    } else {
        (n - WIN_LENGTH) / HOP_LENGTH + 1
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Center frequencies (Hz) of the 40 triangular filters spanning 0..8000 Hz.
pub fn mel_centers() -> Vec<f64> {
    let edges = mel_edges();
    edges[1..=N_MELS].to_vec()
}

fn mel_edges() -> Vec<f64> {
    let top = hz_to_mel(SAMPLE_RATE as f64 / 2.0);
    (0..N_MELS + 2)
        .map(|i| mel_to_hz(top * i as f64 / (N_MELS + 1) as f64))
        .collect()
}

/// Log-mel front end with a cached FFT plan.
pub struct LogMel {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    /// `(N_FFT/2 + 1) x N_MELS`.
    filters: Matrix,
}

impl Default for LogMel {
    fn default() -> Self {
        Self::new()
    }
}

impl LogMel {
    pub fn new() -> Self {
        let fft = FftPlanner::new().plan_fft_forward(N_FFT);
        let window = (0..WIN_LENGTH)
            .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / WIN_LENGTH as f64).cos())
            .collect();
        let bins = N_FFT / 2 + 1;
        let edges = mel_edges();
        let mut filters = Matrix::zeros(bins, N_MELS);
        for k in 0..bins {
            let f = k as f64 * SAMPLE_RATE as f64 / N_FFT as f64;
            for m in 0..N_MELS {
                let (lo, c, hi) = (edges[m], edges[m + 1], edges[m + 2]);
                let w = if f > lo && f <= c {
                    (f - lo) / (c - lo)
                } else if f > c && f < hi {
                    (hi - f) / (hi - c)
                } else {
                    0.0
                };
                filters.set(k, m, w);
            }
        }
        LogMel {
            fft,
            window,
            filters,
        }
    }

    /// Hann-windowed STFT magnitude, mel filtering and a floored natural log.
    pub fn extract(&self, w: &Waveform) -> Result<FeatureSequence> {
        w.validate()?;
        let t = num_frames(w.samples.len());
        if t == 0 {
            return Err(Error::Input(format!(
                "{} has {} samples, fewer than one {WIN_LENGTH}-sample window",
                w.utterance_id,
                w.samples.len()
            )));
        }
        let bins = N_FFT / 2 + 1;
        let mut mags = Matrix::zeros(t, bins);
        let mut buf = vec![Complex::new(0.0, 0.0); N_FFT];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for i in 0..t {
            let frame = &w.samples[i * HOP_LENGTH..i * HOP_LENGTH + WIN_LENGTH];
            for (b, (&s, &h)) in buf.iter_mut().zip(frame.iter().zip(&self.window)) {
                *b = Complex::new(s * h, 0.0);
            }
            buf[WIN_LENGTH..].fill(Complex::new(0.0, 0.0));
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (m, c) in mags.row_mut(i).iter_mut().zip(&buf[..bins]) {
                *m = c.norm();
            }
        }
        let mut mel = mags.matmul(&self.filters)?;
        mel.as_mut_slice()
            .iter_mut()
            .for_each(|v| *v = v.max(LOG_FLOOR).ln());
        FeatureSequence::new(mel, w.utterance_id.clone())
    }
}

fn shared() -> &'static LogMel {
    static FRONT_END: OnceLock<LogMel> = OnceLock::new();
    FRONT_END.get_or_init(LogMel::new)
}

/// 40-dimensional log-mel features of `w`.
pub fn logmel(w: &Waveform) -> Result<FeatureSequence> {
    shared().extract(w)
}

/// `[start, end)` of the normalization window for frame `t` of `n`.
///
/// The window holds `min(n, 300)` frames, is centered on `t` where possible
/// and slides inward at the sequence edges.
pub fn norm_window(t: usize, n: usize) -> (usize, usize) {
    let width = n.min(NORM_WINDOW);
    let start = t.saturating_sub(NORM_WINDOW / 2).min(n - width);
    (start, start + width)
}

/// Subtracts from each frame the mean of its 3-second window.
pub fn sliding_mean_norm(f: &FeatureSequence) -> FeatureSequence {
    let x = &f.frames;
    let (n, d) = x.shape();
    let mut prefix = vec![0.0; (n + 1) * d];
    for t in 0..n {
        for c in 0..d {
            prefix[(t + 1) * d + c] = prefix[t * d + c] + x.get(t, c);
        }
    }
    let mut out = x.clone();
    for t in 0..n {
        let (s, e) = norm_window(t, n);
        let inv = 1.0 / (e - s) as f64;
        for c in 0..d {
            let mean = (prefix[e * d + c] - prefix[s * d + c]) * inv;
            out.set(t, c, x.get(t, c) - mean);
        }
    }
    FeatureSequence {
        frames: out,
        frame_shift: f.frame_shift,
        source: f.source.clone(),
    }
}

/// Log-mel followed by sliding mean normalization.
pub fn extract_normalized(w: &Waveform) -> Result<FeatureSequence> {
    Ok(sliding_mean_norm(&logmel(w)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, secs: f64) -> Waveform {
        let n = (secs * SAMPLE_RATE as f64) as usize;
        let s = (0..n)
            .map(|i| 0.5 * (2.0 * std::f64::consts::PI * freq * i as f64 / SAMPLE_RATE as f64).sin())
            .collect();
        Waveform::new(s, "s", "tone").unwrap()
    }

    #[test]
    fn one_second_gives_98_frames() {
        assert_eq!(num_frames(16_000), (16_000 - 400) / 160 + 1);
        assert_eq!(logmel(&tone(440.0, 1.0)).unwrap().num_frames(), 98);
    }

    #[test]
    fn silence_sits_on_the_floor() {
        let w = Waveform::new(vec![0.0; 4000], "s", "sil").unwrap();
        let f = logmel(&w).unwrap();
        assert!(f.frames.as_slice().iter().all(|&v| v == LOG_FLOOR.ln()));
    }

    #[test]
    fn short_input_is_rejected() {
        let w = Waveform::new(vec![0.1; 399], "s", "u").unwrap();
        assert!(matches!(logmel(&w), Err(Error::Input(_))));
    }

    #[test]
    fn tone_peaks_in_the_nearest_filter() {
        let f = logmel(&tone(1000.0, 0.5)).unwrap();
        let centers = mel_centers();
        let nearest = (0..N_MELS)
            .min_by(|&a, &b| {
                (centers[a] - 1000.0).abs().total_cmp(&(centers[b] - 1000.0).abs())
            })
            .unwrap();
        for t in 0..f.num_frames() {
            let row = f.frames.row(t);
            let arg = (0..N_MELS).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            assert_eq!(arg, nearest, "frame {t}");
        }
    }

    #[test]
    fn constant_input_normalizes_to_zero() {
        let f = FeatureSequence::new(Matrix::filled(500, N_MELS, 3.25), "c").unwrap();
        let g = sliding_mean_norm(&f);
        assert!(g.frames.max_abs() < 1e-12);
    }

    #[test]
    fn short_sequence_subtracts_global_mean() {
        let x = Matrix::from_vec(250, N_MELS, (0..250 * N_MELS).map(|i| (i as f64 * 0.37).sin()).collect())
            .unwrap();
        let g = sliding_mean_norm(&FeatureSequence::new(x.clone(), "r").unwrap());
        for c in 0..N_MELS {
            let mean: f64 = (0..250).map(|t| x.get(t, c)).sum::<f64>() / 250.0;
            for t in 0..250 {
                assert!((g.frames.get(t, c) - (x.get(t, c) - mean)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn window_bounds() {
        assert_eq!(norm_window(0, 1000), (0, 300));
        assert_eq!(norm_window(500, 1000), (350, 650));
        assert_eq!(norm_window(999, 1000), (700, 1000));
        assert_eq!(norm_window(10, 120), (0, 120));
    }
}
