//! Reverberation and additive-noise corruption.
//!
//! Impulse responses are synthetic: a direct path followed by an
//! exponentially decaying white-noise tail, scaled to unit energy. Noise is
//! mixed at an SNR drawn uniformly from the configured range, measured against
//! the power of the reverberated clean signal.

use rand::Rng as _;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{pink_noise, SpeakerProfile, Waveform, SAMPLE_RATE};
use crate::rng::{derive_seed, substream, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    White,
    Pink,
    BabbleMix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSpec {
    pub snr_db_range: (f64, f64),
    /// Size of the impulse-response pool; 0 disables reverberation.
    pub rir_count: usize,
    /// Amplitude decay time constants, in seconds.
    pub rir_decay_range: (f64, f64),
    /// Tail energy relative to the direct path, per 100 ms of decay constant.
    pub rir_tail_energy: f64,
    pub noise_kind: NoiseKind,
    /// Corrupted copies per clean utterance.
    pub factor: usize,
    pub seed: u64,
}

impl Default for AugmentSpec {
    fn default() -> Self {
        AugmentSpec {
            snr_db_range: (0.0, 18.0),
            rir_count: 100,
            rir_decay_range: (0.02, 0.15),
            rir_tail_energy: 0.25,
            noise_kind: NoiseKind::Pink,
            factor: 10,
            seed: 0,
        }
    }
}

impl AugmentSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.snr_db_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("invalid SNR range [{lo}, {hi}]")));
        }
        let (dlo, dhi) = self.rir_decay_range;
        if !(dlo > 0.0 && dlo <= dhi && dhi.is_finite()) {
            return Err(Error::Config(format!("invalid RIR decay range [{dlo}, {dhi}]")));
        }
        if !(self.rir_tail_energy >= 0.0 && self.rir_tail_energy.is_finite()) {
            return Err(Error::Config("rir_tail_energy must be non-negative".into()));
        }
        Ok(())
    }
}

/// Impulse response `index` of the pool, with unit energy.
pub fn gen_rir(spec: &AugmentSpec, index: usize) -> Vec<f64> {
    let mut rng = substream(spec.seed, &format!("augment/rir/{index}"));
    let (lo, hi) = spec.rir_decay_range;
    let tau = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    rir_with_decay(tau, spec.rir_tail_energy, &mut rng)
}

/// Direct impulse plus a noise tail decaying with time constant `tau`, scaled to unit energy.
///
/// The tail carries `tail_energy * tau / 0.1 s` relative to the direct path,
/// so the response collapses to a single impulse as `tau` goes to zero.
pub fn rir_with_decay(tau: f64, tail_energy: f64, rng: &mut Rng) -> Vec<f64> {
    let sr = SAMPLE_RATE as f64;
    let tail_len = (5.0 * tau * sr).ceil() as usize;
    let mut h = Vec::with_capacity(tail_len + 1);
    h.push(1.0);
    for i in 1..=tail_len {
        let t = i as f64 / sr;
        h.push(rng.gen_range(-1.0..1.0) * (-t / tau).exp());
    }
    let tail: f64 = h[1..].iter().map(|v| v * v).sum();
    if tail > 0.0 {
        let g = (tail_energy * tau / 0.1 / tail).sqrt();
        h[1..].iter_mut().for_each(|v| *v *= g);
    }
    let energy: f64 = h.iter().map(|v| v * v).sum();
    let norm = energy.sqrt();
    h.iter_mut().for_each(|v| *v /= norm);
    h
}

thread_local! {
    static PLANNER: std::cell::RefCell<FftPlanner<f64>> = std::cell::RefCell::new(FftPlanner::new());
}

/// Linear convolution truncated to `x.len()` samples.
pub fn convolve_same(x: &[f64], h: &[f64]) -> Vec<f64> {
    if h.len() <= 32 || x.len() <= 32 {
        return (0..x.len())
            .map(|n| {
                h.iter()
                    .enumerate()
                    .take(n + 1)
                    .map(|(k, &hk)| hk * x[n - k])
                    .sum()
            })
            .collect();
    }
    let size = (x.len() + h.len() - 1).next_power_of_two();
    let (fwd, inv) = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(size), p.plan_fft_inverse(size))
    });
    let pad = |v: &[f64]| {
        let mut b = vec![Complex::new(0.0, 0.0); size];
        for (o, &s) in b.iter_mut().zip(v) {
            o.re = s;
        }
        b
    };
    let mut a = pad(x);
    let mut b = pad(h);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q;
    }
    inv.process(&mut a);
    a[..x.len()].iter().map(|c| c.re / size as f64).collect()
}

pub fn mean_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// SNR in dB of a `(signal, noise)` pair.
pub fn snr_db(signal: &[f64], noise: &[f64]) -> f64 {
    10.0 * (mean_power(signal) / mean_power(noise)).log10()
}

fn make_noise(kind: NoiseKind, n: usize, rng: &mut Rng) -> Result<Vec<f64>> {
    Ok(match kind {
        NoiseKind::White => (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        NoiseKind::Pink => pink_noise(n, rng),
        NoiseKind::BabbleMix => {
            let talkers = rng.gen_range(3..=5);
            let secs = n as f64 / SAMPLE_RATE as f64;
            let mut mix = vec![0.0; n];
            for i in 0..talkers {
                let profile = SpeakerProfile::draw(rng.gen(), 1000 + i);
                let w = profile.render(secs, "babble", rng)?;
                for (m, v) in mix.iter_mut().zip(&w.samples) {
                    *m += v;
                }
            }
            mix
        }
    })
}

/// Details of one corruption, for inspection and testing.
#[derive(Clone, Debug)]
pub struct Corruption {
    pub output: Waveform,
    pub rir_index: Option<usize>,
    pub snr_db: f64,
    /// Reverberated clean component, after the shared output scaling.
    pub signal: Vec<f64>,
    /// Noise component, after the shared output scaling.
    pub noise: Vec<f64>,
}

/// Reverberates `w` and adds noise; labels are preserved.
pub fn corrupt(w: &Waveform, spec: &AugmentSpec, seed: u64) -> Result<Waveform> {
    Ok(corrupt_detailed(w, spec, seed)?.output)
}

pub fn corrupt_detailed(w: &Waveform, spec: &AugmentSpec, seed: u64) -> Result<Corruption> {
    spec.validate()?;
    w.validate()?;
    let mut rng = substream(seed, &format!("augment/corrupt/{}", w.utterance_id));
    let rir_index = (spec.rir_count > 0).then(|| rng.gen_range(0..spec.rir_count));
    let mut signal = match rir_index {
        Some(i) => convolve_same(&w.samples, &gen_rir(spec, i)),
        None => w.samples.clone(),
    };
    let (lo, hi) = spec.snr_db_range;
    let snr = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    let mut noise = make_noise(spec.noise_kind, signal.len(), &mut rng)?;
    let ps = mean_power(&signal);
    let pn = mean_power(&noise);
    if ps <= 0.0 || pn <= 0.0 {
        return Err(Error::NumericGuard(format!(
            "cannot mix noise into {}: zero signal or noise power",
            w.utterance_id
        )));
    }
    let g = (ps / (pn * 10f64.powf(snr / 10.0))).sqrt();
    noise.iter_mut().for_each(|v| *v *= g);
    let mut out: Vec<f64> = signal.iter().zip(&noise).map(|(s, n)| s + n).collect();
    let peak = out.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak > 1.0 {
        let s = 1.0 / peak;
        for v in out.iter_mut().chain(signal.iter_mut()).chain(noise.iter_mut()) {
            *v *= s;
        }
    }
    Ok(Corruption {
        output: w.with_samples(out),
        rir_index,
        snr_db: snr,
        signal,
        noise,
    })
}

/// Seed of corrupted copy `copy` of utterance `utterance_id`.
pub fn copy_seed(spec: &AugmentSpec, utterance_id: &str, copy: usize) -> u64 {
    derive_seed(spec.seed, &format!("augment/copy/{utterance_id}/{copy}"))
}

/// The `spec.factor` corrupted copies of `w`.
pub fn augmented_copies(w: &Waveform, spec: &AugmentSpec) -> Result<Vec<Waveform>> {
    (0..spec.factor)
        .map(|j| corrupt(w, spec, copy_seed(spec, &w.utterance_id, j)))
        .collect()
}
