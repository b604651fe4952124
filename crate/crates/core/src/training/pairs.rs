//! Training data and per-utterance pair construction.
//!
//! Every corrupted copy of an utterance is identified by its version number:
//! version 0 is the clean original and version `j >= 1` is corrupted copy
//! `j - 1` as produced by [`augmented_copies`](crate::augment::augmented_copies).
//! Pair construction first draws a [`PairPlan`] (versions, offsets and
//! lengths, all in samples) and only then renders features, so the batch
//! composition can be inspected cheaply and is reproducible under the seed.

use rand::Rng as _;

use crate::augment::{copy_seed, corrupt, AugmentSpec};
use crate::error::{Error, Result};
use crate::features::{extract_normalized, secs_to_samples, FeatureSequence, Waveform};
use crate::losses::Regime;
use crate::model::MIN_FRAMES;
use crate::rng::substream;

use super::plan::{Methodology, SampleSource, TrainPlan};

/// Clean full-length training utterances and how to corrupt them.
#[derive(Clone, Debug)]
pub struct TrainData {
    pub clean: Vec<Waveform>,
    pub augment: AugmentSpec,
    /// Sorted speaker ids; a speaker's label is its index here.
    pub speakers: Vec<String>,
}

impl TrainData {
    pub fn new(clean: Vec<Waveform>, augment: AugmentSpec) -> Result<Self> {
        augment.validate()?;
        if clean.is_empty() {
            return Err(Error::Input("training corpus is empty".into()));
        }
        for w in &clean {
            w.validate()?;
        }
        let mut speakers: Vec<String> = clean.iter().map(|w| w.speaker_id.clone()).collect();
        speakers.sort();
        speakers.dedup();
        Ok(TrainData {
            clean,
            augment,
            speakers,
        })
    }

    pub fn label(&self, speaker: &str) -> Result<usize> {
        self.speakers
            .binary_search_by(|s| s.as_str().cmp(speaker))
            .map_err(|_| Error::Input(format!("unknown speaker {speaker}")))
    }

    /// Number of versions per utterance, clean included.
    pub fn versions(&self) -> usize {
        self.augment.factor + 1
    }

    /// Full-length waveform of `version` of utterance `index`.
    pub fn version(&self, index: usize, version: usize) -> Result<Waveform> {
        let w = &self.clean[index];
        if version == 0 {
            return Ok(w.clone());
        }
        if version > self.augment.factor {
            return Err(Error::Input(format!(
                "version {version} of {} does not exist ({} copies)",
                w.utterance_id, self.augment.factor
            )));
        }
        corrupt(w, &self.augment, copy_seed(&self.augment, &w.utterance_id, version - 1))
    }
}

/// A contiguous piece of one version of an utterance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub version: usize,
    pub offset: usize,
    pub len: usize,
}

/// What `x` is paired with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartnerPlan {
    None,
    Segment(Segment),
    /// The current centroid of the sample's speaker.
    Centroid,
}

/// The drawn composition of one training pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairPlan {
    pub utterance: usize,
    pub label: usize,
    pub x: Segment,
    pub partner: PartnerPlan,
}

/// Rendered features of one training pair.
#[derive(Clone, Debug)]
pub struct TrainingPair {
    pub plan: PairPlan,
    pub x: FeatureSequence,
    /// Features of the partner when it is a segment.
    pub x2: Option<FeatureSequence>,
}

/// Shortest segment the network accepts, in samples.
fn min_samples() -> usize {
    crate::features::WIN_LENGTH + (MIN_FRAMES - 1) * crate::features::HOP_LENGTH
}

/// Draws the pair for utterance `index` in `epoch`; `None` means the utterance is too short.
pub fn plan_pair(data: &TrainData, plan: &TrainPlan, epoch: usize, index: usize) -> Result<Option<PairPlan>> {
    let w = &data.clean[index];
    let n = w.samples.len();
    let mut rng = substream(plan.seed, &format!("train/epoch{epoch}/pair/{}", w.utterance_id));
    // Every draw happens unconditionally so that regimes sharing a sample
    // source also share the exact sequence of samples.
    let pool_version = rng.gen_range(0..data.versions());
    let corrupted_version = if data.augment.factor > 0 {
        1 + rng.gen_range(0..data.augment.factor)
    } else {
        0
    };
    let varied = rng.gen_range(plan.varied_secs.0..=plan.varied_secs.1);
    let x_start: f64 = rng.gen();
    let trunc = rng.gen_range(plan.truncation_secs.0..=plan.truncation_secs.1);
    let trunc_start: f64 = rng.gen();

    let x_len = match plan.methodology {
        Methodology::Long => secs_to_samples(plan.long_secs),
        Methodology::Varied => secs_to_samples(varied).min(n),
    };
    if x_len > n || x_len < min_samples() {
        log::warn!(
            "{} ({:.2} s) is too short for a {:.2} s training segment; skipped",
            w.utterance_id,
            w.duration(),
            x_len as f64 / w.sample_rate as f64
        );
        return Ok(None);
    }
    let offset_in = |len: usize, u: f64| ((n - len + 1) as f64 * u).floor().min((n - len) as f64) as usize;
    let x_offset = offset_in(x_len, x_start);

    if data.augment.factor == 0 && matches!(plan.loss.regime, Regime::Irl) {
        return Err(Error::Config("irl needs corrupted copies; augment factor is 0".into()));
    }
    let version = match plan.effective_source() {
        SampleSource::Pool => pool_version,
        SampleSource::Clean => 0,
        SampleSource::Corrupted if data.augment.factor == 0 => {
            return Err(Error::Config("corrupted samples requested but augment factor is 0".into()))
        }
        SampleSource::Corrupted => corrupted_version,
    };
    let x = Segment {
        version,
        offset: x_offset,
        len: x_len,
    };
    let partner = match plan.loss.regime {
        Regime::Amsm => PartnerPlan::None,
        Regime::Irl => PartnerPlan::Segment(Segment {
            version: corrupted_version,
            ..x
        }),
        Regime::Lvc => {
            let len = secs_to_samples(trunc).min(n).max(min_samples());
            if len > n {
                return Ok(None);
            }
            PartnerPlan::Segment(Segment {
                version,
                offset: offset_in(len, trunc_start),
                len,
            })
        }
        Regime::Ca => PartnerPlan::Centroid,
    };
    Ok(Some(PairPlan {
        utterance: index,
        label: data.label(&w.speaker_id)?,
        x,
        partner,
    }))
}

fn segment_features(full: &Waveform, s: Segment) -> Result<FeatureSequence> {
    let piece = full.with_samples(full.samples[s.offset..s.offset + s.len].to_vec());
    extract_normalized(&piece)
}

/// Renders the features of a drawn pair.
pub fn materialize(data: &TrainData, pair: PairPlan) -> Result<TrainingPair> {
    let full = data.version(pair.utterance, pair.x.version)?;
    let x = segment_features(&full, pair.x)?;
    let x2 = match pair.partner {
        PartnerPlan::Segment(s) if s.version == pair.x.version => Some(segment_features(&full, s)?),
        PartnerPlan::Segment(s) => Some(segment_features(&data.version(pair.utterance, s.version)?, s)?),
        PartnerPlan::None | PartnerPlan::Centroid => None,
    };
    Ok(TrainingPair { plan: pair, x, x2 })
}

/// Utterance visiting order of `epoch`.
pub fn epoch_order(data: &TrainData, plan: &TrainPlan, epoch: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..data.clean.len()).collect();
    order.shuffle(&mut substream(plan.seed, &format!("train/epoch{epoch}/order")));
    order
}

/// Drawn pairs of `epoch`, grouped into batches.
pub fn epoch_batches(data: &TrainData, plan: &TrainPlan, epoch: usize) -> Result<Vec<Vec<PairPlan>>> {
    let mut pairs = Vec::new();
    for i in epoch_order(data, plan, epoch) {
        if let Some(p) = plan_pair(data, plan, epoch, i)? {
            pairs.push(p);
        }
    }
    Ok(pairs.chunks(plan.batch_size).map(|c| c.to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{synth_speaker_corpus, CorpusSpec};
    use crate::losses::LossConfig;

    fn data(dur: (f64, f64)) -> TrainData {
        let clean = synth_speaker_corpus(&CorpusSpec {
            n_speakers: 3,
            utts_per_speaker: 2,
            dur_range: dur,
            seed: 2,
        })
        .unwrap();
        TrainData::new(
            clean,
            AugmentSpec {
                factor: 3,
                rir_count: 4,
                ..AugmentSpec::default()
            },
        )
        .unwrap()
    }

    fn plan(regime: Regime) -> TrainPlan {
        TrainPlan {
            loss: LossConfig::for_regime(regime),
            long_secs: 1.0,
            truncation_secs: (0.5, 8.5),
            init_checkpoint: Some("unused".into()),
            ..TrainPlan::default()
        }
    }

    #[test]
    fn irl_pair_is_same_segment_clean_and_corrupted() {
        let d = data((1.5, 2.0));
        let p = plan_pair(&d, &plan(Regime::Irl), 1, 0).unwrap().unwrap();
        assert_eq!(p.x.version, 0);
        let PartnerPlan::Segment(s) = p.partner else { panic!("expected a segment") };
        assert!(s.version >= 1);
        assert_eq!((s.offset, s.len), (p.x.offset, p.x.len));
        let t = materialize(&d, p).unwrap();
        assert_eq!(t.x.num_frames(), t.x2.as_ref().unwrap().num_frames());
        assert_ne!(t.x.frames, t.x2.unwrap().frames);
    }

    #[test]
    fn lvc_truncation_is_capped_and_reproducible() {
        let d = data((1.5, 2.0));
        let pl = plan(Regime::Lvc);
        for i in 0..d.clean.len() {
            let a = plan_pair(&d, &pl, 3, i).unwrap().unwrap();
            assert_eq!(a, plan_pair(&d, &pl, 3, i).unwrap().unwrap());
            let PartnerPlan::Segment(s) = a.partner else { panic!("expected a segment") };
            assert_eq!(s.version, a.x.version);
            assert!(s.len <= d.clean[i].samples.len());
            assert!(s.offset + s.len <= d.clean[i].samples.len());
        }
    }

    #[test]
    fn short_utterances_are_skipped() {
        let d = data((0.6, 0.8));
        assert_eq!(plan_pair(&d, &plan(Regime::Amsm), 1, 0).unwrap(), None);
    }

    #[test]
    fn amsm_and_pooled_ca_draw_the_same_samples() {
        let d = data((1.5, 2.0));
        let a = plan(Regime::Amsm);
        let mut c = plan(Regime::Ca);
        c.sample_source = Some(SampleSource::Pool);
        for i in 0..d.clean.len() {
            let pa = plan_pair(&d, &a, 2, i).unwrap().unwrap();
            let pc = plan_pair(&d, &c, 2, i).unwrap().unwrap();
            assert_eq!(pa.x, pc.x);
            assert_eq!(pc.partner, PartnerPlan::Centroid);
        }
    }

    #[test]
    fn batches_cover_each_utterance_once() {
        let d = data((1.5, 2.0));
        let mut p = plan(Regime::Amsm);
        p.batch_size = 4;
        let b = epoch_batches(&d, &p, 1).unwrap();
        assert_eq!(b.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 2]);
        let mut seen: Vec<usize> = b.iter().flatten().map(|p| p.utterance).collect();
        seen.sort();
        assert_eq!(seen, (0..6).collect::<Vec<_>>());
        assert_eq!(b, epoch_batches(&d, &p, 1).unwrap());
        assert_ne!(b, epoch_batches(&d, &p, 2).unwrap());
    }
}
