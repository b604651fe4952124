//! Experiment configuration file.
//!
//! The file is TOML: top-level `seed` and `out`, then one table per stage.
//! Every field has a default, so an empty file is a valid (full-size)
//! configuration. Component seeds are derived from the global seed and never
//! appear in the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::{AugmentSpec, NoiseKind};
use crate::error::{Error, Result};
use crate::features::CorpusSpec;
use crate::losses::{LossConfig, Regime};
use crate::model::{ModelSpec, PoolingMode, Topology};
use crate::rng::derive_seed;
use crate::training::{Methodology, SampleSource, TrainPlan};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub n_speakers: usize,
    pub utts_per_speaker: usize,
    pub dur_range: (f64, f64),
    /// Held-out speakers used for trials and spread analysis.
    pub eval_speakers: usize,
    pub eval_utts_per_speaker: usize,
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection {
            n_speakers: 20,
            utts_per_speaker: 20,
            dur_range: (8.0, 10.0),
            eval_speakers: 10,
            eval_utts_per_speaker: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSection {
    pub snr_db_range: (f64, f64),
    pub rir_count: usize,
    pub rir_decay_range: (f64, f64),
    pub rir_tail_energy: f64,
    pub noise_kind: NoiseKind,
    pub factor: usize,
}

impl Default for AugmentSection {
    fn default() -> Self {
        let a = AugmentSpec::default();
        AugmentSection {
            snr_db_range: a.snr_db_range,
            rir_count: a.rir_count,
            rir_decay_range: a.rir_decay_range,
            rir_tail_energy: a.rir_tail_energy,
            noise_kind: a.noise_kind,
            factor: a.factor,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub pooling: PoolingMode,
    pub heads: usize,
    pub frame_dims: [usize; 4],
    pub hidden_dim: usize,
    pub embed_dim: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        let s = ModelSpec::default();
        ModelSection {
            pooling: s.pooling,
            heads: s.heads,
            frame_dims: s.topology.frame_dims,
            hidden_dim: s.topology.hidden_dim,
            embed_dim: s.topology.embed_dim,
        }
    }
}

/// Training plan; unset loss weights take the regime's defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub regime: Regime,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub margin: f64,
    pub scale: f64,
    pub methodology: Methodology,
    pub long_secs: f64,
    pub varied_secs: (f64, f64),
    pub truncation_secs: (f64, f64),
    pub init_checkpoint: Option<PathBuf>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    pub lr_decay: f64,
    pub sample_source: Option<SampleSource>,
    pub probe_utts_per_speaker: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let p = TrainPlan::default();
        TrainSection {
            regime: p.loss.regime,
            alpha: None,
            gamma: None,
            lambda: None,
            margin: p.loss.margin,
            scale: p.loss.scale,
            methodology: p.methodology,
            long_secs: p.long_secs,
            varied_secs: p.varied_secs,
            truncation_secs: p.truncation_secs,
            init_checkpoint: None,
            epochs: p.epochs,
            batch_size: p.batch_size,
            lr: p.lr,
            momentum: p.momentum,
            lr_decay: p.lr_decay,
            sample_source: None,
            probe_utts_per_speaker: p.probe_utts_per_speaker,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Test-segment durations in seconds; each also gets a full-length bucket.
    pub buckets: Vec<f64>,
    /// Also score corrupted test segments.
    pub noisy: bool,
    /// Length of the short condition of the spread analysis.
    pub short_secs: f64,
    /// External trial list used instead of the generated one.
    pub trials: Option<PathBuf>,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            buckets: vec![2.0, 4.0],
            noisy: true,
            short_secs: 2.0,
            trials: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub corpus: CorpusSection,
    pub augment: AugmentSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub eval: EvalSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            out: PathBuf::from("runs"),
            corpus: CorpusSection::default(),
            augment: AugmentSection::default(),
            model: ModelSection::default(),
            train: TrainSection::default(),
            eval: EvalSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("{source}: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact {
                path: path.to_path_buf(),
                hint: "configuration file not found".into(),
            });
        }
        Self::parse(&std::fs::read_to_string(path)?, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn corpus_spec(&self) -> CorpusSpec {
        CorpusSpec {
            n_speakers: self.corpus.n_speakers,
            utts_per_speaker: self.corpus.utts_per_speaker,
            dur_range: self.corpus.dur_range,
            seed: derive_seed(self.seed, "corpus"),
        }
    }

    /// Held-out speakers get profile indices after the training speakers.
    pub fn eval_corpus_spec(&self) -> CorpusSpec {
        CorpusSpec {
            n_speakers: self.corpus.eval_speakers,
            utts_per_speaker: self.corpus.eval_utts_per_speaker,
            dur_range: self.corpus.dur_range,
            seed: derive_seed(self.seed, "corpus"),
        }
    }

    pub fn augment_spec(&self) -> AugmentSpec {
        let a = &self.augment;
        AugmentSpec {
            snr_db_range: a.snr_db_range,
            rir_count: a.rir_count,
            rir_decay_range: a.rir_decay_range,
            rir_tail_energy: a.rir_tail_energy,
            noise_kind: a.noise_kind,
            factor: a.factor,
            seed: derive_seed(self.seed, "augment"),
        }
    }

    pub fn model_spec(&self) -> ModelSpec {
        let m = &self.model;
        ModelSpec {
            topology: Topology {
                frame_dims: m.frame_dims,
                hidden_dim: m.hidden_dim,
                embed_dim: m.embed_dim,
            },
            pooling: m.pooling,
            heads: m.heads,
            n_speakers: self.corpus.n_speakers,
        }
    }

    pub fn loss_config(&self) -> LossConfig {
        let t = &self.train;
        let d = LossConfig::for_regime(t.regime);
        LossConfig {
            regime: t.regime,
            alpha: t.alpha.unwrap_or(d.alpha),
            gamma: t.gamma.unwrap_or(d.gamma),
            lambda: t.lambda.unwrap_or(d.lambda),
            margin: t.margin,
            scale: t.scale,
        }
    }

    pub fn train_plan(&self) -> TrainPlan {
        let t = &self.train;
        TrainPlan {
            loss: self.loss_config(),
            methodology: t.methodology,
            long_secs: t.long_secs,
            varied_secs: t.varied_secs,
            truncation_secs: t.truncation_secs,
            init_checkpoint: t.init_checkpoint.clone(),
            epochs: t.epochs,
            batch_size: t.batch_size,
            lr: t.lr,
            momentum: t.momentum,
            lr_decay: t.lr_decay,
            seed: derive_seed(self.seed, "train"),
            sample_source: t.sample_source,
            probe_utts_per_speaker: t.probe_utts_per_speaker,
        }
    }

    /// Checks every section without touching the file system.
    pub fn validate(&self) -> Result<()> {
        self.corpus_spec().validate()?;
        if self.corpus.eval_speakers < 2 || self.corpus.eval_utts_per_speaker < 2 {
            return Err(Error::Config(
                "the evaluation split needs at least 2 speakers with 2 utterances each".into(),
            ));
        }
        self.augment_spec().validate()?;
        self.model_spec().validate()?;
        self.train_plan().validate()?;
        if self.eval.buckets.iter().any(|&b| !(b > 0.0 && b.is_finite())) || self.eval.short_secs <= 0.0 {
            return Err(Error::Config("evaluation durations must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default() {
        let c = ExperimentConfig::parse("", "t").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        c.validate().unwrap();
        assert_eq!(c.model_spec().heads, 100);
        assert_eq!(c.model_spec().topology.hidden_dim, 1500);
    }

    #[test]
    fn sections_and_regime_defaults() {
        let c = ExperimentConfig::parse(
            "seed = 9\n[train]\nregime = \"ca\"\n[model]\nheads = 4\nhidden_dim = 16\n",
            "t",
        )
        .unwrap();
        let l = c.loss_config();
        assert_eq!((l.alpha, l.gamma, l.lambda), (0.0, 0.5, 0.01));
        assert_eq!(c.model_spec().heads, 4);
        assert_ne!(c.train_plan().seed, c.augment_spec().seed);
        assert_eq!(ExperimentConfig::parse(&c.to_toml(), "t").unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            ExperimentConfig::parse("[train]\nlearning_rate = 0.1\n", "t"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn alignment_regime_without_baseline_fails_validation() {
        let c = ExperimentConfig::parse("[train]\nregime = \"lvc\"\n", "t").unwrap();
        assert!(c.validate().is_err());
    }
}
