//! The `xvec` command suite.
//!
//! Every command reads the same experiment configuration, resolves its stage
//! directory from the configuration hash and writes a manifest when done.
//! Stages already complete are skipped unless `--force` is given.

mod commands;
mod config;
mod stage;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use commands::{
    condition_tag, generate_trials, in_bucket, read_embeddings, silence_probe, Experiment,
    Overrides, Report, SegmentId,
};
pub use config::{
    AugmentSection, CorpusSection, EvalSection, ExperimentConfig, ModelSection, TrainSection,
};
pub use stage::{read_manifest, sha256_hex, stage_hash, Manifest, Stage, MANIFEST};

use crate::error::Result;
use crate::losses::Regime;

#[derive(Debug, Parser)]
#[command(name = "xvec", version, about = "Speaker embeddings with attentive pooling and alignment losses")]
pub struct Cli {
    /// Experiment configuration (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Global seed; every component seed is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Root output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Training regime: amsm, irl, lvc or ca.
    #[arg(long, global = true, value_parser = parse_regime)]
    pub regime: Option<Regime>,
    /// Number of attention heads.
    #[arg(long, global = true)]
    pub heads: Option<usize>,
    /// Restrict scoring to one duration bucket, e.g. `2s`, `full` or `2s-noisy`.
    #[arg(long, global = true)]
    pub duration_bucket: Option<String>,
    /// Use this checkpoint instead of the train stage's final one.
    #[arg(long, global = true)]
    pub checkpoint: Option<PathBuf>,
    /// Recompute stages that are already complete.
    #[arg(long, global = true)]
    pub force: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize the training and evaluation corpora and the trial list.
    GenCorpus,
    /// Export the corrupted copies of every training utterance.
    Augment,
    /// Train a model; writes a checkpoint per epoch and a metrics log.
    Train {
        /// Initialize from this checkpoint (required for irl and lvc).
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Embed every segment referenced by the trial list.
    Extract,
    /// Cosine-score the trial list.
    Score,
    /// EER/minDCF per condition and the embedding-spread table.
    Report,
    /// Finite-difference check of every gradient; exits 1 on failure.
    Gradcheck,
    /// Per-frame attention weights as CSV.
    AttnDump {
        /// Segment ids to dump, e.g. `spk020-utt001@2s+noisy`.
        #[arg(long = "utt")]
        utterances: Vec<String>,
    },
}

fn parse_regime(s: &str) -> std::result::Result<Regime, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

/// Runs one parsed command line; `Ok(false)` means a check failed.
pub fn run(cli: Cli) -> Result<bool> {
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let init = match &cli.command {
        Command::Train { init } => init.clone(),
        _ => None,
    };
    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out,
        regime: cli.regime,
        heads: cli.heads,
        duration_bucket: cli.duration_bucket,
        checkpoint: cli.checkpoint,
        init_checkpoint: init,
    };
    let exp = Experiment::new(cfg, overrides, cli.force)?;
    match cli.command {
        Command::GenCorpus => exp.gen_corpus().map(|_| true),
        Command::Augment => exp.augment().map(|_| true),
        Command::Train { .. } => exp.train().map(|_| true),
        Command::Extract => exp.extract().map(|_| true),
        Command::Score => exp.score().map(|_| true),
        Command::Report => exp.report().map(|_| true),
        Command::Gradcheck => exp.gradcheck(),
        Command::AttnDump { utterances } => exp.attn_dump(&utterances).map(|_| true),
    }
}

/// Entry point shared by the binary: parses arguments and maps outcomes to exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
