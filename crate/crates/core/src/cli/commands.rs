use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::augment::{corrupt, corrupt_detailed, copy_seed, AugmentSpec};
use crate::checks::gradient_suite;
use crate::error::{Error, Result};
use crate::eval::{
    attention_weights, format_attention_csv, head_average, region_means, score_trials,
    speech_silence_speech, spread_table, MetricsReport, ScoredTrials, SpreadSettings, Trial,
    TrialList,
};
use crate::features::{
    extract_normalized, read_wav, secs_to_samples, synth_corpus_from, truncate, write_wav,
    OffsetPolicy, Waveform,
};
use crate::model::{load_checkpoint, save_checkpoint, Embedding, NetworkParams};
use crate::numcore::gradcheck::GradCheckOptions;
use crate::rng::derive_seed;
use crate::training::{metrics_csv, train, TrainData};

use super::config::ExperimentConfig;
use super::stage::{sha256_hex, stage_hash, Stage};

/// Overrides applied on top of the configuration file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub regime: Option<crate::losses::Regime>,
    pub heads: Option<usize>,
    pub duration_bucket: Option<String>,
    pub checkpoint: Option<PathBuf>,
    pub init_checkpoint: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(r) = self.regime {
            if r != cfg.train.regime {
                // Explicit weights belong to the configured regime.
                cfg.train.alpha = None;
                cfg.train.gamma = None;
                cfg.train.lambda = None;
            }
            cfg.train.regime = r;
        }
        if let Some(h) = self.heads {
            cfg.model.heads = h;
        }
        if let Some(p) = &self.init_checkpoint {
            cfg.train.init_checkpoint = Some(p.clone());
        }
    }
}

/// The experiment with every stage location resolved.
pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub overrides: Overrides,
    pub force: bool,
}

/// Canonical text of a config section; only table-shaped values serialize.
fn toml_of<T: Serialize>(v: &T) -> String {
    toml::to_string(v).expect("serializable section")
}

fn map<const N: usize>(items: [(&str, String); N]) -> BTreeMap<String, String> {
    items.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn seeds<const N: usize>(items: [(&str, u64); N]) -> BTreeMap<String, u64> {
    items.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn dir_name(s: &Stage) -> String {
    s.dir.file_name().expect("stage dir").to_string_lossy().into_owned()
}

/// `utt_id speaker_id relative_path` lines.
fn write_list(path: &Path, items: &[(String, String, String)]) -> Result<()> {
    let mut out = String::new();
    for (u, s, p) in items {
        writeln!(out, "{u} {s} {p}").expect("writing to a String");
    }
    fs::write(path, out)?;
    Ok(())
}

fn read_list(stage: &Stage, list: &str) -> Result<Vec<Waveform>> {
    let path = stage.path(list);
    let text = fs::read_to_string(&path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::format(&path, format!("bad line {l:?}")));
            }
            read_wav(&stage.path(f[2]), f[1], f[0])
        })
        .collect()
}

/// A test segment: utterance, optional truncation and optional corruption.
///
/// Written `utt[@<secs>s][+noisy]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentId {
    pub utterance: String,
    pub secs: Option<f64>,
    pub noisy: bool,
}

impl SegmentId {
    pub fn parse(s: &str) -> Result<Self> {
        let (rest, noisy) = match s.strip_suffix("+noisy") {
            Some(r) => (r, true),
            None => (s, false),
        };
        let (utterance, secs) = match rest.split_once('@') {
            Some((u, d)) => {
                let v: f64 = d
                    .strip_suffix('s')
                    .and_then(|x| x.parse().ok())
                    .filter(|v: &f64| *v > 0.0)
                    .ok_or_else(|| Error::Input(format!("bad duration in segment id {s:?}")))?;
                (u, Some(v))
            }
            None => (rest, None),
        };
        Ok(SegmentId {
            utterance: utterance.to_string(),
            secs,
            noisy,
        })
    }

    pub fn format(&self) -> String {
        let mut s = self.utterance.clone();
        if let Some(d) = self.secs {
            write!(s, "@{d}s").expect("writing to a String");
        }
        if self.noisy {
            s.push_str("+noisy");
        }
        s
    }

    /// Renders the segment from its clean source utterance.
    pub fn render(&self, clean: &Waveform, aug: &AugmentSpec, seed: u64) -> Result<Waveform> {
        let mut w = if self.noisy {
            corrupt(clean, aug, derive_seed(seed, &format!("eval/noisy/{}", clean.utterance_id)))?
        } else {
            clean.clone()
        };
        if let Some(d) = self.secs {
            if secs_to_samples(d) <= w.samples.len() {
                w = truncate(&w, d, OffsetPolicy::Random(derive_seed(seed, "eval/truncate")))?;
            } else {
                log::warn!("{} is shorter than {d} s; using all of it", clean.utterance_id);
            }
        }
        w.utterance_id = self.format();
        Ok(w)
    }
}

/// Condition tag of a test segment, e.g. `2s-noisy` or `full-clean`.
pub fn condition_tag(secs: Option<f64>, noisy: bool) -> String {
    let d = secs.map_or("full".to_string(), |d| format!("{d}s"));
    format!("{d}-{}", if noisy { "noisy" } else { "clean" })
}

/// Every ordered-by-corpus pair of distinct evaluation utterances, once per condition.
pub fn generate_trials(eval: &[Waveform], buckets: &[f64], noisy: bool) -> Result<TrialList> {
    let mut conditions: Vec<(Option<f64>, bool)> = vec![(None, false)];
    conditions.extend(buckets.iter().map(|&b| (Some(b), false)));
    if noisy {
        conditions.push((None, true));
        conditions.extend(buckets.iter().map(|&b| (Some(b), true)));
    }
    let mut trials = Vec::new();
    for &(secs, noisy) in &conditions {
        for (i, a) in eval.iter().enumerate() {
            for b in &eval[i + 1..] {
                trials.push(Trial {
                    enroll: a.utterance_id.clone(),
                    test: SegmentId {
                        utterance: b.utterance_id.clone(),
                        secs,
                        noisy,
                    }
                    .format(),
                    target: a.speaker_id == b.speaker_id,
                    condition: Some(condition_tag(secs, noisy)),
                });
            }
        }
    }
    TrialList::new(trials)
}

/// Whether `condition` belongs to the duration bucket `bucket` (`2s`, `full`, or a full tag).
pub fn in_bucket(condition: Option<&str>, bucket: &str) -> bool {
    condition.is_some_and(|c| c == bucket || c.split('-').next() == Some(bucket))
}

impl Experiment {
    pub fn new(mut cfg: ExperimentConfig, overrides: Overrides, force: bool) -> Result<Self> {
        overrides.apply(&mut cfg);
        cfg.validate()?;
        Ok(Experiment {
            cfg,
            overrides,
            force,
        })
    }

    fn seed(&self) -> u64 {
        self.cfg.seed
    }

    pub fn corpus_stage(&self) -> Stage {
        let c = &self.cfg;
        let h = stage_hash(&[
            "corpus",
            &c.seed.to_string(),
            &toml_of(&c.corpus),
            &format!("buckets={:?} noisy={}", c.eval.buckets, c.eval.noisy),
        ]);
        Stage::new(&c.out, "corpus", h)
    }

    pub fn augment_stage(&self) -> Stage {
        let h = stage_hash(&["augment", &self.corpus_stage().hash, &toml_of(&self.cfg.augment)]);
        Stage::new(&self.cfg.out, "augment", h)
    }

    fn init_checkpoint_hash(&self) -> Result<String> {
        match &self.cfg.train.init_checkpoint {
            None => Ok("none".into()),
            Some(p) if p.exists() => Ok(sha256_hex(&fs::read(p)?)),
            Some(p) => Err(Error::MissingArtifact {
                path: p.clone(),
                hint: "init_checkpoint does not exist; train the baseline first".into(),
            }),
        }
    }

    pub fn train_stage(&self) -> Result<Stage> {
        let c = &self.cfg;
        let mut train = c.train.clone();
        // The checkpoint enters the key by content, not by path.
        train.init_checkpoint = None;
        let h = stage_hash(&[
            "train",
            &self.corpus_stage().hash,
            &toml_of(&c.augment),
            &toml_of(&c.model),
            &toml_of(&train),
            &self.init_checkpoint_hash()?,
        ]);
        Ok(Stage::new(&c.out, "train", h))
    }

    /// The checkpoint used by downstream commands and the key it contributes.
    fn checkpoint(&self) -> Result<(PathBuf, String)> {
        let path = match &self.overrides.checkpoint {
            Some(p) => p.clone(),
            None => {
                let t = self.train_stage()?;
                t.require("train")?;
                t.path("final.ckpt")
            }
        };
        if !path.exists() {
            return Err(Error::MissingArtifact {
                path,
                hint: "checkpoint not found; run `xvec train` first or pass --checkpoint".into(),
            });
        }
        let key = sha256_hex(&fs::read(&path)?);
        Ok((path, key))
    }

    fn trials(&self) -> Result<(TrialList, String)> {
        let path = match &self.cfg.eval.trials {
            Some(p) => p.clone(),
            None => {
                let c = self.corpus_stage();
                c.require("gen-corpus")?;
                c.path("trials.txt")
            }
        };
        let list = TrialList::read(&path)?;
        let key = sha256_hex(list.format().as_bytes());
        Ok((list, key))
    }

    pub fn extract_stage(&self) -> Result<Stage> {
        let (_, ck) = self.checkpoint()?;
        let (_, tk) = self.trials()?;
        let h = stage_hash(&["extract", &self.corpus_stage().hash, &toml_of(&self.cfg.augment), &ck, &tk]);
        Ok(Stage::new(&self.cfg.out, "extract", h))
    }

    pub fn score_stage(&self) -> Result<Stage> {
        let bucket = self.overrides.duration_bucket.clone().unwrap_or_default();
        let h = stage_hash(&["score", &self.extract_stage()?.hash, &bucket]);
        Ok(Stage::new(&self.cfg.out, "score", h))
    }

    pub fn report_stage(&self) -> Result<Stage> {
        let h = stage_hash(&["report", &self.score_stage()?.hash, &format!("short_secs={:?}", self.cfg.eval.short_secs)]);
        Ok(Stage::new(&self.cfg.out, "report", h))
    }

    fn begin(&self, stage: &Stage) -> Result<bool> {
        if stage.is_complete() && !self.force {
            println!("{} is up to date: {}", stage.name, stage.dir.display());
            return Ok(false);
        }
        stage.reset()?;
        Ok(true)
    }

    fn finish(&self, stage: &Stage, seeds: BTreeMap<String, u64>, inputs: BTreeMap<String, String>) -> Result<()> {
        fs::write(stage.path("config.toml"), self.cfg.to_toml())?;
        stage.finish(self.seed(), seeds, inputs)?;
        println!("{}: {}", stage.name, stage.dir.display());
        Ok(())
    }

    fn eval_corpus(&self) -> Result<Vec<Waveform>> {
        let c = self.corpus_stage();
        c.require("gen-corpus")?;
        read_list(&c, "eval.list")
    }

    fn train_corpus(&self) -> Result<Vec<Waveform>> {
        let c = self.corpus_stage();
        c.require("gen-corpus")?;
        read_list(&c, "train.list")
    }

    pub fn gen_corpus(&self) -> Result<PathBuf> {
        let stage = self.corpus_stage();
        if !self.begin(&stage)? {
            return Ok(stage.dir);
        }
        let train = synth_corpus_from(&self.cfg.corpus_spec(), 0)?;
        let eval = synth_corpus_from(&self.cfg.eval_corpus_spec(), self.cfg.corpus.n_speakers)?;
        for (split, corpus) in [("train", &train), ("eval", &eval)] {
            fs::create_dir_all(stage.path(split))?;
            let mut items = Vec::new();
            for w in corpus {
                let rel = format!("{split}/{}.wav", w.utterance_id);
                write_wav(&stage.path(&rel), w)?;
                items.push((w.utterance_id.clone(), w.speaker_id.clone(), rel));
            }
            write_list(&stage.path(&format!("{split}.list")), &items)?;
        }
        // Trials are built from the stored (quantized) audio's labels only.
        let trials = generate_trials(&eval, &self.cfg.eval.buckets, self.cfg.eval.noisy)?;
        fs::write(stage.path("trials.txt"), trials.format())?;
        self.finish(
            &stage,
            seeds([("corpus", self.cfg.corpus_spec().seed)]),
            BTreeMap::new(),
        )?;
        Ok(stage.dir)
    }

    pub fn augment(&self) -> Result<PathBuf> {
        let corpus = self.corpus_stage();
        corpus.require("gen-corpus")?;
        let stage = self.augment_stage();
        if !self.begin(&stage)? {
            return Ok(stage.dir);
        }
        let spec = self.cfg.augment_spec();
        fs::create_dir_all(stage.path("wav"))?;
        let mut list = String::from("copy_id utterance_id speaker_id path rir_index snr_db\n");
        for w in read_list(&corpus, "train.list")? {
            for j in 0..spec.factor {
                let c = corrupt_detailed(&w, &spec, copy_seed(&spec, &w.utterance_id, j))?;
                let id = format!("{}-c{j:02}", w.utterance_id);
                let rel = format!("wav/{id}.wav");
                write_wav(&stage.path(&rel), &c.output)?;
                let rir = c.rir_index.map_or("-".to_string(), |i| i.to_string());
                writeln!(list, "{id} {} {} {rel} {rir} {}", w.utterance_id, w.speaker_id, c.snr_db)
                    .expect("writing to a String");
            }
        }
        fs::write(stage.path("copies.list"), list)?;
        self.finish(
            &stage,
            seeds([("augment", spec.seed)]),
            map([("corpus", dir_name(&corpus))]),
        )?;
        Ok(stage.dir)
    }

    pub fn train(&self) -> Result<PathBuf> {
        let corpus = self.corpus_stage();
        corpus.require("gen-corpus")?;
        let stage = self.train_stage()?;
        if !self.begin(&stage)? {
            return Ok(stage.dir);
        }
        let data = TrainData::new(read_list(&corpus, "train.list")?, self.cfg.augment_spec())?;
        let plan = self.cfg.train_plan();
        let model = self.cfg.model_spec();
        let mut records = Vec::new();
        let outcome = train(&plan, &model, &data, &mut |r, p| {
            save_checkpoint(&stage.path(&format!("epoch-{:03}.ckpt", r.epoch)), p)?;
            records.push(r.clone());
            fs::write(stage.path("metrics.csv"), metrics_csv(&records))?;
            Ok(())
        })?;
        save_checkpoint(&stage.path("final.ckpt"), &outcome.params)?;
        let mut inputs = map([("corpus", dir_name(&corpus))]);
        if let Some(p) = &plan.init_checkpoint {
            inputs.insert("init_checkpoint".into(), p.display().to_string());
        }
        self.finish(
            &stage,
            seeds([
                ("train", plan.seed),
                ("augment", self.cfg.augment_spec().seed),
                ("model_init", derive_seed(plan.seed, "model")),
            ]),
            inputs,
        )?;
        Ok(stage.dir)
    }

    pub fn extract(&self) -> Result<PathBuf> {
        let stage = self.extract_stage()?;
        if !self.begin(&stage)? {
            return Ok(stage.dir);
        }
        let (ckpt, _) = self.checkpoint()?;
        let params = load_checkpoint(&ckpt)?;
        let (trials, _) = self.trials()?;
        let mut sources: HashMap<String, Waveform> = HashMap::new();
        for w in self.eval_corpus()?.into_iter().chain(self.train_corpus()?) {
            sources.insert(w.utterance_id.clone(), w);
        }
        let ids: BTreeSet<&str> = trials
            .trials
            .iter()
            .flat_map(|t| [t.enroll.as_str(), t.test.as_str()])
            .collect();
        let aug = self.cfg.augment_spec();
        let mut out = String::new();
        for id in ids {
            let seg = SegmentId::parse(id)?;
            let clean = sources.get(&seg.utterance).ok_or_else(|| {
                Error::Input(format!("trial list refers to unknown utterance {}", seg.utterance))
            })?;
            let w = seg.render(clean, &aug, self.seed())?;
            let e = params.embed(&extract_normalized(&w)?)?;
            out.push_str(id);
            for v in &e.values {
                write!(out, " {v}").expect("writing to a String");
            }
            out.push('\n');
        }
        fs::write(stage.path("embeddings.txt"), out)?;
        let mut inputs = map([("checkpoint", ckpt.display().to_string())]);
        inputs.insert("corpus".into(), dir_name(&self.corpus_stage()));
        self.finish(&stage, seeds([("eval", self.seed())]), inputs)?;
        Ok(stage.dir)
    }

    pub fn score(&self) -> Result<PathBuf> {
        let extract = self.extract_stage()?;
        extract.require("extract")?;
        let stage = self.score_stage()?;
        if !self.begin(&stage)? {
            return Ok(stage.dir);
        }
        let (mut trials, _) = self.trials()?;
        if let Some(b) = &self.overrides.duration_bucket {
            trials = TrialList {
                trials: trials
                    .trials
                    .into_iter()
                    .filter(|t| in_bucket(t.condition.as_deref(), b))
                    .collect(),
            };
            if trials.is_empty() {
                return Err(Error::Input(format!("no trial is in duration bucket {b:?}")));
            }
        }
        let embeddings = read_embeddings(&extract.path("embeddings.txt"))?;
        let scored = score_trials(&trials, &embeddings)?;
        fs::write(stage.path("trials.txt"), trials.format())?;
        fs::write(stage.path("scores.txt"), scored.format_scores())?;
        self.finish(&stage, BTreeMap::new(), map([("extract", dir_name(&extract))]))?;
        Ok(stage.dir)
    }

    pub fn report(&self) -> Result<PathBuf> {
        let score = self.score_stage()?;
        score.require("score")?;
        let stage = self.report_stage()?;
        if !self.begin(&stage)? {
            return Ok(stage.dir);
        }
        let trials = TrialList::read(&score.path("trials.txt"))?;
        let text = fs::read_to_string(score.path("scores.txt"))?;
        let scored = ScoredTrials::parse_scores(trials, &text, &score.path("scores.txt").display().to_string())?;
        let metrics = scored.metrics_by_condition()?;

        let (ckpt, _) = self.checkpoint()?;
        let params = load_checkpoint(&ckpt)?;
        let settings = SpreadSettings {
            short_secs: self.cfg.eval.short_secs,
            augment: self.cfg.augment_spec(),
            seed: derive_seed(self.seed(), "spread"),
        };
        let spread = spread_table(&params, &self.eval_corpus()?, &settings)?;
        let report = Report::new(metrics, &spread);
        fs::write(stage.path("report.toml"), report.to_toml())?;
        fs::write(stage.path("report.txt"), report.to_table())?;
        print!("{}", report.to_table());
        self.finish(
            &stage,
            seeds([("spread", settings.seed)]),
            map([("score", dir_name(&score))]),
        )?;
        Ok(stage.dir)
    }

    pub fn attn_dump(&self, utterances: &[String]) -> Result<PathBuf> {
        let (ckpt, ck) = self.checkpoint()?;
        let params = load_checkpoint(&ckpt)?;
        let h = stage_hash(&["attn", &self.corpus_stage().hash, &ck, &utterances.join(" ")]);
        let stage = Stage::new(&self.cfg.out, "attn", h);
        if !self.begin(&stage)? {
            return Ok(stage.dir);
        }
        let eval = self.eval_corpus()?;
        let mut sources: HashMap<String, Waveform> = HashMap::new();
        for w in eval.iter().cloned().chain(self.train_corpus()?) {
            sources.insert(w.utterance_id.clone(), w);
        }
        let aug = self.cfg.augment_spec();
        for id in utterances {
            let seg = SegmentId::parse(id)?;
            let clean = sources
                .get(&seg.utterance)
                .ok_or_else(|| Error::Input(format!("unknown utterance {}", seg.utterance)))?;
            let w = seg.render(clean, &aug, self.seed())?;
            let alpha = attention_weights(&params, &extract_normalized(&w)?)?;
            fs::write(stage.path(&format!("{id}.csv")), format_attention_csv(&alpha))?;
        }
        // Speech | silence | speech demonstration on the first evaluation utterance.
        let (alpha, summary) = silence_probe(&params, &eval[0])?;
        fs::write(stage.path("speech-silence-speech.csv"), format_attention_csv(&alpha))?;
        fs::write(stage.path("speech-silence-speech.txt"), &summary)?;
        print!("{summary}");
        self.finish(&stage, BTreeMap::new(), map([("checkpoint", ckpt.display().to_string())]))?;
        Ok(stage.dir)
    }

    /// Runs the gradient suite; returns whether every case passed.
    pub fn gradcheck(&self) -> Result<bool> {
        let h = stage_hash(&["gradcheck", &self.seed().to_string()]);
        let stage = Stage::new(&self.cfg.out, "gradcheck", h);
        stage.reset()?;
        let results = gradient_suite(derive_seed(self.seed(), "gradcheck"), &GradCheckOptions::default())?;
        let mut text = String::new();
        let mut ok = true;
        for r in &results {
            let pass = r.report.passed();
            ok &= pass;
            writeln!(
                text,
                "{} {:<28} {:<40} checked={:<5} kinks={:<4} max_rel_err={:.3e}",
                if pass { "PASS" } else { "FAIL" },
                r.case,
                r.shape,
                r.report.checked,
                r.report.kinks,
                r.report.max_rel_err
            )
            .expect("writing to a String");
        }
        writeln!(text, "{}", if ok { "all gradient checks passed" } else { "gradient checks FAILED" })
            .expect("writing to a String");
        fs::write(stage.path("gradcheck.txt"), &text)?;
        print!("{text}");
        self.finish(&stage, seeds([("gradcheck", derive_seed(self.seed(), "gradcheck"))]), BTreeMap::new())?;
        Ok(ok)
    }
}

/// Attention of `params` on a speech | silence | speech version of `w`,
/// with a text summary of the head-averaged weight in each third.
pub fn silence_probe(params: &NetworkParams, w: &Waveform) -> Result<(crate::numcore::Matrix, String)> {
    let third = w.samples.len() / 2;
    let x = speech_silence_speech(w, third)?;
    let alpha = attention_weights(params, &extract_normalized(&x)?)?;
    let means = region_means(&head_average(&alpha), third, 3);
    let summary = format!(
        "utterance {}\nmean attention: speech {:.6e}, silence {:.6e}, speech {:.6e}\n",
        w.utterance_id, means[0], means[1], means[2]
    );
    Ok((alpha, summary))
}

pub fn read_embeddings(path: &Path) -> Result<HashMap<String, Embedding>> {
    if !path.exists() {
        return Err(Error::MissingArtifact {
            path: path.to_path_buf(),
            hint: "run `xvec extract` first".into(),
        });
    }
    let text = fs::read_to_string(path)?;
    let mut out = HashMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let mut f = line.split_whitespace();
        let id = f.next().expect("non-empty line").to_string();
        let values = f
            .map(|v| v.parse::<f64>().map_err(|_| Error::format(path, format!("bad value {v:?}"))))
            .collect::<Result<Vec<_>>>()?;
        out.insert(id, Embedding::new(values));
    }
    Ok(out)
}

/// Everything `report` writes.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub metrics: BTreeMap<String, MetricsReport>,
    pub spread: BTreeMap<String, f64>,
}

impl Report {
    pub fn new(
        metrics: BTreeMap<String, MetricsReport>,
        spread: &[(crate::eval::SpreadCondition, Option<f64>)],
    ) -> Self {
        Report {
            metrics,
            spread: spread
                .iter()
                .filter_map(|(c, v)| v.map(|v| (c.name().to_string(), v)))
                .collect(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }

    /// Human-readable tables: metrics per condition, then spread per condition.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{:<16} {:>8} {:>10} {:>8} {:>8}", "condition", "EER(%)", "minDCF", "targets", "nontgt")
            .expect("writing to a String");
        for (c, m) in &self.metrics {
            writeln!(
                s,
                "{c:<16} {:>8.2} {:>10.4} {:>8} {:>8}",
                100.0 * m.eer,
                m.min_dcf,
                m.n_target,
                m.n_nontarget
            )
            .expect("writing to a String");
        }
        writeln!(s, "\n{:<16} {:>12}", "spread", "avg std").expect("writing to a String");
        for c in crate::eval::SpreadCondition::ALL {
            if let Some(v) = self.spread.get(c.name()) {
                writeln!(s, "{:<16} {v:>12.6}", c.name()).expect("writing to a String");
            }
        }
        s
    }
}
