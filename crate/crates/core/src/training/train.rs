use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::eval::{score, MetricsReport, Trial, TrialList};
use crate::features::extract_normalized;
use crate::losses::{combined_loss, AlignTarget, LossConfig, LossTerms, Pass, Regime};
use crate::model::{load_checkpoint, ModelSpec, NetworkParams};
use crate::numcore::{Graph, Matrix};
use crate::rng::derive_seed;

use super::centroids::{refresh_centroids, CentroidTable};
use super::optimizer::Sgd;
use super::pairs::{epoch_batches, materialize, PartnerPlan, TrainData, TrainingPair};
use super::plan::TrainPlan;

/// Metrics of one epoch. Epoch 0 describes the initial parameters and has no losses.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean loss terms over the epoch's pairs.
    pub losses: Option<LossTerms<f64>>,
    pub probe_eer: f64,
    pub lr: f64,
    pub pairs: usize,
}

pub const METRICS_HEADER: &str = "epoch,L_AM_x,L_AM_x2,L_cos,L_2,total,probe_EER";

impl EpochRecord {
    /// One CSV line matching [`METRICS_HEADER`]; missing losses are empty fields.
    pub fn csv_line(&self) -> String {
        let mut s = format!("{}", self.epoch);
        match &self.losses {
            Some(l) => {
                for v in [l.am_x, l.am_x2, l.cos, l.l2, l.total] {
                    write!(s, ",{v}").expect("writing to a String");
                }
            }
            None => s.push_str(",,,,,"),
        }
        write!(s, ",{}", self.probe_eer).expect("writing to a String");
        s
    }
}

/// Renders a whole metrics log.
pub fn metrics_csv(records: &[EpochRecord]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for r in records {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

/// Probe utterances and all trials among them.
#[derive(Clone, Debug)]
pub struct ProbeSet {
    /// Indices into [`TrainData::clean`].
    pub utterances: Vec<usize>,
    pub trials: TrialList,
}

impl ProbeSet {
    /// The first `per_speaker` utterances of each speaker, in corpus order.
    pub fn new(data: &TrainData, per_speaker: usize) -> Result<Self> {
        let mut utterances = Vec::new();
        for spk in &data.speakers {
            utterances.extend(
                data.clean
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| &w.speaker_id == spk)
                    .map(|(i, _)| i)
                    .take(per_speaker),
            );
        }
        let mut trials = Vec::new();
        for (a, &i) in utterances.iter().enumerate() {
            for &j in &utterances[a + 1..] {
                let (wi, wj) = (&data.clean[i], &data.clean[j]);
                trials.push(Trial {
                    enroll: wi.utterance_id.clone(),
                    test: wj.utterance_id.clone(),
                    target: wi.speaker_id == wj.speaker_id,
                    condition: None,
                });
            }
        }
        Ok(ProbeSet {
            utterances,
            trials: TrialList::new(trials)?,
        })
    }

    pub fn evaluate(&self, data: &TrainData, params: &NetworkParams) -> Result<MetricsReport> {
        let embs = self
            .utterances
            .iter()
            .map(|&i| params.embed(&extract_normalized(&data.clean[i])?))
            .collect::<Result<Vec<_>>>()?;
        let mut scores = Vec::with_capacity(self.trials.len());
        for (a, ea) in embs.iter().enumerate() {
            for eb in &embs[a + 1..] {
                scores.push(score(ea, eb)?);
            }
        }
        MetricsReport::compute(&scores, &self.trials.targets())
    }
}

/// Parameters a plan starts from: its init checkpoint, or a fresh seeded network.
pub fn initial_params(plan: &TrainPlan, model: &ModelSpec) -> Result<NetworkParams> {
    match &plan.init_checkpoint {
        Some(path) => {
            let p = load_checkpoint(path)?;
            if &p.spec != model {
                return Err(Error::Config(format!(
                    "init checkpoint {} has model {:?}, plan expects {:?}",
                    path.display(),
                    p.spec,
                    model
                )));
            }
            Ok(p)
        }
        None => NetworkParams::init(model.clone(), derive_seed(plan.seed, "model")),
    }
}

/// Loss terms and parameter gradients of one pair.
pub fn pair_gradients(
    params: &NetworkParams,
    pair: &TrainingPair,
    centroids: Option<&CentroidTable>,
    speaker: &str,
    cfg: &LossConfig,
) -> Result<(LossTerms<f64>, Vec<Matrix>)> {
    let mut g = Graph::new();
    let p = params.register(&mut g);
    let fx = params.build(&mut g, &p, &pair.x.frames)?;
    let x = Pass {
        classifier_input: NetworkParams::classifier_input(&mut g, &fx)?,
        embedding: fx.embedding,
    };
    let target = match (pair.plan.partner, &pair.x2) {
        (PartnerPlan::None, _) => AlignTarget::None,
        (PartnerPlan::Segment(_), Some(x2)) => {
            let f2 = params.build(&mut g, &p, &x2.frames)?;
            AlignTarget::Pass(Pass {
                classifier_input: NetworkParams::classifier_input(&mut g, &f2)?,
                embedding: f2.embedding,
            })
        }
        (PartnerPlan::Centroid, _) => {
            let table = centroids
                .ok_or_else(|| Error::Contract("centroid alignment without a centroid table".into()))?;
            AlignTarget::Centroid(Matrix::row_vector(table.get(speaker)?.to_vec()))
        }
        (PartnerPlan::Segment(_), None) => {
            return Err(Error::Contract("segment partner was not rendered".into()))
        }
    };
    let terms = combined_loss(&mut g, x, target, p.classifier(), pair.plan.label, cfg)?;
    let values = terms.values(&g);
    let mut grads = g.backward(terms.total)?;
    let out = p
        .ids
        .iter()
        .zip(&params.tensors)
        .map(|(&id, t)| {
            grads
                .take(id)
                .unwrap_or_else(|| Matrix::zeros(t.value.rows(), t.value.cols()))
        })
        .collect();
    Ok((values, out))
}

/// Everything a finished run produced.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: NetworkParams,
    /// Epoch 0 (initial parameters) followed by one record per epoch.
    pub records: Vec<EpochRecord>,
    pub centroids: Option<CentroidTable>,
}

fn divergence(epoch: usize, step: usize, e: Error) -> Error {
    match e {
        Error::NonFinite(op) => Error::Divergence {
            epoch,
            step,
            detail: format!("non-finite value in {op}"),
        },
        other => other,
    }
}

/// Runs `plan` on `data`. `on_epoch` sees every record, including epoch 0,
/// together with the parameters at that point.
pub fn train(
    plan: &TrainPlan,
    model: &ModelSpec,
    data: &TrainData,
    on_epoch: &mut dyn FnMut(&EpochRecord, &NetworkParams) -> Result<()>,
) -> Result<TrainOutcome> {
    plan.validate()?;
    if model.n_speakers != data.speakers.len() {
        return Err(Error::Config(format!(
            "model has {} classes but the corpus has {} speakers",
            model.n_speakers,
            data.speakers.len()
        )));
    }
    let mut params = initial_params(plan, model)?;
    let probe = ProbeSet::new(data, plan.probe_utts_per_speaker)?;
    let mut opt = Sgd::new(&params, plan.lr, plan.momentum, plan.lr_decay);
    let ca = plan.loss.regime == Regime::Ca;
    let mut centroids = if ca {
        Some(refresh_centroids(&params, &data.clean, &data.speakers, 0)?)
    } else {
        None
    };

    let first = EpochRecord {
        epoch: 0,
        losses: None,
        probe_eer: probe.evaluate(data, &params)?.eer,
        lr: opt.lr,
        pairs: 0,
    };
    log::info!("epoch 0: probe EER {:.4}", first.probe_eer);
    on_epoch(&first, &params)?;
    let mut records = vec![first];

    let mut step = 0;
    for epoch in 1..=plan.epochs {
        if let Some(t) = &centroids {
            if t.epoch != epoch - 1 {
                return Err(Error::Contract(format!(
                    "epoch {epoch} would use centroids from epoch {}",
                    t.epoch
                )));
            }
        }
        let mut sum = LossTerms::<f64>::default();
        let mut pairs = 0;
        for batch in epoch_batches(data, plan, epoch)? {
            step += 1;
            let mut acc: Option<Vec<Matrix>> = None;
            for pp in &batch {
                let pair = materialize(data, *pp)?;
                let speaker = &data.clean[pp.utterance].speaker_id;
                let (terms, grads) = pair_gradients(&params, &pair, centroids.as_ref(), speaker, &plan.loss)
                    .map_err(|e| divergence(epoch, step, e))?;
                if !terms.total.is_finite() {
                    return Err(Error::Divergence {
                        epoch,
                        step,
                        detail: format!("loss is {} on {}", terms.total, data.clean[pp.utterance].utterance_id),
                    });
                }
                sum.am_x += terms.am_x;
                sum.am_x2 += terms.am_x2;
                sum.cos += terms.cos;
                sum.l2 += terms.l2;
                sum.total += terms.total;
                pairs += 1;
                match &mut acc {
                    None => acc = Some(grads),
                    Some(a) => a.iter_mut().zip(&grads).for_each(|(a, g)| a.add_scaled(g, 1.0)),
                }
            }
            if let Some(mut grads) = acc {
                let inv = 1.0 / batch.len() as f64;
                grads.iter_mut().for_each(|g| g.scale_in_place(inv));
                opt.step(&mut params, &grads)?;
                if !params.tensors.iter().all(|t| t.value.is_finite()) {
                    return Err(Error::Divergence {
                        epoch,
                        step,
                        detail: "parameters became non-finite after the update".into(),
                    });
                }
            }
        }
        if pairs == 0 {
            return Err(Error::Input(
                "no utterance is long enough for the planned training segments".into(),
            ));
        }
        let n = pairs as f64;
        let losses = LossTerms {
            am_x: sum.am_x / n,
            am_x2: sum.am_x2 / n,
            cos: sum.cos / n,
            l2: sum.l2 / n,
            total: sum.total / n,
        };
        let record = EpochRecord {
            epoch,
            losses: Some(losses),
            probe_eer: probe.evaluate(data, &params)?.eer,
            lr: opt.lr,
            pairs,
        };
        log::info!(
            "epoch {epoch}: total {:.4} (am {:.4}, cos {:.4}, l2 {:.4}), probe EER {:.4}",
            losses.total,
            losses.am_x,
            losses.cos,
            losses.l2,
            record.probe_eer
        );
        opt.end_epoch();
        if ca && epoch < plan.epochs {
            centroids = Some(refresh_centroids(&params, &data.clean, &data.speakers, epoch)?);
        }
        on_epoch(&record, &params)?;
        records.push(record);
    }
    Ok(TrainOutcome {
        params,
        records,
        centroids,
    })
}
