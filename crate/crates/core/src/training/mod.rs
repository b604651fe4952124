//! Baseline and alignment-regime training.

mod centroids;
mod optimizer;
mod pairs;
mod plan;
mod train;

pub use centroids::{centroids_from_embeddings, refresh_centroids, CentroidTable};
pub use optimizer::Sgd;
pub use pairs::{
    epoch_batches, epoch_order, materialize, plan_pair, PairPlan, PartnerPlan, Segment, TrainData,
    TrainingPair,
};
pub use plan::{Methodology, SampleSource, TrainPlan};
pub use train::{
    initial_params, metrics_csv, pair_gradients, train, EpochRecord, ProbeSet, TrainOutcome,
    METRICS_HEADER,
};
