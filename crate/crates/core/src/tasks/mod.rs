//! Task heads, negative sampling, ranking and classification metrics, and
//! the temporal training loop.

mod heads;
mod metrics;
mod sampling;
mod train;

pub use heads::{link_score, parse_task_kind, TaskHead, TaskKind, TaskSpec, TASK_KINDS};
pub use metrics::{
    average_precision, average_precision_scored, map_metric, mean_rank, micro_f1, minority_class,
    minority_f1, mrr,
};
pub use sampling::{corrupt_tails, negative_sample, REJECTION_FACTOR};
pub use train::{
    contexts_for, evaluate, fit, target_range, train_epoch, FitOutcome, MetricsReport, Phase,
    TaskModel, TrainConfig,
};
