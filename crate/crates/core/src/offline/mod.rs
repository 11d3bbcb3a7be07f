//! Offline pipeline: scripted-expert datasets, symmetric augmentation, BC and IQL.

mod augment;
mod bc;
mod dataset;
mod generate;
mod iql;
mod train;
#[cfg(test)]
mod tests;

pub use augment::augment_symmetric;
pub use bc::{bc_loss, bc_update};
pub use dataset::{Dataset, DatasetMeta, Transition, DATASET_FORMAT, DATASET_VERSION};
pub use generate::{generate_dataset, pole_expert, scripted_expert, ExpertFn, GeneratorKind, ReachExpert, INTERLEAVE_BLOCK, MIXED_NOISE, WEAK_NOISE};
pub use iql::{awr_weight, bellman_target, expectile_loss, iql_update, IqlBatch, IqlConfig, IqlLosses, IqlState};
pub use train::{evaluate_agent, mean_log_likelihood, prepare_offline, train_offline, OfflineAlgo, OfflineConfig, OfflineOutcome};
