//! Run configs, file artifacts and the subcommands behind the `symmarl` binary.

mod commands;
mod config;
#[cfg(test)]
mod tests;

pub use commands::{
    aggregate, check_symmetry, checkpoint_spec, cmd_aggregate, cmd_augment, cmd_eval, cmd_eval_expert, cmd_make_dataset, cmd_train, load_agent, quantile_linear,
    save_agent, sidecar_path, AggregateReport, CheckpointSidecar, PropertyCheck, SeedOutcome, SummaryRow, SymmetryReport, TrainReport, AXIOM_TOLERANCE,
    DYNAMICS_TOLERANCE, NETWORK_TOLERANCE, SIDECAR_FORMAT,
};
pub use config::{resolve_output, Algorithm, DatasetConfig, RunConfig, OUTPUT_ROOT_ENV};
