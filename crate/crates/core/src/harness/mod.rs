//! Experiment driver: configuration, repeated runs, metrics, sweeps and timing.

mod config;
mod metrics;
mod run;
mod sweep;

pub use config::{load_dataset, DatasetConfig, ExperimentConfig, Metric, SplitConfig, SplitMode, SEED_ENV};
pub use metrics::{accuracy, pr_auc, Summary};
pub use run::{
    pretrain, resolve_config, run_experiment, run_on_hypergraph, write_outputs, DatasetSummary, LabelStore,
    PhaseTimings, RepeatReport, RunOutput, RunReport,
};
pub use sweep::{sweep, sweep_adaptation_steps, sweep_clusters, time_pretraining, SweepParam, SweepRow, SweepTable, TimingReport};
