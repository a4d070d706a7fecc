//! Experiment layer for graph signal recovery: metrics, hyperparameter
//! selection, the Laplacian baseline, expert-opinion combination and the
//! spec-driven sweep runner behind the `gsr` command.

pub mod baseline;
pub mod cv;
pub mod error;
pub mod metrics;
pub mod opinions;
pub mod runner;
pub mod solve;

pub use baseline::{laplacian_baseline, laplacian_from_shift};
pub use cv::{cross_validate, CvOutcome, GridSpec};
pub use error::{ExperimentError, Result};
pub use metrics::{metrics, Metrics, TaskKind};
pub use opinions::{combine_opinions, synth_experts, CombineMethod, ExpertInstance, ExpertSpec};
pub use runner::{
    run_experiment, write_report, DataSource, ExperimentSpec, GraphSource, MetricReport, Task,
};
pub use solve::{solve, Solution, SolverId};
