//! Config-driven runs: generator → transports → statistics, with manifests.

mod config;
mod run;
mod verify;

pub use config::{
    AnalysisConfig, BoxConfig, Partition, PipelineConfig, Replication, SpectrumConfig, TransportStep, VarianceConfig,
};
pub use run::{
    apply_step, run_pipeline, run_pipeline_in, run_source, with_worker_pool, worker_threads, RunManifest, RunOutput,
    RunSummary, SourceRun, THREADS_ENV,
};
pub use verify::{gaussian_pair_l1_quadrature, verify, verify_run, Check, Suite, VerifyReport};
