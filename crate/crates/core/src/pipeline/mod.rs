//! Experiment orchestration: configuration, the prepare → train → infer →
//! evaluate → report pipeline, and synthetic dataset generation.
//!
//! Everything lives under the configured output directory:
//!
//! ```text
//! <out>/dataset/           synthetic images and manifest (synth)
//! <out>/cache/             preprocessed vectors with checksums (prepare)
//! <out>/ensemble/          trained modules and indexes (train)
//! <out>/training_log.json  per-module diagnostics and wall times
//! <out>/matrices/          similarity and distance matrices (infer)
//! <out>/latency.json       per-query inference time
//! <out>/metrics/           metrics.json, recall.csv, plot_data.json (evaluate)
//! ```

mod config;
mod evaluate;
mod infer;
mod prepare;
mod report;
mod synth;
mod train;

pub use config::{EnsembleSettings, ExperimentConfig, SyntheticSettings};
pub use evaluate::{
    cmd_evaluate, commutativity_check, evaluate_distance, load_metrics, metrics_dir, recall_table_csv,
    CommutativityCheck, EvalInput, MethodMetrics, MetricsReport, RecallPoint, SeqRecall, ENSEMBLE_METHOD,
};
pub use infer::{cmd_infer, matrices_dir, member_matrix_name, query_seed, InferOutcome, LatencyEntry, LatencyLog};
pub use prepare::{cache_dir, cmd_prepare, load_prepared, PrepareOutcome};
pub use report::{
    build_report, cmd_report, default_report_seq_len, render_markdown, AblationRow, Report, SparsityPoint,
};
pub use synth::{cmd_synth, SynthOutcome};
pub use train::{cmd_train, ensemble_dir, JobFailure, ModuleLog, TrainOutcome, TrainState, TrainingLog};

use crate::error::{Error, Result};

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool
/// when `workers` is `None`.
pub(crate) fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
