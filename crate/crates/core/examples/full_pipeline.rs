//! Runs the whole experiment pipeline on a small synthetic dataset:
//! synth, prepare, train, infer, evaluate and report. Pass an output
//! directory as the first argument to keep the artifacts.

use std::path::PathBuf;

use spikeplace::pipeline::{
    cmd_evaluate, cmd_infer, cmd_prepare, cmd_report, cmd_synth, cmd_train, metrics_dir, render_markdown,
    ExperimentConfig,
};
use spikeplace::SimulationParams;

fn main() -> spikeplace::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("spikeplace-pipeline-example"));

    let mut config = ExperimentConfig::default();
    config.synthetic.places = 30;
    config.kappa = 15;
    config.epochs = 5;
    config.params = SimulationParams {
        k_e: 100,
        k_i: 100,
        ..SimulationParams::default()
    };
    config.ensemble.members = 2;
    config.seq_lengths = vec![1, 2, 4];
    config.output_dir = out.clone();
    config.validate()?;

    cmd_synth(&config)?;
    let prepared = cmd_prepare(&config)?;
    println!("prepared {} reference / {} query images", prepared.reference_count, prepared.query_count);
    let trained = cmd_train(&config)?;
    println!("trained {} members with {} modules", trained.members, trained.modules);
    let inferred = cmd_infer(&config)?;
    println!("inference: {:.2} ms per query", inferred.latency.mean_seconds * 1e3);
    cmd_evaluate(&config, &[])?;

    let report = cmd_report(&[metrics_dir(&config).join("metrics.json")], &out.join("report"), None)?;
    print!("{}", render_markdown(&report));
    println!("artifacts in {}", out.display());
    Ok(())
}
