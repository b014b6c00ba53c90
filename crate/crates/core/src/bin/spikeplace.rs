use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spikeplace::eval::{Boundary, MatrixKind};
use spikeplace::pipeline::{
    cmd_evaluate, cmd_infer, cmd_prepare, cmd_report, cmd_synth, cmd_train, metrics_dir, EvalInput, ExperimentConfig,
};
use spikeplace::Result;

#[derive(Parser)]
#[command(name = "spikeplace", version, about = "Modular spiking networks for visual place recognition")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON). Built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed from which all other seeds are derived.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Sequence lengths, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    seq_lengths: Option<Vec<usize>>,
    /// Recall@N values, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    recall_n: Option<Vec<usize>>,
    /// Boundary rule of the sequence matcher: truncate-rescale or valid-only.
    #[arg(long, global = true)]
    boundary: Option<Boundary>,
    /// Ground-truth tolerance in places.
    #[arg(long, global = true)]
    gt_tolerance: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic reference/query dataset and its manifest.
    Synth,
    /// Preprocess the manifest images into the cache.
    Prepare,
    /// Train the ensemble of Modular SNNs.
    Train,
    /// Compute similarity and distance matrices for all queries.
    Infer,
    /// Compute recall@N and sparsity metrics.
    Evaluate {
        /// Extra matrix to evaluate, as NAME=PATH (JSON header or CSV).
        #[arg(long = "matrix", value_parser = parse_matrix_arg)]
        matrices: Vec<(String, PathBuf)>,
        /// How CSV matrices are interpreted.
        #[arg(long, default_value = "distance", value_parser = parse_kind)]
        csv_kind: MatrixKind,
    },
    /// Summarize one or more metrics files into the ablation report.
    Report {
        /// metrics.json files; defaults to the one in the output directory.
        metrics: Vec<PathBuf>,
        /// Sequence length of the sequence-matching conditions.
        #[arg(long)]
        seq_len: Option<usize>,
    },
}

fn parse_matrix_arg(s: &str) -> std::result::Result<(String, PathBuf), String> {
    let (name, path) = s.split_once('=').ok_or("expected NAME=PATH")?;
    Ok((name.to_string(), PathBuf::from(path)))
}

fn parse_kind(s: &str) -> std::result::Result<MatrixKind, String> {
    match s {
        "distance" => Ok(MatrixKind::Distance),
        "similarity" => Ok(MatrixKind::Similarity),
        _ => Err("expected distance or similarity".into()),
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    if let Some(workers) = common.workers {
        config.workers = Some(workers);
    }
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    if let Some(l) = &common.seq_lengths {
        config.seq_lengths = l.clone();
    }
    if let Some(n) = &common.recall_n {
        config.recall_n = n.clone();
    }
    if let Some(b) = common.boundary {
        config.boundary = b;
    }
    if let Some(t) = common.gt_tolerance {
        config.gt_tolerance = t;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli.common)?;
    match cli.command {
        Command::Synth => {
            let o = cmd_synth(&config)?;
            println!("wrote {} places; manifest {}", o.places, o.manifest.display());
        }
        Command::Prepare => {
            let o = cmd_prepare(&config)?;
            println!(
                "{} reference and {} query images {}",
                o.reference_count,
                o.query_count,
                if o.cache_hit { "already cached" } else { "cached" }
            );
        }
        Command::Train => {
            let o = cmd_train(&config)?;
            println!(
                "trained {} members / {} modules ({} resumed) into {}",
                o.members,
                o.modules,
                o.resumed,
                o.ensemble_dir.display()
            );
        }
        Command::Infer => {
            let o = cmd_infer(&config)?;
            println!(
                "{}x{} matrices in {}; {:.3} ms per query",
                o.shape.0,
                o.shape.1,
                o.matrices_dir.display(),
                o.latency.mean_seconds * 1e3
            );
        }
        Command::Evaluate { matrices, csv_kind } => {
            let extra: Vec<EvalInput> = matrices
                .into_iter()
                .map(|(name, path)| EvalInput { name, path, csv_kind })
                .collect();
            let report = cmd_evaluate(&config, &extra)?;
            print!("{}", spikeplace::pipeline::recall_table_csv(&report));
        }
        Command::Report { metrics, seq_len } => {
            let metrics = if metrics.is_empty() {
                vec![metrics_dir(&config).join("metrics.json")]
            } else {
                metrics
            };
            let report = cmd_report(&metrics, &config.output_dir.join("report"), seq_len)?;
            print!("{}", spikeplace::pipeline::render_markdown(&report));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SPIKEPLACE_LOG", "info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
