use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::infer::{matrices_dir, member_matrix_name};
use super::prepare::load_prepared;
use crate::data::DatasetManifest;
use crate::error::{Error, Result};
use crate::eval::{
    correct_match_sparsity, load_matrix, load_matrix_csv, predictions_from_distance, recall_at_n,
    sequence_match, similarity_to_distance, Boundary, DistanceMatrix, GroundTruth, Matrix, MatrixKind,
    Sparsity,
};

/// Name the fused ensemble matrix is reported under.
pub const ENSEMBLE_METHOD: &str = "ensemble";

/// A matrix file to evaluate. JSON headers carry their own kind; `csv_kind`
/// says how to read a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalInput {
    pub name: String,
    pub path: PathBuf,
    pub csv_kind: MatrixKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallPoint {
    pub n: usize,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqRecall {
    pub seq_len: usize,
    pub recall: Vec<RecallPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub name: String,
    pub shape: [usize; 2],
    pub by_seq_len: Vec<SeqRecall>,
    /// Sparsity of correct matches without sequence matching.
    pub sparsity: Option<Sparsity>,
    pub sparsity_note: Option<String>,
    pub queries_without_ground_truth: Vec<usize>,
}

impl MethodMetrics {
    pub fn recall(&self, seq_len: usize, n: usize) -> Option<f64> {
        self.by_seq_len
            .iter()
            .find(|s| s.seq_len == seq_len)?
            .recall
            .iter()
            .find(|p| p.n == n)
            .map(|p| p.recall)
    }
}

/// Sequence matching applied after ensembling versus before it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutativityCheck {
    pub seq_len: usize,
    pub ensemble_then_sequence_r1: f64,
    pub sequence_then_ensemble_r1: f64,
    pub same_predictions: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config_hash: String,
    pub dataset: String,
    pub boundary: Boundary,
    pub gt_tolerance: usize,
    pub seq_lengths: Vec<usize>,
    pub recall_n: Vec<usize>,
    pub methods: Vec<MethodMetrics>,
    pub commutativity: Vec<CommutativityCheck>,
}

impl MetricsReport {
    pub fn method(&self, name: &str) -> Option<&MethodMetrics> {
        self.methods.iter().find(|m| m.name == name)
    }

    /// Members are the methods named `member_XX`.
    pub fn members(&self) -> impl Iterator<Item = &MethodMetrics> {
        self.methods.iter().filter(|m| m.name.starts_with("member_"))
    }
}

/// Recall@N for every sequence length plus the single-frame sparsity.
pub fn evaluate_distance(
    name: &str,
    distance: &DistanceMatrix,
    gt: &GroundTruth,
    seq_lengths: &[usize],
    recall_n: &[usize],
    boundary: Boundary,
) -> Result<MethodMetrics> {
    let mut by_seq_len = Vec::with_capacity(seq_lengths.len());
    let mut missing = Vec::new();
    for &l in seq_lengths {
        let d = sequence_match(distance, l, boundary)?;
        let mut recall = Vec::with_capacity(recall_n.len());
        for &n in recall_n {
            let r = recall_at_n(&d, gt, n)?;
            missing = r.queries_without_ground_truth;
            recall.push(RecallPoint { n, recall: r.recall });
        }
        by_seq_len.push(SeqRecall { seq_len: l, recall });
    }
    let (sparsity, sparsity_note) = match correct_match_sparsity(distance, gt) {
        Ok(s) => (Some(s), None),
        Err(Error::InsufficientMatches(k)) => (None, Some(format!("insufficient matches ({k} correct)"))),
        Err(e) => return Err(e),
    };
    Ok(MethodMetrics {
        name: name.to_string(),
        shape: [distance.rows(), distance.cols()],
        by_seq_len,
        sparsity,
        sparsity_note,
        queries_without_ground_truth: missing,
    })
}

/// Compares `seq(distance(sum S_m))` with `sum_m seq(distance(S_m))`.
pub fn commutativity_check(
    member_similarities: &[Matrix],
    gt: &GroundTruth,
    seq_len: usize,
    boundary: Boundary,
) -> Result<CommutativityCheck> {
    let first = member_similarities
        .first()
        .ok_or_else(|| Error::InvalidInput("no member matrices".into()))?;
    let mut fused = first.clone();
    for s in &member_similarities[1..] {
        fused = fused.add(s)?;
    }
    let ens_then_seq = sequence_match(&similarity_to_distance(&fused)?, seq_len, boundary)?;

    let mut summed: Option<Matrix> = None;
    for s in member_similarities {
        let d = sequence_match(&similarity_to_distance(s)?, seq_len, boundary)?.into_matrix();
        summed = Some(match summed {
            None => d,
            Some(acc) => acc.add(&d)?,
        });
    }
    let seq_then_ens = DistanceMatrix::new(summed.expect("at least one member"))?;
    Ok(CommutativityCheck {
        seq_len,
        ensemble_then_sequence_r1: recall_at_n(&ens_then_seq, gt, 1)?.recall,
        sequence_then_ensemble_r1: recall_at_n(&seq_then_ens, gt, 1)?.recall,
        same_predictions: predictions_from_distance(&ens_then_seq) == predictions_from_distance(&seq_then_ens),
    })
}

fn read_input(input: &EvalInput) -> Result<DistanceMatrix> {
    let is_csv = input
        .path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let (kind, matrix) = if is_csv {
        (input.csv_kind, load_matrix_csv(&input.path)?)
    } else {
        let (header, matrix) = load_matrix(&input.path)?;
        (header.kind, matrix)
    };
    match kind {
        MatrixKind::Similarity => similarity_to_distance(&matrix),
        MatrixKind::Distance => DistanceMatrix::new(matrix),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn metrics_dir(config: &ExperimentConfig) -> PathBuf {
    config.output_dir.join("metrics")
}

/// Recall table with one row per method and one column per (SL, N).
pub fn recall_table_csv(report: &MetricsReport) -> String {
    let mut out = String::from("method");
    for l in &report.seq_lengths {
        for n in &report.recall_n {
            write!(out, ",SL{l}_R@{n}").expect("write to String");
        }
    }
    out.push_str(",log_sparsity\n");
    for m in &report.methods {
        out.push_str(&m.name);
        for s in &m.by_seq_len {
            for p in &s.recall {
                write!(out, ",{}", p.recall).expect("write to String");
            }
        }
        match &m.sparsity {
            Some(s) => writeln!(out, ",{}", s.log_mean_gap).expect("write to String"),
            None => out.push_str(",\n"),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PlotSeries {
    method: String,
    seq_lengths: Vec<usize>,
    recall_at_1: Vec<Option<f64>>,
    log_sparsity: Option<f64>,
}

/// Evaluates the matrices written by `infer` (the fused ensemble and every
/// member) plus any `extra` matrices, and writes `metrics.json`,
/// `recall.csv` and `plot_data.json`.
pub fn cmd_evaluate(config: &ExperimentConfig, extra: &[EvalInput]) -> Result<MetricsReport> {
    config.validate()?;
    let (reference, query) = load_prepared(config)?;
    let gt = GroundTruth::from_targets(reference.len(), &query.ground_truth, config.gt_tolerance)?;
    let dataset = DatasetManifest::load(&config.manifest_path())
        .map(|m| m.name)
        .unwrap_or_else(|_| "unknown".into());
    let dir = matrices_dir(config);

    let mut inputs = Vec::new();
    let ensemble_path = dir.join("distance.json");
    if ensemble_path.is_file() {
        inputs.push(EvalInput {
            name: ENSEMBLE_METHOD.into(),
            path: ensemble_path,
            csv_kind: MatrixKind::Distance,
        });
    }
    let mut member_paths = Vec::new();
    for m in 0.. {
        let path = dir.join(member_matrix_name(m));
        if !path.is_file() {
            break;
        }
        inputs.push(EvalInput {
            name: format!("member_{m:02}"),
            path: path.clone(),
            csv_kind: MatrixKind::Similarity,
        });
        member_paths.push(path);
    }
    inputs.extend(extra.iter().cloned());
    if inputs.is_empty() {
        return Err(Error::Data(format!(
            "no matrices to evaluate in {} (run infer first)",
            dir.display()
        )));
    }

    let mut methods = Vec::with_capacity(inputs.len());
    for input in &inputs {
        let d = read_input(input)?;
        if d.shape() != gt.shape() {
            return Err(Error::Dimension {
                what: "matrix element count vs ground truth",
                expected: gt.shape().0 * gt.shape().1,
                actual: d.rows() * d.cols(),
            });
        }
        methods.push(evaluate_distance(
            &input.name,
            &d,
            &gt,
            &config.seq_lengths,
            &config.recall_n,
            config.boundary,
        )?);
    }

    let mut commutativity = Vec::new();
    if !member_paths.is_empty() {
        let sims = member_paths
            .iter()
            .map(|p| load_matrix(p).map(|(_, m)| m))
            .collect::<Result<Vec<_>>>()?;
        for &l in &config.seq_lengths {
            commutativity.push(commutativity_check(&sims, &gt, l, config.boundary)?);
        }
    }

    let report = MetricsReport {
        config_hash: config.hash(),
        dataset,
        boundary: config.boundary,
        gt_tolerance: config.gt_tolerance,
        seq_lengths: config.seq_lengths.clone(),
        recall_n: config.recall_n.clone(),
        methods,
        commutativity,
    };

    let out = metrics_dir(config);
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::json(&out, e))?;
    write_text(&out.join("metrics.json"), &json)?;
    write_text(&out.join("recall.csv"), &recall_table_csv(&report))?;
    let series: Vec<PlotSeries> = report
        .methods
        .iter()
        .map(|m| PlotSeries {
            method: m.name.clone(),
            seq_lengths: report.seq_lengths.clone(),
            recall_at_1: report.seq_lengths.iter().map(|&l| m.recall(l, 1)).collect(),
            log_sparsity: m.sparsity.as_ref().map(|s| s.log_mean_gap),
        })
        .collect();
    let plot = serde_json::json!({
        "config_hash": report.config_hash,
        "dataset": report.dataset,
        "series": series,
    });
    let plot_text = serde_json::to_string_pretty(&plot).map_err(|e| Error::json(&out, e))?;
    write_text(&out.join("plot_data.json"), &plot_text)?;
    log::info!("wrote metrics for {} methods to {}", report.methods.len(), out.display());
    Ok(report)
}

/// Loads a `metrics.json` written by [`cmd_evaluate`].
pub fn load_metrics(path: &Path) -> Result<MetricsReport> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::json(path, e))
}
