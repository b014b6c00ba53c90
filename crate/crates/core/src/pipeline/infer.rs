use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::prepare::load_prepared;
use super::train::ensemble_dir;
use super::with_workers;
use crate::data::load_ensemble;
use crate::ensemble::fuse_member_columns;
use crate::error::{Error, Result};
use crate::eval::{save_matrix, similarity_to_distance, Matrix, MatrixKind};
use crate::seed::derive_seed;

/// Wall-clock cost of each query, in presentation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyLog {
    pub module_count: usize,
    pub members: usize,
    pub workers: usize,
    pub entries: Vec<LatencyEntry>,
    pub mean_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyEntry {
    pub query: usize,
    pub seconds: f64,
    /// Queries completed so far, this one included.
    pub cumulative: usize,
}

/// Result of [`cmd_infer`].
#[derive(Debug, Clone, PartialEq)]
pub struct InferOutcome {
    pub matrices_dir: PathBuf,
    pub shape: (usize, usize),
    pub latency: LatencyLog,
}

pub fn matrices_dir(config: &ExperimentConfig) -> PathBuf {
    config.output_dir.join("matrices")
}

/// Seed of the Poisson input for query `q`, shared by every module and
/// member.
pub fn query_seed(master: u64, q: usize) -> u64 {
    derive_seed(master, "query", &[q as u64])
}

pub fn member_matrix_name(member: usize) -> String {
    format!("member_{member:02}_similarity.json")
}

/// Streams every query through the trained ensemble and writes the fused
/// similarity matrix, its distance matrix, each member's similarity matrix
/// and a per-query latency log.
pub fn cmd_infer(config: &ExperimentConfig) -> Result<InferOutcome> {
    config.validate()?;
    let (reference, query) = load_prepared(config)?;
    let (ensemble, trained_hash) = load_ensemble(&ensemble_dir(config))?;
    let hash = config.hash();
    if trained_hash.as_deref() != Some(hash.as_str()) {
        log::warn!("ensemble was trained under a different configuration hash");
    }
    if ensemble.place_count() != reference.len() {
        return Err(Error::Dimension {
            what: "ensemble place count vs reference set",
            expected: reference.len(),
            actual: ensemble.place_count(),
        });
    }
    let k_p = ensemble.members.first().map_or(0, |m| m.params.k_p);
    if query.pixel_count() != Some(k_p) {
        return Err(Error::Dimension {
            what: "query image size vs ensemble input size",
            expected: k_p,
            actual: query.pixel_count().unwrap_or(0),
        });
    }

    let members = ensemble.members.len();
    let (columns, latency, workers) = with_workers(config.workers, || {
        let mut columns: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(query.len()); members];
        let mut entries = Vec::with_capacity(query.len());
        for q in 0..query.len() {
            let t0 = Instant::now();
            let cols = ensemble.member_columns(query.image(q), query_seed(config.master_seed, q))?;
            entries.push(LatencyEntry {
                query: q,
                seconds: t0.elapsed().as_secs_f64(),
                cumulative: q + 1,
            });
            for (m, c) in cols.into_iter().enumerate() {
                columns[m].push(c);
            }
        }
        Ok::<_, Error>((columns, entries, rayon::current_num_threads()))
    })??;

    let dir = matrices_dir(config);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let member_matrices = columns
        .iter()
        .map(|cols| Matrix::from_columns(cols))
        .collect::<Result<Vec<_>>>()?;
    let fused_columns: Vec<Vec<f64>> = (0..query.len())
        .map(|q| fuse_member_columns(&columns.iter().map(|c| c[q].clone()).collect::<Vec<_>>()))
        .collect();
    let similarity = Matrix::from_columns(&fused_columns)?;
    let distance = similarity_to_distance(&similarity)?;
    let method = &config.method;
    save_matrix(&dir.join("similarity.json"), &similarity, MatrixKind::Similarity, method, Some(&hash))?;
    save_matrix(&dir.join("distance.json"), distance.matrix(), MatrixKind::Distance, method, Some(&hash))?;
    for (m, matrix) in member_matrices.iter().enumerate() {
        let name = format!("{method}/member_{m:02}");
        save_matrix(&dir.join(member_matrix_name(m)), matrix, MatrixKind::Similarity, &name, Some(&hash))?;
    }

    let mean_seconds = if latency.is_empty() {
        0.0
    } else {
        latency.iter().map(|e| e.seconds).sum::<f64>() / latency.len() as f64
    };
    let log = LatencyLog {
        module_count: ensemble.module_count(),
        members,
        workers,
        entries: latency,
        mean_seconds,
    };
    let path = config.output_dir.join("latency.json");
    let text = serde_json::to_string_pretty(&log).map_err(|e| Error::json(&path, e))?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    log::info!(
        "inferred {} queries against {} places, {:.3} ms per query",
        query.len(),
        reference.len(),
        mean_seconds * 1e3
    );
    Ok(InferOutcome {
        matrices_dir: dir,
        shape: similarity.shape(),
        latency: log,
    })
}
