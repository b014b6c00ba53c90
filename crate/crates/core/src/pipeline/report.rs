use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::evaluate::{load_metrics, MethodMetrics, MetricsReport, ENSEMBLE_METHOD};
use crate::error::{Error, Result};
use crate::eval::min_max_normalize;

/// R@1 of the four pipeline variants of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub run: String,
    pub dataset: String,
    pub seq_len: usize,
    pub modular: f64,
    pub modular_ensemble: f64,
    pub modular_sequence: f64,
    pub modular_ensemble_sequence: f64,
    pub mean_member: Option<f64>,
    /// Whether ensembling then sequence matching agreed with the reverse
    /// order at `seq_len`; `None` when no member matrices were evaluated.
    pub commutative: Option<bool>,
}

impl AblationRow {
    pub fn ensemble_gain(&self) -> f64 {
        self.modular_ensemble - self.modular
    }

    pub fn sequence_gain(&self) -> f64 {
        self.modular_sequence - self.modular
    }

    pub fn combined_gain(&self) -> f64 {
        self.modular_ensemble_sequence - self.modular
    }
}

/// One point of the sparsity versus sequence-gain scatter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityPoint {
    pub run: String,
    pub dataset: String,
    pub method: String,
    pub log_sparsity: f64,
    /// Min-max normalized over all points of the same dataset.
    pub normalized_log_sparsity: f64,
    /// R@1 at the report sequence length divided by single-frame R@1.
    pub sequence_gain_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub seq_len: usize,
    pub ablation: Vec<AblationRow>,
    pub sparsity: Vec<SparsityPoint>,
}

fn base_method(report: &MetricsReport) -> Option<&MethodMetrics> {
    report
        .method("member_00")
        .or_else(|| report.method(ENSEMBLE_METHOD))
        .or_else(|| report.methods.first())
}

fn r1(m: &MethodMetrics, seq_len: usize) -> Result<f64> {
    m.recall(seq_len, 1).ok_or_else(|| {
        Error::Data(format!(
            "method {} has no R@1 at sequence length {seq_len}",
            m.name
        ))
    })
}

/// Picks 4 when every run evaluated it, otherwise the largest sequence
/// length common to all runs.
pub fn default_report_seq_len(runs: &[(String, MetricsReport)]) -> usize {
    let mut common: Option<Vec<usize>> = None;
    for (_, r) in runs {
        common = Some(match common {
            None => r.seq_lengths.clone(),
            Some(c) => c.into_iter().filter(|l| r.seq_lengths.contains(l)).collect(),
        });
    }
    let common = common.unwrap_or_default();
    if common.contains(&4) {
        4
    } else {
        common.into_iter().max().unwrap_or(1)
    }
}

/// Aggregates evaluation runs into the four-condition ablation and the
/// sparsity scatter.
pub fn build_report(runs: &[(String, MetricsReport)], seq_len: usize) -> Result<Report> {
    let mut ablation = Vec::with_capacity(runs.len());
    let mut raw_points = Vec::new();
    for (run, report) in runs {
        let base = base_method(report)
            .ok_or_else(|| Error::Data(format!("run {run} contains no methods")))?;
        let ens = report.method(ENSEMBLE_METHOD).unwrap_or(base);
        let members: Vec<f64> = report
            .members()
            .map(|m| r1(m, 1))
            .collect::<Result<_>>()?;
        ablation.push(AblationRow {
            run: run.clone(),
            dataset: report.dataset.clone(),
            seq_len,
            modular: r1(base, 1)?,
            modular_ensemble: r1(ens, 1)?,
            modular_sequence: r1(base, seq_len)?,
            modular_ensemble_sequence: r1(ens, seq_len)?,
            mean_member: (!members.is_empty()).then(|| members.iter().sum::<f64>() / members.len() as f64),
            commutative: report
                .commutativity
                .iter()
                .find(|c| c.seq_len == seq_len)
                .map(|c| c.same_predictions && c.ensemble_then_sequence_r1 == c.sequence_then_ensemble_r1),
        });
        for m in &report.methods {
            if let Some(s) = &m.sparsity {
                let single = r1(m, 1)?;
                let seq = r1(m, seq_len)?;
                raw_points.push((run.clone(), report.dataset.clone(), m.name.clone(), s.log_mean_gap, (single > 0.0).then(|| seq / single)));
            }
        }
    }

    let mut by_dataset: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, p) in raw_points.iter().enumerate() {
        by_dataset.entry(p.1.as_str()).or_default().push(i);
    }
    let mut normalized = vec![0.0; raw_points.len()];
    for idx in by_dataset.values() {
        let values: Vec<f64> = idx.iter().map(|&i| raw_points[i].3).collect();
        for (&i, v) in idx.iter().zip(min_max_normalize(&values)) {
            normalized[i] = v;
        }
    }
    let sparsity = raw_points
        .into_iter()
        .zip(normalized)
        .map(|((run, dataset, method, log_sparsity, ratio), norm)| SparsityPoint {
            run,
            dataset,
            method,
            log_sparsity,
            normalized_log_sparsity: norm,
            sequence_gain_ratio: ratio,
        })
        .collect();
    Ok(Report {
        seq_len,
        ablation,
        sparsity,
    })
}

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

fn signed_pct(x: f64) -> String {
    format!("{:+.1}", 100.0 * x)
}

/// Markdown rendering of a report.
pub fn render_markdown(report: &Report) -> String {
    let l = report.seq_len;
    let mut out = String::new();
    writeln!(out, "# Ablation summary (R@1, %)\n").unwrap();
    writeln!(
        out,
        "| run | dataset | Mod | Mod+Ens | Mod+Seq (SL{l}) | Mod+Ens+Seq (SL{l}) | Δ Ens | Δ Seq | Δ Ens+Seq | mean member | commutative |"
    )
    .unwrap();
    writeln!(out, "|---|---|---|---|---|---|---|---|---|---|---|").unwrap();
    for r in &report.ablation {
        writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            r.run,
            r.dataset,
            pct(r.modular),
            pct(r.modular_ensemble),
            pct(r.modular_sequence),
            pct(r.modular_ensemble_sequence),
            signed_pct(r.ensemble_gain()),
            signed_pct(r.sequence_gain()),
            signed_pct(r.combined_gain()),
            r.mean_member.map_or("-".into(), pct),
            r.commutative.map_or("-", |c| if c { "yes" } else { "no" }),
        )
        .unwrap();
    }
    if !report.sparsity.is_empty() {
        writeln!(out, "\n# Correct-match sparsity\n").unwrap();
        writeln!(out, "| run | method | log sparsity | normalized | SL{l}/SL1 R@1 |").unwrap();
        writeln!(out, "|---|---|---|---|---|").unwrap();
        for p in &report.sparsity {
            writeln!(
                out,
                "| {} | {} | {:.4} | {:.4} | {} |",
                p.run,
                p.method,
                p.log_sparsity,
                p.normalized_log_sparsity,
                p.sequence_gain_ratio.map_or("-".into(), |r| format!("{r:.3}")),
            )
            .unwrap();
        }
    }
    out
}

fn ablation_csv(report: &Report) -> String {
    let mut out = String::from(
        "run,dataset,seq_len,mod,mod_ens,mod_seq,mod_ens_seq,delta_ens,delta_seq,delta_ens_seq,mean_member,commutative\n",
    );
    for r in &report.ablation {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.run,
            r.dataset,
            r.seq_len,
            r.modular,
            r.modular_ensemble,
            r.modular_sequence,
            r.modular_ensemble_sequence,
            r.ensemble_gain(),
            r.sequence_gain(),
            r.combined_gain(),
            r.mean_member.map_or(String::new(), |v| v.to_string()),
            r.commutative.map_or(String::new(), |v| v.to_string()),
        )
        .unwrap();
    }
    out
}

fn sparsity_csv(report: &Report) -> String {
    let mut out = String::from("run,dataset,method,log_sparsity,normalized_log_sparsity,sequence_gain_ratio\n");
    for p in &report.sparsity {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.run,
            p.dataset,
            p.method,
            p.log_sparsity,
            p.normalized_log_sparsity,
            p.sequence_gain_ratio.map_or(String::new(), |v| v.to_string()),
        )
        .unwrap();
    }
    out
}

/// Reads `metrics.json` files, builds the report and writes `report.md`,
/// `report.json`, `ablation.csv` and `sparsity_scatter.csv` into `out_dir`.
pub fn cmd_report(metrics: &[PathBuf], out_dir: &Path, seq_len: Option<usize>) -> Result<Report> {
    if metrics.is_empty() {
        return Err(Error::Config("report needs at least one metrics file".into()));
    }
    let runs = metrics
        .iter()
        .map(|p| {
            let label = p
                .parent()
                .and_then(Path::parent)
                .and_then(Path::file_name)
                .map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
            Ok((label, load_metrics(p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let seq_len = seq_len.unwrap_or_else(|| default_report_seq_len(&runs));
    let report = build_report(&runs, seq_len)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let write = |name: &str, text: String| {
        let path = out_dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    };
    write("report.md", render_markdown(&report))?;
    write("ablation.csv", ablation_csv(&report))?;
    write("sparsity_scatter.csv", sparsity_csv(&report))?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::json(out_dir, e))?;
    write("report.json", json)?;
    Ok(report)
}
