use serde::{Deserialize, Serialize};

use super::matrix::DistanceMatrix;
use crate::error::{Error, Result};

/// Binary ground-truth grid with reference rows and query columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    rows: usize,
    cols: usize,
    matches: Vec<bool>,
}

impl GroundTruth {
    /// Marks reference rows within `tolerance` places of each query's target.
    /// Queries without a target get an empty column.
    pub fn from_targets(rows: usize, targets: &[Option<usize>], tolerance: usize) -> Result<Self> {
        let cols = targets.len();
        let mut matches = vec![false; rows * cols];
        for (q, target) in targets.iter().enumerate() {
            let Some(t) = *target else { continue };
            if t >= rows {
                return Err(Error::Data(format!(
                    "ground truth of query {q} points to reference {t}, but only {rows} exist"
                )));
            }
            let lo = t.saturating_sub(tolerance);
            let hi = (t + tolerance).min(rows - 1);
            for r in lo..=hi {
                matches[r * cols + q] = true;
            }
        }
        Ok(Self { rows, cols, matches })
    }

    /// Query `q` matches reference `q`.
    pub fn identity(n: usize) -> Self {
        let targets: Vec<Option<usize>> = (0..n).map(Some).collect();
        Self::from_targets(n, &targets, 0).expect("identity targets are in range")
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut matches = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::Dimension {
                    what: "ground truth row length",
                    expected: cols,
                    actual: row.len(),
                });
            }
            matches.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            matches,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn is_match(&self, row: usize, col: usize) -> bool {
        self.matches[row * self.cols + col]
    }

    pub fn has_match(&self, col: usize) -> bool {
        (0..self.rows).any(|r| self.is_match(r, col))
    }

    fn check_shape(&self, distance: &DistanceMatrix) -> Result<()> {
        if distance.rows() != self.rows {
            return Err(Error::Dimension {
                what: "ground truth rows vs distance rows",
                expected: distance.rows(),
                actual: self.rows,
            });
        }
        if distance.cols() != self.cols {
            return Err(Error::Dimension {
                what: "ground truth columns vs distance columns",
                expected: distance.cols(),
                actual: self.cols,
            });
        }
        Ok(())
    }
}

/// Recall@N together with the queries that had no ground-truth entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallResult {
    pub n: usize,
    pub recall: f64,
    pub hits: usize,
    pub queries: usize,
    pub queries_without_ground_truth: Vec<usize>,
}

/// Fraction of queries whose `n` nearest references (ties resolved towards
/// the lower row index) contain at least one true match.
pub fn recall_at_n(distance: &DistanceMatrix, gt: &GroundTruth, n: usize) -> Result<RecallResult> {
    gt.check_shape(distance)?;
    let (rows, cols) = distance.shape();
    if n == 0 || n > rows {
        return Err(Error::Config(format!(
            "recall N = {n} outside [1, {rows}]"
        )));
    }
    let mut hits = 0;
    let mut missing = Vec::new();
    for q in 0..cols {
        // best-ranked true match: smallest distance, then lowest row
        let best = (0..rows)
            .filter(|&r| gt.is_match(r, q))
            .min_by(|&a, &b| distance.get(a, q).total_cmp(&distance.get(b, q)).then(a.cmp(&b)));
        let Some(g) = best else {
            missing.push(q);
            continue;
        };
        let dg = distance.get(g, q);
        let ahead = (0..rows)
            .filter(|&r| {
                let d = distance.get(r, q);
                d < dg || (d == dg && r < g)
            })
            .count();
        if ahead < n {
            hits += 1;
        }
    }
    Ok(RecallResult {
        n,
        recall: if cols == 0 { 0.0 } else { hits as f64 / cols as f64 },
        hits,
        queries: cols,
        queries_without_ground_truth: missing,
    })
}

/// Nearest reference row for every query, lowest index on ties.
pub fn predictions_from_distance(distance: &DistanceMatrix) -> Vec<usize> {
    let (rows, cols) = distance.shape();
    (0..cols)
        .map(|q| {
            let mut best = 0;
            for r in 1..rows {
                if distance.get(r, q) < distance.get(best, q) {
                    best = r;
                }
            }
            best
        })
        .collect()
}

/// Spacing of correctly matched queries along the query traverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sparsity {
    pub correct_queries: usize,
    pub mean_gap: f64,
    pub log_mean_gap: f64,
}

/// Mean index gap between consecutive correctly matched queries and its
/// natural logarithm.
pub fn correct_match_sparsity(distance: &DistanceMatrix, gt: &GroundTruth) -> Result<Sparsity> {
    gt.check_shape(distance)?;
    let correct: Vec<usize> = predictions_from_distance(distance)
        .into_iter()
        .enumerate()
        .filter(|&(q, r)| gt.is_match(r, q))
        .map(|(q, _)| q)
        .collect();
    sparsity_of_indices(&correct)
}

pub(crate) fn sparsity_of_indices(correct: &[usize]) -> Result<Sparsity> {
    if correct.len() < 2 {
        return Err(Error::InsufficientMatches(correct.len()));
    }
    let span = (correct[correct.len() - 1] - correct[0]) as f64;
    let mean_gap = span / (correct.len() - 1) as f64;
    Ok(Sparsity {
        correct_queries: correct.len(),
        mean_gap,
        log_mean_gap: mean_gap.ln(),
    })
}

/// Min-max normalizes `values` over the population given. A population with
/// no spread maps to all zeros.
pub fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    values
        .iter()
        .map(|&v| if spread > 0.0 { (v - lo) / spread } else { 0.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dm(rows: &[Vec<f64>]) -> DistanceMatrix {
        DistanceMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn hand_recall_three_by_three() {
        let d = dm(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 0.0], vec![2.0, 2.0, 1.0]]);
        let r = recall_at_n(&d, &GroundTruth::identity(3), 1).unwrap();
        assert_eq!(r.hits, 2);
        assert!((r.recall - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(recall_at_n(&d, &GroundTruth::identity(3), 3).unwrap().recall, 1.0);
    }

    #[test]
    fn ties_favor_lower_rows() {
        let d = dm(&[vec![1.0], vec![1.0], vec![1.0]]);
        let gt = GroundTruth::from_targets(3, &[Some(2)], 0).unwrap();
        assert_eq!(recall_at_n(&d, &gt, 2).unwrap().hits, 0);
        assert_eq!(recall_at_n(&d, &gt, 3).unwrap().hits, 1);
        assert_eq!(predictions_from_distance(&d), vec![0]);
    }

    #[test]
    fn missing_ground_truth_reported() {
        let d = dm(&[vec![0.0, 0.0], vec![1.0, 1.0]]);
        let gt = GroundTruth::from_targets(2, &[Some(0), None], 0).unwrap();
        let r = recall_at_n(&d, &gt, 2).unwrap();
        assert_eq!(r.recall, 0.5);
        assert_eq!(r.queries_without_ground_truth, vec![1]);
    }

    #[test]
    fn tolerance_widens_band() {
        let gt = GroundTruth::from_targets(5, &[Some(0), Some(4)], 1).unwrap();
        assert!(gt.is_match(1, 0) && !gt.is_match(2, 0));
        assert!(gt.is_match(3, 1) && gt.is_match(4, 1));
        assert!(GroundTruth::from_targets(2, &[Some(2)], 0).is_err());
    }

    #[test]
    fn invalid_n_rejected() {
        let d = dm(&[vec![0.0]]);
        let gt = GroundTruth::identity(1);
        assert!(recall_at_n(&d, &gt, 0).is_err());
        assert!(recall_at_n(&d, &gt, 2).is_err());
    }

    #[test]
    fn sparsity_examples() {
        assert_eq!(sparsity_of_indices(&[2, 5, 9]).unwrap().mean_gap, 3.5);
        assert_eq!(sparsity_of_indices(&[0, 2, 4, 6]).unwrap().mean_gap, 2.0);
        assert!(matches!(sparsity_of_indices(&[3]), Err(Error::InsufficientMatches(1))));
    }

    #[test]
    fn perfect_matcher_has_unit_sparsity() {
        let n = 6;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|r| (0..n).map(|q| if r == q { 0.0 } else { 1.0 }).collect())
            .collect();
        let s = correct_match_sparsity(&dm(&rows), &GroundTruth::identity(n)).unwrap();
        assert_eq!(s.mean_gap, 1.0);
        assert_eq!(s.log_mean_gap, 0.0);
    }

    #[test]
    fn normalization_population() {
        assert_eq!(min_max_normalize(&[1.0, 3.0, 2.0]), vec![0.0, 1.0, 0.5]);
        assert_eq!(min_max_normalize(&[2.0, 2.0]), vec![0.0, 0.0]);
    }
}
