use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::matrix::{DistanceMatrix, Matrix};
use crate::error::{Error, Result};

/// How sequence matching treats cells whose diagonal window runs past the
/// end of either traverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Sum the `a` available cells and scale by `L_seq / a`.
    #[default]
    TruncateRescale,
    /// Only full windows are scored; truncated cells receive the largest
    /// full-window distance so they never win a match on their own.
    ValidOnly,
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "truncate-rescale" => Ok(Boundary::TruncateRescale),
            "valid-only" => Ok(Boundary::ValidOnly),
            other => Err(Error::Config(format!(
                "unknown boundary rule '{other}' (expected truncate-rescale or valid-only)"
            ))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::TruncateRescale => "truncate-rescale",
            Boundary::ValidOnly => "valid-only",
        })
    }
}

/// Sums distances along aligned diagonals of length `seq_len`:
/// `D_seq(r, q) = sum_{k=0}^{seq_len-1} D(r + k, q + k)`.
///
/// `seq_len == 1` returns the input unchanged.
pub fn sequence_match(
    distance: &DistanceMatrix,
    seq_len: usize,
    boundary: Boundary,
) -> Result<DistanceMatrix> {
    if seq_len == 0 {
        return Err(Error::Config("sequence length must be at least 1".into()));
    }
    if seq_len == 1 {
        return Ok(distance.clone());
    }
    let (rows, cols) = distance.shape();
    let d = distance.matrix();
    let mut out = Matrix::zeros(rows, cols);
    let mut valid_max: Option<f64> = None;
    for r in 0..rows {
        for q in 0..cols {
            let avail = seq_len.min(rows - r).min(cols - q);
            let sum: f64 = (0..avail).map(|k| d.get(r + k, q + k)).sum();
            let value = if avail == seq_len {
                valid_max = Some(valid_max.map_or(sum, |m: f64| m.max(sum)));
                sum
            } else {
                sum * seq_len as f64 / avail as f64
            };
            out.set(r, q, value);
        }
    }
    if boundary == Boundary::ValidOnly {
        let fill = valid_max.ok_or_else(|| {
            Error::Config(format!(
                "sequence length {seq_len} exceeds matrix shape {rows}x{cols}; no full window exists"
            ))
        })?;
        for r in 0..rows {
            for q in 0..cols {
                if r + seq_len > rows || q + seq_len > cols {
                    out.set(r, q, fill);
                }
            }
        }
    }
    DistanceMatrix::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum_grid(n: usize) -> DistanceMatrix {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| (i + j) as f64).collect())
            .collect();
        DistanceMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn length_one_is_identity() {
        let d = sum_grid(4);
        assert_eq!(sequence_match(&d, 1, Boundary::TruncateRescale).unwrap(), d);
        assert_eq!(sequence_match(&d, 1, Boundary::ValidOnly).unwrap(), d);
    }

    #[test]
    fn interior_cell_sums_diagonal() {
        let d = sum_grid(4);
        let s = sequence_match(&d, 2, Boundary::TruncateRescale).unwrap();
        assert_eq!(s.get(0, 0), 2.0);
        assert_eq!(s.get(1, 2), 3.0 + 5.0);
    }

    #[test]
    fn boundary_rescales_partial_window() {
        let d = sum_grid(4);
        let s = sequence_match(&d, 2, Boundary::TruncateRescale).unwrap();
        // only D(3,1) is available: 4 * 2 / 1
        assert_eq!(s.get(3, 1), 8.0);
    }

    #[test]
    fn valid_only_fills_with_worst_full_window() {
        let d = sum_grid(4);
        let s = sequence_match(&d, 2, Boundary::ValidOnly).unwrap();
        let worst = d.get(2, 2) + d.get(3, 3);
        assert_eq!(s.get(3, 0), worst);
        assert_eq!(s.get(0, 3), worst);
        assert_eq!(s.get(2, 2), worst);
        assert!(sequence_match(&d, 5, Boundary::ValidOnly).is_err());
    }

    #[test]
    fn zero_length_rejected() {
        assert!(sequence_match(&sum_grid(2), 0, Boundary::TruncateRescale).is_err());
    }

    #[test]
    fn boundary_parses() {
        assert_eq!("valid-only".parse::<Boundary>().unwrap(), Boundary::ValidOnly);
        assert_eq!(Boundary::TruncateRescale.to_string(), "truncate-rescale");
        assert!("centered".parse::<Boundary>().is_err());
    }
}
