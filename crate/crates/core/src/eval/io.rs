use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::data::{f64s_from_le_bytes, f64s_to_le_bytes, sha256_hex, FORMAT_VERSION};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Similarity,
    Distance,
}

/// JSON header stored next to a raw little-endian f64 payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixHeader {
    pub format_version: u32,
    pub kind: MatrixKind,
    /// Name of the method that produced the matrix.
    pub method: String,
    /// `[rows, cols]`.
    pub shape: [usize; 2],
    pub row_axis: String,
    pub col_axis: String,
    pub config_hash: Option<String>,
    /// Payload file name, relative to the header.
    pub data_file: String,
    pub sha256: String,
}

/// Writes `path` (JSON header) and a sibling `.bin` payload.
pub fn save_matrix(
    path: &Path,
    matrix: &Matrix,
    kind: MatrixKind,
    method: &str,
    config_hash: Option<&str>,
) -> Result<MatrixHeader> {
    let bin_path = path.with_extension("bin");
    let data_file = bin_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::artifact(path, "matrix path has no file name"))?
        .to_string();
    let bytes = f64s_to_le_bytes(matrix.as_slice());
    let header = MatrixHeader {
        format_version: FORMAT_VERSION,
        kind,
        method: method.to_string(),
        shape: [matrix.rows(), matrix.cols()],
        row_axis: "reference".into(),
        col_axis: "query".into(),
        config_hash: config_hash.map(str::to_string),
        data_file,
        sha256: sha256_hex(&bytes),
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(&bin_path, &bytes).map_err(|e| Error::io(&bin_path, e))?;
    let json = serde_json::to_vec_pretty(&header).map_err(|e| Error::json(path, e))?;
    fs::write(path, json).map_err(|e| Error::io(path, e))?;
    Ok(header)
}

/// Reads a header written by [`save_matrix`] and verifies its payload.
pub fn load_matrix(path: &Path) -> Result<(MatrixHeader, Matrix)> {
    let text = fs::read(path).map_err(|e| Error::io(path, e))?;
    let header: MatrixHeader = serde_json::from_slice(&text).map_err(|e| Error::json(path, e))?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::artifact(
            path,
            format!(
                "format version {} unsupported (expected {FORMAT_VERSION})",
                header.format_version
            ),
        ));
    }
    let bin_path = path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&header.data_file);
    let bytes = fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
    if sha256_hex(&bytes) != header.sha256 {
        return Err(Error::artifact(&bin_path, "checksum mismatch"));
    }
    let [rows, cols] = header.shape;
    let values = f64s_from_le_bytes(&bytes)
        .filter(|v| v.len() == rows * cols)
        .ok_or_else(|| Error::artifact(&bin_path, "payload length does not match shape"))?;
    let matrix = Matrix::from_vec(rows, cols, values)?;
    Ok((header, matrix))
}

/// Writes one comma-separated line per reference row.
pub fn save_matrix_csv(path: &Path, matrix: &Matrix) -> Result<()> {
    let mut out = String::new();
    for r in 0..matrix.rows() {
        for c in 0..matrix.cols() {
            if c > 0 {
                out.push(',');
            }
            write!(out, "{}", matrix.get(r, c)).expect("writing to a String");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_matrix_csv(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|cell| {
                cell.trim().parse::<f64>().map_err(|e| {
                    Error::Data(format!("{}:{}: bad number '{cell}': {e}", path.display(), i + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Matrix::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m = Matrix::from_rows(&[vec![0.1, 1e-300], vec![-2.5, 7.0 / 3.0]]).unwrap();
        let path = dir.path().join("s.json");
        save_matrix(&path, &m, MatrixKind::Similarity, "toy", Some("abc")).unwrap();
        let (h, back) = load_matrix(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(h.config_hash.as_deref(), Some("abc"));
        assert_eq!(h.shape, [2, 2]);
    }

    #[test]
    fn corrupted_payload_detected() {
        let dir = tempfile::tempdir().unwrap();
        let m = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let path = dir.path().join("d.json");
        save_matrix(&path, &m, MatrixKind::Distance, "toy", None).unwrap();
        let bin = dir.path().join("d.bin");
        let mut bytes = fs::read(&bin).unwrap();
        bytes[3] ^= 0x40;
        fs::write(&bin, bytes).unwrap();
        assert!(matches!(load_matrix(&path), Err(Error::Artifact { .. })));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m = Matrix::from_rows(&[vec![0.1, 2.0, 1.0 / 3.0], vec![4.0, 5e-7, 6.0]]).unwrap();
        let path = dir.path().join("m.csv");
        save_matrix_csv(&path, &m).unwrap();
        assert_eq!(load_matrix_csv(&path).unwrap(), m);
    }
}
