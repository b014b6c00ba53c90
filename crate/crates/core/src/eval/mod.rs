//! Distance matrices, sequence matching and retrieval metrics.
//!
//! Matrices are laid out with reference places along rows and queries along
//! columns, row-major.

mod io;
mod matrix;
mod metrics;
mod sequence;

pub use io::{load_matrix, load_matrix_csv, save_matrix, save_matrix_csv, MatrixHeader, MatrixKind};
pub use matrix::{similarity_to_distance, DistanceMatrix, Matrix};
pub use metrics::{
    correct_match_sparsity, min_max_normalize, predictions_from_distance, recall_at_n,
    GroundTruth, RecallResult, Sparsity,
};
pub use sequence::{sequence_match, Boundary};
