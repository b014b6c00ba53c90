//! Writes a third-party distance matrix in both supported formats, reads it
//! back, and scores it with recall@N and correct-match sparsity.

use spikeplace::eval::{
    correct_match_sparsity, load_matrix, load_matrix_csv, recall_at_n, save_matrix, save_matrix_csv, DistanceMatrix,
    GroundTruth, Matrix, MatrixKind,
};

fn main() -> spikeplace::Result<()> {
    let n = 12;
    // correct on even queries, off by one on odd ones
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|q| {
                    let target = if q % 2 == 0 { q } else { (q + 1) % n };
                    (r as f64 - target as f64).abs()
                })
                .collect()
        })
        .collect();
    let matrix = Matrix::from_rows(&rows)?;

    let dir = std::env::temp_dir().join("spikeplace-evaluate-example");
    std::fs::create_dir_all(&dir).map_err(|source| spikeplace::Error::Io {
        path: dir.clone(),
        source,
    })?;
    let header = save_matrix(&dir.join("baseline.json"), &matrix, MatrixKind::Distance, "baseline", None)?;
    save_matrix_csv(&dir.join("baseline.csv"), &matrix)?;
    println!("wrote {:?} matrix, sha256 {}", header.shape, &header.sha256[..12]);

    let (_, from_json) = load_matrix(&dir.join("baseline.json"))?;
    let from_csv = load_matrix_csv(&dir.join("baseline.csv"))?;
    assert_eq!(from_json, from_csv);

    let d = DistanceMatrix::new(from_json)?;
    for tolerance in [0, 1] {
        let targets: Vec<Option<usize>> = (0..n).map(Some).collect();
        let gt = GroundTruth::from_targets(n, &targets, tolerance)?;
        let recalls: Vec<String> = [1, 2, 5]
            .iter()
            .map(|&k| recall_at_n(&d, &gt, k).map(|r| format!("R@{k} {:.2}", r.recall)))
            .collect::<spikeplace::Result<_>>()?;
        let sparsity = correct_match_sparsity(&d, &gt)?;
        println!(
            "tolerance {tolerance}: {}; mean gap {:.2} (ln {:.3})",
            recalls.join(", "),
            sparsity.mean_gap,
            sparsity.log_mean_gap
        );
    }
    Ok(())
}
