//! Shows how summing distances along aligned diagonals rescues queries that
//! single-frame matching gets wrong.

use spikeplace::eval::{
    predictions_from_distance, recall_at_n, sequence_match, similarity_to_distance, Boundary, GroundTruth, Matrix,
};
use spikeplace::seed::rng_from_seed;

use rand::Rng;

fn main() -> spikeplace::Result<()> {
    let n = 40;
    let mut rng = rng_from_seed(3);
    // noisy similarity with a weak diagonal
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|q| rng.random_range(0.0..10.0) + if r == q { 4.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let distance = similarity_to_distance(&Matrix::from_rows(&rows)?)?;
    let gt = GroundTruth::identity(n);

    for boundary in [Boundary::TruncateRescale, Boundary::ValidOnly] {
        for l in [1, 2, 4, 8] {
            let d = sequence_match(&distance, l, boundary)?;
            let r1 = recall_at_n(&d, &gt, 1)?.recall;
            let r5 = recall_at_n(&d, &gt, 5)?.recall;
            println!("{boundary:>16} SL{l:<2} R@1 {r1:.3}  R@5 {r5:.3}");
        }
    }
    let seq = sequence_match(&distance, 4, Boundary::TruncateRescale)?;
    println!("first predictions at SL4: {:?}", &predictions_from_distance(&seq)[..10]);
    Ok(())
}
