//! Compares ensembles of Modular SNNs with and without seed diversity:
//! identical members, shuffled image order, and shuffled order plus
//! distinct initial weights.

use spikeplace::data::{generate_synthetic_dataset, PreprocessConfig};
use spikeplace::ensemble::{train_ensemble, EnsembleConfig};
use spikeplace::modular::{argmax, ModularTraining};
use spikeplace::SimulationParams;

fn main() -> spikeplace::Result<()> {
    let (mut reference, mut query) = generate_synthetic_dataset(30, 20.0, 0.15, 8)?.into_pair();
    reference.patch_normalize(&PreprocessConfig::default())?;
    query.patch_normalize(&PreprocessConfig::default())?;
    let params = SimulationParams {
        k_e: 100,
        k_i: 100,
        ..SimulationParams::default()
    };
    let training = ModularTraining {
        kappa: 15,
        epochs: 5,
        ..ModularTraining::default()
    };

    for (label, weights, shuffle) in [
        ("no randomization", false, false),
        ("shuffle only", false, true),
        ("weights + shuffle", true, true),
    ] {
        let config = EnsembleConfig::from_master(42, 3, weights, shuffle);
        let ensemble = train_ensemble(&reference, &params, &training, &config)?;
        let mut ensemble_hits = 0;
        let mut member_hits = vec![0; ensemble.members.len()];
        for q in 0..query.len() {
            let columns = ensemble.member_columns(query.image(q), q as u64)?;
            for (m, c) in columns.iter().enumerate() {
                member_hits[m] += usize::from(argmax(c) == q);
            }
            let fused = spikeplace::ensemble::fuse_member_columns(&columns);
            ensemble_hits += usize::from(argmax(&fused) == q);
        }
        let n = query.len() as f64;
        let members: Vec<String> = member_hits.iter().map(|h| format!("{:.2}", *h as f64 / n)).collect();
        println!(
            "{label:>18}: ensemble R@1 {:.2}, members [{}]",
            ensemble_hits as f64 / n,
            members.join(", ")
        );
    }
    Ok(())
}
