//! Saves a trained Modular SNN to disk, loads it back, and checks that the
//! reloaded network answers a probe query identically.

use spikeplace::data::{generate_synthetic_dataset, load_modular, save_modular, PreprocessConfig};
use spikeplace::modular::{train_modular, MemberSeeds, ModularTraining};
use spikeplace::SimulationParams;

fn main() -> spikeplace::Result<()> {
    let mut reference = generate_synthetic_dataset(8, 0.0, 0.0, 1)?.reference;
    reference.patch_normalize(&PreprocessConfig::default())?;
    let params = SimulationParams {
        k_e: 30,
        k_i: 30,
        ..SimulationParams::default()
    };
    let training = ModularTraining {
        kappa: 4,
        epochs: 3,
        ..ModularTraining::default()
    };
    let seeds = MemberSeeds {
        weight_seed: 5,
        shuffle_seed: None,
        theta_seed: 6,
    };
    let snn = train_modular(&reference, &params, &training, seeds)?;

    let dir = std::env::temp_dir().join("spikeplace-persistence-example");
    save_modular(&snn, &dir)?;
    let back = load_modular(&dir)?;
    println!("saved and reloaded {} modules from {}", back.modules.len(), dir.display());

    let a = snn.similarity_column(reference.image(2), 17)?;
    let b = back.similarity_column(reference.image(2), 17)?;
    println!("probe column {a:?}");
    println!("identical after reload: {}", a == b && back == snn);
    Ok(())
}
