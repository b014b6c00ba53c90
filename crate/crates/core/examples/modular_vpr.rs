//! Trains a Modular SNN (several expert modules over disjoint place subsets)
//! on a synthetic traverse and localizes perturbed query images.

use spikeplace::data::{generate_synthetic_dataset, PreprocessConfig};
use spikeplace::modular::{train_modular, MemberSeeds, ModularTraining};
use spikeplace::SimulationParams;

fn main() -> spikeplace::Result<()> {
    let (mut reference, mut query) = generate_synthetic_dataset(40, 15.0, 0.1, 5)?.into_pair();
    reference.patch_normalize(&PreprocessConfig::default())?;
    query.patch_normalize(&PreprocessConfig::default())?;

    let params = SimulationParams::default();
    let training = ModularTraining {
        kappa: 20,
        epochs: 15,
        ..ModularTraining::default()
    };
    let seeds = MemberSeeds {
        weight_seed: 1,
        shuffle_seed: Some(2),
        theta_seed: 3,
    };
    let snn = train_modular(&reference, &params, &training, seeds)?;
    for (i, m) in snn.modules.iter().enumerate() {
        println!(
            "module {i}: {} places, {} hyperactive, {} inert",
            m.trained_place_ids.len(),
            m.hyperactive_count(),
            m.inert_count()
        );
    }
    println!("hyperactivity threshold {:.1}", snn.theta_threshold);

    let mut correct = 0;
    for q in 0..query.len() {
        if snn.predict(query.image(q), 1000 + q as u64)? == q {
            correct += 1;
        }
    }
    println!("R@1 = {:.2}", correct as f64 / query.len() as f64);
    Ok(())
}
