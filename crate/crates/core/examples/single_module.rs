//! Trains one spiking module on a handful of synthetic places and shows how
//! its excitatory neurons divide among them.

use spikeplace::data::{generate_synthetic_dataset, PreprocessConfig};
use spikeplace::modular::{argmax, module_response, train_module, ModuleSeeds};
use spikeplace::seed::rng_from_seed;
use spikeplace::SimulationParams;

fn main() -> spikeplace::Result<()> {
    let places = 5;
    let mut reference = generate_synthetic_dataset(places, 0.0, 0.0, 3)?.reference;
    reference.patch_normalize(&PreprocessConfig::default())?;
    let params = SimulationParams {
        k_e: 50,
        k_i: 50,
        ..SimulationParams::default()
    };
    let seeds = ModuleSeeds {
        weight_seed: 7,
        shuffle_seed: Some(8),
        sim_seed: 9,
    };
    let ids: Vec<usize> = (0..places).collect();
    let module = train_module(&reference, &ids, &params, 20, seeds)?;

    for p in &ids {
        let n = module.assignments.iter().filter(|&&a| a == *p).count();
        println!("place {p}: {n} neurons assigned");
    }
    println!("inert neurons: {}", module.inert_count());

    let mut rng = rng_from_seed(100);
    for &p in &ids {
        let response = module_response(&module, reference.image(p), &mut rng)?;
        println!("image {p} -> response {response:?}, predicted {}", module.trained_place_ids[argmax(&response)]);
    }
    Ok(())
}
