//! Rate-codes a gradient image and compares empirical spike counts with the
//! expected `intensity / 255 * rate * duration`.

use spikeplace::seed::rng_from_seed;
use spikeplace::snn::poisson_encode;
use spikeplace::SimulationParams;

fn main() -> spikeplace::Result<()> {
    let params = SimulationParams {
        k_p: 6,
        ..SimulationParams::default()
    };
    let image = [0.0, 51.0, 102.0, 153.0, 204.0, 255.0];
    let trials = 2000;
    let mut rng = rng_from_seed(1);
    let mut counts = vec![0u64; image.len()];
    for _ in 0..trials {
        let raster = poisson_encode(&image, &params, &mut rng)?;
        for (c, n) in counts.iter_mut().zip(raster.counts_per_input(image.len())) {
            *c += u64::from(n);
        }
    }
    let seconds = params.presentation_duration / 1000.0;
    println!("intensity  expected  observed");
    for (i, &v) in image.iter().enumerate() {
        let expected = v / 255.0 * params.max_input_rate * seconds;
        let observed = counts[i] as f64 / trials as f64;
        println!("{v:>9.0}  {expected:>8.3}  {observed:>8.3}");
    }
    Ok(())
}
