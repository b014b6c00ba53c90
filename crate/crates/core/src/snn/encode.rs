//! Poisson rate coding of pixel intensities.

use rand::Rng;

use crate::error::{Error, Result};
use crate::params::SimulationParams;

/// Input spikes of one presentation: for every clock step, the indices of
/// the input neurons that fired.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeRaster {
    steps: Vec<Vec<u32>>,
}

impl SpikeRaster {
    pub fn steps(&self) -> &[Vec<u32>] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_spikes(&self) -> usize {
        self.steps.iter().map(Vec::len).sum()
    }

    /// Number of spikes emitted by each input neuron over the whole raster.
    pub fn counts_per_input(&self, k_p: usize) -> Vec<u32> {
        let mut counts = vec![0; k_p];
        for step in &self.steps {
            for &p in step {
                counts[p as usize] += 1;
            }
        }
        counts
    }
}

/// Bernoulli-process sampler shared by [`poisson_encode`] and the network
/// simulation so both consume the random stream identically.
///
/// Each input neuron fires independently with probability `p` per step. The
/// gaps between its spikes are therefore geometric, and are drawn directly
/// rather than testing every step.
#[derive(Debug, Clone)]
pub(crate) struct PoissonEncoder {
    // (input index, spike probability per step, ln(1 - p)), zero-rate inputs omitted
    active: Vec<(u32, f64, f64)>,
}

/// Input spikes of one presentation in compressed form: the spikes of step
/// `t` are `indices[offsets[t]..offsets[t + 1]]`.
#[derive(Debug, Clone, Default)]
pub(crate) struct CompactRaster {
    pub(crate) offsets: Vec<usize>,
    pub(crate) indices: Vec<u32>,
}

impl CompactRaster {
    #[inline]
    pub(crate) fn step(&self, t: usize) -> &[u32] {
        &self.indices[self.offsets[t]..self.offsets[t + 1]]
    }
}

impl PoissonEncoder {
    pub(crate) fn new(image: &[f64], params: &SimulationParams, rate_scale: f64) -> Result<Self> {
        if image.len() != params.k_p {
            return Err(Error::Dimension {
                what: "image length vs k_p",
                expected: params.k_p,
                actual: image.len(),
            });
        }
        let max_rate = params.max_input_rate * rate_scale;
        let mut active = Vec::with_capacity(image.len());
        for (p, &intensity) in image.iter().enumerate() {
            if !(0.0..=255.0).contains(&intensity) {
                return Err(Error::InvalidInput(format!(
                    "pixel {p} intensity {intensity} outside [0, 255]"
                )));
            }
            let rate_hz = intensity / 255.0 * max_rate;
            let prob = rate_hz * params.dt / 1000.0;
            if prob > 1.0 {
                return Err(Error::Config(format!(
                    "spike probability {prob} per step exceeds 1; dt = {} ms too large for {max_rate} Hz",
                    params.dt
                )));
            }
            if prob > 0.0 {
                active.push((p as u32, prob, (-prob).ln_1p()));
            }
        }
        Ok(Self { active })
    }

    /// Samples spikes for `n_steps` clock steps.
    pub(crate) fn sample<R: Rng>(&self, n_steps: usize, rng: &mut R) -> CompactRaster {
        let mut events: Vec<(u32, u32)> = Vec::new();
        for &(p, prob, log_q) in &self.active {
            let mut t = 0usize;
            loop {
                let gap = if prob >= 1.0 {
                    0
                } else {
                    // failures before the next success of a Bernoulli(prob) process
                    let u: f64 = rng.random();
                    let g = ((1.0 - u).ln() / log_q).floor();
                    if g >= (n_steps - t) as f64 {
                        break;
                    }
                    g as usize
                };
                t += gap;
                if t >= n_steps {
                    break;
                }
                events.push((t as u32, p));
                t += 1;
            }
        }
        let mut offsets = vec![0usize; n_steps + 1];
        for &(t, _) in &events {
            offsets[t as usize + 1] += 1;
        }
        for t in 0..n_steps {
            offsets[t + 1] += offsets[t];
        }
        let mut cursor = offsets.clone();
        let mut indices = vec![0u32; events.len()];
        for &(t, p) in &events {
            indices[cursor[t as usize]] = p;
            cursor[t as usize] += 1;
        }
        CompactRaster { offsets, indices }
    }
}

/// Encodes an image as independent per-pixel Bernoulli spike trains spanning
/// one presentation. Pixel `p` fires in each step with probability
/// `intensity/255 * max_input_rate * dt`.
pub fn poisson_encode<R: Rng>(
    image: &[f64],
    params: &SimulationParams,
    rng: &mut R,
) -> Result<SpikeRaster> {
    poisson_encode_scaled(image, params, 1.0, rng)
}

/// As [`poisson_encode`] with the maximum input rate multiplied by `rate_scale`.
pub fn poisson_encode_scaled<R: Rng>(
    image: &[f64],
    params: &SimulationParams,
    rate_scale: f64,
    rng: &mut R,
) -> Result<SpikeRaster> {
    let encoder = PoissonEncoder::new(image, params, rate_scale)?;
    let n = params.presentation_steps();
    let compact = encoder.sample(n, rng);
    let steps = (0..n).map(|t| compact.step(t).to_vec()).collect();
    Ok(SpikeRaster { steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn small_params() -> SimulationParams {
        SimulationParams {
            k_p: 4,
            k_e: 2,
            k_i: 2,
            ..Default::default()
        }
    }

    #[test]
    fn zero_image_is_silent() {
        let p = small_params();
        let raster = poisson_encode(&[0.0; 4], &p, &mut rng_from_seed(1)).unwrap();
        assert_eq!(raster.len(), 700);
        assert_eq!(raster.total_spikes(), 0);
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let p = small_params();
        let img = [255.0, 10.0, 128.0, 77.0];
        let a = poisson_encode(&img, &p, &mut rng_from_seed(9)).unwrap();
        let b = poisson_encode(&img, &p, &mut rng_from_seed(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let p = small_params();
        let err = poisson_encode(&[0.0; 3], &p, &mut rng_from_seed(1)).unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
    }

    #[test]
    fn excessive_rate_is_config_error() {
        let p = SimulationParams {
            dt: 20.0,
            presentation_duration: 360.0,
            ..small_params()
        };
        // 63.75 Hz * 20 ms = 1.275 > 1
        let err = poisson_encode(&[255.0; 4], &p, &mut rng_from_seed(1)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn out_of_range_intensity_rejected() {
        let p = small_params();
        assert!(poisson_encode(&[256.0, 0.0, 0.0, 0.0], &p, &mut rng_from_seed(1)).is_err());
        assert!(poisson_encode(&[f64::NAN, 0.0, 0.0, 0.0], &p, &mut rng_from_seed(1)).is_err());
    }
}
