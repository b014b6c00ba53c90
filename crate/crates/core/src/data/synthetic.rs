//! Seeded synthetic traverses for desk-scale experiments.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::dataset::PlaceDataset;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};

pub const SYNTH_SIDE: usize = 28;
const SMOOTHING_SIGMA: f64 = 2.0;

/// Square block of a query image overwritten by an occluder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Occlusion {
    pub x: usize,
    pub y: usize,
    pub side: usize,
}

impl Occlusion {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.side && y >= self.y && y < self.y + self.side
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub reference: PlaceDataset,
    pub query: PlaceDataset,
    /// Occluder of each query image, `None` when occlusion is disabled.
    pub occlusions: Vec<Option<Occlusion>>,
}

impl SyntheticDataset {
    pub fn into_pair(self) -> (PlaceDataset, PlaceDataset) {
        (self.reference, self.query)
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

fn blur(img: &[f64], side: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let reflect = |i: isize| -> usize {
        let n = side as isize;
        let mut i = i;
        if i < 0 {
            i = -i - 1;
        }
        if i >= n {
            i = 2 * n - i - 1;
        }
        i.clamp(0, n - 1) as usize
    };
    let mut tmp = vec![0.0; side * side];
    for y in 0..side {
        for x in 0..side {
            tmp[y * side + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * img[y * side + reflect(x as isize + k as isize - r)])
                .sum();
        }
    }
    let mut out = vec![0.0; side * side];
    for y in 0..side {
        for x in 0..side {
            out[y * side + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * tmp[reflect(y as isize + k as isize - r) * side + x])
                .sum();
        }
    }
    out
}

/// A smoothed random pattern stretched to span [0, 255].
fn low_frequency_pattern(seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    let noise: Vec<f64> = (0..SYNTH_SIDE * SYNTH_SIDE)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let smooth = blur(&noise, SYNTH_SIDE, &gaussian_kernel(SMOOTHING_SIGMA));
    let lo = smooth.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = smooth.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    smooth.iter().map(|v| (v - lo) / (hi - lo) * 255.0).collect()
}

/// Generates `n_places` reference patterns and an index-aligned query set.
///
/// Each query is its reference image plus i.i.d. Gaussian pixel noise of
/// standard deviation `noise_sigma` (0–255 scale, clamped), with a square
/// block covering about `occlusion_fraction` of the pixels replaced by a
/// random uniform gray level. The output is a pure function of the arguments.
pub fn generate_synthetic_dataset(
    n_places: usize,
    noise_sigma: f64,
    occlusion_fraction: f64,
    seed: u64,
) -> Result<SyntheticDataset> {
    if n_places == 0 {
        return Err(Error::InvalidInput("n_places must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&occlusion_fraction) {
        return Err(Error::InvalidInput(format!(
            "occlusion_fraction {occlusion_fraction} outside [0, 1)"
        )));
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::InvalidInput("noise_sigma must be nonnegative".into()));
    }
    let area = (SYNTH_SIDE * SYNTH_SIDE) as f64;
    let side = if occlusion_fraction > 0.0 {
        ((occlusion_fraction * area).sqrt().round() as usize).clamp(1, SYNTH_SIDE)
    } else {
        0
    };

    let references: Vec<Vec<f64>> = (0..n_places)
        .map(|i| low_frequency_pattern(derive_seed(seed, "synthetic-reference", &[i as u64])))
        .collect();

    let mut queries = Vec::with_capacity(n_places);
    let mut occlusions = Vec::with_capacity(n_places);
    for (i, reference) in references.iter().enumerate() {
        let mut rng = rng_from_seed(derive_seed(seed, "synthetic-query", &[i as u64]));
        let mut q = reference.clone();
        if noise_sigma > 0.0 {
            let normal = Normal::new(0.0, noise_sigma).expect("sigma checked");
            for v in q.iter_mut() {
                *v = (*v + normal.sample(&mut rng)).clamp(0.0, 255.0);
            }
        }
        let occ = (side > 0).then(|| {
            let x = rng.random_range(0..=SYNTH_SIDE - side);
            let y = rng.random_range(0..=SYNTH_SIDE - side);
            Occlusion { x, y, side }
        });
        if let Some(o) = occ {
            let fill = rng.random_range(0.0..=255.0);
            for y in o.y..o.y + o.side {
                for x in o.x..o.x + o.side {
                    q[y * SYNTH_SIDE + x] = fill;
                }
            }
        }
        queries.push(q);
        occlusions.push(occ);
    }

    Ok(SyntheticDataset {
        reference: PlaceDataset::reference(references),
        query: PlaceDataset::query(queries, (0..n_places).map(Some).collect()),
        occlusions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_perturbation_copies_reference() {
        let ds = generate_synthetic_dataset(5, 0.0, 0.0, 11).unwrap();
        for q in 0..5 {
            assert_eq!(ds.query.image(q), ds.reference.image(q));
        }
        assert!(ds.occlusions.iter().all(Option::is_none));
    }

    #[test]
    fn generation_is_pure() {
        let a = generate_synthetic_dataset(4, 20.0, 0.1, 3).unwrap();
        let b = generate_synthetic_dataset(4, 20.0, 0.1, 3).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic_dataset(4, 20.0, 0.1, 4).unwrap();
        assert_ne!(a.reference, c.reference);
    }

    #[test]
    fn patterns_span_full_range_and_differ() {
        let ds = generate_synthetic_dataset(3, 0.0, 0.0, 1).unwrap();
        for img in ds.reference.images() {
            assert_eq!(img.len(), 784);
            let lo = img.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = img.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(lo.abs() < 1e-9 && (hi - 255.0).abs() < 1e-9);
        }
        assert_ne!(ds.reference.image(0), ds.reference.image(1));
    }

    #[test]
    fn occlusion_block_has_requested_area() {
        let ds = generate_synthetic_dataset(2, 0.0, 0.1, 1).unwrap();
        let o = ds.occlusions[0].unwrap();
        assert_eq!(o.side, 9); // sqrt(78.4) rounds to 9
    }

    #[test]
    fn invalid_arguments_rejected() {
        assert!(generate_synthetic_dataset(0, 1.0, 0.0, 1).is_err());
        assert!(generate_synthetic_dataset(1, 1.0, 1.0, 1).is_err());
    }
}
