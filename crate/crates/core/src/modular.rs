//! Modular SNN: expert modules trained on disjoint subsets of the reference
//! traverse, hyperactive-neuron detection, and fusion of module responses.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::PlaceDataset;
use crate::error::{Error, Result};
use crate::params::SimulationParams;
use crate::seed::{derive_seed, rng_from_seed};
use crate::snn::{Network, SpikeCounts};

/// Seeds fully determining one module's training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleSeeds {
    pub weight_seed: u64,
    /// `None` presents images in their traverse order every epoch.
    pub shuffle_seed: Option<u64>,
    /// Stream for Poisson input during training, assignment and detection.
    pub sim_seed: u64,
}

/// Spike tallies `S[e][l]` of every excitatory neuron for every trained place.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseMatrix {
    pub neurons: usize,
    pub places: usize,
    pub data: Vec<u32>,
}

impl ResponseMatrix {
    pub fn zeros(neurons: usize, places: usize) -> Self {
        Self {
            neurons,
            places,
            data: vec![0; neurons * places],
        }
    }

    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let places = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != places) {
            return Err(Error::InvalidInput("ragged response matrix".into()));
        }
        Ok(Self {
            neurons: rows.len(),
            places,
            data: rows.concat(),
        })
    }

    pub fn row(&self, e: usize) -> &[u32] {
        &self.data[e * self.places..(e + 1) * self.places]
    }

    fn set_column(&mut self, l: usize, counts: &SpikeCounts) {
        for (e, &c) in counts.as_slice().iter().enumerate() {
            self.data[e * self.places + l] = c;
        }
    }
}

/// One trained expert module.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleState {
    pub network: Network,
    pub trained_place_ids: Vec<usize>,
    /// Place id each excitatory neuron is assigned to.
    pub assignments: Vec<usize>,
    /// Neurons that never fired during the assignment pass.
    pub inert: Vec<bool>,
    pub response_matrix: ResponseMatrix,
    /// Total spikes of each neuron over the full reference set; empty until
    /// hyperactive detection has run.
    pub reference_totals: Vec<u64>,
    pub hyperactive: Vec<bool>,
    pub theta_threshold: Option<f64>,
    pub seeds: ModuleSeeds,
    pub epochs: usize,
    pub silent_presentations: u32,
    pub retried_presentations: u32,
}

impl ModuleState {
    pub fn k_e(&self) -> usize {
        self.network.k_e()
    }

    /// Whether neuron `e` is left out of fusion (hyperactive or inert).
    #[inline]
    pub fn is_excluded(&self, e: usize) -> bool {
        self.inert[e] || self.hyperactive[e]
    }

    pub fn hyperactive_count(&self) -> usize {
        self.hyperactive.iter().filter(|&&h| h).count()
    }

    pub fn inert_count(&self) -> usize {
        self.inert.iter().filter(|&&h| h).count()
    }

    /// Recomputes the hyperactive mask from stored reference totals.
    pub fn apply_threshold(&mut self, theta: f64) -> Result<()> {
        if self.reference_totals.len() != self.k_e() {
            return Err(Error::InvalidInput(
                "hyperactive detection has not been run on this module".into(),
            ));
        }
        self.hyperactive = self.reference_totals.iter().map(|&t| t as f64 >= theta).collect();
        self.theta_threshold = Some(theta);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let k_e = self.k_e();
        for (what, len) in [
            ("assignments", self.assignments.len()),
            ("inert mask", self.inert.len()),
            ("hyperactive mask", self.hyperactive.len()),
        ] {
            if len != k_e {
                return Err(Error::Dimension {
                    what,
                    expected: k_e,
                    actual: len,
                });
            }
        }
        if let Some(a) = self
            .assignments
            .iter()
            .find(|a| !self.trained_place_ids.contains(a))
        {
            return Err(Error::Invariant(format!(
                "neuron assigned to place {a} outside the module's partition"
            )));
        }
        Ok(())
    }
}

/// Splits `n_places` place ids into consecutive groups of `kappa` after an
/// optional seeded shuffle. The last group may be smaller.
pub fn partition_places(n_places: usize, kappa: usize, shuffle_seed: Option<u64>) -> Result<Vec<Vec<usize>>> {
    if kappa == 0 {
        return Err(Error::Config("kappa must be at least 1".into()));
    }
    let mut ids: Vec<usize> = (0..n_places).collect();
    if let Some(seed) = shuffle_seed {
        ids.shuffle(&mut rng_from_seed(derive_seed(seed, "partition", &[])));
    }
    Ok(ids.chunks(kappa).map(<[usize]>::to_vec).collect())
}

pub fn partition_reference(
    dataset: &PlaceDataset,
    kappa: usize,
    shuffle_seed: Option<u64>,
) -> Result<Vec<Vec<usize>>> {
    partition_places(dataset.len(), kappa, shuffle_seed)
}

/// Assigns each neuron to the place of its largest response, lowest index
/// on ties. Neurons with an all-zero row get the first place and are
/// flagged inert.
pub fn assign_neurons(response: &ResponseMatrix, place_ids: &[usize]) -> (Vec<usize>, Vec<bool>) {
    assert_eq!(response.places, place_ids.len());
    let mut assignments = Vec::with_capacity(response.neurons);
    let mut inert = Vec::with_capacity(response.neurons);
    for e in 0..response.neurons {
        let row = response.row(e);
        let mut best = 0;
        for (l, &c) in row.iter().enumerate() {
            if c > row[best] {
                best = l;
            }
        }
        assignments.push(place_ids[best]);
        inert.push(row.iter().all(|&c| c == 0));
    }
    (assignments, inert)
}

/// Trains one module on the images of `place_ids`, then runs a learning-off
/// pass over the same images to assign neurons to places.
pub fn train_module(
    reference: &PlaceDataset,
    place_ids: &[usize],
    params: &SimulationParams,
    epochs: usize,
    seeds: ModuleSeeds,
) -> Result<ModuleState> {
    if place_ids.is_empty() {
        return Err(Error::InvalidInput("cannot train a module on an empty partition".into()));
    }
    if let Some(&bad) = place_ids.iter().find(|&&p| p >= reference.len()) {
        return Err(Error::InvalidInput(format!("place {bad} not in reference set")));
    }
    let mut network = Network::new(params.clone(), seeds.weight_seed)?;
    let mut rng = rng_from_seed(derive_seed(seeds.sim_seed, "train", &[]));
    let mut order: Vec<usize> = place_ids.to_vec();
    let mut silent = 0;
    let mut retried = 0;
    for epoch in 0..epochs {
        if let Some(s) = seeds.shuffle_seed {
            order.shuffle(&mut rng_from_seed(derive_seed(s, "epoch-order", &[epoch as u64])));
        }
        for &place in &order {
            let outcome = network.learn(reference.image(place), &mut rng)?;
            if outcome.silent {
                silent += 1;
                log::debug!("silent presentation of place {place} in epoch {epoch}");
            }
            if outcome.retries > 0 {
                retried += 1;
            }
        }
    }

    let mut response = ResponseMatrix::zeros(params.k_e, place_ids.len());
    for (l, &place) in place_ids.iter().enumerate() {
        let mut prng = rng_from_seed(derive_seed(seeds.sim_seed, "assign", &[place as u64]));
        let counts = network.respond(reference.image(place), &mut prng)?;
        response.set_column(l, &counts);
    }
    let (assignments, inert) = assign_neurons(&response, place_ids);
    if silent > 0 {
        log::warn!("module over places {:?}..: {silent} silent presentations", place_ids.first());
    }
    Ok(ModuleState {
        network,
        trained_place_ids: place_ids.to_vec(),
        assignments,
        inert,
        response_matrix: response,
        reference_totals: Vec::new(),
        hyperactive: vec![false; params.k_e],
        theta_threshold: None,
        seeds,
        epochs,
        silent_presentations: silent,
        retried_presentations: retried,
    })
}

/// Reference places shown during detection: all of them, or a seeded subset
/// when `subsample` is below one.
fn detection_places(n: usize, subsample: Option<f64>, seed: u64) -> Vec<usize> {
    match subsample {
        Some(f) if f < 1.0 => {
            let mut ids: Vec<usize> = (0..n).collect();
            ids.shuffle(&mut rng_from_seed(derive_seed(seed, "detect-subsample", &[])));
            let keep = ((f * n as f64).ceil() as usize).clamp(1, n);
            ids.truncate(keep);
            ids.sort_unstable();
            ids
        }
        _ => (0..n).collect(),
    }
}

/// Presents the full reference set to a trained module and masks every
/// neuron whose total response reaches `theta_threshold`.
///
/// `subsample` < 1 shows only that fraction of the reference set; the
/// default `None` shows all of it.
pub fn detect_hyperactive(
    module: &mut ModuleState,
    full_reference: &PlaceDataset,
    theta_threshold: f64,
    subsample: Option<f64>,
) -> Result<()> {
    let k_e = module.k_e();
    let mut totals = vec![0u64; k_e];
    for place in detection_places(full_reference.len(), subsample, module.seeds.sim_seed) {
        let mut rng = rng_from_seed(derive_seed(module.seeds.sim_seed, "detect", &[place as u64]));
        let counts = module.network.respond(full_reference.image(place), &mut rng)?;
        for (t, &c) in totals.iter_mut().zip(counts.as_slice()) {
            *t += c as u64;
        }
    }
    module.reference_totals = totals;
    module.apply_threshold(theta_threshold)
}

/// Adds the spikes of every non-excluded neuron of `module` into the bucket
/// of its assigned place. `column` is indexed by global place id.
pub fn accumulate_response(column: &mut [f64], module: &ModuleState, counts: &SpikeCounts) {
    for (e, &c) in counts.as_slice().iter().enumerate() {
        if c > 0 && !module.is_excluded(e) {
            column[module.assignments[e]] += c as f64;
        }
    }
}

/// Per-place spike sums of one module for a query, ordered like
/// `trained_place_ids`.
pub fn module_response<R: Rng>(module: &ModuleState, query_image: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let counts = module.network.respond(query_image, rng)?;
    let mut out = vec![0.0; module.trained_place_ids.len()];
    for (e, &c) in counts.as_slice().iter().enumerate() {
        if module.is_excluded(e) {
            continue;
        }
        let slot = module
            .trained_place_ids
            .iter()
            .position(|&p| p == module.assignments[e])
            .expect("assignment within partition");
        out[slot] += c as f64;
    }
    Ok(out)
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// How the hyperactivity threshold is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ThetaRegime {
    /// U(40, 100) below 1000 reference places, U(600, 800) otherwise.
    Auto,
    Range { low: f64, high: f64 },
    Fixed { value: f64 },
}

impl Default for ThetaRegime {
    fn default() -> Self {
        ThetaRegime::Auto
    }
}

impl ThetaRegime {
    pub fn bounds(&self, place_count: usize) -> (f64, f64) {
        match *self {
            ThetaRegime::Auto if place_count < 1000 => (40.0, 100.0),
            ThetaRegime::Auto => (600.0, 800.0),
            ThetaRegime::Range { low, high } => (low, high),
            ThetaRegime::Fixed { value } => (value, value),
        }
    }

    pub fn draw(&self, place_count: usize, theta_seed: u64) -> f64 {
        let (lo, hi) = self.bounds(place_count);
        if hi <= lo {
            return lo;
        }
        rng_from_seed(derive_seed(theta_seed, "theta", &[])).random_range(lo..hi)
    }
}

/// Seeds of one Modular SNN (one ensemble member).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberSeeds {
    /// Shared by all modules of the member.
    pub weight_seed: u64,
    pub shuffle_seed: Option<u64>,
    pub theta_seed: u64,
}

impl MemberSeeds {
    /// Seeds for module `index`. All modules start from the same initial weights.
    pub fn module_seeds(&self, index: usize) -> ModuleSeeds {
        let i = index as u64;
        let (has_shuffle, shuffle) = match self.shuffle_seed {
            Some(s) => (1, s),
            None => (0, 0),
        };
        ModuleSeeds {
            weight_seed: self.weight_seed,
            shuffle_seed: self
                .shuffle_seed
                .map(|s| derive_seed(s, "module-shuffle", &[i])),
            sim_seed: derive_seed(self.weight_seed, "module-sim", &[has_shuffle, shuffle, i]),
        }
    }
}

/// Training settings shared by every module of a Modular SNN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModularTraining {
    pub kappa: usize,
    pub epochs: usize,
    pub theta: ThetaRegime,
    /// Fraction of the reference set shown during hyperactive detection;
    /// `None` shows all of it.
    pub detection_subsample: Option<f64>,
}

impl ModularTraining {
    pub fn validate(&self) -> Result<()> {
        if self.kappa == 0 {
            return Err(Error::Config("kappa must be at least 1".into()));
        }
        let (lo, hi) = self.theta.bounds(0);
        let (lo_big, hi_big) = self.theta.bounds(usize::MAX);
        if !(lo.is_finite() && hi.is_finite() && lo_big.is_finite() && hi_big.is_finite())
            || lo > hi
            || lo < 0.0
        {
            return Err(Error::Config(format!(
                "theta regime {:?} needs finite bounds with 0 <= low <= high",
                self.theta
            )));
        }
        if let Some(f) = self.detection_subsample {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!(
                    "detection_subsample {f} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }
}

impl Default for ModularTraining {
    fn default() -> Self {
        Self {
            kappa: 25,
            epochs: 30,
            theta: ThetaRegime::Auto,
            detection_subsample: None,
        }
    }
}

/// A set of expert modules whose partitions cover the reference set.
#[derive(Debug, Clone, PartialEq)]
pub struct ModularSnn {
    pub modules: Vec<ModuleState>,
    pub place_count: usize,
    pub params: SimulationParams,
    pub seeds: MemberSeeds,
    pub theta_threshold: f64,
}

impl ModularSnn {
    pub fn from_modules(
        modules: Vec<ModuleState>,
        place_count: usize,
        params: SimulationParams,
        seeds: MemberSeeds,
        theta_threshold: f64,
    ) -> Result<Self> {
        let snn = Self {
            modules,
            place_count,
            params,
            seeds,
            theta_threshold,
        };
        snn.validate()?;
        Ok(snn)
    }

    /// Every place id belongs to exactly one module.
    pub fn validate(&self) -> Result<()> {
        let mut owner = vec![usize::MAX; self.place_count];
        for (i, m) in self.modules.iter().enumerate() {
            m.validate()?;
            for &p in &m.trained_place_ids {
                if p >= self.place_count {
                    return Err(Error::Invariant(format!(
                        "module {i} trained on place {p} beyond place count {}",
                        self.place_count
                    )));
                }
                if owner[p] != usize::MAX {
                    return Err(Error::Invariant(format!(
                        "place {p} claimed by modules {} and {i}",
                        owner[p]
                    )));
                }
                owner[p] = i;
            }
        }
        if let Some(p) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::Invariant(format!("place {p} not covered by any module")));
        }
        Ok(())
    }

    pub fn partitions(&self) -> Vec<Vec<usize>> {
        self.modules.iter().map(|m| m.trained_place_ids.clone()).collect()
    }

    /// Raw spike counts of every module for one query. Module `i` draws its
    /// input spikes from a stream derived from `(query_seed, i)`, so the
    /// result does not depend on evaluation order.
    pub fn module_counts(&self, query_image: &[f64], query_seed: u64) -> Result<Vec<SpikeCounts>> {
        self.modules
            .par_iter()
            .enumerate()
            .map(|(i, m)| {
                let mut rng = rng_from_seed(derive_seed(query_seed, "module-response", &[i as u64]));
                m.network.respond(query_image, &mut rng)
            })
            .collect()
    }

    /// Length-L similarity vector: each place's summed spikes from the
    /// non-excluded neurons assigned to it.
    pub fn similarity_column(&self, query_image: &[f64], query_seed: u64) -> Result<Vec<f64>> {
        let counts = self.module_counts(query_image, query_seed)?;
        Ok(self.fuse(&counts))
    }

    pub fn fuse(&self, counts: &[SpikeCounts]) -> Vec<f64> {
        let mut column = vec![0.0; self.place_count];
        for (m, c) in self.modules.iter().zip(counts) {
            accumulate_response(&mut column, m, c);
        }
        column
    }

    /// Predicted place: the argmax of the similarity column.
    pub fn predict(&self, query_image: &[f64], query_seed: u64) -> Result<usize> {
        Ok(argmax(&self.similarity_column(query_image, query_seed)?))
    }

    pub fn silent_presentations(&self) -> u32 {
        self.modules.iter().map(|m| m.silent_presentations).sum()
    }
}

/// Trains and hyperactive-detects one module of a member. This is the unit
/// of parallel work.
pub fn train_member_module(
    reference: &PlaceDataset,
    partition: &[usize],
    index: usize,
    params: &SimulationParams,
    training: &ModularTraining,
    seeds: &MemberSeeds,
    theta_threshold: f64,
) -> Result<ModuleState> {
    let mut module = train_module(reference, partition, params, training.epochs, seeds.module_seeds(index))?;
    detect_hyperactive(&mut module, reference, theta_threshold, training.detection_subsample)?;
    Ok(module)
}

/// Partitions the reference set, then trains and detects every module in
/// parallel on the current rayon pool.
pub fn train_modular(
    reference: &PlaceDataset,
    params: &SimulationParams,
    training: &ModularTraining,
    seeds: MemberSeeds,
) -> Result<ModularSnn> {
    training.validate()?;
    reference.validate()?;
    if reference.pixel_count() != Some(params.k_p) {
        return Err(Error::Dimension {
            what: "reference image size vs k_p",
            expected: params.k_p,
            actual: reference.pixel_count().unwrap_or(0),
        });
    }
    let partitions = partition_reference(reference, training.kappa, seeds.shuffle_seed)?;
    let theta = training.theta.draw(reference.len(), seeds.theta_seed);
    let modules = partitions
        .par_iter()
        .enumerate()
        .map(|(i, part)| train_member_module(reference, part, i, params, training, &seeds, theta))
        .collect::<Result<Vec<_>>>()?;
    ModularSnn::from_modules(modules, reference.len(), params.clone(), seeds, theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partitions_of_hundred_by_twenty_five() {
        let parts = partition_places(100, 25, Some(3)).unwrap();
        assert_eq!(parts.len(), 4);
        assert!(parts.iter().all(|p| p.len() == 25));
        let mut all: Vec<usize> = parts.concat();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(parts, partition_places(100, 25, Some(3)).unwrap());
        assert_ne!(parts, partition_places(100, 25, Some(4)).unwrap());
    }

    #[test]
    fn undersized_single_partition() {
        let parts = partition_places(10, 25, None).unwrap();
        assert_eq!(parts, vec![(0..10).collect::<Vec<_>>()]);
    }

    #[test]
    fn unshuffled_partitions_are_consecutive() {
        let parts = partition_places(7, 3, None).unwrap();
        assert_eq!(parts, vec![vec![0, 1, 2], vec![3, 4, 5], vec![6]]);
        assert!(partition_places(7, 0, None).is_err());
    }

    #[test]
    fn assignment_direct_argmax_and_ties() {
        let s = ResponseMatrix::from_rows(&[vec![0, 7, 3], vec![5, 5, 0], vec![0, 0, 0]]).unwrap();
        let (a, inert) = assign_neurons(&s, &[4, 9, 13]);
        assert_eq!(a, vec![9, 4, 4]);
        assert_eq!(inert, vec![false, false, true]);
    }

    #[test]
    fn theta_regimes() {
        assert_eq!(ThetaRegime::Auto.bounds(999), (40.0, 100.0));
        assert_eq!(ThetaRegime::Auto.bounds(1000), (600.0, 800.0));
        let t = ThetaRegime::Auto.draw(100, 5);
        assert!((40.0..100.0).contains(&t));
        assert_eq!(t, ThetaRegime::Auto.draw(100, 5));
        assert_eq!(ThetaRegime::Fixed { value: 3.0 }.draw(10, 1), 3.0);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }
}
