//! Ensembles of independently seeded Modular SNNs, fused by summing spikes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::PlaceDataset;
use crate::error::{Error, Result};
use crate::modular::{argmax, partition_reference, train_member_module, MemberSeeds, ModularSnn, ModularTraining};
use crate::params::SimulationParams;
use crate::snn::SpikeCounts;
use crate::seed::derive_seed;

/// Member count, diversity switches, and the seeds derived from them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub member_count: usize,
    pub randomize_weights: bool,
    pub shuffle_order: bool,
    pub members: Vec<MemberSeeds>,
}

impl EnsembleConfig {
    /// Derives every member's seeds from `master`.
    ///
    /// Without `randomize_weights` all members share one weight seed; without
    /// `shuffle_order` all members keep traverse order. Threshold seeds are
    /// shared only when both switches are off, which makes the members
    /// identical.
    pub fn from_master(master: u64, member_count: usize, randomize_weights: bool, shuffle_order: bool) -> Self {
        let members = (0..member_count as u64)
            .map(|m| {
                let w = if randomize_weights { m } else { 0 };
                let t = if randomize_weights || shuffle_order { m } else { 0 };
                MemberSeeds {
                    weight_seed: derive_seed(master, "weights", &[w]),
                    shuffle_seed: shuffle_order.then(|| derive_seed(master, "shuffle", &[m])),
                    theta_seed: derive_seed(master, "theta", &[t]),
                }
            })
            .collect();
        Self {
            member_count,
            randomize_weights,
            shuffle_order,
            members,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.member_count == 0 {
            return Err(Error::Config("an ensemble needs at least one member".into()));
        }
        if self.members.len() != self.member_count {
            return Err(Error::Config(format!(
                "{} member seed records for {} members",
                self.members.len(),
                self.member_count
            )));
        }
        if !self.randomize_weights
            && self.members.windows(2).any(|w| w[0].weight_seed != w[1].weight_seed)
        {
            return Err(Error::Config("weight seeds differ although randomize_weights is off".into()));
        }
        if !self.shuffle_order && self.members.iter().any(|m| m.shuffle_seed.is_some()) {
            return Err(Error::Config("shuffle seeds present although shuffle_order is off".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub config: EnsembleConfig,
    pub members: Vec<ModularSnn>,
}

/// Trains every member on the full reference set. All (member, module)
/// pairs are scheduled as independent jobs on the current rayon pool.
pub fn train_ensemble(
    reference: &PlaceDataset,
    params: &SimulationParams,
    training: &ModularTraining,
    config: &EnsembleConfig,
) -> Result<Ensemble> {
    config.validate()?;
    training.validate()?;
    reference.validate()?;
    if reference.pixel_count() != Some(params.k_p) {
        return Err(Error::Dimension {
            what: "reference image size vs k_p",
            expected: params.k_p,
            actual: reference.pixel_count().unwrap_or(0),
        });
    }
    let plans: Vec<(Vec<Vec<usize>>, f64)> = config
        .members
        .iter()
        .map(|s| {
            let parts = partition_reference(reference, training.kappa, s.shuffle_seed)?;
            Ok((parts, training.theta.draw(reference.len(), s.theta_seed)))
        })
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = plans
        .iter()
        .enumerate()
        .flat_map(|(m, (parts, _))| (0..parts.len()).map(move |i| (m, i)))
        .collect();
    let mut trained = jobs
        .par_iter()
        .map(|&(m, i)| {
            let (parts, theta) = &plans[m];
            train_member_module(reference, &parts[i], i, params, training, &config.members[m], *theta)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter();
    let members = plans
        .iter()
        .zip(&config.members)
        .map(|((parts, theta), seeds)| {
            let modules = trained.by_ref().take(parts.len()).collect();
            ModularSnn::from_modules(modules, reference.len(), params.clone(), *seeds, *theta)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble {
        config: config.clone(),
        members,
    })
}

/// Elementwise sum of member similarity columns.
pub fn fuse_member_columns(columns: &[Vec<f64>]) -> Vec<f64> {
    let len = columns.first().map_or(0, Vec::len);
    let mut out = vec![0.0; len];
    for col in columns {
        for (o, &v) in out.iter_mut().zip(col) {
            *o += v;
        }
    }
    out
}

impl Ensemble {
    pub fn place_count(&self) -> usize {
        self.members.first().map_or(0, |m| m.place_count)
    }

    pub fn module_count(&self) -> usize {
        self.members.iter().map(|m| m.modules.len()).sum()
    }

    /// Each member's similarity column for one query. Every member sees the
    /// same query seed.
    pub fn member_columns(&self, query_image: &[f64], query_seed: u64) -> Result<Vec<Vec<f64>>> {
        self.members
            .par_iter()
            .map(|m| m.similarity_column(query_image, query_seed))
            .collect()
    }

    /// Fuses already simulated spike counts, `counts[member][module]`.
    pub fn fuse(&self, counts: &[Vec<SpikeCounts>]) -> Vec<f64> {
        let columns: Vec<Vec<f64>> = self
            .members
            .iter()
            .zip(counts)
            .map(|(m, c)| m.fuse(c))
            .collect();
        fuse_member_columns(&columns)
    }

    pub fn similarity_column(&self, query_image: &[f64], query_seed: u64) -> Result<Vec<f64>> {
        Ok(fuse_member_columns(&self.member_columns(query_image, query_seed)?))
    }

    pub fn predict(&self, query_image: &[f64], query_seed: u64) -> Result<usize> {
        Ok(argmax(&self.similarity_column(query_image, query_seed)?))
    }
}
