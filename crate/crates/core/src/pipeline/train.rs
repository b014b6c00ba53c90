use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::prepare::load_prepared;
use super::with_workers;
use crate::data::persist::{write_ensemble_index, write_modular_index};
use crate::data::{load_module, member_dir_name, module_complete, module_dir_name, save_module};
use crate::error::{Error, Result};
use crate::modular::{partition_reference, train_member_module, ModularSnn, ModuleState};

const STATE_FILE: &str = "train_state.json";
const LOG_FILE: &str = "training_log.json";

/// Progress record that lets an interrupted or failed run resume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub config_hash: String,
    pub jobs_total: usize,
    /// `[member, module]` pairs whose artifacts are complete.
    pub completed: Vec<[usize; 2]>,
    pub failures: Vec<JobFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobFailure {
    pub member: usize,
    pub module: usize,
    pub error: String,
}

/// Per-module training diagnostics. Wall times make this file
/// nondeterministic, so it is kept apart from the checksummed artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleLog {
    pub member: usize,
    pub module: usize,
    pub places: usize,
    pub silent_presentations: u32,
    pub retried_presentations: u32,
    pub hyperactive_neurons: usize,
    pub inert_neurons: usize,
    pub wall_seconds: f64,
    pub resumed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub config_hash: String,
    pub workers: usize,
    pub wall_seconds: f64,
    pub modules: Vec<ModuleLog>,
}

/// Result of [`cmd_train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub ensemble_dir: PathBuf,
    pub members: usize,
    pub modules: usize,
    pub resumed: usize,
}

pub fn ensemble_dir(config: &ExperimentConfig) -> PathBuf {
    config.output_dir.join("ensemble")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_state(dir: &Path) -> Result<Option<TrainState>> {
    let path = dir.join(STATE_FILE);
    if !path.is_file() {
        return Ok(None);
    }
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_slice(&bytes)
        .map(Some)
        .map_err(|e| Error::json(&path, e))
}

/// Trains every (member, module) job in parallel and writes the ensemble
/// artifact. Module directories that are already complete and consistent
/// with the configuration are reused, so a failed run can be resumed.
pub fn cmd_train(config: &ExperimentConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let (reference, _) = load_prepared(config)?;
    let hash = config.hash();
    let dir = ensemble_dir(config);
    if let Some(state) = read_state(&dir)? {
        if state.config_hash != hash {
            return Err(Error::Config(format!(
                "{} holds training state of a different configuration; use another output directory",
                dir.display()
            )));
        }
    }
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let training = config.training();
    let ens_config = config.ensemble_config();
    let params = &config.params;
    let plans = ens_config
        .members
        .iter()
        .map(|s| {
            let parts = partition_reference(&reference, training.kappa, s.shuffle_seed)?;
            Ok((parts, training.theta.draw(reference.len(), s.theta_seed)))
        })
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = plans
        .iter()
        .enumerate()
        .flat_map(|(m, (parts, _))| (0..parts.len()).map(move |i| (m, i)))
        .collect();

    let started = Instant::now();
    let run_job = |&(m, i): &(usize, usize)| -> Result<(ModuleState, ModuleLog)> {
        let (parts, theta) = &plans[m];
        let seeds = &ens_config.members[m];
        let module_dir = dir.join(member_dir_name(m)).join(module_dir_name(i));
        let t0 = Instant::now();
        let existing = if module_complete(&module_dir) {
            load_module(&module_dir).ok().filter(|module| {
                module.seeds == seeds.module_seeds(i)
                    && module.trained_place_ids == parts[i]
                    && module.epochs == training.epochs
                    && module.theta_threshold == Some(*theta)
                    && module.network.params == *params
            })
        } else {
            None
        };
        let resumed = existing.is_some();
        let module = match existing {
            Some(module) => module,
            None => {
                let module = train_member_module(&reference, &parts[i], i, params, &training, seeds, *theta)?;
                save_module(&module, &module_dir)?;
                module
            }
        };
        log::debug!("member {m} module {i} done in {:.2?} (resumed: {resumed})", t0.elapsed());
        let log = ModuleLog {
            member: m,
            module: i,
            places: module.trained_place_ids.len(),
            silent_presentations: module.silent_presentations,
            retried_presentations: module.retried_presentations,
            hyperactive_neurons: module.hyperactive_count(),
            inert_neurons: module.inert_count(),
            wall_seconds: t0.elapsed().as_secs_f64(),
            resumed,
        };
        Ok((module, log))
    };
    let (results, workers) = with_workers(config.workers, || {
        (jobs.par_iter().map(run_job).collect::<Vec<_>>(), rayon::current_num_threads())
    })?;

    let mut state = TrainState {
        config_hash: hash.clone(),
        jobs_total: jobs.len(),
        completed: Vec::new(),
        failures: Vec::new(),
    };
    let mut first_error = None;
    let mut done = Vec::with_capacity(jobs.len());
    for (&(m, i), res) in jobs.iter().zip(results) {
        match res {
            Ok(ok) => {
                state.completed.push([m, i]);
                done.push(ok);
            }
            Err(e) => {
                state.failures.push(JobFailure {
                    member: m,
                    module: i,
                    error: e.to_string(),
                });
                first_error.get_or_insert(e);
            }
        }
    }
    write_json(&dir.join(STATE_FILE), &state)?;
    if let Some(e) = first_error {
        log::error!(
            "{} of {} modules failed; rerun train to resume",
            state.failures.len(),
            jobs.len()
        );
        return Err(e);
    }

    let (modules, logs): (Vec<ModuleState>, Vec<ModuleLog>) = done.into_iter().unzip();
    let mut modules = modules.into_iter();
    let mut member_names = Vec::new();
    for (m, ((parts, theta), seeds)) in plans.iter().zip(&ens_config.members).enumerate() {
        let member_modules: Vec<ModuleState> = modules.by_ref().take(parts.len()).collect();
        let snn = ModularSnn::from_modules(member_modules, reference.len(), params.clone(), *seeds, *theta)?;
        let name = member_dir_name(m);
        write_modular_index(&snn, &dir.join(&name))?;
        member_names.push(name);
    }
    write_ensemble_index(&ens_config, member_names, &dir, Some(&hash))?;
    let resumed = logs.iter().filter(|l| l.resumed).count();
    let log = TrainingLog {
        config_hash: hash,
        workers,
        wall_seconds: started.elapsed().as_secs_f64(),
        modules: logs,
    };
    write_json(&config.output_dir.join(LOG_FILE), &log)?;
    log::info!(
        "trained {} modules ({} resumed) in {:.1} s",
        jobs.len(),
        resumed,
        log.wall_seconds
    );
    Ok(TrainOutcome {
        ensemble_dir: dir,
        members: ens_config.member_count,
        modules: jobs.len(),
        resumed,
    })
}
