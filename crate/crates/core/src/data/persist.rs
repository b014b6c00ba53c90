//! On-disk artifacts: a directory per module holding a JSON metadata file
//! and raw little-endian f64 blobs, plus index files for Modular SNNs and
//! ensembles.
//!
//! ```text
//! ensemble/
//!   ensemble.json
//!   member_00/
//!     index.json
//!     module_000/ module.json weights.bin theta.bin
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ensemble::{Ensemble, EnsembleConfig};
use crate::error::{Error, Result};
use crate::modular::{MemberSeeds, ModularSnn, ModuleSeeds, ModuleState, ResponseMatrix};
use crate::params::SimulationParams;
use crate::snn::{Network, SynapseState};

pub const FORMAT_VERSION: u32 = 1;

const MODULE_FILE: &str = "module.json";
const WEIGHTS_FILE: &str = "weights.bin";
const THETA_FILE: &str = "theta.bin";
const INDEX_FILE: &str = "index.json";
const ENSEMBLE_FILE: &str = "ensemble.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn f64s_to_le_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn f64s_from_le_bytes(bytes: &[u8]) -> Option<Vec<f64>> {
    if bytes.len() % 8 != 0 {
        return None;
    }
    Some(
        bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobRef {
    pub file: String,
    /// Row-major dimensions of the stored array.
    pub shape: Vec<usize>,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModuleMeta {
    params: SimulationParams,
    seeds: ModuleSeeds,
    epochs: usize,
    trained_place_ids: Vec<usize>,
    assignments: Vec<usize>,
    inert: Vec<bool>,
    hyperactive: Vec<bool>,
    reference_totals: Vec<u64>,
    theta_threshold: Option<f64>,
    response_matrix: ResponseMatrix,
    silent_presentations: u32,
    retried_presentations: u32,
    weights: BlobRef,
    theta: BlobRef,
}

/// Checksummed JSON envelope: `checksum` is the SHA-256 of the compact
/// serialization of `meta`.
#[derive(Debug, Serialize, Deserialize)]
struct Envelope<T> {
    format_version: u32,
    checksum: String,
    meta: T,
}

fn write_envelope<T: Serialize>(path: &Path, meta: &T) -> Result<()> {
    let compact = serde_json::to_vec(meta).map_err(|e| Error::json(path, e))?;
    let env = Envelope {
        format_version: FORMAT_VERSION,
        checksum: sha256_hex(&compact),
        meta,
    };
    let text = serde_json::to_string_pretty(&env).map_err(|e| Error::json(path, e))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_envelope<T: Serialize + DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    #[derive(Deserialize)]
    struct Version {
        format_version: u32,
    }
    let version: Version = serde_json::from_slice(&bytes)
        .map_err(|e| Error::artifact(path, format!("unreadable metadata: {e}")))?;
    if version.format_version != FORMAT_VERSION {
        return Err(Error::artifact(
            path,
            format!(
                "format version {} unsupported (expected {FORMAT_VERSION})",
                version.format_version
            ),
        ));
    }
    let env: Envelope<T> = serde_json::from_slice(&bytes)
        .map_err(|e| Error::artifact(path, format!("malformed metadata: {e}")))?;
    let compact = serde_json::to_vec(&env.meta).map_err(|e| Error::json(path, e))?;
    if sha256_hex(&compact) != env.checksum {
        return Err(Error::artifact(path, "metadata checksum mismatch"));
    }
    Ok(env.meta)
}

fn write_blob(dir: &Path, file: &str, shape: Vec<usize>, values: &[f64]) -> Result<BlobRef> {
    let bytes = f64s_to_le_bytes(values);
    let path = dir.join(file);
    fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
    Ok(BlobRef {
        file: file.to_string(),
        shape,
        sha256: sha256_hex(&bytes),
    })
}

fn read_blob(dir: &Path, blob: &BlobRef) -> Result<Vec<f64>> {
    let path = dir.join(&blob.file);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let expected: usize = blob.shape.iter().product::<usize>() * 8;
    if bytes.len() != expected {
        return Err(Error::artifact(
            &path,
            format!("truncated or oversized blob: {} bytes, expected {expected}", bytes.len()),
        ));
    }
    if sha256_hex(&bytes) != blob.sha256 {
        return Err(Error::artifact(&path, "blob checksum mismatch"));
    }
    Ok(f64s_from_le_bytes(&bytes).expect("length checked"))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes a module to `dir`. The metadata file is written last, so a
/// directory without it is an incomplete artifact.
pub fn save_module(module: &ModuleState, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let net = &module.network;
    let weights = write_blob(dir, WEIGHTS_FILE, vec![net.syn.k_p, net.syn.k_e], &net.syn.w_pe)?;
    let theta = write_blob(dir, THETA_FILE, vec![net.theta.len()], &net.theta)?;
    let meta = ModuleMeta {
        params: net.params.clone(),
        seeds: module.seeds,
        epochs: module.epochs,
        trained_place_ids: module.trained_place_ids.clone(),
        assignments: module.assignments.clone(),
        inert: module.inert.clone(),
        hyperactive: module.hyperactive.clone(),
        reference_totals: module.reference_totals.clone(),
        theta_threshold: module.theta_threshold,
        response_matrix: module.response_matrix.clone(),
        silent_presentations: module.silent_presentations,
        retried_presentations: module.retried_presentations,
        weights,
        theta,
    };
    write_envelope(&dir.join(MODULE_FILE), &meta)
}

pub fn load_module(dir: &Path) -> Result<ModuleState> {
    let meta: ModuleMeta = read_envelope(&dir.join(MODULE_FILE))?;
    let (k_p, k_e) = match meta.weights.shape.as_slice() {
        &[a, b] => (a, b),
        _ => return Err(Error::artifact(dir, "weight blob must be two-dimensional")),
    };
    let w = read_blob(dir, &meta.weights)?;
    let theta = read_blob(dir, &meta.theta)?;
    let syn = SynapseState::from_weights(k_p, k_e, w)?;
    let network = Network::from_parts(meta.params, syn, theta)?;
    let module = ModuleState {
        network,
        trained_place_ids: meta.trained_place_ids,
        assignments: meta.assignments,
        inert: meta.inert,
        response_matrix: meta.response_matrix,
        reference_totals: meta.reference_totals,
        hyperactive: meta.hyperactive,
        theta_threshold: meta.theta_threshold,
        seeds: meta.seeds,
        epochs: meta.epochs,
        silent_presentations: meta.silent_presentations,
        retried_presentations: meta.retried_presentations,
    };
    module.validate().map_err(|e| Error::artifact(dir, e.to_string()))?;
    Ok(module)
}

/// Whether `dir` holds a complete, loadable module artifact.
pub fn module_complete(dir: &Path) -> bool {
    dir.join(MODULE_FILE).is_file() && load_module(dir).is_ok()
}

pub fn module_dir_name(index: usize) -> String {
    format!("module_{index:03}")
}

pub fn member_dir_name(index: usize) -> String {
    format!("member_{index:02}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModularIndex {
    place_count: usize,
    seeds: MemberSeeds,
    theta_threshold: f64,
    partitions: Vec<Vec<usize>>,
    modules: Vec<String>,
    params: SimulationParams,
}

pub fn save_modular(snn: &ModularSnn, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let mut names = Vec::new();
    for (i, m) in snn.modules.iter().enumerate() {
        let name = module_dir_name(i);
        save_module(m, &dir.join(&name))?;
        names.push(name);
    }
    save_modular_index(snn, names, dir)
}

fn save_modular_index(snn: &ModularSnn, modules: Vec<String>, dir: &Path) -> Result<()> {
    let index = ModularIndex {
        place_count: snn.place_count,
        seeds: snn.seeds,
        theta_threshold: snn.theta_threshold,
        partitions: snn.partitions(),
        modules,
        params: snn.params.clone(),
    };
    write_envelope(&dir.join(INDEX_FILE), &index)
}

pub fn load_modular(dir: &Path) -> Result<ModularSnn> {
    let index: ModularIndex = read_envelope(&dir.join(INDEX_FILE))?;
    let modules = index
        .modules
        .iter()
        .map(|name| load_module(&dir.join(name)))
        .collect::<Result<Vec<_>>>()?;
    for (m, part) in modules.iter().zip(&index.partitions) {
        if &m.trained_place_ids != part {
            return Err(Error::artifact(dir, "module partition disagrees with index"));
        }
    }
    ModularSnn::from_modules(modules, index.place_count, index.params, index.seeds, index.theta_threshold)
        .map_err(|e| Error::artifact(dir, e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EnsembleIndex {
    config: EnsembleConfig,
    members: Vec<String>,
    config_hash: Option<String>,
}

/// Writes an ensemble; `config_hash` identifies the experiment configuration.
pub fn save_ensemble(ensemble: &Ensemble, dir: &Path, config_hash: Option<&str>) -> Result<()> {
    ensure_dir(dir)?;
    let mut names = Vec::new();
    for (m, member) in ensemble.members.iter().enumerate() {
        let name = member_dir_name(m);
        save_modular(member, &dir.join(&name))?;
        names.push(name);
    }
    write_ensemble_index(&ensemble.config, names, dir, config_hash)
}

pub(crate) fn write_ensemble_index(
    config: &EnsembleConfig,
    members: Vec<String>,
    dir: &Path,
    config_hash: Option<&str>,
) -> Result<()> {
    let index = EnsembleIndex {
        config: config.clone(),
        members,
        config_hash: config_hash.map(str::to_string),
    };
    write_envelope(&dir.join(ENSEMBLE_FILE), &index)
}

pub(crate) fn write_modular_index(snn: &ModularSnn, dir: &Path) -> Result<()> {
    let names = (0..snn.modules.len()).map(module_dir_name).collect();
    save_modular_index(snn, names, dir)
}

/// Loads an ensemble and the config hash recorded with it.
pub fn load_ensemble(dir: &Path) -> Result<(Ensemble, Option<String>)> {
    let index: EnsembleIndex = read_envelope(&dir.join(ENSEMBLE_FILE))?;
    let members = index
        .members
        .iter()
        .map(|name| load_modular(&dir.join(name)))
        .collect::<Result<Vec<_>>>()?;
    Ok((
        Ensemble {
            config: index.config,
            members,
        },
        index.config_hash,
    ))
}

pub fn artifact_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(|e| Error::io(&d, e))? {
            let path = entry.map_err(|e| Error::io(&d, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}
