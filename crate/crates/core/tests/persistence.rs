use std::fs;
use std::path::Path;

use spikeplace::data::{generate_synthetic_dataset, load_module, save_module, PlaceDataset};
use spikeplace::modular::{train_module, ModuleSeeds, ModuleState};
use spikeplace::seed::rng_from_seed;
use spikeplace::{Error, SimulationParams};

fn small_params() -> SimulationParams {
    SimulationParams {
        k_e: 12,
        k_i: 12,
        ..SimulationParams::default()
    }
}

fn seeds() -> ModuleSeeds {
    ModuleSeeds {
        weight_seed: 3,
        shuffle_seed: Some(4),
        sim_seed: 5,
    }
}

fn reference() -> PlaceDataset {
    generate_synthetic_dataset(4, 0.0, 0.0, 9).unwrap().reference
}

fn trained(epochs: usize) -> ModuleState {
    train_module(&reference(), &[0, 1, 2], &small_params(), epochs, seeds()).unwrap()
}

fn probe(m: &ModuleState) -> Vec<u32> {
    let image = reference().image(3).to_vec();
    m.network.respond(&image, &mut rng_from_seed(77)).unwrap().0
}

fn flip_byte(path: &Path, at: usize) {
    let mut bytes = fs::read(path).unwrap();
    bytes[at] ^= 0x40;
    fs::write(path, bytes).unwrap();
}

#[test]
fn trained_module_round_trips_bit_exactly() {
    let module = trained(1);
    let dir = tempfile::tempdir().unwrap();
    save_module(&module, dir.path()).unwrap();
    let back = load_module(dir.path()).unwrap();
    assert_eq!(back, module);
    assert_eq!(probe(&back), probe(&module));
}

#[test]
fn untrained_module_round_trips() {
    let module = trained(0);
    let dir = tempfile::tempdir().unwrap();
    save_module(&module, dir.path()).unwrap();
    assert_eq!(load_module(dir.path()).unwrap(), module);
}

#[test]
fn corrupted_weight_byte_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    save_module(&trained(1), dir.path()).unwrap();
    flip_byte(&dir.path().join("weights.bin"), 100);
    let err = load_module(dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 3, "{err}");
}

#[test]
fn truncated_blob_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    save_module(&trained(1), dir.path()).unwrap();
    let path = dir.path().join("theta.bin");
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(load_module(dir.path()).is_err());
}

#[test]
fn edited_metadata_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    save_module(&trained(1), dir.path()).unwrap();
    let path = dir.path().join("module.json");
    let mut value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    value["meta"]["epochs"] = serde_json::json!(2);
    fs::write(&path, serde_json::to_string(&value).unwrap()).unwrap();
    assert!(load_module(dir.path()).is_err());
}

#[test]
fn unknown_format_version_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    save_module(&trained(0), dir.path()).unwrap();
    let path = dir.path().join("module.json");
    let mut value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    value["format_version"] = serde_json::json!(999);
    fs::write(&path, serde_json::to_string(&value).unwrap()).unwrap();
    let err = load_module(dir.path()).unwrap_err();
    assert!(matches!(err, Error::Artifact { .. }), "{err:?}");
}
