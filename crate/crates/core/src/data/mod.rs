//! Image ingestion, preprocessing, synthetic data and artifact persistence.

pub mod dataset;
pub mod persist;
pub mod preprocess;
pub mod synthetic;

pub use dataset::{load_images, DatasetManifest, GroundTruthRule, ImageList, Place, PlaceDataset, Role};
pub use persist::{
    artifact_files, f64s_from_le_bytes, f64s_to_le_bytes, load_ensemble, load_modular, load_module,
    member_dir_name, module_complete, module_dir_name, save_ensemble, save_modular, save_module,
    sha256_hex, FORMAT_VERSION,
};
pub use preprocess::{patch_normalize, preprocess_dynamic, preprocess_image, resize_bilinear, PreprocessConfig, RawImage};
pub use synthetic::{generate_synthetic_dataset, Occlusion, SyntheticDataset, SYNTH_SIDE};
