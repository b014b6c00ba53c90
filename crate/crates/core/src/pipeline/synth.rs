use std::fs;
use std::path::PathBuf;

use image::GrayImage;

use super::config::ExperimentConfig;
use crate::data::{generate_synthetic_dataset, DatasetManifest, GroundTruthRule, ImageList, PlaceDataset, PreprocessConfig};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// Result of [`cmd_synth`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthOutcome {
    pub manifest: PathBuf,
    pub places: usize,
}

fn write_traverse(dir: &std::path::Path, dataset: &PlaceDataset, side: usize) -> Result<()> {
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, img) in dataset.images().enumerate() {
        let bytes: Vec<u8> = img.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect();
        let gray = GrayImage::from_raw(side as u32, side as u32, bytes)
            .ok_or_else(|| Error::Invariant("synthetic image has wrong size".into()))?;
        let path = dir.join(format!("place_{i:04}.png"));
        gray.save(&path).map_err(|source| Error::Image { path, source })?;
    }
    Ok(())
}

/// Writes a synthetic reference/query pair as PNG files plus a manifest into
/// `<output_dir>/dataset`.
pub fn cmd_synth(config: &ExperimentConfig) -> Result<SynthOutcome> {
    let s = &config.synthetic;
    let seed = s.seed.unwrap_or_else(|| derive_seed(config.master_seed, "synthetic", &[]));
    let data = generate_synthetic_dataset(s.places, s.noise_sigma, s.occlusion_fraction, seed)?;
    let side = crate::data::synthetic::SYNTH_SIDE;
    let dir = config.output_dir.join("dataset");
    write_traverse(&dir.join("reference"), &data.reference, side)?;
    write_traverse(&dir.join("query"), &data.query, side)?;
    let manifest = DatasetManifest {
        name: "synthetic".into(),
        reference: ImageList::Directory("reference".into()),
        query: ImageList::Directory("query".into()),
        ground_truth: GroundTruthRule::Named("aligned".into()),
        preprocess: PreprocessConfig::default(),
    };
    let path = dir.join("manifest.json");
    manifest.save(&path)?;
    log::info!("wrote {} synthetic places to {}", s.places, dir.display());
    Ok(SynthOutcome {
        manifest: path,
        places: s.places,
    })
}
