use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::sha256_hex;
use crate::ensemble::EnsembleConfig;
use crate::error::{Error, Result};
use crate::eval::Boundary;
use crate::modular::{ModularTraining, ThetaRegime};
use crate::params::SimulationParams;

/// Ensemble size and diversity switches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSettings {
    pub members: usize,
    pub randomize_weights: bool,
    pub shuffle_order: bool,
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        Self {
            members: 1,
            randomize_weights: true,
            shuffle_order: true,
        }
    }
}

/// Settings of the `synth` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSettings {
    pub places: usize,
    pub noise_sigma: f64,
    pub occlusion_fraction: f64,
    /// `None` derives the dataset seed from the master seed.
    pub seed: Option<u64>,
}

impl Default for SyntheticSettings {
    fn default() -> Self {
        Self {
            places: 100,
            noise_sigma: 15.0,
            occlusion_fraction: 0.1,
            seed: None,
        }
    }
}

/// One JSON document describing a whole experiment. Every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Dataset manifest. Defaults to the manifest written by `synth` inside
    /// the output directory.
    pub manifest: Option<PathBuf>,
    pub synthetic: SyntheticSettings,
    pub params: SimulationParams,
    pub kappa: usize,
    pub epochs: usize,
    pub ensemble: EnsembleSettings,
    pub theta: ThetaRegime,
    pub detection_subsample: Option<f64>,
    pub seq_lengths: Vec<usize>,
    pub recall_n: Vec<usize>,
    pub boundary: Boundary,
    pub gt_tolerance: usize,
    pub master_seed: u64,
    pub method: String,
    pub output_dir: PathBuf,
    /// Worker threads; `None` uses every core. Never affects results.
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let training = ModularTraining::default();
        Self {
            manifest: None,
            synthetic: SyntheticSettings::default(),
            params: SimulationParams::default(),
            kappa: training.kappa,
            epochs: training.epochs,
            ensemble: EnsembleSettings::default(),
            theta: training.theta,
            detection_subsample: training.detection_subsample,
            seq_lengths: vec![1, 2, 4, 10],
            recall_n: vec![1, 5, 10],
            boundary: Boundary::default(),
            gt_tolerance: 0,
            master_seed: 0,
            method: "modular-snn".into(),
            output_dir: PathBuf::from("run"),
            workers: None,
        }
    }
}

impl ExperimentConfig {
    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        if let Some(m) = &config.manifest {
            config.manifest = Some(base.join(m));
        }
        config.output_dir = base.join(&config.output_dir);
        config.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.training().validate()?;
        if self.ensemble.members == 0 {
            return Err(Error::Config("ensemble.members must be at least 1".into()));
        }
        if self.seq_lengths.is_empty() || self.seq_lengths.contains(&0) {
            return Err(Error::Config("seq_lengths must be a nonempty list of positive lengths".into()));
        }
        if self.recall_n.is_empty() || self.recall_n.contains(&0) {
            return Err(Error::Config("recall_n must be a nonempty list of positive values".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        let s = &self.synthetic;
        if s.places == 0 || !(s.noise_sigma >= 0.0) || !(0.0..=1.0).contains(&s.occlusion_fraction) {
            return Err(Error::Config(
                "synthetic settings need places >= 1, noise_sigma >= 0 and occlusion_fraction in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn training(&self) -> ModularTraining {
        ModularTraining {
            kappa: self.kappa,
            epochs: self.epochs,
            theta: self.theta,
            detection_subsample: self.detection_subsample,
        }
    }

    pub fn ensemble_config(&self) -> EnsembleConfig {
        EnsembleConfig::from_master(
            self.master_seed,
            self.ensemble.members,
            self.ensemble.randomize_weights,
            self.ensemble.shuffle_order,
        )
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.manifest
            .clone()
            .unwrap_or_else(|| self.output_dir.join("dataset").join("manifest.json"))
    }

    /// SHA-256 over every setting that can influence a numerical result.
    /// The output directory and worker count are excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        canonical.workers = None;
        canonical.manifest = None;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        sha256_hex(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.kappa, 25);
        assert_eq!(c.epochs, 30);
        c.validate().unwrap();
    }

    #[test]
    fn partial_param_overrides_keep_other_defaults() {
        let c: ExperimentConfig =
            serde_json::from_str(r#"{"params": {"k_e": 100, "k_i": 100}, "kappa": 10}"#).unwrap();
        assert_eq!(c.params.k_e, 100);
        assert_eq!(c.params.tau_e, SimulationParams::default().tau_e);
        assert_eq!(c.kappa, 10);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"kapa": 3}"#).is_err());
    }

    #[test]
    fn hash_ignores_workers_and_output() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig {
            workers: Some(8),
            output_dir: "elsewhere".into(),
            ..a.clone()
        };
        let c = ExperimentConfig {
            master_seed: 1,
            ..a.clone()
        };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn invalid_lists_rejected() {
        let c = ExperimentConfig {
            seq_lengths: vec![1, 0],
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}
