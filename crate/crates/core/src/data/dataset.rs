//! Place datasets and JSON manifests pairing reference and query traverses.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::preprocess::{patch_normalize, preprocess_dynamic, PreprocessConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Reference,
    Query,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Place {
    pub place_id: usize,
    pub image: Vec<f64>,
}

/// An ordered traverse of preprocessed images.
///
/// Reference datasets number their places `0..L`. Query datasets carry
/// `ground_truth[q]`, the reference place matching query `q` (if any).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaceDataset {
    pub role: Role,
    pub places: Vec<Place>,
    #[serde(default)]
    pub ground_truth: Vec<Option<usize>>,
}

impl PlaceDataset {
    pub fn reference(images: Vec<Vec<f64>>) -> Self {
        Self {
            role: Role::Reference,
            places: images
                .into_iter()
                .enumerate()
                .map(|(place_id, image)| Place { place_id, image })
                .collect(),
            ground_truth: Vec::new(),
        }
    }

    pub fn query(images: Vec<Vec<f64>>, ground_truth: Vec<Option<usize>>) -> Self {
        Self {
            role: Role::Query,
            places: images
                .into_iter()
                .enumerate()
                .map(|(place_id, image)| Place { place_id, image })
                .collect(),
            ground_truth,
        }
    }

    /// Applies patch normalization to images that are already at the
    /// configured resolution, e.g. freshly generated synthetic places.
    pub fn patch_normalize(&mut self, config: &PreprocessConfig) -> Result<()> {
        config.validate()?;
        for place in &mut self.places {
            if place.image.len() != config.pixel_count() {
                return Err(Error::Dimension {
                    what: "image length vs preprocess resolution",
                    expected: config.pixel_count(),
                    actual: place.image.len(),
                });
            }
            patch_normalize(&mut place.image, config.width, config.height, config.patch);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.places.len()
    }

    pub fn is_empty(&self) -> bool {
        self.places.is_empty()
    }

    pub fn image(&self, index: usize) -> &[f64] {
        &self.places[index].image
    }

    pub fn images(&self) -> impl Iterator<Item = &[f64]> {
        self.places.iter().map(|p| p.image.as_slice())
    }

    /// Pixel count shared by all images, if the dataset is nonempty and uniform.
    pub fn pixel_count(&self) -> Option<usize> {
        let n = self.places.first()?.image.len();
        self.places.iter().all(|p| p.image.len() == n).then_some(n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pixel_count().is_none() && !self.is_empty() {
            return Err(Error::Data("images of differing sizes in one dataset".into()));
        }
        match self.role {
            Role::Reference => {
                for (i, p) in self.places.iter().enumerate() {
                    if p.place_id != i {
                        return Err(Error::Data(format!(
                            "reference place ids must be contiguous from 0; position {i} has id {}",
                            p.place_id
                        )));
                    }
                }
            }
            Role::Query => {
                if self.ground_truth.len() != self.places.len() {
                    return Err(Error::Data(format!(
                        "{} queries but {} ground-truth entries",
                        self.places.len(),
                        self.ground_truth.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checks that a query set is consistent with its reference set.
    pub fn validate_pair(reference: &PlaceDataset, query: &PlaceDataset) -> Result<()> {
        reference.validate()?;
        query.validate()?;
        if reference.role != Role::Reference || query.role != Role::Query {
            return Err(Error::Data("expected a (reference, query) pair".into()));
        }
        if let Some(bad) = query.ground_truth.iter().flatten().find(|&&r| r >= reference.len()) {
            return Err(Error::Data(format!(
                "ground truth names reference place {bad}, but only {} exist",
                reference.len()
            )));
        }
        if let (Some(a), Some(b)) = (reference.pixel_count(), query.pixel_count()) {
            if a != b {
                return Err(Error::Dimension {
                    what: "query vs reference pixel count",
                    expected: a,
                    actual: b,
                });
            }
        }
        Ok(())
    }
}

/// Image list of one traverse: explicit paths, or a directory whose image
/// files are taken in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ImageList {
    Files(Vec<PathBuf>),
    Directory(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroundTruthRule {
    /// `"aligned"`: query `q` matches reference place `q`.
    Named(String),
    /// Explicit `[query, reference]` pairs; unlisted queries have no match.
    Table(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub reference: ImageList,
    pub query: ImageList,
    pub ground_truth: GroundTruthRule,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
}

fn is_image_file(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("png" | "pgm" | "pnm" | "ppm" | "pbm")
    )
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: Self = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        manifest.preprocess.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Resolves an image list against the manifest's directory.
    pub fn resolve(list: &ImageList, base: &Path) -> Result<Vec<PathBuf>> {
        match list {
            ImageList::Files(files) => Ok(files.iter().map(|f| base.join(f)).collect()),
            ImageList::Directory(dir) => {
                let dir = base.join(dir);
                let entries = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
                let mut files = Vec::new();
                for entry in entries {
                    let path = entry.map_err(|e| Error::io(&dir, e))?.path();
                    if is_image_file(&path) {
                        files.push(path);
                    }
                }
                files.sort();
                Ok(files)
            }
        }
    }

    /// Query → reference correspondence for `n_query` queries.
    pub fn ground_truth_targets(&self, n_reference: usize, n_query: usize) -> Result<Vec<Option<usize>>> {
        match &self.ground_truth {
            GroundTruthRule::Named(rule) if rule == "aligned" => Ok((0..n_query)
                .map(|q| (q < n_reference).then_some(q))
                .collect()),
            GroundTruthRule::Named(other) => Err(Error::Config(format!(
                "unknown ground-truth rule {other:?} (expected \"aligned\" or a table)"
            ))),
            GroundTruthRule::Table(pairs) => {
                let mut gt = vec![None; n_query];
                for &(q, r) in pairs {
                    if q >= n_query || r >= n_reference {
                        return Err(Error::Data(format!(
                            "ground-truth pair ({q}, {r}) out of range"
                        )));
                    }
                    gt[q] = Some(r);
                }
                Ok(gt)
            }
        }
    }
}

/// Loads and preprocesses a list of image files. Every unreadable file is
/// reported, not just the first.
pub fn load_images(paths: &[PathBuf], config: &PreprocessConfig) -> Result<Vec<Vec<f64>>> {
    let mut images = Vec::with_capacity(paths.len());
    let mut failed = Vec::new();
    for path in paths {
        match image::open(path) {
            Ok(img) => images.push(preprocess_dynamic(&img, config)?),
            Err(e) => {
                log::warn!("cannot read {}: {e}", path.display());
                failed.push(path.clone());
            }
        }
    }
    if failed.is_empty() {
        Ok(images)
    } else {
        Err(Error::MissingImages(failed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_parses_both_ground_truth_forms() {
        let aligned: DatasetManifest = serde_json::from_str(
            r#"{"name":"a","reference":["r0.png"],"query":"q/","ground_truth":"aligned",
                "preprocess":{"width":28,"height":28,"patch":7}}"#,
        )
        .unwrap();
        assert_eq!(aligned.ground_truth_targets(3, 4).unwrap(), vec![Some(0), Some(1), Some(2), None]);
        assert_eq!(aligned.query, ImageList::Directory("q/".into()));

        let table: DatasetManifest = serde_json::from_str(
            r#"{"name":"b","reference":[],"query":[],"ground_truth":[[0,2],[1,0]]}"#,
        )
        .unwrap();
        assert_eq!(table.ground_truth_targets(3, 3).unwrap(), vec![Some(2), Some(0), None]);
        assert!(table.ground_truth_targets(2, 3).is_err());
    }

    #[test]
    fn reference_ids_must_be_contiguous() {
        let mut ds = PlaceDataset::reference(vec![vec![0.0; 4]; 3]);
        ds.validate().unwrap();
        ds.places[1].place_id = 7;
        assert!(ds.validate().is_err());
    }

    #[test]
    fn ground_truth_targets_must_exist() {
        let r = PlaceDataset::reference(vec![vec![0.0; 4]; 2]);
        let q = PlaceDataset::query(vec![vec![0.0; 4]; 2], vec![Some(1), Some(2)]);
        assert!(PlaceDataset::validate_pair(&r, &q).is_err());
    }
}
