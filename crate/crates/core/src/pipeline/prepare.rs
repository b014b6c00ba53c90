use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::data::{
    f64s_from_le_bytes, f64s_to_le_bytes, load_images, sha256_hex, DatasetManifest, PlaceDataset,
    PreprocessConfig, Role, FORMAT_VERSION,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SourceFile {
    path: PathBuf,
    sha256: String,
}

/// Everything the cached vectors were computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CacheSource {
    manifest_sha256: String,
    preprocess: PreprocessConfig,
    files: Vec<SourceFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CacheHeader {
    format_version: u32,
    role: Role,
    /// `[images, pixels]`.
    shape: [usize; 2],
    ground_truth: Vec<Option<usize>>,
    source_sha256: String,
    source: CacheSource,
    data_file: String,
    sha256: String,
}

/// Result of [`cmd_prepare`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrepareOutcome {
    pub cache_hit: bool,
    pub reference_count: usize,
    pub query_count: usize,
    pub cache_dir: PathBuf,
}

pub fn cache_dir(config: &ExperimentConfig) -> PathBuf {
    config.output_dir.join("cache")
}

fn header_path(dir: &Path, role: Role) -> PathBuf {
    dir.join(match role {
        Role::Reference => "reference.json",
        Role::Query => "query.json",
    })
}

fn describe_sources(paths: &[PathBuf], manifest_sha256: &str, preprocess: &PreprocessConfig) -> Result<CacheSource> {
    let mut files = Vec::with_capacity(paths.len());
    let mut missing = Vec::new();
    for path in paths {
        match fs::read(path) {
            Ok(bytes) => files.push(SourceFile {
                path: path.clone(),
                sha256: sha256_hex(&bytes),
            }),
            Err(_) => missing.push(path.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingImages(missing));
    }
    Ok(CacheSource {
        manifest_sha256: manifest_sha256.to_string(),
        preprocess: preprocess.clone(),
        files,
    })
}

fn source_digest(source: &CacheSource) -> String {
    sha256_hex(&serde_json::to_vec(source).expect("cache source serializes"))
}

fn read_header(path: &Path) -> Result<CacheHeader> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::json(path, e))
}

fn read_cached(dir: &Path, role: Role) -> Result<(CacheHeader, Vec<f64>)> {
    let path = header_path(dir, role);
    let header = read_header(&path)?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::artifact(&path, "unsupported cache format version"));
    }
    let bin = dir.join(&header.data_file);
    let bytes = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    if sha256_hex(&bytes) != header.sha256 {
        return Err(Error::artifact(&bin, "checksum mismatch"));
    }
    let values = f64s_from_le_bytes(&bytes)
        .filter(|v| v.len() == header.shape[0] * header.shape[1])
        .ok_or_else(|| Error::artifact(&bin, "payload length does not match shape"))?;
    Ok((header, values))
}

fn cache_is_current(dir: &Path, role: Role, digest: &str) -> bool {
    matches!(read_cached(dir, role), Ok((h, _)) if h.source_sha256 == digest)
}

fn write_cached(dir: &Path, role: Role, dataset: &PlaceDataset, source: CacheSource) -> Result<()> {
    let pixels = dataset.pixel_count().unwrap_or(0);
    let flat: Vec<f64> = dataset.images().flat_map(|img| img.iter().copied()).collect();
    let bytes = f64s_to_le_bytes(&flat);
    let data_file = match role {
        Role::Reference => "reference.bin",
        Role::Query => "query.bin",
    };
    let bin = dir.join(data_file);
    fs::write(&bin, &bytes).map_err(|e| Error::io(&bin, e))?;
    let header = CacheHeader {
        format_version: FORMAT_VERSION,
        role,
        shape: [dataset.len(), pixels],
        ground_truth: dataset.ground_truth.clone(),
        source_sha256: source_digest(&source),
        source,
        data_file: data_file.into(),
        sha256: sha256_hex(&bytes),
    };
    let path = header_path(dir, role);
    let json = serde_json::to_vec_pretty(&header).map_err(|e| Error::json(&path, e))?;
    fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

/// Preprocesses every manifest image once and caches the vectors with
/// checksums. Unchanged inputs are a cache hit and nothing is recomputed.
pub fn cmd_prepare(config: &ExperimentConfig) -> Result<PrepareOutcome> {
    let manifest_path = config.manifest_path();
    let manifest_bytes = fs::read(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest = DatasetManifest::load(&manifest_path)?;
    if manifest.preprocess.pixel_count() != config.params.k_p {
        return Err(Error::Config(format!(
            "manifest resolution {}x{} does not match k_p = {}",
            manifest.preprocess.width, manifest.preprocess.height, config.params.k_p
        )));
    }
    let base = manifest_path.parent().unwrap_or_else(|| Path::new(""));
    let ref_paths = DatasetManifest::resolve(&manifest.reference, base)?;
    let query_paths = DatasetManifest::resolve(&manifest.query, base)?;
    let manifest_sha = sha256_hex(&manifest_bytes);

    let mut missing = Vec::new();
    let mut sources = Vec::new();
    for paths in [&ref_paths, &query_paths] {
        match describe_sources(paths, &manifest_sha, &manifest.preprocess) {
            Ok(s) => sources.push(s),
            Err(Error::MissingImages(m)) => missing.extend(m),
            Err(e) => return Err(e),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingImages(missing));
    }
    let query_source = sources.pop().expect("two sources");
    let ref_source = sources.pop().expect("two sources");

    let dir = cache_dir(config);
    let (ref_digest, query_digest) = (source_digest(&ref_source), source_digest(&query_source));
    if cache_is_current(&dir, Role::Reference, &ref_digest) && cache_is_current(&dir, Role::Query, &query_digest) {
        log::info!("preprocessed cache in {} is current", dir.display());
        return Ok(PrepareOutcome {
            cache_hit: true,
            reference_count: ref_paths.len(),
            query_count: query_paths.len(),
            cache_dir: dir,
        });
    }

    // decode both traverses before reporting so every bad file is listed
    let ref_images = load_images(&ref_paths, &manifest.preprocess);
    let query_images = load_images(&query_paths, &manifest.preprocess);
    let (ref_images, query_images) = match (ref_images, query_images) {
        (Ok(r), Ok(q)) => (r, q),
        (r, q) => {
            let mut bad = Vec::new();
            for res in [r, q] {
                match res {
                    Err(Error::MissingImages(m)) => bad.extend(m),
                    Err(e) => return Err(e),
                    Ok(_) => {}
                }
            }
            return Err(Error::MissingImages(bad));
        }
    };
    let ground_truth = manifest.ground_truth_targets(ref_images.len(), query_images.len())?;
    let reference = PlaceDataset::reference(ref_images);
    let query = PlaceDataset::query(query_images, ground_truth);
    PlaceDataset::validate_pair(&reference, &query)?;

    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_cached(&dir, Role::Reference, &reference, ref_source)?;
    write_cached(&dir, Role::Query, &query, query_source)?;
    log::info!(
        "cached {} reference and {} query images in {}",
        reference.len(),
        query.len(),
        dir.display()
    );
    Ok(PrepareOutcome {
        cache_hit: false,
        reference_count: reference.len(),
        query_count: query.len(),
        cache_dir: dir,
    })
}

fn to_dataset(header: CacheHeader, values: Vec<f64>) -> PlaceDataset {
    let pixels = header.shape[1].max(1);
    let images: Vec<Vec<f64>> = values.chunks(pixels).map(<[f64]>::to_vec).collect();
    match header.role {
        Role::Reference => PlaceDataset::reference(images),
        Role::Query => PlaceDataset::query(images, header.ground_truth),
    }
}

/// Loads the reference and query sets written by [`cmd_prepare`].
pub fn load_prepared(config: &ExperimentConfig) -> Result<(PlaceDataset, PlaceDataset)> {
    let dir = cache_dir(config);
    let (rh, rv) = read_cached(&dir, Role::Reference).map_err(|e| match e {
        Error::Io { path, .. } => Error::Data(format!(
            "no preprocessed cache at {} (run prepare first)",
            path.display()
        )),
        other => other,
    })?;
    let (qh, qv) = read_cached(&dir, Role::Query)?;
    let reference = to_dataset(rh, rv);
    let query = to_dataset(qh, qv);
    PlaceDataset::validate_pair(&reference, &query)?;
    Ok((reference, query))
}
