use std::fs;
use std::path::Path;
use std::process::Command;

use spikeplace::data::{DatasetManifest, ImageList};
use spikeplace::pipeline::{
    cmd_evaluate, cmd_infer, cmd_prepare, cmd_report, cmd_synth, cmd_train, ExperimentConfig,
};
use spikeplace::{Error, SimulationParams};

fn tiny(out: &Path, workers: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.synthetic.places = 12;
    c.kappa = 6;
    c.epochs = 1;
    c.params = SimulationParams {
        k_e: 20,
        k_i: 20,
        ..SimulationParams::default()
    };
    c.ensemble.members = 2;
    c.seq_lengths = vec![1, 2];
    c.recall_n = vec![1, 5];
    c.output_dir = out.to_path_buf();
    c.workers = Some(workers);
    c
}

fn full_run(c: &ExperimentConfig) {
    cmd_synth(c).unwrap();
    let first = cmd_prepare(c).unwrap();
    assert!(!first.cache_hit);
    assert_eq!((first.reference_count, first.query_count), (12, 12));
    assert!(cmd_prepare(c).unwrap().cache_hit);
    let trained = cmd_train(c).unwrap();
    assert_eq!((trained.members, trained.modules), (2, 4));
    let inferred = cmd_infer(c).unwrap();
    assert_eq!(inferred.shape, (12, 12));
    let cumulative: Vec<usize> = inferred.latency.entries.iter().map(|e| e.cumulative).collect();
    assert_eq!(cumulative, (1..=12).collect::<Vec<_>>());
    let report = cmd_evaluate(c, &[]).unwrap();
    assert!(report.method("ensemble").is_some());
    assert_eq!(report.members().count(), 2);
}

#[test]
fn end_to_end_is_deterministic_and_worker_independent() {
    let root = tempfile::tempdir().unwrap();
    let a = tiny(&root.path().join("a"), 1);
    let b = tiny(&root.path().join("b"), 3);
    full_run(&a);
    full_run(&b);
    for file in ["metrics/metrics.json", "metrics/plot_data.json", "ensemble/ensemble.json", "matrices/similarity.bin"] {
        let x = fs::read(a.output_dir.join(file)).unwrap();
        let y = fs::read(b.output_dir.join(file)).unwrap();
        assert!(x == y, "{file} differs between worker counts");
    }

    // rerunning training resumes every module
    assert_eq!(cmd_train(&a).unwrap().resumed, 4);

    let report = cmd_report(&[a.output_dir.join("metrics/metrics.json")], &root.path().join("report"), Some(2)).unwrap();
    assert_eq!(report.ablation.len(), 1);
    assert!(root.path().join("report/report.md").is_file());
}

#[test]
fn missing_images_are_listed() {
    let root = tempfile::tempdir().unwrap();
    let c = tiny(root.path(), 1);
    let synth = cmd_synth(&c).unwrap();
    // explicit file lists, so deleted files are noticed
    let mut manifest = DatasetManifest::load(&synth.manifest).unwrap();
    let list = |dir: &str| ImageList::Files((0..12).map(|i| format!("{dir}/place_{i:04}.png").into()).collect());
    manifest.reference = list("reference");
    manifest.query = list("query");
    manifest.save(&synth.manifest).unwrap();
    let gone = ["reference/place_0003.png", "query/place_0007.png"];
    for g in gone {
        fs::remove_file(root.path().join("dataset").join(g)).unwrap();
    }
    let err = cmd_prepare(&c).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    let Error::MissingImages(paths) = &err else {
        panic!("unexpected error {err}");
    };
    assert_eq!(paths.len(), gone.len(), "{err}");
}

#[test]
fn corrupt_image_is_named() {
    let root = tempfile::tempdir().unwrap();
    let c = tiny(root.path(), 1);
    cmd_synth(&c).unwrap();
    let bad = root.path().join("dataset/query/place_0002.png");
    fs::write(&bad, b"not a png").unwrap();
    let err = cmd_prepare(&c).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("place_0002.png"), "{err}");
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_spikeplace"))
        .args(args)
        .env("SPIKEPLACE_LOG", "warn")
        .output()
        .unwrap()
}

#[test]
fn cli_exit_codes() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().to_str().unwrap();

    let missing = cli(&["prepare", "--config", "/nonexistent/config.json"]);
    assert_eq!(missing.status.code(), Some(2));

    let bad_seq = cli(&["synth", "--out", out, "--seq-lengths", "0"]);
    assert_eq!(bad_seq.status.code(), Some(2));

    let bad_boundary = cli(&["synth", "--out", out, "--boundary", "wrap"]);
    assert_eq!(bad_boundary.status.code(), Some(2));

    let config = root.path().join("config.json");
    let mut c = tiny(Path::new("run"), 1);
    c.workers = None;
    c.save(&config).unwrap();
    let cfg = config.to_str().unwrap();
    let synth = cli(&["synth", "--config", cfg]);
    assert_eq!(synth.status.code(), Some(0), "{}", String::from_utf8_lossy(&synth.stderr));
    assert!(root.path().join("run/dataset/manifest.json").is_file());

    fs::write(root.path().join("run/dataset/reference/place_0000.png"), b"junk").unwrap();
    let prepare = cli(&["prepare", "--config", cfg]);
    assert_eq!(prepare.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&prepare.stderr).contains("place_0000.png"));
}
