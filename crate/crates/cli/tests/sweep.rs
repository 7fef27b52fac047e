use std::process::Command;

use szlab::emit::{read_records, write_records};
use szlab::io::write_mnist_idx;
use szlab::preset::Preset;
use szlab::sweep::{run_sweep, SweepConfig};
use szlab_core::{
    evaluate, fit, synthetic_blobs_with, BlobsConfig, Dataset, Network, NetworkSpec, Regime, Split, TrainConfig,
    WindowKind, WindowSpec,
};

/// Separable 28×28 images: Gaussian blobs in 784 dimensions, squashed into [0, 1].
fn digits(n: usize, seed: u64) -> Dataset {
    let blobs = synthetic_blobs_with(BlobsConfig {
        n,
        classes: 10,
        dim: 784,
        separation: 10.0,
        seed,
    })
    .unwrap();
    let images = blobs.images().iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect();
    Dataset::new([28, 28, 1], images, blobs.labels().to_vec(), 10).unwrap()
}

fn quiet(_: &str) {}

#[test]
fn developmental_sweep_counts() {
    let (train, val) = (digits(2500, 1), digits(200, 2));
    let mut cfg = SweepConfig::new(Preset::ADev);
    cfg.reductions = vec![0.0, 0.5];
    cfg.sessions = 3;
    cfg.epochs = 2;
    cfg.subset = Some(2000);
    let out = run_sweep(&cfg, &train, &val, &mut quiet).unwrap();
    assert_eq!(out.runs, 6);
    for split in [Split::Train, Split::Val] {
        assert_eq!(out.records.iter().filter(|r| r.split == split).count(), 12);
    }
    assert_eq!(out.manifest.train_samples, 2000);
    assert_eq!(out.manifest.session_seeds, vec![1, 2, 3]);
    assert_eq!(out.summary.len(), 4);

    let finals: Vec<f64> = out
        .records
        .iter()
        .filter(|r| r.split == Split::Val && r.window == "diagonal" && r.epoch == 2)
        .map(|r| r.error_pct)
        .collect();
    let row = out
        .summary
        .iter()
        .find(|r| r.split == "val" && r.window == "diagonal")
        .unwrap();
    assert_eq!(row.sessions, 3);
    assert!((row.error_mean - finals.iter().sum::<f64>() / 3.0).abs() < 1e-9);
}

#[test]
fn degenerate_disorganized_sweep_matches_direct_evaluation() {
    let (train, val) = (digits(600, 3), digits(300, 4));
    let mut cfg = SweepConfig::new(Preset::BDis);
    cfg.reductions = vec![0.0];
    cfg.sessions = 1;
    cfg.epochs = 2;
    cfg.hidden = 32;
    let out = run_sweep(&cfg, &train, &val, &mut quiet).unwrap();
    assert_eq!(out.runs, 1);

    let spec = NetworkSpec::network_b(32, Some(WindowSpec::full()));
    let mut net = Network::<f32>::new(&spec, Regime::Disorganized, cfg.seed).unwrap();
    let train_cfg = TrainConfig {
        epochs: 2,
        batch_size: cfg.batch_size,
        optimizer: Preset::BDis.optimizer(),
        seed: cfg.seed,
        session: 0,
    };
    fit(&mut net, &train, None, &train_cfg).unwrap();
    let direct = evaluate(&net, &val, None).unwrap();
    let row = out.summary.iter().find(|r| r.split == "val").unwrap();
    assert_eq!((row.window.as_str(), row.reduction_target), ("full", 0.0));
    assert_eq!(row.error_mean, direct.error_pct);
    assert_eq!(row.loss_mean, direct.loss);
}

#[test]
fn disorganized_cells_share_one_trained_network() {
    let (train, val) = (digits(400, 5), digits(200, 6));
    let mut cfg = SweepConfig::new(Preset::BDis);
    cfg.reductions = vec![0.0, 0.5, 0.9];
    cfg.windows = vec![WindowKind::Diagonal, WindowKind::Gaussian];
    cfg.sessions = 2;
    cfg.epochs = 1;
    cfg.hidden = 32;
    let out = run_sweep(&cfg, &train, &val, &mut quiet).unwrap();
    assert_eq!(out.runs, 2);
    assert_eq!(out.records.iter().filter(|r| r.split == Split::Val).count(), 2 * 5);
    assert_eq!(out.records.iter().filter(|r| r.split == Split::Train).count(), 2);
    for r in out.records.iter().filter(|r| r.window == "gaussian") {
        assert!((r.reduction_achieved - r.reduction_target).abs() < 1e-4);
    }
}

#[test]
fn reruns_write_identical_csv() {
    let (train, val) = (digits(300, 7), digits(100, 8));
    let mut cfg = SweepConfig::new(Preset::ADev);
    cfg.reductions = vec![0.6];
    cfg.windows = vec![WindowKind::Random];
    cfg.sessions = 2;
    cfg.epochs = 1;
    let csv = || {
        let out = run_sweep(&cfg, &train, &val, &mut quiet).unwrap();
        let mut buf = Vec::new();
        write_records(&out.records, &mut buf).unwrap();
        buf
    };
    let first = csv();
    assert_eq!(first, csv());
    assert_eq!(read_records(first.as_slice()).unwrap().len(), 4);
}

fn szlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_szlab"))
}

#[test]
fn command_line_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let data_dir = dir.path().join("data");
    std::fs::create_dir_all(&data_dir).unwrap();
    let (train, val) = (digits(200, 9), digits(100, 10));
    write_mnist_idx(
        &train,
        &data_dir.join("train-images-idx3-ubyte"),
        &data_dir.join("train-labels-idx1-ubyte"),
    )
    .unwrap();
    write_mnist_idx(
        &val,
        &data_dir.join("t10k-images-idx3-ubyte"),
        &data_dir.join("t10k-labels-idx1-ubyte"),
    )
    .unwrap();

    let out_dir = dir.path().join("out");
    let config = dir.path().join("sweep.conf");
    std::fs::write(
        &config,
        "preset = a-dev\nsessions = 2\nepochs = 1\nreductions = 0.5\nwindow = diagonal,random\n",
    )
    .unwrap();
    let status = szlab()
        .arg("sweep")
        .arg("--config")
        .arg(&config)
        .arg("--data-dir")
        .arg(&data_dir)
        .arg("--out-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["runs"], 4);
    assert_eq!(manifest["overrides"]["sessions"], "2");

    let stats = szlab()
        .arg("stats")
        .arg(out_dir.join("records.csv"))
        .args(["--a", "diagonal@0.5", "--b", "random@0.5"])
        .output()
        .unwrap();
    assert!(stats.status.success(), "{}", String::from_utf8_lossy(&stats.stderr));
    assert!(String::from_utf8_lossy(&stats.stdout).contains("exact"));

    let pgm = dir.path().join("w.pgm");
    let window = szlab()
        .args(["window", "--n-x", "16", "--n-y", "8", "--reduction", "0.5", "--out"])
        .arg(&pgm)
        .output()
        .unwrap();
    assert!(window.status.success());
    assert!(std::fs::read(&pgm).unwrap().starts_with(b"P5\n8 16\n255\n"));

    let missing = szlab()
        .args(["train", "--preset", "a-dev", "--data-dir"])
        .arg(dir.path().join("nowhere"))
        .output()
        .unwrap();
    assert!(!missing.status.success());
    let bad = szlab()
        .args(["train", "--preset", "a-dev", "--reductions", "1.2", "--data-dir"])
        .arg(&data_dir)
        .output()
        .unwrap();
    assert!(!bad.status.success());
}
