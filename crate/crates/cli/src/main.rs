use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use szlab::config::{parse_reductions, parse_windows, Settings};
use szlab::emit::{emit_filters_ppm, emit_window_pgm, load_csv};
use szlab::io::{load_cifar10_dir, load_mnist_dir};
use szlab::preset::{DataKind, Preset, BATCH_SIZE};
use szlab::sweep::{run_sweep, write_outputs, SweepConfig};
use szlab::{Error, Result};
use szlab_core::layers::Layer;
use szlab_core::window::build_window;
use szlab_core::{
    evaluate, fit, mann_whitney_u, Dataset, NetworkSpec, Optimizer, Regime, Split, TrainConfig, WindowKind, WindowSpec,
};

#[derive(Parser)]
#[command(name = "szlab", version, about = "Distance-windowed network experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one network (first reduction and window kind, one session).
    Train(RunArgs),
    /// Sweep reductions x window kinds x sessions and write CSVs plus a manifest.
    Sweep(RunArgs),
    /// Build a window and write it as a PGM image.
    Window(WindowArgs),
    /// Rank-sum test between two cells of a records CSV.
    Stats(StatsArgs),
    /// Train a small CNN with a windowed first layer on CIFAR-10 and export its filters.
    ExportFilters(RunArgs),
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// Config file of `key = value` lines; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// a-dev, b-dis, c-dev or d-dis.
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long, env = "SZLAB_DATA_DIR")]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Comma-separated reduction targets in [0, 1).
    #[arg(long, value_parser = parse_reductions)]
    reductions: Option<::std::vec::Vec<f64>>,
    /// Comma-separated window kinds.
    #[arg(long, value_parser = parse_windows)]
    window: Option<::std::vec::Vec<WindowKind>>,
    #[arg(long)]
    sessions: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Hidden width of network B.
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Use only the first N training samples.
    #[arg(long)]
    subset: Option<usize>,
    /// L1 penalty on the top dense layer (network C baseline).
    #[arg(long)]
    l1: Option<f64>,
}

impl RunArgs {
    fn settings(&self) -> Result<Settings> {
        let file = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        let flags = Settings {
            preset: self.preset,
            data_dir: self.data_dir.clone(),
            out_dir: self.out_dir.clone(),
            reductions: self.reductions.clone(),
            windows: self.window.clone(),
            sessions: self.sessions,
            epochs: self.epochs,
            hidden: self.hidden,
            seed: self.seed,
            subset: self.subset,
            l1: self.l1,
        };
        Ok(file.overlay(flags))
    }
}

#[derive(Args)]
struct WindowArgs {
    #[arg(long, default_value = "diagonal")]
    window: WindowKind,
    /// Target reduction.
    #[arg(long, default_value_t = 0.6)]
    reduction: f64,
    #[arg(long, default_value_t = 512)]
    n_x: usize,
    #[arg(long, default_value_t = 512)]
    n_y: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output PGM path.
    #[arg(long, default_value = "window.pgm")]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    /// Records CSV written by `train` or `sweep`.
    csv: PathBuf,
    /// First cell as `window@reduction`, e.g. `diagonal@0.7`.
    #[arg(long)]
    a: String,
    /// Second cell as `window@reduction`.
    #[arg(long)]
    b: String,
    #[arg(long, default_value = "val")]
    split: Split,
}

fn data_dir(settings: &Settings) -> Result<&Path> {
    settings
        .data_dir
        .as_deref()
        .ok_or_else(|| Error::Invalid("no data directory (use --data-dir or SZLAB_DATA_DIR)".into()))
}

fn load_data(kind: DataKind, dir: &Path) -> Result<(Dataset, Dataset)> {
    match kind {
        DataKind::Mnist => load_mnist_dir(dir),
        DataKind::Cifar10 => load_cifar10_dir(dir),
    }
}

fn sweep(args: &RunArgs, single: bool) -> Result<()> {
    let settings = args.settings()?;
    let mut cfg = SweepConfig::from_settings(&settings)?;
    if single {
        cfg.sessions = 1;
        cfg.reductions.truncate(1);
        cfg.windows.truncate(1);
        if settings.epochs.is_none() {
            cfg.epochs = cfg.preset.default_epochs();
        }
    }
    let (train, val) = load_data(cfg.preset.data(), data_dir(&settings)?)?;
    let mut out = run_sweep(&cfg, &train, &val, &mut |line| eprintln!("{line}"))?;
    out.manifest.overrides = settings.explicit();
    let dir = settings.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    for path in write_outputs(&mut out, &dir)? {
        println!("wrote {}", path.display());
    }
    for row in out.summary.iter().filter(|r| r.split == "val") {
        println!(
            "{:>9} rho={:<5} achieved={:.4} error={:.3}% sd={:.3} (n={})",
            row.window, row.reduction_target, row.reduction_achieved_mean, row.error_mean, row.error_sd, row.sessions
        );
    }
    Ok(())
}

fn window(args: &WindowArgs) -> Result<()> {
    let spec = WindowSpec::new(args.window, args.reduction).with_seed(args.seed);
    let w = build_window(&spec, args.n_x, args.n_y)?;
    emit_window_pgm(&w, &args.out)?;
    println!(
        "{} {}x{} target={} achieved={:.6}{}",
        w.kind(),
        w.n_x(),
        w.n_y(),
        w.target_reduction(),
        w.achieved_reduction(),
        w.parameter().map(|p| format!(" parameter={p:.6}")).unwrap_or_default()
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

fn parse_cell(s: &str) -> Result<(String, f64)> {
    let (window, rho) = s
        .split_once('@')
        .ok_or_else(|| Error::Invalid(format!("cell {s:?} is not window@reduction")))?;
    let rho = rho
        .parse()
        .map_err(|_| Error::Invalid(format!("bad reduction in {s:?}")))?;
    Ok((window.to_owned(), rho))
}

fn stats(args: &StatsArgs) -> Result<()> {
    let records = load_csv(&args.csv)?;
    let sample = |cell: &str| -> Result<Vec<f64>> {
        let (window, rho) = parse_cell(cell)?;
        let matching: Vec<_> = records
            .iter()
            .filter(|r| r.split == args.split && r.window == window && (r.reduction_target - rho).abs() < 1e-12)
            .collect();
        let last = matching.iter().map(|r| r.epoch).max();
        let values: Vec<f64> = matching
            .iter()
            .filter(|r| Some(r.epoch) == last)
            .map(|r| r.error_pct)
            .collect();
        if values.is_empty() {
            return Err(Error::Invalid(format!("no {} records for {cell}", args.split)));
        }
        Ok(values)
    };
    let (a, b) = (sample(&args.a)?, sample(&args.b)?);
    let test = mann_whitney_u(&a, &b)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!("{}: n={} mean error {:.4}%", args.a, a.len(), mean(&a));
    println!("{}: n={} mean error {:.4}%", args.b, b.len(), mean(&b));
    println!(
        "U={} p={:.6} ({})",
        test.u,
        test.p_value,
        if test.exact { "exact" } else { "normal approximation" }
    );
    Ok(())
}

fn export_filters(args: &RunArgs) -> Result<()> {
    let settings = args.settings()?;
    let rho = settings
        .reductions
        .as_ref()
        .and_then(|r| r.first().copied())
        .unwrap_or(0.417);
    let kind = settings
        .windows
        .as_ref()
        .and_then(|w| w.first().copied())
        .unwrap_or(WindowKind::Diagonal);
    let seed = settings.seed.unwrap_or(1);
    let (mut train, val) = load_cifar10_dir(data_dir(&settings)?)?;
    if let Some(n) = settings.subset {
        train = train.subset(n);
    }
    let spec = NetworkSpec::toy_cnn(Some(WindowSpec::new(kind, rho).with_seed(seed)));
    let mut net = szlab_core::Network::<f32>::new(&spec, Regime::Developmental, seed)?;
    let cfg = TrainConfig {
        epochs: settings.epochs.unwrap_or(5),
        batch_size: BATCH_SIZE,
        optimizer: Optimizer::rmsprop(1e-4, 1e-6),
        seed,
        session: 0,
    };
    for r in fit(&mut net, &train, None, &cfg)? {
        eprintln!("epoch {} train error {:.2}%", r.epoch, r.error_pct);
    }
    let e = evaluate(&net, &val, None)?;
    eprintln!("test error {:.2}%", e.error_pct);
    let Some(Layer::Conv2d(conv)) = net.layers().first() else {
        return Err(Error::Invalid("first layer is not a convolution".into()));
    };
    let dir = settings.out_dir.clone().unwrap_or_else(|| PathBuf::from("filters"));
    let paths = emit_filters_ppm(conv, &dir)?;
    println!("wrote {} filters to {}", paths.len(), dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(args) => sweep(args, true),
        Command::Sweep(args) => sweep(args, false),
        Command::Window(args) => window(args),
        Command::Stats(args) => stats(args),
        Command::ExportFilters(args) => export_filters(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
