//! Multi-session sweeps over reduction targets and window kinds.
//!
//! Developmental presets train one network per (cell, session). Disorganized
//! presets train one unwindowed network per session and evaluate it under
//! every cell's window.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use szlab_core::{
    describe_window, evaluate, fit, Dataset, MetricsRecord, Network, Regime, Split, TrainConfig, WindowKind, WindowSpec,
};

use crate::config::Settings;
use crate::emit::{emit_csv, emit_summary, sort_records, summarize, SummaryRow};
use crate::error::{Error, Result};
use crate::preset::{Preset, BATCH_SIZE, DEFAULT_HIDDEN};

/// Reduction grid used when none is given.
pub const DEFAULT_REDUCTIONS: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95];
pub const DEFAULT_SEED: u64 = 1;

pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub preset: Preset,
    pub reductions: Vec<f64>,
    pub windows: Vec<WindowKind>,
    pub sessions: usize,
    pub epochs: usize,
    pub hidden: usize,
    pub seed: u64,
    pub subset: Option<usize>,
    pub l1: Option<f64>,
    pub batch_size: usize,
}

impl SweepConfig {
    pub fn new(preset: Preset) -> Self {
        Self {
            preset,
            reductions: DEFAULT_REDUCTIONS.to_vec(),
            windows: vec![WindowKind::Diagonal],
            sessions: preset.default_sessions(),
            epochs: preset.default_epochs(),
            hidden: DEFAULT_HIDDEN,
            seed: DEFAULT_SEED,
            subset: None,
            l1: None,
            batch_size: BATCH_SIZE,
        }
    }

    pub fn from_settings(settings: &Settings) -> Result<Self> {
        let preset = settings
            .preset
            .ok_or_else(|| Error::Invalid("no preset given (use --preset)".into()))?;
        let base = Self::new(preset);
        Ok(Self {
            reductions: settings.reductions.clone().unwrap_or(base.reductions),
            windows: settings.windows.clone().unwrap_or(base.windows),
            sessions: settings.sessions.unwrap_or(base.sessions),
            epochs: settings.epochs.unwrap_or(base.epochs),
            hidden: settings.hidden.unwrap_or(base.hidden),
            seed: settings.seed.unwrap_or(base.seed),
            subset: settings.subset,
            l1: settings.l1,
            ..base
        })
    }

    /// Window cells of the sweep. A zero target collapses to one full cell.
    pub fn cells(&self) -> Vec<WindowSpec> {
        let mut cells = Vec::new();
        for &rho in &self.reductions {
            if rho == 0.0 {
                cells.push(WindowSpec::full());
                continue;
            }
            for &kind in &self.windows {
                cells.push(WindowSpec::new(kind, rho));
            }
        }
        let mut seen = Vec::new();
        cells.retain(|c| {
            let key = (c.kind, c.target_reduction.to_bits());
            !seen.contains(&key) && {
                seen.push(key);
                true
            }
        });
        cells
    }

    fn validate(&self) -> Result<()> {
        if self.sessions == 0 {
            return Err(Error::Invalid("--sessions must be at least 1".into()));
        }
        if self.reductions.is_empty() || self.windows.is_empty() {
            return Err(Error::Invalid("need at least one reduction and one window kind".into()));
        }
        for cell in self.cells() {
            cell.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellInfo {
    pub session: usize,
    pub window: String,
    pub reduction_target: f64,
    pub reduction_achieved: f64,
    pub window_parameter: Option<f64>,
}

/// Everything needed to rerun a sweep bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub preset: String,
    pub regime: String,
    pub network: String,
    pub reductions: Vec<f64>,
    pub windows: Vec<String>,
    pub sessions: usize,
    pub epochs: usize,
    pub hidden: usize,
    pub batch_size: usize,
    pub subset: Option<usize>,
    pub l1: Option<f64>,
    pub base_seed: u64,
    pub session_seeds: Vec<u64>,
    pub optimizer: String,
    pub train_samples: usize,
    pub val_samples: usize,
    pub runs: usize,
    pub overrides: BTreeMap<String, String>,
    pub cells: Vec<CellInfo>,
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub records: Vec<MetricsRecord>,
    pub summary: Vec<SummaryRow>,
    /// Number of networks trained.
    pub runs: usize,
    pub manifest: Manifest,
}

fn session_seed(cfg: &SweepConfig, session: usize) -> u64 {
    cfg.seed.wrapping_add(session as u64)
}

/// Runs the sweep. `progress` receives one line per trained network.
pub fn run_sweep(
    cfg: &SweepConfig,
    train: &Dataset,
    val: &Dataset,
    progress: &mut dyn FnMut(&str),
) -> Result<SweepOutput> {
    cfg.validate()?;
    let train = match cfg.subset {
        Some(n) => train.subset(n),
        None => train.clone(),
    };
    let regime = cfg.preset.regime();
    let optimizer = cfg.preset.optimizer();
    let cells = cfg.cells();
    let mut records = Vec::new();
    let mut infos = Vec::new();
    let mut runs = 0;

    for session in 0..cfg.sessions {
        let seed = session_seed(cfg, session);
        let train_cfg = TrainConfig {
            epochs: cfg.epochs,
            batch_size: cfg.batch_size,
            optimizer,
            seed,
            session,
        };
        match regime {
            Regime::Developmental => {
                let mut plans: Vec<(Option<WindowSpec>, Option<f64>)> =
                    cells.iter().map(|c| (Some(c.with_seed(seed)), None)).collect();
                if cfg.l1.is_some() {
                    plans.push((None, cfg.l1));
                }
                for (window, l1) in plans {
                    let spec = cfg.preset.network(cfg.hidden, window, l1)?;
                    let mut net = Network::<f32>::new(&spec, regime, seed)?;
                    let recs = fit(&mut net, &train, Some(val), &train_cfg)?;
                    let (label, target, achieved) = describe_window(&net);
                    let parameter = net
                        .layers()
                        .iter()
                        .find_map(|l| l.window())
                        .and_then(|w| w.matrix.parameter());
                    infos.push(CellInfo {
                        session,
                        window: label.clone(),
                        reduction_target: target,
                        reduction_achieved: achieved,
                        window_parameter: parameter,
                    });
                    progress(&format!(
                        "session {session} {label}@{target}: val error {:.2}%",
                        recs.last().map_or(f64::NAN, |r| r.error_pct)
                    ));
                    records.extend(recs);
                    runs += 1;
                }
            }
            Regime::Disorganized => {
                let spec = cfg.preset.network(cfg.hidden, Some(WindowSpec::full()), cfg.l1)?;
                let mut net = Network::<f32>::new(&spec, regime, seed)?;
                records.extend(fit(&mut net, &train, None, &train_cfg)?);
                runs += 1;
                for cell in &cells {
                    let overrides = net.window_override(&cell.with_seed(seed))?;
                    let window = &overrides.windows()[0];
                    let e = evaluate(&net, val, Some(&overrides))?;
                    infos.push(CellInfo {
                        session,
                        window: cell.kind.as_str().to_owned(),
                        reduction_target: cell.target_reduction,
                        reduction_achieved: window.achieved_reduction(),
                        window_parameter: window.parameter(),
                    });
                    records.push(MetricsRecord {
                        session,
                        epoch: cfg.epochs,
                        split: Split::Val,
                        loss: e.loss,
                        error_pct: e.error_pct,
                        reduction_target: cell.target_reduction,
                        reduction_achieved: window.achieved_reduction(),
                        window: cell.kind.as_str().to_owned(),
                        seed,
                    });
                }
                progress(&format!(
                    "session {session}: trained and evaluated {} windows",
                    cells.len()
                ));
            }
        }
    }

    sort_records(&mut records);
    let summary = summarize(&records);
    let manifest = Manifest {
        tool: "szlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        preset: cfg.preset.id().into(),
        regime: regime.as_str().into(),
        network: cfg.preset.network(cfg.hidden, None, cfg.l1)?.name,
        reductions: cfg.reductions.clone(),
        windows: cfg.windows.iter().map(|k| k.as_str().to_owned()).collect(),
        sessions: cfg.sessions,
        epochs: cfg.epochs,
        hidden: cfg.hidden,
        batch_size: cfg.batch_size,
        subset: cfg.subset,
        l1: cfg.l1,
        base_seed: cfg.seed,
        session_seeds: (0..cfg.sessions).map(|s| session_seed(cfg, s)).collect(),
        optimizer: format!("{optimizer:?}"),
        train_samples: train.len(),
        val_samples: val.len(),
        runs,
        overrides: BTreeMap::new(),
        cells: infos,
        artifacts: BTreeMap::new(),
    };
    Ok(SweepOutput {
        records,
        summary,
        runs,
        manifest,
    })
}

/// Writes records, summary and manifest into `dir`, returning their paths.
pub fn write_outputs(out: &mut SweepOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let records = dir.join(RECORDS_FILE);
    let summary = dir.join(SUMMARY_FILE);
    let manifest = dir.join(MANIFEST_FILE);
    emit_csv(&out.records, &records)?;
    emit_summary(&out.summary, &summary)?;
    out.manifest.artifacts = BTreeMap::from([
        ("records".to_owned(), RECORDS_FILE.to_owned()),
        ("summary".to_owned(), SUMMARY_FILE.to_owned()),
    ]);
    let json = serde_json::to_string_pretty(&out.manifest)?;
    fs::write(&manifest, json + "\n").map_err(|e| Error::io(&manifest, e))?;
    Ok(vec![records, summary, manifest])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_target_collapses() {
        let mut cfg = SweepConfig::new(Preset::ADev);
        cfg.reductions = vec![0.0, 0.7, 0.0];
        cfg.windows = vec![WindowKind::Diagonal, WindowKind::Random];
        let cells = cfg.cells();
        assert_eq!(cells.len(), 3);
        assert_eq!(cells[0], WindowSpec::full());
    }

    #[test]
    fn settings_override_defaults() {
        let settings = Settings {
            preset: Some(Preset::BDis),
            epochs: Some(3),
            ..Settings::default()
        };
        let cfg = SweepConfig::from_settings(&settings).unwrap();
        assert_eq!(cfg.epochs, 3);
        assert_eq!(cfg.sessions, Preset::BDis.default_sessions());
        assert_eq!(cfg.reductions, DEFAULT_REDUCTIONS.to_vec());
        assert!(SweepConfig::from_settings(&Settings::default()).is_err());
    }
}
