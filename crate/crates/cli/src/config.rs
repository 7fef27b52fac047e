//! Run settings from a flat `key = value` file, merged with command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use szlab_core::WindowKind;

use crate::error::{Error, Result};
use crate::preset::Preset;

/// Every setting is optional; unset values fall back to preset defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub preset: Option<Preset>,
    pub data_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub reductions: Option<Vec<f64>>,
    pub windows: Option<Vec<WindowKind>>,
    pub sessions: Option<usize>,
    pub epochs: Option<usize>,
    pub hidden: Option<usize>,
    pub seed: Option<u64>,
    pub subset: Option<usize>,
    pub l1: Option<f64>,
}

/// Comma-separated reduction targets, each in `[0, 1)`.
pub fn parse_reductions(s: &str) -> std::result::Result<Vec<f64>, String> {
    let values = s
        .split(',')
        .map(|v| {
            let x: f64 = v.trim().parse().map_err(|_| format!("not a number: {v:?}"))?;
            if (0.0..1.0).contains(&x) {
                Ok(x)
            } else {
                Err(format!("reduction {x} outside [0, 1)"))
            }
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err("no reductions given".into());
    }
    Ok(values)
}

/// Comma-separated window kinds.
pub fn parse_windows(s: &str) -> std::result::Result<Vec<WindowKind>, String> {
    s.split(',')
        .map(|v| v.trim().parse::<WindowKind>().map_err(|e| e.to_string()))
        .collect()
}

fn parse_num<T: std::str::FromStr>(value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("invalid number {value:?}"))
}

impl Settings {
    /// Sets one key; accepts both `data-dir` and `data_dir` spellings.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key.replace('_', "-").as_str() {
            "preset" => self.preset = Some(value.parse().map_err(|e: Error| e.to_string())?),
            "data-dir" => self.data_dir = Some(value.into()),
            "out-dir" => self.out_dir = Some(value.into()),
            "reductions" => self.reductions = Some(parse_reductions(value)?),
            "window" | "windows" => self.windows = Some(parse_windows(value)?),
            "sessions" => self.sessions = Some(parse_num(value)?),
            "epochs" => self.epochs = Some(parse_num(value)?),
            "hidden" => self.hidden = Some(parse_num(value)?),
            "seed" => self.seed = Some(parse_num(value)?),
            "subset" => self.subset = Some(parse_num(value)?),
            "l1" => self.l1 = Some(parse_num(value)?),
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut settings = Settings::default();
        let mut seen = BTreeMap::new();
        for (ix, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| Error::Config { line: ix + 1, reason };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            let key = key.trim();
            if let Some(first) = seen.insert(key.replace('_', "-"), ix + 1) {
                return Err(err(format!("{key} already set on line {first}")));
            }
            settings.set(key, value.trim()).map_err(err)?;
        }
        Ok(settings)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// `self` with every value set in `flags` replaced.
    pub fn overlay(self, flags: Settings) -> Settings {
        Settings {
            preset: flags.preset.or(self.preset),
            data_dir: flags.data_dir.or(self.data_dir),
            out_dir: flags.out_dir.or(self.out_dir),
            reductions: flags.reductions.or(self.reductions),
            windows: flags.windows.or(self.windows),
            sessions: flags.sessions.or(self.sessions),
            epochs: flags.epochs.or(self.epochs),
            hidden: flags.hidden.or(self.hidden),
            seed: flags.seed.or(self.seed),
            subset: flags.subset.or(self.subset),
            l1: flags.l1.or(self.l1),
        }
    }

    /// The explicitly set values, as strings, for run manifests.
    pub fn explicit(&self) -> BTreeMap<String, String> {
        let join = |v: &[String]| v.join(",");
        let mut out = BTreeMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.insert(k.to_owned(), v);
            }
        };
        put("preset", self.preset.map(|p| p.id().to_owned()));
        put("data-dir", self.data_dir.as_ref().map(|p| p.display().to_string()));
        put("out-dir", self.out_dir.as_ref().map(|p| p.display().to_string()));
        put(
            "reductions",
            self.reductions
                .as_ref()
                .map(|r| join(&r.iter().map(f64::to_string).collect::<Vec<_>>())),
        );
        put(
            "window",
            self.windows
                .as_ref()
                .map(|w| join(&w.iter().map(|k| k.as_str().to_owned()).collect::<Vec<_>>())),
        );
        put("sessions", self.sessions.map(|v| v.to_string()));
        put("epochs", self.epochs.map(|v| v.to_string()));
        put("hidden", self.hidden.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("subset", self.subset.map(|v| v.to_string()));
        put("l1", self.l1.map(|v| v.to_string()));
        out
    }
}
