//! Output files: metrics CSV, per-cell summary CSV, window PGM and filter PPM.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use szlab_core::layers::Conv2d;
use szlab_core::{MetricsRecord, Split, WindowMatrix};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "session,epoch,split,loss,error_pct,reduction_target,reduction_achieved,window,seed";

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    session: usize,
    epoch: usize,
    split: String,
    loss: f64,
    error_pct: f64,
    reduction_target: f64,
    reduction_achieved: f64,
    window: String,
    seed: u64,
}

impl From<&MetricsRecord> for Row {
    fn from(r: &MetricsRecord) -> Self {
        Row {
            session: r.session,
            epoch: r.epoch,
            split: r.split.as_str().to_owned(),
            loss: r.loss,
            error_pct: r.error_pct,
            reduction_target: r.reduction_target,
            reduction_achieved: r.reduction_achieved,
            window: r.window.clone(),
            seed: r.seed,
        }
    }
}

/// Orders records by session, split, window, target and epoch.
pub fn sort_records(records: &mut [MetricsRecord]) {
    records.sort_by(|a, b| {
        (a.session, a.split, &a.window)
            .cmp(&(b.session, b.split, &b.window))
            .then(a.reduction_target.total_cmp(&b.reduction_target))
            .then(a.epoch.cmp(&b.epoch))
    });
}

pub fn write_records<W: Write>(records: &[MetricsRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in records {
        w.serialize(Row::from(r))?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn emit_csv(records: &[MetricsRecord], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(records, std::io::BufWriter::new(file))
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<MetricsRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Invalid(format!("unexpected CSV header: {}", header.join(","))));
    }
    reader
        .deserialize::<Row>()
        .map(|row| {
            let row = row?;
            Ok(MetricsRecord {
                session: row.session,
                epoch: row.epoch,
                split: row.split.parse()?,
                loss: row.loss,
                error_pct: row.error_pct,
                reduction_target: row.reduction_target,
                reduction_achieved: row.reduction_achieved,
                window: row.window,
                seed: row.seed,
            })
        })
        .collect()
}

pub fn load_csv(path: &Path) -> Result<Vec<MetricsRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(file)
}

/// Mean and SD over sessions of one (split, window, target) cell at its last epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub split: String,
    pub window: String,
    pub reduction_target: f64,
    pub epoch: usize,
    pub sessions: usize,
    pub reduction_achieved_mean: f64,
    pub loss_mean: f64,
    pub error_mean: f64,
    pub error_sd: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation; 0 for a single value.
fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Per-cell statistics over the final-epoch records of each session.
pub fn summarize(records: &[MetricsRecord]) -> Vec<SummaryRow> {
    let mut cells: BTreeMap<(Split, String, u64), Vec<&MetricsRecord>> = BTreeMap::new();
    for r in records {
        cells
            .entry((r.split, r.window.clone(), r.reduction_target.to_bits()))
            .or_default()
            .push(r);
    }
    let mut rows: Vec<SummaryRow> = cells
        .into_iter()
        .map(|((split, window, target), recs)| {
            let last = recs.iter().map(|r| r.epoch).max().unwrap_or(0);
            let finals: Vec<&MetricsRecord> = recs.into_iter().filter(|r| r.epoch == last).collect();
            let pick = |f: fn(&MetricsRecord) -> f64| finals.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let errors = pick(|r| r.error_pct);
            SummaryRow {
                split: split.as_str().to_owned(),
                window,
                reduction_target: f64::from_bits(target),
                epoch: last,
                sessions: finals.len(),
                reduction_achieved_mean: mean(&pick(|r| r.reduction_achieved)),
                loss_mean: mean(&pick(|r| r.loss)),
                error_mean: mean(&errors),
                error_sd: sample_sd(&errors),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        (&a.split, &a.window)
            .cmp(&(&b.split, &b.window))
            .then(a.reduction_target.total_cmp(&b.reduction_target))
    });
    rows
}

pub fn emit_summary(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Binary PGM (P5), one pixel per element and row `i` as image row. Factors
/// render as ink: `f = 1` is black (0) and `f = 0` is white (255).
pub fn encode_window_pgm(window: &WindowMatrix) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", window.n_y(), window.n_x()).into_bytes();
    out.extend(
        window
            .values()
            .iter()
            .map(|&f| (255.0 * (1.0 - f)).round().clamp(0.0, 255.0) as u8),
    );
    out
}

pub fn emit_window_pgm(window: &WindowMatrix, path: &Path) -> Result<()> {
    fs::write(path, encode_window_pgm(window)).map_err(|e| Error::io(path, e))
}

/// Binary PPM (P6) of output filter `filter`: `kh × kw` pixels, input
/// channels as RGB (one channel is repeated as grey), min-max scaled.
pub fn encode_filter_ppm(layer: &Conv2d<f32>, filter: usize) -> Result<Vec<u8>> {
    let [kh, kw, c_in, c_out] = layer.kernel_shape();
    if filter >= c_out {
        return Err(Error::Invalid(format!(
            "filter {filter} out of range (layer has {c_out})"
        )));
    }
    if c_in != 1 && c_in != 3 {
        return Err(Error::Invalid(format!("cannot map {c_in} input channels to RGB")));
    }
    let kernel = layer.effective_kernel();
    let values: Vec<f32> = (0..kh * kw)
        .flat_map(|offset| (0..3).map(move |c| (offset, c.min(c_in - 1))))
        .map(|(offset, c)| kernel.data()[(offset * c_in + c) * c_out + filter])
        .collect();
    let lo = values.iter().copied().fold(f32::INFINITY, f32::min);
    let hi = values.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let span = hi - lo;
    let mut out = format!("P6\n{kw} {kh}\n255\n").into_bytes();
    out.extend(values.iter().map(|&v| {
        if span > 0.0 {
            ((v - lo) / span * 255.0).round() as u8
        } else {
            0
        }
    }));
    Ok(out)
}

/// Writes `filter_000.ppm`, `filter_001.ppm`, ... into `dir`.
pub fn emit_filters_ppm(layer: &Conv2d<f32>, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    (0..layer.c_out())
        .map(|f| {
            let path = dir.join(format!("filter_{f:03}.ppm"));
            fs::write(&path, encode_filter_ppm(layer, f)?).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}
