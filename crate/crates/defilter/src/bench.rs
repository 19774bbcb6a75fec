//! Benchmark protocol: filter each ground-truth image, reverse the result
//! for a fixed number of iterations and tabulate Init/Final/Best PSNR against
//! both the ground truth (GT) and the filtered input (DT).

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use defilter_core::reverse::ReverseTrace;
use defilter_core::{reverse_filter, Error as CoreError, Filter, Image, ReverseConfig};
use thiserror::Error;

use crate::external::{ExchangeFormat, ExternalFilter};
use crate::io::{load_image, IoError};
use crate::spec::{parse_spec, ParseError};
use crate::AnyFilter;

pub const DEFAULT_ITERS: usize = 50;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {source}")]
    Spec {
        line: usize,
        #[source]
        source: ParseError,
    },
    #[error("line {line}: {message}")]
    External { line: usize, message: String },
}

/// Parses a bench config: one filter per line, `#` starts a comment line.
/// `external <template>` (or `external:png <template>`) adds a command.
pub fn parse_config(text: &str) -> Result<Vec<AnyFilter>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let head = line.split_whitespace().next().unwrap_or_default();
        if let Some(fmt) = head.strip_prefix("external") {
            let format = match fmt.strip_prefix(':') {
                Some(name) => name.parse::<ExchangeFormat>(),
                None if fmt.is_empty() => Ok(ExchangeFormat::default()),
                None => Err(format!("unknown directive {head:?}")),
            }
            .map_err(|message| ConfigError::External {
                line: i + 1,
                message,
            })?;
            let template = line[head.len()..].trim();
            let ext = ExternalFilter::new(template).map_err(|e| ConfigError::External {
                line: i + 1,
                message: e.to_string(),
            })?;
            out.push(AnyFilter::External(ext.with_format(format)));
        } else {
            let spec = parse_spec(line).map_err(|source| ConfigError::Spec {
                line: i + 1,
                source,
            })?;
            out.push(AnyFilter::Builtin(spec));
        }
    }
    Ok(out)
}

/// Reads every `.png` / `.pfm` file of a directory, sorted by file name.
pub fn load_dir(dir: &Path) -> Result<Vec<(String, Image)>, IoError> {
    let entries = std::fs::read_dir(dir).map_err(|e| IoError::File {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension()
                    .and_then(|e| e.to_str())
                    .map(|e| e.to_ascii_lowercase())
                    .as_deref(),
                Some("png") | Some("pfm")
            )
        })
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            load_image(&p).map(|img| (name, img))
        })
        .collect()
}

/// One table cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Db(f64),
    Diverged(usize),
    Failed,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Db(v) => write!(f, "{v:.4}"),
            Cell::Diverged(k) => write!(f, "diverged(iter={k})"),
            Cell::Failed => f.write_str("failed"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub filter: String,
    pub init_gt: Cell,
    pub final_gt: Cell,
    pub best_gt: Cell,
    pub init_dt: Cell,
    pub final_dt: Cell,
    pub best_dt: Cell,
    /// GT PSNR of the iterate picked by the smallest DT error, the choice
    /// available without ground truth.
    pub best_gt_by_dt: Cell,
    pub images: usize,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub filter: String,
    pub iter: usize,
    pub mean_psnr_gt: f64,
    pub sd_mse: f64,
}

#[derive(Debug, Clone)]
pub struct ImageRun {
    pub filter: String,
    pub image: String,
    pub trace: ReverseTrace,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub curves: Vec<CurvePoint>,
    pub runs: Vec<ImageRun>,
}

fn run_one(filter: &AnyFilter, truth: &Image, iters: usize) -> Result<ReverseTrace, CoreError> {
    let j_star = filter.apply(truth)?;
    let cfg = ReverseConfig::new(iters).with_ground_truth(truth.clone());
    reverse_filter(filter, &j_star, &cfg).map(|r| r.trace)
}

/// Runs `f` over `items` on up to `threads` worker threads, keeping input
/// order in the output.
fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    threads: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, items.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// `runs` pairs each trace with its image's sample count.
fn row_from_traces(filter: String, runs: &[(ReverseTrace, usize)]) -> (BenchRow, Vec<CurvePoint>) {
    let traces: Vec<&ReverseTrace> = runs.iter().map(|r| &r.0).collect();
    let gt = |t: &ReverseTrace, i: usize| t.records[i].gt_psnr.expect("ground truth tracked");
    let avg = |f: &dyn Fn(&ReverseTrace) -> f64| Cell::Db(mean(traces.iter().map(|t| f(t))));
    let max_gt = |t: &ReverseTrace| {
        t.records
            .iter()
            .map(|r| r.gt_psnr.unwrap())
            .fold(f64::MIN, f64::max)
    };
    let max_dt = |t: &ReverseTrace| t.records.iter().map(|r| r.dt_psnr).fold(f64::MIN, f64::max);
    let row = BenchRow {
        init_gt: avg(&|t| gt(t, 0)),
        final_gt: avg(&|t| gt(t, t.records.len() - 1)),
        best_gt: avg(&max_gt),
        init_dt: avg(&|t| t.records[0].dt_psnr),
        final_dt: avg(&|t| t.final_record().dt_psnr),
        best_dt: avg(&max_dt),
        best_gt_by_dt: avg(&|t| gt(t, t.best_dt_index())),
        images: traces.len(),
        note: String::new(),
        filter: filter.clone(),
    };
    let len = traces.iter().map(|t| t.records.len()).min().unwrap_or(0);
    let curves = (0..len)
        .map(|i| {
            let psnrs: Vec<f64> = traces.iter().map(|t| gt(t, i)).collect();
            let mses: Vec<f64> = runs
                .iter()
                .map(|(t, n)| t.records[i].gt_distance.unwrap().powi(2) / *n as f64)
                .collect();
            let m = mean(mses.iter().copied());
            CurvePoint {
                filter: filter.clone(),
                iter: i,
                mean_psnr_gt: mean(psnrs.into_iter()),
                sd_mse: mean(mses.iter().map(|v| (v - m).powi(2))).sqrt(),
            }
        })
        .collect();
    (row, curves)
}

fn failed_row(filter: String, images: usize, cell: Cell, note: String) -> BenchRow {
    BenchRow {
        filter,
        init_gt: cell,
        final_gt: cell,
        best_gt: cell,
        init_dt: cell,
        final_dt: cell,
        best_dt: cell,
        best_gt_by_dt: cell,
        images,
        note,
    }
}

/// Runs the protocol for every filter over every image. Failures and
/// divergence are recorded in the filter's row; the run continues.
pub fn run_bench(
    images: &[(String, Image)],
    filters: &[AnyFilter],
    iters: usize,
    threads: usize,
) -> BenchReport {
    let mut report = BenchReport::default();
    for filter in filters {
        let label = filter.label();
        let results = parallel_map(images, threads, |(_, img)| run_one(filter, img, iters));
        let mut traces = Vec::new();
        let mut problem: Option<(Cell, String)> = None;
        for ((name, img), res) in images.iter().zip(results) {
            match res {
                Ok(trace) => {
                    report.runs.push(ImageRun {
                        filter: label.clone(),
                        image: name.clone(),
                        trace: trace.clone(),
                    });
                    traces.push((trace, img.len()));
                }
                Err(CoreError::Divergence { iteration, .. }) => {
                    let earlier = matches!(problem, Some((Cell::Diverged(k), _)) if k <= iteration);
                    if !earlier && !matches!(problem, Some((Cell::Failed, _))) {
                        problem = Some((Cell::Diverged(iteration), format!("{name} diverged")));
                    }
                }
                Err(e) => {
                    if !matches!(problem, Some((Cell::Failed, _))) {
                        problem = Some((Cell::Failed, format!("{name}: {e}")));
                    }
                }
            }
        }
        match problem {
            Some((cell, note)) => report
                .rows
                .push(failed_row(label, images.len(), cell, note)),
            None if traces.is_empty() => {
                report
                    .rows
                    .push(failed_row(label, 0, Cell::Failed, "no images".into()))
            }
            None => {
                let (row, curves) = row_from_traces(label, &traces);
                report.rows.push(row);
                report.curves.extend(curves);
            }
        }
    }
    report
}

pub const TABLE_HEADER: [&str; 10] = [
    "filter",
    "init_gt",
    "final_gt",
    "best_gt",
    "init_dt",
    "final_dt",
    "best_dt",
    "best_gt_by_dt",
    "images",
    "note",
];

pub fn table_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.filter.clone(),
            r.init_gt.to_string(),
            r.final_gt.to_string(),
            r.best_gt.to_string(),
            r.init_dt.to_string(),
            r.final_dt.to_string(),
            r.best_dt.to_string(),
            r.best_gt_by_dt.to_string(),
            r.images.to_string(),
            r.note.clone(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 fields")
}

pub fn curves_csv(points: &[CurvePoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["filter", "iter", "mean_psnr_gt", "sd_mse"])
        .expect("in-memory write");
    for p in points {
        w.write_record([
            p.filter.clone(),
            p.iter.to_string(),
            p.mean_psnr_gt.to_string(),
            p.sd_mse.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 fields")
}
