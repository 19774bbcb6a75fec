//! The `defilter` command line.
//!
//! Exit codes: 0 success, 2 usage or parse error, 3 divergence, 4 I/O error,
//! 5 external filter failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use defilter_core::reverse::{ReverseTrace, StopPolicy};
use defilter_core::spectral::DMatrix;
use defilter_core::{
    analyze_linear_operator, apply_filter, kernel_spectrum, reverse_filter, BestCriterion,
    Boundary, Error as CoreError, ReverseConfig,
};

use crate::bench::{self, curves_csv, load_dir, parse_config, run_bench, table_csv};
use crate::external::{ExchangeFormat, ExternalFilter};
use crate::io::{
    load_image, load_image_with_format, save_image, ImageFormat, IoError, PfmPrecision,
};
use crate::report::{trace_csv, LinearOperatorReportJson, SpectralReportJson};
use crate::spec::{parse_spec, with_boundary};
use crate::synth::desk_set;
use crate::AnyFilter;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_EXTERNAL: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "defilter",
    version,
    about = "Reverse image filters by fixed-point iteration"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply one filter to an image.
    Filter(FilterArgs),
    /// Recover an image from its filtered version.
    Reverse(ReverseArgs),
    /// Contraction analysis of a convolution kernel or a linear operator.
    Analyze(AnalyzeArgs),
    /// Run the Init/Final/Best benchmark over a directory of images.
    Bench(BenchArgs),
    /// Write deterministic synthetic test images.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BoundaryArg {
    Periodic,
    Symmetric,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Periodic => Boundary::Periodic,
            BoundaryArg::Symmetric => Boundary::Symmetric,
        }
    }
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Filter spec, e.g. `gaussian:sigma=2,support=21`.
    #[arg(long)]
    pub spec: String,
    /// Overrides the boundary rule of convolution filters.
    #[arg(long, value_enum)]
    pub boundary: Option<BoundaryArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BestArg {
    Dt,
    Gt,
}

#[derive(Debug, Args)]
pub struct ReverseArgs {
    /// The filtered image J*.
    #[arg(long)]
    pub filtered: PathBuf,
    #[arg(
        long,
        required_unless_present = "external_cmd",
        conflicts_with = "external_cmd"
    )]
    pub spec: Option<String>,
    /// Command template with `{IN}` and `{OUT}` placeholders.
    #[arg(long)]
    pub external_cmd: Option<String>,
    #[arg(long, default_value = "pfm")]
    pub external_format: ExchangeFormat,
    /// External command timeout in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub timeout: f64,
    #[arg(long, default_value_t = 10)]
    pub iters: usize,
    /// Ground truth, enables GT PSNR.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long)]
    pub trace_csv: Option<PathBuf>,
    #[arg(long)]
    pub out_final: Option<PathBuf>,
    #[arg(long)]
    pub out_best: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dt")]
    pub best_by: BestArg,
    /// Stop after this many consecutive rises of the DT error.
    #[arg(long)]
    pub early_stop: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Linear filter spec (gaussian, box, disk, conv, unsharp, identity).
    #[arg(long, required_unless_present = "matrix", conflicts_with = "matrix")]
    pub kernel: Option<String>,
    /// Text file with an N x N matrix, one row per line, acting on
    /// column-major vectorized H x W images.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Analysis grid, `HxW`.
    #[arg(long, value_parser = parse_grid)]
    pub grid: (usize, usize),
    #[arg(long)]
    pub report_json: Option<PathBuf>,
    /// Include every frequency bin in the JSON report.
    #[arg(long)]
    pub per_frequency: bool,
    /// Image whose spectral energy inside Omega is reported.
    #[arg(long)]
    pub energy_image: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub images: PathBuf,
    /// Config file: one filter spec per line, `#` comments,
    /// `external <template>` for commands.
    #[arg(long)]
    pub filters: PathBuf,
    #[arg(long, default_value_t = bench::DEFAULT_ITERS)]
    pub iters: usize,
    #[arg(long)]
    pub out_csv: PathBuf,
    /// PSNR-vs-iteration curves (`filter,iter,mean_psnr_gt,sd_mse`).
    #[arg(long)]
    pub curves_csv: Option<PathBuf>,
    /// Directory for per-image trace CSVs.
    #[arg(long)]
    pub traces_dir: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SynthFormat {
    Pfm,
    Png,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub count: usize,
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    #[arg(long, default_value_t = 1)]
    pub channels: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "pfm")]
    pub format: SynthFormat,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    s.split_once('x')
        .and_then(|(h, w)| Some((h.parse().ok()?, w.parse().ok()?)))
        .filter(|&(h, w)| h > 0 && w > 0)
        .ok_or_else(|| format!("expected HxW, got {s:?}"))
}

/// An error with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError {
            code: EXIT_IO,
            message: e.to_string(),
        }
    }
}

fn core_error(e: CoreError, external: bool) -> CliError {
    let code = match &e {
        CoreError::Divergence { .. } | CoreError::Numerics(_) => EXIT_DIVERGENCE,
        CoreError::Filter { .. } if external => EXIT_EXTERNAL,
        _ => EXIT_USAGE,
    };
    CliError {
        code,
        message: e.to_string(),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| {
        IoError::File {
            path: path.to_path_buf(),
            source: e,
        }
        .into()
    })
}

fn save(image: &defilter_core::Image, path: &Path) -> Result<(), CliError> {
    Ok(save_image(image, path, ImageFormat::from_path(path)?)?)
}

fn cmd_filter(a: &FilterArgs) -> Result<(), CliError> {
    let mut spec =
        parse_spec(&a.spec).map_err(|e| CliError::usage(format!("--spec {:?}: {e}", a.spec)))?;
    if let Some(b) = a.boundary {
        spec = with_boundary(spec, b.into());
    }
    let (input, in_format) = load_image_with_format(&a.input)?;
    let out = apply_filter(&spec, &input).map_err(|e| core_error(e, false))?;
    let format = match (ImageFormat::from_path(&a.output)?, in_format) {
        (ImageFormat::Pfm(_), ImageFormat::Pfm(p)) => ImageFormat::Pfm(p),
        (f, _) => f,
    };
    Ok(save_image(&out, &a.output, format)?)
}

fn print_summary(trace: &ReverseTrace) {
    let init = trace.init_record();
    let last = trace.final_record();
    let best = trace.best_record();
    let gt = |r: &defilter_core::IterationRecord| {
        r.gt_psnr
            .map(|v| format!("  GT {v:.4} dB"))
            .unwrap_or_default()
    };
    println!(
        "init  (iter {:>3}): DT {:.4} dB{}",
        init.iter,
        init.dt_psnr,
        gt(init)
    );
    println!(
        "final (iter {:>3}): DT {:.4} dB{}",
        last.iter,
        last.dt_psnr,
        gt(last)
    );
    println!(
        "best  (iter {:>3}): DT {:.4} dB{}",
        best.iter,
        best.dt_psnr,
        gt(best)
    );
    if let Some(i) = trace.best_gt_index() {
        println!(
            "best GT over all iterations: {:.4} dB at iter {i}",
            trace.records[i].gt_psnr.unwrap()
        );
    }
}

fn cmd_reverse(a: &ReverseArgs) -> Result<(), CliError> {
    let filter = match (&a.spec, &a.external_cmd) {
        (Some(s), None) => AnyFilter::Builtin(
            parse_spec(s).map_err(|e| CliError::usage(format!("--spec {s:?}: {e}")))?,
        ),
        (None, Some(t)) => {
            if !(a.timeout > 0.0 && a.timeout.is_finite()) {
                return Err(CliError::usage("--timeout must be positive"));
            }
            let ext = ExternalFilter::new(t.clone())
                .map_err(|e| CliError::usage(e.to_string()))?
                .with_format(a.external_format)
                .with_timeout(Duration::from_secs_f64(a.timeout));
            if ext.format().is_lossy() {
                eprintln!("note: {} exchange is lossy", ext.format());
            }
            AnyFilter::External(ext)
        }
        _ => {
            return Err(CliError::usage(
                "give exactly one of --spec or --external-cmd",
            ))
        }
    };
    let j_star = load_image(&a.filtered)?;
    let mut cfg = ReverseConfig::new(a.iters).best_by(match a.best_by {
        BestArg::Dt => BestCriterion::DtError,
        BestArg::Gt => BestCriterion::GtError,
    });
    if let Some(p) = &a.gt {
        cfg = cfg.with_ground_truth(load_image(p)?);
    }
    if let Some(p) = &a.init {
        cfg = cfg.with_init(load_image(p)?);
    }
    if let Some(patience) = a.early_stop {
        cfg = cfg.with_stop_policy(StopPolicy::EarlyStopOnDtRise { patience });
    }
    if let AnyFilter::Builtin(spec) = &filter {
        for w in spec.warnings(j_star.height(), j_star.width()) {
            eprintln!("warning: {w}");
        }
    }
    match reverse_filter(&filter, &j_star, &cfg) {
        Ok(res) => {
            if let Some(p) = &a.trace_csv {
                write_file(p, &trace_csv(&res.trace))?;
            }
            if let Some(p) = &a.out_final {
                save(&res.final_image, p)?;
            }
            if let Some(p) = &a.out_best {
                save(&res.best_image, p)?;
            }
            print_summary(&res.trace);
            Ok(())
        }
        Err(CoreError::Divergence { iteration, trace }) => {
            if let Some(p) = &a.trace_csv {
                write_file(p, &trace_csv(&trace))?;
            }
            Err(CliError {
                code: EXIT_DIVERGENCE,
                message: format!("iteration diverged at iteration {iteration}"),
            })
        }
        Err(e) => Err(core_error(e, filter.is_external())),
    }
}

fn read_matrix(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::File {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| IoError::Malformed(format!("{} line {}: {e}", path.display(), i + 1)))?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(
            IoError::Malformed(format!("{}: expected a square matrix", path.display())).into(),
        );
    }
    Ok(DMatrix::from_row_iterator(n, n, rows.into_iter().flatten()))
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<(), CliError> {
    let (h, w) = a.grid;
    let json = if let Some(text) = &a.kernel {
        let spec =
            parse_spec(text).map_err(|e| CliError::usage(format!("--kernel {text:?}: {e}")))?;
        let (kernel, _) = spec
            .linear_kernel(h, w)
            .map_err(|e| core_error(e, false))?
            .ok_or_else(|| {
                CliError::usage(format!("{} is not a convolution filter", spec.name()))
            })?;
        let mut report = kernel_spectrum(&kernel, (h, w)).map_err(|e| core_error(e, false))?;
        if let Some(p) = &a.energy_image {
            report = report
                .with_energy(&load_image(p)?)
                .map_err(|e| core_error(e, false))?;
        }
        println!("class: {}", report.class.name());
        match report.contraction_constant {
            Some(c) => println!("c = {c}"),
            None => println!("c undefined (Omega is empty)"),
        }
        println!(
            "omega: {} of {} bins, max |1 - K| = {}",
            report.omega_count(),
            h * w,
            report.max_modulus
        );
        for warning in &report.warnings {
            eprintln!("warning: {warning}");
        }
        serde_json::to_string_pretty(&SpectralReportJson::new(&report, a.per_frequency))
    } else {
        let path = a.matrix.as_ref().expect("clap enforces one source");
        let m = read_matrix(path)?;
        if m.nrows() != h * w {
            return Err(CliError::usage(format!(
                "matrix is {0}x{0} but grid {h}x{w} needs {1}x{1}",
                m.nrows(),
                h * w
            )));
        }
        let report = analyze_linear_operator(&m).map_err(|e| core_error(e, false))?;
        println!("class: {}", report.class.name());
        match report.contraction_constant {
            Some(c) => println!("c = {c} (max s^2 over Omega)"),
            None => println!("c undefined (Omega is empty)"),
        }
        println!(
            "omega: {} of {} singular directions",
            report.omega_count(),
            report.dimension
        );
        serde_json::to_string_pretty(&LinearOperatorReportJson::from(&report))
    }
    .expect("report serializes");
    if let Some(p) = &a.report_json {
        write_file(p, &json)?;
    }
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> Result<(), CliError> {
    let config = fs::read_to_string(&a.filters).map_err(|e| IoError::File {
        path: a.filters.clone(),
        source: e,
    })?;
    let filters = parse_config(&config)
        .map_err(|e| CliError::usage(format!("{}: {e}", a.filters.display())))?;
    let images = load_dir(&a.images)?;
    if images.is_empty() {
        return Err(CliError::usage(format!(
            "no .png or .pfm images in {}",
            a.images.display()
        )));
    }
    let threads = a
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let report = run_bench(&images, &filters, a.iters, threads);
    write_file(&a.out_csv, &table_csv(&report.rows))?;
    if let Some(p) = &a.curves_csv {
        write_file(p, &curves_csv(&report.curves))?;
    }
    if let Some(dir) = &a.traces_dir {
        fs::create_dir_all(dir).map_err(|e| IoError::File {
            path: dir.clone(),
            source: e,
        })?;
        for (k, run) in report.runs.iter().enumerate() {
            let name = format!("{k:03}_{}.csv", run.image.replace(['/', '.'], "_"));
            write_file(&dir.join(name), &trace_csv(&run.trace))?;
        }
    }
    println!(
        "{:<40} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "filter", "init_gt", "final_gt", "best_gt", "init_dt", "final_dt", "best_dt"
    );
    for r in &report.rows {
        println!(
            "{:<40} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
            r.filter, r.init_gt, r.final_gt, r.best_gt, r.init_dt, r.final_dt, r.best_dt
        );
    }
    println!(
        "{} images, {} iterations; PSNR (peak 1.0) is computed jointly over all channels",
        images.len(),
        a.iters
    );
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> Result<(), CliError> {
    if a.channels != 1 && a.channels != 3 {
        return Err(CliError::usage("--channels must be 1 or 3"));
    }
    if a.size < 9 {
        return Err(CliError::usage("--size must be at least 9"));
    }
    fs::create_dir_all(&a.out_dir).map_err(|e| IoError::File {
        path: a.out_dir.clone(),
        source: e,
    })?;
    for (i, img) in desk_set(a.count, a.size, a.size, a.channels, a.seed)
        .iter()
        .enumerate()
    {
        let (name, format) = match a.format {
            SynthFormat::Pfm => (
                format!("synth_{i:02}.pfm"),
                ImageFormat::Pfm(PfmPrecision::Double),
            ),
            SynthFormat::Png => (format!("synth_{i:02}.png"), ImageFormat::Png),
        };
        save_image(img, &a.out_dir.join(name), format)?;
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Filter(a) => cmd_filter(a),
        Command::Reverse(a) => cmd_reverse(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("defilter: {}", e.message);
            e.code
        }
    }
}
