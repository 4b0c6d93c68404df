//! `uapca` command line.
//!
//! Exit codes: 0 on success, 1 for I/O and validation failures, 2 for bad
//! flags or unsatisfiable flag constraints. Diagnostics are one line on
//! stderr; machine-readable results go to files.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cov::{CovOptions, Scale};
use crate::eigen::{eig_sym, select_components, PcaModel};
use crate::error::Error;
use crate::io::{self, AggregateMode};
use crate::metrics::{self, ExperimentConfig};
use crate::model::{Gaussian, UncertainDataset};
use crate::project::{project_distribution, scaled_cov};
use crate::sensitivity::{self, SweepSchedule};

pub const SEED_ENV: &str = "UAPCA_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "uapca",
    version,
    about = "Uncertainty-aware PCA on probability distributions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a PCA model and project every item.
    Project(ProjectArgs),
    /// Sweep the uncertainty scale and write factor traces and eigenvalue curves.
    Trace(TraceArgs),
    /// Compare sampling-based PCA with the closed form on synthetic data.
    CompareSampling(CompareArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Gaussian,
    Empirical,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Dataset file: distribution JSON, or point CSV with --points / --aggregate-by.
    #[arg(long)]
    input: PathBuf,
    /// Read the input as a CSV of exact points.
    #[arg(long)]
    points: bool,
    /// Read the input as point CSV and aggregate rows by this label column.
    #[arg(long, value_name = "COLUMN")]
    aggregate_by: Option<String>,
    /// Distribution built per class when aggregating.
    #[arg(long, value_enum, default_value = "gaussian")]
    aggregate_mode: ModeArg,
    /// Z-score every axis before fitting.
    #[arg(long)]
    standardize: bool,
}

#[derive(Debug, Args)]
struct ProjectArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Target dimension q.
    #[arg(long, default_value_t = 2)]
    dims: usize,
    /// Uncertainty scale factor s (a nonnegative number or `inf`).
    #[arg(long, default_value = "1")]
    scale: Scale,
    #[arg(long, value_name = "PREFIX")]
    out_prefix: PathBuf,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Number of sweep steps (the last one is s = inf).
    #[arg(long, default_value_t = sensitivity::DEFAULT_STEPS)]
    steps: usize,
    /// Target dimension; traces are drawn for q = 2.
    #[arg(long, default_value_t = 2)]
    dims: usize,
    #[arg(long, value_name = "PREFIX")]
    out_prefix: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Dimensions: `lo..hi` (inclusive), a comma list, or one number.
    #[arg(long, default_value = "2..12")]
    dims: String,
    #[arg(long, default_value_t = 40)]
    runs: usize,
    /// Base seed; the UAPCA_SEED environment variable takes precedence.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated, strictly increasing samples per item.
    #[arg(long, value_delimiter = ',')]
    sample_counts: Option<Vec<usize>>,
    /// Number of synthetic items per dataset.
    #[arg(long, default_value_t = 10)]
    items: usize,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
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
    let outcome = match cli.command {
        Command::Project(a) => cmd_project(&a),
        Command::Trace(a) => cmd_trace(&a),
        Command::CompareSampling(a) => cmd_compare_sampling(&a),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {}", one_line(&msg));
            2
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {}", one_line(&e.to_string()));
            1
        }
    }
}

fn one_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn load_input(args: &InputArgs) -> Result<UncertainDataset, Error> {
    if let Some(column) = &args.aggregate_by {
        let pts = io::load_points(&args.input, Some(column))?;
        let pts = if args.standardize {
            pts.standardized()
        } else {
            pts
        };
        let mode = match args.aggregate_mode {
            ModeArg::Gaussian => AggregateMode::Gaussian,
            ModeArg::Empirical => AggregateMode::Empirical,
        };
        io::aggregate_by_label(&pts, mode)
    } else if args.points {
        let pts = io::load_points(&args.input, None)?;
        if args.standardize {
            pts.standardized()
        } else {
            pts
        }
        .to_dataset()
    } else {
        let ds = io::load_dataset(&args.input)?;
        if args.standardize {
            ds.standardized()
        } else {
            Ok(ds)
        }
    }
}

fn check_q(q: usize, dim: usize) -> CmdResult {
    if q == 0 || q > dim {
        return Err(Failure::Usage(format!(
            "--dims {q} is out of range: the target dimension must satisfy 1 <= q <= D = {dim}"
        )));
    }
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn format_eigenvalues(model: &PcaModel) -> String {
    let total: f64 = model.eigenvalues.iter().sum();
    let mut out = String::from("eigenvalues:\n");
    for (i, v) in model.eigenvalues.iter().enumerate() {
        let share = if total > 0.0 { 100.0 * v / total } else { 0.0 };
        let _ = writeln!(out, "  lambda_{} = {v} ({share:.2}%)", i + 1);
    }
    out
}

fn cmd_project(args: &ProjectArgs) -> CmdResult {
    let ds = load_input(&args.input)?;
    check_q(args.dims, ds.dim())?;
    let global = crate::cov::global_cov(&ds, &CovOptions::with_scale(args.scale))?;
    let model = select_components(&eig_sym(&global.matrix)?, global.mean, args.dims)?;
    let mut projected: Vec<(String, Gaussian)> = Vec::with_capacity(ds.len());
    for (i, item) in ds.items().iter().enumerate() {
        let g = project_distribution(&model, item)?;
        let cov = scaled_cov(g.cov(), args.scale);
        projected.push((ds.label(i), Gaussian::from_parts(g.mean().clone(), cov)));
    }
    let csv_path = with_suffix(&args.out_prefix, ".projection.csv");
    write_file(&csv_path, &io::projection_csv(&projected)?)?;
    let mut written = vec![csv_path];
    if args.dims == 2 {
        let svg_path = with_suffix(&args.out_prefix, ".projection.svg");
        write_file(&svg_path, &io::render_projection_svg(&projected)?)?;
        written.push(svg_path);
    }
    print!("{}", format_eigenvalues(&model));
    for p in &written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_trace(args: &TraceArgs) -> CmdResult {
    let sched =
        SweepSchedule::new(args.steps).map_err(|e| Failure::Usage(format!("--steps: {e}")))?;
    if args.dims != 2 {
        return Err(Failure::Usage(format!(
            "--dims {}: factor traces are drawn in two dimensions, use --dims 2",
            args.dims
        )));
    }
    let ds = load_input(&args.input)?;
    check_q(args.dims, ds.dim())?;
    let (models, curves) = sensitivity::sweep(&ds, args.dims, &sched)?;
    let traces = sensitivity::factor_traces(&models, &curves.scales)?;
    let names = ds.dim_names();

    let outputs = [
        (
            ".traces.csv",
            io::traces_csv(&traces, &curves.scales, names)?,
        ),
        (".eigvals.csv", io::eigvals_csv(&curves)),
        (".traces.svg", io::render_traces_svg(&traces, names)?),
        (".eigvals.svg", io::render_eigvals_svg(&curves)),
    ];
    let mut written = Vec::new();
    for (suffix, contents) in &outputs {
        let path = with_suffix(&args.out_prefix, suffix);
        write_file(&path, contents)?;
        written.push(path);
    }

    println!(
        "steps: {} (s > 1 from step {})",
        sched.steps(),
        traces.first().map_or(0, |t| t.region_split)
    );
    for t in &traces {
        let end = t.points.last().map_or(0.0, |p| p.norm());
        let start = t.points.first().map_or(0.0, |p| p.norm());
        println!(
            "trace {}: norm {start:.4} at s = 0, {end:.4} at s = inf",
            names[t.axis]
        );
    }
    if curves.avoided_crossings.is_empty() {
        println!("avoided crossings: none");
    } else {
        for f in &curves.avoided_crossings {
            println!(
                "avoided crossing: step {} (s = {}) between lambda_{} and lambda_{}",
                f.step,
                curves.scales[f.step],
                f.pair + 1,
                f.pair + 2
            );
        }
    }
    for p in &written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

/// Parses `lo..hi` / `lo..=hi` (inclusive), `a,b,c` or a single number.
fn parse_dims(text: &str) -> std::result::Result<Vec<usize>, String> {
    let num = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| format!("--dims {text:?}: expected `lo..hi`, a comma list or a number"))
    };
    let dims = if let Some((lo, hi)) = text.split_once("..") {
        let (lo, hi) = (num(lo)?, num(hi.trim_start_matches('='))?);
        if lo > hi {
            return Err(format!("--dims {text}: empty range"));
        }
        (lo..=hi).collect()
    } else {
        text.split(',')
            .map(num)
            .collect::<std::result::Result<Vec<_>, _>>()?
    };
    if dims.contains(&0) {
        return Err(format!("--dims {text}: dimensions must be at least 1"));
    }
    Ok(dims)
}

fn cmd_compare_sampling(args: &CompareArgs) -> CmdResult {
    let dims = parse_dims(&args.dims).map_err(Failure::Usage)?;
    let seed = match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map_err(|_| Failure::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?,
        Err(_) => args.seed,
    };
    let mut cfg = ExperimentConfig {
        n_items: args.items,
        dims,
        runs: args.runs,
        seed,
        ..ExperimentConfig::default()
    };
    if let Some(counts) = &args.sample_counts {
        cfg.sample_counts = counts.clone();
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let rows = metrics::run_convergence_experiment(&cfg)?;
    write_file(&args.out, &metrics::convergence_csv(&rows))?;
    for dim in &cfg.dims {
        let reached = rows
            .iter()
            .filter(|r| r.dim == *dim)
            .find(|r| r.median_hellinger < 0.1)
            .map_or("not reached".to_string(), |r| {
                format!("{} samples", r.samples)
            });
        println!("dim {dim}: median Hellinger < 0.1 at {reached}");
    }
    println!(
        "wrote {} ({} rows, seed {seed})",
        args.out.display(),
        rows.len()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_specs() {
        assert_eq!(parse_dims("2..12").unwrap(), (2..=12).collect::<Vec<_>>());
        assert_eq!(parse_dims("2..=4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_dims("2,4,8").unwrap(), vec![2, 4, 8]);
        assert_eq!(parse_dims("5").unwrap(), vec![5]);
        assert!(parse_dims("0").is_err());
        assert!(parse_dims("0..3").is_err());
        assert!(parse_dims("4..2").is_err());
        assert!(parse_dims("a").is_err());
    }

    #[test]
    fn prefix_suffix() {
        assert_eq!(
            with_suffix(Path::new("out/run"), ".traces.csv"),
            PathBuf::from("out/run.traces.csv")
        );
    }
}
