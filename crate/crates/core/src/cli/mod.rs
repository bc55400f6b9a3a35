//! Command-line interface: `run`, `sweep-ode` and `plot-data`.
//!
//! Exit codes: `0` when every requested check passes, `1` when a check
//! fails, `2` for manifest, argument or I/O errors.

pub mod manifest;
pub mod plot;
pub mod report;
pub mod run;
pub mod sweep;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use manifest::Manifest;
use report::{Report, Status, REPORT_FILE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qeinstein", version, about = "Numerical checks of quasi-Einstein structures on H^n x R")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the checks listed in a manifest and write a report.
    Run(RunArgs),
    /// Tabulate solution branches of h' = h^2/m + lambda.
    SweepOde(SweepArgs),
    /// Regenerate plotting tables from a saved report.
    PlotData(PlotArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Override the grid seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the exact-identity tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Also write residuals.csv with one row per point and check.
    #[arg(long)]
    pub dump_residuals: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "1")]
    pub m: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-1")]
    pub lambda: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-0.5,0,0.5")]
    pub h0: Vec<f64>,
    /// Integration window `t0,t1`, which must contain 0.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-3,3")]
    pub t_range: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// A report written by `run`.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, default_value = "plot")]
    pub out: PathBuf,
    #[arg(long)]
    pub jobs: Option<usize>,
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, String> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err("--jobs must be positive".into()),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(j).build().map_err(|e| e.to_string())?;
            Ok(pool.install(f))
        }
    }
}

fn usage_error(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

/// Executes `run` and returns the report alongside the exit code.
pub fn run_command(args: &RunArgs, timestamp: u64) -> Result<Report, String> {
    let mut manifest = Manifest::load(&args.manifest).map_err(|e| e.to_string())?;
    if let Some(seed) = args.seed {
        manifest.grid.seed = seed;
    }
    if let Some(tol) = args.tol {
        manifest.tolerances.exact = tol;
    }
    let resolved = manifest.resolve().map_err(|e| e.to_string())?;
    let (report, rows) = with_jobs(args.jobs, || run::execute(&resolved, timestamp))?;
    std::fs::create_dir_all(&args.out).map_err(|e| format!("cannot create {}: {e}", args.out.display()))?;
    let path = args.out.join(REPORT_FILE);
    std::fs::write(&path, report.to_toml()).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    if args.dump_residuals {
        run::write_residuals(&args.out.join("residuals.csv"), resolved.manifest.n, &rows)?;
    }
    Ok(report)
}

fn run(args: &RunArgs) -> i32 {
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let report = match run_command(args, timestamp) {
        Ok(r) => r,
        Err(e) => return usage_error(e),
    };
    for c in &report.checks {
        let status = match c.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Skipped => "skipped",
        };
        let note = c.note.as_deref().map(|n| format!("  ({n})")).unwrap_or_default();
        println!("{:<16} {:<8} max {:.3e}  tol {:.1e}{note}", c.name, status, c.max_residual, c.tolerance);
    }
    println!("report written to {}", args.out.join(REPORT_FILE).display());
    if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

fn sweep_ode(args: &SweepArgs) -> i32 {
    let [t0, t1] = args.t_range[..] else {
        return usage_error("--t-range takes exactly two values");
    };
    let config = sweep::SweepConfig {
        m: args.m.clone(),
        lambda: args.lambda.clone(),
        h0: args.h0.clone(),
        t_range: (t0, t1),
        steps: args.steps,
    };
    let rows = match with_jobs(args.jobs, || sweep::sweep(&config)) {
        Ok(Ok(rows)) => rows,
        Ok(Err(e)) | Err(e) => return usage_error(e),
    };
    let written = match &args.out {
        Some(path) => std::fs::File::create(path)
            .map_err(|e| e.to_string())
            .and_then(|f| sweep::write_rows(f, &rows).map_err(|e| e.to_string())),
        None => sweep::write_rows(std::io::stdout().lock(), &rows).map_err(|e| e.to_string()),
    };
    match written {
        Ok(()) => EXIT_OK,
        Err(e) => usage_error(e),
    }
}

fn plot_data(args: &PlotArgs) -> i32 {
    let report = match Report::load(&args.report) {
        Ok(r) => r,
        Err(e) => return usage_error(e),
    };
    match with_jobs(args.jobs, || plot::emit_plot_data(&report, &args.out)) {
        Ok(Ok(())) => {
            println!("plot data written to {}", args.out.display());
            EXIT_OK
        }
        Ok(Err(e)) | Err(e) => usage_error(e),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match &cli.command {
        Command::Run(a) => run(a),
        Command::SweepOde(a) => sweep_ode(a),
        Command::PlotData(a) => plot_data(a),
    }
}
