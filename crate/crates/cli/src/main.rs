use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use maxperim::experiments::{
    run_bounds_report, run_nazarov_scan, run_perimeter, run_scaling_fit, summary_row, svg_chart,
    write_csv, write_csv_file, BodyConfig, ExperimentConfig, MeasureConfig, NazarovRow, Subcommand,
};
use maxperim::Error;

const THREADS_ENV: &str = "MAXPERIM_THREADS";

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "maxperim",
    version,
    about = "Maximal perimeter experiments for convex sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Estimate μ⁺(∂Q) for every (body, measure) pair.
    Perimeter(Common),
    /// Build Gaussian-facet polytopes over a range of dimensions.
    NazarovScan(Common),
    /// Evaluate lower and upper bounds for a measure (and optionally a body).
    BoundsReport(Common),
    /// Nazarov scan plus log-log fits of the measured and analytic columns.
    ScalingFit(Common),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// JSON config; its fields override the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `gaussian`, `pnorm:P`, `uniform:<body>` or a JSON descriptor.
    #[arg(long)]
    measure: Vec<String>,
    /// `cube`, `cube:H`, `ball:R`, `box:H1,H2,..` or a JSON descriptor.
    #[arg(long)]
    body: Vec<String>,
    /// Dimension for measures that do not fix one.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    dims: Vec<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// SVG chart of the scan.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Per-dimension scan rows (scaling-fit only).
    #[arg(long)]
    scan_output: Option<PathBuf>,
    /// CSV summary of a bounds report; stderr when omitted.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    max_minutes: Option<f64>,
    /// Use closed forms when available.
    #[arg(long)]
    exact: bool,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::Unsupported(_) => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: io::Error) -> Failure {
    Failure::Config(format!("{}: {e}", path.display()))
}

fn build_config(c: &Common) -> Result<ExperimentConfig, Failure> {
    let mut measures = c
        .measure
        .iter()
        .map(|s| MeasureConfig::parse_flag(s))
        .collect::<Result<Vec<_>, _>>()?;
    for m in &mut measures {
        m.dim = m.dim.or(c.dim);
    }
    let flags = ExperimentConfig {
        subcommand: None,
        measures,
        bodies: c
            .body
            .iter()
            .map(|s| BodyConfig::parse_flag(s))
            .collect::<Result<_, _>>()?,
        dims: c.dims.clone(),
        samples: c.samples,
        trials: c.trials,
        seed: c.seed,
        eps: c.eps,
        alpha: c.alpha,
        output: c.output.clone(),
        svg: c.svg.clone(),
        max_minutes: c.max_minutes,
        exact: c.exact.then_some(true),
    };
    let Some(path) = &c.config else {
        return Ok(flags);
    };
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let file: ExperimentConfig = serde_json::from_str(&text).map_err(|e| {
        Failure::Config(format!(
            "{}:{}:{}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    Ok(flags.overlay(file))
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(fs::File::create(p).map_err(|e| io_err(p, e))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_svg(path: &Path, title: &str, rows: &[NazarovRow]) -> Result<(), Failure> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.empirical_mean.map(|v| (r.n as f64, v)))
        .collect();
    fs::write(path, svg_chart(title, &pts)).map_err(|e| io_err(path, e))
}

fn all_failed<T>(rows: &[T], err: impl Fn(&T) -> &str) -> Result<(), Failure> {
    if !rows.is_empty() && rows.iter().all(|r| !err(r).is_empty()) {
        return Err(Failure::Numerical(format!(
            "all {} rows failed; first: {}",
            rows.len(),
            err(&rows[0])
        )));
    }
    Ok(())
}

fn run(cmd: Subcommand, common: &Common) -> Result<(), Failure> {
    let cfg = build_config(common)?;
    let out = cfg.output.clone();
    match cmd {
        Subcommand::Perimeter => {
            let rows = run_perimeter(&cfg)?;
            write_csv(open_output(out.as_deref())?, &rows)?;
            all_failed(&rows, |r| &r.error)
        }
        Subcommand::NazarovScan => {
            let rows = run_nazarov_scan(&cfg)?;
            write_csv(open_output(out.as_deref())?, &rows)?;
            if let Some(svg) = &cfg.svg {
                write_svg(svg, "empirical perimeter vs n", &rows)?;
            }
            all_failed(&rows, |r| &r.error)
        }
        Subcommand::ScalingFit => {
            let fit = run_scaling_fit(&cfg)?;
            write_csv(open_output(out.as_deref())?, &fit.fit_rows())?;
            if let Some(p) = &common.scan_output {
                write_csv_file(p, &fit.rows)?;
            }
            if let Some(svg) = &cfg.svg {
                write_svg(svg, "empirical perimeter vs n", &fit.rows)?;
            }
            all_failed(&fit.rows, |r| &r.error)
        }
        Subcommand::BoundsReport => {
            let reports = run_bounds_report(&cfg)?;
            let mut w = open_output(out.as_deref())?;
            let json = if reports.len() == 1 {
                serde_json::to_string_pretty(&reports[0])
            } else {
                serde_json::to_string_pretty(&reports)
            }
            .map_err(|e| Failure::Numerical(e.to_string()))?;
            writeln!(w, "{json}").map_err(|e| Failure::Numerical(e.to_string()))?;
            let rows: Vec<_> = reports.iter().map(|r| summary_row(r, cfg.seed())).collect();
            match &common.summary {
                Some(p) => write_csv_file(p, &rows)?,
                None => write_csv(io::stderr().lock(), &rows)?,
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => {
                eprintln!("error: {THREADS_ENV} must be a positive integer, got `{v}`");
                return ExitCode::from(EXIT_CONFIG);
            }
        }
    }
    let (cmd, common) = match &cli.command {
        Command::Perimeter(c) => (Subcommand::Perimeter, c),
        Command::NazarovScan(c) => (Subcommand::NazarovScan, c),
        Command::BoundsReport(c) => (Subcommand::BoundsReport, c),
        Command::ScalingFit(c) => (Subcommand::ScalingFit, c),
    };
    match run(cmd, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
