use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use lienard_lab::oracle::{center_evidence, cycles_from_scan, scan_return_map};
use lienard_lab::par::Execution;
use lienard_lab::partition::build_partition;
use lienard_lab::phi_solver::{sampled_closure, scan_interval};
use lienard_lab::report::{self, emit_csv, AnalysisConfig, InputKind, SCHEMA};
use lienard_lab::{BoundReport, Error};

/// Limit cycles of x' = y - F(x), y' = -x for polynomial F.
#[derive(Parser)]
#[command(name = "lienard-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Degree and partition bounds on the number of limit cycles
    Bound(Input),
    /// Positive critical points of F and the intervals between them
    Partition(Input),
    /// Amplitude candidates of the shooting scan, per interval
    Phi(Input),
    /// Limit cycles located by direct simulation
    Cycles(Input),
    /// Full report: bounds, cycles, candidates, identity checks
    Analyze(Input),
}

#[derive(Args)]
struct Input {
    /// Coefficients a1,a2,...,an of F (ascending, constant omitted)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    coeffs: Option<Vec<f64>>,
    /// JSON configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Read the coefficients as F' (constant term first) instead of F
    #[arg(long)]
    fprime: bool,
    /// Truncation of the last, unbounded interval
    #[arg(long)]
    x_max: Option<f64>,
    /// Lower end of the amplitude scan
    #[arg(long)]
    a_lo: Option<f64>,
    /// Upper end of the amplitude scan
    #[arg(long)]
    a_hi: Option<f64>,
    /// Points in the amplitude scan
    #[arg(long)]
    grid: Option<usize>,
    /// Run the scans on one thread
    #[arg(long)]
    sequential: bool,
    /// Write the JSON output here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for CSV trajectory dumps
    #[arg(long)]
    csv_dir: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Numerical(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            e if e.is_numerical() => Failure::Numerical(e.to_string()),
            e @ (Error::Io { .. } | Error::Json(_)) => Failure::Other(e.to_string()),
            e => Failure::Config(e.to_string()),
        }
    }
}

impl Input {
    fn config(&self) -> Result<AnalysisConfig, Failure> {
        let mut cfg = match (&self.config, &self.coeffs) {
            (Some(path), _) => AnalysisConfig::load(path).map_err(|e| Failure::Config(e.to_string()))?,
            (None, Some(c)) => AnalysisConfig::new(InputKind::F, c.clone()),
            (None, None) => return Err(Failure::Config("give --coeffs or --config".into())),
        };
        if let Some(c) = &self.coeffs {
            cfg.coefficients = c.clone();
        }
        if self.fprime {
            cfg.input_kind = InputKind::FPrime;
        }
        cfg.x_max = self.x_max.or(cfg.x_max);
        cfg.a_lo = self.a_lo.or(cfg.a_lo);
        cfg.a_hi = self.a_hi.or(cfg.a_hi);
        cfg.grid_n = self.grid.or(cfg.grid_n);
        if self.sequential {
            cfg.execution = Execution::Sequential;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn csv_dir(&self) -> Result<Option<&Path>, Failure> {
        match &self.csv_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| Failure::Other(format!("{}: {e}", dir.display())))?;
                Ok(Some(dir))
            }
            None => Ok(None),
        }
    }
}

/// JSON output plus whether a numerical failure left it incomplete.
type Output = (Value, bool);

fn bound(input: &Input) -> Result<Output, Failure> {
    let cfg = input.config()?;
    let f = cfg.polynomial()?;
    let p = build_partition(&f, cfg.x_max)?;
    let b = BoundReport::new(&f, &p)?;
    Ok((json!({ "schema": SCHEMA, "f_coefficients": f.coeffs(), "bounds": b }), false))
}

fn partition(input: &Input) -> Result<Output, Failure> {
    let cfg = input.config()?;
    let f = cfg.polynomial()?;
    let p = build_partition(&f, cfg.x_max)?;
    let b = BoundReport::new(&f, &p)?;
    Ok((
        json!({
            "schema": SCHEMA,
            "f_coefficients": f.coeffs(),
            "critical_points": p.critical_points,
            "intervals": p.intervals,
            "x_max": p.x_max,
            "bounds": b,
        }),
        false,
    ))
}

fn phi(input: &Input) -> Result<Output, Failure> {
    let cfg = input.config()?;
    let f = cfg.polynomial()?;
    let p = build_partition(&f, cfg.x_max)?;
    let opts = cfg.phi_options();
    let csv = input.csv_dir()?;
    let mut scans = Vec::new();
    for i in 0..p.intervals.len() {
        let s = scan_interval(&f, &p, i, &opts)?;
        if let Some(dir) = csv {
            for (k, c) in s.candidates.iter().enumerate() {
                let cl = sampled_closure(&f, c.a, &opts)?;
                emit_csv(&cl.lower.samples, &dir.join(format!("phi_{i}_{k}_lower.csv")))?;
                if let Some(up) = &cl.upper {
                    emit_csv(&up.samples, &dir.join(format!("phi_{i}_{k}_upper.csv")))?;
                }
            }
        }
        scans.push(s);
    }
    Ok((
        json!({
            "schema": SCHEMA,
            "critical_points": p.critical_points,
            "intervals": p.intervals,
            "scans": scans,
        }),
        false,
    ))
}

fn cycles(input: &Input) -> Result<Output, Failure> {
    let cfg = input.config()?;
    let f = cfg.polynomial()?;
    let p = build_partition(&f, cfg.x_max)?;
    let opts = cfg.oracle_options();
    let (a_lo, a_hi) = cfg.scan_range(&p);
    let grid_n = cfg.grid_n.unwrap_or(200);
    let scan = scan_return_map(&f, a_lo, a_hi, grid_n, &opts)?;
    let center = center_evidence(&scan, &opts);
    let found = cycles_from_scan(&f, scan, &opts);
    if let Some(dir) = input.csv_dir()? {
        for (i, c) in found.cycles.iter().enumerate() {
            emit_csv(&c.orbit.samples, &dir.join(format!("cycle_{i}.csv")))?;
        }
    }
    let cycles: Vec<Value> = found
        .cycles
        .iter()
        .map(|c| {
            json!({
                "amplitude": c.amplitude,
                "period": c.period,
                "stability": c.stability,
                "return_slope": c.return_slope,
                "interval_index": p.interval_index(c.amplitude),
            })
        })
        .collect();
    let failures: Vec<Value> = found
        .scan
        .failures
        .iter()
        .map(|(a, why)| json!({ "amplitude": a, "reason": why }))
        .collect();
    let incomplete = !failures.is_empty();
    Ok((
        json!({
            "schema": SCHEMA,
            "scan": { "a_lo": a_lo, "a_hi": a_hi, "grid_n": grid_n },
            "cycles": cycles,
            "center": {
                "detected": center.is_center,
                "fraction": center.fraction,
                "max_displacement": center.max_displacement.is_finite().then_some(center.max_displacement),
            },
            "failures": failures,
        }),
        incomplete,
    ))
}

fn analyze(input: &Input) -> Result<Output, Failure> {
    let cfg = input.config()?;
    let a = report::analyze(&cfg)?;
    if let Some(dir) = input.csv_dir()? {
        report::emit_analysis_csv(&a, dir)?;
    }
    let incomplete = !a.report.is_complete();
    Ok((serde_json::to_value(&a.report).map_err(Error::from)?, incomplete))
}

fn write_output(value: &Value, out: Option<&Path>) -> Result<(), Failure> {
    let text = report::to_canonical_json(value)?;
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Other(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn init_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("LIENARD_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("LIENARD_LAB_THREADS must be a positive integer, got {raw:?}")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Other(e.to_string()))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    init_threads()?;
    let (input, (value, incomplete)) = match &cli.command {
        Command::Bound(i) => (i, bound(i)?),
        Command::Partition(i) => (i, partition(i)?),
        Command::Phi(i) => (i, phi(i)?),
        Command::Cycles(i) => (i, cycles(i)?),
        Command::Analyze(i) => (i, analyze(i)?),
    };
    write_output(&value, input.out.as_deref())?;
    Ok(incomplete)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("lienard-lab: numerical failures, output is incomplete");
            ExitCode::from(3)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("lienard-lab: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("lienard-lab: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("lienard-lab: {msg}");
            ExitCode::from(1)
        }
    }
}
