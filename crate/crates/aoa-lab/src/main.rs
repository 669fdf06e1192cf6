//! Command-line front end: closed-form analysis, simulation, optimization,
//! sweeps, and oracle validation over JSON scenario files.
//!
//! Machine-readable output (JSON, or CSV for sweeps and traces) goes to
//! stdout or `--out`; short human summaries go to stderr.  Exit codes:
//! 0 success, 1 runtime failure, 2 malformed input (schema or usage),
//! 3 numerical caveat (optimizer fallback/mismatch flag, or any failed
//! validation check).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use aoa_lab::analytics::Regime;
use aoa_lab::error::Error;
use aoa_lab::optimizer::{self, OptMethod};
use aoa_lab::scenario::{ScenarioFile, DEFAULT_SEED};
use aoa_lab::simulator::{simulate, write_trace_csv, SimConfig};
use aoa_lab::units::fmt_sig;
use aoa_lab::{analytics, oracles};

/// Environment variable consulted for the seed when `--seed` is absent.
const SEED_ENV: &str = "AOA_LAB_SEED";

#[derive(Parser)]
#[command(name = "aoa-lab", version, about = "Age analysis for a wireless-powered status-update link")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form reception, battery, and age analysis of a scenario
    Analyze {
        /// Scenario JSON file
        #[arg(long)]
        scenario: PathBuf,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Slot-level simulation of the scenario's operating point
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Total slots (overrides the scenario file)
        #[arg(long)]
        horizon: Option<u64>,
        /// Slots excluded from statistics (overrides the scenario file)
        #[arg(long)]
        warmup: Option<u64>,
        /// RNG seed (overrides AOA_LAB_SEED and the scenario file)
        #[arg(long)]
        seed: Option<u64>,
        /// Also write a per-slot CSV trace to this path
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Best activation probabilities for an age metric
    Optimize {
        #[arg(long)]
        scenario: PathBuf,
        /// Which age to minimize
        #[arg(long, value_enum, default_value_t = Metric::Aoa)]
        metric: Metric,
        /// Grid step for finite-battery search (overrides the scenario file)
        #[arg(long)]
        grid_step: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Average actuation age over the whole activation grid
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        grid_step: Option<f64>,
        /// Output format for the grid
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-check every closed form against independent oracles
    Validate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    Aoi,
    Aoa,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Schema(_) | Error::Json(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(command: Command) -> aoa_lab::Result<ExitCode> {
    match command {
        Command::Analyze { scenario, out } => analyze_cmd(&scenario, out.as_deref()),
        Command::Simulate { scenario, horizon, warmup, seed, trace, out } => {
            simulate_cmd(&scenario, horizon, warmup, seed, trace.as_deref(), out.as_deref())
        }
        Command::Optimize { scenario, metric, grid_step, out } => {
            optimize_cmd(&scenario, metric, grid_step, out.as_deref())
        }
        Command::Sweep { scenario, grid_step, format, out } => {
            sweep_cmd(&scenario, grid_step, format, out.as_deref())
        }
        Command::Validate { scenario, seed, out } => validate_cmd(&scenario, seed, out.as_deref()),
    }
}

// ----------------------------------------------------------------------------
// subcommands

fn analyze_cmd(path: &Path, out: Option<&Path>) -> aoa_lab::Result<ExitCode> {
    let file = ScenarioFile::load(path)?;
    let report = file.scenario()?.analyze();

    let sp = &report.success_probs;
    eprintln!(
        "reception: p_d1 = {}, p_d12 = {}, p_e2 = {}, p_e12 = {}",
        fmt_sig(sp.p_d1, 4),
        fmt_sig(sp.p_d12, 4),
        fmt_sig(sp.p_e2, 4),
        fmt_sig(sp.p_e12, 4)
    );
    eprintln!(
        "battery: p(empty) = {}, regime = {}",
        fmt_sig(report.steady_state.p_empty, 4),
        regime_label(report.steady_state.regime)
    );
    eprintln!(
        "ages: information = {} slots, actuation = {} slots",
        fmt_sig(report.ages.avg_aoi, 4),
        fmt_sig(report.ages.avg_aoa, 4)
    );

    emit(out, &to_json(&report)?)?;
    Ok(ExitCode::SUCCESS)
}

fn simulate_cmd(
    path: &Path,
    horizon: Option<u64>,
    warmup: Option<u64>,
    seed: Option<u64>,
    trace: Option<&Path>,
    out: Option<&Path>,
) -> aoa_lab::Result<ExitCode> {
    let file = ScenarioFile::load(path)?;
    let cfg = SimConfig {
        scenario: file.scenario()?,
        horizon: horizon.unwrap_or_else(|| file.sim_horizon()),
        warmup: warmup.unwrap_or_else(|| file.sim_warmup()),
        seed: resolve_seed(seed, &file)?,
        trace: trace.is_some(),
    };
    let report = simulate(&cfg)?;

    if let Some(trace_path) = trace {
        let records = report.trace.as_deref().unwrap_or(&[]);
        let mut w = std::io::BufWriter::new(fs::File::create(trace_path)?);
        write_trace_csv(records, &mut w)?;
        w.flush()?;
    }

    let se = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |s| fmt_sig(s, 2));
    eprintln!(
        "simulated {} slots (warmup {}, seed {}): aoi {} +/- {}, aoa {} +/- {}, actuation rate {}",
        report.horizon,
        report.warmup,
        report.seed,
        fmt_sig(report.mean_aoi, 4),
        se(report.mean_aoi_se),
        fmt_sig(report.mean_aoa, 4),
        se(report.mean_aoa_se),
        fmt_sig(report.actuation_rate, 4)
    );

    emit(out, &to_json(&report)?)?;
    Ok(ExitCode::SUCCESS)
}

fn optimize_cmd(
    path: &Path,
    metric: Metric,
    grid_step: Option<f64>,
    out: Option<&Path>,
) -> aoa_lab::Result<ExitCode> {
    let file = ScenarioFile::load(path)?;
    let scenario = file.scenario()?;
    let sp = scenario.channel.success_probs();

    let report = match metric {
        Metric::Aoi => optimizer::optimize_aoi(&sp)?,
        Metric::Aoa => match scenario.battery {
            analytics::BatterySpec::Infinite => optimizer::optimize_aoa_infinite(&sp)?,
            analytics::BatterySpec::Finite(m) => {
                let step = grid_step.unwrap_or_else(|| file.grid_step());
                optimizer::optimize_aoa_finite(&sp, m, step, false)?
            }
        },
    };

    eprintln!(
        "optimum (q1, q2) = ({}, {}) -> {} [{}: {}]",
        report.q1_star,
        report.q2_star,
        fmt_sig(report.value, 4),
        match report.method {
            OptMethod::ClosedForm => "closed form",
            OptMethod::GridSearch => "grid search",
        },
        report.case_label
    );
    let flagged = report.flag.is_some();
    if let Some(flag) = &report.flag {
        eprintln!("warning: {flag:?}");
    }

    emit(out, &to_json(&report)?)?;
    Ok(if flagged { ExitCode::from(3) } else { ExitCode::SUCCESS })
}

fn sweep_cmd(
    path: &Path,
    grid_step: Option<f64>,
    format: Format,
    out: Option<&Path>,
) -> aoa_lab::Result<ExitCode> {
    let file = ScenarioFile::load(path)?;
    let scenario = file.scenario()?;
    let sp = scenario.channel.success_probs();
    let step = grid_step.unwrap_or_else(|| file.grid_step());
    let grid = optimizer::sweep(&sp, &scenario.battery, step)?;

    let (q1, q2, value) = grid.min_cell();
    eprintln!(
        "grid {}x{} (step {}): min actuation age {} at ({}, {})",
        grid.q1_values.len(),
        grid.q2_values.len(),
        grid.grid_step,
        fmt_sig(value, 4),
        q1,
        q2
    );

    match format {
        Format::Json => emit(out, &to_json(&grid)?)?,
        Format::Csv => {
            let mut buf = Vec::new();
            grid.write_csv(&mut buf)?;
            let text = String::from_utf8(buf).expect("CSV output is always UTF-8");
            emit_raw(out, &text)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn validate_cmd(path: &Path, seed: Option<u64>, out: Option<&Path>) -> aoa_lab::Result<ExitCode> {
    let file = ScenarioFile::load(path)?;
    let seed = resolve_seed(seed, &file)?;
    let reports = oracles::validate_scenario(&file, seed)?;

    let mut failures = 0usize;
    for r in &reports {
        let verdict = if r.pass { "PASS" } else { "FAIL" };
        failures += usize::from(!r.pass);
        eprintln!(
            "{verdict} {}: closed {} vs oracle {} (diff {}, tol {}{})",
            r.quantity,
            fmt_sig(r.closed_form, 4),
            fmt_sig(r.oracle, 4),
            fmt_sig(r.abs_diff, 2),
            fmt_sig(r.abs_tol, 2),
            r.std_error.map_or_else(String::new, |s| format!(", se {}", fmt_sig(s, 2)))
        );
        if let Some(note) = &r.note {
            eprintln!("     {note}");
        }
    }
    eprintln!("{} of {} checks passed", reports.len() - failures, reports.len());

    emit(out, &to_json(&reports)?)?;
    Ok(if failures > 0 { ExitCode::from(3) } else { ExitCode::SUCCESS })
}

// ----------------------------------------------------------------------------
// shared plumbing

/// Seed precedence: command line, then the AOA_LAB_SEED environment
/// variable, then the scenario file, then the fixed default.
fn resolve_seed(flag: Option<u64>, file: &ScenarioFile) -> aoa_lab::Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    if let Ok(raw) = std::env::var(SEED_ENV) {
        return raw
            .parse::<u64>()
            .map_err(|_| Error::Schema(format!("{SEED_ENV} must be an unsigned integer, got {raw:?}")));
    }
    Ok(file.sim_seed().unwrap_or(DEFAULT_SEED))
}

fn to_json<T: serde::Serialize>(value: &T) -> aoa_lab::Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

/// Write a JSON document (newline-terminated) to stdout or a file.
fn emit(out: Option<&Path>, json: &str) -> aoa_lab::Result<()> {
    emit_raw(out, &format!("{json}\n"))
}

fn emit_raw(out: Option<&Path>, text: &str) -> aoa_lab::Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn regime_label(regime: Regime) -> &'static str {
    match regime {
        Regime::EnergyLimited => "energy-limited",
        Regime::EnergyUnlimited => "energy-unlimited",
    }
}
