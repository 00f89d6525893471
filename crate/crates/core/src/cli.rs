//! Command-line front end: `generate`, `solve`, `sweep` and `check`.
//!
//! Exit codes: 0 on success, 2 when a solution is infeasible or no feasible
//! point was found, 1 on any other error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::harness::{evaluate, run_sweep_with, solve, write_artifacts, ExperimentSpec, Method, MethodOptions};
use crate::model::{SolutionFile, DEFAULT_FEASIBILITY_TOL};
use crate::scenario::{Geometry, Preset, Scenario};
use crate::socp::SlackMode;
use crate::units::dbm_to_watts;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "irs-secure", version, about = "Power minimization for IRS-assisted secure multicast")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a scenario file.
    Generate(GenerateArgs),
    /// Solve a scenario with one method.
    Solve(SolveArgs),
    /// Run a parameter sweep from a JSON spec.
    Sweep(SweepArgs),
    /// Check a solution against a scenario.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// desk, large or group-sweep
    #[arg(long, default_value = "desk")]
    preset: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short = 'M', long = "antennas")]
    m: Option<usize>,
    #[arg(short = 'N', long = "elements")]
    n: Option<usize>,
    /// Number of groups; every group gets `--group-size` users.
    #[arg(short = 'K', long = "groups")]
    k: Option<usize>,
    #[arg(long)]
    group_size: Option<usize>,
    #[arg(short = 'L', long = "eves")]
    l: Option<usize>,
    #[arg(long)]
    gamma_s: Option<f64>,
    #[arg(long)]
    sigma2_dbm: Option<f64>,
    #[arg(long)]
    d_v: Option<f64>,
    #[arg(long = "d-ai")]
    d_ai: Option<f64>,
    /// Store the channel realization instead of regenerating it from the seed.
    #[arg(long)]
    with_channels: bool,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_parser = parse_method)]
    method: Method,
    #[arg(long, default_value = "solution.json")]
    out: PathBuf,
    #[arg(long, default_value = "trace.csv")]
    trace: PathBuf,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Phase step objective: constant or margin-max.
    #[arg(long, value_parser = parse_slack)]
    phase_step: Option<SlackMode>,
    #[arg(long)]
    randomizations: Option<usize>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Also write power.svg.
    #[arg(long)]
    plot: bool,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    solution: PathBuf,
    #[arg(long, default_value_t = DEFAULT_FEASIBILITY_TOL)]
    tol: f64,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_slack(s: &str) -> std::result::Result<SlackMode, String> {
    match s {
        "constant" => Ok(SlackMode::Constant),
        "margin-max" => Ok(SlackMode::MarginMax),
        _ => Err(format!("unknown phase step `{s}`")),
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve_cmd(a),
        Command::Sweep(a) => sweep(a),
        Command::Check(a) => check(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Infeasible(_) | Error::Initialization { .. } => EXIT_INFEASIBLE,
                _ => EXIT_ERROR,
            }
        }
    }
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn generate(a: GenerateArgs) -> Result<i32> {
    let preset = Preset::parse(&a.preset).ok_or_else(|| Error::Domain(format!("unknown preset `{}`", a.preset)))?;
    let mut config = preset.config();
    let mut geometry: Geometry = preset.geometry();
    if let Some(m) = a.m {
        config.m = m;
    }
    if let Some(n) = a.n {
        config.n = n;
    }
    if let Some(l) = a.l {
        config.l = l;
    }
    if a.k.is_some() || a.group_size.is_some() {
        let k = a.k.unwrap_or(config.k);
        let size = a.group_size.unwrap_or(config.group_sizes[0]);
        config.k = k;
        config.group_sizes = vec![size; k];
    }
    if let Some(g) = a.gamma_s {
        config.gamma_s = g;
    }
    if let Some(s) = a.sigma2_dbm {
        config.sigma2 = dbm_to_watts(s);
    }
    if let Some(d) = a.d_v {
        geometry.d_v = d;
    }
    if let Some(d) = a.d_ai {
        geometry.d_AI = d;
    }
    let scenario = Scenario::generate(config, geometry, a.seed.unwrap_or(0))?;
    let text = scenario.to_json(a.with_channels)?;
    match a.out {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => writeln!(std::io::stdout(), "{text}")?,
    }
    Ok(EXIT_OK)
}

fn solve_cmd(a: SolveArgs) -> Result<i32> {
    let scenario = Scenario::from_json(&read(&a.scenario)?)?;
    let mut opts = MethodOptions::default();
    if let Some(e) = a.epsilon {
        opts.socp.epsilon = e;
        opts.sdr.epsilon = e;
    }
    if let Some(n) = a.max_iters {
        opts.socp.max_iters = n;
        opts.sdr.max_iters = n;
    }
    if let Some(mode) = a.phase_step {
        opts.socp.slack_mode = mode;
        opts.sdr.u_step = mode;
    }
    if let Some(n) = a.randomizations {
        opts.sdr.randomization_count = n;
    }
    let (sol, trace) = solve(&scenario, a.method, &opts)?;
    let report = evaluate(&scenario, &sol, DEFAULT_FEASIBILITY_TOL)?;
    let feasible = report.feasible;
    let file = SolutionFile::new(&sol, Some(report), Some(a.method.to_string()));
    std::fs::write(&a.out, serde_json::to_string_pretty(&file)? + "\n")?;
    trace.write_csv(std::fs::File::create(&a.trace)?)?;
    println!(
        "{}: power {:.6e} W ({:.3} dBm), {} iterations, feasible {}",
        a.method, file.power_w, file.power_dbm, trace.iterations, feasible
    );
    Ok(if feasible { EXIT_OK } else { EXIT_INFEASIBLE })
}

fn sweep(a: SweepArgs) -> Result<i32> {
    let mut spec = ExperimentSpec::from_json(&read(&a.spec)?)?;
    if let Some(w) = a.workers {
        spec.workers = w;
    }
    let result = run_sweep_with(&spec, &MethodOptions::default())?;
    write_artifacts(&a.out_dir, &result, a.plot)?;
    for row in &result.aggregate {
        println!(
            "{:>13} {}={:<8} ok={:<3} infeasible={:<3} mean {:.3} dBm",
            row.method, row.sweep_var, row.sweep_value, row.trials_ok, row.trials_infeasible, row.mean_power_dbm
        );
    }
    Ok(EXIT_OK)
}

fn check(a: CheckArgs) -> Result<i32> {
    let scenario = Scenario::from_json(&read(&a.scenario)?)?;
    let file: SolutionFile = serde_json::from_str(&read(&a.solution)?)?;
    let target = if file.theta.is_empty() && scenario.config.n > 0 {
        scenario.without_irs()
    } else {
        scenario
    };
    let sol = file.to_solution(&target.config)?;
    let report = evaluate(&target, &sol, a.tol)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.feasible { EXIT_OK } else { EXIT_INFEASIBLE })
}
