//! Baselines, Monte-Carlo parameter sweeps and their CSV/SVG artifacts.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_feasible, extend_phase, lift_channels, BeamformingSolution, RateReport, DEFAULT_FEASIBILITY_TOL};
use crate::problem::{unit_phases, Instance};
use crate::scenario::{ConfigFile, Geometry, Preset, Scenario, SystemConfig};
use crate::sdr::{run_sdr, SdrOptions};
use crate::socp::{finish, rng, run_sca, run_socp, PhaseMode, SocpOptions, PHASE_STREAM};
use crate::trace::SolveTrace;
use crate::units::watts_to_dbm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Sdr,
    Socp,
    NoIrs,
    RandomPhase,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Sdr, Method::Socp, Method::NoIrs, Method::RandomPhase];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Sdr => "sdr",
            Method::Socp => "socp",
            Method::NoIrs => "no-irs",
            Method::RandomPhase => "random-phase",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown method `{s}`")))
    }
}

/// Solver settings shared by all methods; the seed is taken from the scenario.
#[derive(Clone, Debug, Default)]
pub struct MethodOptions {
    pub socp: SocpOptions,
    pub sdr: SdrOptions,
}

/// Same power minimization with the IRS removed, solved by the SOCP
/// beamformer iterations alone. The returned solution has no phases.
pub fn run_baseline_no_irs(scenario: &Scenario, opts: &SocpOptions) -> Result<(BeamformingSolution, SolveTrace)> {
    let inst = Instance::new(scenario)?.without_irs();
    let out = run_sca(&inst, PhaseMode::Fixed(extend_phase(&unit_phases(std::iter::empty()))), opts)?;
    Ok(finish(&inst, out))
}

/// Phases drawn uniformly once from the seed; only `(w, q)` are optimized.
pub fn run_baseline_random_phase(scenario: &Scenario, opts: &SocpOptions) -> Result<(BeamformingSolution, SolveTrace)> {
    let inst = Instance::new(scenario)?;
    let theta = random_phases(scenario.config.n, opts.seed);
    let u = extend_phase(&unit_phases(theta.into_iter()));
    let out = run_sca(&inst, PhaseMode::Fixed(u), opts)?;
    Ok(finish(&inst, out))
}

/// Uniform phases on `[0, 2π)`, deterministic in `seed`.
pub fn random_phases(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed, PHASE_STREAM);
    (0..n).map(|_| std::f64::consts::TAU * r.random::<f64>()).collect()
}

/// Runs one method with every seed set to `scenario.seed`.
pub fn solve(scenario: &Scenario, method: Method, opts: &MethodOptions) -> Result<(BeamformingSolution, SolveTrace)> {
    let socp = SocpOptions {
        seed: scenario.seed,
        ..opts.socp.clone()
    };
    match method {
        Method::Sdr => run_sdr(
            scenario,
            &SdrOptions {
                seed: scenario.seed,
                ..opts.sdr.clone()
            },
        ),
        Method::Socp => run_socp(scenario, &socp),
        Method::NoIrs => run_baseline_no_irs(scenario, &socp),
        Method::RandomPhase => run_baseline_random_phase(scenario, &socp),
    }
}

/// Feasibility report in physical units. A solution without phases is
/// evaluated on the scenario with the IRS removed.
pub fn evaluate(scenario: &Scenario, sol: &BeamformingSolution, tol: f64) -> Result<RateReport> {
    let owned;
    let s = if sol.theta.is_empty() && scenario.config.n > 0 {
        owned = scenario.without_irs();
        &owned
    } else {
        scenario
    };
    if sol.theta.len() != s.config.n {
        return Err(Error::Dimension(format!("{} phases for N = {}", sol.theta.len(), s.config.n)));
    }
    let lifted = lift_channels(&s.channels, &s.config)?;
    Ok(check_feasible(sol, &lifted, &s.config, tol))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVar {
    #[serde(rename = "gamma_s")]
    GammaS,
    N,
    #[serde(rename = "d_v")]
    DV,
    #[serde(rename = "d_AI")]
    DAI,
    K,
}

impl SweepVar {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVar::GammaS => "gamma_s",
            SweepVar::N => "N",
            SweepVar::DV => "d_v",
            SweepVar::DAI => "d_AI",
            SweepVar::K => "K",
        }
    }

    fn check(self, value: f64) -> Result<()> {
        let ok = match self {
            SweepVar::GammaS => value >= 0.0 && value.is_finite(),
            SweepVar::N => value >= 0.0 && value.fract() == 0.0,
            SweepVar::K => value >= 1.0 && value.fract() == 0.0,
            SweepVar::DV | SweepVar::DAI => value > 0.0 && value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("{} cannot take the value {value}", self.as_str())))
        }
    }

    /// Applies `value` to a copy of the base configuration. For `K` every
    /// group gets the size of the first base group.
    pub fn apply(self, config: &SystemConfig, geometry: &Geometry, value: f64) -> Result<(SystemConfig, Geometry)> {
        self.check(value)?;
        let mut c = config.clone();
        let mut g = geometry.clone();
        match self {
            SweepVar::GammaS => c.gamma_s = value,
            SweepVar::N => c.n = value as usize,
            SweepVar::DV => g.d_v = value,
            SweepVar::DAI => g.d_AI = value,
            SweepVar::K => {
                let size = config.group_sizes.first().copied().unwrap_or(1);
                c.k = value as usize;
                c.group_sizes = vec![size; c.k];
            }
        }
        Ok((c, g))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub var: SweepVar,
    pub values: Vec<f64>,
}

/// Base scenario of a sweep: a named preset or an explicit configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseScenario {
    Explicit { config: ConfigFile, geometry: Geometry },
    Preset { preset: String },
}

impl BaseScenario {
    pub fn resolve(&self) -> Result<(SystemConfig, Geometry)> {
        match self {
            BaseScenario::Explicit { config, geometry } => Ok((SystemConfig::from(config), geometry.clone())),
            BaseScenario::Preset { preset } => {
                let p = Preset::parse(preset).ok_or_else(|| Error::Domain(format!("unknown preset `{preset}`")))?;
                Ok((p.config(), p.geometry()))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: BaseScenario,
    pub sweep: Sweep,
    pub trials: usize,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
}

fn one() -> usize {
    1
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<ExperimentSpec> {
        let spec: ExperimentSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Domain("trials must be at least 1".into()));
        }
        if self.methods.is_empty() || self.sweep.values.is_empty() {
            return Err(Error::Domain("a sweep needs at least one method and one value".into()));
        }
        let (config, geometry) = self.scenario.resolve()?;
        for &v in &self.sweep.values {
            let (c, g) = self.sweep.var.apply(&config, &geometry, v)?;
            c.validate()?;
            g.validate()?;
        }
        Ok(())
    }

    /// Seed of trial `index`; shared by every method and sweep value.
    pub fn trial_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(index as u64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    pub sweep_var: String,
    pub sweep_value: f64,
    pub trial_seed: u64,
    pub power_w: f64,
    pub power_dbm: f64,
    pub iterations: usize,
    pub solve_time_s: f64,
    pub feasible: bool,
    pub min_secrecy_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: Method,
    pub sweep_var: String,
    pub sweep_value: f64,
    pub trials_ok: usize,
    pub trials_infeasible: usize,
    pub mean_power_w: f64,
    pub mean_power_dbm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<ResultRow>,
    pub aggregate: Vec<AggregateRow>,
}

fn run_row(scenario: &Scenario, method: Method, opts: &MethodOptions, var: SweepVar, value: f64) -> ResultRow {
    let clock = Instant::now();
    let outcome = solve(scenario, method, opts);
    let solve_time_s = clock.elapsed().as_secs_f64();
    let mut row = ResultRow {
        method,
        sweep_var: var.as_str().into(),
        sweep_value: value,
        trial_seed: scenario.seed,
        power_w: f64::NAN,
        power_dbm: f64::NAN,
        iterations: 0,
        solve_time_s,
        feasible: false,
        min_secrecy_margin: f64::NAN,
    };
    if let Ok((sol, trace)) = outcome {
        row.iterations = trace.iterations;
        if let Ok(report) = evaluate(scenario, &sol, DEFAULT_FEASIBILITY_TOL) {
            row.power_w = report.power;
            row.power_dbm = watts_to_dbm(report.power);
            row.feasible = report.feasible;
            row.min_secrecy_margin = report.min_secrecy_margin;
        }
    }
    row
}

/// Every `(value, trial, method)` cell of the sweep. Failed solves become
/// infeasible rows with `NaN` power.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepResult> {
    run_sweep_with(spec, &MethodOptions::default())
}

pub fn run_sweep_with(spec: &ExperimentSpec, opts: &MethodOptions) -> Result<SweepResult> {
    spec.validate()?;
    let (config, geometry) = spec.scenario.resolve()?;
    let mut values = spec.sweep.values.clone();
    values.sort_by(f64::total_cmp);
    let cells: Vec<(f64, usize)> = values
        .iter()
        .flat_map(|&v| (0..spec.trials).map(move |t| (v, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("worker pool: {e}")))?;
    let var = spec.sweep.var;
    let per_cell: Vec<Vec<ResultRow>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(value, trial)| {
                let seed = spec.trial_seed(trial);
                let scenario = var
                    .apply(&config, &geometry, value)
                    .and_then(|(c, g)| Scenario::generate(c, g, seed));
                spec.methods
                    .iter()
                    .map(|&m| match &scenario {
                        Ok(s) => run_row(s, m, opts, var, value),
                        Err(_) => ResultRow {
                            method: m,
                            sweep_var: var.as_str().into(),
                            sweep_value: value,
                            trial_seed: seed,
                            power_w: f64::NAN,
                            power_dbm: f64::NAN,
                            iterations: 0,
                            solve_time_s: 0.0,
                            feasible: false,
                            min_secrecy_margin: f64::NAN,
                        },
                    })
                    .collect()
            })
            .collect()
    });
    let rows: Vec<ResultRow> = per_cell.into_iter().flatten().collect();
    let aggregate = aggregate(&rows, &spec.methods);
    Ok(SweepResult { rows, aggregate })
}

/// Mean power over feasible rows per `(method, value)`. Powers are summed
/// in sorted order so the result does not depend on trial order.
pub fn aggregate(rows: &[ResultRow], methods: &[Method]) -> Vec<AggregateRow> {
    let mut cells: BTreeMap<(u64, usize), (f64, Vec<f64>, usize)> = BTreeMap::new();
    let mut var = String::new();
    for r in rows {
        let Some(mi) = methods.iter().position(|&m| m == r.method) else {
            continue;
        };
        var.clone_from(&r.sweep_var);
        let key = (ordered(r.sweep_value), mi);
        let cell = cells.entry(key).or_insert((r.sweep_value, Vec::new(), 0));
        if r.feasible && r.power_w.is_finite() {
            cell.1.push(r.power_w);
        } else {
            cell.2 += 1;
        }
    }
    cells
        .into_iter()
        .map(|((_, mi), (value, mut powers, bad))| {
            powers.sort_by(f64::total_cmp);
            let mean = if powers.is_empty() {
                f64::NAN
            } else {
                powers.iter().sum::<f64>() / powers.len() as f64
            };
            AggregateRow {
                method: methods[mi],
                sweep_var: var.clone(),
                sweep_value: value,
                trials_ok: powers.len(),
                trials_infeasible: bad,
                mean_power_w: mean,
                mean_power_dbm: watts_to_dbm(mean),
            }
        })
        .collect()
}

/// Order-preserving map of a float onto `u64`.
fn ordered(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

pub fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(text: &str) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn read_aggregate(text: &str) -> Result<Vec<AggregateRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Mean power in dBm against the sweep value, one polyline per method.
pub fn plot_svg(aggregate: &[AggregateRow]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const PAD: f64 = 60.0;
    const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let pts: Vec<&AggregateRow> = aggregate.iter().filter(|a| a.mean_power_dbm.is_finite()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for a in &pts {
        x0 = x0.min(a.sweep_value);
        x1 = x1.max(a.sweep_value);
        y0 = y0.min(a.mean_power_dbm);
        y1 = y1.max(a.mean_power_dbm);
    }
    if !(x1 > x0) {
        x0 -= 1.0;
        x1 += 1.0;
    }
    if !(y1 > y0) {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let var = aggregate.first().map(|a| a.sweep_var.as_str()).unwrap_or("");
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <line x1=\"{PAD}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <text x=\"{cx}\" y=\"{xl}\" text-anchor=\"middle\">{var}</text>\n\
         <text x=\"14\" y=\"{cy}\" transform=\"rotate(-90 14 {cy})\" text-anchor=\"middle\">mean transmit power (dBm)</text>\n\
         <text x=\"{PAD}\" y=\"{tl}\" text-anchor=\"middle\">{x0}</text>\n\
         <text x=\"{r}\" y=\"{tl}\" text-anchor=\"middle\">{x1}</text>\n\
         <text x=\"{yl}\" y=\"{b}\" text-anchor=\"end\">{y0:.1}</text>\n\
         <text x=\"{yl}\" y=\"{PAD}\" text-anchor=\"end\">{y1:.1}</text>\n",
        b = H - PAD,
        r = W - PAD,
        cx = W / 2.0,
        xl = H - 15.0,
        cy = H / 2.0,
        tl = H - PAD + 16.0,
        yl = PAD - 6.0,
    );
    for (i, m) in Method::ALL.iter().enumerate() {
        let line: Vec<String> = pts
            .iter()
            .filter(|a| a.method == *m)
            .map(|a| format!("{:.2},{:.2}", sx(a.sweep_value), sy(a.mean_power_dbm)))
            .collect();
        if line.is_empty() {
            continue;
        }
        let c = COLORS[i];
        s += &format!(
            "<polyline fill=\"none\" stroke=\"{c}\" stroke-width=\"2\" points=\"{}\"/>\n",
            line.join(" ")
        );
        s += &format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{c}\">{m}</text>\n",
            W - PAD + 4.0,
            PAD + 16.0 * i as f64
        );
    }
    s += "</svg>\n";
    s
}

/// Writes `results.csv`, `aggregate.csv` and optionally `power.svg`.
pub fn write_artifacts(dir: &Path, result: &SweepResult, plot: bool) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_rows(std::fs::File::create(dir.join("results.csv"))?, &result.rows)?;
    write_rows(std::fs::File::create(dir.join("aggregate.csv"))?, &result.aggregate)?;
    if plot {
        std::fs::write(dir.join("power.svg"), plot_svg(&result.aggregate))?;
    }
    Ok(())
}
