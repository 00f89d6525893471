//! Low-complexity successive convex approximation with second-order-cone
//! subproblems.
//!
//! The secrecy constraints are split through SINR slacks `γ_b` (Bob lower
//! bounds) and `γ_e` (Eve upper bounds) coupled by
//! `1 + γ_b ≥ 2^{γ_s}(1 + γ_e)`. Every quadratic-over-linear term that
//! appears on the wrong side of an inequality is replaced by its tangent
//! lower bound [`surrogate_f`], so each surrogate-feasible point is exactly
//! feasible.

use std::time::Instant;

use irs_conic::{ComplexExpr, ConeProgram, ConicSolution, LinExpr, SolveStatus, SolverSettings};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BeamformingSolution, CVec};
use crate::problem::{sinr1, unit_phases, Instance};
use crate::scenario::cn;
use crate::trace::{SolveTrace, TraceKind, TraceRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlackMode {
    /// Constant objective: the phase step returns a strictly feasible
    /// (analytic-center) point.
    Constant,
    /// Maximize the smallest coupling margin in the phase step.
    MarginMax,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SocpOptions {
    pub epsilon: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub slack_mode: SlackMode,
    pub solver_tol: f64,
    pub init_attempts: usize,
}

impl Default for SocpOptions {
    fn default() -> Self {
        SocpOptions {
            epsilon: 1e-3,
            max_iters: 50,
            seed: 0,
            slack_mode: SlackMode::Constant,
            solver_tol: 1e-8,
            init_attempts: 10,
        }
    }
}

/// `2·Re(x̃* x)/r̃ − |x̃|²·r/r̃²`, the tangent lower bound of `|x|²/r`.
pub fn surrogate_f(x: Complex64, r: f64, x_tilde: Complex64, r_tilde: f64) -> f64 {
    2.0 * (x_tilde.conj() * x).re / r_tilde - x_tilde.norm_sqr() * r / (r_tilde * r_tilde)
}

/// Affine form of [`surrogate_f`] in `(x, r)`.
fn surrogate_expr(x: &ComplexExpr, r: LinExpr, x_tilde: Complex64, r_tilde: f64) -> LinExpr {
    x.real_inner(x_tilde).scaled(2.0 / r_tilde) - r.scaled(x_tilde.norm_sqr() / (r_tilde * r_tilde))
}

fn parts(x: &ComplexExpr) -> [LinExpr; 2] {
    [x.re.clone(), x.im.clone()]
}

#[derive(Clone, Debug, PartialEq)]
pub struct SinrSlacks {
    pub gamma_b: Vec<f64>,
    /// Indexed `[k][l]`.
    pub gamma_e: Vec<Vec<f64>>,
}

/// Received amplitudes as affine expressions: `[receiver][g]`, with the AN
/// term stored after the `K` groups.
struct Amplitudes {
    bob: Vec<Vec<ComplexExpr>>,
    bob_tilde: Vec<Vec<Complex64>>,
    eve: Vec<Vec<ComplexExpr>>,
    eve_tilde: Vec<Vec<Complex64>>,
}

/// Coupling handle: `1 + γ_b − 2^{γ_s}(1 + γ_e) + extra ≥ 0`.
struct SinrSystem {
    gamma_b: irs_conic::RealVector,
    gamma_e: irs_conic::RealVector,
}

fn gamma_tilde(amp: &[Complex64], k: usize) -> f64 {
    let groups = amp.len() - 1;
    let interference: f64 = (0..=groups).filter(|&g| g != k).map(|g| amp[g].norm_sqr()).sum();
    (amp[k].norm_sqr() / (interference + 1.0)).max(1e-9)
}

fn add_sinr_system(p: &mut ConeProgram, inst: &Instance, a: &Amplitudes, extra: Option<LinExpr>) -> SinrSystem {
    let kk = inst.groups;
    let ll = inst.eves();
    let gamma_b = p.vector(inst.users());
    let gamma_e = p.vector(kk * ll);
    for (t, &(k, _)) in inst.lifted.users.iter().enumerate() {
        let gt = gamma_tilde(&a.bob_tilde[t], k);
        let f = surrogate_expr(&a.bob[t][k], gamma_b.entry(t), a.bob_tilde[t][k], gt);
        let rest: Vec<LinExpr> = (0..=kk).filter(|&g| g != k).flat_map(|g| parts(&a.bob[t][g])).collect();
        p.add_rsoc(f - 1.0, LinExpr::constant(0.5), rest);
        p.add_nonneg(gamma_b.entry(t));
    }
    for l in 0..ll {
        for k in 0..kk {
            let mut r = LinExpr::constant(1.0);
            for g in (0..=kk).filter(|&g| g != k) {
                r += &surrogate_expr(&a.eve[l][g], LinExpr::constant(1.0), a.eve_tilde[l][g], 1.0);
            }
            p.add_rsoc(gamma_e.entry(k * ll + l), r.scaled(0.5), parts(&a.eve[l][k]).to_vec());
        }
    }
    let c = inst.rate_factor();
    for (t, &(k, _)) in inst.lifted.users.iter().enumerate() {
        for l in 0..ll {
            let mut e = gamma_b.entry(t) + 1.0 - (gamma_e.entry(k * ll + l) + 1.0).scaled(c);
            if let Some(x) = &extra {
                e += x;
            }
            p.add_nonneg(e);
        }
    }
    SinrSystem { gamma_b, gamma_e }
}

fn read_slacks(sol: &ConicSolution, inst: &Instance, sys: &SinrSystem) -> SinrSlacks {
    let ge = sol.vector(sys.gamma_e);
    let ll = inst.eves();
    SinrSlacks {
        gamma_b: sol.vector(sys.gamma_b),
        gamma_e: (0..inst.groups).map(|k| ge[k * ll..(k + 1) * ll].to_vec()).collect(),
    }
}

fn min_coupling(inst: &Instance, s: &SinrSlacks) -> f64 {
    let c = inst.rate_factor();
    let mut m = f64::INFINITY;
    for (t, &(k, _)) in inst.lifted.users.iter().enumerate() {
        for ge in &s.gamma_e[k] {
            m = m.min(1.0 + s.gamma_b[t] - c * (1.0 + ge));
        }
    }
    m
}

fn check_status(sol: &ConicSolution, what: &str) -> Result<()> {
    match sol.status {
        SolveStatus::Optimal => Ok(()),
        SolveStatus::Infeasible => Err(Error::Infeasible(format!("{what}: secrecy coupling constraints cannot be met"))),
        s => Err(Error::Solver(format!("{what}: {s:?}"))),
    }
}

/// Beamformer iterate in normalized units.
#[derive(Clone, Debug, PartialEq)]
pub struct Beams {
    pub w: Vec<CVec>,
    pub q: CVec,
}

impl Beams {
    pub fn power(&self) -> f64 {
        self.w.iter().map(|w| w.norm_squared()).sum::<f64>() + self.q.norm_squared()
    }

    fn all(&self) -> impl Iterator<Item = &CVec> {
        self.w.iter().chain(std::iter::once(&self.q))
    }
}

#[derive(Clone, Debug)]
pub struct P31Outcome {
    pub beams: Beams,
    pub slacks: SinrSlacks,
    /// Normalized power.
    pub power: f64,
    /// Coupling slack of the penalized variant.
    pub penalty_slack: Option<f64>,
    pub solve_time_s: f64,
}

/// Penalized beamformer step: coupling relaxed by `e ≥ e_min`, objective `e + μ·p`.
#[derive(Clone, Copy, Debug)]
pub struct Penalty {
    pub mu: f64,
    pub e_min: f64,
}

/// Beamformer step at fixed phases, expanded at `expansion`.
pub fn solve_p3_1(inst: &Instance, u: &CVec, expansion: &Beams, penalty: Option<Penalty>, tol: f64) -> Result<P31Outcome> {
    let (cb, ce) = inst.effective_channels(u);
    let mut p = ConeProgram::new();
    let m = inst.m;
    let w: Vec<_> = (0..inst.groups).map(|_| p.complex_vector(m)).collect();
    let q = p.complex_vector(m);
    let vars: Vec<_> = w.iter().chain(std::iter::once(&q)).collect();
    let amp = |c: &CVec| -> (Vec<ComplexExpr>, Vec<Complex64>) {
        let cc: Vec<Complex64> = c.iter().map(|z| z.conj()).collect();
        (
            vars.iter().map(|v| v.linear_combination(&cc)).collect(),
            expansion.all().map(|x| c.dotc(x)).collect(),
        )
    };
    let (bob, bob_tilde): (Vec<_>, Vec<_>) = cb.iter().map(amp).unzip();
    let (eve, eve_tilde): (Vec<_>, Vec<_>) = ce.iter().map(amp).unzip();
    let a = Amplitudes {
        bob,
        bob_tilde,
        eve,
        eve_tilde,
    };
    let e = penalty.map(|_| p.scalar());
    let sys = add_sinr_system(&mut p, inst, &a, e.map(|e| e.expr()));
    let power = p.scalar();
    let all_parts: Vec<LinExpr> = vars.iter().flat_map(|v| v.real_parts()).collect();
    p.add_rsoc(power.expr(), LinExpr::constant(0.5), all_parts);
    match (penalty, e) {
        (Some(pen), Some(e)) => {
            p.add_nonneg(e.expr() - pen.e_min);
            p.minimize(e.expr() + power.expr().scaled(pen.mu));
        }
        _ => p.minimize(power.expr()),
    }
    let sol = p.solve_with(&SolverSettings {
        tol,
        ..SolverSettings::default()
    })?;
    check_status(&sol, "beamformer step")?;
    let read = |v: irs_conic::ComplexVector| CVec::from_vec(sol.complex_vector(v));
    let beams = Beams {
        w: w.iter().map(|&v| read(v)).collect(),
        q: read(q),
    };
    Ok(P31Outcome {
        power: beams.power(),
        beams,
        slacks: read_slacks(&sol, inst, &sys),
        penalty_slack: e.map(|e| sol.scalar(e)),
        solve_time_s: sol.solve_time.as_secs_f64(),
    })
}

#[derive(Clone, Debug)]
pub struct P32Outcome {
    /// Relaxed `u` with `|u_n| ≤ 1` and unit last entry.
    pub u: CVec,
    pub slacks: SinrSlacks,
    /// Smallest `1 + γ_b − 2^{γ_s}(1 + γ_e)` at the returned point.
    pub margin: f64,
    pub solve_time_s: f64,
}

/// Phase step at fixed beamformers, expanded at the unit-modulus `u_tilde`.
pub fn solve_p3_2(inst: &Instance, beams: &Beams, u_tilde: &CVec, mode: SlackMode, tol: f64) -> Result<P32Outcome> {
    let n = inst.n;
    let mut p = ConeProgram::new();
    let uv = p.complex_vector(n);
    let amp = |h: &crate::model::CMat| -> (Vec<ComplexExpr>, Vec<Complex64>) {
        beams
            .all()
            .map(|x| {
                let a = h * x;
                let head: Vec<Complex64> = a.rows(0, n).iter().copied().collect();
                (uv.conj_combination(&head).add_constant(a[n]), u_tilde.dotc(&a))
            })
            .unzip()
    };
    let (bob, bob_tilde): (Vec<_>, Vec<_>) = inst.lifted.h_kj.iter().map(amp).unzip();
    let (eve, eve_tilde): (Vec<_>, Vec<_>) = inst.lifted.h_l.iter().map(amp).unzip();
    let a = Amplitudes {
        bob,
        bob_tilde,
        eve,
        eve_tilde,
    };
    let tau = match mode {
        SlackMode::MarginMax => Some(p.scalar()),
        SlackMode::Constant => None,
    };
    let sys = add_sinr_system(&mut p, inst, &a, tau.map(|t| -t.expr()));
    for i in 0..n {
        p.add_soc(LinExpr::constant(1.0), parts(&uv.entry(i)).to_vec());
    }
    if let Some(t) = tau {
        p.maximize(t.expr());
    }
    let sol = p.solve_with(&SolverSettings {
        tol,
        ..SolverSettings::default()
    })?;
    check_status(&sol, "phase step")?;
    let mut u = CVec::from_element(n + 1, Complex64::new(1.0, 0.0));
    for (i, z) in sol.complex_vector(uv).into_iter().enumerate() {
        u[i] = z;
    }
    let slacks = read_slacks(&sol, inst, &sys);
    Ok(P32Outcome {
        u,
        margin: min_coupling(inst, &slacks),
        slacks,
        solve_time_s: sol.solve_time.as_secs_f64(),
    })
}

/// `u* = exp(j∠(u†/u†_{N+1}))`.
pub fn recover_unit_modulus(u: &CVec) -> Result<CVec> {
    let n = u.len();
    let last = *u
        .as_slice()
        .last()
        .ok_or_else(|| Error::Dimension("empty phase vector".into()))?;
    if !(last.norm() > 1e-12) {
        return Err(Error::Domain("reference entry of the relaxed phase vector vanishes".into()));
    }
    Ok(CVec::from_fn(n, |i, _| {
        if i + 1 == n {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, (u[i] / last).arg())
        }
    }))
}

fn solution(inst: &Instance, beams: &Beams, u: &CVec) -> BeamformingSolution {
    let v = u.rows(0, inst.n).into_owned();
    BeamformingSolution::new(beams.w.clone(), beams.q.clone(), v)
}

/// Exact `min ln(1+SINR_b) − ln(1+SINR_e) − γ_s ln 2` in nats.
pub fn exact_margin(inst: &Instance, beams: &Beams, u: &CVec) -> f64 {
    inst.log_margin(&solution(inst, beams, u))
}

/// Maximum-ratio start with a small random AN vector.
fn mrt_start(inst: &Instance, u: &CVec, rng: &mut ChaCha8Rng) -> Beams {
    let (cb, _) = inst.effective_channels(u);
    let target = inst.rate_factor() - 1.0;
    let mut w = Vec::new();
    let mut scale_min = f64::INFINITY;
    for k in 0..inst.groups {
        let mut dir = CVec::zeros(inst.m);
        let members: Vec<usize> = (0..inst.users()).filter(|&t| inst.lifted.users[t].0 == k).collect();
        for &t in &members {
            dir += &cb[t] / Complex64::new(cb[t].norm().max(1e-300), 0.0);
        }
        let nrm = dir.norm();
        if nrm > 0.0 {
            dir /= Complex64::new(nrm, 0.0);
        } else {
            dir[0] = Complex64::new(1.0, 0.0);
        }
        let gain = members.iter().map(|&t| cb[t].dotc(&dir).norm_sqr()).fold(f64::INFINITY, f64::min);
        let s = (2.0 * target.max(0.1) / gain.max(1e-12)).sqrt();
        scale_min = scale_min.min(s);
        w.push(dir * Complex64::new(s, 0.0));
    }
    let mut q = CVec::from_fn(inst.m, |_, _| cn(rng, 1.0));
    let qn = q.norm();
    q *= Complex64::new(0.3 * scale_min / qn, 0.0);
    Beams { w, q }
}

/// Penalized SCA on the coupling slack until the iterate is strictly
/// feasible.
fn find_feasible(inst: &Instance, u: &CVec, start: Beams, tol: f64) -> Option<Beams> {
    let mut beams = start;
    let pen = Penalty { mu: 1e-4, e_min: -0.5 };
    for _ in 0..60 {
        if exact_margin(inst, &beams, u) > 0.0 {
            return Some(beams);
        }
        let out = solve_p3_1(inst, u, &beams, Some(pen), tol).ok()?;
        let e = out.penalty_slack.unwrap_or(f64::INFINITY);
        let progress = (e - pen.e_min).abs() > 0.0;
        beams = out.beams;
        if e < 0.0 && exact_margin(inst, &beams, u) > 0.0 {
            return Some(beams);
        }
        if !progress {
            break;
        }
    }
    None
}

/// Which blocks the outer loop updates.
#[derive(Clone, Debug)]
pub enum PhaseMode {
    /// Optimize `u` alongside the beamformers.
    Optimize,
    /// Keep the given `u = [v; 1]` fixed.
    Fixed(CVec),
}

pub(crate) const PHASE_STREAM: u64 = 11;
pub(crate) const BEAM_STREAM: u64 = 12;

pub(crate) fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub(crate) fn random_u(n: usize, rng: &mut ChaCha8Rng) -> CVec {
    let v = unit_phases((0..n).map(|_| std::f64::consts::TAU * rng.random::<f64>()));
    crate::model::extend_phase(&v)
}

/// Result in normalized units.
#[derive(Clone, Debug)]
pub struct ScaOutput {
    pub beams: Beams,
    pub u: CVec,
    pub trace: SolveTrace,
}

/// Alternating SCA on a normalized instance.
pub fn run_sca(inst: &Instance, mode: PhaseMode, opts: &SocpOptions) -> Result<ScaOutput> {
    let n = inst.n;
    let mut trace = SolveTrace::new(TraceKind::Socp);
    let mut phase_rng = rng(opts.seed, PHASE_STREAM);
    let mut beam_rng = rng(opts.seed, BEAM_STREAM);
    if inst.gamma_s == 0.0 {
        let u = match &mode {
            PhaseMode::Fixed(u) => u.clone(),
            PhaseMode::Optimize => random_u(n, &mut phase_rng),
        };
        let beams = Beams {
            w: vec![CVec::zeros(inst.m); inst.groups],
            q: CVec::zeros(inst.m),
        };
        trace.converged = true;
        return Ok(ScaOutput { beams, u, trace });
    }
    let mut start = None;
    for _ in 0..opts.init_attempts.max(1) {
        let u = match &mode {
            PhaseMode::Fixed(u) => u.clone(),
            PhaseMode::Optimize => random_u(n, &mut phase_rng),
        };
        let b0 = mrt_start(inst, &u, &mut beam_rng);
        if let Some(b) = find_feasible(inst, &u, b0, opts.solver_tol) {
            start = Some((b, u));
            break;
        }
    }
    let (mut beams, mut u) = start.ok_or_else(|| Error::Initialization {
        attempts: opts.init_attempts,
        reason: "no strictly feasible beamformers found".into(),
    })?;
    let optimize_phases = matches!(mode, PhaseMode::Optimize) && n > 0;
    let mut power = beams.power();
    for iter in 1..=opts.max_iters {
        let step = solve_p3_1(inst, &u, &beams, None, opts.solver_tol);
        let (t1, status) = match step {
            Ok(out) => {
                let t = out.solve_time_s;
                if out.power <= power && exact_margin(inst, &out.beams, &u) >= -1e-9 {
                    beams = out.beams;
                    (t, "ok")
                } else {
                    (t, "kept")
                }
            }
            Err(Error::Infeasible(_)) | Err(Error::Solver(_)) => (0.0, "stall"),
            Err(e) => return Err(e),
        };
        let mut t2 = 0.0;
        let mut flag = false;
        if optimize_phases {
            let clock = Instant::now();
            if let Ok(out) = solve_p3_2(inst, &beams, &u, opts.slack_mode, opts.solver_tol) {
                let cand = recover_unit_modulus(&out.u)?;
                if exact_margin(inst, &beams, &cand) >= 0.0 {
                    u = cand;
                } else {
                    flag = true;
                    if let Ok(extra) = solve_p3_1(inst, &cand, &beams, None, opts.solver_tol) {
                        if extra.power <= beams.power() && exact_margin(inst, &extra.beams, &cand) >= -1e-9 {
                            beams = extra.beams;
                            u = cand;
                        }
                    }
                }
            }
            t2 = clock.elapsed().as_secs_f64();
        }
        let new_power = beams.power();
        trace.push(TraceRow {
            iter,
            objective_w: inst.to_watts(new_power),
            first_time_s: t1,
            second_time_s: t2,
            status: status.into(),
            recovery_violation: flag,
        });
        trace.iterations = iter;
        let change = (power - new_power).abs();
        power = new_power;
        if change < opts.epsilon * power.max(f64::MIN_POSITIVE) || status == "stall" {
            trace.converged = status != "stall";
            break;
        }
    }
    Ok(ScaOutput { beams, u, trace })
}

/// Phase-optimized SCA; returns the physical solution.
pub fn run_socp(scenario: &crate::scenario::Scenario, opts: &SocpOptions) -> Result<(BeamformingSolution, SolveTrace)> {
    let inst = Instance::new(scenario)?;
    let out = run_sca(&inst, PhaseMode::Optimize, opts)?;
    Ok(finish(&inst, out))
}

pub(crate) fn finish(inst: &Instance, out: ScaOutput) -> (BeamformingSolution, SolveTrace) {
    let sol = solution(inst, &out.beams, &out.u);
    (inst.to_physical(&sol), out.trace)
}

/// Exact SINR values at an iterate; used to audit surrogate safety.
pub fn exact_sinrs(inst: &Instance, beams: &Beams, u: &CVec) -> SinrSlacks {
    let (cb, ce) = inst.effective_channels(u);
    SinrSlacks {
        gamma_b: inst
            .lifted
            .users
            .iter()
            .enumerate()
            .map(|(t, &(k, _))| sinr1(&cb[t], &beams.w, k, &beams.q))
            .collect(),
        gamma_e: (0..inst.groups)
            .map(|k| ce.iter().map(|c| sinr1(c, &beams.w, k, &beams.q)).collect())
            .collect(),
    }
}
