//! Semidefinite-relaxation alternating optimization.
//!
//! With `W_k = w_k w_kᴴ`, `Q = q qᴴ` and `U = u uᴴ` every rate is a difference
//! of logarithms of affine functions. For a user `(k, j)` and Eve `l`:
//!
//! * `f1 = log2(Σ_g tr(A W_g) + tr(A Q) + σ²)`, `f2` the same without `g = k`,
//! * `f3 = log2(Σ_g tr(B W_g) + tr(B Q) + σ²)`, `f4` the same without `g = k`,
//!
//! where `A = H_kjᴴ U H_kj` and `B = H_lᴴ U H_l`, so `R_b = f1 − f2` and
//! `R_e = f3 − f4`. The concave `f2` and `f3` are replaced by their tangent
//! planes, giving convex subproblems in `(W, Q)` and in `U` that are solved
//! alternately. A single Gaussian randomization recovers vectors at the end.

use std::f64::consts::LN_2;
use std::time::Instant;

use irs_conic::{ConeProgram, HermitianVar, LinExpr, SolveStatus, SolverSettings};
use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BeamformingSolution, CMat, CVec, LiftedChannels};
use crate::problem::Instance;
use crate::scenario::{cn, Scenario};
use crate::socp::{random_u, rng, SlackMode};
use crate::trace::{SolveTrace, TraceKind, TraceRow};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SdrOptions {
    pub epsilon: f64,
    pub max_iters: usize,
    pub randomization_count: usize,
    /// Relative bisection tolerance on the joint scaling factor.
    pub bisection_tol: f64,
    pub seed: u64,
    pub solver_tol: f64,
    pub init_attempts: usize,
    /// Objective of the `U` step.
    pub u_step: SlackMode,
}

impl Default for SdrOptions {
    fn default() -> Self {
        SdrOptions {
            epsilon: 1e-3,
            max_iters: 50,
            randomization_count: 100,
            bisection_tol: 1e-4,
            seed: 0,
            solver_tol: 1e-8,
            init_attempts: 10,
            u_step: SlackMode::Constant,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdrIterate {
    pub w: Vec<CMat>,
    pub q: CMat,
    pub u: CMat,
}

impl SdrIterate {
    pub fn rank_one(sol: &BeamformingSolution) -> Self {
        let outer = |x: &CVec| x * x.adjoint();
        SdrIterate {
            w: sol.w.iter().map(outer).collect(),
            q: outer(&sol.q_an),
            u: outer(&sol.u()),
        }
    }

    pub fn power(&self) -> f64 {
        self.w.iter().map(trace_re).sum::<f64>() + trace_re(&self.q)
    }
}

fn trace_re(x: &CMat) -> f64 {
    x.diagonal().iter().map(|z| z.re).sum()
}

/// `Re tr(A B)`.
pub fn inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.transpose().iter()).map(|(x, y)| (x * y).re).sum()
}

/// Which of the four log terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogTerm {
    F1,
    F2,
    F3,
    F4,
}

impl LogTerm {
    fn bob(self) -> bool {
        matches!(self, LogTerm::F1 | LogTerm::F2)
    }

    fn drops_own(self) -> bool {
        matches!(self, LogTerm::F2 | LogTerm::F4)
    }
}

/// Triple `(user t, group k, Eve l)` addressed by the log terms.
#[derive(Clone, Copy, Debug)]
pub struct Triple {
    pub t: usize,
    pub k: usize,
    pub l: usize,
}

fn channel(lifted: &LiftedChannels, term: LogTerm, tr: Triple) -> &CMat {
    if term.bob() {
        &lifted.h_kj[tr.t]
    } else {
        &lifted.h_l[tr.l]
    }
}

/// `Σ_{g in set} W_g + Q`.
fn covariance(it: &SdrIterate, skip: Option<usize>) -> CMat {
    let mut c = it.q.clone();
    for (g, w) in it.w.iter().enumerate() {
        if Some(g) != skip {
            c += w;
        }
    }
    c
}

/// Argument of the logarithm in `f_i`.
pub fn log_argument(term: LogTerm, it: &SdrIterate, lifted: &LiftedChannels, sigma2: f64, tr: Triple) -> f64 {
    let h = channel(lifted, term, tr);
    let cov = covariance(it, term.drops_own().then_some(tr.k));
    inner(&it.u, &(h * cov * h.adjoint())) + sigma2
}

/// `f_i` in bits.
pub fn eval_f(term: LogTerm, it: &SdrIterate, lifted: &LiftedChannels, sigma2: f64, tr: Triple) -> f64 {
    log_argument(term, it, lifted, sigma2, tr).log2()
}

/// Affine upper bound `f(x̃) + Σ_b Re tr(G_b (X_b − X̃_b))` of a concave log
/// term, over blocks `(W_1, …, W_K, Q)` or `(U)`.
#[derive(Clone, Debug)]
pub struct Tangent {
    pub value: f64,
    pub at: Vec<CMat>,
    pub grad: Vec<CMat>,
}

impl Tangent {
    pub fn eval(&self, blocks: &[&CMat]) -> f64 {
        self.value
            + self
                .grad
                .iter()
                .zip(&self.at)
                .zip(blocks)
                .map(|((g, a), x)| inner(g, x) - inner(g, a))
                .sum::<f64>()
    }
}

fn blocks_wq(it: &SdrIterate) -> Vec<CMat> {
    it.w.iter().cloned().chain(std::iter::once(it.q.clone())).collect()
}

/// Tangent bounds of `(f2, f3)` in `(W, Q)` with `U` fixed.
pub fn mm_bound_wq(exp: &SdrIterate, lifted: &LiftedChannels, sigma2: f64, tr: Triple) -> (Tangent, Tangent) {
    let groups = exp.w.len();
    let make = |term: LogTerm| {
        let h = channel(lifted, term, tr);
        let a = h.adjoint() * &exp.u * h;
        let den = log_argument(term, exp, lifted, sigma2, tr);
        let g = &a * Complex64::new(1.0 / (den * LN_2), 0.0);
        let zero = CMat::zeros(a.nrows(), a.ncols());
        let grad = (0..=groups)
            .map(|b| if term.drops_own() && b == tr.k { zero.clone() } else { g.clone() })
            .collect();
        Tangent {
            value: den.log2(),
            at: blocks_wq(exp),
            grad,
        }
    };
    (make(LogTerm::F2), make(LogTerm::F3))
}

/// Tangent bounds of `(f2, f3)` in `U` with `(W, Q)` fixed.
pub fn mm_bound_u(exp: &SdrIterate, lifted: &LiftedChannels, sigma2: f64, tr: Triple) -> (Tangent, Tangent) {
    let make = |term: LogTerm| {
        let h = channel(lifted, term, tr);
        let c = h * covariance(exp, term.drops_own().then_some(tr.k)) * h.adjoint();
        let den = inner(&exp.u, &c) + sigma2;
        Tangent {
            value: den.log2(),
            at: vec![exp.u.clone()],
            grad: vec![c * Complex64::new(1.0 / (den * LN_2), 0.0)],
        }
    };
    (make(LogTerm::F2), make(LogTerm::F3))
}

fn triples(inst: &Instance) -> Vec<Triple> {
    let mut out = Vec::new();
    for (t, &(k, _)) in inst.lifted.users.iter().enumerate() {
        for l in 0..inst.eves() {
            out.push(Triple { t, k, l });
        }
    }
    out
}

/// Exact `min (f1 + f4 − f2 − f3) − γ_s` over all triples, in bits.
pub fn relaxed_margin(inst: &Instance, it: &SdrIterate) -> f64 {
    triples(inst)
        .into_iter()
        .map(|tr| {
            let f = |term| eval_f(term, it, &inst.lifted, 1.0, tr);
            f(LogTerm::F1) + f(LogTerm::F4) - f(LogTerm::F2) - f(LogTerm::F3)
        })
        .fold(f64::INFINITY, f64::min)
        - inst.gamma_s
}

fn settings(tol: f64) -> SolverSettings {
    SolverSettings {
        tol,
        ..SolverSettings::default()
    }
}

fn status_error(status: SolveStatus, what: &str) -> Error {
    match status {
        SolveStatus::Infeasible => Error::Infeasible(format!("{what} is infeasible")),
        s => Error::Solver(format!("{what}: {s:?}")),
    }
}

/// Penalized variant: the secrecy constraints are relaxed by `e ≥ e_min`
/// and the objective becomes `e + μ·power`.
#[derive(Clone, Copy, Debug)]
pub struct Penalty {
    pub mu: f64,
    pub e_min: f64,
}

#[derive(Clone, Debug)]
pub struct P21Outcome {
    pub w: Vec<CMat>,
    pub q: CMat,
    /// `Σ tr(W_k) + tr(Q)`, normalized units.
    pub objective: f64,
    pub penalty_slack: Option<f64>,
    pub solve_time_s: f64,
}

/// Adds the exact-log and linearized-log system in natural-log units:
/// `s1 + s4 − f̃2 − f̃3 ≥ γ_s ln 2 − extra`. `arg(term, tr)` returns the
/// affine argument of a log term, `tilde(term, tr)` its expansion value.
fn add_secrecy_system(
    p: &mut ConeProgram,
    inst: &Instance,
    arg: &dyn Fn(LogTerm, Triple) -> LinExpr,
    tilde: &dyn Fn(LogTerm, Triple) -> f64,
    extra: Option<LinExpr>,
) {
    let ll = inst.eves();
    let s1: Vec<_> = (0..inst.users()).map(|_| p.scalar()).collect();
    let s4: Vec<_> = (0..inst.groups * ll).map(|_| p.scalar()).collect();
    for (t, &(k, _)) in inst.lifted.users.iter().enumerate() {
        p.add_exp(s1[t].expr(), LinExpr::constant(1.0), arg(LogTerm::F1, Triple { t, k, l: 0 }));
    }
    for k in 0..inst.groups {
        // any member of group k addresses the same Eve term
        let t = inst.lifted.users.iter().position(|&(g, _)| g == k).unwrap_or(0);
        for l in 0..ll {
            p.add_exp(s4[k * ll + l].expr(), LinExpr::constant(1.0), arg(LogTerm::F4, Triple { t, k, l }));
        }
    }
    for tr in triples(inst) {
        let lin = |term: LogTerm| {
            let a0 = tilde(term, tr);
            arg(term, tr).scaled(1.0 / a0) + (a0.ln() - 1.0)
        };
        let mut e = s1[tr.t].expr() + s4[tr.k * ll + tr.l].expr() - lin(LogTerm::F2) - lin(LogTerm::F3)
            - inst.gamma_s * LN_2;
        if let Some(x) = &extra {
            e += x;
        }
        p.add_nonneg(e);
    }
}

/// Beamforming step at fixed `U`, expanded at `exp`'s `(W, Q)`.
pub fn solve_p2_1(inst: &Instance, exp: &SdrIterate, penalty: Option<Penalty>, tol: f64) -> Result<P21Outcome> {
    let lifted = &inst.lifted;
    let mut p = ConeProgram::new();
    let w: Vec<HermitianVar> = (0..inst.groups).map(|_| p.hermitian_psd(inst.m)).collect();
    let q = p.hermitian_psd(inst.m);
    let a_bob: Vec<CMat> = lifted.h_kj.iter().map(|h| h.adjoint() * &exp.u * h).collect();
    let a_eve: Vec<CMat> = lifted.h_l.iter().map(|h| h.adjoint() * &exp.u * h).collect();
    let arg = |term: LogTerm, tr: Triple| -> LinExpr {
        let a = if term.bob() { &a_bob[tr.t] } else { &a_eve[tr.l] };
        let mut e = q.inner(a) + 1.0;
        for (g, wg) in w.iter().enumerate() {
            if !(term.drops_own() && g == tr.k) {
                e += &wg.inner(a);
            }
        }
        e
    };
    let tilde = |term: LogTerm, tr: Triple| log_argument(term, exp, lifted, 1.0, tr);
    let e = penalty.map(|_| p.scalar());
    add_secrecy_system(&mut p, inst, &arg, &tilde, e.map(|e| e.expr()));
    let power: LinExpr = w.iter().map(|x| x.trace()).sum::<LinExpr>() + q.trace();
    match (penalty, e) {
        (Some(pen), Some(e)) => {
            p.add_nonneg(e.expr() - pen.e_min);
            p.minimize(e.expr() + power.clone().scaled(pen.mu));
        }
        _ => p.minimize(power.clone()),
    }
    let sol = p.solve_with(&settings(tol))?;
    if !sol.is_optimal() {
        return Err(status_error(sol.status, "beamforming step"));
    }
    Ok(P21Outcome {
        w: w.iter().map(|&x| sol.hermitian(x)).collect(),
        q: sol.hermitian(q),
        objective: sol.value(&power),
        penalty_slack: e.map(|e| sol.scalar(e)),
        solve_time_s: sol.solve_time.as_secs_f64(),
    })
}

#[derive(Clone, Debug)]
pub struct P22Outcome {
    pub u: CMat,
    /// Achieved `τ` (nats) in margin mode, zero otherwise.
    pub margin: f64,
    pub solve_time_s: f64,
}

/// Phase step at fixed `(W, Q)`, expanded at `exp.u`.
///
/// In [`SlackMode::Constant`] any strictly feasible
/// `U` is accepted: the analytic center is tried first and, when the
/// interior-point phase stalls on a thin feasible set, the margin-maximizing
/// point is used if its margin is positive.
pub fn solve_p2_2(inst: &Instance, exp: &SdrIterate, mode: SlackMode, tol: f64) -> Result<P22Outcome> {
    match (mode, solve_p2_2_once(inst, exp, mode, tol)) {
        (SlackMode::Constant, Err(Error::Infeasible(_) | Error::Solver(_))) => {
            let out = solve_p2_2_once(inst, exp, SlackMode::MarginMax, tol)?;
            if out.margin > 0.0 {
                Ok(out)
            } else {
                Err(Error::Infeasible("phase step has no interior".into()))
            }
        }
        (_, r) => r,
    }
}

fn solve_p2_2_once(inst: &Instance, exp: &SdrIterate, mode: SlackMode, tol: f64) -> Result<P22Outcome> {
    let lifted = &inst.lifted;
    let n1 = inst.n + 1;
    let mut p = ConeProgram::new();
    let u = p.hermitian_psd(n1);
    for i in 0..n1 {
        p.add_eq(u.entry(i, i).re - 1.0);
    }
    let c_all = covariance(exp, None);
    let c_minus: Vec<CMat> = (0..inst.groups).map(|k| covariance(exp, Some(k))).collect();
    let proj = |h: &CMat, c: &CMat| h * c * h.adjoint();
    let bob_all: Vec<CMat> = lifted.h_kj.iter().map(|h| proj(h, &c_all)).collect();
    let bob_minus: Vec<CMat> = lifted
        .users
        .iter()
        .enumerate()
        .map(|(t, &(k, _))| proj(&lifted.h_kj[t], &c_minus[k]))
        .collect();
    let eve_all: Vec<CMat> = lifted.h_l.iter().map(|h| proj(h, &c_all)).collect();
    let eve_minus: Vec<Vec<CMat>> = c_minus
        .iter()
        .map(|c| lifted.h_l.iter().map(|h| proj(h, c)).collect())
        .collect();
    let mat = |term: LogTerm, tr: Triple| -> &CMat {
        match term {
            LogTerm::F1 => &bob_all[tr.t],
            LogTerm::F2 => &bob_minus[tr.t],
            LogTerm::F3 => &eve_all[tr.l],
            LogTerm::F4 => &eve_minus[tr.k][tr.l],
        }
    };
    let arg = |term: LogTerm, tr: Triple| u.inner(mat(term, tr)) + 1.0;
    let tilde = |term: LogTerm, tr: Triple| inner(&exp.u, mat(term, tr)) + 1.0;
    let tau = match mode {
        SlackMode::MarginMax => Some(p.scalar()),
        SlackMode::Constant => None,
    };
    add_secrecy_system(&mut p, inst, &arg, &tilde, tau.map(|t| -t.expr()));
    if let Some(t) = tau {
        p.add_le(t.expr(), LinExpr::constant(1.0));
        p.maximize(t.expr());
    }
    let sol = p.solve_with(&settings(tol))?;
    if !sol.is_optimal() {
        return Err(status_error(sol.status, "phase step"));
    }
    Ok(P22Outcome {
        u: sol.hermitian(u),
        margin: tau.map_or(0.0, |t| sol.value(&t.expr())),
        solve_time_s: sol.solve_time.as_secs_f64(),
    })
}

/// `(eigenvectors · diag(√λ⁺))` so that `x = F z` with `z ~ CN(0, I)` has
/// covariance `X`.
fn sqrt_factor(x: &CMat) -> (CMat, f64, CVec) {
    let e = SymmetricEigen::new(x.clone());
    let n = x.nrows();
    let mut f = e.eigenvectors.clone();
    let mut best = 0;
    for j in 0..n {
        let lam = e.eigenvalues[j].max(0.0);
        if e.eigenvalues[j] > e.eigenvalues[best] {
            best = j;
        }
        for i in 0..n {
            f[(i, j)] *= Complex64::new(lam.sqrt(), 0.0);
        }
    }
    let lmax = e.eigenvalues[best].max(0.0);
    (f, lmax, e.eigenvectors.column(best).into_owned())
}

fn unit_from(u: &CVec) -> Option<CVec> {
    crate::socp::recover_unit_modulus(u).ok()
}

/// Smallest `ρ` with a nonnegative exact margin for `(ρ w, ρ q)`, found by
/// doubling then bisection; `None` when no scaling works.
fn min_scaling(inst: &Instance, sol: &BeamformingSolution, rho0: f64, tol: f64) -> Option<f64> {
    let margin = |r: f64| inst.log_margin(&sol.scaled(r));
    let mut lo = 0.0;
    let mut hi = rho0;
    let mut found = false;
    for _ in 0..80 {
        if margin(hi) >= 0.0 {
            found = true;
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    if !found {
        return None;
    }
    if lo == 0.0 {
        // shrink first so the bracket is tight from below
        lo = hi;
        for _ in 0..80 {
            lo *= 0.5;
            if margin(lo) < 0.0 {
                break;
            }
            hi = lo;
        }
    }
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if margin(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// One-shot Gaussian randomization on a normalized instance.
pub fn randomize(inst: &Instance, fin: &SdrIterate, count: usize, tol: f64, rng: &mut ChaCha8Rng) -> Result<BeamformingSolution> {
    let wf: Vec<_> = fin.w.iter().map(sqrt_factor).collect();
    let qf = sqrt_factor(&fin.q);
    let uf = sqrt_factor(&fin.u);
    let relaxed = fin.power().max(1e-300);
    let mut candidates = Vec::with_capacity(count + 1);
    let scale = |v: &CVec, s: f64| v * Complex64::new(s.sqrt(), 0.0);
    candidates.push((
        wf.iter().map(|(_, l, v)| scale(v, *l)).collect::<Vec<_>>(),
        scale(&qf.2, qf.1),
        uf.2.clone(),
    ));
    let draw = |f: &CMat, rng: &mut ChaCha8Rng| -> CVec {
        let z = CVec::from_fn(f.ncols(), |_, _| cn(rng, 1.0));
        f * z
    };
    for _ in 0..count {
        let w = wf.iter().map(|(f, _, _)| draw(f, rng)).collect();
        let q = draw(&qf.0, rng);
        let u = draw(&uf.0, rng);
        candidates.push((w, q, u));
    }
    let n = inst.n;
    let mut best: Option<(f64, BeamformingSolution)> = None;
    let mut best_margin = f64::NEG_INFINITY;
    for (w, q, u) in candidates {
        let Some(u) = unit_from(&u) else { continue };
        let cand = BeamformingSolution::new(w, q, u.rows(0, n).into_owned());
        let p1 = crate::model::transmit_power(&cand);
        if !(p1 > 0.0) {
            continue;
        }
        best_margin = best_margin.max(inst.log_margin(&cand.scaled(1e6)));
        let rho0 = (relaxed / p1).sqrt() * 1e-2;
        if let Some(rho) = min_scaling(inst, &cand, rho0, tol) {
            let p = rho * rho * p1;
            if best.as_ref().is_none_or(|(bp, _)| p < *bp) {
                best = Some((p, cand.scaled(rho)));
            }
        }
    }
    best.map(|(_, s)| s).ok_or_else(|| {
        Error::Infeasible(format!(
            "no randomization candidate meets the secrecy targets (best asymptotic margin {best_margin:.3e} nats)"
        ))
    })
}

/// Normalized-unit result.
#[derive(Clone, Debug)]
pub struct SdrOutput {
    pub solution: BeamformingSolution,
    pub relaxed: SdrIterate,
    /// Final relaxed objective, normalized.
    pub relaxed_objective: f64,
    pub trace: SolveTrace,
}

pub(crate) const U_STREAM: u64 = 21;
pub(crate) const RANDOMIZATION_STREAM: u64 = 22;

fn feasible_start(inst: &Instance, u: CMat, opts: &SdrOptions) -> Option<(SdrIterate, f64)> {
    let eye = CMat::identity(inst.m, inst.m);
    let mut it = SdrIterate {
        w: vec![eye.clone(); inst.groups],
        q: eye,
        u,
    };
    if let Ok(out) = solve_p2_1(inst, &it, None, opts.solver_tol) {
        it.w = out.w;
        it.q = out.q;
        return Some((it, out.objective));
    }
    let pen = Penalty { mu: 1e-4, e_min: -0.5 };
    for _ in 0..60 {
        let out = solve_p2_1(inst, &it, Some(pen), opts.solver_tol).ok()?;
        it.w = out.w;
        it.q = out.q;
        if out.penalty_slack.unwrap_or(f64::INFINITY) < 0.0 && relaxed_margin(inst, &it) > 0.0 {
            let objective = it.power();
            return Some((it, objective));
        }
    }
    None
}

/// Alternating optimization on a normalized instance.
pub fn run_sdr_normalized(inst: &Instance, opts: &SdrOptions) -> Result<SdrOutput> {
    let n1 = inst.n + 1;
    let mut trace = SolveTrace::new(TraceKind::Sdr);
    let mut urng = rng(opts.seed, U_STREAM);
    if inst.gamma_s == 0.0 {
        let u = random_u(inst.n, &mut urng);
        let sol = BeamformingSolution::zero(inst.groups, inst.m, u.rows(0, inst.n).into_owned());
        trace.converged = true;
        trace.relaxed_objective_w = Some(0.0);
        let relaxed = SdrIterate::rank_one(&sol);
        return Ok(SdrOutput {
            solution: sol,
            relaxed,
            relaxed_objective: 0.0,
            trace,
        });
    }
    let mut start = None;
    for _ in 0..opts.init_attempts.max(1) {
        let u = random_u(inst.n, &mut urng);
        if let Some(s) = feasible_start(inst, &u * u.adjoint(), opts) {
            start = Some(s);
            break;
        }
    }
    let (mut it, mut objective) = start.ok_or_else(|| Error::Initialization {
        attempts: opts.init_attempts,
        reason: "relaxed secrecy constraints could not be met".into(),
    })?;
    debug_assert_eq!(it.u.nrows(), n1);
    for iter in 1..=opts.max_iters {
        let (t1, status) = match solve_p2_1(inst, &it, None, opts.solver_tol) {
            Ok(out) => {
                let t = out.solve_time_s;
                if out.objective <= objective {
                    it.w = out.w;
                    it.q = out.q;
                    let change = objective - out.objective;
                    objective = out.objective;
                    (t, if change < opts.epsilon * objective { "converged" } else { "ok" })
                } else {
                    (t, "converged")
                }
            }
            Err(Error::Infeasible(_)) | Err(Error::Solver(_)) => (0.0, "stall"),
            Err(e) => return Err(e),
        };
        let mut t2 = 0.0;
        let mut status = status;
        if status == "ok" && inst.n > 0 {
            let clock = Instant::now();
            match solve_p2_2(inst, &it, opts.u_step, opts.solver_tol) {
                Ok(out) => it.u = out.u,
                Err(Error::Infeasible(_)) | Err(Error::Solver(_)) => status = "stall",
                Err(e) => return Err(e),
            }
            t2 = clock.elapsed().as_secs_f64();
        }
        trace.push(TraceRow {
            iter,
            objective_w: inst.to_watts(objective),
            first_time_s: t1,
            second_time_s: t2,
            status: status.into(),
            recovery_violation: false,
        });
        trace.iterations = iter;
        if status != "ok" {
            trace.converged = status == "converged";
            break;
        }
    }
    let mut rrng = rng(opts.seed, RANDOMIZATION_STREAM);
    let solution = randomize(inst, &it, opts.randomization_count, opts.bisection_tol, &mut rrng)?;
    trace.relaxed_objective_w = Some(inst.to_watts(objective));
    Ok(SdrOutput {
        solution,
        relaxed: it,
        relaxed_objective: objective,
        trace,
    })
}

/// Full pipeline in physical units.
pub fn run_sdr(scenario: &Scenario, opts: &SdrOptions) -> Result<(BeamformingSolution, SolveTrace)> {
    let inst = Instance::new(scenario)?;
    let out = run_sdr_normalized(&inst, opts)?;
    Ok((inst.to_physical(&out.solution), out.trace))
}
