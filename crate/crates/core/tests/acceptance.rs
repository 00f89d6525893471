//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails. Numeric arguments select criteria:
//! `cargo test --release --test acceptance -- 1 2 5`.

mod common;

use std::cell::OnceCell;
use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use irs_multicast::harness::{
    evaluate, run_sweep_with, solve, BaseScenario, ExperimentSpec, Method, MethodOptions, ResultRow, Sweep, SweepResult,
    SweepVar,
};
use irs_multicast::model::{lift_channels, transmit_power, CMat, CVec, LiftedChannels, DEFAULT_FEASIBILITY_TOL};
use irs_multicast::problem::Instance;
use irs_multicast::scenario::{ChannelSet, Geometry, Preset, Scenario, SystemConfig};
use irs_multicast::sdr::{eval_f, mm_bound_u, mm_bound_wq, run_sdr_normalized, LogTerm, SdrIterate, SdrOptions, Tangent, Triple};
use irs_multicast::socp::{run_sca, surrogate_f, PhaseMode, SocpOptions};
use irs_multicast::trace::SolveTrace;

const TRIALS: usize = 50;
const PAIRED: usize = 20;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn gauss(rng: &mut ChaCha8Rng) -> Complex64 {
    let (u1, u2): (f64, f64) = (rng.random::<f64>().max(1e-300), rng.random());
    let r = (-u1.ln()).sqrt();
    Complex64::from_polar(r, std::f64::consts::TAU * u2)
}

fn gauss_mat(rng: &mut ChaCha8Rng, r: usize, cols: usize) -> CMat {
    CMat::from_fn(r, cols, |_, _| gauss(rng))
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CMat {
    let a = gauss_mat(rng, n, n) * c(scale.sqrt(), 0.0);
    &a * a.adjoint()
}

fn unit_diagonal_psd(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let rank = 1 + (rng.random::<f64>() * n as f64) as usize;
    let a = gauss_mat(rng, n, rank.min(n));
    let x = &a * a.adjoint();
    let d: Vec<f64> = (0..n).map(|i| 1.0 / x[(i, i)].re.sqrt()).collect();
    CMat::from_fn(n, n, |i, j| x[(i, j)] * d[i] * d[j])
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let a = gauss_mat(rng, n, n);
    (&a + a.adjoint()) * c(0.5, 0.0)
}

/// Shared experiment data, computed on first use.
struct Runs {
    gamma: OnceCell<SweepResult>,
    elements: OnceCell<SweepResult>,
    paired: OnceCell<Vec<Paired>>,
}

struct Paired {
    seed: u64,
    sdr_relaxed: f64,
    sdr_randomized: f64,
    converged_relaxed: f64,
    converged_randomized: f64,
    sdr_trace: SolveTrace,
    socp_power: f64,
    socp_trace: SolveTrace,
}

fn spec(var: SweepVar, values: Vec<f64>, methods: Vec<Method>) -> ExperimentSpec {
    ExperimentSpec {
        scenario: BaseScenario::Preset { preset: "desk".into() },
        sweep: Sweep { var, values },
        trials: TRIALS,
        methods,
        seed: 0,
        workers: workers(),
    }
}

impl Runs {
    fn gamma(&self) -> &SweepResult {
        self.gamma.get_or_init(|| {
            let s = spec(SweepVar::GammaS, vec![0.5, 1.0, 1.5, 2.0], Method::ALL.to_vec());
            run_sweep_with(&s, &MethodOptions::default()).expect("gamma sweep")
        })
    }

    fn elements(&self) -> &SweepResult {
        self.elements.get_or_init(|| {
            let s = spec(SweepVar::N, vec![8.0, 16.0, 32.0], vec![Method::Socp, Method::NoIrs]);
            run_sweep_with(&s, &MethodOptions::default()).expect("element sweep")
        })
    }

    fn paired(&self) -> &[Paired] {
        self.paired.get_or_init(|| {
            (0..PAIRED as u64)
                .map(|seed| {
                    let s = Scenario::generate(Preset::Desk.config(), Geometry::default(), seed).unwrap();
                    let inst = Instance::new(&s).unwrap();
                    let sdr = run_sdr_normalized(&inst, &SdrOptions { seed, ..Default::default() }).unwrap();
                    let tight = SdrOptions {
                        seed,
                        epsilon: 1e-7,
                        max_iters: 500,
                        ..Default::default()
                    };
                    let converged = run_sdr_normalized(&inst, &tight).unwrap();
                    let socp = run_sca(&inst, PhaseMode::Optimize, &SocpOptions { seed, ..Default::default() }).unwrap();
                    Paired {
                        seed,
                        sdr_relaxed: sdr.relaxed_objective,
                        sdr_randomized: transmit_power(&sdr.solution),
                        converged_relaxed: converged.relaxed_objective,
                        converged_randomized: transmit_power(&converged.solution),
                        sdr_trace: sdr.trace,
                        socp_power: socp.beams.power(),
                        socp_trace: socp.trace,
                    }
                })
                .collect()
        })
    }
}

fn rows_at<'a>(r: &'a SweepResult, value: f64, method: Method) -> Vec<&'a ResultRow> {
    r.rows.iter().filter(|x| x.sweep_value == value && x.method == method).collect()
}

fn mean_at(r: &SweepResult, value: f64, method: Method) -> f64 {
    r.aggregate
        .iter()
        .find(|a| a.sweep_value == value && a.method == method)
        .map(|a| a.mean_power_w)
        .unwrap_or(f64::NAN)
}

// 1. Surrogate bounds: dominance, tangency and gradients.
fn surrogates(_: &Runs) -> Verdict {
    let samples = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let exact = |x: Complex64, r: f64| x.norm_sqr() / r;
    let mut f_margin = f64::INFINITY;
    let mut f_touch = 0f64;
    let mut f_grad = 0f64;
    for _ in 0..samples {
        let x = gauss(&mut rng) * 2.0;
        let xt = gauss(&mut rng) * 2.0;
        let r = (4.0 * rng.random::<f64>() - 2.0).exp();
        let rt = (4.0 * rng.random::<f64>() - 2.0).exp();
        f_margin = f_margin.min(exact(x, r) - surrogate_f(x, r, xt, rt));
        let v = exact(xt, rt);
        f_touch = f_touch.max((surrogate_f(xt, rt, xt, rt) - v).abs() / v.max(1.0));
        // gradients of F and |x|²/r in (Re x, Im x, r) at the expansion point
        let dirs = [(c(1.0, 0.0), 0.0), (c(0.0, 1.0), 0.0), (c(0.0, 0.0), 1.0)];
        let h = 1e-6 * (1.0 + xt.norm()).min(rt);
        let (mut err_f, mut err_e, mut norm) = (0.0, 0.0, 0.0);
        for (dx, dr) in dirs {
            let fd_f = (surrogate_f(xt + dx * h, rt + dr * h, xt, rt) - surrogate_f(xt - dx * h, rt - dr * h, xt, rt)) / (2.0 * h);
            let fd_e = (exact(xt + dx * h, rt + dr * h) - exact(xt - dx * h, rt - dr * h)) / (2.0 * h);
            let analytic = if dr > 0.0 {
                -xt.norm_sqr() / (rt * rt)
            } else {
                2.0 * (xt.conj() * dx).re / rt
            };
            err_f += (fd_f - analytic).powi(2);
            err_e += (fd_e - analytic).powi(2);
            norm += analytic * analytic;
        }
        let scale = norm.sqrt().max(1e-3);
        f_grad = f_grad.max(err_f.sqrt() / scale).max(err_e.sqrt() / scale);
    }

    let (m, n1, groups, eves) = (3, 5, 2, 2);
    let lifted = LiftedChannels {
        users: vec![(0, 0), (1, 0), (1, 1)],
        groups,
        h_kj: (0..3).map(|_| gauss_mat(&mut rng, n1, m)).collect(),
        h_l: (0..eves).map(|_| gauss_mat(&mut rng, n1, m)).collect(),
    };
    let iterate = |rng: &mut ChaCha8Rng| SdrIterate {
        w: (0..groups).map(|_| random_psd(rng, m, 0.5)).collect(),
        q: random_psd(rng, m, 0.1),
        u: unit_diagonal_psd(rng, n1),
    };
    let mut mm_margin = f64::INFINITY;
    let mut mm_touch = 0f64;
    let mut mm_grad = 0f64;
    let gap = |t: &Tangent, term: LogTerm, tr: Triple, x: &SdrIterate, blocks: &[&CMat]| {
        t.eval(blocks) - eval_f(term, x, &lifted, 1.0, tr)
    };
    for i in 0..samples {
        let exp = iterate(&mut rng);
        let tr = Triple {
            t: i % 3,
            k: lifted.users[i % 3].0,
            l: (i / 3) % eves,
        };
        let other = iterate(&mut rng);
        // (W, Q) bound with U fixed at the expansion point
        let moved = SdrIterate { u: exp.u.clone(), ..other.clone() };
        let (t2, t3) = mm_bound_wq(&exp, &lifted, 1.0, tr);
        let blocks: Vec<&CMat> = moved.w.iter().chain(std::iter::once(&moved.q)).collect();
        mm_margin = mm_margin
            .min(gap(&t2, LogTerm::F2, tr, &moved, &blocks))
            .min(gap(&t3, LogTerm::F3, tr, &moved, &blocks));
        // U bound with (W, Q) fixed
        let moved_u = SdrIterate { u: other.u.clone(), ..exp.clone() };
        let (u2, u3) = mm_bound_u(&exp, &lifted, 1.0, tr);
        mm_margin = mm_margin
            .min(gap(&u2, LogTerm::F2, tr, &moved_u, &[&moved_u.u]))
            .min(gap(&u3, LogTerm::F3, tr, &moved_u, &[&moved_u.u]));
        for (t, term) in [(&t2, LogTerm::F2), (&t3, LogTerm::F3), (&u2, LogTerm::F2), (&u3, LogTerm::F3)] {
            let v = eval_f(term, &exp, &lifted, 1.0, tr);
            mm_touch = mm_touch.max((t.value - v).abs()).max((t.eval(&t.at.iter().collect::<Vec<_>>()) - v).abs());
        }
        // directional derivatives along random Hermitian directions
        if i % 10 == 0 {
            let h = 1e-5;
            let dw: Vec<CMat> = (0..groups).map(|_| random_hermitian(&mut rng, m)).collect();
            let dq = random_hermitian(&mut rng, m);
            let du = random_hermitian(&mut rng, n1);
            let shift = |s: f64, in_u: bool| {
                let mut x = exp.clone();
                if in_u {
                    x.u += &du * c(s, 0.0);
                } else {
                    for (w, d) in x.w.iter_mut().zip(&dw) {
                        *w += d * c(s, 0.0);
                    }
                    x.q += &dq * c(s, 0.0);
                }
                x
            };
            for (t, term, in_u) in [(&t2, LogTerm::F2, false), (&t3, LogTerm::F3, false), (&u2, LogTerm::F2, true), (&u3, LogTerm::F3, true)] {
                let fd = (eval_f(term, &shift(h, in_u), &lifted, 1.0, tr) - eval_f(term, &shift(-h, in_u), &lifted, 1.0, tr)) / (2.0 * h);
                let dirs: Vec<&CMat> = if in_u { vec![&du] } else { dw.iter().chain(std::iter::once(&dq)).collect() };
                let analytic: f64 = t.grad.iter().zip(&dirs).map(|(g, d)| irs_multicast::sdr::inner(g, d)).sum();
                mm_grad = mm_grad.max((fd - analytic).abs() / analytic.abs().max(1e-3));
            }
        }
    }
    let pass = f_margin >= -1e-9 && mm_margin >= -1e-9 && f_touch < 1e-9 && mm_touch < 1e-9 && f_grad < 1e-5 && mm_grad < 1e-5;
    verdict(
        pass,
        format!(
            "F: min margin {f_margin:.2e}, tangency {f_touch:.1e}, grad err {f_grad:.1e}; MM: min margin {mm_margin:.2e}, tangency {mm_touch:.1e}, grad err {mm_grad:.1e} ({samples} samples each)"
        ),
    )
}

// 2. Lifted channels reproduce the cascaded form.
fn lifting(_: &Runs) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0f64;
    for _ in 0..1000 {
        let m = 1 + (rng.random::<f64>() * 8.0) as usize;
        let n = 1 + (rng.random::<f64>() * 24.0) as usize;
        let config = SystemConfig {
            m,
            n,
            k: 1,
            group_sizes: vec![1],
            l: 1,
            sigma2: 1.0,
            gamma_s: 1.0,
            beta: 1.0,
        };
        let vec = |rng: &mut ChaCha8Rng, len| CVec::from_fn(len, |_, _| gauss(rng));
        let ch = ChannelSet {
            g: gauss_mat(&mut rng, n, m),
            h_ab: vec![vec(&mut rng, m)],
            h_ib: vec![vec(&mut rng, n)],
            h_ae: vec![vec(&mut rng, m)],
            h_ie: vec![vec(&mut rng, n)],
        };
        let lifted = lift_channels(&ch, &config).unwrap();
        let v = CVec::from_fn(n, |_, _| Complex64::from_polar(1.0, std::f64::consts::TAU * rng.random::<f64>()));
        let u = irs_multicast::model::extend_phase(&v);
        let lhs = u.adjoint() * &lifted.h_kj[0];
        let cascade = DMatrix::from_fn(n, m, |r, col| ch.h_ib[0][r].conj() * ch.g[(r, col)]);
        let rhs = v.adjoint() * cascade + ch.h_ab[0].adjoint();
        worst = worst.max((lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    verdict(worst < 1e-10, format!("max residual {worst:.2e} over 1000 draws"))
}

fn non_increasing(values: &[f64]) -> Option<f64> {
    values
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE))
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))))
}

// 3. Monotone traces.
fn descent(runs: &Runs) -> Verdict {
    let p = runs.paired();
    let mut sdr_rise = f64::NEG_INFINITY;
    let mut socp_rise = f64::NEG_INFINITY;
    let mut recovery_steps = 0;
    let mut recovery_rise = f64::NEG_INFINITY;
    for t in p {
        if let Some(r) = non_increasing(&t.sdr_trace.objectives()) {
            sdr_rise = sdr_rise.max(r);
        }
        let obj = t.socp_trace.objectives();
        if let Some(r) = non_increasing(&obj) {
            socp_rise = socp_rise.max(r);
        }
        for (i, row) in t.socp_trace.rows.iter().enumerate().skip(1) {
            if row.recovery_violation {
                recovery_steps += 1;
                recovery_rise = recovery_rise.max((obj[i] - obj[i - 1]) / obj[i - 1]);
            }
        }
    }
    let pass = sdr_rise <= 1e-6 && socp_rise <= 1e-6;
    verdict(
        pass,
        format!(
            "largest relative step increase: SDR {sdr_rise:.1e}, SOCP {socp_rise:.1e} over {} seeds; {recovery_steps} SOCP recovery-flagged steps (largest rise {recovery_rise:.1e})",
            p.len()
        ),
    )
}

// 4. Every returned solution is feasible.
fn feasibility(runs: &Runs) -> Verdict {
    let r = runs.gamma();
    let at_one: Vec<&ResultRow> = r.rows.iter().filter(|x| x.sweep_value == 1.0).collect();
    let bad: Vec<String> = at_one
        .iter()
        .filter(|x| !x.feasible)
        .map(|x| format!("{}@{}", x.method, x.trial_seed))
        .collect();
    let all_bad = r.rows.iter().filter(|x| !x.feasible).count();
    verdict(
        bad.is_empty() && at_one.len() == 4 * TRIALS,
        format!(
            "{}/{} feasible at tol 1e-4 over {TRIALS} trials x 4 methods{}; whole sweep: {all_bad} infeasible of {}",
            at_one.len() - bad.len(),
            at_one.len(),
            if bad.is_empty() { String::new() } else { format!(" (failed: {})", bad.join(" ")) },
            r.rows.len()
        ),
    )
}

// 5. Small instance against a phase-grid brute force.
fn small_oracle(_: &Runs) -> Verdict {
    let config = SystemConfig {
        m: 2,
        n: 2,
        k: 1,
        group_sizes: vec![1],
        l: 1,
        ..Preset::Desk.config()
    };
    let mut worst_socp = 0f64;
    let mut worst_sdr = 0f64;
    let mut parts = Vec::new();
    for seed in 0..3u64 {
        let s = Scenario::generate(config.clone(), Geometry::default(), seed).unwrap();
        let (oracle, _) = common::phase_grid_optimum(&s, 360, 40);
        let opts = MethodOptions::default();
        let socp = solve(&s, Method::Socp, &opts).map(|(x, _)| transmit_power(&x)).unwrap_or(f64::INFINITY);
        let sdr = solve(&s, Method::Sdr, &opts).map(|(x, _)| transmit_power(&x)).unwrap_or(f64::INFINITY);
        worst_socp = worst_socp.max(socp / oracle);
        worst_sdr = worst_sdr.max(sdr / oracle);
        parts.push(format!("seed {seed}: socp {:.4} sdr {:.4}", socp / oracle, sdr / oracle));
    }
    verdict(
        worst_socp <= 1.05 && worst_sdr <= 1.10,
        format!("power / grid optimum ({})", parts.join(", ")),
    )
}

// 6. The relaxed SDR objective bounds both recovered powers. "Converged"
// means run to a 1e-7 relative change; the default-tolerance runs are
// reported alongside.
fn lower_bound(runs: &Runs) -> Verdict {
    let p = runs.paired();
    let first = p.iter().filter(|t| t.converged_relaxed <= t.converged_randomized + 1e-6).count();
    let default_first = p.iter().filter(|t| t.sdr_relaxed <= t.sdr_randomized + 1e-6).count();
    let default_gap = p
        .iter()
        .map(|t| (t.sdr_relaxed - t.sdr_randomized) / t.sdr_relaxed)
        .fold(f64::NEG_INFINITY, f64::max);
    let second: Vec<&Paired> = p.iter().filter(|t| t.converged_relaxed > t.socp_power).collect();
    let worst = p
        .iter()
        .map(|t| t.converged_relaxed / t.socp_power)
        .fold(f64::NEG_INFINITY, f64::max);
    verdict(
        first == p.len() && second.is_empty(),
        format!(
            "relaxed <= randomized (+1e-6, normalized units) on {first}/{n}; relaxed <= SOCP on {}/{n} (largest relaxed/SOCP {worst:.4}{}); at default epsilon relaxed <= randomized on {default_first}/{n}, largest relative excess {default_gap:.1e}",
            p.len() - second.len(),
            if second.is_empty() {
                String::new()
            } else {
                format!("; above at seeds {:?}", second.iter().map(|t| t.seed).collect::<Vec<_>>())
            },
            n = p.len()
        ),
    )
}

fn dbm(w: f64) -> f64 {
    irs_multicast::units::watts_to_dbm(w)
}

// 7. Power against the secrecy target.
fn gamma_trend(runs: &Runs) -> Verdict {
    let r = runs.gamma();
    let values = [0.5, 1.0, 1.5, 2.0];
    let mut ok = true;
    let mut lines = Vec::new();
    for m in Method::ALL {
        let means: Vec<f64> = values.iter().map(|&v| mean_at(r, v, m)).collect();
        ok &= means.windows(2).all(|w| w[1] > w[0]);
        lines.push(format!(
            "{m} [{}]",
            means.iter().map(|x| format!("{:.2}", dbm(*x))).collect::<Vec<_>>().join(", ")
        ));
    }
    for &v in &values {
        let irs = mean_at(r, v, Method::Sdr).max(mean_at(r, v, Method::Socp));
        ok &= irs < mean_at(r, v, Method::RandomPhase) && mean_at(r, v, Method::RandomPhase) < mean_at(r, v, Method::NoIrs);
    }
    let infeasible: usize = r.aggregate.iter().map(|a| a.trials_infeasible).sum();
    verdict(ok, format!("mean dBm at gamma_s 0.5..2: {}; {infeasible} infeasible rows", lines.join("; ")))
}

// 8. Power against the number of elements.
fn element_trend(runs: &Runs) -> Verdict {
    let r = runs.elements();
    let values = [8.0, 16.0, 32.0];
    let socp: Vec<f64> = values.iter().map(|&v| mean_at(r, v, Method::Socp)).collect();
    let direct: Vec<f64> = values.iter().map(|&v| dbm(mean_at(r, v, Method::NoIrs))).collect();
    let spread = direct.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - direct.iter().cloned().fold(f64::INFINITY, f64::min);
    let pass = socp.windows(2).all(|w| w[1] < w[0]) && spread < 0.5;
    verdict(
        pass,
        format!(
            "SOCP mean dBm at N=8,16,32: [{}]; no-IRS spread {spread:.3} dB",
            socp.iter().map(|x| format!("{:.2}", dbm(*x))).collect::<Vec<_>>().join(", ")
        ),
    )
}

// 9. Savings at N = 32.
fn half_power(runs: &Runs) -> Verdict {
    let r = runs.elements();
    let ratio = |n: f64| mean_at(r, n, Method::Socp) / mean_at(r, n, Method::NoIrs);
    let (r8, r16, r32) = (ratio(8.0), ratio(16.0), ratio(32.0));
    if r32 <= 0.6 {
        verdict(true, format!("SOCP / no-IRS mean power at N=32: {r32:.3} (<= 0.6)"))
    } else {
        let widening = r8 > r16 && r16 > r32;
        verdict(
            r32 < 1.0 && widening,
            format!("SOCP / no-IRS at N=32 is {r32:.3} > 0.6; ratios at N=8,16,32: {r8:.3}, {r16:.3}, {r32:.3} (must be < 1 and falling)"),
        )
    }
}

// 10. Iteration counts.
fn convergence_speed(runs: &Runs) -> Verdict {
    let r = runs.gamma();
    let sdr = rows_at(r, 1.0, Method::Sdr);
    let socp = rows_at(r, 1.0, Method::Socp);
    let mut fewer = 0;
    let mut both_fast = 0;
    for (a, b) in socp.iter().zip(&sdr) {
        assert_eq!(a.trial_seed, b.trial_seed);
        if a.iterations < b.iterations {
            fewer += 1;
        }
        if a.iterations <= 30 && b.iterations <= 30 {
            both_fast += 1;
        }
    }
    let n = sdr.len();
    let mean = |rows: &[&ResultRow]| rows.iter().map(|x| x.iterations as f64).sum::<f64>() / rows.len() as f64;
    verdict(
        n == TRIALS && fewer as f64 >= 0.7 * n as f64 && both_fast as f64 >= 0.9 * n as f64,
        format!(
            "SOCP fewer iterations on {fewer}/{n}; both <= 30 on {both_fast}/{n}; mean iterations SOCP {:.1}, SDR {:.1}",
            mean(&socp),
            mean(&sdr)
        ),
    )
}

// 11. Full-size smoke run.
fn large_profile(_: &Runs) -> Verdict {
    let s = Scenario::generate(Preset::Large.config(), Preset::Large.geometry(), 0).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for m in Method::ALL {
        let clock = Instant::now();
        let out = solve(&s, m, &MethodOptions::default());
        let t = clock.elapsed();
        let limit = match m {
            Method::Sdr => Duration::from_secs(30 * 60),
            _ => Duration::from_secs(5 * 60),
        };
        match out {
            Ok((sol, trace)) => {
                let feasible = evaluate(&s, &sol, DEFAULT_FEASIBILITY_TOL).map(|r| r.feasible).unwrap_or(false);
                ok &= t <= limit;
                parts.push(format!(
                    "{m} {:.2} dBm in {:.1}s ({} it, feasible {feasible})",
                    dbm(transmit_power(&sol)),
                    t.as_secs_f64(),
                    trace.iterations
                ));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{m} error: {e}"));
            }
        }
    }
    verdict(ok, parts.join("; "))
}

// Paired orderings of the baselines against SOCP.
fn baseline_orderings(runs: &Runs) -> Verdict {
    let r = runs.gamma();
    let socp = rows_at(r, 1.0, Method::Socp);
    let count = |m: Method| {
        rows_at(r, 1.0, m)
            .iter()
            .zip(&socp)
            .filter(|(b, s)| b.feasible && s.feasible && b.power_w >= s.power_w)
            .count()
    };
    let (direct, random) = (count(Method::NoIrs), count(Method::RandomPhase));
    let need = (0.95 * TRIALS as f64).ceil() as usize;
    verdict(
        direct >= need && random >= need,
        format!("no-IRS >= SOCP on {direct}/{TRIALS}, random-phase >= SOCP on {random}/{TRIALS}"),
    )
}

type Criterion = (&'static str, &'static str, fn(&Runs) -> Verdict);

fn main() {
    let wanted: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| a.parse::<u32>().is_ok() || a == "audit")
        .collect();
    let criteria: [Criterion; 12] = [
        ("1", "surrogate bounds", surrogates),
        ("2", "lifting identity", lifting),
        ("3", "monotone traces", descent),
        ("4", "feasibility of all methods", feasibility),
        ("5", "small-instance oracle", small_oracle),
        ("6", "SDR lower bound", lower_bound),
        ("7", "power vs secrecy target", gamma_trend),
        ("8", "power vs element count", element_trend),
        ("9", "IRS power savings", half_power),
        ("10", "convergence speed", convergence_speed),
        ("11", "large-profile smoke run", large_profile),
        ("audit", "paired baseline orderings", baseline_orderings),
    ];
    let runs = Runs {
        gamma: OnceCell::new(),
        elements: OnceCell::new(),
        paired: OnceCell::new(),
    };
    let mut failed = Vec::new();
    let mut out = std::io::stdout();
    for (id, name, run) in criteria {
        if !wanted.is_empty() && !wanted.iter().any(|w| w == id) {
            continue;
        }
        let clock = Instant::now();
        let v = run(&runs);
        let tag = if v.pass { "PASS" } else { "FAIL" };
        let kind = if id == "audit" { "" } else { "criterion " };
        writeln!(out, "{kind}{id:>2} [{tag}] {name} ({:.1}s): {}", clock.elapsed().as_secs_f64(), v.detail).unwrap();
        out.flush().unwrap();
        if !v.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        writeln!(out, "failed criteria: {failed:?}").unwrap();
        std::process::exit(1);
    }
}
