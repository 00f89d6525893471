//! Brute-force reference solutions for single-Bob, single-Eve instances.
//!
//! For fixed phases the received coefficients are `a` (Bob) and `b` (Eve).
//! Given AN `q`, the least beamformer power meeting
//! `(1 + SINR_b) ≥ c (1 + SINR_e)` is `(c − 1)/λ_max(aaᴴ/α − c bbᴴ/β)` with
//! `α = σ² + |aᴴq|²` and `β = σ² + |bᴴq|²`. That power falls as `β` grows
//! and rises with `α`, so the best AN direction lies on the boundary of the
//! joint numerical range of `(aaᴴ, bbᴴ)`, traced by the principal
//! eigenvector of `cos t·bbᴴ − sin t·aaᴴ`, `t ∈ [0, π/2]`. The remaining
//! search over `(t, ‖q‖²)` is done by scanning and golden-section refinement.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use irs_multicast::scenario::Scenario;

pub type C = Complex64;
pub type V = DVector<Complex64>;

fn dot(x: &V, y: &V) -> C {
    x.dotc(y)
}

/// Beamformer power for AN `q`, or `inf` when the target is out of reach.
pub fn beam_power(a: &V, b: &V, q: &V, sigma2: f64, c: f64) -> f64 {
    let alpha = sigma2 + dot(a, q).norm_sqr();
    let beta = sigma2 + dot(b, q).norm_sqr();
    let aa = a.norm_squared();
    let bb = b.norm_squared();
    let ab = dot(a, b).norm_sqr();
    let tr = aa / alpha - c * bb / beta;
    let det = -c / (alpha * beta) * (aa * bb - ab).max(0.0);
    let lam = 0.5 * tr + (0.25 * tr * tr - det).max(0.0).sqrt();
    if lam <= 0.0 {
        f64::INFINITY
    } else {
        (c - 1.0) / lam
    }
}

fn boundary_direction(a: &V, b: &V, t: f64) -> V {
    let m = a.len();
    let h: DMatrix<C> = b * b.adjoint() * C::from(t.cos()) - a * a.adjoint() * C::from(t.sin());
    let e = SymmetricEigen::new(h);
    let mut best = 0;
    for i in 1..m {
        if e.eigenvalues[i] > e.eigenvalues[best] {
            best = i;
        }
    }
    e.eigenvectors.column(best).into_owned()
}

fn golden(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Least total power `‖w‖² + ‖q‖²` for fixed coefficients.
/// `directions` and `scan` set the search resolution.
pub fn min_total_power(a: &V, b: &V, sigma2: f64, c: f64, directions: usize, scan: usize) -> f64 {
    let zero = V::zeros(a.len());
    let mut best = beam_power(a, b, &zero, sigma2, c);
    let reference = c * sigma2 / a.norm_squared().max(f64::MIN_POSITIVE);
    let lo = (reference * 1e-5).ln();
    let hi = (reference * 1e5).ln();
    let step = (hi - lo) / (scan - 1) as f64;
    for i in 0..directions {
        let t = std::f64::consts::FRAC_PI_2 * i as f64 / (directions - 1) as f64;
        let x = boundary_direction(a, b, t);
        let cost = |ls: f64| {
            let s = ls.exp();
            s + beam_power(a, b, &(&x * C::from(s.sqrt())), sigma2, c)
        };
        let mut arg = 0;
        let mut val = f64::INFINITY;
        for j in 0..scan {
            let v = cost(lo + step * j as f64);
            if v < val {
                val = v;
                arg = j;
            }
        }
        if val.is_finite() {
            let l = lo + step * arg.saturating_sub(1) as f64;
            let h = lo + step * (arg + 1).min(scan - 1) as f64;
            let (_, v) = golden(&cost, l, h, 60);
            val = val.min(v);
        }
        best = best.min(val);
    }
    best
}

/// `a = h_ab + β Gᴴ (e^{−jθ} ⊙ h_ib)` for user or Eve index `i`.
pub fn coefficient(s: &Scenario, theta: &[f64], eve: bool, i: usize) -> V {
    let ch = &s.channels;
    let (direct, irs) = if eve {
        (&ch.h_ae[i], &ch.h_ie[i])
    } else {
        (&ch.h_ab[i], &ch.h_ib[i])
    };
    let mut out = direct.clone();
    for m in 0..s.config.m {
        let mut acc = C::new(0.0, 0.0);
        for n in 0..s.config.n {
            acc += ch.g[(n, m)].conj() * C::from_polar(1.0, -theta[n]) * irs[n];
        }
        out[m] += acc * s.config.beta;
    }
    out
}

/// Best power over a uniform `steps^N` phase grid (N ≤ 2) for a scenario
/// with one single-user group and one Eve. Each grid point is solved at a
/// coarse inner resolution and the best `refine` points again finely.
pub fn phase_grid_optimum(s: &Scenario, steps: usize, refine: usize) -> (f64, Vec<f64>) {
    assert_eq!(s.config.total_users(), 1);
    assert_eq!(s.config.l, 1);
    let n = s.config.n;
    assert!(n <= 2);
    let c = 2f64.powf(s.config.gamma_s);
    let sigma2 = s.config.sigma2;
    let grid = |i: usize| std::f64::consts::TAU * i as f64 / steps as f64;
    let points = steps.pow(n as u32);
    let mut coarse: Vec<(f64, Vec<f64>)> = (0..points)
        .map(|p| {
            let theta: Vec<f64> = (0..n).map(|d| grid((p / steps.pow(d as u32)) % steps)).collect();
            let a = coefficient(s, &theta, false, 0);
            let b = coefficient(s, &theta, true, 0);
            (min_total_power(&a, &b, sigma2, c, 9, 24), theta)
        })
        .collect();
    coarse.sort_by(|x, y| x.0.total_cmp(&y.0));
    coarse
        .into_iter()
        .take(refine)
        .map(|(_, theta)| {
            let a = coefficient(s, &theta, false, 0);
            let b = coefficient(s, &theta, true, 0);
            (min_total_power(&a, &b, sigma2, c, 201, 80), theta)
        })
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .unwrap()
}
