//! Primal barrier interior-point method.
//!
//! The program is compiled to `min cᵀz s.t. A z = b` with `z = (x_f, s)`,
//! `x_f` free and `s` in a product of cones. Each outer iteration centers
//! `t·cᵀz + φ(s)` with an infeasible-start Newton method, then increases `t`.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::cones::{Block, BlockState, ConeKind};
use crate::error::ConicError;
use crate::expr::LinExpr;
use crate::hermitian;
use crate::program::{ConeProgram, Constraint, Sense};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct SolverSettings {
    /// Relative duality-gap tolerance.
    pub tol: f64,
    /// Barrier parameter growth factor.
    pub mu: f64,
    pub t0: f64,
    pub max_newton: usize,
    pub max_infeasible_steps: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-8,
            mu: 12.0,
            t0: 1.0,
            max_newton: 3000,
            max_infeasible_steps: 300,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub status: SolveStatus,
    /// Objective in the sense requested by the program.
    pub objective_value: f64,
    pub values: Vec<f64>,
    pub solve_time: Duration,
    pub iterations: usize,
    /// Final barrier gap bound `ν/t`.
    pub gap: f64,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, e: &LinExpr) -> f64 {
        e.eval(&self.values)
    }

    pub fn scalar(&self, s: crate::Scalar) -> f64 {
        self.values[s.index()]
    }

    pub fn vector(&self, v: crate::RealVector) -> Vec<f64> {
        (0..v.len()).map(|i| v.entry(i).eval(&self.values)).collect()
    }

    pub fn complex_vector(&self, v: crate::ComplexVector) -> Vec<Complex64> {
        (0..v.len()).map(|i| v.entry(i).eval(&self.values)).collect()
    }

    pub fn hermitian(&self, h: crate::HermitianVar) -> DMatrix<Complex64> {
        let n = h.dim();
        DMatrix::from_fn(n, n, |i, j| h.entry(i, j).eval(&self.values))
    }
}

/// Sparse row segment of `A` restricted to one cone block.
struct BlockRows {
    block: Block,
    rows: Vec<(usize, Vec<(usize, f64)>)>,
}

#[derive(Clone)]
pub(crate) struct StandardForm {
    pub n_free: usize,
    pub n_cone: usize,
    /// Dense `A` over `(x_f, s)`.
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub obj_constant: f64,
    pub blocks: Vec<Block>,
    /// Position of each program variable in `z`; `None` for unused free variables.
    var_pos: Vec<Option<usize>>,
}

impl StandardForm {
    pub fn rows(&self) -> usize {
        self.b.len()
    }

    pub fn compile(p: &ConeProgram) -> StandardForm {
        // Mark which program variables are used anywhere.
        let mut used = vec![false; p.num_vars];
        let mut mark = |e: &LinExpr| {
            for &(i, c) in &e.terms {
                if c != 0.0 {
                    used[i] = true;
                }
            }
        };
        mark(&p.objective);
        for c in &p.constraints {
            match c {
                Constraint::Eq(e) | Constraint::Nonneg(e) => mark(e),
                Constraint::Soc { t, x } => {
                    mark(t);
                    x.iter().for_each(&mut mark);
                }
                Constraint::Exp { x, y, z } => {
                    mark(x);
                    mark(y);
                    mark(z);
                }
                Constraint::Psd(h) => {
                    for e in h.upper() {
                        mark(&e.re);
                        mark(&e.im);
                    }
                }
            }
        }
        let mut in_psd = vec![false; p.num_vars];
        for &(off, n) in &p.psd_vars {
            in_psd[off..off + hermitian::param_count(n)].fill(true);
        }

        let mut var_pos = vec![None; p.num_vars];
        let mut n_free = 0;
        for i in 0..p.num_vars {
            if used[i] && !in_psd[i] {
                var_pos[i] = Some(n_free);
                n_free += 1;
            }
        }
        let mut blocks = Vec::new();
        let mut n_cone = 0;
        for &(off, n) in &p.psd_vars {
            let blk = Block::new(ConeKind::Psd(n), n_cone);
            for k in 0..blk.dim {
                var_pos[off + k] = Some(n_free + n_cone + k);
            }
            n_cone += blk.dim;
            blocks.push(blk);
        }

        // Rows are (sparse program-variable terms, slack column, rhs).
        let mut rows: Vec<(Vec<(usize, f64)>, Option<usize>, f64)> = Vec::new();
        let mut slack = |kind: Option<ConeKind>, exprs: Vec<&LinExpr>, blocks: &mut Vec<Block>| {
            let blk = match kind {
                Some(k) => Block::new(k, n_cone),
                None => Block::soc(n_cone, exprs.len()),
            };
            for (k, e) in exprs.iter().enumerate() {
                // s_k − a·x = const
                let terms = e
                    .compacted()
                    .into_iter()
                    .map(|(i, c)| (i, -c))
                    .collect::<Vec<_>>();
                rows.push((terms, Some(n_cone + k), e.constant));
            }
            n_cone += blk.dim;
            blocks.push(blk);
        };
        let mut eq_rows = Vec::new();
        for c in &p.constraints {
            match c {
                Constraint::Eq(e) => eq_rows.push((e.compacted(), None, -e.constant)),
                Constraint::Nonneg(e) => slack(Some(ConeKind::Nonneg), vec![e], &mut blocks),
                Constraint::Soc { t, x } => {
                    let mut v = vec![t];
                    v.extend(x.iter());
                    slack(None, v, &mut blocks)
                }
                Constraint::Exp { x, y, z } => {
                    slack(Some(ConeKind::Exp), vec![x, y, z], &mut blocks)
                }
                Constraint::Psd(h) => {
                    // parameters of the expression in (diag, re/im pairs) order
                    let n = h.dim();
                    let mut diag = Vec::new();
                    let mut off = Vec::new();
                    let mut k = 0;
                    for i in 0..n {
                        for j in i..n {
                            let e = &h.upper()[k];
                            if i == j {
                                diag.push(&e.re);
                            } else {
                                off.push(&e.re);
                                off.push(&e.im);
                            }
                            k += 1;
                        }
                    }
                    diag.extend(off);
                    slack(Some(ConeKind::Psd(n)), diag, &mut blocks)
                }
            }
        }
        rows.extend(eq_rows);

        let m = rows.len();
        let ncol = n_free + n_cone;
        let mut a = DMatrix::<f64>::zeros(m, ncol);
        let mut b = vec![0.0; m];
        for (r, (terms, sl, rhs)) in rows.into_iter().enumerate() {
            for (i, c) in terms {
                if let Some(pos) = var_pos[i] {
                    a[(r, pos)] += c;
                }
            }
            if let Some(s) = sl {
                a[(r, n_free + s)] += 1.0;
            }
            b[r] = rhs;
        }
        let sign = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let mut c = vec![0.0; ncol];
        for (i, v) in p.objective.compacted() {
            if let Some(pos) = var_pos[i] {
                c[pos] += sign * v;
            }
        }
        StandardForm {
            n_free,
            n_cone,
            a,
            b,
            c,
            obj_constant: sign * p.objective.constant,
            blocks,
            var_pos,
        }
    }

    fn block_rows(&self) -> Vec<BlockRows> {
        self.blocks
            .iter()
            .map(|blk| {
                let start = self.n_free + blk.offset;
                let mut rows = Vec::new();
                for r in 0..self.rows() {
                    let seg: Vec<(usize, f64)> = (0..blk.dim)
                        .filter_map(|k| {
                            let v = self.a[(r, start + k)];
                            (v != 0.0).then_some((k, v))
                        })
                        .collect();
                    if !seg.is_empty() {
                        rows.push((r, seg));
                    }
                }
                BlockRows {
                    block: blk.clone(),
                    rows,
                }
            })
            .collect()
    }
}

struct Point {
    z: Vec<f64>,
    states: Vec<BlockState>,
}

struct Ipm<'a> {
    sf: &'a StandardForm,
    brows: Vec<BlockRows>,
    a_free: DMatrix<f64>,
    a_t: DMatrix<f64>,
    degree: f64,
}

enum StepResult {
    Ok(f64),
    Fail,
}

impl<'a> Ipm<'a> {
    fn new(sf: &'a StandardForm) -> Self {
        let a_free = sf.a.columns(0, sf.n_free).into_owned();
        Ipm {
            brows: sf.block_rows(),
            a_free,
            a_t: sf.a.transpose(),
            degree: sf.blocks.iter().map(|b| b.degree()).sum(),
            sf,
        }
    }

    fn states(&self, z: &[f64]) -> Option<Vec<BlockState>> {
        let base = self.sf.n_free;
        self.sf
            .blocks
            .iter()
            .map(|b| b.state(&z[base + b.offset..base + b.offset + b.dim]))
            .collect()
    }

    fn barrier_grad(&self, states: &[BlockState]) -> Vec<f64> {
        let mut g = vec![0.0; self.sf.n_cone];
        for (b, st) in self.sf.blocks.iter().zip(states) {
            st.gradient(&mut g[b.offset..b.offset + b.dim]);
        }
        g
    }

    fn barrier_value(states: &[BlockState]) -> f64 {
        states.iter().map(|s| s.value()).sum()
    }

    fn hinv(&self, states: &[BlockState], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.sf.n_cone];
        for (b, st) in self.sf.blocks.iter().zip(states) {
            let r = b.offset..b.offset + b.dim;
            st.hess_inv_apply(&v[r.clone()], &mut out[r]);
        }
        out
    }

    fn primal_residual(&self, z: &[f64]) -> Vec<f64> {
        // b − A z
        let az = &self.sf.a * DVector::from_column_slice(z);
        self.sf.b.iter().zip(az.iter()).map(|(b, a)| b - a).collect()
    }

    fn dual_residual(&self, t: f64, g: &[f64], nu: &[f64]) -> Vec<f64> {
        let atn = &self.a_t * DVector::from_column_slice(nu);
        let nf = self.sf.n_free;
        (0..nf + self.sf.n_cone)
            .map(|j| {
                let gj = if j >= nf { g[j - nf] } else { 0.0 };
                t * self.sf.c[j] + gj + atn[j]
            })
            .collect()
    }

    /// Schur complement `A_s H⁻¹ A_sᵀ`.
    fn schur(&self, states: &[BlockState]) -> DMatrix<f64> {
        let m = self.sf.rows();
        let mut s = DMatrix::<f64>::zeros(m, m);
        for (br, st) in self.brows.iter().zip(states) {
            let dim = br.block.dim;
            let mut dense = vec![0.0; dim];
            let mut h = vec![0.0; dim];
            for (ii, (ri, seg)) in br.rows.iter().enumerate() {
                dense.fill(0.0);
                for &(k, v) in seg {
                    dense[k] = v;
                }
                st.hess_inv_apply(&dense, &mut h);
                for (rj, segj) in &br.rows[ii..] {
                    let v: f64 = segj.iter().map(|&(k, a)| a * h[k]).sum();
                    s[(*ri, *rj)] += v;
                    if ri != rj {
                        s[(*rj, *ri)] += v;
                    }
                }
            }
        }
        s
    }

    /// Newton direction for `t·cᵀz + φ` from `pt`. Returns `(Δz, ν⁺)`.
    fn direction(&self, t: f64, pt: &Point, g: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let sf = self.sf;
        let m = sf.rows();
        let nf = sf.n_free;
        let rp = self.primal_residual(&pt.z);
        let w0_in: Vec<f64> = (0..sf.n_cone).map(|k| t * sf.c[nf + k] + g[k]).collect();
        let w0 = self.hinv(&pt.states, &w0_in);
        let aw0 = sf.a.columns(nf, sf.n_cone) * DVector::from_column_slice(&w0);

        let schur = self.schur(&pt.states);
        let dim = m + nf;
        let mut k = DMatrix::<f64>::zeros(dim, dim);
        k.view_mut((0, 0), (m, m)).copy_from(&schur);
        k.view_mut((0, m), (m, nf)).copy_from(&(-&self.a_free));
        k.view_mut((m, 0), (nf, m)).copy_from(&(-self.a_free.transpose()));
        let mut rhs = DVector::<f64>::zeros(dim);
        for i in 0..m {
            rhs[i] = -rp[i] - aw0[i];
        }
        for j in 0..nf {
            rhs[m + j] = t * sf.c[j];
        }

        let lu = {
            let mut kr = k.clone();
            for i in 0..m {
                kr[(i, i)] *= 1.0 + 1e-14;
            }
            let lu = kr.clone().lu();
            if lu.is_invertible() {
                lu
            } else {
                let scale = (0..m).map(|i| schur[(i, i)].abs()).fold(1.0, f64::max);
                let delta = 1e-10 * scale;
                for i in 0..m {
                    kr[(i, i)] += delta;
                }
                for j in 0..nf {
                    kr[(m + j, m + j)] -= delta;
                }
                kr.lu()
            }
        };
        let solve = |rhs: &DVector<f64>| -> Option<DVector<f64>> {
            let mut sol = lu.solve(rhs)?;
            for _ in 0..3 {
                let res = rhs - &k * &sol;
                sol += lu.solve(&res)?;
            }
            sol.iter().all(|v| v.is_finite()).then_some(sol)
        };
        let a_s = sf.a.columns(nf, sf.n_cone);
        // Δs = −w0 − H⁻¹ A_sᵀ ν⁺
        let expand = |sol: &DVector<f64>, w: Option<&[f64]>| -> Vec<f64> {
            let atn = a_s.transpose() * sol.rows(0, m);
            let hatn = self.hinv(&pt.states, atn.as_slice());
            let mut dz: Vec<f64> = sol.rows(m, nf).iter().copied().collect();
            dz.extend((0..sf.n_cone).map(|k| -w.map_or(0.0, |w| w[k]) - hatn[k]));
            dz
        };
        let sol = solve(&rhs)?;
        let nu: Vec<f64> = sol.rows(0, m).iter().copied().collect();
        let mut dz = expand(&sol, Some(&w0));
        // Cancellation in Δs can leave A Δz ≠ r_p; project the remainder out
        // with the same factorization.
        for _ in 0..3 {
            let adz = &sf.a * DVector::from_column_slice(&dz);
            let res: Vec<f64> = rp.iter().zip(adz.iter()).map(|(r, a)| r - a).collect();
            let rmax = res.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if rmax <= 1e-15 * (1.0 + rp.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))) {
                break;
            }
            let mut r2 = DVector::<f64>::zeros(dim);
            for i in 0..m {
                r2[i] = -res[i];
            }
            let corr = expand(&solve(&r2)?, None);
            for (d, c) in dz.iter_mut().zip(&corr) {
                *d += c;
            }
        }
        Some((dz, nu))
    }

    /// Largest step keeping nonnegative and second-order blocks interior.
    fn max_step(&self, z: &[f64], dz: &[f64]) -> f64 {
        let nf = self.sf.n_free;
        let mut amax = f64::INFINITY;
        for b in &self.sf.blocks {
            let s = &z[nf + b.offset..nf + b.offset + b.dim];
            let d = &dz[nf + b.offset..nf + b.offset + b.dim];
            match b.kind {
                ConeKind::Nonneg => {
                    if d[0] < 0.0 {
                        amax = amax.min(-s[0] / d[0]);
                    }
                }
                ConeKind::Soc => {
                    // q(α) = q + 2αβ + α²γ > 0 with t + α d_t > 0
                    let q = s[0] * s[0] - s[1..].iter().map(|v| v * v).sum::<f64>();
                    let beta = s[0] * d[0] - s[1..].iter().zip(&d[1..]).map(|(a, b)| a * b).sum::<f64>();
                    let gamma = d[0] * d[0] - d[1..].iter().map(|v| v * v).sum::<f64>();
                    let root = smallest_positive_root(gamma, 2.0 * beta, q);
                    amax = amax.min(root);
                    if d[0] < 0.0 {
                        amax = amax.min(-s[0] / d[0]);
                    }
                }
                _ => {}
            }
        }
        amax
    }

    fn step_point(&self, z: &[f64], dz: &[f64], alpha: f64) -> Option<Point> {
        let zn: Vec<f64> = z.iter().zip(dz).map(|(a, d)| a + alpha * d).collect();
        let states = self.states(&zn)?;
        Some(Point { z: zn, states })
    }

    fn objective(&self, z: &[f64]) -> f64 {
        self.sf.c.iter().zip(z).map(|(c, v)| c * v).sum::<f64>()
    }

    fn run(&self, settings: &SolverSettings) -> (SolveStatus, Vec<f64>, usize, f64) {
        let sf = self.sf;
        let nf = sf.n_free;
        let mut z = vec![0.0; nf + sf.n_cone];
        for b in &sf.blocks {
            b.initial_point(&mut z[nf + b.offset..nf + b.offset + b.dim]);
        }
        self.run_from(settings, z, None)
    }

    /// Barrier method from an interior `z`. `stop` ends the run early, with
    /// status `Optimal`, as soon as it holds at a feasible iterate.
    fn run_from(
        &self,
        settings: &SolverSettings,
        z: Vec<f64>,
        stop: Option<&dyn Fn(&[f64]) -> bool>,
    ) -> (SolveStatus, Vec<f64>, usize, f64) {
        let sf = self.sf;
        let nf = sf.n_free;
        let states = self.states(&z).expect("initial point is interior");
        let mut pt = Point { z, states };
        let mut nu = vec![0.0; sf.rows()];
        let b_norm = sf.b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let feas_tol = 1e-9 * (1.0 + b_norm);

        let has_cost = sf.c.iter().any(|&c| c != 0.0);
        let mut t = settings.t0;
        let obj0 = self.objective(&pt.z).abs();
        if has_cost && t * obj0 > self.degree {
            t = self.degree / obj0;
        }
        let mut iters = 0usize;
        let mut infeasible_steps = 0usize;
        let mut feasible = self.primal_residual(&pt.z).iter().all(|v| v.abs() <= feas_tol);
        let mut gap = if has_cost { self.degree / t } else { 0.0 };

        loop {
            // centering
            let mut centered = false;
            for _ in 0..200 + settings.max_infeasible_steps {
                if iters >= settings.max_newton {
                    return (SolveStatus::NumericalFailure, pt.z, iters, gap);
                }
                iters += 1;
                let g = self.barrier_grad(&pt.states);
                let Some((dz, nu_new)) = self.direction(t, &pt, &g) else {
                    let status = if feasible {
                        SolveStatus::NumericalFailure
                    } else {
                        SolveStatus::Infeasible
                    };
                    return (status, pt.z, iters, gap);
                };
                let amax = self.max_step(&pt.z, &dz);
                let mut alpha = if amax.is_finite() { (0.99 * amax).min(1.0) } else { 1.0 };

                if !feasible {
                    infeasible_steps += 1;
                    let dnu: Vec<f64> = nu_new.iter().zip(&nu).map(|(a, b)| a - b).collect();
                    let r0 = self.residual_norm(t, &pt, &g, &nu);
                    // a full step that stays interior removes the primal residual
                    let search = if alpha >= 1.0 && self.step_point(&pt.z, &dz, 1.0).is_some() {
                        StepResult::Ok(1.0)
                    } else {
                        self.residual_search(t, &pt, &dz, &nu, &dnu, r0, alpha)
                    };
                    match search {
                        StepResult::Ok(a) => alpha = a,
                        StepResult::Fail => return (SolveStatus::Infeasible, pt.z, iters, gap),
                    }
                    pt = self.step_point(&pt.z, &dz, alpha).expect("checked in line search");
                    for (v, d) in nu.iter_mut().zip(&dnu) {
                        *v += alpha * d;
                    }
                    let rp = self.primal_residual(&pt.z);
                    if rp.iter().all(|v| v.abs() <= feas_tol) {
                        feasible = true;
                    } else if infeasible_steps > settings.max_infeasible_steps {
                        return (SolveStatus::Infeasible, pt.z, iters, gap);
                    }
                    continue;
                }

                nu = nu_new;
                let nf_cost: f64 = (0..sf.n_cone).map(|k| (t * sf.c[nf + k] + g[k]) * dz[nf + k]).sum::<f64>()
                    + (0..nf).map(|j| t * sf.c[j] * dz[j]).sum::<f64>();
                let lambda2 = -nf_cost;
                if !(lambda2.is_finite()) {
                    return (SolveStatus::NumericalFailure, pt.z, iters, gap);
                }
                if lambda2 / 2.0 <= 1e-10 {
                    centered = true;
                    break;
                }
                let f0 = t * self.objective(&pt.z) + Self::barrier_value(&pt.states);
                let mut accepted = None;
                for _ in 0..80 {
                    if let Some(np) = self.step_point(&pt.z, &dz, alpha) {
                        let f1 = t * self.objective(&np.z) + Self::barrier_value(&np.states);
                        if f1 <= f0 - 0.01 * alpha * lambda2 {
                            accepted = Some(np);
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
                match accepted {
                    Some(np) => {
                        pt = np;
                        if stop.is_some_and(|f| f(&pt.z)) {
                            return (SolveStatus::Optimal, pt.z, iters, gap);
                        }
                    }
                    None => {
                        // no decrease possible at working precision
                        centered = lambda2 < 1e-6;
                        break;
                    }
                }
                let znorm = pt.z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if znorm > 1e13 {
                    return (SolveStatus::Unbounded, pt.z, iters, gap);
                }
            }
            if !feasible {
                return (SolveStatus::Infeasible, pt.z, iters, gap);
            }
            if !has_cost {
                let status = if centered {
                    SolveStatus::Optimal
                } else {
                    SolveStatus::NumericalFailure
                };
                return (status, pt.z, iters, 0.0);
            }
            gap = self.degree / t;
            let obj = self.objective(&pt.z) + sf.obj_constant;
            if gap <= settings.tol * obj.abs().max(1.0) {
                return (SolveStatus::Optimal, pt.z, iters, gap);
            }
            if !centered && gap <= 1e3 * settings.tol * obj.abs().max(1.0) {
                // stalled close to the optimum
                return (SolveStatus::Optimal, pt.z, iters, gap);
            }
            if !centered && t > 1e14 {
                return (SolveStatus::NumericalFailure, pt.z, iters, gap);
            }
            t *= settings.mu;
        }
    }

    fn residual_norm(&self, t: f64, pt: &Point, g: &[f64], nu: &[f64]) -> f64 {
        let rd = self.dual_residual(t, g, nu);
        let rp = self.primal_residual(&pt.z);
        (rd.iter().map(|v| v * v).sum::<f64>() + rp.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    #[allow(clippy::too_many_arguments)]
    fn residual_search(
        &self,
        t: f64,
        pt: &Point,
        dz: &[f64],
        nu: &[f64],
        dnu: &[f64],
        r0: f64,
        mut alpha: f64,
    ) -> StepResult {
        for _ in 0..60 {
            if let Some(np) = self.step_point(&pt.z, dz, alpha) {
                let g = self.barrier_grad(&np.states);
                let nn: Vec<f64> = nu.iter().zip(dnu).map(|(a, d)| a + alpha * d).collect();
                let r = self.residual_norm(t, &np, &g, &nn);
                if r <= (1.0 - 0.01 * alpha) * r0 {
                    return StepResult::Ok(alpha);
                }
            }
            alpha *= 0.5;
        }
        StepResult::Fail
    }
}

/// Strictly feasible point of `A z = b, s ∈ int K`, found by minimizing a
/// uniform shift `τ` with `s + τ·e ∈ K` from the least-norm solution of the
/// equalities. `None` when no shift below zero is reached.
fn phase_one(sf: &StandardForm, settings: &SolverSettings) -> Option<Vec<f64>> {
    let nf = sf.n_free;
    let nc = sf.n_cone;
    let m = sf.rows();
    let mut e = vec![0.0; nc];
    for b in &sf.blocks {
        b.initial_point(&mut e[b.offset..b.offset + b.dim]);
    }
    let b = DVector::from_column_slice(&sf.b);
    let z0 = if m == 0 {
        DVector::zeros(nf + nc)
    } else {
        let svd = sf.a.clone().svd(true, true);
        let smax = svd.singular_values.iter().fold(0.0f64, |a, v| a.max(*v));
        svd.solve(&b, 1e-13 * smax.max(1.0)).ok()?
    };
    let scale = 1.0 + sf.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if (&sf.a * &z0 - &b).amax() > 1e-8 * scale {
        return None;
    }
    let blocks_ok = |s: &[f64]| {
        sf.blocks
            .iter()
            .all(|blk| blk.state(&s[blk.offset..blk.offset + blk.dim]).is_some())
    };
    let s0: Vec<f64> = z0.iter().skip(nf).copied().collect();
    if blocks_ok(&s0) {
        return Some(z0.iter().copied().collect());
    }
    let shifted = |tau: f64| -> Vec<f64> { s0.iter().zip(&e).map(|(s, e)| s + tau * e).collect() };
    let mut tau = 1.0;
    while !blocks_ok(&shifted(tau)) {
        tau *= 2.0;
        if !tau.is_finite() {
            return None;
        }
    }
    tau *= 2.0;

    // columns (x_f, y, τ') with y = s + τ·e and τ = τ' − 1 kept nonnegative by a cone
    let a_s = sf.a.columns(nf, nc);
    let ae = a_s * DVector::from_column_slice(&e);
    let mut a = DMatrix::<f64>::zeros(m, nf + nc + 1);
    a.columns_mut(0, nf + nc).copy_from(&sf.a);
    a.column_mut(nf + nc).copy_from(&(-&ae));
    // −∇barrier(e) is interior to the dual cone, so this small cost bounds y
    let ipm = Ipm::new(sf);
    let mut ze = vec![0.0; nf];
    ze.extend(&e);
    let ge = ipm.barrier_grad(&ipm.states(&ze)?);
    let mut c = vec![0.0; nf + nc + 1];
    for (ck, g) in c[nf..nf + nc].iter_mut().zip(&ge) {
        *ck = -1e-6 * g;
    }
    c[nf + nc] = 1.0;
    let mut blocks = sf.blocks.clone();
    blocks.push(Block::new(ConeKind::Nonneg, nc));
    let aug = StandardForm {
        n_free: nf,
        n_cone: nc + 1,
        a,
        b: sf.b.iter().zip(ae.iter()).map(|(b, v)| b - v).collect(),
        c,
        obj_constant: 0.0,
        blocks,
        var_pos: Vec::new(),
    };
    let mut start: Vec<f64> = z0.iter().take(nf).copied().collect();
    start.extend(shifted(tau));
    start.push(tau + 1.0);
    let below_zero = |z: &[f64]| z[nf + nc] < 1.0;
    let (_, z, _, _) = Ipm::new(&aug).run_from(settings, start, Some(&below_zero));
    let tau = z[nf + nc] - 1.0;
    if tau >= 0.0 {
        return None;
    }
    let mut out: Vec<f64> = z[..nf].to_vec();
    out.extend(z[nf..nf + nc].iter().zip(&e).map(|(y, e)| y - tau * e));
    let ok = ipm.primal_residual(&out).iter().all(|v| v.abs() <= 1e-8 * scale);
    (ok && blocks_ok(&out[nf..])).then_some(out)
}

/// Infeasible-start run, retried from a phase-one point when the
/// infeasible phase gives up.
fn run_robust(sf: &StandardForm, settings: &SolverSettings) -> (SolveStatus, Vec<f64>, usize, f64) {
    let ipm = Ipm::new(sf);
    let first = ipm.run(settings);
    if first.0 != SolveStatus::Infeasible {
        return first;
    }
    match phase_one(sf, settings) {
        Some(z) => {
            let (st, z, it, gap) = ipm.run_from(settings, z, None);
            (st, z, it + first.2, gap)
        }
        None => first,
    }
}

fn smallest_positive_root(a: f64, b: f64, c: f64) -> f64 {
    // a α² + b α + c with c > 0
    if a.abs() < 1e-300 {
        return if b < 0.0 { -c / b } else { f64::INFINITY };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    let r1 = q / a;
    let r2 = if q != 0.0 { c / q } else { f64::INFINITY };
    [r1, r2]
        .into_iter()
        .filter(|r| *r > 0.0)
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn solve(p: &ConeProgram, settings: &SolverSettings) -> Result<ConicSolution, ConicError> {
    p.validate()?;
    let start = Instant::now();
    let sf = StandardForm::compile(p);
    if sf.a.iter().chain(&sf.b).chain(&sf.c).any(|v| !v.is_finite()) {
        return Err(ConicError::NonFinite);
    }
    let sign = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };

    // A costed free variable absent from every row makes the program unbounded
    // as soon as it is feasible; it is reported after the feasibility phase.
    let dangling_cost = (0..sf.n_free).any(|j| sf.c[j] != 0.0 && (0..sf.rows()).all(|r| sf.a[(r, j)] == 0.0));

    let (mut status, z, iterations, gap) = if dangling_cost {
        let mut feas = StandardForm { c: vec![0.0; sf.c.len()], ..sf.clone() };
        feas.obj_constant = 0.0;
        let (st, z, it, _) = run_robust(&feas, settings);
        let st = if st == SolveStatus::Optimal { SolveStatus::Unbounded } else { st };
        (st, z, it, f64::INFINITY)
    } else {
        run_robust(&sf, settings)
    };
    let mut values = vec![0.0; p.num_vars];
    for (i, pos) in sf.var_pos.iter().enumerate() {
        if let Some(k) = pos {
            values[i] = z[*k];
        }
    }
    let raw = sf.c.iter().zip(&z).map(|(c, v)| c * v).sum::<f64>() + sf.obj_constant;
    let objective_value = match status {
        SolveStatus::Unbounded => -sign * f64::INFINITY,
        SolveStatus::Infeasible => sign * f64::INFINITY,
        _ => sign * raw,
    };
    if status == SolveStatus::Optimal && !objective_value.is_finite() {
        status = SolveStatus::NumericalFailure;
    }
    Ok(ConicSolution {
        status,
        objective_value,
        values,
        solve_time: start.elapsed(),
        iterations,
        gap,
    })
}
