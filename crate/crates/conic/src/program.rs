//! Declarative cone programs.
//!
//! A [`ConeProgram`] owns a flat space of real variables. Variable handles
//! ([`Scalar`], [`RealVector`], [`ComplexVector`], [`HermitianVar`]) build
//! [`LinExpr`]/[`ComplexExpr`] values over that space, which are then placed
//! in cones with the `add_*` methods.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::ConicError;
use crate::expr::{ComplexExpr, LinExpr};
use crate::hermitian;
use crate::solver::{self, ConicSolution, SolverSettings};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Scalar {
    idx: usize,
}

impl Scalar {
    pub fn expr(&self) -> LinExpr {
        LinExpr::var(self.idx)
    }

    pub fn index(&self) -> usize {
        self.idx
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RealVector {
    offset: usize,
    len: usize,
}

impl RealVector {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn entry(&self, i: usize) -> LinExpr {
        assert!(i < self.len);
        LinExpr::var(self.offset + i)
    }

    pub fn dot(&self, a: &[f64]) -> LinExpr {
        assert_eq!(a.len(), self.len);
        let mut e = LinExpr::zero();
        for (i, &c) in a.iter().enumerate() {
            e.push(self.offset + i, c);
        }
        e
    }
}

/// Complex vector stored as interleaved `(re, im)` pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComplexVector {
    offset: usize,
    len: usize,
}

impl ComplexVector {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn entry(&self, i: usize) -> ComplexExpr {
        assert!(i < self.len);
        ComplexExpr {
            re: LinExpr::var(self.offset + 2 * i),
            im: LinExpr::var(self.offset + 2 * i + 1),
        }
    }

    /// `Σ a_i x_i`.
    pub fn linear_combination(&self, a: &[Complex64]) -> ComplexExpr {
        assert_eq!(a.len(), self.len);
        let mut re = LinExpr::zero();
        let mut im = LinExpr::zero();
        for (i, c) in a.iter().enumerate() {
            let (r, m) = (self.offset + 2 * i, self.offset + 2 * i + 1);
            // (c.re + i c.im)(x_r + i x_m)
            re.push(r, c.re);
            re.push(m, -c.im);
            im.push(r, c.im);
            im.push(m, c.re);
        }
        ComplexExpr { re, im }
    }

    /// `Σ a_i conj(x_i)`.
    pub fn conj_combination(&self, a: &[Complex64]) -> ComplexExpr {
        assert_eq!(a.len(), self.len);
        let mut re = LinExpr::zero();
        let mut im = LinExpr::zero();
        for (i, c) in a.iter().enumerate() {
            let (r, m) = (self.offset + 2 * i, self.offset + 2 * i + 1);
            // (c.re + i c.im)(x_r - i x_m)
            re.push(r, c.re);
            re.push(m, c.im);
            im.push(r, c.im);
            im.push(m, -c.re);
        }
        ComplexExpr { re, im }
    }

    /// Real coordinates `(Re x_0, Im x_0, Re x_1, …)` as expressions.
    pub fn real_parts(&self) -> Vec<LinExpr> {
        (0..2 * self.len)
            .map(|k| LinExpr::var(self.offset + k))
            .collect()
    }
}

/// Hermitian matrix variable. When created through
/// [`ConeProgram::hermitian_psd`] the block is itself a PSD cone member.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HermitianVar {
    offset: usize,
    n: usize,
}

impl HermitianVar {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> ComplexExpr {
        let n = self.n;
        assert!(i < n && j < n);
        if i == j {
            return ComplexExpr {
                re: LinExpr::var(self.offset + i),
                im: LinExpr::zero(),
            };
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let k = self.offset + hermitian::offdiag_index(n, a, b);
        let im = if i < j {
            LinExpr::var(k + 1)
        } else {
            LinExpr::var(k + 1).scaled(-1.0)
        };
        ComplexExpr {
            re: LinExpr::var(k),
            im,
        }
    }

    /// `Re tr(C X)`.
    pub fn inner(&self, c: &DMatrix<Complex64>) -> LinExpr {
        assert_eq!(c.shape(), (self.n, self.n));
        let mut cov = vec![0.0; hermitian::param_count(self.n)];
        hermitian::matrix_to_covector(c, &mut cov);
        let mut e = LinExpr::zero();
        for (k, &v) in cov.iter().enumerate() {
            e.push(self.offset + k, v);
        }
        e
    }

    pub fn trace(&self) -> LinExpr {
        let mut e = LinExpr::zero();
        for i in 0..self.n {
            e.push(self.offset + i, 1.0);
        }
        e
    }

    pub fn expr(&self) -> HermitianExpr {
        let mut upper = Vec::with_capacity(self.n * (self.n + 1) / 2);
        for i in 0..self.n {
            for j in i..self.n {
                upper.push(self.entry(i, j));
            }
        }
        HermitianExpr { n: self.n, upper }
    }
}

/// Affine Hermitian-matrix expression given by its upper triangle (row-major,
/// diagonal included).
#[derive(Clone, Debug)]
pub struct HermitianExpr {
    n: usize,
    upper: Vec<ComplexExpr>,
}

impl HermitianExpr {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Constant Hermitian matrix.
    pub fn constant(c: &DMatrix<Complex64>) -> Self {
        let n = c.nrows();
        let mut upper = Vec::new();
        for i in 0..n {
            for j in i..n {
                upper.push(ComplexExpr::constant(c[(i, j)]));
            }
        }
        HermitianExpr { n, upper }
    }

    /// Subtracts a constant matrix (upper triangle is read).
    pub fn minus(mut self, c: &DMatrix<Complex64>) -> Self {
        assert_eq!(c.shape(), (self.n, self.n));
        let mut k = 0;
        for i in 0..self.n {
            for j in i..self.n {
                let e = std::mem::take(&mut self.upper[k]);
                self.upper[k] = e.add_constant(-c[(i, j)]);
                k += 1;
            }
        }
        self
    }

    pub(crate) fn upper(&self) -> &[ComplexExpr] {
        &self.upper
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Constraint {
    /// `expr = 0`
    Eq(LinExpr),
    /// `expr ≥ 0`
    Nonneg(LinExpr),
    /// `t ≥ ‖x‖₂`
    Soc { t: LinExpr, x: Vec<LinExpr> },
    /// `y·exp(x/y) ≤ z, y > 0` (closure)
    Exp { x: LinExpr, y: LinExpr, z: LinExpr },
    /// Hermitian expression is PSD.
    Psd(HermitianExpr),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Sense {
    Minimize,
    Maximize,
}

/// A conic program. Immutable once handed to [`ConeProgram::solve`].
#[derive(Clone, Debug)]
pub struct ConeProgram {
    pub(crate) num_vars: usize,
    /// Native PSD blocks `(offset, n)`.
    pub(crate) psd_vars: Vec<(usize, usize)>,
    pub(crate) objective: LinExpr,
    pub(crate) sense: Sense,
    pub(crate) constraints: Vec<Constraint>,
}

impl Default for ConeProgram {
    fn default() -> Self {
        Self::new()
    }
}

impl ConeProgram {
    pub fn new() -> Self {
        ConeProgram {
            num_vars: 0,
            psd_vars: Vec::new(),
            objective: LinExpr::zero(),
            sense: Sense::Minimize,
            constraints: Vec::new(),
        }
    }

    fn alloc(&mut self, count: usize) -> usize {
        let off = self.num_vars;
        self.num_vars += count;
        off
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn scalar(&mut self) -> Scalar {
        Scalar { idx: self.alloc(1) }
    }

    pub fn vector(&mut self, len: usize) -> RealVector {
        RealVector {
            offset: self.alloc(len),
            len,
        }
    }

    pub fn complex_vector(&mut self, len: usize) -> ComplexVector {
        ComplexVector {
            offset: self.alloc(2 * len),
            len,
        }
    }

    /// Free Hermitian matrix variable.
    pub fn hermitian(&mut self, n: usize) -> HermitianVar {
        HermitianVar {
            offset: self.alloc(hermitian::param_count(n)),
            n,
        }
    }

    /// Hermitian matrix variable constrained to the PSD cone.
    pub fn hermitian_psd(&mut self, n: usize) -> HermitianVar {
        let v = self.hermitian(n);
        self.psd_vars.push((v.offset, n));
        v
    }

    pub fn minimize(&mut self, objective: LinExpr) {
        self.objective = objective;
        self.sense = Sense::Minimize;
    }

    pub fn maximize(&mut self, objective: LinExpr) {
        self.objective = objective;
        self.sense = Sense::Maximize;
    }

    /// `expr = 0`.
    pub fn add_eq(&mut self, expr: LinExpr) {
        self.constraints.push(Constraint::Eq(expr));
    }

    /// `expr ≥ 0`.
    pub fn add_nonneg(&mut self, expr: LinExpr) {
        self.constraints.push(Constraint::Nonneg(expr));
    }

    /// `lhs ≤ rhs`.
    pub fn add_le(&mut self, lhs: LinExpr, rhs: LinExpr) {
        self.add_nonneg(rhs - lhs);
    }

    /// `t ≥ ‖x‖₂`.
    pub fn add_soc(&mut self, t: LinExpr, x: Vec<LinExpr>) {
        self.constraints.push(Constraint::Soc { t, x });
    }

    /// Rotated cone `2·u·v ≥ ‖x‖², u ≥ 0, v ≥ 0`, stored as a standard cone
    /// on `((u+v)/√2, (u−v)/√2, x)`.
    pub fn add_rsoc(&mut self, u: LinExpr, v: LinExpr, x: Vec<LinExpr>) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let t = (u.clone() + &v).scaled(s);
        let d = (u - v).scaled(s);
        let mut xs = Vec::with_capacity(x.len() + 1);
        xs.push(d);
        xs.extend(x);
        self.add_soc(t, xs);
    }

    /// Exponential cone `(x, y, z)`: `y·exp(x/y) ≤ z`, `y > 0`.
    pub fn add_exp(&mut self, x: LinExpr, y: LinExpr, z: LinExpr) {
        self.constraints.push(Constraint::Exp { x, y, z });
    }

    /// `expr ⪰ 0`.
    pub fn add_psd(&mut self, expr: HermitianExpr) {
        self.constraints.push(Constraint::Psd(expr));
    }

    pub(crate) fn validate(&self) -> Result<(), ConicError> {
        let check = |e: &LinExpr| match e.max_index() {
            Some(i) if i >= self.num_vars => Err(ConicError::UnknownVariable {
                index: i,
                count: self.num_vars,
            }),
            _ => Ok(()),
        };
        check(&self.objective)?;
        for c in &self.constraints {
            match c {
                Constraint::Eq(e) | Constraint::Nonneg(e) => check(e)?,
                Constraint::Soc { t, x } => {
                    check(t)?;
                    for e in x {
                        check(e)?;
                    }
                }
                Constraint::Exp { x, y, z } => {
                    check(x)?;
                    check(y)?;
                    check(z)?;
                }
                Constraint::Psd(h) => {
                    if h.upper.len() != h.n * (h.n + 1) / 2 {
                        return Err(ConicError::DimensionMismatch(format!(
                            "PSD expression of order {} has {} upper entries",
                            h.n,
                            h.upper.len()
                        )));
                    }
                    if h.n == 0 {
                        return Err(ConicError::EmptyCone);
                    }
                    for e in &h.upper {
                        check(&e.re)?;
                        check(&e.im)?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self, tol: f64) -> Result<ConicSolution, ConicError> {
        let settings = SolverSettings {
            tol,
            ..SolverSettings::default()
        };
        solver::solve(self, &settings)
    }

    pub fn solve_with(&self, settings: &SolverSettings) -> Result<ConicSolution, ConicError> {
        solver::solve(self, settings)
    }

    /// Plain-text dump of the compiled standard form
    /// `min cᵀz s.t. A z = b, z ∈ R^f × K`.
    pub fn dump_standard_form(&self) -> Result<String, ConicError> {
        self.validate()?;
        let sf = solver::StandardForm::compile(self);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# standard form: {} free, {} cone coordinates, {} equality rows",
            sf.n_free,
            sf.n_cone,
            sf.rows()
        );
        let _ = writeln!(out, "sense {:?}", self.sense);
        let _ = writeln!(out, "objective_constant {}", sf.obj_constant);
        for blk in &sf.blocks {
            let _ = writeln!(out, "cone {}", blk.describe());
        }
        for (j, c) in sf.c.iter().enumerate() {
            if *c != 0.0 {
                let _ = writeln!(out, "c {j} {c:e}");
            }
        }
        for i in 0..sf.rows() {
            for j in 0..sf.n_free + sf.n_cone {
                let a = sf.a[(i, j)];
                if a != 0.0 {
                    let _ = writeln!(out, "A {i} {j} {a:e}");
                }
            }
            let _ = writeln!(out, "b {i} {:e}", sf.b[i]);
        }
        Ok(out)
    }
}
