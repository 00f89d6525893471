//! Affine expressions over the real decision variables of a [`ConeProgram`].
//!
//! Every variable block (scalar, vector, complex vector, Hermitian matrix) is
//! flattened onto a single real index space. A [`LinExpr`] is a sparse linear
//! form over that space plus a constant; a [`ComplexExpr`] is a pair of them.
//!
//! [`ConeProgram`]: crate::ConeProgram

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

/// Real affine expression `Σ coef·x[idx] + constant`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    pub(crate) terms: Vec<(usize, f64)>,
    pub(crate) constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub(crate) fn var(idx: usize) -> Self {
        LinExpr {
            terms: vec![(idx, 1.0)],
            constant: 0.0,
        }
    }

    pub(crate) fn push(&mut self, idx: usize, coef: f64) {
        if coef != 0.0 {
            self.terms.push((idx, coef));
        }
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    pub fn add_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for t in &mut self.terms {
            t.1 *= s;
        }
        self.constant *= s;
        self
    }

    /// Evaluates the expression at a full assignment of the variables.
    pub fn eval(&self, values: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|&(i, c)| c * values[i])
            .sum::<f64>()
            + self.constant
    }

    /// Merges duplicate indices and drops zero coefficients.
    pub(crate) fn compacted(&self) -> Vec<(usize, f64)> {
        let mut t = self.terms.clone();
        t.sort_by_key(|&(i, _)| i);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(t.len());
        for (i, c) in t {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += c,
                _ => out.push((i, c)),
            }
        }
        out.retain(|&(_, c)| c != 0.0);
        out
    }

    pub(crate) fn max_index(&self) -> Option<usize> {
        self.terms.iter().map(|&(i, _)| i).max()
    }
}

impl From<f64> for LinExpr {
    fn from(c: f64) -> Self {
        LinExpr::constant(c)
    }
}

impl AddAssign<&LinExpr> for LinExpr {
    fn add_assign(&mut self, rhs: &LinExpr) {
        self.terms.extend_from_slice(&rhs.terms);
        self.constant += rhs.constant;
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self += &rhs;
        self
    }
}

impl Add<&LinExpr> for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: &LinExpr) -> LinExpr {
        self += &rhs;
        self
    }
}

impl Add<f64> for LinExpr {
    type Output = LinExpr;
    fn add(self, rhs: f64) -> LinExpr {
        self.add_constant(rhs)
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: LinExpr) -> LinExpr {
        self + rhs.scaled(-1.0)
    }
}

impl Sub<&LinExpr> for LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: &LinExpr) -> LinExpr {
        self + rhs.clone().scaled(-1.0)
    }
}

impl Sub<f64> for LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: f64) -> LinExpr {
        self.add_constant(-rhs)
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(self, rhs: f64) -> LinExpr {
        self.scaled(rhs)
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scaled(-1.0)
    }
}

impl std::iter::Sum for LinExpr {
    fn sum<I: Iterator<Item = LinExpr>>(iter: I) -> LinExpr {
        let mut acc = LinExpr::zero();
        for e in iter {
            acc += &e;
        }
        acc
    }
}

/// Complex affine expression held as real and imaginary [`LinExpr`] parts.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ComplexExpr {
    pub re: LinExpr,
    pub im: LinExpr,
}

impl ComplexExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        ComplexExpr {
            re: LinExpr::constant(c.re),
            im: LinExpr::constant(c.im),
        }
    }

    /// Multiplies by a complex constant.
    pub fn scaled(self, c: Complex64) -> Self {
        let re = self.re.clone().scaled(c.re) - self.im.clone().scaled(c.im);
        let im = self.im.scaled(c.re) + self.re.scaled(c.im);
        ComplexExpr { re, im }
    }

    pub fn conj(self) -> Self {
        ComplexExpr {
            re: self.re,
            im: self.im.scaled(-1.0),
        }
    }

    pub fn add_constant(self, c: Complex64) -> Self {
        ComplexExpr {
            re: self.re.add_constant(c.re),
            im: self.im.add_constant(c.im),
        }
    }

    /// `Re(conj(a) · self)`, the real inner product with a fixed complex number.
    pub fn real_inner(&self, a: Complex64) -> LinExpr {
        self.re.clone().scaled(a.re) + self.im.clone().scaled(a.im)
    }

    pub fn eval(&self, values: &[f64]) -> Complex64 {
        Complex64::new(self.re.eval(values), self.im.eval(values))
    }

    pub fn into_parts(self) -> [LinExpr; 2] {
        [self.re, self.im]
    }
}

impl Add for ComplexExpr {
    type Output = ComplexExpr;
    fn add(self, rhs: ComplexExpr) -> ComplexExpr {
        ComplexExpr {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl Sub for ComplexExpr {
    type Output = ComplexExpr;
    fn sub(self, rhs: ComplexExpr) -> ComplexExpr {
        ComplexExpr {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl std::iter::Sum for ComplexExpr {
    fn sum<I: Iterator<Item = ComplexExpr>>(iter: I) -> ComplexExpr {
        iter.fold(ComplexExpr::zero(), |a, b| a + b)
    }
}
