//! Barrier functions for the supported cones.
//!
//! Each block works on a contiguous slice of the cone part of the standard
//! form. Only the gradient and the inverse Hessian are needed by the solver.

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;

use crate::hermitian;

/// Exponential cone interior point used for initialization.
const EXP_START: [f64; 3] = [-1.051383, 0.556409, 1.258967];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ConeKind {
    Nonneg,
    Soc,
    Exp,
    /// Complex Hermitian PSD cone of the given order.
    Psd(usize),
}

#[derive(Clone, Debug)]
pub(crate) struct Block {
    pub kind: ConeKind,
    pub offset: usize,
    pub dim: usize,
}

impl Block {
    pub fn new(kind: ConeKind, offset: usize) -> Self {
        let dim = match kind {
            ConeKind::Nonneg => 1,
            ConeKind::Exp => 3,
            ConeKind::Psd(n) => hermitian::param_count(n),
            ConeKind::Soc => panic!("SOC blocks need an explicit dimension"),
        };
        Block { kind, offset, dim }
    }

    pub fn soc(offset: usize, dim: usize) -> Self {
        Block {
            kind: ConeKind::Soc,
            offset,
            dim,
        }
    }

    pub fn degree(&self) -> f64 {
        match self.kind {
            ConeKind::Nonneg => 1.0,
            ConeKind::Soc => 2.0,
            ConeKind::Exp => 3.0,
            ConeKind::Psd(n) => n as f64,
        }
    }

    pub fn describe(&self) -> String {
        match self.kind {
            ConeKind::Nonneg => format!("nonneg offset={} dim=1", self.offset),
            ConeKind::Soc => format!("soc offset={} dim={}", self.offset, self.dim),
            ConeKind::Exp => format!("exp offset={} dim=3", self.offset),
            ConeKind::Psd(n) => format!(
                "hermitian_psd offset={} order={} dim={}",
                self.offset, n, self.dim
            ),
        }
    }

    pub fn initial_point(&self, s: &mut [f64]) {
        match self.kind {
            ConeKind::Nonneg => s[0] = 1.0,
            ConeKind::Soc => {
                s.fill(0.0);
                s[0] = 1.0;
            }
            ConeKind::Exp => s.copy_from_slice(&EXP_START),
            ConeKind::Psd(n) => {
                s.fill(0.0);
                s[..n].fill(1.0);
            }
        }
    }

    /// Evaluates the barrier at `s`; `None` outside the interior.
    pub fn state(&self, s: &[f64]) -> Option<BlockState> {
        match self.kind {
            ConeKind::Nonneg => (s[0] > 0.0).then(|| BlockState::Nonneg { s: s[0] }),
            ConeKind::Soc => {
                let t = s[0];
                let q = t * t - s[1..].iter().map(|v| v * v).sum::<f64>();
                (t > 0.0 && q > 0.0).then(|| BlockState::Soc { z: s.to_vec(), q })
            }
            ConeKind::Exp => exp_state(s[0], s[1], s[2]),
            ConeKind::Psd(n) => {
                let x = hermitian::params_to_matrix(n, s);
                let chol = x.clone().cholesky()?;
                // complex Cholesky takes square roots of negative pivots
                // without failing, so positivity is checked here
                let diag = chol.l_dirty().diagonal();
                if diag.iter().any(|d| !(d.re > 0.0) || d.im.abs() > 1e-10 * d.re) {
                    return None;
                }
                let logdet: f64 = diag.iter().map(|d| 2.0 * d.re.ln()).sum();
                if !logdet.is_finite() {
                    return None;
                }
                let inv = chol.inverse();
                Some(BlockState::Psd { x, inv, logdet })
            }
        }
    }
}

fn exp_state(x: f64, y: f64, z: f64) -> Option<BlockState> {
    if !(y > 0.0 && z > 0.0) {
        return None;
    }
    let lr = (z / y).ln();
    let psi = y * lr - x;
    if !(psi > 0.0) || !psi.is_finite() {
        return None;
    }
    let dpsi = Vector3::new(-1.0, lr - 1.0, y / z);
    let grad = -dpsi / psi - Vector3::new(0.0, 1.0 / y, 1.0 / z);
    let value = -psi.ln() - y.ln() - z.ln();
    Some(BlockState::Exp {
        grad,
        y,
        z,
        psi,
        dpsi,
        value,
    })
}

pub(crate) enum BlockState {
    Nonneg {
        s: f64,
    },
    Soc {
        z: Vec<f64>,
        q: f64,
    },
    Exp {
        grad: Vector3<f64>,
        y: f64,
        z: f64,
        psi: f64,
        dpsi: Vector3<f64>,
        value: f64,
    },
    Psd {
        x: DMatrix<Complex64>,
        inv: DMatrix<Complex64>,
        logdet: f64,
    },
}

impl BlockState {
    pub fn value(&self) -> f64 {
        match self {
            BlockState::Nonneg { s } => -s.ln(),
            BlockState::Soc { q, .. } => -q.ln(),
            BlockState::Exp { value, .. } => *value,
            BlockState::Psd { logdet, .. } => -logdet,
        }
    }

    pub fn gradient(&self, out: &mut [f64]) {
        match self {
            BlockState::Nonneg { s } => out[0] = -1.0 / s,
            BlockState::Soc { z, q } => {
                out[0] = -2.0 * z[0] / q;
                for k in 1..z.len() {
                    out[k] = 2.0 * z[k] / q;
                }
            }
            BlockState::Exp { grad, .. } => out.copy_from_slice(grad.as_slice()),
            BlockState::Psd { inv, .. } => {
                hermitian::matrix_to_covector(inv, out);
                for v in out.iter_mut() {
                    *v = -*v;
                }
            }
        }
    }

    /// `out = H⁻¹ v`.
    pub fn hess_inv_apply(&self, v: &[f64], out: &mut [f64]) {
        match self {
            BlockState::Nonneg { s } => out[0] = s * s * v[0],
            BlockState::Soc { z, q } => {
                // H⁻¹ = z zᵀ − (q/2) J
                let zv: f64 = z.iter().zip(v).map(|(a, b)| a * b).sum();
                out[0] = z[0] * zv - 0.5 * q * v[0];
                for k in 1..z.len() {
                    out[k] = z[k] * zv + 0.5 * q * v[k];
                }
            }
            BlockState::Exp {
                y, z, psi, dpsi, ..
            } => {
                // H = a aᵀ/ψ² + [0 0; 0 M], M = b bᵀ/ψ + diag(1/y², 1/z²)
                // with a = ∇ψ and b = (1/√y, −√y/z). Solving blockwise keeps
                // the tiny eigenvalue along a accurate near the boundary.
                let (y, z, psi) = (*y, *z, *psi);
                let (ay, az) = (dpsi[1], dpsi[2]);
                let (uy, uz) = (v[1] + v[0] * ay, v[2] + v[0] * az);
                let (by, bz) = (1.0 / y.sqrt(), -y.sqrt() / z);
                let (dy, dz) = (y * y, z * z);
                let btdu = by * dy * uy + bz * dz * uz;
                let btdb = by * by * dy + bz * bz * dz;
                let f = btdu / (psi + btdb);
                let wy = dy * uy - dy * by * f;
                let wz = dz * uz - dz * bz * f;
                out[0] = ay * wy + az * wz + psi * psi * v[0];
                out[1] = wy;
                out[2] = wz;
            }
            BlockState::Psd { x, .. } => psd_hess_inv(x, v, out),
        }
    }
}

/// `params(X V X)` with `V` the matrix of covector `v`.
fn psd_hess_inv(x: &DMatrix<Complex64>, v: &[f64], out: &mut [f64]) {
    let n = x.nrows();
    let nnz = v.iter().filter(|a| **a != 0.0).count();
    if nnz <= n {
        // Σ V_pq x_p x_qᴴ over the few nonzero entries of V.
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        let mut add = |p: usize, q: usize, c: Complex64| {
            for j in 0..n {
                let xq = x[(j, q)].conj() * c;
                if xq == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for i in 0..n {
                    m[(i, j)] += x[(i, p)] * xq;
                }
            }
        };
        for i in 0..n {
            if v[i] != 0.0 {
                add(i, i, Complex64::new(v[i], 0.0));
            }
        }
        let mut k = n;
        for i in 0..n {
            for j in (i + 1)..n {
                if v[k] != 0.0 || v[k + 1] != 0.0 {
                    let e = Complex64::new(0.5 * v[k], 0.5 * v[k + 1]);
                    add(i, j, e);
                    add(j, i, e.conj());
                }
                k += 2;
            }
        }
        hermitian::matrix_to_params(&m, out);
        return;
    }
    let vm = hermitian::covector_to_matrix(n, v);
    let m = x * vm * x;
    hermitian::matrix_to_params(&m, out);
}
