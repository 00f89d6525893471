//! Real embeddings of complex matrices and vectors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::ConicError;

/// `[Re −Im; Im Re]` for a Hermitian matrix. The result is real symmetric and
/// carries every eigenvalue of the input twice.
pub fn embed_hermitian(h: &DMatrix<Complex64>) -> Result<DMatrix<f64>, ConicError> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(ConicError::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            n,
            h.ncols()
        )));
    }
    let scale = h.iter().fold(0.0f64, |m, v| m.max(v.norm())).max(1.0);
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            asym = asym.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    if asym > 1e-10 * scale {
        return Err(ConicError::NotHermitian(asym));
    }
    Ok(DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let v = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => v.re,
            (true, false) => -v.im,
            (false, true) => v.im,
        }
    }))
}

/// Stacked `[Re x; Im x]`.
pub fn embed_vector(x: &[Complex64]) -> DVector<f64> {
    let n = x.len();
    DVector::from_fn(2 * n, |i, _| if i < n { x[i].re } else { x[i - n].im })
}
