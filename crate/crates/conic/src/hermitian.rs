//! Real parametrization of complex Hermitian matrices.
//!
//! An `n × n` Hermitian matrix is stored as `n²` reals: the `n` diagonal
//! entries first, then `(Re X_ij, Im X_ij)` for every `i < j` in row-major
//! order. Linear functionals on that parameter space ("covectors") map to
//! Hermitian matrices `V` through `⟨v, x⟩ = tr(V X)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub(crate) fn param_count(n: usize) -> usize {
    n * n
}

/// Offset of the `Re X_ij` parameter for `i < j`; the imaginary part follows it.
pub(crate) fn offdiag_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    // pairs in rows 0..i: Σ_{r<i} (n-1-r) = i(n-1) - i(i-1)/2
    let before = i * (n - 1) - (i * i - i) / 2;
    n + 2 * (before + (j - i - 1))
}

pub(crate) fn params_to_matrix(n: usize, p: &[f64]) -> DMatrix<Complex64> {
    let mut x = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        x[(i, i)] = Complex64::new(p[i], 0.0);
    }
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = Complex64::new(p[k], p[k + 1]);
            x[(i, j)] = v;
            x[(j, i)] = v.conj();
            k += 2;
        }
    }
    x
}

/// Reads the parameters of `x` from its upper triangle.
pub(crate) fn matrix_to_params(x: &DMatrix<Complex64>, out: &mut [f64]) {
    let n = x.nrows();
    for i in 0..n {
        out[i] = x[(i, i)].re;
    }
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            out[k] = x[(i, j)].re;
            out[k + 1] = x[(i, j)].im;
            k += 2;
        }
    }
}

/// Hermitian `V` with `tr(V X) = Σ v_p x_p`.
pub(crate) fn covector_to_matrix(n: usize, v: &[f64]) -> DMatrix<Complex64> {
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = Complex64::new(v[i], 0.0);
    }
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            let e = Complex64::new(0.5 * v[k], 0.5 * v[k + 1]);
            m[(i, j)] = e;
            m[(j, i)] = e.conj();
            k += 2;
        }
    }
    m
}

/// Covector of the functional `X ↦ Re tr(Z X)`; `Z` need not be Hermitian.
pub(crate) fn matrix_to_covector(z: &DMatrix<Complex64>, out: &mut [f64]) {
    let n = z.nrows();
    for i in 0..n {
        out[i] = z[(i, i)].re;
    }
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            out[k] = z[(i, j)].re + z[(j, i)].re;
            out[k + 1] = z[(i, j)].im - z[(j, i)].im;
            k += 2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..n * n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect()
    }

    #[test]
    fn offdiag_layout_is_dense_and_ordered() {
        let n = 5;
        let mut expect = n;
        for i in 0..n {
            for j in (i + 1)..n {
                assert_eq!(offdiag_index(n, i, j), expect);
                expect += 2;
            }
        }
        assert_eq!(expect, param_count(n));
    }

    #[test]
    fn covector_pairing_is_trace() {
        let n = 4;
        let x = sample(n, 1);
        let v = sample(n, 2);
        let xm = params_to_matrix(n, &x);
        let vm = covector_to_matrix(n, &v);
        let lhs: f64 = x.iter().zip(&v).map(|(a, b)| a * b).sum();
        let rhs = (&vm * &xm).trace();
        assert!((lhs - rhs.re).abs() < 1e-12 && rhs.im.abs() < 1e-12);

        let mut back = vec![0.0; n * n];
        matrix_to_covector(&vm, &mut back);
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).abs() < 1e-14);
        }
        let mut p = vec![0.0; n * n];
        matrix_to_params(&xm, &mut p);
        assert_eq!(p, x);
    }
}
