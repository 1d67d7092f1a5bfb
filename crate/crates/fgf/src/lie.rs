//! Orthonormal bases of the skew-Hermitian matrices u(N).

use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Basis of u(N), orthonormal for the inner product `<X, Y> = -N Tr(X Y)`.
///
/// Off-diagonal pairs contribute `(E_ij - E_ji)/sqrt(2N)` and
/// `i (E_ij + E_ji)/sqrt(2N)` for `i < j`; the diagonal contributes
/// `i E_jj / sqrt(N)`.
#[derive(Clone, Debug)]
pub struct LieBasis {
    n: usize,
    mats: Vec<DMatrix<Complex64>>,
}

impl LieBasis {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("matrix size must be positive".into()));
        }
        let mut mats = Vec::with_capacity(n * n);
        let s = 1.0 / (2.0 * n as f64).sqrt();
        for i in 0..n {
            for j in i + 1..n {
                let mut re = DMatrix::<Complex64>::zeros(n, n);
                re[(i, j)] = Complex64::new(s, 0.0);
                re[(j, i)] = Complex64::new(-s, 0.0);
                mats.push(re);
                let mut im = DMatrix::<Complex64>::zeros(n, n);
                im[(i, j)] = Complex64::new(0.0, s);
                im[(j, i)] = Complex64::new(0.0, s);
                mats.push(im);
            }
        }
        let t = 1.0 / (n as f64).sqrt();
        for j in 0..n {
            let mut diag = DMatrix::<Complex64>::zeros(n, n);
            diag[(j, j)] = Complex64::new(0.0, t);
            mats.push(diag);
        }
        Ok(Self { n, mats })
    }

    pub fn matrix_size(&self) -> usize {
        self.n
    }

    /// Number of basis elements, `N^2`.
    pub fn dim(&self) -> usize {
        self.mats.len()
    }

    pub fn matrices(&self) -> &[DMatrix<Complex64>] {
        &self.mats
    }

    /// `sum_a c_a E_a`. Complex coefficients span all of gl(N).
    pub fn expand(&self, coeffs: &[Complex64]) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (c, e) in coeffs.iter().zip(&self.mats) {
            m += e * *c;
        }
        m
    }

    /// Coefficients of `m` in the basis, via the bilinear form `-N Tr(. .)`.
    pub fn project(&self, m: &DMatrix<Complex64>) -> Vec<Complex64> {
        self.mats
            .iter()
            .map(|e| -(self.n as f64) * trace_product(m, e))
            .collect()
    }
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// The Casimir element `sum_a E_a (x) E_a` as an N^2 x N^2 matrix, with
/// Kronecker indexing `(i, k) -> i N + k`.
pub fn casimir(basis: &LieBasis) -> DMatrix<Complex64> {
    let n = basis.matrix_size();
    let mut out = DMatrix::zeros(n * n, n * n);
    for e in basis.matrices() {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        out[(i * n + k, j * n + l)] += e[(i, j)] * e[(k, l)];
                    }
                }
            }
        }
    }
    out
}

/// The swap operator on `C^N (x) C^N`: `P (u (x) v) = v (x) u`.
pub fn swap_operator(n: usize) -> DMatrix<Complex64> {
    let mut p = DMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for k in 0..n {
            p[(i * n + k, k * n + i)] = Complex64::ONE;
        }
    }
    p
}

/// Verifies orthonormality and the Casimir identity
/// `sum_a E_a (x) E_a = -P / N`; returns the worst deviation.
pub fn casimir_check(n: usize) -> Result<f64> {
    let basis = LieBasis::new(n)?;
    let mut worst: f64 = 0.0;
    for (a, ea) in basis.matrices().iter().enumerate() {
        // Skew-Hermitian.
        worst = worst.max((ea + ea.adjoint()).norm());
        for (b, eb) in basis.matrices().iter().enumerate() {
            let ip = -(n as f64) * trace_product(ea, eb);
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((ip - Complex64::from(target)).norm());
        }
    }
    let diff = casimir(&basis) + swap_operator(n) / Complex64::from(n as f64);
    worst = worst.max(diff.norm());
    Ok(worst)
}
