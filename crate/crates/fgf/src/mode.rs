//! Exact exterior algebra on a single Fourier mode.
//!
//! On the mode `e^(i a.x)` the exterior derivative acts as `i a ∧ .` and the
//! codifferential as `-i i_a` (contraction), so every operator of interest is
//! a small matrix on the `C(n,k)` form components.

use crate::complex::{axis_sets, binomial};
use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// `(a ∧ w)_J = sum_a (-1)^(a-1) a_{j_a} w_{J \ j_a}`, degree k to k+1.
pub fn wedge_apply(alpha: &[f64], omega: &[Complex64], n: usize, k: usize) -> Vec<Complex64> {
    let out_sets = axis_sets(n, k + 1);
    let in_sets = axis_sets(n, k);
    let mut out = vec![Complex64::ZERO; out_sets.len()];
    for (oj, set) in out_sets.iter().enumerate() {
        let mut acc = Complex64::ZERO;
        for (a, &ax) in set.iter().enumerate() {
            let mut face = set.clone();
            face.remove(a);
            let fi = in_sets.iter().position(|s| *s == face).unwrap();
            let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * alpha[ax as usize] * omega[fi];
        }
        out[oj] = acc;
    }
    out
}

/// Contraction `(i_v w)_I = sum_{j not in I} (-1)^(pos(j, I+j)-1) v_j w_{I+j}`,
/// degree k to k-1.
pub fn contract_apply(v: &[f64], omega: &[Complex64], n: usize, k: usize) -> Vec<Complex64> {
    let out_sets = axis_sets(n, k - 1);
    let in_sets = axis_sets(n, k);
    let mut out = vec![Complex64::ZERO; out_sets.len()];
    for (oi, set) in out_sets.iter().enumerate() {
        let mut acc = Complex64::ZERO;
        for j in 0..n as u8 {
            if set.contains(&j) {
                continue;
            }
            let below = set.iter().filter(|&&i| i < j).count();
            let mut up = set.clone();
            up.insert(below, j);
            let ui = in_sets.iter().position(|s| *s == up).unwrap();
            let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * v[j as usize] * omega[ui];
        }
        out[oi] = acc;
    }
    out
}

fn matrix_from_apply(
    rows: usize,
    cols: usize,
    mut apply: impl FnMut(&[Complex64]) -> Vec<Complex64>,
) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(rows, cols);
    let mut e = vec![Complex64::ZERO; cols];
    for j in 0..cols {
        e[j] = Complex64::ONE;
        let col = apply(&e);
        e[j] = Complex64::ZERO;
        for i in 0..rows {
            m[(i, j)] = col[i];
        }
    }
    m
}

/// Matrix of `a ∧ .` from degree k to k+1.
pub fn wedge_matrix(alpha: &[f64], n: usize, k: usize) -> DMatrix<Complex64> {
    matrix_from_apply(binomial(n, k + 1), binomial(n, k), |w| {
        wedge_apply(alpha, w, n, k)
    })
}

/// Matrix of contraction by `v` from degree k to k-1.
pub fn contract_matrix(v: &[f64], n: usize, k: usize) -> DMatrix<Complex64> {
    matrix_from_apply(binomial(n, k - 1), binomial(n, k), |w| {
        contract_apply(v, w, n, k)
    })
}

/// Exterior operator restricted to one mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeOp {
    D,
    DStar,
}

/// Matrix of `d` (`i a ∧ .`) or `d*` (`-i i_a`) on mode `alpha` at degree k.
pub fn block_exterior(alpha: &[f64], n: usize, k: usize, op: ModeOp) -> Result<DMatrix<Complex64>> {
    if alpha.len() != n {
        return Err(Error::InvalidArgument("mode length differs from n".into()));
    }
    match op {
        ModeOp::D => {
            if k >= n {
                return Err(Error::DegreeOutOfRange { k: k + 1, n });
            }
            Ok(wedge_matrix(alpha, n, k) * Complex64::i())
        }
        ModeOp::DStar => {
            if k == 0 {
                return Err(Error::InvalidArgument(
                    "codifferential needs degree at least 1".into(),
                ));
            }
            Ok(contract_matrix(alpha, n, k) * (-Complex64::i()))
        }
    }
}

/// Exact and coexact dimensions of a nonzero mode at degree k:
/// `(C(n-1, k-1), C(n-1, k))`.
pub fn block_dims(n: usize, k: usize) -> (usize, usize) {
    if n == 0 {
        return (0, 0);
    }
    (binomial(n - 1, k.wrapping_sub(1)), binomial(n - 1, k))
}

/// Sign `σ(I)` of the permutation `(I, I^c)`.
pub fn star_sign(set: &[u8]) -> f64 {
    // Inversions between I and its complement: pairs (i in I, j not in I, i > j).
    let mut inversions = 0usize;
    for &i in set {
        for j in 0..i {
            if !set.contains(&j) {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Hodge star on components: `*(dx^I) = σ(I) dx^(I^c)`, complex-linear.
pub fn star_apply(omega: &[Complex64], n: usize, k: usize) -> Vec<Complex64> {
    let in_sets = axis_sets(n, k);
    let out_sets = axis_sets(n, n - k);
    let mut out = vec![Complex64::ZERO; out_sets.len()];
    for (ii, set) in in_sets.iter().enumerate() {
        let comp: Vec<u8> = (0..n as u8).filter(|a| !set.contains(a)).collect();
        let oi = out_sets.iter().position(|s| *s == comp).unwrap();
        out[oi] = star_sign(set) * omega[ii];
    }
    out
}

/// Matrix of the Hodge star from degree k to n-k.
pub fn star_matrix(n: usize, k: usize) -> DMatrix<Complex64> {
    matrix_from_apply(binomial(n, n - k), binomial(n, k), |w| star_apply(w, n, k))
}

fn norm_sq(alpha: &[f64]) -> f64 {
    alpha.iter().map(|a| a * a).sum()
}

/// Projector onto the exact subspace of a nonzero mode: `a ∧ i_a / |a|^2`.
pub fn exact_projector(alpha: &[f64], n: usize, k: usize) -> Result<DMatrix<Complex64>> {
    let a2 = norm_sq(alpha);
    if a2 == 0.0 {
        return Err(Error::InvalidArgument("projector needs a nonzero mode".into()));
    }
    if k == 0 {
        return Ok(DMatrix::zeros(1, 1));
    }
    Ok(wedge_matrix(alpha, n, k - 1) * contract_matrix(alpha, n, k) / Complex64::from(a2))
}

/// Projector onto the coexact subspace of a nonzero mode: `i_a a ∧ . / |a|^2`.
pub fn coexact_projector(alpha: &[f64], n: usize, k: usize) -> Result<DMatrix<Complex64>> {
    let a2 = norm_sq(alpha);
    if a2 == 0.0 {
        return Err(Error::InvalidArgument("projector needs a nonzero mode".into()));
    }
    if k == n {
        return Ok(DMatrix::zeros(1, 1));
    }
    Ok(contract_matrix(alpha, n, k + 1) * wedge_matrix(alpha, n, k) / Complex64::from(a2))
}

/// Orthonormal eigenbasis of the curl operator `i a x .` on a nonzero mode
/// in three dimensions, restricted to the divergence-free plane.
#[derive(Clone, Debug)]
pub struct CurlBasis {
    /// Eigenvector with eigenvalue `+|a|`.
    pub plus: [Complex64; 3],
    /// Eigenvector with eigenvalue `-|a|`.
    pub minus: [Complex64; 3],
    /// The frequency `|a|`.
    pub freq: f64,
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Curl eigenbasis `e_± = (u ± i v)/sqrt(2)` with `u ∝ a x e_q`, `v = â x u`,
/// picking the axis `q` where `|a_q|` is smallest (ties to the lowest index).
pub fn curl_eigenbasis(alpha: &[f64]) -> Result<CurlBasis> {
    if alpha.len() != 3 {
        return Err(Error::InvalidArgument("curl basis needs n = 3".into()));
    }
    let a = [alpha[0], alpha[1], alpha[2]];
    let freq = norm_sq(alpha).sqrt();
    if freq == 0.0 {
        return Err(Error::InvalidArgument("curl basis needs a nonzero mode".into()));
    }
    let ahat = [a[0] / freq, a[1] / freq, a[2] / freq];
    let mut q = 0;
    for d in 1..3 {
        if a[d].abs() < a[q].abs() {
            q = d;
        }
    }
    let mut eq = [0.0; 3];
    eq[q] = 1.0;
    let raw = cross(ahat, eq);
    let len = norm_sq(&raw).sqrt();
    let u = [raw[0] / len, raw[1] / len, raw[2] / len];
    let v = cross(ahat, u);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut plus = [Complex64::ZERO; 3];
    let mut minus = [Complex64::ZERO; 3];
    for d in 0..3 {
        plus[d] = Complex64::new(s * u[d], s * v[d]);
        minus[d] = Complex64::new(s * u[d], -s * v[d]);
    }
    Ok(CurlBasis { plus, minus, freq })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mode(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        loop {
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-8i64..=8) as f64).collect();
            if a.iter().any(|&x| x != 0.0) {
                return a;
            }
        }
    }

    fn hermitian_dot(u: &[Complex64], v: &[Complex64]) -> Complex64 {
        u.iter().zip(v).map(|(a, b)| a * b.conj()).sum()
    }

    #[test]
    fn cartan_identity_gives_scalar_laplacian() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..=5 {
            for k in 0..=n {
                for _ in 0..5 {
                    let alpha = random_mode(&mut rng, n);
                    let a2: f64 = alpha.iter().map(|a| a * a).sum();
                    let dim = binomial(n, k);
                    let mut cartan = DMatrix::<Complex64>::zeros(dim, dim);
                    if k > 0 {
                        cartan += wedge_matrix(&alpha, n, k - 1) * contract_matrix(&alpha, n, k);
                    }
                    if k < n {
                        cartan += contract_matrix(&alpha, n, k + 1) * wedge_matrix(&alpha, n, k);
                    }
                    let expected = DMatrix::<Complex64>::identity(dim, dim) * Complex64::from(a2);
                    assert!((cartan - expected).norm() < 1e-12 * (a2 + 1.0));
                }
            }
        }
    }

    #[test]
    fn d_and_dstar_square_to_zero_and_are_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=4 {
            let alpha = random_mode(&mut rng, n);
            for k in 0..n.saturating_sub(1) {
                let dd = block_exterior(&alpha, n, k + 1, ModeOp::D).unwrap()
                    * block_exterior(&alpha, n, k, ModeOp::D).unwrap();
                assert!(dd.norm() < 1e-12);
            }
            for k in 0..n {
                let u: Vec<Complex64> = (0..binomial(n, k))
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let v: Vec<Complex64> = (0..binomial(n, k + 1))
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let d = block_exterior(&alpha, n, k, ModeOp::D).unwrap();
                let ds = block_exterior(&alpha, n, k + 1, ModeOp::DStar).unwrap();
                let du: Vec<Complex64> = (d * DMatrix::from_column_slice(u.len(), 1, &u))
                    .column(0)
                    .iter()
                    .copied()
                    .collect();
                let dsv: Vec<Complex64> = (ds * DMatrix::from_column_slice(v.len(), 1, &v))
                    .column(0)
                    .iter()
                    .copied()
                    .collect();
                let lhs = hermitian_dot(&du, &v);
                let rhs = hermitian_dot(&u, &dsv);
                assert!((lhs - rhs).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn mode_laplacian_is_frequency_squared() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 1..=4 {
            let alpha = random_mode(&mut rng, n);
            let a2: f64 = alpha.iter().map(|a| a * a).sum();
            for k in 0..=n {
                let dim = binomial(n, k);
                let mut lap = DMatrix::<Complex64>::zeros(dim, dim);
                if k > 0 {
                    lap += block_exterior(&alpha, n, k - 1, ModeOp::D).unwrap()
                        * block_exterior(&alpha, n, k, ModeOp::DStar).unwrap();
                }
                if k < n {
                    lap += block_exterior(&alpha, n, k + 1, ModeOp::DStar).unwrap()
                        * block_exterior(&alpha, n, k, ModeOp::D).unwrap();
                }
                let expected = DMatrix::<Complex64>::identity(dim, dim) * Complex64::from(a2);
                assert!((lap - expected).norm() < 1e-12 * (a2 + 1.0));
            }
        }
    }

    #[test]
    fn star_squares_to_sign_and_conjugates_d() {
        for n in 1..=5 {
            for k in 0..=n {
                let ss = star_matrix(n, n - k) * star_matrix(n, k);
                let sign = if (k * (n - k)) % 2 == 0 { 1.0 } else { -1.0 };
                let expected = DMatrix::<Complex64>::identity(ss.nrows(), ss.ncols())
                    * Complex64::from(sign);
                assert!((ss - expected).norm() < 1e-14, "** failed n={n} k={k}");
            }
        }
        // d* = (-1)^(n(k+1)+1) * d * on k-forms.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=4 {
            let alpha = random_mode(&mut rng, n);
            for k in 1..=n {
                let ds = block_exterior(&alpha, n, k, ModeOp::DStar).unwrap();
                let via_star = star_matrix(n, n - k + 1)
                    * block_exterior(&alpha, n, n - k, ModeOp::D).unwrap()
                    * star_matrix(n, k);
                let sign = if (n * (k + 1) + 1) % 2 == 0 { 1.0 } else { -1.0 };
                assert!(
                    (ds - via_star * Complex64::from(sign)).norm() < 1e-12,
                    "d* vs *d* failed n={n} k={k}"
                );
            }
        }
    }

    #[test]
    fn projectors_split_the_mode_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in 2..=5 {
            let alpha = random_mode(&mut rng, n);
            let a2: f64 = alpha.iter().map(|a| a * a).sum();
            for k in 1..n {
                let e = exact_projector(&alpha, n, k).unwrap();
                let c = coexact_projector(&alpha, n, k).unwrap();
                let dim = binomial(n, k);
                let id = DMatrix::<Complex64>::identity(dim, dim);
                assert!((&e * &e - &e).norm() < 1e-12);
                assert!((&c * &c - &c).norm() < 1e-12);
                assert!((&e * &c).norm() < 1e-12);
                assert!((&e + &c - id).norm() < 1e-12);
                // Traces count the exact and coexact dimensions.
                let (dm, dp) = block_dims(n, k);
                assert!((e.trace().re - dm as f64).abs() < 1e-10);
                assert!((c.trace().re - dp as f64).abs() < 1e-10);
                assert_eq!(dm + dp, dim);
                // trace(a ∧ i_a) = |a|^2 C(n-1, k-1).
                let t = (wedge_matrix(&alpha, n, k - 1) * contract_matrix(&alpha, n, k)).trace();
                assert!((t.re - a2 * dm as f64).abs() < 1e-9 * (a2 + 1.0));
            }
        }
    }

    #[test]
    fn block_dims_match_numeric_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=5 {
            let alpha = random_mode(&mut rng, n);
            let a2: f64 = alpha.iter().map(|a| a * a).sum();
            for k in 1..n {
                let e = exact_projector(&alpha, n, k).unwrap();
                let svd = e.svd(false, false);
                let rank = svd
                    .singular_values
                    .iter()
                    .filter(|&&s| s > 1e-9 * (a2 + 1.0))
                    .count();
                assert_eq!(rank, block_dims(n, k).0, "rank mismatch n={n} k={k}");
            }
        }
    }

    #[test]
    fn curl_basis_diagonalizes_star_d() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let alpha = random_mode(&mut rng, 3);
            let basis = curl_eigenbasis(&alpha).unwrap();
            // The curl on one mode is * d = i a x ., as a 3x3 matrix.
            let m = star_matrix(3, 2) * block_exterior(&alpha, 3, 1, ModeOp::D).unwrap();
            for (vec, sign) in [(&basis.plus, 1.0), (&basis.minus, -1.0)] {
                let x = DMatrix::from_column_slice(3, 1, vec.as_slice());
                let y = &m * &x;
                let expected = &x * Complex64::from(sign * basis.freq);
                assert!((y - expected).norm() < 1e-10, "curl eigenvector failed");
                // Divergence-free: contraction with the mode vanishes.
                let div: Complex64 = alpha.iter().zip(vec.iter()).map(|(a, e)| a * e).sum();
                assert!(div.norm() < 1e-12);
            }
            assert!(hermitian_dot(&basis.plus, &basis.minus).norm() < 1e-12);
            assert!((hermitian_dot(&basis.plus, &basis.plus).re - 1.0).abs() < 1e-12);
            // Conjugates are the eigenvectors at the opposite mode with the
            // same eigenvalues, which keeps real fields consistent.
            let neg: Vec<f64> = alpha.iter().map(|a| -a).collect();
            let mneg = star_matrix(3, 2) * block_exterior(&neg, 3, 1, ModeOp::D).unwrap();
            let conj_plus: Vec<Complex64> = basis.plus.iter().map(|z| z.conj()).collect();
            let x = DMatrix::from_column_slice(3, 1, &conj_plus);
            let y = &mneg * &x;
            let expected = &x * Complex64::from(basis.freq);
            assert!((y - expected).norm() < 1e-10);
        }
    }

    #[test]
    fn ties_in_the_axis_pick_go_to_the_lowest_index() {
        let b = curl_eigenbasis(&[1.0, 1.0, 1.0]).unwrap();
        // q = 0: u ∝ â x e_0 = (0, 1, -1)/sqrt(2) up to normalization.
        let u0 = (b.plus[0] + b.minus[0]) / 2.0;
        assert!(u0.norm() < 1e-14);
    }
}
