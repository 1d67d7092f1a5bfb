//! Poisson solves and Hodge projections.

use crate::complex::LatticeComplex;
use crate::form::{dot_chunked, sum_chunked, LatticeForm};
use crate::ops::{
    apply_component_neg_laplacian, codifferential, exterior_derivative, increment,
};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Default relative residual target for Poisson solves.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Relative residual target: `|Δg + f| <= tol * |f|`.
    pub tol: f64,
    /// Iteration cap as a multiple of the component size.
    pub max_iter_factor: usize,
    /// Components at most this large may fall back to a dense direct solve.
    pub dense_threshold: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter_factor: 10,
            dense_threshold: 4000,
        }
    }
}

/// Whether degree-k components have constant functions in the kernel of `Δ`.
fn is_singular(c: &LatticeComplex, k: usize) -> bool {
    c.is_periodic() || k == 0
}

fn remove_mean(v: &mut [f64]) {
    let mean = sum_chunked(v) / v.len() as f64;
    for x in v {
        *x -= mean;
    }
}

/// Diagonal of `-Δ` on one component, for Jacobi preconditioning.
fn component_diagonal(c: &LatticeComplex, k: usize, comp: usize) -> Vec<f64> {
    let n = c.n();
    let set = c.axis_sets(k)[comp].clone();
    let grid = c.component_grid(k, comp).to_vec();
    let len: usize = grid.iter().product();
    let mut diag = vec![0.0; len];
    let periodic = c.is_periodic();
    let mut base = vec![0usize; n];
    for entry in diag.iter_mut() {
        let mut acc = 0.0;
        for d in 0..n {
            if periodic || set.contains(&(d as u8)) {
                acc += 2.0;
            } else {
                if base[d] > 0 {
                    acc += 1.0;
                }
                if base[d] + 1 < grid[d] {
                    acc += 1.0;
                }
            }
        }
        *entry = acc;
        increment(&mut base, &grid);
    }
    diag
}

/// One conjugate-gradient pass for `-Δ x = b` on a component, continuing from
/// the current `x`. Returns the true residual norm on exit.
fn cg_component(
    c: &LatticeComplex,
    k: usize,
    comp: usize,
    b: &[f64],
    x: &mut [f64],
    tol_abs: f64,
    cap: usize,
    singular: bool,
) -> f64 {
    let len = b.len();
    let diag = component_diagonal(c, k, comp);
    let mut r = vec![0.0; len];
    let mut ap = vec![0.0; len];
    apply_component_neg_laplacian(c, k, comp, x, &mut ap);
    for i in 0..len {
        r[i] = b[i] - ap[i];
    }
    if singular {
        remove_mean(&mut r);
    }
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz = dot_chunked(&r, &z);
    let mut best = f64::INFINITY;
    let mut stalled = 0usize;
    for iter in 0..cap {
        let rnorm = dot_chunked(&r, &r).sqrt();
        if rnorm <= tol_abs {
            break;
        }
        if rnorm < 0.9999 * best {
            best = rnorm;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 500 {
                break;
            }
        }
        apply_component_neg_laplacian(c, k, comp, &p, &mut ap);
        let pap = dot_chunked(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..len {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if singular && iter % 64 == 63 {
            remove_mean(&mut r);
        }
        for i in 0..len {
            z[i] = r[i] / diag[i];
        }
        let rz_next = dot_chunked(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..len {
            p[i] = z[i] + beta * p[i];
        }
    }
    if singular {
        remove_mean(x);
    }
    apply_component_neg_laplacian(c, k, comp, x, &mut ap);
    for i in 0..len {
        r[i] = b[i] - ap[i];
    }
    if singular {
        remove_mean(&mut r);
    }
    dot_chunked(&r, &r).sqrt()
}

/// Dense `-Δ` on one component, assembled column by column.
pub fn dense_component_matrix(c: &LatticeComplex, k: usize, comp: usize) -> DMatrix<f64> {
    let len = c.component_range(k, comp).len();
    let mut a = DMatrix::zeros(len, len);
    let mut e = vec![0.0; len];
    let mut col = vec![0.0; len];
    for j in 0..len {
        e[j] = 1.0;
        apply_component_neg_laplacian(c, k, comp, &e, &mut col);
        e[j] = 0.0;
        for i in 0..len {
            a[(i, j)] = col[i];
        }
    }
    a
}

fn dense_solve(
    c: &LatticeComplex,
    k: usize,
    comp: usize,
    b: &[f64],
    singular: bool,
) -> Result<Vec<f64>> {
    let len = b.len();
    let mut a = dense_component_matrix(c, k, comp);
    if singular {
        // Shift by a rank-one term on the constant direction; with a
        // mean-zero right-hand side this leaves the solution unchanged.
        let shift = 1.0 / len as f64;
        for i in 0..len {
            for j in 0..len {
                a[(i, j)] += shift;
            }
        }
    }
    let sol = a
        .lu()
        .solve(&DVector::from_column_slice(b))
        .ok_or(Error::SolverStalled {
            residual: f64::NAN,
            iterations: 0,
        })?;
    let mut out: Vec<f64> = sol.iter().copied().collect();
    if singular {
        remove_mean(&mut out);
    }
    Ok(out)
}

/// Solves `-Δ g = f` with the default tolerance.
pub fn poisson_solve(f: &LatticeForm, tol: f64) -> Result<LatticeForm> {
    poisson_solve_with(
        f,
        &SolveOptions {
            tol,
            ..SolveOptions::default()
        },
    )
}

/// Solves `-Δ g = f` component by component (conjugate gradients with Jacobi
/// preconditioning, dense fallback on small components).
///
/// When constants are harmonic (0-forms, or any degree on a periodic box) the
/// right-hand side must be mean-zero per component and the solution is
/// returned mean-zero per component.
pub fn poisson_solve_with(f: &LatticeForm, opts: &SolveOptions) -> Result<LatticeForm> {
    let c = f.complex().clone();
    let k = f.degree();
    let singular = is_singular(&c, k);
    let mut out = LatticeForm::zeros(c.clone(), k)?;
    for comp in 0..c.component_count(k) {
        let range = c.component_range(k, comp);
        let mut b = f.values()[range.clone()].to_vec();
        let bnorm = dot_chunked(&b, &b).sqrt();
        if bnorm == 0.0 {
            continue;
        }
        if singular {
            let len = b.len() as f64;
            let mean = sum_chunked(&b) / len;
            let rel = mean.abs() * len.sqrt() / bnorm;
            if rel > 0.5 * opts.tol {
                return Err(Error::NotMeanZero { magnitude: rel });
            }
            for v in &mut b {
                *v -= mean;
            }
        }
        let tol_abs = 0.5 * opts.tol * bnorm;
        let cap = opts.max_iter_factor.saturating_mul(b.len());
        let mut x = vec![0.0; b.len()];
        let mut residual = f64::INFINITY;
        for _ in 0..3 {
            residual = cg_component(&c, k, comp, &b, &mut x, tol_abs, cap, singular);
            if residual <= tol_abs {
                break;
            }
        }
        if residual > tol_abs {
            if b.len() <= opts.dense_threshold {
                x = dense_solve(&c, k, comp, &b, singular)?;
            } else {
                return Err(Error::SolverStalled {
                    residual: residual / bnorm,
                    iterations: cap,
                });
            }
        }
        out.values_mut()[range].copy_from_slice(&x);
    }
    Ok(out)
}

/// One part of the Hodge decomposition `f = d a + d* b + h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HodgePart {
    Exact,
    Coexact,
    Harmonic,
}

/// Orthogonal projection of `f` onto its exact, coexact, or harmonic part.
pub fn hodge_project(f: &LatticeForm, part: HodgePart) -> Result<LatticeForm> {
    let k = f.degree();
    let n = f.complex().n();
    let exact = |f: &LatticeForm| -> Result<LatticeForm> {
        if k == 0 {
            return LatticeForm::zeros(f.complex().clone(), 0);
        }
        let u = poisson_solve(&codifferential(f)?, DEFAULT_TOL)?;
        exterior_derivative(&u)
    };
    let coexact = |f: &LatticeForm| -> Result<LatticeForm> {
        if k == n {
            return LatticeForm::zeros(f.complex().clone(), k);
        }
        let u = poisson_solve(&exterior_derivative(f)?, DEFAULT_TOL)?;
        codifferential(&u)
    };
    match part {
        HodgePart::Exact => exact(f),
        HodgePart::Coexact => coexact(f),
        HodgePart::Harmonic => {
            let mut h = f.clone();
            h.axpy(-1.0, &exact(f)?)?;
            h.axpy(-1.0, &coexact(f)?)?;
            Ok(h)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{LatticeComplex, Topology};
    use crate::ops::neg_laplacian;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn random_form(c: &Arc<LatticeComplex>, k: usize, seed: u64) -> LatticeForm {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..c.cell_count(k))
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        LatticeForm::from_values(c.clone(), k, values).unwrap()
    }

    #[test]
    fn poisson_residual_meets_tolerance() {
        let boxes = [
            Arc::new(LatticeComplex::free(&[4, 5]).unwrap()),
            Arc::new(LatticeComplex::periodic(&[4, 4]).unwrap()),
            Arc::new(LatticeComplex::free(&[3, 3, 3]).unwrap()),
            Arc::new(LatticeComplex::periodic(&[3, 4, 3]).unwrap()),
        ];
        for c in boxes {
            for k in 0..=c.n() {
                let mut f = random_form(&c, k, 900 + k as u64);
                if is_singular(&c, k) {
                    f.remove_component_means();
                }
                let g = poisson_solve(&f, 1e-11).unwrap();
                let mut r = neg_laplacian(&g).unwrap();
                r.axpy(-1.0, &f).unwrap();
                assert!(
                    r.norm() <= 1e-11 * f.norm(),
                    "residual {} on {:?} k={k}",
                    r.norm() / f.norm(),
                    c.topology()
                );
            }
        }
    }

    #[test]
    fn cg_matches_dense_solve() {
        let c = Arc::new(LatticeComplex::free(&[4, 3]).unwrap());
        for k in 1..=2 {
            let f = random_form(&c, k, 33);
            let g = poisson_solve(&f, 1e-12).unwrap();
            for comp in 0..c.component_count(k) {
                let range = c.component_range(k, comp);
                let dense = dense_solve(&c, k, comp, &f.values()[range.clone()], false).unwrap();
                for (a, b) in g.values()[range].iter().zip(&dense) {
                    assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn non_mean_zero_input_is_rejected() {
        let c = Arc::new(LatticeComplex::free(&[3, 3]).unwrap());
        let f = LatticeForm::from_fn(c, 0, |cell| 1.0 + cell.base[0] as f64).unwrap();
        match poisson_solve(&f, 1e-10) {
            Err(Error::NotMeanZero { .. }) => {}
            other => panic!("expected NotMeanZero, got {other:?}"),
        }

        let p = Arc::new(LatticeComplex::periodic(&[3, 3]).unwrap());
        let f = LatticeForm::from_fn(p, 1, |cell| if cell.axes[0] == 0 { 1.0 } else { 0.0 }).unwrap();
        assert!(poisson_solve(&f, 1e-10).is_err());
    }

    #[test]
    fn solutions_are_mean_zero_on_singular_degrees() {
        let c = Arc::new(LatticeComplex::periodic(&[4, 3]).unwrap());
        let mut f = random_form(&c, 1, 55);
        f.remove_component_means();
        let g = poisson_solve(&f, 1e-10).unwrap();
        for comp in 0..c.component_count(1) {
            let range = c.component_range(1, comp);
            let sum: f64 = g.values()[range].iter().sum();
            assert!(sum.abs() < 1e-8);
        }
    }

    #[test]
    fn hodge_parts_sum_to_identity_and_are_orthogonal() {
        for c in [
            Arc::new(LatticeComplex::free(&[3, 4]).unwrap()),
            Arc::new(LatticeComplex::periodic(&[4, 4]).unwrap()),
            Arc::new(LatticeComplex::new(&[2, 3, 2], Topology::Free).unwrap()),
        ] {
            for k in 0..=c.n() {
                let f = random_form(&c, k, 77 + k as u64);
                let e = hodge_project(&f, HodgePart::Exact).unwrap();
                let x = hodge_project(&f, HodgePart::Coexact).unwrap();
                let h = hodge_project(&f, HodgePart::Harmonic).unwrap();
                let mut sum = e.clone();
                sum.axpy(1.0, &x).unwrap();
                sum.axpy(1.0, &h).unwrap();
                sum.axpy(-1.0, &f).unwrap();
                assert!(sum.norm() < 1e-8 * (f.norm() + 1.0), "parts do not sum");
                let scale = f.norm().powi(2) + 1.0;
                assert!(e.dot(&x).unwrap().abs() < 1e-8 * scale);
                assert!(e.dot(&h).unwrap().abs() < 1e-8 * scale);
                assert!(x.dot(&h).unwrap().abs() < 1e-8 * scale);
            }
        }
    }

    #[test]
    fn projections_are_idempotent() {
        let c = Arc::new(LatticeComplex::periodic(&[4, 4]).unwrap());
        let f = random_form(&c, 1, 99);
        for part in [HodgePart::Exact, HodgePart::Coexact, HodgePart::Harmonic] {
            let once = hodge_project(&f, part).unwrap();
            let twice = hodge_project(&once, part).unwrap();
            let mut diff = twice.clone();
            diff.axpy(-1.0, &once).unwrap();
            assert!(diff.norm() < 1e-7 * (f.norm() + 1.0), "{part:?} not idempotent");
        }
    }

    #[test]
    fn free_box_harmonic_zero_forms_are_constants() {
        let c = Arc::new(LatticeComplex::free(&[3, 3]).unwrap());
        let f = random_form(&c, 0, 13);
        let h = hodge_project(&f, HodgePart::Harmonic).unwrap();
        let mean = f.mean();
        for &v in h.values() {
            assert!((v - mean).abs() < 1e-8);
        }
    }
}
