//! Lattice-to-continuum scaling of the massless free field.
//!
//! A periodic box with `N` sites per axis discretizes the torus `[0, 2pi)^n`
//! at mesh `eps = 2pi/N`. Continuum k-forms are carried to the lattice by
//! `phi_eps(cell) = eps^k phi_I(x_base)`, the inverse temperature runs as
//! `beta_eps = eps^(n-2k-2)`, and the observable is the rescaled pairing
//! `eps^(n-2k) (A_eps, phi_eps)`. Operators are never rescaled.

use std::sync::Arc;

use crate::complex::{LatticeComplex, Topology};
use crate::field::FieldSpec;
use crate::form::LatticeForm;
use crate::sample::sample_field;
use crate::solve::poisson_solve;
use crate::{Error, Result};

/// Mesh width of the `N`-site periodic discretization of `[0, 2pi)^n`.
pub fn mesh(n_side: usize) -> f64 {
    2.0 * std::f64::consts::PI / n_side as f64
}

/// Scaling of the inverse temperature with the mesh.
pub fn scaling_beta(n: usize, k: usize, eps: f64) -> f64 {
    eps.powi(n as i32 - 2 * k as i32 - 2)
}

/// Stencil eigenvalue of the periodic lattice Laplacian at integer mode
/// `alpha`: `sum_d 4 sin^2(pi alpha_d / N)`.
pub fn lattice_mode_eigenvalue(alpha: &[i64], n_side: usize) -> f64 {
    alpha
        .iter()
        .map(|&a| {
            let t = (std::f64::consts::PI * a as f64 / n_side as f64).sin();
            4.0 * t * t
        })
        .sum()
}

/// Discretized cosine k-form: `eps^k cos(alpha . x + phase)` on the cells of
/// one component, zero elsewhere.
pub fn cosine_form(
    complex: &Arc<LatticeComplex>,
    k: usize,
    comp: usize,
    alpha: &[i64],
    phase: f64,
) -> Result<LatticeForm> {
    let n = complex.n();
    if alpha.len() != n {
        return Err(Error::InvalidArgument("mode dimension mismatch".into()));
    }
    if complex.topology() != Topology::Periodic {
        return Err(Error::InvalidArgument("scaling probes live on periodic boxes".into()));
    }
    let n_side = complex.extents()[0];
    if complex.extents().iter().any(|&e| e != n_side) {
        return Err(Error::InvalidArgument("scaling boxes are cubical".into()));
    }
    let eps = mesh(n_side);
    let amp = eps.powi(k as i32);
    let mut f = LatticeForm::zeros(complex.clone(), k)?;
    let range = complex.component_range(k, comp);
    let grid: Vec<usize> = complex.component_grid(k, comp).to_vec();
    let vals = &mut f.values_mut()[range];
    let mut idx = vec![0usize; n];
    for v in vals.iter_mut() {
        let dot: f64 = idx
            .iter()
            .zip(alpha)
            .map(|(&g, &a)| a as f64 * (g as f64) * eps)
            .sum();
        *v = amp * (dot + phase).cos();
        let mut d = n;
        while d > 0 {
            d -= 1;
            idx[d] += 1;
            if idx[d] < grid[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    Ok(f)
}

/// One mesh size of a scaling profile.
#[derive(Clone, Copy, Debug)]
pub struct ScalingPoint {
    pub n_side: usize,
    /// Exact variance of the rescaled pairing, through a Poisson solve.
    pub variance: f64,
    /// The same variance in closed form, `eps^(n+2) N^n / (2 lambda_latt)`.
    pub closed_form: f64,
    /// Continuum limit `(2pi)^n / (2 |alpha|^2)`.
    pub continuum: f64,
}

/// Exact variance of `eps^(n-2k) (A_eps, phi_eps)` for the massless free
/// field at `beta_eps`, evaluated at each box size, with the closed-form and
/// continuum values alongside.
pub fn scaling_profile(
    n: usize,
    k: usize,
    alpha: &[i64],
    comp: usize,
    sides: &[usize],
) -> Result<Vec<ScalingPoint>> {
    let a2: f64 = alpha.iter().map(|&a| (a * a) as f64).sum();
    if a2 == 0.0 {
        return Err(Error::InvalidArgument("scaling probe needs a nonzero mode".into()));
    }
    let continuum = (2.0 * std::f64::consts::PI).powi(n as i32) / (2.0 * a2);
    let mut points = Vec::with_capacity(sides.len());
    for &n_side in sides {
        if alpha.iter().any(|&a| 2 * a.unsigned_abs() as usize >= n_side) {
            return Err(Error::InvalidArgument(format!(
                "mode {alpha:?} is not resolved by {n_side} sites"
            )));
        }
        let eps = mesh(n_side);
        let complex = Arc::new(LatticeComplex::periodic(&vec![n_side; n])?);
        let phi = cosine_form(&complex, k, comp, alpha, 0.0)?;
        let green = poisson_solve(&phi, 1e-12)?;
        let beta = scaling_beta(n, k, eps);
        let variance =
            eps.powi(2 * (n as i32 - 2 * k as i32)) / beta * phi.dot(&green)?;
        let lam = lattice_mode_eigenvalue(alpha, n_side);
        let closed_form =
            eps.powi(n as i32 + 2) * (n_side as f64).powi(n as i32) / (2.0 * lam);
        points.push(ScalingPoint {
            n_side,
            variance,
            closed_form,
            continuum,
        });
    }
    Ok(points)
}

/// Monte Carlo samples of the rescaled pairing for the massless free field
/// at `beta_eps`, for comparison against [`scaling_profile`].
pub fn scaled_pairing_samples(
    n: usize,
    k: usize,
    alpha: &[i64],
    comp: usize,
    n_side: usize,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let eps = mesh(n_side);
    let complex = Arc::new(LatticeComplex::periodic(&vec![n_side; n])?);
    let phi = cosine_form(&complex, k, comp, alpha, 0.0)?;
    let beta = scaling_beta(n, k, eps);
    let spec = FieldSpec::lattice(k, 1.0, beta, &vec![n_side; n], Topology::Periodic);
    let scale = eps.powi(n as i32 - 2 * k as i32);
    let mut out = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let x = sample_field(&spec, seed, i as u64)?;
        let f = x.form().expect("lattice sampler returns a form");
        out.push(scale * f.dot(&phi)?);
    }
    Ok(out)
}
