//! Samplers for Gaussian form fields, with exact covariance oracles.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::complex::{binomial, LatticeComplex, Topology};
use crate::field::{FieldSpec, Geometry, Variant};
use crate::form::LatticeForm;
use crate::mode::{block_exterior, contract_apply, curl_eigenbasis, wedge_apply, ModeOp};
use crate::ops::{codifferential, exterior_derivative, increment};
use crate::rng::{standard_normal, stream_rng};
use crate::solve::{poisson_solve, DEFAULT_TOL};
use crate::spectrum::{is_positive_mode, TorusSpectrum, ValueKind};
use crate::stats::{jackknife_covariance, Jackknife};
use crate::{Error, Result};

/// One realization of a field.
#[derive(Clone, Debug)]
pub struct FieldSample {
    pub seed: u64,
    pub sample_idx: u64,
    pub data: SampleData,
}

/// Sampled coefficients: spectral on the torus, cell values on a lattice.
#[derive(Clone, Debug)]
pub enum SampleData {
    Spectrum(TorusSpectrum),
    Form(LatticeForm),
}

impl FieldSample {
    pub fn spectrum(&self) -> Option<&TorusSpectrum> {
        match &self.data {
            SampleData::Spectrum(sp) => Some(sp),
            SampleData::Form(_) => None,
        }
    }

    pub fn form(&self) -> Option<&LatticeForm> {
        match &self.data {
            SampleData::Form(f) => Some(f),
            SampleData::Spectrum(_) => None,
        }
    }
}

/// Draws the field described by `spec`. The same `(seed, sample_idx)` pair
/// gives bit-identical output regardless of scheduling.
pub fn sample_field(spec: &FieldSpec, seed: u64, sample_idx: u64) -> Result<FieldSample> {
    spec.validate()?;
    let data = match &spec.geometry {
        Geometry::Torus { cutoff } => {
            SampleData::Spectrum(sample_torus(spec, *cutoff, seed, sample_idx)?)
        }
        Geometry::Lattice { extents, topology } => SampleData::Form(sample_lattice(
            spec, extents, *topology, seed, sample_idx,
        )?),
    };
    Ok(FieldSample {
        seed,
        sample_idx,
        data,
    })
}

fn sample_torus(
    spec: &FieldSpec,
    cutoff: i64,
    seed: u64,
    sample_idx: u64,
) -> Result<TorusSpectrum> {
    let kind = match spec.matrix_size {
        Some(size) => ValueKind::Matrix(size),
        None => ValueKind::RealScalar,
    };
    let mut sp = TorusSpectrum::zeros(spec.n, spec.k, cutoff, kind)?;
    let comps = sp.component_count();
    let vdim = kind.dim();
    let stride = sp.mode_stride();
    for idx in 0..sp.mode_count() {
        let alpha = sp.mode_at(idx);
        let zero = alpha.iter().all(|&a| a == 0);
        if !zero && !is_positive_mode(&alpha) {
            continue;
        }
        // Draw order: components in axis-set order, value-basis entries
        // within a component, real part before imaginary part. The zero
        // mode keeps only the real draw so the field stays real.
        let mut rng = stream_rng(seed, sample_idx, idx as u64);
        let mut z = vec![Complex64::ZERO; stride];
        for v in z.iter_mut() {
            let x = standard_normal(&mut rng);
            let y = standard_normal(&mut rng);
            *v = if zero {
                Complex64::new(x, 0.0)
            } else {
                Complex64::new(x, y) * std::f64::consts::FRAC_1_SQRT_2
            };
        }
        let alpha_f: Vec<f64> = alpha.iter().map(|&a| a as f64).collect();
        let mut out = vec![Complex64::ZERO; stride];
        for b in 0..vdim {
            let zc: Vec<Complex64> = (0..comps).map(|c| z[c * vdim + b]).collect();
            let oc = transform_mode(spec, &alpha_f, &zc)?;
            for c in 0..comps {
                out[c * vdim + b] = oc[c];
            }
        }
        sp.coeff_mut(idx).copy_from_slice(&out);
        if !zero {
            let neg: Vec<i64> = alpha.iter().map(|&a| -a).collect();
            let nidx = sp.mode_index(&neg).expect("mirror mode is in range");
            for (dst, src) in sp.coeff_mut(nidx).iter_mut().zip(&out) {
                *dst = src.conj();
            }
        }
    }
    Ok(sp)
}

/// `E z` with `E = a ∧ (iota_a ·) / |a|^2`, the projector onto the exact
/// (gradient) part of a nonzero mode.
fn exact_part(alpha: &[f64], z: &[Complex64], n: usize, k: usize) -> Vec<Complex64> {
    if k == 0 {
        return vec![Complex64::ZERO; z.len()];
    }
    let a2: f64 = alpha.iter().map(|a| a * a).sum();
    let inner = contract_apply(alpha, z, n, k);
    let outer = wedge_apply(alpha, &inner, n, k - 1);
    outer.iter().map(|v| v / a2).collect()
}

/// `E* z` with `E* = iota_a (a ∧ ·) / |a|^2`, the projector onto the coexact
/// part of a nonzero mode.
fn coexact_part(alpha: &[f64], z: &[Complex64], n: usize, k: usize) -> Vec<Complex64> {
    if k == n {
        return vec![Complex64::ZERO; z.len()];
    }
    let a2: f64 = alpha.iter().map(|a| a * a).sum();
    let outer = wedge_apply(alpha, z, n, k);
    let inner = contract_apply(alpha, &outer, n, k + 1);
    inner.iter().map(|v| v / a2).collect()
}

/// Per-mode coloring map of the variant applied to a white-noise component
/// vector, including the `beta^{-1/2}` scale. Linear in `z`.
fn transform_mode(spec: &FieldSpec, alpha: &[f64], z: &[Complex64]) -> Result<Vec<Complex64>> {
    let (n, k, s) = (spec.n, spec.k, spec.s);
    let a2: f64 = alpha.iter().map(|a| a * a).sum();
    let zero = a2 == 0.0;
    let mut out = match &spec.variant {
        Variant::Plain => {
            let t = if zero {
                if s == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                a2.powf(-s / 2.0)
            };
            scaled(z, t)
        }
        Variant::Massive { lambda } => scaled(z, (a2 + lambda).powf(-s / 2.0)),
        Variant::ExactProjected => {
            if zero {
                vec![Complex64::ZERO; z.len()]
            } else {
                scaled(&exact_part(alpha, z, n, k), a2.powf(-s / 2.0))
            }
        }
        Variant::CoexactProjected => {
            if zero {
                vec![Complex64::ZERO; z.len()]
            } else {
                scaled(&coexact_part(alpha, z, n, k), a2.powf(-s / 2.0))
            }
        }
        Variant::Proca { lambda } => {
            if zero {
                scaled(z, lambda.powf(-0.5))
            } else {
                let mut e = exact_part(alpha, z, n, k);
                let c = coexact_part(alpha, z, n, k);
                let te = lambda.powf(-0.5);
                let tc = (a2 + lambda).powf(-0.5);
                for (ev, cv) in e.iter_mut().zip(&c) {
                    *ev = *ev * te + *cv * tc;
                }
                e
            }
        }
        Variant::ChernSimons { lambda } => {
            if zero {
                vec![Complex64::ZERO; z.len()]
            } else {
                let basis = curl_eigenbasis(alpha)?;
                let vp = (1.0 + lambda / basis.freq).recip();
                let vm = (1.0 - lambda / basis.freq).recip();
                let zp: Complex64 = z.iter().zip(&basis.plus).map(|(a, b)| a * b.conj()).sum();
                let zm: Complex64 = z.iter().zip(&basis.minus).map(|(a, b)| a * b.conj()).sum();
                (0..3)
                    .map(|d| basis.plus[d] * zp * vp.sqrt() + basis.minus[d] * zm * vm.sqrt())
                    .collect()
            }
        }
    };
    let scale = spec.beta.sqrt().recip();
    for v in out.iter_mut() {
        *v *= scale;
    }
    Ok(out)
}

fn scaled(z: &[Complex64], t: f64) -> Vec<Complex64> {
    z.iter().map(|v| v * t).collect()
}

/// Covariance matrix `M(alpha) = T T^*` of one mode's component vector,
/// where `T` is the coloring map of the variant.
pub fn mode_covariance(spec: &FieldSpec, alpha: &[i64]) -> Result<DMatrix<Complex64>> {
    spec.validate()?;
    mode_covariance_unchecked(spec, alpha)
}

fn mode_covariance_unchecked(spec: &FieldSpec, alpha: &[i64]) -> Result<DMatrix<Complex64>> {
    let comps = binomial(spec.n, spec.k);
    let alpha_f: Vec<f64> = alpha.iter().map(|&a| a as f64).collect();
    let mut t = DMatrix::zeros(comps, comps);
    for c in 0..comps {
        let mut unit = vec![Complex64::ZERO; comps];
        unit[c] = Complex64::ONE;
        let col = transform_mode(spec, &alpha_f, &unit)?;
        for r in 0..comps {
            t[(r, c)] = col[r];
        }
    }
    Ok(&t * t.adjoint())
}

/// Applies the covariance operator of `spec` to a spectrum, multiplying each
/// mode coefficient by `M(alpha)`.
pub fn covariance_apply(spec: &FieldSpec, phi: &TorusSpectrum) -> Result<TorusSpectrum> {
    spec.validate()?;
    if phi.n() != spec.n || phi.degree() != spec.k {
        return Err(Error::InvalidArgument(
            "probe spectrum does not match the field spec".into(),
        ));
    }
    let comps = phi.component_count();
    let vdim = phi.value_kind().dim();
    let mut out = phi.clone();
    for idx in 0..phi.mode_count() {
        let alpha = phi.mode_at(idx);
        let m = mode_covariance_unchecked(spec, &alpha)?;
        let src = phi.coeff(idx).to_vec();
        let dst = out.coeff_mut(idx);
        for b in 0..vdim {
            for c in 0..comps {
                let mut acc = Complex64::ZERO;
                for d in 0..comps {
                    acc += m[(c, d)] * src[d * vdim + b];
                }
                dst[c * vdim + b] = acc;
            }
        }
    }
    Ok(out)
}

/// L2 pairing `(X, phi)`; real for reality-constrained spectra.
pub fn pairing(x: &TorusSpectrum, phi: &TorusSpectrum) -> Result<f64> {
    Ok(x.l2_dot(phi)?.re)
}

/// Exact covariance `Cov((X, phi), (X, psi))` of pairings against fixed
/// real probe spectra.
pub fn covariance_pairing(
    spec: &FieldSpec,
    phi: &TorusSpectrum,
    psi: &TorusSpectrum,
) -> Result<f64> {
    let cpsi = covariance_apply(spec, psi)?;
    Ok(cpsi.l2_dot(phi)?.re)
}

/// Monte Carlo estimate of `Cov((X, phi), (X, psi))` from fresh samples of
/// the field, with a jackknife standard error.
pub fn estimate_covariance(
    spec: &FieldSpec,
    phi: &TorusSpectrum,
    psi: &TorusSpectrum,
    n_samples: usize,
    seed: u64,
) -> Result<Jackknife> {
    let mut xs = Vec::with_capacity(n_samples);
    let mut ys = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let sample = sample_field(spec, seed, i as u64)?;
        let sp = sample
            .spectrum()
            .ok_or_else(|| Error::InvalidArgument("covariance estimation is torus-only".into()))?;
        xs.push(pairing(sp, phi)?);
        ys.push(pairing(sp, psi)?);
    }
    Ok(jackknife_covariance(&xs, &ys))
}

/// Compares the laws of `op_a(X_a)` and `op_b(X_b)` mode by mode (`None`
/// means the field itself) and returns the largest covariance-entry
/// difference over all modes up to the cutoff.
pub fn derived_law_defect(
    spec_a: &FieldSpec,
    op_a: Option<ModeOp>,
    spec_b: &FieldSpec,
    op_b: Option<ModeOp>,
    cutoff: i64,
) -> Result<f64> {
    spec_a.validate()?;
    spec_b.validate()?;
    if spec_a.n != spec_b.n {
        return Err(Error::InvalidArgument("law comparison needs equal dimensions".into()));
    }
    let n = spec_a.n;
    let span = (2 * cutoff + 1) as usize;
    let count = span.pow(n as u32);
    let mut digits = vec![0usize; n];
    let grid = vec![span; n];
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let alpha: Vec<i64> = digits.iter().map(|&d| d as i64 - cutoff).collect();
        let ma = pushforward(spec_a, op_a, &alpha)?;
        let mb = pushforward(spec_b, op_b, &alpha)?;
        if ma.shape() != mb.shape() {
            return Err(Error::InvalidArgument("pushforward degrees disagree".into()));
        }
        for (a, b) in ma.iter().zip(mb.iter()) {
            worst = worst.max((a - b).norm());
        }
        increment(&mut digits, &grid);
    }
    Ok(worst)
}

fn pushforward(
    spec: &FieldSpec,
    op: Option<ModeOp>,
    alpha: &[i64],
) -> Result<DMatrix<Complex64>> {
    let m = mode_covariance_unchecked(spec, alpha)?;
    match op {
        None => Ok(m),
        Some(op) => {
            let alpha_f: Vec<f64> = alpha.iter().map(|&a| a as f64).collect();
            let d = block_exterior(&alpha_f, spec.n, spec.k, op)?;
            Ok(&d * m * d.adjoint())
        }
    }
}

/// Gauge choice for spectra.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gauge {
    /// Remove the exact part of every nonzero mode; the result is
    /// spectrally divergence-free.
    Coulomb,
    /// Zero the given component on every mode with a nonzero frequency
    /// along that axis (1-forms only).
    Axial(usize),
}

/// Applies a gauge transformation mode by mode. `d` of the spectrum is
/// unchanged.
pub fn gauge_fix(x: &TorusSpectrum, gauge: Gauge) -> Result<TorusSpectrum> {
    let (n, k) = (x.n(), x.degree());
    let comps = x.component_count();
    let vdim = x.value_kind().dim();
    let mut out = x.clone();
    match gauge {
        Gauge::Coulomb => {
            for idx in 0..x.mode_count() {
                let alpha = x.mode_at(idx);
                if alpha.iter().all(|&a| a == 0) {
                    continue;
                }
                let alpha_f: Vec<f64> = alpha.iter().map(|&a| a as f64).collect();
                for b in 0..vdim {
                    let zc: Vec<Complex64> =
                        (0..comps).map(|c| x.coeff(idx)[c * vdim + b]).collect();
                    let e = exact_part(&alpha_f, &zc, n, k);
                    let oc = out.coeff_mut(idx);
                    for c in 0..comps {
                        oc[c * vdim + b] -= e[c];
                    }
                }
            }
        }
        Gauge::Axial(axis) => {
            if k != 1 {
                return Err(Error::InvalidArgument("axial gauge needs a 1-form".into()));
            }
            if axis >= n {
                return Err(Error::InvalidArgument(format!("axis {axis} out of range")));
            }
            for idx in 0..x.mode_count() {
                let alpha = x.mode_at(idx);
                if alpha[axis] == 0 {
                    continue;
                }
                let ax = alpha[axis] as f64;
                for b in 0..vdim {
                    let za = x.coeff(idx)[axis * vdim + b];
                    let oc = out.coeff_mut(idx);
                    for c in 0..comps {
                        let ac = alpha[c] as f64;
                        oc[c * vdim + b] -= za * (ac / ax);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// White noise on k-cells: independent standard normals in storage order.
fn white_noise_form(
    c: &Arc<LatticeComplex>,
    k: usize,
    seed: u64,
    sample_idx: u64,
    slot: u64,
) -> Result<LatticeForm> {
    let mut f = LatticeForm::zeros(c.clone(), k)?;
    let mut rng = stream_rng(seed, sample_idx, slot);
    for v in f.values_mut() {
        *v = standard_normal(&mut rng);
    }
    Ok(f)
}

fn sample_lattice(
    spec: &FieldSpec,
    extents: &[usize],
    topology: Topology,
    seed: u64,
    sample_idx: u64,
) -> Result<LatticeForm> {
    let c = Arc::new(LatticeComplex::new(extents, topology)?);
    let (n, k, s) = (spec.n, spec.k, spec.s);
    let rounded = s.round();
    let mut x = if (s - rounded).abs() < 1e-9 {
        // Integer regularity: color white noise by exact Poisson solves.
        // Odd s starts from d W + d* W', whose covariance is -Laplacian and
        // which is orthogonal to every harmonic form.
        let si = rounded as u64;
        let mut x = if si % 2 == 0 {
            white_noise_form(&c, k, seed, sample_idx, 0)?
        } else {
            let mut acc = LatticeForm::zeros(c.clone(), k)?;
            if k > 0 {
                let w = white_noise_form(&c, k - 1, seed, sample_idx, 1)?;
                acc.axpy(1.0, &exterior_derivative(&w)?)?;
            }
            if k < n {
                let w = white_noise_form(&c, k + 1, seed, sample_idx, 2)?;
                acc.axpy(1.0, &codifferential(&w)?)?;
            }
            acc
        };
        let solves = (si + 1) / 2;
        if solves > 0 {
            let singular = topology == Topology::Periodic || k == 0;
            if singular && si % 2 == 0 {
                x.remove_component_means();
            }
            for _ in 0..solves {
                x = poisson_solve(&x, DEFAULT_TOL)?;
            }
        }
        x
    } else {
        let w = white_noise_form(&c, k, seed, sample_idx, 0)?;
        lattice_spectral_filter(&w, |lam| {
            if lam < 1e-12 {
                0.0
            } else {
                lam.powf(-s / 2.0)
            }
        })?
    };
    x.scale(spec.beta.sqrt().recip());
    Ok(x)
}

/// Applies `weight(-Laplacian)` componentwise, diagonalizing the stencil
/// through eigendecompositions of its one-dimensional axis factors.
pub fn lattice_spectral_filter(
    f: &LatticeForm,
    weight: impl Fn(f64) -> f64,
) -> Result<LatticeForm> {
    let c = f.complex().clone();
    let k = f.degree();
    let n = c.n();
    let periodic = c.topology() == Topology::Periodic;
    let mut out = LatticeForm::zeros(c.clone(), k)?;
    for comp in 0..c.component_count(k) {
        let set = &c.axis_sets(k)[comp];
        let grid: Vec<usize> = c.component_grid(k, comp).to_vec();
        let mut qs = Vec::with_capacity(n);
        let mut evs = Vec::with_capacity(n);
        for (d, &m) in grid.iter().enumerate() {
            let kind = if periodic {
                AxisKind::Periodic
            } else if set.contains(&(d as u8)) {
                AxisKind::Dirichlet
            } else {
                AxisKind::Neumann
            };
            let eig = nalgebra::SymmetricEigen::new(one_dim_operator(m, kind));
            qs.push(eig.eigenvectors);
            evs.push(eig.eigenvalues.iter().copied().collect::<Vec<f64>>());
        }
        let range = c.component_range(k, comp);
        let mut vals = f.values()[range.clone()].to_vec();
        for d in 0..n {
            let pre: usize = grid[..d].iter().product();
            let post: usize = grid[d + 1..].iter().product();
            vals = axis_transform_real(&vals, pre, grid[d], post, &qs[d], true);
        }
        let mut idx = vec![0usize; n];
        for v in vals.iter_mut() {
            let lam: f64 = (0..n).map(|d| evs[d][idx[d]]).sum::<f64>().max(0.0);
            *v *= weight(lam);
            increment(&mut idx, &grid);
        }
        for d in 0..n {
            let pre: usize = grid[..d].iter().product();
            let post: usize = grid[d + 1..].iter().product();
            vals = axis_transform_real(&vals, pre, grid[d], post, &qs[d], false);
        }
        out.values_mut()[range].copy_from_slice(&vals);
    }
    Ok(out)
}

#[derive(Clone, Copy)]
enum AxisKind {
    Dirichlet,
    Neumann,
    Periodic,
}

/// One-dimensional factor of the componentwise Laplacian stencil.
fn one_dim_operator(m: usize, kind: AxisKind) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m {
        match kind {
            AxisKind::Dirichlet => a[(i, i)] = 2.0,
            AxisKind::Neumann => {
                a[(i, i)] = (i > 0) as usize as f64 + (i + 1 < m) as usize as f64
            }
            AxisKind::Periodic => a[(i, i)] = 2.0,
        }
        match kind {
            AxisKind::Periodic => {
                a[(i, (i + 1) % m)] -= 1.0;
                a[(i, (i + m - 1) % m)] -= 1.0;
            }
            _ => {
                if i + 1 < m {
                    a[(i, i + 1)] = -1.0;
                    a[(i + 1, i)] = -1.0;
                }
            }
        }
    }
    a
}

/// Dense transform along one axis: `q^T x` when `transpose` is set, `q x`
/// otherwise.
fn axis_transform_real(
    data: &[f64],
    pre: usize,
    len: usize,
    post: usize,
    q: &DMatrix<f64>,
    transpose: bool,
) -> Vec<f64> {
    let mut out = vec![0.0; data.len()];
    for p in 0..pre {
        for o in 0..len {
            let dst = (p * len + o) * post;
            for i in 0..len {
                let w = if transpose { q[(i, o)] } else { q[(o, i)] };
                if w == 0.0 {
                    continue;
                }
                let src = (p * len + i) * post;
                for t in 0..post {
                    out[dst + t] += w * data[src + t];
                }
            }
        }
    }
    out
}
