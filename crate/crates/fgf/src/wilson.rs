//! Wilson-loop observables for Gaussian one-forms on lattice boxes.

use crate::complex::{Cell, LatticeComplex};
use crate::form::LatticeForm;
use crate::ops::codifferential;
use crate::solve::{poisson_solve, DEFAULT_TOL};
use crate::{Error, Result};
use std::sync::Arc;

/// Axis-aligned rectangular loop together with the surface it bounds.
///
/// The loop current `gamma` is the codifferential of the plaquette
/// indicator `surface`, so `d* surface = gamma` and `d* gamma = 0` hold
/// by construction.
#[derive(Clone, Debug)]
pub struct RectLoop {
    complex: Arc<LatticeComplex>,
    plane: (usize, usize),
    corner: Vec<usize>,
    sides: (usize, usize),
    gamma: LatticeForm,
    surface: LatticeForm,
}

impl RectLoop {
    pub fn complex(&self) -> &Arc<LatticeComplex> {
        &self.complex
    }

    /// Plane axes in the order they were requested.
    pub fn plane(&self) -> (usize, usize) {
        self.plane
    }

    pub fn corner(&self) -> &[usize] {
        &self.corner
    }

    /// Side lengths along the first and second plane axis.
    pub fn sides(&self) -> (usize, usize) {
        self.sides
    }

    pub fn area(&self) -> f64 {
        (self.sides.0 * self.sides.1) as f64
    }

    pub fn perimeter(&self) -> f64 {
        (2 * (self.sides.0 + self.sides.1)) as f64
    }

    /// Loop current, a one-form supported on the rectangle boundary.
    pub fn gamma(&self) -> &LatticeForm {
        &self.gamma
    }

    /// Spanning two-form, an orientation-signed plaquette indicator.
    pub fn surface(&self) -> &LatticeForm {
        &self.surface
    }
}

/// Builds the rectangle with corner `corner`, extending `l` links along
/// `plane.0` and `h` links along `plane.1`. Swapping the plane axes
/// reverses the orientation.
pub fn build_rect_loop(
    complex: &Arc<LatticeComplex>,
    plane: (usize, usize),
    corner: &[usize],
    l: usize,
    h: usize,
) -> Result<RectLoop> {
    let n = complex.n();
    let (i, j) = plane;
    if i >= n || j >= n || i == j {
        return Err(Error::InvalidArgument(format!(
            "plane axes ({i}, {j}) invalid in dimension {n}"
        )));
    }
    if corner.len() != n {
        return Err(Error::InvalidArgument(format!(
            "corner has {} coordinates, expected {n}",
            corner.len()
        )));
    }
    if l == 0 || h == 0 {
        return Err(Error::InvalidArgument("rectangle sides must be positive".into()));
    }
    let extents = complex.extents();
    for d in 0..n {
        let reach = match d {
            _ if d == i => corner[d] + l,
            _ if d == j => corner[d] + h,
            _ => corner[d],
        };
        if reach >= extents[d] {
            return Err(Error::InvalidArgument(format!(
                "rectangle reaches vertex {reach} on axis {d}, box holds {}",
                extents[d]
            )));
        }
    }

    let sign = if i < j { 1.0 } else { -1.0 };
    let axes = vec![i.min(j) as u8, i.max(j) as u8];
    let mut surface = LatticeForm::zeros(complex.clone(), 2)?;
    let mut base = corner.to_vec();
    for a in 0..l {
        for b in 0..h {
            base[i] = corner[i] + a;
            base[j] = corner[j] + b;
            surface.set(
                &Cell {
                    base: base.clone(),
                    axes: axes.clone(),
                },
                sign,
            )?;
        }
    }
    let gamma = codifferential(&surface)?;
    Ok(RectLoop {
        complex: complex.clone(),
        plane,
        corner: corner.to_vec(),
        sides: (l, h),
        gamma,
        surface,
    })
}

/// Loop-current pairing `(gamma_a, (-laplacian)^{-1} gamma_b)`, the inverse
/// taken componentwise.
pub fn loop_pairing(a: &RectLoop, b: &RectLoop) -> Result<f64> {
    if !Arc::ptr_eq(&a.complex, &b.complex) {
        return Err(Error::ComplexMismatch);
    }
    let green = poisson_solve(&b.gamma, DEFAULT_TOL)?;
    a.gamma.dot(&green)
}

/// `E exp(i (A, gamma)) = exp(-(gamma, (-laplacian)^{-1} gamma) / (2 beta))`.
pub fn wilson_gaussian_expectation(lp: &RectLoop, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "beta must be positive, got {beta}"
        )));
    }
    let v = loop_pairing(lp, lp)?;
    Ok((-v / (2.0 * beta)).exp())
}

/// `Cov(W_1, W_2) = E W_1 E W_2 (exp(-(gamma_1, (-laplacian)^{-1} gamma_2) / beta) - 1)`.
pub fn loop_covariance(a: &RectLoop, b: &RectLoop, beta: f64) -> Result<f64> {
    let wa = wilson_gaussian_expectation(a, beta)?;
    let wb = wilson_gaussian_expectation(b, beta)?;
    let cross = loop_pairing(a, b)?;
    Ok(wa * wb * (-cross / beta).exp_m1())
}

/// Box geometry used by the confinement scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanTopology {
    /// Free box, `3L` vertices per axis.
    Full,
    /// Free box, `3L` vertices in the loop plane and `2M+1` across.
    Slab(usize),
}

/// Normalization whose plateau identifies the asymptotic law.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrackedRatio {
    Area,
    Perimeter,
    PerimeterLog,
}

#[derive(Clone, Debug)]
pub struct ScanRow {
    pub l: usize,
    pub h: usize,
    pub box_extent: usize,
    /// `(gamma, (-laplacian)^{-1} gamma)`.
    pub pairing: f64,
    pub expectation: f64,
    pub per_area: f64,
    pub per_perimeter: f64,
    pub per_perimeter_log: f64,
}

#[derive(Clone, Debug)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    pub tracked: TrackedRatio,
    /// Relative spread of the tracked ratio over the larger half of the sizes.
    pub top_half_spread: f64,
    pub threshold: f64,
    pub stable: bool,
}

impl ScanRow {
    pub fn ratio(&self, which: TrackedRatio) -> f64 {
        match which {
            TrackedRatio::Area => self.per_area,
            TrackedRatio::Perimeter => self.per_perimeter,
            TrackedRatio::PerimeterLog => self.per_perimeter_log,
        }
    }
}

/// Largest box extent the scan will solve on.
pub const SCAN_EXTENT_CAP: usize = 48;

/// Square-loop pairings across sizes `ls`, normalized by area, perimeter,
/// and perimeter times log perimeter. Tracks the column expected to plateau
/// for the given dimension and topology: area for `n = 2` and slabs,
/// perimeter times log perimeter for `n = 3`, perimeter for `n >= 4`.
pub fn confinement_scan(
    n: usize,
    topology: ScanTopology,
    ls: &[usize],
    beta: f64,
) -> Result<ScanReport> {
    if n < 2 {
        return Err(Error::InvalidArgument("scan needs dimension at least 2".into()));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "beta must be positive, got {beta}"
        )));
    }
    if let ScanTopology::Slab(m) = topology {
        if n < 3 {
            return Err(Error::InvalidArgument("a slab needs at least three dimensions".into()));
        }
        if m == 0 {
            return Err(Error::InvalidArgument("slab half-height must be positive".into()));
        }
    }
    let mut sizes: Vec<usize> = ls.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.is_empty() || sizes[0] < 2 {
        return Err(Error::InvalidArgument("loop sizes must be at least 2".into()));
    }

    let mut rows = Vec::with_capacity(sizes.len());
    for &l in &sizes {
        let extent = 3 * l;
        if extent > SCAN_EXTENT_CAP {
            return Err(Error::InvalidArgument(format!(
                "loop size {l} needs a {extent}-wide box, margin budget allows {SCAN_EXTENT_CAP}"
            )));
        }
        let extents: Vec<usize> = (0..n)
            .map(|d| match topology {
                ScanTopology::Slab(m) if d >= 2 => 2 * m + 1,
                _ => extent,
            })
            .collect();
        let complex = Arc::new(LatticeComplex::free(&extents)?);
        let mut corner = vec![0usize; n];
        for d in 0..n {
            corner[d] = if d < 2 { l } else { extents[d] / 2 };
        }
        let lp = build_rect_loop(&complex, (0, 1), &corner, l, l)?;
        let pairing = square_loop_pairing(&lp)?;
        let perim = lp.perimeter();
        rows.push(ScanRow {
            l,
            h: l,
            box_extent: extent,
            pairing,
            expectation: (-pairing / (2.0 * beta)).exp(),
            per_area: pairing / lp.area(),
            per_perimeter: pairing / perim,
            per_perimeter_log: pairing / (perim * perim.ln()),
        });
    }

    let (tracked, threshold) = match topology {
        ScanTopology::Slab(_) => (TrackedRatio::Area, 0.15),
        ScanTopology::Full if n == 2 => (TrackedRatio::Area, 0.10),
        ScanTopology::Full if n == 3 => (TrackedRatio::PerimeterLog, 0.10),
        ScanTopology::Full => (TrackedRatio::Perimeter, 0.10),
    };
    let top: Vec<f64> = rows[rows.len() / 2..]
        .iter()
        .map(|r| r.ratio(tracked))
        .collect();
    let hi = top.iter().cloned().fold(f64::MIN, f64::max);
    let lo = top.iter().cloned().fold(f64::MAX, f64::min);
    let mid = top.iter().sum::<f64>() / top.len() as f64;
    let top_half_spread = (hi - lo) / mid.abs().max(f64::MIN_POSITIVE);
    Ok(ScanReport {
        rows,
        tracked,
        top_half_spread,
        threshold,
        stable: top_half_spread <= threshold,
    })
}

// For a square loop the two in-plane current components contribute equally,
// so one componentwise solve suffices.
fn square_loop_pairing(lp: &RectLoop) -> Result<f64> {
    if lp.sides.0 != lp.sides.1 {
        return loop_pairing(lp, lp);
    }
    let c = lp.complex.clone();
    let comp = lp.plane.0.min(lp.plane.1);
    let mut masked = lp.gamma.clone();
    for d in 0..c.component_count(1) {
        if d != comp {
            masked.values_mut()[c.component_range(1, d)].fill(0.0);
        }
    }
    let green = poisson_solve(&masked, DEFAULT_TOL)?;
    Ok(2.0 * masked.dot(&green)?)
}

#[derive(Clone, Debug)]
pub struct MassGapReport {
    pub distances: Vec<usize>,
    /// Plaquette pairings on the smaller and larger slab box.
    pub slab_values: Vec<f64>,
    pub slab_values_large: Vec<f64>,
    pub box_extents: (usize, usize),
    /// Exponential rates fitted on `log |value|`; positive means decay.
    pub rate: f64,
    pub rate_small: f64,
    pub rate_agreement: f64,
    /// Same pairing on a full box of the same dimension.
    pub control_values: Vec<f64>,
    /// Log-log slope of the full-box profile.
    pub control_exponent: f64,
}

const MASS_GAP_MARGIN: usize = 12;

/// Decay of `(p, d d* (-laplacian)^{-1} p')` between horizontal plaquettes
/// at the given in-plane distances, on the slab of half-height `m` and on a
/// full box as a polynomial-decay control. The slab rate is fitted at two
/// box sizes so finite-size effects are visible in `rate_agreement`.
pub fn slab_mass_gap(m: usize, n: usize, distances: &[usize]) -> Result<MassGapReport> {
    if m == 0 {
        return Err(Error::InvalidArgument("slab half-height must be positive".into()));
    }
    if n < 3 {
        return Err(Error::InvalidArgument("a slab needs at least three dimensions".into()));
    }
    let mut ds: Vec<usize> = distances.to_vec();
    ds.sort_unstable();
    ds.dedup();
    if ds.len() < 2 || ds[0] < 1 {
        return Err(Error::InvalidArgument(
            "need at least two distinct positive distances".into(),
        ));
    }
    let max_d = *ds.last().unwrap();
    let small = max_d + 2 * MASS_GAP_MARGIN;
    let large = small + 8;
    if large > SCAN_EXTENT_CAP {
        return Err(Error::InvalidArgument(format!(
            "distance {max_d} needs a {large}-wide box, margin budget allows {SCAN_EXTENT_CAP}"
        )));
    }

    let slab_extents = |b: usize| -> Vec<usize> {
        let mut e = vec![b, b];
        e.extend(std::iter::repeat(2 * m + 1).take(n - 2));
        e
    };
    let slab_values = plaquette_decay_profile(&slab_extents(small), &ds)?;
    let slab_values_large = plaquette_decay_profile(&slab_extents(large), &ds)?;
    let control_values = plaquette_decay_profile(&vec![small; n], &ds)?;

    let xs_lin: Vec<f64> = ds.iter().map(|&d| d as f64).collect();
    let xs_log: Vec<f64> = ds.iter().map(|&d| (d as f64).ln()).collect();
    let rate_small = -fit_slope(&xs_lin, &log_abs(&slab_values)?);
    let rate = -fit_slope(&xs_lin, &log_abs(&slab_values_large)?);
    let control_exponent = fit_slope(&xs_log, &log_abs(&control_values)?);
    let rate_agreement = (rate - rate_small).abs() / rate.abs().max(f64::MIN_POSITIVE);
    Ok(MassGapReport {
        distances: ds,
        slab_values,
        slab_values_large,
        box_extents: (small, large),
        rate,
        rate_small,
        rate_agreement,
        control_values,
        control_exponent,
    })
}

/// Pairings `(p, d d* (-laplacian)^{-1} p')` for horizontal plaquettes
/// separated along axis 0, read off one componentwise solve through the
/// transverse second difference of the plaquette Green's function.
fn plaquette_decay_profile(extents: &[usize], ds: &[usize]) -> Result<Vec<f64>> {
    let n = extents.len();
    let max_d = *ds.last().unwrap();
    let complex = Arc::new(LatticeComplex::free(extents)?);
    let mut base = vec![0usize; n];
    base[0] = (extents[0] - max_d) / 2;
    base[1] = extents[1] / 2;
    for d in 2..n {
        base[d] = extents[d] / 2;
    }

    let mut source = LatticeForm::zeros(complex.clone(), 2)?;
    source.set(
        &Cell {
            base: base.clone(),
            axes: vec![0, 1],
        },
        1.0,
    )?;
    let green = poisson_solve(&source, DEFAULT_TOL)?;

    let mut out = Vec::with_capacity(ds.len());
    for &d in ds {
        let mut probe = base.clone();
        probe[0] = base[0] + d;
        // (p, p') vanishes at distance >= 1, leaving minus the transverse
        // part of d* d applied to the Green's function at p.
        let mut v = 0.0;
        let center = green.value(&Cell {
            base: probe.clone(),
            axes: vec![0, 1],
        })?;
        for t in 2..n {
            for step in [-1isize, 1] {
                let mut shifted = probe.clone();
                shifted[t] = shifted[t]
                    .checked_add_signed(step)
                    .ok_or_else(|| Error::InvalidArgument("probe at slab face".into()))?;
                v += green.value(&Cell {
                    base: shifted,
                    axes: vec![0, 1],
                })? - center;
            }
        }
        out.push(v);
    }
    Ok(out)
}

fn log_abs(vs: &[f64]) -> Result<Vec<f64>> {
    vs.iter()
        .map(|&v| {
            if v == 0.0 || !v.is_finite() {
                Err(Error::InvalidArgument(
                    "decay value vanished, distances exceed solver resolution".into(),
                ))
            } else {
                Ok(v.abs().ln())
            }
        })
        .collect()
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{codifferential, exterior_derivative};
    use crate::solve::dense_component_matrix;
    use nalgebra::{DMatrix, DVector};

    fn free_box(extents: &[usize]) -> Arc<LatticeComplex> {
        Arc::new(LatticeComplex::free(extents).unwrap())
    }

    #[test]
    fn unit_loop_current_is_the_plaquette_boundary() {
        let c = free_box(&[5, 5]);
        let lp = build_rect_loop(&c, (0, 1), &[2, 2], 1, 1).unwrap();
        let nonzero: Vec<f64> = lp
            .gamma()
            .values()
            .iter()
            .cloned()
            .filter(|v| *v != 0.0)
            .collect();
        assert_eq!(nonzero.len(), 4);
        assert!(nonzero.iter().all(|v| v.abs() == 1.0));
        assert_eq!(nonzero.iter().sum::<f64>(), 0.0);
        // The current is closed and spans exactly the marked plaquette.
        let div = codifferential(lp.gamma()).unwrap();
        assert_eq!(div.norm(), 0.0);
        assert_eq!(lp.surface().values().iter().filter(|v| **v != 0.0).count(), 1);
    }

    #[test]
    fn random_rectangles_satisfy_the_loop_invariants() {
        let c = free_box(&[7, 6, 5]);
        for (plane, corner, l, h) in [
            ((0usize, 1usize), [1usize, 1, 2], 3usize, 2usize),
            ((1, 2), [2, 1, 1], 2, 3),
            ((2, 0), [1, 3, 1], 2, 4),
        ] {
            let lp = build_rect_loop(&c, plane, &corner, l, h).unwrap();
            let div = codifferential(lp.gamma()).unwrap();
            assert_eq!(div.norm(), 0.0, "current not closed for plane {plane:?}");
            let supp = lp.surface().values().iter().filter(|v| **v != 0.0).count();
            assert_eq!(supp, l * h);
            let boundary = lp.gamma().values().iter().filter(|v| **v != 0.0).count();
            assert_eq!(boundary, 2 * (l + h));
            let again = codifferential(lp.surface()).unwrap();
            assert_eq!(again.values(), lp.gamma().values());
        }
    }

    #[test]
    fn swapping_plane_axes_reverses_orientation() {
        let c = free_box(&[6, 6]);
        let fwd = build_rect_loop(&c, (0, 1), &[1, 1], 2, 3).unwrap();
        let rev = build_rect_loop(&c, (1, 0), &[1, 1], 3, 2).unwrap();
        let sum: f64 = fwd
            .gamma()
            .values()
            .iter()
            .zip(rev.gamma().values())
            .map(|(a, b)| (a + b).abs())
            .sum();
        assert_eq!(sum, 0.0);
    }

    #[test]
    fn out_of_bounds_rectangles_are_rejected() {
        let c = free_box(&[6, 6, 6]);
        assert!(build_rect_loop(&c, (0, 1), &[3, 1, 1], 3, 1).is_err());
        assert!(build_rect_loop(&c, (0, 0), &[1, 1, 1], 2, 2).is_err());
        assert!(build_rect_loop(&c, (0, 1), &[1, 1], 2, 2).is_err());
        assert!(build_rect_loop(&c, (0, 1), &[1, 1, 1], 0, 2).is_err());
        assert!(build_rect_loop(&c, (0, 3), &[1, 1, 1], 2, 2).is_err());
    }

    #[test]
    fn two_dimensions_give_the_exact_area_law() {
        let c = free_box(&[18, 15]);
        for (l, h, beta) in [(2usize, 3usize, 1.0), (4, 4, 2.5), (5, 2, 0.7)] {
            let lp = build_rect_loop(&c, (0, 1), &[4, 4], l, h).unwrap();
            let w = wilson_gaussian_expectation(&lp, beta).unwrap();
            let exact = (-((l * h) as f64) / (2.0 * beta)).exp();
            assert!(
                (w - exact).abs() <= 1e-8 * exact,
                "l={l} h={h} beta={beta}: {w} vs {exact}"
            );
        }
    }

    #[test]
    fn infinite_temperature_limit_is_one() {
        let c = free_box(&[12, 12, 8]);
        let lp = build_rect_loop(&c, (0, 1), &[4, 4, 3], 3, 3).unwrap();
        let w = wilson_gaussian_expectation(&lp, 1e12).unwrap();
        assert!((w - 1.0).abs() < 1e-10);
        assert!(wilson_gaussian_expectation(&lp, 0.0).is_err());
    }

    #[test]
    fn iterative_pairing_matches_a_dense_solve() {
        let c = free_box(&[12, 12, 12]);
        let lp = build_rect_loop(&c, (0, 1), &[4, 4, 6], 4, 4).unwrap();
        let fast = loop_pairing(&lp, &lp).unwrap();

        let mut dense = 0.0;
        for comp in 0..3 {
            let range = c.component_range(1, comp);
            let rhs = DVector::from_column_slice(&lp.gamma().values()[range]);
            if rhs.norm() == 0.0 {
                continue;
            }
            let a = dense_component_matrix(&c, 1, comp);
            let sol = a.cholesky().expect("free-box component is positive definite").solve(&rhs);
            dense += rhs.dot(&sol);
        }
        assert!(
            (fast - dense).abs() <= 1e-6 * dense.abs(),
            "{fast} vs {dense}"
        );
    }

    // Least-norm characterization: the pairing equals the squared norm of the
    // smallest two-form whose codifferential is the loop current.
    #[test]
    fn pairing_is_the_least_norm_spanning_energy() {
        let c = free_box(&[6, 6, 6]);
        let lp = build_rect_loop(&c, (0, 1), &[1, 2, 2], 3, 2).unwrap();
        let v = loop_pairing(&lp, &lp).unwrap();

        let edges = c.cell_count(1);
        let plaqs = c.cell_count(2);
        let mut dmat = DMatrix::<f64>::zeros(plaqs, edges);
        for col in 0..edges {
            let mut e = LatticeForm::zeros(c.clone(), 1).unwrap();
            e.values_mut()[col] = 1.0;
            let de = exterior_derivative(&e).unwrap();
            for (row, val) in de.values().iter().enumerate() {
                dmat[(row, col)] = *val;
            }
        }
        // d* is the transpose of d, so the normal matrix of the constraint
        // d* s = gamma is d* d acting on one-forms.
        let normal = dmat.transpose() * &dmat;
        let pinv = normal.pseudo_inverse(1e-9).unwrap();
        let g = DVector::from_column_slice(lp.gamma().values());
        let least = (&pinv * &g).dot(&g);
        assert!((v - least).abs() <= 1e-7 * least, "{v} vs {least}");
    }

    #[test]
    fn disjoint_planar_loops_are_uncorrelated() {
        let c = free_box(&[24, 16]);
        let a = build_rect_loop(&c, (0, 1), &[2, 4], 4, 4).unwrap();
        let b = build_rect_loop(&c, (0, 1), &[14, 4], 4, 4).unwrap();
        let cov = loop_covariance(&a, &b, 1.3).unwrap();
        assert!(cov.abs() <= 1e-9, "{cov}");
    }

    // Var W from the covariance formula must agree with the second moment
    // computed through one solve against the doubled current.
    #[test]
    fn self_covariance_matches_the_second_moment() {
        let c = free_box(&[14, 14, 14]);
        let lp = build_rect_loop(&c, (0, 1), &[5, 5, 7], 3, 2).unwrap();
        let beta = 1.7;
        let cov = loop_covariance(&lp, &lp, beta).unwrap();

        let mut doubled = lp.gamma().clone();
        doubled.scale(2.0);
        let green = poisson_solve(&doubled, DEFAULT_TOL).unwrap();
        let second = (-doubled.dot(&green).unwrap() / (2.0 * beta)).exp();
        let w = wilson_gaussian_expectation(&lp, beta).unwrap();
        assert!(
            (cov - (second - w * w)).abs() <= 1e-9,
            "{cov} vs {}",
            second - w * w
        );
    }

    #[test]
    fn planar_covariance_decays_polynomially() {
        let c = free_box(&[24, 24, 24]);
        let base = build_rect_loop(&c, (0, 1), &[3, 11, 12], 2, 2).unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for sep in [3usize, 4, 6, 8] {
            let other = build_rect_loop(&c, (0, 1), &[3 + 2 + sep, 11, 12], 2, 2).unwrap();
            let cov = loop_covariance(&base, &other, 1.0).unwrap();
            assert!(cov != 0.0);
            xs.push((sep as f64).ln());
            ys.push(cov.abs().ln());
        }
        let slope = fit_slope(&xs, &ys);
        assert!(
            (-3.0..=-1.0).contains(&slope),
            "log-log covariance slope {slope}"
        );
    }

    #[test]
    fn two_dimensional_scan_reports_the_exact_area_column() {
        let report = confinement_scan(2, ScanTopology::Full, &[4, 6, 8, 10], 1.0).unwrap();
        assert_eq!(report.tracked, TrackedRatio::Area);
        for row in &report.rows {
            assert!(
                (row.per_area - 1.0).abs() <= 1e-8,
                "area ratio {} at l={}",
                row.per_area,
                row.l
            );
            assert_eq!(row.box_extent, 3 * row.l);
        }
        assert!(report.stable);
        assert!(report.top_half_spread <= 1e-8);
    }

    #[test]
    fn scan_pairings_grow_with_loop_size() {
        let report = confinement_scan(3, ScanTopology::Full, &[4, 6, 8], 1.0).unwrap();
        assert_eq!(report.tracked, TrackedRatio::PerimeterLog);
        assert!(report.rows.windows(2).all(|w| w[0].pairing < w[1].pairing));
        assert!(report.rows.iter().all(|r| r.expectation > 0.0 && r.expectation < 1.0));
    }

    #[test]
    fn square_shortcut_matches_the_full_pairing() {
        let c = free_box(&[15, 15, 9]);
        let lp = build_rect_loop(&c, (0, 1), &[5, 5, 4], 4, 4).unwrap();
        let full = loop_pairing(&lp, &lp).unwrap();
        let half = square_loop_pairing(&lp).unwrap();
        assert!((full - half).abs() <= 1e-9 * full, "{full} vs {half}");
    }

    #[test]
    fn oversized_scans_are_refused() {
        let err = confinement_scan(3, ScanTopology::Full, &[18], 1.0).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
        assert!(confinement_scan(2, ScanTopology::Slab(1), &[4], 1.0).is_err());
        assert!(confinement_scan(3, ScanTopology::Full, &[4], 0.0).is_err());
    }

    // The transverse-difference readout must match applying d d* directly.
    #[test]
    fn transverse_difference_matches_the_operator_route() {
        let extents = [20usize, 20, 3];
        let ds = [3usize, 5, 7];
        let profile = plaquette_decay_profile(&extents, &ds).unwrap();

        let c = free_box(&extents);
        let mut base = vec![(extents[0] - 7) / 2, extents[1] / 2, 1];
        let mut source = LatticeForm::zeros(c.clone(), 2).unwrap();
        source
            .set(&Cell { base: base.clone(), axes: vec![0, 1] }, 1.0)
            .unwrap();
        let green = poisson_solve(&source, DEFAULT_TOL).unwrap();
        let dd = exterior_derivative(&codifferential(&green).unwrap()).unwrap();
        for (i, &d) in ds.iter().enumerate() {
            base[0] = (extents[0] - 7) / 2 + d;
            let direct = dd
                .value(&Cell { base: base.clone(), axes: vec![0, 1] })
                .unwrap();
            // The two routes solve independently; second differences of
            // nearly equal values amplify the solver residual.
            assert!(
                (profile[i] - direct).abs() <= 1e-6 * direct.abs().max(1e-12),
                "d={d}: {} vs {direct}",
                profile[i]
            );
        }
    }

    #[test]
    fn slab_pairings_decay_exponentially() {
        let report = slab_mass_gap(1, 3, &[4, 6, 8, 10]).unwrap();
        assert!(report.rate > 0.0, "rate {}", report.rate);
        assert!(
            report.rate_agreement <= 0.05,
            "rates {} vs {}",
            report.rate,
            report.rate_small
        );
        // Successive values shrink by a stable factor.
        for w in report.slab_values_large.windows(2) {
            assert!(w[1].abs() < w[0].abs());
        }
        assert!(slab_mass_gap(0, 3, &[4, 6]).is_err());
        assert!(slab_mass_gap(1, 2, &[4, 6]).is_err());
        assert!(slab_mass_gap(1, 3, &[4]).is_err());
        assert!(slab_mass_gap(1, 3, &[4, 40]).is_err());
    }

    #[test]
    fn full_box_pairings_decay_like_a_transverse_second_difference() {
        let report = slab_mass_gap(1, 3, &[4, 6, 8, 10, 12]).unwrap();
        // On the full box the pairing is a second transverse difference of
        // the scalar Green's function, hence negative and of order d^{-n}:
        // two powers steeper than the Green's function itself.
        for v in &report.control_values {
            assert!(*v < 0.0, "control value {v}");
        }
        assert!(
            (report.control_exponent + 3.0).abs() <= 0.5,
            "control exponent {}",
            report.control_exponent
        );
        let adjacent = plaquette_decay_profile(&[26, 26, 26], &[1, 2]).unwrap();
        assert!(adjacent[0] < 0.0 && adjacent[1] < 0.0);
        assert!(adjacent[0].abs() > adjacent[1].abs());
    }
}
