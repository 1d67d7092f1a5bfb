//! Principal-value bilinear forms for iterated Riesz transforms.

use super::polygauss::PolyGauss;
use super::quad::{gl16, graded_edges, halved_edges, integrate_panels, QuadResult};
use super::testfn::{TestFunction, TwoForm};
use super::KernelConstants;
use crate::{Error, Result};
use num_complex::Complex64;
use statrs::function::gamma::gamma;
use std::collections::BTreeMap;

/// Shrinking-cutoff ladder controlling a principal-value limit.
#[derive(Debug, Clone)]
pub struct PvSchedule {
    /// Largest cutoff radius in the ladder.
    pub eps0: f64,
    /// Number of rungs; the cutoff halves at each one.
    pub levels: usize,
}

impl Default for PvSchedule {
    fn default() -> Self {
        Self { eps0: 0.4, levels: 5 }
    }
}

impl PvSchedule {
    /// Checks the ladder is usable.
    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0) || !self.eps0.is_finite() {
            return Err(Error::InvalidArgument(
                "cutoff start must be positive and finite".into(),
            ));
        }
        if self.levels < 3 {
            return Err(Error::InvalidArgument(
                "cutoff ladder needs at least three rungs".into(),
            ));
        }
        Ok(())
    }

    fn cutoffs(&self) -> Vec<f64> {
        (0..self.levels)
            .map(|j| self.eps0 / 2f64.powi(j as i32))
            .collect()
    }
}

/// Which principal-value pairing to evaluate.
pub enum PvKind<'a> {
    /// `(phi, R_i R_j psi)` through its off-diagonal integral representation.
    Riesz {
        i: usize,
        j: usize,
        phi: &'a TestFunction,
        psi: &'a TestFunction,
    },
    /// Covariance of the projected white-noise pairings of two 2-forms.
    ProjectedWhiteNoise { phi: &'a TwoForm, psi: &'a TwoForm },
}

/// Radial integrals `int r^e exp(-w r^2) dr`, keyed by exponent and width
/// bits, accumulated from angular reductions of kernel-times-correlation
/// integrands.
struct RadialBuckets {
    n: usize,
    terms: BTreeMap<(i64, u64), Complex64>,
}

impl RadialBuckets {
    fn new(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    /// Adds `factor * corr(z) * z^extra * |z|^radial_off` reduced over
    /// spheres: each correlation monomial contributes its angular moment
    /// times a pure radial power.
    fn add(&mut self, consts: &KernelConstants, corr: &PolyGauss, extra: &[u32], radial_off: i64, factor: f64) {
        let wbits = corr.width().to_bits();
        for (gamma, c) in corr.terms() {
            let full: Vec<u32> = gamma.iter().zip(extra).map(|(a, b)| a + b).collect();
            let ang = consts.angular_moment(&full);
            if ang == 0.0 {
                continue;
            }
            let degree: i64 = full.iter().map(|&p| p as i64).sum();
            let exponent = degree + radial_off + self.n as i64 - 1;
            let entry = self
                .terms
                .entry((exponent, wbits))
                .or_insert(Complex64::new(0.0, 0.0));
            *entry += c * ang * factor;
        }
    }

    /// Verifies the borderline radial order cancels, drops it, and returns
    /// the convergent buckets.
    fn reduced(self) -> Vec<(i64, f64, Complex64)> {
        let scale = self
            .terms
            .values()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max)
            .max(1e-300);
        let mut out = Vec::new();
        for ((exponent, wbits), coeff) in self.terms {
            if exponent < 0 {
                assert_eq!(exponent, -1, "unexpected radial order {exponent}");
                assert!(
                    coeff.norm() <= 1e-9 * scale,
                    "borderline radial order failed to cancel: {coeff}"
                );
                continue;
            }
            out.push((exponent, f64::from_bits(wbits), coeff));
        }
        out
    }
}

/// Truncated Gaussian-moment tail by quadrature.
fn radial_tail_quad(exponent: i64, width: f64, eps: f64, refine: bool) -> f64 {
    let e = exponent as f64;
    let r_top = ((46.0 + 10.0 * e) / width).sqrt().max(2.0 * eps);
    let mut edges = graded_edges(eps, r_top, 0.5 * eps, 0.4 / width.sqrt());
    if refine {
        edges = halved_edges(&edges);
    }
    integrate_panels(gl16(), &edges, |r| r.powi(exponent as i32) * (-width * r * r).exp())
}

/// The same tail through the incomplete gamma function.
#[cfg(test)]
fn radial_tail_closed(exponent: i64, width: f64, eps: f64) -> f64 {
    let a = (exponent as f64 + 1.0) / 2.0;
    0.5 * width.powf(-a) * gamma(a) * statrs::function::gamma::gamma_ur(a, width * eps * eps)
}

fn evaluate(buckets: RadialBuckets, contact: f64, schedule: &PvSchedule) -> Result<QuadResult> {
    let clean = buckets.reduced();
    let cutoffs = schedule.cutoffs();
    let ladder: Vec<Complex64> = cutoffs
        .iter()
        .map(|&eps| {
            clean
                .iter()
                .map(|&(e, w, c)| c * radial_tail_quad(e, w, eps, false))
                .sum()
        })
        .collect();
    let finest_refined: Complex64 = clean
        .iter()
        .map(|&(e, w, c)| c * radial_tail_quad(e, w, *cutoffs.last().unwrap(), true))
        .sum();
    let quad_err = (finest_refined - ladder.last().unwrap()).norm();

    // Two-term Richardson in the cutoff removes the leading even power.
    let rich: Vec<Complex64> = ladder
        .windows(2)
        .map(|w| (4.0 * w[1] - w[0]) / 3.0)
        .collect();
    let last = rich[rich.len() - 1];
    let prev = rich[rich.len() - 2];
    let scale = clean
        .iter()
        .map(|&(_, _, c)| c.norm())
        .fold(contact.abs(), f64::max);
    Ok(QuadResult {
        value: contact + last.re,
        error: 1.5 * (last - prev).norm() + 2.0 * quad_err + last.im.abs() + 1e-12 * scale,
    })
}

/// Evaluates a principal-value pairing along the cutoff ladder, checking the
/// structural cancellation of the borderline radial order and extrapolating
/// the cutoff to zero. Contact terms are added exactly.
pub fn pv_bilinear(kind: &PvKind, schedule: &PvSchedule) -> Result<QuadResult> {
    schedule.validate()?;
    match kind {
        PvKind::Riesz { i, j, phi, psi } => {
            let n = phi.n();
            if psi.n() != n {
                return Err(Error::InvalidArgument("dimension mismatch".into()));
            }
            if *i >= n || *j >= n {
                return Err(Error::InvalidArgument("component index out of range".into()));
            }
            let consts = KernelConstants::new(n)?;
            let corr = phi.func().correlation(psi.func());
            let mut buckets = RadialBuckets::new(n);
            let mut extra = vec![0u32; n];
            extra[*i] += 1;
            extra[*j] += 1;
            buckets.add(
                &consts,
                &corr,
                &extra,
                -(n as i64) - 2,
                n as f64 / consts.sphere_area(),
            );
            let mut contact = 0.0;
            if i == j {
                buckets.add(
                    &consts,
                    &corr,
                    &vec![0; n],
                    -(n as i64),
                    -1.0 / consts.sphere_area(),
                );
                contact = -phi.func().l2_product(psi.func()).re / n as f64;
            }
            evaluate(buckets, contact, schedule)
        }
        PvKind::ProjectedWhiteNoise { phi, psi } => {
            let n = phi.n();
            if psi.n() != n {
                return Err(Error::InvalidArgument("dimension mismatch".into()));
            }
            let consts = KernelConstants::new(n)?;
            let omega = consts.sphere_area();
            let mut buckets = RadialBuckets::new(n);
            let mut contact = 0.0;
            let mut cache: BTreeMap<((usize, usize), (usize, usize)), PolyGauss> = BTreeMap::new();
            let canon = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
            // Signed correlation C(z) = int phi_ij(x) psi_kl(x - z) dx,
            // cached through the canonical component pair.
            let mut corr_of = |i: usize, j: usize, k: usize, l: usize| -> Option<(f64, PolyGauss)> {
                let (s1, f) = phi.component(i, j)?;
                let (s2, g) = psi.component(k, l)?;
                let key = (canon(i, j), canon(k, l));
                let base = cache.entry(key).or_insert_with(|| f.correlation(g));
                Some((s1 * s2, base.clone()))
            };
            let zeros = vec![0u32; n];
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    if let (Some((s1, f)), Some((s2, g))) =
                        (phi.component(i, j), psi.component(i, j))
                    {
                        contact += s1 * s2 * f.l2_product(g).re / n as f64;
                    }
                    if let Some((sgn, c)) = corr_of(i, j, i, j) {
                        buckets.add(&consts, &c, &zeros, -(n as i64), sgn / omega);
                    }
                    for k in 0..n {
                        if let Some((sgn, c)) = corr_of(i, j, k, j) {
                            let mut extra = vec![0u32; n];
                            extra[k] += 1;
                            extra[i] += 1;
                            buckets.add(
                                &consts,
                                &c,
                                &extra,
                                -(n as i64) - 2,
                                -(n as f64) / (2.0 * omega) * sgn,
                            );
                        }
                        if let Some((sgn, c)) = corr_of(i, j, k, i) {
                            let mut extra = vec![0u32; n];
                            extra[k] += 1;
                            extra[j] += 1;
                            buckets.add(
                                &consts,
                                &c,
                                &extra,
                                -(n as i64) - 2,
                                n as f64 / (2.0 * omega) * sgn,
                            );
                        }
                    }
                }
            }
            evaluate(buckets, contact, schedule)
        }
    }
}

/// Integral `int p_a p_b |p|^{-2} f(p) dp` of a Gaussian-polynomial symbol
/// factor, by exact angular moments and complete gamma radial integrals.
fn symbol_integral(f: &PolyGauss, a: usize, b: usize, consts: &KernelConstants) -> Complex64 {
    let n = consts.n();
    let w = f.width();
    let mut total = Complex64::new(0.0, 0.0);
    for (gamma_pow, c) in f.terms() {
        let mut full = gamma_pow.to_vec();
        full[a] += 1;
        full[b] += 1;
        let ang = consts.angular_moment(&full);
        if ang == 0.0 {
            continue;
        }
        let half = (gamma_pow.iter().sum::<u32>() as f64 + n as f64) / 2.0;
        total += c * ang * 0.5 * w.powf(-half) * gamma(half);
    }
    total
}

/// Closed-form Fourier evaluation of `(phi, R_i R_j psi)`.
pub fn riesz_fourier_oracle(
    i: usize,
    j: usize,
    phi: &TestFunction,
    psi: &TestFunction,
) -> Result<f64> {
    let n = phi.n();
    if psi.n() != n {
        return Err(Error::InvalidArgument("dimension mismatch".into()));
    }
    if i >= n || j >= n {
        return Err(Error::InvalidArgument("component index out of range".into()));
    }
    let consts = KernelConstants::new(n)?;
    let product = phi.hat().product(&psi.hat().conjugated());
    Ok(-symbol_integral(&product, i, j, &consts).re)
}

/// Closed-form Fourier evaluation of the projected white-noise covariance
/// of two 2-forms: the symbol of the projection applied under the hat.
pub fn whitenoise_fourier_oracle(phi: &TwoForm, psi: &TwoForm) -> Result<f64> {
    let n = phi.n();
    if psi.n() != n {
        return Err(Error::InvalidArgument("dimension mismatch".into()));
    }
    let consts = KernelConstants::new(n)?;
    let mut hat_cache: BTreeMap<(bool, usize, usize), PolyGauss> = BTreeMap::new();
    let mut hat_of = |from_psi: bool, i: usize, j: usize| -> Option<(f64, PolyGauss)> {
        let src = if from_psi { psi } else { phi };
        let (sign, comp) = src.component(i, j)?;
        let key = (from_psi, i.min(j), i.max(j));
        let hat = hat_cache.entry(key).or_insert_with(|| {
            if from_psi {
                comp.fourier().conjugated()
            } else {
                comp.fourier()
            }
        });
        Some((sign, hat.clone()))
    };
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let Some((s_phi, phat)) = hat_of(false, i, j) else {
                continue;
            };
            for k in 0..n {
                if let Some((s_psi, qhat)) = hat_of(true, k, j) {
                    let product = phat.product(&qhat);
                    total += s_phi * s_psi * symbol_integral(&product, i, k, &consts);
                }
                if let Some((s_psi, qhat)) = hat_of(true, k, i) {
                    let product = phat.product(&qhat);
                    total -= s_phi * s_psi * symbol_integral(&product, j, k, &consts);
                }
            }
        }
    }
    Ok(total.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::testfn::{make_test_function, TestShape};
    use crate::mode;
    use approx::assert_relative_eq;

    #[test]
    fn radial_tail_quadrature_matches_incomplete_gamma() {
        for &(e, w, eps) in &[(1i64, 0.5f64, 0.3f64), (3, 0.5, 0.05), (9, 1.7, 0.4), (17, 0.2, 0.8)] {
            let q = radial_tail_quad(e, w, eps, false);
            let c = radial_tail_closed(e, w, eps);
            assert_relative_eq!(q, c, max_relative = 1e-12);
        }
    }

    #[test]
    fn riesz_diagonal_sum_gives_minus_inner_product() {
        for n in [2usize, 3] {
            let shape = TestShape {
                width: 1.0,
                degree: 2,
                radial: false,
            };
            let phi = make_test_function(n, 0, &shape, 11);
            let psi = make_test_function(n, 0, &shape, 23);
            let schedule = PvSchedule::default();
            let mut trace = 0.0;
            let mut err = 0.0;
            for i in 0..n {
                let r = pv_bilinear(
                    &PvKind::Riesz {
                        i,
                        j: i,
                        phi: &phi,
                        psi: &psi,
                    },
                    &schedule,
                )
                .unwrap();
                trace += r.value;
                err += r.error;
            }
            let ip = phi.func().l2_product(psi.func()).re;
            assert!(
                (trace + ip).abs() <= (err + 1e-5 * ip.abs()).max(1e-8),
                "n={n}: trace {trace} vs {}",
                -ip
            );
        }
    }

    #[test]
    fn odd_even_pairing_vanishes() {
        // phi odd in the first axis, psi even: every angular moment dies.
        let mut base = PolyGauss::new(3, 1.0);
        base.add_term(&[1, 0, 0], Complex64::new(1.0, 0.0));
        let phi = TestFunction::from_base(base, 0);
        let mut even = PolyGauss::new(3, 0.8);
        even.add_term(&[0, 0, 0], Complex64::new(1.0, 0.0));
        even.add_term(&[0, 2, 0], Complex64::new(-0.3, 0.0));
        let psi = TestFunction::from_base(even, 0);
        let r = pv_bilinear(
            &PvKind::Riesz {
                i: 0,
                j: 1,
                phi: &phi,
                psi: &psi,
            },
            &PvSchedule::default(),
        )
        .unwrap();
        assert!(r.value.abs() <= 1e-14, "value {}", r.value);
    }

    #[test]
    fn riesz_quadrature_matches_fourier_oracle() {
        let shape = TestShape {
            width: 1.0,
            degree: 2,
            radial: false,
        };
        let phi = make_test_function(3, 0, &shape, 5);
        let psi = make_test_function(3, 0, &shape, 17);
        let schedule = PvSchedule::default();
        for (i, j) in [(0usize, 1usize), (0, 0), (2, 2), (1, 2)] {
            let r = pv_bilinear(
                &PvKind::Riesz {
                    i,
                    j,
                    phi: &phi,
                    psi: &psi,
                },
                &schedule,
            )
            .unwrap();
            let oracle = riesz_fourier_oracle(i, j, &phi, &psi).unwrap();
            let scale = oracle.abs().max(1e-6);
            assert!(
                (r.value - oracle).abs() <= (r.error + 1e-6 * scale).max(1e-4 * scale),
                "({i},{j}): value {} oracle {oracle} err {}",
                r.value,
                r.error
            );
        }
    }

    #[test]
    fn whitenoise_quadrature_matches_fourier_oracle() {
        let shape = TestShape {
            width: 1.0,
            degree: 2,
            radial: false,
        };
        let phi = TwoForm::random(3, &shape, 71).unwrap();
        let psi = TwoForm::random(3, &shape, 93).unwrap();
        let r = pv_bilinear(
            &PvKind::ProjectedWhiteNoise {
                phi: &phi,
                psi: &psi,
            },
            &PvSchedule::default(),
        )
        .unwrap();
        let oracle = whitenoise_fourier_oracle(&phi, &psi).unwrap();
        let scale = oracle.abs().max(1e-6);
        assert!(
            (r.value - oracle).abs() <= (r.error + 1e-6 * scale).max(1e-3 * scale),
            "value {} oracle {oracle} err {}",
            r.value,
            r.error
        );
    }

    #[test]
    fn whitenoise_self_pairing_is_positive() {
        let shape = TestShape {
            width: 0.9,
            degree: 2,
            radial: false,
        };
        let phi = TwoForm::random(3, &shape, 41).unwrap();
        let r = pv_bilinear(
            &PvKind::ProjectedWhiteNoise {
                phi: &phi,
                psi: &phi,
            },
            &PvSchedule::default(),
        )
        .unwrap();
        assert!(r.value > 0.0, "self pairing {}", r.value);
    }

    #[test]
    fn projection_symbol_matches_mode_projector() {
        // The index formula behind the white-noise symbol must agree with
        // the per-mode exact projector on 2-forms.
        let p = [0.6, -1.3, 0.9];
        let p2: f64 = p.iter().map(|v| v * v).sum();
        let proj = mode::exact_projector(&p, 3, 2).unwrap();
        let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
        for (row, &(i, j)) in pairs.iter().enumerate() {
            for (col, &(k, l)) in pairs.iter().enumerate() {
                let delta = |a: usize, b: usize| (a == b) as u8 as f64;
                let entry = (p[i] * p[k] * delta(j, l) - p[i] * p[l] * delta(j, k)
                    - p[j] * p[k] * delta(i, l)
                    + p[j] * p[l] * delta(i, k))
                    / p2;
                assert!(
                    (proj[(row, col)].re - entry).abs() <= 1e-12,
                    "entry ({row},{col}): {} vs {entry}",
                    proj[(row, col)].re
                );
                assert!(proj[(row, col)].im.abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn invalid_inputs_error() {
        let shape = TestShape::default();
        let phi = make_test_function(2, 0, &shape, 1);
        let psi = make_test_function(3, 0, &shape, 2);
        let bad = PvSchedule {
            eps0: 0.0,
            levels: 5,
        };
        assert!(bad.validate().is_err());
        assert!(PvSchedule {
            eps0: 0.3,
            levels: 2
        }
        .validate()
        .is_err());
        assert!(pv_bilinear(
            &PvKind::Riesz {
                i: 0,
                j: 0,
                phi: &phi,
                psi: &psi
            },
            &PvSchedule::default()
        )
        .is_err());
    }
}
