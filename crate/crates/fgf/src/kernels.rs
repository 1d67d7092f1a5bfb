//! Continuum covariance kernels, fractional integrals, and linking numbers.
//!
//! Everything in this module lives on `R^n`: closed-form Green's functions
//! for fractional Laplacians, quadrature for the fractional Laplacian acting
//! on polynomial-Gaussian test functions, covariance kernels of gradient and
//! divergence-free Gaussian 1-forms, principal-value Riesz bilinear forms,
//! and the Gauss linking integral for closed curves.

pub mod green;
pub mod linking;
pub mod polygauss;
pub mod projected;
pub mod pv;
pub mod quad;
pub mod testfn;

pub use green::{composed_apply, fourier_radial_value, fractional_apply, green_kernel};
pub use linking::{gauss_linking, Curve};
pub use polygauss::PolyGauss;
pub use projected::{projected_kernel, projected_kernel_oracle, ProjectedVariant};
pub use pv::{pv_bilinear, PvKind, PvSchedule};
pub use quad::QuadResult;
pub use testfn::{make_test_function, TestFunction, TestShape, TwoForm};

use crate::{Error, Result};
use std::f64::consts::PI;

/// Gamma function with explicit pole detection; negative non-integer
/// arguments go through the reflection formula.
pub(crate) fn gamma_checked(x: f64) -> Result<f64> {
    if x > 0.0 {
        return Ok(statrs::function::gamma::gamma(x));
    }
    if (x - x.round()).abs() < 1e-12 {
        return Err(Error::InvalidArgument(format!("gamma pole at {x}")));
    }
    let reflected = statrs::function::gamma::gamma(1.0 - x);
    Ok(PI / ((PI * x).sin() * reflected))
}

/// Dimension-dependent constants for Riesz kernels and sphere integrals.
#[derive(Debug, Clone, Copy)]
pub struct KernelConstants {
    n: usize,
}

impl KernelConstants {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Riesz normalization `2^a pi^{n/2} Gamma(a/2) / Gamma((n-a)/2)`.
    ///
    /// Errors when either gamma factor sits on a pole; the `(n-a)/2` poles
    /// are exactly the logarithmic kernel cases.
    pub fn riesz_constant(&self, alpha: f64) -> Result<f64> {
        let nf = self.n as f64;
        let num = gamma_checked(alpha / 2.0)?;
        let den = gamma_checked((nf - alpha) / 2.0)?;
        Ok(2f64.powf(alpha) * PI.powf(nf / 2.0) * num / den)
    }

    /// Surface area of the unit sphere in `R^n`.
    pub fn sphere_area(&self) -> f64 {
        let nf = self.n as f64;
        2.0 * PI.powf(nf / 2.0) / statrs::function::gamma::gamma(nf / 2.0)
    }

    /// Pizzetti coefficient of `r^{2j} (Laplacian^j f)(x)` in the sphere
    /// average of `f` over the radius-`r` sphere about `x`.
    pub fn pizzetti_coeff(&self, j: usize) -> f64 {
        let nf = self.n as f64;
        let mut h = 1.0;
        for i in 0..j {
            h /= nf + 2.0 * i as f64;
        }
        for i in 1..=j {
            h /= 2.0 * i as f64;
        }
        h
    }

    /// Integral of the monomial `w^kappa` over the unit sphere; zero unless
    /// every exponent is even.
    pub fn angular_moment(&self, kappa: &[u32]) -> f64 {
        assert_eq!(kappa.len(), self.n);
        if kappa.iter().any(|&k| k % 2 == 1) {
            return 0.0;
        }
        let total: u32 = kappa.iter().sum();
        let mut v = 2.0;
        for &k in kappa {
            v *= statrs::function::gamma::gamma((k as f64 + 1.0) / 2.0);
        }
        v / statrs::function::gamma::gamma((total as f64 + self.n as f64) / 2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_reflection_matches_known_values() {
        assert_relative_eq!(
            gamma_checked(-0.5).unwrap(),
            -2.0 * PI.sqrt(),
            max_relative = 1e-13
        );
        assert_relative_eq!(
            gamma_checked(-1.5).unwrap(),
            4.0 * PI.sqrt() / 3.0,
            max_relative = 1e-13
        );
        assert!(gamma_checked(0.0).is_err());
        assert!(gamma_checked(-3.0).is_err());
    }

    #[test]
    fn sphere_areas_match_closed_forms() {
        assert_relative_eq!(
            KernelConstants::new(2).unwrap().sphere_area(),
            2.0 * PI,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            KernelConstants::new(3).unwrap().sphere_area(),
            4.0 * PI,
            max_relative = 1e-14
        );
    }

    #[test]
    fn riesz_constant_fixture_and_poles() {
        let c3 = KernelConstants::new(3).unwrap();
        assert_relative_eq!(c3.riesz_constant(2.0).unwrap(), 4.0 * PI, max_relative = 1e-13);
        // alpha = n + 2m hits the Gamma((n - alpha)/2) pole.
        assert!(c3.riesz_constant(3.0).is_err());
        assert!(c3.riesz_constant(5.0).is_err());
        assert!(c3.riesz_constant(0.0).is_err());
    }

    #[test]
    fn pizzetti_coefficients_positive_and_decreasing() {
        let c = KernelConstants::new(3).unwrap();
        assert_eq!(c.pizzetti_coeff(0), 1.0);
        assert_relative_eq!(c.pizzetti_coeff(1), 1.0 / 6.0, max_relative = 1e-14);
        let mut prev = 1.0;
        for j in 1..8 {
            let h = c.pizzetti_coeff(j);
            assert!(h > 0.0 && h < prev);
            prev = h;
        }
    }

    #[test]
    fn angular_moments_match_sphere_integrals() {
        let c = KernelConstants::new(3).unwrap();
        assert_relative_eq!(c.angular_moment(&[0, 0, 0]), 4.0 * PI, max_relative = 1e-13);
        assert_relative_eq!(
            c.angular_moment(&[2, 0, 0]),
            4.0 * PI / 3.0,
            max_relative = 1e-13
        );
        assert_eq!(c.angular_moment(&[1, 0, 0]), 0.0);
        assert_eq!(c.angular_moment(&[1, 1, 0]), 0.0);
        // int w1^2 w2^2 over S^2 is 4 pi / 15.
        assert_relative_eq!(
            c.angular_moment(&[2, 2, 0]),
            4.0 * PI / 15.0,
            max_relative = 1e-13
        );
    }
}
