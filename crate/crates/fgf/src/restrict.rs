//! Restriction of scalar torus fields to a coordinate hyperplane.

use num_complex::Complex64;

use crate::field::{FieldSpec, Variant};
use crate::spectrum::TorusSpectrum;
use crate::{Error, Result};

/// Restricts a scalar spectrum on the n-torus to the hyperplane where the
/// last coordinate equals `x0`. The result lives on the (n-1)-torus with the
/// same cutoff: `c'(a') = (2pi)^{-1/2} sum_m c(a', m) e^{i m x0}`.
pub fn restrict_hyperplane(sp: &TorusSpectrum, x0: f64) -> Result<TorusSpectrum> {
    if sp.degree() != 0 {
        return Err(Error::InvalidArgument("restriction acts on scalar fields".into()));
    }
    let n = sp.n();
    if n < 2 {
        return Err(Error::InvalidArgument("restriction needs dimension at least 2".into()));
    }
    let cutoff = sp.cutoff();
    let mut out = TorusSpectrum::zeros(n - 1, 0, cutoff, sp.value_kind())?;
    let stride = sp.mode_stride();
    let norm = (2.0 * std::f64::consts::PI).sqrt().recip();
    for oidx in 0..out.mode_count() {
        let ap = out.mode_at(oidx);
        let mut acc = vec![Complex64::ZERO; stride];
        let mut alpha = ap.clone();
        alpha.push(0);
        for m in -cutoff..=cutoff {
            alpha[n - 1] = m;
            let idx = sp.mode_index(&alpha).expect("mode in range");
            let phase = Complex64::from_polar(1.0, m as f64 * x0);
            for (a, c) in acc.iter_mut().zip(sp.coeff(idx)) {
                *a += c * phase;
            }
        }
        for a in acc.iter_mut() {
            *a *= norm;
        }
        out.coeff_mut(oidx).copy_from_slice(&acc);
    }
    Ok(out)
}

/// Exact variance of one restricted-mode coefficient for a plain scalar
/// field: `(2pi)^{-1} sum_m (|a'|^2 + m^2)^{-s} / beta` over the cutoff.
pub fn restricted_mode_variance(spec: &FieldSpec, alpha_prime: &[i64], cutoff: i64) -> Result<f64> {
    if spec.k != 0 || spec.variant != Variant::Plain {
        return Err(Error::InvalidArgument(
            "restricted variance is defined for plain scalar fields".into(),
        ));
    }
    if alpha_prime.len() + 1 != spec.n {
        return Err(Error::InvalidArgument("restricted mode has dimension n - 1".into()));
    }
    let a2: f64 = alpha_prime.iter().map(|&a| (a * a) as f64).sum();
    let mut sum = 0.0;
    for m in -cutoff..=cutoff {
        let q = a2 + (m * m) as f64;
        if q == 0.0 {
            if spec.s == 0.0 {
                sum += 1.0;
            }
            continue;
        }
        sum += q.powf(-spec.s);
    }
    Ok(sum / (2.0 * std::f64::consts::PI * spec.beta))
}

/// Fits the restricted-mode variances in the modulus window to the power law
/// `C |a'|^(1-2s)` implied by the Hurst parameter, with the constant chosen
/// by least squares in log space. Returns the constant and the worst
/// relative deviation from the fitted law.
pub fn hurst_window_fit(
    spec: &FieldSpec,
    window: (f64, f64),
    cutoff: i64,
) -> Result<(f64, f64)> {
    let exponent = 1.0 - 2.0 * spec.s;
    let dim = spec.n - 1;
    let bound = window.1.ceil() as i64;
    let span = (2 * bound + 1) as usize;
    let mut digits = vec![0usize; dim];
    let mut moduli_vars: Vec<(f64, f64)> = Vec::new();
    loop {
        let ap: Vec<i64> = digits.iter().map(|&d| d as i64 - bound).collect();
        let a2: f64 = ap.iter().map(|&a| (a * a) as f64).sum();
        let r = a2.sqrt();
        if r >= window.0 && r <= window.1 {
            moduli_vars.push((r, restricted_mode_variance(spec, &ap, cutoff)?));
        }
        let mut done = true;
        for d in (0..dim).rev() {
            digits[d] += 1;
            if digits[d] < span {
                done = false;
                break;
            }
            digits[d] = 0;
        }
        if done {
            break;
        }
    }
    if moduli_vars.len() < 2 {
        return Err(Error::InvalidArgument("window contains fewer than two modes".into()));
    }
    let log_c = moduli_vars
        .iter()
        .map(|(r, v)| v.ln() - exponent * r.ln())
        .sum::<f64>()
        / moduli_vars.len() as f64;
    let c = log_c.exp();
    let mut worst: f64 = 0.0;
    for (r, v) in &moduli_vars {
        let fitted = c * r.powf(exponent);
        worst = worst.max((v / fitted - 1.0).abs());
    }
    Ok((c, worst))
}
