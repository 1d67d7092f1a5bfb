//! Green's functions and the fractional Laplacian acting on test functions.

use super::quad::{
    gauss_jacobi_unit, gl16, graded_edges, halved_edges, integrate_panels, QuadResult,
};
use super::testfn::TestFunction;
use super::KernelConstants;
use crate::{Error, Result};
use std::f64::consts::PI;

/// Matching tolerance for the integer-indexed kernel cases.
const CASE_TOL: f64 = 1e-9;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Detects `alpha = n + 2m`, the logarithmic kernel orders.
fn log_case(alpha: f64, n: usize) -> Option<usize> {
    let t = alpha - n as f64;
    if t < -CASE_TOL {
        return None;
    }
    let m = (t / 2.0).round();
    if m >= 0.0 && (t - 2.0 * m).abs() < CASE_TOL {
        Some(m as usize)
    } else {
        None
    }
}

/// Detects `alpha = -2m`, where the operator is the differential polynomial
/// `(-Laplacian)^m`.
fn polynomial_case(alpha: f64) -> Option<usize> {
    if alpha > CASE_TOL {
        return None;
    }
    let m = (-alpha / 2.0).round();
    if (alpha + 2.0 * m).abs() < CASE_TOL {
        Some(m as usize)
    } else {
        None
    }
}

/// Coefficient of `r^{2m} log r` in the kernel at `alpha = n + 2m`.
fn log_coefficient(n: usize, m: usize) -> f64 {
    let sign = if m % 2 == 0 { -1.0 } else { 1.0 };
    let mut m_fact = 1.0;
    for i in 1..=m {
        m_fact *= i as f64;
    }
    let g = statrs::function::gamma::gamma((n + 2 * m) as f64 / 2.0);
    sign * 2.0 * 2f64.powi(-((n + 2 * m) as i32)) * PI.powf(-(n as f64) / 2.0) / (m_fact * g)
}

/// Pointwise covariance kernel of the scalar field of order `s` on `R^n`:
/// a power of the separation away from `2s - n` in `2N`, a polynomial times
/// `log` on that set. Requires `s > 0` and positive separation.
pub fn green_kernel(s: f64, n: usize, r: f64) -> Result<f64> {
    let constants = KernelConstants::new(n)?;
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(
            "kernel requires positive separation".into(),
        ));
    }
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(
            "pointwise kernel requires s > 0; nonpositive orders only pair against test functions"
                .into(),
        ));
    }
    let alpha = 2.0 * s;
    if let Some(m) = log_case(alpha, n) {
        Ok(log_coefficient(n, m) * r.powi(2 * m as i32) * r.ln())
    } else {
        Ok(r.powf(alpha - n as f64) / constants.riesz_constant(alpha)?)
    }
}

/// Radial kernel factor of the convolution integrand.
enum RadialKernel {
    /// `r^exponent / norm` with `exponent = alpha - n`.
    Power { exponent: f64, norm: f64 },
    /// `coef * r^power * log r`.
    Log { power: i32, coef: f64 },
}

impl RadialKernel {
    fn eval(&self, r: f64) -> f64 {
        match self {
            Self::Power { exponent, norm } => r.powf(*exponent) / norm,
            Self::Log { power, coef } => coef * r.powi(*power) * r.ln(),
        }
    }

    /// `int_0^delta k(r) r^q dr`; the exponent must make zero integrable.
    fn lower_moment(&self, delta: f64, q: f64) -> f64 {
        match self {
            Self::Power { exponent, norm } => {
                let t = exponent + q + 1.0;
                debug_assert!(t > 0.0);
                delta.powf(t) / (t * norm)
            }
            Self::Log { power, coef } => {
                let t = *power as f64 + q + 1.0;
                coef * delta.powf(t) * (delta.ln() / t - 1.0 / (t * t))
            }
        }
    }

    /// `int_delta^infty k(r) r^q dr`; only the decaying power case occurs.
    fn upper_moment(&self, delta: f64, q: f64) -> f64 {
        match self {
            Self::Power { exponent, norm } => {
                let t = exponent + q + 1.0;
                debug_assert!(t < 0.0);
                -delta.powf(t) / (t * norm)
            }
            Self::Log { .. } => unreachable!("log kernels carry no subtracted head"),
        }
    }
}

/// `((-Laplacian)^{-alpha/2} phi)(x)` with an a-posteriori error estimate.
///
/// Positive orders convolve against the Riesz or logarithmic kernel and
/// need enough vanishing moments; orders in `(-2m, -2(m-1))` subtract the
/// degree-`m` head of the sphere average; `alpha = -2m` is evaluated as the
/// exact differential polynomial.
pub fn fractional_apply(phi: &TestFunction, alpha: f64, x: &[f64]) -> Result<QuadResult> {
    let n = phi.n();
    if x.len() != n {
        return Err(Error::InvalidArgument(
            "evaluation point dimension mismatch".into(),
        ));
    }
    if let Some(m) = polynomial_case(alpha) {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let value = sign * phi.func().laplacian_power(m).eval(x).re;
        let scale = phi.func().coeff_scale().max(value.abs());
        return Ok(QuadResult {
            value,
            error: 1e-13 * scale,
        });
    }
    let constants = KernelConstants::new(n)?;
    if alpha > 0.0 {
        if let Some(m) = log_case(alpha, n) {
            if phi.order() <= m {
                return Err(Error::InvalidArgument(format!(
                    "order {alpha} needs more than {m} vanishing-moment layers, found {}",
                    phi.order()
                )));
            }
            let kernel = RadialKernel::Log {
                power: 2 * m as i32,
                coef: log_coefficient(n, m),
            };
            return radial_apply(phi, x, kernel, 0);
        }
        if 2.0 * phi.order() as f64 <= alpha - n as f64 {
            return Err(Error::InvalidArgument(format!(
                "order {alpha} in dimension {n} needs transforms vanishing faster than |p|^{}",
                alpha - n as f64
            )));
        }
        let kernel = RadialKernel::Power {
            exponent: alpha - n as f64,
            norm: constants.riesz_constant(alpha)?,
        };
        return radial_apply(phi, x, kernel, 0);
    }
    let m = (-alpha / 2.0).ceil() as usize;
    let kernel = RadialKernel::Power {
        exponent: alpha - n as f64,
        norm: constants.riesz_constant(alpha)?,
    };
    radial_apply(phi, x, kernel, m)
}

/// Shared radial convolution: closed-form sphere-average series near zero,
/// graded panels in the bulk, closed-form or bounded tails.
fn radial_apply(
    phi: &TestFunction,
    x: &[f64],
    kernel: RadialKernel,
    head: usize,
) -> Result<QuadResult> {
    let n = phi.n();
    let constants = KernelConstants::new(n)?;
    let wn = constants.sphere_area();
    let a = phi.width();
    let f = phi.func();

    // Iterated Laplacians at x feed the series panel and the subtracted head.
    let series_len = (head + 6).max(8);
    let mut lap_values = Vec::with_capacity(series_len + 1);
    {
        let mut g = f.clone();
        for j in 0..=series_len {
            lap_values.push(g.eval(x).re);
            if j < series_len {
                g = g.laplacian();
            }
        }
    }
    let scale = f.coeff_scale().max(lap_values[0].abs()).max(1e-300);
    let q_base = (n - 1) as f64;
    let delta = 0.25 / a.sqrt();

    // [0, delta]: sphere-average series integrated in closed form, starting
    // at the first order the head subtraction leaves.
    let mut near = 0.0;
    for j in head..series_len {
        near += wn
            * constants.pizzetti_coeff(j)
            * lap_values[j]
            * kernel.lower_moment(delta, q_base + 2.0 * j as f64);
    }
    let near_rem = 4.0
        * (wn * constants.pizzetti_coeff(series_len)
            * lap_values[series_len]
            * kernel.lower_moment(delta, q_base + 2.0 * series_len as f64))
        .abs();

    // Subtracted head over [delta, infinity), in closed form.
    let mut head_part = 0.0;
    for j in 0..head {
        head_part -= wn
            * constants.pizzetti_coeff(j)
            * lap_values[j]
            * kernel.upper_moment(delta, q_base + 2.0 * j as f64);
    }

    // Truncation point: march outward until the integrand is negligible.
    let xnorm = norm(x);
    let mut r_t = (xnorm + (46.0 / a).sqrt()).max(4.0 * delta);
    for _ in 0..60 {
        let bound = kernel.eval(r_t).abs() * r_t.powf(q_base) * f.shell_integral(x, r_t).re.abs();
        if bound <= 1e-17 * scale {
            break;
        }
        r_t *= 1.2;
    }
    let tail_bound =
        2.0 * kernel.eval(r_t).abs() * r_t.powf(q_base) * f.shell_integral(x, r_t).re.abs();

    // Bulk panels [delta, r_t] for the full shell profile.
    let edges = graded_edges(delta, r_t, delta / 2.0, 0.35 / a.sqrt());
    let rule = gl16();
    let mut integrand = |r: f64| kernel.eval(r) * r.powf(q_base) * f.shell_integral(x, r).re;
    let mid = integrate_panels(rule, &edges, &mut integrand);
    let mid_fine = integrate_panels(rule, &halved_edges(&edges), &mut integrand);

    let value = near + head_part + mid_fine;
    let error = near_rem + 2.0 * (mid_fine - mid).abs() + tail_bound + 1e-13 * scale;
    Ok(QuadResult { value, error })
}

/// Spherical Bessel function `j_0`.
fn j0(u: f64) -> f64 {
    if u.abs() < 1e-3 {
        1.0 - u * u / 6.0 + u.powi(4) / 120.0
    } else {
        u.sin() / u
    }
}

/// Fourier-side oracle in dimension 3 for radial test functions: evaluates
/// `(-Laplacian)^{-alpha/2} phi` at distance `radius` from the origin by
/// radial quadrature of `|p|^{-alpha} phi_hat`.
pub fn fourier_radial_value(phi: &TestFunction, alpha: f64, radius: f64) -> Result<QuadResult> {
    if phi.n() != 3 {
        return Err(Error::InvalidArgument(
            "the radial transform oracle is built for dimension 3".into(),
        ));
    }
    if radius < 0.0 {
        return Err(Error::InvalidArgument("radius must be nonnegative".into()));
    }
    let order = phi.order();
    // hat(q) = (-q^2)^order base_hat(q); fold the zero factor into the
    // quadrature weight so the singular end stays smooth.
    let b_exp = 2.0 - alpha + 2.0 * order as f64;
    if b_exp <= -1.0 {
        return Err(Error::InvalidArgument(
            "transform is not integrable at zero for this order".into(),
        ));
    }
    let base_hat = phi.base().fourier();
    let bw = base_hat.width();
    let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
    let smooth = |q: f64| sign * base_hat.eval(&[q, 0.0, 0.0]).re * j0(q * radius);

    let osc = if radius > 0.0 {
        PI / (2.0 * radius)
    } else {
        f64::INFINITY
    };
    let q1 = (0.35 / bw.sqrt()).min(osc / 2.0);
    let near = gauss_jacobi_unit(14, b_exp).integrate_weighted(0.0, q1, b_exp, smooth);
    let near_fine = gauss_jacobi_unit(22, b_exp).integrate_weighted(0.0, q1, b_exp, smooth);

    let q_t = (46.0 / bw).sqrt().max(4.0 * q1);
    let step = (0.3 / bw.sqrt()).min(osc);
    let edges = graded_edges(q1, q_t, step.min(q1), step);
    let mut mid_integrand = |q: f64| q.powf(b_exp) * smooth(q);
    let mid = integrate_panels(gl16(), &edges, &mut mid_integrand);
    let mid_fine = integrate_panels(gl16(), &halved_edges(&edges), &mut mid_integrand);
    let tail = 2.0 * mid_integrand(q_t).abs() * q_t;

    let pref = (2.0 * PI).powf(-1.5) * 4.0 * PI;
    let value = pref * (near_fine + mid_fine);
    let error = pref * ((near - near_fine).abs() + 2.0 * (mid - mid_fine).abs() + tail)
        + 1e-13 * value.abs();
    Ok(QuadResult { value, error })
}

/// Round-trip composition in dimension 3: applies `(-Laplacian)^{-alpha/2}`
/// by quadrature, then `(-Laplacian)^{+alpha/2}` to the numeric potential,
/// at the point `x`. For consistent schemes the result returns `phi(x)`.
///
/// The forward order must be positive and avoid `1`, the even integers, and
/// `3 + 2N`; the backward step always runs through the subtracted-head
/// branch, never the exact polynomial one.
pub fn composed_apply(phi: &TestFunction, alpha: f64, x: &[f64]) -> Result<QuadResult> {
    let n = phi.n();
    if n != 3 || x.len() != 3 {
        return Err(Error::InvalidArgument(
            "composition quadrature is built for dimension 3".into(),
        ));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(
            "composition needs a positive forward order".into(),
        ));
    }
    if polynomial_case(-alpha).is_some()
        || log_case(alpha, 3).is_some()
        || (alpha - 1.0).abs() < CASE_TOL
    {
        return Err(Error::InvalidArgument(
            "forward order must avoid 1, the even integers, and 3 + 2N".into(),
        ));
    }
    if 2.0 * phi.order() as f64 <= alpha - 3.0 {
        return Err(Error::InvalidArgument(
            "not enough vanishing moments for the forward kernel".into(),
        ));
    }

    let constants = KernelConstants::new(3)?;
    let gamma_fwd = constants.riesz_constant(alpha)?;
    let gamma_back = constants.riesz_constant(-alpha)?;
    let m_back = (alpha / 2.0).ceil() as usize;

    // Taylor head of the potential g at x:
    // Laplacian^j g = (-1)^j (-Laplacian)^{-(alpha - 2j)/2} phi.
    let mut heads = Vec::with_capacity(m_back);
    let mut head_errs = Vec::with_capacity(m_back);
    for j in 0..m_back {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let r = fractional_apply(phi, alpha - 2.0 * j as f64, x)?;
        heads.push(sign * r.value);
        head_errs.push(r.error);
    }

    let coarse = composed_outer(phi, alpha, x, &heads, gamma_fwd, m_back, 1)?;
    let fine = composed_outer(phi, alpha, x, &heads, gamma_fwd, m_back, 2)?;

    let value = fine.integral / gamma_back;
    let mut error = (2.0 * (fine.integral - coarse.integral).abs() + fine.aux_bound)
        / gamma_back.abs();
    for j in 0..m_back {
        error += fine.head_sensitivity[j] * head_errs[j] / gamma_back.abs();
    }
    error += 1e-12 * value.abs().max(phi.func().coeff_scale() * 1e-12);
    Ok(QuadResult { value, error })
}

struct OuterResult {
    integral: f64,
    aux_bound: f64,
    head_sensitivity: Vec<f64>,
}

/// Outer quadrature of `r^{-alpha-1} [V(r) - head(r)]` where `V` is the
/// sphere integral of the forward potential, itself evaluated by nested
/// quadrature through the two-sphere reduction of the Riesz kernel.
fn composed_outer(
    phi: &TestFunction,
    alpha: f64,
    x: &[f64],
    heads: &[f64],
    gamma_fwd: f64,
    m_back: usize,
    refine: usize,
) -> Result<OuterResult> {
    let constants = KernelConstants::new(3)?;
    let wn = constants.sphere_area();
    let a = phi.width();
    let f = phi.func();
    let scale = f.coeff_scale().max(1e-300);
    let rf = refine as f64;
    let rule = gl16();
    let am1 = alpha - 1.0;

    // Support radius of the shell profile of phi about x.
    let xnorm = norm(x);
    let mut rho_t = (xnorm + (46.0 / a).sqrt()).max(1.0);
    for _ in 0..60 {
        if rho_t * rho_t * f.shell_integral(x, rho_t).re.abs() <= 1e-17 * scale {
            break;
        }
        rho_t *= 1.2;
    }

    // The smooth factor (rho + r)^{alpha-1} uses a fixed table of shell
    // values; the kink factor |rho - r|^{alpha-1} needs r-dependent panels.
    let smooth_edges = graded_edges(0.0, rho_t, 0.1 / (a.sqrt() * rf), 0.3 / (a.sqrt() * rf));
    let mut smooth_table: Vec<(f64, f64, f64)> = Vec::new();
    for pair in smooth_edges.windows(2) {
        let w = pair[1] - pair[0];
        for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
            let rho = pair[0] + w * t;
            smooth_table.push((rho, wt * w, rho * f.shell_integral(x, rho).re));
        }
    }
    let gj_kink = gauss_jacobi_unit(10 * refine, am1);

    let v_of_r = |r: f64| -> f64 {
        let g = |rho: f64| rho * f.shell_integral(x, rho).re;
        // A-part: smooth factor on the fixed table.
        let mut a_int = 0.0;
        for &(rho, w, grho) in &smooth_table {
            a_int += w * grho * (rho + r).powf(am1);
        }
        // B-part: |rho - r|^{alpha-1} factor.
        let b_int = if r < rho_t {
            let w = (0.25 * r).min(rho_t - r).min(0.25 / a.sqrt()).max(1e-12 * rho_t);
            let left_kink = gj_kink.integrate_weighted(0.0, w, am1, |s| g(r - s));
            let right_kink = gj_kink.integrate_weighted(0.0, w, am1, |s| g(r + s));
            // Remaining segments in distance-from-kink coordinates.
            let mut left_far = 0.0;
            if r - w > 0.0 {
                let d_edges = graded_edges(w, r, w, 0.3 / (a.sqrt() * rf));
                left_far =
                    integrate_panels(rule, &d_edges, |d| g(r - d) * d.powf(am1));
            }
            let mut right_far = 0.0;
            if rho_t - r > w {
                let d_edges = graded_edges(w, rho_t - r, w, 0.3 / (a.sqrt() * rf));
                right_far =
                    integrate_panels(rule, &d_edges, |d| g(r + d) * d.powf(am1));
            }
            left_kink + right_kink + left_far + right_far
        } else {
            let mut sum = 0.0;
            for &(rho, w, grho) in &smooth_table {
                sum += w * grho * (r - rho).powf(am1);
            }
            sum
        };
        2.0 * PI / (gamma_fwd * r * am1) * (a_int - b_int)
    };

    let head_at = |r: f64| -> f64 {
        let mut h = 0.0;
        for (j, &hj) in heads.iter().enumerate() {
            h += wn * constants.pizzetti_coeff(j) * hj * r.powi(2 * j as i32);
        }
        h
    };
    let bracket = |r: f64| v_of_r(r) - head_at(r);

    // Outer integral: weighted panel at zero, graded panels in the bulk,
    // closed-form head tails beyond the truncation.
    let delta_r = 0.3 * (1.0 / a.sqrt()).min(1.0);
    let b_exp = 2.0 * m_back as f64 - 1.0 - alpha;
    let gj_near = gauss_jacobi_unit(12 * refine, b_exp);
    let pow2m = 2 * m_back as i32;
    let near = gj_near.integrate_weighted(0.0, delta_r, b_exp, |r| bracket(r) / r.powi(pow2m));

    let r_max = (2.5 * rho_t).max(delta_r * 8.0).max(10.0);
    let out_edges = graded_edges(delta_r, r_max, 0.25 * delta_r / rf, 0.8 / rf);
    let mid = integrate_panels(rule, &out_edges, |r| r.powf(-alpha - 1.0) * bracket(r));

    let mut tail = 0.0;
    let mut head_sens = vec![0.0; m_back];
    for j in 0..m_back {
        let jf = j as f64;
        let t = wn * constants.pizzetti_coeff(j) * r_max.powf(2.0 * jf - alpha)
            / (alpha - 2.0 * jf);
        tail -= heads[j] * t;
        // Sensitivity of near panel, bulk, and tail to a unit head change.
        let near_sens = gj_near
            .integrate_weighted(0.0, delta_r, b_exp, |r| {
                wn * constants.pizzetti_coeff(j) * r.powi(2 * j as i32) / r.powi(pow2m)
            })
            .abs();
        let bulk_sens = (wn * constants.pizzetti_coeff(j)
            * (r_max.powf(2.0 * jf - alpha) - delta_r.powf(2.0 * jf - alpha))
            / (2.0 * jf - alpha))
            .abs();
        head_sens[j] = near_sens + bulk_sens + t.abs();
    }
    // Potential tail beyond r_max decays at least like r^{alpha-3}.
    let aux = 2.0 * v_of_r(r_max).abs() * r_max.powf(-alpha) / 3.0;

    Ok(OuterResult {
        integral: near + mid + tail,
        aux_bound: aux,
        head_sensitivity: head_sens,
    })
}
