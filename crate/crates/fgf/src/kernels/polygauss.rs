//! Polynomials times a centered Gaussian, closed under calculus operations.

use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Finite sum of terms `c x^kappa exp(-a |x|^2)` with a shared width `a`.
///
/// The class is closed under differentiation, products, Fourier transforms,
/// and correlations, which makes moments, L2 pairings, and sphere integrals
/// available in closed form.
#[derive(Debug, Clone)]
pub struct PolyGauss {
    n: usize,
    width: f64,
    terms: BTreeMap<Vec<u32>, Complex64>,
}

impl PolyGauss {
    pub fn new(n: usize, width: f64) -> Self {
        assert!(n > 0 && width > 0.0);
        Self {
            n,
            width,
            terms: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Gaussian decay rate `a` in `exp(-a |x|^2)`.
    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn add_term(&mut self, powers: &[u32], c: Complex64) {
        assert_eq!(powers.len(), self.n);
        let entry = self.terms.entry(powers.to_vec()).or_insert(Complex64::ZERO);
        *entry += c;
        if entry.norm() == 0.0 {
            self.terms.remove(powers);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], Complex64)> {
        self.terms.iter().map(|(k, &c)| (k.as_slice(), c))
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest coefficient magnitude, as a scale for tolerances.
    pub fn coeff_scale(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Highest total degree among the monomials.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|k| k.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn scaled(mut self, c: Complex64) -> Self {
        for v in self.terms.values_mut() {
            *v *= c;
        }
        self
    }

    /// Adds `c * other`; widths and dimensions must agree.
    pub fn add_scaled(&mut self, other: &Self, c: Complex64) {
        assert_eq!(self.n, other.n);
        assert_eq!(self.width.to_bits(), other.width.to_bits());
        for (k, &v) in &other.terms {
            self.add_term(k, v * c);
        }
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        assert_eq!(x.len(), self.n);
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let env = (-self.width * r2).exp();
        let mut s = Complex64::ZERO;
        for (k, &c) in &self.terms {
            let mono: f64 = k
                .iter()
                .zip(x)
                .map(|(&p, &v)| v.powi(p as i32))
                .product();
            s += c * mono;
        }
        s * env
    }

    pub fn derivative(&self, axis: usize) -> Self {
        assert!(axis < self.n);
        let mut out = Self::new(self.n, self.width);
        for (k, &c) in &self.terms {
            if k[axis] > 0 {
                let mut lower = k.clone();
                lower[axis] -= 1;
                out.add_term(&lower, c * k[axis] as f64);
            }
            let mut upper = k.clone();
            upper[axis] += 1;
            out.add_term(&upper, c * (-2.0 * self.width));
        }
        out
    }

    pub fn laplacian(&self) -> Self {
        let mut out = Self::new(self.n, self.width);
        for axis in 0..self.n {
            out.add_scaled(&self.derivative(axis).derivative(axis), Complex64::ONE);
        }
        out
    }

    pub fn laplacian_power(&self, m: usize) -> Self {
        let mut out = self.clone();
        for _ in 0..m {
            out = out.laplacian();
        }
        out
    }

    pub fn mul_monomial(&self, powers: &[u32]) -> Self {
        assert_eq!(powers.len(), self.n);
        let mut out = Self::new(self.n, self.width);
        for (k, &c) in &self.terms {
            let shifted: Vec<u32> = k.iter().zip(powers).map(|(a, b)| a + b).collect();
            out.add_term(&shifted, c);
        }
        out
    }

    /// Reflection `x -> -x`.
    pub fn reflected(&self) -> Self {
        let mut out = Self::new(self.n, self.width);
        for (k, &c) in &self.terms {
            let total: u32 = k.iter().sum();
            let sign = if total % 2 == 0 { 1.0 } else { -1.0 };
            out.add_term(k, c * sign);
        }
        out
    }

    pub fn conjugated(&self) -> Self {
        let mut out = Self::new(self.n, self.width);
        for (k, &c) in &self.terms {
            out.add_term(k, c.conj());
        }
        out
    }

    /// Pointwise product; widths add.
    pub fn product(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = Self::new(self.n, self.width + other.width);
        for (k1, &c1) in &self.terms {
            for (k2, &c2) in &other.terms {
                let powers: Vec<u32> = k1.iter().zip(k2).map(|(a, b)| a + b).collect();
                out.add_term(&powers, c1 * c2);
            }
        }
        out
    }

    /// Integral over all of `R^n`.
    pub fn integral(&self) -> Complex64 {
        let mut s = Complex64::ZERO;
        for (k, &c) in &self.terms {
            let mut m = 1.0;
            for &p in k {
                m *= gauss_moment_1d(p, self.width);
                if m == 0.0 {
                    break;
                }
            }
            s += c * m;
        }
        s
    }

    /// Moment `int x^powers f(x) dx`.
    pub fn moment(&self, powers: &[u32]) -> Complex64 {
        self.mul_monomial(powers).integral()
    }

    /// Unconjugated pairing `int f g dx`.
    pub fn l2_product(&self, other: &Self) -> Complex64 {
        self.product(other).integral()
    }

    /// Fourier transform in the symmetric convention
    /// `(2 pi)^{-n/2} int f(x) e^{-i p x} dx`.
    pub fn fourier(&self) -> Self {
        let b = 1.0 / (4.0 * self.width);
        let scale = (2.0 * self.width).powf(-(self.n as f64) / 2.0);
        let mut out = Self::new(self.n, b);
        let zero = vec![0u32; self.n];
        for (kappa, &c) in &self.terms {
            // x^kappa maps to (i d/dp)^kappa applied to the transformed Gaussian.
            let mut t = Self::new(self.n, b);
            t.add_term(&zero, Complex64::new(scale, 0.0));
            for axis in 0..self.n {
                for _ in 0..kappa[axis] {
                    t = t.derivative(axis);
                }
            }
            let total: u32 = kappa.iter().sum();
            out.add_scaled(&t, c * Complex64::i().powu(total));
        }
        out
    }

    /// Correlation `C(z) = int f(x) g(x - z) dx` as a function of `z`.
    pub fn correlation(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let a = self.width;
        let b = other.width;
        let sum = a + b;
        let c_width = a * b / sum;
        let mu = b / sum;
        let nu = a / sum;
        let mut out = Self::new(self.n, c_width);
        for (kappa, &ck) in &self.terms {
            for (lambda, &dl) in &other.terms {
                for_each_sub(kappa, |rho| {
                    // x = u + mu z contributes u^rho (mu z)^{kappa - rho}.
                    let mut c1 = 1.0;
                    for d in 0..self.n {
                        c1 *= binomial_f64(kappa[d], rho[d])
                            * mu.powi((kappa[d] - rho[d]) as i32);
                    }
                    for_each_sub(lambda, |tau| {
                        // x - z = u - nu z contributes u^tau (-nu z)^{lambda - tau}.
                        let mut parity_ok = true;
                        let mut gauss = 1.0;
                        for d in 0..self.n {
                            let p = rho[d] + tau[d];
                            if p % 2 == 1 {
                                parity_ok = false;
                                break;
                            }
                            gauss *= gauss_moment_1d(p, sum);
                        }
                        if !parity_ok {
                            return;
                        }
                        let mut c2 = c1;
                        for d in 0..self.n {
                            c2 *= binomial_f64(lambda[d], tau[d])
                                * (-nu).powi((lambda[d] - tau[d]) as i32);
                        }
                        let powers: Vec<u32> = (0..self.n)
                            .map(|d| (kappa[d] - rho[d]) + (lambda[d] - tau[d]))
                            .collect();
                        out.add_term(&powers, ck * dl * c2 * gauss);
                    });
                });
            }
        }
        out
    }

    /// Integral of `f` over the sphere of radius `r` about `center`.
    pub fn shell_integral(&self, center: &[f64], r: f64) -> Complex64 {
        assert_eq!(center.len(), self.n);
        assert!(r >= 0.0);
        let a = self.width;
        let c2: f64 = center.iter().map(|v| v * v).sum();
        // f(center + r w) has angular dependence through exp(v . w) with
        // v = -2 a r center, times a monomial expansion in w.
        let v: Vec<f64> = center.iter().map(|&c| -2.0 * a * r * c).collect();
        let u: f64 = v.iter().map(|t| t * t).sum();
        let envelope = (-a * (c2 + r * r)).exp();
        let mut angular_cache: BTreeMap<Vec<u32>, Vec<(Vec<u32>, usize, f64)>> = BTreeMap::new();
        let mut total = Complex64::ZERO;
        for (kappa, &ck) in &self.terms {
            for_each_sub(kappa, |gamma| {
                // (center + r w)^kappa splits into center^{kappa-gamma} r^{|gamma|} w^gamma.
                let mut shape = 1.0;
                for d in 0..self.n {
                    shape *= binomial_f64(kappa[d], gamma[d])
                        * center[d].powi((kappa[d] - gamma[d]) as i32);
                }
                if shape == 0.0 {
                    return;
                }
                let gtotal: u32 = gamma.iter().sum();
                let rpow = r.powi(gtotal as i32);
                let entry = angular_cache
                    .entry(gamma.to_vec())
                    .or_insert_with(|| radial_derivative_terms(gamma));
                let mut moment = 0.0;
                for (delta, j, q) in entry.iter() {
                    let mut vpow = 1.0;
                    for d in 0..self.n {
                        vpow *= v[d].powi(delta[d] as i32);
                    }
                    if vpow != 0.0 {
                        moment += q * vpow * sphere_series(self.n, *j, u);
                    }
                }
                total += ck * (shape * rpow * moment);
            });
        }
        total * envelope
    }
}

/// One-dimensional Gaussian moment `int x^m exp(-w x^2) dx`.
fn gauss_moment_1d(m: u32, w: f64) -> f64 {
    if m % 2 == 1 {
        return 0.0;
    }
    let mut v = (PI / w).sqrt();
    let mut odd = 1.0;
    for _ in 0..m / 2 {
        v *= odd / (2.0 * w);
        odd += 2.0;
    }
    v
}

fn binomial_f64(n: u32, k: u32) -> f64 {
    let mut v = 1.0;
    for i in 0..k.min(n - k) {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

/// Visits every multi-index `g` with `g <= kappa` componentwise.
fn for_each_sub(kappa: &[u32], mut f: impl FnMut(&[u32])) {
    let mut g = vec![0u32; kappa.len()];
    loop {
        f(&g);
        let mut d = 0;
        loop {
            if d == kappa.len() {
                return;
            }
            if g[d] < kappa[d] {
                g[d] += 1;
                break;
            }
            g[d] = 0;
            d += 1;
        }
    }
}

/// Derivatives `d^gamma` of a radial profile `h(|v|^2)`, expressed as a sum
/// of terms `q v^delta h^{(j)}(|v|^2)`.
fn radial_derivative_terms(gamma: &[u32]) -> Vec<(Vec<u32>, usize, f64)> {
    let n = gamma.len();
    let mut terms: BTreeMap<(Vec<u32>, usize), f64> = BTreeMap::new();
    terms.insert((vec![0u32; n], 0), 1.0);
    for axis in 0..n {
        for _ in 0..gamma[axis] {
            let mut next: BTreeMap<(Vec<u32>, usize), f64> = BTreeMap::new();
            for ((delta, j), q) in &terms {
                if delta[axis] > 0 {
                    let mut lower = delta.clone();
                    lower[axis] -= 1;
                    *next.entry((lower, *j)).or_insert(0.0) += q * delta[axis] as f64;
                }
                let mut upper = delta.clone();
                upper[axis] += 1;
                *next.entry((upper, *j + 1)).or_insert(0.0) += 2.0 * q;
            }
            terms = next;
        }
    }
    terms.into_iter().map(|((d, j), q)| (d, j, q)).collect()
}

/// `j`-th derivative of `h(u) = int_{S^{n-1}} exp(v . w) dOmega` as a
/// function of `u = |v|^2`; an entire series with positive coefficients.
fn sphere_series(n: usize, j: usize, u: f64) -> f64 {
    assert!(u >= 0.0);
    let half_n = n as f64 / 2.0;
    let omega = 2.0 * PI.powf(half_n) / statrs::function::gamma::gamma(half_n);
    // Leading coefficient j! c_j with c_k = omega / (4^k k! (n/2)_k).
    let mut lead = omega;
    for k in 0..j {
        lead /= 4.0 * (half_n + k as f64);
    }
    let mut term = lead;
    let mut sum = lead;
    let mut t = 0usize;
    loop {
        let tf = t as f64;
        term *= u / (4.0 * (half_n + tf + j as f64) * (tf + 1.0));
        sum += term;
        t += 1;
        if term <= sum * 1e-17 || t > 20_000 {
            break;
        }
    }
    sum
}
