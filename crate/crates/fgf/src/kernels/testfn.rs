//! Schwartz test functions with vanishing moments and exact transforms.

use super::polygauss::PolyGauss;
use crate::rng::{root_rng, standard_normal};
use crate::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Test function `phi = Laplacian^order (base)` for a polynomial-Gaussian
/// base profile.
///
/// Applying `order` Laplacians makes every moment of degree below
/// `2 * order` vanish and puts an explicit `|p|^{2 order}` factor in front
/// of the Fourier transform, which is what the negative-order kernels need.
#[derive(Debug, Clone)]
pub struct TestFunction {
    order: usize,
    base: PolyGauss,
    func: PolyGauss,
}

/// Shape parameters for randomized test functions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestShape {
    /// Gaussian decay rate `a` in `exp(-a |x|^2)`.
    pub width: f64,
    /// Maximum polynomial degree of the base profile.
    pub degree: usize,
    /// Radial profiles use random even polynomials in `|x|`; anisotropic
    /// ones use random Hermite products.
    pub radial: bool,
}

impl Default for TestShape {
    fn default() -> Self {
        Self {
            width: 1.0,
            degree: 2,
            radial: false,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TestFunctionRepr {
    n: usize,
    order: usize,
    width: f64,
    terms: Vec<TermRepr>,
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    powers: Vec<u32>,
    re: f64,
    im: f64,
}

impl TestFunction {
    /// Builds `Laplacian^order (base)`.
    pub fn from_base(base: PolyGauss, order: usize) -> Self {
        let func = base.laplacian_power(order);
        Self { order, base, func }
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn width(&self) -> f64 {
        self.base.width()
    }

    /// The materialized function itself.
    pub fn func(&self) -> &PolyGauss {
        &self.func
    }

    /// The pre-Laplacian profile.
    pub fn base(&self) -> &PolyGauss {
        &self.base
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.func.eval(x).re
    }

    /// Fourier transform of the materialized function.
    pub fn hat(&self) -> PolyGauss {
        self.func.fourier()
    }

    pub fn moment(&self, powers: &[u32]) -> f64 {
        self.func.moment(powers).re
    }

    pub fn to_json(&self) -> String {
        let repr = TestFunctionRepr {
            n: self.n(),
            order: self.order,
            width: self.base.width(),
            terms: self
                .base
                .terms()
                .map(|(k, c)| TermRepr {
                    powers: k.to_vec(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        };
        serde_json::to_string(&repr).expect("test function serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: TestFunctionRepr =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if repr.n == 0 || repr.width <= 0.0 {
            return Err(Error::Format("invalid test function header".into()));
        }
        let mut base = PolyGauss::new(repr.n, repr.width);
        for t in &repr.terms {
            if t.powers.len() != repr.n {
                return Err(Error::Format("term arity mismatch".into()));
            }
            base.add_term(&t.powers, Complex64::new(t.re, t.im));
        }
        Ok(Self::from_base(base, repr.order))
    }
}

/// Physicists' Hermite polynomial coefficients, index = power.
fn hermite_coeffs(k: usize) -> Vec<f64> {
    let mut prev = vec![1.0];
    if k == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 2.0];
    for m in 1..k {
        let mut next = vec![0.0; m + 2];
        for (p, &c) in cur.iter().enumerate() {
            next[p + 1] += 2.0 * c;
        }
        for (p, &c) in prev.iter().enumerate() {
            next[p] -= 2.0 * m as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Random polynomial-Gaussian base profile centered at the origin.
fn random_base(n: usize, shape: &TestShape, seed: u64) -> PolyGauss {
    let mut rng = root_rng(seed);
    let mut base = PolyGauss::new(n, shape.width);
    if shape.radial {
        // Even polynomial in |x|: sum_j c_j (x_1^2 + ... + x_n^2)^j.
        for j in 0..=shape.degree / 2 {
            let c = standard_normal(&mut rng);
            for_each_composition(j as u32, n, &mut |parts| {
                let mut coeff = c;
                // Multinomial j! / prod(parts!).
                let mut numer = 1.0;
                for i in 1..=j {
                    numer *= i as f64;
                }
                let mut denom = 1.0;
                for &p in parts {
                    for i in 1..=p {
                        denom *= i as f64;
                    }
                }
                coeff *= numer / denom;
                let powers: Vec<u32> = parts.iter().map(|&p| 2 * p).collect();
                base.add_term(&powers, Complex64::new(coeff, 0.0));
            });
        }
    } else {
        // A few random Hermite products of bounded total degree.
        let draws = shape.degree + 1;
        for _ in 0..draws {
            let mut orders = vec![0usize; n];
            let mut budget = shape.degree;
            for slot in orders.iter_mut() {
                if budget == 0 {
                    break;
                }
                let o = rng.gen_range(0..=budget.min(3));
                *slot = o;
                budget -= o;
            }
            let c = standard_normal(&mut rng);
            let polys: Vec<Vec<f64>> = orders.iter().map(|&o| hermite_coeffs(o)).collect();
            let mut powers = vec![0u32; n];
            expand_product(&polys, 0, c, &mut powers, &mut base);
        }
    }
    if base.is_empty() {
        base.add_term(&vec![0; n], Complex64::ONE);
    }
    base
}

fn expand_product(
    polys: &[Vec<f64>],
    axis: usize,
    coeff: f64,
    powers: &mut Vec<u32>,
    out: &mut PolyGauss,
) {
    if axis == polys.len() {
        out.add_term(powers, Complex64::new(coeff, 0.0));
        return;
    }
    for (p, &c) in polys[axis].iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        powers[axis] = p as u32;
        expand_product(polys, axis + 1, coeff * c, powers, out);
    }
    powers[axis] = 0;
}

/// Visits every way of writing `total` as an ordered sum of `n` parts.
fn for_each_composition(total: u32, n: usize, f: &mut impl FnMut(&[u32])) {
    fn rec(remaining: u32, slot: usize, parts: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
        if slot + 1 == parts.len() {
            parts[slot] = remaining;
            f(parts);
            return;
        }
        for v in 0..=remaining {
            parts[slot] = v;
            rec(remaining - v, slot + 1, parts, f);
        }
    }
    let mut parts = vec![0u32; n];
    rec(total, 0, &mut parts, f);
}

/// Seeded random test function with `order` vanishing-moment layers.
pub fn make_test_function(n: usize, order: usize, shape: &TestShape, seed: u64) -> TestFunction {
    TestFunction::from_base(random_base(n, shape, seed), order)
}

/// Antisymmetric 2-form test field: components `phi_{ij}` for `i < j` in
/// lexicographic pair order, with `phi_{ji} = -phi_{ij}` and zero diagonal.
#[derive(Debug, Clone)]
pub struct TwoForm {
    n: usize,
    comps: Vec<PolyGauss>,
}

impl TwoForm {
    pub fn new(n: usize, comps: Vec<PolyGauss>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(
                "2-form fields need at least two dimensions".into(),
            ));
        }
        if comps.len() != n * (n - 1) / 2 {
            return Err(Error::InvalidArgument(format!(
                "expected {} components, got {}",
                n * (n - 1) / 2,
                comps.len()
            )));
        }
        if comps.iter().any(|c| c.n() != n) {
            return Err(Error::InvalidArgument(
                "component dimension mismatch".into(),
            ));
        }
        Ok(Self { n, comps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Seeded random 2-form with independent components.
    pub fn random(n: usize, shape: &TestShape, seed: u64) -> Result<Self> {
        let count = n * (n - 1) / 2;
        let comps = (0..count)
            .map(|i| random_base(n, shape, seed.wrapping_add(1 + i as u64)))
            .collect();
        Self::new(n, comps)
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        // Lexicographic position of (i, j) among ordered pairs.
        let mut idx = 0;
        for a in 0..i {
            idx += self.n - 1 - a;
        }
        idx + (j - i - 1)
    }

    /// Signed component `phi_{ij}`; `None` on the diagonal.
    pub fn component(&self, i: usize, j: usize) -> Option<(f64, &PolyGauss)> {
        if i == j || i >= self.n || j >= self.n {
            return None;
        }
        if i < j {
            Some((1.0, &self.comps[self.pair_index(i, j)]))
        } else {
            Some((-1.0, &self.comps[self.pair_index(j, i)]))
        }
    }
}
