//! Gaussian quadrature rules built by the Golub-Welsch eigenvalue method.

use nalgebra::DMatrix;

/// Value together with an a-posteriori error estimate.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

/// Quadrature rule on `[0, 1]`; the weights absorb the rule's weight
/// function, so `sum_i w_i f(t_i)` approximates `int_0^1 t^b f(t) dt`.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss-Jacobi rule for the weight `t^b` on `[0, 1]`, `b > -1`.
pub fn gauss_jacobi_unit(m: usize, b: f64) -> QuadRule {
    assert!(m >= 1 && b > -1.0);
    // Jacobi matrix of the monic orthogonal polynomials for (1+x)^b on [-1, 1].
    let mut mat = DMatrix::<f64>::zeros(m, m);
    for k in 0..m {
        let kf = k as f64;
        mat[(k, k)] = if k == 0 {
            b / (b + 2.0)
        } else {
            let t = 2.0 * kf + b;
            b * b / (t * (t + 2.0))
        };
        if k >= 1 {
            let t = 2.0 * kf + b;
            let beta = 4.0 * kf * kf * (kf + b) * (kf + b) / (t * t * (t + 1.0) * (t - 1.0));
            let off = beta.sqrt();
            mat[(k, k - 1)] = off;
            mat[(k - 1, k)] = off;
        }
    }
    let eig = nalgebra::SymmetricEigen::new(mat);
    let mu0 = 2f64.powf(b + 1.0) / (b + 1.0);
    let scale = 2f64.powf(-b - 1.0);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let w = mu0 * eig.eigenvectors[(0, i)].powi(2);
            ((1.0 + x) / 2.0, w * scale)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    QuadRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Gauss-Legendre rule on `[0, 1]` with unit weight.
pub fn gauss_legendre_unit(m: usize) -> QuadRule {
    gauss_jacobi_unit(m, 0.0)
}

/// Shared 16-point Gauss-Legendre rule.
pub fn gl16() -> &'static QuadRule {
    use std::sync::OnceLock;
    static RULE: OnceLock<QuadRule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre_unit(16))
}

impl QuadRule {
    /// Integral of `f` over `[a, a + w]`; only valid for unit-weight rules.
    pub fn integrate(&self, a: f64, w: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mut s = 0.0;
        for (t, wt) in self.nodes.iter().zip(&self.weights) {
            s += wt * f(a + w * t);
        }
        s * w
    }

    /// Integral of `(t - a)^b f(t)` over `[a, a + w]`, where `b` matches the
    /// exponent the rule was built with.
    pub fn integrate_weighted(&self, a: f64, w: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mut s = 0.0;
        for (t, wt) in self.nodes.iter().zip(&self.weights) {
            s += wt * f(a + w * t);
        }
        s * w.powf(b + 1.0)
    }
}

/// Integral over the consecutive panels `[edges[i], edges[i+1]]`.
pub fn integrate_panels(rule: &QuadRule, edges: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
    let mut s = 0.0;
    for pair in edges.windows(2) {
        s += rule.integrate(pair[0], pair[1] - pair[0], &mut f);
    }
    s
}

/// Panel edges from `a` to `b`: steps grow geometrically from `first` until
/// they reach `linear`, then stay uniform.
pub fn graded_edges(a: f64, b: f64, first: f64, linear: f64) -> Vec<f64> {
    assert!(b >= a && first > 0.0 && linear > 0.0);
    let mut edges = vec![a];
    let mut x = a;
    let mut step = first.min(linear);
    while x < b {
        x = (x + step).min(b);
        edges.push(x);
        step = (step * 2.0).min(linear);
    }
    edges
}

/// Edges with every panel split in two, for refinement-based error estimates.
pub fn halved_edges(edges: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(edges.len() * 2);
    for pair in edges.windows(2) {
        out.push(pair[0]);
        out.push(0.5 * (pair[0] + pair[1]));
    }
    out.push(*edges.last().unwrap());
    out
}

/// Neville extrapolation of samples `(h_i, v_i)` to `h = 0`.
pub fn extrapolate_zero(hs: &[f64], vs: &[f64]) -> f64 {
    assert_eq!(hs.len(), vs.len());
    let mut table = vs.to_vec();
    let m = table.len();
    for level in 1..m {
        for i in 0..m - level {
            let h_lo = hs[i];
            let h_hi = hs[i + level];
            table[i] = (h_lo * table[i + 1] - h_hi * table[i]) / (h_lo - h_hi);
        }
    }
    table[0]
}
