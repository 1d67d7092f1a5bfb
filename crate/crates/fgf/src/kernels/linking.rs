//! Gauss linking integral of closed curves in three dimensions.

use crate::{Error, Result};
use std::f64::consts::PI;

/// Closed curve sampled at uniform parameters on `[0, 1)`, with tangents.
#[derive(Debug, Clone)]
pub struct Curve {
    points: Vec<[f64; 3]>,
    tangents: Vec<[f64; 3]>,
}

impl Curve {
    /// Builds a curve from matching point and tangent samples.
    pub fn new(points: Vec<[f64; 3]>, tangents: Vec<[f64; 3]>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidArgument(
                "a closed curve needs at least three samples".into(),
            ));
        }
        if points.len() != tangents.len() {
            return Err(Error::InvalidArgument(
                "point and tangent counts differ".into(),
            ));
        }
        Ok(Self { points, tangents })
    }

    /// Circle of given radius in the coordinate plane spanned by two axes,
    /// with exact tangents.
    pub fn circle(center: [f64; 3], plane: (usize, usize), radius: f64, nodes: usize) -> Result<Self> {
        let (i, j) = plane;
        if i >= 3 || j >= 3 || i == j {
            return Err(Error::InvalidArgument("plane axes must be two distinct coordinates".into()));
        }
        if !(radius > 0.0) || nodes < 3 {
            return Err(Error::InvalidArgument("circle needs positive radius and at least three nodes".into()));
        }
        let mut points = Vec::with_capacity(nodes);
        let mut tangents = Vec::with_capacity(nodes);
        for m in 0..nodes {
            let t = 2.0 * PI * m as f64 / nodes as f64;
            let mut p = center;
            p[i] += radius * t.cos();
            p[j] += radius * t.sin();
            let mut v = [0.0; 3];
            v[i] = -2.0 * PI * radius * t.sin();
            v[j] = 2.0 * PI * radius * t.cos();
            points.push(p);
            tangents.push(v);
        }
        Ok(Self { points, tangents })
    }

    /// Builds a curve from points alone, with fourth-order centered
    /// difference tangents on the periodic parameter.
    pub fn from_points(points: Vec<[f64; 3]>) -> Result<Self> {
        let m = points.len();
        if m < 5 {
            return Err(Error::InvalidArgument(
                "difference tangents need at least five samples".into(),
            ));
        }
        let h = 1.0 / m as f64;
        let mut tangents = Vec::with_capacity(m);
        for k in 0..m {
            let at = |off: i64| points[((k as i64 + off).rem_euclid(m as i64)) as usize];
            let (p1, m1, p2, m2) = (at(1), at(-1), at(2), at(-2));
            let mut v = [0.0; 3];
            for d in 0..3 {
                v[d] = (8.0 * (p1[d] - m1[d]) - (p2[d] - m2[d])) / (12.0 * h);
            }
            tangents.push(v);
        }
        Ok(Self { points, tangents })
    }

    /// The same curve with reversed orientation.
    pub fn reversed(&self) -> Self {
        Self {
            points: self.points.clone(),
            tangents: self
                .tangents
                .iter()
                .map(|t| [-t[0], -t[1], -t[2]])
                .collect(),
        }
    }

    /// Number of samples.
    pub fn nodes(&self) -> usize {
        self.points.len()
    }
}

fn det3(u: &[f64; 3], v: &[f64; 3], w: &[f64; 3]) -> f64 {
    u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0])
}

/// Gauss linking number of two closed curves by the double trapezoid sum.
/// Errors when the curves come within `min_separation` of each other.
pub fn gauss_linking(a: &Curve, b: &Curve, min_separation: f64) -> Result<f64> {
    if !(min_separation > 0.0) {
        return Err(Error::InvalidArgument(
            "minimum separation must be positive".into(),
        ));
    }
    let mut sum = 0.0;
    let mut min_dist2 = f64::INFINITY;
    for (pa, ta) in a.points.iter().zip(&a.tangents) {
        for (pb, tb) in b.points.iter().zip(&b.tangents) {
            let diff = [pa[0] - pb[0], pa[1] - pb[1], pa[2] - pb[2]];
            let d2 = diff[0] * diff[0] + diff[1] * diff[1] + diff[2] * diff[2];
            min_dist2 = min_dist2.min(d2);
            sum += det3(ta, tb, &diff) / (d2 * d2.sqrt());
        }
    }
    if min_dist2 < min_separation * min_separation {
        return Err(Error::InvalidArgument(format!(
            "curves approach within {:.3e}; the integrand is singular",
            min_dist2.sqrt()
        )));
    }
    Ok(-sum / (4.0 * PI * (a.nodes() * b.nodes()) as f64))
}
