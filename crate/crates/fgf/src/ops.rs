//! Exterior derivative, codifferential, and the Hodge Laplacian.

use crate::complex::LatticeComplex;
use crate::form::LatticeForm;
use crate::{Error, Result};

/// Advances a row-major odometer (last axis fastest). Returns false on wrap.
#[inline]
pub(crate) fn increment(base: &mut [usize], grid: &[usize]) -> bool {
    for d in (0..base.len()).rev() {
        base[d] += 1;
        if base[d] < grid[d] {
            return true;
        }
        base[d] = 0;
    }
    false
}

/// Exterior derivative `d`: degree k to k+1.
///
/// `(df)(x, J) = sum_a (-1)^(a-1) [f(x + e_{j_a}, J \ j_a) - f(x, J \ j_a)]`
/// over the axes `j_a` of `J` in increasing order.
pub fn exterior_derivative(f: &LatticeForm) -> Result<LatticeForm> {
    let c = f.complex().clone();
    let k = f.degree();
    let n = c.n();
    if k >= n {
        return Err(Error::DegreeOutOfRange { k: k + 1, n });
    }
    let mut out = LatticeForm::zeros(c.clone(), k + 1)?;
    let src = f.values();
    let dst = out.values_mut();
    for comp_out in 0..c.component_count(k + 1) {
        let set_out = c.axis_sets(k + 1)[comp_out].clone();
        let grid_out = c.component_grid(k + 1, comp_out).to_vec();
        let range = c.component_range(k + 1, comp_out);
        for (a, &axis) in set_out.iter().enumerate() {
            let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
            let mut face = set_out.clone();
            face.remove(a);
            let comp_in = c.component_of(&face).expect("face axis set exists");
            let mut base = vec![0usize; n];
            for out_idx in range.clone() {
                let near = c.flat_index(k, comp_in, &base);
                let far = c
                    .shift(k, comp_in, near, axis as usize, 1)
                    .expect("boundary faces stay in the box");
                dst[out_idx] += sign * (src[far] - src[near]);
                increment(&mut base, &grid_out);
            }
        }
    }
    Ok(out)
}

/// Codifferential `d*` (adjoint of `d`): degree k to k-1.
///
/// `(d*g)(y, I) = sum_{j not in I} (-1)^(pos(j, I+j)-1)
///                [g(y - e_j, I+j) - g(y, I+j)]`,
/// where terms whose cell leaves the box are dropped.
pub fn codifferential(g: &LatticeForm) -> Result<LatticeForm> {
    let c = g.complex().clone();
    let k = g.degree();
    let n = c.n();
    if k == 0 {
        return Err(Error::InvalidArgument(
            "codifferential needs degree at least 1".into(),
        ));
    }
    let mut out = LatticeForm::zeros(c.clone(), k - 1)?;
    let src = g.values();
    let dst = out.values_mut();
    let periodic = c.is_periodic();
    for comp_out in 0..c.component_count(k - 1) {
        let set_out = c.axis_sets(k - 1)[comp_out].clone();
        let grid_out = c.component_grid(k - 1, comp_out).to_vec();
        let range = c.component_range(k - 1, comp_out);
        for j in 0..n as u8 {
            if set_out.contains(&j) {
                continue;
            }
            let below = set_out.iter().filter(|&&i| i < j).count();
            let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
            let mut up = set_out.clone();
            up.insert(below, j);
            let comp_in = c.component_of(&up).expect("extended axis set exists");
            let jd = j as usize;
            let links = c.component_grid(k, comp_in)[jd];
            let mut base = vec![0usize; n];
            for out_idx in range.clone() {
                let yj = base[jd];
                let mut v = 0.0;
                if periodic {
                    let near = c.flat_index(k, comp_in, &base);
                    let far = c.shift(k, comp_in, near, jd, -1).expect("periodic shift");
                    v = src[far] - src[near];
                } else {
                    if yj < links {
                        v -= src[c.flat_index(k, comp_in, &base)];
                    }
                    if yj >= 1 {
                        base[jd] -= 1;
                        v += src[c.flat_index(k, comp_in, &base)];
                        base[jd] += 1;
                    }
                }
                dst[out_idx] += sign * v;
                increment(&mut base, &grid_out);
            }
        }
    }
    Ok(out)
}

/// Hodge Laplacian `Δ = -(d d* + d* d)`, negative semidefinite, computed by
/// composing the two operators.
pub fn hodge_laplacian(f: &LatticeForm) -> Result<LatticeForm> {
    let k = f.degree();
    let n = f.complex().n();
    let mut out = LatticeForm::zeros(f.complex().clone(), k)?;
    if k > 0 {
        out.axpy(-1.0, &exterior_derivative(&codifferential(f)?)?)?;
    }
    if k < n {
        out.axpy(-1.0, &codifferential(&exterior_derivative(f)?)?)?;
    }
    Ok(out)
}

/// `-Δ` through the per-component stencil; equals `-hodge_laplacian` exactly
/// and skips the intermediate forms.
pub fn neg_laplacian(f: &LatticeForm) -> Result<LatticeForm> {
    let c = f.complex().clone();
    let k = f.degree();
    let mut out = LatticeForm::zeros(c.clone(), k)?;
    for comp in 0..c.component_count(k) {
        let range = c.component_range(k, comp);
        apply_component_neg_laplacian(
            &c,
            k,
            comp,
            &f.values()[range.clone()],
            &mut out.values_mut()[range],
        );
    }
    Ok(out)
}

/// Applies `-Δ` on one axis-set component.
///
/// On a component the operator splits into a sum of 1D second differences:
/// Dirichlet along link axes (out-of-box values read as zero), Neumann along
/// transverse axes (diagonal counts the in-box neighbors). `src` and `dst`
/// are the component-local slices.
pub fn apply_component_neg_laplacian(
    c: &LatticeComplex,
    k: usize,
    comp: usize,
    src: &[f64],
    dst: &mut [f64],
) {
    let n = c.n();
    let set = c.axis_sets(k)[comp].clone();
    let grid = c.component_grid(k, comp);
    let periodic = c.is_periodic();
    dst.fill(0.0);
    let mut stride = vec![0usize; n];
    let mut acc = 1usize;
    for d in (0..n).rev() {
        stride[d] = acc;
        acc *= grid[d];
    }
    debug_assert_eq!(acc, src.len());
    for d in 0..n {
        let link = set.contains(&(d as u8));
        let ld = grid[d];
        let sd = stride[d];
        let span = ld * sd;
        let repeats = src.len() / span;
        for r in 0..repeats {
            let block = r * span;
            for x in 0..ld {
                let row = block + x * sd;
                if periodic {
                    let prev = block + (x + ld - 1) % ld * sd;
                    let next = block + (x + 1) % ld * sd;
                    for i in 0..sd {
                        dst[row + i] += 2.0 * src[row + i] - src[prev + i] - src[next + i];
                    }
                } else if link {
                    for i in 0..sd {
                        let mut v = 2.0 * src[row + i];
                        if x > 0 {
                            v -= src[row - sd + i];
                        }
                        if x + 1 < ld {
                            v -= src[row + sd + i];
                        }
                        dst[row + i] += v;
                    }
                } else {
                    for i in 0..sd {
                        let mut v = 0.0;
                        if x > 0 {
                            v += src[row + i] - src[row - sd + i];
                        }
                        if x + 1 < ld {
                            v += src[row + i] - src[row + sd + i];
                        }
                        dst[row + i] += v;
                    }
                }
            }
        }
    }
}
