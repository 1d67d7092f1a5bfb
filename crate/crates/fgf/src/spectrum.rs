//! Truncated Fourier spectra of k-forms on the n-torus and grid transforms.
//!
//! Fields are expanded in `e_a(x) = (2 pi)^(-n/2) exp(i a.x)` over modes
//! `a` with `|a_d| <= cutoff`, stored in lexicographic mode order. Values are
//! real scalars or u(N)-valued (as coefficients in an orthonormal basis).

use crate::complex::{axis_sets, binomial};
use crate::lie::LieBasis;
use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Value type carried on each form component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueKind {
    RealScalar,
    /// u(N)-valued; coefficients index an orthonormal Lie-algebra basis.
    Matrix(usize),
}

impl ValueKind {
    /// Numbers stored per form component.
    pub fn dim(&self) -> usize {
        match self {
            ValueKind::RealScalar => 1,
            ValueKind::Matrix(n) => n * n,
        }
    }
}

/// Truncated spectrum of a k-form on the n-torus.
#[derive(Clone, Debug)]
pub struct TorusSpectrum {
    n: usize,
    k: usize,
    cutoff: i64,
    value_kind: ValueKind,
    /// One slice of `C(n,k) * value_kind.dim()` numbers per mode,
    /// component-major.
    data: Vec<Complex64>,
}

impl TorusSpectrum {
    pub fn zeros(n: usize, k: usize, cutoff: i64, value_kind: ValueKind) -> Result<Self> {
        if n == 0 || n > 8 {
            return Err(Error::InvalidArgument(format!(
                "dimension must be between 1 and 8, got {n}"
            )));
        }
        if k > n {
            return Err(Error::DegreeOutOfRange { k, n });
        }
        if cutoff < 0 {
            return Err(Error::InvalidArgument("cutoff must be nonnegative".into()));
        }
        let modes = ((2 * cutoff + 1) as usize).pow(n as u32);
        let stride = binomial(n, k) * value_kind.dim();
        Ok(Self {
            n,
            k,
            cutoff,
            value_kind,
            data: vec![Complex64::ZERO; modes * stride],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn cutoff(&self) -> i64 {
        self.cutoff
    }

    pub fn value_kind(&self) -> ValueKind {
        self.value_kind
    }

    pub fn component_count(&self) -> usize {
        binomial(self.n, self.k)
    }

    /// Numbers per mode.
    pub fn mode_stride(&self) -> usize {
        self.component_count() * self.value_kind.dim()
    }

    pub fn mode_count(&self) -> usize {
        ((2 * self.cutoff + 1) as usize).pow(self.n as u32)
    }

    /// Lex index of a mode vector, if within the cutoff.
    pub fn mode_index(&self, alpha: &[i64]) -> Option<usize> {
        if alpha.len() != self.n {
            return None;
        }
        let span = 2 * self.cutoff + 1;
        let mut idx = 0usize;
        for &a in alpha {
            if a.abs() > self.cutoff {
                return None;
            }
            idx = idx * span as usize + (a + self.cutoff) as usize;
        }
        Some(idx)
    }

    /// Mode vector at a lex index.
    pub fn mode_at(&self, idx: usize) -> Vec<i64> {
        let span = (2 * self.cutoff + 1) as usize;
        let mut rem = idx;
        let mut alpha = vec![0i64; self.n];
        for d in (0..self.n).rev() {
            alpha[d] = (rem % span) as i64 - self.cutoff;
            rem /= span;
        }
        alpha
    }

    pub fn coeff(&self, mode_idx: usize) -> &[Complex64] {
        let s = self.mode_stride();
        &self.data[mode_idx * s..(mode_idx + 1) * s]
    }

    pub fn coeff_mut(&mut self, mode_idx: usize) -> &mut [Complex64] {
        let s = self.mode_stride();
        &mut self.data[mode_idx * s..(mode_idx + 1) * s]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// `sum |a_d|^2` of the mode at `idx`.
    pub fn freq_sq(&self, idx: usize) -> f64 {
        self.mode_at(idx).iter().map(|&a| (a * a) as f64).sum()
    }

    /// Scales every mode by `factor(alpha)`.
    pub fn scale_modes(&mut self, mut factor: impl FnMut(&[i64]) -> f64) {
        let s = self.mode_stride();
        for idx in 0..self.mode_count() {
            let f = factor(&self.mode_at(idx));
            for v in &mut self.data[idx * s..(idx + 1) * s] {
                *v *= f;
            }
        }
    }

    /// Applies `(-Δ)^(-s)`: multiplies mode `a` by `|a|^(-2s)`. The zero mode
    /// must vanish beforehand unless `s = 0`.
    pub fn fractional_power(&mut self, s: f64) -> Result<()> {
        if s == 0.0 {
            return Ok(());
        }
        let zero = self.mode_index(&vec![0; self.n]).expect("zero mode present");
        let scale = self
            .data
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
        let zmax = self
            .coeff(zero)
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
        if zmax > 1e-12 * scale.max(1e-300) {
            return Err(Error::InvalidArgument(
                "fractional power needs a vanishing zero mode".into(),
            ));
        }
        for v in self.coeff_mut(zero) {
            *v = Complex64::ZERO;
        }
        self.scale_modes(|alpha| {
            let a2: f64 = alpha.iter().map(|&a| (a * a) as f64).sum();
            if a2 == 0.0 {
                0.0
            } else {
                a2.powf(-s)
            }
        });
        Ok(())
    }

    /// Worst deviation from the reality constraint `c(-a) = conj(c(a))`.
    pub fn conjugate_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for idx in 0..self.mode_count() {
            let alpha = self.mode_at(idx);
            let neg: Vec<i64> = alpha.iter().map(|&a| -a).collect();
            let nidx = self.mode_index(&neg).expect("mirror mode present");
            let a = self.coeff(idx);
            let b = self.coeff(nidx);
            for (x, y) in a.iter().zip(b.iter()) {
                worst = worst.max((x.conj() - y).norm());
            }
        }
        worst
    }

    /// Hermitian `L^2` pairing: `sum c conj(c')` over all stored numbers.
    pub fn l2_dot(&self, other: &Self) -> Result<Complex64> {
        if self.n != other.n
            || self.k != other.k
            || self.cutoff != other.cutoff
            || self.value_kind != other.value_kind
        {
            return Err(Error::ComplexMismatch);
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b.conj())
            .sum())
    }

    /// Pointwise evaluation: per-component values at `x` (basis coefficients
    /// for matrix-valued spectra).
    pub fn evaluate(&self, x: &[f64]) -> Vec<Complex64> {
        let s = self.mode_stride();
        let mut out = vec![Complex64::ZERO; s];
        let norm = (2.0 * PI).powf(-(self.n as f64) / 2.0);
        for idx in 0..self.mode_count() {
            let alpha = self.mode_at(idx);
            let phase: f64 = alpha.iter().zip(x).map(|(&a, &xi)| a as f64 * xi).sum();
            let e = Complex64::from_polar(norm, phase);
            for (o, c) in out.iter_mut().zip(self.coeff(idx)) {
                *o += e * c;
            }
        }
        out
    }

    /// Applies `d` (or `d*`) mode by mode, producing a degree k+1 (or k-1)
    /// spectrum.
    pub fn apply_exterior(&self, op: crate::mode::ModeOp) -> Result<TorusSpectrum> {
        let k_out = match op {
            crate::mode::ModeOp::D => {
                if self.k >= self.n {
                    return Err(Error::DegreeOutOfRange { k: self.k + 1, n: self.n });
                }
                self.k + 1
            }
            crate::mode::ModeOp::DStar => {
                if self.k == 0 {
                    return Err(Error::InvalidArgument(
                        "codifferential needs degree at least 1".into(),
                    ));
                }
                self.k - 1
            }
        };
        let mut out = TorusSpectrum::zeros(self.n, k_out, self.cutoff, self.value_kind)?;
        let vdim = self.value_kind.dim();
        let comps_in = self.component_count();
        let comps_out = out.component_count();
        let mut buf_in = vec![Complex64::ZERO; comps_in];
        for idx in 0..self.mode_count() {
            let alpha: Vec<f64> = self.mode_at(idx).iter().map(|&a| a as f64).collect();
            let src = self.coeff(idx).to_vec();
            let dst = out.coeff_mut(idx);
            for b in 0..vdim {
                for c in 0..comps_in {
                    buf_in[c] = src[c * vdim + b];
                }
                let applied = match op {
                    crate::mode::ModeOp::D => {
                        let mut w = crate::mode::wedge_apply(&alpha, &buf_in, self.n, self.k);
                        for v in &mut w {
                            *v *= Complex64::i();
                        }
                        w
                    }
                    crate::mode::ModeOp::DStar => {
                        let mut w = crate::mode::contract_apply(&alpha, &buf_in, self.n, self.k);
                        for v in &mut w {
                            *v *= -Complex64::i();
                        }
                        w
                    }
                };
                for c in 0..comps_out {
                    dst[c * vdim + b] = applied[c];
                }
            }
        }
        Ok(out)
    }

    /// Hodge star mode by mode, producing a degree n-k spectrum.
    pub fn hodge_star(&self) -> Result<TorusSpectrum> {
        let mut out = TorusSpectrum::zeros(self.n, self.n - self.k, self.cutoff, self.value_kind)?;
        let vdim = self.value_kind.dim();
        let comps_in = self.component_count();
        let comps_out = out.component_count();
        let mut buf = vec![Complex64::ZERO; comps_in];
        for idx in 0..self.mode_count() {
            let src = self.coeff(idx).to_vec();
            let dst = out.coeff_mut(idx);
            for b in 0..vdim {
                for c in 0..comps_in {
                    buf[c] = src[c * vdim + b];
                }
                let starred = crate::mode::star_apply(&buf, self.n, self.k);
                for c in 0..comps_out {
                    dst[c * vdim + b] = starred[c];
                }
            }
        }
        Ok(out)
    }

    /// Synthesizes grid values at `r^n` points `x_g = 2 pi g / r`. For
    /// matrix-valued spectra the grid carries matrix entries.
    pub fn synthesize(&self, r: usize) -> Result<GridData> {
        if r == 0 {
            return Err(Error::InvalidArgument("grid needs at least one point".into()));
        }
        let span = (2 * self.cutoff + 1) as usize;
        let tail = self.mode_stride();
        // Per-axis transform tables: t[g * span + m] = exp(i (m - cutoff) x_g).
        let mut table = vec![Complex64::ZERO; r * span];
        for g in 0..r {
            let x = 2.0 * PI * g as f64 / r as f64;
            for m in 0..span {
                let freq = m as i64 - self.cutoff;
                table[g * span + m] = Complex64::from_polar(1.0, freq as f64 * x);
            }
        }
        let mut work = self.data.clone();
        for d in 0..self.n {
            let pre = r.pow(d as u32);
            let post = span.pow((self.n - 1 - d) as u32) * tail;
            work = axis_transform(&work, pre, span, post, r, &table);
        }
        let norm = (2.0 * PI).powf(-(self.n as f64) / 2.0);
        for v in &mut work {
            *v *= norm;
        }
        let grid = GridData {
            n: self.n,
            k: self.k,
            r,
            value_kind: self.value_kind,
            data: work,
        };
        Ok(match self.value_kind {
            ValueKind::RealScalar => grid,
            ValueKind::Matrix(nm) => grid.map_values(&LieBasis::new(nm)?, true),
        })
    }
}

/// Analysis: recovers the truncated spectrum from grid values. Exact for
/// band-limited data when `r >= 2 cutoff + 1`.
pub fn analyze(grid: &GridData, cutoff: i64) -> Result<TorusSpectrum> {
    let r = grid.r;
    if (r as i64) < 2 * cutoff + 1 {
        return Err(Error::InvalidArgument(format!(
            "grid with {r} points per axis cannot resolve cutoff {cutoff}"
        )));
    }
    let entry_grid = match grid.value_kind {
        ValueKind::RealScalar => grid.clone(),
        ValueKind::Matrix(nm) => grid.map_values(&LieBasis::new(nm)?, false),
    };
    let span = (2 * cutoff + 1) as usize;
    let tail = binomial(grid.n, grid.k) * grid.value_kind.dim();
    let mut table = vec![Complex64::ZERO; span * r];
    for m in 0..span {
        let freq = m as i64 - cutoff;
        for g in 0..r {
            let x = 2.0 * PI * g as f64 / r as f64;
            table[m * r + g] = Complex64::from_polar(1.0, -(freq as f64) * x);
        }
    }
    let mut work = entry_grid.data;
    for d in 0..grid.n {
        let pre = span.pow(d as u32);
        let post = r.pow((grid.n - 1 - d) as u32) * tail;
        work = axis_transform(&work, pre, r, post, span, &table);
    }
    let norm = (2.0 * PI).powf(grid.n as f64 / 2.0) / (r as f64).powi(grid.n as i32);
    for v in &mut work {
        *v *= norm;
    }
    let mut out = TorusSpectrum::zeros(grid.n, grid.k, cutoff, grid.value_kind)?;
    out.data = work;
    Ok(out)
}

fn axis_transform(
    data: &[Complex64],
    pre: usize,
    len_in: usize,
    post: usize,
    len_out: usize,
    table: &[Complex64],
) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; pre * len_out * post];
    for p in 0..pre {
        for o in 0..len_out {
            let trow = &table[o * len_in..(o + 1) * len_in];
            let obase = (p * len_out + o) * post;
            for (m, &t) in trow.iter().enumerate() {
                let ibase = (p * len_in + m) * post;
                for q in 0..post {
                    out[obase + q] += t * data[ibase + q];
                }
            }
        }
    }
    out
}

/// Values of a k-form on the uniform grid `x_g = 2 pi g / r`.
///
/// Scalar-valued grids store one number per component; matrix-valued grids
/// store the `N^2` matrix entries (row-major), so pointwise products are
/// direct.
#[derive(Clone, Debug)]
pub struct GridData {
    n: usize,
    k: usize,
    r: usize,
    value_kind: ValueKind,
    data: Vec<Complex64>,
}

impl GridData {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn points_per_axis(&self) -> usize {
        self.r
    }

    pub fn value_kind(&self) -> ValueKind {
        self.value_kind
    }

    pub fn point_count(&self) -> usize {
        self.r.pow(self.n as u32)
    }

    fn stride(&self) -> usize {
        binomial(self.n, self.k) * self.value_kind.dim()
    }

    pub fn values_at(&self, flat: usize) -> &[Complex64] {
        let s = self.stride();
        &self.data[flat * s..(flat + 1) * s]
    }

    /// Converts between Lie-basis coefficients and matrix entries in place
    /// (`expand = true`: coefficients to entries).
    fn map_values(&self, basis: &LieBasis, expand: bool) -> GridData {
        let nm = basis.matrix_size();
        let vdim = nm * nm;
        let comps = binomial(self.n, self.k);
        let mut out = self.clone();
        for cell in 0..self.point_count() * comps {
            let src = &self.data[cell * vdim..(cell + 1) * vdim];
            let converted: Vec<Complex64> = if expand {
                let m = basis.expand(src);
                (0..nm)
                    .flat_map(|i| (0..nm).map(move |j| (i, j)))
                    .map(|(i, j)| m[(i, j)])
                    .collect()
            } else {
                let m = nalgebra::DMatrix::from_fn(nm, nm, |i, j| src[i * nm + j]);
                basis.project(&m)
            };
            out.data[cell * vdim..(cell + 1) * vdim].copy_from_slice(&converted);
        }
        out
    }

    /// Largest imaginary part over all stored values.
    pub fn imaginary_defect(&self) -> f64 {
        self.data.iter().map(|c| c.im.abs()).fold(0.0, f64::max)
    }
}

/// Multiplication rule for wedge values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WedgeBracket {
    /// Scalar or matrix product.
    Plain,
    /// Commutator of matrix values.
    Lie,
}

/// Pointwise wedge product of two grids over the same points.
pub fn wedge_grid(u: &GridData, v: &GridData, bracket: WedgeBracket) -> Result<GridData> {
    if u.n != v.n || u.r != v.r || u.value_kind != v.value_kind {
        return Err(Error::ComplexMismatch);
    }
    let n = u.n;
    let k_out = u.k + v.k;
    if k_out > n {
        return Err(Error::DegreeOutOfRange { k: k_out, n });
    }
    let nm = match (u.value_kind, bracket) {
        (ValueKind::Matrix(nm), _) => nm,
        (ValueKind::RealScalar, WedgeBracket::Plain) => 0,
        (ValueKind::RealScalar, WedgeBracket::Lie) => {
            return Err(Error::InvalidArgument(
                "the Lie bracket needs matrix values".into(),
            ))
        }
    };
    let sets_out = axis_sets(n, k_out);
    let sets1 = axis_sets(n, u.k);
    let sets2 = axis_sets(n, v.k);
    // Splits of each output set into (left, right) with the shuffle sign.
    let mut splits: Vec<Vec<(usize, usize, f64)>> = Vec::with_capacity(sets_out.len());
    for set in &sets_out {
        let mut list = Vec::new();
        let total = set.len();
        for mask in 0u32..(1 << total) {
            if mask.count_ones() as usize != u.k {
                continue;
            }
            let mut left = Vec::new();
            let mut right = Vec::new();
            for (pos, &ax) in set.iter().enumerate() {
                if mask & (1 << pos) != 0 {
                    left.push(ax);
                } else {
                    right.push(ax);
                }
            }
            let mut inversions = 0usize;
            for &i in &left {
                for &j in &right {
                    if i > j {
                        inversions += 1;
                    }
                }
            }
            let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
            let i1 = sets1.iter().position(|s| *s == left).unwrap();
            let i2 = sets2.iter().position(|s| *s == right).unwrap();
            list.push((i1, i2, sign));
        }
        splits.push(list);
    }
    let vdim = u.value_kind.dim();
    let mut out = GridData {
        n,
        k: k_out,
        r: u.r,
        value_kind: u.value_kind,
        data: vec![Complex64::ZERO; u.point_count() * sets_out.len() * vdim],
    };
    let out_stride = sets_out.len() * vdim;
    for g in 0..u.point_count() {
        let us = u.values_at(g);
        let vs = v.values_at(g);
        let dst = &mut out.data[g * out_stride..(g + 1) * out_stride];
        for (oc, list) in splits.iter().enumerate() {
            for &(i1, i2, sign) in list {
                let a = &us[i1 * vdim..(i1 + 1) * vdim];
                let b = &vs[i2 * vdim..(i2 + 1) * vdim];
                let target = &mut dst[oc * vdim..(oc + 1) * vdim];
                match (u.value_kind, bracket) {
                    (ValueKind::RealScalar, _) => target[0] += sign * a[0] * b[0],
                    (ValueKind::Matrix(_), WedgeBracket::Plain) => {
                        mat_mul_add(a, b, target, nm, sign)
                    }
                    (ValueKind::Matrix(_), WedgeBracket::Lie) => {
                        mat_mul_add(a, b, target, nm, sign);
                        mat_mul_add(b, a, target, nm, -sign);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn mat_mul_add(a: &[Complex64], b: &[Complex64], dst: &mut [Complex64], n: usize, sign: f64) {
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::ZERO;
            for l in 0..n {
                acc += a[i * n + l] * b[l * n + j];
            }
            dst[i * n + j] += sign * acc;
        }
    }
}

/// Whether the first nonzero entry of the mode is positive. Exactly one of
/// `a`, `-a` is positive for every nonzero mode, which picks a representative
/// of each conjugate pair.
pub fn is_positive_mode(alpha: &[i64]) -> bool {
    for &a in alpha {
        if a > 0 {
            return true;
        }
        if a < 0 {
            return false;
        }
    }
    false
}

/// Wedge product of two spectra: synthesized on a grid fine enough to be
/// alias-free, multiplied pointwise, and analyzed back at the summed cutoff.
pub fn wedge(
    f: &TorusSpectrum,
    g: &TorusSpectrum,
    bracket: WedgeBracket,
) -> Result<TorusSpectrum> {
    if f.n != g.n || f.value_kind != g.value_kind {
        return Err(Error::ComplexMismatch);
    }
    let cutoff = f.cutoff + g.cutoff;
    let r = (2 * cutoff + 1) as usize;
    let gu = f.synthesize(r)?;
    let gv = g.synthesize(r)?;
    let prod = wedge_grid(&gu, &gv, bracket)?;
    analyze(&prod, cutoff)
}
