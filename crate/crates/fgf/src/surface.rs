//! Pairing maps and surface sums for big-loop Wilson expectations.

use crate::lie::LieBasis;
use crate::mode::ModeOp;
use crate::rng::stream_rng;
use crate::sample::FieldSample;
use crate::spectrum::{TorusSpectrum, ValueKind};
use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

/// Piecewise-constant family of divergence-free one-form currents on the
/// torus, constant on each interval of a partition of [0, 1].
#[derive(Clone, Debug)]
pub struct BigLoop {
    times: Vec<f64>,
    gammas: Vec<TorusSpectrum>,
    sup_norm: f64,
}

impl BigLoop {
    /// Validates the partition, checks each current is divergence-free with
    /// no zero mode, and caches the largest negative-Sobolev norm.
    pub fn new(times: Vec<f64>, gammas: Vec<TorusSpectrum>) -> Result<Self> {
        if gammas.is_empty() || times.len() != gammas.len() + 1 {
            return Err(Error::InvalidArgument(
                "need one interval current per partition step".into(),
            ));
        }
        if times[0] != 0.0 || *times.last().unwrap() != 1.0 {
            return Err(Error::InvalidArgument("partition must run from 0 to 1".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("partition times must increase".into()));
        }
        let n = gammas[0].n();
        let mut sup_norm: f64 = 0.0;
        for g in &gammas {
            if g.degree() != 1 || g.n() != n || g.value_kind() != ValueKind::RealScalar {
                return Err(Error::InvalidArgument(
                    "interval currents must be scalar one-forms of one dimension".into(),
                ));
            }
            let scale = l2_norm(g);
            let div = g.apply_exterior(ModeOp::DStar)?;
            if l2_norm(&div) > 1e-10 * scale {
                return Err(Error::InvalidArgument("interval current is not divergence-free".into()));
            }
            if let Some(zero) = g.mode_index(&vec![0; n]) {
                let mag: f64 = g.coeff(zero).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                if mag > 1e-12 * scale {
                    return Err(Error::InvalidArgument(
                        "zero mode has no finite negative-Sobolev norm".into(),
                    ));
                }
            }
            sup_norm = sup_norm.max(sobolev_inner(g, g)?.max(0.0).sqrt());
        }
        Ok(Self { times, gammas, sup_norm })
    }

    /// Single-interval loop, constant in time.
    pub fn constant(gamma: TorusSpectrum) -> Result<Self> {
        Self::new(vec![0.0, 1.0], vec![gamma])
    }

    pub fn n(&self) -> usize {
        self.gammas[0].n()
    }

    pub fn intervals(&self) -> usize {
        self.gammas.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn gamma(&self, j: usize) -> &TorusSpectrum {
        &self.gammas[j]
    }

    pub fn delta(&self, j: usize) -> f64 {
        self.times[j + 1] - self.times[j]
    }

    /// `sup_t` of the interval norms in the negative-Sobolev pairing.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    fn interval_of(&self, t: f64) -> usize {
        self.times[1..self.times.len() - 1]
            .iter()
            .filter(|&&edge| edge <= t)
            .count()
    }
}

fn l2_norm(g: &TorusSpectrum) -> f64 {
    g.data().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `(a, b)` weighted by `1 / |alpha|^2` over shared modes, the covariance of
/// line pairings under the unit-temperature Gaussian one-form.
fn sobolev_inner(a: &TorusSpectrum, b: &TorusSpectrum) -> Result<f64> {
    if a.n() != b.n() || a.degree() != 1 || b.degree() != 1 {
        return Err(Error::InvalidArgument("currents live on different spaces".into()));
    }
    let (small, big, flip) = if a.mode_count() <= b.mode_count() {
        (a, b, false)
    } else {
        (b, a, true)
    };
    let mut acc = Complex64::ZERO;
    for idx in 0..small.mode_count() {
        let alpha = small.mode_at(idx);
        if alpha.iter().all(|&x| x == 0) {
            continue;
        }
        let Some(other) = big.mode_index(&alpha) else { continue };
        let dot: Complex64 = small
            .coeff(idx)
            .iter()
            .zip(big.coeff(other))
            .map(|(x, y)| if flip { y * x.conj() } else { x * y.conj() })
            .sum();
        acc += dot / small.freq_sq(idx);
    }
    Ok(acc.re)
}

/// Perfect matching of `m` points on a tuple of polygons, with the face
/// count of the glued surface.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairingMap {
    m: usize,
    pairs: Vec<(usize, usize)>,
    mu: Vec<usize>,
    v: usize,
}

impl PairingMap {
    /// `pairs` must cover `0..m` exactly once; `mu` are the polygon sizes,
    /// zero-size polygons allowed.
    pub fn new(m: usize, pairs: &[(usize, usize)], mu: &[usize]) -> Result<Self> {
        if m % 2 != 0 {
            return Err(Error::InvalidArgument("point count must be even".into()));
        }
        if mu.iter().sum::<usize>() != m {
            return Err(Error::InvalidArgument("polygon sizes must sum to the point count".into()));
        }
        if pairs.len() != m / 2 {
            return Err(Error::InvalidArgument("matching has the wrong number of pairs".into()));
        }
        let mut seen = vec![false; m];
        let mut norm = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            if a >= m || b >= m || a == b || seen[a] || seen[b] {
                return Err(Error::InvalidArgument("pairs must form a perfect matching".into()));
            }
            seen[a] = true;
            seen[b] = true;
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        let v = glued_face_count(&norm, mu, m);
        Ok(Self {
            m,
            pairs: norm,
            mu: mu.to_vec(),
            v,
        })
    }

    pub fn point_count(&self) -> usize {
        self.m
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn polygon_sizes(&self) -> &[usize] {
        &self.mu
    }

    /// Cycle count of the polygon successor composed with the matching,
    /// fixed points and empty polygons included.
    pub fn vertex_count(&self) -> usize {
        self.v
    }

    pub fn edge_count(&self) -> usize {
        self.m / 2
    }
}

/// Cycles of `x -> successor(match(x))` plus one face per empty polygon.
fn glued_face_count(pairs: &[(usize, usize)], mu: &[usize], m: usize) -> usize {
    let mut pi = vec![0usize; m];
    for &(a, b) in pairs {
        pi[a] = b;
        pi[b] = a;
    }
    let mut succ = vec![0usize; m];
    let mut empties = 0usize;
    let mut off = 0usize;
    for &len in mu {
        if len == 0 {
            empties += 1;
            continue;
        }
        for r in 0..len {
            succ[off + r] = off + (r + 1) % len;
        }
        off += len;
    }
    let mut seen = vec![false; m];
    let mut cycles = 0usize;
    for start in 0..m {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            x = succ[pi[x]];
        }
    }
    cycles + empties
}

/// Lazy enumeration of all `(m-1)!!` perfect matchings of `m` points.
pub struct PairingIter {
    m: usize,
    mu: Vec<usize>,
    choices: Vec<usize>,
    done: bool,
}

impl Iterator for PairingIter {
    type Item = PairingMap;

    fn next(&mut self) -> Option<PairingMap> {
        if self.done {
            return None;
        }
        let mut free: Vec<usize> = (0..self.m).collect();
        let mut pairs = Vec::with_capacity(self.m / 2);
        for &choice in &self.choices {
            let a = free.remove(0);
            let b = free.remove(choice);
            pairs.push((a, b));
        }
        let map = PairingMap::new(self.m, &pairs, &self.mu).expect("enumerated matching is valid");

        // Odometer step: position r ranges over m - 1 - 2r partners.
        self.done = true;
        for r in (0..self.choices.len()).rev() {
            if self.choices[r] + 1 < self.m - 1 - 2 * r {
                self.choices[r] += 1;
                for later in self.choices[r + 1..].iter_mut() {
                    *later = 0;
                }
                self.done = false;
                break;
            }
        }
        Some(map)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        if self.done {
            return (0, Some(0));
        }
        let total: usize = (0..self.m / 2).map(|r| self.m - 1 - 2 * r).product();
        (1, Some(total.max(1)))
    }
}

/// All perfect matchings of `m` points glued against polygons `mu`.
pub fn pairing_maps(m: usize, mu: &[usize]) -> Result<PairingIter> {
    if m % 2 != 0 {
        return Err(Error::InvalidArgument("point count must be even".into()));
    }
    if mu.iter().sum::<usize>() != m {
        return Err(Error::InvalidArgument("polygon sizes must sum to the point count".into()));
    }
    Ok(PairingIter {
        m,
        mu: mu.to_vec(),
        choices: vec![0; m / 2],
        done: false,
    })
}

// Zero-allocation walk over matchings for the inner summation loops. The
// buffer holds the current matching as partner indices, usize::MAX when free.
fn for_each_pairing(buf: &mut Vec<usize>, m: usize, f: &mut impl FnMut(&[usize])) {
    buf.clear();
    buf.resize(m, usize::MAX);
    fn descend(buf: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        let Some(a) = buf.iter().position(|&p| p == usize::MAX) else {
            f(buf);
            return;
        };
        for b in a + 1..buf.len() {
            if buf[b] == usize::MAX {
                buf[a] = b;
                buf[b] = a;
                descend(buf, f);
                buf[a] = usize::MAX;
                buf[b] = usize::MAX;
            }
        }
    }
    descend(buf, f);
}

/// Faces of the gluing given partner links `pi` (as produced by the walker).
fn face_count_from_links(pi: &[usize], mu: &[usize]) -> usize {
    let m = pi.len();
    let mut succ = vec![0usize; m];
    let mut empties = 0usize;
    let mut off = 0usize;
    for &len in mu {
        if len == 0 {
            empties += 1;
            continue;
        }
        for r in 0..len {
            succ[off + r] = off + (r + 1) % len;
        }
        off += len;
    }
    let mut seen = vec![false; m];
    let mut cycles = 0usize;
    for start in 0..m {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            x = succ[pi[x]];
        }
    }
    cycles + empties
}

#[derive(Clone, Debug)]
pub struct SurfaceSum {
    /// Exact truncated series value.
    pub value: f64,
    /// Bound on the dropped tail of the series.
    pub truncation: f64,
    pub mc_value: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub m_max: usize,
    pub matrix_size: usize,
}

/// Truncated surface expansion of `E prod_l Tr h_l(1) / N`: pairs of line
/// insertions are summed over matchings weighted `N^{V-E}`, with the ordered
/// time integrals evaluated in closed form per interval assignment. A
/// sorted-uniform Monte Carlo estimate of the same integrals is attached
/// when `mc_tuples > 0`. `m_max` counts pairs; the matching count grows as
/// `(2 m_max - 1)!!`, so values above 8 are rejected.
pub fn surface_sum_expectation(
    loops: &[BigLoop],
    matrix_size: usize,
    m_max: usize,
    mc_tuples: usize,
    seed: u64,
    tol: f64,
) -> Result<SurfaceSum> {
    if loops.is_empty() {
        return Err(Error::InvalidArgument("need at least one loop".into()));
    }
    if matrix_size == 0 {
        return Err(Error::InvalidArgument("matrix size must be positive".into()));
    }
    if m_max > 8 {
        return Err(Error::InvalidArgument(
            "pairing enumeration above eight pairs is rejected".into(),
        ));
    }
    let n = loops[0].n();
    if loops.iter().any(|lp| lp.n() != n) {
        return Err(Error::InvalidArgument("loops live on different tori".into()));
    }

    // One Gram entry per ordered pair of interval currents across all loops.
    let offsets: Vec<usize> = loops
        .iter()
        .scan(0usize, |acc, lp| {
            let off = *acc;
            *acc += lp.intervals();
            Some(off)
        })
        .collect();
    let total_intervals: usize = loops.iter().map(|lp| lp.intervals()).sum();
    let mut gram = vec![vec![0.0; total_intervals]; total_intervals];
    for (la, lp_a) in loops.iter().enumerate() {
        for ja in 0..lp_a.intervals() {
            for (lb, lp_b) in loops.iter().enumerate() {
                for jb in 0..lp_b.intervals() {
                    gram[offsets[la] + ja][offsets[lb] + jb] =
                        sobolev_inner(lp_a.gamma(ja), lp_b.gamma(jb))?;
                }
            }
        }
    }

    let nl = loops.len();
    let nmat = matrix_size as f64;
    let norm = nmat.powi(-(nl as i32));

    let mut value_acc = 0.0;
    let mut walker = Vec::new();
    for p in 0..=m_max {
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        let m = 2 * p;
        let mut per_p = 0.0;
        for_each_composition(m, nl, &mut |mu| {
            let assignments = interval_assignments(loops, &offsets, mu);
            for_each_pairing(&mut walker, m, &mut |pi| {
                let v = face_count_from_links(pi, mu);
                let weight = nmat.powi(v as i32 - p as i32);
                let mut s = 0.0;
                for (w, labels) in &assignments {
                    let mut prod = *w;
                    for (a, &b) in pi.iter().enumerate() {
                        if a < b {
                            prod *= gram[labels[a]][labels[b]];
                        }
                    }
                    s += prod;
                }
                per_p += weight * s;
            });
        });
        value_acc += sign * per_p;
    }
    let value = norm * value_acc;

    // Dropped-tail bound from the matching count and the cached sup norms.
    let s_total: f64 = loops.iter().map(|lp| lp.sup_norm()).sum();
    let truncation = nmat * exp_tail(s_total * s_total / 2.0, m_max);
    if truncation > tol {
        return Err(Error::TruncationTooLarge {
            bound: truncation,
            tolerance: tol,
        });
    }

    // The empty pairing contributes exactly one after normalization.
    let (mc_value, mc_stderr) = if mc_tuples > 0 {
        let (mv, ms) = monte_carlo_sum(loops, &offsets, &gram, nmat, m_max, mc_tuples, seed);
        (Some(1.0 + norm * mv), Some(norm * ms))
    } else {
        (None, None)
    };

    Ok(SurfaceSum {
        value,
        truncation,
        mc_value,
        mc_stderr,
        m_max,
        matrix_size,
    })
}

/// Sorted-uniform estimate of the summed simplex integrals, sharing one
/// draw across every term of a sample.
fn monte_carlo_sum(
    loops: &[BigLoop],
    offsets: &[usize],
    gram: &[Vec<f64>],
    nmat: f64,
    m_max: usize,
    mc_tuples: usize,
    seed: u64,
) -> (f64, f64) {
    let nl = loops.len();
    let mut walker = Vec::new();
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for draw in 0..mc_tuples {
        // One pool of uniforms per loop; prefixes stay uniform samples.
        let pools: Vec<Vec<f64>> = (0..nl)
            .map(|l| {
                let mut rng = stream_rng(seed, draw as u64, l as u64);
                (0..2 * m_max).map(|_| rng.gen::<f64>()).collect()
            })
            .collect();
        let mut x = 0.0;
        for p in 1..=m_max {
            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
            let m = 2 * p;
            let mut per_p = 0.0;
            for_each_composition(m, nl, &mut |mu| {
                let mut weight = 1.0;
                let mut labels = Vec::with_capacity(m);
                for (l, &take) in mu.iter().enumerate() {
                    let mut ts: Vec<f64> = pools[l][..take].to_vec();
                    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    for &t in &ts {
                        labels.push(offsets[l] + loops[l].interval_of(t));
                    }
                    weight /= factorial(take);
                }
                for_each_pairing(&mut walker, m, &mut |pi| {
                    let v = face_count_from_links(pi, mu);
                    let mut prod = weight * nmat.powi(v as i32 - p as i32);
                    for (a, &b) in pi.iter().enumerate() {
                        if a < b {
                            prod *= gram[labels[a]][labels[b]];
                        }
                    }
                    per_p += prod;
                });
            });
            x += sign * per_p;
        }
        sum += x;
        sumsq += x * x;
    }
    let mean = sum / mc_tuples as f64;
    let var = (sumsq / mc_tuples as f64 - mean * mean).max(0.0);
    let stderr = (var / mc_tuples as f64).sqrt();
    (mean, stderr)
}

/// Ordered compositions of `total` into `parts` nonnegative counts.
fn for_each_composition(total: usize, parts: usize, f: &mut impl FnMut(&[usize])) {
    fn descend(
        left: usize,
        slot: usize,
        buf: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]),
    ) {
        if slot + 1 == buf.len() {
            buf[slot] = left;
            f(buf);
            return;
        }
        for take in 0..=left {
            buf[slot] = take;
            descend(left - take, slot + 1, buf, f);
        }
    }
    let mut buf = vec![0usize; parts];
    descend(total, 0, &mut buf, f);
}

/// Weakly increasing interval labels for each loop's points, flattened to
/// Gram indices, with the closed-form ordered-integral weight
/// `prod_j dt_j^{q_j} / q_j!`.
fn interval_assignments(
    loops: &[BigLoop],
    offsets: &[usize],
    mu: &[usize],
) -> Vec<(f64, Vec<usize>)> {
    let mut acc: Vec<(f64, Vec<usize>)> = vec![(1.0, Vec::new())];
    for (l, &count) in mu.iter().enumerate() {
        let lp = &loops[l];
        let mut per_loop: Vec<(f64, Vec<usize>)> = Vec::new();
        let mut labels = vec![0usize; count];
        fill_labels(lp, 0, 0, &mut labels, &mut per_loop);
        let mut next = Vec::with_capacity(acc.len() * per_loop.len());
        for (w0, base) in &acc {
            for (w1, tail) in &per_loop {
                let mut labels = base.clone();
                labels.extend(tail.iter().map(|&j| offsets[l] + j));
                next.push((w0 * w1, labels));
            }
        }
        acc = next;
    }
    acc
}

fn fill_labels(
    lp: &BigLoop,
    slot: usize,
    min_interval: usize,
    labels: &mut Vec<usize>,
    out: &mut Vec<(f64, Vec<usize>)>,
) {
    if slot == labels.len() {
        let mut w = 1.0;
        let mut run = 0usize;
        for (i, &j) in labels.iter().enumerate() {
            run = if i > 0 && labels[i - 1] == j { run + 1 } else { 1 };
            w *= lp.delta(j) / run as f64;
        }
        out.push((w, labels.clone()));
        return;
    }
    for j in min_interval..lp.intervals() {
        labels[slot] = j;
        fill_labels(lp, slot + 1, j, labels, out);
    }
}

fn factorial(q: usize) -> f64 {
    (1..=q).map(|x| x as f64).product()
}

/// `sum_{q > k} x^q / q!`, the exponential-series remainder.
fn exp_tail(x: f64, k: usize) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut term = ((k as f64 + 1.0) * x.ln()
        - statrs::function::gamma::ln_gamma(k as f64 + 2.0))
        .exp();
    let mut acc = 0.0;
    let mut q = k as f64 + 1.0;
    for _ in 0..1000 {
        acc += term;
        q += 1.0;
        term *= x / q;
        if term <= acc * 1e-18 {
            break;
        }
    }
    acc
}

/// Chronologically ordered holonomy `h(1)` of a sampled connection along a
/// big loop, as the degree-truncated product of interval exponentials. The
/// value kind of the sample fixes the matrix size; scalars act as u(1).
pub fn holonomy_series(
    sample: &FieldSample,
    lp: &BigLoop,
    m_max: usize,
    tol: f64,
) -> Result<DMatrix<Complex64>> {
    let spec = sample
        .spectrum()
        .ok_or_else(|| Error::InvalidArgument("holonomy needs a torus spectrum sample".into()))?;
    if spec.degree() != 1 || spec.n() != lp.n() {
        return Err(Error::InvalidArgument(
            "sample must be a one-form on the loop's torus".into(),
        ));
    }
    let size = match spec.value_kind() {
        ValueKind::RealScalar => 1,
        ValueKind::Matrix(sz) => sz,
    };
    let basis = LieBasis::new(size)?;

    // Per-interval generator: line pairing against each basis direction.
    let mut gens = Vec::with_capacity(lp.intervals());
    let mut budget = 0.0;
    for j in 0..lp.intervals() {
        let coeffs: Vec<Complex64> = line_pairings(spec, lp.gamma(j))?
            .into_iter()
            .map(|p| Complex64::new(p, 0.0))
            .collect();
        let gen = basis.expand(&coeffs);
        budget += lp.delta(j) * gen.norm();
        gens.push(gen);
    }
    let bound = exp_tail(budget, m_max);
    if bound > tol {
        return Err(Error::TruncationTooLarge {
            bound,
            tolerance: tol,
        });
    }

    let eye = DMatrix::<Complex64>::identity(size, size);
    let zero = DMatrix::<Complex64>::zeros(size, size);
    let mut by_degree: Vec<DMatrix<Complex64>> = vec![zero.clone(); m_max + 1];
    by_degree[0] = eye.clone();
    for (j, gen) in gens.iter().enumerate() {
        let step = gen * Complex64::new(lp.delta(j), 0.0);
        let mut powers = Vec::with_capacity(m_max + 1);
        powers.push(eye.clone());
        for r in 1..=m_max {
            let prev: &DMatrix<Complex64> = &powers[r - 1];
            powers.push(prev * &step / Complex64::new(r as f64, 0.0));
        }
        let mut next: Vec<DMatrix<Complex64>> = vec![zero.clone(); m_max + 1];
        for q in 0..=m_max {
            for r in 0..=q {
                next[q] += &by_degree[q - r] * &powers[r];
            }
        }
        by_degree = next;
    }
    let mut h = zero;
    for part in by_degree {
        h += part;
    }
    Ok(h)
}

/// Line pairings `(A^a, gamma)` of each Lie-basis coefficient field with a
/// scalar current, over the modes the two spectra share.
fn line_pairings(spec: &TorusSpectrum, gamma: &TorusSpectrum) -> Result<Vec<f64>> {
    if gamma.degree() != 1 || gamma.value_kind() != ValueKind::RealScalar {
        return Err(Error::InvalidArgument("current must be a scalar one-form".into()));
    }
    let vdim = spec.value_kind().dim();
    let comps = gamma.component_count();
    let mut acc = vec![Complex64::ZERO; vdim];
    for idx in 0..gamma.mode_count() {
        let Some(other) = spec.mode_index(&gamma.mode_at(idx)) else { continue };
        let g = gamma.coeff(idx);
        let s = spec.coeff(other);
        for c in 0..comps {
            let gc = g[c].conj();
            for (b, slot) in acc.iter_mut().enumerate() {
                *slot += s[c * vdim + b] * gc;
            }
        }
    }
    Ok(acc.into_iter().map(|z| z.re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;
    use crate::sample::sample_field;
    use crate::stats::mean_stderr;

    fn map_from_one_based(m: usize, pairs: &[(usize, usize)], mu: &[usize]) -> PairingMap {
        let shifted: Vec<(usize, usize)> = pairs.iter().map(|&(a, b)| (a - 1, b - 1)).collect();
        PairingMap::new(m, &shifted, mu).unwrap()
    }

    #[test]
    fn glued_face_counts_match_hand_tracings() {
        // Octagon: the matching glues to a pentagon, a digon, and a monogon.
        let octo = map_from_one_based(8, &[(1, 5), (2, 4), (3, 8), (6, 7)], &[8]);
        assert_eq!(octo.vertex_count(), 3);
        assert_eq!(octo.edge_count(), 4);

        // Square, triangle, pentagon glued along six chords.
        let three = map_from_one_based(
            12,
            &[(1, 11), (2, 7), (3, 6), (4, 10), (5, 9), (8, 12)],
            &[4, 3, 5],
        );
        assert_eq!(three.vertex_count(), 3);

        // A digon sewn shut keeps both faces.
        let digon = map_from_one_based(2, &[(1, 2)], &[2]);
        assert_eq!(digon.vertex_count(), 2);
    }

    #[test]
    fn empty_polygons_each_contribute_a_face() {
        let map = PairingMap::new(2, &[(0, 1)], &[2, 0, 0]).unwrap();
        assert_eq!(map.vertex_count(), 4);
        let trivial: Vec<PairingMap> = pairing_maps(0, &[0]).unwrap().collect();
        assert_eq!(trivial.len(), 1);
        assert_eq!(trivial[0].vertex_count(), 1);
        assert_eq!(trivial[0].edge_count(), 0);
    }

    #[test]
    fn enumeration_counts_every_matching_once() {
        for (m, expect) in [(2usize, 1usize), (4, 3), (6, 15), (8, 105)] {
            let maps: Vec<PairingMap> = pairing_maps(m, &[m]).unwrap().collect();
            assert_eq!(maps.len(), expect);
            let mut seen: Vec<Vec<(usize, usize)>> =
                maps.iter().map(|p| p.pairs().to_vec()).collect();
            seen.sort();
            seen.dedup();
            assert_eq!(seen.len(), expect);
            assert!(maps.iter().all(|p| p.vertex_count() >= 1));

            // The internal walker agrees with the public iterator.
            let mut walked = 0usize;
            let mut buf = Vec::new();
            for_each_pairing(&mut buf, m, &mut |_| walked += 1);
            assert_eq!(walked, expect);
        }
    }

    #[test]
    fn malformed_pairings_are_rejected() {
        assert!(pairing_maps(3, &[3]).is_err());
        assert!(pairing_maps(4, &[3]).is_err());
        assert!(PairingMap::new(4, &[(0, 1), (1, 2)], &[4]).is_err());
        assert!(PairingMap::new(4, &[(0, 1), (2, 4)], &[4]).is_err());
        assert!(PairingMap::new(4, &[(0, 1)], &[4]).is_err());
    }

    /// Divergence-free current with chosen coefficients on conjugate mode
    /// pairs; `entries` lists `(alpha, component, value)` for the positive
    /// representative.
    fn current(cutoff: i64, entries: &[([i64; 3], usize, f64)]) -> TorusSpectrum {
        let mut g = TorusSpectrum::zeros(3, 1, cutoff, ValueKind::RealScalar).unwrap();
        for &(alpha, comp, val) in entries {
            let plus = g.mode_index(&alpha).unwrap();
            let minus = g.mode_index(&alpha.map(|x| -x)).unwrap();
            g.coeff_mut(plus)[comp] += Complex64::new(val, 0.0);
            g.coeff_mut(minus)[comp] += Complex64::new(val, 0.0);
        }
        g
    }

    #[test]
    fn big_loop_checks_its_invariants() {
        let g = current(2, &[([1, 0, 0], 1, 0.5)]);
        let lp = BigLoop::constant(g.clone()).unwrap();
        assert!((lp.sup_norm() - (2.0f64 * 0.25).sqrt()).abs() < 1e-12);

        // Partition must be a refinement of [0, 1].
        assert!(BigLoop::new(vec![0.0, 0.5], vec![g.clone(), g.clone()]).is_err());
        assert!(BigLoop::new(vec![0.0, 0.6, 0.5, 1.0], vec![g.clone(), g.clone(), g.clone()]).is_err());

        // A current with a longitudinal part is refused.
        let mut bad = TorusSpectrum::zeros(3, 1, 2, ValueKind::RealScalar).unwrap();
        let idx = bad.mode_index(&[1, 0, 0]).unwrap();
        bad.coeff_mut(idx)[0] = Complex64::new(0.3, 0.0);
        assert!(BigLoop::constant(bad).is_err());

        // A zero mode has infinite negative-Sobolev norm.
        let mut zero = TorusSpectrum::zeros(3, 1, 2, ValueKind::RealScalar).unwrap();
        let idx = zero.mode_index(&[0, 0, 0]).unwrap();
        zero.coeff_mut(idx)[2] = Complex64::new(0.2, 0.0);
        assert!(BigLoop::constant(zero).is_err());
    }

    #[test]
    fn two_interval_sup_norm_takes_the_larger_side() {
        let small = current(2, &[([1, 0, 0], 1, 0.1)]);
        let big = current(2, &[([0, 2, 0], 0, 0.4)]);
        let lp = BigLoop::new(vec![0.0, 0.3, 1.0], vec![small, big]).unwrap();
        let expect = (2.0f64 * 0.16 / 4.0).sqrt();
        assert!((lp.sup_norm() - expect).abs() < 1e-12, "{}", lp.sup_norm());
    }

    #[test]
    fn empty_truncation_gives_one() {
        let lp = BigLoop::constant(current(2, &[([1, 0, 0], 1, 0.3)])).unwrap();
        let sum = surface_sum_expectation(&[lp], 3, 0, 0, 1, 1.0).unwrap();
        assert_eq!(sum.value, 1.0);
        assert!(sum.truncation > 0.0);
        assert!(sum.mc_value.is_none());
    }

    #[test]
    fn constant_abelian_loop_sums_to_the_exponential() {
        // Norm^2 = 2 * (1/8) / 1 = 0.25.
        let amp = 0.125f64.sqrt();
        let lp = BigLoop::constant(current(2, &[([1, 0, 0], 1, amp)])).unwrap();
        assert!((lp.sup_norm() * lp.sup_norm() - 0.25).abs() < 1e-14);
        let exact = (-0.125f64).exp();

        let sum = surface_sum_expectation(&[lp.clone()], 1, 8, 0, 1, 1e-9).unwrap();
        assert!(
            (sum.value - exact).abs() <= 1e-6 * exact,
            "{} vs {exact}",
            sum.value
        );

        // Shorter truncations stay within their reported tail bounds.
        let mut last = f64::INFINITY;
        for m_max in [2usize, 4, 6] {
            let s = surface_sum_expectation(&[lp.clone()], 1, m_max, 0, 1, 1.0).unwrap();
            assert!((s.value - exact).abs() <= s.truncation);
            assert!(s.truncation < last);
            last = s.truncation;
        }
    }

    #[test]
    fn oversized_truncations_and_inputs_are_rejected() {
        let lp = BigLoop::constant(current(2, &[([1, 0, 0], 1, 0.3)])).unwrap();
        assert!(surface_sum_expectation(&[lp.clone()], 1, 9, 0, 1, 1.0).is_err());
        assert!(surface_sum_expectation(&[], 1, 4, 0, 1, 1.0).is_err());
        assert!(surface_sum_expectation(&[lp.clone()], 0, 4, 0, 1, 1.0).is_err());
        let err = surface_sum_expectation(&[lp], 1, 1, 0, 1, 1e-12).unwrap_err();
        assert!(matches!(err, Error::TruncationTooLarge { .. }));
    }

    #[test]
    fn abelian_loops_multiply_like_joint_gaussians() {
        // E prod_l exp(i P_l) = exp(-sum_{l,l'} (G_l, G_l') / 2).
        let a = current(2, &[([1, 0, 0], 1, 0.15)]);
        let b = current(2, &[([1, 0, 0], 1, 0.2), ([0, 1, 0], 2, 0.15)]);
        let xx = sobolev_inner(&a, &a).unwrap();
        let xy = sobolev_inner(&a, &b).unwrap();
        let yy = sobolev_inner(&b, &b).unwrap();
        assert!(xy > 0.0);
        let exact = (-(xx + yy + 2.0 * xy) / 2.0).exp();

        let loops = [BigLoop::constant(a).unwrap(), BigLoop::constant(b).unwrap()];
        let sum = surface_sum_expectation(&loops, 1, 8, 0, 1, 1e-9).unwrap();
        assert!(
            (sum.value - exact).abs() <= 1e-6 * exact,
            "{} vs {exact}",
            sum.value
        );
    }

    #[test]
    fn monte_carlo_tracks_the_closed_form() {
        let g0 = current(2, &[([1, 0, 0], 1, 0.25)]);
        let g1 = current(2, &[([1, 0, 0], 1, 0.1), ([0, 0, 1], 0, 0.2)]);
        let lp = BigLoop::new(vec![0.0, 0.4, 1.0], vec![g0, g1]).unwrap();
        let sum = surface_sum_expectation(&[lp], 2, 5, 3000, 7, 1.0).unwrap();
        let mc = sum.mc_value.unwrap();
        let se = sum.mc_stderr.unwrap();
        assert!(se > 0.0);
        assert!(
            (mc - sum.value).abs() <= 4.0 * se + sum.truncation,
            "mc {mc} vs exact {} (se {se})",
            sum.value
        );
    }

    #[test]
    fn zero_connection_has_identity_holonomy() {
        let lp = BigLoop::constant(current(2, &[([1, 0, 0], 1, 0.3)])).unwrap();
        let spec = TorusSpectrum::zeros(3, 1, 2, ValueKind::RealScalar).unwrap();
        let sample = FieldSample {
            seed: 0,
            sample_idx: 0,
            data: crate::sample::SampleData::Spectrum(spec),
        };
        let h = holonomy_series(&sample, &lp, 6, 1e-9).unwrap();
        assert_eq!(h.nrows(), 1);
        assert!((h[(0, 0)] - Complex64::ONE).norm() == 0.0);
    }

    #[test]
    fn scalar_holonomy_is_the_exponential_of_the_line_pairing() {
        let g0 = current(3, &[([1, 0, 0], 1, 0.4)]);
        let g1 = current(3, &[([0, 1, 1], 0, 0.5), ([2, 0, 0], 1, 0.3)]);
        let lp = BigLoop::new(vec![0.0, 0.35, 1.0], vec![g0.clone(), g1.clone()]).unwrap();
        let field = FieldSpec::torus(3, 1, 1.0, 1.0, 3);
        let sample = sample_field(&field, 11, 4).unwrap();
        let spec = sample.spectrum().unwrap();

        let pairing = 0.35 * spec.l2_dot(&g0).unwrap().re + 0.65 * spec.l2_dot(&g1).unwrap().re;
        let h = holonomy_series(&sample, &lp, 24, 1e-12).unwrap();
        let expect = Complex64::new(0.0, pairing).exp();
        assert!(
            (h[(0, 0)] - expect).norm() < 1e-10,
            "{} vs {expect}",
            h[(0, 0)]
        );
    }

    #[test]
    fn holonomy_ignores_gradient_shifts() {
        let lp = BigLoop::new(
            vec![0.0, 0.5, 1.0],
            vec![
                current(3, &[([1, 0, 0], 1, 0.4)]),
                current(3, &[([0, 1, 1], 0, 0.5)]),
            ],
        )
        .unwrap();
        let field = FieldSpec::torus(3, 1, 1.0, 1.0, 3);
        let sample = sample_field(&field, 5, 9).unwrap();
        let h = holonomy_series(&sample, &lp, 20, 1e-10).unwrap();

        // Shift the connection by the differential of a real scalar.
        let mut lambda = TorusSpectrum::zeros(3, 0, 3, ValueKind::RealScalar).unwrap();
        for (alpha, val) in [([1i64, 1, 0], Complex64::new(0.7, 0.2)), ([0, 0, 2], Complex64::new(-0.3, 0.4))]
        {
            let plus = lambda.mode_index(&alpha).unwrap();
            let minus = lambda.mode_index(&alpha.map(|x| -x)).unwrap();
            lambda.coeff_mut(plus)[0] = val;
            lambda.coeff_mut(minus)[0] = val.conj();
        }
        let grad = lambda.apply_exterior(ModeOp::D).unwrap();
        let mut shifted_spec = sample.spectrum().unwrap().clone();
        for idx in 0..grad.mode_count() {
            let target = shifted_spec.mode_index(&grad.mode_at(idx)).unwrap();
            for c in 0..3 {
                let add = grad.coeff(idx)[c];
                shifted_spec.coeff_mut(target)[c] += add;
            }
        }
        let shifted = FieldSample {
            seed: 5,
            sample_idx: 9,
            data: crate::sample::SampleData::Spectrum(shifted_spec),
        };
        let h2 = holonomy_series(&shifted, &lp, 20, 1e-10).unwrap();
        assert!((&h - &h2).norm() < 1e-12);
    }

    #[test]
    fn truncation_bound_guards_the_holonomy() {
        let lp = BigLoop::constant(current(2, &[([1, 0, 0], 1, 0.5)])).unwrap();
        let field = FieldSpec::torus(3, 1, 1.0, 1.0, 2);
        let sample = sample_field(&field, 3, 0).unwrap();
        let err = holonomy_series(&sample, &lp, 1, 1e-10).unwrap_err();
        assert!(matches!(err, Error::TruncationTooLarge { .. }));
    }

    #[test]
    fn surface_sum_matches_holonomy_monte_carlo() {
        let g0 = current(2, &[([1, 0, 0], 1, 0.2)]);
        let g1 = current(2, &[([1, 0, 0], 1, 0.1), ([0, 1, 0], 2, 0.2)]);
        let lp = BigLoop::new(vec![0.0, 0.5, 1.0], vec![g0, g1]).unwrap();
        let exact = surface_sum_expectation(&[lp.clone()], 2, 6, 0, 1, 1e-6)
            .unwrap()
            .value;

        let field = FieldSpec::torus(3, 1, 1.0, 1.0, 2).with_matrix_size(2);
        let mut traces = Vec::new();
        for idx in 0..4000u64 {
            let sample = sample_field(&field, 23, idx).unwrap();
            let h = holonomy_series(&sample, &lp, 14, 1e-8).unwrap();
            traces.push((h[(0, 0)] + h[(1, 1)]).re / 2.0);
        }
        let (mean, se) = mean_stderr(&traces);
        assert!(
            (mean - exact).abs() <= 3.0 * se + 1e-6,
            "mc {mean} +- {se} vs exact {exact}"
        );
    }
}
