//! U(1) lattice gauge theory Monte Carlo with spanning-tree gauge fixing.

use crate::complex::{Cell, LatticeComplex, Topology};
use crate::form::LatticeForm;
use crate::ops::exterior_derivative;
use crate::rng::stream_rng;
use crate::wilson::RectLoop;
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Wraps an angle into `[-pi, pi)`.
fn wrap_angle(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// U(1) gauge field: one angle per canonical oriented edge of a free box,
/// with the reversed edge carrying the negated angle.
#[derive(Clone, Debug)]
pub struct GaugeConfig {
    theta: LatticeForm,
    beta: f64,
}

impl GaugeConfig {
    /// Cold start: every edge at the identity.
    pub fn cold(complex: &Arc<LatticeComplex>, beta: f64) -> Result<Self> {
        check_gauge_box(complex, beta)?;
        Ok(Self {
            theta: LatticeForm::zeros(complex.clone(), 1)?,
            beta,
        })
    }

    /// Hot start: independent uniform angles, the product Haar measure.
    pub fn hot(complex: &Arc<LatticeComplex>, beta: f64, seed: u64) -> Result<Self> {
        let mut cfg = Self::cold(complex, beta)?;
        let mut rng = stream_rng(seed, 0, 41);
        for v in cfg.theta.values_mut() {
            *v = rng.gen_range(-PI..PI);
        }
        Ok(cfg)
    }

    pub fn complex(&self) -> &Arc<LatticeComplex> {
        self.theta.complex()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Edge angles in canonical cell order.
    pub fn angles(&self) -> &[f64] {
        self.theta.values()
    }

    pub fn angle(&self, edge: &Cell) -> Result<f64> {
        self.theta.value(edge)
    }

    /// Oriented boundary sum of edge angles around a plaquette.
    pub fn plaquette_angle(&self, plaquette: &Cell) -> Result<f64> {
        let mut acc = 0.0;
        for (edge, sign) in self.complex().boundary(plaquette)? {
            acc += sign as f64 * self.theta.value(&edge)?;
        }
        Ok(acc)
    }

    /// Angle picked up along a loop current with `+-1` edge weights.
    pub fn holonomy_angle(&self, current: &LatticeForm) -> Result<f64> {
        if !Arc::ptr_eq(self.complex(), current.complex()) {
            return Err(Error::ComplexMismatch);
        }
        Ok(self
            .angles()
            .iter()
            .zip(current.values())
            .map(|(t, g)| t * g)
            .sum())
    }

    /// Wilson observable `cos` of the loop angle.
    pub fn wilson(&self, lp: &RectLoop) -> Result<f64> {
        Ok(self.holonomy_angle(lp.gamma())?.cos())
    }
}

fn check_gauge_box(complex: &Arc<LatticeComplex>, beta: f64) -> Result<()> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidArgument("inverse temperature must be nonnegative".into()));
    }
    if complex.topology() != Topology::Free {
        return Err(Error::InvalidArgument("gauge configurations live on free boxes".into()));
    }
    if complex.n() < 2 || complex.n() > 3 {
        return Err(Error::InvalidArgument(
            "gauge Monte Carlo supports two- and three-dimensional boxes".into(),
        ));
    }
    Ok(())
}

/// Applies the gauge transformation with vertex potential `g`:
/// `theta(x -> y) += g(x) - g(y)`, wrapped. Plaquette angles are unchanged
/// mod 2 pi.
pub fn gauge_transform(cfg: &GaugeConfig, potential: &LatticeForm) -> Result<GaugeConfig> {
    if potential.degree() != 0 {
        return Err(Error::InvalidArgument("gauge potential must be a vertex function".into()));
    }
    if !Arc::ptr_eq(cfg.complex(), potential.complex()) {
        return Err(Error::ComplexMismatch);
    }
    let grad = exterior_derivative(potential)?;
    let mut out = cfg.clone();
    for (v, g) in out.theta.values_mut().iter_mut().zip(grad.values()) {
        *v = wrap_angle(*v - g);
    }
    Ok(out)
}

/// Comb-shaped spanning tree of the box vertices: edges along axis `d` run
/// over the slab where every earlier coordinate is zero.
pub fn comb_spanning_tree(complex: &LatticeComplex) -> Vec<Cell> {
    let n = complex.n();
    let extents = complex.extents();
    let mut edges = Vec::new();
    for axis in 0..n {
        let mut base = vec![0usize; n];
        loop {
            edges.push(Cell {
                base: base.clone(),
                axes: vec![axis as u8],
            });
            // Odometer over the link coordinate and the later vertex axes.
            let mut carried = true;
            for d in (axis..n).rev() {
                let limit = if d == axis { extents[d] } else { extents[d] + 1 };
                base[d] += 1;
                if base[d] < limit {
                    carried = false;
                    break;
                }
                base[d] = 0;
            }
            if carried {
                break;
            }
        }
    }
    edges
}

/// Tree-gauge representative: integrates the configuration along the tree
/// from the root, leaving every tree edge at the identity and every
/// plaquette angle unchanged mod 2 pi.
pub fn gauge_fix_tree(cfg: &GaugeConfig, tree: &[Cell], root: &[usize]) -> Result<GaugeConfig> {
    let complex = cfg.complex();
    let n = complex.n();
    let vertex_count = complex.cell_count(0);
    if root.len() != n {
        return Err(Error::InvalidArgument("root has the wrong dimension".into()));
    }
    let root_idx = complex
        .index_of(&Cell { base: root.to_vec(), axes: Vec::new() })
        .ok_or_else(|| Error::InvalidArgument("root lies outside the box".into()))?;
    if tree.len() + 1 != vertex_count {
        return Err(Error::InvalidArgument("edge set does not span the vertex set".into()));
    }

    // Adjacency with the crossing rule g(head) = g(tail) + theta(edge).
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); vertex_count];
    let mut seen_edges = std::collections::HashSet::new();
    for edge in tree {
        let eidx = complex
            .index_of(edge)
            .filter(|_| edge.axes.len() == 1)
            .ok_or_else(|| Error::InvalidArgument("tree entry is not an edge of the box".into()))?;
        if !seen_edges.insert(eidx) {
            return Err(Error::InvalidArgument("edge set does not span the vertex set".into()));
        }
        let axis = edge.axes[0] as usize;
        let mut head = edge.base.clone();
        head[axis] += 1;
        let tail_idx = complex
            .index_of(&Cell { base: edge.base.clone(), axes: Vec::new() })
            .expect("edge tail is a vertex");
        let head_idx = complex
            .index_of(&Cell { base: head, axes: Vec::new() })
            .expect("edge head is a vertex");
        let theta = cfg.theta.value(edge)?;
        adj[tail_idx].push((head_idx, theta));
        adj[head_idx].push((tail_idx, -theta));
    }

    let mut g = vec![f64::NAN; vertex_count];
    g[root_idx] = 0.0;
    let mut queue = std::collections::VecDeque::from([root_idx]);
    let mut reached = 1usize;
    while let Some(x) = queue.pop_front() {
        for &(y, theta) in &adj[x] {
            if g[y].is_nan() {
                g[y] = g[x] + theta;
                reached += 1;
                queue.push_back(y);
            }
        }
    }
    if reached != vertex_count {
        return Err(Error::InvalidArgument("edge set does not span the vertex set".into()));
    }

    // theta'(x -> y) = g(x) + theta - g(y); zero on tree edges by construction.
    let mut out = cfg.clone();
    let edge_count = complex.cell_count(1);
    for eidx in 0..edge_count {
        let edge = complex.cell_at(1, eidx);
        let axis = edge.axes[0] as usize;
        let mut head = edge.base.clone();
        head[axis] += 1;
        let tail_idx = complex
            .index_of(&Cell { base: edge.base.clone(), axes: Vec::new() })
            .expect("edge tail is a vertex");
        let head_idx = complex
            .index_of(&Cell { base: head, axes: Vec::new() })
            .expect("edge head is a vertex");
        let v = &mut out.theta.values_mut()[eidx];
        let lifted = g[tail_idx] + *v;
        *v = if lifted == g[head_idx] { 0.0 } else { wrap_angle(lifted - g[head_idx]) };
    }
    Ok(out)
}

/// Proposal and acceptance counters with the tuned proposal width.
#[derive(Clone, Copy, Debug, Default)]
pub struct AcceptanceStats {
    pub proposals: u64,
    pub accepted: u64,
    pub width: f64,
}

impl AcceptanceStats {
    pub fn rate(&self) -> f64 {
        if self.proposals == 0 {
            return 0.0;
        }
        self.accepted as f64 / self.proposals as f64
    }
}

/// Everything needed to reproduce a run, for the manifest file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub beta: f64,
    pub extents: Vec<usize>,
    pub sweeps: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub acceptance_rate: f64,
    pub proposal_width: f64,
}

// Per-edge star: for each plaquette through the edge, the edge's own
// boundary sign and the signed angles of the other three edges.
struct EdgeStar {
    plaqs: Vec<(f64, [(usize, f64); 3])>,
}

/// Metropolis chain for the density `exp(beta sum_p cos theta_p)` with
/// symmetric uniform angle proposals. Construction runs the burn-in, tuning
/// the proposal width into the 30-60% acceptance band; iteration yields one
/// configuration per post-burn-in sweep with the width frozen.
pub struct MetropolisRun {
    cfg: GaugeConfig,
    stars: Vec<EdgeStar>,
    rng: rand_chacha::ChaCha8Rng,
    width: f64,
    remaining: usize,
    sweeps: usize,
    burn_in: usize,
    seed: u64,
    stats: AcceptanceStats,
}

pub fn metropolis_run(
    complex: &Arc<LatticeComplex>,
    beta: f64,
    sweeps: usize,
    seed: u64,
) -> Result<MetropolisRun> {
    let cfg = GaugeConfig::cold(complex, beta)?;
    if sweeps == 0 {
        return Err(Error::InvalidArgument("need at least one sweep".into()));
    }

    let edge_count = complex.cell_count(1);
    let mut stars: Vec<EdgeStar> = (0..edge_count).map(|_| EdgeStar { plaqs: Vec::new() }).collect();
    for pidx in 0..complex.cell_count(2) {
        let plaquette = complex.cell_at(2, pidx);
        let bd: Vec<(usize, f64)> = complex
            .boundary(&plaquette)?
            .into_iter()
            .map(|(edge, sign)| (complex.index_of(&edge).expect("boundary edge in box"), sign as f64))
            .collect();
        for hit in 0..4 {
            let mut others = [(0usize, 0.0f64); 3];
            let mut w = 0;
            for (j, &(idx, sign)) in bd.iter().enumerate() {
                if j != hit {
                    others[w] = (idx, sign);
                    w += 1;
                }
            }
            stars[bd[hit].0].plaqs.push((bd[hit].1, others));
        }
    }

    let burn_in = 400 + sweeps / 4;
    let mut run = MetropolisRun {
        cfg,
        stars,
        rng: stream_rng(seed, 0, 40),
        width: (1.0 + beta).sqrt().recip().min(PI),
        remaining: sweeps,
        sweeps,
        burn_in,
        seed,
        stats: AcceptanceStats::default(),
    };

    // Burn-in with width retuning every 50 sweeps, then frozen.
    let mut window = AcceptanceStats::default();
    for s in 0..burn_in {
        let (prop, acc) = run.sweep();
        window.proposals += prop;
        window.accepted += acc;
        if (s + 1) % 50 == 0 {
            let rate = window.rate();
            if rate < 0.3 {
                run.width *= 0.7;
            } else if rate > 0.6 {
                run.width = (run.width * 1.3).min(PI);
            }
            window = AcceptanceStats::default();
        }
    }
    run.stats = AcceptanceStats { proposals: 0, accepted: 0, width: run.width };
    Ok(run)
}

impl MetropolisRun {
    fn sweep(&mut self) -> (u64, u64) {
        let beta = self.cfg.beta;
        let mut accepted = 0u64;
        let values = self.cfg.theta.values_mut();
        for (e, star) in self.stars.iter().enumerate() {
            let old = values[e];
            let new = wrap_angle(old + self.rng.gen_range(-self.width..self.width));
            let mut delta = 0.0;
            for &(own, others) in &star.plaqs {
                let rest: f64 = others.iter().map(|&(idx, sign)| sign * values[idx]).sum();
                delta += (own * new + rest).cos() - (own * old + rest).cos();
            }
            if beta * delta >= 0.0 || self.rng.gen::<f64>() < (beta * delta).exp() {
                values[e] = new;
                accepted += 1;
            }
        }
        (self.stars.len() as u64, accepted)
    }

    pub fn stats(&self) -> AcceptanceStats {
        self.stats
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn config(&self) -> &GaugeConfig {
        &self.cfg
    }

    pub fn manifest(&self) -> RunManifest {
        RunManifest {
            beta: self.cfg.beta,
            extents: self.cfg.complex().extents().to_vec(),
            sweeps: self.sweeps,
            burn_in: self.burn_in,
            seed: self.seed,
            acceptance_rate: self.stats.rate(),
            proposal_width: self.width,
        }
    }
}

impl Iterator for MetropolisRun {
    type Item = GaugeConfig;

    fn next(&mut self) -> Option<GaugeConfig> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let (prop, acc) = self.sweep();
        self.stats.proposals += prop;
        self.stats.accepted += acc;
        Some(self.cfg.clone())
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

/// Batched-means estimate of a Wilson loop over a thermalized stream.
#[derive(Clone, Copy, Debug)]
pub struct WilsonEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Integrated autocorrelation time implied by the batching.
    pub tau: f64,
    pub samples: usize,
}

pub fn wilson_mc_estimate(
    stream: impl Iterator<Item = GaugeConfig>,
    lp: &RectLoop,
) -> Result<WilsonEstimate> {
    let mut series = Vec::new();
    for cfg in stream {
        series.push(cfg.wilson(lp)?);
    }
    let batches = 16;
    if series.len() < 10 * batches {
        return Err(Error::InvalidArgument("too few samples for a batched estimate".into()));
    }
    let est = crate::stats::batched_mean(&series, batches);
    if series.len() as f64 / est.tau < 8.0 * batches as f64 {
        return Err(Error::InvalidArgument("too few effective samples".into()));
    }
    Ok(WilsonEstimate {
        mean: est.mean,
        stderr: est.stderr,
        tau: est.tau,
        samples: series.len(),
    })
}

/// `<cos theta>` under the single-angle density `exp(beta cos theta)`, by
/// periodic-trapezoid quadrature; the 2D free box factorizes into one such
/// angle per plaquette.
pub fn plaquette_char_ratio(beta: f64) -> f64 {
    let steps = 4096;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..steps {
        let theta = -PI + 2.0 * PI * i as f64 / steps as f64;
        let w = (beta * theta.cos()).exp();
        num += theta.cos() * w;
        den += w;
    }
    num / den
}
