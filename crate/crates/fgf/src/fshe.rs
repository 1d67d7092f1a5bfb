//! Fractional stochastic heat evolution of torus spectra.
//!
//! Each mode follows an Ornstein-Uhlenbeck process with rate `|a|^{2s}` and
//! unit-intensity noise, stepped exactly. The stationary law is the plain
//! fractional field at inverse temperature 2; the zero mode diffuses freely.

use num_complex::Complex64;

use crate::field::FieldSpec;
use crate::rng::{standard_normal, stream_rng};
use crate::sample::sample_field;
use crate::spectrum::{is_positive_mode, TorusSpectrum};
use crate::{Error, Result};

/// Exact-in-law integrator for the fractional heat equation.
#[derive(Clone, Debug)]
pub struct HeatEvolution {
    state: TorusSpectrum,
    s: f64,
    seed: u64,
    step_idx: u64,
}

impl HeatEvolution {
    /// Starts from the stationary law (plain field, beta = 2) at the cutoff.
    pub fn stationary(n: usize, k: usize, s: f64, cutoff: i64, seed: u64) -> Result<Self> {
        let spec = FieldSpec::torus(n, k, s, 2.0, cutoff);
        let init = sample_field(&spec, seed, 0)?;
        let state = init
            .spectrum()
            .cloned()
            .expect("torus sampler returns a spectrum");
        Ok(HeatEvolution {
            state,
            s,
            seed,
            step_idx: 0,
        })
    }

    /// Starts from a given spectrum.
    pub fn from_state(state: TorusSpectrum, s: f64, seed: u64) -> Result<Self> {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::InvalidArgument(format!("s must be nonnegative, got {s}")));
        }
        Ok(HeatEvolution {
            state,
            s,
            seed,
            step_idx: 0,
        })
    }

    pub fn state(&self) -> &TorusSpectrum {
        &self.state
    }

    pub fn steps_taken(&self) -> u64 {
        self.step_idx
    }

    /// Advances time by `delta > 0`. Per mode the update is the exact
    /// Ornstein-Uhlenbeck transition: decay by `e^{-lam delta}` plus an
    /// independent innovation of variance `(1 - e^{-2 lam delta}) / (2 lam)`.
    pub fn step(&mut self, delta: f64) -> Result<()> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {delta}")));
        }
        self.step_idx += 1;
        let sp = &mut self.state;
        let stride = sp.mode_stride();
        let s = self.s;
        for idx in 0..sp.mode_count() {
            let alpha = sp.mode_at(idx);
            let zero = alpha.iter().all(|&a| a == 0);
            if !zero && !is_positive_mode(&alpha) {
                continue;
            }
            let a2 = sp.freq_sq(idx);
            let lam = a2.powf(s);
            let decay = (-lam * delta).exp();
            let innovation_var = if lam > 0.0 {
                -(-2.0 * lam * delta).exp_m1() / (2.0 * lam)
            } else {
                delta
            };
            let scale = innovation_var.sqrt();
            let mut rng = stream_rng(self.seed, self.step_idx, idx as u64);
            let mut new = vec![Complex64::ZERO; stride];
            for (v, old) in new.iter_mut().zip(sp.coeff(idx)) {
                let x = standard_normal(&mut rng);
                let y = standard_normal(&mut rng);
                let zeta = if zero {
                    Complex64::new(x, 0.0)
                } else {
                    Complex64::new(x, y) * std::f64::consts::FRAC_1_SQRT_2
                };
                *v = old * decay + zeta * scale;
            }
            sp.coeff_mut(idx).copy_from_slice(&new);
            if !zero {
                let neg: Vec<i64> = alpha.iter().map(|&a| -a).collect();
                let nidx = sp.mode_index(&neg).expect("mirror mode in range");
                for (dst, src) in sp.coeff_mut(nidx).iter_mut().zip(&new) {
                    *dst = src.conj();
                }
            }
        }
        Ok(())
    }
}

/// Stationary per-mode variance `(1/2) |a|^{-2s}` of the heat evolution.
pub fn stationary_mode_variance(alpha: &[i64], s: f64) -> f64 {
    let a2: f64 = alpha.iter().map(|&a| (a * a) as f64).sum();
    if a2 == 0.0 {
        if s == 0.0 {
            0.5
        } else {
            f64::INFINITY
        }
    } else {
        0.5 * a2.powf(-s)
    }
}
