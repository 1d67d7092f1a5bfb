//! Field specifications: which Gaussian form to sample, and where.

use serde::{Deserialize, Serialize};

use crate::complex::Topology;
use crate::{Error, Result};

/// Domain of a sampled field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum Geometry {
    /// Flat torus `[0, 2pi)^n`, Fourier modes truncated at `|alpha_i| <= cutoff`.
    Torus { cutoff: i64 },
    /// Cubical lattice box.
    Lattice {
        extents: Vec<usize>,
        topology: Topology,
    },
}

/// Law of the sampled field on top of the base Gaussian.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Variant {
    /// Fractional Gaussian form `(-Laplacian)^{-s/2} W`.
    #[default]
    Plain,
    /// Exact (image of d) spectral projection of the plain field.
    ExactProjected,
    /// Coexact (image of d*) spectral projection of the plain field.
    CoexactProjected,
    /// Massive field `(-Laplacian + lambda)^{-s/2} W`.
    Massive { lambda: f64 },
    /// Proca 1-form: mass `lambda` on the exact part, `(-Laplacian + lambda)^{-1/2}`
    /// on the coexact part.
    Proca { lambda: f64 },
    /// Chern-Simons 1-form on the 3-torus at coupling `0 <= lambda < 1`.
    ChernSimons { lambda: f64 },
}

/// Full description of a Gaussian form field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FieldSpec {
    pub n: usize,
    pub k: usize,
    /// Fractional regularity exponent in `(-Laplacian)^{-s/2}`.
    pub s: f64,
    /// Inverse temperature; coefficients scale as `beta^{-1/2}`.
    pub beta: f64,
    pub geometry: Geometry,
    #[serde(default)]
    pub variant: Variant,
    /// When set to `N`, values live in u(N) instead of the reals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_size: Option<usize>,
}

impl FieldSpec {
    /// Plain fractional field on the torus.
    pub fn torus(n: usize, k: usize, s: f64, beta: f64, cutoff: i64) -> Self {
        FieldSpec {
            n,
            k,
            s,
            beta,
            geometry: Geometry::Torus { cutoff },
            variant: Variant::Plain,
            matrix_size: None,
        }
    }

    /// Plain fractional field on a lattice box.
    pub fn lattice(k: usize, s: f64, beta: f64, extents: &[usize], topology: Topology) -> Self {
        FieldSpec {
            n: extents.len(),
            k,
            s,
            beta,
            geometry: Geometry::Lattice {
                extents: extents.to_vec(),
                topology,
            },
            variant: Variant::Plain,
            matrix_size: None,
        }
    }

    /// Proca 1-form with mass `lambda` on the torus.
    pub fn proca(n: usize, lambda: f64, beta: f64, cutoff: i64) -> Self {
        FieldSpec {
            n,
            k: 1,
            s: 1.0,
            beta,
            geometry: Geometry::Torus { cutoff },
            variant: Variant::Proca { lambda },
            matrix_size: None,
        }
    }

    /// Chern-Simons 1-form at coupling `lambda` on the 3-torus.
    pub fn chern_simons(lambda: f64, beta: f64, cutoff: i64) -> Self {
        FieldSpec {
            n: 3,
            k: 1,
            s: 0.0,
            beta,
            geometry: Geometry::Torus { cutoff },
            variant: Variant::ChernSimons { lambda },
            matrix_size: None,
        }
    }

    /// u(N)-valued copy of this spec.
    pub fn with_matrix_size(mut self, size: usize) -> Self {
        self.matrix_size = Some(size);
        self
    }

    /// Hurst parameter `H = s - n/2`.
    pub fn hurst(&self) -> f64 {
        self.s - self.n as f64 / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > 8 {
            return Err(Error::InvalidSpec(format!("dimension {} out of range", self.n)));
        }
        if self.k > self.n {
            return Err(Error::DegreeOutOfRange {
                k: self.k,
                n: self.n,
            });
        }
        if !(self.beta > 0.0) {
            return Err(Error::InvalidSpec(format!("beta must be positive, got {}", self.beta)));
        }
        if !self.s.is_finite() || self.s < 0.0 {
            return Err(Error::InvalidSpec(format!("s must be finite and nonnegative, got {}", self.s)));
        }
        if let Some(size) = self.matrix_size {
            if size == 0 {
                return Err(Error::InvalidSpec("matrix size must be positive".into()));
            }
        }
        match &self.variant {
            Variant::Plain | Variant::ExactProjected | Variant::CoexactProjected => {}
            Variant::Massive { lambda } => {
                if !(*lambda > 0.0) {
                    return Err(Error::InvalidSpec(format!("massive field needs lambda > 0, got {lambda}")));
                }
            }
            Variant::Proca { lambda } => {
                if !(*lambda > 0.0) {
                    return Err(Error::InvalidSpec(format!("Proca field needs lambda > 0, got {lambda}")));
                }
                if self.k != 1 {
                    return Err(Error::InvalidSpec("Proca field is a 1-form".into()));
                }
            }
            Variant::ChernSimons { lambda } => {
                if !(0.0..1.0).contains(lambda) {
                    return Err(Error::InvalidSpec(format!(
                        "Chern-Simons coupling must lie in [0, 1), got {lambda}"
                    )));
                }
                if self.n != 3 || self.k != 1 {
                    return Err(Error::InvalidSpec("Chern-Simons field is a 1-form in dimension 3".into()));
                }
                if self.s != 0.0 {
                    return Err(Error::InvalidSpec("Chern-Simons field has no fractional smoothing; set s = 0".into()));
                }
            }
        }
        match &self.geometry {
            Geometry::Torus { cutoff } => {
                if *cutoff < 1 {
                    return Err(Error::InvalidSpec(format!("cutoff must be at least 1, got {cutoff}")));
                }
            }
            Geometry::Lattice { extents, topology } => {
                if extents.len() != self.n {
                    return Err(Error::InvalidSpec(format!(
                        "extents of length {} do not match dimension {}",
                        extents.len(),
                        self.n
                    )));
                }
                let _ = topology;
                if self.variant != Variant::Plain {
                    return Err(Error::InvalidSpec(
                        "lattice sampling supports the plain variant only".into(),
                    ));
                }
                if self.matrix_size.is_some() {
                    return Err(Error::InvalidSpec(
                        "matrix-valued sampling is torus-only".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}
