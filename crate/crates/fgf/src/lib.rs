//! Fractional Gaussian differential forms on lattices and tori.
//!
//! The crate is organized around three pillars:
//!
//! * discrete exterior calculus on finite boxes ([`complex`], [`form`], [`ops`], [`solve`]),
//! * exact per-Fourier-mode exterior algebra and Gaussian samplers on the torus
//!   ([`mode`], [`spectrum`], [`field`], [`sample`]),
//! * observables: continuum covariance kernels ([`kernels`]), Wilson loops and
//!   surface sums ([`wilson`]), and a U(1) lattice-gauge Monte Carlo cross-check ([`lgt`]).

pub mod complex;
pub mod field;
pub mod form;
pub mod fshe;
pub mod kernels;
pub mod lgt;
pub mod lie;
pub mod mode;
pub mod ops;
pub mod restrict;
pub mod rng;
pub mod sample;
pub mod scaling;
pub mod solve;
pub mod spectrum;
pub mod stats;
pub mod surface;
pub mod wilson;

pub use complex::{Cell, LatticeComplex, Topology};
pub use field::{FieldSpec, Geometry, Variant};
pub use form::LatticeForm;
pub use sample::{sample_field, FieldSample, SampleData};
pub use spectrum::{TorusSpectrum, ValueKind};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degree {k} out of range for dimension {n}")]
    DegreeOutOfRange { k: usize, n: usize },
    #[error("forms live on different complexes or degrees")]
    ComplexMismatch,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid field spec: {0}")]
    InvalidSpec(String),
    #[error("solver stalled: relative residual {residual:.3e} after {iterations} iterations")]
    SolverStalled { residual: f64, iterations: usize },
    #[error("right-hand side has a harmonic part of relative size {magnitude:.3e}")]
    NotMeanZero { magnitude: f64 },
    #[error("quadrature failed to converge: estimate {estimate:.6e}, error bound {bound:.3e}")]
    QuadratureDiverged { estimate: f64, bound: f64 },
    #[error("truncation error bound {bound:.3e} exceeds tolerance {tolerance:.3e}")]
    TruncationTooLarge { bound: f64, tolerance: f64 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
