//! Real-valued k-forms: one number per canonical k-cell.

use crate::complex::{Cell, LatticeComplex};
use crate::{Error, Result};
use std::sync::Arc;

/// A k-form on a lattice complex. Values are stored component-major in the
/// complex's flat order; orientation reversal flips the sign on evaluation.
#[derive(Clone, Debug)]
pub struct LatticeForm {
    complex: Arc<LatticeComplex>,
    k: usize,
    values: Vec<f64>,
}

impl LatticeForm {
    pub fn zeros(complex: Arc<LatticeComplex>, k: usize) -> Result<Self> {
        if k > complex.n() {
            return Err(Error::DegreeOutOfRange { k, n: complex.n() });
        }
        let len = complex.cell_count(k);
        Ok(Self {
            complex,
            k,
            values: vec![0.0; len],
        })
    }

    /// Builds a form by evaluating `f` on every canonical cell.
    pub fn from_fn(
        complex: Arc<LatticeComplex>,
        k: usize,
        mut f: impl FnMut(&Cell) -> f64,
    ) -> Result<Self> {
        let mut form = Self::zeros(complex, k)?;
        for idx in 0..form.values.len() {
            let cell = form.complex.cell_at(k, idx);
            form.values[idx] = f(&cell);
        }
        Ok(form)
    }

    /// Wraps an existing value vector (internal flat order).
    pub fn from_values(complex: Arc<LatticeComplex>, k: usize, values: Vec<f64>) -> Result<Self> {
        if k > complex.n() {
            return Err(Error::DegreeOutOfRange { k, n: complex.n() });
        }
        if values.len() != complex.cell_count(k) {
            return Err(Error::InvalidArgument(format!(
                "value vector has length {}, expected {}",
                values.len(),
                complex.cell_count(k)
            )));
        }
        Ok(Self { complex, k, values })
    }

    pub fn complex(&self) -> &Arc<LatticeComplex> {
        &self.complex
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value on a canonical cell.
    pub fn value(&self, cell: &Cell) -> Result<f64> {
        let idx = self
            .complex
            .index_of(cell)
            .ok_or(Error::InvalidArgument(format!("cell {cell:?} not in box")))?;
        Ok(self.values[idx])
    }

    /// Sets the value on a canonical cell.
    pub fn set(&mut self, cell: &Cell, v: f64) -> Result<()> {
        let idx = self
            .complex
            .index_of(cell)
            .ok_or(Error::InvalidArgument(format!("cell {cell:?} not in box")))?;
        self.values[idx] = v;
        Ok(())
    }

    /// Values in canonical (base vertex, axis set) order, for serialization.
    pub fn canonical_values(&self) -> Vec<f64> {
        self.complex
            .canonical_order(self.k)
            .iter()
            .map(|&idx| self.values[idx])
            .collect()
    }

    /// Rebuilds a form from values listed in canonical order.
    pub fn from_canonical_values(
        complex: Arc<LatticeComplex>,
        k: usize,
        canonical: &[f64],
    ) -> Result<Self> {
        let order = complex.canonical_order(k);
        if canonical.len() != order.len() {
            return Err(Error::InvalidArgument(format!(
                "canonical vector has length {}, expected {}",
                canonical.len(),
                order.len()
            )));
        }
        let mut values = vec![0.0; order.len()];
        for (pos, &idx) in order.iter().enumerate() {
            values[idx] = canonical[pos];
        }
        Self::from_values(complex, k, values)
    }

    fn check_peer(&self, other: &Self) -> Result<()> {
        if self.k != other.k {
            return Err(Error::ComplexMismatch);
        }
        if Arc::ptr_eq(&self.complex, &other.complex) {
            return Ok(());
        }
        // Distinct allocations of the same box are interchangeable.
        let (a, b) = (&self.complex, &other.complex);
        if a.n() != b.n() || a.extents() != b.extents() || a.topology() != b.topology() {
            return Err(Error::ComplexMismatch);
        }
        Ok(())
    }

    /// Euclidean inner product over canonical cells.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.check_peer(other)?;
        Ok(dot_chunked(&self.values, &other.values))
    }

    pub fn norm(&self) -> f64 {
        dot_chunked(&self.values, &self.values).sqrt()
    }

    /// `self += scale * other`.
    pub fn axpy(&mut self, scale: f64, other: &Self) -> Result<()> {
        self.check_peer(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += scale * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, scale: f64) {
        for v in &mut self.values {
            *v *= scale;
        }
    }

    /// Mean over all k-cells.
    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        sum_chunked(&self.values) / self.values.len() as f64
    }

    /// Subtracts the per-component mean (the harmonic part on a periodic box,
    /// the global constant for a free 0-form).
    pub fn remove_component_means(&mut self) {
        for comp in 0..self.complex.component_count(self.k) {
            let range = self.complex.component_range(self.k, comp);
            let slice = &mut self.values[range];
            if slice.is_empty() {
                continue;
            }
            let mean = sum_chunked(slice) / slice.len() as f64;
            for v in slice {
                *v -= mean;
            }
        }
    }
}

/// Chunked sum with a fixed tree shape, so results do not depend on thread
/// count or platform-specific vectorization.
pub(crate) fn sum_chunked(values: &[f64]) -> f64 {
    const CHUNK: usize = 4096;
    if values.len() <= CHUNK {
        return values.iter().sum();
    }
    values.chunks(CHUNK).map(|c| c.iter().sum::<f64>()).sum()
}

pub(crate) fn dot_chunked(a: &[f64], b: &[f64]) -> f64 {
    const CHUNK: usize = 4096;
    if a.len() <= CHUNK {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    a.chunks(CHUNK)
        .zip(b.chunks(CHUNK))
        .map(|(ca, cb)| ca.iter().zip(cb).map(|(x, y)| x * y).sum::<f64>())
        .sum()
}
