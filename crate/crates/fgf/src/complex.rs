//! Finite boxes of the integer lattice and their oriented k-cells.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Boundary handling of a box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// All cells with vertices in the box; differences across the boundary drop.
    Free,
    /// Free box whose last `n - 2` axes span `2M` links (a thickened plane).
    Slab,
    /// All axes wrap.
    Periodic,
}

/// A k-cell `(x, I)`: base vertex `x` and strictly increasing axis set `I`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cell {
    pub base: Vec<usize>,
    pub axes: Vec<u8>,
}

/// Per-degree cell layout: one contiguous block per axis set.
#[derive(Clone, Debug)]
struct DegreeLayout {
    /// Axis sets in lexicographic order of the sorted tuples.
    sets: Vec<Vec<u8>>,
    /// Flat offset of each component block.
    offsets: Vec<usize>,
    /// Base-vertex grid extents per component, one entry per axis.
    grids: Vec<Vec<usize>>,
    /// Row-major strides matching `grids` (last axis fastest).
    strides: Vec<Vec<usize>>,
    total: usize,
}

/// Finite box in Z^n with enumerated k-cells for all degrees.
#[derive(Clone, Debug)]
pub struct LatticeComplex {
    n: usize,
    extents: Vec<usize>,
    topology: Topology,
    mesh: f64,
    layouts: Vec<DegreeLayout>,
}

/// Strictly increasing k-tuples from `0..n` in lexicographic order.
pub fn axis_sets(n: usize, k: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut current: Vec<u8> = (0..k as u8).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(current.clone());
        // Advance to the next strictly increasing k-tuple in lex order.
        let mut a = k;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            if (current[a] as usize) < n - k + a {
                current[a] += 1;
                for b in a + 1..k {
                    current[b] = current[b - 1] + 1;
                }
                break;
            }
        }
    }
}

impl LatticeComplex {
    /// Box with free boundary: `extents[d]` links along axis `d`.
    pub fn free(extents: &[usize]) -> Result<Self> {
        Self::new(extents, Topology::Free)
    }

    /// Periodic box: every axis wraps, `extents[d]` vertices along axis `d`.
    pub fn periodic(extents: &[usize]) -> Result<Self> {
        Self::new(extents, Topology::Periodic)
    }

    /// Slab in dimension `n`: `l0 x l1` links in the plane, `2m` links across.
    pub fn slab(l0: usize, l1: usize, m: usize, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(
                "a slab needs at least three dimensions".into(),
            ));
        }
        if m == 0 {
            return Err(Error::InvalidArgument("slab half-height must be positive".into()));
        }
        let mut extents = vec![l0, l1];
        extents.extend(std::iter::repeat(2 * m).take(n - 2));
        Self::new(&extents, Topology::Slab)
    }

    pub fn new(extents: &[usize], topology: Topology) -> Result<Self> {
        let n = extents.len();
        if n == 0 || n > 16 {
            return Err(Error::InvalidArgument(format!(
                "dimension must be between 1 and 16, got {n}"
            )));
        }
        let min = if topology == Topology::Periodic { 2 } else { 1 };
        if extents.iter().any(|&l| l < min) {
            return Err(Error::InvalidArgument(format!(
                "extents must all be at least {min}, got {extents:?}"
            )));
        }
        let mut layouts = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let sets = axis_sets(n, k);
            let mut offsets = Vec::with_capacity(sets.len());
            let mut grids = Vec::with_capacity(sets.len());
            let mut strides = Vec::with_capacity(sets.len());
            let mut total = 0usize;
            for set in &sets {
                let grid: Vec<usize> = (0..n)
                    .map(|d| {
                        let link = set.contains(&(d as u8));
                        match topology {
                            Topology::Periodic => extents[d],
                            _ => {
                                if link {
                                    extents[d]
                                } else {
                                    extents[d] + 1
                                }
                            }
                        }
                    })
                    .collect();
                let mut stride = vec![0usize; n];
                let mut acc = 1usize;
                for d in (0..n).rev() {
                    stride[d] = acc;
                    acc *= grid[d];
                }
                offsets.push(total);
                total += acc;
                grids.push(grid);
                strides.push(stride);
            }
            layouts.push(DegreeLayout {
                sets,
                offsets,
                grids,
                strides,
                total,
            });
        }
        Ok(Self {
            n,
            extents: extents.to_vec(),
            topology,
            mesh: 1.0,
            layouts,
        })
    }

    /// Same box with mesh width `eps` recorded (operators never rescale by it).
    pub fn with_mesh(mut self, eps: f64) -> Self {
        self.mesh = eps;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn is_periodic(&self) -> bool {
        self.topology == Topology::Periodic
    }

    fn check_degree(&self, k: usize) -> Result<()> {
        if k > self.n {
            Err(Error::DegreeOutOfRange { k, n: self.n })
        } else {
            Ok(())
        }
    }

    /// Number of k-cells.
    pub fn cell_count(&self, k: usize) -> usize {
        self.layouts.get(k).map_or(0, |l| l.total)
    }

    /// Number of axis-set components in degree k, `C(n, k)`.
    pub fn component_count(&self, k: usize) -> usize {
        self.layouts.get(k).map_or(0, |l| l.sets.len())
    }

    /// Axis sets of degree k in component order.
    pub fn axis_sets(&self, k: usize) -> &[Vec<u8>] {
        &self.layouts[k].sets
    }

    /// Base-vertex grid extents of component `comp` in degree k.
    pub fn component_grid(&self, k: usize, comp: usize) -> &[usize] {
        &self.layouts[k].grids[comp]
    }

    /// Flat range of component `comp` within the degree-k value vector.
    pub fn component_range(&self, k: usize, comp: usize) -> std::ops::Range<usize> {
        let l = &self.layouts[k];
        let start = l.offsets[comp];
        let len: usize = l.grids[comp].iter().product();
        start..start + len
    }

    /// Component index of an axis set, if present in degree `set.len()`.
    pub fn component_of(&self, set: &[u8]) -> Option<usize> {
        let k = set.len();
        self.layouts.get(k)?.sets.iter().position(|s| s == set)
    }

    /// Flat index of the cell `(base, comp)` in degree k. Base must be in range.
    #[inline]
    pub fn flat_index(&self, k: usize, comp: usize, base: &[usize]) -> usize {
        let l = &self.layouts[k];
        let mut idx = l.offsets[comp];
        for d in 0..self.n {
            debug_assert!(base[d] < l.grids[comp][d]);
            idx += base[d] * l.strides[comp][d];
        }
        idx
    }

    /// Inverse of `flat_index`: component and base vertex of a flat index.
    pub fn decode(&self, k: usize, idx: usize) -> (usize, Vec<usize>) {
        let l = &self.layouts[k];
        let comp = match l.offsets.binary_search(&idx) {
            Ok(c) => c,
            Err(c) => c - 1,
        };
        let mut rem = idx - l.offsets[comp];
        let mut base = vec![0usize; self.n];
        for d in 0..self.n {
            base[d] = rem / l.strides[comp][d];
            rem %= l.strides[comp][d];
        }
        (comp, base)
    }

    /// Flat index of a `Cell`, if it lies in the box.
    pub fn index_of(&self, cell: &Cell) -> Option<usize> {
        let k = cell.axes.len();
        let comp = self.component_of(&cell.axes)?;
        let l = &self.layouts[k];
        if cell.base.len() != self.n {
            return None;
        }
        for d in 0..self.n {
            if cell.base[d] >= l.grids[comp][d] {
                return None;
            }
        }
        Some(self.flat_index(k, comp, &cell.base))
    }

    /// The cell at a flat index.
    pub fn cell_at(&self, k: usize, idx: usize) -> Cell {
        let (comp, base) = self.decode(k, idx);
        Cell {
            base,
            axes: self.layouts[k].sets[comp].clone(),
        }
    }

    /// All k-cells in canonical order: lexicographic by (base vertex, axis set).
    pub fn enumerate_cells(&self, k: usize) -> Result<Vec<Cell>> {
        self.check_degree(k)?;
        let order = self.canonical_order(k);
        Ok(order.iter().map(|&idx| self.cell_at(k, idx)).collect())
    }

    /// Flat indices of degree-k cells in canonical (base vertex, axis set) order.
    pub fn canonical_order(&self, k: usize) -> Vec<usize> {
        let l = &self.layouts[k];
        let vertex_grid: Vec<usize> = (0..self.n)
            .map(|d| match self.topology {
                Topology::Periodic => self.extents[d],
                _ => self.extents[d] + 1,
            })
            .collect();
        let mut out = Vec::with_capacity(l.total);
        let mut vertex = vec![0usize; self.n];
        'outer: loop {
            for (comp, set) in l.sets.iter().enumerate() {
                let valid = set.iter().all(|&a| {
                    let d = a as usize;
                    vertex[d] < l.grids[comp][d]
                });
                if valid {
                    out.push(self.flat_index(k, comp, &vertex));
                }
            }
            // Odometer over the vertex grid, last axis fastest.
            let mut d = self.n;
            loop {
                if d == 0 {
                    break 'outer;
                }
                d -= 1;
                vertex[d] += 1;
                if vertex[d] < vertex_grid[d] {
                    break;
                }
                vertex[d] = 0;
            }
        }
        debug_assert_eq!(out.len(), l.total);
        out
    }

    /// Oriented boundary of a k-cell: `2k` (k-1)-cells with signs.
    ///
    /// Face `a` of `(x, I)` contributes `(x + e_{i_a}, I \ i_a)` with sign
    /// `(-1)^(a-1)` and `(x, I \ i_a)` with the opposite sign.
    pub fn boundary(&self, cell: &Cell) -> Result<Vec<(Cell, i8)>> {
        let k = cell.axes.len();
        self.check_degree(k)?;
        if k == 0 {
            return Ok(Vec::new());
        }
        let mut out = Vec::with_capacity(2 * k);
        for (a, &axis) in cell.axes.iter().enumerate() {
            let sign = if a % 2 == 0 { 1i8 } else { -1i8 };
            let mut sub_axes = cell.axes.clone();
            sub_axes.remove(a);
            let mut far = cell.base.clone();
            let d = axis as usize;
            far[d] += 1;
            if self.is_periodic() {
                far[d] %= self.extents[d];
            }
            out.push((
                Cell {
                    base: far,
                    axes: sub_axes.clone(),
                },
                sign,
            ));
            out.push((
                Cell {
                    base: cell.base.clone(),
                    axes: sub_axes,
                },
                -sign,
            ));
        }
        Ok(out)
    }

    /// Neighbor of flat cell `idx` (degree k, component `comp`) shifted by
    /// `step` along `axis`; `None` when it falls outside the box.
    #[inline]
    pub fn shift(&self, k: usize, comp: usize, idx: usize, axis: usize, step: isize) -> Option<usize> {
        let l = &self.layouts[k];
        let stride = l.strides[comp][axis];
        let grid = l.grids[comp][axis];
        let local = (idx - l.offsets[comp]) / stride % grid;
        let target = local as isize + step;
        if self.is_periodic() {
            let wrapped = target.rem_euclid(grid as isize) as usize;
            Some((idx as isize + (wrapped as isize - local as isize) * stride as isize) as usize)
        } else if target < 0 || target >= grid as isize {
            None
        } else {
            Some((idx as isize + step * stride as isize) as usize)
        }
    }
}

/// Binomial coefficient, exact for the small arguments used here.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_sets_are_lex_sorted_tuples() {
        let sets = axis_sets(4, 2);
        assert_eq!(
            sets,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(axis_sets(3, 0), vec![Vec::<u8>::new()]);
        assert_eq!(axis_sets(5, 5).len(), 1);
        for n in 1..=6 {
            for k in 0..=n {
                assert_eq!(axis_sets(n, k).len(), binomial(n, k));
            }
        }
    }

    #[test]
    fn cell_counts_match_product_formula() {
        for extents in [vec![1, 1], vec![2, 2], vec![3, 2], vec![2, 3, 4]] {
            let c = LatticeComplex::free(&extents).unwrap();
            let n = extents.len();
            for k in 0..=n {
                let mut expected = 0usize;
                for set in axis_sets(n, k) {
                    let mut prod = 1usize;
                    for d in 0..n {
                        prod *= if set.contains(&(d as u8)) {
                            extents[d]
                        } else {
                            extents[d] + 1
                        };
                    }
                    expected += prod;
                }
                assert_eq!(c.cell_count(k), expected);
                assert_eq!(c.enumerate_cells(k).unwrap().len(), expected);
            }
        }
        // Unit square: 4 vertices, 4 edges, 1 plaquette.
        let unit = LatticeComplex::free(&[1, 1]).unwrap();
        assert_eq!(
            (unit.cell_count(0), unit.cell_count(1), unit.cell_count(2)),
            (4, 4, 1)
        );
        // Unit cube: 12 edges.
        let cube = LatticeComplex::free(&[1, 1, 1]).unwrap();
        assert_eq!(cube.cell_count(1), 12);

        let p = LatticeComplex::periodic(&[4, 3, 5]).unwrap();
        for k in 0..=3 {
            assert_eq!(p.cell_count(k), binomial(3, k) * 4 * 3 * 5);
        }
    }

    #[test]
    fn flat_index_round_trips() {
        for c in [
            LatticeComplex::free(&[2, 3, 2]).unwrap(),
            LatticeComplex::periodic(&[3, 2, 4]).unwrap(),
        ] {
            for k in 0..=3 {
                for idx in 0..c.cell_count(k) {
                    let cell = c.cell_at(k, idx);
                    assert_eq!(c.index_of(&cell), Some(idx));
                    let (comp, base) = c.decode(k, idx);
                    assert_eq!(c.flat_index(k, comp, &base), idx);
                }
            }
        }
    }

    #[test]
    fn canonical_order_is_lex_by_vertex_then_axes() {
        let c = LatticeComplex::free(&[2, 2]).unwrap();
        let cells = c.enumerate_cells(1).unwrap();
        let keys: Vec<(Vec<usize>, Vec<u8>)> = cells
            .iter()
            .map(|cell| (cell.base.clone(), cell.axes.clone()))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        // Every cell appears exactly once.
        let mut seen: Vec<_> = c.canonical_order(1);
        seen.sort_unstable();
        assert_eq!(seen, (0..c.cell_count(1)).collect::<Vec<_>>());
    }

    #[test]
    fn boundary_has_2k_faces_inside_the_box() {
        let c = LatticeComplex::free(&[2, 3, 2]).unwrap();
        for k in 1..=3 {
            for cell in c.enumerate_cells(k).unwrap() {
                let faces = c.boundary(&cell).unwrap();
                assert_eq!(faces.len(), 2 * k);
                for (face, sign) in &faces {
                    assert!(c.index_of(face).is_some(), "face {face:?} outside box");
                    assert_eq!(sign.abs(), 1);
                }
            }
        }
    }

    #[test]
    fn boundary_of_boundary_vanishes() {
        for c in [
            LatticeComplex::free(&[2, 2, 2]).unwrap(),
            LatticeComplex::periodic(&[3, 3, 3]).unwrap(),
        ] {
            for k in 2..=3 {
                for cell in c.enumerate_cells(k).unwrap() {
                    let mut chain = std::collections::HashMap::new();
                    for (face, s1) in c.boundary(&cell).unwrap() {
                        for (edge, s2) in c.boundary(&face).unwrap() {
                            let idx = c.index_of(&edge).unwrap();
                            *chain.entry(idx).or_insert(0i32) += (s1 * s2) as i32;
                        }
                    }
                    assert!(chain.values().all(|&v| v == 0), "d(d(cell)) != 0");
                }
            }
        }
    }

    #[test]
    fn shift_wraps_only_on_periodic_boxes() {
        let free = LatticeComplex::free(&[2, 2]).unwrap();
        let k = 1;
        // Horizontal edge at origin, component {0}.
        let comp = free.component_of(&[0]).unwrap();
        let idx = free.flat_index(k, comp, &[0, 0]);
        assert_eq!(free.shift(k, comp, idx, 0, -1), None);
        let up = free.shift(k, comp, idx, 1, 1).unwrap();
        assert_eq!(free.decode(k, up).1, vec![0, 1]);

        let per = LatticeComplex::periodic(&[3, 3]).unwrap();
        let comp = per.component_of(&[0]).unwrap();
        let idx = per.flat_index(k, comp, &[0, 0]);
        let wrapped = per.shift(k, comp, idx, 0, -1).unwrap();
        assert_eq!(per.decode(k, wrapped).1, vec![2, 0]);
    }

    #[test]
    fn slab_extents_and_validation() {
        let s = LatticeComplex::slab(6, 6, 2, 4).unwrap();
        assert_eq!(s.extents(), &[6, 6, 4, 4]);
        assert_eq!(s.topology(), Topology::Slab);
        assert!(LatticeComplex::slab(4, 4, 0, 3).is_err());
        assert!(LatticeComplex::slab(4, 4, 1, 2).is_err());
        assert!(LatticeComplex::periodic(&[1, 4]).is_err());
        assert!(LatticeComplex::free(&[0, 4]).is_err());
    }
}
