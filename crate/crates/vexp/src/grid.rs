//! Discretization substrate: domains, cells, cubes, partitions and dyadic
//! lattices, plus exact quadrature for piecewise-constant data.
//!
//! Functions are modeled as piecewise-constant fields over the cells of a
//! [`Grid`]; every integral in the crate reduces to an exact weighted sum of
//! cell values, so property tests can compare against brute-force oracles
//! without quadrature error. Grids are 1D (possibly nonuniform) or 2D
//! (uniform spacing per axis). All types are immutable after construction.

use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when matching real coordinates to cell edges.
const EDGE_TOL: f64 = 1e-9;

/// A 1D or 2D cell decomposition of an axis-aligned box.
///
/// Axis 1 of a 1D grid is the fixed dummy interval `[0, 1)`, so cell volumes
/// and index arithmetic are uniform across dimensions; positional queries
/// (`cell_center`, `center_norm`) only report the real axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    edges: [Vec<f64>; 2],
}

impl Grid {
    /// Build a grid from per-axis strictly increasing edge sequences.
    ///
    /// 2D grids must have uniform spacing on both axes; nonuniform grids are
    /// 1D-only.
    pub fn new(dim: usize, boundaries: Vec<Vec<f64>>) -> Result<Grid> {
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDim(format!("dim must be 1 or 2, got {dim}")));
        }
        if boundaries.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected {dim} boundary sequences, got {}",
                boundaries.len()
            )));
        }
        for (axis, b) in boundaries.iter().enumerate() {
            if b.len() < 2 {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: need at least 2 edges, got {}",
                    b.len()
                )));
            }
            if b.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidGrid(format!("axis {axis}: non-finite edge")));
            }
            if b.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: edges not strictly increasing"
                )));
            }
        }
        if dim == 2 {
            for (axis, b) in boundaries.iter().enumerate() {
                let h0 = b[1] - b[0];
                for w in b.windows(2) {
                    let h = w[1] - w[0];
                    if (h - h0).abs() > 1e-12 * h0.abs().max(1.0) {
                        return Err(Error::InvalidGrid(format!(
                            "axis {axis}: 2D grids must have uniform spacing"
                        )));
                    }
                }
            }
        }
        let mut edges: [Vec<f64>; 2] = [Vec::new(), vec![0.0, 1.0]];
        edges[0] = boundaries[0].clone();
        if dim == 2 {
            edges[1] = boundaries[1].clone();
        }
        Ok(Grid { dim, edges })
    }

    /// Uniform 1D grid on `[a, b]` with `cells` cells.
    pub fn uniform_1d(a: f64, b: f64, cells: usize) -> Result<Grid> {
        if cells == 0 || !(a < b) {
            return Err(Error::InvalidGrid(format!("bad uniform grid: [{a}, {b}], {cells} cells")));
        }
        let h = (b - a) / cells as f64;
        let edges = (0..=cells).map(|i| a + h * i as f64).collect();
        Grid::new(1, vec![edges])
    }

    /// Uniform 2D grid on `[a0, b0] x [a1, b1]`.
    pub fn uniform_2d(a: [f64; 2], b: [f64; 2], cells: [usize; 2]) -> Result<Grid> {
        let mut bs = Vec::new();
        for axis in 0..2 {
            if cells[axis] == 0 || !(a[axis] < b[axis]) {
                return Err(Error::InvalidGrid(format!("bad uniform grid on axis {axis}")));
            }
            let h = (b[axis] - a[axis]) / cells[axis] as f64;
            bs.push((0..=cells[axis]).map(|i| a[axis] + h * i as f64).collect());
        }
        Grid::new(2, bs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells along an axis (axis 1 reports 1 for 1D grids).
    pub fn cells_on_axis(&self, axis: usize) -> usize {
        self.edges[axis].len() - 1
    }

    pub fn n_cells(&self) -> usize {
        self.cells_on_axis(0) * self.cells_on_axis(1)
    }

    pub fn edges(&self, axis: usize) -> &[f64] {
        &self.edges[axis]
    }

    /// Flat index of cell `(ix, iy)`; `iy = 0` for 1D grids.
    pub fn cell_index(&self, ix: usize, iy: usize) -> usize {
        iy * self.cells_on_axis(0) + ix
    }

    pub fn cell_coords(&self, idx: usize) -> (usize, usize) {
        let nx = self.cells_on_axis(0);
        (idx % nx, idx / nx)
    }

    pub fn cell_width(&self, axis: usize, i: usize) -> f64 {
        self.edges[axis][i + 1] - self.edges[axis][i]
    }

    pub fn cell_volume(&self, idx: usize) -> f64 {
        let (ix, iy) = self.cell_coords(idx);
        self.cell_width(0, ix) * self.cell_width(1, iy)
    }

    /// Center of a cell; the second coordinate is 0 for 1D grids.
    pub fn cell_center(&self, idx: usize) -> [f64; 2] {
        let (ix, iy) = self.cell_coords(idx);
        let cx = 0.5 * (self.edges[0][ix] + self.edges[0][ix + 1]);
        let cy = if self.dim == 2 { 0.5 * (self.edges[1][iy] + self.edges[1][iy + 1]) } else { 0.0 };
        [cx, cy]
    }

    /// Euclidean distance of the cell center from the origin.
    pub fn center_norm(&self, idx: usize) -> f64 {
        let c = self.cell_center(idx);
        (c[0] * c[0] + c[1] * c[1]).sqrt()
    }

    pub fn center_distance(&self, i: usize, j: usize) -> f64 {
        let a = self.cell_center(i);
        let b = self.cell_center(j);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }

    pub fn total_volume(&self) -> f64 {
        (self.edges[0][self.edges[0].len() - 1] - self.edges[0][0])
            * (self.edges[1][self.edges[1].len() - 1] - self.edges[1][0])
    }

    pub fn max_cell_volume(&self) -> f64 {
        (0..self.n_cells()).map(|i| self.cell_volume(i)).fold(0.0, f64::max)
    }

    pub fn min_cell_volume(&self) -> f64 {
        (0..self.n_cells()).map(|i| self.cell_volume(i)).fold(f64::INFINITY, f64::min)
    }

    /// Spacing of a uniform axis; `None` when the axis is nonuniform.
    pub fn spacing(&self, axis: usize) -> Option<f64> {
        let b = &self.edges[axis];
        let h = b[1] - b[0];
        let tol = 1e-12 * h.abs().max(1.0);
        if b.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= tol) {
            Some(h)
        } else {
            None
        }
    }

    /// Index of the cell whose edge matches `x` on `axis`, if any.
    fn edge_index(&self, axis: usize, x: f64) -> Option<usize> {
        let b = &self.edges[axis];
        let tol = EDGE_TOL * x.abs().max(1.0);
        let pos = b.partition_point(|&e| e < x - tol);
        if pos < b.len() && (b[pos] - x).abs() <= tol {
            Some(pos)
        } else {
            None
        }
    }

    /// Index of the cell edge matching `x` on `axis` within tolerance.
    pub fn find_edge(&self, axis: usize, x: f64) -> Option<usize> {
        self.edge_index(axis, x)
    }

    /// Flat index of the cell containing the point (half-open cells).
    pub fn cell_containing(&self, x: [f64; 2]) -> Option<usize> {
        let mut idx = [0usize; 2];
        for axis in 0..self.dim {
            let e = &self.edges[axis];
            if x[axis] < e[0] || x[axis] >= e[e.len() - 1] {
                return None;
            }
            idx[axis] = e.partition_point(|&v| v <= x[axis]) - 1;
        }
        Some(self.cell_index(idx[0], idx[1]))
    }

    /// Domain box `[lo0, hi0] x [lo1, hi1]`, reported with every probe result.
    pub fn domain(&self) -> [[f64; 2]; 2] {
        [
            [self.edges[0][0], *self.edges[0].last().unwrap()],
            [self.edges[1][0], *self.edges[1].last().unwrap()],
        ]
    }
}

impl Serialize for Grid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Grid", 2)?;
        st.serialize_field("dim", &self.dim)?;
        let bs: Vec<&Vec<f64>> = self.edges.iter().take(self.dim).collect();
        st.serialize_field("boundaries", &bs)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Grid, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            dim: usize,
            boundaries: Vec<Vec<f64>>,
        }
        let raw = Raw::deserialize(d)?;
        Grid::new(raw.dim, raw.boundaries).map_err(serde::de::Error::custom)
    }
}

/// A piecewise-constant real field on a grid: one value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<GridFunction> {
        if values.len() != grid.n_cells() {
            return Err(Error::InvalidGrid(format!(
                "value count {} does not match cell count {}",
                values.len(),
                grid.n_cells()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite cell value".into()));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> GridFunction {
        let n = grid.n_cells();
        GridFunction { grid, values: vec![0.0; n] }
    }

    /// Sample a function of the cell center into a grid function.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn([f64; 2]) -> f64) -> Result<GridFunction> {
        let values = (0..grid.n_cells()).map(|i| f(grid.cell_center(i))).collect();
        GridFunction::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    /// Exact integral of the piecewise-constant model.
    pub fn integrate(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v * self.grid.cell_volume(i))
            .sum()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        assert_eq!(self.values.len(), other.values.len(), "grid mismatch");
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Restriction `f * chi_Q`: zero outside the cube.
    pub fn restrict(&self, cube: &Cube) -> GridFunction {
        let mut out = vec![0.0; self.values.len()];
        for idx in cube.cell_indices(&self.grid) {
            out[idx] = self.values[idx];
        }
        GridFunction { grid: self.grid.clone(), values: out }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Serialize for GridFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("GridFunction", 3)?;
        st.serialize_field("dim", &self.grid.dim)?;
        let bs: Vec<&Vec<f64>> = self.grid.edges.iter().take(self.grid.dim).collect();
        st.serialize_field("boundaries", &bs)?;
        st.serialize_field("values", &self.values)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for GridFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<GridFunction, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            dim: usize,
            boundaries: Vec<Vec<f64>>,
            values: Vec<f64>,
        }
        let raw = Raw::deserialize(d)?;
        let grid = Grid::new(raw.dim, raw.boundaries).map_err(serde::de::Error::custom)?;
        GridFunction::new(Arc::new(grid), raw.values).map_err(serde::de::Error::custom)
    }
}

/// An axis-aligned box of cells: the half-open index range `[lo, hi)` per
/// axis. For 1D grids axis 1 is the fixed range `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cube {
    pub lo: [usize; 2],
    pub hi: [usize; 2],
}

impl Cube {
    pub fn interval(lo: usize, hi: usize) -> Cube {
        Cube { lo: [lo, 0], hi: [hi, 1] }
    }

    pub fn rect(lo: [usize; 2], hi: [usize; 2]) -> Cube {
        Cube { lo, hi }
    }

    pub fn n_cells(&self) -> usize {
        (self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1])
    }

    pub fn contains_cell(&self, grid: &Grid, idx: usize) -> bool {
        let (ix, iy) = grid.cell_coords(idx);
        ix >= self.lo[0] && ix < self.hi[0] && iy >= self.lo[1] && iy < self.hi[1]
    }

    /// Flat indices of the contained cells, row-major.
    pub fn cell_indices<'a>(&'a self, grid: &'a Grid) -> impl Iterator<Item = usize> + 'a {
        let nx = grid.cells_on_axis(0);
        (self.lo[1]..self.hi[1])
            .flat_map(move |iy| (self.lo[0]..self.hi[0]).map(move |ix| iy * nx + ix))
    }

    /// Volume as the left-to-right sum of contained cell volumes.
    ///
    /// This is the canonical volume used everywhere (local predicates, CZ
    /// thresholds); keeping one accumulation order makes float comparisons
    /// between code paths reproducible.
    pub fn volume(&self, grid: &Grid) -> f64 {
        let mut v = 0.0;
        for idx in self.cell_indices(grid) {
            v += grid.cell_volume(idx);
        }
        v
    }

    pub fn is_valid(&self, grid: &Grid) -> bool {
        self.lo[0] < self.hi[0]
            && self.lo[1] < self.hi[1]
            && self.hi[0] <= grid.cells_on_axis(0)
            && self.hi[1] <= grid.cells_on_axis(1)
    }

    /// Geometric bounds `[lo, hi]` per axis.
    pub fn bounds(&self, grid: &Grid) -> [[f64; 2]; 2] {
        [
            [grid.edges[0][self.lo[0]], grid.edges[0][self.hi[0]]],
            [grid.edges[1][self.lo[1]], grid.edges[1][self.hi[1]]],
        ]
    }

    /// Euclidean distance from the origin to the cube (0 if it contains it).
    pub fn dist_origin(&self, grid: &Grid) -> f64 {
        let b = self.bounds(grid);
        let mut d2 = 0.0;
        for axis in 0..grid.dim() {
            let lo = b[axis][0];
            let hi = b[axis][1];
            let d = if lo > 0.0 {
                lo
            } else if hi < 0.0 {
                -hi
            } else {
                0.0
            };
            d2 += d * d;
        }
        d2.sqrt()
    }

    /// Short witness label, e.g. `[3,7)` or `[1,4)x[0,2)`.
    pub fn label(&self, grid: &Grid) -> String {
        if grid.dim() == 1 {
            format!("[{},{})", self.lo[0], self.hi[0])
        } else {
            format!("[{},{})x[{},{})", self.lo[0], self.hi[0], self.lo[1], self.hi[1])
        }
    }
}

/// Local cube predicate: volume at most 1, with a slack of strictly less
/// than one cell volume (the largest cell inside the cube). The slack keeps
/// cubes whose continuum counterpart has volume exactly 1 but whose snapped
/// endpoints overshoot by a partial cell; a full extra cell is excluded.
/// Single cells are always local, even on coarse grids where one cell alone
/// exceeds unit volume.
pub fn is_local(grid: &Grid, cube: &Cube) -> bool {
    let vol = cube.volume(grid);
    if vol <= 1.0 {
        return true;
    }
    let mut maxcell = 0.0f64;
    for idx in cube.cell_indices(grid) {
        maxcell = maxcell.max(grid.cell_volume(idx));
    }
    vol < 1.0 + maxcell
}

/// A disjoint cover of the grid by cubes.
#[derive(Debug, Clone, Serialize)]
pub struct Partition {
    cubes: Vec<Cube>,
    local_flag: bool,
}

impl Partition {
    /// Validate disjointness and coverage, then record the local flag.
    pub fn from_cubes(grid: &Grid, cubes: Vec<Cube>) -> Result<Partition> {
        let mut covered = vec![false; grid.n_cells()];
        for c in &cubes {
            if !c.is_valid(grid) {
                return Err(Error::InvalidPartition(format!("cube {:?} out of range", c)));
            }
            for idx in c.cell_indices(grid) {
                if covered[idx] {
                    return Err(Error::InvalidPartition(format!("cell {idx} covered twice")));
                }
                covered[idx] = true;
            }
        }
        if let Some(gap) = covered.iter().position(|&c| !c) {
            return Err(Error::InvalidPartition(format!("cell {gap} not covered")));
        }
        let local_flag = cubes.iter().all(|c| is_local(grid, c));
        Ok(Partition { cubes, local_flag })
    }

    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }

    pub fn local_flag(&self) -> bool {
        self.local_flag
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }
}

/// Recipe for [`make_partition`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PartitionSpec {
    /// Equal cubes of the given side, ordered by distance from the origin.
    EqualCubes { side: f64 },
    /// Random binary splits down to local volume, seeded.
    RandomLocal { seed: u64 },
    /// Explicit cube list.
    Explicit { cubes: Vec<Cube> },
}

pub fn make_partition(grid: &Grid, spec: &PartitionSpec) -> Result<Partition> {
    match spec {
        PartitionSpec::EqualCubes { side } => equal_cubes_partition(grid, *side),
        PartitionSpec::RandomLocal { seed } => Ok(random_local_partition(grid, *seed)),
        PartitionSpec::Explicit { cubes } => Partition::from_cubes(grid, cubes.clone()),
    }
}

fn equal_cubes_partition(grid: &Grid, side: f64) -> Result<Partition> {
    if !(side > 0.0) {
        return Err(Error::InvalidPartition(format!("side must be positive, got {side}")));
    }
    // Cut coordinates must land on cell edges along every real axis.
    let mut axis_cuts: Vec<Vec<usize>> = Vec::new();
    for axis in 0..grid.dim() {
        let a = grid.edges[axis][0];
        let b = *grid.edges[axis].last().unwrap();
        let n = (b - a) / side;
        let n_round = n.round();
        if (n - n_round).abs() > 1e-9 * n.max(1.0) || n_round < 1.0 {
            return Err(Error::InvalidPartition(format!(
                "side {side} does not tile axis {axis} of length {}",
                b - a
            )));
        }
        let mut cuts = Vec::new();
        for k in 0..=(n_round as usize) {
            let x = a + side * k as f64;
            // Snap the final cut to the exact domain edge.
            let x = if k == n_round as usize { b } else { x };
            match grid.edge_index(axis, x) {
                Some(i) => cuts.push(i),
                None => {
                    return Err(Error::InvalidPartition(format!(
                        "cut at {x} on axis {axis} is not a cell edge"
                    )))
                }
            }
        }
        axis_cuts.push(cuts);
    }
    if grid.dim() == 1 {
        axis_cuts.push(vec![0, 1]);
    }
    let mut cubes = Vec::new();
    for wy in axis_cuts[1].windows(2) {
        for wx in axis_cuts[0].windows(2) {
            cubes.push(Cube::rect([wx[0], wy[0]], [wx[1], wy[1]]));
        }
    }
    // Nondecreasing distance from the origin, ties by
    // index for determinism.
    cubes.sort_by(|a, b| {
        a.dist_origin(grid)
            .partial_cmp(&b.dist_origin(grid))
            .unwrap()
            .then(a.cmp(b))
    });
    Partition::from_cubes(grid, cubes)
}

/// Binary splits of the whole domain until every cube is local.
/// Deterministic for a fixed seed.
pub fn random_local_partition(grid: &Grid, seed: u64) -> Partition {
    let mut rng = StdRng::seed_from_u64(seed);
    let whole = Cube::rect([0, 0], [grid.cells_on_axis(0), grid.cells_on_axis(1)]);
    let mut stack = vec![whole];
    let mut done = Vec::new();
    while let Some(c) = stack.pop() {
        if is_local(grid, &c) || c.n_cells() == 1 {
            done.push(c);
            continue;
        }
        // Split the geometrically longer axis at a random interior cell edge.
        let b = c.bounds(grid);
        let len0 = b[0][1] - b[0][0];
        let len1 = if grid.dim() == 2 { b[1][1] - b[1][0] } else { 0.0 };
        let axis = if grid.dim() == 2 && (len1 > len0 || c.hi[0] - c.lo[0] < 2) { 1 } else { 0 };
        let (lo, hi) = (c.lo[axis], c.hi[axis]);
        if hi - lo < 2 {
            // Longer axis unsplittable; try the other, else give up on this cube.
            let other = 1 - axis;
            if grid.dim() == 2 && c.hi[other] - c.lo[other] >= 2 {
                let cut = c.lo[other] + 1 + rng.random_range(0..c.hi[other] - c.lo[other] - 1);
                let (mut a1, mut a2) = (c, c);
                a1.hi[other] = cut;
                a2.lo[other] = cut;
                stack.push(a1);
                stack.push(a2);
            } else {
                done.push(c);
            }
            continue;
        }
        // Cut drawn from the middle half of the index range when possible.
        let span = hi - lo;
        let (cut_lo, cut_hi) = if span >= 4 { (lo + span / 4, hi - span / 4) } else { (lo + 1, hi) };
        let cut = cut_lo + rng.random_range(0..(cut_hi - cut_lo).max(1));
        let cut = cut.clamp(lo + 1, hi - 1);
        let (mut a1, mut a2) = (c, c);
        a1.hi[axis] = cut;
        a2.lo[axis] = cut;
        stack.push(a1);
        stack.push(a2);
    }
    done.sort();
    Partition::from_cubes(grid, done).expect("binary splits cover the grid")
}

/// Enumerate index-aligned cubes, optionally capped by volume.
///
/// Returns the whole family when it fits in `budget`, otherwise a
/// deterministic seeded sample of size at most `budget` that always contains
/// every single-cell cube passing the cap. 2D families contain geometric
/// squares only.
pub fn enum_cubes(grid: &Grid, max_volume: Option<f64>, budget: usize, seed: u64) -> Vec<Cube> {
    assert!(budget >= 1, "budget must be >= 1");
    let cap = max_volume.unwrap_or(f64::INFINITY);
    let all = enumerate_capped(grid, cap, Some(budget + 1));
    if let Some(all) = all {
        if all.len() <= budget {
            return all;
        }
    }
    sample_capped(grid, cap, budget, seed)
}

/// Local cube family (volume <= 1 + one cell volume), same budget contract.
pub fn enum_local_cubes(grid: &Grid, budget: usize, seed: u64) -> Vec<Cube> {
    assert!(budget >= 1, "budget must be >= 1");
    let all: Vec<Cube> = match enumerate_all(grid, Some(budget.saturating_mul(8) + 64)) {
        Some(cubes) => cubes.into_iter().filter(|c| is_local(grid, c)).collect(),
        None => {
            // Family too big to enumerate: sample with the local predicate.
            return sample_with(grid, budget, seed, |c| is_local(grid, c));
        }
    };
    if all.len() <= budget {
        all
    } else {
        sample_with(grid, budget, seed, |c| is_local(grid, c))
    }
}

/// All cubes with volume <= cap; `None` if more than `limit` exist.
fn enumerate_capped(grid: &Grid, cap: f64, limit: Option<usize>) -> Option<Vec<Cube>> {
    let mut out = Vec::new();
    let limit = limit.unwrap_or(usize::MAX);
    if grid.dim() == 1 {
        let n = grid.cells_on_axis(0);
        for i in 0..n {
            let mut vol = 0.0;
            for j in i + 1..=n {
                vol += grid.cell_width(0, j - 1);
                if vol > cap {
                    break;
                }
                out.push(Cube::interval(i, j));
                if out.len() > limit {
                    return None;
                }
            }
        }
    } else {
        for (kx, ky) in square_shapes(grid) {
            let vol = kx as f64 * grid.cell_width(0, 0) * ky as f64 * grid.cell_width(1, 0);
            if vol > cap {
                continue;
            }
            let nx = grid.cells_on_axis(0);
            let ny = grid.cells_on_axis(1);
            for y in 0..=(ny - ky) {
                for x in 0..=(nx - kx) {
                    out.push(Cube::rect([x, y], [x + kx, y + ky]));
                    if out.len() > limit {
                        return None;
                    }
                }
            }
        }
    }
    Some(out)
}

fn enumerate_all(grid: &Grid, limit: Option<usize>) -> Option<Vec<Cube>> {
    enumerate_capped(grid, f64::INFINITY, limit)
}

/// Window shapes `(kx, ky)` whose geometric sides agree within tolerance.
/// On equal-spacing grids this is exactly the set `(k, k)`.
fn square_shapes(grid: &Grid) -> Vec<(usize, usize)> {
    let dx = grid.cell_width(0, 0);
    let dy = grid.cell_width(1, 0);
    let nx = grid.cells_on_axis(0);
    let ny = grid.cells_on_axis(1);
    let mut shapes = Vec::new();
    for kx in 1..=nx {
        let side = kx as f64 * dx;
        let ky = (side / dy).round();
        if ky < 1.0 || ky > ny as f64 {
            continue;
        }
        if (ky * dy - side).abs() <= 1e-9 * side.max(1.0) {
            shapes.push((kx, ky as usize));
        }
    }
    shapes
}

fn sample_capped(grid: &Grid, cap: f64, budget: usize, seed: u64) -> Vec<Cube> {
    sample_with(grid, budget, seed, |c| c.volume(grid) <= cap)
}

/// Deterministic sample: all admissible single-cell cubes first, then seeded
/// draws without replacement until `budget`.
fn sample_with(grid: &Grid, budget: usize, seed: u64, admit: impl Fn(&Cube) -> bool) -> Vec<Cube> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    let nx = grid.cells_on_axis(0);
    let ny = grid.cells_on_axis(1);
    for iy in 0..ny {
        for ix in 0..nx {
            let c = Cube::rect([ix, iy], [ix + 1, iy + 1]);
            if admit(&c) {
                seen.insert(c);
                out.push(c);
            }
        }
    }
    let shapes = if grid.dim() == 2 { square_shapes(grid) } else { Vec::new() };
    let mut attempts = 0usize;
    let max_attempts = budget.saturating_mul(64) + 1024;
    while out.len() < budget && attempts < max_attempts {
        attempts += 1;
        let c = if grid.dim() == 1 {
            let i = rng.random_range(0..nx);
            let max_len = nx - i;
            // Bias toward short cubes so volume caps do not starve the draw.
            let len = 1 + (rng.random_range(0.0f64..1.0).powi(2) * max_len as f64) as usize;
            Cube::interval(i, (i + len.max(1)).min(nx))
        } else {
            let (kx, ky) = shapes[rng.random_range(0..shapes.len())];
            let x = rng.random_range(0..=nx - kx);
            let y = rng.random_range(0..=ny - ky);
            Cube::rect([x, y], [x + kx, y + ky])
        };
        if admit(&c) && seen.insert(c) {
            out.push(c);
        }
    }
    out.truncate(budget);
    out
}

/// Shifted dyadic family: cubes `2^{-z}((0,1)^n + k) - t` for `0 <= z <= z_max`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DyadicFamily {
    pub z_max: u32,
    pub shift: [f64; 2],
}

impl DyadicFamily {
    pub fn unshifted(z_max: u32) -> DyadicFamily {
        DyadicFamily { z_max, shift: [0.0, 0.0] }
    }
}

/// All shifted dyadic cubes intersecting the domain, clipped to it and mapped
/// to cell-index cubes. Errors when a clipped lattice coordinate inside the
/// domain is not a cell edge.
pub fn dyadic_cubes(grid: &Grid, family: &DyadicFamily) -> Result<Vec<Cube>> {
    let mut out = Vec::new();
    for z in 0..=family.z_max {
        let side = 0.5f64.powi(z as i32);
        let mut axis_ranges: Vec<Vec<(usize, usize)>> = Vec::new();
        for axis in 0..grid.dim() {
            axis_ranges.push(axis_lattice_ranges(grid, axis, side, family.shift[axis])?);
        }
        if grid.dim() == 1 {
            axis_ranges.push(vec![(0, 1)]);
        }
        for &(ly, hy) in &axis_ranges[1] {
            for &(lx, hx) in &axis_ranges[0] {
                out.push(Cube::rect([lx, ly], [hx, hy]));
            }
        }
    }
    Ok(out)
}

/// Per-axis index ranges of the lattice intervals `[side*k - t, side*(k+1) - t)`
/// clipped to the domain.
fn axis_lattice_ranges(grid: &Grid, axis: usize, side: f64, shift: f64) -> Result<Vec<(usize, usize)>> {
    let a = grid.edges[axis][0];
    let b = *grid.edges[axis].last().unwrap();
    let k_lo = ((a + shift) / side).floor() as i64;
    let k_hi = ((b + shift) / side).ceil() as i64;
    let mut ranges = Vec::new();
    for k in k_lo..k_hi {
        let lo = side * k as f64 - shift;
        let hi = side * (k + 1) as f64 - shift;
        let clo = lo.max(a);
        let chi = hi.min(b);
        if chi - clo <= EDGE_TOL * side {
            continue;
        }
        let ilo = grid
            .edge_index(axis, clo)
            .ok_or_else(|| Error::MisalignedGrid(format!("lattice point {clo} on axis {axis}")))?;
        let ihi = grid
            .edge_index(axis, chi)
            .ok_or_else(|| Error::MisalignedGrid(format!("lattice point {chi} on axis {axis}")))?;
        if ihi > ilo {
            ranges.push((ilo, ihi));
        }
    }
    Ok(ranges)
}

/// Deepest dyadic level (up to 60) at which the shifted lattice is still
/// aligned with the grid's cell edges.
pub fn max_dyadic_level(grid: &Grid, shift: [f64; 2]) -> Result<u32> {
    let aligned = |z: u32| -> bool {
        let side = 0.5f64.powi(z as i32);
        (0..grid.dim()).all(|axis| axis_lattice_ranges(grid, axis, side, shift[axis]).is_ok())
    };
    if !aligned(0) {
        return Err(Error::MisalignedGrid("level 0 lattice does not align with the grid".into()));
    }
    let mut z = 0;
    while z < 60 && aligned(z + 1) {
        z += 1;
    }
    Ok(z)
}
