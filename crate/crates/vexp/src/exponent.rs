//! Exponent functions p(.) with 1 < p_- <= p_+ < infinity: construction of
//! every explicit family the toolkit experiments with (constants, log-Holder
//! profiles, absolutely continuous exponents, the lacunary-interval example
//! and its remappings), conjugation, per-cube harmonic means, and regularity
//! diagnostics.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Cube, Grid, GridFunction};

/// An exponent function: per-cell samples plus the analytic infimum and
/// supremum over the whole line (which sampling may not attain).
#[derive(Debug, Clone)]
pub struct Exponent {
    samples: GridFunction,
    p_minus: f64,
    p_plus: f64,
    descriptor: Option<Descriptor>,
}

impl Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        // Grid-function fields inline, then the range and the descriptor.
        let mut st = s.serialize_struct("Exponent", 6)?;
        let grid = self.samples.grid();
        st.serialize_field("dim", &grid.dim())?;
        let bs: Vec<&[f64]> = (0..grid.dim()).map(|a| grid.edges(a)).collect();
        st.serialize_field("boundaries", &bs)?;
        st.serialize_field("values", self.samples.values())?;
        st.serialize_field("p_minus", &self.p_minus)?;
        st.serialize_field("p_plus", &self.p_plus)?;
        st.serialize_field("descriptor", &self.descriptor)?;
        st.end()
    }
}

/// Analytic descriptor carried alongside the samples. When present it must
/// reproduce the samples at cell midpoints to 1e-12.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Descriptor {
    Constant { q: f64 },
    /// p(x) = p_inf + c / log(e + |x|).
    LogHolder { p_inf: f64, c: f64 },
    /// p(x) = base + integral of a piecewise-constant density up to x (1D).
    AcDensity { base: f64, edges: Vec<f64>, density: Vec<f64>, cum: Vec<f64> },
    /// p(x) = beta * (p0(|x|) + alpha) with p0 the lacunary log-log integral.
    LernerP0 { alpha: f64, beta: f64, k_max: u32 },
    /// Piecewise-constant plateaus between sorted breakpoints (1D).
    Step { breaks: Vec<f64>, levels: Vec<f64> },
    /// Composition p(omega^{-1}(x)) of a base exponent with an increasing map.
    Remapped { base: Box<Exponent>, map: PiecewiseLinearMap },
    /// Pointwise conjugate q/(q-1) of a base exponent.
    Conjugate { base: Box<Exponent> },
}

impl Descriptor {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match self {
            Descriptor::Constant { q } => *q,
            Descriptor::LogHolder { p_inf, c } => {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                p_inf + c / (std::f64::consts::E + r).ln()
            }
            Descriptor::AcDensity { base, edges, density, cum } => {
                let t = x[0];
                if t <= edges[0] {
                    *base
                } else if t >= *edges.last().unwrap() {
                    base + cum[cum.len() - 1]
                } else {
                    let i = edges.partition_point(|&e| e <= t) - 1;
                    base + cum[i] + density[i] * (t - edges[i])
                }
            }
            Descriptor::LernerP0 { alpha, beta, k_max } => {
                beta * (lerner_p0(x[0], *k_max) + alpha)
            }
            Descriptor::Step { breaks, levels } => {
                let i = breaks.partition_point(|&b| b <= x[0]);
                levels[i]
            }
            Descriptor::Remapped { base, map } => base.eval_at([map.inverse(x[0]), x[1]]),
            Descriptor::Conjugate { base } => {
                let q = base.eval_at(x);
                q / (q - 1.0)
            }
        }
    }
}

impl Exponent {
    /// Validate the range invariant and (when present) that the descriptor
    /// reproduces the samples at cell midpoints.
    pub fn new(
        samples: GridFunction,
        p_minus: f64,
        p_plus: f64,
        descriptor: Option<Descriptor>,
    ) -> Result<Exponent> {
        let smin = samples.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let smax = samples.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-12 * p_plus.max(1.0);
        if !(p_minus > 1.0) {
            return Err(Error::InvalidExponent(format!("p_minus = {p_minus} <= 1")));
        }
        if !p_plus.is_finite() {
            return Err(Error::InvalidExponent("p_plus not finite".into()));
        }
        if smin < p_minus - tol || smax > p_plus + tol || p_minus > p_plus + tol {
            return Err(Error::InvalidExponent(format!(
                "range violated: p_minus={p_minus}, samples in [{smin}, {smax}], p_plus={p_plus}"
            )));
        }
        if let Some(d) = &descriptor {
            let grid = samples.grid();
            for i in 0..grid.n_cells() {
                let want = d.eval(grid.cell_center(i));
                let got = samples.value(i);
                if (want - got).abs() > 1e-12 * want.abs().max(1.0) {
                    return Err(Error::InvalidExponent(format!(
                        "descriptor mismatch at cell {i}: descriptor {want}, sample {got}"
                    )));
                }
            }
        }
        Ok(Exponent { samples, p_minus, p_plus, descriptor })
    }

    pub fn constant(grid: Arc<Grid>, q: f64) -> Result<Exponent> {
        if !(q > 1.0) || !q.is_finite() {
            return Err(Error::InvalidExponent(format!("constant exponent {q} not in (1, inf)")));
        }
        let n = grid.n_cells();
        let samples = GridFunction::new(grid, vec![q; n])?;
        Exponent::new(samples, q, q, Some(Descriptor::Constant { q }))
    }

    pub fn samples(&self) -> &GridFunction {
        &self.samples
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.samples.grid()
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.samples.value(idx)
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn descriptor(&self) -> Option<&Descriptor> {
        self.descriptor.as_ref()
    }

    /// Evaluate at an arbitrary point: the descriptor where one exists, the
    /// piecewise-constant sample extension (clamped to the domain) otherwise.
    pub fn eval_at(&self, x: [f64; 2]) -> f64 {
        if let Some(d) = &self.descriptor {
            return d.eval(x);
        }
        let grid = self.samples.grid();
        let mut idx = [0usize; 2];
        for axis in 0..grid.dim() {
            let e = grid.edges(axis);
            let pos = e.partition_point(|&v| v <= x[axis]);
            idx[axis] = pos.saturating_sub(1).min(e.len() - 2);
        }
        self.samples.value(grid.cell_index(idx[0], idx[1]))
    }

    /// The scaled exponent beta * p; requires beta * p_- > 1.
    pub fn scale(&self, beta: f64) -> Result<Exponent> {
        if !(beta * self.p_minus > 1.0) {
            return Err(Error::InvalidExponent(format!(
                "beta * p_minus = {} <= 1",
                beta * self.p_minus
            )));
        }
        let samples = self.samples.map(|v| beta * v);
        Exponent::new(samples, beta * self.p_minus, beta * self.p_plus, None)
    }
}

/// Strictly increasing continuous piecewise-linear bijection of the line,
/// extended with slope 1 outside its breakpoint range.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PiecewiseLinearMap {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PiecewiseLinearMap {
    pub fn new(breakpoints: &[(f64, f64)]) -> Result<PiecewiseLinearMap> {
        if breakpoints.is_empty() {
            return Err(Error::NonMonotoneMap("no breakpoints".into()));
        }
        let xs: Vec<f64> = breakpoints.iter().map(|b| b.0).collect();
        let ys: Vec<f64> = breakpoints.iter().map(|b| b.1).collect();
        for w in xs.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::NonMonotoneMap("x-coordinates not strictly increasing".into()));
            }
        }
        for w in ys.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::NonMonotoneMap("y-coordinates not strictly increasing".into()));
            }
        }
        Ok(PiecewiseLinearMap { xs, ys })
    }

    pub fn identity() -> PiecewiseLinearMap {
        PiecewiseLinearMap { xs: vec![0.0], ys: vec![0.0] }
    }

    pub fn eval(&self, x: f64) -> f64 {
        Self::interp(&self.xs, &self.ys, x)
    }

    pub fn inverse(&self, y: f64) -> f64 {
        Self::interp(&self.ys, &self.xs, y)
    }

    fn interp(from: &[f64], to: &[f64], x: f64) -> f64 {
        let n = from.len();
        if x <= from[0] {
            return x + (to[0] - from[0]);
        }
        if x >= from[n - 1] {
            return x + (to[n - 1] - from[n - 1]);
        }
        let i = from.partition_point(|&v| v <= x) - 1;
        let t = (x - from[i]) / (from[i + 1] - from[i]);
        to[i] + t * (to[i + 1] - to[i])
    }
}

/// Construction recipe for [`build_exponent`]; also the config-file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExponentSpec {
    Constant { q: f64 },
    LogHolder { p_inf: f64, c: f64 },
    Ac { base: f64, density: DensitySpec },
    Lerner { alpha: f64, beta: f64, k_max: u32 },
    Step { breaks: Vec<f64>, levels: Vec<f64> },
    Remapped { base: Box<ExponentSpec>, breakpoints: Vec<[f64; 2]> },
}

/// Density l for absolutely continuous exponents p(x) = base + int_{-inf}^x l.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DensitySpec {
    /// height * chi on \[a, b\], averaged exactly onto the grid cells.
    Indicator { a: f64, b: f64, height: f64 },
    /// Explicit per-cell values.
    Cells { values: Vec<f64> },
}

pub fn build_exponent(grid: &Arc<Grid>, spec: &ExponentSpec) -> Result<Exponent> {
    match spec {
        ExponentSpec::Constant { q } => Exponent::constant(grid.clone(), *q),
        ExponentSpec::LogHolder { p_inf, c } => log_holder_exponent(grid, *p_inf, *c),
        ExponentSpec::Ac { base, density } => {
            let l = density_function(grid, density)?;
            ac_exponent(grid, *base, &l)
        }
        ExponentSpec::Lerner { alpha, beta, k_max } => {
            lerner_exponent(grid, *alpha, *beta, *k_max)
        }
        ExponentSpec::Step { breaks, levels } => step_exponent(grid, breaks, levels),
        ExponentSpec::Remapped { base, breakpoints } => {
            let inner = build_exponent(grid, base)?;
            let bp: Vec<(f64, f64)> = breakpoints.iter().map(|b| (b[0], b[1])).collect();
            let map = PiecewiseLinearMap::new(&bp)?;
            remap_exponent(&inner, &map, grid)
        }
    }
}

fn density_function(grid: &Arc<Grid>, spec: &DensitySpec) -> Result<GridFunction> {
    match spec {
        DensitySpec::Cells { values } => GridFunction::new(grid.clone(), values.clone()),
        DensitySpec::Indicator { a, b, height } => {
            if grid.dim() != 1 {
                return Err(Error::UnsupportedDim("AC densities are 1D".into()));
            }
            if !(a < b) {
                return Err(Error::InvalidParameter(format!("indicator [{a}, {b}] empty")));
            }
            let edges = grid.edges(0);
            let values = (0..grid.n_cells())
                .map(|i| {
                    let lo = edges[i].max(*a);
                    let hi = edges[i + 1].min(*b);
                    let overlap = (hi - lo).max(0.0);
                    height * overlap / (edges[i + 1] - edges[i])
                })
                .collect();
            GridFunction::new(grid.clone(), values)
        }
    }
}

/// p(x) = p_inf + c / log(e + |x|); midpoint samples (no closed-form cell
/// average exists for this profile).
pub fn log_holder_exponent(grid: &Arc<Grid>, p_inf: f64, c: f64) -> Result<Exponent> {
    if !(p_inf > 1.0) || !(c > 0.0) {
        return Err(Error::InvalidExponent(format!("need p_inf > 1, c > 0; got {p_inf}, {c}")));
    }
    let d = Descriptor::LogHolder { p_inf, c };
    let samples = GridFunction::from_fn(grid.clone(), |x| d.eval(x))?;
    Exponent::new(samples, p_inf, p_inf + c, Some(d))
}

/// Absolutely continuous exponent with piecewise-constant density on the
/// grid (1D). Samples are the exact cell averages of the piecewise-linear
/// antiderivative, which coincide with its midpoint values.
pub fn ac_exponent(grid: &Arc<Grid>, base: f64, density: &GridFunction) -> Result<Exponent> {
    if grid.dim() != 1 {
        return Err(Error::UnsupportedDim("AC exponents are 1D".into()));
    }
    let n = grid.n_cells();
    let edges = grid.edges(0).to_vec();
    let dvals = density.values().to_vec();
    let mut cum = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    let mut abs_acc = 0.0;
    cum.push(0.0);
    for i in 0..n {
        let w = edges[i + 1] - edges[i];
        acc += dvals[i] * w;
        abs_acc += dvals[i].abs() * w;
        cum.push(acc);
    }
    if !abs_acc.is_finite() {
        return Err(Error::InvalidExponent("density has divergent absolute integral".into()));
    }
    // Linear pieces attain their extrema at cell edges.
    let mut pmin = base.min(base + acc);
    let mut pmax = base.max(base + acc);
    for v in &cum {
        pmin = pmin.min(base + v);
        pmax = pmax.max(base + v);
    }
    if !(pmin > 1.0) {
        return Err(Error::InvalidExponent(format!("AC exponent reaches p = {pmin} <= 1")));
    }
    let d = Descriptor::AcDensity { base, edges, density: dvals, cum: cum[..n].to_vec() };
    let samples = GridFunction::from_fn(grid.clone(), |x| d.eval(x))?;
    Exponent::new(samples, pmin, pmax, Some(d))
}

/// Piecewise-constant exponent with plateaus `levels` between sorted
/// `breaks` (1D).
pub fn step_exponent(grid: &Arc<Grid>, breaks: &[f64], levels: &[f64]) -> Result<Exponent> {
    if grid.dim() != 1 {
        return Err(Error::UnsupportedDim("step exponents are 1D".into()));
    }
    if levels.len() != breaks.len() + 1 {
        return Err(Error::InvalidExponent("need one more level than breaks".into()));
    }
    if breaks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidExponent("breaks not strictly increasing".into()));
    }
    let pmin = levels.iter().cloned().fold(f64::INFINITY, f64::min);
    let pmax = levels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(pmin > 1.0) || !pmax.is_finite() {
        return Err(Error::InvalidExponent(format!("levels must lie in (1, inf), got min {pmin}")));
    }
    let d = Descriptor::Step { breaks: breaks.to_vec(), levels: levels.to_vec() };
    let samples = GridFunction::from_fn(grid.clone(), |x| d.eval(x))?;
    Exponent::new(samples, pmin, pmax, Some(d))
}

/// The lacunary-interval integral p0(x) = int_{|x|}^inf chi_E(t) / (t log t) dt
/// with E the union of (e^{k^3}, e^{k^3 e^{1/k^2}}).
///
/// Intervals up to `k_max` are evaluated exactly through the log log
/// antiderivative (the k-th full interval contributes exactly 1/k^2); the
/// tail over k > k_max is added as the analytic constant pi^2/6 - sum 1/k^2.
/// All interval comparisons run in log space, so the doubly-exponential
/// endpoints never overflow.
pub fn lerner_p0(x: f64, k_max: u32) -> f64 {
    assert!(k_max >= 1, "k_max must be >= 1");
    let ax = x.abs();
    let lx = if ax > 0.0 { ax.ln() } else { f64::NEG_INFINITY };
    let mut sum = 0.0;
    let mut partial = 0.0; // sum of 1/k^2 over retained intervals
    for k in 1..=k_max {
        let kf = k as f64;
        let inv_k2 = 1.0 / (kf * kf);
        partial += inv_k2;
        let u_lo = kf * kf * kf; // log of the left endpoint
        let u_hi = u_lo * inv_k2.exp(); // log of the right endpoint
        if lx <= u_lo {
            sum += inv_k2;
        } else if lx < u_hi {
            // log log antiderivative: log(u_hi) - log(lx), with
            // log(u_hi) = 3 log k + 1/k^2 evaluated without cancellation.
            sum += 3.0 * kf.ln() + inv_k2 - lx.ln();
        }
    }
    let tail = PI * PI / 6.0 - partial;
    sum + tail
}

/// Exponent beta * (p0(|x|) + alpha), sampled at cell midpoints.
pub fn lerner_exponent(grid: &Arc<Grid>, alpha: f64, beta: f64, k_max: u32) -> Result<Exponent> {
    if !(alpha > 1.0) {
        return Err(Error::InvalidExponent(format!("alpha = {alpha} must exceed 1")));
    }
    if !(beta > 1.0 / alpha && beta <= 1.0) {
        return Err(Error::InvalidExponent(format!(
            "beta = {beta} must lie in (1/alpha, 1] = ({}, 1]",
            1.0 / alpha
        )));
    }
    if !(beta * alpha > 1.0) {
        return Err(Error::InvalidExponent(format!("beta * alpha = {} <= 1", beta * alpha)));
    }
    let d = Descriptor::LernerP0 { alpha, beta, k_max };
    let samples = GridFunction::from_fn(grid.clone(), |x| d.eval(x))?;
    // p0 decreases from pi^2/6 at 0 to 0 at infinity.
    let p_plus = beta * (alpha + PI * PI / 6.0);
    let p_minus = beta * alpha;
    Exponent::new(samples, p_minus, p_plus, Some(d))
}

/// Log-spaced symmetric 1D grid resolving the lacunary intervals
/// (e^{k^3}, e^{k^3 e^{1/k^2}}) for k = 1..=k_max, with cell edges forced at
/// every interval endpoint. `cells_per_unit_log` controls the resolution in
/// log space (the doubly-exponential right endpoints make uniform x-space
/// grids hopeless beyond k = 1).
pub fn lerner_grid(k_max: u32, cells_per_unit_log: f64) -> Result<Arc<Grid>> {
    assert!(k_max >= 1, "k_max must be >= 1");
    assert!(cells_per_unit_log > 0.0);
    // Forced points in u = log x: interval endpoints and a margin at the top.
    let mut forced = vec![0.0f64];
    for k in 1..=k_max {
        let kf = k as f64;
        let u_lo = kf * kf * kf;
        forced.push(u_lo);
        forced.push(u_lo * (1.0 / (kf * kf)).exp());
    }
    let top = forced[forced.len() - 1] + 1.0;
    forced.push(top);
    let mut us = Vec::new();
    for w in forced.windows(2) {
        let width = w[1] - w[0];
        let pieces = (width * cells_per_unit_log).ceil().max(1.0) as usize;
        for i in 0..pieces {
            us.push(w[0] + width * i as f64 / pieces as f64);
        }
    }
    us.push(top);
    let mut pos: Vec<f64> = us.into_iter().map(f64::exp).collect();
    pos[0] = 1.0;
    let mut edges = vec![0.0];
    edges.extend(pos.iter());
    let mut all: Vec<f64> = edges.iter().rev().map(|e| -e).collect();
    all.pop(); // drop the duplicated 0
    all.extend(edges.iter());
    Grid::new(1, vec![all]).map(Arc::new)
}

/// Composition p(omega^{-1}(x)) sampled on the target grid (1D).
/// p_- and p_+ are unchanged: composition with a bijection preserves range.
pub fn remap_exponent(
    p: &Exponent,
    omega: &PiecewiseLinearMap,
    target: &Arc<Grid>,
) -> Result<Exponent> {
    if p.grid().dim() != 1 || target.dim() != 1 {
        return Err(Error::UnsupportedDim("remapping is 1D".into()));
    }
    let d = Descriptor::Remapped { base: Box::new(p.clone()), map: omega.clone() };
    let samples = GridFunction::from_fn(target.clone(), |x| d.eval(x))?;
    Exponent::new(samples, p.p_minus, p.p_plus, Some(d))
}

/// Pointwise conjugate exponent p' = p / (p - 1).
///
/// Always well-defined here: the `Exponent` invariant guarantees p_- > 1.
pub fn conjugate_exponent(p: &Exponent) -> Exponent {
    let d = Descriptor::Conjugate { base: Box::new(p.clone()) };
    let samples = p.samples().map(|v| v / (v - 1.0));
    let p_minus = p.p_plus / (p.p_plus - 1.0);
    let p_plus = p.p_minus / (p.p_minus - 1.0);
    Exponent::new(samples, p_minus, p_plus, Some(d))
        .expect("conjugate of a valid exponent is valid")
}

/// Harmonic-type cube mean: 1/p_Q = (1/|Q|) int_Q 1/p(x) dx, exact for the
/// piecewise-constant sample model.
pub fn cube_mean_exponent(p: &Exponent, cube: &Cube) -> f64 {
    let grid = p.grid();
    let vol = cube.volume(grid);
    let mut inv = 0.0;
    for idx in cube.cell_indices(grid) {
        inv += grid.cell_volume(idx) / p.value(idx);
    }
    vol / inv
}

/// Regularity diagnostics for an exponent against a target limit p_inf.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegularityReport {
    /// max over midpoint pairs with |x-y| < 1/2 of |p(x)-p(y)| log(1/|x-y|).
    pub local_modulus: f64,
    /// max over cells of |p(x) - p_inf| log(e + |x|).
    pub decay_modulus: f64,
    /// int c^{1/|p(x)-p_inf|} dx with the integrand 0 where p(x) = p_inf.
    pub nekvinda_value: f64,
}

/// Grids up to this size get the full O(n^2) pair scan for the local
/// modulus; larger grids use adjacent pairs plus a seeded sample (adjacent
/// pairs dominate the divergence test as h -> 0).
const FULL_PAIR_SCAN_LIMIT: usize = 2048;

pub fn regularity_report(p: &Exponent, p_inf: f64, c: f64) -> RegularityReport {
    assert!(p_inf > 1.0, "p_inf must exceed 1");
    assert!(c > 0.0 && c < 1.0, "Nekvinda constant must lie in (0, 1)");
    let grid = p.grid();
    let n = grid.n_cells();

    let pair_value = |i: usize, j: usize| -> f64 {
        let d = grid.center_distance(i, j);
        if d > 0.0 && d < 0.5 {
            (p.value(i) - p.value(j)).abs() * (1.0 / d).ln()
        } else {
            0.0
        }
    };
    let mut local_modulus = 0.0f64;
    if n <= FULL_PAIR_SCAN_LIMIT {
        for i in 0..n {
            for j in i + 1..n {
                local_modulus = local_modulus.max(pair_value(i, j));
            }
        }
    } else {
        let nx = grid.cells_on_axis(0);
        let ny = grid.cells_on_axis(1);
        for iy in 0..ny {
            for ix in 0..nx {
                let idx = grid.cell_index(ix, iy);
                if ix + 1 < nx {
                    local_modulus = local_modulus.max(pair_value(idx, grid.cell_index(ix + 1, iy)));
                }
                if iy + 1 < ny {
                    local_modulus = local_modulus.max(pair_value(idx, grid.cell_index(ix, iy + 1)));
                }
            }
        }
        let mut rng = StdRng::seed_from_u64(0x5eed);
        for _ in 0..8192 {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i != j {
                local_modulus = local_modulus.max(pair_value(i, j));
            }
        }
    }

    let mut decay_modulus = 0.0f64;
    let mut nekvinda_value = 0.0f64;
    let log_c = c.ln();
    for i in 0..n {
        let r = grid.center_norm(i);
        let dev = (p.value(i) - p_inf).abs();
        decay_modulus = decay_modulus.max(dev * (std::f64::consts::E + r).ln());
        if dev > 0.0 {
            nekvinda_value += (log_c / dev).exp() * grid.cell_volume(i);
        }
    }

    RegularityReport { local_modulus, decay_modulus, nekvinda_value }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn grid_1d(a: f64, b: f64, n: usize) -> Arc<Grid> {
        Arc::new(Grid::uniform_1d(a, b, n).unwrap())
    }

    const PI2_6: f64 = PI * PI / 6.0;

    #[test]
    fn constant_exponent() {
        let g = grid_1d(0.0, 1.0, 4);
        let p = Exponent::constant(g, 2.0).unwrap();
        assert_eq!(p.p_minus(), 2.0);
        assert_eq!(p.p_plus(), 2.0);
        assert!(p.samples().values().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn rejects_exponent_at_one() {
        let g = grid_1d(0.0, 1.0, 4);
        assert!(Exponent::constant(g.clone(), 1.0).is_err());
        assert!(Exponent::constant(g, 0.5).is_err());
    }

    #[test]
    fn ac_indicator_antiderivative() {
        // p(x) = 2 for x <= 0, 2 + x on [0,1], 3 for x >= 1.
        let g = grid_1d(-2.0, 3.0, 20); // h = 0.25, edges align with 0 and 1
        let p = build_exponent(
            &g,
            &ExponentSpec::Ac {
                base: 2.0,
                density: DensitySpec::Indicator { a: 0.0, b: 1.0, height: 1.0 },
            },
        )
        .unwrap();
        assert!((p.eval_at([-1.0, 0.0]) - 2.0).abs() < 1e-14);
        assert!((p.eval_at([0.5, 0.0]) - 2.5).abs() < 1e-14);
        assert!((p.eval_at([2.0, 0.0]) - 3.0).abs() < 1e-14);
        assert!((p.p_minus() - 2.0).abs() < 1e-14);
        assert!((p.p_plus() - 3.0).abs() < 1e-14);
        // Samples are exact cell averages: on [0, 0.25) the average of 2+x
        // is 2.125.
        let idx = 8; // cell [0, 0.25)
        assert!((p.value(idx) - 2.125).abs() < 1e-14);
    }

    #[test]
    fn log_holder_profile() {
        let g = grid_1d(-4.0, 4.0, 64);
        let p = log_holder_exponent(&g, 2.0, 1.0).unwrap();
        // p(0) = 2 + 1/log(e) = 3 at the analytic level; p_plus records it.
        assert_eq!(p.p_plus(), 3.0);
        assert_eq!(p.p_minus(), 2.0);
        let d = p.descriptor().unwrap();
        assert!((d.eval([0.0, 0.0]) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn lerner_p0_closed_forms() {
        // Full series at the origin.
        assert!((lerner_p0(0.0, 3) - PI2_6).abs() < 1e-12);
        // Left endpoint of the k = 2 interval: only k >= 2 contribute.
        let x = (8.0f64).exp();
        assert!((lerner_p0(x, 3) - (PI2_6 - 1.0)).abs() < 1e-12);
        // Far above every retained interval: the analytic tail only.
        let x_far = (40.0f64).exp();
        let tail = PI2_6 - (1.0 + 0.25 + 1.0 / 9.0);
        assert!((lerner_p0(x_far, 3) - tail).abs() < 1e-12);
    }

    #[test]
    fn lerner_p0_monotone_and_bounded() {
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let x = (i as f64 * 0.2).exp() - 1.0;
            let v = lerner_p0(x, 3);
            assert!((-1e-15..=PI2_6 + 1e-15).contains(&v));
            assert!(v <= prev + 1e-12, "p0 must be non-increasing in |x|");
            prev = v;
        }
    }

    #[test]
    fn lerner_p0_interval_left_endpoints() {
        // Exact value pi^2/6 - sum_{k<k0} 1/k^2 at the left endpoint e^{k0^3}.
        for k0 in 1..=3u32 {
            let x = ((k0 as f64).powi(3)).exp();
            let want = PI2_6 - (1..k0).map(|k| 1.0 / (k as f64 * k as f64)).sum::<f64>();
            assert!((lerner_p0(x, 5) - want).abs() < 1e-12, "k0 = {k0}");
        }
    }

    #[test]
    fn lerner_exponent_values() {
        let g = grid_1d(-1.0, 1.0, 8);
        let p = lerner_exponent(&g, 2.0, 1.0, 3).unwrap();
        assert!((p.descriptor().unwrap().eval([0.0, 0.0]) - (2.0 + PI2_6)).abs() < 1e-12);
        assert!((p.p_minus() - 2.0).abs() < 1e-14);
        // Symmetry in |x|.
        for i in 0..4 {
            assert_eq!(p.value(i), p.value(7 - i));
        }
        // beta = 0.6 limit at infinity.
        let p2 = lerner_exponent(&g, 2.0, 0.6, 3).unwrap();
        assert!((p2.p_minus() - 1.2).abs() < 1e-14);
        // beta * alpha <= 1 rejected.
        assert!(lerner_exponent(&g, 2.0, 0.5, 3).is_err());
        assert!(lerner_exponent(&g, 2.0, 0.4999, 3).is_err());
    }

    #[test]
    fn remap_identity_and_dilation() {
        let g = grid_1d(-2.0, 2.0, 16);
        let p = step_exponent(&g, &[0.0], &[2.0, 3.0]).unwrap();
        let id = PiecewiseLinearMap::identity();
        let same = remap_exponent(&p, &id, &g).unwrap();
        assert_eq!(same.samples().values(), p.samples().values());

        // omega(x) = 2x relocates the step to 0 and doubles plateau widths.
        let two_x = PiecewiseLinearMap::new(&[(-2.0, -4.0), (2.0, 4.0)]).unwrap();
        let target = grid_1d(-4.0, 4.0, 32);
        let r = remap_exponent(&p, &two_x, &target).unwrap();
        assert!((r.eval_at([-1.0, 0.0]) - 2.0).abs() < 1e-14);
        assert!((r.eval_at([1.0, 0.0]) - 3.0).abs() < 1e-14);
        assert_eq!(r.p_minus(), p.p_minus());
        assert_eq!(r.p_plus(), p.p_plus());
        // Plateau value multiset preserved.
        let mut vals: Vec<f64> = r.samples().values().to_vec();
        vals.dedup();
        assert_eq!(vals, vec![2.0, 3.0]);
    }

    #[test]
    fn conjugate_involution() {
        let g = grid_1d(-2.0, 2.0, 32);
        for q in [2.0, 3.0, 4.0 / 3.0] {
            let p = Exponent::constant(g.clone(), q).unwrap();
            let pc = conjugate_exponent(&p);
            let expect = q / (q - 1.0);
            assert!((pc.value(0) - expect).abs() < 1e-14);
            let back = conjugate_exponent(&pc);
            for i in 0..g.n_cells() {
                assert!((back.value(i) - p.value(i)).abs() < 1e-12);
            }
        }
        let lh = log_holder_exponent(&g, 2.0, 0.5).unwrap();
        let back = conjugate_exponent(&conjugate_exponent(&lh));
        for i in 0..g.n_cells() {
            assert!((back.value(i) - lh.value(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn cube_mean_values() {
        let g = grid_1d(0.0, 2.0, 2);
        let p = step_exponent(&g, &[1.0], &[2.0, 4.0]).unwrap();
        let q = Cube::interval(0, 2);
        // 1/p_Q = (1/2)(1/2 + 1/4) = 3/8.
        assert!((cube_mean_exponent(&p, &q) - 8.0 / 3.0).abs() < 1e-14);
        // Single-cell cube returns the cell value.
        assert!((cube_mean_exponent(&p, &Cube::interval(1, 2)) - 4.0).abs() < 1e-14);
        // Constant exponent: p_Q = q everywhere.
        let c = Exponent::constant(g, 3.0).unwrap();
        assert!((cube_mean_exponent(&c, &q) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn cube_mean_duality() {
        // 1/(beta p)_Q + 1/((beta p)')_Q = 1 for all cubes.
        let g = grid_1d(-4.0, 4.0, 32);
        let p = log_holder_exponent(&g, 2.0, 0.8).unwrap();
        let beta = 0.7;
        let bp = p.scale(beta).unwrap();
        let bpc = conjugate_exponent(&bp);
        for cube in crate::grid::enum_cubes(&g, None, 10_000, 0) {
            let a = 1.0 / cube_mean_exponent(&bp, &cube);
            let b = 1.0 / cube_mean_exponent(&bpc, &cube);
            assert!((a + b - 1.0).abs() < 1e-10, "cube {:?}: {a} + {b}", cube);
        }
    }

    #[test]
    fn regularity_constant_is_zero() {
        let g = grid_1d(-4.0, 4.0, 64);
        let p = Exponent::constant(g, 2.0).unwrap();
        let r = regularity_report(&p, 2.0, 0.5);
        assert_eq!(r.local_modulus, 0.0);
        assert_eq!(r.decay_modulus, 0.0);
        assert_eq!(r.nekvinda_value, 0.0);
    }

    #[test]
    fn regularity_log_holder_decay() {
        // |p(x) - 2| log(e + |x|) = 1 identically for this profile.
        let g = grid_1d(-16.0, 16.0, 256);
        let p = log_holder_exponent(&g, 2.0, 1.0).unwrap();
        let r = regularity_report(&p, 2.0, 0.5);
        assert!((r.decay_modulus - 1.0).abs() < 1e-12);
        assert!(r.nekvinda_value.is_finite());
    }

    #[test]
    fn regularity_detects_jump_divergence() {
        // A fixed jump over adjacent cells of width h has local modulus
        // about |jump| * log(1/h), grown under refinement.
        let mut moduli = Vec::new();
        for n in [16usize, 64, 256] {
            let g = grid_1d(-1.0, 1.0, n);
            let p = step_exponent(&g, &[0.0], &[2.0, 3.0]).unwrap();
            let r = regularity_report(&p, 2.0, 0.5);
            let h = 2.0 / n as f64;
            assert!((r.local_modulus - (1.0 / h).ln()).abs() < 1e-9);
            moduli.push(r.local_modulus);
        }
        assert!(moduli[0] < moduli[1] && moduli[1] < moduli[2]);
    }

    #[test]
    fn exponent_serializes_with_descriptor() {
        let g = grid_1d(-2.0, 2.0, 4);
        let p = log_holder_exponent(&g, 2.0, 1.0).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"dim\":1"));
        assert!(json.contains("\"values\""));
        assert!(json.contains("\"p_minus\":2.0"));
        assert!(json.contains("\"kind\":\"log-holder\""));
        // Composite descriptors nest.
        let pc = conjugate_exponent(&p);
        let json_c = serde_json::to_string(&pc).unwrap();
        assert!(json_c.contains("\"kind\":\"conjugate\""));
        assert!(json_c.contains("\"kind\":\"log-holder\""));
    }

    #[test]
    fn remap_slows_decay_without_changing_local_behavior() {
        // Stretching the gap past the variation region pushes the deviation
        // from p_inf out to large |x|: decay modulus grows, the adjacent-cell
        // local modulus does not.
        let g = grid_1d(0.0, 4.0, 64);
        let p = step_exponent(&g, &[1.0, 2.0], &[2.5, 3.0, 2.0]).unwrap();
        let r0 = regularity_report(&p, 2.0, 0.5);
        // Slope-1 pieces: [0,1] fixed, variation block moved out by 40.
        let omega = PiecewiseLinearMap::new(&[(0.0, 0.0), (1.0, 41.0), (4.0, 44.0)]).unwrap();
        let target = Arc::new(
            Grid::new(1, vec![(0..=64).map(|i| {
                let x = i as f64 / 16.0;
                omega.eval(x)
            }).collect()])
            .unwrap(),
        );
        let q = remap_exponent(&p, &omega, &target).unwrap();
        let r1 = regularity_report(&q, 2.0, 0.5);
        assert!(r1.decay_modulus > 2.0 * r0.decay_modulus, "{} vs {}", r1.decay_modulus, r0.decay_modulus);
        assert_eq!(q.p_minus(), p.p_minus());
        assert_eq!(q.p_plus(), p.p_plus());
    }

    #[test]
    fn remap_preserves_local_modulus_under_translation() {
        let g = grid_1d(-2.0, 2.0, 64);
        let p = step_exponent(&g, &[0.0], &[2.0, 3.0]).unwrap();
        let r0 = regularity_report(&p, 2.0, 0.5);
        // Slope-1 map translating by 1: same spacing around the (moved) jump.
        let shift = PiecewiseLinearMap::new(&[(-2.0, -1.0), (2.0, 3.0)]).unwrap();
        let target = grid_1d(-1.0, 3.0, 64);
        let q = remap_exponent(&p, &shift, &target).unwrap();
        let r1 = regularity_report(&q, 2.0, 0.5);
        assert_eq!(r0.local_modulus, r1.local_modulus);
    }
}
