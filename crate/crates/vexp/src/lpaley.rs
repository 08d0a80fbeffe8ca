//! Mollifier construction, convolution, and the Littlewood-Paley square
//! function with its norm-equivalence experiment (1D).
//!
//! The bank stores phi_0 and phi = phi_0 - (1/2) phi_0(./2) as
//! piecewise-constant kernels at the base spacing, and each dilation
//! phi_j = 2^j phi(2^j .) on its own 2^{-j}-refined grid, where dilation of
//! the piecewise-constant model is exact (same cell count, values scaled by
//! 2^j, cells shrunk). Mass and zero-integral invariants then hold to
//! rounding, uniformly in j.
//!
//! Square-function levels evaluate the continuum convolution of the two
//! piecewise-constant models exactly at the base grid's cell midpoints via
//! the prefix antiderivative of f; the plain [`convolve`] operation is the
//! classic same-spacing discrete sum with an FFT fast path.

use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::grid::{Grid, GridFunction};
use crate::modular::luxemburg_norm;

/// Bump profile exp(-1/(1 - (x/r)^2)) on |x| < r, zero outside.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BumpSpec {
    pub radius: f64,
}

impl Default for BumpSpec {
    fn default() -> BumpSpec {
        BumpSpec { radius: 0.5 }
    }
}

fn bump(x: f64, r: f64) -> f64 {
    let u = x / r;
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

/// Mollifier bank: phi_0 (unit integral), phi (zero integral), and the
/// dilations phi_j on their refinement-matched grids.
#[derive(Debug, Clone)]
pub struct FilterBank {
    phi0: GridFunction,
    phi: GridFunction,
    dilations: Vec<GridFunction>,
    levels: usize,
    base_spacing: f64,
    /// Use phi instead of phi_0 for the j = 0 term of the square function
    /// (the literal reading of the level sum, which annihilates constants).
    pub strict_level0: bool,
}

impl FilterBank {
    pub fn phi0(&self) -> &GridFunction {
        &self.phi0
    }

    pub fn phi(&self) -> &GridFunction {
        &self.phi
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dilation(&self, j: usize) -> &GridFunction {
        assert!(j >= 1 && j <= self.levels, "dilations are indexed 1..=J");
        &self.dilations[j - 1]
    }

    pub fn base_spacing(&self) -> f64 {
        self.base_spacing
    }

    /// The reconstruction kernel psi_J = 2^J phi_0(2^J .), exactly dilated.
    pub fn psi(&self, j: usize) -> GridFunction {
        dilate_pc(&self.phi0, j as i32)
    }
}

/// Exact piecewise-constant dilation 2^{j} g(2^{j} x) (1D).
fn dilate_pc(g: &GridFunction, j: i32) -> GridFunction {
    let scale = 2.0f64.powi(j);
    let edges: Vec<f64> = g.grid().edges(0).iter().map(|&e| e / scale).collect();
    let grid = Arc::new(Grid::new(1, vec![edges]).expect("scaled edges stay increasing"));
    let values: Vec<f64> = g.values().iter().map(|&v| v * scale).collect();
    GridFunction::new(grid, values).expect("dilated kernel is finite")
}

/// Build the filter bank on the spacing of `grid` with `j_max` dilation
/// levels. The bump radius is snapped to a whole number of cells; the kernel
/// support must span at least 8 cells at its own resolution.
pub fn build_filterbank(grid: &Grid, j_max: usize, bump_spec: BumpSpec) -> Result<FilterBank> {
    if grid.dim() != 1 {
        return Err(Error::UnsupportedDim("filter banks are 1D".into()));
    }
    let h = grid
        .spacing(0)
        .ok_or_else(|| Error::InvalidGrid("filter banks need a uniform grid".into()))?;
    let r_cells = (bump_spec.radius / h).round() as i64;
    if r_cells < 2 {
        return Err(Error::GridTooCoarse(format!(
            "bump radius {} spans fewer than 2 cells at spacing {h}; the kernel support \
             needs at least 8 cells",
            bump_spec.radius
        )));
    }
    if j_max > 40 {
        return Err(Error::InvalidParameter(format!("refinement depth {j_max} exceeds 40")));
    }
    let big_r = r_cells as usize;
    let r = big_r as f64 * h;
    // Kernel grid [-2r, 2r] with 4R cells of width h; phi_0 is supported on
    // the middle half, so the half-scale term below never leaves the grid.
    let n = 4 * big_r;
    let edges: Vec<f64> = (0..=n).map(|c| (c as f64 - 2.0 * big_r as f64) * h).collect();
    let kgrid = Arc::new(Grid::new(1, vec![edges])?);
    let raw: Vec<f64> = (0..n).map(|c| bump(kgrid.cell_center(c)[0], r)).collect();
    let mass: f64 = raw.iter().map(|v| v * h).sum();
    let phi0 = GridFunction::new(kgrid.clone(), raw.iter().map(|v| v / mass).collect())?;
    // Cell average of phi_0(./2) over kernel cell c is the phi_0 value at
    // cell R + c/2: the half-scale window always sits inside one cell.
    let phi_vals: Vec<f64> = (0..n)
        .map(|c| phi0.value(c) - 0.5 * phi0.value(big_r + c / 2))
        .collect();
    let phi = GridFunction::new(kgrid, phi_vals)?;
    let dilations = (1..=j_max).map(|j| dilate_pc(&phi, j as i32)).collect();
    Ok(FilterBank {
        phi0,
        phi,
        dilations,
        levels: j_max,
        base_spacing: h,
        strict_level0: false,
    })
}

/// Piecewise-linear antiderivative of a piecewise-constant f, zero at the
/// left edge and constant outside the domain (zero extension of f).
struct Antiderivative<'a> {
    edges: &'a [f64],
    prefix: Vec<f64>,
    values: &'a [f64],
}

impl<'a> Antiderivative<'a> {
    fn new(f: &'a GridFunction) -> Antiderivative<'a> {
        let edges = f.grid().edges(0);
        let mut prefix = Vec::with_capacity(edges.len());
        let mut acc = 0.0;
        prefix.push(0.0);
        for (i, &v) in f.values().iter().enumerate() {
            acc += v * (edges[i + 1] - edges[i]);
            prefix.push(acc);
        }
        Antiderivative { edges, prefix, values: f.values() }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        if x <= self.edges[0] {
            return 0.0;
        }
        if x >= self.edges[n] {
            return self.prefix[n];
        }
        let k = match self.edges.partition_point(|&e| e <= x) {
            0 => 0,
            pos => (pos - 1).min(n - 1),
        };
        self.prefix[k] + self.values[k] * (x - self.edges[k])
    }
}

/// Exact convolution of the piecewise-constant models of f and a kernel,
/// evaluated at the cell midpoints of f's grid.
pub fn exact_conv_at_midpoints(f: &GridFunction, kernel: &GridFunction) -> GridFunction {
    let grid = f.grid();
    let anti = Antiderivative::new(f);
    let kedges = kernel.grid().edges(0);
    let kvals = kernel.values();
    let mut out = vec![0.0f64; grid.n_cells()];
    for (i, o) in out.iter_mut().enumerate() {
        let x = grid.cell_center(i)[0];
        let mut acc = 0.0;
        for (c, &kv) in kvals.iter().enumerate() {
            if kv != 0.0 {
                acc += kv * (anti.eval(x - kedges[c]) - anti.eval(x - kedges[c + 1]));
            }
        }
        *o = acc;
    }
    GridFunction::new(grid.clone(), out).expect("convolution output is finite")
}

/// Direct-summation threshold for [`convolve`]; larger inputs take the
/// frequency-domain path, which is equivalence-tested at this size.
pub const FFT_THRESHOLD: usize = 1024;

/// Discrete convolution sum_k f_k g_{i-k} h of two functions on equal-spacing
/// 1D grids, zero-extended, output on f's grid. The kernel's cell containing
/// the origin is its index anchor, so a unit-mass single cell reproduces a
/// translated kernel.
pub fn convolve(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    let fg = f.grid();
    let gg = g.grid();
    if fg.dim() != 1 || gg.dim() != 1 {
        return Err(Error::UnsupportedDim("convolve is 1D".into()));
    }
    let hf = fg.spacing(0).ok_or_else(|| Error::SpacingMismatch("f grid nonuniform".into()))?;
    let hg = gg.spacing(0).ok_or_else(|| Error::SpacingMismatch("g grid nonuniform".into()))?;
    if (hf - hg).abs() > 1e-12 * hf.max(hg) {
        return Err(Error::SpacingMismatch(format!("spacings {hf} and {hg} differ")));
    }
    let n = fg.n_cells();
    // Kernel anchor: the cell whose midpoint is nearest the origin.
    let c0 = ((-gg.edges(0)[0]) / hg - 0.5).round() as i64;
    let out = if n < FFT_THRESHOLD {
        convolve_direct(f.values(), g.values(), c0, hf)
    } else {
        convolve_fft(f.values(), g.values(), c0, hf)
    };
    GridFunction::new(fg.clone(), out)
}

fn convolve_direct(f: &[f64], g: &[f64], c0: i64, h: f64) -> Vec<f64> {
    let n = f.len() as i64;
    let mut out = vec![0.0f64; f.len()];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, &gv) in g.iter().enumerate() {
            if gv == 0.0 {
                continue;
            }
            let k = i as i64 - (c as i64 - c0);
            if k >= 0 && k < n {
                acc += f[k as usize] * gv;
            }
        }
        *o = acc * h;
    }
    out
}

fn convolve_fft(f: &[f64], g: &[f64], c0: i64, h: f64) -> Vec<f64> {
    let n = f.len();
    let m = g.len();
    let full = n + m - 1;
    let size = full.next_power_of_two();
    let mut fre = vec![0.0f64; size];
    let mut fim = vec![0.0f64; size];
    let mut gre = vec![0.0f64; size];
    let mut gim = vec![0.0f64; size];
    fre[..n].copy_from_slice(f);
    gre[..m].copy_from_slice(g);
    fft(&mut fre, &mut fim, false);
    fft(&mut gre, &mut gim, false);
    for i in 0..size {
        let re = fre[i] * gre[i] - fim[i] * gim[i];
        let im = fre[i] * gim[i] + fim[i] * gre[i];
        fre[i] = re;
        fim[i] = im;
    }
    fft(&mut fre, &mut fim, true);
    // Linear index i of the output corresponds to f-index i = (i + c0) - c.
    let mut out = vec![0.0f64; n];
    for (i, o) in out.iter_mut().enumerate() {
        let idx = i as i64 + c0;
        if idx >= 0 && (idx as usize) < full {
            *o = fre[idx as usize] * h;
        }
    }
    out
}

/// Iterative radix-2 complex FFT (in place); `invert` includes the 1/n scale.
fn fft(re: &mut [f64], im: &mut [f64], invert: bool) {
    let n = re.len();
    debug_assert!(n.is_power_of_two());
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = 2.0 * std::f64::consts::PI / len as f64 * if invert { -1.0 } else { 1.0 };
        let (wr, wi) = (ang.cos(), ang.sin());
        let mut i = 0;
        while i < n {
            let mut cr = 1.0f64;
            let mut ci = 0.0f64;
            for k in 0..len / 2 {
                let (ur, ui) = (re[i + k], im[i + k]);
                let (vr, vi) = (
                    re[i + k + len / 2] * cr - im[i + k + len / 2] * ci,
                    re[i + k + len / 2] * ci + im[i + k + len / 2] * cr,
                );
                re[i + k] = ur + vr;
                im[i + k] = ui + vi;
                re[i + k + len / 2] = ur - vr;
                im[i + k + len / 2] = ui - vi;
                let ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
            i += len;
        }
        len <<= 1;
    }
    if invert {
        let inv = 1.0 / n as f64;
        for v in re.iter_mut() {
            *v *= inv;
        }
        for v in im.iter_mut() {
            *v *= inv;
        }
    }
}

/// Square function (|k_0 * f|^2 + sum_{j=1}^{J} |phi_j * f|^2)^{1/2} with
/// k_0 = phi_0 (default) or phi (strict variant), evaluated cellwise on f's
/// grid.
pub fn square_function(f: &GridFunction, fb: &FilterBank) -> GridFunction {
    let grid = f.grid();
    let level0 = if fb.strict_level0 { fb.phi() } else { fb.phi0() };
    let mut acc: Vec<f64> =
        exact_conv_at_midpoints(f, level0).values().iter().map(|v| v * v).collect();
    for j in 1..=fb.levels() {
        let conv = exact_conv_at_midpoints(f, fb.dilation(j));
        for (a, v) in acc.iter_mut().zip(conv.values()) {
            *a += v * v;
        }
    }
    GridFunction::new(grid.clone(), acc.into_iter().map(f64::sqrt).collect())
        .expect("square function is finite")
}

/// Test-function family for the equivalence experiment.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SfFamily {
    /// Smooth windowed trigonometric packets, band-limited to the grid.
    SmoothBandlimited,
    /// Random step functions away from the boundary.
    Steps,
    /// Alternating mix of both.
    Mixed,
}

/// Generate test functions supported well inside the domain (margin at
/// least the kernel support), so zero extension is exact.
pub fn sf_family(
    grid: &Arc<Grid>,
    family: SfFamily,
    count: usize,
    margin: f64,
    seed: u64,
) -> Vec<GridFunction> {
    let mut rng = StdRng::seed_from_u64(seed);
    let a = grid.edges(0)[0] + margin;
    let b = *grid.edges(0).last().unwrap() - margin;
    let width = b - a;
    let h = grid.cell_width(0, 0);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let smooth = match family {
            SfFamily::SmoothBandlimited => true,
            SfFamily::Steps => false,
            SfFamily::Mixed => i % 2 == 0,
        };
        let f = if smooth {
            let modes = rng.random_range(1..=4usize);
            let params: Vec<(f64, f64, f64)> = (0..modes)
                .map(|_| {
                    (
                        rng.random_range(0.2f64..1.5),
                        rng.random_range(0.5f64..(0.15 / h).max(1.0)),
                        rng.random_range(0.0f64..std::f64::consts::TAU),
                    )
                })
                .collect();
            let center = a + width * rng.random_range(0.3..0.7);
            let sigma = width * rng.random_range(0.08..0.2);
            GridFunction::from_fn(grid.clone(), |x| {
                let t = x[0];
                if t < a || t > b {
                    return 0.0;
                }
                let env = (-((t - center) / sigma).powi(2)).exp();
                params.iter().map(|(amp, om, ph)| amp * (om * t + ph).cos()).sum::<f64>() * env
            })
            .unwrap()
        } else {
            let pieces = rng.random_range(2..=6usize);
            let cells: Vec<(f64, f64, f64)> = (0..pieces)
                .map(|_| {
                    let lo = a + width * rng.random_range(0.0..0.8);
                    let len = width * rng.random_range(0.05..0.25);
                    (lo, lo + len, rng.random_range(-2.0f64..2.0))
                })
                .collect();
            GridFunction::from_fn(grid.clone(), |x| {
                let t = x[0];
                cells
                    .iter()
                    .filter(|(lo, hi, _)| t >= *lo && t < *hi)
                    .map(|(_, _, v)| *v)
                    .sum()
            })
            .unwrap()
        };
        if f.max_abs() > 0.0 {
            out.push(f);
        }
    }
    out
}

/// Bracket of the ratios |S f|_{p} / |f|_{p} over a generated family.
#[derive(Debug, Clone, Serialize)]
pub struct SfBracket {
    pub c_low: f64,
    pub c_high: f64,
    pub ratios: Vec<f64>,
}

pub fn sf_equivalence(
    p: &Exponent,
    fb: &FilterBank,
    family: SfFamily,
    budget: u32,
    seed: u64,
) -> SfBracket {
    let grid = p.grid();
    // Keep supports clear of the boundary by the outer kernel radius.
    let margin = 2.0 * fb.phi0().grid().edges(0).last().unwrap().abs();
    let fs = sf_family(grid, family, budget as usize, margin, seed);
    let mut ratios = Vec::with_capacity(fs.len());
    for f in &fs {
        let denom = luxemburg_norm(f, p);
        if denom == 0.0 {
            continue;
        }
        let s = square_function(f, fb);
        ratios.push(luxemburg_norm(&s, p) / denom);
    }
    let c_low = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let c_high = ratios.iter().cloned().fold(0.0f64, f64::max);
    SfBracket { c_low, c_high, ratios }
}
