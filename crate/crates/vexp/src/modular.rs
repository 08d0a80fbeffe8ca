//! Modulars and Luxemburg norms (function and sequence variants), the
//! N-function means M_{s,Q} of t^{p(x)} and its complementary function, and
//! numerical Legendre conjugates.
//!
//! Powers |f|^{p(x)} are evaluated in log space with explicit zero handling;
//! arguments whose log exceeds the saturation threshold become the +inf
//! sentinel rather than corrupting bisection brackets.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::grid::{Cube, GridFunction};

/// exp(x) overflows f64 just above 709; saturate to the sentinel before that.
const LOG_SATURATION: f64 = 700.0;

/// |x|^e with 0^e = 0 (e > 0) and saturation to +inf.
///
/// The one power primitive shared by modulars, maximal means and the
/// brute-force oracles, so that equal inputs give bit-equal outputs across
/// code paths.
pub fn pow_abs(x: f64, e: f64) -> f64 {
    let a = x.abs();
    if a == 0.0 {
        return 0.0;
    }
    let l = e * a.ln();
    if l > LOG_SATURATION {
        f64::INFINITY
    } else {
        l.exp()
    }
}

/// The modular int |f(x)|^{p(x)} dx; +inf on overflow.
pub fn modular(f: &GridFunction, p: &Exponent) -> f64 {
    assert_eq!(
        f.values().len(),
        p.samples().values().len(),
        "f and p must live on the same grid"
    );
    let grid = f.grid();
    let mut acc = 0.0;
    for (i, &v) in f.values().iter().enumerate() {
        acc += pow_abs(v, p.value(i)) * grid.cell_volume(i);
    }
    acc
}

/// Strictly decreasing bisection for inf{lambda > 0 : F(lambda) <= 1}.
///
/// `eval` must be strictly decreasing where finite (it may return +inf for
/// small lambda). Brackets are verified and expanded geometrically before
/// bisecting on log lambda to relative tolerance 1e-10.
fn luxemburg_infimum(eval: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    debug_assert!(lo > 0.0 && hi > lo);
    let mut guard = 0;
    while eval(lo) < 1.0 {
        hi = hi.min(lo);
        lo /= 8.0;
        guard += 1;
        if guard > 300 {
            // eval < 1 down to denormal scale: the infimum is 0.
            return 0.0;
        }
    }
    guard = 0;
    while eval(hi) > 1.0 {
        hi *= 8.0;
        guard += 1;
        if guard > 300 {
            return f64::INFINITY;
        }
    }
    let mut llo = lo.ln();
    let mut lhi = hi.ln();
    for _ in 0..200 {
        if lhi - llo <= 1e-10 {
            break;
        }
        let mid = 0.5 * (llo + lhi);
        if eval(mid.exp()) > 1.0 {
            llo = mid;
        } else {
            lhi = mid;
        }
    }
    (0.5 * (llo + lhi)).exp()
}

/// Luxemburg norm inf{lambda > 0 : modular(f / lambda) <= 1}.
pub fn luxemburg_norm(f: &GridFunction, p: &Exponent) -> f64 {
    assert_eq!(
        f.values().len(),
        p.samples().values().len(),
        "f and p must live on the same grid"
    );
    let grid = f.grid();
    let max_abs = f.max_abs();
    if max_abs == 0.0 {
        return 0.0;
    }
    let eval = |lam: f64| -> f64 {
        let mut acc = 0.0;
        for (i, &v) in f.values().iter().enumerate() {
            if v != 0.0 {
                acc += pow_abs(v / lam, p.value(i)) * grid.cell_volume(i);
                if acc.is_infinite() {
                    return acc;
                }
            }
        }
        acc
    };
    let minvol = grid.min_cell_volume();
    let lo = 0.5 * max_abs * pow_abs(minvol, 1.0 / p.p_minus()).min(1.0);
    let hi = max_abs * (grid.total_volume() + 1.0);
    luxemburg_infimum(eval, lo.max(f64::MIN_POSITIVE), hi)
}

/// Luxemburg norm of f restricted to a cube (f * chi_Q), looping only over
/// the cube's cells.
pub fn luxemburg_norm_on(f: &GridFunction, p: &Exponent, cube: &Cube) -> f64 {
    let grid = f.grid();
    let mut max_abs = 0.0f64;
    for idx in cube.cell_indices(grid) {
        max_abs = max_abs.max(f.value(idx).abs());
    }
    if max_abs == 0.0 {
        return 0.0;
    }
    let eval = |lam: f64| -> f64 {
        let mut acc = 0.0;
        for idx in cube.cell_indices(grid) {
            let v = f.value(idx);
            if v != 0.0 {
                acc += pow_abs(v / lam, p.value(idx)) * grid.cell_volume(idx);
                if acc.is_infinite() {
                    return acc;
                }
            }
        }
        acc
    };
    let vol = cube.volume(grid);
    luxemburg_infimum(eval, (0.25 * max_abs * vol.min(1.0)).max(f64::MIN_POSITIVE), max_abs * (vol + 1.0))
}

/// Luxemburg norm of the indicator of a cube, looping only over its cells.
pub fn indicator_norm(p: &Exponent, cube: &Cube) -> f64 {
    let grid = p.grid();
    let eval = |lam: f64| -> f64 {
        let mut acc = 0.0;
        for idx in cube.cell_indices(grid) {
            acc += pow_abs(1.0 / lam, p.value(idx)) * grid.cell_volume(idx);
            if acc.is_infinite() {
                return acc;
            }
        }
        acc
    };
    let vol = cube.volume(grid);
    luxemburg_infimum(eval, (0.25 * vol.min(1.0)).max(f64::MIN_POSITIVE), vol + 1.0)
}

/// Weighted sequence Luxemburg norm inf{lambda : sum w_i |t_i/lambda|^{p_i} <= 1}.
pub fn seq_norm(t: &[f64], exps: &[f64], weights: Option<&[f64]>) -> f64 {
    assert_eq!(t.len(), exps.len(), "t and exps must have equal length");
    if let Some(w) = weights {
        assert_eq!(t.len(), w.len(), "weights must match t");
    }
    assert!(exps.iter().all(|&p| p > 1.0 && p.is_finite()), "exponents must lie in (1, inf)");
    let max_abs = t.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs == 0.0 {
        return 0.0;
    }
    let eval = |lam: f64| -> f64 {
        let mut acc = 0.0;
        for (i, &ti) in t.iter().enumerate() {
            if ti != 0.0 {
                let w = weights.map_or(1.0, |w| w[i]);
                acc += w * pow_abs(ti / lam, exps[i]);
                if acc.is_infinite() {
                    return acc;
                }
            }
        }
        acc
    };
    luxemburg_infimum(eval, max_abs * 1e-6, max_abs * (t.len() as f64 + 1.0) * 1e3)
}

/// Complementary function phi^*(x, t) = (p-1) p^{-p'} t^{p'} with p' = p/(p-1).
pub fn phi_star_eval(p_val: f64, t: f64) -> f64 {
    debug_assert!(p_val > 1.0 && t >= 0.0);
    let pc = p_val / (p_val - 1.0);
    (p_val - 1.0) * pow_abs(p_val, -pc) * pow_abs(t, pc)
}

/// Which of the pair phi(x,t) = t^{p(x)} / phi^*(x,t) to average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PhiKind {
    Phi,
    PhiStar,
}

fn phi_value(p_val: f64, t: f64, which: PhiKind) -> f64 {
    match which {
        PhiKind::Phi => pow_abs(t, p_val),
        PhiKind::PhiStar => phi_star_eval(p_val, t),
    }
}

/// s-mean over a cube: M_{s,Q}phi(t) = ((1/|Q|) int_Q phi(x,t)^s dx)^{1/s}.
pub fn msq(p: &Exponent, cube: &Cube, s: f64, t: f64, which: PhiKind) -> f64 {
    assert!(s >= 1.0, "s must be >= 1");
    assert!(t >= 0.0, "t must be >= 0");
    let grid = p.grid();
    let vol = cube.volume(grid);
    let mut acc = 0.0;
    for idx in cube.cell_indices(grid) {
        acc += pow_abs(phi_value(p.value(idx), t, which), s) * grid.cell_volume(idx);
    }
    pow_abs(acc / vol, 1.0 / s)
}

/// Plain s-mean of |f| over a cube.
pub fn s_mean(f: &GridFunction, cube: &Cube, s: f64) -> f64 {
    let grid = f.grid();
    let vol = cube.volume(grid);
    let mut acc = 0.0;
    for idx in cube.cell_indices(grid) {
        acc += pow_abs(f.value(idx), s) * grid.cell_volume(idx);
    }
    pow_abs(acc / vol, 1.0 / s)
}

/// s-mean of phi(x, |f(x)|) over a cube.
pub fn s_mean_phi(f: &GridFunction, p: &Exponent, cube: &Cube, s: f64) -> f64 {
    let grid = f.grid();
    let vol = cube.volume(grid);
    let mut acc = 0.0;
    for idx in cube.cell_indices(grid) {
        let phi = pow_abs(f.value(idx), p.value(idx));
        acc += pow_abs(phi, s) * grid.cell_volume(idx);
    }
    pow_abs(acc / vol, 1.0 / s)
}

/// Default sampling range and density of the N-function tables.
pub const TABLE_T_MIN: f64 = 1e-6;
pub const TABLE_T_MAX: f64 = 1e6;
pub const TABLE_POINTS_PER_DECADE: usize = 512;

/// A non-negative non-decreasing function sampled on a log-spaced grid.
#[derive(Debug, Clone)]
pub struct NFunctionTable {
    ts: Vec<f64>,
    vals: Vec<f64>,
}

impl NFunctionTable {
    pub fn sample(
        f: impl Fn(f64) -> f64,
        t_min: f64,
        t_max: f64,
        points_per_decade: usize,
    ) -> NFunctionTable {
        assert!(t_min > 0.0 && t_max > t_min);
        let decades = (t_max / t_min).log10();
        let n = ((decades * points_per_decade as f64).ceil() as usize).max(2);
        let lmin = t_min.ln();
        let step = (t_max.ln() - lmin) / (n - 1) as f64;
        let ts: Vec<f64> = (0..n).map(|i| (lmin + step * i as f64).exp()).collect();
        let vals = ts.iter().map(|&t| f(t)).collect();
        NFunctionTable { ts, vals }
    }

    pub fn default_sample(f: impl Fn(f64) -> f64) -> NFunctionTable {
        Self::sample(f, TABLE_T_MIN, TABLE_T_MAX, TABLE_POINTS_PER_DECADE)
    }

    pub fn ts(&self) -> &[f64] {
        &self.ts
    }

    pub fn vals(&self) -> &[f64] {
        &self.vals
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    /// Discrete convexity certificate: divided-difference slopes are
    /// non-decreasing up to `tol` (relative to the local scale).
    pub fn is_convex(&self, tol: f64) -> bool {
        for i in 1..self.len() - 1 {
            let (t0, t1, t2) = (self.ts[i - 1], self.ts[i], self.ts[i + 1]);
            let (v0, v1, v2) = (self.vals[i - 1], self.vals[i], self.vals[i + 1]);
            if !v0.is_finite() || !v1.is_finite() || !v2.is_finite() {
                continue;
            }
            let s01 = (v1 - v0) / (t1 - t0);
            let s12 = (v2 - v1) / (t2 - t1);
            let scale = s01.abs().max(s12.abs()).max(1e-300);
            if s12 - s01 < -tol * scale {
                return false;
            }
        }
        true
    }

    /// Legendre conjugate at one point: max over the sampled t of u t - g(t).
    pub fn conj_at(&self, u: f64) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for i in 0..self.len() {
            if self.vals[i].is_finite() {
                let c = u * self.ts[i] - self.vals[i];
                if c > best {
                    best = c;
                }
            }
        }
        best.max(0.0)
    }

    /// Full Legendre conjugate on the same grid.
    ///
    /// For convex non-decreasing g the maximizing t is non-decreasing in u,
    /// so one forward sweep suffices; the brute-force oracle in the tests
    /// checks this against the full scan.
    pub fn conj_transform(&self) -> NFunctionTable {
        let n = self.len();
        let mut vals = vec![0.0; n];
        let mut arg = 0usize;
        for (i, &u) in self.ts.iter().enumerate() {
            let score = |j: usize| -> f64 {
                if self.vals[j].is_finite() {
                    u * self.ts[j] - self.vals[j]
                } else {
                    f64::NEG_INFINITY
                }
            };
            let mut best = score(arg);
            while arg + 1 < n {
                let next = score(arg + 1);
                if next >= best {
                    arg += 1;
                    best = next;
                } else {
                    break;
                }
            }
            vals[i] = best.max(0.0);
        }
        NFunctionTable { ts: self.ts.clone(), vals }
    }
}

/// Sampled table of t -> M_{s,Q}phi(t) (or the starred variant).
pub fn msq_table(p: &Exponent, cube: &Cube, s: f64, which: PhiKind) -> NFunctionTable {
    NFunctionTable::default_sample(|t| msq(p, cube, s, t, which))
}

/// alpha_s(Q, t) = M_{s,Q}phi(t) / (M_{s,Q}phi^*)^*(t), with a flag raised
/// when t sits within one table cell of the sampling boundary (where the
/// conjugate is dominated by truncation).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AlphaS {
    pub value: f64,
    pub near_boundary: bool,
}

pub fn alpha_s(p: &Exponent, cube: &Cube, s: f64, t: f64) -> Result<AlphaS> {
    assert!(s >= 1.0, "s must be >= 1");
    assert!(t > 0.0, "t must be positive");
    let star = msq_table(p, cube, s, PhiKind::PhiStar);
    alpha_s_with_table(p, cube, s, t, &star)
}

/// Same as [`alpha_s`] with a precomputed conjugate-side table, for callers
/// evaluating many t on one cube.
pub fn alpha_s_with_table(
    p: &Exponent,
    cube: &Cube,
    s: f64,
    t: f64,
    star_table: &NFunctionTable,
) -> Result<AlphaS> {
    let denom = star_table.conj_at(t);
    if denom < 1e-300 {
        return Err(Error::ConjugateVanishes(t));
    }
    let numer = msq(p, cube, s, t, PhiKind::Phi);
    let ts = star_table.ts();
    let near_boundary = t <= ts[1] || t >= ts[ts.len() - 2];
    Ok(AlphaS { value: numer / denom, near_boundary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::{step_exponent, Exponent};
    use crate::grid::{Grid, GridFunction};
    use std::sync::Arc;

    fn grid_1d(a: f64, b: f64, n: usize) -> Arc<Grid> {
        Arc::new(Grid::uniform_1d(a, b, n).unwrap())
    }

    #[test]
    fn modular_examples() {
        let g = grid_1d(0.0, 2.0, 2);
        let p3 = Exponent::constant(g.clone(), 3.0).unwrap();
        let chi = GridFunction::new(g.clone(), vec![1.0, 0.0]).unwrap();
        assert!((modular(&chi, &p3) - 1.0).abs() < 1e-15);
        let two_chi = GridFunction::new(g.clone(), vec![2.0, 0.0]).unwrap();
        assert!((modular(&two_chi, &p3) - 8.0).abs() < 1e-12);
        // f = 2 on [0,1), 3 on [1,2); p = 2 / 3 -> 4 + 27 = 31.
        let p = step_exponent(&g, &[1.0], &[2.0, 3.0]).unwrap();
        let f = GridFunction::new(g, vec![2.0, 3.0]).unwrap();
        assert!((modular(&f, &p) - 31.0).abs() < 1e-12);
    }

    #[test]
    fn modular_overflow_sentinel() {
        let g = grid_1d(0.0, 1.0, 1);
        let p = Exponent::constant(g.clone(), 4.0).unwrap();
        let f = GridFunction::new(g, vec![1e200]).unwrap();
        assert!(modular(&f, &p).is_infinite());
    }

    #[test]
    fn luxemburg_zero_and_indicators() {
        let g = grid_1d(0.0, 2.0, 2);
        let p2 = Exponent::constant(g.clone(), 2.0).unwrap();
        assert_eq!(luxemburg_norm(&GridFunction::zeros(g.clone()), &p2), 0.0);
        let chi = GridFunction::new(g.clone(), vec![1.0, 0.0]).unwrap();
        assert!((luxemburg_norm(&chi, &p2) - 1.0).abs() < 1e-10);
        let p3 = Exponent::constant(g.clone(), 3.0).unwrap();
        let two_chi = GridFunction::new(g, vec![2.0, 0.0]).unwrap();
        assert!((luxemburg_norm(&two_chi, &p3) - 2.0).abs() < 2e-10);
    }

    /// Independent scalar oracle for the two-exponent equation
    /// lambda^{-2} + lambda^{-4} = 1 (plain interval bisection, not the
    /// production log-space routine).
    fn scalar_two_exp_root() -> f64 {
        let g = |lam: f64| lam.powi(-2) + lam.powi(-4) - 1.0;
        let (mut lo, mut hi) = (1.0, 2.0);
        assert!(g(lo) > 0.0 && g(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn luxemburg_two_exponent_value() {
        let oracle = scalar_two_exp_root();
        // Closed form sqrt((1+sqrt 5)/2).
        let closed = ((1.0 + 5.0f64.sqrt()) / 2.0).sqrt();
        assert!((oracle - closed).abs() < 1e-12);
        assert!((closed - 1.272_019_649_514_069).abs() < 1e-12);

        let g = grid_1d(0.0, 2.0, 2);
        let p = step_exponent(&g, &[1.0], &[2.0, 4.0]).unwrap();
        let f = GridFunction::new(g, vec![1.0, 1.0]).unwrap();
        assert!((luxemburg_norm(&f, &p) - oracle).abs() < 1e-9);
    }

    #[test]
    fn unit_ball_property() {
        let g = grid_1d(-2.0, 2.0, 16);
        let p = step_exponent(&g, &[0.0], &[1.5, 3.0]).unwrap();
        let vals: Vec<f64> =
            (0..16).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.37 + 0.01).collect();
        let f = GridFunction::new(g, vals).unwrap();
        let norm = luxemburg_norm(&f, &p);
        let scaled = f.map(|v| v / norm);
        let m = modular(&scaled, &p);
        assert!((m - 1.0).abs() < 1e-8, "modular at the norm = {m}");
    }

    #[test]
    fn luxemburg_extreme_magnitudes() {
        // Saturation inside the modular must not corrupt the bracket.
        let g = grid_1d(0.0, 1.0, 4);
        let p = Exponent::constant(g.clone(), 2.0).unwrap();
        for scale in [1e200, 1e-200] {
            let f = GridFunction::new(g.clone(), vec![scale, 0.0, 2.0 * scale, 0.0]).unwrap();
            // Factor the scale out of the closed form: squaring 1e-200
            // directly would underflow the oracle itself.
            let closed = scale * (0.25f64 + 4.0 * 0.25).sqrt();
            let lux = luxemburg_norm(&f, &p);
            assert!((lux - closed).abs() <= 1e-9 * closed, "scale {scale}: {lux} vs {closed}");
        }
    }

    #[test]
    fn seq_norm_examples() {
        assert!((seq_norm(&[1.0, 1.0], &[2.0, 2.0], None) - 2.0f64.sqrt()).abs() < 1e-10);
        assert!((seq_norm(&[3.7], &[2.5], Some(&[1.0])) - 3.7).abs() < 1e-9);
        let oracle = scalar_two_exp_root();
        assert!((seq_norm(&[1.0, 1.0], &[2.0, 4.0], None) - oracle).abs() < 1e-9);
        assert_eq!(seq_norm(&[0.0, 0.0], &[2.0, 3.0], None), 0.0);
    }

    #[test]
    fn seq_norm_weighted() {
        // w |t/lambda|^p = 1 -> lambda = t w^{1/p}.
        let lam = seq_norm(&[2.0], &[3.0], Some(&[0.125]));
        assert!((lam - 2.0 * 0.125f64.powf(1.0 / 3.0)).abs() < 1e-9);
    }

    #[test]
    fn phi_star_values() {
        for t in [0.0, 0.3, 1.0, 7.5] {
            assert!((phi_star_eval(2.0, t) - t * t / 4.0).abs() < 1e-12);
        }
        // p = 3, t = 1: 2 * 3^{-3/2}.
        let want = 2.0 * 3.0f64.powf(-1.5);
        assert!((want - 0.384_900_179_459_750_5).abs() < 1e-15);
        assert!((phi_star_eval(3.0, 1.0) - want).abs() < 1e-12);
        assert_eq!(phi_star_eval(4.0, 0.0), 0.0);
    }

    #[test]
    fn msq_examples() {
        let g = grid_1d(0.0, 2.0, 2);
        let p2 = Exponent::constant(g.clone(), 2.0).unwrap();
        let q = crate::grid::Cube::interval(0, 2);
        for t in [0.5, 1.0, 3.0] {
            assert!((msq(&p2, &q, 1.0, t, PhiKind::Phi) - t * t).abs() < 1e-10);
            assert!((msq(&p2, &q, 2.0, t, PhiKind::Phi) - t * t).abs() < 1e-10);
        }
        // Two-plateau mean: (t^2 + t^4)/2 at t = 2 -> 10.
        let p = step_exponent(&g, &[1.0], &[2.0, 4.0]).unwrap();
        assert!((msq(&p, &q, 1.0, 2.0, PhiKind::Phi) - 10.0).abs() < 1e-10);
    }

    /// Brute-force conjugate: full scan over the table.
    fn conj_at_brute(table: &NFunctionTable, u: f64) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for (t, v) in table.ts().iter().zip(table.vals()) {
            if v.is_finite() {
                best = best.max(u * t - v);
            }
        }
        best.max(0.0)
    }

    #[test]
    fn conjugate_of_quadratics() {
        // g(t) = t^2/4 -> g*(u) = u^2; g(t) = t^2 -> g*(u) = u^2/4.
        let quarter = NFunctionTable::default_sample(|t| t * t / 4.0);
        let full = NFunctionTable::default_sample(|t| t * t);
        for u in [0.01, 0.1, 1.0, 10.0, 100.0] {
            let c1 = quarter.conj_at(u);
            assert!((c1 - u * u).abs() < 1e-3 * (u * u), "u = {u}: {c1}");
            let c2 = full.conj_at(u);
            assert!((c2 - u * u / 4.0).abs() < 1e-3 * (u * u / 4.0));
        }
    }

    #[test]
    fn conjugate_of_zero_is_clipped_linear() {
        let zero = NFunctionTable::default_sample(|_| 0.0);
        let c = zero.conj_transform();
        let t_max = *zero.ts().last().unwrap();
        for (u, v) in c.ts().iter().zip(c.vals()) {
            assert_eq!(*v, u * t_max);
        }
    }

    #[test]
    fn conj_transform_matches_brute_force() {
        let tables = [
            NFunctionTable::default_sample(|t| t * t / 4.0),
            NFunctionTable::default_sample(|t| t.powf(1.7)),
            NFunctionTable::default_sample(|t| if t > 1.0 { (t - 1.0).powi(3) } else { 0.0 }),
        ];
        for table in &tables {
            let fast = table.conj_transform();
            for (i, &u) in table.ts().iter().enumerate() {
                assert_eq!(fast.vals()[i], conj_at_brute(table, u), "u = {u}");
            }
            assert!(fast.is_convex(1e-9));
        }
    }

    #[test]
    fn conjugate_pointwise_matches_phi_star() {
        // The Legendre conjugate of t -> t^p is phi^*(p, .) for each fixed p.
        for p in [1.5, 2.0, 3.0, 4.0] {
            let table = NFunctionTable::default_sample(|t| pow_abs(t, p));
            for u in [0.05, 0.3, 1.0, 4.0, 50.0] {
                let want = phi_star_eval(p, u);
                let got = table.conj_at(u);
                assert!(
                    (got - want).abs() <= 1e-3 * want.max(1e-12),
                    "p = {p}, u = {u}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn double_conjugate_recovers_phi() {
        // (phi^*)^* = phi for constant exponents, within table resolution.
        let g = grid_1d(0.0, 1.0, 4);
        let q = crate::grid::Cube::interval(0, 4);
        for p_val in [1.5, 2.0, 3.0] {
            let p = Exponent::constant(g.clone(), p_val).unwrap();
            let star = msq_table(&p, &q, 1.0, PhiKind::PhiStar);
            let back = star.conj_transform();
            for (i, &t) in back.ts().iter().enumerate() {
                if !(0.01..=100.0).contains(&t) {
                    continue;
                }
                let want = pow_abs(t, p_val);
                assert!(
                    (back.vals()[i] - want).abs() <= 1e-3 * want,
                    "p = {p_val}, t = {t}: {} vs {want}",
                    back.vals()[i]
                );
            }
        }
    }

    #[test]
    fn half_argument_conjugate_bound() {
        // The starred conjugate at half the argument stays below the phi mean.
        let g = grid_1d(-2.0, 2.0, 16);
        let p = step_exponent(&g, &[0.0, 1.0], &[1.6, 2.5, 3.5]).unwrap();
        for s in [1.0, 2.0] {
            for cube in [crate::grid::Cube::interval(0, 16), crate::grid::Cube::interval(4, 12)] {
                let star = msq_table(&p, &cube, s, PhiKind::PhiStar);
                for t in [0.01, 0.1, 1.0, 5.0, 40.0] {
                    let lhs = star.conj_at(t / 2.0);
                    let rhs = msq(&p, &cube, s, t, PhiKind::Phi);
                    assert!(lhs <= rhs * (1.0 + 1e-6), "s={s}, t={t}: {lhs} > {rhs}");
                }
            }
        }
    }

    #[test]
    fn mean_bound_and_witness_reversal() {
        let g = grid_1d(-2.0, 2.0, 16);
        let p = step_exponent(&g, &[0.0], &[1.8, 3.2]).unwrap();
        let cube = crate::grid::Cube::interval(2, 14);
        let s = 1.5;
        let star = msq_table(&p, &cube, s, PhiKind::PhiStar);

        // Conjugate at half the s-mean of |f| vs the s-mean of phi(f).
        let f = GridFunction::from_fn(g.clone(), |x| 0.2 + (x[0] * 1.3).sin().abs()).unwrap();
        let lhs = star.conj_at(0.5 * s_mean(&f, &cube, s));
        let rhs = s_mean_phi(&f, &p, &cube, s);
        assert!(lhs <= rhs * (1.0 + 1e-6), "{lhs} > {rhs}");

        // The witness f_t = chi_Q phi^*(t)/t reverses it at twice the s-mean.
        for t in [0.05, 0.4, 1.0, 3.0, 20.0] {
            let ft = GridFunction::from_fn(g.clone(), |x| {
                let idx_p = p.eval_at(x);
                phi_star_eval(idx_p, t) / t
            })
            .unwrap()
            .restrict(&cube);
            let lhs = star.conj_at(2.0 * s_mean(&ft, &cube, s));
            let rhs = s_mean_phi(&ft, &p, &cube, s);
            assert!(lhs >= rhs * (1.0 - 1e-3), "t={t}: {lhs} < {rhs}");
        }
    }

    #[test]
    fn conj_matches_denser_table() {
        // Conjugation error is dominated by table resolution: a 10x denser
        // sampling must agree to the documented tolerance.
        let g = grid_1d(-2.0, 2.0, 16);
        let p = step_exponent(&g, &[0.0], &[1.7, 2.9]).unwrap();
        let cube = crate::grid::Cube::interval(2, 14);
        let coarse = msq_table(&p, &cube, 1.0, PhiKind::PhiStar);
        let dense = NFunctionTable::sample(
            |t| msq(&p, &cube, 1.0, t, PhiKind::PhiStar),
            TABLE_T_MIN,
            TABLE_T_MAX,
            10 * TABLE_POINTS_PER_DECADE,
        );
        for u in [0.01, 0.1, 1.0, 7.0, 90.0] {
            let a = coarse.conj_at(u);
            let b = dense.conj_at(u);
            assert!((a - b).abs() <= 1e-3 * b.max(1e-12), "u = {u}: {a} vs {b}");
        }
    }

    #[test]
    fn normalized_means_bracket() {
        // |Q| M_{s,Q}phi(1/|chi_Q|) and its conjugate analog stay within a
        // fixed bracket for a decaying exponent over local cubes.
        let g = grid_1d(-4.0, 4.0, 64);
        let p = crate::exponent::log_holder_exponent(&g, 2.0, 1.0).unwrap();
        for s in [1.0, 2.0] {
            for cube in crate::grid::enum_local_cubes(&g, 10_000, 3) {
                let inv = 1.0 / indicator_norm(&p, &cube);
                let vol = cube.volume(&g);
                let m = vol * msq(&p, &cube, s, inv, PhiKind::Phi);
                assert!((0.05..=20.0).contains(&m), "phi mean {m} on {cube:?}");
                let star = msq_table(&p, &cube, s, PhiKind::PhiStar);
                let c = vol * star.conj_at(inv);
                assert!((0.05..=20.0).contains(&c), "conjugate {c} on {cube:?}");
            }
        }
    }

    #[test]
    fn alpha_s_constant_exponent_is_one() {
        let g = grid_1d(0.0, 1.0, 8);
        let p = Exponent::constant(g, 2.0).unwrap();
        let q = crate::grid::Cube::interval(0, 8);
        for t in [0.05, 0.3, 1.0, 4.0, 30.0] {
            let a = alpha_s(&p, &q, 1.0, t).unwrap();
            assert!(!a.near_boundary);
            assert!((a.value - 1.0).abs() < 5e-3, "t = {t}: alpha = {}", a.value);
        }
    }

    #[test]
    fn alpha_s_flags_boundary() {
        let g = grid_1d(0.0, 1.0, 8);
        let p = Exponent::constant(g, 2.0).unwrap();
        let q = crate::grid::Cube::interval(0, 8);
        let a = alpha_s(&p, &q, 1.0, TABLE_T_MIN).unwrap();
        assert!(a.near_boundary);
    }

    #[test]
    fn power_identity_function_norm() {
        // ||f|^{1/beta}|_{beta p}^beta = |f|_p for beta in (1/p_-, 1).
        let g = grid_1d(-2.0, 2.0, 16);
        let p = step_exponent(&g, &[0.0], &[1.7, 2.8]).unwrap();
        let vals: Vec<f64> = (0..16).map(|i| 0.1 + ((i * 7) % 5) as f64 * 0.45).collect();
        let f = GridFunction::new(g, vals).unwrap();
        for beta in [0.7, 0.85, 0.99] {
            let bp = p.scale(beta).unwrap();
            let froot = f.map(|v| pow_abs(v, 1.0 / beta));
            let lhs = pow_abs(luxemburg_norm(&froot, &bp), beta);
            let rhs = luxemburg_norm(&f, &p);
            assert!((lhs - rhs).abs() <= 1e-6, "beta = {beta}: {lhs} vs {rhs}");
        }
    }
}
