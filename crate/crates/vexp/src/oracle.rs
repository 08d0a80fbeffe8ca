//! Brute-force reference implementations used by the verification battery
//! and the test suite.
//!
//! These scan the entire cube family per output cell with fresh left-to-right
//! window sums. They share only the scalar power primitives with the
//! production code, so agreement there implies the search structures agree;
//! with identical accumulation order the agreement is bit-exact.

use crate::grid::{dyadic_cubes, is_local, Cube, DyadicFamily, GridFunction};
use crate::maximal::{all_square_windows, q_mean, q_term, CubeFamily, MaximalSpec};

/// Fresh q-average of |f| over `[i, j)` on a 1D grid.
fn window_average_1d(f: &GridFunction, i: usize, j: usize, q: f64) -> f64 {
    let grid = f.grid();
    let mut num = 0.0;
    let mut den = 0.0;
    for k in i..j {
        let vol = grid.cell_volume(k);
        num += q_term(f.value(k), q, vol);
        den += vol;
    }
    q_mean(num, den, q)
}

/// Fresh row-major q-average of |f| over a cube.
fn window_average(f: &GridFunction, cube: &Cube, q: f64) -> f64 {
    let grid = f.grid();
    let mut num = 0.0;
    let mut den = 0.0;
    for idx in cube.cell_indices(grid) {
        let vol = grid.cell_volume(idx);
        num += q_term(f.value(idx), q, vol);
        den += vol;
    }
    q_mean(num, den, q)
}

/// Exhaustive per-cell scan over the whole cube family of the spec.
pub fn maximal_brute(f: &GridFunction, spec: &MaximalSpec) -> GridFunction {
    let grid = f.grid();
    let n = grid.n_cells();
    let mut out = vec![0.0f64; n];
    match spec.family {
        CubeFamily::AllCubes if grid.dim() == 1 => {
            for x in 0..n {
                let mut best = f64::NEG_INFINITY;
                for i in 0..=x {
                    for j in x + 1..=n {
                        let cube = Cube::interval(i, j);
                        if spec.local && !is_local(grid, &cube) {
                            continue;
                        }
                        best = best.max(window_average_1d(f, i, j, spec.q));
                    }
                }
                out[x] = best;
            }
        }
        CubeFamily::AllCubes => {
            let windows = all_square_windows(grid, spec.local);
            for x in 0..n {
                let mut best = f64::NEG_INFINITY;
                for w in &windows {
                    if w.contains_cell(grid, x) {
                        best = best.max(window_average(f, w, spec.q));
                    }
                }
                out[x] = best;
            }
        }
        CubeFamily::Dyadic { shift, z_max } => {
            let cubes = dyadic_cubes(grid, &DyadicFamily { z_max, shift })
                .expect("grid must align with the dyadic family");
            for x in 0..n {
                let mut best = 0.0f64;
                for c in &cubes {
                    if c.contains_cell(grid, x) {
                        best = best.max(window_average(f, c, spec.q));
                    }
                }
                out[x] = best;
            }
        }
    }
    GridFunction::new(grid.clone(), out).expect("brute-force output is finite")
}
