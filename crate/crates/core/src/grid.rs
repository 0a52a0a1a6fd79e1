//! Barycentric grids on the simplex and derivative-free local refinement.

use crate::simplex::enumerate_lattice;

/// Every point of the simplex with coordinates in `(1/resolution) Z`.
pub fn barycentric_grid(q: usize, resolution: u32) -> Vec<Vec<f64>> {
    let scale = resolution as f64;
    enumerate_lattice(resolution, q)
        .into_iter()
        .map(|c| c.into_iter().map(|x| x as f64 / scale).collect())
        .collect()
}

/// Compass search along the edge directions `e_i - e_j`, minimizing `f`.
///
/// Starts with step `h0` and halves it until it falls below `h_min`. Only
/// points with nonnegative coordinates accepted by `feasible` are visited;
/// moves must beat the current value by more than rounding.
pub fn pattern_search_min(
    f: impl Fn(&[f64]) -> f64,
    start: &[f64],
    h0: f64,
    h_min: f64,
    feasible: impl Fn(&[f64]) -> bool,
) -> (Vec<f64>, f64) {
    let q = start.len();
    let mut x = start.to_vec();
    let mut fx = f(&x);
    let mut h = h0;
    let mut trial = x.clone();
    while h >= h_min {
        let mut improved = false;
        for i in 0..q {
            for j in 0..q {
                if i == j || x[j] < h {
                    continue;
                }
                trial.copy_from_slice(&x);
                trial[i] += h;
                trial[j] -= h;
                if trial[j] < 0.0 {
                    trial[j] = 0.0;
                }
                // rounding in the move would otherwise let the sum drift
                let s: f64 = trial.iter().sum();
                trial.iter_mut().for_each(|t| *t /= s);
                if !feasible(&trial) {
                    continue;
                }
                let ft = f(&trial);
                if ft < fx - f64::EPSILON * fx.abs() {
                    x.copy_from_slice(&trial);
                    fx = ft;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    (x, fx)
}

/// Compass search maximizing `f`.
pub fn pattern_search_max(
    f: impl Fn(&[f64]) -> f64,
    start: &[f64],
    h0: f64,
    h_min: f64,
    feasible: impl Fn(&[f64]) -> bool,
) -> (Vec<f64>, f64) {
    let (x, v) = pattern_search_min(|z| -f(z), start, h0, h_min, feasible);
    (x, -v)
}
