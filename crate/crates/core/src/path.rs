//! Monotone paths on the simplex and the aggregate g-variation along
//! straight segments.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::ModelSpec;
use crate::quadrature;
use crate::simplex::{l1, lerp, SimplexPoint};

pub const QUADRATURE_TOL: f64 = 1e-10;
const ROOT_TOL: f64 = 1e-12;
const SIGN_SCAN: usize = 256;

/// Points `z_0, ..., z_m` on a straight segment with equal `l1` steps in
/// `[epsilon, 2 epsilon)` (a single shorter step when the segment itself is
/// shorter than `epsilon`).
#[derive(Debug, Clone, Serialize)]
pub struct MonotonePath {
    points: Vec<SimplexPoint>,
    epsilon: f64,
}

impl MonotonePath {
    pub fn points(&self) -> &[SimplexPoint] {
        &self.points
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn steps(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    pub fn step_lengths(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[0].l1_distance(&w[1])).collect()
    }

    pub fn total_length(&self) -> f64 {
        self.step_lengths().iter().sum()
    }

    /// Every coordinate sequence `i -> (z_i)_k` is monotone.
    pub fn is_coordinate_monotone(&self) -> bool {
        let q = self.points.first().map_or(0, SimplexPoint::q);
        (0..q).all(|k| {
            let xs: Vec<f64> = self.points.iter().map(|p| p.coords()[k]).collect();
            xs.windows(2).all(|w| w[1] >= w[0]) || xs.windows(2).all(|w| w[1] <= w[0])
        })
    }
}

/// Splits the segment `z_a -> z_b` into `floor(L / epsilon)` equal steps,
/// `L = ||z_a - z_b||_1`, which absorbs the short remainder into the steps.
pub fn build_monotone_path(z_a: &SimplexPoint, z_b: &SimplexPoint, epsilon: f64) -> Result<MonotonePath> {
    build(z_a, z_b, epsilon, false)
}

/// As [`build_monotone_path`] but `z_a = z_b` gives the one-point path.
pub fn build_monotone_path_allow_empty(z_a: &SimplexPoint, z_b: &SimplexPoint, epsilon: f64) -> Result<MonotonePath> {
    build(z_a, z_b, epsilon, true)
}

fn build(z_a: &SimplexPoint, z_b: &SimplexPoint, epsilon: f64, allow_empty: bool) -> Result<MonotonePath> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid("epsilon", format!("must be positive, got {epsilon}")));
    }
    if z_a.q() != z_b.q() {
        return Err(Error::DimensionMismatch {
            expected: z_a.q(),
            found: z_b.q(),
        });
    }
    let length = z_a.l1_distance(z_b);
    if length == 0.0 {
        if allow_empty {
            return Ok(MonotonePath {
                points: vec![z_a.clone()],
                epsilon,
            });
        }
        return Err(Error::DegeneratePath);
    }
    let steps = ((length / epsilon + 1e-9).floor() as usize).max(1);
    let points = (0..=steps)
        .map(|i| {
            if i == steps {
                z_b.clone()
            } else {
                z_a.lerp(z_b, i as f64 / steps as f64)
            }
        })
        .collect();
    Ok(MonotonePath { points, epsilon })
}

/// `d/dt g_k(z_a + t (z_b - z_a))` for every `k`.
pub fn g_velocity(model: &ModelSpec, z_a: &[f64], z_b: &[f64], t: f64) -> Vec<f64> {
    let dir: Vec<f64> = z_b.iter().zip(z_a).map(|(b, a)| b - a).collect();
    model.g_directional(&lerp(z_a, z_b, t), &dir)
}

fn bisect_sign(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let positive = f_lo > 0.0;
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Interior sign changes of `t -> d/dt g_k(z(t))` on `(0, 1)`.
pub fn velocity_sign_changes(model: &ModelSpec, z_a: &[f64], z_b: &[f64], k: usize) -> Vec<f64> {
    let f = |t: f64| g_velocity(model, z_a, z_b, t)[k];
    let mut roots = Vec::new();
    let mut prev_t = 0.0;
    let mut prev = f(0.0);
    for i in 1..=SIGN_SCAN {
        let t = i as f64 / SIGN_SCAN as f64;
        let v = f(t);
        if prev != 0.0 && v != 0.0 && (prev > 0.0) != (v > 0.0) {
            roots.push(bisect_sign(f, prev_t, t, prev));
        }
        if v != 0.0 {
            prev = v;
            prev_t = t;
        }
    }
    roots
}

/// `sum_k int_0^1 |d/dt g_k(z(t))| dt` along the straight segment, by
/// adaptive quadrature on the pieces between sign changes.
pub fn aggregate_variation_quadrature(model: &ModelSpec, z_a: &SimplexPoint, z_b: &SimplexPoint) -> Result<f64> {
    model.check_dim(z_a.q())?;
    model.check_dim(z_b.q())?;
    let (a, b) = (z_a.coords(), z_b.coords());
    if l1(a, b) == 0.0 || model.beta() == 0.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for k in 0..model.q() {
        let mut knots = vec![0.0];
        knots.extend(velocity_sign_changes(model, a, b, k));
        knots.push(1.0);
        let tol = QUADRATURE_TOL / (model.q() * (knots.len() - 1)) as f64;
        for w in knots.windows(2) {
            let piece = quadrature::integrate(|t| g_velocity(model, a, b, t)[k], w[0], w[1], tol)?;
            total += piece.abs();
        }
    }
    Ok(total)
}

/// Critical times `t_k^*` of `g_k(z(t))` on the segment from the uniform
/// point to `z`, for each `k` with `z_k > 1/q` (`1.0` when the derivative
/// stays nonnegative).
pub fn critical_times(model: &ModelSpec, z: &SimplexPoint) -> Result<Vec<(usize, f64)>> {
    model.require_power()?;
    model.check_dim(z.q())?;
    let q = model.q();
    let u = vec![1.0 / q as f64; q];
    let zc = z.coords();
    Ok((0..q)
        .filter(|&k| zc[k] > 1.0 / q as f64)
        .map(|k| {
            let f = |t: f64| g_velocity(model, &u, zc, t)[k];
            let end = f(1.0);
            let t_star = if end >= 0.0 {
                1.0
            } else {
                // positive just after t = 0, negative at t = 1
                bisect_sign(f, 0.0, 1.0, 1.0)
            };
            (k, t_star)
        })
        .collect())
}

/// `2 sum_{k : z_k > 1/q} (g_k(z(t_k^*)) - 1/q)` on the segment from the
/// uniform point to `z`.
pub fn aggregate_variation_closed_form(model: &ModelSpec, z: &SimplexPoint) -> Result<f64> {
    let q = model.q();
    let u = vec![1.0 / q as f64; q];
    let mut total = 0.0;
    for (k, t) in critical_times(model, z)? {
        total += model.g_raw(&lerp(&u, z.coords(), t))[k] - 1.0 / q as f64;
    }
    Ok(2.0 * total)
}

/// `sum_k sum_i |<z_i - z_{i-1}, grad g_k(z_{i-1})>|` along a path.
pub fn riemann_variation(model: &ModelSpec, path: &MonotonePath) -> Result<f64> {
    let pts = path.points();
    if let Some(p) = pts.first() {
        model.check_dim(p.q())?;
    }
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (prev, next) = (w[0].coords(), w[1].coords());
        let step: Vec<f64> = next.iter().zip(prev).map(|(b, a)| b - a).collect();
        total += model.g_directional(prev, &step).iter().map(|x| x.abs()).sum::<f64>();
    }
    Ok(total)
}
