//! Equilibrium macrostates, the mean-field equation, and the critical inverse
//! temperatures `beta_c` (equilibrium transition) and `beta_s` (rapid-mixing
//! threshold) of the generalized Curie-Weiss-Potts model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{barycentric_grid, pattern_search_min};
use crate::model::{golden_section_max, ModelSpec};
use crate::simplex::{l1, SimplexPoint};

/// Residual scan resolution for the mean-field equation.
const MEAN_FIELD_SCAN: usize = 10_000;
/// Grid resolution of the 1-D family scanned for `beta_s`.
const BETA_S_SCAN: usize = 10_000;
const BETA_TOL: f64 = 1e-8;
const U_TOL: f64 = 1e-12;
/// Free-energy difference below which two candidates are considered tied.
const TIE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    /// A single global minimizer.
    Unique,
    /// Several global minimizers: either the `q` symmetric ordered states or
    /// coexistence of ordered and disordered states at the transition.
    Multiple,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    /// A global minimizer of `R(.|rho) + beta H`; for the ordered phase the
    /// representative with the large coordinate first.
    pub z_beta: SimplexPoint,
    /// Order parameter: `z_beta = u e^k + (1 - u)/q (1, ..., 1)`.
    pub u: f64,
    pub min_value: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy)]
pub struct EquilibriumOptions {
    /// Cross-validate (power family) or search (custom `H`) on a simplex grid.
    pub grid_search: bool,
    /// Overrides the default grid resolution (200 for `q <= 3`, 60 for `q = 4`).
    pub grid_resolution: Option<u32>,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        Self {
            grid_search: true,
            grid_resolution: None,
        }
    }
}

pub fn default_grid_resolution(q: usize) -> u32 {
    if q <= 3 {
        200
    } else {
        60
    }
}

/// `Delta(u) = -(beta / q^(r-1)) [(1 + (q-1) u)^(r-1) - (1 - u)^(r-1)]`.
pub fn mean_field_delta(model: &ModelSpec, u: f64) -> Result<f64> {
    let r = model.require_power()?;
    Ok(delta(model.q(), r, model.beta(), u))
}

fn delta(q: usize, r: f64, beta: f64, u: f64) -> f64 {
    let qf = q as f64;
    -(beta / qf.powf(r - 1.0)) * ((1.0 + (qf - 1.0) * u).powf(r - 1.0) - (1.0 - u).powf(r - 1.0))
}

fn mean_field_rhs(q: usize, r: f64, beta: f64, u: f64) -> f64 {
    let e = delta(q, r, beta, u).exp();
    (1.0 - e) / (1.0 + (q as f64 - 1.0) * e)
}

/// `u - (1 - e^Delta) / (1 + (q - 1) e^Delta)`.
pub fn mean_field_residual(model: &ModelSpec, u: f64) -> Result<f64> {
    let r = model.require_power()?;
    Ok(u - mean_field_rhs(model.q(), r, model.beta(), u))
}

/// Largest solution in `[0, 1)` of the mean-field equation; `0` when no
/// positive solution exists.
pub fn solve_mean_field(model: &ModelSpec) -> Result<f64> {
    let r = model.require_power()?;
    Ok(largest_mean_field_root(model.q(), r, model.beta()))
}

fn largest_mean_field_root(q: usize, r: f64, beta: f64) -> f64 {
    let f = |u: f64| u - mean_field_rhs(q, r, beta, u);
    let local = beta * (r - 1.0) / (q as f64).powf(r - 1.0);
    // f(0) = 0; its sign just above zero is that of f'(0) = 1 - local
    let sign_at = |i: usize| -> f64 {
        if i == 0 {
            let s = 1.0 - local;
            if s != 0.0 {
                return s;
            }
            return f(1.0 / MEAN_FIELD_SCAN as f64 * 1e-3);
        }
        f(i as f64 / MEAN_FIELD_SCAN as f64)
    };
    // f(1) > 0 always, so the largest root sits in the last interval where f
    // moves from <= 0 to > 0
    let mut values = Vec::with_capacity(MEAN_FIELD_SCAN + 1);
    for i in 0..=MEAN_FIELD_SCAN {
        values.push(sign_at(i));
    }
    let Some(i) = (0..MEAN_FIELD_SCAN).rev().find(|&i| values[i] <= 0.0) else {
        return 0.0;
    };
    if i > 0 && values[i] == 0.0 {
        return i as f64 / MEAN_FIELD_SCAN as f64;
    }
    let mut lo = i as f64 / MEAN_FIELD_SCAN as f64;
    let mut hi = (i + 1) as f64 / MEAN_FIELD_SCAN as f64;
    while hi - lo > U_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u = 0.5 * (lo + hi);
    if u < U_TOL {
        0.0
    } else {
        u
    }
}

/// Global minimizer(s) of `R(.|rho) + beta H` with default options.
pub fn find_equilibria(model: &ModelSpec) -> Result<EquilibriumSolution> {
    find_equilibria_with(model, &EquilibriumOptions::default())
}

pub fn find_equilibria_with(
    model: &ModelSpec,
    options: &EquilibriumOptions,
) -> Result<EquilibriumSolution> {
    let q = model.q();
    if options.grid_search && q > 4 {
        return Err(Error::GridSearchTooLarge { q });
    }
    let resolution = options
        .grid_resolution
        .unwrap_or_else(|| default_grid_resolution(q));
    match model.power_exponent() {
        Some(_) => power_equilibria(model, options.grid_search.then_some(resolution)),
        None => {
            if !options.grid_search {
                return Err(invalid(
                    "grid_search",
                    "custom interactions are solved by grid search only",
                ));
            }
            grid_equilibria(model, resolution)
        }
    }
}

fn power_equilibria(model: &ModelSpec, grid: Option<u32>) -> Result<EquilibriumSolution> {
    let q = model.q();
    let uniform = SimplexPoint::uniform(q);
    let v_uniform = model.functional_raw(uniform.coords());
    let u = solve_mean_field(model)?;
    let mut solution = EquilibriumSolution {
        z_beta: uniform,
        u: 0.0,
        min_value: v_uniform,
        phase: Phase::Unique,
    };
    if u > 0.0 {
        let candidate = SimplexPoint::ordered(q, 0, u);
        let v_candidate = model.functional_raw(candidate.coords());
        if (v_candidate - v_uniform).abs() < TIE_TOL {
            solution.phase = Phase::Multiple;
            solution.min_value = v_uniform.min(v_candidate);
        } else if v_candidate < v_uniform {
            solution = EquilibriumSolution {
                z_beta: candidate,
                u,
                min_value: v_candidate,
                phase: Phase::Multiple,
            };
        }
    }
    if let Some(resolution) = grid {
        let (_, grid_value) = grid_minimum(model, resolution);
        if grid_value < solution.min_value - 1e-9 {
            return Err(Error::CrossValidation {
                candidate_value: solution.min_value,
                grid_value,
            });
        }
    }
    Ok(solution)
}

/// Best refined grid point.
fn grid_minimum(model: &ModelSpec, resolution: u32) -> (Vec<f64>, f64) {
    let grid = barycentric_grid(model.q(), resolution);
    let (best, _) = grid
        .par_iter()
        .map(|z| model.functional_raw(z))
        .enumerate()
        .reduce(
            || (usize::MAX, f64::INFINITY),
            |a, b| if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a },
        );
    let h0 = 1.0 / resolution as f64;
    pattern_search_min(|z| model.functional_raw(z), &grid[best], h0, 1e-13, |_| true)
}

fn grid_equilibria(model: &ModelSpec, resolution: u32) -> Result<EquilibriumSolution> {
    let q = model.q();
    let grid = barycentric_grid(q, resolution);
    let values: Vec<f64> = grid.par_iter().map(|z| model.functional_raw(z)).collect();
    let h = 1.0 / resolution as f64;
    let index: std::collections::HashMap<Vec<u32>, usize> = grid
        .iter()
        .enumerate()
        .map(|(i, z)| (to_key(z, resolution), i))
        .collect();
    // grid points no worse than any edge neighbour
    let minima: Vec<usize> = (0..grid.len())
        .filter(|&i| {
            let key = to_key(&grid[i], resolution);
            (0..q).all(|a| {
                (0..q).all(|b| {
                    if a == b || key[b] == 0 {
                        return true;
                    }
                    let mut nb = key.clone();
                    nb[a] += 1;
                    nb[b] -= 1;
                    index.get(&nb).is_none_or(|&j| values[i] <= values[j])
                })
            })
        })
        .collect();
    let mut refined: Vec<(Vec<f64>, f64)> = minima
        .par_iter()
        .map(|&i| {
            let (z, _) = pattern_search_min(|z| model.functional_raw(z), &grid[i], h, 1e-13, |_| true);
            let z = newton_polish(model, z);
            let v = model.functional_raw(&z);
            (z, v)
        })
        .collect();
    refined.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (z_best, v_best) = refined[0].clone();
    let distinct_ties = refined
        .iter()
        .skip(1)
        .filter(|(z, v)| (v - v_best).abs() < TIE_TOL && l1(z, &z_best) > 1e-4)
        .count();
    let zmax = z_best.iter().copied().fold(0.0, f64::max);
    let qf = q as f64;
    Ok(EquilibriumSolution {
        z_beta: SimplexPoint::from_raw(z_best),
        u: ((qf * zmax - 1.0) / (qf - 1.0)).max(0.0),
        min_value: v_best,
        phase: if distinct_ties > 0 {
            Phase::Multiple
        } else {
            Phase::Unique
        },
    })
}

fn to_key(z: &[f64], resolution: u32) -> Vec<u32> {
    z.iter()
        .map(|x| (x * resolution as f64).round() as u32)
        .collect()
}

/// Newton iterations on the stationarity condition
/// `log z_k + beta H_k'(z_k) = const` restricted to the simplex.
fn newton_polish(model: &ModelSpec, mut z: Vec<f64>) -> Vec<f64> {
    let h = model.interaction();
    let beta = model.beta();
    for _ in 0..20 {
        if z.iter().any(|&x| x <= 0.0) {
            break;
        }
        let grad: Vec<f64> = z
            .iter()
            .enumerate()
            .map(|(k, &x)| x.ln() + beta * h.first(k, x))
            .collect();
        let curv: Vec<f64> = z
            .iter()
            .enumerate()
            .map(|(k, &x)| 1.0 / x + beta * h.second(k, x))
            .collect();
        if curv.iter().any(|&c| c <= 0.0) {
            break;
        }
        let mu = grad.iter().zip(&curv).map(|(g, c)| g / c).sum::<f64>()
            / curv.iter().map(|c| 1.0 / c).sum::<f64>();
        let step: Vec<f64> = grad.iter().zip(&curv).map(|(g, c)| -(g - mu) / c).collect();
        let next: Vec<f64> = z.iter().zip(&step).map(|(a, b)| a + b).collect();
        if next.iter().any(|&x| x <= 0.0)
            || model.functional_raw(&next) > model.functional_raw(&z) + 1e-15
        {
            break;
        }
        let done = step.iter().map(|s| s.abs()).sum::<f64>() < 1e-15;
        z = next;
        if done {
            break;
        }
    }
    let s: f64 = z.iter().sum();
    z.iter_mut().for_each(|x| *x /= s);
    z
}

fn check_qr(q: usize, r: f64) -> Result<()> {
    if q < 2 {
        return Err(invalid("q", format!("must be >= 2, got {q}")));
    }
    if !r.is_finite() || r < 2.0 {
        return Err(invalid("r", format!("must be >= 2, got {r}")));
    }
    Ok(())
}

/// Upper bound `q^(r-1) / (r-1)` where the uniform state stops being a local
/// minimum.
pub fn local_stability_bound(q: usize, r: f64) -> f64 {
    (q as f64).powf(r - 1.0) / (r - 1.0)
}

/// Whether some ordered candidate is at least as good as the uniform state.
fn ordered_wins(q: usize, r: f64, beta: f64) -> bool {
    let u = largest_mean_field_root(q, r, beta);
    if u <= 0.0 {
        return false;
    }
    let model = ModelSpec::gcwp(q, r, beta).expect("validated parameters");
    let v_uniform = model.functional_raw(SimplexPoint::uniform(q).coords());
    let v_ordered = model.functional_raw(SimplexPoint::ordered(q, 0, u).coords());
    v_ordered - v_uniform <= 1e-13
}

/// Equilibrium critical value: the inverse temperature where the ordered
/// candidate's free energy meets the uniform state's.
pub fn find_beta_c(q: usize, r: f64) -> Result<f64> {
    check_qr(q, r)?;
    let mut lo = 0.0;
    let mut hi = local_stability_bound(q, r);
    while !ordered_wins(q, r, hi) {
        lo = hi;
        hi *= 1.5;
        if hi > 1e6 {
            return Err(invalid("beta_c", "no ordered phase found below 1e6"));
        }
    }
    while hi - lo > BETA_TOL {
        let mid = 0.5 * (lo + hi);
        if ordered_wins(q, r, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `max over z_1 in (1/q, 1] of g_1(z) - z_1` on the family
/// `z = (z_1, lambda/(q-1), ..., lambda/(q-1))`, `lambda = 1 - z_1`, together
/// with the maximizing `z_1`. Convexity of `t -> exp(beta t^(r-1))` makes the
/// equal split the worst case for fixed `z_1`.
pub fn beta_s_gap(q: usize, r: f64, beta: f64) -> (f64, f64) {
    let qf = q as f64;
    let lo = 1.0 / qf;
    let gap = |z1: f64| {
        let rest = (1.0 - z1) / (qf - 1.0);
        let e = (beta * (rest.powf(r - 1.0) - z1.powf(r - 1.0))).exp();
        1.0 / (1.0 + (qf - 1.0) * e) - z1
    };
    let point = |i: usize| lo + (1.0 - lo) * i as f64 / BETA_S_SCAN as f64;
    let (mut best_i, mut best) = (1, f64::NEG_INFINITY);
    for i in 1..=BETA_S_SCAN {
        let v = gap(point(i));
        if v > best {
            best = v;
            best_i = i;
        }
    }
    // next to z_1 = 1/q the sign is fixed by the slope test in the caller;
    // refining there only resolves rounding noise
    if best_i == 1 {
        return (best, point(1));
    }
    let a = point(best_i - 1);
    let b = point((best_i + 1).min(BETA_S_SCAN));
    let z = golden_section_max(gap, a, b, 1e-14);
    let refined = gap(z);
    if refined > best {
        (refined, z)
    } else {
        (best, point(best_i))
    }
}

/// Whether `g_k(z) < z_k` for every `z` with `z_k > 1/q`.
fn strictly_contracting(q: usize, r: f64, beta: f64) -> bool {
    // the slope of g_1 - z_1 leaving the uniform point is beta (r-1)/q^(r-1) - 1
    beta * (r - 1.0) / (q as f64).powf(r - 1.0) < 1.0 && beta_s_gap(q, r, beta).0 < 0.0
}

/// Rapid-mixing threshold: supremum of `beta` with `g_k(z) < z_k` whenever
/// `z_k > 1/q`.
pub fn find_beta_s(q: usize, r: f64) -> Result<f64> {
    check_qr(q, r)?;
    let mut lo = 0.0;
    let mut hi = local_stability_bound(q, r);
    while hi - lo > BETA_TOL {
        let mid = 0.5 * (lo + hi);
        if strictly_contracting(q, r, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
