//! Numerical checks of the three contraction conditions behind aggregate
//! path coupling: the global variation-to-distance ratio, its Riemann-sum
//! version on monotone paths, and the local Lipschitz ratio of `g` at the
//! equilibrium macrostate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{default_grid_resolution, find_equilibria_with, EquilibriumOptions, Phase};
use crate::error::{invalid, Error, Result};
use crate::grid::{barycentric_grid, pattern_search_max};
use crate::model::ModelSpec;
use crate::path::{aggregate_variation_closed_form, aggregate_variation_quadrature, build_monotone_path, riemann_variation};
use crate::rng::RngStream;
use crate::simplex::{l1, SimplexPoint};

/// Radius of the ball around `z_beta` left to the local checker.
pub const EXCLUSION_RADIUS: f64 = 1e-4;
const REFINE_MIN_STEP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    Contraction,
    Riemann,
    Local,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub condition: ConditionKind,
    pub holds: bool,
    pub sup_ratio: f64,
    pub argmax: Option<Vec<f64>>,
    pub beta: f64,
    pub q: usize,
    pub r: Option<f64>,
    pub epsilon: Option<f64>,
    pub grid_resolution: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic_ratio: Option<f64>,
}

impl ConditionReport {
    fn new(kind: ConditionKind, model: &ModelSpec, sup: f64, argmax: Option<Vec<f64>>) -> Self {
        Self {
            condition: kind,
            holds: sup < 1.0,
            sup_ratio: sup,
            argmax,
            beta: model.beta(),
            q: model.q(),
            r: model.power_exponent(),
            epsilon: None,
            grid_resolution: None,
            analytic_ratio: None,
        }
    }
}

/// The unique equilibrium macrostate, or an error naming `beta`.
pub fn unique_equilibrium(model: &ModelSpec) -> Result<SimplexPoint> {
    let options = EquilibriumOptions {
        grid_search: model.q() <= 4 || model.power_exponent().is_none(),
        grid_resolution: None,
    };
    let sol = find_equilibria_with(model, &options)?;
    if sol.phase != Phase::Unique {
        return Err(Error::NonUniqueEquilibrium { beta: model.beta() });
    }
    Ok(sol.z_beta)
}

fn checked_grid(model: &ModelSpec, grid_resolution: Option<u32>) -> Result<(u32, Vec<Vec<f64>>)> {
    let q = model.q();
    if q > 4 {
        return Err(Error::GridSearchTooLarge { q });
    }
    let res = grid_resolution.unwrap_or_else(|| default_grid_resolution(q));
    if res == 0 {
        return Err(invalid("grid_resolution", "must be positive"));
    }
    Ok((res, barycentric_grid(q, res)))
}

/// `D(z_beta, z) / ||z - z_beta||_1` along the straight segment.
pub fn variation_ratio(model: &ModelSpec, z_beta: &SimplexPoint, z: &[f64]) -> Result<f64> {
    let dist = l1(z_beta.coords(), z);
    let zp = SimplexPoint::from_raw(z.to_vec());
    let uniform = SimplexPoint::uniform(model.q());
    let variation = if model.power_exponent().is_some() && z_beta.l1_distance(&uniform) < 1e-15 {
        aggregate_variation_closed_form(model, &zp)?
    } else {
        aggregate_variation_quadrature(model, z_beta, &zp)?
    };
    Ok(variation / dist)
}

fn grid_sup(
    points: &[Vec<f64>],
    min_dist: f64,
    z_beta: &SimplexPoint,
    ratio: impl Fn(&[f64]) -> Result<f64> + Sync,
) -> Result<Option<(Vec<f64>, f64)>> {
    let values: Vec<Result<Option<(usize, f64)>>> = points
        .par_iter()
        .enumerate()
        .map(|(i, z)| {
            if l1(z, z_beta.coords()) < min_dist {
                return Ok(None);
            }
            ratio(z).map(|v| Some((i, v)))
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for v in values {
        if let Some((i, r)) = v? {
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((i, r));
            }
        }
    }
    Ok(best.map(|(i, r)| (points[i].clone(), r)))
}

/// Supremum over a barycentric grid (refined by compass search around the
/// best grid point) of the straight-line variation ratio, outside a
/// `1e-4` ball around `z_beta`.
pub fn check_condition_contraction(model: &ModelSpec, grid_resolution: Option<u32>) -> Result<ConditionReport> {
    let z_beta = unique_equilibrium(model)?;
    let (res, grid) = checked_grid(model, grid_resolution)?;
    let ratio = |z: &[f64]| variation_ratio(model, &z_beta, z);
    let best = grid_sup(&grid, EXCLUSION_RADIUS, &z_beta, ratio)?;
    let (argmax, sup) = match best {
        None => (None, 0.0),
        Some((z, v)) => {
            let (zr, vr) = pattern_search_max(
                |x| ratio(x).unwrap_or(f64::NEG_INFINITY),
                &z,
                1.0 / res as f64,
                REFINE_MIN_STEP,
                |x| l1(x, z_beta.coords()) >= EXCLUSION_RADIUS,
            );
            if vr > v {
                (Some(zr), vr)
            } else {
                (Some(z), v)
            }
        }
    };
    let mut report = ConditionReport::new(ConditionKind::Contraction, model, sup, argmax);
    report.grid_resolution = Some(res);
    Ok(report)
}

/// Supremum over grid points `z` with `||z - z_beta||_1 >= epsilon` of the
/// Riemann-sum variation along the monotone path from `z_beta` to `z`,
/// divided by `||z - z_beta||_1`.
pub fn check_condition_riemann(model: &ModelSpec, epsilon: f64, grid_resolution: Option<u32>) -> Result<ConditionReport> {
    if !(epsilon > 0.0) {
        return Err(invalid("epsilon", format!("must be positive, got {epsilon}")));
    }
    let z_beta = unique_equilibrium(model)?;
    let (res, grid) = checked_grid(model, grid_resolution)?;
    let ratio = |z: &[f64]| {
        let zp = SimplexPoint::from_raw(z.to_vec());
        let path = build_monotone_path(&z_beta, &zp, epsilon)?;
        Ok(riemann_variation(model, &path)? / z_beta.l1_distance(&zp))
    };
    let best = grid_sup(&grid, epsilon, &z_beta, ratio)?;
    let (argmax, sup) = match best {
        None => (None, 0.0),
        Some((z, v)) => (Some(z), v),
    };
    let mut report = ConditionReport::new(ConditionKind::Riemann, model, sup, argmax);
    report.epsilon = Some(epsilon);
    report.grid_resolution = Some(res);
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct LocalOptions {
    pub radii: Vec<f64>,
    pub directions: usize,
    pub seed: u64,
}

impl Default for LocalOptions {
    fn default() -> Self {
        Self {
            radii: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            directions: 500,
            seed: 0,
        }
    }
}

/// `beta (r - 1) / q^(r - 1)`, the local ratio of `g` at the uniform point
/// for the power interaction.
pub fn analytic_local_ratio(q: usize, r: f64, beta: f64) -> f64 {
    beta * (r - 1.0) / (q as f64).powf(r - 1.0)
}

/// Largest `||g(z) - g(z_beta)||_1 / rho` over `z = z_beta + rho v` for each
/// radius, with the same tangent directions `v` (`||v||_1 = 1`) at every
/// radius.
pub fn local_ratio_profile(model: &ModelSpec, z_beta: &SimplexPoint, options: &LocalOptions) -> Result<Vec<(f64, f64)>> {
    let q = model.q();
    if options.directions == 0 || options.radii.is_empty() {
        return Err(invalid("directions", "need at least one direction and one radius"));
    }
    let mut rng = RngStream::new(options.seed, 0);
    let dirs: Vec<Vec<f64>> = (0..options.directions)
        .map(|_| {
            let mut v: Vec<f64> = (0..q).map(|_| 2.0 * rng.uniform() - 1.0).collect();
            let mean = v.iter().sum::<f64>() / q as f64;
            v.iter_mut().for_each(|x| *x -= mean);
            let norm: f64 = v.iter().map(|x| x.abs()).sum();
            v.iter_mut().for_each(|x| *x /= norm);
            v
        })
        .collect();
    let zb = z_beta.coords();
    let g0 = model.g_raw(zb);
    options
        .radii
        .iter()
        .map(|&rho| {
            let mut best: Option<f64> = None;
            for v in &dirs {
                let z: Vec<f64> = zb.iter().zip(v).map(|(a, b)| a + rho * b).collect();
                if z.iter().any(|&x| x < 0.0) {
                    continue;
                }
                let ratio = l1(&model.g_raw(&z), &g0) / rho;
                best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
            }
            best.map(|b| (rho, b))
                .ok_or_else(|| invalid("radii", format!("no direction stays in the simplex at radius {rho}")))
        })
        .collect()
}

/// Estimates `limsup_{z -> z_beta} ||g(z) - g(z_beta)||_1 / ||z - z_beta||_1`
/// from shrinking spheres, extrapolating linearly in the radius from the two
/// smallest radii.
pub fn check_condition_local_with(model: &ModelSpec, options: &LocalOptions) -> Result<ConditionReport> {
    let z_beta = unique_equilibrium(model)?;
    let mut profile = local_ratio_profile(model, &z_beta, options)?;
    profile.sort_by(|a, b| a.0.total_cmp(&b.0));
    let estimate = match profile.as_slice() {
        [(r1, s1), (r2, s2), ..] if r2 > r1 => (r2 * s1 - r1 * s2) / (r2 - r1),
        [(_, s), ..] => *s,
        [] => unreachable!(),
    };
    let estimate = estimate.max(0.0);
    let mut report = ConditionReport::new(ConditionKind::Local, model, estimate, None);
    if let Some(r) = model.power_exponent() {
        if z_beta.l1_distance(&SimplexPoint::uniform(model.q())) < 1e-15 {
            report.analytic_ratio = Some(analytic_local_ratio(model.q(), r, model.beta()));
        }
    }
    Ok(report)
}

pub fn check_condition_local(model: &ModelSpec) -> Result<ConditionReport> {
    check_condition_local_with(model, &LocalOptions::default())
}
