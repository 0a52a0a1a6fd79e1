//! The exact Glauber chain projected onto spin counts, and exact mixing
//! times of that projected chain.
//!
//! The update law depends on a configuration only through its counts and the
//! selected spin, so the counts process is itself a Markov chain on `P_n`.
//! Its mixing time lower-bounds that of the full configuration chain.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::gibbs::{guard_lattice, log_weights_normalized};
use crate::glauber::update_probs_into;
use crate::model::{Interaction, ModelSpec};
use crate::simplex::{enumerate_lattice, LatticePoint};

pub const DEFAULT_MAX_STEPS: usize = 10_000_000;

/// Sparse row-stochastic transition matrix on `P_n` (CSR layout, states in
/// ascending lexicographic order of counts).
#[derive(Debug, Clone)]
pub struct LumpedKernel {
    model: ModelSpec,
    n: u32,
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

pub fn build_lumped_kernel(model: &ModelSpec, n: u32) -> Result<LumpedKernel> {
    if n == 0 {
        return Err(invalid("n", "must be positive"));
    }
    guard_lattice(n, model.q())?;
    let q = model.q();
    let states = enumerate_lattice(n, q);
    let index: HashMap<Vec<u32>, usize> = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    let nf = n as f64;
    let rows: Vec<Vec<(usize, f64)>> = states
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut probs = vec![0.0; q];
            let mut target = s.clone();
            let mut diagonal = 0.0;
            let mut row = Vec::with_capacity(q * (q - 1) + 1);
            for m in 0..q {
                if s[m] == 0 {
                    continue;
                }
                update_probs_into(model, s, m, &mut probs);
                let pick = s[m] as f64 / nf;
                for (k, &p) in probs.iter().enumerate() {
                    if k == m {
                        diagonal += pick * p;
                        continue;
                    }
                    target.copy_from_slice(s);
                    target[m] -= 1;
                    target[k] += 1;
                    row.push((index[&target], pick * p));
                }
            }
            row.push((i, diagonal));
            row.sort_by_key(|e| e.0);
            row
        })
        .collect();
    let mut row_ptr = Vec::with_capacity(states.len() + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for row in rows {
        for (c, v) in row {
            cols.push(c);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    Ok(LumpedKernel {
        model: model.clone(),
        n,
        states,
        index,
        row_ptr,
        cols,
        vals,
    })
}

impl LumpedKernel {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Vec<u32>] {
        &self.states
    }

    pub fn state_index(&self, point: &LatticePoint) -> Option<usize> {
        self.index.get(point.counts()).copied()
    }

    /// Nonzero entries `(column, probability)` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(pos) => self.vals[range.start + pos],
            Err(_) => 0.0,
        }
    }

    /// `out = mu P`.
    pub fn step_distribution(&self, mu: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (i, &m) in mu.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[self.cols[p]] += m * self.vals[p];
            }
        }
    }

    /// The Gibbs law of the counts, aligned with [`Self::states`].
    pub fn stationary(&self) -> Vec<f64> {
        log_weights_normalized(&self.model, self.n, &self.states)
    }

    /// `max_x |sum_y P(x, y) - 1|`.
    pub fn max_row_defect(&self) -> f64 {
        (0..self.len())
            .map(|i| (self.row(i).map(|(_, v)| v).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `||pi P - pi||_1`.
    pub fn stationarity_defect(&self, pi: &[f64]) -> f64 {
        let mut out = vec![0.0; pi.len()];
        self.step_distribution(pi, &mut out);
        out.iter().zip(pi).map(|(a, b)| (a - b).abs()).sum()
    }

    /// `max_{x,y} |pi(x) P(x,y) - pi(y) P(y,x)|`.
    pub fn detailed_balance_defect(&self, pi: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            for (j, p) in self.row(i) {
                let back = self.entry(j, i);
                worst = worst.max((pi[i] * p - pi[j] * back).abs());
            }
        }
        worst
    }
}

/// Which starting states enter `d(t) = max_x ||P^t(x, .) - pi||_TV`.
#[derive(Debug, Clone, Default)]
pub enum StartSet {
    /// The `q` pure states and the most balanced state.
    #[default]
    Default,
    /// Every state of `P_n`.
    All,
    Custom(Vec<LatticePoint>),
}

#[derive(Debug, Clone, Serialize)]
pub struct MixingTime {
    /// First `t` with `d(t) <= epsilon`.
    pub t_mix: usize,
    /// `d(0), d(1), ..., d(t_mix)`.
    pub d_curve: Vec<f64>,
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Exact `t_mix(epsilon)` of the counts chain, iterating the law from every
/// start in `starts` until the worst total-variation distance to `pi` drops
/// to `epsilon`.
pub fn exact_mixing_time(
    kernel: &LumpedKernel,
    epsilon: f64,
    starts: &StartSet,
    max_steps: usize,
) -> Result<MixingTime> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid("epsilon", format!("must lie in (0, 1), got {epsilon}")));
    }
    let pi = kernel.stationary();
    let q = kernel.model.q();
    let n = kernel.n;
    let mut start_points: Vec<Vec<u32>> = match starts {
        StartSet::Default => {
            let mut v: Vec<Vec<u32>> = (0..q)
                .map(|k| LatticePoint::pure(q, n, k).counts().to_vec())
                .collect();
            v.push(LatticePoint::balanced(q, n).counts().to_vec());
            v
        }
        StartSet::All => kernel.states.clone(),
        StartSet::Custom(points) => points.iter().map(|p| p.counts().to_vec()).collect(),
    };
    if matches!(kernel.model.interaction(), Interaction::Power { .. }) {
        // permuted starts have identical distance curves under a symmetric H
        let mut seen = std::collections::HashSet::new();
        start_points.retain(|s| {
            let mut key = s.clone();
            key.sort_unstable();
            seen.insert(key)
        });
    }
    let mut laws: Vec<Vec<f64>> = start_points
        .iter()
        .map(|s| {
            let i = *kernel
                .index
                .get(s)
                .ok_or_else(|| invalid("starts", format!("{s:?} is not a state of P_{n}")))?;
            let mut v = vec![0.0; kernel.len()];
            v[i] = 1.0;
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let mut scratch: Vec<Vec<f64>> = vec![vec![0.0; kernel.len()]; laws.len()];
    let parallel = laws.len() > 8;
    let mut d_curve = Vec::new();
    for t in 0..=max_steps {
        let d = if parallel {
            laws.par_iter()
                .map(|mu| total_variation(mu, &pi))
                .reduce(|| 0.0, f64::max)
        } else {
            laws.iter()
                .map(|mu| total_variation(mu, &pi))
                .fold(0.0, f64::max)
        };
        d_curve.push(d);
        if d <= epsilon {
            return Ok(MixingTime { t_mix: t, d_curve });
        }
        if parallel {
            laws.par_iter_mut()
                .zip(scratch.par_iter_mut())
                .for_each(|(mu, out)| {
                    kernel.step_distribution(mu, out);
                    std::mem::swap(mu, out);
                });
        } else {
            for (mu, out) in laws.iter_mut().zip(scratch.iter_mut()) {
                kernel.step_distribution(mu, out);
                std::mem::swap(mu, out);
            }
        }
    }
    Err(Error::NotMixed {
        epsilon,
        max_steps,
        last: *d_curve.last().unwrap_or(&1.0),
    })
}

/// Laws of the counts chain after `0..=steps` updates from `start`.
pub fn evolve_law(kernel: &LumpedKernel, start: &LatticePoint, steps: usize) -> Result<Vec<Vec<f64>>> {
    let i = kernel
        .state_index(start)
        .ok_or_else(|| invalid("start", format!("{:?} is not a state", start.counts())))?;
    let mut mu = vec![0.0; kernel.len()];
    mu[i] = 1.0;
    let mut out = Vec::with_capacity(steps + 1);
    let mut next = vec![0.0; kernel.len()];
    out.push(mu.clone());
    for _ in 0..steps {
        kernel.step_distribution(&mu, &mut next);
        std::mem::swap(&mut mu, &mut next);
        out.push(mu.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glauber::update_distribution_at;
    use crate::simplex::{empirical_measure, Configuration};

    fn gcwp(q: usize, r: f64, beta: f64) -> ModelSpec {
        ModelSpec::gcwp(q, r, beta).unwrap()
    }

    #[test]
    fn single_site_rows_are_uniform() {
        let k = build_lumped_kernel(&gcwp(3, 2.0, 4.0), 1).unwrap();
        for i in 0..k.len() {
            for j in 0..k.len() {
                assert!((k.entry(i, j) - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_beta_is_resampling_chain() {
        let m = gcwp(2, 2.0, 0.0);
        let k = build_lumped_kernel(&m, 4).unwrap();
        // from (a, b): one spin chosen then set uniformly
        let i = k.state_index(&LatticePoint::new(vec![3, 1]).unwrap()).unwrap();
        let up = k.state_index(&LatticePoint::new(vec![4, 0]).unwrap()).unwrap();
        let down = k.state_index(&LatticePoint::new(vec![2, 2]).unwrap()).unwrap();
        assert!((k.entry(i, up) - 0.25 * 0.5).abs() < 1e-15);
        assert!((k.entry(i, down) - 0.75 * 0.5).abs() < 1e-15);
        let pi = k.stationary();
        let binom = [1.0, 4.0, 6.0, 4.0, 1.0].map(|c| c / 16.0);
        for (s, p) in k.states().iter().zip(&pi) {
            assert!((p - binom[s[0] as usize]).abs() < 1e-15);
        }
    }

    /// Aggregates the full 2^n configuration chain onto counts.
    fn brute_force_lumped(m: &ModelSpec, n: usize) -> Vec<Vec<f64>> {
        let q = m.q();
        let configs: Vec<Configuration> = (0..q.pow(n as u32))
            .map(|mut code| {
                let spins = (0..n)
                    .map(|_| {
                        let s = (code % q) as u16;
                        code /= q;
                        s
                    })
                    .collect();
                Configuration::new(spins, q).unwrap()
            })
            .collect();
        let states = enumerate_lattice(n as u32, q);
        let idx = |c: &Configuration| {
            let l = empirical_measure(c);
            states.iter().position(|s| s == l.counts()).unwrap()
        };
        let mut out = vec![vec![0.0; states.len()]; states.len()];
        // every configuration with given counts has the same row; take the first
        let mut done = vec![false; states.len()];
        for c in &configs {
            let i = idx(c);
            if done[i] {
                continue;
            }
            done[i] = true;
            for v in 0..n {
                let p = update_distribution_at(m, c, v).unwrap();
                for (k, pk) in p.iter().enumerate() {
                    let mut s = c.spins().to_vec();
                    s[v] = k as u16;
                    let j = idx(&Configuration::new(s, q).unwrap());
                    out[i][j] += pk / n as f64;
                }
            }
        }
        out
    }

    #[test]
    fn matches_full_chain_aggregation() {
        for (q, n, beta) in [(2, 2, 1.0), (3, 4, 2.0), (2, 6, 3.0)] {
            let m = gcwp(q, 2.0, beta);
            let k = build_lumped_kernel(&m, n as u32).unwrap();
            let brute = brute_force_lumped(&m, n);
            for i in 0..k.len() {
                for j in 0..k.len() {
                    assert!((k.entry(i, j) - brute[i][j]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn rows_are_stochastic_and_pi_is_stationary() {
        let m = gcwp(3, 2.5, 2.0);
        let k = build_lumped_kernel(&m, 25).unwrap();
        assert!(k.max_row_defect() < 1e-12);
        let pi = k.stationary();
        assert!(k.stationarity_defect(&pi) < 1e-10);
        assert!(k.detailed_balance_defect(&pi) < 1e-10);
    }

    #[test]
    fn distance_curve_is_monotone() {
        let m = gcwp(3, 2.0, 1.0);
        let k = build_lumped_kernel(&m, 15).unwrap();
        let res = exact_mixing_time(&k, 0.01, &StartSet::Default, 10_000).unwrap();
        let pi = k.stationary();
        let pure = k.state_index(&LatticePoint::pure(3, 15, 0)).unwrap();
        assert!(res.d_curve[0] >= 1.0 - pi[pure] - 1e-15);
        assert!(res.d_curve.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!(*res.d_curve.last().unwrap() <= 0.01);
        assert!(res.d_curve[res.t_mix - 1] > 0.01);
    }

    #[test]
    fn all_starts_dominate_default_starts() {
        let m = gcwp(3, 2.0, 2.0);
        let k = build_lumped_kernel(&m, 9).unwrap();
        let a = exact_mixing_time(&k, 0.25, &StartSet::Default, 10_000).unwrap();
        let b = exact_mixing_time(&k, 0.25, &StartSet::All, 10_000).unwrap();
        assert!(b.t_mix >= a.t_mix);
        for (x, y) in a.d_curve.iter().zip(&b.d_curve) {
            assert!(y + 1e-15 >= *x);
        }
    }

    #[test]
    fn step_cap_reports_failure() {
        let m = gcwp(3, 2.0, 1.0);
        let k = build_lumped_kernel(&m, 10).unwrap();
        assert!(matches!(
            exact_mixing_time(&k, 1e-6, &StartSet::Default, 5),
            Err(Error::NotMixed { max_steps: 5, .. })
        ));
    }
}
