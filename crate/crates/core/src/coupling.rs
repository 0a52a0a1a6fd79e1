//! Greedy coupling of two Glauber chains sharing the vertex choice.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gibbs::{gibbs_weights, MAX_LATTICE_STATES};
use crate::glauber::{random_configuration, shuffled_configuration, update_probs_into, GlauberChain};
use crate::model::ModelSpec;
use crate::rng::RngStream;
use crate::simplex::{empirical_measure, lattice_size, Configuration, LatticePoint};

pub const DEFAULT_CAP: u64 = 1_000_000_000;

/// Two coupled configurations with their counts and Hamming distance.
#[derive(Debug, Clone)]
pub struct CouplingTrial {
    sigma: Configuration,
    tau: Configuration,
    counts_sigma: LatticePoint,
    counts_tau: LatticePoint,
    distance: usize,
    time: u64,
    rng: RngStream,
    p: Vec<f64>,
    r: Vec<f64>,
    shared: Vec<f64>,
}

impl CouplingTrial {
    pub fn new(sigma: Configuration, tau: Configuration, rng: RngStream) -> Result<Self> {
        same_shape(&sigma, &tau)?;
        let distance = sigma.hamming(&tau);
        let q = sigma.q();
        Ok(Self {
            counts_sigma: empirical_measure(&sigma),
            counts_tau: empirical_measure(&tau),
            sigma,
            tau,
            distance,
            time: 0,
            rng,
            p: vec![0.0; q],
            r: vec![0.0; q],
            shared: vec![0.0; q],
        })
    }

    pub fn sigma(&self) -> &Configuration {
        &self.sigma
    }

    pub fn tau(&self) -> &Configuration {
        &self.tau
    }

    pub fn distance(&self) -> usize {
        self.distance
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn is_coalesced(&self) -> bool {
        self.distance == 0
    }
}

/// What happened at the chosen vertex during one coupled update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepRecord {
    pub vertex: usize,
    pub sigma_spin: usize,
    pub tau_spin: usize,
}

/// One greedy-coupled update: a shared uniform vertex; with probability
/// `P = sum_l min(p_l, q_l)` both chains take spin `l` w.p. `P_l / P`,
/// otherwise they take distinct spins `(l, m)` w.p.
/// `(p_l - P_l)(q_m - P_m) / (1 - P)^2`.
pub fn greedy_coupling_step(model: &ModelSpec, trial: &mut CouplingTrial) -> StepRecord {
    let t = trial;
    let vertex = t.rng.index(t.sigma.n());
    let (a, b) = (t.sigma.spin(vertex), t.tau.spin(vertex));
    let (s_new, t_new) = if t.distance == 0 {
        update_probs_into(model, t.counts_sigma.counts(), a, &mut t.p);
        let k = t.rng.categorical(&t.p);
        (k, k)
    } else {
        update_probs_into(model, t.counts_sigma.counts(), a, &mut t.p);
        update_probs_into(model, t.counts_tau.counts(), b, &mut t.r);
        let mut total = 0.0;
        for k in 0..t.p.len() {
            t.shared[k] = t.p[k].min(t.r[k]);
            total += t.shared[k];
        }
        if 1.0 - total <= 0.0 || t.rng.uniform() < total {
            let k = t.rng.categorical(&t.shared);
            (k, k)
        } else {
            for k in 0..t.p.len() {
                t.p[k] -= t.shared[k];
                t.r[k] -= t.shared[k];
            }
            let l = t.rng.categorical(&t.p);
            let m = t.rng.categorical(&t.r);
            assert_ne!(l, m, "greedy residuals must have disjoint support");
            (l, m)
        }
    };
    let before = usize::from(a != b);
    if s_new != a {
        t.sigma.set(vertex, s_new);
        t.counts_sigma.shift(a, s_new);
    }
    if t_new != b {
        t.tau.set(vertex, t_new);
        t.counts_tau.shift(b, t_new);
    }
    t.distance = t.distance - before + usize::from(s_new != t_new);
    t.time += 1;
    StepRecord {
        vertex,
        sigma_spin: s_new,
        tau_spin: t_new,
    }
}

fn same_shape(a: &Configuration, b: &Configuration) -> Result<()> {
    if a.n() != b.n() || a.q() != b.q() {
        return Err(invalid(
            "tau",
            format!("shape (n={}, q={}) differs from (n={}, q={})", b.n(), b.q(), a.n(), a.q()),
        ));
    }
    Ok(())
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

fn kappa_from_counts(
    model: &ModelSpec,
    cs: &LatticePoint,
    ct: &LatticePoint,
    a: usize,
    b: usize,
    buf: &mut [Vec<f64>; 2],
) -> f64 {
    let [p, r] = buf;
    update_probs_into(model, cs.counts(), a, p);
    update_probs_into(model, ct.counts(), b, r);
    tv(p, r)
}

/// Total-variation distance between the update distributions of `sigma` and
/// `tau` at `vertex`: the probability the greedy coupling updates them
/// differently there.
pub fn kappa(model: &ModelSpec, sigma: &Configuration, tau: &Configuration, vertex: usize) -> Result<f64> {
    same_shape(sigma, tau)?;
    model.check_dim(sigma.q())?;
    if vertex >= sigma.n() {
        return Err(invalid("vertex", format!("{vertex} >= n = {}", sigma.n())));
    }
    let q = model.q();
    let mut buf = [vec![0.0; q], vec![0.0; q]];
    Ok(kappa_from_counts(
        model,
        &empirical_measure(sigma),
        &empirical_measure(tau),
        sigma.spin(vertex),
        tau.spin(vertex),
        &mut buf,
    ))
}

/// `kappa_j` for every vertex; repeated spin pairs share one evaluation.
pub fn kappa_profile(model: &ModelSpec, sigma: &Configuration, tau: &Configuration) -> Result<Vec<f64>> {
    same_shape(sigma, tau)?;
    model.check_dim(sigma.q())?;
    let q = model.q();
    let (cs, ct) = (empirical_measure(sigma), empirical_measure(tau));
    let mut cache = vec![f64::NAN; q * q];
    let mut buf = [vec![0.0; q], vec![0.0; q]];
    Ok(sigma
        .spins()
        .iter()
        .zip(tau.spins())
        .map(|(&a, &b)| {
            let (a, b) = (a as usize, b as usize);
            let slot = &mut cache[a * q + b];
            if slot.is_nan() {
                *slot = kappa_from_counts(model, &cs, &ct, a, b, &mut buf);
            }
            *slot
        })
        .collect())
}

/// Exact `E[d(X, Y)]` after one greedy-coupled step from `(sigma, tau)`:
/// `d - (1/n) sum_{j in I} (1 - kappa_j) + (1/n) sum_{j not in I} kappa_j`.
pub fn expected_onestep_distance(model: &ModelSpec, sigma: &Configuration, tau: &Configuration) -> Result<f64> {
    let kappas = kappa_profile(model, sigma, tau)?;
    let n = sigma.n() as f64;
    let mut d = 0usize;
    let mut change = 0.0;
    for ((a, b), k) in sigma.spins().iter().zip(tau.spins()).zip(&kappas) {
        if a != b {
            d += 1;
            change -= 1.0 - k;
        } else {
            change += k;
        }
    }
    Ok(d as f64 + change / n)
}

/// The one-step bound `d - (d/n)(1 - kappa) + ((n-d)/n) kappa` with `kappa`
/// the largest per-vertex `kappa_j`.
pub fn onestep_distance_bound(model: &ModelSpec, sigma: &Configuration, tau: &Configuration) -> Result<f64> {
    let kappas = kappa_profile(model, sigma, tau)?;
    let k = kappas.iter().copied().fold(0.0, f64::max);
    let n = sigma.n() as f64;
    let d = sigma.hamming(tau) as f64;
    Ok(d - d / n * (1.0 - k) + (n - d) / n * k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingInit {
    /// All spins 1 against all spins 2.
    WorstPurePair,
    /// Independent uniform configurations.
    RandomPair,
    /// A Gibbs-distributed configuration against all spins 1.
    EquilibriumVsPure,
}

impl std::str::FromStr for CouplingInit {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "worst_pure_pair" => Ok(Self::WorstPurePair),
            "random_pair" => Ok(Self::RandomPair),
            "equilibrium_vs_pure" => Ok(Self::EquilibriumVsPure),
            _ => Err(invalid("init", format!("unknown start pair {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingOptions {
    pub init: CouplingInit,
    pub trials: usize,
    pub seed: u64,
    /// Steps after which a trial is censored.
    pub cap: u64,
    /// Mean-distance curve sampled every `curve_stride` steps.
    pub curve_stride: u64,
    /// Curve samples kept per trial.
    pub curve_points: usize,
    /// Burn-in steps per site for `equilibrium_vs_pure` above the exact
    /// sampling limit.
    pub burn_in_sweeps: u64,
}

impl CouplingOptions {
    pub fn new(init: CouplingInit, trials: usize, seed: u64) -> Self {
        Self {
            init,
            trials,
            seed,
            cap: DEFAULT_CAP,
            curve_stride: 1,
            curve_points: 100_000,
            burn_in_sweeps: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    pub coupling_time: u64,
    pub censored: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CouplingRun {
    pub n: usize,
    pub outcomes: Vec<TrialOutcome>,
    /// `(t, mean distance over trials)`.
    pub mean_distance: Vec<(u64, f64)>,
    /// Set when the equilibrium start came from a burn-in run.
    pub approximate_start: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingSummary {
    pub median: f64,
    pub q90: f64,
    pub censored_fraction: f64,
    pub n: usize,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl CouplingRun {
    /// Median and 0.9-quantile of the coupling times; censored trials enter
    /// at the cap.
    pub fn summary(&self) -> CouplingSummary {
        let mut times: Vec<f64> = self.outcomes.iter().map(|o| o.coupling_time as f64).collect();
        times.sort_by(f64::total_cmp);
        let censored = self.outcomes.iter().filter(|o| o.censored).count();
        CouplingSummary {
            median: quantile(&times, 0.5),
            q90: quantile(&times, 0.9),
            censored_fraction: censored as f64 / self.outcomes.len().max(1) as f64,
            n: self.n,
        }
    }

    /// Fraction of trials not yet coalesced after `t` steps.
    pub fn survival(&self, t: u64) -> f64 {
        let alive = self
            .outcomes
            .iter()
            .filter(|o| o.censored || o.coupling_time > t)
            .count();
        alive as f64 / self.outcomes.len().max(1) as f64
    }
}

fn initial_pair(
    model: &ModelSpec,
    n: usize,
    opts: &CouplingOptions,
    exact_start: Option<&[(Vec<u32>, f64)]>,
    rng: &mut RngStream,
) -> Result<(Configuration, Configuration)> {
    let q = model.q();
    Ok(match opts.init {
        CouplingInit::WorstPurePair => (Configuration::constant(n, q, 0), Configuration::constant(n, q, 1)),
        CouplingInit::RandomPair => (random_configuration(n, q, rng), random_configuration(n, q, rng)),
        CouplingInit::EquilibriumVsPure => {
            let sigma = match exact_start {
                Some(table) => {
                    let probs: Vec<f64> = table.iter().map(|e| e.1).collect();
                    let i = rng.categorical(&probs);
                    shuffled_configuration(&LatticePoint::new(table[i].0.clone())?, rng)
                }
                None => {
                    let mut chain = GlauberChain::new(model.clone(), random_configuration(n, q, rng))?;
                    for _ in 0..opts.burn_in_sweeps.saturating_mul(n as u64) {
                        chain.step(rng);
                    }
                    chain.into_config()
                }
            };
            (sigma, Configuration::constant(n, q, 0))
        }
    })
}

/// Runs `opts.trials` independent greedy-coupled pairs until coalescence.
/// Trial `i` draws from stream `(seed, i)`, so results do not depend on the
/// thread count.
pub fn run_coupling(model: &ModelSpec, n: usize, opts: &CouplingOptions) -> Result<CouplingRun> {
    if n == 0 {
        return Err(invalid("n", "must be positive"));
    }
    if opts.trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    if opts.curve_stride == 0 {
        return Err(invalid("curve_stride", "must be positive"));
    }
    let q = model.q();
    if q < 2 && opts.init == CouplingInit::WorstPurePair {
        return Err(invalid("init", "worst_pure_pair needs q >= 2"));
    }
    let exact = opts.init == CouplingInit::EquilibriumVsPure
        && lattice_size(n as u32, q) <= MAX_LATTICE_STATES;
    let table: Option<Vec<(Vec<u32>, f64)>> = if exact {
        let w = gibbs_weights(model, n as u32)?;
        Some(w.iter().map(|(s, p)| (s.to_vec(), p)).collect())
    } else {
        None
    };
    let results: Vec<Result<(TrialOutcome, Vec<u32>)>> = (0..opts.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(opts.seed, i as u64);
            let (sigma, tau) = initial_pair(model, n, opts, table.as_deref(), &mut rng)?;
            let mut trial = CouplingTrial::new(sigma, tau, rng)?;
            let mut curve = vec![trial.distance() as u32];
            while !trial.is_coalesced() && trial.time() < opts.cap {
                greedy_coupling_step(model, &mut trial);
                if trial.time() % opts.curve_stride == 0 && curve.len() < opts.curve_points {
                    curve.push(trial.distance() as u32);
                }
            }
            let outcome = TrialOutcome {
                coupling_time: trial.time(),
                censored: !trial.is_coalesced(),
            };
            Ok((outcome, curve))
        })
        .collect();
    let mut outcomes = Vec::with_capacity(opts.trials);
    let mut curves = Vec::with_capacity(opts.trials);
    for r in results {
        let (o, c) = r?;
        outcomes.push(o);
        curves.push(c);
    }
    let len = curves.iter().map(Vec::len).max().unwrap_or(0);
    let mut sums = vec![0u64; len];
    for c in &curves {
        for (s, &d) in sums.iter_mut().zip(c) {
            *s += d as u64;
        }
    }
    let trials = opts.trials as f64;
    let mean_distance = sums
        .iter()
        .enumerate()
        .map(|(i, &s)| (i as u64 * opts.curve_stride, s as f64 / trials))
        .collect();
    Ok(CouplingRun {
        n,
        outcomes,
        mean_distance,
        approximate_start: opts.init == CouplingInit::EquilibriumVsPure && !exact,
    })
}
