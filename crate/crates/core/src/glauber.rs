//! Heat-bath Glauber dynamics: exact single-site update probabilities, their
//! large-`n` expansion in terms of `g`, and forward simulation.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::model::{softmax_in_place, ModelSpec};
use crate::rng::RngStream;
use crate::simplex::{empirical_measure, Configuration, LatticePoint, SimplexPoint};

/// Probability that the selected spin, currently `current`, is resampled to
/// each value `k`, given spin counts `counts` (which include the selected
/// spin). Writes into `out`; `O(q)`.
pub(crate) fn update_probs_into(
    model: &ModelSpec,
    counts: &[u32],
    current: usize,
    out: &mut [f64],
) {
    let n: u32 = counts.iter().sum();
    let nf = n as f64;
    let h = model.interaction();
    let c_m = counts[current] as f64;
    // change in H from removing the spin from `current`
    let removal = h.value(current, (c_m - 1.0) / nf) - h.value(current, c_m / nf);
    let scale = -model.beta() * nf;
    for (k, o) in out.iter_mut().enumerate() {
        *o = if k == current {
            0.0
        } else {
            let c_k = counts[k] as f64;
            let addition = h.value(k, (c_k + 1.0) / nf) - h.value(k, c_k / nf);
            scale * (removal + addition)
        };
    }
    softmax_in_place(out);
}

/// `P(sigma -> sigma_{i,e^k})` for every `k`, where `counts = L_n(sigma)` and
/// `current = sigma_i`.
pub fn update_distribution(
    model: &ModelSpec,
    counts: &LatticePoint,
    current: usize,
) -> Result<Vec<f64>> {
    model.check_dim(counts.q())?;
    if current >= model.q() || counts.counts()[current] == 0 {
        return Err(invalid(
            "current",
            format!("spin {current} does not occur in counts {:?}", counts.counts()),
        ));
    }
    let mut out = vec![0.0; model.q()];
    update_probs_into(model, counts.counts(), current, &mut out);
    Ok(out)
}

/// [`update_distribution`] at `vertex` of a configuration (counts the
/// configuration once).
pub fn update_distribution_at(
    model: &ModelSpec,
    config: &Configuration,
    vertex: usize,
) -> Result<Vec<f64>> {
    if vertex >= config.n() {
        return Err(invalid("vertex", format!("{vertex} >= n = {}", config.n())));
    }
    update_distribution(model, &empirical_measure(config), config.spin(vertex))
}

/// First-order expansion `g_k(z) + (beta/n) phi_{k,e^m}(z)` of the update
/// probabilities at `z = L_n(sigma)` with `sigma_i = e^m`, where
/// `phi_{k,e^m} = -1/2 <QH, grad d_k Gamma> + (QH)_m (grad d_k Gamma)_m`,
/// `QH = (H_1'', ..., H_q'')` and the Hessian of `Gamma` is taken at
/// `-beta grad H(z)`.
pub fn update_distribution_expansion(
    model: &ModelSpec,
    z: &SimplexPoint,
    current: usize,
    n: u32,
) -> Result<Vec<f64>> {
    model.check_dim(z.q())?;
    if current >= model.q() {
        return Err(invalid("current", format!("{current} >= q = {}", model.q())));
    }
    if n == 0 {
        return Err(invalid("n", "must be positive"));
    }
    let zc = z.coords();
    let g = model.g_raw(zc);
    let qh: Vec<f64> = zc
        .iter()
        .enumerate()
        .map(|(j, &t)| model.interaction().second(j, t))
        .collect();
    let qh_mean: f64 = qh.iter().zip(&g).map(|(a, b)| a * b).sum();
    let factor = model.beta() / n as f64;
    Ok(g.iter()
        .enumerate()
        .map(|(k, &gk)| {
            // (grad d_k Gamma)_j = g_k (delta_kj - g_j)
            let half = -0.5 * gk * (qh[k] - qh_mean);
            let own = qh[current] * gk * (f64::from(u8::from(k == current)) - g[current]);
            gk + factor * (half + own)
        })
        .collect())
}

/// One Glauber update: pick a uniform vertex, resample its spin. `counts`
/// must equal `L_n(config)` and is kept in sync. Returns the chosen vertex.
pub fn glauber_step(
    model: &ModelSpec,
    config: &mut Configuration,
    counts: &mut LatticePoint,
    rng: &mut RngStream,
    scratch: &mut [f64],
) -> usize {
    let vertex = rng.index(config.n());
    let current = config.spin(vertex);
    update_probs_into(model, counts.counts(), current, scratch);
    let next = rng.categorical(scratch);
    if next != current {
        config.set(vertex, next);
        counts.shift(current, next);
    }
    vertex
}

/// A Glauber chain with its incrementally maintained counts.
#[derive(Debug, Clone)]
pub struct GlauberChain {
    model: ModelSpec,
    config: Configuration,
    counts: LatticePoint,
    scratch: Vec<f64>,
}

impl GlauberChain {
    pub fn new(model: ModelSpec, config: Configuration) -> Result<Self> {
        model.check_dim(config.q())?;
        let counts = empirical_measure(&config);
        let scratch = vec![0.0; model.q()];
        Ok(Self {
            model,
            config,
            counts,
            scratch,
        })
    }

    pub fn step(&mut self, rng: &mut RngStream) -> usize {
        glauber_step(
            &self.model,
            &mut self.config,
            &mut self.counts,
            rng,
            &mut self.scratch,
        )
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn counts(&self) -> &LatticePoint {
        &self.counts
    }

    pub fn into_config(self) -> Configuration {
        self.config
    }
}

/// Spin counts sampled along a run.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub times: Vec<u64>,
    pub counts: Vec<Vec<u32>>,
}

/// Runs `steps` updates from `initial`, recording counts at `t = 0` and every
/// `record_every` steps.
pub fn simulate(
    model: &ModelSpec,
    initial: Configuration,
    steps: u64,
    record_every: u64,
    rng: &mut RngStream,
) -> Result<Trajectory> {
    if record_every == 0 {
        return Err(invalid("record_every", "must be positive"));
    }
    let mut chain = GlauberChain::new(model.clone(), initial)?;
    let mut traj = Trajectory {
        times: vec![0],
        counts: vec![chain.counts().counts().to_vec()],
    };
    for t in 1..=steps {
        chain.step(rng);
        if t % record_every == 0 {
            traj.times.push(t);
            traj.counts.push(chain.counts().counts().to_vec());
        }
    }
    Ok(traj)
}

/// A configuration with iid uniform spins.
pub fn random_configuration(n: usize, q: usize, rng: &mut RngStream) -> Configuration {
    let spins = (0..n).map(|_| rng.index(q) as u16).collect();
    Configuration::new(spins, q).expect("labels below q")
}

/// A uniformly random arrangement of the given counts.
pub fn shuffled_configuration(counts: &LatticePoint, rng: &mut RngStream) -> Configuration {
    let mut config = Configuration::from_counts(counts);
    let spins = config.spins_mut();
    for i in (1..spins.len()).rev() {
        let j = rng.index(i + 1);
        spins.swap(i, j);
    }
    config
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gcwp(q: usize, r: f64, beta: f64) -> ModelSpec {
        ModelSpec::gcwp(q, r, beta).unwrap()
    }

    #[test]
    fn single_vertex_is_uniform() {
        let m = gcwp(4, 3.0, 2.0);
        let p = update_distribution(&m, &LatticePoint::pure(4, 1, 2), 2).unwrap();
        assert!(p.iter().all(|x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn zero_beta_is_uniform() {
        let m = gcwp(3, 2.0, 0.0);
        let c = LatticePoint::new(vec![5, 2, 3]).unwrap();
        let p = update_distribution(&m, &c, 1).unwrap();
        assert!(p.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn two_spin_hand_value() {
        // candidates (2,0) with H = -1/2 and (1,1) with H = -1/4
        let m = gcwp(2, 2.0, 1.0);
        let config = Configuration::new(vec![0, 0], 2).unwrap();
        let p = update_distribution_at(&m, &config, 0).unwrap();
        let expect = 1.0 / (1.0 + (-0.5f64).exp());
        assert!((p[0] - expect).abs() < 1e-15);
        assert!((p[0] - 0.622_459_331_201_854_6).abs() < 1e-12);
    }

    #[test]
    fn rebuilt_configuration_agrees_with_increments() {
        let m = gcwp(3, 2.5, 1.7);
        let config = Configuration::new(vec![0, 2, 1, 1, 0, 0, 2, 1, 0], 3).unwrap();
        for vertex in 0..config.n() {
            let p = update_distribution_at(&m, &config, vertex).unwrap();
            // brute force: rebuild sigma_{i,e^k} and evaluate exp(-beta n H)
            let n = config.n() as f64;
            let logits: Vec<f64> = (0..3)
                .map(|k| {
                    let mut s = config.spins().to_vec();
                    s[vertex] = k as u16;
                    let c = empirical_measure(&Configuration::new(s, 3).unwrap());
                    -m.beta() * n * m.hamiltonian_raw(c.to_simplex().coords())
                })
                .collect();
            let mx = logits.iter().copied().fold(f64::MIN, f64::max);
            let w: Vec<f64> = logits.iter().map(|l| (l - mx).exp()).collect();
            let tot: f64 = w.iter().sum();
            for k in 0..3 {
                assert!((p[k] - w[k] / tot).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn expansion_is_exact_at_zero_beta() {
        let m = gcwp(3, 2.0, 0.0);
        let z = SimplexPoint::new(vec![0.5, 0.3, 0.2]).unwrap();
        let e = update_distribution_expansion(&m, &z, 0, 10).unwrap();
        assert!(e.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn expansion_tends_to_g() {
        let m = gcwp(3, 2.0, 1.0);
        let z = SimplexPoint::new(vec![0.5, 0.3, 0.2]).unwrap();
        let g = m.g_raw(z.coords());
        let e = update_distribution_expansion(&m, &z, 1, 1_000_000_000).unwrap();
        for (a, b) in e.iter().zip(&g) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn counts_track_configuration() {
        let m = gcwp(3, 2.0, 1.5);
        let mut rng = RngStream::new(5, 0);
        let mut chain = GlauberChain::new(m, Configuration::constant(20, 3, 0)).unwrap();
        for _ in 0..5000 {
            chain.step(&mut rng);
            assert_eq!(chain.counts().n(), 20);
        }
        assert_eq!(empirical_measure(chain.config()), *chain.counts());
    }

    #[test]
    fn fixed_stream_reproduces_trajectory() {
        let m = gcwp(3, 2.0, 1.0);
        let run = || {
            let mut rng = RngStream::new(42, 9);
            simulate(&m, Configuration::constant(30, 3, 1), 2000, 7, &mut rng).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.times, b.times);
        assert_eq!(a.counts, b.counts);
    }
}
