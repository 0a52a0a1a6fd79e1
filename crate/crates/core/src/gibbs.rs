//! Exact law of the empirical measure under the Gibbs ensemble on `P_n`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{log_sum_exp, ModelSpec};
use crate::simplex::{enumerate_lattice, lattice_size, LatticePoint};

/// Largest `|P_n|` any exact routine will enumerate.
pub const MAX_LATTICE_STATES: u128 = 5_000_000;

pub(crate) fn guard_lattice(n: u32, q: usize) -> Result<()> {
    let states = lattice_size(n, q);
    if states > MAX_LATTICE_STATES {
        return Err(Error::StateSpaceTooLarge {
            states,
            limit: MAX_LATTICE_STATES,
        });
    }
    Ok(())
}

/// `ln k!` for `k = 0..=n`.
pub(crate) fn log_factorials(n: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// `P_{n,beta}(L_n = counts / n)` for every lattice point, in the order of
/// [`enumerate_lattice`].
#[derive(Debug, Clone)]
pub struct GibbsWeights {
    n: u32,
    states: Vec<Vec<u32>>,
    probs: Vec<f64>,
    index: HashMap<Vec<u32>, usize>,
}

impl GibbsWeights {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn states(&self) -> &[Vec<u32>] {
        &self.states
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, point: &LatticePoint) -> Option<f64> {
        self.index.get(point.counts()).map(|&i| self.probs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.states
            .iter()
            .map(Vec::as_slice)
            .zip(self.probs.iter().copied())
    }
}

/// `P(L_n = nu) ∝ multinomial(n; counts) q^(-n) exp(-beta n H(nu))`,
/// accumulated in log space.
pub fn gibbs_weights(model: &ModelSpec, n: u32) -> Result<GibbsWeights> {
    if n == 0 {
        return Err(crate::error::invalid("n", "must be positive"));
    }
    guard_lattice(n, model.q())?;
    let states = enumerate_lattice(n, model.q());
    let probs = log_weights_normalized(model, n, &states);
    let index = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    Ok(GibbsWeights {
        n,
        states,
        probs,
        index,
    })
}

pub(crate) fn log_weights_normalized(model: &ModelSpec, n: u32, states: &[Vec<u32>]) -> Vec<f64> {
    let lf = log_factorials(n);
    let nf = n as f64;
    let mut z = vec![0.0; model.q()];
    let logw: Vec<f64> = states
        .iter()
        .map(|s| {
            for (zk, &c) in z.iter_mut().zip(s) {
                *zk = c as f64 / nf;
            }
            let multinom = lf[n as usize] - s.iter().map(|&c| lf[c as usize]).sum::<f64>();
            multinom - model.beta() * nf * model.hamiltonian_raw(&z)
        })
        .collect();
    // the q^(-n) factor cancels on normalization
    let total = log_sum_exp(&logw);
    logw.iter().map(|w| (w - total).exp()).collect()
}
