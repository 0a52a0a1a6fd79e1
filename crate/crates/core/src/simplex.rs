//! Points of the probability simplex, its lattice `P_n`, and spin configurations.
//!
//! Spin labels are zero based throughout the library (`0..q`); the CSV writers
//! switch to one-based column names (`count_1`, ...).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on `sum(coords) == 1`.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// A probability vector with `q` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexPoint {
    coords: Vec<f64>,
}

impl SimplexPoint {
    /// Validates and wraps `coords`. Inputs are never renormalized.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::NotInSimplex {
                reason: format!("need at least 2 coordinates, got {}", coords.len()),
            });
        }
        if let Some((k, &x)) = coords
            .iter()
            .enumerate()
            .find(|(_, x)| !x.is_finite() || **x < 0.0)
        {
            return Err(Error::NotInSimplex {
                reason: format!("coordinate {k} is {x}"),
            });
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::NotInSimplex {
                reason: format!("coordinates sum to {sum:.17}"),
            });
        }
        Ok(Self { coords })
    }

    /// For points produced by arithmetic that is already known to stay in the
    /// simplex; clamps rounding noise below zero.
    pub(crate) fn from_raw(mut coords: Vec<f64>) -> Self {
        for x in coords.iter_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        debug_assert!((coords.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        Self { coords }
    }

    pub fn uniform(q: usize) -> Self {
        Self {
            coords: vec![1.0 / q as f64; q],
        }
    }

    /// The basis vector `e^k` (zero-based `k`).
    pub fn vertex(q: usize, k: usize) -> Self {
        let mut coords = vec![0.0; q];
        coords[k] = 1.0;
        Self { coords }
    }

    pub fn q(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn l1_distance(&self, other: &SimplexPoint) -> f64 {
        l1(&self.coords, &other.coords)
    }

    /// `(1 - t) * self + t * other`.
    pub fn lerp(&self, other: &SimplexPoint, t: f64) -> SimplexPoint {
        SimplexPoint::from_raw(lerp(&self.coords, &other.coords, t))
    }

    /// `u e^k + (1 - u)/q (1, ..., 1)`.
    pub fn ordered(q: usize, k: usize, u: f64) -> SimplexPoint {
        let base = (1.0 - u) / q as f64;
        let mut coords = vec![base; q];
        coords[k] += u;
        SimplexPoint::from_raw(coords)
    }
}

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        SimplexPoint::new(v)
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(p: SimplexPoint) -> Self {
        p.coords
    }
}

pub(crate) fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub(crate) fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Spin counts `(n_1, ..., n_q)` with `sum = n`; the point `counts / n` of `P_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct LatticePoint {
    counts: Vec<u32>,
    n: u32,
}

impl LatticePoint {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(crate::error::invalid("counts", "need at least 2 spin values"));
        }
        let n: u64 = counts.iter().map(|&c| c as u64).sum();
        if n == 0 || n > u32::MAX as u64 {
            return Err(crate::error::invalid("counts", format!("total {n} out of range")));
        }
        Ok(Self {
            counts,
            n: n as u32,
        })
    }

    /// All `n` spins equal to `k`.
    pub fn pure(q: usize, n: u32, k: usize) -> Self {
        let mut counts = vec![0; q];
        counts[k] = n;
        Self { counts, n }
    }

    /// Counts as equal as possible, surplus on the lowest labels.
    pub fn balanced(q: usize, n: u32) -> Self {
        let base = n / q as u32;
        let extra = (n % q as u32) as usize;
        let counts = (0..q).map(|k| base + u32::from(k < extra)).collect();
        Self { counts, n }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn q(&self) -> usize {
        self.counts.len()
    }

    pub fn to_simplex(&self) -> SimplexPoint {
        let n = self.n as f64;
        SimplexPoint::from_raw(self.counts.iter().map(|&c| c as f64 / n).collect())
    }

    /// Moves one spin from value `from` to value `to`.
    pub(crate) fn shift(&mut self, from: usize, to: usize) {
        debug_assert!(self.counts[from] > 0);
        self.counts[from] -= 1;
        self.counts[to] += 1;
    }
}

impl TryFrom<Vec<u32>> for LatticePoint {
    type Error = Error;

    fn try_from(v: Vec<u32>) -> Result<Self> {
        LatticePoint::new(v)
    }
}

impl From<LatticePoint> for Vec<u32> {
    fn from(p: LatticePoint) -> Self {
        p.counts
    }
}

/// A spin assignment `omega in Lambda^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    spins: Vec<u16>,
    q: usize,
}

impl Configuration {
    pub fn new(spins: Vec<u16>, q: usize) -> Result<Self> {
        if q < 2 || q > u16::MAX as usize {
            return Err(crate::error::invalid("q", format!("{q} out of range")));
        }
        if spins.is_empty() {
            return Err(crate::error::invalid("spins", "configuration must be nonempty"));
        }
        if let Some(s) = spins.iter().find(|&&s| s as usize >= q) {
            return Err(crate::error::invalid(
                "spins",
                format!("label {s} out of range for q = {q}"),
            ));
        }
        Ok(Self { spins, q })
    }

    pub fn constant(n: usize, q: usize, spin: u16) -> Self {
        assert!((spin as usize) < q);
        Self {
            spins: vec![spin; n],
            q,
        }
    }

    /// A configuration realizing `counts`, spins sorted by label.
    pub fn from_counts(counts: &LatticePoint) -> Self {
        let spins = counts
            .counts()
            .iter()
            .enumerate()
            .flat_map(|(k, &c)| std::iter::repeat_n(k as u16, c as usize))
            .collect();
        Self {
            spins,
            q: counts.q(),
        }
    }

    pub fn n(&self) -> usize {
        self.spins.len()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn spins(&self) -> &[u16] {
        &self.spins
    }

    pub fn spin(&self, vertex: usize) -> usize {
        self.spins[vertex] as usize
    }

    pub(crate) fn set(&mut self, vertex: usize, spin: usize) {
        self.spins[vertex] = spin as u16;
    }

    pub(crate) fn spins_mut(&mut self) -> &mut [u16] {
        &mut self.spins
    }

    pub fn hamming(&self, other: &Configuration) -> usize {
        self.spins
            .iter()
            .zip(&other.spins)
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// `L_n(omega)` as spin counts.
pub fn empirical_measure(config: &Configuration) -> LatticePoint {
    let mut counts = vec![0u32; config.q()];
    for &s in config.spins() {
        counts[s as usize] += 1;
    }
    LatticePoint {
        counts,
        n: config.n() as u32,
    }
}

/// `|P_n| = C(n + q - 1, q - 1)`, saturating.
pub fn lattice_size(n: u32, q: usize) -> u128 {
    let mut acc: u128 = 1;
    for i in 1..q as u128 {
        acc = acc.saturating_mul(n as u128 + i) / i;
    }
    acc
}

/// Every count vector of `P_n` in ascending lexicographic order.
pub fn enumerate_lattice(n: u32, q: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::with_capacity(lattice_size(n, q).min(1 << 24) as usize);
    let mut current = vec![0u32; q];
    fill(&mut out, &mut current, 0, n);
    out
}

fn fill(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, pos: usize, remaining: u32) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for c in 0..=remaining {
        current[pos] = c;
        fill(out, current, pos + 1, remaining - c);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unnormalized_points() {
        assert!(SimplexPoint::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexPoint::new(vec![1.5, -0.5]).is_err());
        assert!(SimplexPoint::new(vec![1.0]).is_err());
        assert!(SimplexPoint::new(vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn empirical_measure_counts_labels() {
        let c = Configuration::new(vec![0, 0, 1, 2], 3).unwrap();
        assert_eq!(empirical_measure(&c).counts(), &[2, 1, 1]);
        let pure = Configuration::constant(5, 2, 0);
        assert_eq!(empirical_measure(&pure).counts(), &[5, 0]);
    }

    #[test]
    fn hamming_to_self_is_zero() {
        let c = Configuration::new(vec![0, 1, 1, 0, 2], 3).unwrap();
        assert_eq!(c.hamming(&c), 0);
        let d = Configuration::new(vec![1, 1, 1, 0, 0], 3).unwrap();
        assert_eq!(c.hamming(&d), 2);
    }

    #[test]
    fn lattice_enumeration_is_complete_and_sorted() {
        for (n, q) in [(1, 2), (4, 3), (7, 4), (10, 2)] {
            let states = enumerate_lattice(n, q);
            assert_eq!(states.len() as u128, lattice_size(n, q));
            assert!(states.windows(2).all(|w| w[0] < w[1]));
            assert!(states.iter().all(|s| s.iter().sum::<u32>() == n));
        }
    }

    #[test]
    fn balanced_counts() {
        assert_eq!(LatticePoint::balanced(3, 10).counts(), &[4, 3, 3]);
        assert_eq!(LatticePoint::balanced(2, 10).counts(), &[5, 5]);
    }

    #[test]
    fn json_arrays_validate_on_parse() {
        let p: SimplexPoint = serde_json::from_str("[0.25,0.75]").unwrap();
        assert_eq!(p.coords(), &[0.25, 0.75]);
        assert!(serde_json::from_str::<SimplexPoint>("[0.25,0.7]").is_err());
        let c: LatticePoint = serde_json::from_str("[3,0,2]").unwrap();
        assert_eq!(c.n(), 5);
        assert_eq!(serde_json::to_string(&c).unwrap(), "[3,0,2]");
    }
}
