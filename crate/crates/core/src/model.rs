//! Separable interaction functions and the static functions of a mean-field
//! Gibbs ensemble with uniform single-spin law: the Hamiltonian density `H`,
//! the log moment generating function `Gamma`, the self-map `g` of the
//! simplex, relative entropy, the Gibbs rate function and the free energy
//! functional `G_beta`.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::simplex::SimplexPoint;

/// One scalar function per coordinate, `H(z) = sum_k H_k(z_k)`, concave.
///
/// Implementations must be finite on `[0, 1]`; the conjugate computation in
/// [`free_energy`] additionally evaluates `first` on a growing bracket around
/// zero, so it should be defined on the whole real line.
pub trait SeparableInteraction: Send + Sync + fmt::Debug {
    fn value(&self, k: usize, t: f64) -> f64;
    fn first(&self, k: usize, t: f64) -> f64;
    fn second(&self, k: usize, t: f64) -> f64;
}

#[derive(Clone)]
pub enum Interaction {
    /// `H_k(t) = -t^r / r`, the generalized Curie-Weiss-Potts family.
    Power { r: f64 },
    Custom(Arc<dyn SeparableInteraction>),
}

impl fmt::Debug for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Interaction::Power { r } => write!(f, "Power {{ r: {r} }}"),
            Interaction::Custom(h) => write!(f, "Custom({h:?})"),
        }
    }
}

impl Interaction {
    #[inline]
    pub fn value(&self, k: usize, t: f64) -> f64 {
        match self {
            Interaction::Power { r } => -t.powf(*r) / r,
            Interaction::Custom(h) => h.value(k, t),
        }
    }

    #[inline]
    pub fn first(&self, k: usize, t: f64) -> f64 {
        match self {
            Interaction::Power { r } => -t.powf(r - 1.0),
            Interaction::Custom(h) => h.first(k, t),
        }
    }

    #[inline]
    pub fn second(&self, k: usize, t: f64) -> f64 {
        match self {
            Interaction::Power { r } => {
                if *r == 2.0 {
                    -1.0
                } else {
                    -(r - 1.0) * t.powf(r - 2.0)
                }
            }
            Interaction::Custom(h) => h.second(k, t),
        }
    }
}

/// Model parameters: number of spin values, inverse temperature, interaction.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    q: usize,
    beta: f64,
    interaction: Interaction,
}

impl ModelSpec {
    /// Generalized Curie-Weiss-Potts model, `H(z) = -(1/r) sum z_k^r`.
    pub fn gcwp(q: usize, r: f64, beta: f64) -> Result<Self> {
        if !r.is_finite() || r < 2.0 {
            return Err(invalid("r", format!("must be finite and >= 2, got {r}")));
        }
        Self::new(q, beta, Interaction::Power { r })
    }

    pub fn custom(q: usize, beta: f64, interaction: Arc<dyn SeparableInteraction>) -> Result<Self> {
        Self::new(q, beta, Interaction::Custom(interaction))
    }

    fn new(q: usize, beta: f64, interaction: Interaction) -> Result<Self> {
        if q < 2 {
            return Err(invalid("q", format!("must be >= 2, got {q}")));
        }
        if !beta.is_finite() || beta < 0.0 {
            return Err(invalid("beta", format!("must be finite and >= 0, got {beta}")));
        }
        let model = Self {
            q,
            beta,
            interaction,
        };
        let h = model.hamiltonian_raw(SimplexPoint::uniform(q).coords());
        if !h.is_finite() {
            return Err(invalid("interaction", "H is not finite at the uniform point"));
        }
        Ok(model)
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.q, beta, self.interaction.clone())
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn interaction(&self) -> &Interaction {
        &self.interaction
    }

    /// The exponent `r` for the power family.
    pub fn power_exponent(&self) -> Option<f64> {
        match self.interaction {
            Interaction::Power { r } => Some(r),
            Interaction::Custom(_) => None,
        }
    }

    pub(crate) fn require_power(&self) -> Result<f64> {
        self.power_exponent().ok_or(Error::RequiresPowerInteraction)
    }

    pub(crate) fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.q {
            return Err(Error::DimensionMismatch {
                expected: self.q,
                found: len,
            });
        }
        Ok(())
    }

    pub(crate) fn hamiltonian_raw(&self, z: &[f64]) -> f64 {
        z.iter()
            .enumerate()
            .map(|(k, &t)| self.interaction.value(k, t))
            .sum()
    }

    /// `-beta * grad H(z)`, the argument at which `grad Gamma` gives `g(z)`.
    pub(crate) fn field(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(k, &t)| -self.beta * self.interaction.first(k, t))
            .collect()
    }

    /// `g(z)` on raw coordinates, written into `out`.
    pub(crate) fn g_into(&self, z: &[f64], out: &mut [f64]) {
        for (k, (o, &t)) in out.iter_mut().zip(z).enumerate() {
            *o = -self.beta * self.interaction.first(k, t);
        }
        softmax_in_place(out);
    }

    pub(crate) fn g_raw(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; z.len()];
        self.g_into(z, &mut out);
        out
    }

    /// Directional derivative `<grad g_k(z), v>` for every `k`:
    /// `g_k (a_k - sum_j g_j a_j)` with `a_j = -beta H_j''(z_j) v_j`.
    pub(crate) fn g_directional(&self, z: &[f64], v: &[f64]) -> Vec<f64> {
        let g = self.g_raw(z);
        let a: Vec<f64> = z
            .iter()
            .zip(v)
            .enumerate()
            .map(|(j, (&t, &vj))| -self.beta * self.interaction.second(j, t) * vj)
            .collect();
        let mean: f64 = g.iter().zip(&a).map(|(gj, aj)| gj * aj).sum();
        g.iter().zip(&a).map(|(gk, ak)| gk * (ak - mean)).collect()
    }
}

/// `H(z) = sum_k H_k(z_k)`.
pub fn hamiltonian(model: &ModelSpec, z: &SimplexPoint) -> Result<f64> {
    model.check_dim(z.q())?;
    Ok(model.hamiltonian_raw(z.coords()))
}

/// `Gamma(z) = log((1/q) sum_k exp(z_k))`.
pub fn log_mgf(z: &[f64]) -> f64 {
    log_sum_exp(z) - (z.len() as f64).ln()
}

pub fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + z.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub(crate) fn softmax_in_place(x: &mut [f64]) {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in x.iter_mut() {
        *v = (*v - m).exp();
        total += *v;
    }
    for v in x.iter_mut() {
        *v /= total;
    }
}

/// `g(z) = [grad Gamma](-beta grad H(z))`; a softmax of `beta z_k^(r-1)` for
/// the power family.
pub fn g_function(model: &ModelSpec, z: &SimplexPoint) -> Result<SimplexPoint> {
    model.check_dim(z.q())?;
    Ok(SimplexPoint::from_raw(model.g_raw(z.coords())))
}

/// `R(nu | rho) = sum nu_k log(nu_k / rho_k)` with `0 log 0 = 0`.
pub fn relative_entropy(nu: &SimplexPoint, rho: &SimplexPoint) -> Result<f64> {
    if nu.q() != rho.q() {
        return Err(Error::DimensionMismatch {
            expected: rho.q(),
            found: nu.q(),
        });
    }
    let mut total = 0.0;
    for (k, (&a, &b)) in nu.coords().iter().zip(rho.coords()).enumerate() {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Err(Error::RelativeEntropyUndefined { coordinate: k });
        }
        total += a * (a / b).ln();
    }
    Ok(total)
}

/// Relative entropy with respect to the uniform law.
pub(crate) fn entropy_to_uniform(z: &[f64]) -> f64 {
    let q = z.len() as f64;
    z.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * (x * q).ln())
        .sum()
}

/// `R(z | rho) + beta H(z)` with uniform `rho`; the functional minimized by
/// equilibrium macrostates.
pub fn macrostate_functional(model: &ModelSpec, z: &SimplexPoint) -> Result<f64> {
    model.check_dim(z.q())?;
    Ok(model.functional_raw(z.coords()))
}

impl ModelSpec {
    pub(crate) fn functional_raw(&self, z: &[f64]) -> f64 {
        entropy_to_uniform(z) + self.beta * self.hamiltonian_raw(z)
    }
}

/// `I_beta(z) = R(z | rho) + beta H(z) - min_value`, where `min_value` is the
/// infimum of the same functional over the simplex.
pub fn rate_function(model: &ModelSpec, z: &SimplexPoint, min_value: f64) -> Result<f64> {
    let rho = SimplexPoint::uniform(model.q());
    let r = relative_entropy(z, &rho)?;
    Ok(r + model.beta() * hamiltonian(model, z)? - min_value)
}

/// Free energy functional `G_beta(z) = beta (-H)*(-grad H(z)) - Gamma(-beta grad H(z))`.
pub fn free_energy(model: &ModelSpec, z: &SimplexPoint) -> Result<f64> {
    free_energy_at(model, z.coords())
}

/// [`free_energy`] at an arbitrary point of `R^q` (where `H` is defined).
pub fn free_energy_at(model: &ModelSpec, z: &[f64]) -> Result<f64> {
    model.check_dim(z.len())?;
    let mut conj = 0.0;
    for (k, &t) in z.iter().enumerate() {
        let s = -model.interaction().first(k, t);
        conj += conjugate_of_negated(model.interaction(), k, s)?;
    }
    let field = model.field(z);
    Ok(model.beta() * conj - log_mgf(&field))
}

/// The 1-D Legendre transform `(-H_k)*(s) = sup_x { x s + H_k(x) }`.
///
/// Closed form `s^(r') / r'` (`r' = r / (r - 1)`, `s >= 0`) for the power
/// family; golden-section maximization otherwise.
pub fn conjugate_of_negated(interaction: &Interaction, k: usize, s: f64) -> Result<f64> {
    match interaction {
        Interaction::Power { r } => {
            if s < 0.0 {
                return Err(invalid(
                    "s",
                    format!("power conjugate needs a nonnegative slope, got {s}"),
                ));
            }
            let rp = r / (r - 1.0);
            Ok(s.powf(rp) / rp)
        }
        Interaction::Custom(h) => golden_conjugate(h.as_ref(), k, s),
    }
}

fn golden_conjugate(h: &dyn SeparableInteraction, k: usize, s: f64) -> Result<f64> {
    // objective x s + H_k(x) is concave; its derivative s + H_k'(x) must be
    // positive at -B and negative at +B
    let slope = |x: f64| s + h.first(k, x);
    let mut b = 1.0;
    while !(slope(-b) > 0.0 && slope(b) < 0.0) {
        b *= 2.0;
        if b > 1e12 {
            return Err(Error::NonCoercive { slope: s });
        }
    }
    let f = |x: f64| x * s + h.value(k, x);
    let x = golden_section_max(f, -b, b, 1e-12);
    Ok(f(x))
}

/// Maximizes a unimodal `f` on `[lo, hi]` to absolute tolerance `tol`.
pub(crate) fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    let mid = 0.5 * (lo + hi);
    [lo, mid, hi]
        .into_iter()
        .max_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap()
}
