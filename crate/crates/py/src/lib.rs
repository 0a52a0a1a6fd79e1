//! Python bindings: `import gibbslab`.

use gibbslab_core::conditions::{
    check_condition_contraction, check_condition_local_with, check_condition_riemann, ConditionReport, LocalOptions,
};
use gibbslab_core::coupling::{run_coupling, CouplingInit, CouplingOptions};
use gibbslab_core::equilibrium::{self, EquilibriumOptions};
use gibbslab_core::glauber::{self, random_configuration};
use gibbslab_core::lumped::{build_lumped_kernel, exact_mixing_time, StartSet, DEFAULT_MAX_STEPS};
use gibbslab_core::path::{aggregate_variation_closed_form, aggregate_variation_quadrature};
use gibbslab_core::rng::RngStream;
use gibbslab_core::{gibbs, model, Configuration, Error, LatticePoint, ModelSpec, SimplexPoint};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(gibbslab, ComputationError, PyRuntimeError, "A computation failed or did not converge.");

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NotInSimplex { .. }
        | Error::DimensionMismatch { .. }
        | Error::InvalidParameter { .. }
        | Error::RelativeEntropyUndefined { .. }
        | Error::RequiresPowerInteraction
        | Error::GridSearchTooLarge { .. }
        | Error::StateSpaceTooLarge { .. }
        | Error::DegeneratePath => PyValueError::new_err(e.to_string()),
        _ => ComputationError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for gibbslab_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Generalized Curie-Weiss-Potts model `H(z) = -(1/r) sum z_k^r` at
/// inverse temperature `beta`.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    inner: ModelSpec,
}

impl PyModel {
    fn r(&self) -> f64 {
        self.inner.power_exponent().expect("built from the power family")
    }

    fn point(&self, z: Vec<f64>) -> PyResult<SimplexPoint> {
        let p = SimplexPoint::new(z).py()?;
        if p.q() != self.inner.q() {
            return Err(py_err(Error::DimensionMismatch {
                expected: self.inner.q(),
                found: p.q(),
            }));
        }
        Ok(p)
    }
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (q, beta, r = 2.0))]
    fn new(q: usize, beta: f64, r: f64) -> PyResult<Self> {
        Ok(PyModel {
            inner: ModelSpec::gcwp(q, r, beta).py()?,
        })
    }

    #[getter]
    fn q(&self) -> usize {
        self.inner.q()
    }

    #[getter(r)]
    fn get_r(&self) -> f64 {
        self.r()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta()
    }

    fn with_beta(&self, beta: f64) -> PyResult<Self> {
        Ok(PyModel {
            inner: self.inner.with_beta(beta).py()?,
        })
    }

    fn __repr__(&self) -> String {
        format!("Model(q={}, beta={}, r={})", self.inner.q(), self.inner.beta(), self.r())
    }

    fn hamiltonian(&self, z: Vec<f64>) -> PyResult<f64> {
        model::hamiltonian(&self.inner, &self.point(z)?).py()
    }

    /// `g(z) = softmax(-beta grad H(z))`.
    fn g(&self, z: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(model::g_function(&self.inner, &self.point(z)?).py()?.into_coords())
    }

    fn free_energy(&self, z: Vec<f64>) -> PyResult<f64> {
        model::free_energy(&self.inner, &self.point(z)?).py()
    }

    fn functional(&self, z: Vec<f64>) -> PyResult<f64> {
        model::macrostate_functional(&self.inner, &self.point(z)?).py()
    }

    /// Glauber update law for a vertex holding spin `current` when the
    /// configuration has the given spin counts.
    fn update_distribution(&self, counts: Vec<u32>, current: usize) -> PyResult<Vec<f64>> {
        glauber::update_distribution(&self.inner, &LatticePoint::new(counts).py()?, current).py()
    }

    /// Returns a dict with `z_beta`, `u`, `min_value` and `phase`.
    fn equilibrium<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let opts = EquilibriumOptions {
            grid_search: self.inner.q() <= 4,
            grid_resolution: None,
        };
        let sol = equilibrium::find_equilibria_with(&self.inner, &opts).py()?;
        let d = PyDict::new(py);
        d.set_item("z_beta", sol.z_beta.coords().to_vec())?;
        d.set_item("u", sol.u)?;
        d.set_item("min_value", sol.min_value)?;
        d.set_item(
            "phase",
            match sol.phase {
                equilibrium::Phase::Unique => "unique",
                equilibrium::Phase::Multiple => "multiple",
            },
        )?;
        Ok(d)
    }

    /// Exact law of the spin counts: list of `(counts, probability)`.
    fn gibbs_weights(&self, n: u32) -> PyResult<Vec<(Vec<u32>, f64)>> {
        let w = gibbs::gibbs_weights(&self.inner, n).py()?;
        Ok(w.iter().map(|(s, p)| (s.to_vec(), p)).collect())
    }

    /// Aggregate variation of `g` along the segment from the uniform point to
    /// `z`: closed form, or adaptive quadrature when `quadrature` is set.
    #[pyo3(signature = (z, quadrature = false))]
    fn aggregate_variation(&self, z: Vec<f64>, quadrature: bool) -> PyResult<f64> {
        let z = self.point(z)?;
        if quadrature {
            aggregate_variation_quadrature(&self.inner, &SimplexPoint::uniform(self.inner.q()), &z).py()
        } else {
            aggregate_variation_closed_form(&self.inner, &z).py()
        }
    }
}

#[pyfunction]
#[pyo3(signature = (q, r = 2.0))]
fn beta_c(q: usize, r: f64) -> PyResult<f64> {
    equilibrium::find_beta_c(q, r).py()
}

#[pyfunction]
#[pyo3(signature = (q, r = 2.0))]
fn beta_s(q: usize, r: f64) -> PyResult<f64> {
    equilibrium::find_beta_s(q, r).py()
}

fn report<'py>(py: Python<'py>, rep: ConditionReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("condition", format!("{:?}", rep.condition).to_lowercase())?;
    d.set_item("holds", rep.holds)?;
    d.set_item("sup_ratio", rep.sup_ratio)?;
    d.set_item("argmax", rep.argmax)?;
    d.set_item("beta", rep.beta)?;
    d.set_item("q", rep.q)?;
    d.set_item("r", rep.r)?;
    d.set_item("epsilon", rep.epsilon)?;
    d.set_item("grid_resolution", rep.grid_resolution)?;
    if let Some(a) = rep.analytic_ratio {
        d.set_item("analytic_ratio", a)?;
    }
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (model, grid_resolution = None))]
fn check_contraction<'py>(
    py: Python<'py>,
    model: &PyModel,
    grid_resolution: Option<u32>,
) -> PyResult<Bound<'py, PyDict>> {
    let rep = py.detach(|| check_condition_contraction(&model.inner, grid_resolution)).py()?;
    report(py, rep)
}

#[pyfunction]
#[pyo3(signature = (model, epsilon, grid_resolution = None))]
fn check_riemann<'py>(
    py: Python<'py>,
    model: &PyModel,
    epsilon: f64,
    grid_resolution: Option<u32>,
) -> PyResult<Bound<'py, PyDict>> {
    let rep = py.detach(|| check_condition_riemann(&model.inner, epsilon, grid_resolution)).py()?;
    report(py, rep)
}

#[pyfunction]
#[pyo3(signature = (model, directions = 500, seed = 0))]
fn check_local<'py>(py: Python<'py>, model: &PyModel, directions: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let opts = LocalOptions {
        directions,
        seed,
        ..LocalOptions::default()
    };
    let rep = py.detach(|| check_condition_local_with(&model.inner, &opts)).py()?;
    report(py, rep)
}

/// Exact mixing time of the counts chain: `(t_mix, [d(0), ..., d(t_mix)])`.
#[pyfunction]
#[pyo3(signature = (model, n, epsilon = 0.25, max_steps = DEFAULT_MAX_STEPS))]
fn mixing_time(py: Python<'_>, model: &PyModel, n: u32, epsilon: f64, max_steps: usize) -> PyResult<(usize, Vec<f64>)> {
    let mt = py
        .detach(|| {
            let k = build_lumped_kernel(&model.inner, n)?;
            exact_mixing_time(&k, epsilon, &StartSet::Default, max_steps)
        })
        .py()?;
    Ok((mt.t_mix, mt.d_curve))
}

/// Glauber trajectory: `(times, counts)`. `init` is "pure" or "random".
#[pyfunction]
#[pyo3(signature = (model, n, steps, seed, record_every = 1, init = "pure"))]
fn simulate(
    py: Python<'_>,
    model: &PyModel,
    n: usize,
    steps: u64,
    seed: u64,
    record_every: u64,
    init: &str,
) -> PyResult<(Vec<u64>, Vec<Vec<u32>>)> {
    let q = model.inner.q();
    let mut rng = RngStream::new(seed, 0);
    let initial = match init {
        "pure" => Configuration::constant(n, q, 0),
        "random" => random_configuration(n, q, &mut rng),
        other => return Err(PyValueError::new_err(format!("unknown init {other:?}"))),
    };
    let traj = py
        .detach(|| glauber::simulate(&model.inner, initial, steps, record_every, &mut rng))
        .py()?;
    Ok((traj.times, traj.counts))
}

/// Greedy coupling trials. Returns a dict with `median`, `q90`,
/// `censored_fraction`, `n`, `coupling_times`, `censored` and
/// `mean_distance` (list of `(t, d)`).
#[pyfunction]
#[pyo3(signature = (model, n, trials, seed, init = "worst-pure-pair", cap = None))]
fn couple<'py>(
    py: Python<'py>,
    model: &PyModel,
    n: usize,
    trials: usize,
    seed: u64,
    init: &str,
    cap: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let init: CouplingInit = init.parse().py()?;
    let mut opts = CouplingOptions::new(init, trials, seed);
    if let Some(c) = cap {
        opts.cap = c;
    }
    let run = py.detach(|| run_coupling(&model.inner, n, &opts)).py()?;
    let s = run.summary();
    let d = PyDict::new(py);
    d.set_item("median", s.median)?;
    d.set_item("q90", s.q90)?;
    d.set_item("censored_fraction", s.censored_fraction)?;
    d.set_item("n", s.n)?;
    d.set_item("coupling_times", run.outcomes.iter().map(|o| o.coupling_time).collect::<Vec<_>>())?;
    d.set_item("censored", run.outcomes.iter().map(|o| o.censored).collect::<Vec<_>>())?;
    d.set_item("mean_distance", run.mean_distance)?;
    d.set_item("approximate_start", run.approximate_start)?;
    Ok(d)
}

#[pymodule]
pub fn gibbslab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add("ComputationError", m.py().get_type::<ComputationError>())?;
    m.add_function(wrap_pyfunction!(beta_c, m)?)?;
    m.add_function(wrap_pyfunction!(beta_s, m)?)?;
    m.add_function(wrap_pyfunction!(check_contraction, m)?)?;
    m.add_function(wrap_pyfunction!(check_riemann, m)?)?;
    m.add_function(wrap_pyfunction!(check_local, m)?)?;
    m.add_function(wrap_pyfunction!(mixing_time, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(couple, m)?)?;
    Ok(())
}
