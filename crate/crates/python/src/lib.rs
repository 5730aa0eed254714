//! Python module `prospect_grid`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use prospect_grid as pg;

fn to_py(e: pg::Error) -> PyErr {
    match e {
        pg::Error::Bracket { .. } | pg::Error::GridTooLarge { .. } | pg::Error::Io { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "ConsumerProfile", from_py_object)]
#[derive(Clone)]
struct PyConsumerProfile {
    inner: pg::ConsumerProfile,
}

#[pymethods]
impl PyConsumerProfile {
    #[new]
    #[pyo3(signature = (r, lam = 1.5, alpha = 0.8, x_max = None, m = 0.0))]
    fn new(r: f64, lam: f64, alpha: f64, x_max: Option<f64>, m: f64) -> PyResult<Self> {
        let mut inner = pg::ConsumerProfile::new(r, lam, alpha).with_min_need(m);
        inner.x_max = x_max;
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn r(&self) -> f64 {
        self.inner.r
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn m(&self) -> f64 {
        self.inner.m
    }

    fn utility(&self, x: f64) -> PyResult<f64> {
        pg::eval_utility(x, &self.inner).map_err(to_py)
    }

    fn saturating_utility(&self, x: f64) -> PyResult<f64> {
        pg::eval_utility_saturating(x, &self.inner).map_err(to_py)
    }

    fn marginal_benefit(&self, x: f64) -> PyResult<f64> {
        pg::marginal_benefit(x, &self.inner).map_err(to_py)
    }

    /// `(x_iee, u_iee)`
    fn individual_ee(&self) -> PyResult<(f64, f64)> {
        let p = pg::individual_ee(&self.inner).map_err(to_py)?;
        Ok((p.x_iee, p.u_iee))
    }

    fn __repr__(&self) -> String {
        format!(
            "ConsumerProfile(r={}, lam={}, alpha={}, m={})",
            self.inner.r, self.inner.lambda, self.inner.alpha, self.inner.m
        )
    }
}

#[pyclass(name = "Population", from_py_object)]
#[derive(Clone)]
struct PyPopulation {
    inner: pg::Population,
}

#[pymethods]
impl PyPopulation {
    #[new]
    #[pyo3(signature = (reference_points, lam = 1.5, alpha = 0.8, min_needs = None))]
    fn new(
        reference_points: Vec<f64>,
        lam: f64,
        alpha: f64,
        min_needs: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let inner = match min_needs {
            Some(m) => pg::Population::with_min_needs(&reference_points, &m, lam, alpha),
            None => pg::Population::new(&reference_points, lam, alpha),
        }
        .map_err(to_py)?;
        Ok(Self { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn reference_points(&self) -> Vec<f64> {
        self.inner.reference_points()
    }

    #[getter]
    fn loss_dominant(&self) -> bool {
        self.inner.in_loss_dominant_regime()
    }

    fn solve_opg(&self, chi: f64) -> PyResult<PyAllocation> {
        pg::solve_opg(chi, &self.inner)
            .map(PyAllocation::from)
            .map_err(to_py)
    }

    fn allocate_ppa(&self, chi: f64) -> PyResult<PyAllocation> {
        pg::allocate_ppa(chi, &self.inner)
            .map(PyAllocation::from)
            .map_err(to_py)
    }

    fn allocate_upa(&self, chi: f64) -> PyResult<PyAllocation> {
        pg::allocate_upa(chi, &self.inner)
            .map(PyAllocation::from)
            .map_err(to_py)
    }

    /// `(chi_star, j_star, welfare)` for cost `a·χ² + b·χ + c`.
    #[pyo3(signature = (a = 0.05, b = 0.5, c = 0.0))]
    fn find_chi_star(&self, a: f64, b: f64, c: f64) -> PyResult<(f64, usize, f64)> {
        let s =
            pg::find_chi_star(&self.inner, &pg::CostModel::quadratic(a, b, c)).map_err(to_py)?;
        Ok((s.chi, s.j_star, s.welfare))
    }

    #[pyo3(signature = (a = 0.05, b = 0.5, c = 0.0, delta = None))]
    fn design_ibr(&self, a: f64, b: f64, c: f64, delta: Option<f64>) -> PyResult<PyTariff> {
        let policy = delta.map_or(pg::DeltaPolicy::Midpoint, pg::DeltaPolicy::Fixed);
        let cost = pg::CostModel::quadratic(a, b, c);
        let inner = pg::design_ibr(&self.inner, &cost, policy).map_err(to_py)?;
        Ok(PyTariff { inner })
    }

    /// `(e_star, x, iterations, residual, converged)`
    #[pyo3(signature = (epsilon = 1e-8, iter_max = 200))]
    fn solve_see_constrained(
        &self,
        epsilon: f64,
        iter_max: usize,
    ) -> PyResult<(f64, Vec<f64>, usize, f64, bool)> {
        let r = pg::solve_see_constrained(&self.inner, epsilon, iter_max).map_err(to_py)?;
        Ok((r.e_star, r.x, r.iterations, r.residual, r.converged))
    }

    fn __repr__(&self) -> String {
        format!(
            "Population(reference_points={:?}, lam={}, alpha={})",
            self.inner.reference_points(),
            self.inner.lambda(),
            self.inner.alpha()
        )
    }
}

#[pyclass(name = "Allocation", frozen)]
struct PyAllocation {
    #[pyo3(get)]
    x: Vec<f64>,
    #[pyo3(get)]
    active: usize,
    #[pyo3(get)]
    objective: f64,
    #[pyo3(get)]
    chi_used: f64,
}

impl From<pg::AllocationResult> for PyAllocation {
    fn from(r: pg::AllocationResult) -> Self {
        Self {
            x: r.x,
            active: r.active,
            objective: r.objective,
            chi_used: r.chi_used,
        }
    }
}

#[pymethods]
impl PyAllocation {
    fn __repr__(&self) -> String {
        format!(
            "Allocation(x={:?}, active={}, objective={})",
            self.x, self.active, self.objective
        )
    }
}

#[pyclass(name = "Tariff", frozen)]
struct PyTariff {
    inner: pg::IbrTariff,
}

#[pymethods]
impl PyTariff {
    #[staticmethod]
    fn flat(p: f64) -> PyResult<Self> {
        Ok(Self {
            inner: pg::constant_rtp_tariff(p).map_err(to_py)?,
        })
    }

    #[getter]
    fn q(&self) -> f64 {
        self.inner.q
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p
    }

    #[getter]
    fn thresholds(&self) -> Vec<f64> {
        self.inner.thresholds.clone()
    }

    #[getter]
    fn chi_star(&self) -> Option<f64> {
        self.inner.design.as_ref().map(|d| d.chi_star)
    }

    fn payment(&self, i: usize, x: f64) -> f64 {
        self.inner.payment(i, x)
    }

    fn best_response(&self, i: usize, profile: &PyConsumerProfile) -> f64 {
        pg::best_response(&self.inner, i, &profile.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Tariff(q={}, p={}, thresholds={:?})",
            self.inner.q, self.inner.p, self.inner.thresholds
        )
    }
}

#[pyfunction]
#[pyo3(signature = (x, r, lam = 1.5, alpha = 0.8))]
fn eval_utility(x: f64, r: f64, lam: f64, alpha: f64) -> PyResult<f64> {
    let p = pg::ConsumerProfile::new(r, lam, alpha);
    p.validate().map_err(to_py)?;
    pg::eval_utility(x, &p).map_err(to_py)
}

#[pyfunction]
fn gamma1_root(a2: f64, lam: f64, alpha: f64) -> PyResult<f64> {
    pg::gamma1_root(a2, lam, alpha).map_err(to_py)
}

/// `(x, y)` split for an aggregate coefficient `a1 ≤ lam`.
#[pyfunction]
fn solve_subproblem_a(c1: f64, r: f64, a1: f64, lam: f64, alpha: f64) -> PyResult<(f64, f64)> {
    let s = pg::solve_subproblem_a(c1, r, a1, lam, alpha).map_err(to_py)?;
    Ok((s.x, s.y))
}

/// `(x, y)` split for an aggregate coefficient `a2 > lam`.
#[pyfunction]
fn solve_subproblem_b(c2: f64, r: f64, a2: f64, lam: f64, alpha: f64) -> PyResult<(f64, f64)> {
    let s = pg::solve_subproblem_b(c2, r, a2, lam, alpha).map_err(to_py)?;
    Ok((s.x, s.y))
}

#[pymodule]
#[pyo3(name = "prospect_grid")]
fn prospect_grid_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConsumerProfile>()?;
    m.add_class::<PyPopulation>()?;
    m.add_class::<PyAllocation>()?;
    m.add_class::<PyTariff>()?;
    m.add_function(wrap_pyfunction!(eval_utility, m)?)?;
    m.add_function(wrap_pyfunction!(gamma1_root, m)?)?;
    m.add_function(wrap_pyfunction!(solve_subproblem_a, m)?)?;
    m.add_function(wrap_pyfunction!(solve_subproblem_b, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
