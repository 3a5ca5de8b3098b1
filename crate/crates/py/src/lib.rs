//! Python bindings for `lichlab`.
//!
//! Structured results (reports, chains, schedules) cross the boundary as
//! plain dicts built from their serde form; numeric profiles as lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use lichlab::conformal::{self, ConformalParams};
use lichlab::moser;
use lichlab::orchestrator::{self, RunConfig, RunOptions};
use lichlab::params::{self as core_params, classify_regime, ConstantChain};
use lichlab::solver::{self, SolverOptions};
use lichlab::verify::{self, CheckOptions};
use lichlab::{LabError, ModelManifold};

fn to_py_err(e: LabError) -> PyErr {
    match e {
        LabError::DimensionTooSmall(_)
        | LabError::InvalidParams(_)
        | LabError::InvalidIota(_)
        | LabError::InvalidExponent(_)
        | LabError::NegativeRadius(_)
        | LabError::SupportViolation(_)
        | LabError::EmptySuite
        | LabError::ConfigParse(_)
        | LabError::UnknownAxis(_)
        | LabError::EmptySweep
        | LabError::DomainTooSmall { .. }
        | LabError::PositivityViolated(_)
        | LabError::NonconstantCurvature
        | LabError::OutOfRegime(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Coefficients of `Δv + μv + a·v^{p+1} + b·v^{1−q} = 0` on a ball of
/// radius `radius` in the model space of curvature `−kappa`.
#[pyclass(name = "Params", frozen, from_py_object)]
#[derive(Clone)]
struct PyParams {
    inner: core_params::Params,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (n, mu, a, b, p, q, kappa = 0.0, radius = 1.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(n: u32, mu: f64, a: f64, b: f64, p: f64, q: f64, kappa: f64, radius: f64) -> PyResult<Self> {
        core_params::Params::new(n, mu, a, b, p, q, kappa, radius)
            .map(|inner| PyParams { inner })
            .map_err(to_py_err)
    }

    #[getter]
    fn n(&self) -> u32 {
        self.inner.n
    }
    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }
    #[getter]
    fn a(&self) -> f64 {
        self.inner.a
    }
    #[getter]
    fn b(&self) -> f64 {
        self.inner.b
    }
    #[getter]
    fn p(&self) -> f64 {
        self.inner.p
    }
    #[getter]
    fn q(&self) -> f64 {
        self.inner.q
    }
    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }
    #[getter]
    fn radius(&self) -> f64 {
        self.inner.radius
    }

    /// `{"verdict", "theorem_source", "notes"}`.
    fn classify<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &classify_regime(&self.inner))
    }

    /// Positive constant solution, if the nonlinearity has one.
    fn constant_solution(&self) -> Option<f64> {
        solver::constant_solution(&self.inner)
    }

    /// Derived constants of the gradient estimate, or `None` outside every
    /// regime where the estimate applies.
    #[pyo3(signature = (c_n = 1.0))]
    fn constant_chain<'py>(&self, py: Python<'py>, c_n: f64) -> PyResult<Option<Bound<'py, PyAny>>> {
        match ConstantChain::build(&self.inner, c_n) {
            Ok(chain) => to_py(py, &chain).map(Some),
            Err(LabError::OutOfRegime(_)) => Ok(None),
            Err(e) => Err(to_py_err(e)),
        }
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "Params(n={}, mu={}, a={}, b={}, p={}, q={}, kappa={}, radius={})",
            p.n, p.mu, p.a, p.b, p.p, p.q, p.kappa, p.radius
        )
    }
}

/// A shooting solution together with its log transform `u = −ln v`,
/// `f = u'²`.
#[pyclass(name = "Profile", frozen)]
struct PyProfile {
    profile: solver::SolutionProfile,
    log: Option<solver::LogProfile>,
    status: solver::SolveStatus,
}

#[pymethods]
impl PyProfile {
    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.profile.grid.clone()
    }
    #[getter]
    fn v(&self) -> Vec<f64> {
        self.profile.v.clone()
    }
    #[getter]
    fn dv(&self) -> Vec<f64> {
        self.profile.dv.clone()
    }
    #[getter]
    fn ddv(&self) -> Vec<f64> {
        self.profile.ddv.clone()
    }
    #[getter]
    fn f(&self) -> PyResult<Vec<f64>> {
        Ok(self.log_profile()?.f.clone())
    }
    #[getter]
    fn u(&self) -> PyResult<Vec<f64>> {
        Ok(self.log_profile()?.u.clone())
    }

    /// `{"kind": "Complete"}` or the positivity / ceiling event.
    #[getter]
    fn status<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.status)
    }

    #[getter]
    fn complete(&self) -> bool {
        self.status == solver::SolveStatus::Complete
    }

    fn residual(&self) -> f64 {
        solver::residual(&self.profile)
    }

    /// All applicable pointwise checks for the profile, as a list of dicts.
    #[pyo3(signature = (c_n = 1.0, f_skip = None, tolerance = None))]
    fn check_lemmas<'py>(
        &self,
        py: Python<'py>,
        c_n: f64,
        f_skip: Option<f64>,
        tolerance: Option<f64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let params = self.profile.params;
        let chain = ConstantChain::build(&params, c_n).map_err(to_py_err)?;
        let mut opts = CheckOptions::default();
        if let Some(x) = f_skip {
            opts.f_skip = x;
        }
        if let Some(x) = tolerance {
            opts.tolerance = x;
        }
        let reports = verify::check_all_lemmas(self.log_profile()?, &params, &chain, &opts).map_err(to_py_err)?;
        to_py(py, &reports)
    }

    /// `sup_{B_{R/2}} f · R²/(1 + √κR)²`.
    #[pyo3(signature = (radius = None))]
    fn empirical_constant(&self, radius: Option<f64>) -> PyResult<f64> {
        let params = self.profile.params;
        let radius = radius.unwrap_or(params.radius);
        verify::empirical_constant(self.log_profile()?, radius, params.kappa).map_err(to_py_err)
    }

    /// Normalized `L^θ` norms of `f` on the shrinking balls of the
    /// iteration. Without a chain (`c_n = None`) the schedule starts at
    /// `theta0`.
    #[pyo3(signature = (c_n = Some(1.0), k_max = 12, theta0 = 16.0))]
    fn cascade<'py>(
        &self,
        py: Python<'py>,
        c_n: Option<f64>,
        k_max: usize,
        theta0: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let params = self.profile.params;
        let lp = self.log_profile()?;
        let m = self.profile.manifold;
        let report = match c_n {
            Some(c_n) => {
                let chain = ConstantChain::build(&params, c_n).map_err(to_py_err)?;
                moser::cascade(&m, lp, &chain, k_max)
            }
            None => core_params::schedule(params.n, theta0, params.radius, k_max)
                .and_then(|s| moser::cascade_schedule(&m, lp, &s, params.radius)),
        }
        .map_err(to_py_err)?;
        to_py(py, &report)
    }

    fn __len__(&self) -> usize {
        self.profile.len()
    }
}

impl PyProfile {
    fn log_profile(&self) -> PyResult<&solver::LogProfile> {
        self.log.as_ref().ok_or_else(|| PyValueError::new_err("profile is not positive; no log transform"))
    }
}

/// Shoots from `v(0) = v0` to `r_max` (default `params.radius`).
#[pyfunction]
#[pyo3(signature = (params, v0, r_max = None, fixed_steps = None, grid_points = 2001, tol = 1e-8))]
fn solve(
    params: &PyParams,
    v0: f64,
    r_max: Option<f64>,
    fixed_steps: Option<usize>,
    grid_points: usize,
    tol: f64,
) -> PyResult<PyProfile> {
    let p = params.inner;
    let m = ModelManifold::new(p.n, p.kappa).map_err(to_py_err)?;
    let opts = SolverOptions { fixed_steps, grid_points, tol, ..SolverOptions::default() };
    let out = solver::solve_radial(&p, &m, v0, r_max.unwrap_or(p.radius), &opts).map_err(to_py_err)?;
    let log = solver::log_transform(&out.profile).ok();
    Ok(PyProfile { profile: out.profile, log, status: out.status })
}

/// Iteration exponents and radii with the sums `Σ 1/θ_i`, `Σ i/θ_i`.
#[pyfunction]
#[pyo3(signature = (n, theta0, radius, k_max))]
fn schedule<'py>(py: Python<'py>, n: u32, theta0: f64, radius: f64, k_max: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &core_params::schedule(n, theta0, radius, k_max).map_err(to_py_err)?)
}

/// `(ι, ρ̃)` for `0 < p < 4/(n−1)`.
#[pyfunction]
fn choose_iota(n: u32, p: f64) -> PyResult<(f64, f64)> {
    core_params::choose_iota(n, p).map_err(to_py_err)
}

#[pyfunction]
fn rho(n: u32, p: f64, iota: f64) -> PyResult<f64> {
    core_params::rho(n, p, iota).map_err(to_py_err)
}

/// Smallest `c_n` for which every member of the suite satisfies the
/// local Sobolev inequality on `B_R`.
#[pyfunction]
#[pyo3(signature = (n, kappa = 0.0, radius = 1.0, suite = "standard", count = 50, seed = None))]
fn calibrate_sobolev<'py>(
    py: Python<'py>,
    n: u32,
    kappa: f64,
    radius: f64,
    suite: &str,
    count: usize,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let m = ModelManifold::new(n, kappa).map_err(to_py_err)?;
    let members = match suite {
        "standard" => moser::standard_suite(radius),
        "random" => moser::random_suite(seed.unwrap_or_else(moser::seed_from_env), count, radius),
        other => return Err(PyValueError::new_err(format!("unknown suite {other:?}"))),
    };
    to_py(py, &moser::calibrate_sobolev_report(&m, &members, radius).map_err(to_py_err)?)
}

/// `(c, α, γ)` of the conformal Laplacian in dimension `n`.
#[pyfunction]
fn conformal_constants(n: u32) -> PyResult<(f64, f64, f64)> {
    conformal::conformal_constants(n).map_err(to_py_err)
}

/// `(p, q)` of the Einstein-scalar field Lichnerowicz equation.
#[pyfunction]
fn lichnerowicz_exponents(n: u32) -> PyResult<(f64, f64)> {
    conformal::lichnerowicz_exponents(n).map_err(to_py_err)
}

/// General-equation coefficients for the Einstein-scalar field case.
#[pyfunction]
fn map_conformal(n: u32, beta: f64, sigma2: f64, scalar_curv: f64) -> PyResult<PyParams> {
    let cp = ConformalParams::new(n, beta, sigma2, scalar_curv).map_err(to_py_err)?;
    conformal::map_to_general_equation(&cp).map(|inner| PyParams { inner }).map_err(to_py_err)
}

/// Runs a TOML config like the `lichlab` binary. Returns
/// `(exit_code, report, files)`.
#[pyfunction]
#[pyo3(signature = (config, out_dir = None, jobs = None))]
fn run_config<'py>(
    py: Python<'py>,
    config: &str,
    out_dir: Option<std::path::PathBuf>,
    jobs: Option<usize>,
) -> PyResult<(i32, Bound<'py, PyAny>, Vec<String>)> {
    let mut cfg = RunConfig::from_toml_str(config).map_err(to_py_err)?;
    if let Some(dir) = out_dir {
        cfg.output.dir = dir;
    }
    let outcome = py.detach(|| orchestrator::run(&cfg, &RunOptions { jobs })).map_err(to_py_err)?;
    let report = to_py(py, &outcome.report)?;
    let files = outcome.files.iter().map(|f| f.display().to_string()).collect();
    Ok((outcome.exit_code, report, files))
}

#[pymodule]
pub fn lichlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyProfile>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(schedule, m)?)?;
    m.add_function(wrap_pyfunction!(choose_iota, m)?)?;
    m.add_function(wrap_pyfunction!(rho, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_sobolev, m)?)?;
    m.add_function(wrap_pyfunction!(conformal_constants, m)?)?;
    m.add_function(wrap_pyfunction!(lichnerowicz_exponents, m)?)?;
    m.add_function(wrap_pyfunction!(map_conformal, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
