//! Python module `vmfp`: scenario configuration, the kinetic and limit
//! solvers, runs, sweeps and the scalar diagnostics.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use vmfp_core::diagnostics::{self, DiagnosticsRecord};
use vmfp_core::fieldsolve::{div_b, gauss_residual};
use vmfp_core::harness::{run, ScenarioConfig as CoreConfig, StepMode};
use vmfp_core::kinetic::{KineticStepper as CoreStepper, Mollifier};
use vmfp_core::limit::LimitSolver as CoreLimit;
use vmfp_core::moments::{current, density};
use vmfp_core::{PlasmaParams, VmfpError};

fn py_err(e: VmfpError) -> PyErr {
    match e {
        VmfpError::Config(_) | VmfpError::Parameter(_) | VmfpError::Shape { .. } | VmfpError::GridMismatch(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Scenario configuration (TOML schema of the command-line tool).
#[pyclass(name = "ScenarioConfig", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: CoreConfig,
}

#[pymethods]
impl PyConfig {
    /// Defaults, or the given TOML text.
    #[new]
    #[pyo3(signature = (toml=None))]
    fn new(toml: Option<&str>) -> PyResult<Self> {
        let inner = match toml {
            Some(s) => CoreConfig::from_toml_str(s).map_err(py_err)?,
            None => CoreConfig::default(),
        };
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: CoreConfig::load(&path).map_err(py_err)?,
        })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    fn with_eps(&self, eps: f64) -> Self {
        Self {
            inner: self.inner.with_eps(eps),
        }
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.inner.params.eps
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt()
    }

    #[getter]
    fn steps(&self) -> usize {
        self.inner.steps()
    }

    #[getter]
    fn params(&self) -> Params {
        Params { inner: self.inner.params }
    }

    fn __repr__(&self) -> String {
        format!(
            "ScenarioConfig(grid={}x{}x{}^3, eps={}, t_final={})",
            self.inner.grid.n1, self.inner.grid.n2, self.inner.grid.nv, self.inner.params.eps, self.inner.time.t_final
        )
    }
}

/// Physical and scaling parameters.
#[pyclass(name = "PlasmaParams", from_py_object)]
#[derive(Clone)]
struct Params {
    inner: PlasmaParams,
}

#[pymethods]
impl Params {
    #[new]
    #[pyo3(signature = (q=1.0, m=1.0, sigma=1.0, tau=1.0, eps0=1.0, mu0=1.0, eps=1.0))]
    fn new(q: f64, m: f64, sigma: f64, tau: f64, eps0: f64, mu0: f64, eps: f64) -> PyResult<Self> {
        let inner = PlasmaParams {
            q,
            m,
            sigma,
            tau,
            eps0,
            mu0,
            eps,
        };
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    fn as_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        let p = &self.inner;
        for (k, v) in [
            ("q", p.q),
            ("m", p.m),
            ("sigma", p.sigma),
            ("tau", p.tau),
            ("eps0", p.eps0),
            ("mu0", p.mu0),
            ("eps", p.eps),
        ] {
            d.set_item(k, v)?;
        }
        Ok(d)
    }
}

fn grid_rows(data: &[f64], n2: usize) -> Vec<Vec<f64>> {
    data.chunks(n2).map(|r| r.to_vec()).collect()
}

/// Kinetic solver state initialized from a scenario.
#[pyclass(name = "KineticStepper")]
struct Stepper {
    inner: CoreStepper,
}

#[pymethods]
impl Stepper {
    #[new]
    fn new(config: &PyConfig) -> PyResult<Self> {
        let c = &config.inner;
        let init = c.initial_data().map_err(py_err)?;
        let inner = CoreStepper::new(c.params, c.solver.clone(), init.f, init.em, init.b_ext, init.background)
            .map_err(py_err)?;
        Ok(Self { inner })
    }

    fn strang_step(&mut self, dt: f64) -> PyResult<()> {
        self.inner.strang_step(dt).map_err(py_err)
    }

    /// One mollified fixed-point step; returns the residual history.
    #[pyo3(signature = (dt, delta=0.0, tol=1e-12, max_iter=30))]
    fn picard_cycle(&mut self, dt: f64, delta: f64, tol: f64, max_iter: usize) -> PyResult<Vec<f64>> {
        let m = Mollifier::new(self.inner.f.perp, delta).map_err(py_err)?;
        Ok(self.inner.picard_cycle(dt, &m, tol, max_iter).map_err(py_err)?.residuals)
    }

    #[getter]
    fn t(&self) -> f64 {
        self.inner.t()
    }

    fn mass(&self) -> f64 {
        self.inner.f.total_mass()
    }

    fn min_value(&self) -> f64 {
        self.inner.f.min_value()
    }

    fn kinetic_energy(&self) -> f64 {
        diagnostics::kinetic_energy(&self.inner.f)
    }

    fn field_energy(&self) -> f64 {
        self.inner.em.energy(&self.inner.params)
    }

    fn free_energy(&self) -> f64 {
        diagnostics::free_energy(&self.inner.f, &self.inner.em, &self.inner.params)
    }

    fn kinetic_relative_entropy(&self) -> f64 {
        diagnostics::kinetic_relative_entropy(&self.inner.f, &self.inner.params)
    }

    fn gauss_residual(&self) -> f64 {
        gauss_residual(&self.inner.em.e, &self.inner.charge(), &self.inner.params)
    }

    fn div_b(&self) -> f64 {
        div_b(&self.inner.em.b)
    }

    /// Density as rows over `x1`.
    fn density(&self) -> Vec<Vec<f64>> {
        grid_rows(&density(&self.inner.f).data, self.inner.f.perp.n2)
    }

    /// Current density components `[j1, j2, j3]`, each as rows over `x1`.
    fn current(&self) -> Vec<Vec<Vec<f64>>> {
        let j = current(&self.inner.f);
        j.c.iter().map(|c| grid_rows(c, self.inner.f.perp.n2)).collect()
    }

    /// Electric and magnetic field components, each as rows over `x1`.
    fn fields(&self) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<Vec<f64>>>) {
        let n2 = self.inner.f.perp.n2;
        let e = self.inner.em.e.c.iter().map(|c| grid_rows(c, n2)).collect();
        let b = self.inner.em.b.c.iter().map(|c| grid_rows(c, n2)).collect();
        (e, b)
    }

    /// Flat copy of the distribution, x1 outermost and v3 innermost, with
    /// its shape `(n1, n2, nv, nv, nv)`.
    fn distribution(&self) -> (Vec<f64>, (usize, usize, usize, usize, usize)) {
        let f = &self.inner.f;
        let nv = f.vel.nv;
        (f.data.clone(), (f.perp.n1, f.perp.n2, nv, nv, nv))
    }
}

/// Guiding-center limit solver initialized from a scenario.
#[pyclass(name = "LimitSolver")]
struct Limit {
    inner: CoreLimit,
}

#[pymethods]
impl Limit {
    #[new]
    fn new(config: &PyConfig) -> PyResult<Self> {
        Ok(Self {
            inner: config.inner.limit_solver().map_err(py_err)?,
        })
    }

    fn step(&mut self, dt: f64) -> PyResult<()> {
        self.inner.limit_step(dt).map_err(py_err)
    }

    #[getter]
    fn t(&self) -> f64 {
        self.inner.state.t
    }

    fn mass(&self) -> f64 {
        self.inner.state.n.integral()
    }

    fn free_energy(&self) -> PyResult<f64> {
        self.inner.free_energy().map_err(py_err)
    }

    fn density(&self) -> Vec<Vec<f64>> {
        grid_rows(&self.inner.state.n.data, self.inner.state.n.grid.n2)
    }

    fn b1(&self) -> PyResult<Vec<Vec<f64>>> {
        let b = self.inner.b1().map_err(py_err)?;
        Ok(grid_rows(&b.data, b.grid.n2))
    }
}

fn record_dict<'py>(py: Python<'py>, r: &DiagnosticsRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (k, v) in DiagnosticsRecord::COLUMNS.iter().zip(r.values()) {
        d.set_item(*k, v)?;
    }
    Ok(d)
}

/// Runs the kinetic model; returns the diagnostic records as dicts.
#[pyfunction]
#[pyo3(signature = (config, eps=None, mode=None))]
fn run_kinetic<'py>(
    py: Python<'py>,
    config: &PyConfig,
    eps: Option<f64>,
    mode: Option<&str>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut c = config.inner.clone();
    if let Some(e) = eps {
        c = c.with_eps(e);
    }
    if let Some(m) = mode {
        c.mode = m.parse::<StepMode>().map_err(py_err)?;
    }
    c.validate().map_err(py_err)?;
    let r = py.detach(|| run::run_kinetic(&c, None)).map_err(py_err)?;
    r.records.iter().map(|x| record_dict(py, x)).collect()
}

/// Runs the limit model; returns `(t, mass, free_energy)` per sample.
#[pyfunction]
fn run_limit(py: Python<'_>, config: &PyConfig) -> PyResult<Vec<(f64, f64, f64)>> {
    let c = config.inner.clone();
    let r = py.detach(|| run::run_limit(&c)).map_err(py_err)?;
    Ok(r.records.iter().map(|x| (x.t, x.mass, x.free_energy)).collect())
}

/// Runs the epsilon sweep into `out`; returns the path of the manifest.
#[pyfunction]
fn run_sweep(py: Python<'_>, config: &PyConfig, out: PathBuf) -> PyResult<PathBuf> {
    let c = config.inner.clone();
    let o = out.clone();
    py.detach(move || run::run_sweep(&c, &o)).map_err(py_err)?;
    Ok(out.join("manifest.json"))
}

/// `h(s) = s ln s - s + 1`.
#[pyfunction]
fn h(s: f64) -> f64 {
    diagnostics::h(s)
}

/// Both sides `(lhs, rhs)` of the Csiszár–Kullback inequality for samples
/// with cell weight `cell`.
#[pyfunction]
#[pyo3(signature = (g, g0, cell=1.0))]
fn csiszar_kullback(g: Vec<f64>, g0: Vec<f64>, cell: f64) -> PyResult<(f64, f64)> {
    if g.len() != g0.len() {
        return Err(PyValueError::new_err("g and g0 must have the same length"));
    }
    let r = diagnostics::csiszar_kullback_check(&g, &g0, cell);
    Ok((r.l1, r.bound))
}

#[pymodule]
fn vmfp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<Params>()?;
    m.add_class::<Stepper>()?;
    m.add_class::<Limit>()?;
    m.add_function(wrap_pyfunction!(run_kinetic, m)?)?;
    m.add_function(wrap_pyfunction!(run_limit, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(h, m)?)?;
    m.add_function(wrap_pyfunction!(csiszar_kullback, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
