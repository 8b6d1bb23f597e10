//! Python module `gpvqg_py`: states, stepping and diagnostics of the channel
//! solver, plus the JSON-configured drivers. Configs and reports cross the
//! boundary as JSON text; field arrays as `(shape, flat row-major list)`.

use std::sync::Arc;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use gpvqg::gpv::{extract_gpv, limit_from_gpv};
use gpvqg::harness::{self, Formulation, RunConfig};
use gpvqg::init::{generate_initial, InitialData};
use gpvqg::integrate::{stable_dt, IntegratorConfig};
use gpvqg::snapshot::{named_arrays, read_header, read_snapshot, write_snapshot, AnyState};
use gpvqg::{Channel, ChannelGrid, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Json(_) => PyValueError::new_err(e.to_string()),
        Error::Io(_) | Error::Snapshot(_) | Error::Checksum { .. } => PyOSError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| py_err(e.into()))
}

fn parse_formulation(s: &str) -> PyResult<Formulation> {
    s.parse().map_err(py_err)
}

/// One state of any formulation on its grid.
#[pyclass(name = "State", module = "gpvqg_py", skip_from_py_object)]
#[derive(Clone)]
struct PyState {
    ch: Arc<Channel>,
    state: AnyState,
    eps: f64,
}

impl PyState {
    fn with(&self, state: AnyState) -> Self {
        Self {
            ch: self.ch.clone(),
            state,
            eps: self.eps,
        }
    }
}

#[pymethods]
impl PyState {
    /// Initial state from a JSON `initial_data` spec such as
    /// `{"kind": "random_seeded", "seed": 1, "bandwidth": 3, "amplitude": 0.2}`.
    #[staticmethod]
    #[pyo3(signature = (nx, ny, nz, eps, initial_data, formulation = "gpv", h = 1.0))]
    fn initial(
        nx: usize,
        ny: usize,
        nz: usize,
        eps: f64,
        initial_data: &str,
        formulation: &str,
        h: f64,
    ) -> PyResult<Self> {
        let grid = ChannelGrid::new(nx, ny, nz, h).map_err(py_err)?;
        let ch = Channel::new(grid).map_err(py_err)?;
        let data: InitialData =
            serde_json::from_str(initial_data).map_err(|e| PyValueError::new_err(format!("bad initial_data: {e}")))?;
        let p0 = generate_initial(&ch, &data, eps).map_err(py_err)?;
        let state = harness::initial_state(&ch, p0, parse_formulation(formulation)?).map_err(py_err)?;
        Ok(Self {
            ch: Arc::new(ch),
            state,
            eps,
        })
    }

    /// Reads a snapshot; `eps` is required for limit snapshots, which carry none.
    #[staticmethod]
    #[pyo3(signature = (path, eps = None))]
    fn load(path: &str, eps: Option<f64>) -> PyResult<Self> {
        let (header, state) = read_snapshot(path).map_err(py_err)?;
        let eps = eps
            .or(header.eps)
            .ok_or_else(|| PyValueError::new_err("snapshot has no eps; pass one"))?;
        Ok(Self {
            ch: Arc::new(Channel::new(header.grid).map_err(py_err)?),
            state,
            eps,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        let eps = match self.state {
            AnyState::Limit(_) => None,
            _ => Some(self.eps),
        };
        write_snapshot(path, &self.ch.grid, &self.state, eps).map_err(py_err)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match self.state {
            AnyState::Primitive(_) => "primitive",
            AnyState::Gpv(_) => "gpv",
            AnyState::Limit(_) => "limit",
        }
    }

    #[getter]
    fn t(&self) -> f64 {
        self.state.t()
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.eps
    }

    #[getter]
    fn grid(&self) -> (usize, usize, usize, f64) {
        let g = self.ch.grid;
        (g.nx, g.ny, g.nz, g.h)
    }

    /// Same physical state in another formulation.
    fn to(&self, formulation: &str) -> PyResult<Self> {
        let target = parse_formulation(formulation)?;
        let ch = &*self.ch;
        let p = || self.state.clone().into_primitive(ch, self.eps);
        let state = match (target, &self.state) {
            (Formulation::Primitive, _) => AnyState::Primitive(p().map_err(py_err)?),
            (Formulation::Gpv, AnyState::Gpv(g)) => AnyState::Gpv(g.clone()),
            (Formulation::Gpv, _) => AnyState::Gpv(extract_gpv(ch, &p().map_err(py_err)?).map_err(py_err)?),
            (Formulation::Limit, AnyState::Limit(l)) => AnyState::Limit(l.clone()),
            (Formulation::Limit, AnyState::Gpv(g)) => AnyState::Limit(limit_from_gpv(g)),
            (Formulation::Limit, AnyState::Primitive(q)) => {
                AnyState::Limit(limit_from_gpv(&extract_gpv(ch, q).map_err(py_err)?))
            }
        };
        Ok(self.with(state))
    }

    /// Largest step allowed by the stability rule of the default integrator.
    fn stable_dt(&self) -> PyResult<f64> {
        let p = self.state.clone().into_primitive(&self.ch, self.eps).map_err(py_err)?;
        let eps = match self.state {
            AnyState::Limit(_) => None,
            _ => Some(self.eps),
        };
        stable_dt(&self.ch, &p, eps, &IntegratorConfig::default()).map_err(py_err)
    }

    /// Advances `n` steps of size `dt` in place.
    #[pyo3(signature = (dt, n = 1, nonlinear = true))]
    fn step(&mut self, py: Python<'_>, dt: f64, n: usize, nonlinear: bool) -> PyResult<()> {
        let cfg = IntegratorConfig {
            nonlinear,
            ..Default::default()
        };
        let ch = self.ch.clone();
        let mut s = self.state.clone();
        let s = py
            .detach(move || -> gpvqg::Result<AnyState> {
                for _ in 0..n {
                    s = harness::advance(&ch, &s, dt, &cfg)?.0;
                }
                Ok(s)
            })
            .map_err(py_err)?;
        self.state = s;
        Ok(())
    }

    fn diagnostics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = harness::state_diagnostics(&self.ch, &self.state, self.eps).map_err(py_err)?;
        let out = PyDict::new(py);
        out.set_item("t", d.t)?;
        out.set_item("E_frak", d.e_frak)?;
        out.set_item("l2_energy", d.l2_energy)?;
        out.set_item("h3_norm", d.h3_norm)?;
        out.set_item("div_residual", d.div_residual)?;
        out.set_item("bc_residual", d.bc_residual)?;
        out.set_item("mean_residual", d.mean_residual)?;
        out.set_item("compat_residual", d.compat_residual)?;
        Ok(out)
    }

    /// `{name: (shape, values)}` with the snapshot field names.
    fn arrays<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let out = PyDict::new(py);
        for (name, shape, values) in named_arrays(&self.state) {
            out.set_item(name, (shape, values))?;
        }
        Ok(out)
    }

    fn __repr__(&self) -> String {
        let g = self.ch.grid;
        format!(
            "State(kind={}, t={}, eps={}, grid={}x{}x{})",
            self.kind(),
            self.t(),
            self.eps,
            g.nx,
            g.ny,
            g.nz + 1
        )
    }
}

fn config(text: &str) -> PyResult<RunConfig> {
    RunConfig::from_json(text).map_err(py_err)
}

/// Runs a configuration; returns the run summary as JSON.
#[pyfunction]
fn simulate(py: Python<'_>, config_json: &str) -> PyResult<String> {
    let cfg = config(config_json)?;
    let out = py.detach(|| harness::run_simulation(&cfg)).map_err(py_err)?;
    to_json(&out.summary)
}

#[pyfunction]
#[pyo3(signature = (config_json, jobs = 1))]
fn sweep(py: Python<'_>, config_json: &str, jobs: usize) -> PyResult<String> {
    let cfg = config(config_json)?;
    to_json(&py.detach(|| harness::run_eps_sweep(&cfg, jobs)).map_err(py_err)?)
}

#[pyfunction]
fn linear_check(py: Python<'_>, config_json: &str) -> PyResult<String> {
    let cfg = config(config_json)?;
    to_json(&py.detach(|| harness::run_linear_validation(&cfg)).map_err(py_err)?)
}

#[pyfunction]
#[pyo3(signature = (config_json, jobs = 1))]
fn qg_compare(py: Python<'_>, config_json: &str, jobs: usize) -> PyResult<String> {
    let cfg = config(config_json)?;
    to_json(
        &py.detach(|| harness::run_wellprepared_comparison(&cfg, jobs))
            .map_err(py_err)?,
    )
}

/// Snapshot header as JSON.
#[pyfunction]
fn inspect(path: &str) -> PyResult<String> {
    to_json(&read_header(path).map_err(py_err)?)
}

#[pymodule]
pub fn gpvqg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyState>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(linear_check, m)?)?;
    m.add_function(wrap_pyfunction!(qg_compare, m)?)?;
    m.add_function(wrap_pyfunction!(inspect, m)?)?;
    Ok(())
}
