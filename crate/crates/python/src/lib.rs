//! Python bindings. The module imports as `secure_sensing`.
//!
//! Matrices cross the boundary as nested lists of Python `complex`; richer
//! records (optimizer reports, protocol transcripts, scenario specs) as JSON
//! strings.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use secure_sensing::channels;
use secure_sensing::control::{self, Figure};
use secure_sensing::entanglement;
use secure_sensing::metrology;
use secure_sensing::protocol::{self, ProtocolConfig};
use secure_sensing::quantum::{self, CMatrix, QubitRegister};
use secure_sensing::runner::{self, ScenarioSpec};

fn err(e: secure_sensing::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Row-major nested lists from a matrix.
pub fn to_rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Matrix from row-major nested lists; rows must be equal length.
pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<CMatrix, String> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err("ragged matrix rows".into());
    }
    Ok(CMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub fn parse_figure(name: &str) -> Result<Figure, String> {
    match name.to_ascii_lowercase().as_str() {
        "qfi" => Ok(Figure::Qfi),
        "cfi" => Ok(Figure::Cfi),
        other => Err(format!("unknown figure '{other}', expected 'qfi' or 'cfi'")),
    }
}

/// Validated density matrix on a register of Alice's qubits followed by Bob's.
#[pyclass(name = "DensityMatrix", module = "secure_sensing", frozen)]
pub struct PyDensityMatrix {
    inner: quantum::DensityMatrix,
}

#[pymethods]
impl PyDensityMatrix {
    #[new]
    #[pyo3(signature = (data, n_alice, n_bob))]
    fn new(data: Vec<Vec<Complex64>>, n_alice: usize, n_bob: usize) -> PyResult<Self> {
        let m = from_rows(&data).map_err(PyValueError::new_err)?;
        let reg = QubitRegister::split(n_alice, n_bob).map_err(err)?;
        Ok(Self {
            inner: quantum::DensityMatrix::new(m, reg).map_err(err)?,
        })
    }

    /// n-qubit GHZ state with Alice holding qubit 0.
    #[staticmethod]
    #[pyo3(signature = (n=3))]
    fn ghz(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: channels::ghz(n).map_err(err)?,
        })
    }

    fn data(&self) -> Vec<Vec<Complex64>> {
        to_rows(self.inner.data())
    }

    #[getter]
    fn num_qubits(&self) -> usize {
        self.inner.num_qubits()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn purity(&self) -> f64 {
        self.inner.purity()
    }

    fn trace(&self) -> Complex64 {
        self.inner.data().trace()
    }

    fn partial_trace(&self, keep: Vec<usize>) -> PyResult<Self> {
        Ok(Self {
            inner: quantum::partial_trace(&self.inner, &keep).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("DensityMatrix(qubits={}, purity={:.6})", self.inner.num_qubits(), self.inner.purity())
    }
}

/// Piecewise-constant controls, channel-major: `amplitudes[channel * segments + k]`.
#[pyclass(name = "ControlPulse", module = "secure_sensing", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyControlPulse {
    inner: control::ControlPulse,
}

#[pymethods]
impl PyControlPulse {
    #[new]
    fn new(duration: f64, segments: usize, qubits: usize, amplitudes: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: control::ControlPulse::from_amplitudes(duration, segments, qubits, amplitudes).map_err(err)?,
        })
    }

    #[staticmethod]
    fn zero(duration: f64, segments: usize, qubits: usize) -> PyResult<Self> {
        Ok(Self {
            inner: control::ControlPulse::zero(duration, segments, qubits).map_err(err)?,
        })
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.inner.duration()
    }

    #[getter]
    fn segments(&self) -> usize {
        self.inner.segments()
    }

    #[getter]
    fn qubits(&self) -> usize {
        self.inner.qubits()
    }

    fn amplitudes(&self) -> Vec<f64> {
        self.inner.amplitudes().to_vec()
    }

    fn __repr__(&self) -> String {
        format!(
            "ControlPulse(duration={}, segments={}, qubits={}, max_abs={:.4})",
            self.inner.duration(),
            self.inner.segments(),
            self.inner.qubits(),
            self.inner.max_abs()
        )
    }
}

/// Resolved scenario configuration: initial channel, evolution noise,
/// optimizer settings and time grids.
#[pyclass(name = "ScenarioSpec", module = "secure_sensing", frozen)]
pub struct PyScenarioSpec {
    inner: ScenarioSpec,
}

#[pymethods]
impl PyScenarioSpec {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: ScenarioSpec::from_json(text).map_err(err)?,
        })
    }

    /// The nine default noise/channel combinations.
    #[staticmethod]
    fn table() -> PyResult<Vec<Self>> {
        Ok(ScenarioSpec::table()
            .map_err(err)?
            .into_iter()
            .map(|inner| Self { inner })
            .collect())
    }

    #[getter]
    fn tag(&self) -> String {
        self.inner.tag()
    }

    #[getter]
    fn t_grid(&self) -> Vec<f64> {
        self.inner.t_grid.clone()
    }

    #[getter]
    fn negativity_grid(&self) -> Vec<f64> {
        self.inner.negativity_grid.clone()
    }

    fn to_json(&self) -> PyResult<String> {
        runner::to_json(&self.inner).map_err(err)
    }

    fn initial_state(&self) -> PyResult<PyDensityMatrix> {
        Ok(PyDensityMatrix {
            inner: self.inner.initial_state().map_err(err)?,
        })
    }

    /// `(ρ(T), ∂ρ/∂ω)` with the derivative as nested lists.
    #[pyo3(signature = (t, pulse=None))]
    fn evolve(&self, t: f64, pulse: Option<PyControlPulse>) -> PyResult<(PyDensityMatrix, Vec<Vec<Complex64>>)> {
        let sc = self.inner.scenario_at(t).map_err(err)?;
        let (rho, drho) = sc.evolve(pulse.as_ref().map(|p| &p.inner)).map_err(err)?;
        Ok((PyDensityMatrix { inner: rho }, to_rows(drho.data())))
    }

    #[pyo3(signature = (t, figure="qfi", pulse=None))]
    fn figure(&self, t: f64, figure: &str, pulse: Option<PyControlPulse>) -> PyResult<f64> {
        let fig = parse_figure(figure).map_err(PyValueError::new_err)?;
        let sc = self.inner.scenario_at(t).map_err(err)?;
        sc.figure(fig, pulse.as_ref().map(|p| &p.inner)).map_err(err)
    }

    /// Optimizes a pulse at `t`; returns `(best, uncontrolled, pulse, report_json)`.
    #[pyo3(signature = (t, figure="qfi", index=0))]
    fn optimize(
        &self,
        py: Python<'_>,
        t: f64,
        figure: &str,
        index: usize,
    ) -> PyResult<(f64, f64, PyControlPulse, String)> {
        let fig = parse_figure(figure).map_err(PyValueError::new_err)?;
        let spec = self.inner.clone();
        let point = py.detach(move || runner::optimize_point(&spec, t, fig, index)).map_err(err)?;
        let json = serde_json::to_string(&point).map_err(json_err)?;
        Ok((
            point.report.best_value,
            point.uncontrolled,
            PyControlPulse {
                inner: point.report.best_pulse,
            },
            json,
        ))
    }

    /// Rows `(T, uc_qfi, c_qfi, uc_cfi, c_cfi)` over the time grid.
    fn sweep_fisher(&self, py: Python<'_>) -> PyResult<Vec<(f64, f64, f64, f64, f64)>> {
        let spec = self.inner.clone();
        let points = py.detach(move || runner::sweep_fisher(&spec)).map_err(err)?;
        Ok(points
            .iter()
            .map(|p| {
                let r = p.record;
                (r.t, r.uc_qfi, r.c_qfi, r.uc_cfi, r.c_cfi)
            })
            .collect())
    }

    /// `(times, uncontrolled, controlled)` tripartite negativity.
    fn sweep_negativity(&self, py: Python<'_>) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let spec = self.inner.clone();
        let (uc, c) = py.detach(move || runner::sweep_negativity(&spec)).map_err(err)?;
        Ok((uc.times().to_vec(), uc.values().to_vec(), c.values().to_vec()))
    }

    fn uncontrolled_negativity(&self, grid: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.uncontrolled_negativity(&grid).map_err(err)?.values().to_vec())
    }

    fn __repr__(&self) -> String {
        format!("ScenarioSpec('{}')", self.inner.tag())
    }
}

#[pyfunction]
fn depolarize_symmetric(rho: &PyDensityMatrix, strength: f64) -> PyResult<PyDensityMatrix> {
    Ok(PyDensityMatrix {
        inner: channels::depolarize_symmetric(&rho.inner, strength).map_err(err)?,
    })
}

#[pyfunction]
fn depolarize_asymmetric(rho: &PyDensityMatrix, gamma: f64) -> PyResult<PyDensityMatrix> {
    Ok(PyDensityMatrix {
        inner: channels::depolarize_asymmetric(&rho.inner, gamma).map_err(err)?,
    })
}

/// Bipartite negativity with `part` as the transposed side.
#[pyfunction]
fn negativity(rho: &PyDensityMatrix, part: Vec<usize>) -> PyResult<f64> {
    entanglement::negativity(&rho.inner, &part).map_err(err)
}

#[pyfunction]
fn tripartite_negativity(rho: &PyDensityMatrix) -> PyResult<f64> {
    entanglement::tripartite_negativity(&rho.inner).map_err(err)
}

#[pyfunction]
fn qfi(rho: &PyDensityMatrix, drho: Vec<Vec<Complex64>>) -> PyResult<f64> {
    let d = from_rows(&drho).map_err(PyValueError::new_err)?;
    metrology::qfi_matrix(rho.inner.data(), &d).map_err(err)
}

/// Classical Fisher information of the σx-product measurement.
#[pyfunction]
fn cfi(rho: &PyDensityMatrix, drho: Vec<Vec<Complex64>>) -> PyResult<f64> {
    let d = from_rows(&drho).map_err(PyValueError::new_err)?;
    let povm = metrology::sigma_x_product_povm(rho.inner.num_qubits()).map_err(err)?;
    metrology::cfi_matrix(rho.inner.data(), &d, &povm).map_err(err)
}

/// Runs the protocol described by a JSON config; returns the outcome as JSON.
#[pyfunction]
fn run_protocol(py: Python<'_>, config_json: &str) -> PyResult<String> {
    let cfg: ProtocolConfig = serde_json::from_str(config_json).map_err(json_err)?;
    cfg.validate().map_err(err)?;
    let outcome = py.detach(move || protocol::run_protocol(&cfg)).map_err(err)?;
    serde_json::to_string(&outcome).map_err(json_err)
}

#[pyfunction]
fn format_sig12(x: f64) -> String {
    runner::format_sig12(x)
}

#[pymodule(name = "secure_sensing")]
fn secure_sensing_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyDensityMatrix>()?;
    m.add_class::<PyControlPulse>()?;
    m.add_class::<PyScenarioSpec>()?;
    m.add_function(wrap_pyfunction!(depolarize_symmetric, m)?)?;
    m.add_function(wrap_pyfunction!(depolarize_asymmetric, m)?)?;
    m.add_function(wrap_pyfunction!(negativity, m)?)?;
    m.add_function(wrap_pyfunction!(tripartite_negativity, m)?)?;
    m.add_function(wrap_pyfunction!(qfi, m)?)?;
    m.add_function(wrap_pyfunction!(cfi, m)?)?;
    m.add_function(wrap_pyfunction!(run_protocol, m)?)?;
    m.add_function(wrap_pyfunction!(format_sig12, m)?)?;
    Ok(())
}
