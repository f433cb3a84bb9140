//! Python bindings for the atom-membrane simulator.
//!
//! Configuration arguments accept either a dict or a JSON string with the same
//! fields as the corresponding section of a CLI config file.

use atom_membrane::gaussian::{self, make_state, StateSpec};
use atom_membrane::lattice::{best_site, find_wells_with, LatticeConfig, SiteCriterion};
use atom_membrane::metrics;
use atom_membrane::protocols::{self, ScenarioConfig};
use atom_membrane::system::{self, ConditionThresholds, PhysicalParams};
use atom_membrane::thermal::{self, HeatConfig};
use atom_membrane::Error;
use nalgebra::{DMatrix, DVector, Matrix2};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyString;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = if obj.is_instance_of::<PyString>() {
        obj.extract()?
    } else {
        obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?
    };
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn matrix2(rows: Vec<Vec<f64>>) -> PyResult<Matrix2<f64>> {
    if rows.len() != 2 || rows.iter().any(|r| r.len() != 2) {
        return Err(PyValueError::new_err("expected a 2x2 matrix"));
    }
    Ok(Matrix2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Gaussian state in (X1, P1, X2, P2, ...) ordering with vacuum covariance I/2.
#[pyclass(name = "GaussianState", module = "atom_membrane_py")]
struct PyGaussianState {
    inner: gaussian::GaussianState,
}

#[pymethods]
impl PyGaussianState {
    #[new]
    fn new(d: Vec<f64>, cov: Vec<Vec<f64>>) -> PyResult<Self> {
        let n = d.len();
        if cov.len() != n || cov.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("covariance must be square and match the displacement"));
        }
        let cov = DMatrix::from_fn(n, n, |i, j| cov[i][j]);
        let inner = gaussian::GaussianState::new(DVector::from_vec(d), cov).map_err(err)?;
        Ok(PyGaussianState { inner })
    }

    #[staticmethod]
    fn vacuum(n_modes: usize) -> PyResult<Self> {
        Ok(PyGaussianState {
            inner: gaussian::GaussianState::vacuum(n_modes).map_err(err)?,
        })
    }

    /// Product state from per-mode preparations, e.g. `[{"mode": 0, "kind": "thermal", "n_bar": 1.0}]`.
    #[staticmethod]
    fn prepare(specs: &Bound<'_, PyAny>, n_modes: usize) -> PyResult<Self> {
        let specs: Vec<StateSpec> = from_py(specs)?;
        Ok(PyGaussianState {
            inner: make_state(&specs, n_modes).map_err(err)?,
        })
    }

    #[getter]
    fn n_modes(&self) -> usize {
        self.inner.n_modes
    }

    #[getter]
    fn d(&self) -> Vec<f64> {
        self.inner.d.iter().copied().collect()
    }

    #[getter]
    fn cov(&self) -> Vec<Vec<f64>> {
        rows_of(&self.inner.cov)
    }

    fn mode_cov(&self, mode: usize) -> PyResult<Vec<Vec<f64>>> {
        if mode >= self.inner.n_modes {
            return Err(PyValueError::new_err(format!("mode {mode} out of range")));
        }
        let m = self.inner.mode_cov(mode);
        Ok(vec![vec![m[(0, 0)], m[(0, 1)]], vec![m[(1, 0)], m[(1, 1)]]])
    }

    fn symplectic_eigenvalues(&self) -> PyResult<Vec<f64>> {
        gaussian::symplectic_eigenvalues(&self.inner.cov).map_err(err)
    }

    fn occupation(&self, mode: usize) -> PyResult<f64> {
        metrics::occupation(&self.inner, mode).map_err(err)
    }

    fn log_negativity(&self) -> PyResult<f64> {
        metrics::log_negativity(&self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("GaussianState(n_modes={})", self.inner.n_modes)
    }
}

/// Time series and summary of one protocol run.
#[pyclass(name = "ScenarioResult", module = "atom_membrane_py", frozen)]
struct PyScenarioResult {
    inner: protocols::ScenarioResult,
}

#[pymethods]
impl PyScenarioResult {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    #[getter]
    fn g(&self) -> f64 {
        self.inner.g
    }

    #[getter]
    fn t_swap(&self) -> f64 {
        self.inner.t_swap
    }

    #[getter]
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.summary)
    }

    fn series_names(&self) -> Vec<String> {
        self.inner
            .series
            .iter()
            .chain(&self.inner.overlays)
            .map(|s| s.name.clone())
            .collect()
    }

    /// Named series, including analytic overlays.
    fn series(&self, name: &str) -> PyResult<Vec<f64>> {
        self.inner
            .series
            .iter()
            .chain(&self.inner.overlays)
            .find(|s| s.name == name)
            .map(|s| s.values.clone())
            .ok_or_else(|| PyValueError::new_err(format!("no series named {name:?}")))
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        let file = std::fs::File::create(path).map_err(|e| err(e.into()))?;
        self.inner.write_csv(std::io::BufWriter::new(file)).map_err(err)
    }
}

/// Steady-state membrane temperature field.
#[pyclass(name = "HeatMap", module = "atom_membrane_py", frozen)]
struct PyHeatMap {
    inner: thermal::HeatMap,
}

#[pymethods]
impl PyHeatMap {
    #[getter]
    fn nodes(&self) -> Vec<f64> {
        self.inner.nodes.clone()
    }

    /// Temperatures as rows indexed by y.
    #[getter]
    fn temperature(&self) -> Vec<Vec<f64>> {
        self.inner.temperature.chunks(self.inner.nodes.len()).map(<[f64]>::to_vec).collect()
    }

    #[getter]
    fn t_peak(&self) -> f64 {
        self.inner.t_peak
    }

    #[getter]
    fn t_avg(&self) -> f64 {
        self.inner.t_avg
    }

    #[getter]
    fn absorbed_power(&self) -> f64 {
        self.inner.absorbed_power
    }

    #[getter]
    fn delta_t_lumped(&self) -> f64 {
        self.inner.delta_t_lumped
    }

    fn interpolate(&self, x: f64, y: f64) -> f64 {
        self.inner.interpolate(x, y)
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        let file = std::fs::File::create(path).map_err(|e| err(e.into()))?;
        self.inner.write_csv(std::io::BufWriter::new(file)).map_err(err)
    }
}

/// Runs a swap or entanglement scenario described by a protocols config.
#[pyfunction]
fn run_scenario(py: Python<'_>, config: &Bound<'_, PyAny>) -> PyResult<PyScenarioResult> {
    let config: ScenarioConfig = from_py(config)?;
    let inner = py.detach(|| protocols::run_scenario(&config)).map_err(err)?;
    Ok(PyScenarioResult { inner })
}

#[pyfunction]
fn heat_map(py: Python<'_>, config: &Bound<'_, PyAny>) -> PyResult<PyHeatMap> {
    let config: HeatConfig = from_py(config)?;
    let inner = py.detach(|| thermal::steady_state_heat_map(&config)).map_err(err)?;
    Ok(PyHeatMap { inner })
}

#[pyfunction]
fn lumped_temperature_rise(power: f64, finesse: f64, kb_kappa_th: f64) -> PyResult<f64> {
    thermal::lumped_temperature_rise(power, finesse, kb_kappa_th).map_err(err)
}

#[pyfunction]
fn g_exact(g_m: f64, g_at: f64, delta: f64, kappa: f64, omega_m: f64) -> PyResult<f64> {
    system::g_exact(g_m, g_at, delta, kappa, omega_m).map_err(err)
}

#[pyfunction]
fn gamma_c_pm(g_m: f64, g_at: f64, delta: f64, kappa: f64, omega_m: f64) -> PyResult<(f64, f64)> {
    system::gamma_c_pm(g_m, g_at, delta, kappa, omega_m).map_err(err)
}

/// Derived couplings and rates for a set of physical parameters.
#[pyfunction]
fn derive_rates<'py>(py: Python<'py>, params: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let params: PhysicalParams = from_py(params)?;
    to_py(py, &system::derive_rates(&params).map_err(err)?)
}

/// Strong-coupling design report; `thresholds` falls back to the defaults.
#[pyfunction]
#[pyo3(signature = (params, kb_kappa_th = 10e-9, thresholds = None))]
fn design_check<'py>(
    py: Python<'py>,
    params: &Bound<'py, PyAny>,
    kb_kappa_th: f64,
    thresholds: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let params: PhysicalParams = from_py(params)?;
    let thresholds: ConditionThresholds = match thresholds {
        Some(t) => from_py(t)?,
        None => ConditionThresholds::default(),
    };
    to_py(py, &system::check_strong_coupling(&params, kb_kappa_th, &thresholds).map_err(err)?)
}

/// Closed-form RWA predictions at noise ratio `f` and coupling `g`.
#[pyfunction]
fn rwa_predictions<'py>(py: Python<'py>, f: f64, g: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &metrics::rwa_predictions(f, g).map_err(err)?)
}

#[pyfunction]
fn transfer_fidelity(cov_m_t: Vec<Vec<f64>>, cov_at_0: Vec<Vec<f64>>) -> PyResult<f64> {
    metrics::transfer_fidelity(&matrix2(cov_m_t)?, &matrix2(cov_at_0)?).map_err(err)
}

#[pyfunction]
fn fock_negativity_rwa(t: f64, g: f64, gamma_c: f64, gamma_m: f64, gamma_at: f64) -> PyResult<f64> {
    metrics::fock_negativity_rwa(t, g, gamma_c, gamma_m, gamma_at).map_err(err)
}

/// Trap sites of a two-color lattice and the site with the largest |θ|.
#[pyfunction]
fn lattice_scan<'py>(py: Python<'py>, config: &Bound<'py, PyAny>) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let config: LatticeConfig = from_py(config)?;
    let geometry = config.geometry().map_err(err)?;
    let wells = find_wells_with(&geometry, config.geometry_factor, config.points_per_period).map_err(err)?;
    let best = best_site(&wells, SiteCriterion::default()).map_err(err)?;
    Ok((to_py(py, &wells)?, to_py(py, &best)?))
}

#[pymodule]
pub fn atom_membrane_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGaussianState>()?;
    m.add_class::<PyScenarioResult>()?;
    m.add_class::<PyHeatMap>()?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(heat_map, m)?)?;
    m.add_function(wrap_pyfunction!(lumped_temperature_rise, m)?)?;
    m.add_function(wrap_pyfunction!(g_exact, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_c_pm, m)?)?;
    m.add_function(wrap_pyfunction!(derive_rates, m)?)?;
    m.add_function(wrap_pyfunction!(design_check, m)?)?;
    m.add_function(wrap_pyfunction!(rwa_predictions, m)?)?;
    m.add_function(wrap_pyfunction!(transfer_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(fock_negativity_rwa, m)?)?;
    m.add_function(wrap_pyfunction!(lattice_scan, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix2_rejects_wrong_shape() {
        assert!(matrix2(vec![vec![1.0, 0.0]]).is_err());
        let m = matrix2(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m[(1, 0)], 3.0);
    }

    #[test]
    fn rows_are_row_major() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(rows_of(&m), vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
    }
}
