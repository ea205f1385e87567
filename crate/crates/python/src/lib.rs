//! Python bindings: `import detsim_py`.

use std::path::PathBuf;

use detsim::assembly::{
    evaluate_scenario as evaluate, golden_rule_distribution, lippmann_schwinger_solve,
    Chain, ChainComparison, Channel, Outcome, ScatterCache,
};
use detsim::formats::{parse_scenario, parse_table, read_file};
use detsim::grid::{self, Grid, Observable, PotentialField};
use detsim::option_model::{self, DeterministicModel, OptionValue};
use detsim::propagator_db::{self, PropagatorDatabase, PropagatorKey};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: detsim::Error) -> PyErr {
    use detsim::Error as E;
    match e {
        E::Io { .. } => PyIOError::new_err(e.to_string()),
        E::MissingEntry(_) | E::UnknownReaction(_) => PyKeyError::new_err(e.to_string()),
        E::Divergence { .. } | E::SingularResolvent => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Normalized state vector of a finite system.
#[pyclass(frozen, skip_from_py_object, module = "detsim_py")]
#[derive(Clone)]
struct StateVector(option_model::StateVector);

#[pymethods]
impl StateVector {
    #[new]
    fn new(amplitudes: Vec<Complex64>) -> PyResult<Self> {
        option_model::StateVector::new(amplitudes).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_probabilities(probabilities: Vec<f64>) -> PyResult<Self> {
        option_model::StateVector::from_probabilities(&probabilities)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.0.dimension()
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.0.amplitudes().to_vec()
    }

    fn probabilities(&self) -> Vec<f64> {
        self.0.probabilities()
    }

    fn __len__(&self) -> usize {
        self.0.dimension()
    }
}

fn model(state: &StateVector, volume: u64) -> PyResult<DeterministicModel> {
    DeterministicModel::new(state.0.dimension(), volume).map_err(err)
}

/// Outcome index selected by option `k` of `1..=volume`.
#[pyfunction]
fn measure(state: &StateVector, k: u64, volume: u64) -> PyResult<usize> {
    let option = OptionValue::new(k, volume).map_err(err)?;
    option_model::measure(&model(state, volume)?, &state.0, option).map_err(err)
}

/// Upper bin thresholds `k_1 <= ... <= k_N = volume`.
#[pyfunction]
fn phi(state: &StateVector, volume: u64) -> PyResult<Vec<u64>> {
    Ok(option_model::phi(&model(state, volume)?, &state.0)
        .map_err(err)?
        .thresholds()
        .to_vec())
}

/// Outcome frequencies over all options.
#[pyfunction]
fn sweep(state: &StateVector, volume: u64) -> PyResult<Vec<f64>> {
    option_model::sweep_statistics(&model(state, volume)?, &state.0).map_err(err)
}

/// Returns `(prefix, collapsed, residual_option)`.
#[pyfunction]
fn partial_measure(
    state: &StateVector,
    measured_bits: u32,
    k: u64,
    volume: u64,
) -> PyResult<(usize, StateVector, u64)> {
    let option = OptionValue::new(k, volume).map_err(err)?;
    let pm = option_model::partial_measure(&model(state, volume)?, &state.0, measured_bits, option)
        .map_err(err)?;
    Ok((pm.prefix, StateVector(pm.collapsed), pm.residual.index()))
}

/// Wave function sampled on a `2^qubits` point grid.
#[pyclass(frozen, skip_from_py_object, module = "detsim_py")]
#[derive(Clone)]
struct WaveFunction(grid::GridWaveFunction);

#[pymethods]
impl WaveFunction {
    #[new]
    fn new(qubits: u32, amplitudes: Vec<Complex64>) -> PyResult<Self> {
        let g = Grid::new(qubits).map_err(err)?;
        grid::GridWaveFunction::normalized(g, amplitudes).map(Self).map_err(err)
    }

    #[staticmethod]
    fn gaussian(qubits: u32, x0: f64, p0: f64, sigma: f64) -> PyResult<Self> {
        let g = Grid::new(qubits).map_err(err)?;
        grid::GridWaveFunction::gaussian(g, x0, p0, sigma).map(Self).map_err(err)
    }

    #[getter]
    fn qubits(&self) -> u32 {
        self.0.grid().qubits()
    }

    fn positions(&self) -> Vec<f64> {
        self.0.grid().positions()
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.0.amplitudes().to_vec()
    }

    fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `"position"` or `"momentum"`.
    fn expectation(&self, observable: &str) -> PyResult<f64> {
        let o = match observable {
            "position" | "x" => Observable::Position,
            "momentum" | "p" => Observable::Momentum,
            _ => return Err(PyValueError::new_err(format!("unknown observable {observable:?}"))),
        };
        Ok(grid::expectation(&self.0, o))
    }
}

fn field(g: Grid, potential: Option<Vec<f64>>, mass: f64) -> PyResult<PotentialField> {
    match potential {
        Some(v) => PotentialField::new(g, v, mass),
        None => PotentialField::zero(g, mass),
    }
    .map_err(err)
}

/// Split-step evolution; `potential` holds one sample per grid point.
#[pyfunction]
#[pyo3(signature = (psi, dt, steps, potential=None, mass=1.0))]
fn evolve(
    py: Python<'_>,
    psi: &WaveFunction,
    dt: f64,
    steps: usize,
    potential: Option<Vec<f64>>,
    mass: f64,
) -> PyResult<WaveFunction> {
    let f = field(psi.0.grid(), potential, mass)?;
    let psi0 = psi.0.clone();
    py.detach(|| grid::evolve(&psi0, &f, dt, steps))
        .map(WaveFunction)
        .map_err(err)
}

/// Applies the stored (or freshly built) propagator from `cache_dir`.
#[pyfunction]
#[pyo3(signature = (cache_dir, psi, dt, steps, potential=None, mass=1.0))]
fn propagate(
    py: Python<'_>,
    cache_dir: PathBuf,
    psi: &WaveFunction,
    dt: f64,
    steps: usize,
    potential: Option<Vec<f64>>,
    mass: f64,
) -> PyResult<WaveFunction> {
    let g = psi.0.grid();
    let f = field(g, potential, mass)?;
    let psi0 = psi.0.clone();
    py.detach(|| {
        let db = PropagatorDatabase::open(cache_dir)?;
        let key = PropagatorKey::new(g, &f, dt, steps);
        let m = db.lookup_or_build(&key, &f, g)?;
        propagator_db::apply(&m, &psi0)
    })
    .map(WaveFunction)
    .map_err(err)
}

/// Sweeps a scenario file against a table file; returns a summary dict.
#[pyfunction]
#[pyo3(signature = (scenario_path, table_path, volume, sample=None, max_steps=64))]
fn evaluate_scenario<'py>(
    py: Python<'py>,
    scenario_path: PathBuf,
    table_path: PathBuf,
    volume: u64,
    sample: Option<Vec<String>>,
    max_steps: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let file = read_file(&scenario_path)
        .and_then(|t| parse_scenario(&t, max_steps))
        .map_err(err)?;
    let table = read_file(&table_path).and_then(|t| parse_table(&t)).map_err(err)?;
    let sample = match sample {
        Some(letters) => Chain::from_letters(letters.iter().map(String::as_str)).map_err(err)?,
        None => file
            .sample
            .clone()
            .ok_or_else(|| PyValueError::new_err("scenario has no sample chain; pass sample="))?,
    };
    let report = py
        .detach(|| {
            evaluate(
                &file.scenario,
                &sample,
                &file.initial,
                &table,
                volume,
                &ScatterCache::new(),
                ChainComparison::Letters,
            )
        })
        .map_err(err)?;
    let histogram: Vec<(Option<Vec<String>>, u64)> = report
        .histogram
        .iter()
        .map(|h| {
            let letters = h
                .letters
                .as_ref()
                .map(|ls| ls.iter().map(|e| e.as_str().to_owned()).collect());
            (letters, h.count)
        })
        .collect();
    let d = PyDict::new(py);
    d.set_item("volume", report.volume)?;
    d.set_item("lucky_count", report.lucky_count)?;
    d.set_item("lucky_fraction", report.lucky_fraction)?;
    d.set_item("impossible_fraction", report.impossible_fraction)?;
    d.set_item("histogram", histogram)?;
    Ok(d)
}

/// Normalized golden-rule weights of `(matrix_element, density_of_states)` channels.
#[pyfunction]
#[pyo3(signature = (channels, hbar=1.0))]
fn golden_rule(channels: Vec<(Complex64, f64)>, hbar: f64) -> PyResult<Vec<f64>> {
    let chans = channels
        .into_iter()
        .enumerate()
        .map(|(i, (m, rho))| Channel {
            outcome: Outcome::NonAdmitted { label: format!("c{i}") },
            matrix_element: m,
            density_of_states: rho,
        })
        .collect();
    Ok(golden_rule_distribution(chans, hbar).map_err(err)?.weights())
}

fn matrix(rows: Vec<Vec<Complex64>>) -> PyResult<DMatrix<Complex64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrices must be square"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Fixed-point Lippmann-Schwinger solve; returns `(psi, iterations)`.
#[pyfunction]
#[pyo3(signature = (h, v, phi, energy, eta, tol=1e-12, max_iter=1000))]
fn lippmann_schwinger(
    h: Vec<Vec<Complex64>>,
    v: Vec<Vec<Complex64>>,
    phi: Vec<Complex64>,
    energy: f64,
    eta: f64,
    tol: f64,
    max_iter: usize,
) -> PyResult<(Vec<Complex64>, usize)> {
    let s = lippmann_schwinger_solve(
        &matrix(h)?,
        &matrix(v)?,
        &DVector::from_vec(phi),
        energy,
        eta,
        tol,
        max_iter,
    )
    .map_err(err)?;
    Ok((s.state.iter().copied().collect(), s.iterations))
}

#[pymodule]
fn detsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<StateVector>()?;
    m.add_class::<WaveFunction>()?;
    m.add_function(wrap_pyfunction!(measure, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(partial_measure, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(propagate, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(golden_rule, m)?)?;
    m.add_function(wrap_pyfunction!(lippmann_schwinger, m)?)?;
    Ok(())
}
