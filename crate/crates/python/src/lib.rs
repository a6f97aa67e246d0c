//! Python bindings. Matrices cross the boundary as lists of row lists.

use nalgebra::DMatrix;
use num_complex::Complex64;
use poset_h2_core::io::{self, ConfigEcho, PlantFile, ResultFile, Rows};
use poset_h2_core::verify::{self as checks, Artifacts, Tolerances, Verdict};
use poset_h2_core::{statespace, FrequencyGrid, PlantData, SynthesisOptions, SynthesisResult};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn io_err(e: io::IoError) -> PyErr {
    match e {
        io::IoError::Read { .. } => PyIOError::new_err(e.to_string()),
        _ => value_err(e),
    }
}

fn matrix(name: &str, rows: &Rows) -> PyResult<DMatrix<f64>> {
    io::from_rows(name, rows, None).map_err(io_err)
}

/// Like [`matrix`] but keeps the column count of an empty row list.
fn matrix_cols(name: &str, rows: &Rows, cols: usize) -> PyResult<DMatrix<f64>> {
    io::from_rows(name, rows, Some(cols)).map_err(io_err)
}

#[pyclass(name = "Poset", module = "poset_h2", frozen)]
struct PyPoset(poset_h2_core::Poset);

impl PyPoset {
    fn idx(&self, label: &str) -> PyResult<usize> {
        self.0.index_of(label).map_err(value_err)
    }

    fn labels_of(&self, ids: Vec<usize>) -> Vec<String> {
        ids.into_iter().map(|i| self.0.label(i).to_string()).collect()
    }
}

#[pymethods]
impl PyPoset {
    #[new]
    fn new(elements: Vec<String>, hasse_edges: Vec<(String, String)>) -> PyResult<Self> {
        poset_h2_core::Poset::build(&elements, &hasse_edges).map(PyPoset).map_err(value_err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Poset({:?})", self.0.labels())
    }

    /// Labels in the internal linear-extension order.
    #[getter]
    fn labels(&self) -> Vec<String> {
        self.0.labels().to_vec()
    }

    #[getter]
    fn sigma(&self) -> usize {
        self.0.sigma()
    }

    fn leq(&self, a: &str, b: &str) -> PyResult<bool> {
        Ok(self.0.leq(self.idx(a)?, self.idx(b)?))
    }

    fn downstream(&self, j: &str) -> PyResult<Vec<String>> {
        Ok(self.labels_of(self.0.downstream(self.idx(j)?)))
    }

    fn strict_downstream(&self, j: &str) -> PyResult<Vec<String>> {
        Ok(self.labels_of(self.0.strict_downstream(self.idx(j)?)))
    }

    fn upstream(&self, j: &str) -> PyResult<Vec<String>> {
        Ok(self.labels_of(self.0.upstream(self.idx(j)?)))
    }

    fn off_stream(&self, j: &str) -> PyResult<Vec<String>> {
        Ok(self.labels_of(self.0.off_stream(self.idx(j)?)))
    }

    /// Every chain from `i` to `j` as a list of covering pairs.
    fn chains(&self, i: &str, j: &str) -> PyResult<Vec<Vec<(String, String)>>> {
        let chains = self.0.chains_between(self.idx(i)?, self.idx(j)?).map_err(value_err)?;
        Ok(chains
            .into_iter()
            .map(|c| {
                c.into_iter()
                    .map(|(a, b)| (self.0.label(a).to_string(), self.0.label(b).to_string()))
                    .collect()
            })
            .collect())
    }
}

#[pyclass(name = "StateSpace", module = "poset_h2", frozen)]
struct PyStateSpace(statespace::StateSpace);

#[pymethods]
impl PyStateSpace {
    #[new]
    fn new(a: Rows, b: Rows, c: Rows, d: Rows) -> PyResult<Self> {
        let d = matrix("D", &d)?;
        let n = a.len();
        let sys = statespace::StateSpace::new(
            matrix_cols("A", &a, n)?,
            matrix_cols("B", &b, d.ncols())?,
            matrix_cols("C", &c, n)?,
            d,
        )
        .map_err(value_err)?;
        Ok(PyStateSpace(sys))
    }

    fn __repr__(&self) -> String {
        format!(
            "StateSpace(order={}, inputs={}, outputs={})",
            self.0.order(),
            self.0.n_inputs(),
            self.0.n_outputs()
        )
    }

    #[getter]
    fn order(&self) -> usize {
        self.0.order()
    }

    #[getter]
    fn a(&self) -> Rows {
        io::to_rows(self.0.a())
    }

    #[getter]
    fn b(&self) -> Rows {
        io::to_rows(self.0.b())
    }

    #[getter]
    fn c(&self) -> Rows {
        io::to_rows(self.0.c())
    }

    #[getter]
    fn d(&self) -> Rows {
        io::to_rows(self.0.d())
    }

    /// Transfer matrix at the complex frequency `s`.
    fn evaluate(&self, s: Complex64) -> PyResult<Vec<Vec<Complex64>>> {
        let g = self.0.evaluate(s).map_err(value_err)?;
        Ok(g.row_iter().map(|r| r.iter().copied().collect()).collect())
    }

    fn poles(&self) -> PyResult<Vec<Complex64>> {
        self.0.poles().map_err(value_err)
    }

    /// H2 norm; infinite when unstable or not strictly proper.
    fn h2(&self) -> f64 {
        statespace::h2_norm(&self.0)
    }
}

/// Centralized solution for `[A | F  B ; C | 0  D]`: dict with `x`, `gain`,
/// `q` and `residual`.
#[pyfunction]
fn ric<'py>(py: Python<'py>, a: Rows, b: Rows, c: Rows, d: Rows, f: Rows) -> PyResult<Bound<'py, PyDict>> {
    let n = a.len();
    let d = matrix("D", &d)?;
    let sol = poset_h2_core::ric(
        &matrix_cols("A", &a, n)?,
        &matrix_cols("B", &b, d.ncols())?,
        &matrix_cols("C", &c, n)?,
        &d,
        &matrix("F", &f)?,
    )
    .map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("x", io::to_rows(&sol.x))?;
    out.set_item("gain", io::to_rows(&sol.gain))?;
    out.set_item("q", PyStateSpace(sol.q))?;
    out.set_item("residual", sol.residual)?;
    Ok(out)
}

#[pyclass(name = "Plant", module = "poset_h2", frozen)]
struct PyPlant(PlantData);

#[pymethods]
impl PyPlant {
    #[staticmethod]
    #[pyo3(signature = (text, atol = 1e-9))]
    fn from_json(text: &str, atol: f64) -> PyResult<Self> {
        let file = PlantFile::from_json_str(text).map_err(io_err)?;
        file.to_plant(atol).map(PyPlant).map_err(io_err)
    }

    #[staticmethod]
    #[pyo3(signature = (path, atol = 1e-9))]
    fn read(path: &str, atol: f64) -> PyResult<Self> {
        PlantFile::read(path).and_then(|f| f.to_plant(atol)).map(PyPlant).map_err(io_err)
    }

    fn to_json(&self) -> String {
        io::to_json_string(&PlantFile::from_plant(&self.0))
    }

    #[getter]
    fn poset(&self) -> PyPoset {
        PyPoset(self.0.poset().clone())
    }

    fn open_loop(&self) -> PyStateSpace {
        PyStateSpace(self.0.open_loop())
    }

    fn closed_loop(&self, k: &PyStateSpace) -> PyResult<PyStateSpace> {
        self.0.closed_loop(&k.0).map(PyStateSpace).map_err(value_err)
    }
}

fn verdict_dicts<'py>(py: Python<'py>, verdicts: &[Verdict]) -> PyResult<Vec<Bound<'py, PyDict>>> {
    verdicts
        .iter()
        .map(|v| {
            let d = PyDict::new(py);
            d.set_item("check_name", &v.check_name)?;
            d.set_item("passed", v.passed)?;
            d.set_item("measured", v.measured)?;
            d.set_item("tolerance", v.tolerance)?;
            d.set_item("reference", &v.reference)?;
            Ok(d)
        })
        .collect()
}

#[pyclass(name = "Synthesis", module = "poset_h2", frozen)]
struct PySynthesis {
    result: SynthesisResult,
    verdicts: Vec<Verdict>,
    echo: ConfigEcho,
}

#[pymethods]
impl PySynthesis {
    #[getter]
    fn degree(&self) -> usize {
        self.result.k_star.order()
    }

    #[getter]
    fn degree_bound(&self) -> usize {
        self.result.degree_bound
    }

    #[getter]
    fn controller(&self) -> PyStateSpace {
        PyStateSpace(self.result.k_star.clone())
    }

    #[getter]
    fn phi(&self) -> PyStateSpace {
        PyStateSpace(self.result.phi.clone())
    }

    #[getter]
    fn gamma(&self) -> PyStateSpace {
        PyStateSpace(self.result.gamma.clone())
    }

    #[getter]
    fn k_phi(&self) -> PyStateSpace {
        PyStateSpace(self.result.k_phi.clone())
    }

    #[getter]
    fn q_star(&self) -> PyStateSpace {
        PyStateSpace(self.result.q_star.clone())
    }

    /// Per-element gains `Ric(↓j)` in internal element order.
    #[getter]
    fn gains(&self) -> Vec<Rows> {
        self.result.gains.iter().map(|g| io::to_rows(&g.gain)).collect()
    }

    /// `(h_open, h_centralized, h_decentralized)`.
    #[getter]
    fn norms(&self) -> (f64, f64, f64) {
        let n = self.result.norms;
        (n.h_open, n.h_centralized, n.h_decentralized)
    }

    #[getter]
    fn verdicts<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        verdict_dicts(py, &self.verdicts)
    }

    fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    /// The result file the command-line tool writes.
    fn to_json(&self, plant: &PyPlant) -> String {
        ResultFile::new(&plant.0, &self.result, &self.verdicts, self.echo).to_json_string()
    }
}

/// Synthesizes and certifies the optimal poset-causal controller.
#[pyfunction]
#[pyo3(signature = (plant, atol = 1e-9, parallel = true, margin = 0.0, freq_samples = 20))]
fn synthesize(plant: &PyPlant, atol: f64, parallel: bool, margin: f64, freq_samples: usize) -> PyResult<PySynthesis> {
    let grid = FrequencyGrid::new(freq_samples);
    let opts = SynthesisOptions { atol, parallel, margin, grid };
    let result = poset_h2_core::synthesize(&plant.0, &opts).map_err(value_err)?;
    let tol = Tolerances { stability_margin: margin, ..Tolerances::default() };
    let verdicts = checks::run_all(&plant.0, &Artifacts::from(&result), &tol, &grid).verdicts;
    let echo = ConfigEcho { atol, freq_samples, parallel, margin };
    Ok(PySynthesis { result, verdicts, echo })
}

/// Re-runs every check against a stored result file.
#[pyfunction]
#[pyo3(signature = (plant, result_json, margin = 0.0, freq_samples = 20))]
fn verify<'py>(
    py: Python<'py>,
    plant: &PyPlant,
    result_json: &str,
    margin: f64,
    freq_samples: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let stored = ResultFile::from_json_str(result_json).map_err(io_err)?;
    let art = stored.artifacts(&plant.0).map_err(io_err)?;
    let tol = Tolerances { stability_margin: margin, ..Tolerances::default() };
    let report = checks::run_all(&plant.0, &art, &tol, &FrequencyGrid::new(freq_samples));
    verdict_dicts(py, &report.verdicts)
}

/// `(h_open, h_centralized, h_closed)` for an arbitrary controller.
#[pyfunction]
fn norms(plant: &PyPlant, controller: &PyStateSpace) -> PyResult<(f64, f64, f64)> {
    let n = checks::norm_report(&plant.0, &controller.0).map_err(value_err)?;
    Ok((n.h_open, n.h_centralized, n.h_decentralized))
}

#[pymodule]
fn poset_h2(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPoset>()?;
    m.add_class::<PyStateSpace>()?;
    m.add_class::<PyPlant>()?;
    m.add_class::<PySynthesis>()?;
    m.add_function(wrap_pyfunction!(ric, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(norms, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
