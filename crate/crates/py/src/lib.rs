//! Python bindings for the perfect-graph modification solvers.

use std::time::Duration;

use perfect_core::expectation::{expected_counts as core_expected, monte_carlo_counts as core_monte_carlo};
use perfect_core::{self as core, ErParams, HeuristicMode, SolveResult, StrategyConfig, VertexPair};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Simple undirected graph on vertices `0..n`.
#[pyclass(name = "Graph", module = "perfect_graphs", from_py_object)]
#[derive(Clone)]
struct PyGraph {
    inner: core::Graph,
}

impl PyGraph {
    fn check(&self, u: usize, v: usize) -> PyResult<()> {
        let n = self.inner.n();
        if u >= n || v >= n || u == v {
            return Err(PyValueError::new_err(format!("invalid pair ({u}, {v}) for n={n}")));
        }
        Ok(())
    }
}

#[pymethods]
impl PyGraph {
    #[new]
    #[pyo3(signature = (n, edges = Vec::new()))]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        let mut g = PyGraph { inner: core::Graph::new(n) };
        for (u, v) in edges {
            g.check(u, v)?;
            g.inner.add_edge(u, v);
        }
        Ok(g)
    }

    /// Erdős–Rényi graph G(n, p) drawn from a seeded ChaCha8 stream.
    #[staticmethod]
    fn erdos_renyi(n: usize, p: f64, seed: u64) -> PyResult<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(PyValueError::new_err(format!("edge probability {p} outside [0, 1]")));
        }
        Ok(PyGraph { inner: core::generate_er(ErParams::new(n, p, seed)) })
    }

    #[staticmethod]
    fn cycle(n: usize) -> Self {
        PyGraph { inner: core::Graph::cycle(n) }
    }

    /// Parses the `p edge n m` / `e u v` text format (1-based labels).
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        core::io::read_graph(text).map(|inner| PyGraph { inner }).map_err(value_error)
    }

    fn to_text(&self) -> String {
        core::io::write_graph(&self.inner)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().map(|vp| (vp.i, vp.j)).collect()
    }

    fn has_edge(&self, u: usize, v: usize) -> PyResult<bool> {
        self.check(u, v)?;
        Ok(self.inner.has_edge(u, v))
    }

    fn add_edge(&mut self, u: usize, v: usize) -> PyResult<()> {
        self.check(u, v)?;
        self.inner.add_edge(u, v);
        Ok(())
    }

    fn remove_edge(&mut self, u: usize, v: usize) -> PyResult<()> {
        self.check(u, v)?;
        self.inner.remove_edge(u, v);
        Ok(())
    }

    fn complement(&self) -> Self {
        PyGraph { inner: self.inner.complement() }
    }

    fn hamming_distance(&self, other: &PyGraph) -> PyResult<usize> {
        if other.inner.n() != self.inner.n() {
            return Err(PyValueError::new_err("graphs have different orders"));
        }
        Ok(self.inner.hamming_distance(&other.inner))
    }

    fn is_perfect(&self) -> bool {
        core::is_perfect(&self.inner)
    }

    fn __eq__(&self, other: &PyGraph) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, edges={})", self.inner.n(), self.inner.edge_count())
    }
}

fn holes_out(holes: Vec<core::Hole>) -> Vec<Vec<usize>> {
    holes.into_iter().map(|h| h.vertices().to_vec()).collect()
}

/// Odd holes as vertex cycles, each starting at its smallest vertex.
#[pyfunction]
#[pyo3(signature = (g, limit = None))]
fn find_odd_holes(g: &PyGraph, limit: Option<usize>) -> Vec<Vec<usize>> {
    holes_out(core::find_odd_holes(&g.inner, limit))
}

/// Odd antiholes of length at least 7, as cycles of the complement.
#[pyfunction]
#[pyo3(signature = (g, limit = None))]
fn find_odd_antiholes(g: &PyGraph, limit: Option<usize>) -> Vec<Vec<usize>> {
    holes_out(core::find_odd_antiholes(&g.inner, limit))
}

#[pyfunction]
fn is_perfect(g: &PyGraph) -> bool {
    core::is_perfect(&g.inner)
}

/// `(e_holes, e_antiholes, e_total)` for G(n, p).
#[pyfunction]
fn expected_counts(n: usize, p: f64) -> PyResult<(f64, f64, f64)> {
    let e = core_expected(n, p).map_err(value_error)?;
    Ok((e.e_holes, e.e_antiholes, e.e_total))
}

/// `(mean_holes, se_holes, mean_antiholes, se_antiholes)` over sampled graphs.
#[pyfunction]
fn monte_carlo_counts(n: usize, p: f64, samples: usize, seed: u64) -> PyResult<(f64, f64, f64, f64)> {
    if samples == 0 || !(0.0..=1.0).contains(&p) {
        return Err(PyValueError::new_err("need samples >= 1 and p in [0, 1]"));
    }
    let mc = core_monte_carlo(n, p, samples, seed);
    Ok((mc.mean_holes, mc.se_holes, mc.mean_antiholes, mc.se_antiholes))
}

fn config(strategy: &str, time_limit: Option<f64>) -> PyResult<StrategyConfig> {
    let mut cfg = StrategyConfig::parse(strategy).map_err(value_error)?;
    if let Some(t) = time_limit {
        cfg.time_limit = Some(Duration::try_from_secs_f64(t).map_err(value_error)?);
    }
    Ok(cfg)
}

fn result_dict<'py>(py: Python<'py>, r: SolveResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("status", r.status.as_str())?;
    d.set_item("objective", r.objective)?;
    d.set_item("lower_bound", r.lower_bound)?;
    d.set_item("gap_pct", r.gap_pct)?;
    d.set_item("iterations", r.iterations)?;
    d.set_item("hole_cuts", r.hole_cuts)?;
    d.set_item("antihole_cuts", r.antihole_cuts)?;
    d.set_item("heuristic_improvements", r.heuristic_improvements)?;
    d.set_item("time_s", r.total_time.as_secs_f64())?;
    d.set_item("graph", r.output.map(|inner| PyGraph { inner }))?;
    Ok(d)
}

/// Minimum number of edge flips making `g` perfect.
#[pyfunction]
#[pyo3(signature = (g, strategy = "base", time_limit = None))]
fn solve_edit<'py>(py: Python<'py>, g: &PyGraph, strategy: &str, time_limit: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(strategy, time_limit)?;
    let r = py.detach(|| core::solve_edit(&g.inner, &cfg));
    result_dict(py, r)
}

/// Minimum number of edge additions making `g` perfect.
#[pyfunction]
#[pyo3(signature = (g, strategy = "base", time_limit = None))]
fn solve_complete<'py>(py: Python<'py>, g: &PyGraph, strategy: &str, time_limit: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(strategy, time_limit)?;
    let r = py.detach(|| core::solve_complete(&g.inner, &cfg));
    result_dict(py, r)
}

/// Minimum number of edge deletions making `g` perfect.
#[pyfunction]
#[pyo3(signature = (g, strategy = "base", time_limit = None))]
fn solve_delete<'py>(py: Python<'py>, g: &PyGraph, strategy: &str, time_limit: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(strategy, time_limit)?;
    let r = py.detach(|| core::solve_delete(&g.inner, &cfg));
    result_dict(py, r)
}

/// Whether a perfect graph lies between `g` and `g` plus `optional` pairs.
#[pyfunction]
#[pyo3(signature = (g, optional, strategy = "base", time_limit = None))]
fn solve_sandwich<'py>(
    py: Python<'py>,
    g: &PyGraph,
    optional: Vec<(usize, usize)>,
    strategy: &str,
    time_limit: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(strategy, time_limit)?;
    let mut pairs = Vec::with_capacity(optional.len());
    for (u, v) in optional {
        g.check(u, v)?;
        pairs.push(VertexPair::new(u, v));
    }
    let r = py
        .detach(|| core::solve_sandwich(&g.inner, &pairs, &cfg))
        .map_err(value_error)?;
    result_dict(py, r)
}

/// Greedy flip heuristic: `(perfect, graph, flips)`.
#[pyfunction]
#[pyo3(signature = (g, additions_only = false))]
fn run_heuristic(g: &PyGraph, additions_only: bool) -> (bool, PyGraph, usize) {
    let mode = if additions_only { HeuristicMode::AdditionsOnly } else { HeuristicMode::EditBothWays };
    let run = core::run_heuristic(&g.inner, mode);
    let flips = run.flips().map_or(0, |f| f.len());
    (run.is_perfect(), PyGraph { inner: run.graph().clone() }, flips)
}

#[pymodule]
fn perfect_graphs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(find_odd_holes, m)?)?;
    m.add_function(wrap_pyfunction!(find_odd_antiholes, m)?)?;
    m.add_function(wrap_pyfunction!(is_perfect, m)?)?;
    m.add_function(wrap_pyfunction!(expected_counts, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_counts, m)?)?;
    m.add_function(wrap_pyfunction!(solve_edit, m)?)?;
    m.add_function(wrap_pyfunction!(solve_complete, m)?)?;
    m.add_function(wrap_pyfunction!(solve_delete, m)?)?;
    m.add_function(wrap_pyfunction!(solve_sandwich, m)?)?;
    m.add_function(wrap_pyfunction!(run_heuristic, m)?)?;
    Ok(())
}
