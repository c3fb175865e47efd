//! Python bindings for the fracsim core: covariance models, kriging,
//! normal-score transforms, trace analysis, and the growth simulator.
//!
//! The shapes crossing the boundary stay plain — tuples, lists, and JSON
//! strings — so Python callers don't need stub files to get started.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use fracsim::analyze;
use fracsim::config::SimConfig;
use fracsim::geometry::{Point, Trace, TraceKind};
use fracsim::growth::run_simulation;
use fracsim::io::{load_network, load_traces, NetworkFile};
use fracsim::kriging::{self, KrigingMethod};
use fracsim::transform::{self, NormalScoreTable};
use fracsim::variogram;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn parse_method(name: &str) -> PyResult<KrigingMethod> {
    match name {
        "simple" => Ok(KrigingMethod::Simple),
        "ordinary" => Ok(KrigingMethod::Ordinary),
        other => Err(value_err(format!(
            "kriging method must be \"simple\" or \"ordinary\", got \"{other}\""
        ))),
    }
}

/// Nugget + spherical covariance structure.
#[pyclass(name = "SphericalModel", from_py_object)]
#[derive(Clone)]
struct PySphericalModel {
    inner: variogram::SphericalModel,
}

#[pymethods]
impl PySphericalModel {
    #[new]
    fn new(nugget: f64, sill: f64, range: f64) -> PyResult<Self> {
        if nugget < 0.0 || sill < 0.0 || range <= 0.0 || nugget + sill == 0.0 {
            return Err(value_err("need nugget >= 0, sill >= 0, range > 0, nugget + sill > 0"));
        }
        Ok(PySphericalModel { inner: variogram::SphericalModel::new(nugget, sill, range) })
    }

    /// Semivariance gamma(h).
    fn gamma(&self, h: f64) -> PyResult<f64> {
        if h < 0.0 {
            return Err(value_err("lag must be non-negative"));
        }
        Ok(self.inner.gamma(h))
    }

    /// Covariance C(h) = C(0) - gamma(h).
    fn covariance(&self, h: f64) -> PyResult<f64> {
        if h < 0.0 {
            return Err(value_err("lag must be non-negative"));
        }
        Ok(self.inner.covariance(h))
    }

    /// Total sill C(0) = nugget + sill.
    fn total_sill(&self) -> f64 {
        self.inner.total_sill()
    }

    fn __repr__(&self) -> String {
        format!(
            "SphericalModel(nugget={}, sill={}, range={})",
            self.inner.nugget, self.inner.sill, self.inner.range
        )
    }
}

/// Piecewise-linear normal-score transform built from data.
#[pyclass(name = "NormalScoreTable")]
struct PyNormalScoreTable {
    inner: NormalScoreTable,
}

#[pymethods]
impl PyNormalScoreTable {
    #[new]
    fn new(values: Vec<f64>) -> PyResult<Self> {
        Ok(PyNormalScoreTable { inner: NormalScoreTable::build(&values).map_err(value_err)? })
    }

    /// Data value -> standard normal score.
    fn to_normal(&self, z: f64) -> f64 {
        self.inner.to_normal(z)
    }

    /// Standard normal score -> data value, clamped to [0, 180).
    #[allow(clippy::wrong_self_convention)] // mirrors the core API name
    fn from_normal(&self, y: f64) -> f64 {
        self.inner.from_normal(y)
    }
}

/// A fracture network: known and/or simulated polyline traces.
#[pyclass(name = "Network")]
struct PyNetwork {
    traces: Vec<Trace>,
}

#[pymethods]
impl PyNetwork {
    /// Load a plain trace file or a network JSON file (sniffed by content).
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let head = std::fs::read_to_string(path).map_err(value_err)?;
        let traces = if head.trim_start().starts_with('{') {
            load_network(path).map_err(value_err)?.to_traces().map_err(value_err)?
        } else {
            load_traces(path).map_err(value_err)?.traces
        };
        Ok(PyNetwork { traces })
    }

    fn __len__(&self) -> usize {
        self.traces.len()
    }

    /// Polylines as lists of (x, y) vertex tuples.
    fn polylines(&self) -> Vec<Vec<(f64, f64)>> {
        self.traces
            .iter()
            .map(|t| t.polyline().iter().map(|p| (p.x, p.y)).collect())
            .collect()
    }

    /// Per-trace kind: "known" or "simulated".
    fn kinds(&self) -> Vec<&'static str> {
        self.traces
            .iter()
            .map(|t| match t.kind {
                TraceKind::Known => "known",
                TraceKind::Simulated => "simulated",
            })
            .collect()
    }

    /// Full trace statistics as a JSON string.
    fn stats_json(&self) -> PyResult<String> {
        let stats = analyze::compute_stats(&self.traces).map_err(value_err)?;
        serde_json::to_string(&stats).map_err(runtime_err)
    }

    /// (angle, count, prominence) peaks of the raw azimuth histogram.
    fn peaks(&self) -> PyResult<Vec<(f64, u64, f64)>> {
        let stats = analyze::compute_stats(&self.traces).map_err(value_err)?;
        Ok(analyze::find_peaks(&stats.raw_histogram, None)
            .peaks
            .iter()
            .map(|p| (p.angle, p.count, p.prominence))
            .collect())
    }

    fn __repr__(&self) -> String {
        let nseg: usize = self.traces.iter().map(|t| t.segment_count()).sum();
        format!("Network({} traces, {nseg} segments)", self.traces.len())
    }
}

/// Fold an azimuth into [0, 180).
#[pyfunction]
fn fold_azimuth(a: f64) -> f64 {
    transform::fold_azimuth(a)
}

/// Circular (mean, std) of angles in degrees for the given period.
#[pyfunction]
#[pyo3(signature = (angles, period=180.0))]
fn circular_stats(angles: Vec<f64>, period: f64) -> PyResult<(f64, f64)> {
    if period <= 0.0 {
        return Err(value_err("period must be positive"));
    }
    transform::circular_stats(&angles, period).map_err(value_err)
}

/// Solve a kriging system.
///
/// `points` are (x, y, value) triples; returns (estimate, variance, weights).
#[pyfunction]
#[pyo3(signature = (points, target, model, method="simple", mean=0.0))]
fn krige(
    points: Vec<(f64, f64, f64)>,
    target: (f64, f64),
    model: PySphericalModel,
    method: &str,
    mean: f64,
) -> PyResult<(f64, f64, Vec<f64>)> {
    let pts = points
        .iter()
        .map(|&(x, y, v)| Point::new(x, y).map(|p| (p, v)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(value_err)?;
    let tgt = Point::new(target.0, target.1).map_err(value_err)?;
    let r = kriging::solve(&pts, tgt, &model.inner, parse_method(method)?, mean)
        .map_err(value_err)?;
    Ok((r.estimate, r.variance, r.weights))
}

/// Run a growth simulation from a config file, returning the resulting
/// network and the run report as a JSON string.
#[pyfunction]
#[pyo3(signature = (config_path, seed=None))]
fn simulate(config_path: &str, seed: Option<u64>) -> PyResult<(PyNetwork, String)> {
    let mut cfg = SimConfig::load(config_path).map_err(value_err)?;
    if let Some(s) = seed {
        cfg.rng_seed = s;
    }
    let known = match &cfg.known_traces {
        Some(p) => load_traces(p).map_err(value_err)?.traces,
        None => Vec::new(),
    };
    let sim = run_simulation(&cfg, &known).map_err(runtime_err)?;
    let report = serde_json::to_string(&sim.report).map_err(runtime_err)?;
    Ok((PyNetwork { traces: sim.network.traces }, report))
}

/// Simulate and write the canonical network JSON file in one step.
#[pyfunction]
#[pyo3(signature = (config_path, out_path, seed=None))]
fn simulate_to_file(config_path: &str, out_path: &str, seed: Option<u64>) -> PyResult<()> {
    let mut cfg = SimConfig::load(config_path).map_err(value_err)?;
    if let Some(s) = seed {
        cfg.rng_seed = s;
    }
    let known = match &cfg.known_traces {
        Some(p) => load_traces(p).map_err(value_err)?.traces,
        None => Vec::new(),
    };
    let sim = run_simulation(&cfg, &known).map_err(runtime_err)?;
    let nf = NetworkFile::from_network(&sim.network, Some(&cfg), Some(&sim.report));
    std::fs::write(out_path, nf.canonical_json()).map_err(runtime_err)
}

/// Histogram/peak comparison of two networks as a JSON string.
#[pyfunction]
fn compare(a: &PyNetwork, b: &PyNetwork) -> PyResult<String> {
    let report = analyze::compare_networks(&a.traces, &b.traces).map_err(value_err)?;
    serde_json::to_string(&report).map_err(runtime_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_parse() {
        assert!(matches!(parse_method("simple"), Ok(KrigingMethod::Simple)));
        assert!(matches!(parse_method("ordinary"), Ok(KrigingMethod::Ordinary)));
        assert!(parse_method("universal").is_err());
    }

    #[test]
    fn model_constructor_validates() {
        assert!(PySphericalModel::new(1.0, 2.0, 50.0).is_ok());
        assert!(PySphericalModel::new(-1.0, 2.0, 50.0).is_err());
        assert!(PySphericalModel::new(0.0, 0.0, 50.0).is_err());
        assert!(PySphericalModel::new(1.0, 2.0, 0.0).is_err());
    }
}

#[pymodule]
fn fracsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", fracsim::VERSION)?;
    m.add_class::<PySphericalModel>()?;
    m.add_class::<PyNormalScoreTable>()?;
    m.add_class::<PyNetwork>()?;
    m.add_function(wrap_pyfunction!(fold_azimuth, m)?)?;
    m.add_function(wrap_pyfunction!(circular_stats, m)?)?;
    m.add_function(wrap_pyfunction!(krige, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_to_file, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    Ok(())
}
