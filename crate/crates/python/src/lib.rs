//! Python bindings: map and query files, configuration, the full relocalizer
//! and the rotation and stabbing solvers underneath it.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use satcm::config::Config as CoreConfig;
use satcm::error::Error;
use satcm::geometry::{rotation_error as core_rotation_error, Mat3, Vec3};
use satcm::io::{LabelRemap, LineMap as CoreMap, Query as CoreQuery};
use satcm::landscape::landscape as core_landscape;
use satcm::pipeline::{relocalize as core_relocalize, rotation_associations};
use satcm::rotation::{solve_rotation as core_solve_rotation, Association};
use satcm::saturation::{SaturationKind, SaturationSpec, WeightBank};
use satcm::stabbing::{sat_stab as core_sat_stab, TaggedInterval};
use satcm::synth::{synth_scene as core_synth, SceneSpec};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        Error::ContractViolation(m) => PyRuntimeError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn kind(s: &str) -> PyResult<SaturationKind> {
    s.parse().map_err(py_err)
}

fn mat(m: &Mat3) -> [[f64; 3]; 3] {
    [0, 1, 2].map(|r| [0, 1, 2].map(|c| m[(r, c)]))
}

fn from_rows(r: [[f64; 3]; 3]) -> Mat3 {
    Mat3::from_fn(|i, j| r[i][j])
}

fn vec3(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

/// A semantic 3D line map.
#[pyclass(name = "LineMap")]
struct LineMap(CoreMap);

#[pymethods]
impl LineMap {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        CoreMap::load(&path).map(LineMap).map_err(py_err)
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        CoreMap::from_json(s).map(LineMap).map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(py_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(&path).map_err(py_err)
    }

    /// `(endpoint_a, endpoint_b, label)` per line.
    fn lines(&self) -> Vec<([f64; 3], [f64; 3], u32)> {
        self.0
            .lines
            .iter()
            .map(|l| {
                let [a, b] = l.endpoints();
                (vec3(a), vec3(b), l.label())
            })
            .collect()
    }

    fn __len__(&self) -> usize {
        self.0.lines.len()
    }

    fn __repr__(&self) -> String {
        format!("LineMap({} lines, {} labels)", self.0.lines.len(), self.0.dictionary.len())
    }
}

/// A query image with labeled 2D lines.
#[pyclass(name = "Query")]
struct Query(CoreQuery);

#[pymethods]
impl Query {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        CoreQuery::load(&path).map(Query).map_err(py_err)
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        CoreQuery::from_json(s).map(Query).map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.0.lines.len()
    }

    fn __repr__(&self) -> String {
        format!("Query({} lines)", self.0.lines.len())
    }
}

/// Solver configuration; the same keys as the TOML file.
#[pyclass(name = "Config", skip_from_py_object)]
#[derive(Clone)]
struct Config(CoreConfig);

#[pymethods]
impl Config {
    #[new]
    fn new() -> Self {
        Config(CoreConfig::default())
    }

    #[staticmethod]
    fn from_toml(s: &str) -> PyResult<Self> {
        CoreConfig::from_toml_str(s).map(Config).map_err(py_err)
    }

    fn to_toml(&self) -> PyResult<String> {
        self.0.to_toml_string().map_err(py_err)
    }

    #[getter]
    fn saturation(&self) -> String {
        self.0.saturation.kind.to_string()
    }

    #[setter]
    fn set_saturation(&mut self, v: &str) -> PyResult<()> {
        self.0.saturation.kind = kind(v)?;
        Ok(())
    }

    #[getter]
    fn q(&self) -> f64 {
        self.0.saturation.q
    }

    #[setter]
    fn set_q(&mut self, v: f64) {
        self.0.saturation.q = v;
    }

    #[getter]
    fn epsilon_r(&self) -> f64 {
        self.0.rotation.epsilon_r
    }

    #[setter]
    fn set_epsilon_r(&mut self, v: f64) {
        self.0.rotation.epsilon_r = v;
    }

    #[getter]
    fn epsilon_t(&self) -> f64 {
        self.0.translation.epsilon_t
    }

    #[setter]
    fn set_epsilon_t(&mut self, v: f64) {
        self.0.translation.epsilon_t = v;
    }
}

fn config_or_default(c: Option<&Config>) -> PyResult<CoreConfig> {
    let c = c.map_or_else(CoreConfig::default, |c| c.0.clone());
    c.validate().map_err(py_err)?;
    Ok(c)
}

/// Full relocalization. The returned rotation is camera-to-world.
#[pyfunction]
#[pyo3(signature = (query, map, config=None))]
fn relocalize<'py>(py: Python<'py>, query: &Query, map: &LineMap, config: Option<&Config>) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config_or_default(config)?;
    let r = py
        .detach(|| core_relocalize(&query.0, &map.0, &cfg, &LabelRemap::default()))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("rotation", r.pose.as_ref().map(|p| mat(p.rotation())))?;
    d.set_item("translation", r.pose.as_ref().map(|p| vec3(p.translation())))?;
    d.set_item("value_r", r.value_r)?;
    d.set_item("value_t", r.value_t)?;
    d.set_item("inliers", r.inliers.clone())?;
    d.set_item("certified", r.certified())?;
    d.set_item("failure", r.failure.clone())?;
    d.set_item("time_ms", r.timings.total)?;
    Ok(d)
}

/// Globally optimal rotation from `(query index, normal, direction)` triples.
/// The searched rotation `W` maps map directions into the camera frame,
/// `n . W v = 0` for inliers; `rotation` is its transpose.
#[pyfunction]
#[pyo3(signature = (associations, saturation="likelihood", q=0.9, epsilon=0.015))]
fn solve_rotation<'py>(
    py: Python<'py>,
    associations: Vec<(usize, [f64; 3], [f64; 3])>,
    saturation: &str,
    q: f64,
    epsilon: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let assoc = associations
        .iter()
        .enumerate()
        .map(|(i, (k, n, v))| Association::new(*k, i, Vec3::from(*n), Vec3::from(*v)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(py_err)?;
    let spec = SaturationSpec::new(kind(saturation)?, q, epsilon, 1.0).map_err(py_err)?;
    let mut cfg = CoreConfig::default().rotation;
    cfg.epsilon_r = epsilon;
    let sol = py
        .detach(|| core_solve_rotation(&assoc, &spec, &cfg, None))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    let best = sol.candidates.first();
    d.set_item("rotation", best.map(|c| mat(&c.rotation)))?;
    d.set_item("axis", best.map(|c| vec3(&c.axis_angle.axis())))?;
    d.set_item("angle", best.map(|c| c.axis_angle.theta()))?;
    d.set_item("inliers", best.map(|c| c.inliers.clone()))?;
    d.set_item("value", sol.value)?;
    d.set_item("upper", sol.upper)?;
    d.set_item("certified", sol.certified)?;
    d.set_item("nodes", sol.nodes)?;
    Ok(d)
}

/// Saturated interval stabbing over `(lo, hi, sample)` intervals. Returns
/// the optimal value and the optimal regions.
#[pyfunction]
#[pyo3(signature = (intervals, saturation="identity", q=0.9, epsilon=0.015, upper_bound=1.0))]
fn sat_stab(
    intervals: Vec<(f64, f64, usize)>,
    saturation: &str,
    q: f64,
    epsilon: f64,
    upper_bound: f64,
) -> PyResult<(f64, Vec<(f64, f64)>)> {
    let spec = SaturationSpec::new(kind(saturation)?, q, epsilon, upper_bound).map_err(py_err)?;
    let mut ivs = Vec::with_capacity(intervals.len());
    let mut counts = Vec::new();
    for &(lo, hi, k) in &intervals {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(PyValueError::new_err(format!("interval [{lo}, {hi}] is empty")));
        }
        if counts.len() <= k {
            counts.resize(k + 1, 0);
        }
        counts[k] += 1;
        ivs.push(TaggedInterval::new(lo, hi, k));
    }
    let r = core_sat_stab(&ivs, &WeightBank::new(&spec, &counts));
    Ok((r.value, r.regions.intervals().iter().map(|iv| (iv.lo, iv.hi)).collect()))
}

/// Cumulative saturated weight of `n` inliers out of `m_k` candidates.
#[pyfunction]
#[pyo3(signature = (m_k, n, saturation="likelihood", q=0.9, epsilon=0.015, upper_bound=1.0))]
fn sigma(m_k: usize, n: usize, saturation: &str, q: f64, epsilon: f64, upper_bound: f64) -> PyResult<f64> {
    SaturationSpec::new(kind(saturation)?, q, epsilon, upper_bound)
        .and_then(|s| s.sigma(m_k, n))
        .map_err(py_err)
}

/// Angle (degrees) between two rotations.
#[pyfunction]
fn rotation_error(a: [[f64; 3]; 3], b: [[f64; 3]; 3]) -> f64 {
    core_rotation_error(&from_rows(a), &from_rows(b))
}

/// Objective over a grid of rotation axes, each at its best amplitude,
/// normalized to a maximum of 1. Returns `(alphas, phis, values)` with
/// angles in radians and `values[i][j]` at `(alphas[i], phis[j])`.
#[pyfunction]
#[pyo3(signature = (query, map, saturation="likelihood", step_deg=1.0, config=None))]
#[allow(clippy::type_complexity)]
fn landscape(
    py: Python<'_>,
    query: &Query,
    map: &LineMap,
    saturation: &str,
    step_deg: f64,
    config: Option<&Config>,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> {
    let cfg = config_or_default(config)?;
    let eps = cfg.rotation.epsilon_r;
    let spec = SaturationSpec::new(kind(saturation)?, cfg.saturation.q, eps, cfg.saturation.upper_bound).map_err(py_err)?;
    let assoc = rotation_associations(&query.0, &map.0, &LabelRemap::default()).map_err(py_err)?;
    let l = py.detach(|| core_landscape(&assoc, &spec, eps, step_deg)).map_err(py_err)?;
    let rows = l.values.chunks(l.phis.len()).map(<[f64]>::to_vec).collect();
    Ok((l.alphas, l.phis, rows))
}

/// Seeded synthetic scene. Returns the map and, per query, a dict with the
/// query, its camera-to-world pose and the true match of each line.
#[pyfunction]
#[pyo3(signature = (seed=0, n_queries=1, n_query_lines=15, n_map_lines=120, dictionary_size=8, noise_rad=0.0))]
fn synth_scene<'py>(
    py: Python<'py>,
    seed: u64,
    n_queries: usize,
    n_query_lines: usize,
    n_map_lines: usize,
    dictionary_size: usize,
    noise_rad: f64,
) -> PyResult<(LineMap, Vec<Bound<'py, PyDict>>)> {
    let spec = SceneSpec {
        seed,
        n_queries,
        n_query_lines,
        n_map_lines,
        dictionary_size,
        noise_rad,
        ..SceneSpec::default()
    };
    let scene = core_synth(&spec).map_err(py_err)?;
    let mut out = Vec::with_capacity(scene.queries.len());
    for q in scene.queries {
        let d = PyDict::new(py);
        d.set_item("rotation", mat(q.pose.rotation()))?;
        d.set_item("translation", vec3(q.pose.translation()))?;
        d.set_item("true_matches", q.true_matches.clone())?;
        d.set_item("query", Query(q.query))?;
        out.push(d);
    }
    Ok((LineMap(scene.map), out))
}

#[pymodule]
#[pyo3(name = "satcm")]
fn satcm_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<LineMap>()?;
    m.add_class::<Query>()?;
    m.add_class::<Config>()?;
    m.add_function(wrap_pyfunction!(relocalize, m)?)?;
    m.add_function(wrap_pyfunction!(solve_rotation, m)?)?;
    m.add_function(wrap_pyfunction!(sat_stab, m)?)?;
    m.add_function(wrap_pyfunction!(sigma, m)?)?;
    m.add_function(wrap_pyfunction!(rotation_error, m)?)?;
    m.add_function(wrap_pyfunction!(landscape, m)?)?;
    m.add_function(wrap_pyfunction!(synth_scene, m)?)?;
    Ok(())
}
