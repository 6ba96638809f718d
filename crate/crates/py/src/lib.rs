//! Python bindings: instances, schedulers, validation, MILP export and
//! sweeps.

use std::fmt::Display;
use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use coflow_core::benchmarks::{self, SchedulerId};
use coflow_core::harness::{self, SweepAxis, SweepOptions, SweepSpec};
use coflow_core::instance::{self, ProblemInstance};
use coflow_core::io;
use coflow_core::schedule::{self, Schedule};

fn value_err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "GeneratorConfig", module = "coflow", from_py_object)]
#[derive(Clone)]
pub struct PyGeneratorConfig {
    #[pyo3(get, set)]
    pub devices: usize,
    #[pyo3(get, set)]
    pub coflows: usize,
    #[pyo3(get, set)]
    pub flows: usize,
    #[pyo3(get, set)]
    pub sources: usize,
    #[pyo3(get, set)]
    pub bandwidth: f64,
    #[pyo3(get, set)]
    pub data: f64,
    #[pyo3(get, set)]
    pub release_scale: f64,
    #[pyo3(get, set)]
    pub seed: u64,
}

impl PyGeneratorConfig {
    fn to_core(&self) -> instance::GeneratorConfig {
        instance::GeneratorConfig {
            num_devices: self.devices,
            num_coflows: self.coflows,
            flows_per_coflow: self.flows,
            sources_per_flow: self.sources,
            mean_bandwidth: self.bandwidth,
            mean_data: self.data,
            release_scale: self.release_scale,
            ..instance::GeneratorConfig::default()
        }
        .with_seed(self.seed)
    }
}

#[pymethods]
impl PyGeneratorConfig {
    #[new]
    #[pyo3(signature = (devices=40, coflows=20, flows=3, sources=3, bandwidth=20.0, data=2.0, release_scale=1.0, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        devices: usize,
        coflows: usize,
        flows: usize,
        sources: usize,
        bandwidth: f64,
        data: f64,
        release_scale: f64,
        seed: u64,
    ) -> Self {
        Self {
            devices,
            coflows,
            flows,
            sources,
            bandwidth,
            data,
            release_scale,
            seed,
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "GeneratorConfig(devices={}, coflows={}, flows={}, sources={}, bandwidth={}, data={}, release_scale={}, seed={})",
            self.devices, self.coflows, self.flows, self.sources, self.bandwidth, self.data, self.release_scale, self.seed
        )
    }
}

#[pyclass(name = "Instance", module = "coflow", frozen, skip_from_py_object)]
pub struct PyInstance {
    inner: Arc<ProblemInstance>,
}

#[pymethods]
impl PyInstance {
    #[staticmethod]
    fn generate(config: &PyGeneratorConfig) -> PyResult<Self> {
        let inner = instance::generate_instance(&config.to_core()).map_err(value_err)?;
        Ok(Self { inner: Arc::new(inner) })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = io::instance_from_json(text).map_err(value_err)?;
        Ok(Self { inner: Arc::new(inner) })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = io::read_instance(path).map_err(value_err)?;
        Ok(Self { inner: Arc::new(inner) })
    }

    fn to_json(&self) -> PyResult<String> {
        io::instance_to_json(&self.inner).map_err(value_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::write_instance(path, &self.inner).map_err(value_err)
    }

    #[getter]
    fn num_devices(&self) -> usize {
        self.inner.network().num_devices()
    }

    #[getter]
    fn num_links(&self) -> usize {
        self.inner.network().num_links()
    }

    #[getter]
    fn num_coflows(&self) -> usize {
        self.inner.num_coflows()
    }

    #[getter]
    fn num_flows(&self) -> usize {
        self.inner.num_flows()
    }

    /// `(coflow, flow)` pairs in canonical order.
    fn flow_ids(&self) -> Vec<(usize, usize)> {
        self.inner.flow_ids().iter().map(|id| (id.coflow, id.flow)).collect()
    }

    /// Seconds to push flow `(coflow, flow)` over hop `hop` of source `source`.
    fn transmission_time(&self, coflow: usize, flow: usize, source: usize, hop: usize) -> PyResult<f64> {
        let id = instance::FlowId::new(coflow, flow);
        if !self.inner.contains(id) {
            return Err(value_err(format!("no flow {id}")));
        }
        let f = self.inner.flow(id);
        if source >= f.sources.len() || hop >= f.hops(source) {
            return Err(value_err(format!("flow {id} has no source {source} hop {hop}")));
        }
        Ok(self.inner.transmission_time(id, source, hop))
    }

    /// The MILP in CPLEX LP format.
    fn export_milp(&self) -> String {
        schedule::export_milp(&self.inner).text
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(devices={}, links={}, coflows={}, flows={})",
            self.num_devices(),
            self.num_links(),
            self.num_coflows(),
            self.num_flows()
        )
    }
}

#[pyclass(name = "Schedule", module = "coflow", frozen, skip_from_py_object)]
pub struct PySchedule {
    inner: Schedule,
    instance: Arc<ProblemInstance>,
}

#[pymethods]
impl PySchedule {
    #[getter]
    fn sum_cct(&self) -> f64 {
        self.inner.sum_cct()
    }

    #[getter]
    fn cct(&self) -> Vec<f64> {
        self.inner.evaluated.cct.clone()
    }

    #[getter]
    fn fct(&self) -> Vec<f64> {
        self.inner.evaluated.fct.clone()
    }

    /// Chosen source index per flow, in canonical flow order.
    #[getter]
    fn sources(&self) -> Vec<usize> {
        self.inner.sources.as_slice().to_vec()
    }

    #[getter]
    fn priority(&self) -> Vec<(usize, usize)> {
        self.inner.priority.as_slice().iter().map(|id| (id.coflow, id.flow)).collect()
    }

    /// Per-subflow start times, `[flow][hop]`.
    #[getter]
    fn start(&self) -> Vec<Vec<f64>> {
        self.inner.evaluated.start.clone()
    }

    #[getter]
    fn finish(&self) -> Vec<Vec<f64>> {
        self.inner.evaluated.finish.clone()
    }

    /// Violation messages; empty when the schedule is feasible.
    fn violations(&self) -> Vec<String> {
        schedule::validate(&self.instance, &self.inner.sources, &self.inner.evaluated)
            .violations
            .iter()
            .map(|v| v.to_string())
            .collect()
    }

    fn to_json(&self) -> PyResult<String> {
        io::schedule_to_json(&self.instance, &self.inner).map_err(value_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::write_schedule(path, &self.instance, &self.inner).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Schedule(sum_cct={})", self.inner.sum_cct())
    }
}

/// Generates an instance; keyword arguments as in `GeneratorConfig`.
#[pyfunction]
#[pyo3(signature = (devices=40, coflows=20, flows=3, sources=3, seed=0))]
fn generate_instance(devices: usize, coflows: usize, flows: usize, sources: usize, seed: u64) -> PyResult<PyInstance> {
    let config = PyGeneratorConfig::new(devices, coflows, flows, sources, 20.0, 2.0, 1.0, seed);
    PyInstance::generate(&config)
}

/// Runs a scheduler by name; `seed` only matters for RANDOM.
#[pyfunction]
#[pyo3(signature = (instance, scheduler="SCASA", seed=0))]
fn solve(instance: &PyInstance, scheduler: &str, seed: u64) -> PyResult<PySchedule> {
    let id: SchedulerId = scheduler.parse().map_err(value_err)?;
    Ok(PySchedule {
        inner: benchmarks::solve(&instance.inner, id, seed),
        instance: instance.inner.clone(),
    })
}

/// Loads a schedule file written by `Schedule.save` or the CLI and
/// re-evaluates it against `instance`.
#[pyfunction]
fn load_schedule(instance: &PyInstance, path: &str) -> PyResult<PySchedule> {
    let file = io::read_schedule_file(path).map_err(value_err)?;
    Ok(PySchedule {
        inner: file.to_schedule(&instance.inner).map_err(value_err)?,
        instance: instance.inner.clone(),
    })
}

#[pyfunction]
fn validate(schedule: &PySchedule) -> Vec<String> {
    schedule.violations()
}

#[pyfunction]
fn export_milp(instance: &PyInstance) -> String {
    instance.export_milp()
}

#[pyfunction]
fn schedulers() -> Vec<&'static str> {
    SchedulerId::ALL.iter().map(|id| id.name()).collect()
}

/// Runs a sweep and returns one dict per (value, scheduler) row.
#[pyfunction]
#[pyo3(signature = (axis, values=None, iterations=30, base=None, schedulers=None, jobs=1))]
fn run_sweep<'py>(
    py: Python<'py>,
    axis: &str,
    values: Option<Vec<f64>>,
    iterations: usize,
    base: Option<PyGeneratorConfig>,
    schedulers: Option<Vec<String>>,
    jobs: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let axis: SweepAxis = axis.parse().map_err(value_err)?;
    let base = base.map(|b| b.to_core()).unwrap_or_default();
    let mut spec = SweepSpec::standard(axis, base, iterations);
    if let Some(v) = values {
        spec.values = v;
    }
    if let Some(names) = schedulers {
        spec.schedulers = names
            .iter()
            .map(|n| n.parse())
            .collect::<Result<_, _>>()
            .map_err(value_err)?;
    }
    let rows = py
        .detach(|| harness::run_sweep(&spec, SweepOptions { jobs }))
        .map_err(value_err)?;
    rows.iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("axis", r.axis.name())?;
            d.set_item("value", r.value)?;
            d.set_item("scheduler", r.scheduler.name())?;
            d.set_item("mean_sum_cct_s", r.mean_sum_cct)?;
            d.set_item("ci95_s", r.ci95)?;
            d.set_item("mean_runtime_s", r.mean_runtime)?;
            d.set_item("n", r.n)?;
            d.set_item("raw", r.raw.clone())?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn coflow(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGeneratorConfig>()?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PySchedule>()?;
    m.add_function(wrap_pyfunction!(generate_instance, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(load_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(export_milp, m)?)?;
    m.add_function(wrap_pyfunction!(schedulers, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    Ok(())
}
