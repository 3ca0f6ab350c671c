//! Python bindings: datasets, training, sampling and the desk metrics.
//!
//! Arrays cross the boundary as lists of rows.

use std::collections::BTreeMap;
use std::path::PathBuf;

use aclgen::cli::{load_run, train_config, DatasetId, RunConfig};
use aclgen::data::Dataset;
use aclgen::export::write_atomic;
use aclgen::metrics::{fit_gaussian, frechet_distance, Evaluator, MetricsRecord};
use aclgen::models::{self, AclBundle, ModelKind};
use aclgen::numerics::Tensor;
use aclgen::Error;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyDictMethods};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn to_py(e: Error) -> PyErr {
    match e.exit_code() {
        2 => PyOSError::new_err(e.to_string()),
        3 => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn tensor(rows: Vec<Vec<f64>>) -> PyResult<Tensor> {
    if rows.is_empty() {
        return Err(PyValueError::new_err("expected at least one row"));
    }
    Tensor::from_rows(&rows).map_err(to_py)
}

fn rows(t: &Tensor) -> Vec<Vec<f64>> {
    t.iter_rows().map(<[f64]>::to_vec).collect()
}

#[pyclass(name = "Dataset", module = "pyaclgen", frozen)]
struct PyDataset {
    inner: Dataset,
    /// Present for datasets loaded by id, which runs can record.
    id: Option<DatasetId>,
}

#[pymethods]
impl PyDataset {
    /// Loads `synthetic4`, `mnist` or `flat:PATH`.
    #[staticmethod]
    fn load(id: &str) -> PyResult<Self> {
        let id = DatasetId::parse(id).map_err(to_py)?;
        let inner = id.load().map_err(to_py)?;
        Ok(Self {
            inner,
            id: Some(id),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (samples, labels=None, name="array"))]
    fn from_rows(samples: Vec<Vec<f64>>, labels: Option<Vec<usize>>, name: &str) -> PyResult<Self> {
        let inner = Dataset::new(name, tensor(samples)?, labels).map_err(to_py)?;
        Ok(Self { inner, id: None })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn data_dim(&self) -> usize {
        self.inner.data_dim()
    }

    #[getter]
    fn image_shape(&self) -> Option<(usize, usize)> {
        self.inner.image_shape
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn rows(&self, start: usize, stop: usize) -> Vec<Vec<f64>> {
        let stop = stop.min(self.inner.len());
        (start.min(stop)..stop)
            .map(|i| self.inner.samples.row(i).to_vec())
            .collect()
    }

    #[getter]
    fn labels(&self) -> Option<Vec<usize>> {
        self.inner.labels.clone()
    }

    /// Fréchet distance between two halves of a fixed shuffle.
    fn split_baseline(&self) -> PyResult<f64> {
        Evaluator::new(&self.inner)
            .and_then(|e| e.split_baseline(&self.inner))
            .map_err(to_py)
    }
}

#[pyclass(name = "Model", module = "pyaclgen")]
struct PyModel {
    inner: AclBundle,
}

#[pymethods]
impl PyModel {
    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.name()
    }

    #[getter]
    fn code_dim(&self) -> usize {
        self.inner.arch.code_dim
    }

    #[pyo3(signature = (n, seed=0))]
    fn generate(&self, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.inner
            .generate(n, &mut rng)
            .map(|t| rows(&t))
            .map_err(to_py)
    }

    #[pyo3(signature = (n, seed=0))]
    fn sample_codes(&self, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.inner
            .sample_codes(n, &mut rng)
            .map(|t| rows(&t))
            .map_err(to_py)
    }

    fn encode(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        self.inner
            .encode(&tensor(x)?)
            .map(|t| rows(&t))
            .map_err(to_py)
    }

    fn decode(&self, codes: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        self.inner
            .decode(&tensor(codes)?)
            .map(|t| rows(&t))
            .map_err(to_py)
    }

    fn reconstruct(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        self.inner
            .reconstruct(&tensor(x)?)
            .map(|t| rows(&t))
            .map_err(to_py)
    }

    /// `x_a`, `steps` decoded frames, then `x_b`.
    #[pyo3(signature = (x_a, x_b, steps=8))]
    fn interpolate(&self, x_a: Vec<f64>, x_b: Vec<f64>, steps: usize) -> PyResult<Vec<Vec<f64>>> {
        self.inner
            .interpolate(&x_a, &x_b, steps)
            .map(|t| rows(&t))
            .map_err(to_py)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py)
    }

    /// Reloads a bundle from `<run>/ckpt/step_<N>.aclp`.
    #[staticmethod]
    fn load(checkpoint: PathBuf) -> PyResult<Self> {
        let run = load_run(&checkpoint, None).map_err(to_py)?;
        Ok(Self { inner: run.bundle })
    }
}

fn record_dict<'py>(py: Python<'py>, r: &MetricsRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("step", r.step)?;
    d.set_item("loss_rec", r.loss_rec)?;
    d.set_item("loss_d", r.loss_d)?;
    d.set_item("loss_g", r.loss_g)?;
    d.set_item("loss_z", r.loss_z)?;
    d.set_item("frechet", r.frechet)?;
    d.set_item("modes_covered", r.modes_covered)?;
    d.set_item("hq_fraction", r.hq_fraction)?;
    Ok(d)
}

/// Trains `model` on `dataset`. Keyword options take the configuration keys
/// of the command line (`steps`, `seed`, `lambda1`, …). With `out`, writes a
/// run directory; `Model.load` can reopen its checkpoints when the dataset
/// was loaded by id. Returns the trained model and the metric records.
#[pyfunction]
#[pyo3(signature = (model, dataset, out=None, **options))]
fn train<'py>(
    py: Python<'py>,
    model: &str,
    dataset: &PyDataset,
    out: Option<PathBuf>,
    options: Option<&Bound<'py, PyDict>>,
) -> PyResult<(PyModel, Vec<Bound<'py, PyDict>>)> {
    let kind: ModelKind = model.parse().map_err(to_py)?;
    let mut map = BTreeMap::new();
    if let Some(opts) = options {
        for (k, v) in opts.iter() {
            let key: String = k.extract()?;
            aclgen::cli::check_key(&key).map_err(to_py)?;
            map.insert(key, v.str()?.to_string().to_lowercase());
        }
    }
    let config = train_config(&map, kind).map_err(to_py)?;
    let data = &dataset.inner;
    if let (Some(dir), Some(id)) = (&out, &dataset.id) {
        let run = RunConfig {
            train: config.clone(),
            dataset: id.clone(),
            out: dir.clone(),
        };
        let text = run.to_text(data).map_err(to_py)?;
        write_atomic(&dir.join("config.txt"), text.as_bytes()).map_err(to_py)?;
    }
    let summary = py
        .detach(|| models::train(&config, data, out.as_deref()))
        .map_err(to_py)?;
    let records = summary
        .records
        .iter()
        .map(|r| record_dict(py, r))
        .collect::<PyResult<_>>()?;
    Ok((
        PyModel {
            inner: summary.bundle,
        },
        records,
    ))
}

/// Desk metrics of `samples` against `dataset`.
#[pyfunction]
fn evaluate<'py>(
    py: Python<'py>,
    dataset: &PyDataset,
    samples: Vec<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let eval = Evaluator::new(&dataset.inner)
        .and_then(|e| e.evaluate(&Tensor::from_rows(&samples)?))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("frechet", eval.frechet)?;
    d.set_item("modes_covered", eval.coverage.map(|c| c.modes_covered))?;
    d.set_item(
        "hq_fraction",
        eval.coverage.map(|c| c.high_quality_fraction),
    )?;
    Ok(d)
}

/// Fréchet distance between Gaussians fitted to two sample sets.
#[pyfunction]
fn frechet(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<f64> {
    let fa = fit_gaussian(&tensor(a)?).map_err(to_py)?;
    let fb = fit_gaussian(&tensor(b)?).map_err(to_py)?;
    frechet_distance(&fa, &fb).map_err(to_py)
}

#[pymodule]
fn pyaclgen(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(frechet, m)?)?;
    m.add(
        "MODEL_KINDS",
        ModelKind::ALL.iter().map(|k| k.name()).collect::<Vec<_>>(),
    )?;
    Ok(())
}
