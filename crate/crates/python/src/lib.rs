//! Python bindings. Shape kinds are passed as strings ("circle",
//! "triangle", "rectangle"); images are flat lists in (row, col, channel)
//! order.

use artattack::harness::{self, load_cifar10_batch as load_batch};
use artattack::{
    objective, render as core_render, AttackConfig as CoreConfig,
    AttackRecord as CoreRecord, ClassifierOracle, Genome as CoreGenome, Image as CoreImage, OracleError, ProbVector,
    RandomStream, ShapeKind,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_kind(kind: &str) -> PyResult<ShapeKind> {
    kind.parse().map_err(value_err)
}

#[pyclass(name = "Image", module = "artattack_py", from_py_object)]
#[derive(Clone)]
pub struct PyImage(CoreImage);

#[pymethods]
impl PyImage {
    #[new]
    fn new(height: usize, width: usize, data: Vec<f64>) -> PyResult<Self> {
        CoreImage::new(height, width, data).map(Self).map_err(value_err)
    }

    #[staticmethod]
    fn filled(height: usize, width: usize, value: f64) -> Self {
        Self(CoreImage::filled(height, width, value))
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    fn pixel(&self, row: usize, col: usize) -> PyResult<[f64; 3]> {
        if row >= self.0.height() || col >= self.0.width() {
            return Err(value_err(format!("pixel ({row}, {col}) outside {:?}", self.0.dims())));
        }
        Ok(self.0.pixel(row, col))
    }

    fn to_list(&self) -> Vec<f64> {
        self.0.as_slice().to_vec()
    }

    fn linf_distance(&self, other: &PyImage) -> PyResult<f64> {
        self.0.linf_distance(&other.0).map_err(value_err)
    }

    fn mse(&self, other: &PyImage) -> PyResult<f64> {
        self.0.mse(&other.0).map_err(value_err)
    }

    fn save_png(&self, path: &str) -> PyResult<()> {
        harness::export_png(&self.0, path).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn load_png(path: &str) -> PyResult<Self> {
        harness::load_png(path).map(Self).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Image(height={}, width={})", self.0.height(), self.0.width())
    }
}

#[pyclass(name = "Genome", module = "artattack_py", from_py_object)]
#[derive(Clone)]
pub struct PyGenome(CoreGenome);

#[pymethods]
impl PyGenome {
    #[new]
    fn new(kind: &str, rows: Vec<Vec<f64>>) -> PyResult<Self> {
        CoreGenome::from_rows(parse_kind(kind)?, &rows).map(Self).map_err(value_err)
    }

    /// Uniform random genome of `num_shapes` rows.
    #[staticmethod]
    fn random(kind: &str, num_shapes: usize, seed: u64) -> PyResult<Self> {
        if num_shapes == 0 {
            return Err(value_err("num_shapes must be positive"));
        }
        Ok(Self(CoreGenome::random(parse_kind(kind)?, num_shapes, &mut RandomStream::new(seed))))
    }

    #[getter]
    fn kind(&self) -> String {
        self.0.kind().to_string()
    }

    #[getter]
    fn num_shapes(&self) -> usize {
        self.0.num_shapes()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.0.rows().map(<[f64]>::to_vec).collect()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(value_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(Self).map_err(value_err)
    }

    /// One mutation step with mutation rate `mu`; returns a new genome.
    fn mutate(&self, mu: f64, seed: u64) -> Self {
        Self(artattack::mutate(&self.0, mu, &mut RandomStream::new(seed)))
    }

    fn __repr__(&self) -> String {
        format!("Genome(kind={:?}, num_shapes={})", self.0.kind().to_string(), self.0.num_shapes())
    }
}

#[pyfunction]
#[pyo3(signature = (genome, image, epsilon=0.05, beta=12.0))]
fn render(genome: &PyGenome, image: &PyImage, epsilon: f64, beta: f64) -> PyResult<PyImage> {
    core_render(&genome.0, &image.0, epsilon, beta).map(PyImage).map_err(value_err)
}

#[pyfunction]
fn project_linf(candidate: &PyImage, original: &PyImage, epsilon: f64) -> PyResult<PyImage> {
    artattack::project_linf(&candidate.0, &original.0, epsilon).map(PyImage).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (probs, target, p_min=1e-12))]
fn targeted_loss(probs: Vec<f64>, target: usize, p_min: f64) -> PyResult<f64> {
    let probs = ProbVector::new(probs).map_err(value_err)?;
    if target >= probs.num_classes() {
        return Err(value_err(format!("target {target} out of range")));
    }
    Ok(objective::targeted_loss(&probs, target, p_min))
}

/// Seeded linear-softmax classifier over flattened images.
#[pyclass(name = "LinearSoftmaxOracle", module = "artattack_py", from_py_object)]
#[derive(Clone)]
pub struct PyLinear(artattack::LinearSoftmaxOracle);

#[pymethods]
impl PyLinear {
    #[new]
    fn new(seed: u64, height: usize, width: usize, num_classes: usize) -> PyResult<Self> {
        if num_classes < 2 || height * width == 0 {
            return Err(value_err("need at least 2 classes and a non-empty image"));
        }
        Ok(Self(artattack::LinearSoftmaxOracle::for_images(seed, height, width, num_classes)))
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.0.num_classes()
    }

    fn probabilities(&self, image: &PyImage) -> PyResult<Vec<f64>> {
        probs_of(&self.0, &image.0)
    }

    fn predict(&self, image: &PyImage) -> PyResult<usize> {
        self.0.predict(&image.0).map_err(value_err)
    }
}

/// MLP loaded from a JSON weight file.
#[pyclass(name = "MlpOracle", module = "artattack_py", from_py_object)]
#[derive(Clone)]
pub struct PyMlp(artattack::MlpOracle);

#[pymethods]
impl PyMlp {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        artattack::MlpOracle::load(path).map(Self).map_err(value_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        artattack::MlpOracle::from_json(text).map(Self).map_err(value_err)
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.0.num_classes()
    }

    fn probabilities(&self, image: &PyImage) -> PyResult<Vec<f64>> {
        probs_of(&self.0, &image.0)
    }

    fn predict(&self, image: &PyImage) -> PyResult<usize> {
        self.0.predict(&image.0).map_err(value_err)
    }
}

/// Oracle served over HTTP (`POST <endpoint>/v1/probabilities`).
#[pyclass(name = "RemoteOracle", module = "artattack_py", from_py_object)]
#[derive(Clone)]
pub struct PyRemote(artattack::RemoteOracle);

#[pymethods]
impl PyRemote {
    #[new]
    fn new(endpoint: &str, num_classes: usize) -> Self {
        Self(artattack::RemoteOracle::new(endpoint, num_classes))
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.0.num_classes()
    }

    fn probabilities(&self, py: Python<'_>, image: &PyImage) -> PyResult<Vec<f64>> {
        py.detach(|| probs_of(&self.0, &image.0))
    }
}

fn probs_of(oracle: &dyn ClassifierOracle, image: &CoreImage) -> PyResult<Vec<f64>> {
    oracle
        .probabilities(image)
        .map(|p| p.as_slice().to_vec())
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Any Python callable `f(Image) -> list[float]`.
struct CallableOracle {
    func: Py<PyAny>,
    num_classes: usize,
}

impl ClassifierOracle for CallableOracle {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn probabilities(&self, image: &CoreImage) -> Result<ProbVector, OracleError> {
        let raw: Vec<f64> = Python::attach(|py| {
            self.func
                .call1(py, (PyImage(image.clone()),))
                .and_then(|r| r.extract(py))
                .map_err(|e| OracleError::MalformedResponse(format!("python oracle: {e}")))
        })?;
        if raw.len() != self.num_classes {
            return Err(OracleError::ClassCount {
                expected: self.num_classes,
                got: raw.len(),
            });
        }
        ProbVector::new(raw).map_err(OracleError::from)
    }
}

enum AnyOracle {
    Linear(artattack::LinearSoftmaxOracle),
    Mlp(artattack::MlpOracle),
    Remote(artattack::RemoteOracle),
    Callable(CallableOracle),
}

impl AnyOracle {
    fn extract(obj: &Bound<'_, PyAny>, num_classes: Option<usize>) -> PyResult<Self> {
        if let Ok(o) = obj.extract::<PyLinear>() {
            return Ok(Self::Linear(o.0));
        }
        if let Ok(o) = obj.extract::<PyMlp>() {
            return Ok(Self::Mlp(o.0));
        }
        if let Ok(o) = obj.extract::<PyRemote>() {
            return Ok(Self::Remote(o.0));
        }
        if obj.is_callable() {
            let num_classes =
                num_classes.ok_or_else(|| value_err("num_classes is required for a callable oracle"))?;
            return Ok(Self::Callable(CallableOracle {
                func: obj.clone().unbind(),
                num_classes,
            }));
        }
        Err(value_err("oracle must be an oracle object or a callable"))
    }

    fn get(&self) -> &(dyn ClassifierOracle + Send + Sync) {
        match self {
            Self::Linear(o) => o,
            Self::Mlp(o) => o,
            Self::Remote(o) => o,
            Self::Callable(o) => o,
        }
    }
}

#[pyclass(name = "AttackConfig", module = "artattack_py", from_py_object)]
#[derive(Clone)]
pub struct PyConfig(CoreConfig);

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (kind, num_shapes, target_class, epsilon=0.05, beta=12.0, budget=10_000, seed=0, b=0.75, n_p=10))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        kind: &str,
        num_shapes: usize,
        target_class: usize,
        epsilon: f64,
        beta: f64,
        budget: usize,
        seed: u64,
        b: f64,
        n_p: u32,
    ) -> PyResult<Self> {
        let cfg = CoreConfig {
            epsilon,
            beta,
            budget,
            seed,
            b,
            n_p,
            ..CoreConfig::new(parse_kind(kind)?, num_shapes, target_class)
        };
        cfg.validate().map_err(value_err)?;
        Ok(Self(cfg))
    }

    #[getter]
    fn kind(&self) -> String {
        self.0.kind.to_string()
    }
    #[getter]
    fn num_shapes(&self) -> usize {
        self.0.num_shapes
    }
    #[getter]
    fn target_class(&self) -> usize {
        self.0.target_class
    }
    #[getter]
    fn epsilon(&self) -> f64 {
        self.0.epsilon
    }
    #[getter]
    fn budget(&self) -> usize {
        self.0.budget
    }
    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(value_err)
    }
}

#[pyclass(name = "AttackRecord", module = "artattack_py", skip_from_py_object)]
pub struct PyRecord(CoreRecord);

#[pymethods]
impl PyRecord {
    #[getter]
    fn success_targeted(&self) -> bool {
        self.0.success_targeted()
    }
    #[getter]
    fn success_untargeted(&self) -> bool {
        self.0.success_untargeted()
    }
    #[getter]
    fn queries_used(&self) -> usize {
        self.0.queries_used()
    }
    #[getter]
    fn true_label(&self) -> usize {
        self.0.true_label()
    }
    #[getter]
    fn target_class(&self) -> usize {
        self.0.target_class()
    }
    #[getter]
    fn loss_trajectory(&self) -> Vec<f64> {
        self.0.loss_trajectory().to_vec()
    }
    #[getter]
    fn final_probs(&self) -> Vec<f64> {
        self.0.final_probs().as_slice().to_vec()
    }
    #[getter]
    fn final_image(&self) -> PyImage {
        PyImage(self.0.final_image().clone())
    }
    #[getter]
    fn final_genome(&self) -> PyGenome {
        PyGenome(self.0.final_genome().clone())
    }
    #[getter]
    fn max_deviation(&self) -> f64 {
        self.0.max_deviation()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "AttackRecord(success_targeted={}, queries_used={})",
            self.0.success_targeted(),
            self.0.queries_used()
        )
    }
}

/// Runs one targeted attack. `oracle` is one of the oracle classes or a
/// callable `f(Image) -> list[float]` (then `num_classes` is required).
#[pyfunction]
#[pyo3(signature = (oracle, image, true_label, config, num_classes=None))]
fn attack(
    py: Python<'_>,
    oracle: &Bound<'_, PyAny>,
    image: &PyImage,
    true_label: usize,
    config: &PyConfig,
    num_classes: Option<usize>,
) -> PyResult<PyRecord> {
    let oracle = AnyOracle::extract(oracle, num_classes)?;
    let (x, cfg) = (&image.0, &config.0);
    py.detach(|| artattack::attack(oracle.get(), x, true_label, cfg))
        .map(PyRecord)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Approximates `reference` with shapes on a black canvas. Returns
/// `(image, genome, trajectory, initial_mse, final_mse)`.
#[pyfunction]
#[pyo3(signature = (reference, kind="triangle", num_shapes=100, iterations=10_000, seed=0))]
fn reconstruct(
    py: Python<'_>,
    reference: &PyImage,
    kind: &str,
    num_shapes: usize,
    iterations: usize,
    seed: u64,
) -> PyResult<(PyImage, PyGenome, Vec<f64>, f64, f64)> {
    let kind = parse_kind(kind)?;
    if num_shapes == 0 || iterations == 0 {
        return Err(value_err("num_shapes and iterations must be positive"));
    }
    let reference = &reference.0;
    let res = py
        .detach(|| harness::reconstruct(reference, kind, num_shapes, iterations, seed))
        .map_err(value_err)?;
    Ok((PyImage(res.image), PyGenome(res.genome), res.trajectory, res.initial_mse, res.final_mse))
}

/// Reads a CIFAR-10 binary batch as `[(Image, label)]`.
#[pyfunction]
fn load_cifar10_batch(path: &str) -> PyResult<Vec<(PyImage, usize)>> {
    load_batch(path)
        .map(|v| v.into_iter().map(|(img, y)| (PyImage(img), y)).collect())
        .map_err(value_err)
}

#[pymodule]
fn artattack_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyGenome>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyRecord>()?;
    m.add_class::<PyLinear>()?;
    m.add_class::<PyMlp>()?;
    m.add_class::<PyRemote>()?;
    m.add_function(wrap_pyfunction!(render, m)?)?;
    m.add_function(wrap_pyfunction!(project_linf, m)?)?;
    m.add_function(wrap_pyfunction!(targeted_loss, m)?)?;
    m.add_function(wrap_pyfunction!(attack, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(load_cifar10_batch, m)?)?;
    Ok(())
}
