//! Python bindings.
//!
//! Images are nested `[row][col][rgb]` lists with values in `[0, 1]`,
//! masks are nested lists of bools and boxes are
//! `(row_min, col_min, row_max, col_max)` tuples. Configurations and reports
//! cross the boundary as plain dicts.

use std::path::PathBuf;

use asc_core::attack::{self, AttackReport};
use asc_core::contour::budget_pixels;
use asc_core::imagecore::{load_image, save_image, CHANNELS};
use asc_core::victim::{self, TrainConfig, VictimModel};
use asc_core::{
    coco, eval, patterns, AscError, AttackConfig, BBox, BenchConfig, BenchReport, ColorField,
    Detection, GroundTruth, Image, LossSpec, Mask, Pattern, PatternKind, Scene, TinyDetector,
};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

fn err(e: AscError) -> PyErr {
    if e.is_io() {
        PyOSError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Overlays the keys of `over` onto `base`, recursing into nested tables.
fn merge(base: &mut Value, over: Value, path: &str) -> PyResult<()> {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) if !o.contains_key("kind") => {
            for (k, v) in o {
                let here = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                let slot = b
                    .get_mut(&k)
                    .ok_or_else(|| PyValueError::new_err(format!("unknown setting '{here}'")))?;
                merge(slot, v, &here)?;
            }
            Ok(())
        }
        (b, o) => {
            *b = o;
            Ok(())
        }
    }
}

/// `T::default()` with the entries of an optional dict applied on top.
fn config<T: Serialize + DeserializeOwned + Default>(
    py: Python<'_>,
    overrides: Option<&Bound<'_, PyDict>>,
) -> PyResult<T> {
    let mut value =
        serde_json::to_value(T::default()).map_err(|e| PyValueError::new_err(e.to_string()))?;
    if let Some(d) = overrides {
        let text: String = py.import("json")?.call_method1("dumps", (d,))?.extract()?;
        let over: Value =
            serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        merge(&mut value, over, "")?;
    }
    serde_json::from_value(value).map_err(|e| PyValueError::new_err(format!("bad setting: {e}")))
}

fn bbox_tuple(b: &BBox) -> (f64, f64, f64, f64) {
    (b.row_min, b.col_min, b.row_max, b.col_max)
}

#[pyclass(name = "Image", module = "asc", frozen, from_py_object)]
#[derive(Clone)]
struct PyImage(Image);

#[pymethods]
impl PyImage {
    #[new]
    fn new(pixels: Vec<Vec<[f64; CHANNELS]>>) -> PyResult<Self> {
        let h = pixels.len();
        let w = pixels.first().map_or(0, Vec::len);
        if pixels.iter().any(|row| row.len() != w) {
            return Err(PyValueError::new_err("rows have different lengths"));
        }
        let data = pixels.into_iter().flatten().flatten().collect();
        Image::new(h, w, data).map(Self).map_err(err)
    }

    #[staticmethod]
    fn filled(height: usize, width: usize, value: f64) -> PyResult<Self> {
        Image::filled(height, width, value).map(Self).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        load_image(path).map(Self).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_image(&self.0, path).map_err(err)
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    fn pixel(&self, row: usize, col: usize) -> PyResult<[f64; CHANNELS]> {
        if row >= self.0.height() || col >= self.0.width() {
            return Err(PyValueError::new_err("pixel out of range"));
        }
        Ok(self.0.pixel(row, col))
    }

    fn to_list(&self) -> Vec<Vec<[f64; CHANNELS]>> {
        (0..self.0.height())
            .map(|r| (0..self.0.width()).map(|c| self.0.pixel(r, c)).collect())
            .collect()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{})", self.0.height(), self.0.width())
    }
}

#[pyclass(name = "Mask", module = "asc", frozen, from_py_object)]
#[derive(Clone)]
struct PyMask(Mask);

#[pymethods]
impl PyMask {
    #[new]
    fn new(rows: Vec<Vec<bool>>) -> PyResult<Self> {
        let h = rows.len();
        let w = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != w) {
            return Err(PyValueError::new_err("rows have different lengths"));
        }
        Ok(Self(Mask::from_fn(h, w, |r, c| rows[r][c])))
    }

    #[staticmethod]
    fn zeros(height: usize, width: usize) -> Self {
        Self(Mask::zeros(height, width))
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    fn count(&self) -> usize {
        self.0.count()
    }

    /// Selected `(row, col)` pairs in row-major order.
    fn ones(&self) -> Vec<(usize, usize)> {
        self.0.ones().collect()
    }

    fn to_list(&self) -> Vec<Vec<bool>> {
        (0..self.0.height())
            .map(|r| (0..self.0.width()).map(|c| self.0.get(r, c)).collect())
            .collect()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!(
            "Mask({}x{}, count={})",
            self.0.height(),
            self.0.width(),
            self.0.count()
        )
    }
}

#[pyclass(name = "Pattern", module = "asc", frozen, from_py_object)]
#[derive(Clone)]
struct PyPattern(Pattern);

#[pymethods]
impl PyPattern {
    /// `colors` is an image whose pixels under `mask` are the replacement
    /// colors.
    #[new]
    fn new(mask: &PyMask, colors: &PyImage) -> PyResult<Self> {
        Pattern::new(mask.0.clone(), ColorField::from_image(&colors.0))
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn mask(&self) -> PyMask {
        PyMask(self.0.mask().clone())
    }

    #[getter]
    fn colors(&self) -> PyResult<PyImage> {
        let c = self.0.colors();
        Image::new(c.height(), c.width(), c.data().to_vec())
            .map(PyImage)
            .map_err(err)
    }
}

#[pyclass(name = "GroundTruth", module = "asc", frozen, from_py_object)]
#[derive(Clone)]
struct PyGroundTruth(GroundTruth);

#[pymethods]
impl PyGroundTruth {
    /// Polygons are lists of `(row, col)` vertices.
    #[staticmethod]
    #[pyo3(signature = (polygons, height, width, category = "object"))]
    fn from_polygons(
        polygons: Vec<Vec<(f64, f64)>>,
        height: usize,
        width: usize,
        category: &str,
    ) -> PyResult<Self> {
        GroundTruth::from_polygons(polygons, height, width, category)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn bbox(&self) -> (f64, f64, f64, f64) {
        bbox_tuple(&self.0.bbox)
    }

    #[getter]
    fn object_area(&self) -> usize {
        self.0.object_area
    }

    #[getter]
    fn category(&self) -> String {
        self.0.category.clone()
    }

    #[getter]
    fn polygons(&self) -> Vec<Vec<(f64, f64)>> {
        self.0.polygons.clone()
    }

    fn segmentation(&self, height: usize, width: usize) -> PyResult<PyMask> {
        self.0.segmentation(height, width).map(PyMask).map_err(err)
    }

    /// Pixel budget for a fraction of the object area.
    fn budget(&self, fraction: f64) -> usize {
        budget_pixels(&self.0, fraction)
    }

    fn __repr__(&self) -> String {
        format!(
            "GroundTruth(bbox={:?}, area={})",
            self.bbox(),
            self.0.object_area
        )
    }
}

#[pyclass(name = "Scene", module = "asc", frozen, from_py_object)]
#[derive(Clone)]
struct PyScene(Scene);

#[pymethods]
impl PyScene {
    #[getter]
    fn id(&self) -> u64 {
        self.0.id
    }

    #[getter]
    fn image(&self) -> PyImage {
        PyImage(self.0.image.clone())
    }

    #[getter]
    fn objects(&self) -> Vec<PyGroundTruth> {
        self.0.objects.iter().cloned().map(PyGroundTruth).collect()
    }

    /// The designated attack target (largest object).
    #[getter]
    fn target(&self) -> Option<PyGroundTruth> {
        self.0.target().cloned().map(PyGroundTruth)
    }
}

#[pyclass(name = "Detection", module = "asc", frozen, from_py_object)]
#[derive(Clone)]
struct PyDetection(Detection);

#[pymethods]
impl PyDetection {
    #[new]
    fn new(bbox: (f64, f64, f64, f64), objectness: f64) -> Self {
        Self(Detection {
            bbox: BBox::new(bbox.0, bbox.1, bbox.2, bbox.3),
            objectness,
            category: victim::scenes::CATEGORY.into(),
        })
    }

    #[getter]
    fn bbox(&self) -> (f64, f64, f64, f64) {
        bbox_tuple(&self.0.bbox)
    }

    #[getter]
    fn objectness(&self) -> f64 {
        self.0.objectness
    }

    fn __repr__(&self) -> String {
        format!(
            "Detection(bbox={:?}, objectness={:.4})",
            self.bbox(),
            self.0.objectness
        )
    }
}

#[pyclass(name = "TinyDetector", module = "asc", frozen, from_py_object)]
#[derive(Clone)]
struct PyTinyDetector(TinyDetector);

#[pymethods]
impl PyTinyDetector {
    /// Randomly initialized, untrained weights.
    #[new]
    #[pyo3(signature = (seed = 0))]
    fn new(seed: u64) -> Self {
        Self(TinyDetector::init(seed))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        TinyDetector::load(path).map(Self).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(path).map_err(err)
    }

    fn detect(&self, image: &PyImage) -> PyResult<Vec<PyDetection>> {
        Ok(self
            .0
            .detect(&image.0)
            .map_err(err)?
            .into_iter()
            .map(PyDetection)
            .collect())
    }

    /// Disappearing loss and its gradient, flattened in `H x W x 3` order.
    fn loss_and_grad(&self, image: &PyImage, gt: &PyGroundTruth) -> PyResult<(f64, Vec<f64>)> {
        let lg = self
            .0
            .loss_and_grad(&image.0, &gt.0, &LossSpec::default())
            .map_err(err)?;
        Ok((lg.value, lg.grad))
    }
}

#[pyclass(name = "AttackResult", module = "asc", frozen)]
struct PyAttackResult {
    inner: attack::AttackResult,
    config: AttackConfig,
}

#[pymethods]
impl PyAttackResult {
    #[getter]
    fn pipeline(&self) -> String {
        self.inner.pipeline.clone()
    }

    #[getter]
    fn success(&self) -> bool {
        self.inner.success
    }

    #[getter]
    fn l0_used(&self) -> usize {
        self.inner.l0_used
    }

    #[getter]
    fn budget(&self) -> usize {
        self.inner.budget
    }

    #[getter]
    fn best_loss(&self) -> f64 {
        self.inner.best_loss
    }

    #[getter]
    fn rounds_used(&self) -> usize {
        self.inner.rounds_used
    }

    #[getter]
    fn loss_trace(&self) -> Vec<f64> {
        self.inner.loss_trace.clone()
    }

    #[getter]
    fn pattern(&self) -> PyPattern {
        PyPattern(self.inner.pattern.clone())
    }

    /// JSON-ready report including the effective configuration.
    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.report(&self.config, Value::Null))
    }

    /// Writes `result.json` and PNG renders into `dir`; returns the JSON path.
    fn save(&self, dir: PathBuf, image: &PyImage) -> PyResult<PathBuf> {
        self.inner
            .save(&dir, &image.0, &self.config, Value::Null)
            .map_err(err)
    }
}

#[pyclass(name = "BenchReport", module = "asc", frozen)]
struct PyBenchReport(BenchReport);

#[pymethods]
impl PyBenchReport {
    #[getter]
    fn clean_sdr(&self) -> f64 {
        self.0.clean_sdr
    }

    #[getter]
    fn images(&self) -> usize {
        self.0.images
    }

    fn sdr(&self, pattern: &str, budget: f64) -> Option<f64> {
        self.0.sdr_of(pattern, budget)
    }

    fn table_csv(&self) -> PyResult<String> {
        self.0.table_csv().map_err(err)
    }

    fn rows_csv(&self) -> PyResult<String> {
        self.0.rows_csv().map_err(err)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0)
    }

    fn save(&self, dir: PathBuf) -> PyResult<Vec<PathBuf>> {
        self.0.save(&dir).map_err(err)
    }
}

#[pyfunction]
fn apply_pattern(image: &PyImage, pattern: &PyPattern) -> PyResult<PyImage> {
    asc_core::apply_pattern(&image.0, &pattern.0)
        .map(PyImage)
        .map_err(err)
}

#[pyfunction]
fn iou(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> f64 {
    asc_core::iou(
        &BBox::new(a.0, a.1, a.2, a.3),
        &BBox::new(b.0, b.1, b.2, b.3),
    )
}

#[pyfunction]
fn sdr(detected: Vec<bool>) -> f64 {
    eval::sdr(&detected)
}

#[pyfunction]
fn is_detected(detections: Vec<PyDetection>, gt: &PyGroundTruth) -> bool {
    let dets: Vec<Detection> = detections.into_iter().map(|d| d.0).collect();
    eval::is_detected(&dets, &gt.0)
}

#[pyfunction]
fn gen_scenes(py: Python<'_>, n: usize, seed: u64) -> PyResult<Vec<PyScene>> {
    let scenes = py.detach(|| victim::gen_scenes(n, seed)).map_err(err)?;
    Ok(scenes.into_iter().map(PyScene).collect())
}

#[pyfunction]
fn save_dataset(scenes: Vec<PyScene>, dir: PathBuf) -> PyResult<()> {
    let scenes: Vec<Scene> = scenes.into_iter().map(|s| s.0).collect();
    coco::save_dataset(&scenes, &dir).map_err(err)
}

#[pyfunction]
fn load_dataset(dir: PathBuf) -> PyResult<Vec<PyScene>> {
    Ok(coco::load_dataset(&dir)
        .map_err(err)?
        .into_iter()
        .map(PyScene)
        .collect())
}

/// Trains a detector; `config` overrides training settings such as
/// `epochs`, `lr` and `seed`. Returns the model and a training report.
#[pyfunction]
#[pyo3(signature = (scenes, config = None))]
fn train_tiny<'py>(
    py: Python<'py>,
    scenes: Vec<PyScene>,
    config: Option<&Bound<'py, PyDict>>,
) -> PyResult<(PyTinyDetector, Bound<'py, PyAny>)> {
    let cfg: TrainConfig = self::config(py, config)?;
    let scenes: Vec<Scene> = scenes.into_iter().map(|s| s.0).collect();
    let (model, report) = py
        .detach(|| victim::train_tiny_with(&scenes, &cfg))
        .map_err(err)?;
    Ok((PyTinyDetector(model), to_py(py, &report)?))
}

#[pyfunction]
fn clean_sdr(py: Python<'_>, model: &PyTinyDetector, scenes: Vec<PyScene>) -> PyResult<f64> {
    let scenes: Vec<Scene> = scenes.into_iter().map(|s| s.0).collect();
    py.detach(|| victim::clean_sdr(&model.0, &scenes))
        .map_err(err)
}

/// Mask of a comparison pattern (`advpatch`, `fourpatch`, `grid2x2`,
/// `smallgrid`, `strip`) with at most `budget` pixels.
#[pyfunction]
fn generate_pattern(
    kind: &str,
    gt: &PyGroundTruth,
    budget: usize,
    height: usize,
    width: usize,
) -> PyResult<PyMask> {
    let kind: PatternKind = kind.parse().map_err(err)?;
    let seg = gt.0.segmentation(height, width).map_err(err)?;
    patterns::generate(kind, &gt.0, &seg, budget)
        .map(PyMask)
        .map_err(err)
}

fn run_attack<'py>(
    py: Python<'py>,
    config: Option<&Bound<'py, PyDict>>,
    f: impl FnOnce(&AttackConfig) -> asc_core::Result<attack::AttackResult> + Send,
) -> PyResult<PyAttackResult> {
    let cfg: AttackConfig = self::config(py, config)?;
    let inner = py.detach(|| f(&cfg)).map_err(err)?;
    Ok(PyAttackResult { inner, config: cfg })
}

/// Fixed-contour attack: boundary mask, optimized colors.
#[pyfunction]
#[pyo3(signature = (model, image, gt, config = None))]
fn f_asc<'py>(
    py: Python<'py>,
    model: &PyTinyDetector,
    image: &PyImage,
    gt: &PyGroundTruth,
    config: Option<&Bound<'py, PyDict>>,
) -> PyResult<PyAttackResult> {
    run_attack(py, config, |cfg| {
        asc_core::f_asc(&model.0, &image.0, &gt.0, cfg)
    })
}

/// Contour attack with mask search, started from the fixed-contour result.
#[pyfunction]
#[pyo3(signature = (model, image, gt, config = None))]
fn o_asc<'py>(
    py: Python<'py>,
    model: &PyTinyDetector,
    image: &PyImage,
    gt: &PyGroundTruth,
    config: Option<&Bound<'py, PyDict>>,
) -> PyResult<PyAttackResult> {
    run_attack(py, config, |cfg| {
        asc_core::o_asc(&model.0, &image.0, &gt.0, cfg)
    })
}

/// Optimizes colors on a fixed mask.
#[pyfunction]
#[pyo3(signature = (model, image, gt, mask, config = None))]
fn attack_with_pattern<'py>(
    py: Python<'py>,
    model: &PyTinyDetector,
    image: &PyImage,
    gt: &PyGroundTruth,
    mask: &PyMask,
    config: Option<&Bound<'py, PyDict>>,
) -> PyResult<PyAttackResult> {
    run_attack(py, config, |cfg| {
        attack::attack_with_pattern(&model.0, &image.0, &gt.0, &mask.0, cfg)
    })
}

/// SDR benchmark over `scenes`; `config` overrides `patterns`, `budgets`,
/// `seed`, `workers` and the nested `attack` settings.
#[pyfunction]
#[pyo3(signature = (model, scenes, config = None))]
fn run_bench<'py>(
    py: Python<'py>,
    model: &PyTinyDetector,
    scenes: Vec<PyScene>,
    config: Option<&Bound<'py, PyDict>>,
) -> PyResult<PyBenchReport> {
    let cfg: BenchConfig = self::config(py, config)?;
    let scenes: Vec<Scene> = scenes.into_iter().map(|s| s.0).collect();
    let report = py
        .detach(|| asc_core::run_bench(&model.0, &scenes, &cfg))
        .map_err(err)?;
    Ok(PyBenchReport(report))
}

/// Loads the pattern stored in an attack `result.json`.
#[pyfunction]
fn load_result_pattern(path: PathBuf) -> PyResult<PyPattern> {
    let text = std::fs::read_to_string(&path)
        .map_err(|e| PyOSError::new_err(format!("{}: {e}", path.display())))?;
    let report: AttackReport =
        serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    report.pattern().map(PyPattern).map_err(err)
}

/// Sparse contour attacks on a small object detector.
#[pymodule]
fn asc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyMask>()?;
    m.add_class::<PyPattern>()?;
    m.add_class::<PyGroundTruth>()?;
    m.add_class::<PyScene>()?;
    m.add_class::<PyDetection>()?;
    m.add_class::<PyTinyDetector>()?;
    m.add_class::<PyAttackResult>()?;
    m.add_class::<PyBenchReport>()?;
    m.add_function(wrap_pyfunction!(apply_pattern, m)?)?;
    m.add_function(wrap_pyfunction!(iou, m)?)?;
    m.add_function(wrap_pyfunction!(sdr, m)?)?;
    m.add_function(wrap_pyfunction!(is_detected, m)?)?;
    m.add_function(wrap_pyfunction!(gen_scenes, m)?)?;
    m.add_function(wrap_pyfunction!(save_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(load_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(train_tiny, m)?)?;
    m.add_function(wrap_pyfunction!(clean_sdr, m)?)?;
    m.add_function(wrap_pyfunction!(generate_pattern, m)?)?;
    m.add_function(wrap_pyfunction!(f_asc, m)?)?;
    m.add_function(wrap_pyfunction!(o_asc, m)?)?;
    m.add_function(wrap_pyfunction!(attack_with_pattern, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    m.add_function(wrap_pyfunction!(load_result_pattern, m)?)?;
    Ok(())
}
