//! Python bindings for `fiszkit`.
//!
//! Series cross the boundary as lists of floats. Library errors surface as
//! `ValueError` (or `OSError` for I/O).

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use fiszkit::bench::{run_bench as core_run_bench, BenchConfig, Method, TestFunction, CELLS};
use fiszkit::{
    Bandwidth, ClosedForm, CoeffPyramid, EstimatorConfig, FiszError, NoiseModel, SeedSpec, Signal,
    ThresholdRule, VarFnConfig, VarianceSource, VarianceUsed, WaveletBasis,
};

fn py_err(e: FiszError) -> PyErr {
    match e {
        FiszError::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn signal(values: Vec<f64>) -> PyResult<Signal> {
    Signal::new(values).map_err(py_err)
}

fn basis(name: &str) -> PyResult<WaveletBasis> {
    WaveletBasis::from_name(name).map_err(py_err)
}

fn noise_model(name: &str, sigma: f64) -> PyResult<NoiseModel> {
    match name {
        "poisson" => Ok(NoiseModel::Poisson),
        "exponential" | "exp" => Ok(NoiseModel::ExponentialMultiplicative),
        "gaussian" | "gauss" => Ok(NoiseModel::GaussianAdditive { sigma }),
        other => Err(PyValueError::new_err(format!("unknown noise model `{other}`"))),
    }
}

fn bandwidth(b: Option<f64>) -> Bandwidth {
    b.map_or(Bandwidth::Auto, Bandwidth::Fixed)
}

fn known_h(value: &Bound<'_, PyAny>) -> PyResult<ClosedForm> {
    if let Ok(c) = value.extract::<f64>() {
        return Ok(ClosedForm::Constant(c));
    }
    let name: String = value.extract()?;
    match name.as_str() {
        "poisson" => Ok(ClosedForm::Poisson),
        "exponential" | "exp" => Ok(ClosedForm::Exponential),
        other => Err(PyValueError::new_err(format!(
            "known_h must be 'poisson', 'exponential' or a number, got `{other}`"
        ))),
    }
}

/// Keyword options shared by the estimators.
#[allow(clippy::too_many_arguments)]
fn estimator_config(
    rule: &str,
    ti: bool,
    stride: usize,
    j_star: Option<usize>,
    basis_name: &str,
    known: Option<&Bound<'_, PyAny>>,
    hhat: Option<&PyVarianceEstimate>,
    half_width: usize,
    bw: Option<f64>,
    grid_size: usize,
) -> PyResult<EstimatorConfig> {
    let rule = match rule {
        "hard" => ThresholdRule::Hard,
        "soft" => ThresholdRule::Soft,
        other => return Err(PyValueError::new_err(format!("unknown rule `{other}`"))),
    };
    let variance = match (known, hhat) {
        (Some(_), Some(_)) => {
            return Err(PyValueError::new_err("pass at most one of known_h and hhat"))
        }
        (Some(k), None) => VarianceSource::Known(known_h(k)?),
        (None, Some(h)) => VarianceSource::Fitted(h.inner.clone()),
        (None, None) => VarianceSource::DataDriven(VarFnConfig {
            half_width,
            bandwidth: bandwidth(bw),
            grid_size,
            floor_eps: None,
        }),
    };
    Ok(EstimatorConfig {
        j_star,
        rule,
        translation_invariant: ti,
        shift_stride: stride,
        basis: basis(basis_name)?,
        variance,
    })
}

/// Isotone step-function estimate of the variance function.
#[pyclass(name = "VarianceEstimate", module = "pyfiszkit", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyVarianceEstimate {
    inner: fiszkit::VarianceEstimate,
}

#[pymethods]
impl PyVarianceEstimate {
    #[new]
    #[pyo3(signature = (grid, values, floor_eps = f64::MIN_POSITIVE))]
    fn new(grid: Vec<f64>, values: Vec<f64>, floor_eps: f64) -> PyResult<Self> {
        let inner = fiszkit::VarianceEstimate::from_parts(grid, values, floor_eps).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.inner.grid().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn floor_eps(&self) -> f64 {
        self.inner.floor_eps()
    }

    fn query(&self, u: f64) -> f64 {
        self.inner.query(u)
    }

    fn __call__(&self, u: f64) -> f64 {
        self.inner.query(u)
    }

    fn __len__(&self) -> usize {
        self.inner.grid().len()
    }

    fn __repr__(&self) -> String {
        let g = self.inner.grid();
        format!(
            "VarianceEstimate(points={}, u=[{}, {}])",
            g.len(),
            g[0],
            g[g.len() - 1]
        )
    }
}

/// Output of `estimate`.
#[pyclass(name = "EstimateResult", module = "pyfiszkit", frozen)]
struct PyEstimateResult {
    #[pyo3(get)]
    alpha_hat: Vec<f64>,
    #[pyo3(get)]
    thresholds: Vec<Vec<f64>>,
    #[pyo3(get)]
    survivors: Vec<Vec<bool>>,
    #[pyo3(get)]
    shifts_averaged: usize,
    hhat: Option<fiszkit::VarianceEstimate>,
}

#[pymethods]
impl PyEstimateResult {
    /// The fitted variance function, or `None` when it was given in closed form.
    #[getter]
    fn hhat(&self) -> Option<PyVarianceEstimate> {
        self.hhat.clone().map(|inner| PyVarianceEstimate { inner })
    }

    #[getter]
    fn j_star(&self) -> usize {
        self.thresholds.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "EstimateResult(n={}, j_star={}, shifts_averaged={})",
            self.alpha_hat.len(),
            self.thresholds.len(),
            self.shifts_averaged
        )
    }
}

/// Per-coefficient divisors of a forward transform.
#[pyclass(name = "VstState", module = "pyfiszkit", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyVstState {
    inner: fiszkit::VstState,
}

#[pymethods]
impl PyVstState {
    #[new]
    #[pyo3(signature = (divisors, basis = "haar"))]
    fn new(divisors: Vec<Vec<f64>>, basis: &str) -> PyResult<Self> {
        let inner = fiszkit::VstState::from_divisors(divisors, self::basis(basis)?).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn divisors(&self) -> Vec<Vec<f64>> {
        self.inner.divisors().to_vec()
    }

    #[getter]
    fn basis(&self) -> String {
        self.inner.basis.name()
    }

    #[getter]
    fn hhat(&self) -> Option<PyVarianceEstimate> {
        self.inner.hhat.clone().map(|inner| PyVarianceEstimate { inner })
    }

    #[getter]
    fn levels(&self) -> usize {
        self.inner.levels()
    }
}

#[pyfunction]
#[pyo3(signature = (n, min_val = 1.0, max_val = 22.6))]
fn make_blocks(n: usize, min_val: f64, max_val: f64) -> PyResult<Vec<f64>> {
    Ok(fiszkit::make_blocks(n, min_val, max_val).map_err(py_err)?.into_values())
}

#[pyfunction]
#[pyo3(signature = (n, min_val = 3.0, max_val = 23.21))]
fn make_bumps(n: usize, min_val: f64, max_val: f64) -> PyResult<Vec<f64>> {
    Ok(fiszkit::make_bumps(n, min_val, max_val).map_err(py_err)?.into_values())
}

/// Draw one noisy observation of `truth`.
#[pyfunction]
#[pyo3(signature = (truth, model = "poisson", seed = 0, rep = 0, sigma = 1.0))]
fn sample_noise(truth: Vec<f64>, model: &str, seed: u64, rep: u64, sigma: f64) -> PyResult<Vec<f64>> {
    let truth = signal(truth)?;
    let model = noise_model(model, sigma)?;
    Ok(fiszkit::sample_noise(&truth, model, SeedSpec::new(seed, rep))
        .map_err(py_err)?
        .into_values())
}

/// Returns `(details, smooth)` with `details[j]` holding `2**j` coefficients.
#[pyfunction]
#[pyo3(signature = (x, basis = "haar"))]
fn dwt_forward(x: Vec<f64>, basis: &str) -> PyResult<(Vec<Vec<f64>>, f64)> {
    let p = fiszkit::dwt_forward(&signal(x)?, &self::basis(basis)?);
    Ok((p.details().to_vec(), p.smooth))
}

#[pyfunction]
#[pyo3(signature = (details, smooth, basis = "haar"))]
fn dwt_inverse(details: Vec<Vec<f64>>, smooth: f64, basis: &str) -> PyResult<Vec<f64>> {
    let p = CoeffPyramid::new(details, smooth).map_err(py_err)?;
    Ok(fiszkit::dwt_inverse(&p, &self::basis(basis)?)
        .map_err(py_err)?
        .into_values())
}

#[pyfunction]
#[pyo3(signature = (x, basis = "haar"))]
fn local_means(x: Vec<f64>, basis: &str) -> PyResult<Vec<Vec<f64>>> {
    let lm = fiszkit::local_means(&signal(x)?, &self::basis(basis)?);
    Ok((0..lm.levels()).map(|j| lm.level(j).to_vec()).collect())
}

/// Weighted isotonic (nondecreasing) regression.
#[pyfunction]
#[pyo3(signature = (values, weights = None))]
fn pava_isotone(values: Vec<f64>, weights: Option<Vec<f64>>) -> PyResult<Vec<f64>> {
    let weights = weights.unwrap_or_else(|| vec![1.0; values.len()]);
    fiszkit::pava_isotone(&values, &weights).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (x, *, half_width = 3, bandwidth = None, grid_size = 256, floor_eps = None))]
fn estimate_variance_function(
    x: Vec<f64>,
    half_width: usize,
    bandwidth: Option<f64>,
    grid_size: usize,
    floor_eps: Option<f64>,
) -> PyResult<PyVarianceEstimate> {
    let cfg = VarFnConfig {
        half_width,
        bandwidth: self::bandwidth(bandwidth),
        grid_size,
        floor_eps,
    };
    let inner = fiszkit::estimate_variance_function(&signal(x)?, &cfg).map_err(py_err)?;
    Ok(PyVarianceEstimate { inner })
}

/// Wavelet-Fisz estimate of the mean of `x`.
///
/// The variance function is estimated from the data unless `known_h`
/// (`'poisson'`, `'exponential'` or a constant) or a fitted `hhat` is given.
#[pyfunction]
#[pyo3(signature = (
    x, *, rule = "hard", ti = true, stride = 1, j_star = None, basis = "haar",
    known_h = None, hhat = None, half_width = 1, bandwidth = None, grid_size = 256
))]
#[allow(clippy::too_many_arguments)]
fn estimate(
    x: Vec<f64>,
    rule: &str,
    ti: bool,
    stride: usize,
    j_star: Option<usize>,
    basis: &str,
    known_h: Option<&Bound<'_, PyAny>>,
    hhat: Option<PyRef<'_, PyVarianceEstimate>>,
    half_width: usize,
    bandwidth: Option<f64>,
    grid_size: usize,
) -> PyResult<PyEstimateResult> {
    let cfg = estimator_config(
        rule, ti, stride, j_star, basis, known_h, hhat.as_deref(), half_width, bandwidth, grid_size,
    )?;
    let r = fiszkit::estimate(&signal(x)?, &cfg).map_err(py_err)?;
    Ok(PyEstimateResult {
        alpha_hat: r.alpha_hat.into_values(),
        thresholds: r.thresholds.levels().to_vec(),
        survivors: r.survivors,
        shifts_averaged: r.shifts_averaged,
        hhat: match r.h_used {
            VarianceUsed::Estimated(h) => Some(h),
            VarianceUsed::Known(_) => None,
        },
    })
}

/// Running-MAD threshold baseline; takes the same options as `estimate`.
#[pyfunction]
#[pyo3(signature = (x, *, rule = "hard", ti = true, stride = 1, j_star = None, basis = "haar"))]
fn baseline_mad_estimate(
    x: Vec<f64>,
    rule: &str,
    ti: bool,
    stride: usize,
    j_star: Option<usize>,
    basis: &str,
) -> PyResult<Vec<f64>> {
    let cfg = estimator_config(rule, ti, stride, j_star, basis, None, None, 1, None, 256)?;
    Ok(fiszkit::baseline_mad_estimate(&signal(x)?, &cfg)
        .map_err(py_err)?
        .into_values())
}

/// Returns `(transformed, state)`.
#[pyfunction]
#[pyo3(signature = (x, hhat, basis = "haar"))]
fn forward_vst(x: Vec<f64>, hhat: PyRef<'_, PyVarianceEstimate>, basis: &str) -> PyResult<(Vec<f64>, PyVstState)> {
    let (xt, state) = fiszkit::forward_vst(&signal(x)?, &hhat.inner, &self::basis(basis)?).map_err(py_err)?;
    Ok((xt.into_values(), PyVstState { inner: state }))
}

#[pyfunction]
fn inverse_vst(y: Vec<f64>, state: PyRef<'_, PyVstState>) -> PyResult<Vec<f64>> {
    Ok(fiszkit::inverse_vst(&signal(y)?, &state.inner)
        .map_err(py_err)?
        .into_values())
}

/// Stabilise, apply the universal threshold, and invert (no cycle spinning).
#[pyfunction]
#[pyo3(signature = (
    x, *, rule = "hard", j_star = None, basis = "haar",
    known_h = None, hhat = None, half_width = 1, bandwidth = None, grid_size = 256
))]
#[allow(clippy::too_many_arguments)]
fn denoise_via_vst(
    x: Vec<f64>,
    rule: &str,
    j_star: Option<usize>,
    basis: &str,
    known_h: Option<&Bound<'_, PyAny>>,
    hhat: Option<PyRef<'_, PyVarianceEstimate>>,
    half_width: usize,
    bandwidth: Option<f64>,
    grid_size: usize,
) -> PyResult<Vec<f64>> {
    let cfg = estimator_config(
        rule, false, 1, j_star, basis, known_h, hhat.as_deref(), half_width, bandwidth, grid_size,
    )?;
    Ok(fiszkit::denoise_via_vst(&signal(x)?, &cfg)
        .map_err(py_err)?
        .into_values())
}

/// Monte-Carlo comparison of the two estimators.
///
/// Returns `(report_text, cells)` where each cell is a dict with keys
/// `function`, `noise`, `method`, `mean`, `std_err` and `mse`.
#[pyfunction]
#[pyo3(signature = (*, reps = 100, n = 2048, seed = 0, stride = 1, ti = true, threads = None))]
fn run_bench(
    py: Python<'_>,
    reps: usize,
    n: usize,
    seed: u64,
    stride: usize,
    ti: bool,
    threads: Option<usize>,
) -> PyResult<(String, Vec<Py<PyAny>>)> {
    let cfg = BenchConfig {
        reps,
        n,
        master_seed: seed,
        threads,
        estimator: EstimatorConfig {
            shift_stride: stride,
            translation_invariant: ti,
            ..EstimatorConfig::default()
        },
    };
    let report = py.detach(|| core_run_bench(&cfg)).map_err(py_err)?;
    let mut cells = Vec::new();
    for (f, m) in CELLS {
        for method in [Method::MadBaseline, Method::DataDrivenFisz] {
            let c = report.cell(f, m, method);
            let d = pyo3::types::PyDict::new(py);
            d.set_item("function", f.name())?;
            d.set_item("noise", noise_label(m))?;
            d.set_item("method", method.name())?;
            d.set_item("mean", c.mean)?;
            d.set_item("std_err", c.std_err)?;
            d.set_item("mse", c.mse.clone())?;
            cells.push(d.into_any().unbind());
        }
    }
    Ok((report.render(), cells))
}

fn noise_label(m: NoiseModel) -> &'static str {
    match m {
        NoiseModel::Poisson => "poisson",
        NoiseModel::ExponentialMultiplicative => "exponential",
        NoiseModel::GaussianAdditive { .. } => "gaussian",
    }
}

/// Benchmark signal on its standard range (`'blocks'` or `'bumps'`).
#[pyfunction]
fn test_function(name: &str, n: usize) -> PyResult<Vec<f64>> {
    let f = match name {
        "blocks" => TestFunction::Blocks,
        "bumps" => TestFunction::Bumps,
        other => return Err(PyValueError::new_err(format!("unknown test function `{other}`"))),
    };
    Ok(f.generate(n).map_err(py_err)?.into_values())
}

#[pymodule]
fn pyfiszkit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyVarianceEstimate>()?;
    m.add_class::<PyEstimateResult>()?;
    m.add_class::<PyVstState>()?;
    m.add_function(wrap_pyfunction!(make_blocks, m)?)?;
    m.add_function(wrap_pyfunction!(make_bumps, m)?)?;
    m.add_function(wrap_pyfunction!(test_function, m)?)?;
    m.add_function(wrap_pyfunction!(sample_noise, m)?)?;
    m.add_function(wrap_pyfunction!(dwt_forward, m)?)?;
    m.add_function(wrap_pyfunction!(dwt_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(local_means, m)?)?;
    m.add_function(wrap_pyfunction!(pava_isotone, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_variance_function, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_mad_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(forward_vst, m)?)?;
    m.add_function(wrap_pyfunction!(inverse_vst, m)?)?;
    m.add_function(wrap_pyfunction!(denoise_via_vst, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    Ok(())
}
