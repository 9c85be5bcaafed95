//! Python module `emhd_cascade`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde_json::Value;

use emhd_cascade::assembly::tail_report;
use emhd_cascade::cascade_ode::{
    integrate_cascade as integrate, ratio_monotonicity, root_residual as residual, verify_integral_bound,
    IntegrationOptions,
};
use emhd_cascade::diagnostics::{
    cascade_rate_fit, holder_estimate, predicted_holder_exponent as holder_exponent, selfsim_feasibility as feasibility,
    HolderOptions, HolderSummary,
};
use emhd_cascade::direct_solver::rhs_eval;
use emhd_cascade::profile::make_seed_profile;
use emhd_cascade::singular_integral::hilbert_periodic as hilbert;
use emhd_cascade::{
    spectral, BubbleAtlas, CascadeError, CascadeState, Grid, ModelParams, Parity, SampledField, SpectralState,
    Trajectory,
};
use emhd_cli::RunConfig;

fn err(e: CascadeError) -> PyErr {
    match e {
        CascadeError::Config(_) | CascadeError::Regime(_) | CascadeError::Domain(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Serializes `v` and hands it to Python's `json.loads`.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(json_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Model constants. Keyword names follow the config file: `b, A, r, n, epsilon, T, delta`.
#[pyclass(name = "Params", from_py_object)]
#[derive(Clone)]
struct PyParams {
    inner: ModelParams,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Self> {
        let mut value = serde_json::to_value(ModelParams::default()).map_err(json_err)?;
        if let Some(kw) = kwargs {
            let text: String = kw.py().import("json")?.call_method1("dumps", (kw,))?.extract()?;
            let given: Value = serde_json::from_str(&text).map_err(json_err)?;
            let obj = value.as_object_mut().expect("params serialize to a map");
            for (k, v) in given.as_object().into_iter().flatten() {
                let key = if k == "amp" { "A" } else { k.as_str() };
                if !obj.contains_key(key) {
                    return Err(PyValueError::new_err(format!("unknown parameter '{k}'")));
                }
                obj.insert(key.to_string(), v.clone());
            }
        }
        let inner: ModelParams = serde_json::from_value(value).map_err(json_err)?;
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn b(&self) -> f64 {
        self.inner.b
    }

    #[getter(A)]
    fn amp(&self) -> f64 {
        self.inner.amp
    }

    #[getter]
    fn r(&self) -> f64 {
        self.inner.r
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("Params(b={}, A={}, r={}, n={}, epsilon={})", p.b, p.amp, p.r, p.n, p.epsilon)
    }
}

/// Scaling-factor trajectory of the cascade ODE.
#[pyclass(name = "Trajectory")]
struct PyTrajectory {
    inner: Trajectory,
    params: ModelParams,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn t(&self) -> Vec<f64> {
        self.inner.states.iter().map(|s| s.t).collect()
    }

    /// `x[i][k]`: scaling factor of bubble `k` at step `i`.
    #[getter]
    fn x(&self) -> Vec<Vec<f64>> {
        self.inner.states.iter().map(|s| s.x.clone()).collect()
    }

    #[getter]
    fn sup_x(&self) -> Vec<f64> {
        self.inner.states.iter().map(|s| s.sup_x()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.states.len()
    }

    /// Log-log fit of `max_k x_k` against `|t|` over `lo ≤ |t| ≤ hi`.
    #[pyo3(signature = (lo = 2f64.powi(-25), hi = 2f64.powi(-5)))]
    fn rate_fit<'py>(&self, py: Python<'py>, lo: f64, hi: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &cascade_rate_fit(&self.inner, (lo, hi)).map_err(err)?)
    }

    fn ratio_monotonicity<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &ratio_monotonicity(&self.inner))
    }

    #[pyo3(signature = (relative_slack = 1e-6))]
    fn integral_bound<'py>(&self, py: Python<'py>, relative_slack: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &verify_integral_bound(&self.inner, &self.params.cascade(), relative_slack).map_err(err)?)
    }

    /// CSV with columns `t, x_0..x_n, a_0..a_n`.
    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_csv(&mut buf).map_err(err)?;
        Ok(String::from_utf8_lossy(&buf).into_owned())
    }

    /// Frozen-profile atlas at step `index` (default: the last one), every bubble carrying the seed.
    #[pyo3(signature = (index = None, points = 512))]
    fn atlas(&self, index: Option<isize>, points: usize) -> PyResult<PyAtlas> {
        let len = self.inner.states.len() as isize;
        let i = index.unwrap_or(-1);
        let i = if i < 0 { len + i } else { i };
        if i < 0 || i >= len {
            return Err(PyValueError::new_err("trajectory index out of range"));
        }
        let state = self.inner.states[i as usize].clone();
        let seed = make_seed_profile(self.params.r, points).map_err(err)?;
        let inner = BubbleAtlas::new(self.params.clone(), state, vec![seed.field; self.params.n + 1]).map_err(err)?;
        Ok(PyAtlas { inner })
    }
}

/// Bubbles `0..=n` with their scaling factors and profiles.
#[pyclass(name = "Atlas")]
struct PyAtlas {
    inner: BubbleAtlas,
}

#[pymethods]
impl PyAtlas {
    /// The `t = 0` atlas: `x_k = A^k`, every profile the seed.
    #[staticmethod]
    #[pyo3(signature = (params, points = 512))]
    fn initial(params: &PyParams, points: usize) -> PyResult<Self> {
        let seed = make_seed_profile(params.inner.r, points).map_err(err)?;
        Ok(Self {
            inner: BubbleAtlas::initial(&params.inner, &seed).map_err(err)?,
        })
    }

    #[staticmethod]
    fn read_checkpoint(dir: &str) -> PyResult<Self> {
        Ok(Self {
            inner: BubbleAtlas::read_checkpoint(dir.as_ref()).map_err(err)?,
        })
    }

    fn write_checkpoint(&self, dir: &str) -> PyResult<()> {
        self.inner.write_checkpoint(dir.as_ref()).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn t(&self) -> f64 {
        self.inner.t()
    }

    #[getter]
    fn length_scales(&self) -> Vec<f64> {
        self.inner.length_scales()
    }

    /// `∂^order B_n` at `points`.
    #[pyo3(signature = (points, order = 0))]
    fn evaluate(&self, points: Vec<f64>, order: usize) -> PyResult<Vec<f64>> {
        self.inner.evaluate(&points, order).map_err(err)
    }

    #[pyo3(signature = (random_pairs = 4000, seed = 7, first_bubble = 2))]
    fn holder<'py>(&self, py: Python<'py>, random_pairs: usize, seed: u64, first_bubble: usize) -> PyResult<Bound<'py, PyAny>> {
        let opts = HolderOptions {
            random_pairs,
            seed,
            first_bubble,
        };
        let h = holder_estimate(&self.inner, &opts).map_err(err)?;
        to_py(py, &HolderSummary::from(&h))
    }

    #[pyo3(signature = (order = 3, lo = 0.1, hi = 1.0))]
    fn tail_report<'py>(&self, py: Python<'py>, order: usize, lo: f64, hi: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &tail_report(&self.inner, order, (lo, hi)).map_err(err)?)
    }
}

/// Integrates the cascade ODE with constant couplings `delta` from `t = 0` to `t_end < 0`.
#[pyfunction]
#[pyo3(signature = (params, t_end = -2.0, safety = 0.02))]
fn integrate_cascade(params: &PyParams, t_end: f64, safety: f64) -> PyResult<PyTrajectory> {
    let cp = params.inner.cascade();
    let init = CascadeState::initial(&cp, vec![cp.delta; cp.n + 1]);
    let opts = IntegrationOptions {
        safety,
        ..IntegrationOptions::default()
    };
    let inner = integrate(init, &cp, t_end, opts).map_err(err)?;
    Ok(PyTrajectory {
        inner,
        params: params.inner.clone(),
    })
}

/// Nonzero root of `a = A(1 - e^{-a})`.
#[pyfunction]
fn solve_root(amp: f64) -> PyResult<f64> {
    emhd_cascade::solve_root(amp).map_err(err)
}

#[pyfunction]
fn root_residual(amp: f64, a: f64) -> f64 {
    residual(amp, a)
}

/// `s = (a - ln A) / (a - ln r)`.
#[pyfunction]
fn predicted_holder_exponent(amp: f64, r: f64) -> PyResult<f64> {
    holder_exponent(amp, r).map_err(err)
}

/// Periodic Hilbert transform of samples on a uniform grid of the given period.
#[pyfunction]
#[pyo3(signature = (values, period = 2.0 * std::f64::consts::PI))]
fn hilbert_periodic(values: Vec<f64>, period: f64) -> PyResult<Vec<f64>> {
    let grid = Grid::new(0.0, period, values.len()).map_err(err)?;
    let f = SampledField::full(grid, values, Parity::None).map_err(err)?;
    Ok(hilbert(&f).map_err(err)?.values)
}

/// Right side `-2bJB' + b(H B'')B` of the periodic model, evaluated spectrally with 2/3 dealiasing.
#[pyfunction]
#[pyo3(signature = (values, period = 2.0 * std::f64::consts::PI, b = 1.0))]
fn direct_rhs(values: Vec<f64>, period: f64, b: f64) -> PyResult<Vec<f64>> {
    let grid = Grid::new(0.0, period, values.len()).map_err(err)?;
    let f = SampledField::full(grid, values, Parity::None).map_err(err)?;
    let st = SpectralState::new(&f, 0.0, Default::default()).map_err(err)?;
    let p = ModelParams {
        b,
        ..ModelParams::default()
    };
    Ok(spectral::ifft_real(rhs_eval(&st, &p).map_err(err)?))
}

/// Seed profile `φ` on `±(1 + 4r)`: returns `(x, φ(x), Hφ''(0))`.
#[pyfunction]
#[pyo3(signature = (r, points = 512))]
fn seed_profile(r: f64, points: usize) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
    let s = make_seed_profile(r, points).map_err(err)?;
    Ok((s.field.grid.points(), s.field.values.clone(), s.delta0))
}

/// Self-similar ansatz sign test for every `c` in `c_values`.
#[pyfunction]
fn selfsim_feasibility<'py>(py: Python<'py>, c_values: Vec<f64>, params: &PyParams) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &feasibility(&c_values, &params.inner).map_err(err)?)
}

/// Runs a configuration (TOML or JSON text) like the command line does and returns its manifest.
#[pyfunction]
#[pyo3(signature = (config, out = None))]
fn run<'py>(py: Python<'py>, config: &str, out: Option<String>) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = RunConfig::parse(config).map_err(err)?;
    if let Some(dir) = out {
        cfg.output.dir = dir.into();
    }
    let outcome = py.detach(|| emhd_cli::run(&cfg));
    to_py(py, &outcome.manifest)
}

#[pymodule]
#[pyo3(name = "emhd_cascade")]
fn emhd_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyAtlas>()?;
    m.add_function(wrap_pyfunction!(integrate_cascade, m)?)?;
    m.add_function(wrap_pyfunction!(solve_root, m)?)?;
    m.add_function(wrap_pyfunction!(root_residual, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_holder_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(hilbert_periodic, m)?)?;
    m.add_function(wrap_pyfunction!(direct_rhs, m)?)?;
    m.add_function(wrap_pyfunction!(seed_profile, m)?)?;
    m.add_function(wrap_pyfunction!(selfsim_feasibility, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
