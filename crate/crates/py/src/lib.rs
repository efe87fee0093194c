//! Python bindings: configuration, trials, Monte Carlo runs, closed forms
//! and Gamma fitting.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mtcache::analytics;
use mtcache::content::distinct_demands;
use mtcache::experiments::{self, ExperimentSpec, Format, SweepAxis};
use mtcache::sim::{self, TrialSetup};
use mtcache::{Error, Field, FieldElement};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidConfig(_)
        | Error::InvalidCentralizedParameter { .. }
        | Error::UnknownFigure(_)
        | Error::UnsupportedFieldBits(_)
        | Error::InverseOfZero
        | Error::Parse(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// System parameters: K users, L transmitters, N files, cache of M files,
/// files of F symbols over GF(2^field_bits).
#[pyclass(name = "SystemConfig", frozen, from_py_object)]
#[derive(Clone)]
struct PySystemConfig {
    inner: mtcache::SystemConfig,
}

#[pymethods]
impl PySystemConfig {
    #[new]
    #[pyo3(signature = (k, l, n, m, f, field_bits = 16))]
    fn new(k: usize, l: usize, n: usize, m: f64, f: usize, field_bits: u32) -> PyResult<Self> {
        let inner = mtcache::SystemConfig::new(k, l, n, m, f)
            .and_then(|c| c.with_field_bits(field_bits))
            .map_err(to_py)?;
        Ok(PySystemConfig { inner })
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }
    #[getter]
    fn l(&self) -> usize {
        self.inner.l
    }
    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }
    #[getter]
    fn m(&self) -> f64 {
        self.inner.m
    }
    #[getter]
    fn f(&self) -> usize {
        self.inner.f
    }
    #[getter]
    fn field_bits(&self) -> u32 {
        self.inner.field_bits
    }

    /// Normalized cache size M/N.
    fn p(&self) -> f64 {
        self.inner.p()
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "SystemConfig(k={}, l={}, n={}, m={}, f={}, field_bits={})",
            c.k, c.l, c.n, c.m, c.f, c.field_bits
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn spec(
    cfg: &PySystemConfig,
    placement: &str,
    kc: usize,
    delivery: &str,
    trials: usize,
    seed: u64,
    decode: bool,
    demands: Option<Vec<usize>>,
) -> PyResult<ExperimentSpec> {
    let mut s = ExperimentSpec::new(cfg.inner.clone());
    s.placement = placement.parse().map_err(to_py)?;
    s.delivery = delivery.parse().map_err(to_py)?;
    s.kc = kc;
    s.trials = trials;
    s.root_seed = seed;
    s.decode = decode;
    s.demands = demands;
    Ok(s)
}

/// One full trial: placement, delivery, transmission and decoding.
#[pyfunction]
#[pyo3(signature = (cfg, seed = 0, placement = "decentralized", kc = 0, delivery = "joint", demands = None))]
fn run_trial<'py>(
    py: Python<'py>,
    cfg: &PySystemConfig,
    seed: u64,
    placement: &str,
    kc: usize,
    delivery: &str,
    demands: Option<Vec<usize>>,
) -> PyResult<Bound<'py, PyDict>> {
    let setup = TrialSetup {
        demands: demands.unwrap_or_else(|| distinct_demands(cfg.inner.k)),
        cfg: cfg.inner.clone(),
        placement: placement.parse().map_err(to_py)?,
        kc,
        delivery: delivery.parse().map_err(to_py)?,
    };
    let out = py.detach(|| sim::run_trial(&setup, seed)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("delay_slots", out.delay_slots)?;
    d.set_item("delay_norm", out.delay_slots as f64 / cfg.inner.f as f64)?;
    d.set_item("resamples", out.resamples)?;
    d.set_item("decode_failures", out.decode_failures)?;
    d.set_item("decoded_blocks", out.decoded_blocks)?;
    d.set_item("per_user_ok", out.per_user_ok)?;
    d.set_item("all_ok", out.all_ok)?;
    Ok(d)
}

/// Monte Carlo run at one operating point, or over `sweep_values` of
/// `sweep_param`; returns the result table as CSV or JSON text.
#[pyfunction]
#[pyo3(signature = (
    cfg, trials = 100, seed = 0, placement = "decentralized", kc = 0, delivery = "joint",
    decode = false, sweep_param = None, sweep_values = None, demands = None, format = "csv"
))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    cfg: &PySystemConfig,
    trials: usize,
    seed: u64,
    placement: &str,
    kc: usize,
    delivery: &str,
    decode: bool,
    sweep_param: Option<&str>,
    sweep_values: Option<Vec<f64>>,
    demands: Option<Vec<usize>>,
    format: &str,
) -> PyResult<String> {
    let mut s = spec(cfg, placement, kc, delivery, trials, seed, decode, demands)?;
    match (sweep_param, sweep_values) {
        (Some(p), Some(values)) => {
            s.sweep = Some(SweepAxis {
                param: p.parse().map_err(to_py)?,
                values,
            })
        }
        (None, None) => {}
        _ => {
            return Err(PyValueError::new_err(
                "sweep_param and sweep_values go together",
            ))
        }
    }
    let format: Format = format.parse().map_err(to_py)?;
    let table = py
        .detach(|| experiments::run_monte_carlo(&s))
        .map_err(to_py)?;
    experiments::render(&table, format).map_err(to_py)
}

/// Canned grid of figure 2 to 6 as CSV or JSON text.
#[pyfunction]
#[pyo3(signature = (figure_id, trials = 100, seed = 0, format = "csv"))]
fn sweep_figure(
    py: Python<'_>,
    figure_id: u32,
    trials: usize,
    seed: u64,
    format: &str,
) -> PyResult<String> {
    let format: Format = format.parse().map_err(to_py)?;
    let table = py
        .detach(|| experiments::sweep_figure(figure_id, trials, seed))
        .map_err(to_py)?;
    experiments::render(&table, format).map_err(to_py)
}

#[pyfunction]
fn delay_infinite(k: usize, l: usize, p: f64) -> f64 {
    analytics::delay_infinite(k, l, p)
}

#[pyfunction]
fn delay_centralized(k: usize, l: usize, p: f64) -> f64 {
    analytics::delay_centralized(k, l, p)
}

#[pyfunction]
fn delay_tdma(kc: usize, kd: usize, l: usize, p: f64) -> f64 {
    analytics::delay_tdma(kc, kd, l, p)
}

#[pyfunction]
fn delay_hybrid_l1(kc: usize, kd: usize, p: f64) -> f64 {
    analytics::delay_hybrid_l1(kc, kd, p)
}

/// (hybrid, centralized, decentralized) first-order small-memory delays.
#[pyfunction]
fn taylor_delays(k: usize, kc: usize, kd: usize, p: f64) -> (f64, f64, f64) {
    let t = analytics::taylor_delays(k, kc, kd, p);
    (t.hybrid, t.centralized, t.decentralized)
}

#[pyfunction]
fn delta_tc(k: usize, l: usize, p: f64) -> f64 {
    analytics::delta_tc(k, l, p)
}

#[pyfunction]
fn lower_bound(k: usize, l: usize, p: f64) -> f64 {
    analytics::lower_bound(k, l, p)
}

#[pyfunction]
fn hybrid_superior(k: usize, kc: usize) -> bool {
    analytics::hybrid_superior(k, kc)
}

/// Gamma fit by moments; returns (shape, scale, used, dropped).
#[pyfunction]
#[pyo3(signature = (samples, mle = false))]
fn fit_gamma(samples: Vec<f64>, mle: bool) -> PyResult<(f64, f64, usize, usize)> {
    let fit = if mle {
        analytics::fit_gamma_mle(&samples)
    } else {
        analytics::fit_gamma(&samples)
    }
    .map_err(to_py)?;
    Ok((fit.params.shape, fit.params.scale, fit.used, fit.dropped))
}

#[pyfunction]
fn gamma_pdf(x: f64, shape: f64, scale: f64) -> PyResult<f64> {
    let g = analytics::GammaParams::new(shape, scale).map_err(to_py)?;
    Ok(analytics::gamma_pdf(x, &g))
}

#[pyfunction]
fn ks_statistic(samples: Vec<f64>, shape: f64, scale: f64) -> PyResult<f64> {
    let g = analytics::GammaParams::new(shape, scale).map_err(to_py)?;
    Ok(analytics::ks_statistic(&samples, &g))
}

fn field(bits: u32) -> PyResult<Field> {
    Field::new(bits).map_err(to_py)
}

fn element(f: &Field, x: u32) -> PyResult<FieldElement> {
    if x as u64 >= f.order() as u64 {
        return Err(PyValueError::new_err(format!(
            "{x} is not an element of GF(2^{})",
            f.bits()
        )));
    }
    Ok(FieldElement(x as u16))
}

#[pyfunction]
#[pyo3(signature = (a, b, bits = 16))]
fn gf_mul(a: u32, b: u32, bits: u32) -> PyResult<u32> {
    let f = field(bits)?;
    Ok(f.mul(element(&f, a)?, element(&f, b)?).0 as u32)
}

#[pyfunction]
#[pyo3(signature = (a, bits = 16))]
fn gf_inv(a: u32, bits: u32) -> PyResult<u32> {
    let f = field(bits)?;
    Ok(f.inv(element(&f, a)?).map_err(to_py)?.0 as u32)
}

#[pymodule]
fn mtcache_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemConfig>()?;
    m.add("CSV_HEADER", experiments::CSV_HEADER)?;
    m.add_function(wrap_pyfunction!(run_trial, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_figure, m)?)?;
    m.add_function(wrap_pyfunction!(delay_infinite, m)?)?;
    m.add_function(wrap_pyfunction!(delay_centralized, m)?)?;
    m.add_function(wrap_pyfunction!(delay_tdma, m)?)?;
    m.add_function(wrap_pyfunction!(delay_hybrid_l1, m)?)?;
    m.add_function(wrap_pyfunction!(taylor_delays, m)?)?;
    m.add_function(wrap_pyfunction!(delta_tc, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(hybrid_superior, m)?)?;
    m.add_function(wrap_pyfunction!(fit_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(ks_statistic, m)?)?;
    m.add_function(wrap_pyfunction!(gf_mul, m)?)?;
    m.add_function(wrap_pyfunction!(gf_inv, m)?)?;
    Ok(())
}
