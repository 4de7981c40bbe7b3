//! Python bindings: scenarios, Fisher informations, point bounds, coverage,
//! admissible UE regions, PEB CDF and the Monte-Carlo harness.

use ::isac_hybrid::coverage::{self, RegionBranch};
use ::isac_hybrid::crlb::{self, oracle, BoundCoefficients};
use ::isac_hybrid::estimator::{self, MonteCarloConfig};
use ::isac_hybrid::fisher;
use ::isac_hybrid::io::Scenario;
use ::isac_hybrid::scenario::{self, Vec2};
use ::isac_hybrid::Error;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

type Point = (f64, f64);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Numerical(_) => PyArithmeticError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn vec2(p: Point) -> Vec2 {
    Vec2::new(p.0, p.1)
}

fn point(v: Vec2) -> Point {
    (v.x, v.y)
}

/// Waveform, link budget and geometry of one study.
#[pyclass(name = "Scenario", module = "isac_hybrid_py", from_py_object)]
#[derive(Clone)]
pub struct PyScenario {
    inner: Scenario,
}

#[pymethods]
impl PyScenario {
    /// Built-in reference scenario, or the given JSON document.
    #[new]
    #[pyo3(signature = (json=None))]
    fn new(json: Option<&str>) -> PyResult<Self> {
        let inner = match json {
            Some(text) => Scenario::from_json(text).map_err(py_err)?,
            None => Scenario::default(),
        };
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: Scenario::load(path.as_ref()).map_err(py_err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(py_err)
    }

    #[getter]
    fn target(&self) -> Point {
        point(self.inner.target)
    }

    #[setter]
    fn set_target(&mut self, q: Point) {
        self.inner.target = vec2(q);
    }

    #[getter]
    fn ue(&self) -> Option<Point> {
        self.inner.ue.map(point)
    }

    #[setter]
    fn set_ue(&mut self, ue: Option<Point>) {
        self.inner.ue = ue.map(vec2);
    }

    #[getter]
    fn velocity(&self) -> Point {
        point(self.inner.velocity)
    }

    #[setter]
    fn set_velocity(&mut self, v: Point) {
        self.inner.velocity = vec2(v);
    }

    #[getter]
    fn wavelength(&self) -> f64 {
        self.inner.ofdm.wavelength()
    }

    #[getter]
    fn speed_of_light(&self) -> f64 {
        self.inner.ofdm.speed_of_light
    }

    fn __repr__(&self) -> String {
        format!("Scenario(target={:?}, ue={:?}, velocity={:?})", self.target(), self.ue(), self.velocity())
    }
}

impl PyScenario {
    fn ue_or(&self, ue: Option<Point>) -> PyResult<Vec2> {
        ue.map(vec2)
            .or(self.inner.ue)
            .ok_or_else(|| PyValueError::new_err("no UE position given and none in the scenario"))
    }
}

/// Diagonal Fisher informations of one scene.
#[pyclass(name = "FisherSet", module = "isac_hybrid_py", frozen, get_all, from_py_object)]
#[derive(Clone, Copy)]
pub struct PyFisherSet {
    delay_bs: f64,
    angle: f64,
    delay_ue: f64,
    doppler_bs: f64,
    doppler_ue: f64,
}

#[pymethods]
impl PyFisherSet {
    #[new]
    #[pyo3(signature = (delay_bs, angle, delay_ue, doppler_bs=0.0, doppler_ue=0.0))]
    fn new(delay_bs: f64, angle: f64, delay_ue: f64, doppler_bs: f64, doppler_ue: f64) -> Self {
        Self { delay_bs, angle, delay_ue, doppler_bs, doppler_ue }
    }

    fn __repr__(&self) -> String {
        format!(
            "FisherSet(delay_bs={:e}, angle={:e}, delay_ue={:e}, doppler_bs={:e}, doppler_ue={:e})",
            self.delay_bs, self.angle, self.delay_ue, self.doppler_bs, self.doppler_ue
        )
    }
}

impl From<fisher::FisherSet> for PyFisherSet {
    fn from(f: fisher::FisherSet) -> Self {
        Self {
            delay_bs: f.delay_bs,
            angle: f.angle,
            delay_ue: f.delay_ue,
            doppler_bs: f.doppler_bs,
            doppler_ue: f.doppler_ue,
        }
    }
}

impl From<PyFisherSet> for fisher::FisherSet {
    fn from(f: PyFisherSet) -> Self {
        Self {
            delay_bs: f.delay_bs,
            angle: f.angle,
            delay_ue: f.delay_ue,
            doppler_bs: f.doppler_bs,
            doppler_ue: f.doppler_ue,
        }
    }
}

/// Bounds at one target/UE placement.
#[pyclass(name = "PointBounds", module = "isac_hybrid_py", frozen, get_all)]
pub struct PyPointBounds {
    peb_mono: f64,
    peb_hybrid: f64,
    peb_limit: f64,
    veb: f64,
    bistatic_angle: f64,
    rho: f64,
    optimal_angle: f64,
}

#[pymethods]
impl PyPointBounds {
    fn __repr__(&self) -> String {
        format!(
            "PointBounds(peb_mono={}, peb_hybrid={}, peb_limit={}, veb={}, bistatic_angle={}, rho={}, optimal_angle={})",
            self.peb_mono, self.peb_hybrid, self.peb_limit, self.veb, self.bistatic_angle, self.rho, self.optimal_angle
        )
    }
}

/// Fisher informations of the scene (target and UE default to the scenario's).
#[pyfunction]
#[pyo3(signature = (scenario, target=None, ue=None))]
fn fisher_set(scenario: &PyScenario, target: Option<Point>, ue: Option<Point>) -> PyResult<PyFisherSet> {
    let s = &scenario.inner;
    let g = scenario::derive_geometry(target.map(vec2).unwrap_or(s.target), scenario.ue_or(ue)?).map_err(py_err)?;
    Ok(fisher::fisher_set(&s.ofdm, &s.link_budget(), &g, &s.fisher).map_err(py_err)?.into())
}

/// Mono, hybrid and limit PEB [m], VEB [m/s], ψ, ρ and ψ*.
#[pyfunction]
#[pyo3(signature = (scenario, target=None, ue=None))]
fn peb_point(scenario: &PyScenario, target: Option<Point>, ue: Option<Point>) -> PyResult<PyPointBounds> {
    let s = &scenario.inner;
    let g = scenario::derive_geometry(target.map(vec2).unwrap_or(s.target), scenario.ue_or(ue)?).map_err(py_err)?;
    let fs = fisher::fisher_set(&s.ofdm, &s.link_budget(), &g, &s.fisher).map_err(py_err)?;
    let c = s.ofdm.speed_of_light;
    let rho = fs.doppler_bs / fs.doppler_ue;
    Ok(PyPointBounds {
        peb_mono: crlb::mono_from_fisher(&fs, g.range_bs, c).map_err(py_err)?.peb,
        peb_hybrid: crlb::hybrid_position(&fs, &g, c).map_err(py_err)?.peb,
        peb_limit: crlb::position_limit(&fs, &g, c).map_err(py_err)?.peb,
        veb: crlb::velocity(&fs, &g, s.ofdm.wavelength()).map_err(py_err)?.veb,
        bistatic_angle: g.bistatic_angle,
        rho,
        optimal_angle: crlb::optimal_bistatic_angle(rho).unwrap_or(f64::NAN),
    })
}

/// Closed-form hybrid position CRLB [m²] for given Fisher values.
#[pyfunction]
#[pyo3(signature = (fisher, target, ue, c=3.0e8))]
fn hybrid_crlb(fisher: PyFisherSet, target: Point, ue: Point, c: f64) -> PyResult<f64> {
    let g = scenario::derive_geometry(vec2(target), vec2(ue)).map_err(py_err)?;
    Ok(crlb::hybrid_position(&fisher.into(), &g, c).map_err(py_err)?.crlb)
}

/// Position CRLB [m²] as tr((JᵀIJ)⁻¹) from Cartesian Jacobians.
#[pyfunction]
#[pyo3(signature = (fisher, target, ue, c=3.0e8))]
fn numeric_crlb(fisher: PyFisherSet, target: Point, ue: Point, c: f64) -> f64 {
    oracle::position_trace(&fisher.into(), vec2(target), vec2(ue), c)
}

/// Bistatic angle [rad] minimising the two-leg bounds for Fisher ratio ρ.
#[pyfunction]
fn optimal_bistatic_angle(rho: f64) -> PyResult<f64> {
    crlb::optimal_bistatic_angle(rho).map_err(py_err)
}

/// Mono coverage area [m²], closed form and polar quadrature.
#[pyfunction]
#[pyo3(signature = (scenario, peb_threshold, intervals=20_000))]
fn mono_coverage(scenario: &PyScenario, peb_threshold: f64, intervals: usize) -> PyResult<(f64, f64)> {
    let s = &scenario.inner;
    let lb = s.link_budget();
    let closed = coverage::coverage_mono_closed(&s.ofdm, &lb, peb_threshold).map_err(py_err)?.area;
    let coeffs = BoundCoefficients::new(&s.ofdm, &lb, &s.fisher);
    Ok((closed, coverage::coverage_mono_quadrature(&coeffs, peb_threshold, intervals)))
}

/// Admissible UE region of a target as a dict: branch, area [m²],
/// peb_mono, peb_limit and the (ψ, r_U) boundary samples.
#[pyfunction]
#[pyo3(signature = (scenario, peb_threshold, target=None))]
fn ue_region<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    peb_threshold: f64,
    target: Option<Point>,
) -> PyResult<Bound<'py, PyDict>> {
    let s = &scenario.inner;
    let q = target.map(vec2).unwrap_or(s.target);
    let r = coverage::ue_admissible_region(&s.ofdm, &s.link_budget(), q, peb_threshold, &s.fisher).map_err(py_err)?;
    let branch = match r.branch {
        RegionBranch::Empty => "empty",
        RegionBranch::FullLoop => "full-loop",
        RegionBranch::PartialLoop => "partial-loop",
        RegionBranch::AllPlane => "all-plane",
    };
    let d = PyDict::new(py);
    d.set_item("branch", branch)?;
    d.set_item("area", r.area)?;
    d.set_item("peb_mono", r.peb_mono)?;
    d.set_item("peb_limit", r.peb_limit)?;
    d.set_item("boundary", r.boundary)?;
    Ok(d)
}

/// P(PEB ≤ γ_p) for a Poisson UE field of density λ [UEs/m²].
#[pyfunction]
#[pyo3(signature = (scenario, density, peb_threshold, target=None))]
fn peb_cdf(scenario: &PyScenario, density: f64, peb_threshold: f64, target: Option<Point>) -> PyResult<f64> {
    let s = &scenario.inner;
    let q = target.map(vec2).unwrap_or(s.target);
    coverage::peb_cdf(&s.ofdm, &s.link_budget(), q, density, peb_threshold, &s.fisher).map_err(py_err)
}

/// Monte-Carlo RMSE versus bounds; one dict per SNR point.
#[pyfunction]
#[pyo3(signature = (scenario, snr_db, trials=100, seed=0, refine_delay=false))]
fn monte_carlo<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    snr_db: Vec<f64>,
    trials: usize,
    seed: u64,
    refine_delay: bool,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let s = scenario.inner.clone();
    let ue = scenario.ue_or(None)?;
    let mc = MonteCarloConfig { snr_db, trials, seed, refine_delay, fisher: s.fisher, ..MonteCarloConfig::default() };
    let points = py
        .detach(|| estimator::monte_carlo(&s.ofdm, &s.link_budget(), s.target, ue, s.velocity, &mc))
        .map_err(py_err)?;
    points
        .iter()
        .map(|p| {
            let d = PyDict::new(py);
            d.set_item("snr_db", p.snr_db)?;
            d.set_item("rmse_pos_mono", p.rmse_pos_mono)?;
            d.set_item("rmse_pos_hybrid", p.rmse_pos_hybrid)?;
            d.set_item("rmse_vel", p.rmse_vel)?;
            d.set_item("peb_mono", p.peb_mono)?;
            d.set_item("peb_hybrid", p.peb_hybrid)?;
            d.set_item("veb", p.veb)?;
            d.set_item("trials", p.trials)?;
            d.set_item("velocity_failures", p.velocity_failures)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn isac_hybrid_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyFisherSet>()?;
    m.add_class::<PyPointBounds>()?;
    m.add_function(wrap_pyfunction!(fisher_set, m)?)?;
    m.add_function(wrap_pyfunction!(peb_point, m)?)?;
    m.add_function(wrap_pyfunction!(hybrid_crlb, m)?)?;
    m.add_function(wrap_pyfunction!(numeric_crlb, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_bistatic_angle, m)?)?;
    m.add_function(wrap_pyfunction!(mono_coverage, m)?)?;
    m.add_function(wrap_pyfunction!(ue_region, m)?)?;
    m.add_function(wrap_pyfunction!(peb_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
