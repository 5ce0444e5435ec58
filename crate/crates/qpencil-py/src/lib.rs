//! Python bindings: configurations, classification, orbits with their
//! recurrence residuals, confinement probes and the net audit.
//!
//! Complex numbers map to Python `complex`; points at infinity map to `None`.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use qpencil::config::{parse_config, render_config};
use qpencil::engine::{
    autonomous_mismatch_orbit, confinement_probe_3d, max_residual, net_audit as audit,
    orbit as run_orbit, verify_recurrence, OrbitRun, OrbitState, OrbitTrace,
};
use qpencil::families::{build_pencils, example_config, sample_config};
use qpencil::pencil_core::{char_poly as delta_of, classify_pencil};
use qpencil::{Error, FamilyConfig, FamilyTag, ProjPoint1, Real, UniformParam};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

create_exception!(qpencil, QpencilError, PyValueError);
create_exception!(qpencil, StageError, QpencilError);
create_exception!(qpencil, PrecisionExhausted, QpencilError);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::StageError { .. } => StageError::new_err(e.to_string()),
        Error::PrecisionExhausted { .. } => PrecisionExhausted::new_err(e.to_string()),
        _ => QpencilError::new_err(e.to_string()),
    }
}

/// A validated family configuration.
#[pyclass(name = "Config", module = "qpencil", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: FamilyConfig,
    start: Option<Complex64>,
}

fn tag(family: &str) -> PyResult<FamilyTag> {
    family.parse().map_err(py_err)
}

#[pymethods]
impl PyConfig {
    /// Parses the key = value file format.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let cf = parse_config(text).map_err(py_err)?;
        Ok(PyConfig {
            inner: cf.family,
            start: cf.start,
        })
    }

    /// The built-in example configuration of a family.
    #[staticmethod]
    fn example(family: &str) -> PyResult<Self> {
        Ok(PyConfig {
            inner: example_config(tag(family)?),
            start: None,
        })
    }

    /// A random admissible configuration, reproducible from the seed.
    #[staticmethod]
    #[pyo3(signature = (family, seed, symmetric = false))]
    fn sample(family: &str, seed: u64, symmetric: bool) -> PyResult<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(PyConfig {
            inner: sample_config(tag(family)?, symmetric, &mut rng),
            start: None,
        })
    }

    #[getter]
    fn family(&self) -> String {
        self.inner.tag.to_string()
    }

    #[getter]
    fn step(&self) -> Complex64 {
        self.inner.step
    }

    #[getter]
    fn kappa(&self) -> Option<Complex64> {
        self.inner.kappa
    }

    #[getter]
    fn points(&self) -> Vec<Complex64> {
        self.inner.points.clone()
    }

    #[getter]
    fn symmetric(&self) -> bool {
        self.inner.symmetric
    }

    #[getter]
    fn start(&self) -> Complex64 {
        self.start.unwrap_or_else(|| self.inner.default_start())
    }

    fn render(&self) -> String {
        render_config(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(family={}, step={})",
            self.inner.tag, self.inner.step
        )
    }
}

/// One state as (n, x, y, position); None stands for infinity.
type StateRow = (Real, Option<Complex64>, Option<Complex64>, Complex64);

fn rows(trace: &OrbitTrace) -> Vec<StateRow> {
    trace
        .states
        .iter()
        .map(|s| (s.n, s.x.value(), s.y.value(), s.p.position()))
        .collect()
}

fn point(v: Option<Complex64>) -> ProjPoint1 {
    v.map_or(ProjPoint1::infinity(), ProjPoint1::affine)
}

fn trace_of(cfg: &FamilyConfig, states: &[StateRow]) -> qpencil::Result<OrbitTrace> {
    let states = states
        .iter()
        .map(|&(n, x, y, pos)| {
            Ok(OrbitState::new(
                n,
                point(x),
                point(y),
                UniformParam::new(cfg.tag, pos, cfg.step)?,
            ))
        })
        .collect::<qpencil::Result<Vec<_>>>()?;
    Ok(OrbitTrace {
        states,
        intermediates: vec![],
    })
}

fn orbit_run(
    cfg: &PyConfig,
    x0: Complex64,
    y0: Complex64,
    steps: usize,
    mismatch: bool,
) -> qpencil::Result<OrbitRun> {
    let p = cfg.inner.param(cfg.start())?;
    let s0 = OrbitState::new(0.0, ProjPoint1::affine(x0), ProjPoint1::affine(y0), p);
    Ok(if mismatch {
        autonomous_mismatch_orbit(&cfg.inner, &s0, steps)
    } else {
        run_orbit(&cfg.inner, &s0, steps)
    })
}

/// Coefficients of Δ(λ) = det(M₀ − λM∞), constant term first.
#[pyfunction]
fn char_poly(cfg: &PyConfig) -> PyResult<Vec<Complex64>> {
    let q = build_pencils(&cfg.inner).map_err(py_err)?.q;
    Ok(delta_of(&q).coeffs)
}

/// Type tag, Segre symbol and root data of the pencil.
#[pyfunction]
#[pyo3(signature = (cfg, tol = 1e-9))]
fn classify<'py>(py: Python<'py>, cfg: &PyConfig, tol: Real) -> PyResult<Bound<'py, PyDict>> {
    let q = build_pencils(&cfg.inner).map_err(py_err)?.q;
    let t = classify_pencil(&q, tol).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("type", t.tag.name())?;
    d.set_item("segre", t.segre)?;
    d.set_item("expected_type", cfg.inner.tag.expected_type().name())?;
    let roots: Vec<(Option<Complex64>, usize, usize)> = t
        .root_data
        .iter()
        .map(|r| (r.root.value(), r.multiplicity, r.corank))
        .collect();
    d.set_item("roots", roots)?;
    Ok(d)
}

/// Iterates the deformed map from (x0, y0). A stage failure or an exhausted
/// precision budget ends the orbit early and is reported under "halted".
#[pyfunction]
#[pyo3(signature = (cfg, x0, y0, steps = 12, autonomous_mismatch = false))]
fn orbit<'py>(
    py: Python<'py>,
    cfg: &PyConfig,
    x0: Complex64,
    y0: Complex64,
    steps: usize,
    autonomous_mismatch: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let run = orbit_run(cfg, x0, y0, steps, autonomous_mismatch).map_err(py_err)?;
    let res = verify_recurrence(&cfg.inner, &run.trace).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("states", rows(&run.trace))?;
    d.set_item(
        "residuals",
        res.iter().map(|r| (r[0], r[1])).collect::<Vec<_>>(),
    )?;
    d.set_item("max_residual", max_residual(&res))?;
    d.set_item("error_estimate", run.trace.error_estimate())?;
    d.set_item("halted", run.halted.map(|e| e.to_string()))?;
    Ok(d)
}

/// Recurrence residuals of stored states, as returned by `orbit`.
#[pyfunction]
fn verify_states(cfg: &PyConfig, states: Vec<StateRow>) -> PyResult<Vec<(Real, Real)>> {
    let trace = trace_of(&cfg.inner, &states).map_err(py_err)?;
    let res = verify_recurrence(&cfg.inner, &trace).map_err(py_err)?;
    Ok(res.iter().map(|r| (r[0], r[1])).collect())
}

/// The 3D confinement probe for base point `index` (1..8) at ε and ε/100.
#[pyfunction]
#[pyo3(signature = (cfg, index, eps = 1e-4))]
fn confinement_probe<'py>(
    py: Python<'py>,
    cfg: &PyConfig,
    index: usize,
    eps: Real,
) -> PyResult<Bound<'py, PyDict>> {
    let r = confinement_probe_3d(&cfg.inner, index, eps, cfg.start).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("d1", r.d1.to_vec())?;
    d.set_item("d2", r.d2.to_vec())?;
    d.set_item("ratio_d1", r.ratio_d1())?;
    d.set_item("ratio_d2", r.ratio_d2())?;
    d.set_item("passed", r.passed)?;
    Ok(d)
}

/// (dim of quadrics through S_i, dim through R₁(S_i)).
#[pyfunction]
fn net_audit(cfg: &PyConfig) -> PyResult<(usize, usize)> {
    let a = audit(&cfg.inner, cfg.start).map_err(py_err)?;
    Ok((a.dim_s, a.dim_rs))
}

#[pymodule]
#[pyo3(name = "qpencil")]
fn qpencil_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(char_poly, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(orbit, m)?)?;
    m.add_function(wrap_pyfunction!(verify_states, m)?)?;
    m.add_function(wrap_pyfunction!(confinement_probe, m)?)?;
    m.add_function(wrap_pyfunction!(net_audit, m)?)?;
    let py = m.py();
    m.add("QpencilError", py.get_type::<QpencilError>())?;
    m.add("StageError", py.get_type::<StageError>())?;
    m.add("PrecisionExhausted", py.get_type::<PrecisionExhausted>())?;
    Ok(())
}
