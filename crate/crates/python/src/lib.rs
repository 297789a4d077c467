//! Python bindings. Every operation accepts `q` either as a float or as a
//! `Deformation`; library errors surface as `QCalcError` subclasses.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use qcalc::qdiff::{self, DerivConfig};
use qcalc::qgeom::{self, DualQLine, PrimalQLine};
use qcalc::qquad::{self, QuadratureConfig, SingularityMode};
use qcalc::verify::{self, VerifyConfig};
use qcalc::{qcore, Flags, QError};

create_exception!(pyqcalc, QCalcError, PyValueError);
create_exception!(pyqcalc, ParseError, QCalcError);
create_exception!(pyqcalc, DomainError, QCalcError);
create_exception!(pyqcalc, PoleError, QCalcError);
create_exception!(pyqcalc, SingularityError, QCalcError);
create_exception!(pyqcalc, DegenerateSecantError, QCalcError);

fn err(e: QError) -> PyErr {
    let msg = e.to_string();
    match e {
        QError::Parse(_) => ParseError::new_err(msg),
        QError::Domain { .. } => DomainError::new_err(msg),
        QError::Pole { .. } => PoleError::new_err(msg),
        QError::Singularity { .. } => SingularityError::new_err(msg),
        QError::DegenerateSecant { .. } => DegenerateSecantError::new_err(msg),
        _ => QCalcError::new_err(msg),
    }
}

fn flag_names(f: Flags) -> Vec<String> {
    f.iter_names()
        .map(|(n, _)| n.to_ascii_lowercase())
        .collect()
}

#[pyclass(name = "Deformation", frozen)]
struct PyDeformation(qcore::Deformation);

#[pymethods]
impl PyDeformation {
    #[new]
    #[pyo3(signature = (q, q1_epsilon = qcore::DEFAULT_Q1_EPSILON))]
    fn new(q: f64, q1_epsilon: f64) -> PyResult<Self> {
        qcore::Deformation::with_q1_epsilon(q, q1_epsilon)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn q(&self) -> f64 {
        self.0.q()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.0.delta()
    }

    #[getter]
    fn is_ordinary(&self) -> bool {
        self.0.is_ordinary()
    }

    /// `-1/(1-q)`, or None on the ordinary branch.
    #[getter]
    fn pole(&self) -> Option<f64> {
        self.0.pole()
    }

    fn bracket(&self, x: f64) -> f64 {
        self.0.bracket(x)
    }

    fn mirror(&self, x: f64) -> Option<f64> {
        self.0.mirror(x)
    }

    fn __repr__(&self) -> String {
        format!("Deformation(q={})", self.0.q())
    }
}

fn deformation(q: &Bound<'_, PyAny>) -> PyResult<qcore::Deformation> {
    if let Ok(d) = q.extract::<PyRef<'_, PyDeformation>>() {
        return Ok(d.0);
    }
    qcore::Deformation::new(q.extract::<f64>()?).map_err(err)
}

/// A value with the diagnostics raised while computing it.
#[pyclass(name = "ExtendedValue", frozen, get_all)]
struct PyExtendedValue {
    value: f64,
    flags: Vec<String>,
}

#[pymethods]
impl PyExtendedValue {
    fn __repr__(&self) -> String {
        format!(
            "ExtendedValue(value={}, flags={:?})",
            self.value, self.flags
        )
    }
}

impl From<qcore::ExtendedValue> for PyExtendedValue {
    fn from(v: qcore::ExtendedValue) -> Self {
        Self {
            value: v.value,
            flags: flag_names(v.flags),
        }
    }
}

/// Result of a numeric derivative or an integral.
#[pyclass(name = "Estimate", frozen, get_all)]
struct PyEstimate {
    value: f64,
    error_estimate: f64,
    flags: Vec<String>,
}

#[pymethods]
impl PyEstimate {
    fn __repr__(&self) -> String {
        format!(
            "Estimate(value={}, error_estimate={}, flags={:?})",
            self.value, self.error_estimate, self.flags
        )
    }
}

impl PyEstimate {
    fn new(value: f64, error_estimate: f64, flags: Flags) -> Self {
        Self {
            value,
            error_estimate,
            flags: flag_names(flags),
        }
    }
}

#[pyclass(name = "Function", frozen)]
struct PyFunction(qcalc::RealFunction);

#[pymethods]
impl PyFunction {
    /// Compile an expression in `x`; `qexp` and `qlog` use the given `q`.
    #[new]
    fn new(expr: &str, q: &Bound<'_, PyAny>) -> PyResult<Self> {
        qcalc::parse_function(expr, deformation(q)?)
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn builtin(name: &str, q: &Bound<'_, PyAny>) -> PyResult<Self> {
        qcalc::builtin(name, deformation(q)?).map(Self).map_err(err)
    }

    /// Value at `x`; NaN outside the domain.
    fn __call__(&self, x: f64) -> f64 {
        self.0.value(x)
    }

    fn eval(&self, x: f64) -> PyExtendedValue {
        self.0.eval(x).into()
    }

    fn derivative(&self, x: f64) -> Option<f64> {
        self.0.derivative(x)
    }

    fn in_domain(&self, x: f64) -> bool {
        self.0.in_domain(x)
    }

    fn __repr__(&self) -> String {
        format!("Function({:?})", self.0.label())
    }
}

#[pyfunction]
fn q_log(x: f64, q: &Bound<'_, PyAny>) -> PyResult<f64> {
    qcore::q_log(x, deformation(q)?).map_err(err)
}

#[pyfunction]
fn q_exp(x: f64, q: &Bound<'_, PyAny>) -> PyResult<PyExtendedValue> {
    Ok(qcore::q_exp(x, deformation(q)?).into())
}

#[pyfunction]
fn big_e(x: f64, q: &Bound<'_, PyAny>) -> PyResult<f64> {
    Ok(qcore::big_e(x, deformation(q)?))
}

#[pyfunction]
fn ln_big_e(x: f64, q: &Bound<'_, PyAny>) -> PyResult<f64> {
    qcore::ln_big_e(x, deformation(q)?).map_err(err)
}

#[pyfunction]
fn q_add(x: f64, y: f64, q: &Bound<'_, PyAny>) -> PyResult<f64> {
    Ok(qcore::q_add(x, y, deformation(q)?))
}

#[pyfunction]
fn q_sub(x: f64, y: f64, q: &Bound<'_, PyAny>) -> PyResult<f64> {
    qcore::q_sub(x, y, deformation(q)?).map_err(err)
}

#[pyfunction]
fn q_mul(x: f64, y: f64, q: &Bound<'_, PyAny>) -> PyResult<PyExtendedValue> {
    qcore::q_mul(x, y, deformation(q)?)
        .map(Into::into)
        .map_err(err)
}

#[pyfunction]
fn q_div(x: f64, y: f64, q: &Bound<'_, PyAny>) -> PyResult<PyExtendedValue> {
    qcore::q_div(x, y, deformation(q)?)
        .map(Into::into)
        .map_err(err)
}

#[pyfunction]
fn q_power_n(x: f64, n: u32, q: &Bound<'_, PyAny>) -> PyResult<PyExtendedValue> {
    qcore::q_power_n(x, n, deformation(q)?)
        .map(Into::into)
        .map_err(err)
}

#[pyfunction]
fn q_times_n(n: u32, x: f64, q: &Bound<'_, PyAny>) -> PyResult<f64> {
    qcore::q_times_n(n, x, deformation(q)?).map_err(err)
}

type ClosedDerivative = fn(&qcalc::RealFunction, f64, qcore::Deformation) -> qcalc::Result<f64>;
type NumericDerivative = fn(
    &qcalc::RealFunction,
    f64,
    qcore::Deformation,
    &DerivConfig,
) -> qcalc::Result<qdiff::Derivative>;

fn derivative(
    closed: ClosedDerivative,
    numeric: NumericDerivative,
    f: &PyFunction,
    x: f64,
    q: &Bound<'_, PyAny>,
    method: &str,
) -> PyResult<PyEstimate> {
    let d = deformation(q)?;
    match method {
        "closed" => {
            let v = closed(&f.0, x, d).map_err(err)?;
            Ok(PyEstimate::new(v, 0.0, qcore::branch_flags(d)))
        }
        "numeric" => {
            let r = numeric(&f.0, x, d, &DerivConfig::default()).map_err(err)?;
            Ok(PyEstimate::new(r.value, r.error_estimate, r.flags))
        }
        other => Err(QCalcError::new_err(format!(
            "method must be 'closed' or 'numeric', got {other:?}"
        ))),
    }
}

#[pyfunction]
#[pyo3(signature = (f, x, q, method = "numeric"))]
fn primal_qderiv(
    f: &PyFunction,
    x: f64,
    q: &Bound<'_, PyAny>,
    method: &str,
) -> PyResult<PyEstimate> {
    derivative(
        qdiff::primal_qderiv_closed,
        qdiff::primal_qderiv_numeric,
        f,
        x,
        q,
        method,
    )
}

#[pyfunction]
#[pyo3(signature = (f, x, q, method = "numeric"))]
fn dual_qderiv(f: &PyFunction, x: f64, q: &Bound<'_, PyAny>, method: &str) -> PyResult<PyEstimate> {
    derivative(
        qdiff::dual_qderiv_closed,
        qdiff::dual_qderiv_numeric,
        f,
        x,
        q,
        method,
    )
}

fn quad_config(
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
    singularity: &str,
) -> PyResult<QuadratureConfig> {
    let singularity_mode = match singularity {
        "error" => SingularityMode::Error,
        "reflect" => SingularityMode::Reflect,
        other => {
            return Err(QCalcError::new_err(format!(
                "singularity must be 'error' or 'reflect', got {other:?}"
            )))
        }
    };
    Ok(QuadratureConfig {
        abs_tol,
        rel_tol,
        max_subdivisions,
        singularity_mode,
    })
}

type Integrator = fn(
    &qcalc::RealFunction,
    f64,
    f64,
    qcore::Deformation,
    &QuadratureConfig,
) -> qcalc::Result<qquad::IntegralResult>;

#[allow(clippy::too_many_arguments)]
fn integrate(
    run: Integrator,
    f: &PyFunction,
    x_lo: f64,
    x_hi: f64,
    q: &Bound<'_, PyAny>,
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
    singularity: &str,
) -> PyResult<PyEstimate> {
    let cfg = quad_config(abs_tol, rel_tol, max_subdivisions, singularity)?;
    let r = run(&f.0, x_lo, x_hi, deformation(q)?, &cfg).map_err(err)?;
    Ok(PyEstimate::new(r.value, r.error_estimate, r.flags))
}

#[pyfunction]
#[pyo3(signature = (f, x_lo, x_hi, q, abs_tol = 1e-10, rel_tol = 1e-8, max_subdivisions = 2000, singularity = "error"))]
#[allow(clippy::too_many_arguments)]
fn primal_qint(
    f: &PyFunction,
    x_lo: f64,
    x_hi: f64,
    q: &Bound<'_, PyAny>,
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
    singularity: &str,
) -> PyResult<PyEstimate> {
    integrate(
        qquad::primal_qint,
        f,
        x_lo,
        x_hi,
        q,
        abs_tol,
        rel_tol,
        max_subdivisions,
        singularity,
    )
}

#[pyfunction]
#[pyo3(signature = (f, x_lo, x_hi, q, abs_tol = 1e-10, rel_tol = 1e-8, max_subdivisions = 2000))]
#[allow(clippy::too_many_arguments)]
fn dual_qint(
    f: &PyFunction,
    x_lo: f64,
    x_hi: f64,
    q: &Bound<'_, PyAny>,
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> PyResult<PyEstimate> {
    integrate(
        qquad::dual_qint,
        f,
        x_lo,
        x_hi,
        q,
        abs_tol,
        rel_tol,
        max_subdivisions,
        "error",
    )
}

#[pyfunction]
#[pyo3(signature = (f, x_lo, x_hi, q, abs_tol = 1e-10, rel_tol = 1e-8, max_subdivisions = 2000))]
#[allow(clippy::too_many_arguments)]
fn borges_dual_qint(
    f: &PyFunction,
    x_lo: f64,
    x_hi: f64,
    q: &Bound<'_, PyAny>,
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> PyResult<PyEstimate> {
    integrate(
        qquad::borges_dual_qint,
        f,
        x_lo,
        x_hi,
        q,
        abs_tol,
        rel_tol,
        max_subdivisions,
        "error",
    )
}

/// `y = c + k ln E_q(x)`.
#[pyclass(name = "PrimalQLine", frozen)]
struct PyPrimalQLine(PrimalQLine);

#[pymethods]
impl PyPrimalQLine {
    #[new]
    fn new(q: &Bound<'_, PyAny>, slope: f64, c: f64) -> PyResult<Self> {
        Ok(Self(PrimalQLine::new(deformation(q)?, slope, c)))
    }

    #[getter]
    fn slope(&self) -> f64 {
        self.0.k_q
    }

    #[getter]
    fn c(&self) -> f64 {
        self.0.c
    }

    fn __call__(&self, x: f64) -> PyResult<f64> {
        self.0.eval(x).map_err(err)
    }

    fn to_function(&self) -> PyFunction {
        PyFunction(self.0.to_function())
    }

    fn __repr__(&self) -> String {
        format!("PrimalQLine(slope={}, c={})", self.0.k_q, self.0.c)
    }
}

/// `1 + (1-q) y = c exp((1-q) k x)`.
#[pyclass(name = "DualQLine", frozen)]
struct PyDualQLine(DualQLine);

#[pymethods]
impl PyDualQLine {
    #[new]
    fn new(q: &Bound<'_, PyAny>, slope: f64, c: f64) -> PyResult<Self> {
        Ok(Self(DualQLine::new(deformation(q)?, slope, c)))
    }

    #[getter]
    fn slope(&self) -> f64 {
        self.0.k_sup_q
    }

    #[getter]
    fn c(&self) -> f64 {
        self.0.c
    }

    #[getter]
    fn intercept(&self) -> f64 {
        self.0.intercept()
    }

    fn __call__(&self, x: f64) -> PyResult<f64> {
        self.0.eval(x).map_err(err)
    }

    fn to_function(&self) -> PyFunction {
        PyFunction(self.0.to_function())
    }

    fn __repr__(&self) -> String {
        format!("DualQLine(slope={}, c={})", self.0.k_sup_q, self.0.c)
    }
}

#[pyfunction]
fn primal_secant(
    f: &PyFunction,
    x_i: f64,
    x_j: f64,
    q: &Bound<'_, PyAny>,
) -> PyResult<PyPrimalQLine> {
    qgeom::primal_qline_through(&f.0, x_i, x_j, deformation(q)?)
        .map(PyPrimalQLine)
        .map_err(err)
}

#[pyfunction]
fn dual_secant(f: &PyFunction, x_i: f64, x_j: f64, q: &Bound<'_, PyAny>) -> PyResult<PyDualQLine> {
    qgeom::dual_qline_through(&f.0, x_i, x_j, deformation(q)?)
        .map(PyDualQLine)
        .map_err(err)
}

#[pyfunction]
fn primal_tangent(f: &PyFunction, x0: f64, q: &Bound<'_, PyAny>) -> PyResult<PyPrimalQLine> {
    qgeom::primal_qtangent(&f.0, x0, deformation(q)?, &DerivConfig::default())
        .map(PyPrimalQLine)
        .map_err(err)
}

#[pyfunction]
fn dual_tangent(f: &PyFunction, x0: f64, q: &Bound<'_, PyAny>) -> PyResult<PyDualQLine> {
    qgeom::dual_qtangent(&f.0, x0, deformation(q)?, &DerivConfig::default())
        .map(PyDualQLine)
        .map_err(err)
}

/// Primal q-slope of `f` at `x0` and dual q-slope of `f_inv` at `f(x0)`.
#[pyfunction]
fn slope_duality(
    f: &PyFunction,
    f_inv: &PyFunction,
    x0: f64,
    q: &Bound<'_, PyAny>,
) -> PyResult<(f64, f64)> {
    qgeom::slope_duality(&f.0, &f_inv.0, x0, deformation(q)?, &DerivConfig::default()).map_err(err)
}

type VerifyRow = (&'static str, f64, f64, f64, bool);

/// Run the invariant battery; returns `(property, q, max_residual, tolerance, passed)` rows.
#[pyfunction]
#[pyo3(signature = (qs = None, samples = 200, seed = 20_240_601))]
fn run_verify(qs: Option<Vec<f64>>, samples: usize, seed: u64) -> PyResult<Vec<VerifyRow>> {
    let mut cfg = VerifyConfig {
        samples,
        seed,
        ..VerifyConfig::default()
    };
    if let Some(qs) = qs {
        cfg.qs = qs;
    }
    let report = verify::run(&cfg).map_err(err)?;
    Ok(report
        .checks
        .iter()
        .map(|c| (c.property, c.q, c.max_residual, c.tolerance, c.passed))
        .collect())
}

#[pymodule]
fn pyqcalc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("QCalcError", py.get_type::<QCalcError>())?;
    m.add("ParseError", py.get_type::<ParseError>())?;
    m.add("DomainError", py.get_type::<DomainError>())?;
    m.add("PoleError", py.get_type::<PoleError>())?;
    m.add("SingularityError", py.get_type::<SingularityError>())?;
    m.add(
        "DegenerateSecantError",
        py.get_type::<DegenerateSecantError>(),
    )?;
    m.add_class::<PyDeformation>()?;
    m.add_class::<PyExtendedValue>()?;
    m.add_class::<PyEstimate>()?;
    m.add_class::<PyFunction>()?;
    m.add_class::<PyPrimalQLine>()?;
    m.add_class::<PyDualQLine>()?;
    m.add_function(wrap_pyfunction!(q_log, m)?)?;
    m.add_function(wrap_pyfunction!(q_exp, m)?)?;
    m.add_function(wrap_pyfunction!(big_e, m)?)?;
    m.add_function(wrap_pyfunction!(ln_big_e, m)?)?;
    m.add_function(wrap_pyfunction!(q_add, m)?)?;
    m.add_function(wrap_pyfunction!(q_sub, m)?)?;
    m.add_function(wrap_pyfunction!(q_mul, m)?)?;
    m.add_function(wrap_pyfunction!(q_div, m)?)?;
    m.add_function(wrap_pyfunction!(q_power_n, m)?)?;
    m.add_function(wrap_pyfunction!(q_times_n, m)?)?;
    m.add_function(wrap_pyfunction!(primal_qderiv, m)?)?;
    m.add_function(wrap_pyfunction!(dual_qderiv, m)?)?;
    m.add_function(wrap_pyfunction!(primal_qint, m)?)?;
    m.add_function(wrap_pyfunction!(dual_qint, m)?)?;
    m.add_function(wrap_pyfunction!(borges_dual_qint, m)?)?;
    m.add_function(wrap_pyfunction!(primal_secant, m)?)?;
    m.add_function(wrap_pyfunction!(dual_secant, m)?)?;
    m.add_function(wrap_pyfunction!(primal_tangent, m)?)?;
    m.add_function(wrap_pyfunction!(dual_tangent, m)?)?;
    m.add_function(wrap_pyfunction!(slope_duality, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    Ok(())
}
