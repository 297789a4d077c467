//! Primal and dual q-lines, secant slopes, tangents and the duality between
//! primal and dual slopes.
//!
//! A primal q-line is `k_q ln E_q(x) + c`: its primal q-derivative is the
//! constant `k_q`. A dual q-line is `ln_q(exp(k^q x)) (+)_q (c-1)/(1-q)`: its
//! dual q-derivative is the constant `k^q`.

use crate::error::{QError, Result};
use crate::funcexpr::RealFunction;
use crate::qcore::{self, Deformation};
use crate::qdiff::{self, DerivConfig};
use crate::qquad::{self, QuadratureConfig};

/// `k_q ln E_q(x) + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimalQLine {
    pub q: Deformation,
    pub k_q: f64,
    pub c: f64,
    anchor: Option<(f64, f64)>,
}

impl PrimalQLine {
    pub fn new(q: Deformation, k_q: f64, c: f64) -> Self {
        Self {
            q,
            k_q,
            c,
            anchor: None,
        }
    }

    /// The line with slope `k_q` through `(x_i, y_i)`. Evaluation uses the
    /// point-slope form `k_q ln E_q(x (-)_q x_i) + y_i`.
    pub fn through_point(q: Deformation, k_q: f64, x_i: f64, y_i: f64) -> Result<Self> {
        let c = y_i - k_q * qcore::ln_big_e(x_i, q)?;
        Ok(Self {
            q,
            k_q,
            c,
            anchor: Some((x_i, y_i)),
        })
    }

    pub fn anchor(&self) -> Option<(f64, f64)> {
        self.anchor
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        primal_qline_eval(self, x)
    }

    /// The line as a [`RealFunction`] with its exact derivative attached.
    pub fn to_function(&self) -> RealFunction {
        let (l, m) = (*self, *self);
        let d = self.q;
        RealFunction::new(format!("{} ln E_q(x) + {}", self.k_q, self.c), move |x| {
            l.eval(x).unwrap_or(f64::NAN)
        })
        .with_derivative(move |x| m.k_q / d.bracket(x))
    }
}

/// `ln_q(exp(k^q x)) (+)_q (c-1)/(1-q)`. On the ordinary branch `c` is the
/// intercept itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualQLine {
    pub q: Deformation,
    pub k_sup_q: f64,
    pub c: f64,
    anchor: Option<(f64, f64)>,
}

impl DualQLine {
    pub fn new(q: Deformation, k_sup_q: f64, c: f64) -> Self {
        Self {
            q,
            k_sup_q,
            c,
            anchor: None,
        }
    }

    /// Line with the given y-intercept.
    pub fn with_intercept(q: Deformation, k_sup_q: f64, intercept: f64) -> Self {
        let c = if q.is_ordinary() {
            intercept
        } else {
            q.bracket(intercept)
        };
        Self::new(q, k_sup_q, c)
    }

    /// The line with slope `k^q` through `(x_i, y_i)`. Evaluation uses the
    /// point-slope form `ln_q(exp(k^q (x - x_i))) (+)_q y_i`.
    pub fn through_point(q: Deformation, k_sup_q: f64, x_i: f64, y_i: f64) -> Result<Self> {
        let shift = qcore::q_log_exp_of(k_sup_q * x_i, q)?;
        let intercept = qcore::q_sub(y_i, shift, q)?;
        Ok(Self {
            anchor: Some((x_i, y_i)),
            ..Self::with_intercept(q, k_sup_q, intercept)
        })
    }

    /// `(c-1)/(1-q)`.
    pub fn intercept(&self) -> f64 {
        if self.q.is_ordinary() {
            self.c
        } else {
            (self.c - 1.0) / self.q.delta()
        }
    }

    pub fn anchor(&self) -> Option<(f64, f64)> {
        self.anchor
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        dual_qline_eval(self, x)
    }

    /// The line as a [`RealFunction`] with its exact derivative attached.
    pub fn to_function(&self) -> RealFunction {
        let (l, m) = (*self, *self);
        let d = self.q;
        RealFunction::new(
            format!("ln_q(exp({} x)) (+)_q {}", self.k_sup_q, self.intercept()),
            move |x| l.eval(x).unwrap_or(f64::NAN),
        )
        .with_derivative(move |x| {
            // F' = k^q (1 + (1-q)F)
            let y = m.eval(x).unwrap_or(f64::NAN);
            m.k_sup_q * d.bracket(y)
        })
    }
}

pub fn primal_qline_eval(l: &PrimalQLine, x: f64) -> Result<f64> {
    let d = l.q;
    let u = qcore::ln_big_e(x, d)?;
    match l.anchor {
        Some((x_i, y_i)) if x != 0.0 => {
            let dx = qcore::q_sub(x, x_i, d)?;
            Ok(l.k_q * qcore::ln_big_e(dx, d)? + y_i)
        }
        _ => Ok(l.k_q * u + l.c),
    }
}

pub fn dual_qline_eval(l: &DualQLine, x: f64) -> Result<f64> {
    let d = l.q;
    match l.anchor {
        Some((x_i, y_i)) if x != 0.0 => Ok(qcore::q_add(
            qcore::q_log_exp_of(l.k_sup_q * (x - x_i), d)?,
            y_i,
            d,
        )),
        _ => Ok(qcore::q_add(
            qcore::q_log_exp_of(l.k_sup_q * x, d)?,
            l.intercept(),
            d,
        )),
    }
}

fn degenerate(x_i: f64, x_j: f64) -> QError {
    QError::DegenerateSecant { x_i, x_j }
}

/// `[F(x_i) - F(x_j)] / [ln E_q(x_i) - ln E_q(x_j)]`.
pub fn primal_secant_slope(f: &RealFunction, x_i: f64, x_j: f64, d: Deformation) -> Result<f64> {
    if x_i == x_j {
        return Err(degenerate(x_i, x_j));
    }
    let u_i = qcore::ln_big_e(x_i, d)?;
    let u_j = qcore::ln_big_e(x_j, d)?;
    // mirrored pairs share ln E_q; catch them in x as well, where rounding of
    // the mirror point is visible
    let tol = 8.0 * f64::EPSILON * u_i.abs().max(u_j.abs());
    let mirrored = d.pole().is_some_and(|p| {
        (x_i + x_j - 2.0 * p).abs() <= 8.0 * f64::EPSILON * (x_i.abs() + x_j.abs() + 2.0 * p.abs())
    });
    if (u_i - u_j).abs() <= tol || mirrored {
        return Err(degenerate(x_i, x_j));
    }
    let y_i = f.checked(x_i, "primal_secant_slope")?;
    let y_j = f.checked(x_j, "primal_secant_slope")?;
    Ok((y_i - y_j) / (u_i - u_j))
}

/// `ln e_q(F(x))`, a domain error where `e_q(F(x))` is cut off.
fn dual_coordinate(f: &RealFunction, x: f64, d: Deformation, op: &'static str) -> Result<f64> {
    let y = f.checked(x, op)?;
    if d.is_ordinary() {
        return Ok(y);
    }
    if d.bracket(y) <= 0.0 {
        return Err(QError::Domain {
            op,
            detail: format!("e_q(F(x)) is cut off at x = {x} (F = {y})"),
        });
    }
    qcore::ln_big_e(y, d)
}

/// `[ln e_q(F(x_i)) - ln e_q(F(x_j))] / (x_i - x_j)`.
pub fn dual_secant_slope(f: &RealFunction, x_i: f64, x_j: f64, d: Deformation) -> Result<f64> {
    if x_i == x_j {
        return Err(degenerate(x_i, x_j));
    }
    let v_i = dual_coordinate(f, x_i, d, "dual_secant_slope")?;
    let v_j = dual_coordinate(f, x_j, d, "dual_secant_slope")?;
    Ok((v_i - v_j) / (x_i - x_j))
}

pub fn primal_qline_through(
    f: &RealFunction,
    x_i: f64,
    x_j: f64,
    d: Deformation,
) -> Result<PrimalQLine> {
    let k = primal_secant_slope(f, x_i, x_j, d)?;
    PrimalQLine::through_point(d, k, x_i, f.value(x_i))
}

pub fn dual_qline_through(
    f: &RealFunction,
    x_i: f64,
    x_j: f64,
    d: Deformation,
) -> Result<DualQLine> {
    let k = dual_secant_slope(f, x_i, x_j, d)?;
    DualQLine::through_point(d, k, x_i, f.value(x_i))
}

/// Primal q-tangent of `F` at `x0`, slope from the numeric primal q-derivative.
pub fn primal_qtangent(
    f: &RealFunction,
    x0: f64,
    d: Deformation,
    cfg: &DerivConfig,
) -> Result<PrimalQLine> {
    let k = qdiff::primal_qderiv_numeric(f, x0, d, cfg)?.value;
    PrimalQLine::through_point(d, k, x0, f.checked(x0, "primal_qtangent")?)
}

/// Dual q-tangent of `F` at `x0`, slope from the numeric dual q-derivative.
pub fn dual_qtangent(
    f: &RealFunction,
    x0: f64,
    d: Deformation,
    cfg: &DerivConfig,
) -> Result<DualQLine> {
    let k = qdiff::dual_qderiv_numeric(f, x0, d, cfg)?.value;
    DualQLine::through_point(d, k, x0, f.checked(x0, "dual_qtangent")?)
}

/// Primal q-slope of `y = F(x)` at `x0` and dual q-slope of the same curve
/// read as `x = G(y)` at `y0 = F(x0)`. Their product is 1.
pub fn slope_duality(
    f: &RealFunction,
    f_inv: &RealFunction,
    x0: f64,
    d: Deformation,
    cfg: &DerivConfig,
) -> Result<(f64, f64)> {
    let y0 = f.checked(x0, "slope_duality")?;
    let back = f_inv.checked(y0, "slope_duality")?;
    if !((back - x0).abs() <= 1e-8 * x0.abs().max(1.0)) {
        return Err(QError::InverseMismatch {
            x0,
            roundtrip: back,
        });
    }
    let primal = qdiff::primal_qderiv_numeric(f, x0, d, cfg)?.value;
    let dual = qdiff::dual_qderiv_numeric(f_inv, y0, d, cfg)?.value;
    Ok((primal, dual))
}

/// `primal_qint(f, x0, x1) / dual_qint(g, y0, y1)` where `f` is the primal
/// q-derivative of a curve `F` through `(x0, y0)` and `(x1, y1)` and `g` the
/// dual q-derivative of its inverse.
///
/// The numerator is `y1 - y0` and the denominator `x1 (-)_q x0`, so the ratio
/// is `(y1 - y0)/(x1 (-)_q x0)`. This is not the secant q-slope of `F`,
/// whose denominator is `ln E_q(x1) - ln E_q(x0) = ln E_q(x1 (-)_q x0)`.
#[allow(clippy::too_many_arguments)]
pub fn integral_ratio(
    f: &RealFunction,
    g: &RealFunction,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    d: Deformation,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if qcore::q_sub(x1, x0, d)? == 0.0 {
        return Err(degenerate(x0, x1));
    }
    let num = qquad::primal_qint(f, x0, x1, d, cfg)?.value;
    let den = qquad::dual_qint(g, y0, y1, d, cfg)?.value;
    if den == 0.0 {
        return Err(degenerate(x0, x1));
    }
    Ok(num / den)
}
