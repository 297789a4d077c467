//! Primal and dual q-derivatives.
//!
//! The closed forms are `(1 + (1-q)x) f'(x)` (primal) and
//! `F'(x) / (1 + (1-q)F(x))` (dual). The numeric forms evaluate the limit
//! quotients directly: the primal one as a central difference of `f` in the
//! coordinate `u = ln E_q(x)`, the dual one as a central difference of
//! `ln e_q(F(x))` in `x`. Both use Richardson extrapolation over halved steps.

use crate::error::{QError, Result};
use crate::funcexpr::RealFunction;
use crate::qcore::{self, branch_flags, Deformation, Flags};

/// Maximum number of step halvings before a stencil that leaves the domain
/// is reported as an error.
const MAX_STEP_SHRINKS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivConfig {
    /// Relative base step; scaled by `max(1, |coordinate|)`.
    pub base_step: f64,
    pub richardson_levels: usize,
    pub rel_tol: f64,
}

impl Default for DerivConfig {
    fn default() -> Self {
        Self {
            base_step: f64::EPSILON.cbrt(),
            richardson_levels: 3,
            rel_tol: 1e-8,
        }
    }
}

impl DerivConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_step > 0.0 && self.base_step.is_finite()) {
            return Err(QError::InvalidConfig(format!(
                "base_step must be positive, got {}",
                self.base_step
            )));
        }
        if self.richardson_levels < 1 {
            return Err(QError::InvalidConfig(
                "richardson_levels must be at least 1".into(),
            ));
        }
        if !(self.rel_tol > 0.0) {
            return Err(QError::InvalidConfig(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        Ok(())
    }
}

/// A numerically estimated derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub value: f64,
    pub error_estimate: f64,
    pub flags: Flags,
}

/// Central differences of `g` around 0 with Richardson extrapolation.
/// Returns the extrapolated value and the difference of the last two
/// diagonal entries.
fn richardson<G>(g: &G, h0: f64, levels: usize) -> Result<(f64, f64)>
where
    G: Fn(f64) -> Result<f64>,
{
    let rows = levels.max(2);
    let mut prev: Vec<f64> = Vec::with_capacity(rows);
    let mut diag = Vec::with_capacity(rows);
    let mut h = h0;
    for i in 0..rows {
        let mut row = Vec::with_capacity(i + 1);
        row.push((g(h)? - g(-h)?) / (2.0 * h));
        let mut factor = 1.0;
        for j in 1..=i {
            factor *= 4.0;
            let r = row[j - 1] + (row[j - 1] - prev[j - 1]) / (factor - 1.0);
            row.push(r);
        }
        diag.push(row[i]);
        prev = row;
        h *= 0.5;
    }
    let value = diag[levels - 1];
    let err = if levels >= 2 {
        (diag[levels - 1] - diag[levels - 2]).abs()
    } else {
        (diag[1] - diag[0]).abs()
    };
    Ok((value, err))
}

/// Runs the extrapolation, halving the base step while the stencil leaves
/// the domain.
fn guarded_richardson<G>(g: G, h0: f64, cfg: &DerivConfig) -> Result<(f64, f64)>
where
    G: Fn(f64) -> Result<f64>,
{
    let mut h = h0;
    let mut last_err = None;
    for _ in 0..=MAX_STEP_SHRINKS {
        match richardson(&g, h, cfg.richardson_levels) {
            Ok(r) => return Ok(r),
            Err(e @ (QError::Domain { .. } | QError::Pole { .. })) => {
                last_err = Some(e);
                h *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

fn finish(value: f64, err: f64, d: Deformation, cfg: &DerivConfig) -> Derivative {
    let mut flags = branch_flags(d);
    if !(err <= cfg.rel_tol * value.abs().max(1.0)) {
        flags |= Flags::TOLERANCE_WARNING;
    }
    Derivative {
        value,
        error_estimate: err,
        flags,
    }
}

/// `(1 + (1-q)x) f'(x)`.
pub fn primal_qderiv_closed(f: &RealFunction, x: f64, d: Deformation) -> Result<f64> {
    let df = f.require_derivative(x)?;
    if d.is_ordinary() {
        return Ok(df);
    }
    Ok(d.bracket(x) * df)
}

/// Limit quotient `[f(x) - f(y)] / [ln E_q(x) - ln E_q(y)]`, evaluated by
/// symmetric offsets in `u = ln E_q(x)`.
pub fn primal_qderiv_numeric(
    f: &RealFunction,
    x: f64,
    d: Deformation,
    cfg: &DerivConfig,
) -> Result<Derivative> {
    cfg.validate()?;
    let u0 = qcore::ln_big_e(x, d).map_err(|_| QError::Pole {
        op: "primal_qderiv_numeric",
        at: x,
    })?;
    f.checked(x, "primal_qderiv_numeric")?;
    let delta = d.delta();
    let ordinary = d.is_ordinary();
    let above_pole = ordinary || d.bracket(x) > 0.0;
    // inverse of u = ln|1 + (1-q)x| / (1-q) on the side of the pole holding x
    let to_x = move |u: f64| {
        if ordinary {
            u
        } else if above_pole {
            (delta * u).exp_m1() / delta
        } else {
            (-(delta * u).exp() - 1.0) / delta
        }
    };
    let g = |offset: f64| f.checked(to_x(u0 + offset), "primal_qderiv_numeric");
    let h0 = cfg.base_step * u0.abs().max(1.0);
    let (value, err) = guarded_richardson(g, h0, cfg)?;
    Ok(finish(value, err, d, cfg))
}

/// `F'(x) / (1 + (1-q)F(x))`.
pub fn dual_qderiv_closed(f: &RealFunction, x: f64, d: Deformation) -> Result<f64> {
    let df = f.require_derivative(x)?;
    if d.is_ordinary() {
        return Ok(df);
    }
    let fx = f.value(x);
    let den = d.bracket(fx);
    if den == 0.0 {
        return Err(QError::Pole {
            op: "dual_qderiv_closed",
            at: x,
        });
    }
    Ok(df / den)
}

/// `ln e_q(F(x))`, failing where `e_q(F(x))` is cut off or infinite.
fn ln_q_exp_of_value(f: &RealFunction, x: f64, d: Deformation) -> Result<f64> {
    let y = f.checked(x, "dual_qderiv_numeric")?;
    if d.is_ordinary() {
        return Ok(y);
    }
    if d.bracket(y) <= 0.0 {
        return Err(QError::Domain {
            op: "dual_qderiv_numeric",
            detail: format!("e_q(F(x)) is cut off at x = {x} (F = {y})"),
        });
    }
    qcore::ln_big_e(y, d)
}

/// Limit quotient `[ln e_q(F(x)) - ln e_q(F(y))] / (x - y)` by central
/// differences in `x`.
pub fn dual_qderiv_numeric(
    f: &RealFunction,
    x: f64,
    d: Deformation,
    cfg: &DerivConfig,
) -> Result<Derivative> {
    cfg.validate()?;
    ln_q_exp_of_value(f, x, d)?;
    let g = |offset: f64| ln_q_exp_of_value(f, x + offset, d);
    let h0 = cfg.base_step * x.abs().max(1.0);
    let (value, err) = guarded_richardson(g, h0, cfg)?;
    Ok(finish(value, err, d, cfg))
}
