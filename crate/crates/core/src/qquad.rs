//! Primal and dual q-integrals.
//!
//! The primal integral is the Riemann–Stieltjes integral of `f` against
//! `u(t) = ln E_q(t)`, computed as the ordinary integral of
//! `f(x) / (1 + (1-q)x)`. The dual integral is `ln_q(exp(A))` with `A` the
//! ordinary integral of `f`. Borges' original dual integral,
//! `∫ (1 + (1-q)f) f dx`, is kept for comparison: it does not invert the
//! dual derivative.

use crate::error::{QError, Result};
use crate::funcexpr::RealFunction;
use crate::qcore::{self, branch_flags, Deformation, Flags};
use crate::quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SingularityMode {
    /// Refuse ranges that contain the pole `-1/(1-q)`.
    #[default]
    Error,
    /// Replace `[lo, hi]` by `[lo, -2/(1-q) - hi]`. Exact for primal q-lines
    /// and `E_q`, whose values are mirror-symmetric about the pole.
    Reflect,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub singularity_mode: SingularityMode,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 2000,
            singularity_mode: SingularityMode::Error,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(QError::InvalidConfig(format!(
                "tolerances must be positive (abs_tol = {}, rel_tol = {})",
                self.abs_tol, self.rel_tol
            )));
        }
        if self.max_subdivisions < 1 {
            return Err(QError::InvalidConfig(
                "max_subdivisions must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub flags: Flags,
}

impl IntegralResult {
    fn zero(d: Deformation) -> Self {
        Self {
            value: 0.0,
            error_estimate: 0.0,
            flags: branch_flags(d),
        }
    }
}

fn check_endpoints(f: &RealFunction, lo: f64, hi: f64, op: &'static str) -> Result<()> {
    f.checked(lo, op)?;
    f.checked(hi, op)?;
    Ok(())
}

/// Definite primal q-integral of `f` over `[x_lo, x_hi]`.
pub fn primal_qint(
    f: &RealFunction,
    x_lo: f64,
    x_hi: f64,
    d: Deformation,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    cfg.validate()?;
    if x_lo == x_hi {
        return Ok(IntegralResult::zero(d));
    }
    let mut flags = branch_flags(d);
    let (mut lo, mut hi) = (x_lo, x_hi);
    if let Some(pole) = d.pole() {
        let (a, b) = if lo < hi { (lo, hi) } else { (hi, lo) };
        if a < pole && pole < b {
            match cfg.singularity_mode {
                SingularityMode::Error => {
                    return Err(QError::Singularity {
                        lo: x_lo,
                        hi: x_hi,
                        pole,
                    })
                }
                SingularityMode::Reflect => {
                    // I[lo, hi] = I[lo, mirror(hi)] for lo < pole < hi;
                    // for a reversed range mirror the (larger) lower bound.
                    if lo < hi {
                        hi = d.mirror(hi).expect("pole exists");
                    } else {
                        lo = d.mirror(lo).expect("pole exists");
                    }
                    flags |= Flags::SINGULARITY_CROSSED | Flags::REFLECTION_APPLIED;
                }
            }
        }
    }
    check_endpoints(f, lo, hi, "primal_qint")?;
    let ordinary = d.is_ordinary();
    let integrand = |x: f64| {
        let v = f.checked(x, "primal_qint")?;
        Ok(if ordinary { v } else { v / d.bracket(x) })
    };
    let r = quadrature::integrate(
        &integrand,
        lo,
        hi,
        cfg.abs_tol,
        cfg.rel_tol,
        cfg.max_subdivisions,
    )?;
    if !r.converged {
        flags |= Flags::TOLERANCE_NOT_MET;
    }
    Ok(IntegralResult {
        value: r.value,
        error_estimate: r.error,
        flags,
    })
}

/// `F0 + primal_qint(f, x0, x)`: the function whose primal q-derivative is
/// `f` and whose value at `x0` is `F0`.
pub fn primal_qint_from(
    f: &RealFunction,
    x0: f64,
    x: f64,
    f0: f64,
    d: Deformation,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    Ok(f0 + primal_qint(f, x0, x, d, cfg)?.value)
}

/// Definite dual q-integral `ln_q(exp(∫ f dx))` over `[x_lo, x_hi]`.
pub fn dual_qint(
    f: &RealFunction,
    x_lo: f64,
    x_hi: f64,
    d: Deformation,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    cfg.validate()?;
    if x_lo == x_hi {
        return Ok(IntegralResult::zero(d));
    }
    check_endpoints(f, x_lo, x_hi, "dual_qint")?;
    let integrand = |x: f64| f.checked(x, "dual_qint");
    let mut area = quadrature::integrate(
        &integrand,
        x_lo,
        x_hi,
        cfg.abs_tol,
        cfg.rel_tol,
        cfg.max_subdivisions,
    )?;
    let mut value = qcore::q_log_exp_of(area.value, d)?;
    // d/dA ln_q(exp(A)) = exp((1-q)A)
    let scale = if d.is_ordinary() {
        1.0
    } else {
        (d.delta() * area.value).exp()
    };
    if area.converged && area.error * scale > cfg.target(value) {
        let abs = cfg.target(value) / scale;
        area = quadrature::integrate(
            &integrand,
            x_lo,
            x_hi,
            abs,
            f64::EPSILON,
            cfg.max_subdivisions,
        )?;
        value = qcore::q_log_exp_of(area.value, d)?;
    }
    let error_estimate = area.error * scale;
    let mut flags = branch_flags(d);
    if !area.converged || error_estimate > cfg.target(value) {
        flags |= Flags::TOLERANCE_NOT_MET;
    }
    Ok(IntegralResult {
        value,
        error_estimate,
        flags,
    })
}

/// `dual_qint(f, x0, x) (+)_q F0`: the function whose dual q-derivative is
/// `f` and whose value at `x0` is `F0`.
pub fn dual_qint_from(
    f: &RealFunction,
    x0: f64,
    x: f64,
    f0: f64,
    d: Deformation,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    Ok(qcore::q_add(dual_qint(f, x0, x, d, cfg)?.value, f0, d))
}

/// Borges' dual q-integral `∫ (1 + (1-q) f(x)) f(x) dx`.
pub fn borges_dual_qint(
    f: &RealFunction,
    x_lo: f64,
    x_hi: f64,
    d: Deformation,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    cfg.validate()?;
    if x_lo == x_hi {
        return Ok(IntegralResult::zero(d));
    }
    check_endpoints(f, x_lo, x_hi, "borges_dual_qint")?;
    let delta = if d.is_ordinary() { 0.0 } else { d.delta() };
    let integrand = |x: f64| {
        let v = f.checked(x, "borges_dual_qint")?;
        Ok((1.0 + delta * v) * v)
    };
    let r = quadrature::integrate(
        &integrand,
        x_lo,
        x_hi,
        cfg.abs_tol,
        cfg.rel_tol,
        cfg.max_subdivisions,
    )?;
    let mut flags = branch_flags(d);
    if !r.converged {
        flags |= Flags::TOLERANCE_NOT_MET;
    }
    Ok(IntegralResult {
        value: r.value,
        error_estimate: r.error,
        flags,
    })
}

/// Partition `x_i = x_lo (+)_q (i (.)_q t)` of `[x_lo, x_hi]` whose images
/// `u_i = ln e_q(x_i)` are equally spaced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricPartition {
    n: u32,
    x_lo: f64,
    x_hi: f64,
    d: Deformation,
    t: f64,
    z: f64,
}

impl GeometricPartition {
    pub fn new(n: u32, x_lo: f64, x_hi: f64, d: Deformation) -> Result<Self> {
        if d.is_ordinary() {
            return Err(QError::InvalidConfig(
                "the geometric partition needs q != 1".into(),
            ));
        }
        if n == 0 {
            return Err(QError::InvalidConfig("partition needs n >= 1".into()));
        }
        if !(d.bracket(x_lo) > 0.0 && d.bracket(x_hi) > 0.0) {
            return Err(QError::Domain {
                op: "GeometricPartition",
                detail: format!("[{x_lo}, {x_hi}] leaves the support of e_q"),
            });
        }
        // z = 1 + (1-q)(x_hi (-)_q x_lo) = e_q(x_hi (-)_q x_lo)^(1-q)
        let z = 1.0 + d.delta() * qcore::q_sub(x_hi, x_lo, d)?;
        let t = (z.ln() / f64::from(n)).exp_m1() / d.delta();
        Ok(Self {
            n,
            x_lo,
            x_hi,
            d,
            t,
            z,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn step(&self) -> f64 {
        self.t
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.x_lo, self.x_hi)
    }

    pub fn deformation(&self) -> Deformation {
        self.d
    }

    /// `x_0 = x_lo, ..., x_n = x_hi`.
    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n)
            .map(|i| {
                if i == 0 {
                    self.x_lo
                } else {
                    let step = qcore::q_times_n(i, self.t, self.d).expect("i >= 1");
                    qcore::q_add(self.x_lo, step, self.d)
                }
            })
            .collect()
    }
}

/// Sum of the rectangle areas `e_q(x_i) (u_i - u_{i-1})` over the partition,
/// written as the geometric series
/// `e_q(x_lo) * ln(z)/(1-q) * (1/n) * sum_i z^(i/(n(1-q)))`.
/// Tends to `e_q(x_hi) - e_q(x_lo)` as `n` grows.
pub fn partition_sum_oracle(p: &GeometricPartition) -> f64 {
    let delta = p.d.delta();
    let n = f64::from(p.n);
    let base = qcore::q_exp(p.x_lo, p.d).value;
    let coeff = base * p.z.ln() / delta / n;
    (1..=p.n)
        .map(|i| coeff * p.z.powf(f64::from(i) / (n * delta)))
        .sum()
}
