//! Deformation parameter, the q-algebra and the deformed elementary functions.
//!
//! Every operation here has a removable singularity at `q = 1`. When
//! `|1 - q|` falls below the deformation's `q1_epsilon` the ordinary
//! counterpart (`ln`, `exp`, `+`, `*`, ...) is returned instead.
//!
//! Cancellation-prone compositions go through `ln_1p` / `exp_m1`:
//! `(x^(1-q) - 1)/(1-q)` is evaluated as `expm1((1-q) ln x)/(1-q)` and
//! `ln_q(exp(a))` never materialises `exp(a)`.

use bitflags::bitflags;

use crate::error::{QError, Result};

pub const DEFAULT_Q1_EPSILON: f64 = 1e-12;

bitflags! {
    /// Diagnostics attached to values, derivatives and integrals.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
    pub struct Flags: u16 {
        /// A `[.]_+` bracket was non-positive and the value was clamped to 0.
        const CUTOFF_APPLIED = 1;
        /// The value is `+inf` (pole of a `q > 1` exponential, or overflow).
        const POLE_REACHED = 1 << 1;
        /// The `q = 1` limit branch was taken.
        const Q1_BRANCH = 1 << 2;
        /// The argument was outside the function's domain; the value is NaN.
        const DOMAIN_VIOLATION = 1 << 3;
        const SINGULARITY_CROSSED = 1 << 4;
        const REFLECTION_APPLIED = 1 << 5;
        const TOLERANCE_NOT_MET = 1 << 6;
        /// Richardson levels disagreed by more than the requested tolerance.
        const TOLERANCE_WARNING = 1 << 7;
    }
}

impl Flags {
    /// Lower-case flag names joined with `|`; empty when no flag is set.
    pub fn label(&self) -> String {
        self.iter_names()
            .map(|(name, _)| name.to_ascii_lowercase())
            .collect::<Vec<_>>()
            .join("|")
    }
}

/// The deformation parameter `q` with its cached `delta = 1 - q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deformation {
    q: f64,
    delta: f64,
    q1_epsilon: f64,
}

impl Deformation {
    pub fn new(q: f64) -> Result<Self> {
        Self::with_q1_epsilon(q, DEFAULT_Q1_EPSILON)
    }

    pub fn with_q1_epsilon(q: f64, q1_epsilon: f64) -> Result<Self> {
        if !q.is_finite() {
            return Err(QError::InvalidConfig(format!("q must be finite, got {q}")));
        }
        if !(q1_epsilon > 0.0 && q1_epsilon.is_finite()) {
            return Err(QError::InvalidConfig(format!(
                "q1_epsilon must be positive, got {q1_epsilon}"
            )));
        }
        Ok(Self {
            q,
            delta: 1.0 - q,
            q1_epsilon,
        })
    }

    /// The ordinary (`q = 1`) deformation.
    pub fn ordinary() -> Self {
        Self {
            q: 1.0,
            delta: 0.0,
            q1_epsilon: DEFAULT_Q1_EPSILON,
        }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn q1_epsilon(&self) -> f64 {
        self.q1_epsilon
    }

    /// True when the ordinary-calculus branch is taken.
    pub fn is_ordinary(&self) -> bool {
        self.delta.abs() < self.q1_epsilon
    }

    /// `-1/(1-q)`, the zero of `1 + (1-q)x`. `None` on the ordinary branch.
    pub fn pole(&self) -> Option<f64> {
        (!self.is_ordinary()).then(|| -1.0 / self.delta)
    }

    /// Mirror image of `x` across the pole, `-2/(1-q) - x`.
    pub fn mirror(&self, x: f64) -> Option<f64> {
        (!self.is_ordinary()).then(|| -2.0 / self.delta - x)
    }

    /// `1 + (1-q)x`.
    pub fn bracket(&self, x: f64) -> f64 {
        1.0 + self.delta * x
    }
}

/// A real value that may be `+inf`, together with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedValue {
    pub value: f64,
    pub flags: Flags,
}

impl ExtendedValue {
    pub fn new(value: f64, flags: Flags) -> Self {
        let mut flags = flags;
        if value.is_infinite() {
            flags |= Flags::POLE_REACHED;
        }
        Self { value, flags }
    }

    pub fn plain(value: f64) -> Self {
        Self::new(value, Flags::empty())
    }

    pub fn is_cutoff(&self) -> bool {
        self.flags.contains(Flags::CUTOFF_APPLIED)
    }
}

/// q-logarithm `(x^(1-q) - 1)/(1-q)`.
pub fn q_log(x: f64, d: Deformation) -> Result<f64> {
    if !(x > 0.0) {
        return Err(QError::Domain {
            op: "q_log",
            detail: format!("argument must be positive, got {x}"),
        });
    }
    if d.is_ordinary() {
        return Ok(x.ln());
    }
    Ok((d.delta * x.ln()).exp_m1() / d.delta)
}

/// q-exponential `[1 + (1-q)x]_+^(1/(1-q))`.
///
/// Below the support the result is 0 with `CUTOFF_APPLIED` when `q < 1`,
/// and `+inf` with `POLE_REACHED` when `q > 1`.
pub fn q_exp(x: f64, d: Deformation) -> ExtendedValue {
    if d.is_ordinary() {
        return ExtendedValue::new(x.exp(), Flags::Q1_BRANCH);
    }
    let arg = d.delta * x;
    if 1.0 + arg <= 0.0 {
        return if d.delta > 0.0 {
            ExtendedValue::new(0.0, Flags::CUTOFF_APPLIED)
        } else {
            ExtendedValue::new(f64::INFINITY, Flags::POLE_REACHED)
        };
    }
    ExtendedValue::plain((arg.ln_1p() / d.delta).exp())
}

/// `|1 + (1-q)x|^(1/(1-q))`, defined on both sides of the pole.
pub fn big_e(x: f64, d: Deformation) -> f64 {
    if d.is_ordinary() {
        return x.exp();
    }
    if d.bracket(x) == 0.0 {
        return if d.delta > 0.0 { 0.0 } else { f64::INFINITY };
    }
    (ln_abs_bracket(x, d) / d.delta).exp()
}

/// `ln|1 + (1-q)x|`, computed without cancellation on either side of the pole.
fn ln_abs_bracket(x: f64, d: Deformation) -> f64 {
    let arg = d.delta * x;
    if arg > -1.0 {
        arg.ln_1p()
    } else {
        (-2.0 - arg).ln_1p()
    }
}

/// `ln E_q(x) = ln|1 + (1-q)x| / (1-q)`.
pub fn ln_big_e(x: f64, d: Deformation) -> Result<f64> {
    if d.is_ordinary() {
        return Ok(x);
    }
    if d.bracket(x) == 0.0 {
        return Err(QError::Pole {
            op: "ln_big_e",
            at: x,
        });
    }
    Ok(ln_abs_bracket(x, d) / d.delta)
}

/// `x (+)_q y = x + y + (1-q)xy`.
pub fn q_add(x: f64, y: f64, d: Deformation) -> f64 {
    if d.is_ordinary() {
        return x + y;
    }
    x + y + d.delta * x * y
}

/// `x (-)_q y = (x - y)/(1 + (1-q)y)`.
pub fn q_sub(x: f64, y: f64, d: Deformation) -> Result<f64> {
    if d.is_ordinary() {
        return Ok(x - y);
    }
    let den = d.bracket(y);
    if den == 0.0 {
        return Err(QError::Pole { op: "q_sub", at: y });
    }
    Ok((x - y) / den)
}

fn require_positive(op: &'static str, x: f64, y: f64) -> Result<()> {
    if x > 0.0 && y > 0.0 {
        Ok(())
    } else {
        Err(QError::Domain {
            op,
            detail: format!("arguments must be positive, got ({x}, {y})"),
        })
    }
}

// The bracket x^(1-q) + y^(1-q) - 1 equals 1 + (1-q)(ln_q x + ln_q y), so the
// product is e_q applied to the summed q-logarithms. Quotient and n-th power
// follow the same pattern and inherit q_exp's cutoff semantics.

/// `x (x)_q y = [x^(1-q) + y^(1-q) - 1]_+^(1/(1-q))`.
pub fn q_mul(x: f64, y: f64, d: Deformation) -> Result<ExtendedValue> {
    require_positive("q_mul", x, y)?;
    if d.is_ordinary() {
        return Ok(ExtendedValue::new(x * y, Flags::Q1_BRANCH));
    }
    Ok(q_exp(q_log(x, d)? + q_log(y, d)?, d))
}

/// `x (/)_q y = [x^(1-q) - y^(1-q) + 1]_+^(1/(1-q))`.
pub fn q_div(x: f64, y: f64, d: Deformation) -> Result<ExtendedValue> {
    require_positive("q_div", x, y)?;
    if d.is_ordinary() {
        return Ok(ExtendedValue::new(x / y, Flags::Q1_BRANCH));
    }
    Ok(q_exp(q_log(x, d)? - q_log(y, d)?, d))
}

/// n-fold q-product `[n x^(1-q) - (n-1)]_+^(1/(1-q))`.
pub fn q_power_n(x: f64, n: u32, d: Deformation) -> Result<ExtendedValue> {
    require_positive("q_power_n", x, 1.0)?;
    if n == 0 {
        return Err(QError::Domain {
            op: "q_power_n",
            detail: "n must be at least 1".into(),
        });
    }
    if d.is_ordinary() {
        return Ok(ExtendedValue::new(x.powi(n as i32), Flags::Q1_BRANCH));
    }
    Ok(q_exp(f64::from(n) * q_log(x, d)?, d))
}

/// n-fold q-sum `([1 + (1-q)x]^n - 1)/(1-q)`.
pub fn q_times_n(n: u32, x: f64, d: Deformation) -> Result<f64> {
    if n == 0 {
        return Err(QError::Domain {
            op: "q_times_n",
            detail: "n must be at least 1".into(),
        });
    }
    if d.is_ordinary() {
        return Ok(f64::from(n) * x);
    }
    let arg = d.delta * x;
    if arg > -1.0 {
        Ok((f64::from(n) * arg.ln_1p()).exp_m1() / d.delta)
    } else {
        Ok(((1.0 + arg).powi(n as i32) - 1.0) / d.delta)
    }
}

/// `ln_q(exp(a)) = (e^((1-q)a) - 1)/(1-q)`, never forming `exp(a)`.
pub fn q_log_exp_of(a: f64, d: Deformation) -> Result<f64> {
    if d.is_ordinary() {
        return Ok(a);
    }
    let t = d.delta * a;
    if t > f64::MAX.ln() {
        return Err(QError::Overflow {
            op: "q_log_exp_of",
            arg: a,
        });
    }
    let v = t.exp_m1() / d.delta;
    if !v.is_finite() {
        return Err(QError::Overflow {
            op: "q_log_exp_of",
            arg: a,
        });
    }
    Ok(v)
}

/// `Q1_BRANCH` when `d` takes the ordinary branch, empty otherwise.
pub fn branch_flags(d: Deformation) -> Flags {
    if d.is_ordinary() {
        Flags::Q1_BRANCH
    } else {
        Flags::empty()
    }
}
