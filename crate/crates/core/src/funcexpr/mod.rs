//! Real functions of one variable, with an optional ordinary-derivative oracle
//! and a domain predicate, plus the expression language that produces them.

mod ast;
mod parser;

use std::fmt;
use std::sync::Arc;

pub use ast::{BinOp, Expr, Func};
pub use parser::parse;

use crate::error::{QError, Result};
use crate::qcore::{self, Deformation, ExtendedValue, Flags};

type EvalFn = dyn Fn(f64) -> ExtendedValue + Send + Sync;
type RealFn = dyn Fn(f64) -> f64 + Send + Sync;
type DomainFn = dyn Fn(f64) -> bool + Send + Sync;

/// An evaluatable real function. Cloning is cheap.
#[derive(Clone)]
pub struct RealFunction {
    label: String,
    eval: Arc<EvalFn>,
    derivative: Option<Arc<RealFn>>,
    domain: Arc<DomainFn>,
}

impl fmt::Debug for RealFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealFunction")
            .field("label", &self.label)
            .field("has_derivative", &self.derivative.is_some())
            .finish()
    }
}

impl RealFunction {
    /// A plain function; its domain is wherever it returns a finite value.
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let f = Arc::new(f);
        let g = Arc::clone(&f);
        Self {
            label: label.into(),
            eval: Arc::new(move |x| ExtendedValue::plain(f(x))),
            derivative: None,
            domain: Arc::new(move |x| g(x).is_finite()),
        }
    }

    /// A function whose evaluation already reports diagnostics.
    pub fn from_extended(
        label: impl Into<String>,
        f: impl Fn(f64) -> ExtendedValue + Send + Sync + 'static,
    ) -> Self {
        let f = Arc::new(f);
        let g = Arc::clone(&f);
        Self {
            label: label.into(),
            eval: f,
            derivative: None,
            domain: Arc::new(move |x| {
                let v = g(x);
                v.value.is_finite() && !v.flags.contains(Flags::DOMAIN_VIOLATION)
            }),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |_| c).with_derivative(|_| 0.0)
    }

    pub fn with_derivative(mut self, df: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(df));
        self
    }

    pub fn with_domain(mut self, domain: impl Fn(f64) -> bool + Send + Sync + 'static) -> Self {
        self.domain = Arc::new(domain);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: f64) -> ExtendedValue {
        let mut v = (self.eval)(x);
        if !(self.domain)(x) {
            v.flags |= Flags::DOMAIN_VIOLATION;
        }
        v
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.eval)(x).value
    }

    pub fn in_domain(&self, x: f64) -> bool {
        (self.domain)(x)
    }

    pub fn has_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn derivative(&self, x: f64) -> Option<f64> {
        self.derivative.as_ref().map(|df| df(x))
    }

    pub fn require_derivative(&self, x: f64) -> Result<f64> {
        self.derivative(x)
            .ok_or_else(|| QError::MissingDerivative(self.label.clone()))
    }

    /// Value at `x`, or a domain error naming `op`.
    pub fn checked(&self, x: f64, op: &'static str) -> Result<f64> {
        let v = self.value(x);
        if !self.in_domain(x) || !v.is_finite() {
            return Err(QError::Domain {
                op,
                detail: format!("{} is undefined at x = {x}", self.label),
            });
        }
        Ok(v)
    }
}

/// Turn a parsed expression into a [`RealFunction`]; the derivative is
/// obtained by differentiating the tree.
pub fn compile(ast: &Expr) -> RealFunction {
    let e = Arc::new(ast.clone());
    let (ev, dv, dom) = (Arc::clone(&e), Arc::clone(&e), Arc::clone(&e));
    RealFunction {
        label: ast.to_string(),
        eval: Arc::new(move |x| ev.eval(x)),
        derivative: Some(Arc::new(move |x| dv.derivative_at(x))),
        domain: Arc::new(move |x| dom.in_domain(x)),
    }
}

/// Parse and compile in one step.
pub fn parse_function(src: &str, d: Deformation) -> Result<RealFunction> {
    Ok(compile(&parse(src, d)?).with_label(src.trim()))
}

pub const BUILTIN_NAMES: [&str; 6] = ["qexp", "qlog", "bigE", "lnBigE", "recip", "identity"];

/// Named functions with exact derivatives attached.
pub fn builtin(name: &str, d: Deformation) -> Result<RealFunction> {
    let f = match name {
        "qexp" => RealFunction::from_extended("qexp", move |x| qcore::q_exp(x, d))
            .with_derivative(move |x| {
                let e = qcore::q_exp(x, d);
                if e.is_cutoff() {
                    0.0
                } else if d.is_ordinary() {
                    e.value
                } else {
                    (d.q() * (d.delta() * x).ln_1p() / d.delta()).exp()
                }
            })
            .with_domain(move |x| d.is_ordinary() || d.delta() > 0.0 || d.bracket(x) > 0.0),
        "qlog" => RealFunction::new("qlog", move |x| qcore::q_log(x, d).unwrap_or(f64::NAN))
            .with_derivative(move |x| x.powf(-d.q()))
            .with_domain(|x| x > 0.0),
        "bigE" => RealFunction::new("bigE", move |x| qcore::big_e(x, d))
            .with_derivative(move |x| {
                if d.is_ordinary() {
                    return x.exp();
                }
                let b = d.bracket(x);
                b.signum() * b.abs().powf(d.q() / d.delta())
            })
            .with_domain(move |x| d.is_ordinary() || d.bracket(x) != 0.0),
        "lnBigE" => RealFunction::new("lnBigE", move |x| qcore::ln_big_e(x, d).unwrap_or(f64::NAN))
            .with_derivative(move |x| 1.0 / d.bracket(x))
            .with_domain(move |x| d.is_ordinary() || d.bracket(x) != 0.0),
        "recip" => RealFunction::new("recip", |x| 1.0 / x)
            .with_derivative(|x| -1.0 / (x * x))
            .with_domain(|x| x != 0.0),
        "identity" => RealFunction::new("identity", |x| x).with_derivative(|_| 1.0),
        _ => return Err(QError::UnknownBuiltin(name.to_string())),
    };
    Ok(f)
}
