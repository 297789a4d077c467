use std::fmt;

use crate::qcore::{self, Deformation, ExtendedValue, Flags};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// One-argument functions callable from expressions. `qexp` and `qlog`
/// carry the deformation they were parsed with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Func {
    Ln,
    Exp,
    Sin,
    Cos,
    Sqrt,
    Abs,
    QExp(Deformation),
    QLog(Deformation),
}

impl Func {
    pub const NAMES: [&'static str; 8] = ["ln", "exp", "sin", "cos", "sqrt", "abs", "qexp", "qlog"];

    pub fn from_name(name: &str, d: Deformation) -> Option<Self> {
        Some(match name {
            "ln" => Func::Ln,
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "qexp" => Func::QExp(d),
            "qlog" => Func::QLog(d),
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Func::Ln => "ln",
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::QExp(_) => "qexp",
            Func::QLog(_) => "qlog",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Value, derivative with respect to `x`, and accumulated diagnostics.
#[derive(Debug, Clone, Copy)]
struct Jet {
    v: f64,
    dv: f64,
    flags: Flags,
}

impl Jet {
    fn new(v: f64, dv: f64, flags: Flags) -> Self {
        Self { v, dv, flags }
    }

    fn violation(flags: Flags) -> Self {
        Self::new(f64::NAN, f64::NAN, flags | Flags::DOMAIN_VIOLATION)
    }
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn call(f: Func, arg: Expr) -> Self {
        Expr::Call(f, Box::new(arg))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(e: Expr) -> Self {
        Expr::Neg(Box::new(e))
    }

    pub fn contains_var(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var => true,
            Expr::Neg(e) | Expr::Call(_, e) => e.contains_var(),
            Expr::Binary(_, a, b) => a.contains_var() || b.contains_var(),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var => 1,
            Expr::Neg(e) | Expr::Call(_, e) => 1 + e.node_count(),
            Expr::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    /// Evaluate at `x`. Domain violations yield NaN with `DOMAIN_VIOLATION`.
    pub fn eval(&self, x: f64) -> ExtendedValue {
        let j = self.jet(x);
        ExtendedValue::new(j.v, j.flags)
    }

    /// Ordinary derivative at `x`, by forward differentiation of the tree.
    pub fn derivative_at(&self, x: f64) -> f64 {
        self.jet(x).dv
    }

    /// True when every node is inside its domain at `x` and the result is finite.
    pub fn in_domain(&self, x: f64) -> bool {
        let j = self.jet(x);
        j.v.is_finite()
            && !j
                .flags
                .intersects(Flags::DOMAIN_VIOLATION | Flags::POLE_REACHED)
    }

    fn jet(&self, x: f64) -> Jet {
        match self {
            Expr::Const(c) => Jet::new(*c, 0.0, Flags::empty()),
            Expr::Var => Jet::new(x, 1.0, Flags::empty()),
            Expr::Neg(e) => {
                let a = e.jet(x);
                Jet::new(-a.v, -a.dv, a.flags)
            }
            Expr::Binary(op, lhs, rhs) => {
                let a = lhs.jet(x);
                let b = rhs.jet(x);
                let flags = a.flags | b.flags;
                match op {
                    BinOp::Add => Jet::new(a.v + b.v, a.dv + b.dv, flags),
                    BinOp::Sub => Jet::new(a.v - b.v, a.dv - b.dv, flags),
                    BinOp::Mul => Jet::new(a.v * b.v, a.dv * b.v + a.v * b.dv, flags),
                    BinOp::Div => {
                        if b.v == 0.0 {
                            return Jet::violation(flags);
                        }
                        Jet::new(a.v / b.v, (a.dv * b.v - a.v * b.dv) / (b.v * b.v), flags)
                    }
                    BinOp::Pow => pow_jet(a, b, rhs.contains_var(), flags),
                }
            }
            Expr::Call(f, arg) => call_jet(*f, arg.jet(x)),
        }
    }
}

fn pow_jet(a: Jet, b: Jet, exponent_varies: bool, flags: Flags) -> Jet {
    let integral = b.v.fract() == 0.0;
    if (a.v < 0.0 && !integral) || (a.v == 0.0 && b.v <= 0.0) {
        return Jet::violation(flags);
    }
    let v = a.v.powf(b.v);
    let dv = if !exponent_varies {
        if b.v == 0.0 {
            0.0
        } else {
            b.v * a.v.powf(b.v - 1.0) * a.dv
        }
    } else if a.v > 0.0 {
        v * (b.dv * a.v.ln() + b.v * a.dv / a.v)
    } else {
        f64::NAN
    };
    Jet::new(v, dv, flags)
}

fn call_jet(f: Func, a: Jet) -> Jet {
    let flags = a.flags;
    match f {
        Func::Ln => {
            if a.v <= 0.0 || a.v.is_nan() {
                return Jet::violation(flags);
            }
            Jet::new(a.v.ln(), a.dv / a.v, flags)
        }
        Func::Exp => {
            let e = a.v.exp();
            Jet::new(e, e * a.dv, flags)
        }
        Func::Sin => Jet::new(a.v.sin(), a.v.cos() * a.dv, flags),
        Func::Cos => Jet::new(a.v.cos(), -a.v.sin() * a.dv, flags),
        Func::Sqrt => {
            if a.v < 0.0 || a.v.is_nan() {
                return Jet::violation(flags);
            }
            let s = a.v.sqrt();
            Jet::new(s, a.dv / (2.0 * s), flags)
        }
        Func::Abs => Jet::new(a.v.abs(), a.v.signum() * a.dv, flags),
        Func::QExp(d) => {
            let e = qcore::q_exp(a.v, d);
            // d/du e_q(u) = e_q(u)^q on the open support, 0 in the cutoff region
            let slope = if e.is_cutoff() {
                0.0
            } else if d.is_ordinary() {
                e.value
            } else {
                (d.q() * (d.delta() * a.v).ln_1p() / d.delta()).exp()
            };
            Jet::new(e.value, slope * a.dv, flags | e.flags)
        }
        Func::QLog(d) => match qcore::q_log(a.v, d) {
            Ok(v) => Jet::new(v, a.v.powf(-d.q()) * a.dv, flags),
            Err(_) => Jet::violation(flags),
        },
    }
}

/// Fully parenthesised form; parsing it back yields an identical tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var => f.write_str("x"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(q: f64) -> Deformation {
        Deformation::new(q).unwrap()
    }

    #[test]
    fn pow_domain_rules() {
        let e = Expr::binary(BinOp::Pow, Expr::Var, Expr::Const(0.5));
        assert!(!e.in_domain(-1.0));
        assert!(e.in_domain(4.0));
        let e = Expr::binary(BinOp::Pow, Expr::Var, Expr::Const(2.0));
        assert!(e.in_domain(-3.0));
        assert_eq!(e.eval(-3.0).value, 9.0);
        assert_eq!(e.derivative_at(-3.0), -6.0);
        let e = Expr::binary(BinOp::Pow, Expr::Var, Expr::Const(-1.0));
        assert!(!e.in_domain(0.0));
    }

    #[test]
    fn variable_exponent_derivative() {
        // d/dx x^x = x^x (ln x + 1)
        let e = Expr::binary(BinOp::Pow, Expr::Var, Expr::Var);
        let x: f64 = 1.7;
        let expect = x.powf(x) * (x.ln() + 1.0);
        assert!((e.derivative_at(x) - expect).abs() < 1e-14);
    }

    #[test]
    fn qexp_node_flags_cutoff() {
        let e = Expr::call(Func::QExp(d(0.5)), Expr::Var);
        let v = e.eval(-3.0);
        assert_eq!(v.value, 0.0);
        assert!(v.is_cutoff());
        assert_eq!(e.derivative_at(-3.0), 0.0);
        // q > 1 past the pole is outside the domain
        let e = Expr::call(Func::QExp(d(2.0)), Expr::Var);
        assert!(!e.in_domain(1.5));
        assert!(e.in_domain(0.5));
    }

    #[test]
    fn display_is_fully_parenthesised() {
        let e = Expr::neg(Expr::binary(
            BinOp::Add,
            Expr::Const(1.5),
            Expr::call(Func::Ln, Expr::Var),
        ));
        assert_eq!(e.to_string(), "(-(1.5 + ln(x)))");
    }
}
