//! Numerical deformed calculus built on the Tsallis q-logarithm and
//! q-exponential.
//!
//! * [`qcore`]: the deformation parameter, q-algebra and deformed functions.
//! * [`funcexpr`]: real functions, builtins and a small expression language.
//! * [`qdiff`]: primal and dual q-derivatives (closed and limit-quotient forms).
//! * [`qquad`]: primal, dual and Borges-dual q-integrals plus the partition oracle.
//! * [`qgeom`]: primal/dual q-lines, secants, tangents and slope duality.
//! * [`verify`]: the invariant battery behind `qcalc verify`.

// `!(x > 0.0)` style guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod funcexpr;
pub mod qcore;
pub mod qdiff;
pub mod qgeom;
pub mod qquad;
mod quadrature;
pub mod verify;

pub use error::{ParseError, QError, Result};
pub use funcexpr::{builtin, compile, parse, parse_function, Expr, RealFunction};
pub use qcore::{Deformation, ExtendedValue, Flags};
