//! Invariant battery: every property of the library checked across a set of
//! deformations, each reported as a maximum residual against a tolerance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{QError, Result};
use crate::funcexpr::{builtin, parse_function, RealFunction};
use crate::qcore::{self, Deformation};
use crate::qdiff::{self, DerivConfig};
use crate::qgeom::{self, DualQLine, PrimalQLine};
use crate::qquad::{self, GeometricPartition, QuadratureConfig};

pub const DEFAULT_QS: [f64; 7] = [-1.0, 0.0, 0.5, 0.9, 1.0, 1.1, 2.0];

/// Deliberate faults for exercising the harness itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Negate the numeric primal q-derivative.
    FlipSign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub qs: Vec<f64>,
    /// Random samples per identity.
    pub samples: usize,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            qs: DEFAULT_QS.to_vec(),
            samples: 200,
            seed: 20_240_601,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub property: &'static str,
    pub q: f64,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Running maximum of residuals; NaN or an error fails the property.
#[derive(Debug, Clone, Copy)]
struct Residual {
    max: f64,
    broken: bool,
}

impl Residual {
    fn new() -> Self {
        Self {
            max: 0.0,
            broken: false,
        }
    }

    fn push(&mut self, r: f64) {
        if r.is_nan() {
            self.broken = true;
        } else {
            self.max = self.max.max(r);
        }
    }

    fn push_res(&mut self, r: Result<f64>) {
        match r {
            Ok(v) => self.push(v),
            Err(_) => {
                self.broken = true;
                self.max = f64::INFINITY;
            }
        }
    }
}

/// `|a - b| / max(1, |b|)`.
fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

struct Ctx {
    d: Deformation,
    rng: ChaCha8Rng,
    samples: usize,
    fault: Option<Fault>,
    deriv: DerivConfig,
    quad: QuadratureConfig,
}

impl Ctx {
    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    fn primal_num(&self, f: &RealFunction, x: f64) -> Result<f64> {
        let v = qdiff::primal_qderiv_numeric(f, x, self.d, &self.deriv)?.value;
        Ok(match self.fault {
            Some(Fault::FlipSign) => -v,
            None => v,
        })
    }

    fn dual_num(&self, f: &RealFunction, x: f64) -> Result<f64> {
        Ok(qdiff::dual_qderiv_numeric(f, x, self.d, &self.deriv)?.value)
    }

    fn in_support(&self, x: f64) -> bool {
        self.d.is_ordinary() || self.d.bracket(x) > 0.0
    }

    fn f(&self, src: &str) -> RealFunction {
        parse_function(src, self.d).expect("battery expressions parse")
    }

    fn b(&self, name: &str) -> RealFunction {
        builtin(name, self.d).expect("battery builtins exist")
    }
}

type Property = fn(&mut Ctx) -> Option<(Residual, f64)>;

const PROPERTIES: &[(&str, Property)] = &[
    ("exp_log_identity", exp_log_identity),
    ("log_exp_identity", log_exp_identity),
    ("log_of_product", log_of_product),
    ("log_of_q_product", log_of_q_product),
    ("log_of_q_quotient", log_of_q_quotient),
    ("exp_of_q_sum", exp_of_q_sum),
    ("exp_of_q_difference", exp_of_q_difference),
    ("power_fold", power_fold),
    ("times_fold", times_fold),
    ("add_sub_inverse", add_sub_inverse),
    ("reflection_symmetry", reflection_symmetry),
    ("primal_equivalence", primal_equivalence),
    ("dual_equivalence", dual_equivalence),
    ("eigenfunction", eigenfunction),
    ("dual_of_q_log", dual_of_q_log),
    ("primal_translation_kernel", primal_translation_kernel),
    ("dual_translation_kernel", dual_translation_kernel),
    ("ordinary_reduction", ordinary_reduction),
    ("fundamental_primal", fundamental_primal),
    ("fundamental_dual", fundamental_dual),
    ("dual_integral_of_derivative", dual_integral_of_derivative),
    ("dual_additivity", dual_additivity),
    ("dual_definite_form", dual_definite_form),
    ("partition_convergence", partition_convergence),
    ("riemann_equivalence", riemann_equivalence),
    ("borges_weakness", borges_weakness),
    ("primal_bound_antisymmetry", primal_bound_antisymmetry),
    ("primal_constant_slope", primal_constant_slope),
    ("dual_constant_slope", dual_constant_slope),
    ("secant_tangent_convergence", secant_tangent_convergence),
    ("same_curve_identity", same_curve_identity),
    ("slope_duality", slope_duality),
    ("dual_translation_family", dual_translation_family),
    ("continuity_near_one", continuity_near_one),
];

pub fn property_names() -> impl Iterator<Item = &'static str> {
    PROPERTIES.iter().map(|(n, _)| *n)
}

/// Run the battery. Properties that do not apply at a given `q` (for example
/// the reflection symmetry at `q = 1`) are omitted from the report.
pub fn run(cfg: &VerifyConfig) -> Result<Report> {
    if cfg.qs.is_empty() {
        return Err(QError::InvalidConfig("no q values to verify".into()));
    }
    if cfg.samples < 2 {
        return Err(QError::InvalidConfig("samples must be at least 2".into()));
    }
    let mut checks = Vec::new();
    for &q in &cfg.qs {
        let d = Deformation::new(q)?;
        for (i, (name, prop)) in PROPERTIES.iter().enumerate() {
            let seed = cfg
                .seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add((i as u64) << 32)
                .wrapping_add(q.to_bits());
            let mut ctx = Ctx {
                d,
                rng: ChaCha8Rng::seed_from_u64(seed),
                samples: cfg.samples,
                fault: cfg.fault,
                deriv: DerivConfig::default(),
                quad: QuadratureConfig::default(),
            };
            if let Some((r, tol)) = prop(&mut ctx) {
                checks.push(Check {
                    property: name,
                    q,
                    max_residual: if r.broken && r.max == 0.0 {
                        f64::NAN
                    } else {
                        r.max
                    },
                    tolerance: tol,
                    passed: !r.broken && r.max <= tol,
                });
            }
        }
    }
    Ok(Report { checks })
}

// ---- qcore ----

fn exp_log_identity(c: &mut Ctx) -> Option<(Residual, f64)> {
    let mut r = Residual::new();
    for _ in 0..c.samples {
        let x = c.uniform(0.05, 10.0);
        let l = qcore::q_log(x, c.d).unwrap();
        r.push(rel(qcore::q_exp(l, c.d).value, x));
    }
    Some((r, 1e-12))
}

fn log_exp_identity(c: &mut Ctx) -> Option<(Residual, f64)> {
    let mut r = Residual::new();
    for _ in 0..c.samples {
        let x = c.uniform(-3.0, 3.0);
        let e = qcore::q_exp(x, c.d);
        if e.flags.is_empty() || c.d.is_ordinary() {
            r.push_res(qcore::q_log(e.value, c.d).map(|v| rel(v, x)));
        }
    }
    Some((r, 1e-12))
}

fn sample_pair(c: &mut Ctx) -> (f64, f64) {
    (c.uniform(0.1, 5.0), c.uniform(0.1, 5.0))
}

fn log_of_product(c: &mut Ctx) -> Option<(Residual, f64)> {
    let mut r = Residual::new();
    for _ in 0..c.samples {
        let (x, y) = sample_pair(c);
        let lhs = qcore::q_log(x * y, c.d).unwrap();
        let rhs = qcore::q_add(
            qcore::q_log(x, c.d).unwrap(),
            qcore::q_log(y, c.d).unwrap(),
            c.d,
        );
        r.push(rel(lhs, rhs));
    }
    Some((r, 1e-10))
}

fn log_of_q_product(c: &mut Ctx) -> Option<(Residual, f64)> {
    let mut r = Residual::new();
    for _ in 0..c.samples {
        let (x, y) = sample_pair(c);
        let m = qcore::q_mul(x, y, c.d).unwrap();
        if !m.flags.is_empty() && !c.d.is_ordinary() {
            continue;
        }
        let lhs = qcore::q_log(m.value, c.d).unwrap();
        let rhs = qcore::q_log(x, c.d).unwrap() + qcore::q_log(y, c.d).unwrap();
        r.push(rel(lhs, rhs));
    }
    Some((r, 1e-10))
}

fn log_of_q_quotient(c: &mut Ctx) -> Option<(Residual, f64)> {
    let mut r = Residual::new();
    for _ in 0..c.samples {
        let (x, y) = sample_pair(c);
        let m = qcore::q_div(x, y, c.d).unwrap();
        if !m.flags.is_empty() && !c.d.is_ordinary() {
            continue;
        }
        let lhs = qcore::q_log(m.value, c.d).unwrap();
        let rhs = qcore::q_log(x, c.d).unwrap() - qcore::q_log(y, c.d).unwrap();
        r.push(rel(lhs, rhs));
    }
    Some((r, 1e-10))
}

fn exp_of_q_sum(c: &mut Ctx) -> Option<(Residual, f64)> {
    let mut r = Residual::new();
    for _ in 0..c.samples {
        let (x, y) = (c.uniform(-2.0, 2.0), c.uniform(-2.0, 2.0));
        let s = qcore::q_add(x, y, c.d);
        if !(c.in_support(x) && c.in_support(y) && c.in_support(s)) {
            continue;
        }
        let lhs = qcore::q_exp(x, c.d).value * qcore::q_exp(y, c.d).value;
        let rhs = qcore::q_exp(s, c.d).value;
        r.push((lhs - rhs).abs() / rhs.abs());
    }
    Some((r, 1e-10))
}

fn exp_of_q_difference(c: &mut Ctx) -> Option<(Residual, f64)> {
    let mut r = Residual::new();
    for _ in 0..c.samples {
        let (x, y) = (c.uniform(-2.0, 2.0), c.uniform(-2.0, 2.0));
        if !(c.in_support(x) && c.in_support(y)) {
            continue;
        }
        let s = qcore::q_sub(x, y, c.d).unwrap();
        if !c.in_support(s) {
            continue;
        }
        let lhs = qcore::q_exp(x, c.d).value / qcore::q_exp(y, c.d).value;
        let rhs = qcore::q_exp(s, c.d).value;
        r.push((lhs - rhs).abs() / rhs.abs());
    }
    Some((r, 1e-10))
}

fn power_fold(c: &mut Ctx) -> Option<(Residual, f64)> {
    let mut r = Residual::new();
    for _ in 0..c.samples / 16 + 1 {
        let x = c.uniform(0.5, 1.5);
        let mut acc = qcore::ExtendedValue::plain(x);
        for n in 1..=16u32 {
            if n > 1 {
                acc = qcore::q_mul(acc.value, x, c.d).unwrap();
            }
            let direct = qcore::q_power_n(x, n, c.d).unwrap();
            if !(acc.value > 0.0 && acc.value.is_finite()) {
                break;
            }
            let flagged = (direct.flags | acc.flags).difference(qcore::Flags::Q1_BRANCH);
            if !flagged.is_empty() {
                break;
            }
            r.push((acc.value - direct.value).abs() / direct.value);
        }
    }
    Some((r, 1e-12))
}

fn times_fold(c: &mut Ctx) -> Option<(Residual, f64)> {
    let mut r = Residual::new();
    for _ in 0..c.samples / 16 + 1 {
        let x = c.uniform(-0.3, 0.3);
        let mut acc = x;
        for n in 1..=16u32 {
            if n > 1 {
                acc = qcore::q_add(acc, x, c.d);
            }
            let direct = qcore::q_times_n(n, x, c.d).unwrap();
            r.push(rel(acc, direct));
        }
    }
    Some((r, 1e-12))
}

fn add_sub_inverse(c: &mut Ctx) -> Option<(Residual, f64)> {
    let mut r = Residual::new();
    for _ in 0..c.samples {
        let (x, y) = (c.uniform(-3.0, 3.0), c.uniform(-3.0, 3.0));
        if c.d.bracket(y).abs() < 0.05 && !c.d.is_ordinary() {
            continue;
        }
        let back = qcore::q_sub(qcore::q_add(x, y, c.d), y, c.d).unwrap();
        r.push(rel(back, x));
    }
    Some((r, 1e-12))
}

fn reflection_symmetry(c: &mut Ctx) -> Option<(Residual, f64)> {
    c.d.pole()?;
    let mut r = Residual::new();
    for _ in 0..c.samples {
        // sample the bracket 1 + (1-q)x, staying off the ill-conditioned
        // neighbourhood of the pole
        let b = c.uniform(0.05, 3.0) * if c.rng.gen::<bool>() { 1.0 } else { -1.0 };
        let x = (b - 1.0) / c.d.delta();
        let a = qcore::big_e(x, c.d);
        let b = qcore::big_e(c.d.mirror(x).unwrap(), c.d);
        r.push((a - b).abs() / a);
    }
    Some((r, 1e-12))
}

// ---- qdiff ----

/// Points of `[lo, hi]`, evenly spaced.
fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

fn primal_equivalence(c: &mut Ctx) -> Option<(Residual, f64)> {
    let mut r = Residual::new();
    for f in [c.f("x^2"), c.f("sin(x)"), c.b("qexp")] {
        for x in grid(-0.4, 0.6, 20) {
            let closed = qdiff::primal_qderiv_closed(&f, x, c.d).unwrap();
            r.push_res(c.primal_num(&f, x).map(|v| rel(v, closed)));
        }
    }
    Some((r, 1e-6))
}

fn dual_equivalence(c: &mut Ctx) -> Option<(Residual, f64)> {
    let mut r = Residual::new();
    for f in [c.b("qlog"), c.f("x"), c.f("x^3 + 1")] {
        for x in grid(0.2, 2.0, 20) {
            let y = f.value(x);
            if !c.in_support(y) || (!c.d.is_ordinary() && c.d.bracket(y) < 0.05) {
                continue;
            }
            let closed = qdiff::dual_qderiv_closed(&f, x, c.d).unwrap();
            r.push_res(c.dual_num(&f, x).map(|v| rel(v, closed)));
        }
    }
    Some((r, 1e-6))
}

fn eigenfunction(c: &mut Ctx) -> Option<(Residual, f64)> {
    let f = c.b("qexp");
    let mut r = Residual::new();
    for x in grid(-0.4, 0.6, 20) {
        let e = qcore::q_exp(x, c.d).value;
        r.push_res(c.primal_num(&f, x).map(|v| rel(v, e)));
    }
    Some((r, 1e-6))
}

fn dual_of_q_log(c: &mut Ctx) -> Option<(Residual, f64)> {
    let f = c.b("qlog");
    let mut r = Residual::new();
    for x in grid(0.1, 10.0, 20) {
        r.push_res(c.dual_num(&f, x).map(|v| rel(v, 1.0 / x)));
    }
    Some((r, 1e-6))
}

fn primal_translation_kernel(c: &mut Ctx) -> Option<(Residual, f64)> {
    let f = c.f("sin(x)");
    let mut r = Residual::new();
    for shift in [-0.5, 1.0, 2.0] {
        let g = c.f(&format!("sin(x) + {shift}"));
        for x in [0.2, 0.5, 0.8] {
            let a = c.primal_num(&f, x);
            let b = c.primal_num(&g, x);
            r.push_res(a.and_then(|a| b.map(|b| rel(b, a))));
        }
    }
    Some((r, 1e-8))
}

fn dual_translation_kernel(c: &mut Ctx) -> Option<(Residual, f64)> {
    let f = c.f("sin(x)");
    let d = c.d;
    let mut r = Residual::new();
    for shift in [-0.5, 1.0, 2.0] {
        if !d.is_ordinary() && d.bracket(shift) <= 0.0 {
            continue;
        }
        let inner = f.clone();
        let g = RealFunction::new("shifted", move |x| qcore::q_add(inner.value(x), shift, d));
        for x in [0.2, 0.5, 0.8] {
            let a = c.dual_num(&f, x);
            let b = c.dual_num(&g, x);
            r.push_res(a.and_then(|a| b.map(|b| rel(b, a))));
        }
    }
    Some((r, 1e-8))
}

fn ordinary_reduction(c: &mut Ctx) -> Option<(Residual, f64)> {
    if !c.d.is_ordinary() {
        return None;
    }
    let mut r = Residual::new();
    for f in [c.f("x^3 - x"), c.f("sin(x)"), c.f("exp(x)")] {
        for x in grid(-1.0, 1.0, 10) {
            let h = 1e-5;
            let central = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
            r.push_res(c.primal_num(&f, x).map(|v| rel(v, central)));
            r.push_res(c.dual_num(&f, x).map(|v| rel(v, central)));
        }
    }
    Some((r, 1e-6))
}

// ---- qquad ----

fn tight() -> QuadratureConfig {
    QuadratureConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        ..QuadratureConfig::default()
    }
}

fn fundamental_primal(c: &mut Ctx) -> Option<(Residual, f64)> {
    let d = c.d;
    let mut r = Residual::new();
    for f in [c.b("qexp"), c.f("1/(1 + x^2)"), c.f("x^3 - 2*x + 1")] {
        let inner = f.clone();
        let antider = RealFunction::new("antiderivative", move |x| {
            qquad::primal_qint_from(&inner, 0.0, x, 0.0, d, &tight()).unwrap_or(f64::NAN)
        });
        for x in grid(0.1, 0.7, 5) {
            r.push_res(c.primal_num(&antider, x).map(|v| rel(v, f.value(x))));
        }
    }
    Some((r, 1e-6))
}

fn fundamental_dual(c: &mut Ctx) -> Option<(Residual, f64)> {
    let d = c.d;
    let mut r = Residual::new();
    for (f, a) in [(c.b("recip"), 1.0), (c.f("cos(x)"), 0.0)] {
        let inner = f.clone();
        let antider = RealFunction::new("antiderivative", move |x| {
            qquad::dual_qint_from(&inner, a, x, 0.0, d, &tight()).unwrap_or(f64::NAN)
        });
        for x in grid(a + 0.2, a + 1.0, 5) {
            r.push_res(c.dual_num(&antider, x).map(|v| rel(v, f.value(x))));
        }
    }
    Some((r, 1e-6))
}

/// Dual q-derivative of `F` in closed form, as a function.
fn dual_derivative_of(f: &RealFunction, d: Deformation) -> RealFunction {
    let inner = f.clone();
    RealFunction::new("dual derivative", move |x| {
        qdiff::dual_qderiv_closed(&inner, x, d).unwrap_or(f64::NAN)
    })
}

fn dual_integral_of_derivative(c: &mut Ctx) -> Option<(Residual, f64)> {
    let mut r = Residual::new();
    for (f, a) in [(c.b("qlog"), 1.0), (c.f("sin(x)"), 0.0)] {
        let g = dual_derivative_of(&f, c.d);
        for x in grid(a + 0.25, a + 1.0, 4) {
            let expect = qcore::q_sub(f.value(x), f.value(a), c.d).unwrap();
            let got = qquad::dual_qint(&g, a, x, c.d, &c.quad).map(|v| rel(v.value, expect));
            r.push_res(got);
        }
    }
    Some((r, 1e-8))
}

fn dual_additivity(c: &mut Ctx) -> Option<(Residual, f64)> {
    let mut r = Residual::new();
    let cfg = tight();
    for (f, lo, hi) in [(c.b("recip"), 1.0, 4.0), (c.f("cos(x)"), 0.0, 2.0)] {
        for _ in 0..20 {
            let (a, m, b) = (c.uniform(lo, hi), c.uniform(lo, hi), c.uniform(lo, hi));
            let whole = qquad::dual_qint(&f, a, b, c.d, &cfg);
            let left = qquad::dual_qint(&f, a, m, c.d, &cfg);
            let right = qquad::dual_qint(&f, m, b, c.d, &cfg);
            r.push_res(whole.and_then(|w| {
                let s = qcore::q_add(left?.value, right?.value, c.d);
                Ok(rel(s, w.value))
            }));
        }
    }
    Some((r, 1e-10))
}

fn dual_definite_form(c: &mut Ctx) -> Option<(Residual, f64)> {
    let mut r = Residual::new();
    let f = c.f("sin(x)");
    let g = dual_derivative_of(&f, c.d);
    for x in grid(0.25, 1.0, 4) {
        let ratio = qcore::q_exp(f.value(x), c.d).value / qcore::q_exp(f.value(0.0), c.d).value;
        let expect = qcore::q_log(ratio, c.d).unwrap();
        let got = qquad::dual_qint(&g, 0.0, x, c.d, &c.quad).map(|v| rel(v.value, expect));
        r.push_res(got);
    }
    Some((r, 1e-8))
}

/// Least-squares slope of `ln err` against `ln n` and whether the errors
/// decrease monotonically.
pub fn partition_error_fit(lo: f64, hi: f64, d: Deformation) -> Result<(f64, bool, f64)> {
    let exact = qcore::q_exp(hi, d).value - qcore::q_exp(lo, d).value;
    let mut pts = Vec::new();
    for k in 3..=12u32 {
        let n = 1u32 << k;
        let p = GeometricPartition::new(n, lo, hi, d)?;
        let err = (qquad::partition_sum_oracle(&p) - exact).abs();
        pts.push((f64::from(n).ln(), err));
    }
    let monotone = pts.windows(2).all(|w| w[1].1 < w[0].1);
    let m = pts.len() as f64;
    let (sx, sy) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, e)| (a + x, b + e.ln()));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(n, d), (x, e)| {
        (n + (x - mx) * (e.ln() - my), d + (x - mx) * (x - mx))
    });
    Ok((num / den, monotone, pts.last().unwrap().1))
}

fn partition_convergence(c: &mut Ctx) -> Option<(Residual, f64)> {
    if c.d.is_ordinary() {
        return None;
    }
    let mut r = Residual::new();
    match partition_error_fit(0.0, 0.5, c.d) {
        Ok((slope, monotone, _)) => {
            r.push((slope + 1.0).abs());
            if !monotone {
                r.push(f64::NAN);
            }
        }
        Err(e) => r.push_res(Err(e)),
    }
    Some((r, 0.2))
}

/// Midpoint rule with `n` fixed steps.
pub fn midpoint_sum(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
}

fn riemann_equivalence(c: &mut Ctx) -> Option<(Residual, f64)> {
    let d = c.d;
    let mut r = Residual::new();
    let fs = [
        c.b("qexp"),
        c.f("x^2"),
        c.f("sin(x)"),
        c.f("1/(1 + x^2)"),
        c.f("exp(-x)"),
    ];
    for f in fs {
        let oracle = midpoint_sum(|x| f.value(x) / d.bracket(x), 0.0, 0.8, 100_000);
        let got = qquad::primal_qint(&f, 0.0, 0.8, d, &c.quad).map(|v| (v.value - oracle).abs());
        r.push_res(got);
    }
    Some((r, 1e-5))
}

fn borges_weakness(c: &mut Ctx) -> Option<(Residual, f64)> {
    if c.d.q() != 0.5 {
        return None;
    }
    let f = c.b("recip");
    let mut r = Residual::new();
    let borges = qquad::borges_dual_qint(&f, 1.0, 2.0, c.d, &c.quad);
    let dual = qquad::dual_qint(&f, 1.0, 2.0, c.d, &c.quad);
    match (borges, dual) {
        (Ok(b), Ok(v)) => {
            // residual: how far the gap falls short of 0.1, plus the
            // borges value's distance from its antiderivative
            r.push((0.1 - (b.value - v.value).abs()).max(0.0) * 1e9);
            r.push((b.value - (2f64.ln() + 0.25)).abs());
        }
        (b, v) => {
            r.push_res(b.map(|_| 0.0));
            r.push_res(v.map(|_| 0.0));
        }
    }
    Some((r, 1e-8))
}

fn primal_bound_antisymmetry(c: &mut Ctx) -> Option<(Residual, f64)> {
    let mut r = Residual::new();
    for f in [c.f("sin(x) + x^2"), c.b("qexp")] {
        let a = qquad::primal_qint(&f, -0.3, 0.7, c.d, &c.quad);
        let b = qquad::primal_qint(&f, 0.7, -0.3, c.d, &c.quad);
        r.push_res(a.and_then(|a| Ok((a.value + b?.value).abs())));
    }
    Some((r, 0.0))
}

// ---- qgeom ----

/// A point on the same side of the pole as 0 with `|1 + (1-q)x|` not tiny.
fn off_pole(c: &mut Ctx, lo: f64, hi: f64) -> f64 {
    loop {
        let x = c.uniform(lo, hi);
        if c.d.is_ordinary() || c.d.bracket(x).abs() > 0.05 {
            return x;
        }
    }
}

fn primal_constant_slope(c: &mut Ctx) -> Option<(Residual, f64)> {
    let mut r = Residual::new();
    let mut n = 0;
    while n < c.samples {
        let (k, b) = (c.uniform(-3.0, 3.0), c.uniform(-2.0, 2.0));
        let (xi, xj) = (off_pole(c, -3.0, 3.0), off_pole(c, -3.0, 3.0));
        let (ui, uj) = (
            qcore::ln_big_e(xi, c.d).unwrap(),
            qcore::ln_big_e(xj, c.d).unwrap(),
        );
        if (ui - uj).abs() < 0.1 {
            continue;
        }
        let line = PrimalQLine::new(c.d, k, b).to_function();
        r.push_res(qgeom::primal_secant_slope(&line, xi, xj, c.d).map(|s| rel(s, k)));
        n += 1;
    }
    Some((r, 1e-12))
}

fn dual_constant_slope(c: &mut Ctx) -> Option<(Residual, f64)> {
    let mut r = Residual::new();
    let mut n = 0;
    while n < c.samples {
        let (k, b) = (c.uniform(-1.5, 1.5), c.uniform(0.2, 3.0));
        let (xi, xj) = (c.uniform(-2.0, 2.0), c.uniform(-2.0, 2.0));
        if (xi - xj).abs() < 0.1 {
            continue;
        }
        let line = DualQLine::new(c.d, k, b).to_function();
        r.push_res(qgeom::dual_secant_slope(&line, xi, xj, c.d).map(|s| rel(s, k)));
        n += 1;
    }
    Some((r, 1e-12))
}

/// Least-squares slope of `ln|err|` against `ln h`.
fn observed_order(hs: &[f64], errs: &[f64]) -> f64 {
    let m = hs.len() as f64;
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

fn secant_tangent_convergence(c: &mut Ctx) -> Option<(Residual, f64)> {
    let hs = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let mut r = Residual::new();
    let f = c.f("x^2 + sin(x)");
    let x0 = 0.3;
    let primal = qgeom::primal_qtangent(&f, x0, c.d, &c.deriv).map(|t| {
        let errs: Vec<f64> = hs
            .iter()
            .map(|h| (qgeom::primal_secant_slope(&f, x0, x0 + h, c.d).unwrap() - t.k_q).abs())
            .collect();
        errs
    });
    let dual = qgeom::dual_qtangent(&f, x0, c.d, &c.deriv).map(|t| {
        hs.iter()
            .map(|h| (qgeom::dual_secant_slope(&f, x0, x0 + h, c.d).unwrap() - t.k_sup_q).abs())
            .collect::<Vec<f64>>()
    });
    for errs in [primal, dual] {
        // residual: shortfall of the observed order below 1
        r.push_res(errs.map(|e| (1.0 - observed_order(&hs, &e)).max(0.0)));
    }
    Some((r, 0.05))
}

fn same_curve_identity(c: &mut Ctx) -> Option<(Residual, f64)> {
    let d = c.d;
    let (f, g) = (c.b("qexp"), c.b("qlog"));
    let (xp, xq) = (-0.3, 0.5);
    let mut r = Residual::new();
    let primal = qgeom::primal_qline_through(&f, xp, xq, d);
    let dual = qgeom::dual_qline_through(&g, f.value(xp), f.value(xq), d);
    match (primal, dual) {
        (Ok(p), Ok(l)) => {
            r.push(rel(p.k_q * l.k_sup_q, 1.0));
            let (yp, yq) = (f.value(xp), f.value(xq));
            for y in grid(yp, yq, 20) {
                // invert y = k ln E_q(x) + c on the support side
                let x = qcore::q_log_exp_of((y - p.c) / p.k_q, d);
                r.push_res(x.and_then(|x| Ok(rel(l.eval(y)?, x))));
            }
        }
        (p, l) => {
            r.push_res(p.map(|_| 0.0));
            r.push_res(l.map(|_| 0.0));
        }
    }
    Some((r, 1e-8))
}

fn slope_duality(c: &mut Ctx) -> Option<(Residual, f64)> {
    let (f, g) = (c.b("qexp"), c.b("qlog"));
    let mut r = Residual::new();
    for x0 in grid(-0.4, 0.6, 20) {
        let s = qgeom::slope_duality(&f, &g, x0, c.d, &c.deriv);
        r.push_res(s.map(|(a, b)| (a * b - 1.0).abs()));
    }
    Some((r, 1e-6))
}

fn dual_translation_family(c: &mut Ctx) -> Option<(Residual, f64)> {
    let d = c.d;
    let mut r = Residual::new();
    for _ in 0..10 {
        let k = c.uniform(-1.0, 1.0);
        let (c1, c2) = (c.uniform(0.3, 3.0), c.uniform(0.3, 3.0));
        let (l1, l2) = (DualQLine::new(d, k, c1), DualQLine::new(d, k, c2));
        let x_star = 0.7;
        let shift = qcore::q_sub(l1.eval(x_star).unwrap(), l2.eval(x_star).unwrap(), d).unwrap();
        for x in grid(-2.0, 2.0, 20) {
            let a = l1.eval(x).unwrap();
            let b = qcore::q_add(l2.eval(x).unwrap(), shift, d);
            r.push(rel(b, a));
        }
    }
    Some((r, 1e-8))
}

/// With `|1 - q| = 1e-6` every operation stays within `1e-4` (relative to
/// `max(1, |value|)`) of its ordinary counterpart. Run once, at `q = 1`.
fn continuity_near_one(c: &mut Ctx) -> Option<(Residual, f64)> {
    if !c.d.is_ordinary() {
        return None;
    }
    let mut r = Residual::new();
    for q in [1.0 - 1e-6, 1.0 + 1e-6] {
        let r1 = continuity_residual(q);
        r.push_res(r1);
    }
    Some((r, 1e-4))
}

/// Largest deviation of the deformed operations at `q` from the ordinary
/// ones on `|x|, |y| <= 10`.
pub fn continuity_residual(q: f64) -> Result<f64> {
    let d = Deformation::new(q)?;
    if d.is_ordinary() {
        return Err(QError::InvalidConfig(format!(
            "q = {q} takes the ordinary branch"
        )));
    }
    let one = Deformation::ordinary();
    let mut worst: f64 = 0.0;
    let mut upd = |a: f64, b: f64| worst = worst.max(rel(a, b));
    let xs: Vec<f64> = grid(-10.0, 10.0, 21).collect();
    let pos: Vec<f64> = grid(0.1, 10.0, 21).collect();
    for &x in &xs {
        upd(qcore::q_exp(x, d).value, x.exp());
        upd(qcore::big_e(x, d), x.exp());
        upd(qcore::ln_big_e(x, d)?, x);
        upd(qcore::q_log_exp_of(x, d)?, x);
        for n in 1..=3 {
            upd(qcore::q_times_n(n, x, d)?, f64::from(n) * x);
        }
        for &y in &xs {
            // binary operations are measured against the operand scale
            let s = x.abs().max(y.abs()).max(1.0);
            upd(qcore::q_add(x, y, d) / s, (x + y) / s);
            upd(qcore::q_sub(x, y, d)? / s, (x - y) / s);
        }
    }
    for &x in &pos {
        upd(qcore::q_log(x, d)?, x.ln());
        for n in 1..=3 {
            upd(qcore::q_power_n(x, n, d)?.value, x.powi(n as i32));
        }
        for &y in &pos {
            upd(qcore::q_mul(x, y, d)?.value, x * y);
            upd(qcore::q_div(x, y, d)?.value, x / y);
        }
    }
    let cfg = DerivConfig::default();
    let quad = QuadratureConfig::default();
    for src in ["x^2", "sin(x)", "exp(x)"] {
        let f = parse_function(src, d)?;
        let g = parse_function(src, one)?;
        for x in grid(-2.0, 2.0, 9) {
            upd(
                qdiff::primal_qderiv_closed(&f, x, d)?,
                qdiff::primal_qderiv_closed(&g, x, one)?,
            );
            upd(
                qdiff::dual_qderiv_closed(&f, x, d)?,
                qdiff::dual_qderiv_closed(&g, x, one)?,
            );
            upd(
                qdiff::primal_qderiv_numeric(&f, x, d, &cfg)?.value,
                qdiff::primal_qderiv_numeric(&g, x, one, &cfg)?.value,
            );
            upd(
                qdiff::dual_qderiv_numeric(&f, x, d, &cfg)?.value,
                qdiff::dual_qderiv_numeric(&g, x, one, &cfg)?.value,
            );
        }
        upd(
            qquad::primal_qint(&f, -1.0, 2.0, d, &quad)?.value,
            qquad::primal_qint(&g, -1.0, 2.0, one, &quad)?.value,
        );
        upd(
            qquad::dual_qint(&f, -1.0, 2.0, d, &quad)?.value,
            qquad::dual_qint(&g, -1.0, 2.0, one, &quad)?.value,
        );
        upd(
            qquad::borges_dual_qint(&f, -1.0, 2.0, d, &quad)?.value,
            qquad::borges_dual_qint(&g, -1.0, 2.0, one, &quad)?.value,
        );
    }
    Ok(worst)
}
