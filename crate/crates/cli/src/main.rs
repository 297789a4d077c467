mod output;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qcalc::qdiff::{self, DerivConfig};
use qcalc::qgeom::{self, DualQLine, PrimalQLine};
use qcalc::qquad::{self, QuadratureConfig, SingularityMode};
use qcalc::verify::{self, Fault, VerifyConfig};
use qcalc::{parse_function, Deformation, QError, RealFunction};

use output::{Cell, Format, Table};

const GRAMMAR: &str = "\
EXPRESSIONS:
    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := '-' factor | power
    power   := primary ('^' factor)?
    primary := number | 'x' | name '(' expr ')' | '(' expr ')'

    '^' is right-associative and binds tighter than unary minus: -x^2 = -(x^2).
    Names: ln exp sin cos sqrt abs qexp qlog. qexp and qlog use the --q value.
    Numbers: decimal with optional exponent, e.g. 2, .5, 1.5e-3.

OUTPUT:
    CSV (LF line endings, header always present) or JSON
    {\"meta\": {...resolved configuration...}, \"rows\": [{...}, ...]}.
    Numbers are printed as 17-significant-digit scientific notation.
    Nothing is written if any row fails.

EXIT CODES:
    0 success, 1 domain/evaluation error, 2 parse or usage error,
    3 verification failure.

EXAMPLES:
    qcalc eval 'qexp(x)' --q 0.5 --from 0 --to 1 --points 2
    qcalc diff 'qlog(x)' dual closed --q 0.5 --at 2
    qcalc integrate '1/x' dual --q 0.5 1 2
    qcalc qline 'qexp(x)' primal tangent 0 --q 0.5
    qcalc verify";

#[derive(Parser, Debug)]
#[command(
    name = "qcalc",
    version,
    about = "Deformed (q-) calculus: q-functions, primal/dual q-derivatives, q-integrals and q-lines",
    after_help = GRAMMAR,
    allow_negative_numbers = true
)]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Deformation parameter q (required except for verify)
    #[arg(long, global = true, allow_negative_numbers = true)]
    q: Option<f64>,

    /// Output format
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,

    /// Write output to this file instead of standard output
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Absolute tolerance for quadrature
    #[arg(long, global = true)]
    abs_tol: Option<f64>,

    /// Relative tolerance for quadrature and numeric derivatives
    #[arg(long, global = true)]
    rel_tol: Option<f64>,

    /// Handling of primal integration ranges that contain the pole -1/(1-q)
    #[arg(long, global = true, value_enum, default_value = "error")]
    singularity: Singularity,

    /// Grid start
    #[arg(long, global = true, allow_negative_numbers = true)]
    from: Option<f64>,

    /// Grid end
    #[arg(long, global = true, allow_negative_numbers = true)]
    to: Option<f64>,

    /// Number of grid points (at least 2)
    #[arg(long, global = true)]
    points: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Singularity {
    Error,
    Reflect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Primal,
    Dual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IntMode {
    Primal,
    Dual,
    BorgesDual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Numeric,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LineKind {
    Secant,
    Tangent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FaultArg {
    FlipSign,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate an expression over the grid
    Eval { expr: String },
    /// Primal or dual q-derivative at --at points or over the grid
    Diff {
        expr: String,
        #[arg(value_enum)]
        mode: Mode,
        #[arg(value_enum, default_value = "numeric")]
        method: Method,
        /// Evaluation points (repeatable); the grid is used when absent
        #[arg(long, allow_negative_numbers = true)]
        at: Vec<f64>,
    },
    /// Definite primal, dual or Borges-dual q-integral
    #[command(allow_negative_numbers = true)]
    Integrate {
        expr: String,
        #[arg(value_enum)]
        mode: IntMode,
        x_lo: f64,
        x_hi: f64,
    },
    /// Secant or tangent q-line of an expression, sampled over the grid
    #[command(allow_negative_numbers = true)]
    Qline {
        expr: String,
        #[arg(value_enum)]
        mode: Mode,
        #[arg(value_enum)]
        kind: LineKind,
        /// x_i x_j for a secant, x0 for a tangent
        #[arg(num_args = 1..=2, required = true)]
        at: Vec<f64>,
    },
    /// Run the invariant battery; --q restricts it to a single q
    Verify {
        /// Random samples per identity
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<FaultArg>,
    },
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<QError> for Failure {
    fn from(e: QError) -> Self {
        let code = match e {
            QError::Parse(_) | QError::InvalidConfig(_) | QError::UnknownBuiltin(_) => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult<T> = std::result::Result<T, Failure>;

impl Global {
    fn deformation(&self) -> CmdResult<Deformation> {
        let q = self
            .q
            .ok_or_else(|| Failure::usage("--q is required for this command"))?;
        Ok(Deformation::new(q)?)
    }

    fn quad(&self) -> CmdResult<QuadratureConfig> {
        let base = QuadratureConfig::default();
        let cfg = QuadratureConfig {
            abs_tol: self.abs_tol.unwrap_or(base.abs_tol),
            rel_tol: self.rel_tol.unwrap_or(base.rel_tol),
            singularity_mode: match self.singularity {
                Singularity::Error => SingularityMode::Error,
                Singularity::Reflect => SingularityMode::Reflect,
            },
            ..base
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn deriv(&self) -> CmdResult<DerivConfig> {
        let base = DerivConfig::default();
        let cfg = DerivConfig {
            rel_tol: self.rel_tol.unwrap_or(base.rel_tol),
            ..base
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn grid_given(&self) -> bool {
        self.from.is_some() || self.to.is_some() || self.points.is_some()
    }

    /// The grid, or `default` when no grid flag is present.
    fn grid_or(&self, default: Option<(f64, f64, usize)>) -> CmdResult<Vec<f64>> {
        let (from, to, points) = match (self.from, self.to, self.points, default) {
            (Some(a), Some(b), Some(n), _) => (a, b, n),
            (None, None, None, Some(d)) => d,
            _ => return Err(Failure::usage("a grid needs --from, --to and --points")),
        };
        if !(from.is_finite() && to.is_finite() && from < to) {
            return Err(Failure::usage(format!(
                "grid needs finite --from < --to (got {from}, {to})"
            )));
        }
        if points < 2 {
            return Err(Failure::usage(format!(
                "--points must be at least 2 (got {points})"
            )));
        }
        let step = (to - from) / (points - 1) as f64;
        Ok((0..points)
            .map(|i| {
                if i + 1 == points {
                    to
                } else {
                    from + step * i as f64
                }
            })
            .collect())
    }

    fn meta(&self, command: &'static str) -> Vec<(&'static str, Cell)> {
        let base = QuadratureConfig::default();
        vec![
            ("command", command.into()),
            ("q", self.q.into()),
            ("format", format!("{:?}", self.format).to_lowercase().into()),
            (
                "out",
                self.out.as_ref().map(|p| p.display().to_string()).into(),
            ),
            ("abs_tol", self.abs_tol.unwrap_or(base.abs_tol).into()),
            ("rel_tol", self.rel_tol.unwrap_or(base.rel_tol).into()),
            (
                "singularity",
                format!("{:?}", self.singularity).to_lowercase().into(),
            ),
            ("from", self.from.into()),
            ("to", self.to.into()),
            (
                "points",
                self.points
                    .map(|n| Cell::Int(n as u64))
                    .unwrap_or(Cell::Null),
            ),
        ]
    }
}

fn lower<T: std::fmt::Debug>(v: T) -> Cell {
    let s = format!("{v:?}");
    let mut out = String::new();
    for (i, ch) in s.chars().enumerate() {
        if ch.is_ascii_uppercase() && i > 0 {
            out.push('-');
        }
        out.push(ch.to_ascii_lowercase());
    }
    Cell::Str(out)
}

fn cmd_eval(g: &Global, expr: &str) -> CmdResult<Table> {
    let d = g.deformation()?;
    let f = parse_function(expr, d)?;
    let xs = g.grid_or(None)?;
    let mut meta = g.meta("eval");
    meta.push(("expr", expr.into()));
    let mut t = Table::new(&["x", "value", "flags"], meta);
    for x in xs {
        let v = f.eval(x);
        if v.flags.contains(qcalc::Flags::DOMAIN_VIOLATION) {
            return Err(QError::Domain {
                op: "eval",
                detail: format!("{expr} is undefined at x = {x}"),
            }
            .into());
        }
        t.push(vec![x.into(), v.value.into(), v.flags.into()]);
    }
    Ok(t)
}

fn cmd_diff(g: &Global, expr: &str, mode: Mode, method: Method, at: &[f64]) -> CmdResult<Table> {
    let d = g.deformation()?;
    let f = parse_function(expr, d)?;
    let cfg = g.deriv()?;
    let xs = if at.is_empty() {
        g.grid_or(None)?
    } else if g.grid_given() {
        return Err(Failure::usage("use either --at or a grid, not both"));
    } else {
        at.to_vec()
    };
    let mut meta = g.meta("diff");
    meta.extend([
        ("expr", expr.into()),
        ("mode", lower(mode)),
        ("method", lower(method)),
    ]);
    let mut t = Table::new(&["x", "derivative", "error_estimate", "flags"], meta);
    for x in xs {
        let r = match (mode, method) {
            (Mode::Primal, Method::Numeric) => qdiff::primal_qderiv_numeric(&f, x, d, &cfg)?,
            (Mode::Dual, Method::Numeric) => qdiff::dual_qderiv_numeric(&f, x, d, &cfg)?,
            (Mode::Primal, Method::Closed) => closed(qdiff::primal_qderiv_closed(&f, x, d)?, d),
            (Mode::Dual, Method::Closed) => closed(qdiff::dual_qderiv_closed(&f, x, d)?, d),
        };
        if !r.value.is_finite() || !f.in_domain(x) {
            return Err(QError::Domain {
                op: "diff",
                detail: format!("derivative of {expr} is undefined at x = {x}"),
            }
            .into());
        }
        t.push(vec![
            x.into(),
            r.value.into(),
            r.error_estimate.into(),
            r.flags.into(),
        ]);
    }
    Ok(t)
}

fn closed(value: f64, d: Deformation) -> qdiff::Derivative {
    qdiff::Derivative {
        value,
        error_estimate: 0.0,
        flags: qcalc::qcore::branch_flags(d),
    }
}

fn cmd_integrate(g: &Global, expr: &str, mode: IntMode, lo: f64, hi: f64) -> CmdResult<Table> {
    let d = g.deformation()?;
    let f = parse_function(expr, d)?;
    let cfg = g.quad()?;
    let r = match mode {
        IntMode::Primal => qquad::primal_qint(&f, lo, hi, d, &cfg)?,
        IntMode::Dual => qquad::dual_qint(&f, lo, hi, d, &cfg)?,
        IntMode::BorgesDual => qquad::borges_dual_qint(&f, lo, hi, d, &cfg)?,
    };
    let mut meta = g.meta("integrate");
    meta.extend([("expr", expr.into()), ("mode", lower(mode))]);
    let mut t = Table::new(&["x_lo", "x_hi", "value", "error_estimate", "flags"], meta);
    t.push(vec![
        lo.into(),
        hi.into(),
        r.value.into(),
        r.error_estimate.into(),
        r.flags.into(),
    ]);
    Ok(t)
}

enum Line {
    Primal(PrimalQLine),
    Dual(DualQLine),
}

fn cmd_qline(g: &Global, expr: &str, mode: Mode, kind: LineKind, at: &[f64]) -> CmdResult<Table> {
    let d = g.deformation()?;
    let f: RealFunction = parse_function(expr, d)?;
    let cfg = g.deriv()?;
    let (line, default_grid) = match (kind, at) {
        (LineKind::Secant, &[xi, xj]) => {
            let line = match mode {
                Mode::Primal => Line::Primal(qgeom::primal_qline_through(&f, xi, xj, d)?),
                Mode::Dual => Line::Dual(qgeom::dual_qline_through(&f, xi, xj, d)?),
            };
            (line, (xi.min(xj), xi.max(xj), 11))
        }
        (LineKind::Tangent, &[x0]) => {
            let line = match mode {
                Mode::Primal => Line::Primal(qgeom::primal_qtangent(&f, x0, d, &cfg)?),
                Mode::Dual => Line::Dual(qgeom::dual_qtangent(&f, x0, d, &cfg)?),
            };
            (line, (x0 - 0.5, x0 + 0.5, 11))
        }
        (LineKind::Secant, _) => return Err(Failure::usage("a secant needs two points x_i x_j")),
        (LineKind::Tangent, _) => return Err(Failure::usage("a tangent needs one point x0")),
    };
    let xs = g.grid_or(Some(default_grid))?;
    let (slope, c, intercept) = match &line {
        Line::Primal(l) => (l.k_q, l.c, l.c),
        Line::Dual(l) => (l.k_sup_q, l.c, l.intercept()),
    };
    let mut meta = g.meta("qline");
    meta.extend([
        ("expr", expr.into()),
        ("mode", lower(mode)),
        ("kind", lower(kind)),
        (
            "at",
            Cell::Str(
                at.iter()
                    .map(|v| output::number(*v))
                    .collect::<Vec<_>>()
                    .join(" "),
            ),
        ),
    ]);
    let mut t = Table::new(
        &["mode", "slope", "c", "intercept", "x", "line", "curve"],
        meta,
    );
    for x in xs {
        let y = match &line {
            Line::Primal(l) => l.eval(x)?,
            Line::Dual(l) => l.eval(x)?,
        };
        let curve = f.eval(x);
        let curve = if curve.flags.contains(qcalc::Flags::DOMAIN_VIOLATION) {
            Cell::Null
        } else {
            curve.value.into()
        };
        t.push(vec![
            lower(mode),
            slope.into(),
            c.into(),
            intercept.into(),
            x.into(),
            y.into(),
            curve,
        ]);
    }
    Ok(t)
}

fn cmd_verify(g: &Global, samples: usize, fault: Option<FaultArg>) -> CmdResult<(Table, bool)> {
    let mut cfg = VerifyConfig {
        samples,
        fault: fault.map(|FaultArg::FlipSign| Fault::FlipSign),
        ..VerifyConfig::default()
    };
    if let Some(q) = g.q {
        cfg.qs = vec![q];
    }
    let report = verify::run(&cfg)?;
    let mut meta = g.meta("verify");
    meta.extend([
        ("samples", Cell::Int(samples as u64)),
        ("seed", Cell::Int(cfg.seed)),
        (
            "qs",
            Cell::Str(
                cfg.qs
                    .iter()
                    .map(|q| output::number(*q))
                    .collect::<Vec<_>>()
                    .join(" "),
            ),
        ),
    ]);
    let mut t = Table::new(
        &["property", "q", "max_residual", "tolerance", "status"],
        meta,
    );
    for c in &report.checks {
        t.push(vec![
            c.property.into(),
            c.q.into(),
            c.max_residual.into(),
            c.tolerance.into(),
            if c.passed { "PASS" } else { "FAIL" }.into(),
        ]);
    }
    Ok((t, report.all_passed()))
}

fn run(cli: &Cli) -> CmdResult<u8> {
    let g = &cli.global;
    let (table, code) = match &cli.command {
        Command::Eval { expr } => (cmd_eval(g, expr)?, 0),
        Command::Diff {
            expr,
            mode,
            method,
            at,
        } => (cmd_diff(g, expr, *mode, *method, at)?, 0),
        Command::Integrate {
            expr,
            mode,
            x_lo,
            x_hi,
        } => (cmd_integrate(g, expr, *mode, *x_lo, *x_hi)?, 0),
        Command::Qline {
            expr,
            mode,
            kind,
            at,
        } => (cmd_qline(g, expr, *mode, *kind, at)?, 0),
        Command::Verify {
            samples,
            inject_fault,
        } => {
            let (t, ok) = cmd_verify(g, *samples, *inject_fault)?;
            (t, if ok { 0 } else { 3 })
        }
    };
    let text = table.render(g.format);
    let written = match &g.out {
        Some(path) => fs::write(path, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    };
    written.map_err(|e| Failure {
        code: 1,
        message: format!("cannot write output: {e}"),
    })?;
    if code == 3 {
        eprintln!("qcalc: verification failed");
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("qcalc: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
