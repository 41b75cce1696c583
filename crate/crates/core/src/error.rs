use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

use crate::construct::SolutionReport;
use crate::expr::ParseError;

pub type Result<T> = core::result::Result<T, Error>;

/// Every failure the library reports.
#[derive(Debug, Clone)]
pub enum Error {
    /// Grid construction rejected its arguments.
    InvalidGrid(String),
    /// Field data do not fit the grid or contain non-finite values.
    InvalidField(String),
    /// Jet order outside `{1, 2}`.
    UnsupportedOrder(usize),
    /// An axis has fewer nodes than the stencil needs.
    GridTooSmall {
        axis: usize,
        nodes: usize,
        needed: usize,
    },
    /// `N ≠ n` where a square gradient is required.
    DimensionMismatch { components: usize, dim: usize },
    /// A supremand evaluation produced NaN or ±∞.
    NonFinite { node: Option<usize>, x: [f64; 2] },
    /// The jet order does not match the supremand arity.
    OrderMismatch { spec: usize, jet: usize },
    /// `E_1(u) = 0`: the crest factor is undefined on this field.
    DegenerateEnergy { e1: f64, einf: f64 },
    /// Exponent outside `[1, ∞)` or a non-ascending exponent list.
    InvalidExponent(String),
    /// The supremand has no conformal form `h`.
    NotConformal,
    /// Expression text could not be parsed.
    Parse(ParseError),
    /// Invalid supremand definition (e.g. failed conformal consistency).
    InvalidSpec(String),
    /// No bracket for the identity-ray inverse within the coercivity cap.
    NoBracket { lambda: f64, reason: String },
    /// The identity ray was observed to decrease.
    NotMonotone { t_lo: f64, t_hi: f64 },
    /// The eigenvalue problem admits no solution with the requested data.
    Infeasible(String),
    /// Refinement stopped improving; the partial result is attached.
    StalledProgress(Box<SolutionReport>),
    /// Invalid arguments to a constructor or check.
    InvalidInput(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            Error::InvalidField(msg) => write!(f, "invalid field: {msg}"),
            Error::UnsupportedOrder(k) => write!(f, "unsupported jet order {k} (expected 1 or 2)"),
            Error::GridTooSmall { axis, nodes, needed } => write!(
                f,
                "axis {axis} has {nodes} nodes, stencil needs at least {needed}"
            ),
            Error::DimensionMismatch { components, dim } => write!(
                f,
                "gradient is {components}x{dim}; a square gradient (N = n) is required"
            ),
            Error::NonFinite { node, x } => match node {
                Some(i) => write!(f, "non-finite supremand value at node {i} (x = {:?})", x),
                None => write!(f, "non-finite supremand value at x = {:?}", x),
            },
            Error::OrderMismatch { spec, jet } => {
                write!(f, "supremand expects order-{spec} jets, got order {jet}")
            }
            Error::DegenerateEnergy { e1, einf } => write!(
                f,
                "degenerate energy: E_1 = {e1:e} (E_inf = {einf:e}); the crest factor needs E_1(u) != 0"
            ),
            Error::InvalidExponent(msg) => write!(f, "invalid exponent: {msg}"),
            Error::NotConformal => write!(f, "supremand has no conformal form h(x, X, S)"),
            Error::Parse(e) => write!(f, "{e}"),
            Error::InvalidSpec(msg) => write!(f, "invalid supremand: {msg}"),
            Error::NoBracket { lambda, reason } => {
                write!(f, "no bracket for level {lambda}: {reason}")
            }
            Error::NotMonotone { t_lo, t_hi } => write!(
                f,
                "identity ray is not increasing between t = {t_lo} and t = {t_hi}"
            ),
            Error::Infeasible(msg) => write!(f, "infeasible: {msg}"),
            Error::StalledProgress(report) => write!(
                f,
                "refinement stalled after {} iterations at deviation fraction {:.4}",
                report.iterations.len().saturating_sub(1),
                report.iterations.last().copied().unwrap_or(f64::NAN)
            ),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

impl From<ParseError> for Error {
    fn from(e: ParseError) -> Self {
        Error::Parse(e)
    }
}
