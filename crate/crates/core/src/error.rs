use thiserror::Error;

use crate::heptagon::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("imaginary part of the Riemann matrix is not positive definite")]
    NonPositiveDefinite,
    #[error("Riemann matrix is not symmetric (asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("no convergence in {context}: {detail}")]
    NoConvergence { context: &'static str, detail: String },
    #[error("branch label {0} outside 1..6")]
    BadLabel(u8),
    #[error("segment ({0},{1}) does not join adjacent branch points")]
    BadSegment(usize, usize),
    #[error("integration path passes within {distance:.3e} of a singular point")]
    PathThroughSingularity { distance: f64 },
    #[error("singular linear system in {0}")]
    SingularSystem(&'static str),
    #[error("period matrix outside the cone 0 < Ω12 < min(Ω11, Ω22): {0:?}")]
    ConeViolation([f64; 3]),
    #[error("even theta constant {0} vanishes (Humbert degenerate matrix)")]
    HumbertDegenerate(String),
    #[error("projection denominator vanishes (point at the pole)")]
    DenominatorZero,
    #[error("projection sign check failed: value {0} at the unit point")]
    SignCheckFailed(String),
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("invalid heptagon: {}", format_violations(.0))]
    InvalidHeptagon(Vec<Violation>),
    #[error("no root of θ[35] in the bracket (0, 1/2) for u1 = {0}")]
    NoRootInBracket(f64),
    #[error("continuation stalled at t = {t:.6} (step {step:.3e})")]
    ContinuationStalled { t: f64, step: f64 },
    #[error("left the valid parameter region: {0}")]
    LeftValidRegion(String),
    #[error("evaluation at a pole of the Christoffel-Schwarz integral")]
    AtPole,
    #[error("point {0} lies outside the heptagon")]
    OutsideHeptagon(String),
    #[error("solution left the H+ tile: {0}")]
    WrongTile(String),
    #[error("bad normalization: {0}")]
    BadNorm(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Whether the error concerns input/output rather than the mathematics.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Parse(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
