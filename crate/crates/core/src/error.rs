use core::fmt;

/// Failure modes of the solver and verification routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    Domain { what: &'static str, value: f64 },
    /// Model parameters violate a structural invariant.
    InvalidParams(&'static str),
    /// `sin 2η` vanishes; every coefficient of the master equation divides by it.
    DegenerateRotation,
    /// `|ε| ≥ 1`: the exponential factor does not decay.
    NonNormalizable { epsilon: f64 },
    /// `w ≠ 0` while `b = aC`, so the exponent scale σ vanishes.
    SigmaZero,
    /// `w = 0` with `v ≠ 0`: the 1/r exponent β is undefined.
    UnsupportedDegeneracy,
    /// `b = aC` with `v = w = 0`: the Coulomb-limit exponent is undefined.
    DegenerateCoulombLimit,
    /// The energy radicand is negative.
    NoRealEnergy { radicand: f64 },
    /// The energy denominator is not positive.
    DegenerateEnergy { denominator: f64 },
    /// The Coulomb condition `(b − aC)α = 3S/(2u)` does not hold.
    NotCoulombPoint { mismatch: f64 },
    /// A constraint denominator vanishes.
    ConstraintSingularity { denominator: f64 },
    /// The doubly confluent Heun reduction requires `w = 0`.
    Classification { w: f64 },
    /// Bethe roots coincide or touch the pole at the origin.
    SingularRoots,
    /// The multi-start Newton search exhausted its budget.
    ConvergenceFailure { best_residual: f64, starts: usize },
    /// `C + ε = 0`: the second spinor component is singular.
    ComponentSingularity,
    /// The wavefunction has not decayed at the end of the integration range.
    Truncation { tail: f64 },
    /// The metric factor `1 + α²U(r)` is not positive.
    MetricBreakdown { r: f64, factor: f64 },
    /// A grid description is unusable.
    InvalidGrid(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Error::Domain { what, value } => write!(f, "{what} out of domain: {value}"),
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            Error::DegenerateRotation => write!(f, "degenerate rotation: sin 2eta = 0"),
            Error::NonNormalizable { epsilon } => {
                write!(f, "energy {epsilon} is not normalizable (|epsilon| >= 1)")
            }
            Error::SigmaZero => write!(f, "sigma vanishes (w != 0 with b = aC)"),
            Error::UnsupportedDegeneracy => {
                write!(f, "w = 0 with v != 0 is classified but not solvable by the ansatz")
            }
            Error::DegenerateCoulombLimit => write!(f, "Coulomb limit undefined for b = aC"),
            Error::NoRealEnergy { radicand } => {
                write!(f, "no real energy: radicand {radicand} < 0")
            }
            Error::DegenerateEnergy { denominator } => {
                write!(f, "energy denominator {denominator} is not positive")
            }
            Error::NotCoulombPoint { mismatch } => {
                write!(f, "not at the Coulomb point: (b - aC)alpha - 3S/(2u) = {mismatch}")
            }
            Error::ConstraintSingularity { denominator } => {
                write!(f, "constraint denominator vanishes ({denominator})")
            }
            Error::Classification { w } => {
                write!(f, "Heun classification requires w = 0 (got {w})")
            }
            Error::SingularRoots => write!(f, "Bethe roots coincide or vanish"),
            Error::ConvergenceFailure { best_residual, starts } => write!(
                f,
                "Newton search failed after {starts} starts (best residual {best_residual:e})"
            ),
            Error::ComponentSingularity => write!(f, "C + epsilon = 0"),
            Error::Truncation { tail } => {
                write!(f, "wavefunction not decayed at rmax (relative tail {tail:e})")
            }
            Error::MetricBreakdown { r, factor } => {
                write!(f, "metric factor {factor} <= 0 at r = {r}")
            }
            Error::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
