use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Problem data failed validation (masses, orders, energy level, domain).
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    /// Curve data failed validation (too few vertices, NaN coordinates, ...).
    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    /// An evaluation point coincides with a center.
    #[error("evaluation point coincides with center {index}")]
    AtCenter { index: usize },

    /// A point left the region where the Jacobi metric is defined (V >= h).
    #[error("point ({x}, {y}) is outside the Hill region for this energy")]
    OutsideHillRegion { x: f64, y: f64 },

    /// Operation on a homotopy word that is not meaningful for it.
    #[error("homotopy word error: {0}")]
    Word(String),

    /// Minimization was asked for a class with no interior minimizer.
    #[error("trivial homotopy class: {0}")]
    TrivialClass(String),

    /// Cover bookkeeping refuses orders >= 2; such centers must be excised
    /// (or the domain punctured) before a finite branched cover exists.
    #[error("centers {indices:?} have order >= 2 and cannot be branch points; excise them first")]
    Unbranchable { indices: Vec<usize> },

    /// Parameter outside the admitted range of an operation.
    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    /// Iterative routine failed to reach its tolerance.
    #[error("did not converge: {0}")]
    NoConvergence(String),

    /// A checked precondition failed (non-convex domain, missing chaos
    /// certificate); callers may override explicitly.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Config or serialized input could not be parsed.
    #[error("bad input: {0}")]
    BadInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
