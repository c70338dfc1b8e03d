//! Error type shared by all modules.

/// Errors reported by network construction, the scattering engine and the
/// closed-form design helpers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A rate, occupation, phase or other scalar violates its constraint.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A mode or port label does not refer to anything in the network.
    #[error("unknown label: {0}")]
    NotFound(String),

    /// The requested operating point cannot be realized (e.g. cooperativity
    /// below the transparency threshold, pump phase bound violated).
    #[error("design infeasible: {0}")]
    DesignInfeasible(String),

    /// A closed-form solution does not exist for the given inputs.
    #[error("no finite solution: {0}")]
    NoFiniteSolution(String),

    /// The ratio denominator vanished: the forward path itself is nulled at
    /// this frequency, so the directional ratio is unbounded.
    #[error("degenerate denominator (forward null): |den| = {magnitude:.3e} at omega = {omega:.6e} rad/s")]
    DegenerateDenominator { omega: f64, magnitude: f64 },

    /// The dynamics matrix i*omega + M could not be inverted.
    #[error("singular dynamics matrix at omega = {omega:.6e} rad/s")]
    SingularMatrix { omega: f64 },

    /// The time-domain integration did not reach steady state within the
    /// requested horizon.
    #[error("steady state not reached: relative residual {residual:.3e} after {horizon:.3e} s")]
    OracleFailure { residual: f64, horizon: f64 },

    /// A null certificate did not hold; carries the first offending
    /// scattering element and its magnitude.
    #[error("null certificate failed: {element} has magnitude {magnitude:.3e}")]
    Certification { element: String, magnitude: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
