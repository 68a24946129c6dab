use thiserror::Error;

/// Errors produced by model construction, equation solvers, filter design,
/// closed-loop analysis and simulation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A scalar parameter is outside its admissible domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Matrix or grid inputs are malformed (dimensions, symmetry, ordering).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The realized uncertainty violates the admissible set `||Delta|| <= 1`.
    #[error("constraint violation: ||Delta|| = {norm} exceeds 1")]
    ConstraintViolation { norm: f64 },

    /// The Riccati equation has no stabilizing solution (Hamiltonian
    /// eigenvalues on or too close to the imaginary axis, or a defective
    /// stable subspace).
    #[error("no stabilizing Riccati solution: {0}")]
    NoStabilizingSolution(String),

    /// The system matrix passed to the Lyapunov solver is not Hurwitz.
    #[error("unstable system: eigenvalue with real part {max_re:e}")]
    UnstableSystem { max_re: f64 },

    /// A computed solution failed its residual or stability certificate.
    #[error("solver certification failed: {0}")]
    Certification(String),

    /// The robust Riccati equation is infeasible at this epsilon
    /// (recoverable: scans skip the point).
    #[error("robust Riccati infeasible at epsilon = {epsilon:e}")]
    InfeasibleEpsilon { epsilon: f64 },

    /// No epsilon in the scanned range admits a stabilizing solution.
    #[error("no feasible epsilon in [{lo:e}, {hi:e}]")]
    NoFeasibleEpsilon { lo: f64, hi: f64 },

    /// A designed filter failed an internal consistency check.
    #[error("filter design failure: {0}")]
    DesignFailure(String),

    /// The augmented closed loop is not Hurwitz at the realized uncertainty.
    /// Sweeps record these points as gaps rather than failing.
    #[error("unstable closed loop: eigenvalue with real part {max_re:e}")]
    UnstableLoop { max_re: f64 },

    /// Simulation configuration violates a stability or positivity guard.
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
