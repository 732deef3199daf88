//! Error types shared across the solver modules.

use thiserror::Error;

/// Errors raised by the Fourier/time-domain machinery.
#[derive(Debug, Clone, Error)]
pub enum HarmonicError {
    #[error("sample count {n_samples} is below the aliasing bound; order {order} requires at least {min} samples")]
    TooFewSamples {
        n_samples: usize,
        order: usize,
        min: usize,
    },
    #[error("coefficient vector has length {got}, expected {expected} ({n_coords} coordinates, order {order})")]
    LengthMismatch {
        got: usize,
        expected: usize,
        n_coords: usize,
        order: usize,
    },
    #[error("harmonic specs are incompatible: {0}")]
    SpecMismatch(String),
}

/// Errors raised while constructing or validating a structural model.
#[derive(Debug, Clone, Error)]
pub enum ModelError {
    #[error("mass matrix is not symmetric positive definite")]
    MassNotSpd,
    #[error("stiffness matrix is not symmetric positive semidefinite (min eigenvalue {0:.3e})")]
    StiffnessNotPsd(f64),
    #[error("matrix {name} has shape {rows}x{cols}, expected {expected}x{expected}")]
    BadShape {
        name: &'static str,
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("contact element {index}: {reason}")]
    BadContact { index: usize, reason: String },
    #[error("resonant mode index {0} does not address a fixed-interface normal mode")]
    BadResonantIndex(usize),
    #[error("interior stiffness block is singular; the boundary set does not constrain the model")]
    SingularInterior,
    #[error("requested {requested} normal modes but only {available} interior dofs are available")]
    TooManyModes { requested: usize, available: usize },
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("model file is invalid: {0}")]
    InvalidFile(String),
}

/// Errors raised by the structural Newton solver and the coupling loop.
#[derive(Debug, Clone, Error)]
pub enum SolveError {
    #[error("Newton solver did not converge within {iterations} iterations (best residual {best_residual:.3e})")]
    NoConvergence {
        iterations: usize,
        best_residual: f64,
        /// Residual norm per iteration, for post-mortem inspection.
        history: Vec<f64>,
    },
    #[error("augmented Jacobian is singular")]
    SingularSystem,
    #[error("contact element {element}: force trajectory not periodic after {periods} periods (change {change:.3e})")]
    NonPeriodicContact {
        element: usize,
        periods: usize,
        change: f64,
    },
    #[error("coupling loop did not converge within {iterations} iterations (last update {last_update:.3e})")]
    CouplingNoConvergence {
        iterations: usize,
        last_update: f64,
        history: Vec<f64>,
    },
    #[error("coupling iteration {iteration}: {source}")]
    CouplingSubSolver {
        iteration: usize,
        #[source]
        source: Box<SolveError>,
    },
    #[error("force approximation is degenerate: zero reference coordinate with nonzero vibration force")]
    DegenerateApproximation,
    #[error(transparent)]
    Aero(#[from] AeroError),
    #[error(transparent)]
    Harmonic(#[from] HarmonicError),
}

/// Errors raised by the fluid surrogate and the AIC identification runs.
#[derive(Debug, Clone, Error)]
pub enum AeroError {
    #[error("surrogate spectrum must have negative real parts (found {0:.3e})")]
    UnstableSpectrum(f64),
    #[error("surrogate eigenvalue blocks cover {covered} states, expected {expected}")]
    SpectrumSizeMismatch { covered: usize, expected: usize },
    #[error("pseudo-time solver stalled at residual {residual:.3e} after {steps} steps (target {target:.3e})")]
    PseudoTimeNoConvergence {
        residual: f64,
        steps: usize,
        target: f64,
        history: Vec<f64>,
    },
    #[error("identification run for component mode {mode} failed: {source}")]
    IdentificationRun {
        mode: usize,
        #[source]
        source: Box<AeroError>,
    },
    #[error("{label} solve failed: {source}")]
    SubRun {
        label: &'static str,
        #[source]
        source: Box<AeroError>,
    },
    #[error("field dimensions are inconsistent: {0}")]
    DimensionMismatch(String),
    #[error("zero vector input to {0}")]
    ZeroVector(&'static str),
}

/// Errors raised by the path continuation layer.
#[derive(Debug, Clone, Error)]
pub enum ContinuationError {
    #[error("Jacobian null space has dimension > 1 at the requested point; bifurcation suspected")]
    BifurcationSuspected,
    #[error("branch stalled after {points} points: corrector kept failing at minimal step length")]
    BranchStalled { points: usize },
    #[error(transparent)]
    Solve(#[from] SolveError),
}
