//! Harmonic Balance solver for the forced response of friction-damped
//! structures under unsteady aerodynamic loading.
//!
//! The library is organised around a partitioned solution of the coupled
//! aero-structural problem in the frequency domain:
//!
//! * [`harmonics`] — real Fourier coefficient containers and the discrete
//!   transforms used by the alternating frequency-time scheme.
//! * [`model`] — reduced structural models (component-mode matrices plus
//!   contact element definitions) and dynamic stiffness assembly.
//! * [`contact`] — unilateral normal contact and elastic dry friction
//!   evaluated in the time domain with consistent tangents.
//! * [`solver`] — the structural Harmonic Balance residual, its analytical
//!   Jacobian, and the augmented Newton solver used for continuation.
//! * [`aero`] — the fluid side: a pseudo-time solved nonlinear surrogate,
//!   aerodynamic influence coefficient models, and flow diagnostics.
//! * [`coupling`] — the fixed-point coupling loop with the consistent
//!   linearized force approximation.
//! * [`continuation`] — tangent predictor / arc-length corrector path
//!   continuation, coupled re-iteration and branch relaunch.
//! * [`model_builder`] — Craig-Bampton reduction and the desk-scale test
//!   fixtures shipped with the solver.

pub mod aero;
pub mod contact;
pub mod continuation;
pub mod coupling;
pub mod error;
pub mod export;
pub mod harmonics;
pub mod model;
pub mod model_builder;
pub mod scaling;
pub mod solver;
pub mod stats;

pub use error::{AeroError, ContinuationError, HarmonicError, ModelError, SolveError};
pub use harmonics::{HarmonicSpec, HarmonicVector, TimeSeries};
pub use model::{ContactElement, ModeKind, ReducedModel, SolutionPoint};
pub use scaling::ScaledSpace;
