//! Fixed-point coupling of the structural and fluid solvers.
//!
//! One coupling iteration chains the fluid operator (mesh deformation,
//! pseudo-time solve, force projection) and the structural Newton solver
//! working against the consistent linearized force approximation
//!
//! ```text
//! f̂*(x_s) = f̂_wake + (f̂^(ν-1) - f̂_wake) · (eᵀ û₁ˢ)/(eᵀ û₁ˢ,(ν-1))
//! ```
//!
//! which is exact at the reference solve and tracks the amplitude and phase
//! of the vibration through the complex fundamental coefficient of the
//! representative coordinate. The loop terminates on the scaled update norm
//! `‖X^(ν) - X^(ν-1)‖ < ε_s`; no relaxation is applied. After convergence
//! one warm-started fluid solve refreshes the approximation at the final
//! point, so the returned state solves both domain residuals and the
//! refreshed approximation can seed subsequent decoupled continuation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::aero::AeroContext;
use crate::continuation::ParametrizationConstraint;
use crate::error::SolveError;
use crate::harmonics::HarmonicVector;
use crate::model::{ReducedModel, SolutionPoint};
use crate::scaling::ScaledSpace;
use crate::solver::{newton_solve, NewtonOptions, StructuralForceModel};
use crate::stats::CostLedger;

/// Consistent linearized aerodynamic force approximation.
#[derive(Debug, Clone)]
pub struct ForceApproximation {
    /// Wake force at `x_s = 0`, computed once at the nominal rotor speed.
    pub f_wake: HarmonicVector,
    /// Total force from the most recent fluid solve.
    pub f_ref: HarmonicVector,
    /// Complex fundamental coefficient `eᵀ û` at the reference solve.
    pub x_ref_scalar: Complex64,
    /// Coordinate index realizing the selector `e`.
    pub selector: usize,
    /// False for the pure-wake initialization (no vibration reference yet).
    has_vibration: bool,
}

impl ForceApproximation {
    /// Initial approximation before any vibrating fluid solve exists:
    /// pure wake forcing.
    pub fn pure_wake(f_wake: HarmonicVector, selector: usize) -> Self {
        Self {
            f_ref: f_wake.clone(),
            f_wake,
            x_ref_scalar: Complex64::new(1.0, 0.0),
            selector,
            has_vibration: false,
        }
    }

    /// Builds the approximation from a reference fluid solve at `x_ref`.
    /// Degenerates (and errors) when the vibration force is nonzero while
    /// the reference coordinate vanishes.
    pub fn from_reference(
        f_wake: HarmonicVector,
        f_ref: HarmonicVector,
        x_ref: &HarmonicVector,
        selector: usize,
    ) -> Result<Self, SolveError> {
        let vib_norm = (&f_ref.coeffs - &f_wake.coeffs).norm();
        let wake_norm = f_wake.coeffs.norm().max(f64::MIN_POSITIVE);
        let x_ref_scalar = x_ref.complex_coeff(selector, 1);
        if vib_norm <= 1e-13 * wake_norm {
            return Ok(Self::pure_wake(f_wake, selector));
        }
        if x_ref_scalar.norm() < 1e-120 {
            return Err(SolveError::DegenerateApproximation);
        }
        Ok(Self {
            f_wake,
            f_ref,
            x_ref_scalar,
            selector,
            has_vibration: true,
        })
    }

    pub fn has_vibration_reference(&self) -> bool {
        self.has_vibration
    }

    fn ratio(&self, x_s: &HarmonicVector) -> Complex64 {
        x_s.complex_coeff(self.selector, 1) / self.x_ref_scalar
    }
}

impl StructuralForceModel for ForceApproximation {
    fn force(&self, x_s: &HarmonicVector) -> HarmonicVector {
        let spec = self.f_wake.spec;
        if !self.has_vibration {
            return self.f_wake.clone();
        }
        let c = self.ratio(x_s);
        let mut f = self.f_wake.clone();
        for j in 0..spec.n_coords {
            // harmonic 0 carries no phase; scale by the real part
            let d0 = self.f_ref.mean(j) - self.f_wake.mean(j);
            f.set_mean(j, self.f_wake.mean(j) + d0 * c.re);
            for h in 1..=spec.order {
                let delta = self.f_ref.complex_coeff(j, h) - self.f_wake.complex_coeff(j, h);
                f.set_complex_coeff(j, h, self.f_wake.complex_coeff(j, h) + delta * c);
            }
        }
        f
    }

    fn force_jacobian(&self, _x_s: &HarmonicVector) -> DMatrix<f64> {
        let spec = self.f_wake.spec;
        let n = spec.len();
        let mut jac = DMatrix::zeros(n, n);
        if !self.has_vibration {
            return jac;
        }
        // f̂* depends on x_s only through (a_e1, b_e1):
        // ∂c/∂a_e = 1/z_ref, ∂c/∂b_e = -i/z_ref
        let inv = Complex64::new(1.0, 0.0) / self.x_ref_scalar;
        let col_a = spec.idx_cos(self.selector, 1);
        let col_b = spec.idx_sin(self.selector, 1);
        for j in 0..spec.n_coords {
            let d0 = self.f_ref.mean(j) - self.f_wake.mean(j);
            jac[(spec.base(j), col_a)] = d0 * inv.re;
            jac[(spec.base(j), col_b)] = d0 * inv.im; // Re(-i/z) = Im(1/z)
            for h in 1..=spec.order {
                let delta = self.f_ref.complex_coeff(j, h) - self.f_wake.complex_coeff(j, h);
                let d1 = delta * inv;
                let d2 = delta * Complex64::new(0.0, -1.0) * inv;
                let (ra, rb) = (spec.idx_cos(j, h), spec.idx_sin(j, h));
                jac[(ra, col_a)] = d1.re;
                jac[(rb, col_a)] = -d1.im;
                jac[(ra, col_b)] = d2.re;
                jac[(rb, col_b)] = -d2.im;
            }
        }
        jac
    }
}

/// One record per coupling iteration.
#[derive(Debug, Clone)]
pub struct CouplingTrace {
    pub update_norm: f64,
    pub newton_iterations: usize,
    pub pseudo_steps: usize,
    pub structural_residual: f64,
}

/// Converged result of the coupling loop.
#[derive(Debug, Clone)]
pub struct CouplingResult {
    pub point: SolutionPoint,
    pub x_a: HarmonicVector,
    pub f_hat: HarmonicVector,
    pub iterations: usize,
    pub history: Vec<CouplingTrace>,
    /// Approximation refreshed from the fluid solve at the converged point.
    pub approx: ForceApproximation,
}

#[derive(Debug, Clone)]
pub struct CouplingOptions {
    /// Convergence threshold on the scaled update norm.
    pub eps_s: f64,
    pub max_iterations: usize,
    pub newton: NewtonOptions,
    /// Optional fixed under-relaxation factor on the structural update;
    /// none by default.
    pub relaxation: Option<f64>,
}

impl Default for CouplingOptions {
    fn default() -> Self {
        Self {
            eps_s: 1e-6,
            max_iterations: 25,
            newton: NewtonOptions::default(),
            relaxation: None,
        }
    }
}

/// Alternates the fluid operator and the structural Newton solver until the
/// scaled update norm of the augmented unknowns drops below `ε_s`.
#[allow(clippy::too_many_arguments)]
pub fn coupling_loop(
    initial: &SolutionPoint,
    constraint: &ParametrizationConstraint,
    approx_init: &ForceApproximation,
    model: &ReducedModel,
    aero: &AeroContext,
    scale: &ScaledSpace,
    opts: &CouplingOptions,
    ledger: &mut CostLedger,
) -> Result<CouplingResult, SolveError> {
    ledger.coupling_activations += 1;
    let selector = approx_init.selector;
    let f_wake = approx_init.f_wake.clone();
    let mut current = initial.clone();
    let mut x_a_warm: Option<HarmonicVector> = None;
    let mut history: Vec<CouplingTrace> = Vec::new();

    for iteration in 1..=opts.max_iterations {
        let wrap = |source: SolveError| SolveError::CouplingSubSolver {
            iteration,
            source: Box::new(source),
        };

        // F: fluid solve at the current structural estimate
        let fluid = aero
            .evaluate(&current.x_s, current.omega, 1.0, x_a_warm.as_ref(), ledger)
            .map_err(|e| wrap(SolveError::Aero(e)))?;
        let approx =
            ForceApproximation::from_reference(f_wake.clone(), fluid.f_hat, &current.x_s, selector)
                .map_err(wrap)?;

        // S: structural solve against the refreshed approximation
        let outcome = newton_solve(
            &current,
            &approx,
            constraint,
            model,
            scale,
            &opts.newton,
            ledger,
        )
        .map_err(wrap)?;
        ledger.coupling_iterations += 1;

        let mut next = outcome.point;
        if let Some(theta) = opts.relaxation {
            let prev = current.to_augmented();
            let aug = prev.clone() + (next.to_augmented() - &prev) * theta;
            next = SolutionPoint::from_augmented(current.x_s.spec, &aug);
        }
        let update_norm = scale.distance(&next.to_augmented(), &current.to_augmented());
        history.push(CouplingTrace {
            update_norm,
            newton_iterations: outcome.iterations,
            pseudo_steps: fluid.pseudo_steps,
            structural_residual: outcome.residual_history.last().copied().unwrap_or(0.0),
        });
        x_a_warm = Some(fluid.x_a);
        current = next;

        if update_norm < opts.eps_s {
            // consistency refresh: one warm fluid solve at the final point
            let fluid = aero
                .evaluate(&current.x_s, current.omega, 1.0, x_a_warm.as_ref(), ledger)
                .map_err(|e| wrap(SolveError::Aero(e)))?;
            let approx = ForceApproximation::from_reference(
                f_wake,
                fluid.f_hat.clone(),
                &current.x_s,
                selector,
            )?;
            return Ok(CouplingResult {
                point: current,
                x_a: fluid.x_a,
                f_hat: fluid.f_hat,
                iterations: iteration,
                history,
                approx,
            });
        }
    }

    Err(SolveError::CouplingNoConvergence {
        iterations: opts.max_iterations,
        last_update: history.last().map_or(f64::INFINITY, |t| t.update_norm),
        history: history.iter().map(|t| t.update_norm).collect(),
    })
}

/// Fixed-Ω solution under a force model; shorthand used by drivers and tests.
pub fn solve_fixed_omega(
    x_init: &HarmonicVector,
    omega: f64,
    force: &dyn StructuralForceModel,
    model: &ReducedModel,
    scale: &ScaledSpace,
    newton: &NewtonOptions,
    ledger: &mut CostLedger,
) -> Result<SolutionPoint, SolveError> {
    let initial = SolutionPoint::new(x_init.clone(), omega);
    let outcome = newton_solve(
        &initial,
        force,
        &ParametrizationConstraint::FixedOmega(omega),
        model,
        scale,
        newton,
        ledger,
    )?;
    Ok(outcome.point)
}

/// Scaled norm of the augmented difference, exposed for convergence checks.
pub fn update_norm(a: &SolutionPoint, b: &SolutionPoint, scale: &ScaledSpace) -> f64 {
    scale.distance(&a.to_augmented(), &b.to_augmented())
}

/// Residual consistency of a coupling result: `‖f̂*(x_s) - f̂(x_a)‖` relative
/// to the force scale (the fixed-point gap of the final step).
pub fn fixed_point_consistency(result: &CouplingResult) -> f64 {
    let f_star = result.approx.force(&result.point.x_s);
    let scale = result.f_hat.coeffs.norm().max(f64::MIN_POSITIVE);
    (&f_star.coeffs - &result.f_hat.coeffs).norm() / scale
}

#[allow(unused_imports)]
pub(crate) use crate::solver::ConstantForce;
