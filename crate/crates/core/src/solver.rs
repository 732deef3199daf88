//! Structural Harmonic Balance residual and the augmented Newton solver.
//!
//! The residual per harmonic reads `S_h(Ω) û_h + ĝ_h(û) - f̂_h = 0`,
//! assembled in the real a/b convention, with the aerodynamic force `f̂`
//! supplied by a [`StructuralForceModel`] (an AIC model or the consistent
//! linearized force approximation of the coupling loop). The system is
//! augmented by one parametrization constraint and solved for `[x_s; Ω]`
//! with a damped Newton iteration using analytical gradients throughout.

use nalgebra::{DMatrix, DVector};

use crate::contact::{contact_forces, ContactConfig, ContactEvaluation};
use crate::continuation::ParametrizationConstraint;
use crate::error::SolveError;
use crate::harmonics::{complex_block_to_real, cycle_work, HarmonicVector};
use crate::model::{dynamic_stiffness, dynamic_stiffness_domega, ReducedModel, SolutionPoint};
use crate::scaling::ScaledSpace;
use crate::stats::CostLedger;

/// Aerodynamic force seen by the structural solver: value and exact
/// derivative with respect to the real coefficient vector. The rotor-speed
/// dependence of the force models is neglected, so no `∂f̂/∂Ω` is exposed.
pub trait StructuralForceModel: Sync {
    fn force(&self, x_s: &HarmonicVector) -> HarmonicVector;
    fn force_jacobian(&self, x_s: &HarmonicVector) -> DMatrix<f64>;
}

/// Assembled residual and gradients at one augmented point.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub residual: DVector<f64>,
    /// `∂r_s/∂x_s`: dynamic stiffness blocks + contact Jacobian - `∂f̂/∂x_s`.
    pub jac_x: DMatrix<f64>,
    /// `∂r_s/∂Ω` from the dynamic stiffness derivative.
    pub jac_omega: DVector<f64>,
    pub contact: ContactEvaluation,
    /// The aerodynamic force actually applied.
    pub force: HarmonicVector,
}

impl Assembly {
    /// Residual-gradient matrix `[∂r_s/∂x_s, ∂r_s/∂Ω]` of size n×(n+1).
    pub fn jac_augmented(&self) -> DMatrix<f64> {
        let n = self.jac_x.nrows();
        let mut j = DMatrix::zeros(n, n + 1);
        j.view_mut((0, 0), (n, n)).copy_from(&self.jac_x);
        j.view_mut((0, n), (n, 1)).copy_from(&self.jac_omega);
        j
    }
}

/// Applies the dynamic stiffness blocks to the coefficient vector.
fn apply_dynamic_stiffness(
    model: &ReducedModel,
    x_s: &HarmonicVector,
    omega: f64,
) -> HarmonicVector {
    let spec = x_s.spec;
    let mut out = HarmonicVector::zeros(spec);
    let k = model.stiffness_matrix();
    // h = 0: static block
    let a0 = DVector::from_fn(spec.n_coords, |j, _| x_s.mean(j));
    let r0 = &k * a0;
    for j in 0..spec.n_coords {
        out.set_mean(j, r0[j]);
    }
    for h in 1..=spec.order {
        let s = dynamic_stiffness(model, h, omega, spec.engine_order);
        let u: Vec<_> = x_s.harmonic_complex(h);
        for i in 0..spec.n_coords {
            let mut acc = num_complex::Complex64::new(0.0, 0.0);
            for (j, uj) in u.iter().enumerate() {
                acc += s[(i, j)] * uj;
            }
            out.set_complex_coeff(i, h, acc);
        }
    }
    out
}

/// Evaluates the structural residual and its analytical gradients.
pub fn assemble(
    point: &SolutionPoint,
    force_model: &dyn StructuralForceModel,
    model: &ReducedModel,
    contact_cfg: &ContactConfig,
) -> Result<Assembly, SolveError> {
    let spec = point.x_s.spec;
    let per = spec.coeffs_per_coord();
    let n = spec.len();
    let contact = contact_forces(&point.x_s, model, contact_cfg)?;
    let force = force_model.force(&point.x_s);
    let elastic = apply_dynamic_stiffness(model, &point.x_s, point.omega);

    let residual = &elastic.coeffs + &contact.forces.coeffs - &force.coeffs;

    // ∂r/∂x: dynamic stiffness blocks scattered into the coordinate-major
    // layout, plus the contact Jacobian, minus the force-model Jacobian.
    let mut jac_x = contact.jacobian.clone() - force_model.force_jacobian(&point.x_s);
    let k = model.stiffness_matrix();
    for i in 0..spec.n_coords {
        for j in 0..spec.n_coords {
            jac_x[(i * per, j * per)] += k[(i, j)];
        }
    }
    for h in 1..=spec.order {
        let s = dynamic_stiffness(model, h, point.omega, spec.engine_order);
        let real = complex_block_to_real(&s);
        let m = spec.n_coords;
        for i in 0..m {
            for j in 0..m {
                let (ia, ib) = (spec.idx_cos(i, h), spec.idx_sin(i, h));
                let (ja, jb) = (spec.idx_cos(j, h), spec.idx_sin(j, h));
                jac_x[(ia, ja)] += real[(i, j)];
                jac_x[(ia, jb)] += real[(i, j + m)];
                jac_x[(ib, ja)] += real[(i + m, j)];
                jac_x[(ib, jb)] += real[(i + m, j + m)];
            }
        }
    }

    // ∂r/∂Ω: only the dynamic stiffness depends on the rotor speed.
    let mut jac_omega = DVector::zeros(n);
    for h in 1..=spec.order {
        let ds = dynamic_stiffness_domega(model, h, point.omega, spec.engine_order);
        let u: Vec<_> = point.x_s.harmonic_complex(h);
        for i in 0..spec.n_coords {
            let mut acc = num_complex::Complex64::new(0.0, 0.0);
            for (j, uj) in u.iter().enumerate() {
                acc += ds[(i, j)] * uj;
            }
            jac_omega[spec.idx_cos(i, h)] = acc.re;
            jac_omega[spec.idx_sin(i, h)] = -acc.im;
        }
    }

    Ok(Assembly {
        residual,
        jac_x,
        jac_omega,
        contact,
        force,
    })
}

/// Full augmented Jacobian of size `(n+1)²` including the constraint row.
pub fn augmented_jacobian(
    assembly: &Assembly,
    aug: &DVector<f64>,
    constraint: &ParametrizationConstraint,
    scale: &ScaledSpace,
) -> DMatrix<f64> {
    let n = assembly.jac_x.nrows();
    let mut j = DMatrix::zeros(n + 1, n + 1);
    j.view_mut((0, 0), (n, n)).copy_from(&assembly.jac_x);
    j.view_mut((0, n), (n, 1)).copy_from(&assembly.jac_omega);
    let grad = constraint.gradient(aug, scale);
    for c in 0..=n {
        j[(n, c)] = grad[c];
    }
    j
}

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    /// Residual tolerance relative to the force scale.
    pub tol_rel: f64,
    /// Absolute tolerance on the (scaled) parametrization constraint.
    pub tol_constraint: f64,
    pub max_iterations: usize,
    pub max_backtracks: usize,
    pub contact: ContactConfig,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol_rel: 1e-8,
            tol_constraint: 1e-10,
            max_iterations: 30,
            max_backtracks: 8,
            contact: ContactConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub point: SolutionPoint,
    /// Newton steps taken.
    pub iterations: usize,
    /// Combined residual metric per evaluation, starting at the initial point.
    pub residual_history: Vec<f64>,
    /// Assembly at the accepted point.
    pub assembly: Assembly,
}

/// Natural force scale of the problem at the current iterate; the residual
/// tolerance is relative to it. Falls back to the contact force level for
/// unforced preloaded configurations.
fn force_scale(assembly: &Assembly) -> f64 {
    assembly
        .force
        .coeffs
        .norm()
        .max(assembly.contact.forces.coeffs.norm())
        .max(f64::MIN_POSITIVE)
}

fn combined_metric(assembly: &Assembly, r_pc: f64) -> f64 {
    assembly.residual.norm() / force_scale(assembly) + r_pc.abs()
}

/// Solves the augmented system `[r_s; r_pc] = 0` for `[x_s; Ω]` with a
/// damped Newton iteration. Backtracking halves the step on residual growth.
pub fn newton_solve(
    initial: &SolutionPoint,
    force_model: &dyn StructuralForceModel,
    constraint: &ParametrizationConstraint,
    model: &ReducedModel,
    scale: &ScaledSpace,
    opts: &NewtonOptions,
    ledger: &mut CostLedger,
) -> Result<NewtonOutcome, SolveError> {
    let spec = initial.x_s.spec;
    let n = spec.len();
    ledger.newton_solves += 1;

    let mut aug = initial.to_augmented();
    let mut assembly = assemble(
        &SolutionPoint::from_augmented(spec, &aug),
        force_model,
        model,
        &opts.contact,
    )?;
    let mut r_pc = constraint.eval(&aug, scale);
    let mut metric = combined_metric(&assembly, r_pc);
    let mut history = vec![metric];

    let converged = |a: &Assembly, rc: f64| {
        a.residual.norm() <= opts.tol_rel * force_scale(a) && rc.abs() <= opts.tol_constraint
    };

    let mut best = (aug.clone(), metric);
    for iter in 1..=opts.max_iterations {
        if converged(&assembly, r_pc) {
            return Ok(NewtonOutcome {
                point: SolutionPoint::from_augmented(spec, &aug),
                iterations: iter - 1,
                residual_history: history,
                assembly,
            });
        }

        let jac = augmented_jacobian(&assembly, &aug, constraint, scale);
        let mut rhs = DVector::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from(&assembly.residual);
        rhs[n] = r_pc;
        let lu = jac.lu();
        let delta = lu.solve(&rhs).ok_or(SolveError::SingularSystem)?;

        // backtracking line search on the combined residual metric
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let trial = &aug - &delta * step;
            if trial[n] <= 0.0 {
                step *= 0.5;
                continue;
            }
            let trial_point = SolutionPoint::from_augmented(spec, &trial);
            let trial_assembly = assemble(&trial_point, force_model, model, &opts.contact)?;
            let trial_pc = constraint.eval(&trial, scale);
            let trial_metric = combined_metric(&trial_assembly, trial_pc);
            if trial_metric < metric || step <= 1.0 / (1 << opts.max_backtracks) as f64 {
                accepted = Some((trial, trial_assembly, trial_pc, trial_metric));
                break;
            }
            step *= 0.5;
        }
        ledger.newton_iterations += 1;

        match accepted {
            Some((trial, trial_assembly, trial_pc, trial_metric)) => {
                aug = trial;
                assembly = trial_assembly;
                r_pc = trial_pc;
                metric = trial_metric;
                history.push(metric);
                if metric < best.1 {
                    best = (aug.clone(), metric);
                }
            }
            None => break,
        }
    }

    if converged(&assembly, r_pc) {
        let iterations = history.len() - 1;
        return Ok(NewtonOutcome {
            point: SolutionPoint::from_augmented(spec, &aug),
            iterations,
            residual_history: history,
            assembly,
        });
    }

    Err(SolveError::NoConvergence {
        iterations: history.len() - 1,
        best_residual: best.1,
        history,
    })
}

/// Cycle-energy bookkeeping of a converged point.
#[derive(Debug, Clone, Copy)]
pub struct EnergyBalance {
    /// Work input by the aerodynamic force per cycle.
    pub input: f64,
    /// Work dissipated by the damping matrix per cycle.
    pub damping: f64,
    /// Work absorbed by the contact forces per cycle.
    pub contact: f64,
}

impl EnergyBalance {
    pub fn residual(&self) -> f64 {
        self.input - self.damping - self.contact
    }

    pub fn relative_residual(&self) -> f64 {
        let scale = self
            .input
            .abs()
            .max(self.damping.abs())
            .max(self.contact.abs())
            .max(f64::MIN_POSITIVE);
        self.residual().abs() / scale
    }
}

/// Evaluates the cycle energy balance from the harmonic coefficients:
/// input work by `f̂`, viscous dissipation `Σ_h π h ω_h (aᵀDa + bᵀDb)`,
/// and the contact cycle work.
pub fn energy_balance(
    point: &SolutionPoint,
    force: &HarmonicVector,
    contact: &HarmonicVector,
    model: &ReducedModel,
) -> EnergyBalance {
    let spec = point.x_s.spec;
    let d = model.damping_matrix();
    let mut damping = 0.0;
    for h in 1..=spec.order {
        let w_h = h as f64 * spec.engine_order as f64 * point.omega;
        let a = DVector::from_fn(spec.n_coords, |j, _| point.x_s.coeffs[spec.idx_cos(j, h)]);
        let b = DVector::from_fn(spec.n_coords, |j, _| point.x_s.coeffs[spec.idx_sin(j, h)]);
        damping +=
            std::f64::consts::PI * h as f64 * w_h * ((&d * &a).dot(&a) + (&d * &b).dot(&b));
    }
    EnergyBalance {
        input: cycle_work(force, &point.x_s),
        damping,
        contact: cycle_work(contact, &point.x_s),
    }
}

/// Force model applying a fixed harmonic force, independent of the motion.
#[derive(Debug, Clone)]
pub struct ConstantForce(pub HarmonicVector);

impl StructuralForceModel for ConstantForce {
    fn force(&self, _x_s: &HarmonicVector) -> HarmonicVector {
        self.0.clone()
    }

    fn force_jacobian(&self, _x_s: &HarmonicVector) -> DMatrix<f64> {
        DMatrix::zeros(self.0.coeffs.len(), self.0.coeffs.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::HarmonicSpec;
    use crate::model::{ContactElement, ModeKind};
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn one_dof(m: f64, d: f64, k: f64) -> ReducedModel {
        ReducedModel::new(
            DMatrix::from_element(1, 1, m),
            DMatrix::from_element(1, 1, d),
            DMatrix::from_element(1, 1, k),
            vec![],
            vec![ModeKind::Normal],
            0,
        )
        .unwrap()
    }

    fn scale() -> ScaledSpace {
        ScaledSpace::new(1.0, 1.0)
    }

    #[test]
    fn trivial_equilibrium_has_zero_residual() {
        let model = one_dof(1.0, 0.1, 4.0);
        let spec = HarmonicSpec::new(1, 1, 1);
        let point = SolutionPoint::new(HarmonicVector::zeros(spec), 1.0);
        let zero = ConstantForce(HarmonicVector::zeros(spec));
        let a = assemble(&point, &zero, &model, &ContactConfig::default()).unwrap();
        assert_eq!(a.residual.norm(), 0.0);
    }

    #[test]
    fn linear_frf_point_has_zero_residual() {
        let (m, d, k) = (1.0, 0.1, 4.0);
        let model = one_dof(m, d, k);
        let spec = HarmonicSpec::new(1, 1, 1);
        let omega = 1.7;
        let f = 0.35;
        // û = f / (k - ω² m + i ω d)
        let s = Complex64::new(k - omega * omega * m, omega * d);
        let u = Complex64::new(f, 0.0) / s;
        let mut x = HarmonicVector::zeros(spec);
        x.set_complex_coeff(0, 1, u);
        let mut fv = HarmonicVector::zeros(spec);
        fv.coeffs[spec.idx_cos(0, 1)] = f;
        let point = SolutionPoint::new(x, omega);
        let a = assemble(&point, &ConstantForce(fv), &model, &ContactConfig::default()).unwrap();
        assert!(a.residual.norm() < 1e-12 * f);
    }

    #[test]
    fn residual_is_first_order_in_perturbations() {
        let model = one_dof(1.0, 0.1, 4.0);
        let spec = HarmonicSpec::new(1, 1, 1);
        let mut f = HarmonicVector::zeros(spec);
        f.coeffs[spec.idx_cos(0, 1)] = 1.0;
        let force = ConstantForce(f);
        let mut x = HarmonicVector::zeros(spec);
        x.coeffs[spec.idx_cos(0, 1)] = 0.2;
        x.coeffs[spec.idx_sin(0, 1)] = -0.1;
        let point = SolutionPoint::new(x, 1.3);
        let a = assemble(&point, &force, &model, &ContactConfig::default()).unwrap();

        let dir = DVector::from_vec(vec![0.3, -0.5, 0.8]);
        let mut errs = Vec::new();
        for &eps in &[1e-3, 1e-4, 1e-5] {
            let mut p = point.clone();
            p.x_s.coeffs += &dir * eps;
            let ap = assemble(&p, &force, &model, &ContactConfig::default()).unwrap();
            let lin = &a.residual + &a.jac_x * (&dir * eps);
            errs.push((&ap.residual - lin).norm() / eps);
        }
        // O(ε) directional error after removing the first-order term
        assert!(errs[1] < errs[0] * 0.2);
        assert!(errs[2] < errs[1] * 0.2);
    }

    #[test]
    fn linear_jacobian_equals_dynamic_stiffness_blocks() {
        let model = one_dof(2.0, 0.3, 5.0);
        let spec = HarmonicSpec::new(1, 2, 2);
        let mut f = HarmonicVector::zeros(spec);
        f.coeffs[spec.idx_cos(0, 1)] = 1.0;
        let point = SolutionPoint::new(HarmonicVector::zeros(spec), 0.7);
        let a = assemble(&point, &ConstantForce(f), &model, &ContactConfig::default()).unwrap();
        // expected: block diag [K; real blocks of S_1, S_2]
        assert_relative_eq!(a.jac_x[(0, 0)], 5.0);
        let s1 = dynamic_stiffness(&model, 1, 0.7, 2)[(0, 0)];
        assert_relative_eq!(a.jac_x[(1, 1)], s1.re);
        assert_relative_eq!(a.jac_x[(1, 2)], s1.im);
        assert_relative_eq!(a.jac_x[(2, 1)], -s1.im);
        assert_relative_eq!(a.jac_x[(2, 2)], s1.re);
        let s2 = dynamic_stiffness(&model, 2, 0.7, 2)[(0, 0)];
        assert_relative_eq!(a.jac_x[(3, 3)], s2.re);
        assert_relative_eq!(a.jac_x[(4, 4)], s2.re);
    }

    #[test]
    fn omega_gradient_matches_scalar_derivative() {
        // r(Ω) = (k - (EO Ω)² m) a + EO Ω d b for the cosine row
        let (m, d, k) = (1.0, 0.1, 4.0);
        let model = one_dof(m, d, k);
        let spec = HarmonicSpec::new(1, 1, 2);
        let mut x = HarmonicVector::zeros(spec);
        let (av, bv) = (0.4, -0.3);
        x.coeffs[spec.idx_cos(0, 1)] = av;
        x.coeffs[spec.idx_sin(0, 1)] = bv;
        let omega = 0.9;
        let point = SolutionPoint::new(x, omega);
        let a = assemble(
            &point,
            &ConstantForce(HarmonicVector::zeros(spec)),
            &model,
            &ContactConfig::default(),
        )
        .unwrap();
        let eo = 2.0;
        let d_cos = -2.0 * eo * eo * omega * m * av + eo * d * bv;
        let d_sin = -eo * d * av - 2.0 * eo * eo * omega * m * bv;
        assert_relative_eq!(a.jac_omega[1], d_cos, epsilon = 1e-12);
        assert_relative_eq!(a.jac_omega[2], d_sin, epsilon = 1e-12);
    }

    #[test]
    fn newton_on_linear_system_converges_in_one_iteration() {
        let model = one_dof(1.0, 0.1, 4.0);
        let spec = HarmonicSpec::new(1, 1, 1);
        let mut f = HarmonicVector::zeros(spec);
        f.coeffs[spec.idx_cos(0, 1)] = 0.5;
        let force = ConstantForce(f);
        let omega = 1.6;
        let initial = SolutionPoint::new(HarmonicVector::zeros(spec), omega);
        let mut ledger = CostLedger::default();
        let out = newton_solve(
            &initial,
            &force,
            &ParametrizationConstraint::FixedOmega(omega),
            &model,
            &scale(),
            &NewtonOptions::default(),
            &mut ledger,
        )
        .unwrap();
        assert_eq!(out.iterations, 1);
        let s = Complex64::new(4.0 - omega * omega, 0.1 * omega);
        let expected = Complex64::new(0.5, 0.0) / s;
        let got = out.point.x_s.complex_coeff(0, 1);
        assert!((got - expected).norm() < 1e-10);
    }

    #[test]
    fn newton_on_stuck_contact_matches_added_stiffness_solve() {
        // one coordinate with a contact element on it; low forcing keeps it stuck
        let k_c = 3.0;
        let model = ReducedModel::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 0.02),
            DMatrix::from_element(1, 1, 1.0),
            vec![ContactElement::from_indices(
                1,
                [0, 0, 0],
                k_c,
                1.0,
                0.5,
                2.0,
            )],
            vec![ModeKind::Normal],
            0,
        )
        .unwrap();
        // the normal row selects the single coordinate; keep forcing small
        let spec = HarmonicSpec::new(1, 1, 1);
        let mut f = HarmonicVector::zeros(spec);
        f.coeffs[spec.idx_cos(0, 1)] = 1e-3;
        let force = ConstantForce(f);
        let omega = 1.1;
        let initial = SolutionPoint::new(HarmonicVector::zeros(spec), omega);
        let mut ledger = CostLedger::default();
        let out = newton_solve(
            &initial,
            &force,
            &ParametrizationConstraint::FixedOmega(omega),
            &model,
            &scale(),
            &NewtonOptions::default(),
            &mut ledger,
        )
        .unwrap();
        assert!(out.iterations <= 3, "took {} iterations", out.iterations);

        // oracle: static offset from preload, fundamental from stuck stiffness.
        // All three selection rows hit coordinate 0 in this wiring, so the
        // stuck stiffness adds k_n + 2 k_t. Static equilibrium:
        // K u0 + k_c (u0 + g0) + 2 k_t u0 = 0.
        let k_stuck = 1.0 + k_c + 2.0 * 1.0;
        let u_static = -k_c * 2.0 / k_stuck;
        assert_relative_eq!(out.point.x_s.mean(0), u_static, epsilon = 1e-8);
        let s = Complex64::new(k_stuck - omega * omega, 0.02 * omega);
        let expected = Complex64::new(1e-3, 0.0) / s;
        let got = out.point.x_s.complex_coeff(0, 1);
        assert!(
            (got - expected).norm() < 1e-10 * expected.norm().max(1.0),
            "got {got}, expected {expected}"
        );
    }

    #[test]
    fn stuck_response_scales_linearly_with_forcing() {
        let model = ReducedModel::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 0.02),
            DMatrix::from_element(1, 1, 1.0),
            vec![ContactElement::from_indices(
                1,
                [0, 0, 0],
                3.0,
                1.0,
                0.5,
                2.0,
            )],
            vec![ModeKind::Normal],
            0,
        )
        .unwrap();
        let spec = HarmonicSpec::new(1, 1, 1);
        let omega = 1.2;
        let solve = |amp: f64| {
            let mut f = HarmonicVector::zeros(spec);
            f.coeffs[spec.idx_cos(0, 1)] = amp;
            let mut ledger = CostLedger::default();
            newton_solve(
                &SolutionPoint::new(HarmonicVector::zeros(spec), omega),
                &ConstantForce(f),
                &ParametrizationConstraint::FixedOmega(omega),
                &model,
                &scale(),
                &NewtonOptions::default(),
                &mut ledger,
            )
            .unwrap()
            .point
        };
        let p1 = solve(1e-4);
        let p3 = solve(3e-4);
        // vibratory part scales by 3, the static offset stays fixed
        assert_relative_eq!(
            3.0 * p1.x_s.coeffs[spec.idx_cos(0, 1)],
            p3.x_s.coeffs[spec.idx_cos(0, 1)],
            max_relative = 1e-8
        );
        assert_relative_eq!(
            3.0 * p1.x_s.coeffs[spec.idx_sin(0, 1)],
            p3.x_s.coeffs[spec.idx_sin(0, 1)],
            max_relative = 1e-8
        );
        assert_relative_eq!(p1.x_s.mean(0), p3.x_s.mean(0), max_relative = 1e-8);
    }

    #[test]
    fn energy_balance_closes_at_converged_point() {
        let model = one_dof(1.0, 0.1, 4.0);
        let spec = HarmonicSpec::new(1, 1, 1);
        let mut f = HarmonicVector::zeros(spec);
        f.coeffs[spec.idx_cos(0, 1)] = 0.5;
        let force = ConstantForce(f);
        let omega = 1.9;
        let mut ledger = CostLedger::default();
        let out = newton_solve(
            &SolutionPoint::new(HarmonicVector::zeros(spec), omega),
            &force,
            &ParametrizationConstraint::FixedOmega(omega),
            &model,
            &scale(),
            &NewtonOptions::default(),
            &mut ledger,
        )
        .unwrap();
        let eb = energy_balance(
            &out.point,
            &out.assembly.force,
            &out.assembly.contact.forces,
            &model,
        );
        assert!(eb.relative_residual() < 1e-6);
        assert!(eb.input > 0.0);
    }
}
