//! The fluid side of the partitioned problem.
//!
//! The harmonic-balance flow solver is represented by a calibrated nonlinear
//! algebraic surrogate: per harmonic `h` the residual reads
//!
//! ```text
//! r_h = i h EO Ω x̂_h + A x̂_h + γ_a N_self(v)_h + γ_x N_cross(w, v)_h - ŝ_h
//! ```
//!
//! where `A` is the steady operator, `ŝ` collects the wake source (harmonic
//! 1) and the mesh-motion sources, `w` is the wake-induced part of the state
//! (the linear wake response) and `v = x - w` the vibration-induced part.
//! The cubic self term produces an amplitude-dependent aerodynamic force,
//! the bilinear cross term breaks the superposition of wake- and
//! vibration-induced flow; with `γ_a = γ_x = 0` the surrogate is exactly
//! linear. Nonlinear terms are evaluated with the alternating frequency-time
//! scheme at the fluid truncation order.
//!
//! The solver is a pseudo-time march, `x ← x - (I/Δτ + A)⁻¹ r(x)`, using the
//! frozen Jacobian of the steady operator only, mirroring a first-order
//! backward Euler scheme preconditioned by the steady solver.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::AeroError;
use crate::harmonics::{project, synthesize_with, HarmonicSpec, HarmonicVector, TrigTable};
use crate::model::ReducedModel;
use crate::solver::StructuralForceModel;
use crate::stats::CostLedger;

/// Mesh deformation basis: base field plus one field per component mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshDeformationBasis {
    pub chi_0: DVector<f64>,
    pub modes: Vec<DVector<f64>>,
}

impl MeshDeformationBasis {
    pub fn validate(&self) -> Result<(), AeroError> {
        let n = self.chi_0.len();
        if n < 1 {
            return Err(AeroError::DimensionMismatch(
                "mesh basis needs at least one field entry".into(),
            ));
        }
        for (m, field) in self.modes.iter().enumerate() {
            if field.len() != n {
                return Err(AeroError::DimensionMismatch(format!(
                    "mode field {m} has length {}, expected {n}",
                    field.len()
                )));
            }
        }
        Ok(())
    }

    pub fn field_len(&self) -> usize {
        self.chi_0.len()
    }
}

/// Superposes the per-mode deformation fields: `χ̂_h = Σ_m χ_m (û_m)_h`,
/// plus the base field on harmonic zero. Structural harmonics beyond the
/// fluid truncation order are dropped, missing ones padded with zero.
pub fn deform_mesh(
    x_s: &HarmonicVector,
    basis: &MeshDeformationBasis,
    order: usize,
) -> HarmonicVector {
    let n_chi = basis.field_len();
    let spec = HarmonicSpec::new(n_chi, order, x_s.spec.engine_order);
    let per = spec.coeffs_per_coord();
    let xs = x_s.resize_order(order);
    let per_s = xs.spec.coeffs_per_coord();
    let mut chi = HarmonicVector::zeros(spec);
    for i in 0..n_chi {
        chi.coeffs[i * per] = basis.chi_0[i];
        for (m, field) in basis.modes.iter().enumerate() {
            let f = field[i];
            if f != 0.0 {
                for c in 0..per {
                    chi.coeffs[i * per + c] += f * xs.coeffs[m * per_s + c];
                }
            }
        }
    }
    chi
}

/// Pseudo-time marching options.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PseudoTimeOptions {
    /// Pseudo-time step; `None` uses `0.5 / ρ(A)`.
    pub dtau: Option<f64>,
    /// Optional geometric ramp `(growth factor, maximum Δτ)`.
    pub ramp: Option<(f64, f64)>,
    /// Residual tolerance relative to the source norm.
    pub eps_rel: f64,
    pub max_steps: usize,
}

impl Default for PseudoTimeOptions {
    fn default() -> Self {
        Self {
            dtau: None,
            ramp: None,
            eps_rel: 1e-9,
            max_steps: 50_000,
        }
    }
}

/// Nonlinear algebraic surrogate of the fluid Harmonic Balance system.
#[derive(Debug, Clone)]
pub struct AeroSurrogate {
    /// Steady operator with strictly positive-real spectrum (built from the
    /// prescribed stable decay rates).
    pub steady_op: DMatrix<f64>,
    /// Spectral radius of the steady operator (cached for Δτ defaults).
    pub spectral_radius: f64,
    /// Wake source on harmonic 1, cos/sin parts.
    pub wake_cos: DVector<f64>,
    pub wake_sin: DVector<f64>,
    /// Map from mesh-field harmonics to source terms; `None` is identity
    /// (requires matching dimensions).
    pub coupling_in: Option<DMatrix<f64>>,
    /// Map from fluid state harmonics to generalized-force harmonics.
    pub force_out: DMatrix<f64>,
    /// Cubic self-nonlinearity coefficient (amplitude dependence).
    pub gamma_self: f64,
    /// Bilinear wake-vibration interaction coefficient (superposition
    /// breaking).
    pub gamma_cross: f64,
    /// Fluid truncation order.
    pub order: usize,
    pub engine_order: u32,
    /// AFT samples for the nonlinear terms; `None` uses the spec default.
    pub n_samples: Option<usize>,
}

impl AeroSurrogate {
    pub fn n_state(&self) -> usize {
        self.steady_op.nrows()
    }

    /// Builds the steady operator from a list of stable eigenvalues
    /// `(re, im)` with `re < 0`; `im ≠ 0` denotes a conjugate pair occupying
    /// two states. The operator of the residual is the negated block form,
    /// so its spectrum has positive real parts and the pseudo-time march
    /// contracts.
    pub fn steady_op_from_spectrum(
        eigenvalues: &[(f64, f64)],
        n_state: usize,
        seed: Option<u64>,
    ) -> Result<DMatrix<f64>, AeroError> {
        let mut blocks: Vec<DMatrix<f64>> = Vec::new();
        let mut covered = 0usize;
        for &(re, im) in eigenvalues {
            if re >= 0.0 {
                return Err(AeroError::UnstableSpectrum(re));
            }
            if im == 0.0 {
                blocks.push(DMatrix::from_element(1, 1, -re));
                covered += 1;
            } else {
                // conjugate pair of the stable mode; negate the real part
                let b = DMatrix::from_row_slice(2, 2, &[-re, im, -im, -re]);
                blocks.push(b);
                covered += 2;
            }
        }
        if covered != n_state {
            return Err(AeroError::SpectrumSizeMismatch {
                covered,
                expected: n_state,
            });
        }
        let mut a = DMatrix::zeros(n_state, n_state);
        let mut at = 0;
        for b in blocks {
            let k = b.nrows();
            a.view_mut((at, at), (k, k)).copy_from(&b);
            at += k;
        }
        if let Some(seed) = seed {
            // seeded orthogonal similarity keeps the spectrum, mixes states
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let raw = DMatrix::from_fn(n_state, n_state, |_, _| rng.random::<f64>() - 0.5);
            let q = raw.qr().q();
            a = &q * a * q.transpose();
        }
        Ok(a)
    }

    pub fn validate(&self) -> Result<(), AeroError> {
        let n = self.n_state();
        if self.wake_cos.len() != n || self.wake_sin.len() != n {
            return Err(AeroError::DimensionMismatch(format!(
                "wake source has length {}/{}, expected {n}",
                self.wake_cos.len(),
                self.wake_sin.len()
            )));
        }
        if self.force_out.ncols() != n {
            return Err(AeroError::DimensionMismatch(format!(
                "force_out has {} columns, expected {n}",
                self.force_out.ncols()
            )));
        }
        if let Some(c) = &self.coupling_in {
            if c.nrows() != n {
                return Err(AeroError::DimensionMismatch(format!(
                    "coupling_in has {} rows, expected {n}",
                    c.nrows()
                )));
            }
        }
        Ok(())
    }

    pub fn fluid_spec(&self) -> HarmonicSpec {
        HarmonicSpec::new(self.n_state(), self.order, self.engine_order)
    }

    /// True when both nonlinearity coefficients vanish.
    pub fn is_linear(&self) -> bool {
        self.gamma_self == 0.0 && self.gamma_cross == 0.0
    }
}

/// Converged fluid solution.
#[derive(Debug, Clone)]
pub struct FluidSolution {
    pub x_a: HarmonicVector,
    /// Generalized aerodynamic force in the structural convention.
    pub f_hat: HarmonicVector,
    pub pseudo_steps: usize,
    pub residual_history: Vec<f64>,
}

fn gather_part(hv: &HarmonicVector, part: usize) -> DVector<f64> {
    let per = hv.spec.coeffs_per_coord();
    DVector::from_fn(hv.spec.n_coords, |i, _| hv.coeffs[i * per + part])
}

fn scatter_part(hv: &mut HarmonicVector, part: usize, v: &DVector<f64>) {
    let per = hv.spec.coeffs_per_coord();
    for i in 0..hv.spec.n_coords {
        hv.coeffs[i * per + part] = v[i];
    }
}

/// Source terms of one solve: mesh-motion sources per harmonic plus the
/// wake channel scaling.
struct SourceAssembly {
    /// Source coefficients in the fluid state space.
    s: HarmonicVector,
}

fn assemble_sources(
    surrogate: &AeroSurrogate,
    chi_hat: Option<&HarmonicVector>,
    wake_scale: f64,
) -> Result<SourceAssembly, AeroError> {
    let spec = surrogate.fluid_spec();
    let per = spec.coeffs_per_coord();
    let n = spec.n_coords;
    let mut s = HarmonicVector::zeros(spec);
    if let Some(chi) = chi_hat {
        let per_chi = chi.spec.coeffs_per_coord();
        debug_assert_eq!(per_chi, per, "mesh field must be at the fluid order");
        match &surrogate.coupling_in {
            Some(c) => {
                if c.ncols() != chi.spec.n_coords {
                    return Err(AeroError::DimensionMismatch(format!(
                        "coupling_in has {} columns, mesh field has {}",
                        c.ncols(),
                        chi.spec.n_coords
                    )));
                }
                for part in 0..per {
                    let chi_part = gather_part(chi, part);
                    let src = c * chi_part;
                    scatter_part(&mut s, part, &src);
                }
            }
            None => {
                if chi.spec.n_coords != n {
                    return Err(AeroError::DimensionMismatch(format!(
                        "identity coupling needs a mesh field of length {n}, got {}",
                        chi.spec.n_coords
                    )));
                }
                s.coeffs.copy_from(&chi.coeffs);
            }
        }
    }
    if wake_scale != 0.0 {
        for i in 0..n {
            s.coeffs[i * per + 1] += wake_scale * surrogate.wake_cos[i];
            s.coeffs[i * per + 2] += wake_scale * surrogate.wake_sin[i];
        }
    }
    Ok(SourceAssembly { s })
}

/// Direct linear solve of the surrogate without the nonlinear terms,
/// harmonic by harmonic in complex arithmetic.
fn linear_solve(
    surrogate: &AeroSurrogate,
    omega: f64,
    sources: &HarmonicVector,
) -> HarmonicVector {
    let spec = surrogate.fluid_spec();
    let n = spec.n_coords;
    let mut out = HarmonicVector::zeros(spec);
    for h in 0..=spec.order {
        let w = h as f64 * spec.engine_order as f64 * omega;
        let m = DMatrix::from_fn(n, n, |i, j| {
            Complex64::new(surrogate.steady_op[(i, j)], if i == j { w } else { 0.0 })
        });
        let rhs = DVector::from_fn(n, |i, _| sources.complex_coeff(i, h));
        let lu = m.lu();
        let sol = lu.solve(&rhs).expect("steady operator plus iω is regular");
        for i in 0..n {
            out.set_complex_coeff(i, h, sol[i]);
        }
    }
    out
}

/// Evaluates the nonlinear terms by the AFT scheme: the cubic self term
/// `‖v‖² v` and the elementwise cross term `w ⊙ v` with `v = x - w`.
fn nonlinear_terms(
    surrogate: &AeroSurrogate,
    x: &HarmonicVector,
    wake_response: &HarmonicVector,
    trig: &TrigTable,
) -> HarmonicVector {
    let spec = surrogate.fluid_spec();
    if surrogate.is_linear() {
        return HarmonicVector::zeros(spec);
    }
    let n = spec.n_coords;
    let n_t = trig.n_samples;
    let v = HarmonicVector {
        spec,
        coeffs: &x.coeffs - &wake_response.coeffs,
    };
    let v_t = synthesize_with(&v, trig);
    let w_t = synthesize_with(wake_response, trig);
    let mut q = DVector::zeros(n * n_t);
    for k in 0..n_t {
        let mut norm2 = 0.0;
        for i in 0..n {
            let vi = v_t.values[i * n_t + k];
            norm2 += vi * vi;
        }
        for i in 0..n {
            let vi = v_t.values[i * n_t + k];
            let wi = w_t.values[i * n_t + k];
            q[i * n_t + k] = surrogate.gamma_self * norm2 * vi + surrogate.gamma_cross * wi * vi;
        }
    }
    let ts = crate::harmonics::TimeSeries {
        spec,
        n_samples: n_t,
        values: q,
    };
    project(&ts, spec.order).expect("sample count fixed above aliasing bound")
}

/// Residual of the fluid Harmonic Balance system in the real convention.
fn fluid_residual(
    surrogate: &AeroSurrogate,
    omega: f64,
    x: &HarmonicVector,
    sources: &HarmonicVector,
    wake_response: &HarmonicVector,
    trig: &TrigTable,
) -> HarmonicVector {
    let spec = surrogate.fluid_spec();
    let mut r = nonlinear_terms(surrogate, x, wake_response, trig);
    r.coeffs -= &sources.coeffs;
    // A x per part, iω coupling between the a/b parts
    let a0 = gather_part(x, 0);
    let r0 = &surrogate.steady_op * a0;
    let old = gather_part(&r, 0) + r0;
    scatter_part(&mut r, 0, &old);
    for h in 1..=spec.order {
        let w = h as f64 * spec.engine_order as f64 * omega;
        let (pa, pb) = (2 * h - 1, 2 * h);
        let xa = gather_part(x, pa);
        let xb = gather_part(x, pb);
        let ra = gather_part(&r, pa) + &surrogate.steady_op * &xa + &xb * w;
        let rb = gather_part(&r, pb) + &surrogate.steady_op * &xb - &xa * w;
        scatter_part(&mut r, pa, &ra);
        scatter_part(&mut r, pb, &rb);
    }
    r
}

/// Solves the surrogate for the fluid state harmonics with the frozen-
/// Jacobian pseudo-time march.
pub fn pseudo_time_solve(
    surrogate: &AeroSurrogate,
    omega: f64,
    chi_hat: Option<&HarmonicVector>,
    wake_scale: f64,
    init: Option<&HarmonicVector>,
    opts: &PseudoTimeOptions,
    ledger: &mut CostLedger,
) -> Result<HarmonicVector, AeroError> {
    surrogate.validate()?;
    let spec = surrogate.fluid_spec();
    let sources = assemble_sources(surrogate, chi_hat, wake_scale)?.s;
    ledger.fluid_solves += 1;

    // wake-induced linear part; defines the vibration-induced remainder
    let wake_sources = assemble_sources(surrogate, None, wake_scale)?.s;
    let wake_response = if wake_scale != 0.0 {
        linear_solve(surrogate, omega, &wake_sources)
    } else {
        HarmonicVector::zeros(spec)
    };

    let n_t = surrogate
        .n_samples
        .unwrap_or_else(|| spec.default_samples());
    let trig = TrigTable::new(spec.order, n_t);

    let mut x = match init {
        Some(x0) if x0.spec == spec => x0.clone(),
        _ => HarmonicVector::zeros(spec),
    };

    let source_norm = sources.coeffs.norm().max(f64::MIN_POSITIVE);
    let target = opts.eps_rel * source_norm;
    let mut dtau = opts
        .dtau
        .unwrap_or(0.5 / surrogate.spectral_radius.max(f64::MIN_POSITIVE));

    let n = spec.n_coords;
    let per = spec.coeffs_per_coord();
    let factorize = |dtau: f64| {
        let m = DMatrix::from_fn(n, n, |i, j| {
            surrogate.steady_op[(i, j)] + if i == j { 1.0 / dtau } else { 0.0 }
        });
        m.lu()
    };
    let mut lu = factorize(dtau);

    let mut history = Vec::new();
    for step in 0..opts.max_steps {
        let r = fluid_residual(surrogate, omega, &x, &sources, &wake_response, &trig);
        let norm = r.coeffs.norm();
        history.push(norm);
        if norm <= target {
            ledger.pseudo_time_steps += step as u64;
            return Ok(x);
        }
        // one implicit Euler step preconditioned with the steady operator
        let mut parts = DMatrix::zeros(n, per);
        for p in 0..per {
            parts.set_column(p, &gather_part(&r, p));
        }
        let delta = lu.solve(&parts).expect("shifted steady operator is regular");
        for p in 0..per {
            let xp = gather_part(&x, p) - delta.column(p);
            scatter_part(&mut x, p, &xp);
        }
        if let Some((factor, max_dtau)) = opts.ramp {
            let next = (dtau * factor).min(max_dtau);
            if next != dtau {
                dtau = next;
                lu = factorize(dtau);
            }
        }
    }
    ledger.pseudo_time_steps += opts.max_steps as u64;
    Err(AeroError::PseudoTimeNoConvergence {
        residual: *history.last().unwrap_or(&f64::NAN),
        steps: opts.max_steps,
        target,
        history,
    })
}

/// Projects fluid state harmonics onto the generalized aerodynamic forces,
/// re-expanded to the structural truncation order.
pub fn aero_forces(
    x_a: &HarmonicVector,
    surrogate: &AeroSurrogate,
    struct_spec: HarmonicSpec,
) -> HarmonicVector {
    let per_a = x_a.spec.coeffs_per_coord();
    let per_s = struct_spec.coeffs_per_coord();
    let mut f = HarmonicVector::zeros(struct_spec);
    let p = &surrogate.force_out;
    debug_assert_eq!(p.nrows(), struct_spec.n_coords);
    for part_s in 0..per_s {
        if part_s >= per_a {
            continue; // structural harmonics beyond the fluid order stay zero
        }
        let xa = gather_part(x_a, part_s);
        let fp = p * xa;
        for i in 0..struct_spec.n_coords {
            f.coeffs[i * per_s + part_s] = fp[i];
        }
    }
    f
}

/// Ties a surrogate to its mesh basis and the structural spec: the operator
/// `F` of the coupling loop (mesh deformation, pseudo-time solve, force
/// projection).
#[derive(Debug, Clone)]
pub struct AeroContext {
    pub surrogate: AeroSurrogate,
    pub basis: MeshDeformationBasis,
    pub struct_spec: HarmonicSpec,
    pub pt_opts: PseudoTimeOptions,
}

impl AeroContext {
    pub fn new(
        surrogate: AeroSurrogate,
        basis: MeshDeformationBasis,
        struct_spec: HarmonicSpec,
        pt_opts: PseudoTimeOptions,
    ) -> Result<Self, AeroError> {
        surrogate.validate()?;
        basis.validate()?;
        if basis.modes.len() != struct_spec.n_coords {
            return Err(AeroError::DimensionMismatch(format!(
                "mesh basis has {} mode fields, structural model has {}",
                basis.modes.len(),
                struct_spec.n_coords
            )));
        }
        Ok(Self {
            surrogate,
            basis,
            struct_spec,
            pt_opts,
        })
    }

    /// One fluid evaluation: deform the mesh at `x_s`, solve, project forces.
    pub fn evaluate(
        &self,
        x_s: &HarmonicVector,
        omega: f64,
        wake_scale: f64,
        init: Option<&HarmonicVector>,
        ledger: &mut CostLedger,
    ) -> Result<FluidSolution, AeroError> {
        let chi = deform_mesh(x_s, &self.basis, self.surrogate.order);
        let steps_before = ledger.pseudo_time_steps;
        let x_a = pseudo_time_solve(
            &self.surrogate,
            omega,
            Some(&chi),
            wake_scale,
            init,
            &self.pt_opts,
            ledger,
        )?;
        let f_hat = aero_forces(&x_a, &self.surrogate, self.struct_spec);
        Ok(FluidSolution {
            f_hat,
            pseudo_steps: (ledger.pseudo_time_steps - steps_before) as usize,
            residual_history: Vec::new(),
            x_a,
        })
    }

    /// Wake-only run at the nominal rotor speed (`x_s = 0`).
    pub fn wake_run(&self, omega: f64, ledger: &mut CostLedger) -> Result<FluidSolution, AeroError> {
        let zero = HarmonicVector::zeros(self.struct_spec);
        self.evaluate(&zero, omega, 1.0, None, ledger)
    }
}

/// Aerodynamic influence coefficient model variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AicVariant {
    Single,
    Matrix,
}

/// Linearized aerodynamic force model `f̂*_1 = f̂_wake,1 + G_a û_1`; all
/// other harmonics are zero.
#[derive(Debug, Clone)]
pub struct AicModel {
    pub variant: AicVariant,
    pub g: DMatrix<Complex64>,
    pub f_wake_1: DVector<Complex64>,
    /// Scalar coefficient of the single-AIC construction.
    pub alpha: Option<Complex64>,
    /// Mass-normalized resonant mode of the single-AIC construction.
    pub phi: Option<DVector<f64>>,
    pub spec: HarmonicSpec,
}

impl StructuralForceModel for AicModel {
    fn force(&self, x_s: &HarmonicVector) -> HarmonicVector {
        let spec = self.spec;
        let mut f = HarmonicVector::zeros(spec);
        let u1: Vec<Complex64> = (0..spec.n_coords)
            .map(|j| x_s.complex_coeff(j, 1))
            .collect();
        for i in 0..spec.n_coords {
            let mut acc = self.f_wake_1[i];
            for (j, uj) in u1.iter().enumerate() {
                acc += self.g[(i, j)] * uj;
            }
            f.set_complex_coeff(i, 1, acc);
        }
        f
    }

    fn force_jacobian(&self, _x_s: &HarmonicVector) -> DMatrix<f64> {
        let spec = self.spec;
        let n = spec.len();
        let mut jac = DMatrix::zeros(n, n);
        for i in 0..spec.n_coords {
            for j in 0..spec.n_coords {
                let z = self.g[(i, j)];
                let (ia, ib) = (spec.idx_cos(i, 1), spec.idx_sin(i, 1));
                let (ja, jb) = (spec.idx_cos(j, 1), spec.idx_sin(j, 1));
                jac[(ia, ja)] = z.re;
                jac[(ia, jb)] = z.im;
                jac[(ib, ja)] = -z.im;
                jac[(ib, jb)] = z.re;
            }
        }
        jac
    }
}

/// Identifies the full influence coefficient matrix: one vibration-only run
/// per component mode at the identification amplitude, plus the wake run.
pub fn build_aic_matrix(
    ctx: &AeroContext,
    omega: f64,
    id_amplitude: f64,
    ledger: &mut CostLedger,
) -> Result<AicModel, AeroError> {
    let spec = ctx.struct_spec;
    let m = spec.n_coords;
    let wake = ctx.wake_run(omega, ledger).map_err(|e| AeroError::SubRun {
        label: "wake",
        source: Box::new(e),
    })?;
    let f_wake_1 = DVector::from_fn(m, |i, _| wake.f_hat.complex_coeff(i, 1));
    let mut g = DMatrix::zeros(m, m);
    for mode in 0..m {
        let mut x = HarmonicVector::zeros(spec);
        x.coeffs[spec.idx_cos(mode, 1)] = id_amplitude;
        let run = ctx
            .evaluate(&x, omega, 0.0, None, ledger)
            .map_err(|e| AeroError::IdentificationRun {
                mode,
                source: Box::new(e),
            })?;
        for i in 0..m {
            g[(i, mode)] = run.f_hat.complex_coeff(i, 1) / id_amplitude;
        }
    }
    Ok(AicModel {
        variant: AicVariant::Matrix,
        g,
        f_wake_1,
        alpha: None,
        phi: None,
        spec,
    })
}

/// Identifies the single-coefficient model: one run with the structure
/// vibrating in the mass-normalized resonant mode `φ`, projected back onto
/// `φ`, then expanded to the consistent rank-one matrix
/// `G = (Mφ) α (Mφ)^H`.
pub fn build_single_aic(
    ctx: &AeroContext,
    model: &ReducedModel,
    phi: &DVector<f64>,
    omega: f64,
    id_amplitude: f64,
    ledger: &mut CostLedger,
) -> Result<AicModel, AeroError> {
    let spec = ctx.struct_spec;
    let m = spec.n_coords;
    let wake = ctx.wake_run(omega, ledger).map_err(|e| AeroError::SubRun {
        label: "wake",
        source: Box::new(e),
    })?;
    let f_wake_1 = DVector::from_fn(m, |i, _| wake.f_hat.complex_coeff(i, 1));

    let mut x = HarmonicVector::zeros(spec);
    for j in 0..m {
        x.coeffs[spec.idx_cos(j, 1)] = id_amplitude * phi[j];
    }
    let run = ctx
        .evaluate(&x, omega, 0.0, None, ledger)
        .map_err(|e| AeroError::SubRun {
            label: "resonant mode",
            source: Box::new(e),
        })?;
    let mut alpha = Complex64::new(0.0, 0.0);
    for j in 0..m {
        alpha += Complex64::new(phi[j], 0.0) * run.f_hat.complex_coeff(j, 1);
    }
    alpha /= id_amplitude;

    let m_phi = model.mass_matrix() * phi;
    let g = DMatrix::from_fn(m, m, |i, j| alpha * m_phi[i] * m_phi[j]);
    Ok(AicModel {
        variant: AicVariant::Single,
        g,
        f_wake_1,
        alpha: Some(alpha),
        phi: Some(phi.clone()),
        spec,
    })
}

/// Modal aerodynamic stiffness ratio `s_a = (eᵀ f̂₁)/(eᵀ û₁)` over a list of
/// vibration amplitudes of the resonant fixed-interface mode, normalized by
/// the value at the smallest amplitude.
pub fn amplitude_ratio_sweep(
    ctx: &AeroContext,
    model: &ReducedModel,
    omega: f64,
    amplitudes: &[f64],
    ledger: &mut CostLedger,
) -> Result<Vec<f64>, AeroError> {
    let spec = ctx.struct_spec;
    let coord = model.resonant_mode_index;
    let mut raw = Vec::with_capacity(amplitudes.len());
    for &amp in amplitudes {
        assert!(amp > 0.0, "amplitudes must be positive");
        let mut x = HarmonicVector::zeros(spec);
        x.coeffs[spec.idx_cos(coord, 1)] = amp;
        let run = ctx.evaluate(&x, omega, 0.0, None, ledger)?;
        let s_a = run.f_hat.complex_coeff(coord, 1) / x.complex_coeff(coord, 1);
        raw.push(s_a.norm());
    }
    let (i_min, _) = amplitudes
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .expect("amplitude list must be nonempty");
    let reference = raw[i_min].max(f64::MIN_POSITIVE);
    Ok(raw.into_iter().map(|v| v / reference).collect())
}

/// Superposition check at a converged point: coupled (wake + vibration)
/// solve against the sum of a wake-only and a vibration-only solve.
/// Returns `Δf̂ = f̂ - (f̂_wake + f̂_vib)` and `‖Δf̂₁‖/‖f̂₁‖`.
pub fn superposition_deviation(
    ctx: &AeroContext,
    x_s: &HarmonicVector,
    omega: f64,
    ledger: &mut CostLedger,
) -> Result<(HarmonicVector, f64), AeroError> {
    let label = |label: &'static str| {
        move |e: AeroError| AeroError::SubRun {
            label,
            source: Box::new(e),
        }
    };
    let coupled = ctx
        .evaluate(x_s, omega, 1.0, None, ledger)
        .map_err(label("coupled"))?;
    let wake = ctx.wake_run(omega, ledger).map_err(label("wake-only"))?;
    let vib = ctx
        .evaluate(x_s, omega, 0.0, None, ledger)
        .map_err(label("vibration-only"))?;
    let spec = ctx.struct_spec;
    let delta = HarmonicVector {
        spec,
        coeffs: &coupled.f_hat.coeffs - &wake.f_hat.coeffs - &vib.f_hat.coeffs,
    };
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..spec.n_coords {
        num += delta.complex_coeff(j, 1).norm_sqr();
        den += coupled.f_hat.complex_coeff(j, 1).norm_sqr();
    }
    let rel = (num / den.max(f64::MIN_POSITIVE)).sqrt();
    Ok((delta, rel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::RngCore;

    fn small_surrogate(gamma_self: f64, gamma_cross: f64) -> AeroSurrogate {
        let n = 6;
        let eigs = [(-8.0, 0.0), (-10.0, 3.0), (-14.0, 5.0), (-20.0, 0.0)];
        let a = AeroSurrogate::steady_op_from_spectrum(&eigs, n, Some(7)).unwrap();
        let mut wake_cos = DVector::zeros(n);
        let mut wake_sin = DVector::zeros(n);
        wake_cos[0] = 1.0;
        wake_cos[3] = 0.4;
        wake_sin[1] = -0.7;
        let force_out = DMatrix::from_fn(2, n, |i, j| ((i + 2 * j) as f64 * 0.37).sin());
        AeroSurrogate {
            spectral_radius: 21.0,
            steady_op: a,
            wake_cos,
            wake_sin,
            coupling_in: None,
            force_out,
            gamma_self,
            gamma_cross,
            order: 2,
            engine_order: 2,
            n_samples: None,
        }
    }

    fn small_basis(n_chi: usize, m: usize) -> MeshDeformationBasis {
        MeshDeformationBasis {
            chi_0: DVector::zeros(n_chi),
            modes: (0..m)
                .map(|k| DVector::from_fn(n_chi, |i, _| ((i + k) as f64 * 0.61).cos()))
                .collect(),
        }
    }

    fn ctx(gs: f64, gx: f64) -> AeroContext {
        let s = small_surrogate(gs, gx);
        let basis = small_basis(s.n_state(), 2);
        AeroContext::new(
            s,
            basis,
            HarmonicSpec::new(2, 1, 2),
            PseudoTimeOptions {
                eps_rel: 1e-11,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn deform_mesh_zero_motion_returns_base_field() {
        let basis = MeshDeformationBasis {
            chi_0: DVector::from_vec(vec![1.0, 2.0, 3.0]),
            modes: vec![DVector::from_vec(vec![0.1, 0.2, 0.3])],
        };
        let x = HarmonicVector::zeros(HarmonicSpec::new(1, 1, 1));
        let chi = deform_mesh(&x, &basis, 2);
        for i in 0..3 {
            assert_relative_eq!(chi.mean(i), basis.chi_0[i]);
            assert_relative_eq!(chi.vibration_magnitude(i), 0.0);
        }
    }

    #[test]
    fn deform_mesh_static_unit_displacement_adds_mode_field() {
        let basis = MeshDeformationBasis {
            chi_0: DVector::from_vec(vec![1.0, 2.0]),
            modes: vec![
                DVector::from_vec(vec![0.5, -0.5]),
                DVector::from_vec(vec![0.25, 4.0]),
            ],
        };
        let spec = HarmonicSpec::new(2, 1, 1);
        let mut x = HarmonicVector::zeros(spec);
        x.set_mean(1, 1.0);
        let chi = deform_mesh(&x, &basis, 1);
        assert_relative_eq!(chi.mean(0), 1.25);
        assert_relative_eq!(chi.mean(1), 6.0);
    }

    #[test]
    fn deform_mesh_matches_direct_summation() {
        let basis = small_basis(5, 3);
        let spec = HarmonicSpec::new(3, 2, 1);
        let mut x = HarmonicVector::zeros(spec);
        x.coeffs[spec.idx_cos(0, 1)] = 0.5;
        x.coeffs[spec.idx_sin(2, 2)] = -0.3;
        let chi = deform_mesh(&x, &basis, 2);
        for i in 0..5 {
            let mut expect = 0.0;
            for m in 0..3 {
                expect += basis.modes[m][i] * x.coeffs[spec.idx_cos(m, 1)];
            }
            assert_relative_eq!(
                chi.coeffs[chi.spec.idx_cos(i, 1)],
                expect,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn linear_pseudo_time_matches_direct_solve() {
        let s = small_surrogate(0.0, 0.0);
        let mut ledger = CostLedger::default();
        let basis = small_basis(s.n_state(), 2);
        let spec = HarmonicSpec::new(2, 1, 2);
        let mut x_s = HarmonicVector::zeros(spec);
        x_s.coeffs[spec.idx_cos(0, 1)] = 0.3;
        let chi = deform_mesh(&x_s, &basis, s.order);
        let omega = 0.8;
        let x = pseudo_time_solve(
            &s,
            omega,
            Some(&chi),
            1.0,
            None,
            &PseudoTimeOptions {
                eps_rel: 1e-12,
                ..Default::default()
            },
            &mut ledger,
        )
        .unwrap();
        let sources = assemble_sources(&s, Some(&chi), 1.0).unwrap().s;
        let direct = linear_solve(&s, omega, &sources);
        let err = (&x.coeffs - &direct.coeffs).norm();
        assert!(err < 1e-9 * direct.coeffs.norm().max(1.0), "err {err:.3e}");
    }

    #[test]
    fn unforced_state_stays_zero() {
        let s = small_surrogate(0.5, 0.5);
        let mut ledger = CostLedger::default();
        let x = pseudo_time_solve(
            &s,
            1.0,
            None,
            0.0,
            None,
            &PseudoTimeOptions::default(),
            &mut ledger,
        )
        .unwrap();
        assert_eq!(x.coeffs.norm(), 0.0);
    }

    #[test]
    fn residual_decays_monotonically_after_transient() {
        let s = small_surrogate(0.0, 0.0);
        let mut ledger = CostLedger::default();
        // drive and capture the history through the error path: max_steps
        // too small to converge
        let err = pseudo_time_solve(
            &s,
            0.9,
            None,
            1.0,
            None,
            &PseudoTimeOptions {
                eps_rel: 1e-300,
                max_steps: 60,
                ..Default::default()
            },
            &mut ledger,
        )
        .unwrap_err();
        let AeroError::PseudoTimeNoConvergence { history, .. } = err else {
            panic!("expected non-convergence with tiny tolerance");
        };
        for k in 11..history.len() {
            assert!(
                history[k] <= history[k - 1] * (1.0 + 1e-12),
                "residual grew at step {k}"
            );
        }
    }

    #[test]
    fn cubic_term_makes_force_ratio_amplitude_dependent() {
        let ctx_nl = ctx(0.05, 0.0);
        let ctx_lin = ctx(0.0, 0.0);
        let model_spec = ctx_nl.struct_spec;
        let run_ratio = |c: &AeroContext, amp: f64| {
            let mut x = HarmonicVector::zeros(model_spec);
            x.coeffs[model_spec.idx_cos(1, 1)] = amp;
            let mut ledger = CostLedger::default();
            let run = c.evaluate(&x, 0.9, 0.0, None, &mut ledger).unwrap();
            (run.f_hat.complex_coeff(1, 1) / x.complex_coeff(1, 1)).norm()
        };
        let lin_lo = run_ratio(&ctx_lin, 0.05);
        let lin_hi = run_ratio(&ctx_lin, 0.1);
        assert_relative_eq!(lin_lo, lin_hi, max_relative = 1e-10);
        let nl_lo = run_ratio(&ctx_nl, 0.05);
        let nl_hi = run_ratio(&ctx_nl, 0.1);
        assert!((nl_hi - nl_lo).abs() > 1e-6 * nl_lo);
    }

    /// Dense Newton solve of the surrogate residual with a finite-difference
    /// Jacobian over the full real state; cross-checks the pseudo-time path.
    fn dense_newton_oracle(
        s: &AeroSurrogate,
        omega: f64,
        chi: Option<&HarmonicVector>,
        wake: f64,
    ) -> HarmonicVector {
        let spec = s.fluid_spec();
        let sources = assemble_sources(s, chi, wake).unwrap().s;
        let wake_sources = assemble_sources(s, None, wake).unwrap().s;
        let wake_response = if wake != 0.0 {
            linear_solve(s, omega, &wake_sources)
        } else {
            HarmonicVector::zeros(spec)
        };
        let trig = TrigTable::new(spec.order, spec.default_samples());
        let mut x = HarmonicVector::zeros(spec);
        let n = spec.len();
        for _ in 0..50 {
            let r = fluid_residual(s, omega, &x, &sources, &wake_response, &trig);
            if r.coeffs.norm() < 1e-12 * sources.coeffs.norm().max(1.0) {
                break;
            }
            let mut jac = DMatrix::zeros(n, n);
            let eps = 1e-7;
            for col in 0..n {
                let mut xp = x.clone();
                xp.coeffs[col] += eps;
                let rp = fluid_residual(s, omega, &xp, &sources, &wake_response, &trig);
                let dcol = (&rp.coeffs - &r.coeffs) / eps;
                jac.set_column(col, &dcol);
            }
            let delta = jac.lu().solve(&r.coeffs).unwrap();
            x.coeffs -= delta;
        }
        x
    }

    #[test]
    fn pseudo_time_matches_dense_newton_on_nonlinear_surrogate() {
        let s = small_surrogate(0.08, 0.05);
        let basis = small_basis(s.n_state(), 2);
        let spec = HarmonicSpec::new(2, 1, 2);
        let mut x_s = HarmonicVector::zeros(spec);
        x_s.coeffs[spec.idx_cos(0, 1)] = 0.4;
        let chi = deform_mesh(&x_s, &basis, s.order);
        let omega = 0.7;
        let mut ledger = CostLedger::default();
        let x = pseudo_time_solve(
            &s,
            omega,
            Some(&chi),
            1.0,
            None,
            &PseudoTimeOptions {
                eps_rel: 1e-12,
                ..Default::default()
            },
            &mut ledger,
        )
        .unwrap();
        let oracle = dense_newton_oracle(&s, omega, Some(&chi), 1.0);
        let err = (&x.coeffs - &oracle.coeffs).norm() / oracle.coeffs.norm();
        assert!(err < 1e-8, "relative gap {err:.3e}");
    }

    #[test]
    fn forces_match_matrix_product_oracle() {
        let s = small_surrogate(0.0, 0.0);
        let spec_s = HarmonicSpec::new(2, 2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let fluid_spec = s.fluid_spec();
        let mut x_a = HarmonicVector::zeros(fluid_spec);
        for c in x_a.coeffs.iter_mut() {
            *c = rng.random::<f64>() - 0.5;
        }
        let f = aero_forces(&x_a, &s, spec_s);
        for h in 0..=2usize {
            for i in 0..2 {
                let mut expect = Complex64::new(0.0, 0.0);
                for j in 0..s.n_state() {
                    expect += Complex64::new(s.force_out[(i, j)], 0.0) * x_a.complex_coeff(j, h);
                }
                let got = f.complex_coeff(i, h);
                assert!((got - expect).norm() < 1e-12);
            }
        }
        // zero state maps to zero force
        let zero = aero_forces(&HarmonicVector::zeros(fluid_spec), &s, spec_s);
        assert_eq!(zero.coeffs.norm(), 0.0);
    }

    #[test]
    fn aic_matrix_reproduces_linear_surrogate() {
        let c = ctx(0.0, 0.0);
        let mut ledger = CostLedger::default();
        let omega = 0.85;
        let aic = build_aic_matrix(&c, omega, 1e-2, &mut ledger).unwrap();
        assert_eq!(ledger.fluid_solves, 3); // wake + M modes

        let spec = c.struct_spec;
        let mut x = HarmonicVector::zeros(spec);
        x.coeffs[spec.idx_cos(0, 1)] = 3e-3;
        x.coeffs[spec.idx_sin(1, 1)] = -2e-3;
        let mut l2 = CostLedger::default();
        let direct = c.evaluate(&x, omega, 1.0, None, &mut l2).unwrap();
        let approx = aic.force(&x);
        for i in 0..2 {
            let err = (direct.f_hat.complex_coeff(i, 1) - approx.complex_coeff(i, 1)).norm();
            assert!(err < 1e-8 * direct.f_hat.complex_coeff(i, 1).norm().max(1e-6));
        }
    }

    #[test]
    fn aic_matrix_is_amplitude_invariant_when_linear() {
        let c = ctx(0.0, 0.0);
        let mut l1 = CostLedger::default();
        let mut l2 = CostLedger::default();
        let a1 = build_aic_matrix(&c, 0.85, 1e-2, &mut l1).unwrap();
        let a2 = build_aic_matrix(&c, 0.85, 5e-3, &mut l2).unwrap();
        let diff = (&a1.g - &a2.g).norm();
        assert!(diff < 1e-8 * a1.g.norm(), "diff {diff:.3e}");
    }

    #[test]
    fn aic_matrix_changes_with_amplitude_when_nonlinear() {
        let c = ctx(0.3, 0.0);
        let mut l1 = CostLedger::default();
        let mut l2 = CostLedger::default();
        let a1 = build_aic_matrix(&c, 0.85, 0.05, &mut l1).unwrap();
        let a2 = build_aic_matrix(&c, 0.85, 0.1, &mut l2).unwrap();
        let diff = (&a1.g - &a2.g).norm() / a1.g.norm();
        assert!(diff > 1e-6, "relative change {diff:.3e}");
    }

    #[test]
    fn single_aic_is_rank_one_and_projects_consistently() {
        let c = ctx(0.0, 0.0);
        // any mass-normalized direction works for the algebraic properties
        let m_mat = DMatrix::<f64>::identity(2, 2);
        let model = crate::model::ReducedModel::new(
            m_mat,
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            vec![],
            vec![crate::model::ModeKind::Constraint, crate::model::ModeKind::Normal],
            1,
        )
        .unwrap();
        let phi = DVector::from_vec(vec![0.0, 1.0]);
        let mut ledger = CostLedger::default();
        let aic = build_single_aic(&c, &model, &phi, 0.85, 1e-2, &mut ledger).unwrap();
        assert_eq!(ledger.fluid_solves, 2);
        let svd = aic.g.map(|z| z.norm()).svd(false, false);
        let s = svd.singular_values;
        assert!(s[1] < 1e-10 * s[0], "second singular value {:.3e}", s[1]);

        // projection identity φᵀ (G φ c) = α c
        let alpha = aic.alpha.unwrap();
        let cval = Complex64::new(0.3, -0.8);
        let gphic = &aic.g * DVector::from_fn(2, |j, _| Complex64::new(phi[j], 0.0) * cval);
        let mut proj = Complex64::new(0.0, 0.0);
        for j in 0..2 {
            proj += Complex64::new(phi[j], 0.0) * gphic[j];
        }
        assert!((proj - alpha * cval).norm() < 1e-10 * alpha.norm());
    }

    #[test]
    fn amplitude_sweep_is_flat_for_linear_surrogate_and_deterministic() {
        let c = ctx(0.0, 0.0);
        let model = crate::model::ReducedModel::new(
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            vec![],
            vec![crate::model::ModeKind::Constraint, crate::model::ModeKind::Normal],
            1,
        )
        .unwrap();
        let amplitudes = [1e-3, 3e-3, 1e-2, 3e-2];
        let mut l1 = CostLedger::default();
        let s1 = amplitude_ratio_sweep(&c, &model, 0.85, &amplitudes, &mut l1).unwrap();
        for v in &s1 {
            assert!((v - 1.0).abs() < 1e-8, "normalized ratio {v}");
        }
        let mut l2 = CostLedger::default();
        let s2 = amplitude_ratio_sweep(&c, &model, 0.85, &amplitudes, &mut l2).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn superposition_is_exact_without_cross_term() {
        let c = ctx(0.0, 0.0);
        let spec = c.struct_spec;
        let mut x = HarmonicVector::zeros(spec);
        x.coeffs[spec.idx_cos(1, 1)] = 0.05;
        let mut ledger = CostLedger::default();
        let (_, rel) = superposition_deviation(&c, &x, 0.85, &mut ledger).unwrap();
        assert!(rel < 1e-9, "deviation {rel:.3e}");

        // the cubic term alone does not break superposition either: the
        // nonlinearity acts on the vibration-induced part only
        let c_cubic = ctx(0.1, 0.0);
        let mut l2 = CostLedger::default();
        let (_, rel2) = superposition_deviation(&c_cubic, &x, 0.85, &mut l2).unwrap();
        assert!(rel2 < 1e-8, "deviation {rel2:.3e}");
    }

    #[test]
    fn superposition_breaks_with_cross_term_and_heals_without_wake() {
        let c = ctx(0.0, 0.4);
        let spec = c.struct_spec;
        let mut x = HarmonicVector::zeros(spec);
        x.coeffs[spec.idx_cos(1, 1)] = 0.2;
        let mut ledger = CostLedger::default();
        let (_, rel) = superposition_deviation(&c, &x, 0.85, &mut ledger).unwrap();
        assert!(rel > 1e-4, "cross term should break superposition: {rel:.3e}");

        // without the wake the cross term vanishes identically: compare the
        // coupled solve against the vibration-only solve at zero wake scale
        let mut l2 = CostLedger::default();
        let with_wake_off = c.evaluate(&x, 0.85, 0.0, None, &mut l2).unwrap();
        let oracle = dense_newton_oracle(
            &c.surrogate,
            0.85,
            Some(&deform_mesh(&x, &c.basis, c.surrogate.order)),
            0.0,
        );
        let f_oracle = aero_forces(&oracle, &c.surrogate, spec);
        let gap = (&with_wake_off.f_hat.coeffs - &f_oracle.coeffs).norm();
        assert!(gap < 1e-8 * f_oracle.coeffs.norm().max(1.0));
    }

    #[test]
    fn linearity_certificate_for_linear_surrogate() {
        let c = ctx(0.0, 0.0);
        let spec = c.struct_spec;
        let mut x = HarmonicVector::zeros(spec);
        x.coeffs[spec.idx_cos(0, 1)] = 0.01;
        x.coeffs[spec.idx_sin(1, 1)] = 0.02;
        let mut ledger = CostLedger::default();
        let omega = 0.9;
        let wake = c.wake_run(omega, &mut ledger).unwrap();
        let f1 = c.evaluate(&x, omega, 1.0, None, &mut ledger).unwrap();
        let scale = 2.5;
        let xs = HarmonicVector {
            spec,
            coeffs: &x.coeffs * scale,
        };
        let f2 = c.evaluate(&xs, omega, 1.0, None, &mut ledger).unwrap();
        for i in 0..spec.n_coords {
            let vib1 = f1.f_hat.complex_coeff(i, 1) - wake.f_hat.complex_coeff(i, 1);
            let vib2 = f2.f_hat.complex_coeff(i, 1) - wake.f_hat.complex_coeff(i, 1);
            let err = (vib2 - vib1 * scale).norm();
            assert!(err < 1e-8 * vib1.norm().max(1e-9), "coord {i}: {err:.3e}");
        }
    }

    #[test]
    fn spectrum_validation_rejects_unstable_modes() {
        let err =
            AeroSurrogate::steady_op_from_spectrum(&[(0.5, 0.0)], 1, None).unwrap_err();
        assert!(matches!(err, AeroError::UnstableSpectrum(_)));
        let err = AeroSurrogate::steady_op_from_spectrum(&[(-1.0, 0.0)], 3, None).unwrap_err();
        assert!(matches!(err, AeroError::SpectrumSizeMismatch { .. }));
    }

    #[test]
    fn seeded_construction_is_deterministic() {
        let e = [(-5.0, 0.0), (-7.0, 2.0)];
        let a = AeroSurrogate::steady_op_from_spectrum(&e, 3, Some(42)).unwrap();
        let b = AeroSurrogate::steady_op_from_spectrum(&e, 3, Some(42)).unwrap();
        assert_eq!(a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let _ = rng.next_u64();
    }
}
