//! Contact force evaluation by the alternating frequency-time scheme.
//!
//! Each contact element relates a node pair's relative displacement
//! `(u_n, u_t1, u_t2)` to a unilateral normal spring with preload,
//!
//! ```text
//! f_n(t) = k_n max(0, u_n(t) + g_0),
//! ```
//!
//! and an elastic dry friction (Jenkins) element in the tangential plane
//! with the variable Coulomb limit `μ f_n(t)`: the elastic trial force
//! `f* = f_prev + k_t Δu_t` is radially returned onto the disk
//! `|f_t| ≤ μ f_n`, and `f_t = 0` whenever the contact is open.
//!
//! The hysteresis is marched over a fixed number of periods (the slider
//! starts unstretched, so a permanently sticking element is exact after the
//! first period) and the trajectory of the final period is projected back
//! onto the retained harmonics. Periodicity of the final period is verified
//! and a violation is reported as an error naming the element; it signals
//! pathological parameters rather than a solver failure.
//!
//! The Jacobian is the exact derivative of this discrete map: the
//! sample-wise consistent tangent of the return map (elastic in stick, the
//! radial-return derivative in slip, zero in separation) is chained through
//! the force recursion and the discrete transforms.

use nalgebra::DMatrix;

use crate::error::SolveError;
use crate::harmonics::{HarmonicVector, TrigTable};
use crate::model::ReducedModel;

/// Settings of the AFT contact evaluation.
#[derive(Debug, Clone)]
pub struct ContactConfig {
    /// Samples per period; `None` uses the spec default (smallest power of
    /// two ≥ 4·order+4).
    pub n_samples: Option<usize>,
    /// Number of periods marched before the trajectory is accepted.
    pub settle_periods: usize,
    /// Relative periodicity tolerance on the final period.
    pub periodicity_tol: f64,
}

impl Default for ContactConfig {
    fn default() -> Self {
        Self {
            n_samples: None,
            settle_periods: 6,
            periodicity_tol: 1e-8,
        }
    }
}

/// Contact state of one element at one time sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactStatus {
    Stick,
    Slip,
    Open,
}

/// Time-domain trajectory of one element over the final (periodic) cycle.
#[derive(Debug, Clone)]
pub struct ElementCycle {
    pub statuses: Vec<ContactStatus>,
    pub normal_force: Vec<f64>,
    pub tangential_force: Vec<[f64; 2]>,
    pub rel_disp: Vec<[f64; 3]>,
}

impl ElementCycle {
    /// Friction work per cycle: the hysteresis-loop area `∮ f_t · du_t`
    /// by the cyclic trapezoid rule on the sampled trajectory.
    pub fn friction_work(&self) -> f64 {
        let n = self.statuses.len();
        let mut w = 0.0;
        for k in 0..n {
            let k1 = (k + 1) % n;
            for d in 0..2 {
                let fm = 0.5 * (self.tangential_force[k][d] + self.tangential_force[k1][d]);
                let du = self.rel_disp[k1][d + 1] - self.rel_disp[k][d + 1];
                w += fm * du;
            }
        }
        w
    }

    pub fn fractions(&self) -> (f64, f64, f64) {
        let n = self.statuses.len() as f64;
        let count = |s: ContactStatus| self.statuses.iter().filter(|&&x| x == s).count() as f64 / n;
        (
            count(ContactStatus::Stick),
            count(ContactStatus::Slip),
            count(ContactStatus::Open),
        )
    }
}

/// Per-element cycle fractions of a converged solution.
#[derive(Debug, Clone)]
pub struct ContactStateSummary {
    /// `(stick, slip, separated)` per element; each triple sums to 1.
    pub fractions: Vec<(f64, f64, f64)>,
}

impl ContactStateSummary {
    pub fn any_separation(&self) -> bool {
        self.fractions.iter().any(|f| f.2 > 0.0)
    }
}

/// Result of one AFT pass over all contact elements.
#[derive(Debug, Clone)]
pub struct ContactEvaluation {
    /// Fourier coefficients of the assembled contact forces.
    pub forces: HarmonicVector,
    /// Exact Jacobian `∂ĝ/∂x_s` over the real coefficient vector.
    pub jacobian: DMatrix<f64>,
    pub cycles: Vec<ElementCycle>,
}

/// Evaluates all contact elements of `model` at the displacement harmonics
/// `x_s`, returning assembled force coefficients, the consistent Jacobian
/// and the per-element time-domain trajectories.
pub fn contact_forces(
    x_s: &HarmonicVector,
    model: &ReducedModel,
    cfg: &ContactConfig,
) -> Result<ContactEvaluation, SolveError> {
    let spec = x_s.spec;
    let per = spec.coeffs_per_coord();
    let n_dof = spec.len();
    let n = cfg.n_samples.unwrap_or_else(|| spec.default_samples());
    assert!(n >= spec.min_samples(), "sample count below aliasing bound");
    assert!(cfg.settle_periods >= 2, "need at least two periods");

    let trig = TrigTable::new(spec.order, n);
    let mut forces = HarmonicVector::zeros(spec);
    let mut jacobian = DMatrix::zeros(n_dof, n_dof);
    let mut cycles = Vec::with_capacity(model.contacts.len());

    for (e_idx, elem) in model.contacts.iter().enumerate() {
        let r = elem.selection_matrix();

        // Relative displacement harmonics ŵ = (R ⊗ I) x̂ and their samples.
        let mut w_coeffs = DMatrix::zeros(3, per);
        for d in 0..3 {
            for j in 0..spec.n_coords {
                let rij = r[(d, j)];
                if rij != 0.0 {
                    for c in 0..per {
                        w_coeffs[(d, c)] += rij * x_s.coeffs[j * per + c];
                    }
                }
            }
        }
        // samples[(k, d)]
        let samples = &trig.table * w_coeffs.transpose();

        let march = march_element(
            elem.k_n,
            elem.k_t,
            elem.mu,
            elem.preload_gap,
            &samples,
            &trig,
            cfg,
        );
        let march = march.map_err(|(periods, change)| SolveError::NonPeriodicContact {
            element: e_idx,
            periods,
            change,
        })?;

        // Project the final period onto the harmonics and assemble through
        // the selection map with the integration-point weight.
        // g_elem[(d, c)] and j_elem[(d*per+c), (d2*per+c2)] in element space.
        let mut g_elem = DMatrix::zeros(3, per);
        let mut j_elem = DMatrix::zeros(3 * per, 3 * per);
        for k in 0..n {
            let f = [
                march.cycle.normal_force[k],
                march.cycle.tangential_force[k][0],
                march.cycle.tangential_force[k][1],
            ];
            for c in 0..per {
                let w = trig.projection_row(c, k);
                for d in 0..3 {
                    g_elem[(d, c)] += w * f[d];
                }
                // normal force is memoryless: ∂f_n(k)/∂ŵ = k_n [closed] S_n(k)
                if march.closed[k] {
                    for c2 in 0..per {
                        j_elem[(c, c2)] += w * elem.k_n * trig.table[(k, c2)];
                    }
                }
                for d in 0..2 {
                    let row = &march.dtangential[k];
                    for col in 0..3 * per {
                        j_elem[((d + 1) * per + c, col)] += w * row[(d, col)];
                    }
                }
            }
        }

        // Scatter: ĝ += weight Rᵀ g_elem, J += weight Rᵀ J_elem R (per slot).
        for j in 0..spec.n_coords {
            for d in 0..3 {
                let rdj = r[(d, j)];
                if rdj == 0.0 {
                    continue;
                }
                for c in 0..per {
                    forces.coeffs[j * per + c] += elem.weight * rdj * g_elem[(d, c)];
                }
            }
        }
        for j_out in 0..spec.n_coords {
            for d_out in 0..3 {
                let r_out = r[(d_out, j_out)];
                if r_out == 0.0 {
                    continue;
                }
                for j_in in 0..spec.n_coords {
                    for d_in in 0..3 {
                        let r_in = r[(d_in, j_in)];
                        if r_in == 0.0 {
                            continue;
                        }
                        let scale = elem.weight * r_out * r_in;
                        for c_out in 0..per {
                            for c_in in 0..per {
                                jacobian[(j_out * per + c_out, j_in * per + c_in)] += scale
                                    * j_elem[(d_out * per + c_out, d_in * per + c_in)];
                            }
                        }
                    }
                }
            }
        }

        cycles.push(march.cycle);
    }

    Ok(ContactEvaluation {
        forces,
        jacobian,
        cycles,
    })
}

/// Classifies the cycle fractions (stick/slip/separated) of every element at
/// a converged solution point.
pub fn classify_contact(
    x_s: &HarmonicVector,
    model: &ReducedModel,
    cfg: &ContactConfig,
) -> Result<ContactStateSummary, SolveError> {
    let eval = contact_forces(x_s, model, cfg)?;
    Ok(ContactStateSummary {
        fractions: eval.cycles.iter().map(|c| c.fractions()).collect(),
    })
}

struct MarchResult {
    cycle: ElementCycle,
    closed: Vec<bool>,
    /// `∂f_t(k)/∂ŵ` on the final period: per sample a 2×(3·per) matrix.
    dtangential: Vec<DMatrix<f64>>,
}

#[allow(clippy::too_many_arguments)]
fn march_element(
    k_n: f64,
    k_t: f64,
    mu: f64,
    gap: f64,
    samples: &DMatrix<f64>, // n × 3
    trig: &TrigTable,
    cfg: &ContactConfig,
) -> Result<MarchResult, (usize, f64)> {
    let n = trig.n_samples;
    let per = trig.table.ncols();
    let periods = cfg.settle_periods;

    // ∂w_d(k)/∂ŵ is the trig row of sample k placed in direction slot d.
    let dsample = |k: usize, d: usize| -> DMatrix<f64> {
        let mut row = DMatrix::zeros(1, 3 * per);
        for c in 0..per {
            row[(0, d * per + c)] = trig.table[(k, c)];
        }
        row
    };

    let mut f_t = [0.0f64; 2];
    let mut d_f = DMatrix::<f64>::zeros(2, 3 * per);

    let mut cycle = ElementCycle {
        statuses: vec![ContactStatus::Open; n],
        normal_force: vec![0.0; n],
        tangential_force: vec![[0.0; 2]; n],
        rel_disp: vec![[0.0; 3]; n],
    };
    let mut prev_cycle_force: Vec<[f64; 3]> = vec![[0.0; 3]; n];
    let mut closed_flags = vec![false; n];
    let mut dtangential: Vec<DMatrix<f64>> = Vec::new();
    let mut force_scale = k_n * gap.abs();
    let mut periodicity_change = f64::INFINITY;

    for p in 0..periods {
        let last = p + 1 == periods;
        if last {
            dtangential = Vec::with_capacity(n);
        }
        let mut max_change = 0.0f64;
        for k in 0..n {
            let u_n = samples[(k, 0)];
            let pen = u_n + gap;
            let closed = pen > 0.0;
            let f_n = if closed { k_n * pen } else { 0.0 };
            let limit = mu * f_n;

            // Elastic trial; on the very first sample the slider starts
            // unstretched at the origin.
            let (mut trial, mut d_trial);
            if p == 0 && k == 0 {
                trial = [k_t * samples[(0, 1)], k_t * samples[(0, 2)]];
                d_trial = DMatrix::zeros(2, 3 * per);
                for d in 0..2 {
                    d_trial.row_mut(d).copy_from(&(dsample(0, d + 1) * k_t));
                }
            } else {
                let kp = if k == 0 { n - 1 } else { k - 1 };
                trial = [
                    f_t[0] + k_t * (samples[(k, 1)] - samples[(kp, 1)]),
                    f_t[1] + k_t * (samples[(k, 2)] - samples[(kp, 2)]),
                ];
                d_trial = d_f.clone();
                for d in 0..2 {
                    let delta = (dsample(k, d + 1) - dsample(kp, d + 1)) * k_t;
                    let mut row = d_trial.row_mut(d);
                    row += delta.row(0);
                }
            }

            let status;
            if !closed {
                trial = [0.0, 0.0];
                d_trial.fill(0.0);
                status = ContactStatus::Open;
            } else {
                let norm = (trial[0] * trial[0] + trial[1] * trial[1]).sqrt();
                if norm <= limit {
                    status = ContactStatus::Stick;
                } else {
                    status = ContactStatus::Slip;
                    let nh = [trial[0] / norm, trial[1] / norm];
                    // radial return: f = L v/|v|
                    // ∂f = (L/|v|)(I - n̂ n̂ᵀ) ∂v + n̂ μ k_n S_n
                    let dsn = dsample(k, 0);
                    let mut d_new = DMatrix::zeros(2, 3 * per);
                    for col in 0..3 * per {
                        let dv = [d_trial[(0, col)], d_trial[(1, col)]];
                        let dv_n = nh[0] * dv[0] + nh[1] * dv[1];
                        for d in 0..2 {
                            d_new[(d, col)] = limit / norm * (dv[d] - nh[d] * dv_n)
                                + nh[d] * mu * k_n * dsn[(0, col)];
                        }
                    }
                    trial = [limit * nh[0], limit * nh[1]];
                    d_trial = d_new;
                }
            }

            f_t = trial;
            d_f = d_trial;

            let force = [f_n, f_t[0], f_t[1]];
            force_scale = force_scale
                .max(f_n.abs())
                .max(f_t[0].abs())
                .max(f_t[1].abs());
            let prev = prev_cycle_force[k];
            for d in 0..3 {
                max_change = max_change.max((force[d] - prev[d]).abs());
            }
            prev_cycle_force[k] = force;

            if last {
                cycle.statuses[k] = status;
                cycle.normal_force[k] = f_n;
                cycle.tangential_force[k] = f_t;
                cycle.rel_disp[k] = [samples[(k, 0)], samples[(k, 1)], samples[(k, 2)]];
                closed_flags[k] = closed;
                dtangential.push(d_f.clone());
            }
        }
        if p > 0 {
            periodicity_change = max_change;
        }
    }

    let scale = force_scale.max(f64::MIN_POSITIVE);
    if periodicity_change > cfg.periodicity_tol * scale {
        return Err((periods, periodicity_change / scale));
    }

    Ok(MarchResult {
        cycle,
        closed: closed_flags,
        dtangential,
    })
}
