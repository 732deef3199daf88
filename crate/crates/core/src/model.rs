//! Reduced structural sector models in component-mode space.
//!
//! A [`ReducedModel`] carries the reduced mass/damping/stiffness matrices,
//! the contact element definitions that attach to the retained boundary
//! coordinates, and the mode metadata distinguishing static constraint modes
//! from fixed-interface normal modes. Models are immutable after
//! construction and are shared freely between concurrent solves.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::harmonics::{complex_block_to_real, HarmonicSpec, HarmonicVector};

/// Kind of a retained component mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    /// Static constraint mode; its coordinate is a physical relative
    /// displacement at the contact interface.
    Constraint,
    /// Fixed-interface normal mode.
    Normal,
}

/// One contact integration point: a unilateral spring in the normal
/// direction and an elastic dry friction (Jenkins) element in the two
/// tangential directions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactElement {
    /// 3×M selection map giving the relative displacement of the node pair
    /// in (normal, tangential-1, tangential-2) directions. Stored row-major.
    pub selection: Vec<Vec<f64>>,
    /// Normal stiffness (force/length).
    pub k_n: f64,
    /// Tangential stiffness (force/length).
    pub k_t: f64,
    /// Friction coefficient.
    pub mu: f64,
    /// Signed initial interference; positive = pre-compressed.
    pub preload_gap: f64,
    /// Integration-point area weight.
    #[serde(default = "default_weight")]
    pub weight: f64,
}

fn default_weight() -> f64 {
    1.0
}

impl ContactElement {
    /// Convenience constructor selecting three plain coordinate indices.
    pub fn from_indices(
        n_coords: usize,
        rows: [usize; 3],
        k_n: f64,
        k_t: f64,
        mu: f64,
        preload_gap: f64,
    ) -> Self {
        let mut selection = vec![vec![0.0; n_coords]; 3];
        for (r, &idx) in rows.iter().enumerate() {
            selection[r][idx] = 1.0;
        }
        Self {
            selection,
            k_n,
            k_t,
            mu,
            preload_gap,
            weight: 1.0,
        }
    }

    pub fn selection_matrix(&self) -> DMatrix<f64> {
        let cols = self.selection[0].len();
        DMatrix::from_fn(3, cols, |i, j| self.selection[i][j])
    }

    fn validate(&self, index: usize, n_coords: usize) -> Result<(), ModelError> {
        let bad = |reason: String| ModelError::BadContact { index, reason };
        if self.selection.len() != 3 {
            return Err(bad(format!(
                "selection has {} rows, expected 3",
                self.selection.len()
            )));
        }
        for row in &self.selection {
            if row.len() != n_coords {
                return Err(bad(format!(
                    "selection row has {} entries, expected {n_coords}",
                    row.len()
                )));
            }
        }
        if !(self.k_n > 0.0) {
            return Err(bad(format!("k_n must be positive, got {}", self.k_n)));
        }
        if !(self.k_t > 0.0) {
            return Err(bad(format!("k_t must be positive, got {}", self.k_t)));
        }
        if !(self.mu >= 0.0) {
            return Err(bad(format!("mu must be nonnegative, got {}", self.mu)));
        }
        if !(self.weight > 0.0) {
            return Err(bad(format!("weight must be positive, got {}", self.weight)));
        }
        Ok(())
    }
}

/// Reduced structural model: component-mode matrices plus contact elements.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedModel {
    #[serde(default = "schema_tag")]
    pub schema: String,
    pub n_coords: usize,
    /// Dense row-major reduced mass matrix.
    pub mass: Vec<Vec<f64>>,
    pub damping: Vec<Vec<f64>>,
    pub stiffness: Vec<Vec<f64>>,
    pub contacts: Vec<ContactElement>,
    pub mode_meta: Vec<ModeKind>,
    /// Index of the fixed-interface normal mode used as the representative
    /// coordinate (the selector `e` of the force approximation).
    pub resonant_mode_index: usize,
}

fn schema_tag() -> String {
    "hbfr-model-v1".to_string()
}

impl ReducedModel {
    pub fn new(
        mass: DMatrix<f64>,
        damping: DMatrix<f64>,
        stiffness: DMatrix<f64>,
        contacts: Vec<ContactElement>,
        mode_meta: Vec<ModeKind>,
        resonant_mode_index: usize,
    ) -> Result<Self, ModelError> {
        let n = mass.nrows();
        let to_rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect()
        };
        let model = Self {
            schema: schema_tag(),
            n_coords: n,
            mass: to_rows(&mass),
            damping: to_rows(&damping),
            stiffness: to_rows(&stiffness),
            contacts,
            mode_meta,
            resonant_mode_index,
        };
        model.validate()?;
        Ok(model)
    }

    /// Checks shapes, definiteness of the matrices and the contact data.
    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.n_coords;
        let check_shape = |name: &'static str, m: &Vec<Vec<f64>>| -> Result<(), ModelError> {
            if m.len() != n || m.iter().any(|r| r.len() != n) {
                return Err(ModelError::BadShape {
                    name,
                    rows: m.len(),
                    cols: m.first().map_or(0, |r| r.len()),
                    expected: n,
                });
            }
            Ok(())
        };
        check_shape("mass", &self.mass)?;
        check_shape("damping", &self.damping)?;
        check_shape("stiffness", &self.stiffness)?;

        let mass = self.mass_matrix();
        if mass.clone().cholesky().is_none() {
            return Err(ModelError::MassNotSpd);
        }
        let stiffness = self.stiffness_matrix();
        let sym = (&stiffness + stiffness.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let min = eig.eigenvalues.min();
        let scale = eig.eigenvalues.amax().max(1.0);
        if min < -1e-10 * scale {
            return Err(ModelError::StiffnessNotPsd(min));
        }

        if self.mode_meta.len() != n {
            return Err(ModelError::BadShape {
                name: "mode_meta",
                rows: self.mode_meta.len(),
                cols: 1,
                expected: n,
            });
        }
        if self
            .mode_meta
            .get(self.resonant_mode_index)
            .copied()
            != Some(ModeKind::Normal)
        {
            return Err(ModelError::BadResonantIndex(self.resonant_mode_index));
        }
        for (i, c) in self.contacts.iter().enumerate() {
            c.validate(i, n)?;
        }
        Ok(())
    }

    pub fn mass_matrix(&self) -> DMatrix<f64> {
        rows_to_matrix(&self.mass)
    }

    pub fn damping_matrix(&self) -> DMatrix<f64> {
        rows_to_matrix(&self.damping)
    }

    pub fn stiffness_matrix(&self) -> DMatrix<f64> {
        rows_to_matrix(&self.stiffness)
    }

    /// Stuck-contact stiffness: `K` plus every element's elastic stiffness
    /// through its selection map. The linearization of the model when all
    /// contacts stick and stay closed.
    pub fn stuck_stiffness(&self) -> DMatrix<f64> {
        let mut k = self.stiffness_matrix();
        for c in &self.contacts {
            let r = c.selection_matrix();
            let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![c.k_n, c.k_t, c.k_t]));
            k += c.weight * r.transpose() * diag * r;
        }
        k
    }

    /// Serializes to the model JSON schema.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    /// Loads and validates a model from its JSON representation.
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let model: ReducedModel =
            serde_json::from_str(text).map_err(|e| ModelError::InvalidFile(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}

/// A structural solution: harmonic coefficients paired with the rotor speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionPoint {
    pub x_s: HarmonicVector,
    pub omega: f64,
}

impl SolutionPoint {
    pub fn new(x_s: HarmonicVector, omega: f64) -> Self {
        assert!(omega > 0.0, "rotor speed must be positive");
        Self { x_s, omega }
    }

    /// Augmented unknown vector `[x_s; Ω]`.
    pub fn to_augmented(&self) -> DVector<f64> {
        let n = self.x_s.coeffs.len();
        let mut v = DVector::zeros(n + 1);
        v.rows_mut(0, n).copy_from(&self.x_s.coeffs);
        v[n] = self.omega;
        v
    }

    pub fn from_augmented(spec: HarmonicSpec, aug: &DVector<f64>) -> Self {
        let n = spec.len();
        debug_assert_eq!(aug.len(), n + 1);
        Self {
            x_s: HarmonicVector {
                spec,
                coeffs: aug.rows(0, n).into_owned(),
            },
            omega: aug[n],
        }
    }
}

/// Complex dynamic stiffness `S_h(Ω) = K + i (h EO Ω) D - (h EO Ω)² M`.
pub fn dynamic_stiffness(
    model: &ReducedModel,
    h: usize,
    omega: f64,
    engine_order: u32,
) -> DMatrix<Complex64> {
    assert!(omega > 0.0, "rotor speed must be positive");
    let w = h as f64 * engine_order as f64 * omega;
    let k = model.stiffness_matrix();
    let d = model.damping_matrix();
    let m = model.mass_matrix();
    DMatrix::from_fn(model.n_coords, model.n_coords, |i, j| {
        Complex64::new(k[(i, j)] - w * w * m[(i, j)], w * d[(i, j)])
    })
}

/// Derivative of the dynamic stiffness with respect to the rotor speed,
/// `∂S_h/∂Ω = i h EO D - 2 (h EO)² Ω M`.
pub fn dynamic_stiffness_domega(
    model: &ReducedModel,
    h: usize,
    omega: f64,
    engine_order: u32,
) -> DMatrix<Complex64> {
    let heo = h as f64 * engine_order as f64;
    let d = model.damping_matrix();
    let m = model.mass_matrix();
    DMatrix::from_fn(model.n_coords, model.n_coords, |i, j| {
        Complex64::new(-2.0 * heo * heo * omega * m[(i, j)], heo * d[(i, j)])
    })
}

/// Real 2×2-block form of the dynamic stiffness acting on `(a_h, b_h)` pairs.
pub fn dynamic_stiffness_real(
    model: &ReducedModel,
    h: usize,
    omega: f64,
    engine_order: u32,
) -> DMatrix<f64> {
    complex_block_to_real(&dynamic_stiffness(model, h, omega, engine_order))
}
