//! Scaling of the augmented unknown space.
//!
//! Arc lengths, tangents and the coupling update norm are measured in a
//! scaled space where the Fourier coefficients are divided by a
//! characteristic amplitude and the rotor speed by the linear (stuck)
//! resonance speed. Without the scaling the rotor speed would dominate
//! every norm on lightly forced fixtures.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScaledSpace {
    /// Characteristic vibration amplitude.
    pub coeff_scale: f64,
    /// Linear resonance speed of the stuck system.
    pub omega_scale: f64,
}

impl ScaledSpace {
    pub fn new(coeff_scale: f64, omega_scale: f64) -> Self {
        assert!(coeff_scale > 0.0 && omega_scale > 0.0);
        Self {
            coeff_scale,
            omega_scale,
        }
    }

    /// Weight of augmented component `i` (the last entry is the rotor speed).
    pub fn weight(&self, i: usize, len: usize) -> f64 {
        if i + 1 == len {
            1.0 / self.omega_scale
        } else {
            1.0 / self.coeff_scale
        }
    }

    /// Maps an augmented vector into scaled coordinates.
    pub fn to_scaled(&self, aug: &DVector<f64>) -> DVector<f64> {
        let n = aug.len();
        DVector::from_fn(n, |i, _| aug[i] * self.weight(i, n))
    }

    /// Maps a scaled displacement back into physical coordinates.
    pub fn from_scaled(&self, scaled: &DVector<f64>) -> DVector<f64> {
        let n = scaled.len();
        DVector::from_fn(n, |i, _| scaled[i] / self.weight(i, n))
    }

    /// Scaled distance between two augmented vectors.
    pub fn distance(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        let n = a.len();
        let mut s = 0.0;
        for i in 0..n {
            let d = (a[i] - b[i]) * self.weight(i, n);
            s += d * d;
        }
        s.sqrt()
    }
}
