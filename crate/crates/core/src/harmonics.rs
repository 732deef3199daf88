//! Real Fourier coefficient containers and the discrete transforms used by
//! the alternating frequency-time (AFT) scheme.
//!
//! A periodic signal per generalized coordinate is represented as
//!
//! ```text
//! u(t) = a_0 + sum_h  a_h cos(h EO Ω t) + b_h sin(h EO Ω t),   h = 1..=H
//! ```
//!
//! stored coordinate-major as `[a_0, a_1, b_1, ..., a_H, b_H]`. The phase
//! variable `θ = EO Ω t` is sampled uniformly on `[0, 2π)`, so the transforms
//! are independent of the rotor speed and engine order. The complex
//! convention used by the frequency-domain solvers is `û_h = a_h - i b_h`
//! for `h ≥ 1`, so that `u(t) = Re( Σ û_h e^{i h θ} )`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::HarmonicError;

/// Shape of a harmonic coefficient set: number of generalized coordinates,
/// truncation order and engine order of the excitation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarmonicSpec {
    pub n_coords: usize,
    pub order: usize,
    pub engine_order: u32,
}

impl HarmonicSpec {
    pub fn new(n_coords: usize, order: usize, engine_order: u32) -> Self {
        assert!(n_coords >= 1, "need at least one coordinate");
        assert!(engine_order >= 1, "engine order must be at least 1");
        Self {
            n_coords,
            order,
            engine_order,
        }
    }

    /// Coefficients per coordinate: `a_0` plus a `(a_h, b_h)` pair per harmonic.
    pub fn coeffs_per_coord(&self) -> usize {
        2 * self.order + 1
    }

    /// Total length of the stacked real coefficient vector.
    pub fn len(&self) -> usize {
        self.n_coords * self.coeffs_per_coord()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Minimum admissible number of time samples for transforms at this order.
    pub fn min_samples(&self) -> usize {
        2 * self.order + 2
    }

    /// Default AFT sample count: smallest power of two with headroom for
    /// cubic/contact nonlinearities before aliasing.
    pub fn default_samples(&self) -> usize {
        let target = 4 * self.order + 4;
        let mut n = 2usize;
        while n < target {
            n *= 2;
        }
        n
    }

    /// Index of `a_0` of coordinate `coord` in the stacked layout.
    pub fn base(&self, coord: usize) -> usize {
        debug_assert!(coord < self.n_coords);
        coord * self.coeffs_per_coord()
    }

    /// Index of the cosine coefficient `a_h` (`h ≥ 1`) of `coord`.
    pub fn idx_cos(&self, coord: usize, h: usize) -> usize {
        debug_assert!(h >= 1 && h <= self.order);
        self.base(coord) + 2 * h - 1
    }

    /// Index of the sine coefficient `b_h` (`h ≥ 1`) of `coord`.
    pub fn idx_sin(&self, coord: usize, h: usize) -> usize {
        debug_assert!(h >= 1 && h <= self.order);
        self.base(coord) + 2 * h
    }

    fn check_samples(&self, n_samples: usize) -> Result<(), HarmonicError> {
        if n_samples < self.min_samples() {
            return Err(HarmonicError::TooFewSamples {
                n_samples,
                order: self.order,
                min: self.min_samples(),
            });
        }
        Ok(())
    }
}

/// Real Fourier coefficients of all generalized coordinates up to the
/// truncation order of `spec`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicVector {
    pub spec: HarmonicSpec,
    pub coeffs: DVector<f64>,
}

impl HarmonicVector {
    pub fn zeros(spec: HarmonicSpec) -> Self {
        Self {
            coeffs: DVector::zeros(spec.len()),
            spec,
        }
    }

    pub fn from_coeffs(spec: HarmonicSpec, coeffs: DVector<f64>) -> Result<Self, HarmonicError> {
        if coeffs.len() != spec.len() {
            return Err(HarmonicError::LengthMismatch {
                got: coeffs.len(),
                expected: spec.len(),
                n_coords: spec.n_coords,
                order: spec.order,
            });
        }
        Ok(Self { spec, coeffs })
    }

    pub fn mean(&self, coord: usize) -> f64 {
        self.coeffs[self.spec.base(coord)]
    }

    pub fn set_mean(&mut self, coord: usize, value: f64) {
        let i = self.spec.base(coord);
        self.coeffs[i] = value;
    }

    /// Complex coefficient `û_h = a_h - i b_h` of one coordinate (`h ≥ 1`;
    /// `h = 0` returns the real mean).
    pub fn complex_coeff(&self, coord: usize, h: usize) -> Complex64 {
        if h == 0 {
            Complex64::new(self.mean(coord), 0.0)
        } else {
            Complex64::new(
                self.coeffs[self.spec.idx_cos(coord, h)],
                -self.coeffs[self.spec.idx_sin(coord, h)],
            )
        }
    }

    /// Writes a complex coefficient back in the real a/b convention.
    pub fn set_complex_coeff(&mut self, coord: usize, h: usize, value: Complex64) {
        if h == 0 {
            self.set_mean(coord, value.re);
        } else {
            let (ic, is) = (self.spec.idx_cos(coord, h), self.spec.idx_sin(coord, h));
            self.coeffs[ic] = value.re;
            self.coeffs[is] = -value.im;
        }
    }

    /// All coordinates of harmonic `h` as one complex vector.
    pub fn harmonic_complex(&self, h: usize) -> Vec<Complex64> {
        (0..self.spec.n_coords)
            .map(|j| self.complex_coeff(j, h))
            .collect()
    }

    /// Magnitude of the vibratory content (`h ≥ 1`) of one coordinate.
    pub fn vibration_magnitude(&self, coord: usize) -> f64 {
        let mut s = 0.0;
        for h in 1..=self.spec.order {
            let a = self.coeffs[self.spec.idx_cos(coord, h)];
            let b = self.coeffs[self.spec.idx_sin(coord, h)];
            s += a * a + b * b;
        }
        s.sqrt()
    }

    /// Re-expands the coefficients to a different truncation order, padding
    /// missing harmonics with zero and dropping the ones beyond `order`.
    pub fn resize_order(&self, order: usize) -> HarmonicVector {
        let spec = HarmonicSpec::new(self.spec.n_coords, order, self.spec.engine_order);
        let mut out = HarmonicVector::zeros(spec);
        for j in 0..spec.n_coords {
            out.set_mean(j, self.mean(j));
            for h in 1..=order.min(self.spec.order) {
                out.coeffs[spec.idx_cos(j, h)] = self.coeffs[self.spec.idx_cos(j, h)];
                out.coeffs[spec.idx_sin(j, h)] = self.coeffs[self.spec.idx_sin(j, h)];
            }
        }
        out
    }
}

/// Equidistant samples of all coordinates over one vibration period.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub spec: HarmonicSpec,
    pub n_samples: usize,
    /// Coordinate-major: `values[j * n_samples + k]` is coordinate `j` at
    /// sample `k`.
    pub values: DVector<f64>,
}

impl TimeSeries {
    pub fn sample(&self, coord: usize, k: usize) -> f64 {
        self.values[coord * self.n_samples + k]
    }
}

/// Trigonometric tables shared by [`synthesize`] and [`project`].
///
/// Row `k` holds `[1, cos θ_k, sin θ_k, ..., cos Hθ_k, sin Hθ_k]` with
/// `θ_k = 2πk/N`, matching the coefficient layout per coordinate.
#[derive(Debug, Clone)]
pub struct TrigTable {
    pub order: usize,
    pub n_samples: usize,
    /// `n_samples × (2·order+1)`, synthesis: `u = table · coeffs`.
    pub table: DMatrix<f64>,
}

impl TrigTable {
    pub fn new(order: usize, n_samples: usize) -> Self {
        let mut table = DMatrix::zeros(n_samples, 2 * order + 1);
        for k in 0..n_samples {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n_samples as f64;
            table[(k, 0)] = 1.0;
            for h in 1..=order {
                let (s, c) = (h as f64 * theta).sin_cos();
                table[(k, 2 * h - 1)] = c;
                table[(k, 2 * h)] = s;
            }
        }
        Self {
            order,
            n_samples,
            table,
        }
    }

    /// Projection weight applied to sample `k` for coefficient slot `c`
    /// (`1/N` for the mean, `2/N cos`, `2/N sin` otherwise).
    pub fn projection_row(&self, c: usize, k: usize) -> f64 {
        let w = if c == 0 { 1.0 } else { 2.0 };
        w * self.table[(k, c)] / self.n_samples as f64
    }
}

/// Evaluates a harmonic vector at `n_samples` equidistant phases.
pub fn synthesize(hv: &HarmonicVector, n_samples: usize) -> Result<TimeSeries, HarmonicError> {
    hv.spec.check_samples(n_samples)?;
    let trig = TrigTable::new(hv.spec.order, n_samples);
    Ok(synthesize_with(hv, &trig))
}

/// Synthesis against a pre-built table (hot path of the AFT loops).
pub fn synthesize_with(hv: &HarmonicVector, trig: &TrigTable) -> TimeSeries {
    debug_assert_eq!(trig.order, hv.spec.order);
    let n = trig.n_samples;
    let per = hv.spec.coeffs_per_coord();
    let mut values = DVector::zeros(hv.spec.n_coords * n);
    for j in 0..hv.spec.n_coords {
        let coeffs = hv.coeffs.rows(j * per, per);
        let samples = &trig.table * coeffs;
        values.rows_mut(j * n, n).copy_from(&samples);
    }
    TimeSeries {
        spec: hv.spec,
        n_samples: n,
        values,
    }
}

/// Projects time samples onto the truncated Fourier basis (forward DFT in
/// the a/b convention).
pub fn project(ts: &TimeSeries, order: usize) -> Result<HarmonicVector, HarmonicError> {
    let spec = HarmonicSpec::new(ts.spec.n_coords, order, ts.spec.engine_order);
    spec.check_samples(ts.n_samples)?;
    let trig = TrigTable::new(order, ts.n_samples);
    let n = ts.n_samples;
    let mut out = HarmonicVector::zeros(spec);
    let per = spec.coeffs_per_coord();
    for j in 0..spec.n_coords {
        let samples = ts.values.rows(j * n, n);
        // a_0 = mean, a_h = 2/N Σ u_k cos, b_h = 2/N Σ u_k sin
        let mut acc = trig.table.transpose() * samples;
        acc[0] /= n as f64;
        for c in 1..per {
            acc[c] *= 2.0 / n as f64;
        }
        out.coeffs.rows_mut(j * per, per).copy_from(&acc);
    }
    Ok(out)
}

/// Converts a complex matrix block into the equivalent real 2x2-block form
/// acting on stacked `(a, b)` coefficient pairs:
/// `[[Re, Im], [-Im, Re]]` under the convention `û = a - i b`.
pub fn complex_block_to_real(block: &DMatrix<Complex64>) -> DMatrix<f64> {
    let (r, c) = block.shape();
    let mut out = DMatrix::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let z = block[(i, j)];
            out[(i, j)] = z.re;
            out[(i, j + c)] = z.im;
            out[(i + r, j)] = -z.im;
            out[(i + r, j + c)] = z.re;
        }
    }
    out
}

/// Cycle work `∮ f du` of a force/displacement harmonic pair, evaluated from
/// the coefficients: `π Σ_h h (a_h^f b_h^u - b_h^f a_h^u)`.
pub fn cycle_work(force: &HarmonicVector, disp: &HarmonicVector) -> f64 {
    debug_assert_eq!(force.spec, disp.spec);
    let spec = force.spec;
    let mut w = 0.0;
    for j in 0..spec.n_coords {
        for h in 1..=spec.order {
            let af = force.coeffs[spec.idx_cos(j, h)];
            let bf = force.coeffs[spec.idx_sin(j, h)];
            let au = disp.coeffs[spec.idx_cos(j, h)];
            let bu = disp.coeffs[spec.idx_sin(j, h)];
            w += h as f64 * (af * bu - bf * au);
        }
    }
    std::f64::consts::PI * w
}
