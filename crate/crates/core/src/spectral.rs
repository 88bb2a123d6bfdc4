//! Dirichlet eigenbasis of `-d²/dx²` on the unit interval.
//!
//! Functions are represented by their coefficients against the orthonormal
//! eigenfunctions `φ_j(x) = √2 sin(jπx)`, `j = 1..M`, with eigenvalues
//! `λ_j = (jπ)²`. Coefficient index `i` in every vector holds mode `j = i + 1`.
//!
//! Physical-space values live on the interior collocation grid
//! `x_m = m/Q`, `m = 1..Q-1`. [`SineTransform`] maps between the two
//! representations with a discrete sine transform whose normalisation makes
//! `project(evaluate(û)) = û` exact (up to rounding) whenever `M ≤ Q/2`.

use std::f64::consts::PI;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalues `λ_j = (jπ)²` of the Dirichlet Laplacian on `(0, 1)`, truncated at `M` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    eigenvalues: Vec<f64>,
}

impl EigenBasis {
    pub fn new(modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::config("M", "mode count must be at least 1"));
        }
        let eigenvalues = (1..=modes)
            .map(|j| {
                let k = j as f64 * PI;
                k * k
            })
            .collect();
        Ok(Self { eigenvalues })
    }

    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvalue of mode `j` (1-based).
    pub fn eigenvalue(&self, j: usize) -> f64 {
        self.eigenvalues[j - 1]
    }

    /// `λ_j^p` for every mode.
    pub fn powers(&self, p: f64) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| l.powf(p)).collect()
    }

    /// Multiply coefficient `j` by `λ_j^{ν/2}`, i.e. apply `A^{ν/2}`.
    pub fn apply_fractional(&self, field: &SpectralField, nu: f64) -> Result<SpectralField> {
        self.check_len(field)?;
        let coeffs = field
            .coeffs
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, l)| c * l.powf(0.5 * nu))
            .collect();
        Ok(SpectralField { coeffs })
    }

    /// `(Σ_j λ_j^ν û_j²)^{1/2}`.
    pub fn sobolev_norm(&self, field: &SpectralField, nu: f64) -> Result<f64> {
        self.check_len(field)?;
        let sum: f64 = field
            .coeffs
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, l)| l.powf(nu) * c * c)
            .sum();
        Ok(sum.sqrt())
    }

    fn check_len(&self, field: &SpectralField) -> Result<()> {
        if field.len() != self.modes() {
            return Err(Error::DimensionMismatch {
                context: "spectral field",
                expected: self.modes(),
                actual: field.len(),
            });
        }
        Ok(())
    }
}

/// Coefficient vector of a function in the sine eigenbasis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpectralField {
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(modes: usize) -> Self {
        Self {
            coeffs: vec![0.0; modes],
        }
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("spectral coefficients"));
        }
        Ok(Self { coeffs })
    }

    /// Field `amplitude · φ_j` (mode `j` is 1-based), bypassing quadrature.
    pub fn single_mode(modes: usize, j: usize, amplitude: f64) -> Result<Self> {
        if j == 0 || j > modes {
            return Err(Error::config(
                "mode",
                format!("mode {j} outside 1..={modes}"),
            ));
        }
        let mut coeffs = vec![0.0; modes];
        coeffs[j - 1] = amplitude;
        Ok(Self { coeffs })
    }

    /// Field `amplitude · √2 sin(jπx)` written as a multiple of `sin(jπx)`,
    /// e.g. `sine_multiple(M, 2, 1/√2)` is `(1/√2) sin(2πx)` with `û₂ = 1/2`.
    pub fn sine_multiple(modes: usize, j: usize, sine_amplitude: f64) -> Result<Self> {
        Self::single_mode(modes, j, sine_amplitude / std::f64::consts::SQRT_2)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Squared `L²` norm, `Σ_j û_j²` (Parseval).
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;

    fn add(self, rhs: Self) -> SpectralField {
        assert_eq!(self.len(), rhs.len(), "field length mismatch");
        SpectralField {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;

    fn sub(self, rhs: Self) -> SpectralField {
        assert_eq!(self.len(), rhs.len(), "field length mismatch");
        SpectralField {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Dense discrete sine transform between `M` coefficients and `Q - 1`
/// interior grid values.
///
/// The table is built once and shared read-only; both directions are
/// `O(MQ)` with contiguous inner loops.
#[derive(Debug, Clone)]
pub struct SineTransform {
    modes: usize,
    points: usize,
    // row m holds √2 sin(jπ x_m) for j = 1..M
    table: Vec<f64>,
}

impl SineTransform {
    /// Collocation size used when none is given.
    pub fn default_points(modes: usize) -> usize {
        4 * modes
    }

    pub fn new(modes: usize, points: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::config("M", "mode count must be at least 1"));
        }
        if points < 2 * modes {
            return Err(Error::config(
                "Q",
                format!("collocation size {points} below 2M = {}", 2 * modes),
            ));
        }
        let period = 2 * points;
        let mut table = Vec::with_capacity((points - 1) * modes);
        for m in 1..points {
            for j in 1..=modes {
                // reduce jm mod 2Q before scaling so large arguments stay exact
                let k = (j * m) % period;
                table.push(std::f64::consts::SQRT_2 * (PI * k as f64 / points as f64).sin());
            }
        }
        Ok(Self {
            modes,
            points,
            table,
        })
    }

    pub fn with_default_points(modes: usize) -> Result<Self> {
        Self::new(modes, Self::default_points(modes))
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// `Q`; the grid has `Q - 1` interior points.
    pub fn points(&self) -> usize {
        self.points
    }

    /// Interior grid `x_m = m/Q`, `m = 1..Q-1`.
    pub fn grid(&self) -> Vec<f64> {
        (1..self.points)
            .map(|m| m as f64 / self.points as f64)
            .collect()
    }

    /// `u(x_m) = Σ_j û_j √2 sin(jπ x_m)` on the interior grid.
    pub fn evaluate(&self, field: &SpectralField) -> Result<Vec<f64>> {
        if field.len() != self.modes {
            return Err(Error::DimensionMismatch {
                context: "evaluate",
                expected: self.modes,
                actual: field.len(),
            });
        }
        let mut out = vec![0.0; self.points - 1];
        self.evaluate_into(field.coeffs(), &mut out);
        Ok(out)
    }

    /// Quadrature coefficients `û_j = (1/Q) Σ_m u(x_m) √2 sin(jπ x_m)`.
    pub fn project(&self, values: &[f64]) -> Result<SpectralField> {
        if values.len() != self.points - 1 {
            return Err(Error::DimensionMismatch {
                context: "project",
                expected: self.points - 1,
                actual: values.len(),
            });
        }
        let mut coeffs = vec![0.0; self.modes];
        self.project_into(values, &mut coeffs);
        SpectralField::from_coeffs(coeffs)
    }

    /// Project a function given pointwise.
    pub fn project_fn(&self, f: impl Fn(f64) -> f64) -> Result<SpectralField> {
        let values: Vec<f64> = self.grid().into_iter().map(f).collect();
        self.project(&values)
    }

    pub(crate) fn evaluate_into(&self, coeffs: &[f64], out: &mut [f64]) {
        debug_assert_eq!(coeffs.len(), self.modes);
        for (row, value) in self.table.chunks_exact(self.modes).zip(out.iter_mut()) {
            *value = row.iter().zip(coeffs).map(|(s, c)| s * c).sum();
        }
    }

    pub(crate) fn project_into(&self, values: &[f64], coeffs: &mut [f64]) {
        debug_assert_eq!(coeffs.len(), self.modes);
        coeffs.iter_mut().for_each(|c| *c = 0.0);
        for (row, &v) in self.table.chunks_exact(self.modes).zip(values) {
            for (c, s) in coeffs.iter_mut().zip(row) {
                *c += v * s;
            }
        }
        let scale = 1.0 / self.points as f64;
        coeffs.iter_mut().for_each(|c| *c *= scale);
    }
}
