//! Cylindrical noise `Σ_j σ_j β_H^j(t) φ_j` and the piecewise-frozen
//! approximations of its stochastic convolutions.
//!
//! Every convolution sum `Σ_k K(ω_j (t - t_k)) X_k` with a sine or cosine
//! kernel splits by angle addition into `cos(ω_j t)`/`sin(ω_j t)` times the
//! running sums kept in [`ConvolutionAccumulator`], so each step costs `O(M)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::{Hurst, ModeNoise, NoiseCovariance, NoiseStreams, TimeGrid};
use crate::spectral::{EigenBasis, SpectralField};

/// Mode weights `σ_j = λ_j^{-ρ}` and frequencies `ω_j = λ_j^{α/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    rho: f64,
    alpha: f64,
    sigma: Vec<f64>,
    omegas: Vec<f64>,
}

impl NoiseParams {
    pub fn new(basis: &EigenBasis, alpha: f64, rho: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::config(
                "alpha",
                format!("α = {alpha} outside (0, 1]"),
            ));
        }
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::config(
                "rho",
                format!("ρ = {rho} must be nonnegative"),
            ));
        }
        Ok(Self {
            rho,
            alpha,
            sigma: basis.powers(-rho),
            omegas: basis.powers(0.5 * alpha),
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn modes(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }
}

/// Running sums `Σ_k cos/sin(ω_j t_k) σ_j D_k` and the same for `I_k`.
#[derive(Debug, Clone)]
pub struct ConvolutionAccumulator<'a> {
    params: &'a NoiseParams,
    tau: f64,
    weighted: bool,
    sc: Vec<f64>,
    ss: Vec<f64>,
    wc: Vec<f64>,
    ws: Vec<f64>,
    absorbed: usize,
}

impl<'a> ConvolutionAccumulator<'a> {
    /// `weighted` selects whether the `I_k` sums are tracked.
    pub fn new(params: &'a NoiseParams, tau: f64, weighted: bool) -> Self {
        let m = params.modes();
        let w = if weighted { m } else { 0 };
        Self {
            params,
            tau,
            weighted,
            sc: vec![0.0; m],
            ss: vec![0.0; m],
            wc: vec![0.0; w],
            ws: vec![0.0; w],
            absorbed: 0,
        }
    }

    /// Number of sub-intervals absorbed so far.
    pub fn absorbed(&self) -> usize {
        self.absorbed
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    pub fn reset(&mut self) {
        for v in [&mut self.sc, &mut self.ss, &mut self.wc, &mut self.ws] {
            v.iter_mut().for_each(|x| *x = 0.0);
        }
        self.absorbed = 0;
    }

    /// Add the terms of sub-interval `k` (which must be the next one).
    pub fn absorb_step(
        &mut self,
        k: usize,
        increments: &[f64],
        weighted: Option<&[f64]>,
    ) -> Result<()> {
        if k != self.absorbed {
            return Err(Error::OutOfOrder {
                expected: self.absorbed,
                actual: k,
            });
        }
        let m = self.params.modes();
        if increments.len() != m {
            return Err(Error::DimensionMismatch {
                context: "increments per mode",
                expected: m,
                actual: increments.len(),
            });
        }
        let weighted = match (self.weighted, weighted) {
            (true, Some(w)) if w.len() == m => Some(w),
            (true, Some(w)) => {
                return Err(Error::DimensionMismatch {
                    context: "weighted integrals per mode",
                    expected: m,
                    actual: w.len(),
                })
            }
            (true, None) => return Err(Error::MissingWeighted),
            (false, _) => None,
        };
        let t = k as f64 * self.tau;
        for j in 0..m {
            let (s, c) = (self.params.omegas[j] * t).sin_cos();
            let sd = self.params.sigma[j] * increments[j];
            self.sc[j] += c * sd;
            self.ss[j] += s * sd;
            if let Some(w) = weighted {
                let si = self.params.sigma[j] * w[j];
                self.wc[j] += c * si;
                self.ws[j] += s * si;
            }
        }
        self.absorbed += 1;
        Ok(())
    }

    /// `σ_j ω_j^{-1} Σ_k sin(ω_j (t - t_k)) D_k`.
    pub fn low_order_convolution(&self, t: f64) -> SpectralField {
        let mut out = vec![0.0; self.params.modes()];
        self.low_order_into(t, &mut out);
        SpectralField::from_coeffs(out).expect("finite accumulator")
    }

    /// `σ_j Σ_k [ω_j^{-1} sin(ω_j (t - t_k)) D_k - cos(ω_j (t - t_k)) I_k]`.
    pub fn high_order_convolution(&self, t: f64) -> Result<SpectralField> {
        let mut out = vec![0.0; self.params.modes()];
        self.high_order_into(t, &mut out)?;
        SpectralField::from_coeffs(out)
    }

    /// `σ_j Σ_k cos(ω_j (t - t_k)) D_k`, the frozen-kernel velocity convolution.
    pub fn velocity_convolution(&self, t: f64) -> SpectralField {
        let coeffs = (0..self.params.modes())
            .map(|j| {
                let (s, c) = (self.params.omegas[j] * t).sin_cos();
                c * self.sc[j] + s * self.ss[j]
            })
            .collect();
        SpectralField::from_coeffs(coeffs).expect("finite accumulator")
    }

    pub(crate) fn low_order_into(&self, t: f64, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let w = self.params.omegas[j];
            let (s, c) = (w * t).sin_cos();
            *o = (s * self.sc[j] - c * self.ss[j]) / w;
        }
    }

    pub(crate) fn high_order_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        if !self.weighted {
            return Err(Error::MissingWeighted);
        }
        for (j, o) in out.iter_mut().enumerate() {
            let w = self.params.omegas[j];
            let (s, c) = (w * t).sin_cos();
            *o = (s * self.sc[j] - c * self.ss[j]) / w - (c * self.wc[j] + s * self.ws[j]);
        }
        Ok(())
    }
}

/// One noise path per spectral mode, all on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBundle {
    grid: TimeGrid,
    modes: Vec<ModeNoise>,
}

impl NoiseBundle {
    pub fn new(modes: Vec<ModeNoise>) -> Result<Self> {
        let grid = modes
            .first()
            .map(|m| m.grid())
            .ok_or_else(|| Error::config("M", "noise bundle needs at least one mode"))?;
        let weighted = modes[0].weighted().is_some();
        for m in &modes {
            if m.grid() != grid || m.weighted().is_some() != weighted {
                return Err(Error::config(
                    "noise",
                    "modes disagree on grid or weighting",
                ));
            }
        }
        Ok(Self { grid, modes })
    }

    /// Draw every mode on the covariance's grid from the `(sample, mode)`
    /// streams.
    pub fn sample(
        cov: &NoiseCovariance,
        streams: &NoiseStreams,
        sample: u32,
        modes: usize,
    ) -> Self {
        let modes = (0..modes)
            .map(|j| cov.sample(&mut streams.path_rng(sample, j as u32)))
            .collect();
        Self {
            grid: cov.grid(),
            modes,
        }
    }

    /// Zero noise.
    pub fn silent(grid: TimeGrid, hurst: Hurst, modes: usize, with_weighted: bool) -> Self {
        Self {
            grid,
            modes: vec![ModeNoise::silent(grid, hurst, with_weighted); modes],
        }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn modes(&self) -> &[ModeNoise] {
        &self.modes
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn has_weighted(&self) -> bool {
        self.modes[0].weighted().is_some()
    }

    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let modes = self
            .modes
            .iter()
            .map(|m| m.coarsen(factor))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: modes[0].grid(),
            modes,
        })
    }

    /// `D_k` across modes.
    pub(crate) fn increments_at(&self, k: usize, out: &mut [f64]) {
        for (o, m) in out.iter_mut().zip(&self.modes) {
            *o = m.increments()[k];
        }
    }

    /// `I_k` across modes; false when the bundle has no weighted integrals.
    pub(crate) fn weighted_at(&self, k: usize, out: &mut [f64]) -> bool {
        for (o, m) in out.iter_mut().zip(&self.modes) {
            match m.weighted() {
                Some(w) => *o = w[k],
                None => return false,
            }
        }
        true
    }
}
