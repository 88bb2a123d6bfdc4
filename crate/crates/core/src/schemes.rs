//! Difference schemes for the Ornstein–Uhlenbeck transformed system
//!
//! ```text
//! z'' = -A^α z + f(u),    u = z + ∫_0^t A^{-α/2} sin(A^{α/2}(t-s)) dB_H(s)
//! ```
//!
//! The operator is diagonal in the sine basis, so both implicit schemes are
//! solved in closed form per mode with `μ_j = λ_j^α`:
//!
//! * low order (rectangle rule):
//!   `ż_{n+1}(1 + τ²μ) = ż_n - τμ z_n + τ f̂_n`, `z_{n+1} = z_n + τ ż_{n+1}`;
//! * high order (trapezoidal rule with an extrapolated source
//!   `g = f̂_n + ½(f̂_n - f̂_{n-1})`):
//!   `ż_{n+1}(1 + τ²μ/4) = ż_n(1 - τ²μ/4) - τμ z_n + τ g`,
//!   `z_{n+1} = z_n + ½τ(ż_{n+1} + ż_n)`.
//!
//! The reconstructed `u_{n+1}` adds the matching stochastic-convolution
//! approximant to `z_{n+1}` and is what feeds the nonlinearity at the next
//! step. At `n = 0` the high-order scheme uses `f̂_{-1} = f̂_0`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::{Hurst, TimeGrid};
use crate::noise::{ConvolutionAccumulator, NoiseBundle, NoiseParams};
use crate::spectral::{EigenBasis, SineTransform, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Low,
    High,
}

impl Scheme {
    /// Whether the scheme consumes the weighted integrals `I_k`.
    pub fn needs_weighted(self) -> bool {
        matches!(self, Scheme::High)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Low => "low",
            Scheme::High => "high",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "low" => Ok(Scheme::Low),
            "high" => Ok(Scheme::High),
            other => Err(Error::config("scheme", format!("unknown scheme '{other}'"))),
        }
    }
}

/// Source term `f` applied pointwise in physical space.
#[derive(Clone, Copy)]
pub enum Nonlinearity {
    Sin,
    Zero,
    Custom {
        func: fn(f64) -> f64,
        lipschitz: Option<f64>,
    },
}

impl Nonlinearity {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Nonlinearity::Sin => x.sin(),
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Custom { func, .. } => func(x),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Nonlinearity::Zero)
    }
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonlinearity::Sin => f.write_str("Sin"),
            Nonlinearity::Zero => f.write_str("Zero"),
            Nonlinearity::Custom { lipschitz, .. } => f
                .debug_struct("Custom")
                .field("lipschitz", lipschitz)
                .finish(),
        }
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Nonlinearity::Sin => "sin",
            Nonlinearity::Zero => "zero",
            Nonlinearity::Custom { .. } => "custom",
        })
    }
}

impl FromStr for Nonlinearity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sin" => Ok(Nonlinearity::Sin),
            "zero" | "0" | "none" => Ok(Nonlinearity::Zero),
            other => Err(Error::config(
                "f",
                format!("unknown nonlinearity '{other}'"),
            )),
        }
    }
}

/// Regularity index and the convergence orders it predicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedRates {
    /// `γ = α + 2ρ - (1 + ε)/2`
    pub gamma: f64,
    /// `min{γ/α, 1}`
    pub low: f64,
    /// `1 + min{(γ - α)/α, H}`; only meaningful when `γ > α`.
    pub high: f64,
}

pub fn gamma_param(alpha: f64, rho: f64, epsilon: f64, hurst: f64) -> PredictedRates {
    let gamma = alpha + 2.0 * rho - 0.5 * (1.0 + epsilon);
    PredictedRates {
        gamma,
        low: (gamma / alpha).min(1.0),
        high: 1.0 + ((gamma - alpha) / alpha).min(hurst),
    }
}

#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub alpha: f64,
    pub hurst: Hurst,
    pub rho: f64,
    pub horizon: f64,
    pub modes: usize,
    pub nonlinearity: Nonlinearity,
    pub u0: SpectralField,
    pub v0: SpectralField,
    /// Only enters the predicted rates.
    pub epsilon: f64,
    /// Collocation size `Q`; `None` means `4M`.
    pub collocation: Option<usize>,
}

impl ModelConfig {
    pub const DEFAULT_EPSILON: f64 = 0.01;

    /// `u₀ = sin(2πx)/√2`, `v₀ = sin(3πx)/(2√2)`, `f = sin`.
    pub fn smooth_initial_data(
        alpha: f64,
        hurst: Hurst,
        rho: f64,
        horizon: f64,
        modes: usize,
    ) -> Result<Self> {
        if modes < 3 {
            return Err(Error::config(
                "M",
                "smooth initial data needs at least 3 modes",
            ));
        }
        let u0 = SpectralField::sine_multiple(modes, 2, std::f64::consts::FRAC_1_SQRT_2)?;
        let v0 = SpectralField::sine_multiple(modes, 3, 0.5 * std::f64::consts::FRAC_1_SQRT_2)?;
        let config = Self {
            alpha,
            hurst,
            rho,
            horizon,
            modes,
            nonlinearity: Nonlinearity::Sin,
            u0,
            v0,
            epsilon: Self::DEFAULT_EPSILON,
            collocation: None,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_nonlinearity(mut self, f: Nonlinearity) -> Self {
        self.nonlinearity = f;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config(
                "alpha",
                format!("α = {} outside (0, 1]", self.alpha),
            ));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::config(
                "rho",
                format!("ρ = {} must be nonnegative", self.rho),
            ));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::config(
                "T",
                format!("T = {} must be positive", self.horizon),
            ));
        }
        if self.modes == 0 {
            return Err(Error::config("M", "mode count must be at least 1"));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::config(
                "epsilon",
                format!("ε = {} must be positive", self.epsilon),
            ));
        }
        for (name, field) in [("u0", &self.u0), ("v0", &self.v0)] {
            if field.len() != self.modes {
                return Err(Error::DimensionMismatch {
                    context: name,
                    expected: self.modes,
                    actual: field.len(),
                });
            }
        }
        Ok(())
    }

    pub fn predicted_rates(&self) -> PredictedRates {
        gamma_param(self.alpha, self.rho, self.epsilon, self.hurst.value())
    }

    /// Describes why the theory does not cover `scheme` for this
    /// configuration, if it does not.
    pub fn regime_warning(&self, scheme: Scheme) -> Option<String> {
        let PredictedRates { gamma, .. } = self.predicted_rates();
        match scheme {
            Scheme::Low if !(gamma > 0.0 && gamma <= self.alpha) => Some(format!(
                "low-order scheme expects 0 < γ ≤ α, got γ = {gamma:.4}, α = {}",
                self.alpha
            )),
            Scheme::High if gamma <= self.alpha => Some(format!(
                "high-order scheme expects γ > α, got γ = {gamma:.4}, α = {}",
                self.alpha
            )),
            _ => None,
        }
    }
}

/// Spectral coefficients carried from step to step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepperState {
    pub z: Vec<f64>,
    pub zdot: Vec<f64>,
    pub f_prev: Vec<f64>,
    pub f_curr: Vec<f64>,
    pub step: usize,
}

impl StepperState {
    pub fn new(z0: &SpectralField, zdot0: &SpectralField, f0: &SpectralField) -> Self {
        Self {
            z: z0.coeffs().to_vec(),
            zdot: zdot0.coeffs().to_vec(),
            f_prev: f0.coeffs().to_vec(),
            f_curr: f0.coeffs().to_vec(),
            step: 0,
        }
    }

    #[allow(clippy::needless_range_loop)]
    pub fn low_order_step(&mut self, mu: &[f64], tau: f64) {
        for j in 0..mu.len() {
            let m = mu[j];
            let zd =
                (self.zdot[j] - tau * m * self.z[j] + tau * self.f_curr[j]) / (1.0 + tau * tau * m);
            self.z[j] += tau * zd;
            self.zdot[j] = zd;
        }
        self.step += 1;
    }

    #[allow(clippy::needless_range_loop)]
    pub fn high_order_step(&mut self, mu: &[f64], tau: f64) {
        for j in 0..mu.len() {
            let m = mu[j];
            let q = 0.25 * tau * tau * m;
            let g = self.f_curr[j] + 0.5 * (self.f_curr[j] - self.f_prev[j]);
            let zd = (self.zdot[j] * (1.0 - q) - tau * m * self.z[j] + tau * g) / (1.0 + q);
            self.z[j] += 0.5 * tau * (zd + self.zdot[j]);
            self.zdot[j] = zd;
        }
        self.step += 1;
    }

    /// `ż² + μ z²` per mode.
    pub fn energy(&self, mu: &[f64]) -> Vec<f64> {
        (0..mu.len())
            .map(|j| self.zdot[j] * self.zdot[j] + mu[j] * self.z[j] * self.z[j])
            .collect()
    }
}

/// What [`Model::run`] keeps besides the terminal state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Record {
    Terminal,
    /// `u_n` for every `n = 0..=N`.
    Trajectory,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub grid: TimeGrid,
    pub u: SpectralField,
    pub z: SpectralField,
    pub zdot: SpectralField,
    pub trajectory: Option<Vec<SpectralField>>,
}

impl RunOutput {
    /// CSV with columns `step,t,norm_u` followed by one column per selected
    /// mode (1-based).
    pub fn write_trajectory_csv<W: Write>(&self, mut out: W, modes: &[usize]) -> Result<()> {
        let Some(traj) = &self.trajectory else {
            return Err(Error::config("record", "run did not record a trajectory"));
        };
        write!(out, "step,t,norm_u")?;
        for j in modes {
            write!(out, ",u_{j}")?;
        }
        writeln!(out)?;
        for (n, u) in traj.iter().enumerate() {
            write!(out, "{n},{:e},{:e}", self.grid.node(n), u.norm())?;
            for &j in modes {
                write!(out, ",{:e}", u.coeffs()[j - 1])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// A configuration with its precomputed spectral data. Immutable and
/// shareable across threads.
#[derive(Debug, Clone)]
pub struct Model {
    config: ModelConfig,
    basis: EigenBasis,
    params: NoiseParams,
    transform: Option<SineTransform>,
    mu: Vec<f64>,
}

impl Model {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let basis = EigenBasis::new(config.modes)?;
        let params = NoiseParams::new(&basis, config.alpha, config.rho)?;
        let transform = if config.nonlinearity.is_zero() {
            None
        } else {
            let q = config
                .collocation
                .unwrap_or_else(|| SineTransform::default_points(config.modes));
            Some(SineTransform::new(config.modes, q)?)
        };
        if let Nonlinearity::Custom {
            lipschitz: None, ..
        } = config.nonlinearity
        {
            log::warn!("custom nonlinearity has no declared Lipschitz bound");
        }
        let mu = basis.powers(config.alpha);
        Ok(Self {
            config,
            basis,
            params,
            transform,
            mu,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn basis(&self) -> &EigenBasis {
        &self.basis
    }

    pub fn noise_params(&self) -> &NoiseParams {
        &self.params
    }

    /// `μ_j = λ_j^α`.
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// Coefficients of `f∘u` via evaluate → pointwise `f` → project.
    pub fn evaluate_nonlinearity(&self, u: &SpectralField) -> Result<SpectralField> {
        if u.len() != self.config.modes {
            return Err(Error::DimensionMismatch {
                context: "nonlinearity input",
                expected: self.config.modes,
                actual: u.len(),
            });
        }
        let mut out = vec![0.0; self.config.modes];
        let mut scratch = self.scratch();
        self.nonlinearity_into(u.coeffs(), &mut out, &mut scratch);
        SpectralField::from_coeffs(out)
    }

    fn scratch(&self) -> Vec<f64> {
        self.transform
            .as_ref()
            .map(|t| vec![0.0; t.points() - 1])
            .unwrap_or_default()
    }

    fn nonlinearity_into(&self, u: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        match &self.transform {
            None => out.iter_mut().for_each(|c| *c = 0.0),
            Some(tr) => {
                tr.evaluate_into(u, scratch);
                let f = self.config.nonlinearity;
                scratch.iter_mut().for_each(|v| *v = f.apply(*v));
                tr.project_into(scratch, out);
            }
        }
    }

    /// Run the full time loop over the bundle's grid.
    pub fn run(&self, scheme: Scheme, noise: &NoiseBundle, record: Record) -> Result<RunOutput> {
        let m = self.config.modes;
        if noise.mode_count() != m {
            return Err(Error::DimensionMismatch {
                context: "noise modes",
                expected: m,
                actual: noise.mode_count(),
            });
        }
        let grid = noise.grid();
        if (grid.horizon() - self.config.horizon).abs() > 1e-12 * self.config.horizon {
            return Err(Error::config(
                "T",
                format!(
                    "noise horizon {} differs from model horizon {}",
                    grid.horizon(),
                    self.config.horizon
                ),
            ));
        }
        let weighted = scheme.needs_weighted();
        if weighted && !noise.has_weighted() {
            return Err(Error::MissingWeighted);
        }
        let tau = grid.tau();
        let mut acc = ConvolutionAccumulator::new(&self.params, tau, weighted);
        let mut scratch = self.scratch();

        let u0 = &self.config.u0;
        let mut f0 = vec![0.0; m];
        self.nonlinearity_into(u0.coeffs(), &mut f0, &mut scratch);
        let f0 = SpectralField::from_coeffs(f0)?;
        let mut state = StepperState::new(u0, &self.config.v0, &f0);

        let mut trajectory = (record == Record::Trajectory).then(|| vec![u0.clone()]);
        let mut d = vec![0.0; m];
        let mut w = vec![0.0; m];
        let mut conv = vec![0.0; m];
        let mut u = u0.coeffs().to_vec();
        let steps = grid.steps();
        for n in 0..steps {
            match scheme {
                Scheme::Low => state.low_order_step(&self.mu, tau),
                Scheme::High => state.high_order_step(&self.mu, tau),
            }
            noise.increments_at(n, &mut d);
            if weighted {
                noise.weighted_at(n, &mut w);
                acc.absorb_step(n, &d, Some(&w))?;
            } else {
                acc.absorb_step(n, &d, None)?;
            }
            let t = grid.node(n + 1);
            match scheme {
                Scheme::Low => acc.low_order_into(t, &mut conv),
                Scheme::High => acc.high_order_into(t, &mut conv)?,
            }
            for j in 0..m {
                u[j] = state.z[j] + conv[j];
            }
            if let Some(traj) = trajectory.as_mut() {
                traj.push(SpectralField::from_coeffs(u.clone())?);
            }
            if n + 1 < steps {
                std::mem::swap(&mut state.f_prev, &mut state.f_curr);
                self.nonlinearity_into(&u, &mut state.f_curr, &mut scratch);
            }
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("terminal solution"));
        }
        Ok(RunOutput {
            grid,
            u: SpectralField::from_coeffs(u)?,
            z: SpectralField::from_coeffs(state.z)?,
            zdot: SpectralField::from_coeffs(state.zdot)?,
            trajectory,
        })
    }

    /// Exact `(u(t), v(t))` with zero noise and `f ≡ 0`.
    pub fn exact_deterministic(&self, t: f64) -> (SpectralField, SpectralField) {
        let omegas = self.params.omegas();
        let (u0, v0) = (self.config.u0.coeffs(), self.config.v0.coeffs());
        let mut u = vec![0.0; omegas.len()];
        let mut v = vec![0.0; omegas.len()];
        for j in 0..omegas.len() {
            let w = omegas[j];
            let (s, c) = (w * t).sin_cos();
            u[j] = c * u0[j] + s / w * v0[j];
            v[j] = -w * s * u0[j] + c * v0[j];
        }
        (
            SpectralField::from_coeffs(u).expect("finite"),
            SpectralField::from_coeffs(v).expect("finite"),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn hurst() -> Hurst {
        Hurst::new(0.8).unwrap()
    }

    fn single_mode_state(z0: f64) -> StepperState {
        let z = SpectralField::from_coeffs(vec![z0]).unwrap();
        StepperState::new(&z, &SpectralField::zeros(1), &SpectralField::zeros(1))
    }

    #[test]
    fn zero_state_stays_zero() {
        let zero = SpectralField::zeros(3);
        let mut s = StepperState::new(&zero, &zero, &zero);
        let mu = [1.0, 4.0, 9.0];
        for _ in 0..10 {
            s.low_order_step(&mu, 0.1);
            s.high_order_step(&mu, 0.1);
        }
        assert!(s.z.iter().chain(&s.zdot).all(|&x| x == 0.0));
        assert_eq!(s.step, 20);
    }

    #[test]
    fn low_order_hand_values() {
        let mut s = single_mode_state(1.0);
        s.low_order_step(&[PI * PI], 0.1);
        let mu = PI * PI;
        let zd = -0.1 * mu / (1.0 + 0.01 * mu);
        assert_relative_eq!(s.zdot[0], zd, epsilon = 1e-15);
        assert_relative_eq!(s.z[0], 1.0 + 0.1 * zd, epsilon = 1e-15);
        assert!((s.zdot[0] - -0.898_301_6).abs() < 1e-7);
        assert!((s.z[0] - 0.910_169_8).abs() < 1e-7);
    }

    #[test]
    fn high_order_hand_values() {
        let mu = [PI * PI];
        let mut s = single_mode_state(1.0);
        s.high_order_step(&mu, 0.1);
        let zd = -0.1 * mu[0] / (1.0 + 0.0025 * mu[0]);
        assert_relative_eq!(s.zdot[0], zd, epsilon = 1e-15);
        assert_relative_eq!(s.z[0], 1.0 + 0.05 * zd, epsilon = 1e-15);
        assert!((s.zdot[0] - -0.963_194_6).abs() < 1e-7);
        assert!((s.z[0] - 0.951_840_3).abs() < 1e-7);
        assert_relative_eq!(s.energy(&mu)[0], PI * PI, epsilon = 1e-10);
    }

    #[test]
    fn low_order_energy_non_increasing() {
        let mu = [PI * PI, 40.0, 1000.0];
        let z = SpectralField::from_coeffs(vec![1.0, -0.3, 0.01]).unwrap();
        let zd = SpectralField::from_coeffs(vec![0.2, 2.0, -1.0]).unwrap();
        let mut s = StepperState::new(&z, &zd, &SpectralField::zeros(3));
        let mut prev = s.energy(&mu);
        for _ in 0..1000 {
            s.low_order_step(&mu, 0.01);
            let e = s.energy(&mu);
            assert!(e.iter().zip(&prev).all(|(a, b)| a <= b));
            prev = e;
        }
    }

    #[test]
    fn high_order_energy_conserved() {
        let mu = [PI * PI, 400.0];
        let z = SpectralField::from_coeffs(vec![1.0, 0.5]).unwrap();
        let zd = SpectralField::from_coeffs(vec![0.0, -3.0]).unwrap();
        let mut s = StepperState::new(&z, &zd, &SpectralField::zeros(2));
        let e0 = s.energy(&mu);
        for _ in 0..10_000 {
            s.high_order_step(&mu, 1e-3);
        }
        for (a, b) in s.energy(&mu).iter().zip(&e0) {
            assert!((a - b).abs() <= 1e-9 * b);
        }
    }

    #[test]
    fn nonlinearity_examples() {
        let base = ModelConfig::smooth_initial_data(0.8, hurst(), 0.25, 0.5, 8).unwrap();
        let zero_f = Model::new(base.clone().with_nonlinearity(Nonlinearity::Zero)).unwrap();
        let u = SpectralField::from_coeffs(vec![0.3; 8]).unwrap();
        assert!(zero_f
            .evaluate_nonlinearity(&u)
            .unwrap()
            .coeffs()
            .iter()
            .all(|&c| c == 0.0));

        let sin_f = Model::new(base).unwrap();
        let zero = SpectralField::zeros(8);
        assert!(sin_f
            .evaluate_nonlinearity(&zero)
            .unwrap()
            .coeffs()
            .iter()
            .all(|&c| c == 0.0));

        // sin(c φ₂) = c φ₂ + O(c³)
        let c = 1e-3;
        let small = SpectralField::single_mode(8, 2, c).unwrap();
        let f = sin_f.evaluate_nonlinearity(&small).unwrap();
        assert!((f.coeffs()[1] - c).abs() < 1e-8);
        assert!(f
            .coeffs()
            .iter()
            .enumerate()
            .all(|(i, v)| i == 1 || v.abs() < 1e-8));
    }

    #[test]
    fn exact_propagator_examples() {
        let cfg = ModelConfig::smooth_initial_data(0.7, hurst(), 0.25, 0.5, 4).unwrap();
        let model = Model::new(cfg.clone()).unwrap();
        let (u, v) = model.exact_deterministic(0.0);
        assert_eq!(u, cfg.u0);
        assert_eq!(v, cfg.v0);

        let mut cfg1 = cfg.clone();
        cfg1.u0 = SpectralField::single_mode(4, 1, 1.0).unwrap();
        cfg1.v0 = SpectralField::zeros(4);
        let model = Model::new(cfg1).unwrap();
        let w1 = model.noise_params().omegas()[0];
        let (u, v) = model.exact_deterministic(PI / (2.0 * w1));
        assert!(u.coeffs()[0].abs() < 1e-15);
        assert_relative_eq!(v.coeffs()[0], -w1, epsilon = 1e-12);

        let model = Model::new(cfg).unwrap();
        let w = model.noise_params().omegas().to_vec();
        let energy = |t: f64| {
            let (u, v) = model.exact_deterministic(t);
            (0..4)
                .map(|j| v.coeffs()[j].powi(2) + (w[j] * u.coeffs()[j]).powi(2))
                .collect::<Vec<_>>()
        };
        let e0 = energy(0.0);
        for t in [0.1, 0.37, 2.0] {
            for (a, b) in energy(t).iter().zip(&e0) {
                assert!((a - b).abs() <= 1e-12 * b.max(1.0));
            }
        }
    }

    #[test]
    fn gamma_examples() {
        let r = gamma_param(0.6, 0.25, 0.1, 0.8);
        assert_relative_eq!(r.gamma, 0.55, epsilon = 1e-12);
        assert_relative_eq!(r.low, 0.55 / 0.6, epsilon = 1e-12);
        let r = gamma_param(0.8, 1.5, 0.1, 0.6);
        assert_relative_eq!(r.gamma, 3.25, epsilon = 1e-12);
        assert_relative_eq!(r.high, 1.6, epsilon = 1e-12);
        let r = gamma_param(0.8, 0.25, 1e-9, 0.8);
        assert!((r.low - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_noise_reconstruction_equals_z() {
        let cfg = ModelConfig::smooth_initial_data(0.8, hurst(), 0.25, 0.5, 6).unwrap();
        let model = Model::new(cfg).unwrap();
        let grid = TimeGrid::new(0.5, 20).unwrap();
        for scheme in [Scheme::Low, Scheme::High] {
            let noise = NoiseBundle::silent(grid, hurst(), 6, scheme.needs_weighted());
            let out = model.run(scheme, &noise, Record::Terminal).unwrap();
            assert_eq!(out.u, out.z);
        }
        let noise = NoiseBundle::silent(grid, hurst(), 6, false);
        assert!(matches!(
            model.run(Scheme::High, &noise, Record::Terminal),
            Err(Error::MissingWeighted)
        ));
        let wrong = NoiseBundle::silent(grid, hurst(), 5, false);
        assert!(model.run(Scheme::Low, &wrong, Record::Terminal).is_err());
    }

    #[test]
    fn one_step_reconstruction_matches_hand_formula() {
        let mut cfg = ModelConfig::smooth_initial_data(1.0, hurst(), 0.25, 0.1, 3).unwrap();
        cfg.nonlinearity = Nonlinearity::Zero;
        let model = Model::new(cfg.clone()).unwrap();
        let grid = TimeGrid::new(0.1, 1).unwrap();
        let modes = (0..3)
            .map(|j| {
                crate::fbm::ModeNoise::new(
                    grid,
                    hurst(),
                    vec![0.1 * (j + 1) as f64],
                    Some(vec![0.01]),
                )
                .unwrap()
            })
            .collect();
        let noise = NoiseBundle::new(modes).unwrap();
        let p = model.noise_params();
        for scheme in [Scheme::Low, Scheme::High] {
            let out = model.run(scheme, &noise, Record::Trajectory).unwrap();
            for j in 0..3 {
                let (s, w) = (p.sigma()[j], p.omegas()[j]);
                let d = 0.1 * (j + 1) as f64;
                let mut expected = out.z.coeffs()[j] + s * (w * 0.1).sin() / w * d;
                if scheme == Scheme::High {
                    expected -= s * (w * 0.1).cos() * 0.01;
                }
                assert_relative_eq!(out.u.coeffs()[j], expected, epsilon = 1e-15);
            }
            assert_eq!(out.trajectory.as_ref().unwrap().len(), 2);
            let mut csv = Vec::new();
            out.write_trajectory_csv(&mut csv, &[1, 2]).unwrap();
            assert!(String::from_utf8(csv)
                .unwrap()
                .starts_with("step,t,norm_u,u_1,u_2\n"));
        }
    }

    #[test]
    fn regime_warnings() {
        let low = ModelConfig::smooth_initial_data(0.6, hurst(), 0.25, 0.5, 4).unwrap();
        assert!(low.regime_warning(Scheme::Low).is_none());
        assert!(low.regime_warning(Scheme::High).is_some());
        let high = ModelConfig::smooth_initial_data(0.6, hurst(), 1.5, 0.5, 4).unwrap();
        assert!(high.regime_warning(Scheme::High).is_none());
        assert!(high.regime_warning(Scheme::Low).is_some());
    }

    #[test]
    fn config_domain_checks() {
        assert!(ModelConfig::smooth_initial_data(0.0, hurst(), 0.25, 0.5, 4).is_err());
        assert!(ModelConfig::smooth_initial_data(1.0, hurst(), 0.25, 0.5, 4).is_ok());
        assert!(ModelConfig::smooth_initial_data(0.5, hurst(), -1.0, 0.5, 4).is_err());
        assert!(ModelConfig::smooth_initial_data(0.5, hurst(), 0.25, 0.5, 2).is_err());
        assert!("sin".parse::<Nonlinearity>().is_ok());
        assert!("cube".parse::<Nonlinearity>().is_err());
        assert_eq!("HIGH".parse::<Scheme>().unwrap(), Scheme::High);
    }
}
