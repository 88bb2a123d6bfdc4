//! Strong-convergence studies.
//!
//! No exact solution is available with noise, so errors are measured between
//! adjacent resolutions: `e_N = (E‖u_{aN}(T) - u_N(T)‖²)^{1/2}`, estimated by a
//! sample mean. Within one sample every resolution is driven by the same
//! noise path, sampled once on the finest grid and aggregated exactly.
//! Observed orders are `ln(e_N / e_{aN}) / ln a`.

use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::{aggregation_matrix, Hurst, NoiseCovariance, NoiseStreams, TimeGrid};
use crate::noise::NoiseBundle;
use crate::schemes::{Model, ModelConfig, PredictedRates, Record, Scheme};
use crate::spectral::SpectralField;

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub base: ModelConfig,
    /// Ascending, each entry `a` times the previous.
    pub resolutions: Vec<usize>,
    pub refinement: usize,
    pub samples: usize,
    pub seed: u64,
    pub scheme: Scheme,
    /// `false` runs the same pipeline with zero noise.
    pub noise: bool,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.refinement < 2 {
            return Err(Error::config(
                "a",
                format!("refinement factor {} below 2", self.refinement),
            ));
        }
        if self.resolutions.is_empty() {
            return Err(Error::config("N_list", "no resolutions given"));
        }
        if self.resolutions[0] == 0 {
            return Err(Error::config("N_list", "resolutions must be positive"));
        }
        for w in self.resolutions.windows(2) {
            if w[1] != self.refinement * w[0] {
                return Err(Error::config(
                    "N_list",
                    format!(
                        "resolutions {:?} are not successive multiples of a = {}",
                        self.resolutions, self.refinement
                    ),
                ));
            }
        }
        if self.samples == 0 {
            return Err(Error::config("samples", "need at least one sample"));
        }
        if self.samples > u32::MAX as usize || self.base.modes > u32::MAX as usize {
            return Err(Error::config(
                "samples",
                "sample or mode count exceeds stream space",
            ));
        }
        Ok(())
    }

    /// `a · max N`, the grid the noise is drawn on.
    pub fn finest_steps(&self) -> usize {
        self.refinement * self.resolutions.last().copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub tau: f64,
    pub error: f64,
    /// Delta-method standard error of `error`; absent with one sample.
    pub stderr: Option<f64>,
    /// Sample variance of the squared differences.
    pub sample_variance: f64,
    /// Order against the previous row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub alpha: f64,
    pub hurst: f64,
    pub rho: f64,
    pub modes: usize,
    pub horizon: f64,
    pub epsilon: f64,
    pub samples: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub refinement: usize,
    pub predicted: PredictedRates,
    pub rows: Vec<RateRow>,
    pub wall_time_secs: f64,
}

impl RateReport {
    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order).collect()
    }

    /// Least-squares slope of `ln e` against `ln τ`.
    pub fn fitted_slope(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .map(|r| (r.tau.ln(), r.error.ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    }
}

pub const CSV_HEADER: &str = "alpha,H,rho,M,N,samples,error,stderr,order";

/// Long-format CSV of one or more reports. Contains no timing data, so
/// identical plans give identical bytes.
pub fn write_csv<W: Write>(reports: &[RateReport], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in reports {
        for row in &r.rows {
            let stderr = row.stderr.map(|s| format!("{s:e}")).unwrap_or_default();
            let order = row.order.map(|o| format!("{o:.6}")).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{:e},{},{}",
                r.alpha, r.hurst, r.rho, r.modes, row.n, r.samples, row.error, stderr, order
            )?;
        }
    }
    Ok(())
}

/// Side-by-side text table: one row per `N`, an error and rate column per report.
pub fn format_table(reports: &[RateReport]) -> String {
    let labels: Vec<String> = reports
        .iter()
        .map(|r| format!("{} alpha={} H={}", r.scheme, r.alpha, r.hurst))
        .collect();
    let widths: Vec<usize> = labels.iter().map(|l| l.len().max(18)).collect();
    let mut s = String::new();
    let _ = write!(s, "{:>6}", "N");
    for (label, w) in labels.iter().zip(&widths) {
        let _ = write!(s, " | {label:<w$}");
    }
    s.push('\n');
    let rows = reports.iter().map(|r| r.rows.len()).max().unwrap_or(0);
    for i in 0..rows {
        let n = reports
            .iter()
            .find_map(|r| r.rows.get(i))
            .map(|r| r.n)
            .unwrap_or(0);
        let _ = write!(s, "{n:>6}");
        for (r, w) in reports.iter().zip(&widths) {
            let cell = match r.rows.get(i) {
                Some(row) => {
                    let order = row.order.map(|o| format!("{o:.3}")).unwrap_or_default();
                    format!("{:>11.3e} {order:>6}", row.error)
                }
                None => String::new(),
            };
            let _ = write!(s, " | {cell:>w$}");
        }
        s.push('\n');
    }
    s
}

/// `ln(e_coarse / e_fine) / ln a`.
pub fn estimate_order(e_coarse: f64, e_fine: f64, refinement: usize) -> Result<f64> {
    for e in [e_coarse, e_fine] {
        if e.is_nan() || e <= 0.0 {
            return Err(Error::NonPositiveError(e));
        }
    }
    if refinement < 2 {
        return Err(Error::config("a", "refinement factor below 2"));
    }
    Ok((e_coarse / e_fine).ln() / (refinement as f64).ln())
}

/// `(mean_s Σ_j Δû_j²)^{1/2}` summed in sample order.
pub fn mean_squared_l2(diffs: &[SpectralField]) -> f64 {
    let sq: Vec<f64> = diffs.iter().map(SpectralField::norm_sq).collect();
    (neumaier_sum(&sq) / sq.len() as f64).sqrt()
}

fn neumaier_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn welford_variance(xs: &[f64]) -> f64 {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    if xs.len() > 1 {
        m2 / (xs.len() - 1) as f64
    } else {
        0.0
    }
}

/// Squared terminal differences `‖u_{level i+1} - u_{level i}‖²` for one sample.
fn sample_differences(
    model: &Model,
    plan: &ExperimentPlan,
    cov: Option<&NoiseCovariance>,
    streams: &NoiseStreams,
    sample: u32,
    fine_grid: TimeGrid,
) -> Result<Vec<f64>> {
    let modes = plan.base.modes;
    let fine = match cov {
        Some(cov) => NoiseBundle::sample(cov, streams, sample, modes),
        None => NoiseBundle::silent(
            fine_grid,
            plan.base.hurst,
            modes,
            plan.scheme.needs_weighted(),
        ),
    };
    let finest = fine_grid.steps();
    let mut levels = plan.resolutions.clone();
    levels.push(finest);
    let mut terminals = Vec::with_capacity(levels.len());
    for &n in &levels {
        let bundle = fine.coarsen(finest / n)?;
        terminals.push(model.run(plan.scheme, &bundle, Record::Terminal)?.u);
    }
    Ok(terminals
        .windows(2)
        .map(|w| (&w[1] - &w[0]).norm_sq())
        .collect())
}

/// Monte Carlo study with common random numbers across resolutions.
///
/// Samples run on the current rayon pool; results are reduced in sample
/// order, so the report does not depend on the thread count.
pub fn run_convergence_study(plan: &ExperimentPlan) -> Result<RateReport> {
    plan.validate()?;
    let start = Instant::now();
    let model = Model::new(plan.base.clone())?;
    if plan.noise {
        if let Some(w) = plan.base.regime_warning(plan.scheme) {
            log::warn!("{w}; observed rates are not covered by the error analysis");
        }
    }
    let fine_grid = TimeGrid::new(plan.base.horizon, plan.finest_steps())?;
    let cov = if plan.noise {
        Some(NoiseCovariance::assemble(
            fine_grid,
            plan.base.hurst,
            plan.scheme.needs_weighted(),
        )?)
    } else {
        None
    };
    let streams = NoiseStreams::new(plan.seed);

    let per_sample: Vec<Vec<f64>> = (0..plan.samples as u32)
        .into_par_iter()
        .map(|s| sample_differences(&model, plan, cov.as_ref(), &streams, s, fine_grid))
        .collect::<Result<_>>()?;

    let mut rows: Vec<RateRow> = Vec::with_capacity(plan.resolutions.len());
    for (i, &n) in plan.resolutions.iter().enumerate() {
        let xs: Vec<f64> = per_sample.iter().map(|d| d[i]).collect();
        let mean = neumaier_sum(&xs) / xs.len() as f64;
        let variance = welford_variance(&xs);
        let error = mean.sqrt();
        let stderr = (xs.len() > 1 && error > 0.0)
            .then(|| (variance / xs.len() as f64).sqrt() / (2.0 * error));
        let order = match rows.last() {
            Some(prev) if prev.error > 0.0 && error > 0.0 => {
                Some(estimate_order(prev.error, error, plan.refinement)?)
            }
            _ => None,
        };
        rows.push(RateRow {
            n,
            tau: plan.base.horizon / n as f64,
            error,
            stderr,
            sample_variance: variance,
            order,
        });
    }
    Ok(report(
        &plan.base,
        plan.samples,
        plan.seed,
        plan.scheme,
        plan.refinement,
        rows,
        start,
    ))
}

/// Errors against the exact propagator with zero noise and `f ≡ 0`.
pub fn deterministic_order_study(
    base: &ModelConfig,
    scheme: Scheme,
    resolutions: &[usize],
) -> Result<RateReport> {
    if !base.nonlinearity.is_zero() {
        return Err(Error::config("f", "deterministic study requires f = zero"));
    }
    if resolutions.is_empty() {
        return Err(Error::config("N_list", "no resolutions given"));
    }
    let start = Instant::now();
    let model = Model::new(base.clone())?;
    let (exact, _) = model.exact_deterministic(base.horizon);
    let mut rows: Vec<RateRow> = Vec::new();
    for &n in resolutions {
        let grid = TimeGrid::new(base.horizon, n)?;
        let noise = NoiseBundle::silent(grid, base.hurst, base.modes, scheme.needs_weighted());
        let u = model.run(scheme, &noise, Record::Terminal)?.u;
        let error = (&u - &exact).norm();
        let order = match rows.last() {
            Some(prev) if n > prev.n && n % prev.n == 0 => {
                Some(estimate_order(prev.error, error, n / prev.n)?)
            }
            _ => None,
        };
        rows.push(RateRow {
            n,
            tau: grid.tau(),
            error,
            stderr: None,
            sample_variance: 0.0,
            order,
        });
    }
    let refinement = if resolutions.len() > 1 {
        resolutions[1] / resolutions[0]
    } else {
        1
    };
    Ok(report(base, 1, 0, scheme, refinement, rows, start))
}

fn report(
    base: &ModelConfig,
    samples: usize,
    seed: u64,
    scheme: Scheme,
    refinement: usize,
    rows: Vec<RateRow>,
    start: Instant,
) -> RateReport {
    RateReport {
        alpha: base.alpha,
        hurst: base.hurst.value(),
        rho: base.rho,
        modes: base.modes,
        horizon: base.horizon,
        epsilon: base.epsilon,
        samples,
        seed,
        scheme,
        refinement,
        predicted: base.predicted_rates(),
        rows,
        wall_time_secs: start.elapsed().as_secs_f64(),
    }
}

/// One sampler check: an empirical moment against its exact value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseStat {
    pub hurst: f64,
    pub statistic: String,
    pub expected: f64,
    pub observed: f64,
    pub stderr: f64,
}

impl NoiseStat {
    pub fn z_score(&self) -> f64 {
        if self.stderr > 0.0 {
            (self.observed - self.expected) / self.stderr
        } else if self.observed == self.expected {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// Within three standard errors (or, for exact identities, within `1e-10`).
    pub fn passes(&self) -> bool {
        if self.stderr > 0.0 {
            self.z_score().abs() <= 3.0
        } else {
            (self.observed - self.expected).abs() <= 1e-10
        }
    }
}

/// Empirical checks of the `(D, I)` sampler on a unit-step grid with `steps`
/// intervals (`τ = 1`), plus the exact coarsening identity for factor 2.
pub fn noise_statistics(
    hurst: Hurst,
    steps: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<NoiseStat>> {
    if steps < 2 || !steps.is_multiple_of(2) {
        return Err(Error::config(
            "N_list",
            "noise statistics need an even step count of at least 2",
        ));
    }
    if samples < 2 {
        return Err(Error::config(
            "samples",
            "noise statistics need at least 2 samples",
        ));
    }
    let h = hurst.value();
    let grid = TimeGrid::new(steps as f64, steps)?;
    let cov = NoiseCovariance::assemble(grid, hurst, true)?;
    let coarse_grid = grid.coarsen(2)?;
    let coarse_cov = NoiseCovariance::assemble(coarse_grid, hurst, true)?;
    let streams = NoiseStreams::new(seed);

    let mut d0 = Vec::with_capacity(samples);
    let mut d1 = Vec::with_capacity(samples);
    let mut i0 = Vec::with_capacity(samples);
    let mut cd0 = Vec::with_capacity(samples);
    let mut ci0 = Vec::with_capacity(samples);
    for s in 0..samples {
        let noise = cov.sample(&mut streams.path_rng(s as u32, 0));
        let coarse = noise.coarsen(2)?;
        d0.push(noise.increments()[0]);
        d1.push(noise.increments()[1]);
        i0.push(noise.weighted().expect("weighted")[0]);
        cd0.push(coarse.increments()[0]);
        ci0.push(coarse.weighted().expect("weighted")[0]);
    }
    let n = steps;
    let m = cov.matrix();
    let cm = coarse_cov.matrix();
    let cn = coarse_grid.steps();
    let mut stats = vec![
        moment(h, "var_D", &d0, &d0, m[(0, 0)], m[(0, 0)], m[(0, 0)]),
        moment(h, "cov_D_I", &d0, &i0, m[(0, n)], m[(0, 0)], m[(n, n)]),
        moment(h, "var_I", &i0, &i0, m[(n, n)], m[(n, n)], m[(n, n)]),
        moment(h, "cov_D0_D1", &d0, &d1, m[(0, 1)], m[(0, 0)], m[(1, 1)]),
        moment(
            h,
            "coarse_var_D",
            &cd0,
            &cd0,
            cm[(0, 0)],
            cm[(0, 0)],
            cm[(0, 0)],
        ),
        moment(
            h,
            "coarse_cov_D_I",
            &cd0,
            &ci0,
            cm[(0, cn)],
            cm[(0, 0)],
            cm[(cn, cn)],
        ),
    ];
    let agg = aggregation_matrix(&grid, 2, true)?;
    let pushed = &agg * m * agg.transpose();
    stats.push(NoiseStat {
        hurst: h,
        statistic: "coarsening_identity_max_abs".into(),
        expected: 0.0,
        observed: (pushed - cm).abs().max(),
        stderr: 0.0,
    });
    Ok(stats)
}

/// Sample `E[XY]` for centred Gaussians; `Var(XY) = σ_x²σ_y² + c²`.
fn moment(
    h: f64,
    name: &str,
    x: &[f64],
    y: &[f64],
    expected: f64,
    var_x: f64,
    var_y: f64,
) -> NoiseStat {
    let prods: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let s = prods.len() as f64;
    NoiseStat {
        hurst: h,
        statistic: name.into(),
        expected,
        observed: neumaier_sum(&prods) / s,
        stderr: ((var_x * var_y + expected * expected) / s).sqrt(),
    }
}
