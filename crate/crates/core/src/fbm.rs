//! Exact joint sampling of fractional Brownian motion increments
//! `D_k = β_H(t_{k+1}) - β_H(t_k)` and time-weighted integrals
//! `I_k = ∫_{t_k}^{t_{k+1}} (s - t_k) dβ_H(s)` on a uniform grid.
//!
//! The stacked vector `(D_0..D_{N-1}, I_0..I_{N-1})` is Gaussian with a
//! covariance that is stationary in the lag `k - j`. Entries are taken from
//! the kernel `H(2H-1)|s-r|^{2H-2}`:
//!
//! * for lags `|ℓ| ≤ 2` through closed forms obtained by writing
//!   `I_k = τ D_k - ∫_{t_k}^{t_{k+1}} (β_H(s) - β_H(t_k)) ds` and integrating
//!   the fBm covariance analytically,
//! * for lags `|ℓ| ≥ 3`, where the kernel is smooth on the cell and the closed
//!   forms lose digits to cancellation, through tensor Gauss–Legendre
//!   quadrature of the kernel itself.
//!
//! The covariance is factored once per `(grid, H)` pair and reused for every
//! mode and every sample.

use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Lags at or beyond this use quadrature instead of the closed forms.
const FAR_LAG: i64 = 3;
const FAR_NODES: usize = 10;
const JITTER_RETRIES: usize = 3;

/// Hurst index, restricted to the open interval `(1/2, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Hurst(f64);

impl Hurst {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.5 && h < 1.0) {
            return Err(Error::config("hurst", format!("H = {h} outside (1/2, 1)")));
        }
        Ok(Self(h))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Hurst {
    type Error = Error;

    fn try_from(h: f64) -> Result<Self> {
        Hurst::new(h)
    }
}

impl From<Hurst> for f64 {
    fn from(h: Hurst) -> f64 {
        h.0
    }
}

/// Uniform grid `t_k = kτ`, `τ = T/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::config(
                "T",
                format!("horizon {horizon} must be positive"),
            ));
        }
        if steps == 0 {
            return Err(Error::config("N", "step count must be at least 1"));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn tau(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.tau()
        }
    }

    /// Grid with `factor` times fewer steps over the same horizon.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.steps.is_multiple_of(factor) {
            return Err(Error::config(
                "a",
                format!(
                    "coarsening factor {factor} does not divide N = {}",
                    self.steps
                ),
            ));
        }
        Self::new(self.horizon, self.steps / factor)
    }
}

fn check_indices(j: usize, k: usize, grid: &TimeGrid) -> Result<()> {
    if j >= grid.steps || k >= grid.steps {
        return Err(Error::config(
            "index",
            format!("({j}, {k}) outside 0..{}", grid.steps),
        ));
    }
    Ok(())
}

/// `Cov(D_j, D_k)`.
pub fn increment_covariance(j: usize, k: usize, grid: &TimeGrid, hurst: Hurst) -> Result<f64> {
    check_indices(j, k, grid)?;
    let h = hurst.value();
    let lag = k as i64 - j as i64;
    Ok(grid.tau().powf(2.0 * h) * LagCovariance::at(h, lag).dd)
}

/// `Cov(D_j, I_k)`.
pub fn cross_covariance(j: usize, k: usize, grid: &TimeGrid, hurst: Hurst) -> Result<f64> {
    check_indices(j, k, grid)?;
    let h = hurst.value();
    let lag = k as i64 - j as i64;
    Ok(grid.tau().powf(2.0 * h + 1.0) * LagCovariance::at(h, lag).di)
}

/// `Cov(I_j, I_k)`.
pub fn weighted_covariance(j: usize, k: usize, grid: &TimeGrid, hurst: Hurst) -> Result<f64> {
    check_indices(j, k, grid)?;
    let h = hurst.value();
    let lag = (k as i64 - j as i64).abs();
    Ok(grid.tau().powf(2.0 * h + 2.0) * LagCovariance::at(h, lag).ii)
}

/// Covariances between interval `[0,1]` and interval `[ℓ, ℓ+1]` on the unit
/// grid; `τ`-scaling is applied by the caller via self-similarity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LagCovariance {
    /// `Cov(D_0, D_ℓ)`
    pub dd: f64,
    /// `Cov(D_0, I_ℓ)`
    pub di: f64,
    /// `Cov(I_0, D_ℓ)`
    pub id: f64,
    /// `Cov(I_0, I_ℓ)`
    pub ii: f64,
}

impl LagCovariance {
    pub(crate) fn at(h: f64, lag: i64) -> Self {
        if lag.abs() >= FAR_LAG {
            Self::quadrature(h, lag, FAR_NODES)
        } else {
            Self::closed_form(h, lag)
        }
    }

    pub(crate) fn closed_form(h: f64, lag: i64) -> Self {
        let p = 2.0 * h;
        let g = |x: f64| x.abs().powf(p);
        let phi1 = |x: f64| x.signum() * x.abs().powf(p + 1.0) / (p + 1.0);
        let phi2 = |x: f64| x.abs().powf(p + 2.0) / ((p + 1.0) * (p + 2.0));
        let l = lag as f64;

        let dd = |l: f64| 0.5 * (g(1.0 - l) + g(-l - 1.0) - 2.0 * g(l));
        // Cov(D_0, Y_ℓ) with Y_ℓ = ∫_ℓ^{ℓ+1} (β(r) - β(ℓ)) dr
        let dy = |l: f64| {
            0.5 * (g(1.0 - l) + (phi1(l + 1.0) - phi1(l)) - (phi1(l) - phi1(l - 1.0)) - g(l))
        };
        let yy = 0.5
            * ((phi1(1.0 - l) - phi1(-l)) + (phi1(l + 1.0) - phi1(l))
                - (phi2(l + 1.0) - 2.0 * phi2(l) + phi2(l - 1.0))
                - g(l));

        let dd_l = dd(l.abs());
        let dy_fwd = dy(l);
        let dy_bwd = dy(-l);
        Self {
            dd: dd_l,
            di: dd_l - dy_fwd,
            id: dd_l - dy_bwd,
            ii: dd_l - dy_fwd - dy_bwd + yy,
        }
    }

    /// Tensor Gauss–Legendre on `[0,1] × [ℓ, ℓ+1]`. Only accurate away from
    /// the diagonal singularity.
    pub(crate) fn quadrature(h: f64, lag: i64, nodes: usize) -> Self {
        let l = lag as f64;
        let rule_s = quadrature::mapped(nodes, 0.0, 1.0);
        let rule_r = quadrature::mapped(nodes, l, l + 1.0);
        let coef = h * (2.0 * h - 1.0);
        let (mut dd, mut di, mut id, mut ii) = (0.0, 0.0, 0.0, 0.0);
        for &(s, ws) in &rule_s {
            for &(r, wr) in &rule_r {
                let k = ws * wr * (s - r).abs().powf(2.0 * h - 2.0);
                let rs = r - l;
                dd += k;
                di += k * rs;
                id += k * s;
                ii += k * s * rs;
            }
        }
        Self {
            dd: coef * dd,
            di: coef * di,
            id: coef * id,
            ii: coef * ii,
        }
    }
}

/// Covariance of the stacked noise vector for one `(grid, H)` pair together
/// with its lower Cholesky factor.
#[derive(Debug, Clone)]
pub struct NoiseCovariance {
    grid: TimeGrid,
    hurst: Hurst,
    with_weighted: bool,
    matrix: DMatrix<f64>,
    factor: DMatrix<f64>,
    jitter: f64,
}

impl NoiseCovariance {
    /// Assemble and factor. A failed factorization is retried up to three
    /// times, each time adding `1e-14 · max diag` to the diagonal.
    pub fn assemble(grid: TimeGrid, hurst: Hurst, with_weighted: bool) -> Result<Self> {
        let n = grid.steps;
        let h = hurst.value();
        let tau = grid.tau();
        let s_dd = tau.powf(2.0 * h);
        let s_di = tau.powf(2.0 * h + 1.0);
        let s_ii = tau.powf(2.0 * h + 2.0);

        let lags: Vec<LagCovariance> = (0..n as i64).map(|l| LagCovariance::at(h, l)).collect();
        let neg_lags: Vec<LagCovariance> =
            (0..n as i64).map(|l| LagCovariance::at(h, -l)).collect();
        let lag = |j: usize, k: usize| -> &LagCovariance {
            if k >= j {
                &lags[k - j]
            } else {
                &neg_lags[j - k]
            }
        };

        let order = if with_weighted { 2 * n } else { n };
        let mut matrix = DMatrix::<f64>::zeros(order, order);
        for j in 0..n {
            for k in 0..=j {
                let v = s_dd * lags[j - k].dd;
                matrix[(j, k)] = v;
                matrix[(k, j)] = v;
            }
        }
        if with_weighted {
            for j in 0..n {
                for k in 0..n {
                    // Cov(I_j, D_k)
                    let v = s_di * lag(j, k).id;
                    matrix[(n + j, k)] = v;
                    matrix[(k, n + j)] = v;
                }
                for k in 0..=j {
                    let v = s_ii * lags[j - k].ii;
                    matrix[(n + j, n + k)] = v;
                    matrix[(n + k, n + j)] = v;
                }
            }
        }

        let max_diag = matrix.diagonal().max();
        let mut jitter = 0.0;
        for attempt in 0..=JITTER_RETRIES {
            let mut trial = matrix.clone();
            if attempt > 0 {
                jitter = attempt as f64 * 1e-14 * max_diag;
                for i in 0..order {
                    trial[(i, i)] += jitter;
                }
            }
            if let Some(chol) = nalgebra::Cholesky::new(trial) {
                if attempt > 0 {
                    log::warn!("covariance needed diagonal jitter {jitter:e} (N={n}, H={h})");
                }
                return Ok(Self {
                    grid,
                    hurst,
                    with_weighted,
                    matrix,
                    factor: chol.l(),
                    jitter,
                });
            }
        }
        Err(Error::Factorization {
            steps: n,
            tau,
            hurst: h,
            retries: JITTER_RETRIES,
        })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn hurst(&self) -> Hurst {
        self.hurst
    }

    pub fn with_weighted(&self) -> bool {
        self.with_weighted
    }

    pub fn order(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// Diagonal shift that was needed for the factorization (usually 0).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// One draw `L z`, `z ~ N(0, I)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ModeNoise {
        let order = self.order();
        let z: Vec<f64> = (0..order).map(|_| rng.sample(StandardNormal)).collect();
        let mut y = vec![0.0; order];
        let l = self.factor.as_slice();
        // column-major lower factor: y += L[k.., k] z_k
        for (k, &zk) in z.iter().enumerate() {
            let col = &l[k * order + k..(k + 1) * order];
            for (yi, lik) in y[k..].iter_mut().zip(col) {
                *yi += lik * zk;
            }
        }
        let n = self.grid.steps;
        let weighted = self.with_weighted.then(|| y.split_off(n));
        ModeNoise {
            grid: self.grid,
            hurst: self.hurst,
            increments: y,
            weighted,
        }
    }
}

/// Noise driving one spectral mode over one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeNoise {
    grid: TimeGrid,
    hurst: Hurst,
    increments: Vec<f64>,
    weighted: Option<Vec<f64>>,
}

impl ModeNoise {
    pub fn new(
        grid: TimeGrid,
        hurst: Hurst,
        increments: Vec<f64>,
        weighted: Option<Vec<f64>>,
    ) -> Result<Self> {
        if increments.len() != grid.steps {
            return Err(Error::DimensionMismatch {
                context: "increments",
                expected: grid.steps,
                actual: increments.len(),
            });
        }
        if let Some(w) = &weighted {
            if w.len() != grid.steps {
                return Err(Error::DimensionMismatch {
                    context: "weighted integrals",
                    expected: grid.steps,
                    actual: w.len(),
                });
            }
        }
        Ok(Self {
            grid,
            hurst,
            increments,
            weighted,
        })
    }

    /// All-zero path.
    pub fn silent(grid: TimeGrid, hurst: Hurst, with_weighted: bool) -> Self {
        Self {
            grid,
            hurst,
            increments: vec![0.0; grid.steps],
            weighted: with_weighted.then(|| vec![0.0; grid.steps]),
        }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn hurst(&self) -> Hurst {
        self.hurst
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn weighted(&self) -> Option<&[f64]> {
        self.weighted.as_deref()
    }

    /// Aggregate `factor` consecutive intervals:
    /// `D'_k = Σ_m D_{ak+m}`, `I'_k = Σ_m [I_{ak+m} + m τ D_{ak+m}]`.
    pub fn coarsen(&self, factor: usize) -> Result<ModeNoise> {
        if factor < 2 {
            if factor == 1 {
                return Ok(self.clone());
            }
            return Err(Error::config("a", "coarsening factor must be at least 2"));
        }
        let grid = self.grid.coarsen(factor)?;
        let tau = self.grid.tau();
        let increments = self
            .increments
            .chunks_exact(factor)
            .map(|c| c.iter().sum())
            .collect();
        let weighted = self.weighted.as_ref().map(|w| {
            w.chunks_exact(factor)
                .zip(self.increments.chunks_exact(factor))
                .map(|(wc, dc)| {
                    wc.iter()
                        .zip(dc)
                        .enumerate()
                        .map(|(m, (i, d))| i + m as f64 * tau * d)
                        .sum()
                })
                .collect()
        });
        Ok(ModeNoise {
            grid,
            hurst: self.hurst,
            increments,
            weighted,
        })
    }

    /// Debug dump with columns `k,t_k,D_k,I_k` (`I_k` empty when absent).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "k,t_k,D_k,I_k")?;
        for (k, d) in self.increments.iter().enumerate() {
            match &self.weighted {
                Some(w) => writeln!(out, "{k},{:e},{d:e},{:e}", self.grid.node(k), w[k])?,
                None => writeln!(out, "{k},{:e},{d:e},", self.grid.node(k))?,
            }
        }
        Ok(())
    }
}

/// Linear map taking a fine stacked `(D, I)` vector to its coarsened
/// counterpart. Used to push a fine covariance through the aggregation.
pub fn aggregation_matrix(
    fine: &TimeGrid,
    factor: usize,
    with_weighted: bool,
) -> Result<DMatrix<f64>> {
    let coarse = fine.coarsen(factor)?;
    let (nf, nc) = (fine.steps, coarse.steps);
    let tau = fine.tau();
    let (rows, cols) = if with_weighted {
        (2 * nc, 2 * nf)
    } else {
        (nc, nf)
    };
    let mut a = DMatrix::zeros(rows, cols);
    for k in 0..nc {
        for m in 0..factor {
            let f = factor * k + m;
            a[(k, f)] = 1.0;
            if with_weighted {
                a[(nc + k, nf + f)] = 1.0;
                a[(nc + k, f)] = m as f64 * tau;
            }
        }
    }
    Ok(a)
}

/// Derives independent, reproducible RNG streams per `(sample, mode)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseStreams {
    seed: u64,
}

impl NoiseStreams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_rng(&self, sample: u32, mode: u32) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((sample as u64) << 32) | mode as u64);
        rng
    }
}
