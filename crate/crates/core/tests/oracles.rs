//! Independent oracles: nested quadrature of the fBm kernel, Monte Carlo
//! moments of the stochastic convolution, and statistical checks of the
//! convergence estimator.

use fracwave::experiments::{mean_squared_l2, run_convergence_study, ExperimentPlan};
use fracwave::fbm::{
    cross_covariance, increment_covariance, weighted_covariance, Hurst, NoiseCovariance,
    NoiseStreams, TimeGrid,
};
use fracwave::noise::{ConvolutionAccumulator, NoiseBundle, NoiseParams};
use fracwave::schemes::{Model, ModelConfig, Record, Scheme};
use fracwave::spectral::{EigenBasis, SineTransform, SpectralField};

/// 10-point Gauss–Legendre on [-1, 1].
const GL_X: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_W: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_4,
    0.219_086_362_515_982,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

fn gauss(a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut s = 0.0;
    for (x, w) in GL_X.iter().zip(GL_W) {
        s += w * (f(mid - half * x) + f(mid + half * x));
    }
    half * s
}

/// Composite rule on `[a, b]` with panels shrinking geometrically towards
/// both ends, where the integrands below have algebraic singularities.
fn graded(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mid = 0.5 * (a + b);
    let half = mid - a;
    let mut total = 0.0;
    let mut hi = 1.0;
    for _ in 0..48 {
        let lo = 0.5 * hi;
        total += gauss(a + lo * half, a + hi * half, &mut f);
        total += gauss(b - hi * half, b - lo * half, &mut f);
        hi = lo;
    }
    total
}

/// `∫_s^e w(r) |r - s|^{2H-2} dr` after `r = s + (e - s) x^q`, `q = 1/(2H-1)`,
/// which turns the singular kernel into a constant.
fn anchored(h: f64, s: f64, e: f64, w: &impl Fn(f64) -> f64) -> f64 {
    let q = 1.0 / (2.0 * h - 1.0);
    let span = e - s;
    if span == 0.0 {
        return 0.0;
    }
    let mut f = |x: f64| w(s + span * x.powf(q));
    let mut body = 0.0;
    for i in 0..8 {
        body += gauss(i as f64 / 8.0, (i + 1) as f64 / 8.0, &mut f);
    }
    q * span * span.abs().powf(2.0 * h - 2.0) * body
}

/// `H(2H-1) ∫_{c1} ∫_{c2} w1(s) w2(r) |s - r|^{2H-2} dr ds` over intervals
/// `c1`, `c2`.
fn kernel_integral(
    h: f64,
    c1: (f64, f64),
    c2: (f64, f64),
    w1: impl Fn(f64) -> f64,
    w2: impl Fn(f64) -> f64,
) -> f64 {
    let outer = graded(c1.0, c1.1, |s| {
        w1(s) * (anchored(h, s, c2.1, &w2) - anchored(h, s, c2.0, &w2))
    });
    h * (2.0 * h - 1.0) * outer
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn same_interval_moments_match_nested_quadrature() {
    for h in [0.55, 0.6, 0.7, 0.8, 0.9] {
        for tau in [1.0, 0.125] {
            let cell = (0.0, tau);
            let var_d = kernel_integral(h, cell, cell, |_| 1.0, |_| 1.0);
            let cov_di = kernel_integral(h, cell, cell, |_| 1.0, |r| r);
            let var_i = kernel_integral(h, cell, cell, |s| s, |r| r);
            assert!(
                rel(var_d, tau.powf(2.0 * h)) < 1e-7,
                "H={h} τ={tau}: Var D {var_d}"
            );
            assert!(
                rel(cov_di, 0.5 * tau.powf(2.0 * h + 1.0)) < 1e-7,
                "H={h} τ={tau}: Cov DI {cov_di}"
            );
            assert!(
                rel(var_i, tau.powf(2.0 * h + 2.0) / (2.0 * h + 2.0)) < 1e-7,
                "H={h} τ={tau}: Var I {var_i}"
            );
        }
    }
}

#[test]
fn lagged_covariances_match_nested_quadrature() {
    for h in [0.6, 0.8] {
        let hurst = Hurst::new(h).unwrap();
        let grid = TimeGrid::new(1.0, 8).unwrap();
        let tau = grid.tau();
        for (j, k) in [
            (0, 0),
            (0, 1),
            (1, 0),
            (2, 4),
            (5, 2),
            (0, 3),
            (1, 7),
            (7, 0),
        ] {
            let cj = (j as f64 * tau, (j + 1) as f64 * tau);
            let ck = (k as f64 * tau, (k + 1) as f64 * tau);
            let (tj, tk) = (cj.0, ck.0);
            let dd = kernel_integral(h, cj, ck, |_| 1.0, |_| 1.0);
            let di = kernel_integral(h, cj, ck, |_| 1.0, |r| r - tk);
            let ii = kernel_integral(h, cj, ck, |s| s - tj, |r| r - tk);
            let lib_dd = increment_covariance(j, k, &grid, hurst).unwrap();
            let lib_di = cross_covariance(j, k, &grid, hurst).unwrap();
            let lib_ii = weighted_covariance(j, k, &grid, hurst).unwrap();
            assert!(
                rel(lib_dd, dd) < 1e-7,
                "H={h} ({j},{k}) DD {lib_dd} vs {dd}"
            );
            assert!(
                rel(lib_di, di) < 1e-7,
                "H={h} ({j},{k}) DI {lib_di} vs {di}"
            );
            assert!(
                rel(lib_ii, ii) < 1e-7,
                "H={h} ({j},{k}) II {lib_ii} vs {ii}"
            );
        }
    }
}

#[test]
fn increment_covariance_matches_fgn_formula() {
    for h in [0.6, 0.75, 0.95] {
        let hurst = Hurst::new(h).unwrap();
        let grid = TimeGrid::new(3.0, 12).unwrap();
        let g = |x: f64| x.abs().powf(2.0 * h);
        for lag in 0..12usize {
            let l = lag as f64;
            let fgn = 0.5 * (g(l + 1.0) + g(l - 1.0) - 2.0 * g(l)) * grid.tau().powf(2.0 * h);
            let lib = increment_covariance(0, lag, &grid, hurst).unwrap();
            assert!(
                (lib - fgn).abs() < 1e-13 * grid.tau().powf(2.0 * h),
                "H={h} lag={lag}"
            );
        }
    }
}

/// The low-order convolution at `t_N` for `M = 2`, `N = 4`: Monte Carlo mean
/// and variance against the piecewise-frozen kernel integrated directly.
#[test]
fn low_order_convolution_moments() {
    let (modes, steps, h, alpha, rho, horizon) = (2, 4, 0.75, 0.8, 0.25, 1.0);
    let hurst = Hurst::new(h).unwrap();
    let basis = EigenBasis::new(modes).unwrap();
    let params = NoiseParams::new(&basis, alpha, rho).unwrap();
    let grid = TimeGrid::new(horizon, steps).unwrap();
    let tau = grid.tau();
    let t = horizon;

    let mut exact = vec![0.0; modes];
    for (j, exact) in exact.iter_mut().enumerate() {
        let (sigma, omega) = (params.sigma()[j], params.omegas()[j]);
        let c = |k: usize| sigma / omega * (omega * (t - k as f64 * tau)).sin();
        for k in 0..steps {
            for l in 0..steps {
                let ck = (k as f64 * tau, (k + 1) as f64 * tau);
                let cl = (l as f64 * tau, (l + 1) as f64 * tau);
                *exact += c(k) * c(l) * kernel_integral(h, ck, cl, |_| 1.0, |_| 1.0);
            }
        }
    }

    let cov = NoiseCovariance::assemble(grid, hurst, false).unwrap();
    let streams = NoiseStreams::new(99);
    let samples = 20_000;
    let mut sum = vec![0.0; modes];
    let mut sum_sq = vec![0.0; modes];
    let mut d = vec![0.0; modes];
    for s in 0..samples {
        let bundle = NoiseBundle::sample(&cov, &streams, s, modes);
        let mut acc = ConvolutionAccumulator::new(&params, tau, false);
        for k in 0..steps {
            for (j, m) in bundle.modes().iter().enumerate() {
                d[j] = m.increments()[k];
            }
            acc.absorb_step(k, &d, None).unwrap();
        }
        let value = acc.low_order_convolution(t);
        for j in 0..modes {
            sum[j] += value.coeffs()[j];
            sum_sq[j] += value.coeffs()[j].powi(2);
        }
    }
    let n = samples as f64;
    for j in 0..modes {
        let mean = sum[j] / n;
        let var = sum_sq[j] / n - mean * mean;
        let mean_se = (exact[j] / n).sqrt();
        let var_se = (2.0 / n).sqrt() * exact[j];
        assert!(
            mean.abs() < 3.0 * mean_se,
            "mode {j}: mean {mean} se {mean_se}"
        );
        assert!(
            (var - exact[j]).abs() < 3.0 * var_se,
            "mode {j}: var {var} vs {}",
            exact[j]
        );
    }
}

#[test]
fn solution_stays_bounded_with_sine_source() {
    for (alpha, scheme) in [(0.8, Scheme::Low), (0.6, Scheme::High)] {
        let config =
            ModelConfig::smooth_initial_data(alpha, Hurst::new(0.8).unwrap(), 0.25, 0.5, 64)
                .unwrap();
        let model = Model::new(config).unwrap();
        let fine = TimeGrid::new(0.5, 1024).unwrap();
        let cov =
            NoiseCovariance::assemble(fine, Hurst::new(0.8).unwrap(), scheme.needs_weighted())
                .unwrap();
        let streams = NoiseStreams::new(5);
        let samples = 8;
        let mut second_moment = Vec::new();
        for n in [64usize, 128, 256, 512, 1024] {
            let mut total = 0.0;
            for s in 0..samples {
                let noise = NoiseBundle::sample(&cov, &streams, s, 64)
                    .coarsen(1024 / n)
                    .unwrap();
                let out = model.run(scheme, &noise, Record::Terminal).unwrap();
                total += out.u.norm_sq();
            }
            second_moment.push(total / samples as f64);
        }
        let first = second_moment[0];
        assert!(first.is_finite() && first > 0.0);
        for m in &second_moment {
            assert!(
                m.is_finite() && *m < 10.0 * first,
                "{scheme}: {second_moment:?}"
            );
        }
    }
}

fn small_plan(samples: usize) -> ExperimentPlan {
    ExperimentPlan {
        base: ModelConfig::smooth_initial_data(0.8, Hurst::new(0.8).unwrap(), 0.25, 0.5, 32)
            .unwrap(),
        resolutions: vec![16, 32, 64],
        refinement: 2,
        samples,
        seed: 31,
        scheme: Scheme::Low,
        noise: true,
    }
}

#[test]
fn doubling_samples_stays_within_standard_errors() {
    let a = run_convergence_study(&small_plan(40)).unwrap();
    let b = run_convergence_study(&small_plan(80)).unwrap();
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        let se = ra.stderr.unwrap();
        assert!(
            (ra.error - rb.error).abs() < 3.0 * se,
            "N={}: {} vs {} (se {se})",
            ra.n,
            ra.error,
            rb.error
        );
    }
    for rows in [&a.rows, &b.rows] {
        assert!(rows.windows(2).all(|w| w[1].error < w[0].error));
    }
}

#[test]
fn thread_count_does_not_change_errors() {
    let plan = small_plan(12);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_convergence_study(&plan).unwrap())
    };
    let (one, four) = (run(1), run(4));
    for (x, y) in one.rows.iter().zip(&four.rows) {
        assert_eq!(x.error.to_bits(), y.error.to_bits());
        assert_eq!(x.sample_variance.to_bits(), y.sample_variance.to_bits());
    }
}

#[test]
fn mean_squared_l2_matches_grid_norm() {
    let modes = 24;
    let transform = SineTransform::with_default_points(modes).unwrap();
    let fields: Vec<SpectralField> = (0..3)
        .map(|s| {
            SpectralField::from_coeffs(
                (0..modes)
                    .map(|j| ((j * 7 + s * 3) as f64).sin() / (j + 1) as f64)
                    .collect(),
            )
            .unwrap()
        })
        .collect();
    let q = transform.points() as f64;
    let grid_mean: f64 = fields
        .iter()
        .map(|f| {
            transform
                .evaluate(f)
                .unwrap()
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                / q
        })
        .sum::<f64>()
        / fields.len() as f64;
    assert!((mean_squared_l2(&fields) - grid_mean.sqrt()).abs() < 1e-10);
}

/// Mean-square error of both convolution approximants at `T` against the
/// corrected formula on a grid 16 times finer than the finest level.
#[test]
fn convolution_approximants_converge_at_predicted_rates() {
    let (modes, alpha, rho, h, horizon) = (32, 0.8, 1.5, 0.8, 0.5);
    let levels = [8usize, 16, 32, 64];
    let fine_steps = 16 * 64;
    let hurst = Hurst::new(h).unwrap();
    let basis = EigenBasis::new(modes).unwrap();
    let params = NoiseParams::new(&basis, alpha, rho).unwrap();
    let fine = TimeGrid::new(horizon, fine_steps).unwrap();
    let cov = NoiseCovariance::assemble(fine, hurst, true).unwrap();
    let streams = NoiseStreams::new(17);

    let convolve = |bundle: &NoiseBundle, high: bool| {
        let grid = bundle.grid();
        let mut acc = ConvolutionAccumulator::new(&params, grid.tau(), true);
        let mut d = vec![0.0; modes];
        let mut w = vec![0.0; modes];
        for k in 0..grid.steps() {
            for (j, m) in bundle.modes().iter().enumerate() {
                d[j] = m.increments()[k];
                w[j] = m.weighted().unwrap()[k];
            }
            acc.absorb_step(k, &d, Some(&w)).unwrap();
        }
        if high {
            acc.high_order_convolution(horizon).unwrap()
        } else {
            acc.low_order_convolution(horizon)
        }
    };

    let samples = 100;
    let mut low_err = vec![0.0; levels.len()];
    let mut high_err = vec![0.0; levels.len()];
    for s in 0..samples {
        let bundle = NoiseBundle::sample(&cov, &streams, s, modes);
        let reference = convolve(&bundle, true);
        for (i, &n) in levels.iter().enumerate() {
            let coarse = bundle.coarsen(fine_steps / n).unwrap();
            low_err[i] += (&convolve(&coarse, false) - &reference).norm_sq();
            high_err[i] += (&convolve(&coarse, true) - &reference).norm_sq();
        }
    }
    let slope = |errs: &[f64]| {
        let e: Vec<f64> = errs.iter().map(|e| (e / samples as f64).sqrt()).collect();
        (e[0] / e[e.len() - 1]).ln() / ((levels[levels.len() - 1] / levels[0]) as f64).ln()
    };
    let gamma = fracwave::schemes::gamma_param(alpha, rho, 0.01, h).gamma;
    let (low, high) = (slope(&low_err), slope(&high_err));
    assert!(low >= (gamma / alpha).min(1.0) - 0.2, "low-order slope {low}");
    assert!(high >= (gamma / alpha).min(2.0) - 0.2, "high-order slope {high}");
    assert!(high > low + 0.5, "low {low}, high {high}");
}
