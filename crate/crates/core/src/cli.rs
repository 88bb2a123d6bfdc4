//! Command-line front end.
//!
//! Configuration is resolved in layers: command defaults, then a replayed
//! manifest, then a flat `key = value` file, then flags. Every command writes
//! `manifest.json`, `results.csv` and `summary.json` into its output directory.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::Error;
use crate::experiments::{
    deterministic_order_study, format_table, noise_statistics, run_convergence_study, write_csv,
    ExperimentPlan, NoiseStat, RateReport,
};
use crate::fbm::Hurst;
use crate::schemes::{ModelConfig, Nonlinearity, Scheme};

/// Keys accepted in configuration files and by `--set`.
pub const KEYS: [&str; 13] = [
    "alpha", "hurst", "rho", "T", "N_list", "M", "samples", "seed", "scheme", "f", "epsilon", "a",
    "outdir",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Table1,
    RatesHigh,
    Deterministic,
    NoiseStats,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Table1 => "table1",
            Command::RatesHigh => "rates-high",
            Command::Deterministic => "deterministic",
            Command::NoiseStats => "noise-stats",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Every knob of a run with defaults applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub alpha: Vec<f64>,
    pub hurst: Vec<f64>,
    pub rho: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "N_list")]
    pub n_list: Vec<usize>,
    #[serde(rename = "M")]
    pub modes: usize,
    pub samples: usize,
    pub seed: u64,
    pub scheme: Vec<Scheme>,
    pub f: String,
    pub epsilon: f64,
    pub a: usize,
    pub outdir: PathBuf,
}

impl ResolvedConfig {
    pub fn defaults(command: Command) -> Self {
        let outdir = PathBuf::from("results").join(command.name());
        match command {
            Command::Table1 => Self {
                alpha: vec![0.6, 0.8, 1.0],
                hurst: vec![0.8],
                rho: 0.25,
                horizon: 0.5,
                n_list: vec![32, 64, 128],
                modes: 256,
                samples: 200,
                seed: 2024,
                scheme: vec![Scheme::Low],
                f: "sin".into(),
                epsilon: ModelConfig::DEFAULT_EPSILON,
                a: 2,
                outdir,
            },
            Command::RatesHigh => Self {
                alpha: vec![0.6, 0.8],
                hurst: vec![0.6, 0.8],
                rho: 1.5,
                horizon: 0.5,
                n_list: vec![16, 32, 64, 128],
                modes: 64,
                samples: 200,
                seed: 7,
                scheme: vec![Scheme::High],
                f: "sin".into(),
                epsilon: ModelConfig::DEFAULT_EPSILON,
                a: 2,
                outdir,
            },
            Command::Deterministic => Self {
                alpha: vec![0.6, 0.8],
                hurst: vec![0.8],
                rho: 0.25,
                horizon: 0.5,
                n_list: vec![64, 128, 256, 512, 1024],
                modes: 256,
                samples: 1,
                seed: 0,
                scheme: vec![Scheme::Low, Scheme::High],
                f: "zero".into(),
                epsilon: ModelConfig::DEFAULT_EPSILON,
                a: 2,
                outdir,
            },
            Command::NoiseStats => Self {
                alpha: vec![1.0],
                hurst: vec![0.6, 0.8],
                rho: 0.0,
                horizon: 4.0,
                n_list: vec![4],
                modes: 1,
                samples: 10_000,
                seed: 11,
                scheme: vec![Scheme::High],
                f: "zero".into(),
                epsilon: ModelConfig::DEFAULT_EPSILON,
                a: 2,
                outdir,
            },
        }
    }

    /// Applies one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        match key {
            "alpha" => self.alpha = parse_list(key, value)?,
            "hurst" | "H" => self.hurst = parse_list(key, value)?,
            "rho" => self.rho = parse_one(key, value)?,
            "T" => self.horizon = parse_one(key, value)?,
            "N_list" | "N" => self.n_list = parse_list(key, value)?,
            "M" => self.modes = parse_one(key, value)?,
            "samples" => self.samples = parse_one(key, value)?,
            "seed" => self.seed = parse_one(key, value)?,
            "scheme" => {
                self.scheme = if value.eq_ignore_ascii_case("both") {
                    vec![Scheme::Low, Scheme::High]
                } else {
                    parse_list(key, value)?
                }
            }
            "f" => {
                let f: Nonlinearity = parse_one(key, value)?;
                self.f = f.to_string();
            }
            "epsilon" => self.epsilon = parse_one(key, value)?,
            "a" => self.a = parse_one(key, value)?,
            "outdir" => {
                if value.is_empty() {
                    return Err(CliError::unparsable(key, value, "empty path"));
                }
                self.outdir = PathBuf::from(value);
            }
            _ => return Err(CliError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies a flat configuration file: one `key = value` per line, `#`
    /// starts a comment.
    pub fn apply_file(&mut self, text: &str) -> Result<(), CliError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::unparsable(
                    &format!("line {}", lineno + 1),
                    line,
                    "expected key = value",
                ));
            };
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity, CliError> {
        parse_one("f", &self.f)
    }

    /// Checks domain constraints for `command` without running anything.
    pub fn validate(&self, command: Command) -> Result<(), CliError> {
        let constraint =
            |field: &str, reason: String| Err(CliError::Constraint(Error::config(field, reason)));
        if self.alpha.is_empty() {
            return constraint("alpha", "no values given".into());
        }
        if self.hurst.is_empty() {
            return constraint("hurst", "no values given".into());
        }
        if self.scheme.is_empty() {
            return constraint("scheme", "no values given".into());
        }
        if self.a < 2 {
            return constraint("a", format!("refinement factor {} below 2", self.a));
        }
        for &h in &self.hurst {
            Hurst::new(h).map_err(CliError::Constraint)?;
        }
        let f = self.nonlinearity()?;
        match command {
            Command::NoiseStats => {
                let n = self.n_list.first().copied().unwrap_or(0);
                if self.n_list.len() != 1 || n < 2 || n % 2 != 0 {
                    return constraint("N_list", "noise-stats takes a single even N ≥ 2".into());
                }
                if self.samples < 2 {
                    return constraint("samples", "noise-stats needs at least 2 samples".into());
                }
            }
            Command::Deterministic => {
                if !f.is_zero() {
                    return constraint("f", "deterministic orders need f = zero".into());
                }
                if self.n_list.is_empty() || self.n_list[0] == 0 {
                    return constraint("N_list", "resolutions must be positive".into());
                }
                if self
                    .n_list
                    .windows(2)
                    .any(|w| w[1] <= w[0] || w[1] % w[0] != 0)
                {
                    return constraint("N_list", "resolutions must be increasing multiples".into());
                }
                for &alpha in &self.alpha {
                    self.model(alpha, self.hurst[0])?;
                }
            }
            Command::Table1 | Command::RatesHigh => {
                for &h in &self.hurst {
                    for &alpha in &self.alpha {
                        for &scheme in &self.scheme {
                            self.plan(alpha, h, scheme)?
                                .validate()
                                .map_err(CliError::from)?;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn model(&self, alpha: f64, hurst: f64) -> Result<ModelConfig, CliError> {
        let hurst = Hurst::new(hurst).map_err(CliError::Constraint)?;
        let mut config =
            ModelConfig::smooth_initial_data(alpha, hurst, self.rho, self.horizon, self.modes)
                .map_err(CliError::from)?
                .with_nonlinearity(self.nonlinearity()?);
        config.epsilon = self.epsilon;
        config.validate().map_err(CliError::from)?;
        Ok(config)
    }

    fn plan(&self, alpha: f64, hurst: f64, scheme: Scheme) -> Result<ExperimentPlan, CliError> {
        Ok(ExperimentPlan {
            base: self.model(alpha, hurst)?,
            resolutions: self.n_list.clone(),
            refinement: self.a,
            samples: self.samples,
            seed: self.seed,
            scheme,
            noise: true,
        })
    }
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e: T::Err| CliError::unparsable(key, value, &e.to_string()))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_one(key, s))
        .collect()
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    pub config: ResolvedConfig,
    pub seed: u64,
    pub outdir: PathBuf,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub version: String,
}

impl RunManifest {
    pub fn new(command: Command, config: ResolvedConfig) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            command,
            seed: config.seed,
            outdir: config.outdir.clone(),
            config,
            timestamp,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::unparsable("manifest", &path.display().to_string(), &e.to_string())
        })
    }
}

/// Resolves defaults, an optional replayed manifest, an optional config file
/// and flag overrides (in that order of precedence, lowest first).
pub fn parse_config(
    command: Command,
    manifest: Option<&Path>,
    file: Option<&Path>,
    overrides: &[(String, String)],
) -> Result<RunManifest, CliError> {
    let mut config = ResolvedConfig::defaults(command);
    if let Some(path) = manifest {
        let replay = RunManifest::load(path)?;
        if replay.command != command {
            return Err(CliError::Usage(format!(
                "manifest {} was written by '{}', not '{}'",
                path.display(),
                replay.command,
                command
            )));
        }
        config = replay.config;
    }
    if let Some(path) = file {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        config.apply_file(&text)?;
    }
    for (key, value) in overrides {
        config.set(key, value)?;
    }
    config.validate(command)?;
    Ok(RunManifest::new(command, config))
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("unknown configuration key '{0}' (known: {keys})", keys = KEYS.join(", "))]
    UnknownKey(String),

    #[error("{0}")]
    Usage(String),

    #[error("cannot parse {key} = '{value}': {reason}")]
    Unparsable {
        key: String,
        value: String,
        reason: String,
    },

    #[error(transparent)]
    Constraint(Error),

    #[error(transparent)]
    Runtime(Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    fn unparsable(key: &str, value: &str, reason: &str) -> Self {
        CliError::Unparsable {
            key: key.into(),
            value: value.into(),
            reason: reason.into(),
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 usage, 3 unparsable value, 4 constraint violation, 10 runtime
    /// failure, 11 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::UnknownKey(_) | CliError::Usage(_) => 2,
            CliError::Unparsable { .. } => 3,
            CliError::Constraint(_) => 4,
            CliError::Runtime(_) => 10,
            CliError::Io { .. } => 11,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig { .. } => CliError::Constraint(e),
            Error::Io(source) => CliError::Io {
                path: PathBuf::new(),
                source,
            },
            other => CliError::Runtime(other),
        }
    }
}

struct OutputDir(PathBuf);

impl OutputDir {
    fn create(manifest: &RunManifest) -> Result<Self, CliError> {
        let dir = manifest.outdir.clone();
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let out = Self(dir);
        out.write_with("manifest.json", |w| {
            serde_json::to_writer_pretty(&mut *w, manifest).map_err(Error::from)?;
            writeln!(w)?;
            Ok(())
        })?;
        Ok(out)
    }

    fn write_with<F>(&self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> crate::Result<()>,
    {
        let path = self.0.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w).map_err(|e| match e {
            Error::Io(source) => CliError::io(&path, source),
            other => CliError::from(other),
        })?;
        w.flush().map_err(|e| CliError::io(&path, e))
    }

    fn write_summary(&self, summary: &serde_json::Value) -> Result<(), CliError> {
        self.write_with("summary.json", |w| {
            serde_json::to_writer_pretty(&mut *w, summary).map_err(Error::from)?;
            writeln!(w)?;
            Ok(())
        })
    }
}

fn convergence_reports(manifest: &RunManifest) -> Result<Vec<RateReport>, CliError> {
    let c = &manifest.config;
    let mut reports = Vec::new();
    for &h in &c.hurst {
        for &alpha in &c.alpha {
            for &scheme in &c.scheme {
                let plan = c.plan(alpha, h, scheme)?;
                log::info!(
                    "{} scheme: alpha={alpha} H={h} M={} N={:?} samples={}",
                    scheme,
                    c.modes,
                    c.n_list,
                    c.samples
                );
                let report = run_convergence_study(&plan).map_err(CliError::from)?;
                log::info!(
                    "orders {:?} in {:.1}s",
                    report.orders(),
                    report.wall_time_secs
                );
                reports.push(report);
            }
        }
    }
    Ok(reports)
}

fn write_results(out: &OutputDir, reports: &[RateReport]) -> Result<(), CliError> {
    out.write_with("results.csv", |w| write_csv(reports, w))
}

/// Low-order strong rates over the configured `α` values.
pub fn cmd_table1(manifest: &RunManifest) -> Result<serde_json::Value, CliError> {
    let out = OutputDir::create(manifest)?;
    let start = Instant::now();
    let reports = convergence_reports(manifest)?;
    write_results(&out, &reports)?;
    let table = format_table(&reports);
    out.write_with("table1.txt", |w| Ok(w.write_all(table.as_bytes())?))?;
    let summary = json!({
        "command": manifest.command,
        "table": table,
        "reports": reports,
        "wall_time_secs": start.elapsed().as_secs_f64(),
    });
    out.write_summary(&summary)?;
    Ok(summary)
}

/// High-order strong rates, with log-log plot data against the predicted slope.
pub fn cmd_rates_high(manifest: &RunManifest) -> Result<serde_json::Value, CliError> {
    let out = OutputDir::create(manifest)?;
    let start = Instant::now();
    let reports = convergence_reports(manifest)?;
    write_results(&out, &reports)?;
    out.write_with("plot.csv", |w| {
        writeln!(w, "alpha,H,scheme,tau,error,reference")?;
        for r in &reports {
            let slope = reference_slope(r);
            let Some(first) = r.rows.first() else {
                continue;
            };
            for row in &r.rows {
                let reference = first.error * (row.tau / first.tau).powf(slope);
                writeln!(
                    w,
                    "{},{},{},{:e},{:e},{:e}",
                    r.alpha, r.hurst, r.scheme, row.tau, row.error, reference
                )?;
            }
        }
        Ok(())
    })?;
    let slopes: Vec<_> = reports
        .iter()
        .map(|r| {
            json!({
                "alpha": r.alpha,
                "H": r.hurst,
                "scheme": r.scheme,
                "fitted_slope": r.fitted_slope(),
                "reference_slope": reference_slope(r),
            })
        })
        .collect();
    let summary = json!({
        "command": manifest.command,
        "slopes": slopes,
        "reports": reports,
        "wall_time_secs": start.elapsed().as_secs_f64(),
    });
    out.write_summary(&summary)?;
    Ok(summary)
}

fn reference_slope(r: &RateReport) -> f64 {
    match r.scheme {
        Scheme::Low => r.predicted.low,
        Scheme::High => r.predicted.high,
    }
}

/// Noise-free orders against the exact solution with `f = 0`.
pub fn cmd_deterministic(manifest: &RunManifest) -> Result<serde_json::Value, CliError> {
    let out = OutputDir::create(manifest)?;
    let c = &manifest.config;
    let start = Instant::now();
    let mut reports = Vec::new();
    for &alpha in &c.alpha {
        let base = c.model(alpha, c.hurst[0])?;
        for &scheme in &c.scheme {
            log::info!("deterministic {scheme}: alpha={alpha} N={:?}", c.n_list);
            reports
                .push(deterministic_order_study(&base, scheme, &c.n_list).map_err(CliError::from)?);
        }
    }
    write_results(&out, &reports)?;
    let summary = json!({
        "command": manifest.command,
        "table": format_table(&reports),
        "reports": reports,
        "wall_time_secs": start.elapsed().as_secs_f64(),
    });
    out.write_summary(&summary)?;
    Ok(summary)
}

/// Empirical moments of the `(D, I)` sampler at `τ = 1`.
pub fn cmd_noise_stats(manifest: &RunManifest) -> Result<serde_json::Value, CliError> {
    let out = OutputDir::create(manifest)?;
    let c = &manifest.config;
    let start = Instant::now();
    let mut stats: Vec<NoiseStat> = Vec::new();
    for &h in &c.hurst {
        let hurst = Hurst::new(h).map_err(CliError::Constraint)?;
        stats.extend(
            noise_statistics(hurst, c.n_list[0], c.samples, c.seed).map_err(CliError::from)?,
        );
    }
    out.write_with("results.csv", |w| {
        writeln!(w, "H,statistic,expected,observed,stderr,z,pass")?;
        for s in &stats {
            let z = if s.stderr > 0.0 {
                format!("{:.4}", s.z_score())
            } else {
                String::new()
            };
            writeln!(
                w,
                "{},{},{:e},{:e},{:e},{},{}",
                s.hurst,
                s.statistic,
                s.expected,
                s.observed,
                s.stderr,
                z,
                s.passes()
            )?;
        }
        Ok(())
    })?;
    let summary = json!({
        "command": manifest.command,
        "all_pass": stats.iter().all(NoiseStat::passes),
        "statistics": stats,
        "wall_time_secs": start.elapsed().as_secs_f64(),
    });
    out.write_summary(&summary)?;
    Ok(summary)
}

pub fn execute(manifest: &RunManifest) -> Result<serde_json::Value, CliError> {
    match manifest.command {
        Command::Table1 => cmd_table1(manifest),
        Command::RatesHigh => cmd_rates_high(manifest),
        Command::Deterministic => cmd_deterministic(manifest),
        Command::NoiseStats => cmd_noise_stats(manifest),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fracwave",
    version,
    about = "Strong convergence studies for the fractional stochastic wave equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Low-order rates. Defaults: alpha=0.6,0.8,1 hurst=0.8 rho=0.25 T=0.5
    /// N_list=32,64,128 M=256 samples=200 seed=2024 a=2 scheme=low f=sin
    Table1(Flags),
    /// High-order rates and plot data. Defaults: alpha=0.6,0.8 hurst=0.6,0.8
    /// rho=1.5 T=0.5 N_list=16,32,64,128 M=64 samples=200 seed=7 a=2 scheme=high
    RatesHigh(Flags),
    /// Noise-free orders with f = 0. Defaults: alpha=0.6,0.8 T=0.5
    /// N_list=64,128,256,512,1024 M=256 scheme=low,high f=zero
    Deterministic(Flags),
    /// Sampler moments at unit step. Defaults: hurst=0.6,0.8 N_list=4
    /// samples=10000 seed=11
    NoiseStats(Flags),
}

#[derive(Debug, Args)]
struct Flags {
    /// Flat key = value configuration file.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Replay the configuration stored in a previous manifest.json.
    #[arg(long, value_name = "FILE")]
    manifest: Option<PathBuf>,
    /// Worker threads; 0 uses every available core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Comma-separated list of α in (0, 1].
    #[arg(long)]
    alpha: Option<String>,
    /// Comma-separated list of H in (1/2, 1).
    #[arg(long)]
    hurst: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    /// Final time.
    #[arg(long = "T", visible_alias = "horizon", value_name = "T")]
    horizon: Option<String>,
    /// Comma-separated step counts, each `a` times the previous.
    #[arg(long = "N_list", visible_alias = "n-list", value_name = "N_LIST")]
    n_list: Option<String>,
    /// Number of spectral modes.
    #[arg(long = "M", visible_alias = "modes", value_name = "M")]
    modes: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// low, high, or both.
    #[arg(long)]
    scheme: Option<String>,
    /// Source term: sin or zero.
    #[arg(long)]
    f: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    /// Refinement factor between resolutions.
    #[arg(long = "a", visible_alias = "refinement", value_name = "A")]
    refinement: Option<String>,
    #[arg(long)]
    outdir: Option<String>,
    /// Extra key=value override; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Flags {
    fn overrides(&self) -> Result<Vec<(String, String)>, CliError> {
        let named = [
            ("alpha", &self.alpha),
            ("hurst", &self.hurst),
            ("rho", &self.rho),
            ("T", &self.horizon),
            ("N_list", &self.n_list),
            ("M", &self.modes),
            ("samples", &self.samples),
            ("seed", &self.seed),
            ("scheme", &self.scheme),
            ("f", &self.f),
            ("epsilon", &self.epsilon),
            ("a", &self.refinement),
            ("outdir", &self.outdir),
        ];
        let mut out: Vec<(String, String)> = Vec::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got '{kv}'")))?;
            out.push((k.trim().to_string(), v.to_string()));
        }
        out.extend(
            named
                .into_iter()
                .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone()))),
        );
        Ok(out)
    }
}

fn run_cli(cli: Cli) -> Result<(), CliError> {
    let (command, flags) = match cli.command {
        Sub::Table1(f) => (Command::Table1, f),
        Sub::RatesHigh(f) => (Command::RatesHigh, f),
        Sub::Deterministic(f) => (Command::Deterministic, f),
        Sub::NoiseStats(f) => (Command::NoiseStats, f),
    };
    let manifest = parse_config(
        command,
        flags.manifest.as_deref(),
        flags.config.as_deref(),
        &flags.overrides()?,
    )?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(flags.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot build worker pool: {e}")))?;
    let summary = pool.install(|| execute(&manifest))?;
    if let Some(table) = summary.get("table").and_then(|t| t.as_str()) {
        print!("{table}");
    }
    println!("wrote {}", manifest.outdir.display());
    Ok(())
}

/// Entry point for the `fracwave` binary.
pub fn main_entry() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run_cli(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
