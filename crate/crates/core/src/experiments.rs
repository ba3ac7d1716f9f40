//! Parameter sweeps and self-checks behind the command-line front end.
//!
//! Every command returns a [`SweepResult`]: long-format rows over the product
//! of its axes, each row tagged with the hash of the configuration it ran
//! with. CSV output is byte-reproducible for a fixed config and seed; the wall
//! time only appears in the JSON metadata.

use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamforming::{beamform, oracle_grid_search, Architecture, IterationSettings};
use crate::channel::{complex_normal, draw_channel, los_channel, trial_rng};
use crate::config::{Level, SystemConfig, Unit};
use crate::error::{Error, Result};
use crate::outage::{
    invert_cdf, montecarlo, outage_lower_bound, simulate, BoundScaling, EulerSettings, MgfEvaluator, MgfSettings,
    OutageCurve,
};

/// One table entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:?}"),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Int(v) => Some(v as f64),
            Cell::Float(v) => Some(v),
            Cell::Text(_) => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub code_version: String,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axes: Vec<Axis>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub metadata: Metadata,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl SweepResult {
    fn new(command: &str, cfg: &SystemConfig, seed: u64, axes: Vec<Axis>, columns: &[&str]) -> Self {
        Self {
            axes,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: Metadata {
                command: command.to_string(),
                config_hash: cfg.hash_hex(),
                seed,
                code_version: env!("CARGO_PKG_VERSION").to_string(),
                wall_time_s: 0.0,
            },
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of one column, in row order.
    pub fn values(&self, name: &str) -> Vec<Cell> {
        match self.column(name) {
            Some(i) => self.rows.iter().map(|r| r[i].clone()).collect(),
            None => Vec::new(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write<W: Write>(&self, mut out: W, format: Format) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, self)?;
                writeln!(out)?;
                Ok(())
            }
        }
    }
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// `μ` in dB as configured, `-inf` without a direct link.
fn mu_db(cfg: &SystemConfig) -> f64 {
    match cfg.mu {
        _ if !cfg.direct_link => f64::NEG_INFINITY,
        Some(Level { value, unit: Unit::Db }) => value,
        _ => 20.0 * cfg.mu().log10(),
    }
}

/// Axes of the capacity sweep. Empty lists fall back to the config value.
#[derive(Debug, Clone, Default)]
pub struct CapacityGrid {
    pub n: Vec<usize>,
    pub k: Vec<f64>,
    /// Direct-link amplitude ratios in dB; `-inf` turns the link off.
    pub mu_db: Vec<f64>,
    pub archs: Vec<Architecture>,
}

/// Ergodic capacity over the product of `N`, `K`, `μ` and architecture.
///
/// Cells with the same `(K, μ)` reuse the seed, so draws are paired across
/// the `K` axis.
pub fn cmd_capacity_sweep(
    cfg: &SystemConfig,
    grid: &CapacityGrid,
    trials: usize,
    seed: u64,
    settings: &IterationSettings,
) -> Result<SweepResult> {
    cfg.validate()?;
    let start = Instant::now();
    let ns = if grid.n.is_empty() { vec![cfg.n] } else { grid.n.clone() };
    let ks: Vec<Option<f64>> = if grid.k.is_empty() { vec![None] } else { grid.k.iter().map(|&k| Some(k)).collect() };
    let mus: Vec<Option<f64>> =
        if grid.mu_db.is_empty() { vec![None] } else { grid.mu_db.iter().map(|&m| Some(m)).collect() };
    let archs = if grid.archs.is_empty() { vec![Architecture::Fd] } else { grid.archs.clone() };
    if ns.contains(&0) {
        return Err(Error::Config("grid values of N must be >= 1".into()));
    }
    if grid.k.iter().any(|k| k.is_nan() || *k < 0.0) {
        return Err(Error::Config("grid values of K must be >= 0 or inf".into()));
    }
    if grid.mu_db.iter().any(|m| m.is_nan() || *m == f64::INFINITY) {
        return Err(Error::Config("grid values of mu must be finite dB or -inf".into()));
    }

    let mut cells = Vec::new();
    for &n in &ns {
        for &k in &ks {
            for &mu in &mus {
                for &arch in &archs {
                    let mut c = cfg.clone();
                    c.n = n;
                    if let Some(k) = k {
                        c.set_rician_factor(k);
                    }
                    if let Some(mu) = mu {
                        c.direct_link = mu > f64::NEG_INFINITY;
                        c.mu = Some(Level::db(mu));
                    }
                    cells.push((c, arch));
                }
            }
        }
    }

    let axes = vec![
        Axis { name: "N".into(), values: ns.iter().map(|&n| n.into()).collect() },
        Axis { name: "K".into(), values: ks.iter().map(|k| k.unwrap_or(cfg.k1).into()).collect() },
        Axis {
            name: "mu_db".into(),
            values: mus.iter().map(|m| m.unwrap_or_else(|| mu_db(cfg)).into()).collect(),
        },
        Axis { name: "arch".into(), values: archs.iter().map(|a| a.as_str().into()).collect() },
    ];
    let mut result = SweepResult::new(
        "capacity-sweep",
        cfg,
        seed,
        axes,
        &[
            "N",
            "K",
            "mu_db",
            "arch",
            "trials",
            "capacity",
            "ci",
            "capacity_ub",
            "snr",
            "snr_db",
            "snr_ub",
            "snr_ub_db",
            "mean_iterations",
            "config_hash",
        ],
    );
    // Cells run one after another; trials inside a cell are parallel.
    for (c, arch) in &cells {
        let outcomes = simulate(c, *arch, trials, seed, settings)?;
        let est = montecarlo::capacity_from_outcomes(&outcomes)?;
        let n = outcomes.len() as f64;
        let snr = montecarlo::pairwise_sum(&outcomes.iter().map(|o| o.snr).collect::<Vec<_>>()) / n;
        let snr_ub = montecarlo::pairwise_sum(&outcomes.iter().map(|o| o.snr_ub).collect::<Vec<_>>()) / n;
        let iters = outcomes.iter().map(|o| o.iterations).sum::<usize>() as f64 / n;
        result.rows.push(vec![
            c.n.into(),
            c.k1.into(),
            mu_db(c).into(),
            arch.as_str().into(),
            trials.into(),
            est.mean.into(),
            (est.ci_high - est.mean).into(),
            est.mean_capacity_ub.into(),
            snr.into(),
            db(snr).into(),
            snr_ub.into(),
            db(snr_ub).into(),
            iters.into(),
            c.hash_hex().as_str().into(),
        ]);
    }
    result.metadata.wall_time_s = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Axes of the outage sweep.
#[derive(Debug, Clone, Default)]
pub struct OutageGrid {
    pub k: Vec<f64>,
    /// Thresholds in dB, ascending. Empty selects a range around the mean bound.
    pub beta_db: Vec<f64>,
    pub scaling: BoundScaling,
}

/// Thresholds from 15 dB below to 3 dB above `Γ^UB` at the mean envelope sum.
pub fn default_beta_db(ev: &MgfEvaluator, gamma: f64) -> Vec<f64> {
    let centre = db(gamma * ev.mean().powi(2) / ev.antennas() as f64);
    let start = (2.0 * (centre - 15.0)).floor() / 2.0;
    (0..=36).map(|i| start + 0.5 * i as f64).collect()
}

/// Outage curves without a direct link: Monte Carlo for FD and FA plus the
/// analytic lower bound, per Rician factor. `trials = 0` yields the bound only.
pub fn cmd_outage_curve(
    cfg: &SystemConfig,
    grid: &OutageGrid,
    trials: usize,
    seed: u64,
    iteration: &IterationSettings,
    mgf: &MgfSettings,
    euler: &EulerSettings,
) -> Result<SweepResult> {
    cfg.validate()?;
    let start = Instant::now();
    if grid.beta_db.iter().any(|b| !b.is_finite()) || grid.beta_db.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("beta grid must be finite and ascending".into()));
    }
    let mut base = cfg.clone();
    base.direct_link = false;
    let ks: Vec<f64> = if grid.k.is_empty() { vec![base.k1] } else { grid.k.clone() };
    if ks.iter().any(|k| k.is_nan() || *k < 0.0) {
        return Err(Error::Config("grid values of K must be >= 0 or inf".into()));
    }
    let mut kinds = vec!["analytical_lower_bound"];
    if trials > 0 {
        kinds.extend(["monte_carlo_fd", "monte_carlo_fa"]);
    }

    let mut curves: Vec<(SystemConfig, Vec<OutageCurve>)> = Vec::new();
    let mut beta_axis = None;
    for &k in &ks {
        let mut c = base.clone();
        if !grid.k.is_empty() {
            c.set_rician_factor(k);
        }
        let ev = MgfEvaluator::from_config(&c, *mgf)?;
        let beta_db = if grid.beta_db.is_empty() {
            beta_axis.get_or_insert_with(|| default_beta_db(&ev, c.gamma())).clone()
        } else {
            grid.beta_db.clone()
        };
        beta_axis.get_or_insert_with(|| beta_db.clone());
        let betas: Vec<f64> = beta_db.iter().map(|b| 10f64.powf(b / 10.0)).collect();
        let mut cs = vec![outage_lower_bound(&ev, c.gamma(), &betas, grid.scaling, euler)?];
        if trials > 0 {
            for arch in [Architecture::Fd, Architecture::Fa] {
                cs.push(montecarlo::monte_carlo_outage(&c, arch, &betas, trials, seed, iteration)?);
            }
        }
        curves.push((c, cs));
    }
    let beta_db = beta_axis.unwrap_or_default();

    let axes = vec![
        Axis { name: "K".into(), values: ks.iter().map(|&k| k.into()).collect() },
        Axis { name: "kind".into(), values: kinds.iter().map(|&k| k.into()).collect() },
        Axis { name: "beta_db".into(), values: beta_db.iter().map(|&b| b.into()).collect() },
    ];
    let mut result = SweepResult::new(
        "outage-curve",
        &base,
        seed,
        axes,
        &["K", "kind", "beta_db", "beta", "p_out", "ci_low", "ci_high", "trials", "config_hash"],
    );
    for (c, cs) in &curves {
        let hash = c.hash_hex();
        for curve in cs {
            for i in 0..curve.len() {
                result.rows.push(vec![
                    c.k1.into(),
                    curve.kind.as_str().into(),
                    db(curve.thresholds[i]).into(),
                    curve.thresholds[i].into(),
                    curve.probabilities[i].into(),
                    curve.ci_low[i].into(),
                    curve.ci_high[i].into(),
                    curve.trials.unwrap_or(0).into(),
                    hash.as_str().into(),
                ]);
            }
        }
    }
    result.metadata.wall_time_s = start.elapsed().as_secs_f64();
    Ok(result)
}

/// `M(-s)` of the envelope sum on a grid of `s`.
pub fn cmd_mgf_probe(cfg: &SystemConfig, grid: &[Complex64], mgf: &MgfSettings) -> Result<SweepResult> {
    cfg.validate()?;
    let start = Instant::now();
    let ev = MgfEvaluator::from_config(cfg, *mgf)?;
    let values: Vec<Complex64> = grid.par_iter().map(|&s| ev.evaluate(s)).collect::<Result<_>>()?;
    let axes = vec![Axis { name: "s".into(), values: grid.iter().map(|s| s.re.into()).collect() }];
    let mut result =
        SweepResult::new("mgf-probe", cfg, cfg.seed, axes, &["s_re", "s_im", "mgf_re", "mgf_im", "config_hash"]);
    let hash = cfg.hash_hex();
    for (s, v) in grid.iter().zip(&values) {
        result.rows.push(vec![s.re.into(), s.im.into(), v.re.into(), v.im.into(), hash.as_str().into()]);
    }
    result.metadata.wall_time_s = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Logarithmic real grid from `1e-3` to `1e2`.
pub fn default_s_grid() -> Vec<Complex64> {
    (0..=25).map(|i| Complex64::new(10f64.powf(-3.0 + 0.2 * i as f64), 0.0)).collect()
}

/// One self-check: passes when `error < tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_sweep(&self, cfg: &SystemConfig, seed: u64) -> SweepResult {
        let axes = vec![Axis { name: "check".into(), values: self.checks.iter().map(|c| c.name.as_str().into()).collect() }];
        let mut r = SweepResult::new("validate", cfg, seed, axes, &["check", "error", "tolerance", "status"]);
        for c in &self.checks {
            r.rows.push(vec![
                c.name.as_str().into(),
                c.error.into(),
                c.tolerance.into(),
                (if c.passed { "pass" } else { "fail" }).into(),
            ]);
        }
        r
    }
}

/// Frozen SNRs of trial 0, seed 1, for the default config with `M = N = 2`.
pub const REGRESSION_FD_SNR: f64 = 30.331884821738807;
pub const REGRESSION_FA_SNR: f64 = 29.01625920717602;

fn regression_config() -> SystemConfig {
    SystemConfig { m: 2, n: 2, ..SystemConfig::default() }
}

fn regression_snrs() -> (f64, f64) {
    let cfg = regression_config();
    let ch = draw_channel(&cfg, &mut trial_rng(1, 0));
    let s = IterationSettings::default();
    (
        beamform(&ch, Architecture::Fd, cfg.gamma(), &s).snr,
        beamform(&ch, Architecture::Fa, cfg.gamma(), &s).snr,
    )
}

/// Runs the oracle suite on small seeded instances. Every tolerance is
/// multiplied by `tolerance_scale`; a scale of 0 fails every check.
pub fn cmd_validate(cfg: &SystemConfig, tolerance_scale: f64, seed: u64) -> Result<ValidationReport> {
    cfg.validate()?;
    let mut checks = Vec::new();
    let mut push = |name: &str, error: f64, tolerance: f64| {
        let tolerance = tolerance * tolerance_scale;
        checks.push(Check { name: name.to_string(), error, tolerance, passed: error < tolerance });
    };
    let settings = IterationSettings::default();

    // Pure LoS without a direct link attains γMN².
    let mut los = SystemConfig { m: 4, n: 16, direct_link: false, ..cfg.clone() };
    los.set_rician_factor(f64::INFINITY);
    let ch = los_channel(&los);
    let target = los.gamma() * (los.m * los.n * los.n) as f64;
    for arch in [Architecture::Fd, Architecture::Fa] {
        let got = beamform(&ch, arch, los.gamma(), &settings).snr;
        push(&format!("los_exact_{}", arch.as_str()), (got / target - 1.0).abs(), 1e-6);
    }

    // Grid oracles on M = N = 2.
    let mut small = SystemConfig { m: 2, n: 2, ..cfg.clone() };
    small.set_rician_factor(1.0);
    for (arch, points, tol) in [(Architecture::Fd, 72, 5e-3), (Architecture::Fa, 360, 1e-2)] {
        let mut worst = 0.0f64;
        for t in 0..5 {
            let ch = draw_channel(&small, &mut trial_rng(seed, t));
            let got = beamform(&ch, arch, small.gamma(), &settings).snr;
            let oracle = oracle_grid_search(&ch, arch, small.gamma(), points)?.snr;
            worst = worst.max((oracle - got) / oracle);
        }
        push(&format!("oracle_gap_{}", arch.as_str()), worst.max(0.0), tol);
    }

    // MGF against sampling.
    let mut mgf_cfg = SystemConfig { m: 2, n: 2, direct_link: false, ..cfg.clone() };
    mgf_cfg.set_rician_factor(5.0);
    let ev = MgfEvaluator::from_config(&mgf_cfg, MgfSettings::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (kl, kn) = mgf_cfg.kappa(crate::config::Link::BsRis);
    let draws = 100_000;
    let samples: Vec<f64> = (0..draws)
        .map(|_| {
            let mut y = 0.0;
            for _ in 0..mgf_cfg.n {
                let h = (complex_normal(&mut rng) * kn + kl).norm();
                let row: f64 = (0..mgf_cfg.m).map(|_| (complex_normal(&mut rng) * kn + kl).norm()).sum();
                y += h * row;
            }
            y
        })
        .collect();
    let mut worst = 0.0f64;
    for s in [0.1, 0.5, 1.0, 2.0] {
        let mc = samples.iter().map(|y| (-s * y).exp()).sum::<f64>() / draws as f64;
        let an = ev.evaluate(Complex64::new(s, 0.0))?.re;
        worst = worst.max(((an - mc) / mc).abs());
    }
    push("mgf_vs_sampling", worst, 2e-2);

    // Inverter on closed-form transforms.
    let one = Complex64::new(1.0, 0.0);
    let euler = EulerSettings::default();
    let mut worst_exp = 0.0f64;
    let mut worst_erlang = 0.0f64;
    for i in 0..=100 {
        let y = 0.005 + (5.3 - 0.005) * i as f64 / 100.0;
        let got = invert_cdf(|s| Ok(one / s - one / (s + 1.0)), y, &euler)?.value;
        worst_exp = worst_exp.max((got - (1.0 - (-y).exp())).abs());
        let y = 0.103 + (7.43 - 0.103) * i as f64 / 100.0;
        let got = invert_cdf(|s| Ok(one / s - one / (s + 1.0) - one / ((s + 1.0) * (s + 1.0))), y, &euler)?.value;
        worst_erlang = worst_erlang.max((got - (1.0 - (-y).exp() * (1.0 + y))).abs());
    }
    push("inversion_exponential", worst_exp, 1e-3);
    push("inversion_erlang2", worst_erlang, 1e-3);

    // Frozen regression values.
    let (fd, fa) = regression_snrs();
    push("regression_fd", (fd / REGRESSION_FD_SNR - 1.0).abs(), 1e-9);
    push("regression_fa", (fa / REGRESSION_FA_SNR - 1.0).abs(), 1e-9);

    Ok(ValidationReport { checks })
}
