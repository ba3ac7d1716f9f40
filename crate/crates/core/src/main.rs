use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use riscap::beamforming::{Architecture, IterationSettings};
use riscap::config::{parse_real, resolve, Level, Overrides, SystemConfig};
use riscap::experiments::{self, CapacityGrid, Format, OutageGrid, SweepResult};
use riscap::outage::{BoundScaling, EulerSettings, MgfSettings};
use riscap::Error;

#[derive(Parser)]
#[command(name = "riscap", version, about = "Capacity and outage of RIS-aided MISO downlinks under Rician fading")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ergodic capacity over N, K, mu and architecture grids.
    CapacitySweep(CapacityArgs),
    /// Outage curves without a direct link: Monte Carlo FD/FA and the analytic lower bound.
    OutageCurve(OutageArgs),
    /// Run the oracle suite; exits with 2 if any check fails.
    Validate(ValidateArgs),
    /// Dump M(-s) of the cascaded envelope sum on an s grid.
    MgfProbe(ProbeArgs),
}

fn real(s: &str) -> Result<f64, String> {
    parse_real(s).map_err(|e| format!("`{s}`: {e}"))
}

fn level(s: &str) -> Result<Level, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn bool_flag(s: &str) -> Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true/false, got `{s}`")),
    }
}

/// System parameters; each flag overrides the config file, which overrides the defaults.
#[derive(Args)]
struct ConfigArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Transmit antennas M.
    #[arg(long)]
    m: Option<usize>,
    /// RIS elements N.
    #[arg(long)]
    n: Option<usize>,
    /// Transmit power (linear or e.g. `30dB`).
    #[arg(long, value_parser = level)]
    ps: Option<Level>,
    /// Noise power (linear or dB).
    #[arg(long, value_parser = level)]
    sigma_n_sq: Option<Level>,
    /// Path-loss exponent.
    #[arg(long)]
    alpha: Option<f64>,
    /// BS-user distance.
    #[arg(long)]
    d0: Option<f64>,
    /// BS-RIS distance.
    #[arg(long)]
    d1: Option<f64>,
    /// RIS-user distance.
    #[arg(long)]
    d2: Option<f64>,
    /// Rician factor of all links (`inf` for pure LoS).
    #[arg(long, value_parser = real)]
    k: Option<f64>,
    /// Rician factor of the BS-user link.
    #[arg(long, value_parser = real)]
    k0: Option<f64>,
    /// Rician factor of the BS-RIS link.
    #[arg(long, value_parser = real)]
    k1: Option<f64>,
    /// Rician factor of the RIS-user link.
    #[arg(long, value_parser = real)]
    k2: Option<f64>,
    /// BS departure angle towards the user, degrees.
    #[arg(long)]
    theta_bd_d: Option<f64>,
    /// BS departure angle towards the RIS, degrees.
    #[arg(long)]
    theta_bd_i: Option<f64>,
    /// RIS departure angle towards the user, degrees.
    #[arg(long)]
    theta_rd: Option<f64>,
    /// RIS arrival angle from the BS, degrees.
    #[arg(long)]
    theta_ra: Option<f64>,
    /// Element spacing in wavelengths.
    #[arg(long)]
    d_over_lambda: Option<f64>,
    /// Whether the direct BS-user link exists.
    #[arg(long, value_parser = bool_flag)]
    direct_link: Option<bool>,
    /// SNR scale gamma (linear or dB); overrides the geometric value.
    #[arg(long, value_parser = level)]
    gamma: Option<Level>,
    /// Direct-to-cascaded amplitude ratio mu (linear or dB, dB/20 convention).
    #[arg(long, value_parser = level)]
    mu: Option<Level>,
    /// Random seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> riscap::Result<SystemConfig> {
        let overrides = Overrides {
            m: self.m,
            n: self.n,
            ps: self.ps,
            sigma_n_sq: self.sigma_n_sq,
            alpha: self.alpha,
            d0: self.d0,
            d1: self.d1,
            d2: self.d2,
            k: self.k,
            k0: self.k0,
            k1: self.k1,
            k2: self.k2,
            theta_bd_d: self.theta_bd_d.map(f64::to_radians),
            theta_bd_i: self.theta_bd_i.map(f64::to_radians),
            theta_rd: self.theta_rd.map(f64::to_radians),
            theta_ra: self.theta_ra.map(f64::to_radians),
            d_over_lambda: self.d_over_lambda,
            direct_link: self.direct_link,
            gamma: self.gamma,
            mu: self.mu,
            seed: self.seed,
        };
        resolve(self.config.as_deref(), &overrides)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArchArg {
    Fd,
    Fa,
    Mrt,
}

impl From<ArchArg> for Architecture {
    fn from(a: ArchArg) -> Self {
        match a {
            ArchArg::Fd => Architecture::Fd,
            ArchArg::Fa => Architecture::Fa,
            ArchArg::Mrt => Architecture::Mrt,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScalingArg {
    PerAntenna,
    Unnormalized,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Args)]
struct IterationArgs {
    /// Relative stopping tolerance of the alternating updates.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
}

impl IterationArgs {
    fn settings(&self) -> IterationSettings {
        IterationSettings { tol: self.tol, max_iter: self.max_iter, ..IterationSettings::default() }
    }
}

#[derive(Args)]
struct CapacityArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    iteration: IterationArgs,
    /// Channel draws per cell.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Architectures, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "fd")]
    arch: Vec<ArchArg>,
    /// Grid of N, comma separated.
    #[arg(long, value_delimiter = ',')]
    n_values: Vec<usize>,
    /// Grid of K (all links), comma separated; `inf` allowed.
    #[arg(long, value_delimiter = ',', value_parser = real)]
    k_values: Vec<f64>,
    /// Grid of mu in dB, comma separated; `-inf` removes the direct link.
    #[arg(long, value_delimiter = ',', value_parser = real, allow_hyphen_values = true)]
    mu_db_values: Vec<f64>,
}

#[derive(Args)]
struct OutageArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    iteration: IterationArgs,
    /// Channel draws per Monte Carlo curve; 0 emits the analytic bound only.
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    /// Grid of K (all links), comma separated; `inf` allowed.
    #[arg(long, value_delimiter = ',', value_parser = real)]
    k_values: Vec<f64>,
    /// Thresholds in dB, comma separated and ascending.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    beta_db: Vec<f64>,
    /// Map from SNR threshold to envelope threshold in the bound.
    #[arg(long, value_enum, default_value = "per-antenna")]
    bound_scaling: ScalingArg,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Multiplies every tolerance; 0 forces failure.
    #[arg(long, default_value_t = 1.0)]
    tolerance_scale: f64,
}

#[derive(Args)]
struct ProbeArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Real parts of s, comma separated; defaults to a log grid on [1e-3, 1e2].
    #[arg(long, value_delimiter = ',')]
    s_values: Vec<f64>,
    /// Imaginary part added to every s.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    s_imag: f64,
}

fn emit(result: &SweepResult, output: &OutputArgs) -> riscap::Result<()> {
    let format = match output.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    match &output.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            result.write(&mut w, format)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            result.write(&mut w, format)?;
        }
    }
    Ok(())
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::CapacitySweep(a) => {
            let cfg = a.config.resolve()?;
            let grid = CapacityGrid {
                n: a.n_values,
                k: a.k_values,
                mu_db: a.mu_db_values,
                archs: a.arch.into_iter().map(Architecture::from).collect(),
            };
            let r = experiments::cmd_capacity_sweep(&cfg, &grid, a.trials, cfg.seed, &a.iteration.settings())?;
            emit(&r, &a.output)?;
        }
        Command::OutageCurve(a) => {
            let cfg = a.config.resolve()?;
            let grid = OutageGrid {
                k: a.k_values,
                beta_db: a.beta_db,
                scaling: match a.bound_scaling {
                    ScalingArg::PerAntenna => BoundScaling::PerAntenna,
                    ScalingArg::Unnormalized => BoundScaling::Unnormalized,
                },
            };
            let r = experiments::cmd_outage_curve(
                &cfg,
                &grid,
                a.trials,
                cfg.seed,
                &a.iteration.settings(),
                &MgfSettings::default(),
                &EulerSettings::default(),
            )?;
            emit(&r, &a.output)?;
        }
        Command::Validate(a) => {
            let cfg = a.config.resolve()?;
            let report = experiments::cmd_validate(&cfg, a.tolerance_scale, cfg.seed)?;
            for c in &report.checks {
                eprintln!(
                    "{} {}: error {:.3e} (tolerance {:.3e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.error,
                    c.tolerance
                );
            }
            emit(&report.to_sweep(&cfg, cfg.seed), &a.output)?;
            if !report.passed() {
                return Err(Failure::Numerical("validation failed".into()));
            }
        }
        Command::MgfProbe(a) => {
            let cfg = a.config.resolve()?;
            let grid: Vec<Complex64> = if a.s_values.is_empty() {
                experiments::default_s_grid().into_iter().map(|s| s + Complex64::new(0.0, a.s_imag)).collect()
            } else {
                a.s_values.iter().map(|&re| Complex64::new(re, a.s_imag)).collect()
            };
            let r = experiments::cmd_mgf_probe(&cfg, &grid, &MgfSettings::default())?;
            emit(&r, &a.output)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
