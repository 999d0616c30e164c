//! `isacsec` command-line driver.
//!
//! Loads a scenario (TOML in display units, defaulting to the shipped profile),
//! runs one experiment and writes `<name>.csv` plus `<name>.manifest.json`
//! to the output directory.
//!
//! Exit codes: 0 success, 1 I/O or other runtime error, 2 invalid
//! arguments or config, 3 scenario infeasible (`solve`), 4 solver failure,
//! 5 a `validate` check failed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use isacsec::experiments::{self, ConvergenceRow, Manifest, PatternRow};
use isacsec::metrics::MetricsReport;
use isacsec::scenario::{draw_channels, linear_to_db, ScenarioFile};
use isacsec::{validate, ExperimentError, OptimizerError, SystemConfig};

#[derive(Debug, Parser)]
#[command(
    name = "isacsec",
    version,
    about = "Secure ISAC beamforming experiments"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file (TOML). The built-in default profile is used if omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "results")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo draws per point.
    #[arg(long, global = true, default_value_t = 50)]
    trials: usize,
    /// Worker threads for independent trials (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Runs the design once on the scenario's channel draw.
    Solve,
    /// Per-iteration objective traces on one shared draw.
    Convergence {
        #[arg(long, value_delimiter = ',', default_value = "18,22,26")]
        powers: Vec<f64>,
    },
    /// Sensing SCNR at each user with and without the security ceilings.
    Scnr {
        #[arg(long, value_delimiter = ',', default_value = "20,22,24,26,28,30,32")]
        gamma_s: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "2,5")]
        gamma_se: Vec<f64>,
    },
    /// Fraction of draws meeting every requirement.
    Feasibility {
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "24,25,26,27,28,29,30,31,32,33,34,35,36"
        )]
        gamma_s: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "2,5")]
        gamma_se: Vec<f64>,
    },
    /// Secrecy rate against transmit power, proposed and random-sensing baseline.
    PowerSweep {
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "10,12,14,16,18,20,22,24,26"
        )]
        powers: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "8,10,12")]
        n_t: Vec<usize>,
    },
    /// Secrecy rate against the BS SCNR floor.
    GammasSweep {
        #[arg(long, value_delimiter = ',', default_value = "24,26,28,30,32")]
        gamma_s: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "8,10,12")]
        n_t: Vec<usize>,
    },
    /// Per-user secrecy rate against the number of users.
    UsersSweep {
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
        users: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "18,22")]
        powers: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "8,12")]
        n_t: Vec<usize>,
    },
    /// Normalized communication and sensing beam patterns.
    Beampattern {
        #[arg(long, value_delimiter = ',', default_value = "0,10")]
        theta_t: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "8,12")]
        n_t: Vec<usize>,
    },
    /// Built-in self checks against independent evaluations.
    Validate,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Infeasible(String),
    Solver(String),
    Checks(usize),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Config(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::Solver(_) => 4,
            Failure::Checks(_) => 5,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Infeasible(m) => write!(f, "infeasible: {m}"),
            Failure::Solver(m) => write!(f, "solver failure: {m}"),
            Failure::Checks(n) => write!(f, "{n} self check(s) failed"),
            Failure::Other(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<OptimizerError> for Failure {
    fn from(e: OptimizerError) -> Self {
        match e {
            OptimizerError::ScenarioInfeasible => Failure::Infeasible(e.to_string()),
            OptimizerError::Dimension(_) => Failure::Config(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(_) | ExperimentError::Spec(_) => Failure::Config(e.to_string()),
            ExperimentError::Optimizer(o) => o.into(),
            other => Failure::Other(other.to_string()),
        }
    }
}

fn load_config(common: &Common) -> Result<SystemConfig, Failure> {
    let mut file = match &common.config {
        Some(path) => ScenarioFile::load(path)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?,
        None => ScenarioFile::default(),
    };
    if common.seed.is_some() {
        file.seed = common.seed;
    }
    file.into_config()
        .map_err(|e| Failure::Config(e.to_string()))
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::Other(format!("cannot create {}: {e}", dir.display())))?;
    let probe = dir.join(".write-probe");
    std::fs::write(&probe, b"")
        .and_then(|_| std::fs::remove_file(&probe))
        .map_err(|e| Failure::Other(format!("{} is not writable: {e}", dir.display())))
}

/// Writes `<name>.csv` and its manifest, returning the CSV path.
fn emit<T: serde::Serialize>(
    out: &Path,
    name: &str,
    rows: &[T],
    manifest: Manifest,
) -> Result<PathBuf, Failure> {
    let csv = out.join(format!("{name}.csv"));
    experiments::write_csv(&csv, rows)?;
    let mut manifest = manifest;
    manifest.files.push(format!("{name}.csv"));
    manifest.write(&out.join(format!("{name}.manifest.json")))?;
    Ok(csv)
}

fn solve(cfg: &SystemConfig, out: &Path) -> Result<(), Failure> {
    let ch = draw_channels(cfg, &mut cfg.rng()).map_err(|e| Failure::Config(e.to_string()))?;
    let sol = isacsec::run_secure_design(&ch, cfg)?;
    let r = MetricsReport::evaluate(&sol, &ch, cfg);
    println!("secrecy rate      {:.6} bits/s/Hz", sol.secrecy_rate);
    println!(
        "iterations        {} (converged: {})",
        sol.iterations_used, sol.converged
    );
    println!(
        "BS SCNR           {:.4} dB (floor {:.4} dB)",
        linear_to_db(r.scnr_bs),
        linear_to_db(cfg.gamma_s)
    );
    for (k, x) in r.scnr_sense_eve.iter().enumerate() {
        println!(
            "user {k} sense SCNR {:.4} dB (ceiling {:.4} dB)",
            linear_to_db(*x),
            linear_to_db(cfg.gamma_se)
        );
    }
    println!(
        "power             {:.6e} W of {:.6e} W",
        r.total_power, cfg.p_max
    );
    let ratios: Vec<String> = sol.rank_ratios.iter().map(|x| format!("{x:.6}")).collect();
    println!("rank ratios       {}", ratios.join(" "));
    let manifest = Manifest::new("solve", cfg, None)?;
    let csv = emit(out, "solve", &sol.trace_log, manifest)?;
    println!("trace written to {}", csv.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let common = &cli.common;
    if common.trials == 0 {
        return Err(Failure::Config("`trials` must be at least 1".into()));
    }
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(Failure::Config("`jobs` must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Other(e.to_string()))?;
    }
    let cfg = load_config(common)?;
    let out = &common.out;
    prepare_out(out)?;
    let trials = common.trials;

    let csv = match &cli.command {
        Command::Solve => return solve(&cfg, out),
        Command::Convergence { powers } => {
            let runs = experiments::run_convergence(&cfg, powers)?;
            let mut rows: Vec<ConvergenceRow> = Vec::new();
            for run in &runs {
                match &run.result {
                    Ok(_) => rows.extend(run.rows()),
                    Err(e) => eprintln!("P = {} dBm: {e}", run.power_dbm),
                }
            }
            let m = Manifest::new("convergence", &cfg, None)?
                .with_parameter("power_dbm", powers.iter().copied());
            emit(out, "convergence", &rows, m)?
        }
        Command::Scnr { gamma_s, gamma_se } => {
            let rows = experiments::run_scnr_vs_threshold(&cfg, gamma_s, gamma_se, trials)?;
            let m = Manifest::new("scnr", &cfg, Some(trials))?
                .with_parameter("gamma_s_db", gamma_s.iter().copied())
                .with_parameter("gamma_se_db", gamma_se.iter().copied());
            emit(out, "scnr", &rows, m)?
        }
        Command::Feasibility { gamma_s, gamma_se } => {
            let rows = experiments::run_feasibility(&cfg, gamma_s, gamma_se, trials)?;
            let m = Manifest::new("feasibility", &cfg, Some(trials))?
                .with_parameter("gamma_s_db", gamma_s.iter().copied())
                .with_parameter("gamma_se_db", gamma_se.iter().copied());
            emit(out, "feasibility", &rows, m)?
        }
        Command::PowerSweep { powers, n_t } => {
            let rows = experiments::run_secrecy_vs_power(&cfg, powers, n_t, trials)?;
            let m = Manifest::new("power", &cfg, Some(trials))?
                .with_parameter("power_dbm", powers.iter().copied())
                .with_parameter("n_t", n_t.iter().map(|&n| n as f64));
            emit(out, "power", &rows, m)?
        }
        Command::GammasSweep { gamma_s, n_t } => {
            let rows = experiments::run_secrecy_vs_gamma_s(&cfg, gamma_s, n_t, trials)?;
            let m = Manifest::new("gamma_s", &cfg, Some(trials))?
                .with_parameter("gamma_s_db", gamma_s.iter().copied())
                .with_parameter("n_t", n_t.iter().map(|&n| n as f64));
            emit(out, "gamma_s", &rows, m)?
        }
        Command::UsersSweep { users, powers, n_t } => {
            let rows = experiments::run_avg_secrecy_vs_k(&cfg, users, powers, n_t, trials)?;
            let m = Manifest::new("users", &cfg, Some(trials))?
                .with_parameter("k_users", users.iter().map(|&k| k as f64))
                .with_parameter("power_dbm", powers.iter().copied())
                .with_parameter("n_t", n_t.iter().map(|&n| n as f64));
            emit(out, "users", &rows, m)?
        }
        Command::Beampattern { theta_t, n_t } => {
            let sets = experiments::run_beampattern(&cfg, theta_t, n_t)?;
            let rows: Vec<PatternRow> = sets.iter().flat_map(|s| s.rows()).collect();
            let m = Manifest::new("beampattern", &cfg, None)?
                .with_parameter("theta_t_deg", theta_t.iter().copied())
                .with_parameter("n_t", n_t.iter().map(|&n| n as f64));
            emit(out, "beampattern", &rows, m)?
        }
        Command::Validate => {
            let checks = validate::run_all(cfg.seed);
            for c in &checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            emit(
                out,
                "validate",
                &checks,
                Manifest::new("validate", &cfg, None)?,
            )?;
            if failed > 0 {
                return Err(Failure::Checks(failed));
            }
            return Ok(());
        }
    };
    println!("wrote {}", csv.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.code())
        }
    }
}
