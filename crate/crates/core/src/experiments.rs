//! Monte Carlo sweeps over the scenario parameters.
//!
//! Trial `t` always draws its channels from `cfg.trial_rng(t)`, so every
//! sweep point sees the same propagation for the same trial index (common
//! random numbers) whenever the array size and user count agree. Trials run
//! on the rayon pool and are reduced in trial order, so the thread count
//! never changes the output.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::metrics::{
    self, default_grid, BeamPattern, BeamformingSolution, MetricsError, MetricsReport,
};
use crate::optimizer::{
    baseline_s_random, is_feasible, run_design, run_secure_design, DesignOptions, OptimizerError,
    SensingDesign,
};
use crate::scenario::{db_to_linear, draw_channels, linear_to_db, ConfigError, SystemConfig};

/// Stream offset for the baseline's random sensing covariance, keeping it
/// independent of the channel draw of the same trial.
const BASELINE_STREAM: u64 = 1 << 32;

/// Absolute slack allowed on the surrogate objective between iterations.
pub const ASCENT_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Spec(String),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Design evaluated at a sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Joint optimization with the sensing-security ceilings.
    Proposed,
    /// Joint optimization without the sensing-security ceilings.
    NoSenseSecurity,
    /// Random sensing covariance; only the user covariances are optimized.
    SRandom,
}

/// Scenario parameter a sweep varies, in the units of the config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    PowerDbm,
    GammaSDb,
    GammaSeDb,
    NT,
    KUsers,
    ThetaTDeg,
}

impl Parameter {
    pub fn apply(self, cfg: &mut SystemConfig, value: f64) -> Result<(), ExperimentError> {
        let count = |v: f64| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(ExperimentError::Spec(format!(
                    "{self:?} needs a positive integer, got {v}"
                )))
            }
        };
        match self {
            Parameter::PowerDbm => cfg.set_power_dbm(value),
            Parameter::GammaSDb => cfg.gamma_s = db_to_linear(value),
            Parameter::GammaSeDb => cfg.gamma_se = db_to_linear(value),
            Parameter::NT => cfg.n_t = count(value)?,
            Parameter::KUsers => cfg.set_users(count(value)?),
            Parameter::ThetaTDeg => cfg.theta_t = value.to_radians(),
        }
        Ok(())
    }
}

/// One-dimensional sweep: `parameter` takes each of `values` on top of `base`.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub parameter: Parameter,
    pub values: Vec<f64>,
    pub trials: usize,
    pub base: SystemConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.values.is_empty() {
            return Err(ExperimentError::Spec("sweep has no values".into()));
        }
        if self.trials == 0 {
            return Err(ExperimentError::Spec("trials must be at least 1".into()));
        }
        self.base.validate()?;
        Ok(())
    }

    /// Configs of every sweep point, in order.
    pub fn points(&self) -> Result<Vec<SystemConfig>, ExperimentError> {
        self.validate()?;
        self.values
            .iter()
            .map(|&v| {
                let mut cfg = self.base.clone();
                self.parameter.apply(&mut cfg, v)?;
                cfg.validate()?;
                Ok(cfg)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialStatus {
    Solved,
    Infeasible,
    NumericalFailure,
    RankViolation,
}

/// Outcome of one Monte Carlo trial.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial: u64,
    pub status: TrialStatus,
    /// Zero unless solved.
    pub secrecy_rate: f64,
    pub scnr_sense_eve: Vec<f64>,
    pub scnr_bs: f64,
    pub total_power: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Surrogate objective never dropped by more than [`ASCENT_TOL`].
    pub monotone: bool,
    /// Smallest `λ_max/Tr` over the user covariances (also set on a rank violation).
    pub min_rank_ratio: f64,
    pub wall_time: f64,
}

impl TrialOutcome {
    fn unsolved(trial: u64, status: TrialStatus, wall_time: f64) -> Self {
        Self {
            trial,
            status,
            secrecy_rate: 0.0,
            scnr_sense_eve: Vec::new(),
            scnr_bs: f64::NAN,
            total_power: f64::NAN,
            iterations: 0,
            converged: false,
            monotone: false,
            min_rank_ratio: f64::NAN,
            wall_time,
        }
    }
}

/// Whether the surrogate objective trace is non-decreasing within [`ASCENT_TOL`].
pub fn is_monotone(sol: &BeamformingSolution) -> bool {
    sol.trace_log
        .windows(2)
        .all(|w| w[1].f >= w[0].f - ASCENT_TOL)
}

/// Draws trial `trial` and runs `scheme` on it.
pub fn run_trial(
    cfg: &SystemConfig,
    scheme: Scheme,
    trial: u64,
) -> Result<TrialOutcome, ExperimentError> {
    let start = Instant::now();
    let ch = draw_channels(cfg, &mut cfg.trial_rng(trial))?;
    let result = match scheme {
        Scheme::Proposed => run_secure_design(&ch, cfg),
        Scheme::NoSenseSecurity => run_design(
            &ch,
            cfg,
            &DesignOptions {
                sensing: SensingDesign::Optimized,
                sense_security: false,
            },
        ),
        Scheme::SRandom => baseline_s_random(&ch, cfg, &mut cfg.trial_rng(BASELINE_STREAM + trial)),
    };
    let elapsed = || start.elapsed().as_secs_f64();
    let sol = match result {
        Ok(sol) => sol,
        Err(OptimizerError::ScenarioInfeasible) => {
            return Ok(TrialOutcome::unsolved(
                trial,
                TrialStatus::Infeasible,
                elapsed(),
            ))
        }
        Err(OptimizerError::RankViolation { user, ratio }) => {
            log::warn!("trial {trial}: user {user} rank ratio {ratio}");
            let mut out = TrialOutcome::unsolved(trial, TrialStatus::RankViolation, elapsed());
            out.min_rank_ratio = ratio;
            return Ok(out);
        }
        Err(e @ OptimizerError::NumericalFailure { .. }) => {
            log::warn!("trial {trial}: {e}");
            return Ok(TrialOutcome::unsolved(
                trial,
                TrialStatus::NumericalFailure,
                elapsed(),
            ));
        }
        Err(e) => return Err(e.into()),
    };
    let report = MetricsReport::evaluate(&sol, &ch, cfg);
    Ok(TrialOutcome {
        trial,
        status: TrialStatus::Solved,
        secrecy_rate: sol.secrecy_rate,
        scnr_sense_eve: report.scnr_sense_eve,
        scnr_bs: report.scnr_bs,
        total_power: report.total_power,
        iterations: sol.iterations_used,
        converged: sol.converged,
        monotone: is_monotone(&sol),
        min_rank_ratio: sol.rank_ratios.iter().cloned().fold(1.0, f64::min),
        wall_time: elapsed(),
    })
}

/// Runs trials `0..trials` in parallel, returned in trial order.
pub fn run_trials(
    cfg: &SystemConfig,
    scheme: Scheme,
    trials: usize,
) -> Result<Vec<TrialOutcome>, ExperimentError> {
    cfg.validate()?;
    (0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, scheme, t))
        .collect()
}

/// Aggregate of one sweep point. Unsolved infeasible trials count as zero
/// secrecy rate; trials the solver failed on are excluded from the means.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub scheme: Scheme,
    pub n_t: usize,
    pub k_users: usize,
    pub p_dbm: f64,
    pub gamma_s_db: f64,
    pub gamma_se_db: f64,
    pub theta_t_deg: f64,
    pub trials: usize,
    pub solved: usize,
    pub infeasible: usize,
    pub failed: usize,
    pub feasibility: f64,
    pub mean_secrecy_rate: f64,
    /// Mean of `SR/K`.
    pub mean_avg_secrecy_rate: f64,
    pub mean_scnr_bs_db: f64,
    /// Mean SCNR at each user, dB, `;`-separated.
    pub mean_scnr_sense_eve_db: String,
    pub mean_iterations: f64,
    pub converged: usize,
    pub min_rank_ratio: f64,
    /// Worst `SCNR_k/γ_se − 1` over solved trials.
    pub worst_sense_eve_excess: f64,
    /// Worst `1 − SCNR_b/γ_s` over solved trials.
    pub worst_scnr_bs_shortfall: f64,
    /// Worst `Tr/P − 1` over solved trials.
    pub worst_power_excess: f64,
    /// Worst `1 − Tr/P` over solved trials.
    pub worst_power_slack: f64,
    /// Secrecy rate of every trial, `;`-separated; empty for failed trials.
    pub secrecy_rates: String,
    /// Total wall time of the point, seconds. Kept out of the CSV so that
    /// identical runs write identical files.
    #[serde(skip)]
    pub wall_time: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn worst(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(f64::NEG_INFINITY, f64::max)
}

fn fmt_list(xs: impl Iterator<Item = Option<f64>>) -> String {
    xs.map(|x| x.map(|v| format!("{v:.6}")).unwrap_or_default())
        .collect::<Vec<_>>()
        .join(";")
}

impl ResultRow {
    fn header(experiment: &str, scheme: Scheme, cfg: &SystemConfig, trials: usize) -> Self {
        Self {
            experiment: experiment.to_owned(),
            scheme,
            n_t: cfg.n_t,
            k_users: cfg.k_users,
            p_dbm: round6(cfg.power_dbm()),
            gamma_s_db: round6(linear_to_db(cfg.gamma_s)),
            gamma_se_db: round6(linear_to_db(cfg.gamma_se)),
            theta_t_deg: round6(cfg.theta_t.to_degrees()),
            trials,
            solved: 0,
            infeasible: 0,
            failed: 0,
            feasibility: f64::NAN,
            mean_secrecy_rate: f64::NAN,
            mean_avg_secrecy_rate: f64::NAN,
            mean_scnr_bs_db: f64::NAN,
            mean_scnr_sense_eve_db: String::new(),
            mean_iterations: f64::NAN,
            converged: 0,
            min_rank_ratio: f64::NAN,
            worst_sense_eve_excess: f64::NAN,
            worst_scnr_bs_shortfall: f64::NAN,
            worst_power_excess: f64::NAN,
            worst_power_slack: f64::NAN,
            secrecy_rates: String::new(),
            wall_time: 0.0,
        }
    }

    /// Aggregates trial outcomes of `scheme` at `cfg`.
    pub fn aggregate(
        experiment: &str,
        scheme: Scheme,
        cfg: &SystemConfig,
        outcomes: &[TrialOutcome],
    ) -> Self {
        let mut row = Self::header(experiment, scheme, cfg, outcomes.len());
        let solved: Vec<&TrialOutcome> = outcomes
            .iter()
            .filter(|o| o.status == TrialStatus::Solved)
            .collect();
        let counted = || {
            outcomes
                .iter()
                .filter(|o| matches!(o.status, TrialStatus::Solved | TrialStatus::Infeasible))
        };
        let k = cfg.k_users as f64;
        row.solved = solved.len();
        row.infeasible = outcomes
            .iter()
            .filter(|o| o.status == TrialStatus::Infeasible)
            .count();
        row.failed = outcomes.len() - row.solved - row.infeasible;
        row.feasibility = row.solved as f64 / outcomes.len().max(1) as f64;
        row.mean_secrecy_rate = mean(counted().map(|o| o.secrecy_rate));
        row.mean_avg_secrecy_rate = mean(counted().map(|o| o.secrecy_rate / k));
        row.mean_scnr_bs_db = linear_to_db(mean(solved.iter().map(|o| o.scnr_bs)));
        row.mean_scnr_sense_eve_db = fmt_list((0..cfg.k_users).map(|i| {
            Some(linear_to_db(mean(
                solved.iter().map(|o| o.scnr_sense_eve[i]),
            )))
        }));
        row.mean_iterations = mean(solved.iter().map(|o| o.iterations as f64));
        row.converged = solved.iter().filter(|o| o.converged).count();
        row.min_rank_ratio = outcomes
            .iter()
            .filter(|o| !o.min_rank_ratio.is_nan())
            .map(|o| o.min_rank_ratio)
            .fold(f64::NAN, f64::min);
        if !solved.is_empty() {
            row.worst_sense_eve_excess = worst(
                solved
                    .iter()
                    .flat_map(|o| o.scnr_sense_eve.iter().map(|x| x / cfg.gamma_se - 1.0)),
            );
            row.worst_scnr_bs_shortfall =
                worst(solved.iter().map(|o| 1.0 - o.scnr_bs / cfg.gamma_s));
            row.worst_power_excess = worst(solved.iter().map(|o| o.total_power / cfg.p_max - 1.0));
            row.worst_power_slack = worst(solved.iter().map(|o| 1.0 - o.total_power / cfg.p_max));
        }
        row.secrecy_rates = fmt_list(outcomes.iter().map(|o| match o.status {
            TrialStatus::Solved | TrialStatus::Infeasible => Some(o.secrecy_rate),
            _ => None,
        }));
        row.wall_time = outcomes.iter().map(|o| o.wall_time).sum();
        row
    }
}

/// Rounds a derived header value so that unit round trips (dB → linear →
/// dB) print as the number that was asked for.
fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Runs `trials` trials of `scheme` at `cfg` and aggregates them.
pub fn evaluate_point(
    experiment: &str,
    cfg: &SystemConfig,
    scheme: Scheme,
    trials: usize,
) -> Result<ResultRow, ExperimentError> {
    if trials == 0 {
        return Err(ExperimentError::Spec("trials must be at least 1".into()));
    }
    let outcomes = run_trials(cfg, scheme, trials)?;
    let row = ResultRow::aggregate(experiment, scheme, cfg, &outcomes);
    log::info!(
        "{experiment} {scheme:?} n_t={} K={} P={} dBm γ_s={} dB γ_se={} dB: SR {:.3}, solved {}/{} ({:.1}s)",
        row.n_t,
        row.k_users,
        row.p_dbm,
        row.gamma_s_db,
        row.gamma_se_db,
        row.mean_secrecy_rate,
        row.solved,
        row.trials,
        row.wall_time
    );
    Ok(row)
}

/// Evaluates every point of a one-dimensional sweep.
pub fn run_sweep(
    experiment: &str,
    spec: &SweepSpec,
    scheme: Scheme,
) -> Result<Vec<ResultRow>, ExperimentError> {
    spec.points()?
        .iter()
        .map(|cfg| evaluate_point(experiment, cfg, scheme, spec.trials))
        .collect()
}

fn with(
    base: &SystemConfig,
    settings: &[(Parameter, f64)],
) -> Result<SystemConfig, ExperimentError> {
    let mut cfg = base.clone();
    for &(p, v) in settings {
        p.apply(&mut cfg, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn nonempty(name: &str, xs: &[f64]) -> Result<(), ExperimentError> {
    if xs.is_empty() {
        Err(ExperimentError::Spec(format!("{name} list is empty")))
    } else {
        Ok(())
    }
}

/// One SCA trace of the convergence study.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub power_dbm: f64,
    pub iter: usize,
    pub f: f64,
    pub delta_f: f64,
    pub secrecy_rate: f64,
}

/// A run of the convergence study at one power level.
#[derive(Debug)]
pub struct ConvergenceRun {
    pub power_dbm: f64,
    pub result: Result<BeamformingSolution, OptimizerError>,
}

impl ConvergenceRun {
    pub fn rows(&self) -> Vec<ConvergenceRow> {
        match &self.result {
            Ok(sol) => sol
                .trace_log
                .iter()
                .map(|r| ConvergenceRow {
                    power_dbm: self.power_dbm,
                    iter: r.iter,
                    f: r.f,
                    delta_f: r.delta_f,
                    secrecy_rate: r.secrecy_rate,
                })
                .collect(),
            Err(_) => Vec::new(),
        }
    }
}

/// Objective traces at each power level on the draw given by `cfg.seed`.
pub fn run_convergence(
    cfg: &SystemConfig,
    powers_dbm: &[f64],
) -> Result<Vec<ConvergenceRun>, ExperimentError> {
    nonempty("power", powers_dbm)?;
    let ch = draw_channels(cfg, &mut cfg.rng())?;
    powers_dbm
        .par_iter()
        .map(|&p| {
            let cfg = with(cfg, &[(Parameter::PowerDbm, p)])?;
            Ok(ConvergenceRun {
                power_dbm: p,
                result: run_secure_design(&ch, &cfg),
            })
        })
        .collect()
}

/// Mean sensing-eavesdropper SCNR with and without the security ceilings,
/// per `(γ_se, γ_s)`.
pub fn run_scnr_vs_threshold(
    cfg: &SystemConfig,
    gamma_s_db: &[f64],
    gamma_se_db: &[f64],
    trials: usize,
) -> Result<Vec<ResultRow>, ExperimentError> {
    nonempty("gamma_s", gamma_s_db)?;
    nonempty("gamma_se", gamma_se_db)?;
    let mut rows = Vec::new();
    for &se in gamma_se_db {
        for &gs in gamma_s_db {
            let point = with(
                cfg,
                &[(Parameter::GammaSeDb, se), (Parameter::GammaSDb, gs)],
            )?;
            for scheme in [Scheme::Proposed, Scheme::NoSenseSecurity] {
                rows.push(evaluate_point("scnr", &point, scheme, trials)?);
            }
        }
    }
    Ok(rows)
}

/// Fraction of draws on which some design meets every requirement, per
/// `(γ_se, γ_s)`. Only the constraint set is solved: a draw is feasible for
/// the iteration exactly when it is feasible for its first subproblem.
pub fn run_feasibility(
    cfg: &SystemConfig,
    gamma_s_db: &[f64],
    gamma_se_db: &[f64],
    trials: usize,
) -> Result<Vec<ResultRow>, ExperimentError> {
    nonempty("gamma_s", gamma_s_db)?;
    nonempty("gamma_se", gamma_se_db)?;
    if trials == 0 {
        return Err(ExperimentError::Spec("trials must be at least 1".into()));
    }
    let mut rows = Vec::new();
    for &se in gamma_se_db {
        for &gs in gamma_s_db {
            let point = with(
                cfg,
                &[(Parameter::GammaSeDb, se), (Parameter::GammaSDb, gs)],
            )?;
            let outcomes: Vec<TrialOutcome> = (0..trials as u64)
                .into_par_iter()
                .map(|t| {
                    let start = Instant::now();
                    let ch = draw_channels(&point, &mut point.trial_rng(t))?;
                    let status = match is_feasible(&ch, &point, &DesignOptions::default()) {
                        Ok(true) => TrialStatus::Solved,
                        Ok(false) => TrialStatus::Infeasible,
                        Err(e) => {
                            log::warn!("feasibility trial {t}: {e}");
                            TrialStatus::NumericalFailure
                        }
                    };
                    Ok(TrialOutcome::unsolved(
                        t,
                        status,
                        start.elapsed().as_secs_f64(),
                    ))
                })
                .collect::<Result<_, ExperimentError>>()?;
            let mut row = ResultRow::header("feasibility", Scheme::Proposed, &point, trials);
            row.solved = outcomes
                .iter()
                .filter(|o| o.status == TrialStatus::Solved)
                .count();
            row.infeasible = outcomes
                .iter()
                .filter(|o| o.status == TrialStatus::Infeasible)
                .count();
            row.failed = trials - row.solved - row.infeasible;
            row.feasibility = row.solved as f64 / trials as f64;
            row.wall_time = outcomes.iter().map(|o| o.wall_time).sum();
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Mean secrecy rate per `(N_t, P)` for the proposed design and the random
/// sensing-covariance baseline.
pub fn run_secrecy_vs_power(
    cfg: &SystemConfig,
    powers_dbm: &[f64],
    nt_list: &[usize],
    trials: usize,
) -> Result<Vec<ResultRow>, ExperimentError> {
    nonempty("power", powers_dbm)?;
    let mut rows = Vec::new();
    for &nt in nt_list {
        for &p in powers_dbm {
            let point = with(cfg, &[(Parameter::NT, nt as f64), (Parameter::PowerDbm, p)])?;
            for scheme in [Scheme::Proposed, Scheme::SRandom] {
                rows.push(evaluate_point("power", &point, scheme, trials)?);
            }
        }
    }
    Ok(rows)
}

/// Mean secrecy rate per `(N_t, γ_s)`.
pub fn run_secrecy_vs_gamma_s(
    cfg: &SystemConfig,
    gamma_s_db: &[f64],
    nt_list: &[usize],
    trials: usize,
) -> Result<Vec<ResultRow>, ExperimentError> {
    nonempty("gamma_s", gamma_s_db)?;
    let mut rows = Vec::new();
    for &nt in nt_list {
        let spec = SweepSpec {
            parameter: Parameter::GammaSDb,
            values: gamma_s_db.to_vec(),
            trials,
            base: with(cfg, &[(Parameter::NT, nt as f64)])?,
        };
        rows.extend(run_sweep("gamma_s", &spec, Scheme::Proposed)?);
    }
    Ok(rows)
}

/// Mean per-user secrecy rate per `(N_t, P, K)`. Added users cycle the
/// default distance pattern.
pub fn run_avg_secrecy_vs_k(
    cfg: &SystemConfig,
    k_list: &[usize],
    powers_dbm: &[f64],
    nt_list: &[usize],
    trials: usize,
) -> Result<Vec<ResultRow>, ExperimentError> {
    nonempty("power", powers_dbm)?;
    let mut rows = Vec::new();
    for &nt in nt_list {
        for &p in powers_dbm {
            for &k in k_list {
                let point = with(
                    cfg,
                    &[
                        (Parameter::NT, nt as f64),
                        (Parameter::PowerDbm, p),
                        (Parameter::KUsers, k as f64),
                    ],
                )?;
                rows.push(evaluate_point("users", &point, Scheme::Proposed, trials)?);
            }
        }
    }
    Ok(rows)
}

/// Beam patterns of the design solved on the draw given by `cfg.seed`.
#[derive(Debug, Clone)]
pub struct PatternSet {
    pub theta_t_deg: f64,
    pub n_t: usize,
    pub pattern: BeamPattern,
    pub secrecy_rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PatternRow {
    pub theta_t_deg: f64,
    pub n_t: usize,
    pub theta_deg: f64,
    pub comm: f64,
    pub sensing: f64,
}

impl PatternSet {
    pub fn rows(&self) -> Vec<PatternRow> {
        let p = &self.pattern;
        (0..p.thetas.len())
            .map(|i| PatternRow {
                theta_t_deg: self.theta_t_deg,
                n_t: self.n_t,
                theta_deg: round6(p.thetas[i].to_degrees()),
                comm: p.comm[i],
                sensing: p.sensing[i],
            })
            .collect()
    }
}

/// Solves one draw per `(θ_t, N_t)` and evaluates both normalized patterns
/// on the default −90°…90° grid.
pub fn run_beampattern(
    cfg: &SystemConfig,
    theta_t_deg: &[f64],
    nt_list: &[usize],
) -> Result<Vec<PatternSet>, ExperimentError> {
    nonempty("theta_t", theta_t_deg)?;
    let mut points = Vec::new();
    for &theta in theta_t_deg {
        for &nt in nt_list {
            points.push((
                theta,
                nt,
                with(
                    cfg,
                    &[(Parameter::ThetaTDeg, theta), (Parameter::NT, nt as f64)],
                )?,
            ));
        }
    }
    let grid = default_grid();
    points
        .par_iter()
        .map(|(theta, nt, point)| {
            let ch = draw_channels(point, &mut point.rng())?;
            let sol = run_secure_design(&ch, point)?;
            Ok(PatternSet {
                theta_t_deg: *theta,
                n_t: *nt,
                pattern: metrics::beam_pattern(&sol, &ch, point, &grid)?,
                secrecy_rate: sol.secrecy_rate,
            })
        })
        .collect()
}

/// Writes `rows` as CSV with a header row.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ExperimentError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Provenance record written next to each result file.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    /// SHA-256 of the base config serialized as JSON.
    pub config_hash: String,
    pub trials: Option<usize>,
    pub parameters: BTreeMap<String, Vec<f64>>,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(
        experiment: &str,
        cfg: &SystemConfig,
        trials: Option<usize>,
    ) -> Result<Self, ExperimentError> {
        Ok(Self {
            experiment: experiment.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            seed: cfg.seed,
            config_hash: config_hash(cfg)?,
            trials,
            parameters: BTreeMap::new(),
            files: Vec::new(),
        })
    }

    pub fn with_parameter(mut self, name: &str, values: impl IntoIterator<Item = f64>) -> Self {
        self.parameters
            .insert(name.to_owned(), values.into_iter().collect());
        self
    }

    pub fn write(&self, path: &Path) -> Result<(), ExperimentError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

pub fn config_hash(cfg: &SystemConfig) -> Result<String, ExperimentError> {
    let json = serde_json::to_vec(cfg)?;
    Ok(hex::encode(Sha256::digest(&json)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::TraceRecord;

    fn outcome(trial: u64, status: TrialStatus, sr: f64) -> TrialOutcome {
        let mut o = TrialOutcome::unsolved(trial, status, 0.5);
        if status == TrialStatus::Solved {
            o.secrecy_rate = sr;
            o.scnr_sense_eve = vec![1.0, 2.0, 3.0];
            o.scnr_bs = 100.0;
            o.total_power = 1.0;
            o.iterations = 3;
            o.converged = true;
            o.min_rank_ratio = 0.9995;
        }
        o
    }

    #[test]
    fn aggregate_counts_infeasible_as_zero_and_skips_failures() {
        let cfg = SystemConfig::default_profile();
        let outcomes = vec![
            outcome(0, TrialStatus::Solved, 6.0),
            outcome(1, TrialStatus::Infeasible, 0.0),
            outcome(2, TrialStatus::NumericalFailure, 0.0),
            outcome(3, TrialStatus::Solved, 3.0),
        ];
        let row = ResultRow::aggregate("t", Scheme::Proposed, &cfg, &outcomes);
        assert_eq!((row.solved, row.infeasible, row.failed), (2, 1, 1));
        assert_eq!(row.feasibility, 0.5);
        assert_eq!(row.mean_secrecy_rate, 3.0);
        assert_eq!(row.mean_avg_secrecy_rate, 1.0);
        assert_eq!(row.mean_iterations, 3.0);
        assert_eq!(row.converged, 2);
        assert_eq!(row.min_rank_ratio, 0.9995);
        assert_eq!(row.secrecy_rates, "6.000000;0.000000;;3.000000");
        assert_eq!(row.mean_scnr_bs_db, 20.0);
        assert_eq!(row.wall_time, 2.0);
    }

    #[test]
    fn header_reports_display_units() {
        let row = ResultRow::aggregate("t", Scheme::SRandom, &SystemConfig::default_profile(), &[]);
        assert_eq!(
            (row.p_dbm, row.gamma_s_db, row.gamma_se_db, row.theta_t_deg),
            (18.0, 32.0, 5.0, 0.0)
        );
        assert_eq!((row.n_t, row.k_users, row.trials), (8, 3, 0));
    }

    #[test]
    fn parameters_apply_in_file_units() {
        let mut cfg = SystemConfig::default_profile();
        Parameter::PowerDbm.apply(&mut cfg, 22.0).unwrap();
        assert!((cfg.power_dbm() - 22.0).abs() < 1e-12);
        Parameter::KUsers.apply(&mut cfg, 5.0).unwrap();
        assert_eq!(cfg.d_bu.len(), 5);
        assert_eq!(cfg.d_ut, vec![25.0, 25.0, 30.0, 25.0, 25.0]);
        Parameter::ThetaTDeg.apply(&mut cfg, 10.0).unwrap();
        assert!((cfg.theta_t - 10f64.to_radians()).abs() < 1e-15);
        assert!(Parameter::NT.apply(&mut cfg, 2.5).is_err());
        assert!(Parameter::KUsers.apply(&mut cfg, 0.0).is_err());
    }

    #[test]
    fn sweep_spec_rejects_empty_inputs() {
        let base = SystemConfig::default_profile();
        let spec = SweepSpec {
            parameter: Parameter::GammaSDb,
            values: vec![],
            trials: 3,
            base: base.clone(),
        };
        assert!(spec.points().is_err());
        let spec = SweepSpec {
            parameter: Parameter::GammaSDb,
            values: vec![20.0],
            trials: 0,
            base,
        };
        assert!(spec.points().is_err());
    }

    #[test]
    fn monotone_check_allows_solver_slack() {
        let rec = |f: f64| TraceRecord {
            iter: 0,
            f,
            delta_f: 0.0,
            secrecy_rate: 0.0,
            sense_eve_residual: 0.0,
            scnr_bs_residual: 0.0,
            power_residual: 0.0,
            min_rank_ratio: 1.0,
        };
        let mut sol = BeamformingSolution::zeros(2, 1);
        sol.trace_log = vec![rec(1.0), rec(2.0), rec(2.0 - 0.5e-6)];
        assert!(is_monotone(&sol));
        sol.trace_log.push(rec(1.9));
        assert!(!is_monotone(&sol));
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = SystemConfig::default_profile();
        let mut b = a.clone();
        assert_eq!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
        b.seed += 1;
        assert_ne!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
        assert_eq!(config_hash(&a).unwrap().len(), 64);
    }

    #[test]
    fn feasibility_is_one_far_below_the_ceiling_and_zero_far_above() {
        let cfg = SystemConfig::default_profile();
        let rows = run_feasibility(&cfg, &[10.0, 60.0], &[5.0], 3).unwrap();
        assert_eq!(rows[0].feasibility, 1.0);
        assert_eq!(rows[1].feasibility, 0.0);
    }

    #[test]
    fn csv_output_is_reproducible() {
        let cfg = SystemConfig::default_profile();
        let dir = tempfile::tempdir().unwrap();
        let rows = run_feasibility(&cfg, &[20.0], &[5.0], 2).unwrap();
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        write_csv(&a, &rows).unwrap();
        write_csv(&b, &run_feasibility(&cfg, &[20.0], &[5.0], 2).unwrap()).unwrap();
        let text = fs::read_to_string(&a).unwrap();
        assert_eq!(text, fs::read_to_string(&b).unwrap());
        assert!(text.starts_with("experiment,scheme,n_t,k_users,p_dbm,gamma_s_db"));
        assert!(!text.contains("wall_time"));
    }
}
