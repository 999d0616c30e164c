//! Iterative secrecy-rate maximization.
//!
//! The sum secrecy rate is a difference of logarithms. Writing each log as
//! an auxiliary variable turns the concave halves into exponential-cone
//! constraints, while the convex halves (`e^x ≥ affine`) are replaced by
//! their first-order expansion at the previous iterate. Each pass solves one
//! conic program over the PSD covariances, then moves the expansion point.
//! The rank-one constraint on each communication covariance is dropped and
//! checked after convergence.

mod scaled;
mod subproblem;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::conic::{ConicError, SolveStatus, SolverSettings};
use crate::linalg::{dominant_eigenpair, outer_col, project_out, trace_re, CMat, CVec};
use crate::metrics::{self, BeamformingSolution, TraceRecord};
use crate::scenario::{steering_vector, ChannelRealization, InitStrategy, SystemConfig};

pub(crate) use scaled::ScaledInstance;
pub use subproblem::{SensingTerm, Subproblem};

/// Relative trace below which a communication covariance counts as switched
/// off; its rank ratio is then reported as one. The interior-point floor
/// leaves about 5e-9 of the budget on every eigenvalue of an unused block.
const IDLE_TRACE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("no design meets the sensing and security requirements on this draw")]
    ScenarioInfeasible,
    #[error("conic solver failed at iteration {iteration} ({status:?})")]
    NumericalFailure {
        iteration: usize,
        status: SolveStatus,
        trace: Vec<TraceRecord>,
    },
    #[error("covariance of user {user} is not rank one: λ_max/Tr = {ratio:.6}")]
    RankViolation { user: usize, ratio: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Conic(#[from] ConicError),
}

/// How the sensing covariance is treated.
#[derive(Debug, Clone, PartialEq)]
pub enum SensingDesign {
    /// Optimized jointly with the communication covariances.
    Optimized,
    /// Held at the given covariance (watts); only `{Q_k}` are optimized.
    Fixed(CMat),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignOptions {
    pub sensing: SensingDesign,
    /// Enforce the SCNR ceiling at every user. Off only for the comparison
    /// design that ignores sensing eavesdroppers.
    pub sense_security: bool,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            sensing: SensingDesign::Optimized,
            sense_security: true,
        }
    }
}

/// Expansion point of the iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaState {
    /// Log interference level of each user at the expansion point.
    pub eps: Vec<f64>,
    /// Log total level at the target at the expansion point.
    pub u: f64,
    /// Surrogate objective in nats.
    pub f: f64,
    pub n: usize,
    /// Normalized covariances (budget one) of the last iterate. They only set
    /// the scale of the exponential-cone rows; the feasible set does not
    /// depend on them.
    pub anchor_q: Vec<CMat>,
    pub anchor_s: CMat,
}

/// `e^{x0}(1 + x − x0)`, the tangent of `e^x` at `x0`.
pub fn exp_tangent(x: f64, x0: f64) -> f64 {
    x0.exp() * (1.0 + x - x0)
}

fn normalized_fixed(opts: &DesignOptions, power: f64) -> Option<CMat> {
    match &opts.sensing {
        SensingDesign::Fixed(m) => Some(m * Complex64::new(1.0 / power, 0.0)),
        SensingDesign::Optimized => None,
    }
}

fn state_at(inst: &ScaledInstance, q: Vec<CMat>, s: CMat, n: usize) -> ScaState {
    let k_users = inst.k_users();
    let eps = (0..k_users)
        .map(|k| inst.user_level(k, &q, &s, Some(k)).ln())
        .collect();
    let u = inst.eve_level(&q, &s, None).ln();
    let f = inst.secrecy_nats(&q, &s);
    ScaState {
        eps,
        u,
        f,
        n,
        anchor_q: q,
        anchor_s: s,
    }
}

/// Unit vector along `x` with `avoid` projected out, or along `x` itself
/// when the projection is (numerically) zero.
fn steered(x: &CVec, avoid: &[CVec], strategy: InitStrategy) -> CVec {
    let unit = |v: &CVec| v / Complex64::new(v.norm(), 0.0);
    if strategy == InitStrategy::ZeroForcing {
        let p = project_out(x, avoid);
        if p.norm() > 1e-6 * x.norm() {
            return unit(&p);
        }
    }
    unit(x)
}

fn heuristic_start(inst: &ScaledInstance, cfg: &SystemConfig, opts: &DesignOptions) -> ScaState {
    let n = inst.n_t();
    let k_users = inst.k_users();
    // beams are columns; user rows enter conjugated
    let user_cols: Vec<CVec> = inst.user.iter().map(|h| h.map(|z| z.conj())).collect();
    let (s, comm_share) = match normalized_fixed(opts, inst.power) {
        Some(s) => {
            let left = (1.0 - trace_re(&s)).max(0.0);
            (s, left)
        }
        None => {
            let a = steered(
                &steering_vector(cfg.theta_t, n),
                &user_cols,
                cfg.init_strategy,
            );
            (
                outer_col(&a) * Complex64::new(cfg.init_rho, 0.0),
                1.0 - cfg.init_rho,
            )
        }
    };
    let per_user = Complex64::new(comm_share / k_users as f64, 0.0);
    let q = (0..k_users)
        .map(|k| {
            if user_cols[k].norm_squared() == 0.0 {
                return CMat::zeros(n, n);
            }
            let mut avoid: Vec<CVec> = user_cols
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != k)
                .map(|(_, c)| c.clone())
                .collect();
            avoid.push(inst.eve.clone());
            outer_col(&steered(&user_cols[k], &avoid, cfg.init_strategy)) * per_user
        })
        .collect();
    state_at(inst, q, s, 0)
}

/// Starting expansion point: a sensing beam toward the target with share `ρ`
/// of the budget and one beam per user sharing the rest, directed as
/// `cfg.init_strategy` says.
pub fn init_sca(ch: &ChannelRealization, cfg: &SystemConfig) -> ScaState {
    heuristic_start(
        &ScaledInstance::new(ch, cfg),
        cfg,
        &DesignOptions::default(),
    )
}

/// Builds the convex subproblem at `state` for the default design.
pub fn build_subproblem(
    state: &ScaState,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> Result<Subproblem, OptimizerError> {
    build_subproblem_with(state, ch, cfg, &DesignOptions::default())
}

pub fn build_subproblem_with(
    state: &ScaState,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
    opts: &DesignOptions,
) -> Result<Subproblem, OptimizerError> {
    if ch.n_t() != cfg.n_t || ch.k_users() != cfg.k_users {
        return Err(OptimizerError::Dimension(format!(
            "channels are {}×{}, config is {}×{}",
            ch.k_users(),
            ch.n_t(),
            cfg.k_users,
            cfg.n_t
        )));
    }
    subproblem::build(
        state,
        &ScaledInstance::new(ch, cfg),
        cfg.gamma_se,
        cfg.gamma_s,
        opts,
    )
}

fn settings(cfg: &SystemConfig) -> SolverSettings {
    SolverSettings::with_tol(cfg.solver_tol)
}

/// Whether any design satisfies the security ceilings, the SCNR floor and the
/// power budget on this draw. This is exactly the feasible set of the first
/// subproblem, whose remaining rows can always be met by the free log
/// variables.
pub fn is_feasible(
    ch: &ChannelRealization,
    cfg: &SystemConfig,
    opts: &DesignOptions,
) -> Result<bool, OptimizerError> {
    let inst = ScaledInstance::new(ch, cfg);
    let prog = subproblem::feasibility_program(&inst, cfg.gamma_se, cfg.gamma_s, opts)?;
    let sol = prog.solve(&settings(cfg))?;
    match sol.status {
        SolveStatus::Optimal | SolveStatus::AlmostOptimal => Ok(true),
        SolveStatus::Infeasible => Ok(false),
        status => Err(OptimizerError::NumericalFailure {
            iteration: 0,
            status,
            trace: Vec::new(),
        }),
    }
}

fn denormalize(q: &[CMat], s: &CMat, power: f64) -> (Vec<CMat>, CMat) {
    let p = Complex64::new(power, 0.0);
    (q.iter().map(|m| m * p).collect(), s * p)
}

fn rank_ratio(q: &CMat, budget: f64) -> f64 {
    let tr = trace_re(q);
    if tr <= IDLE_TRACE * budget {
        return 1.0;
    }
    dominant_eigenpair(q).0 / tr
}

fn trace_record(
    iter: usize,
    f: f64,
    delta_f: f64,
    design: &BeamformingSolution,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> TraceRecord {
    let sense_eve_residual = (0..design.k_users())
        .map(|k| metrics::scnr_sense_eve(k, design, ch, cfg) / cfg.gamma_se - 1.0)
        .fold(f64::NEG_INFINITY, f64::max);
    TraceRecord {
        iter,
        f,
        delta_f,
        secrecy_rate: metrics::secrecy_rate(design, ch, cfg),
        sense_eve_residual,
        scnr_bs_residual: 1.0 - metrics::scnr_bs(design, ch, cfg) / cfg.gamma_s,
        power_residual: metrics::total_power(design) / cfg.p_max - 1.0,
        min_rank_ratio: design
            .q
            .iter()
            .map(|q| rank_ratio(q, cfg.p_max))
            .fold(1.0, f64::min),
    }
}

/// Runs the iteration with the default design (sensing covariance optimized,
/// security ceilings enforced).
pub fn run_secure_design(
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> Result<BeamformingSolution, OptimizerError> {
    run_design(ch, cfg, &DesignOptions::default())
}

/// Runs the iteration until the relative objective change drops to
/// `cfg.delta` or `cfg.max_iters` subproblems have been solved, then
/// extracts the beamformers.
pub fn run_design(
    ch: &ChannelRealization,
    cfg: &SystemConfig,
    opts: &DesignOptions,
) -> Result<BeamformingSolution, OptimizerError> {
    cfg.validate()
        .map_err(|e| OptimizerError::Dimension(e.to_string()))?;
    let inst = ScaledInstance::new(ch, cfg);
    let mut state = heuristic_start(&inst, cfg, opts);
    let settings = settings(cfg);
    let mut trace: Vec<TraceRecord> = Vec::new();
    let mut converged = false;
    let mut design = None;

    for iter in 1..=cfg.max_iters {
        let sub = build_subproblem_with(&state, ch, cfg, opts)?;
        let sol = sub.program.solve(&settings)?;
        match sol.status {
            SolveStatus::Optimal | SolveStatus::AlmostOptimal => {}
            SolveStatus::Infeasible if iter == 1 => return Err(OptimizerError::ScenarioInfeasible),
            // An uncertified first solve is usually an infeasible draw that
            // the solver could not prove; the constraint-only program can.
            _ if iter == 1 && matches!(is_feasible(ch, cfg, opts), Ok(false)) => {
                return Err(OptimizerError::ScenarioInfeasible)
            }
            status => {
                return Err(OptimizerError::NumericalFailure {
                    iteration: iter,
                    status,
                    trace,
                });
            }
        }
        if sol.status == SolveStatus::AlmostOptimal {
            log::debug!("subproblem {iter} solved to reduced accuracy");
        }
        let q: Vec<CMat> = sub.q.iter().map(|b| sol.hermitian(b)).collect();
        let s = match &sub.s {
            SensingTerm::Variable(b) => sol.hermitian(b),
            SensingTerm::Fixed(m) => m.clone(),
        };
        let f = sol.objective;
        let delta_f = ((f - state.f) / state.f.abs().max(1e-9)).abs();
        let (qw, sw) = denormalize(&q, &s, inst.power);
        let current = BeamformingSolution::from_covariances(qw, sw);
        trace.push(trace_record(iter, f, delta_f, &current, ch, cfg));
        // Re-expand at the log levels of the new covariances rather than at
        // the solver's ε and u. Those only bound the levels from above (the
        // tangent overestimates e^x), so expanding there would let each log
        // fall by at most one nat per iteration. The previous iterate stays
        // feasible with value ≥ f, so ascent is kept.
        state = ScaState {
            f,
            ..state_at(&inst, q, s, iter)
        };
        design = Some(current);
        // The heuristic start is generally infeasible, so its objective is
        // not a meaningful reference: at least two subproblems are solved.
        if iter >= 2 && delta_f <= cfg.delta {
            converged = true;
            break;
        }
    }

    let mut design = design.expect("max_iters ≥ 1");
    design.secrecy_rate = metrics::secrecy_rate(&design, ch, cfg);
    design.surrogate_objective = state.f;
    design.iterations_used = state.n;
    design.converged = converged;
    design.trace_log = trace;
    extract_beamformers(design, cfg)
}

/// Recovers `w_k = sqrt(λ_max)·e_max` from each `Q_k` and checks that the
/// relaxation was tight (`λ_max/Tr ≥ 1 − rank_tol`).
pub fn extract_beamformers(
    mut sol: BeamformingSolution,
    cfg: &SystemConfig,
) -> Result<BeamformingSolution, OptimizerError> {
    let mut w = Vec::with_capacity(sol.k_users());
    let mut ratios = Vec::with_capacity(sol.k_users());
    for q in &sol.q {
        let (lambda, e) = dominant_eigenpair(q);
        w.push(e * Complex64::new(lambda.max(0.0).sqrt(), 0.0));
        ratios.push(rank_ratio(q, cfg.p_max));
    }
    sol.w = w;
    sol.rank_ratios = ratios;
    if let Some((user, &ratio)) = sol
        .rank_ratios
        .iter()
        .enumerate()
        .find(|(_, &r)| r < 1.0 - cfg.rank_tol)
    {
        return Err(OptimizerError::RankViolation { user, ratio });
    }
    Ok(sol)
}

/// `S = η·G G^H` with `G` an `N_t × N_t` standard complex Gaussian matrix and
/// `η` chosen so that `Tr S = μ·P`.
pub fn random_sensing_covariance<R: Rng + ?Sized>(n_t: usize, total: f64, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n_t, n_t, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let gg = &g * g.adjoint();
    let tr = trace_re(&gg);
    if total == 0.0 || tr == 0.0 {
        return CMat::zeros(n_t, n_t);
    }
    crate::linalg::hermitian_part(&(gg * Complex64::new(total / tr, 0.0)))
}

/// Baseline with a random sensing covariance holding `μ` of the budget;
/// only the communication covariances are optimized, with what is left.
pub fn baseline_s_random<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<BeamformingSolution, OptimizerError> {
    let s = random_sensing_covariance(cfg.n_t, cfg.baseline_mu * cfg.p_max, rng);
    run_design(
        ch,
        cfg,
        &DesignOptions {
            sensing: SensingDesign::Fixed(s),
            sense_security: true,
        },
    )
}

#[cfg(test)]
mod tests;
