//! Performance and security metrics of a transmit design.
//!
//! Every function evaluates the closed-form ratio for a given set of
//! covariances `{Q_k}`, `S` on a [`ChannelRealization`]; none of them
//! touch the optimizer.

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{col_form, row_form, trace_re, CMat, CVec};
use crate::scenario::{steering_vector, ChannelRealization, SystemConfig};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("degenerate {0} pattern: covariance has no energy on the grid")]
    DegeneratePattern(&'static str),
    #[error("empty angle grid")]
    EmptyGrid,
}

/// One SCA iteration as recorded by the optimizer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    /// Surrogate objective `Σ_k (τ_k − ε_k − u + v_k)` in nats.
    pub f: f64,
    pub delta_f: f64,
    /// True secrecy rate of the iterate, bits/s/Hz.
    pub secrecy_rate: f64,
    /// Largest violation over the sensing-security rows, relative to `γ_se`.
    pub sense_eve_residual: f64,
    /// Violation of the BS SCNR floor, relative to `γ_s` (≤ 0 when met).
    pub scnr_bs_residual: f64,
    /// `Tr(ΣQ_k + S)/P − 1`.
    pub power_residual: f64,
    pub min_rank_ratio: f64,
}

/// Transmit design: communication covariances, sensing covariance and the
/// bookkeeping produced by the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSolution {
    pub q: Vec<CMat>,
    pub s: CMat,
    /// Rank-one beamformers; empty until extracted.
    pub w: Vec<CVec>,
    /// `λ_max / Tr` of each `Q_k`; empty until extracted.
    pub rank_ratios: Vec<f64>,
    pub secrecy_rate: f64,
    /// Converged surrogate objective in nats.
    pub surrogate_objective: f64,
    pub iterations_used: usize,
    /// Whether the stopping rule fired before the iteration cap.
    pub converged: bool,
    pub trace_log: Vec<TraceRecord>,
}

impl BeamformingSolution {
    pub fn from_covariances(q: Vec<CMat>, s: CMat) -> Self {
        Self {
            q,
            s,
            w: Vec::new(),
            rank_ratios: Vec::new(),
            secrecy_rate: 0.0,
            surrogate_objective: 0.0,
            iterations_used: 0,
            converged: false,
            trace_log: Vec::new(),
        }
    }

    pub fn zeros(n_t: usize, k_users: usize) -> Self {
        Self::from_covariances(vec![CMat::zeros(n_t, n_t); k_users], CMat::zeros(n_t, n_t))
    }

    pub fn k_users(&self) -> usize {
        self.q.len()
    }

    /// `Σ_k Q_k`.
    pub fn comm_sum(&self) -> CMat {
        let n = self.s.nrows();
        self.q.iter().fold(CMat::zeros(n, n), |acc, q| acc + q)
    }
}

fn others_row(row: &CVec, sol: &BeamformingSolution, k: usize) -> f64 {
    sol.q
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != k)
        .map(|(_, q)| row_form(row, q))
        .sum()
}

fn others_col(col: &CVec, sol: &BeamformingSolution, k: usize) -> f64 {
    sol.q
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != k)
        .map(|(_, q)| col_form(col, q))
        .sum()
}

/// SINR at CU `k`.
pub fn sinr_user(
    k: usize,
    sol: &BeamformingSolution,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> f64 {
    let h = &ch.h_eff[k];
    let signal = row_form(h, &sol.q[k]);
    let interference = others_row(h, sol, k) + row_form(h, &sol.s);
    signal / (cfg.sigma2_user + interference)
}

pub fn rate_user(
    k: usize,
    sol: &BeamformingSolution,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> f64 {
    (1.0 + sinr_user(k, sol, ch, cfg)).log2()
}

/// Echo SCNR at the BS, `Tr(H S H^H) / (σ_b² + Σ_k Tr(H Q_k H^H))`.
pub fn scnr_bs(sol: &BeamformingSolution, ch: &ChannelRealization, cfg: &SystemConfig) -> f64 {
    let h = &ch.h_ce_outer;
    let hh = h.adjoint();
    let sensing = trace_re(&(h * &sol.s * &hh));
    let clutter: f64 = sol.q.iter().map(|q| trace_re(&(h * q * &hh))).sum();
    sensing / (cfg.sigma2_bs + clutter)
}

/// SINR of the target eavesdropping CU `k`'s stream.
pub fn sinr_eve(
    k: usize,
    sol: &BeamformingSolution,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> f64 {
    let h = &ch.h_ce;
    let signal = col_form(h, &sol.q[k]);
    let interference = col_form(h, &sol.s) + others_col(h, sol, k);
    signal / (cfg.sigma2_target + interference)
}

pub fn rate_eve(
    k: usize,
    sol: &BeamformingSolution,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> f64 {
    (1.0 + sinr_eve(k, sol, ch, cfg)).log2()
}

/// System secrecy rate `Σ_k [R_u,k − R_t,k]^+`, bits/s/Hz.
pub fn secrecy_rate(sol: &BeamformingSolution, ch: &ChannelRealization, cfg: &SystemConfig) -> f64 {
    (0..sol.k_users())
        .map(|k| (rate_user(k, sol, ch, cfg) - rate_eve(k, sol, ch, cfg)).max(0.0))
        .sum()
}

/// Echo SCNR at CU `k` acting as a sensing eavesdropper.
pub fn scnr_sense_eve(
    k: usize,
    sol: &BeamformingSolution,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> f64 {
    let h = &ch.h_se[k];
    let signal = row_form(h, &sol.s) + row_form(h, &sol.q[k]);
    signal / (cfg.sigma2_user + others_row(h, sol, k))
}

/// `Tr(Σ_k Q_k + S)`, watts.
pub fn total_power(sol: &BeamformingSolution) -> f64 {
    sol.q.iter().map(trace_re).sum::<f64>() + trace_re(&sol.s)
}

/// Normalized communication and sensing beam patterns over a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeamPattern {
    pub thetas: Vec<f64>,
    pub comm: Vec<f64>,
    pub sensing: Vec<f64>,
}

impl BeamPattern {
    /// Angle (radians) of the global maximum of `values`.
    pub fn argmax(&self, values: &[f64]) -> f64 {
        let (i, _) = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty pattern");
        self.thetas[i]
    }

    /// Linear interpolation of `values` at `theta`.
    pub fn value_at(&self, values: &[f64], theta: f64) -> f64 {
        let t = &self.thetas;
        if theta <= t[0] {
            return values[0];
        }
        for i in 1..t.len() {
            if theta <= t[i] {
                let w = (theta - t[i - 1]) / (t[i] - t[i - 1]);
                return values[i - 1] * (1.0 - w) + values[i] * w;
            }
        }
        *values.last().unwrap()
    }

    /// Width (radians) of the contiguous region around the global maximum
    /// where `values ≥ level`, with linear interpolation at both edges.
    pub fn lobe_width(&self, values: &[f64], level: f64) -> f64 {
        let peak = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("nonempty pattern");
        let t = &self.thetas;
        let cross = |inside: usize, outside: usize| {
            let (vi, vo) = (values[inside], values[outside]);
            let w = (vi - level) / (vi - vo);
            t[inside] + (t[outside] - t[inside]) * w
        };
        let mut lo = peak;
        while lo > 0 && values[lo - 1] >= level {
            lo -= 1;
        }
        let left = if lo == 0 { t[0] } else { cross(lo, lo - 1) };
        let mut hi = peak;
        while hi + 1 < values.len() && values[hi + 1] >= level {
            hi += 1;
        }
        let right = if hi + 1 == values.len() {
            t[hi]
        } else {
            cross(hi, hi + 1)
        };
        right - left
    }
}

/// Default beam-pattern grid: −90°…90° in 0.25° steps, radians.
pub fn default_grid() -> Vec<f64> {
    (0..=720)
        .map(|i| (-90.0 + 0.25 * i as f64).to_radians())
        .collect()
}

/// `a^H(θ) (Σ Q_i) a(θ)` and `a^H(θ) S a(θ)` over `thetas`, each divided by
/// its own maximum on the grid.
pub fn beam_pattern(
    sol: &BeamformingSolution,
    ch: &ChannelRealization,
    _cfg: &SystemConfig,
    thetas: &[f64],
) -> Result<BeamPattern, MetricsError> {
    if thetas.is_empty() {
        return Err(MetricsError::EmptyGrid);
    }
    let n = ch.n_t();
    let comm_cov = sol.comm_sum();
    let mut comm = Vec::with_capacity(thetas.len());
    let mut sensing = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let a = steering_vector(theta, n);
        comm.push(col_form(&a, &comm_cov).max(0.0));
        sensing.push(col_form(&a, &sol.s).max(0.0));
    }
    normalize(&mut comm, "communication")?;
    normalize(&mut sensing, "sensing")?;
    Ok(BeamPattern {
        thetas: thetas.to_vec(),
        comm,
        sensing,
    })
}

fn normalize(values: &mut [f64], what: &'static str) -> Result<(), MetricsError> {
    let peak = values.iter().cloned().fold(0.0, f64::max);
    if !peak.is_finite() || peak <= 0.0 {
        return Err(MetricsError::DegeneratePattern(what));
    }
    values.iter_mut().for_each(|v| *v /= peak);
    Ok(())
}

/// Every metric of a design on one realization.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub sinr_user: Vec<f64>,
    pub rate_user: Vec<f64>,
    pub sinr_eve: Vec<f64>,
    pub rate_eve: Vec<f64>,
    pub scnr_sense_eve: Vec<f64>,
    pub scnr_bs: f64,
    pub secrecy_rate: f64,
    pub total_power: f64,
    /// `true` when every per-user difference `R_u,k − R_t,k` is ≥ 0.
    pub all_differences_nonnegative: bool,
}

impl MetricsReport {
    pub fn evaluate(
        sol: &BeamformingSolution,
        ch: &ChannelRealization,
        cfg: &SystemConfig,
    ) -> Self {
        let k = sol.k_users();
        let rate_user: Vec<f64> = (0..k).map(|i| rate_user(i, sol, ch, cfg)).collect();
        let rate_eve: Vec<f64> = (0..k).map(|i| rate_eve(i, sol, ch, cfg)).collect();
        Self {
            sinr_user: (0..k).map(|i| sinr_user(i, sol, ch, cfg)).collect(),
            sinr_eve: (0..k).map(|i| sinr_eve(i, sol, ch, cfg)).collect(),
            scnr_sense_eve: (0..k).map(|i| scnr_sense_eve(i, sol, ch, cfg)).collect(),
            scnr_bs: scnr_bs(sol, ch, cfg),
            secrecy_rate: secrecy_rate(sol, ch, cfg),
            total_power: total_power(sol),
            all_differences_nonnegative: rate_user.iter().zip(&rate_eve).all(|(u, e)| u >= e),
            rate_user,
            rate_eve,
        }
    }
}
