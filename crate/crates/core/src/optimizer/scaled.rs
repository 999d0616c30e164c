use num_complex::Complex64;

use crate::linalg::{col_form, row_form, CMat, CVec};
use crate::scenario::{ChannelRealization, SystemConfig};

/// The instance rescaled so every noise power is one and the budget is one.
///
/// With `Q = P·Q̃`, each SINR/SCNR term `m · h Q h^H` becomes `r Q̃ r^H` for a
/// pre-multiplied row `r = h·sqrt(P·m)`. The ratios are unchanged, and the
/// solver sees coefficients that no longer span twenty decades.
#[derive(Debug, Clone)]
pub(crate) struct ScaledInstance {
    /// Effective user rows, scaled by `sqrt(P/σ_k²)`.
    pub user: Vec<CVec>,
    /// Cascaded sensing rows at each user, scaled by `sqrt(P/σ_k²)`.
    pub sense: Vec<CVec>,
    /// Target column, scaled by `sqrt(P/σ_t²)`.
    pub eve: CVec,
    /// Round-trip column for the BS echo, scaled by `sqrt(P‖h_ce‖²/σ_b²)`.
    pub bs: CVec,
    pub power: f64,
}

fn scaled(v: &CVec, s: f64) -> CVec {
    v * Complex64::new(s, 0.0)
}

impl ScaledInstance {
    pub fn new(ch: &ChannelRealization, cfg: &SystemConfig) -> Self {
        let p = cfg.p_max;
        let su = (p / cfg.sigma2_user).sqrt();
        Self {
            user: ch.h_eff.iter().map(|h| scaled(h, su)).collect(),
            sense: ch.h_se.iter().map(|h| scaled(h, su)).collect(),
            eve: scaled(&ch.h_ce, (p / cfg.sigma2_target).sqrt()),
            bs: scaled(
                &ch.h_ce,
                (p * ch.h_ce.norm_squared() / cfg.sigma2_bs).sqrt(),
            ),
            power: p,
        }
    }

    pub fn k_users(&self) -> usize {
        self.user.len()
    }

    pub fn n_t(&self) -> usize {
        self.eve.len()
    }

    /// `1 + r_k (S + Σ_{i ∈ set} Q_i) r_k^H` for user row `k`.
    pub fn user_level(&self, k: usize, q: &[CMat], s: &CMat, skip: Option<usize>) -> f64 {
        let r = &self.user[k];
        1.0 + row_form(r, s)
            + q.iter()
                .enumerate()
                .filter(|&(i, _)| Some(i) != skip)
                .map(|(_, qi)| row_form(r, qi))
                .sum::<f64>()
    }

    /// `1 + e^H (S + Σ_{i ∈ set} Q_i) e` at the target.
    pub fn eve_level(&self, q: &[CMat], s: &CMat, skip: Option<usize>) -> f64 {
        let e = &self.eve;
        1.0 + col_form(e, s)
            + q.iter()
                .enumerate()
                .filter(|&(i, _)| Some(i) != skip)
                .map(|(_, qi)| col_form(e, qi))
                .sum::<f64>()
    }

    /// Unclamped secrecy sum in nats at a normalized design.
    pub fn secrecy_nats(&self, q: &[CMat], s: &CMat) -> f64 {
        let eve_all = self.eve_level(q, s, None).ln();
        (0..self.k_users())
            .map(|k| {
                self.user_level(k, q, s, None).ln()
                    - self.user_level(k, q, s, Some(k)).ln()
                    - eve_all
                    + self.eve_level(q, s, Some(k)).ln()
            })
            .sum()
    }
}
