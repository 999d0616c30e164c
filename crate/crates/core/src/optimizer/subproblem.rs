use num_complex::Complex64;

use super::scaled::ScaledInstance;
use super::{DesignOptions, OptimizerError, ScaState, SensingDesign};
use crate::conic::{AffineExpr, ConeProgram, HermitianSlice, VarId};
use crate::linalg::{col_form, row_form, trace_re, CMat, CVec};

/// Sensing covariance as seen by the subproblem: a variable, or a constant
/// when the design keeps it fixed.
#[derive(Debug, Clone)]
pub enum SensingTerm {
    Variable(HermitianSlice),
    Fixed(CMat),
}

impl SensingTerm {
    fn row_form(&self, r: &CVec) -> AffineExpr {
        match self {
            SensingTerm::Variable(s) => s.row_form(r),
            SensingTerm::Fixed(m) => AffineExpr::constant(row_form(r, m)),
        }
    }

    fn col_form(&self, c: &CVec) -> AffineExpr {
        match self {
            SensingTerm::Variable(s) => s.col_form(c),
            SensingTerm::Fixed(m) => AffineExpr::constant(col_form(c, m)),
        }
    }

    fn trace(&self) -> AffineExpr {
        match self {
            SensingTerm::Variable(s) => s.trace(),
            SensingTerm::Fixed(m) => AffineExpr::constant(trace_re(m)),
        }
    }
}

/// One convex subproblem plus handles to its variables.
#[derive(Debug, Clone)]
pub struct Subproblem {
    pub program: ConeProgram,
    pub q: Vec<HermitianSlice>,
    pub s: SensingTerm,
    /// `ln` of user `k`'s total received level.
    pub tau: Vec<VarId>,
    /// `ln` of user `k`'s interference level (linearized).
    pub eps: Vec<VarId>,
    /// `ln` of the target's total received level (linearized).
    pub u: VarId,
    /// `ln` of the target's level without user `k`'s stream.
    pub v: Vec<VarId>,
}

/// `Σ_{i ≠ skip} form(Q_i)`.
fn sum_except(forms: &[AffineExpr], skip: Option<usize>) -> AffineExpr {
    forms
        .iter()
        .enumerate()
        .filter(|&(i, _)| Some(i) != skip)
        .map(|(_, f)| f.clone())
        .sum()
}

pub(crate) fn build(
    state: &ScaState,
    inst: &ScaledInstance,
    gamma_se: f64,
    gamma_s: f64,
    opts: &DesignOptions,
) -> Result<Subproblem, OptimizerError> {
    let k_users = inst.k_users();
    let n = inst.n_t();
    if state.eps.len() != k_users || state.anchor_q.len() != k_users {
        return Err(OptimizerError::Dimension(format!(
            "state carries {} users, instance has {k_users}",
            state.eps.len()
        )));
    }
    if state.anchor_s.nrows() != n || state.anchor_q.iter().any(|q| q.nrows() != n) {
        return Err(OptimizerError::Dimension(format!(
            "anchor covariances are not {n}×{n}"
        )));
    }

    let mut p = ConeProgram::new();
    let mut q = Vec::with_capacity(k_users);
    for k in 0..k_users {
        q.push(p.embed_hermitian(&format!("Q{k}"), n)?);
    }
    let s = match &opts.sensing {
        SensingDesign::Optimized => SensingTerm::Variable(p.embed_hermitian("S", n)?),
        SensingDesign::Fixed(m) => {
            if m.nrows() != n {
                return Err(OptimizerError::Dimension(format!(
                    "fixed sensing covariance is not {n}×{n}"
                )));
            }
            SensingTerm::Fixed(m * Complex64::new(1.0 / inst.power, 0.0))
        }
    };
    let tau: Vec<VarId> = (0..k_users)
        .map(|k| p.scalar(&format!("tau{k}")))
        .collect::<Result<_, _>>()?;
    let eps: Vec<VarId> = (0..k_users)
        .map(|k| p.scalar(&format!("eps{k}")))
        .collect::<Result<_, _>>()?;
    let u = p.scalar("u")?;
    let v: Vec<VarId> = (0..k_users)
        .map(|k| p.scalar(&format!("v{k}")))
        .collect::<Result<_, _>>()?;

    let objective: AffineExpr = (0..k_users)
        .map(|k| {
            AffineExpr::var(tau[k]) - AffineExpr::var(eps[k]) - AffineExpr::var(u)
                + AffineExpr::var(v[k])
        })
        .sum();
    p.maximize(objective);

    // Forms of every Q_i along the target column, shared by several rows.
    let eve_q: Vec<AffineExpr> = q.iter().map(|qi| qi.col_form(&inst.eve)).collect();
    let eve_s = s.col_form(&inst.eve);
    let one = || AffineExpr::constant(1.0);
    let (aq, as_) = (&state.anchor_q, &state.anchor_s);

    for k in 0..k_users {
        let user_q: Vec<AffineExpr> = q.iter().map(|qi| qi.row_form(&inst.user[k])).collect();
        let user_s = s.row_form(&inst.user[k]);

        // Sensing security at user k: its own stream and the sensing beam are
        // the echo it could exploit; the other users' streams are clutter.
        if opts.sense_security {
            let r = &inst.sense[k];
            let sense_q: Vec<AffineExpr> = q.iter().map(|qi| qi.row_form(r)).collect();
            let echo = s.row_form(r) + sense_q[k].clone();
            let clutter = one() + sum_except(&sense_q, Some(k));
            // divided by γ_se to keep the row O(1)
            p.add_le(echo * (1.0 / gamma_se), clutter);
        }

        // e^{τ_k} ≤ 1 + r_k(S + ΣQ)r_k^H, shifted by the anchor level so the
        // cone sees O(1) numbers.
        let total = one() + user_s.clone() + sum_except(&user_q, None);
        let c_tau = inst.user_level(k, aq, as_, None).ln();
        p.exp_upper(
            AffineExpr::var(tau[k]) - AffineExpr::constant(c_tau),
            total * (-c_tau).exp(),
        );

        // e^{v_k} ≤ 1 + e^H(S + Σ_{i≠k}Q_i)e
        let eve_wo = one() + eve_s.clone() + sum_except(&eve_q, Some(k));
        let c_v = inst.eve_level(aq, as_, Some(k)).ln();
        p.exp_upper(
            AffineExpr::var(v[k]) - AffineExpr::constant(c_v),
            eve_wo * (-c_v).exp(),
        );

        // e^{ε_k} ≥ interference, linearized at ε_k^(n) and divided by e^{ε_k^(n)}
        let interference = one() + user_s + sum_except(&user_q, Some(k));
        let e0 = state.eps[k];
        p.add_ge(
            AffineExpr::var(eps[k]) + AffineExpr::constant(1.0 - e0),
            interference * (-e0).exp(),
        );
    }

    // e^u ≥ target's total level, linearized at u^(n)
    let eve_total = one() + eve_s + sum_except(&eve_q, None);
    p.add_ge(
        AffineExpr::var(u) + AffineExpr::constant(1.0 - state.u),
        eve_total * (-state.u).exp(),
    );

    // BS echo SCNR floor, divided by γ_s
    let bs_q: AffineExpr = q.iter().map(|qi| qi.col_form(&inst.bs)).sum();
    p.add_ge(s.col_form(&inst.bs) * (1.0 / gamma_s), one() + bs_q);

    // power budget (normalized to one)
    let power: AffineExpr = q.iter().map(|qi| qi.trace()).sum::<AffineExpr>() + s.trace();
    p.add_le(power, one());

    Ok(Subproblem {
        program: p,
        q,
        s,
        tau,
        eps,
        u,
        v,
    })
}

/// The constraint set alone (security, SCNR floor, power, PSD): whether any
/// design meets every requirement on this draw.
pub(crate) fn feasibility_program(
    inst: &ScaledInstance,
    gamma_se: f64,
    gamma_s: f64,
    opts: &DesignOptions,
) -> Result<ConeProgram, OptimizerError> {
    let n = inst.n_t();
    let mut p = ConeProgram::new();
    let q: Vec<HermitianSlice> = (0..inst.k_users())
        .map(|k| p.embed_hermitian(&format!("Q{k}"), n))
        .collect::<Result<_, _>>()?;
    let s = match &opts.sensing {
        SensingDesign::Optimized => SensingTerm::Variable(p.embed_hermitian("S", n)?),
        SensingDesign::Fixed(m) => SensingTerm::Fixed(m * Complex64::new(1.0 / inst.power, 0.0)),
    };
    let one = || AffineExpr::constant(1.0);
    if opts.sense_security {
        for (k, r) in inst.sense.iter().enumerate() {
            let sense_q: Vec<AffineExpr> = q.iter().map(|qi| qi.row_form(r)).collect();
            let echo = s.row_form(r) + sense_q[k].clone();
            p.add_le(
                echo * (1.0 / gamma_se),
                one() + sum_except(&sense_q, Some(k)),
            );
        }
    }
    let bs_q: AffineExpr = q.iter().map(|qi| qi.col_form(&inst.bs)).sum();
    p.add_ge(s.col_form(&inst.bs) * (1.0 / gamma_s), one() + bs_q);
    let power: AffineExpr = q.iter().map(|qi| qi.trace()).sum::<AffineExpr>() + s.trace();
    p.add_le(power, one());
    Ok(p)
}
