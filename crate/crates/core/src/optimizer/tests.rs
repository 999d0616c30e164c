use super::*;
use crate::linalg::{c, frobenius, outer_col, CVec};
use crate::metrics::MetricsReport;
use crate::scenario::{draw_channels, ChannelRealization};
use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn default_profile() -> (SystemConfig, ChannelRealization) {
    let cfg = SystemConfig::default_profile();
    let ch = draw_channels(&cfg, &mut cfg.rng()).unwrap();
    (cfg, ch)
}

proptest! {
    #[test]
    fn tangent_underestimates_exp(x in -30.0f64..30.0, x0 in -30.0f64..30.0) {
        let gap = x.exp() - exp_tangent(x, x0);
        prop_assert!(gap >= -1e-12 * x.exp().max(x0.exp()));
    }

    #[test]
    fn tangent_touches_at_expansion_point(x0 in -30.0f64..30.0) {
        prop_assert!((x0.exp() - exp_tangent(x0, x0)).abs() <= 1e-12 * x0.exp());
    }
}

#[test]
fn init_with_no_power_is_all_zero() {
    let (mut cfg, ch) = default_profile();
    cfg.p_max = 1e-300;
    let st = init_sca(&ch, &cfg);
    assert!(st.eps.iter().all(|&e| e.abs() < 1e-200));
    assert!(st.u.abs() < 1e-200);
}

#[test]
fn init_orthogonal_user_sees_nothing() {
    let mut cfg = SystemConfig::default_profile();
    cfg.set_users(1);
    cfg.n_t = 2;
    cfg.init_rho = 1.0;
    // h_ce along [1, 1]; a user row along [1, −1] is orthogonal to it
    let h_ce = CVec::from_vec(vec![c(1e-3, 0.0), c(1e-3, 0.0)]);
    let mut ch = ChannelRealization::from_parts(
        vec![CVec::from_vec(vec![c(1e-4, 0.0), c(-1e-4, 0.0)])],
        h_ce,
        vec![c(0.0, 0.0)],
    );
    ch.h_se[0] = CVec::zeros(2);
    let st = init_sca(&ch, &cfg);
    assert!(st.eps[0].abs() < 1e-15, "eps = {}", st.eps[0]);
}

#[test]
fn init_is_deterministic_and_finite() {
    let (cfg, ch) = default_profile();
    let a = init_sca(&ch, &cfg);
    let b = init_sca(&draw_channels(&cfg, &mut cfg.rng()).unwrap(), &cfg);
    assert_eq!(a, b);
    assert!(a.eps.iter().all(|e| e.is_finite()) && a.u.is_finite() && a.f.is_finite());
}

#[test]
fn subproblem_structure() {
    for k in [1, 3] {
        let mut cfg = SystemConfig::default_profile();
        cfg.set_users(k);
        let ch = draw_channels(&cfg, &mut cfg.rng()).unwrap();
        let sub = build_subproblem(&init_sca(&ch, &cfg), &ch, &cfg).unwrap();
        let p = &sub.program;
        assert_eq!(p.hermitian_blocks().len(), k + 1);
        assert_eq!(p.scalar_names().count(), 3 * k + 1);
        assert_eq!(p.num_exp_cones(), 2 * k);
        assert_eq!(p.num_psd_cones(), k + 1);
        // security rows, Taylor rows, u row, SCNR floor, power
        assert_eq!(p.num_nonneg_rows(), k + k + 1 + 1 + 1);
        // objective reads only the log variables, u with weight −K
        let obj = p.objective();
        assert_eq!(obj.coeff(sub.u), -(k as f64));
        for i in 0..k {
            assert_eq!(obj.coeff(sub.tau[i]), 1.0);
            assert_eq!(obj.coeff(sub.eps[i]), -1.0);
            assert_eq!(obj.coeff(sub.v[i]), 1.0);
        }
        assert_eq!(obj.terms().len(), 3 * k + 1);
    }
}

#[test]
fn subproblem_rejects_mismatched_state() {
    let (cfg, ch) = default_profile();
    let mut st = init_sca(&ch, &cfg);
    st.eps.pop();
    assert!(matches!(
        build_subproblem(&st, &ch, &cfg),
        Err(OptimizerError::Dimension(_))
    ));
}

#[test]
fn fixed_sensing_drops_the_sensing_block() {
    let (cfg, ch) = default_profile();
    let s = random_sensing_covariance(cfg.n_t, 0.3 * cfg.p_max, &mut ChaCha8Rng::seed_from_u64(5));
    let opts = DesignOptions {
        sensing: SensingDesign::Fixed(s),
        sense_security: true,
    };
    let sub = build_subproblem_with(&init_sca(&ch, &cfg), &ch, &cfg, &opts).unwrap();
    assert_eq!(sub.program.hermitian_blocks().len(), cfg.k_users);
}

#[test]
fn rank_one_covariance_recovers_its_beam() {
    let cfg = SystemConfig::default_profile();
    let v = CVec::from_vec(vec![c(0.3, 0.1), c(-0.2, 0.5), c(0.0, 0.0), c(1.0, -1.0)]);
    let sol = BeamformingSolution::from_covariances(vec![outer_col(&v)], CMat::zeros(4, 4));
    let out = extract_beamformers(sol, &cfg).unwrap();
    assert_relative_eq!(out.rank_ratios[0], 1.0, epsilon = 1e-12);
    // equal up to a global phase
    let w = &out.w[0];
    let phase = w.dotc(&v) / Complex64::new(w.norm_squared(), 0.0);
    assert_relative_eq!(phase.norm(), 1.0, epsilon = 1e-12);
    assert!((w * phase - &v).norm() < 1e-12);
}

#[test]
fn identity_covariance_is_a_rank_violation() {
    let cfg = SystemConfig::default_profile();
    let sol = BeamformingSolution::from_covariances(vec![CMat::identity(8, 8)], CMat::zeros(8, 8));
    match extract_beamformers(sol, &cfg) {
        Err(OptimizerError::RankViolation { user: 0, ratio }) => {
            assert_relative_eq!(ratio, 0.125, epsilon = 1e-12)
        }
        other => panic!("expected a rank violation, got {other:?}"),
    }
}

#[test]
fn random_sensing_covariance_has_requested_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let s = random_sensing_covariance(8, 2.5, &mut rng);
    assert_relative_eq!(trace_re(&s), 2.5, max_relative = 1e-12);
    assert!(crate::linalg::min_eigenvalue(&s) >= -1e-12);
    assert_eq!(
        random_sensing_covariance(8, 0.0, &mut rng),
        CMat::zeros(8, 8)
    );
}

#[test]
fn baseline_is_deterministic() {
    let (cfg, ch) = default_profile();
    let a = random_sensing_covariance(cfg.n_t, 0.3, &mut ChaCha8Rng::seed_from_u64(2));
    let b = random_sensing_covariance(cfg.n_t, 0.3, &mut ChaCha8Rng::seed_from_u64(2));
    assert_eq!(frobenius(&(a - b)), 0.0);
    let mut cfg = cfg;
    cfg.gamma_s = crate::scenario::db_to_linear(20.0);
    let x = baseline_s_random(&ch, &cfg, &mut ChaCha8Rng::seed_from_u64(4));
    let y = baseline_s_random(&ch, &cfg, &mut ChaCha8Rng::seed_from_u64(4));
    match (x, y) {
        (Ok(x), Ok(y)) => assert_eq!(x, y),
        (Err(e1), Err(e2)) => assert_eq!(e1.to_string(), e2.to_string()),
        _ => panic!("same seed, different outcome"),
    }
}

#[test]
fn default_profile_run_converges_and_meets_constraints() {
    let (cfg, ch) = default_profile();
    let sol = run_secure_design(&ch, &cfg).unwrap();
    assert!(sol.converged, "trace: {:?}", sol.trace_log);
    assert!(sol.iterations_used <= 10);
    for pair in sol.trace_log.windows(2) {
        assert!(pair[1].f >= pair[0].f - 1e-6, "{:?}", sol.trace_log);
    }
    let report = MetricsReport::evaluate(&sol, &ch, &cfg);
    for &x in &report.scnr_sense_eve {
        assert!(x <= cfg.gamma_se * (1.0 + 1e-5));
    }
    assert!(report.scnr_bs >= cfg.gamma_s * (1.0 - 1e-5));
    assert!(report.total_power <= cfg.p_max * (1.0 + 1e-6));
    assert!(report.total_power >= cfg.p_max * (1.0 - 1e-3));
    assert!(sol.rank_ratios.iter().all(|&r| r >= 0.999));
    assert!(sol.secrecy_rate > 0.0);
    if report.all_differences_nonnegative {
        assert!(
            (sol.surrogate_objective / std::f64::consts::LN_2 - sol.secrecy_rate).abs() <= 1e-2
        );
    }
}

#[test]
fn unreachable_scnr_floor_is_infeasible() {
    let (mut cfg, ch) = default_profile();
    cfg.gamma_s = crate::scenario::db_to_linear(60.0);
    assert!(matches!(
        run_secure_design(&ch, &cfg),
        Err(OptimizerError::ScenarioInfeasible)
    ));
    assert!(!is_feasible(&ch, &cfg, &DesignOptions::default()).unwrap());
}
