//! End-to-end use of the public API: config file, draw, design, metrics,
//! sweep output.

use isacsec::experiments::{self, Parameter, Scheme, SweepSpec};
use isacsec::scenario::{draw_channels, ScenarioFile};
use isacsec::{run_secure_design, MetricsReport, OptimizerError, SystemConfig};

#[test]
fn scenario_file_round_trips_to_the_same_config() {
    let file = ScenarioFile::default();
    let text = file.to_toml_string();
    let back = ScenarioFile::from_toml_str(&text)
        .unwrap()
        .into_config()
        .unwrap();
    assert_eq!(back, file.into_config().unwrap());
}

#[test]
fn partial_file_keeps_defaults_for_missing_keys() {
    let cfg = ScenarioFile::from_toml_str("seed = 9\n[array]\nn_t = 10\n")
        .unwrap()
        .into_config()
        .unwrap();
    let default = SystemConfig::default_profile();
    assert_eq!(cfg.n_t, 10);
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.p_max, default.p_max);
    assert_eq!(cfg.d_bu, default.d_bu);
}

#[test]
fn more_users_cycle_the_default_distances() {
    let cfg = ScenarioFile::from_toml_str("[geometry]\nk_users = 5\n")
        .unwrap()
        .into_config()
        .unwrap();
    assert_eq!(cfg.d_bu, vec![30.0; 5]);
    assert_eq!(cfg.d_ut, vec![25.0, 25.0, 30.0, 25.0, 25.0]);
}

#[test]
fn design_on_a_single_user_draw_meets_its_requirements() {
    let mut cfg = SystemConfig::default_profile();
    cfg.set_users(1);
    let ch = draw_channels(&cfg, &mut cfg.rng()).unwrap();
    let sol = run_secure_design(&ch, &cfg).unwrap();
    let r = MetricsReport::evaluate(&sol, &ch, &cfg);
    assert!(sol.secrecy_rate > 0.0);
    assert!(r.scnr_bs >= cfg.gamma_s * (1.0 - 1e-5));
    assert!(r.scnr_sense_eve[0] <= cfg.gamma_se * (1.0 + 1e-5));
    assert!((r.total_power / cfg.p_max - 1.0).abs() <= 1e-3);
    // one user: the secrecy rate is the user rate minus the target's rate
    let expected = (r.rate_user[0] - r.rate_eve[0]).max(0.0);
    assert!((sol.secrecy_rate - expected).abs() <= 1e-9 * expected.max(1.0));
}

#[test]
fn infeasible_draws_are_reported_as_such() {
    let mut cfg = SystemConfig::default_profile();
    Parameter::GammaSDb.apply(&mut cfg, 45.0).unwrap();
    let ch = draw_channels(&cfg, &mut cfg.rng()).unwrap();
    assert!(matches!(
        run_secure_design(&ch, &cfg),
        Err(OptimizerError::ScenarioInfeasible)
    ));
}

#[test]
fn sweep_output_is_byte_reproducible() {
    let mut base = SystemConfig::default_profile();
    base.set_users(2);
    let spec = SweepSpec {
        parameter: Parameter::PowerDbm,
        values: vec![16.0, 20.0],
        trials: 2,
        base,
    };
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let rows = experiments::run_sweep("power", &spec, Scheme::Proposed).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.feasibility)));
        let path = dir.path().join(name);
        experiments::write_csv(&path, &rows).unwrap();
        files.push(std::fs::read(path).unwrap());
    }
    assert_eq!(files[0], files[1]);
}
