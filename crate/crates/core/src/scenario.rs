//! Scenario configuration and channel generation.
//!
//! [`SystemConfig`] carries every quantity in linear SI units (watts,
//! meters, radians, power ratios). [`ScenarioFile`] is the human-facing
//! TOML schema in dBm / dB / degrees; conversion happens once, in
//! [`ScenarioFile::into_config`].

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{outer_col, CMat, CVec};

/// Reference distance of the path-loss model, meters.
pub const D0_M: f64 = 1.0;
/// Antenna spacing in wavelengths.
pub const SPACING_WAVELENGTHS: f64 = 0.5;

/// BS–CU distances of the default three-user layout; cycled when `K > 3`.
pub const DEFAULT_D_BU: [f64; 3] = [30.0, 30.0, 30.0];
/// Target–CU distances of the default three-user layout; cycled when `K > 3`.
pub const DEFAULT_D_UT: [f64; 3] = [25.0, 25.0, 30.0];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid `{field}`: {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
}

impl ConfigError {
    fn field(field: &'static str, reason: impl Into<String>) -> Self {
        ConfigError::InvalidField {
            field,
            reason: reason.into(),
        }
    }

    /// Name of the offending field, when the error is about one.
    pub fn field_name(&self) -> Option<&'static str> {
        match self {
            ConfigError::InvalidField { field, .. } => Some(field),
            _ => None,
        }
    }
}

#[inline]
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[inline]
pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Beam directions of the SCA starting point. Both give the sensing beam a
/// share `init_rho` of the budget and split the rest evenly over the users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    /// Sensing beam along the target steering vector, user beams along their
    /// own channels.
    Matched,
    /// As `Matched`, with the sensing beam projected off every user channel
    /// and each user beam projected off the other users and the target.
    /// Falls back to the matched direction when the projection vanishes.
    ZeroForcing,
}

/// Experiment configuration in linear units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_t: usize,
    pub k_users: usize,
    /// Transmit power budget in watts, link-budget offset included.
    pub p_max: f64,
    /// Transmit-side gain (dB) folded into `p_max` at ingestion.
    pub link_budget_offset_db: f64,
    pub gamma_se: f64,
    pub gamma_s: f64,
    pub sigma2_user: f64,
    pub sigma2_target: f64,
    pub sigma2_bs: f64,
    pub theta_t: f64,
    pub rcs: f64,
    pub d_bu: Vec<f64>,
    pub d_ut: Vec<f64>,
    pub d_bt: f64,
    pub ple_bu: f64,
    pub ple_bt: f64,
    pub ple_ut: f64,
    pub c0: f64,
    pub delta: f64,
    pub max_iters: usize,
    pub rank_tol: f64,
    /// Share of the budget given to the sensing covariance in the SCA start point.
    pub init_rho: f64,
    pub init_strategy: InitStrategy,
    /// Share of the budget spent on the random sensing covariance of the baseline.
    pub baseline_mu: f64,
    /// Feasibility / gap tolerance handed to the conic backend.
    pub solver_tol: f64,
    pub seed: u64,
}

impl SystemConfig {
    /// The default simulation profile: three users, eight antennas,
    /// `P = 18 dBm`, `γ_s = 32 dB`, `γ_se = 5 dB`.
    pub fn default_profile() -> Self {
        ScenarioFile::default()
            .into_config()
            .expect("default scenario is valid")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(field: &'static str, v: f64) -> Result<(), ConfigError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::field(
                    field,
                    format!("must be finite and > 0, got {v}"),
                ))
            }
        }
        if self.n_t == 0 {
            return Err(ConfigError::field("n_t", "must be at least 1"));
        }
        if self.k_users == 0 {
            return Err(ConfigError::field("k_users", "must be at least 1"));
        }
        positive("p_max", self.p_max)?;
        positive("gamma_se", self.gamma_se)?;
        positive("gamma_s", self.gamma_s)?;
        positive("sigma2_user", self.sigma2_user)?;
        positive("sigma2_target", self.sigma2_target)?;
        positive("sigma2_bs", self.sigma2_bs)?;
        positive("rcs", self.rcs)?;
        positive("d_bt", self.d_bt)?;
        positive("c0", self.c0)?;
        positive("ple_bu", self.ple_bu)?;
        positive("ple_bt", self.ple_bt)?;
        positive("ple_ut", self.ple_ut)?;
        if !self.theta_t.is_finite() {
            return Err(ConfigError::field("theta_t", "must be finite"));
        }
        if self.d_bu.len() != self.k_users {
            return Err(ConfigError::field(
                "d_bu",
                format!(
                    "expected {} distances, got {}",
                    self.k_users,
                    self.d_bu.len()
                ),
            ));
        }
        if self.d_ut.len() != self.k_users {
            return Err(ConfigError::field(
                "d_ut",
                format!(
                    "expected {} distances, got {}",
                    self.k_users,
                    self.d_ut.len()
                ),
            ));
        }
        for &d in &self.d_bu {
            positive("d_bu", d)?;
        }
        for &d in &self.d_ut {
            positive("d_ut", d)?;
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ConfigError::field("delta", "must lie in (0, 1)"));
        }
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return Err(ConfigError::field("rank_tol", "must lie in (0, 1)"));
        }
        if self.max_iters == 0 {
            return Err(ConfigError::field("max_iters", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.init_rho) {
            return Err(ConfigError::field("init_rho", "must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.baseline_mu) {
            return Err(ConfigError::field("baseline_mu", "must lie in [0, 1)"));
        }
        if !(self.solver_tol > 0.0 && self.solver_tol < 1e-2) {
            return Err(ConfigError::field("solver_tol", "must lie in (0, 1e-2)"));
        }
        Ok(())
    }

    /// Sets the power budget from a dBm figure, applying the link-budget offset.
    pub fn set_power_dbm(&mut self, p_dbm: f64) {
        self.p_max = dbm_to_watts(p_dbm + self.link_budget_offset_db);
    }

    /// Power budget in dBm as it appears in the config file.
    pub fn power_dbm(&self) -> f64 {
        watts_to_dbm(self.p_max) - self.link_budget_offset_db
    }

    /// Resizes the user population, cycling the default distance pattern.
    pub fn set_users(&mut self, k: usize) {
        self.k_users = k;
        self.d_bu = (0..k).map(|i| DEFAULT_D_BU[i % 3]).collect();
        self.d_ut = (0..k).map(|i| DEFAULT_D_UT[i % 3]).collect();
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// Independent generator for Monte Carlo trial `trial`.
    pub fn trial_rng(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        rng
    }
}

/// TOML schema in display units. Missing keys fall back to the default profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub seed: Option<u64>,
    pub array: ArraySection,
    pub power: PowerSection,
    pub thresholds: ThresholdSection,
    pub geometry: GeometrySection,
    pub propagation: PropagationSection,
    pub algorithm: AlgorithmSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraySection {
    pub n_t: usize,
    pub theta_t_deg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerSection {
    pub p_max_dbm: f64,
    pub link_budget_offset_db: f64,
    pub sigma2_user_dbm: f64,
    pub sigma2_target_dbm: f64,
    pub sigma2_bs_dbm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSection {
    pub gamma_s_db: f64,
    pub gamma_se_db: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub k_users: usize,
    /// Defaults to the cycled 30/30/30 m pattern when omitted.
    pub d_bu_m: Option<Vec<f64>>,
    /// Defaults to the cycled 25/25/30 m pattern when omitted.
    pub d_ut_m: Option<Vec<f64>>,
    pub d_bt_m: f64,
    pub rcs_m2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationSection {
    pub c0_db: f64,
    pub ple_bu: f64,
    pub ple_bt: f64,
    pub ple_ut: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgorithmSection {
    pub delta: f64,
    pub max_iters: usize,
    pub rank_tol: f64,
    pub init_rho: f64,
    pub init_strategy: InitStrategy,
    pub baseline_mu: f64,
    pub solver_tol: f64,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        Self {
            seed: Some(1),
            array: ArraySection::default(),
            power: PowerSection::default(),
            thresholds: ThresholdSection::default(),
            geometry: GeometrySection::default(),
            propagation: PropagationSection::default(),
            algorithm: AlgorithmSection::default(),
        }
    }
}

impl Default for ArraySection {
    fn default() -> Self {
        Self {
            n_t: 8,
            theta_t_deg: 0.0,
        }
    }
}

impl Default for PowerSection {
    fn default() -> Self {
        Self {
            p_max_dbm: 18.0,
            link_budget_offset_db: 30.0,
            sigma2_user_dbm: -80.0,
            sigma2_target_dbm: -80.0,
            sigma2_bs_dbm: -100.0,
        }
    }
}

impl Default for ThresholdSection {
    fn default() -> Self {
        Self {
            gamma_s_db: 32.0,
            gamma_se_db: 5.0,
        }
    }
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            k_users: 3,
            d_bu_m: None,
            d_ut_m: None,
            d_bt_m: 50.0,
            rcs_m2: 1.0,
        }
    }
}

impl Default for PropagationSection {
    fn default() -> Self {
        Self {
            c0_db: -30.0,
            ple_bu: 3.3,
            ple_bt: 2.0,
            ple_ut: 2.3,
        }
    }
}

impl Default for AlgorithmSection {
    fn default() -> Self {
        Self {
            delta: 1e-3,
            max_iters: 30,
            rank_tol: 1e-3,
            init_rho: 0.5,
            init_strategy: InitStrategy::ZeroForcing,
            baseline_mu: 0.3,
            solver_tol: 1e-8,
        }
    }
}

impl ScenarioFile {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    /// Converts display units to linear units and validates the result.
    pub fn into_config(self) -> Result<SystemConfig, ConfigError> {
        let k = self.geometry.k_users;
        let cycled = |pattern: &[f64; 3]| (0..k).map(|i| pattern[i % 3]).collect::<Vec<_>>();
        let seed = self
            .seed
            .ok_or_else(|| ConfigError::field("seed", "a seed is required (config or --seed)"))?;
        let offset = self.power.link_budget_offset_db;
        if !offset.is_finite() {
            return Err(ConfigError::field(
                "link_budget_offset_db",
                "must be finite",
            ));
        }
        let cfg = SystemConfig {
            n_t: self.array.n_t,
            k_users: k,
            p_max: dbm_to_watts(self.power.p_max_dbm + offset),
            link_budget_offset_db: offset,
            gamma_se: db_to_linear(self.thresholds.gamma_se_db),
            gamma_s: db_to_linear(self.thresholds.gamma_s_db),
            sigma2_user: dbm_to_watts(self.power.sigma2_user_dbm),
            sigma2_target: dbm_to_watts(self.power.sigma2_target_dbm),
            sigma2_bs: dbm_to_watts(self.power.sigma2_bs_dbm),
            theta_t: self.array.theta_t_deg.to_radians(),
            rcs: self.geometry.rcs_m2,
            d_bu: self
                .geometry
                .d_bu_m
                .unwrap_or_else(|| cycled(&DEFAULT_D_BU)),
            d_ut: self
                .geometry
                .d_ut_m
                .unwrap_or_else(|| cycled(&DEFAULT_D_UT)),
            d_bt: self.geometry.d_bt_m,
            ple_bu: self.propagation.ple_bu,
            ple_bt: self.propagation.ple_bt,
            ple_ut: self.propagation.ple_ut,
            c0: db_to_linear(self.propagation.c0_db),
            delta: self.algorithm.delta,
            max_iters: self.algorithm.max_iters,
            rank_tol: self.algorithm.rank_tol,
            init_rho: self.algorithm.init_rho,
            init_strategy: self.algorithm.init_strategy,
            baseline_mu: self.algorithm.baseline_mu,
            solver_tol: self.algorithm.solver_tol,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One draw of every channel in the scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// BS→CU direct channels (columns).
    pub g: Vec<CVec>,
    /// BS→target channel (column).
    pub h_ce: CVec,
    /// Target→CU scalar channels.
    pub h_e: Vec<Complex64>,
    /// Cascaded BS→target→CU rows, `h_e,k · h_ce^H`.
    pub h_se: Vec<CVec>,
    /// Effective CU rows, `g_k^H + h_se,k`.
    pub h_eff: Vec<CVec>,
    /// Round-trip channel `h_ce h_ce^H`.
    pub h_ce_outer: CMat,
}

impl ChannelRealization {
    /// Assembles a realization from its primitive channels, filling the
    /// derived fields.
    pub fn from_parts(g: Vec<CVec>, h_ce: CVec, h_e: Vec<Complex64>) -> Self {
        assert_eq!(
            g.len(),
            h_e.len(),
            "one direct channel per target→CU channel"
        );
        let h_ce_h = h_ce.map(|z| z.conj());
        let h_se: Vec<CVec> = h_e.iter().map(|&he| &h_ce_h * he).collect();
        let h_eff = g
            .iter()
            .zip(&h_se)
            .map(|(gk, hse)| gk.map(|z| z.conj()) + hse)
            .collect();
        let h_ce_outer = outer_col(&h_ce);
        Self {
            g,
            h_ce,
            h_e,
            h_se,
            h_eff,
            h_ce_outer,
        }
    }

    pub fn n_t(&self) -> usize {
        self.h_ce.len()
    }

    pub fn k_users(&self) -> usize {
        self.g.len()
    }
}

/// Far-field ULA response toward `theta` with half-wavelength spacing.
pub fn steering_vector(theta: f64, n_t: usize) -> CVec {
    let phase = 2.0 * PI * SPACING_WAVELENGTHS * theta.sin();
    CVec::from_iterator(
        n_t,
        (0..n_t).map(|m| Complex64::from_polar(1.0, phase * m as f64)),
    )
}

/// `C0 · (d0 / d)^l` with `d0 = 1 m`.
pub fn path_loss_with(c0: f64, d_s: f64, exponent: f64) -> Result<f64, ConfigError> {
    if !(d_s > 0.0 && d_s.is_finite()) {
        return Err(ConfigError::field(
            "distance",
            format!("must be > 0, got {d_s}"),
        ));
    }
    Ok(c0 * (D0_M / d_s).powf(exponent))
}

/// Path loss with the default `C0 = −30 dB` reference.
pub fn path_loss(d_s: f64, exponent: f64) -> Result<f64, ConfigError> {
    path_loss_with(1e-3, d_s, exponent)
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Draws one channel realization: Rayleigh direct links, a line-of-sight
/// target channel and unit-modulus-phase target→CU channels.
pub fn draw_channels<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<ChannelRealization, ConfigError> {
    cfg.validate()?;
    let n = cfg.n_t;
    let mut g = Vec::with_capacity(cfg.k_users);
    for k in 0..cfg.k_users {
        let var = path_loss_with(cfg.c0, cfg.d_bu[k], cfg.ple_bu)?;
        g.push(CVec::from_iterator(
            n,
            (0..n).map(|_| complex_gaussian(rng, var)),
        ));
    }
    let beta_ce = (cfg.rcs * path_loss_with(cfg.c0, cfg.d_bt, cfg.ple_bt)?).sqrt();
    let h_ce = steering_vector(cfg.theta_t, n) * Complex64::new(beta_ce, 0.0);
    let mut h_e = Vec::with_capacity(cfg.k_users);
    for k in 0..cfg.k_users {
        let beta = path_loss_with(cfg.c0, cfg.d_ut[k], cfg.ple_ut)?.sqrt();
        let phi = rng.random_range(0.0..2.0 * PI);
        h_e.push(Complex64::from_polar(beta, phi));
    }
    Ok(ChannelRealization::from_parts(g, h_ce, h_e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, hermitian_eig};
    use approx::assert_relative_eq;

    #[test]
    fn steering_broadside_is_all_ones() {
        let a = steering_vector(0.0, 4);
        for z in a.iter() {
            assert_relative_eq!(z.re, 1.0);
            assert_relative_eq!(z.im, 0.0);
        }
    }

    #[test]
    fn steering_endfire_alternates() {
        let a = steering_vector(PI / 2.0, 2);
        assert_relative_eq!(a[0].re, 1.0);
        assert_relative_eq!(a[1].re, -1.0, epsilon = 1e-15);
        assert!(a[1].im.abs() < 1e-15);
    }

    #[test]
    fn steering_phase_at_ten_degrees() {
        let a = steering_vector(10f64.to_radians(), 8);
        // π·sin(10°)
        assert_relative_eq!(a[1].arg(), 0.545_531_8, epsilon = 1e-6);
        assert!(a.iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
        assert_eq!(a[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn path_loss_reference_points() {
        assert_relative_eq!(path_loss(1.0, 2.0).unwrap(), 1e-3);
        assert_relative_eq!(path_loss(50.0, 2.0).unwrap(), 4e-7, max_relative = 1e-12);
        assert_relative_eq!(
            path_loss(30.0, 3.3).unwrap(),
            1.335_06e-8,
            max_relative = 1e-4
        );
        assert!(path_loss(0.0, 2.0).is_err());
        assert!(path_loss(-3.0, 2.0).is_err());
    }

    #[test]
    fn unit_conversions() {
        assert_relative_eq!(dbm_to_watts(30.0), 1.0);
        assert_relative_eq!(dbm_to_watts(-80.0), 1e-11, max_relative = 1e-12);
        assert_relative_eq!(db_to_linear(20.0), 100.0, max_relative = 1e-12);
        assert_relative_eq!(watts_to_dbm(dbm_to_watts(17.3)), 17.3, epsilon = 1e-12);
    }

    #[test]
    fn default_profile_values() {
        let cfg = SystemConfig::default_profile();
        assert_eq!(cfg.n_t, 8);
        assert_eq!(cfg.k_users, 3);
        assert_eq!(cfg.d_bu, vec![30.0, 30.0, 30.0]);
        assert_eq!(cfg.d_ut, vec![25.0, 25.0, 30.0]);
        assert_relative_eq!(cfg.sigma2_bs, 1e-13, max_relative = 1e-12);
        assert_relative_eq!(cfg.c0, 1e-3, max_relative = 1e-12);
        assert_relative_eq!(cfg.power_dbm(), 18.0, epsilon = 1e-12);
        assert_relative_eq!(cfg.delta, 1e-3);
    }

    #[test]
    fn zero_users_names_field() {
        let mut file = ScenarioFile::default();
        file.geometry.k_users = 0;
        let err = file.into_config().unwrap_err();
        assert_eq!(err.field_name(), Some("k_users"));
    }

    #[test]
    fn mismatched_distance_list_is_rejected() {
        let mut file = ScenarioFile::default();
        file.geometry.d_bu_m = Some(vec![30.0, 30.0]);
        assert_eq!(file.into_config().unwrap_err().field_name(), Some("d_bu"));
    }

    #[test]
    fn toml_roundtrip_and_partial_files() {
        let text = ScenarioFile::default().to_toml_string();
        let back = ScenarioFile::from_toml_str(&text)
            .unwrap()
            .into_config()
            .unwrap();
        assert_eq!(back, SystemConfig::default_profile());

        let partial = "seed = 9\n[array]\nn_t = 4\n";
        let cfg = ScenarioFile::from_toml_str(partial)
            .unwrap()
            .into_config()
            .unwrap();
        assert_eq!(cfg.n_t, 4);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.k_users, 3);

        assert!(ScenarioFile::from_toml_str("[array]\nbogus = 1\n").is_err());
    }

    #[test]
    fn draws_are_deterministic() {
        let cfg = SystemConfig::default_profile();
        let a = draw_channels(&cfg, &mut cfg.rng()).unwrap();
        let b = draw_channels(&cfg, &mut cfg.rng()).unwrap();
        assert_eq!(a, b);
        let c = draw_channels(&cfg, &mut cfg.trial_rng(1)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn target_channel_energy() {
        let cfg = SystemConfig::default_profile();
        let ch = draw_channels(&cfg, &mut cfg.rng()).unwrap();
        assert_relative_eq!(ch.h_ce.norm_squared(), 3.2e-6, max_relative = 1e-12);
        let beta = ch.h_ce[0].norm();
        assert!(ch
            .h_ce
            .iter()
            .all(|z| (z - Complex64::new(beta, 0.0)).norm() < 1e-18));
    }

    #[test]
    fn derived_fields_are_consistent() {
        let cfg = SystemConfig::default_profile();
        let ch = draw_channels(&cfg, &mut cfg.trial_rng(5)).unwrap();
        let (vals, _) = hermitian_eig(&ch.h_ce_outer);
        let top = *vals.last().unwrap();
        assert_relative_eq!(top, ch.h_ce.norm_squared(), max_relative = 1e-10);
        assert!(vals[..vals.len() - 1].iter().all(|v| v.abs() < 1e-10 * top));
        assert!(frobenius(&(&ch.h_ce_outer - ch.h_ce_outer.adjoint())) == 0.0);
        for k in 0..cfg.k_users {
            for m in 0..cfg.n_t {
                let want = ch.h_e[k] * ch.h_ce[m].conj();
                assert!((ch.h_se[k][m] - want).norm() <= 1e-15 * want.norm().max(1e-30));
                let eff = ch.g[k][m].conj() + ch.h_se[k][m];
                assert_eq!(ch.h_eff[k][m], eff);
            }
        }
    }
}
