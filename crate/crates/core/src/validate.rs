//! Self checks that compare the library against independent evaluations.
//!
//! The centerpiece is an exhaustive search for the two-antenna, single-user
//! case. There the secrecy rate and every constraint depend on each beam only
//! through two gains (toward the user and toward the target), and a rank-one
//! sensing covariance is always optimal (a complex SDP with three linear
//! constraints has a rank-one solution). A unit 2-vector is a point on the
//! Bloch sphere and each gain is affine in that point, so the reachable gain
//! pairs form an ellipse that is easy to sweep. Each beam is swept by the log
//! of the gain it should suppress (good designs null it to 1e-8 or below)
//! and by the position of the other gain within its reachable interval.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::conic::ConeProgram;
use crate::linalg::{c, CMat, CVec};
use crate::metrics::{self, BeamformingSolution};
use crate::optimizer::{exp_tangent, run_secure_design};
use crate::scenario::{db_to_linear, draw_channels, ChannelRealization, SystemConfig};

/// Outcome of one self check.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_owned(),
            passed,
            detail,
        }
    }
}

/// Best single-user design found by exhaustive search.
#[derive(Debug, Clone)]
pub struct BruteForce {
    /// Secrecy rate, bits/s/Hz.
    pub secrecy_rate: f64,
    pub w: CVec,
    /// Sensing beam; the sensing covariance is `s s^H`.
    pub s: CVec,
    pub feasible_grid_points: usize,
}

/// Smallest log10 gain the search represents.
const MIN_LOG_GAIN: f64 = -14.0;

/// Bloch vector of the unit 2-vector `x`.
fn bloch(x: &CVec) -> [f64; 3] {
    let p = x[0].conj() * x[1];
    [2.0 * p.re, 2.0 * p.im, x[0].norm_sqr() - x[1].norm_sqr()]
}

/// Unit 2-vector (up to phase) with Bloch vector `r`.
fn from_bloch(r: [f64; 3]) -> CVec {
    let theta = r[2].clamp(-1.0, 1.0).acos();
    let phi = r[1].atan2(r[0]);
    CVec::from_vec(vec![
        c((theta / 2.0).cos(), 0.0),
        Complex64::from_polar((theta / 2.0).sin(), phi),
    ])
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Beam directions on the Bloch sphere, described by their normalized gain
/// `|a^H x|² = (1 + n_a·n_x)/2` along a suppressed direction `a` and a kept
/// direction `b`.
struct GainEllipse {
    suppressed: [f64; 3],
    kept: [f64; 3],
    /// `n_a·n_b`.
    cos: f64,
}

impl GainEllipse {
    fn new(suppressed: &CVec, kept: &CVec) -> Self {
        let (a, b) = (bloch(suppressed), bloch(kept));
        Self {
            suppressed: a,
            kept: b,
            cos: dot(a, b).clamp(-1.0, 1.0),
        }
    }

    /// Normalized (suppressed, kept) gains for suppressed gain `10^z` and
    /// the kept gain at fraction `t` of its reachable interval.
    fn gains(&self, z: f64, t: f64) -> (f64, f64) {
        let ga = 10f64.powf(z.min(0.0));
        let da = 2.0 * ga - 1.0;
        let half = ((1.0 - self.cos * self.cos) * (1.0 - da * da))
            .max(0.0)
            .sqrt();
        let db = self.cos * da + (2.0 * t - 1.0) * half;
        (ga, (1.0 + db) / 2.0)
    }

    /// A unit vector with the gains of `(z, t)`.
    fn direction(&self, z: f64, t: f64) -> CVec {
        let (ga, gb) = self.gains(z, t);
        let (da, db) = (2.0 * ga - 1.0, 2.0 * gb - 1.0);
        let (a, b, c2) = (self.suppressed, self.kept, self.cos);
        let det = (1.0 - c2 * c2).max(1e-300);
        let (al, be) = ((da - c2 * db) / det, (db - c2 * da) / det);
        let r0 = [
            al * a[0] + be * b[0],
            al * a[1] + be * b[1],
            al * a[2] + be * b[2],
        ];
        let m = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        let mn = dot(m, m).sqrt().max(1e-300);
        let g = (1.0 - dot(r0, r0)).max(0.0).sqrt() / mn;
        from_bloch([r0[0] + g * m[0], r0[1] + g * m[1], r0[2] + g * m[2]])
    }
}

/// Scalar model of the single-user problem, written from the definitions
/// without going through the metrics module.
struct SingleUser {
    eve_gain: f64,
    user_norm2: f64,
    target_norm2: f64,
    /// User beams suppress the target and keep the user.
    user_beams: GainEllipse,
    /// Sensing beams suppress the user and keep the target.
    sensing_beams: GainEllipse,
    cfg: SystemConfig,
}

#[derive(Clone, Copy)]
struct Gains {
    user: f64,
    target: f64,
}

impl SingleUser {
    fn new(ch: &ChannelRealization, cfg: &SystemConfig) -> Self {
        let user = CVec::from_fn(2, |i, _| ch.g[0][i].conj() + ch.h_e[0] * ch.h_ce[i].conj());
        // directions whose inner product with a beam gives its gain
        let user_dir = user.map(|z| z.conj()).normalize();
        let target_dir = ch.h_ce.normalize();
        Self {
            user_norm2: user.norm_squared(),
            eve_gain: ch.h_e[0].norm_sqr(),
            target_norm2: ch.h_ce.norm_squared(),
            user_beams: GainEllipse::new(&target_dir, &user_dir),
            sensing_beams: GainEllipse::new(&user_dir, &target_dir),
            cfg: cfg.clone(),
        }
    }

    fn user_beam(&self, z: f64, t: f64) -> Gains {
        let (to_target, to_user) = self.user_beams.gains(z, t);
        Gains {
            user: self.user_norm2 * to_user,
            target: self.target_norm2 * to_target,
        }
    }

    fn sensing_beam(&self, z: f64, t: f64) -> Gains {
        let (to_user, to_target) = self.sensing_beams.gains(z, t);
        Gains {
            user: self.user_norm2 * to_user,
            target: self.target_norm2 * to_target,
        }
    }

    /// Unclamped secrecy rate and feasibility of powers `pw`, `ps` on unit
    /// beams with gains `w`, `s`.
    fn evaluate(&self, w: Gains, s: Gains, pw: f64, ps: f64) -> (f64, bool) {
        let cfg = &self.cfg;
        let sinr_user = pw * w.user / (cfg.sigma2_user + ps * s.user);
        let sinr_eve = pw * w.target / (cfg.sigma2_target + ps * s.target);
        let sr = (1.0 + sinr_user).log2() - (1.0 + sinr_eve).log2();
        let sense = self.eve_gain * (ps * s.target + pw * w.target) / cfg.sigma2_user;
        let n2 = self.target_norm2;
        let bs = n2 * ps * s.target / (cfg.sigma2_bs + n2 * pw * w.target);
        (
            sr,
            sense <= cfg.gamma_se && bs >= cfg.gamma_s && pw + ps <= cfg.p_max * (1.0 + 1e-12),
        )
    }

    /// Parameters: (z_w, t_w, z_s, t_s, user share, total fraction).
    fn at(&self, x: &[f64; 6]) -> (f64, bool) {
        let total = x[5] * self.cfg.p_max;
        let w = self.user_beam(x[0], x[1]);
        let s = self.sensing_beam(x[2], x[3]);
        let (sr, ok) = self.evaluate(w, s, x[4] * total, (1.0 - x[4]) * total);
        let unit = 0.0..=1.0;
        let log = MIN_LOG_GAIN..=0.0;
        let in_box = log.contains(&x[0])
            && log.contains(&x[2])
            && [x[1], x[3], x[4], x[5]].iter().all(|v| unit.contains(v));
        (sr, ok && in_box)
    }
}

/// Exhaustive search over single-user designs on a two-antenna array:
/// `grid` points per beam coordinate and power split at full power, then a
/// compass search (power fraction free) from the best grid points.
///
/// Returns `None` when no grid point is feasible.
pub fn brute_force_single_user(
    ch: &ChannelRealization,
    cfg: &SystemConfig,
    grid: usize,
) -> Option<BruteForce> {
    assert!(
        ch.n_t() == 2 && ch.k_users() == 1,
        "exhaustive search covers N_t = 2, K = 1 only"
    );
    assert!(grid >= 2);
    let model = SingleUser::new(ch, cfg);
    let step = 1.0 / (grid - 1) as f64;
    let params: Vec<[f64; 2]> = (0..grid)
        .flat_map(|i| {
            (0..grid).map(move |j| [MIN_LOG_GAIN * (1.0 - i as f64 * step), j as f64 * step])
        })
        .collect();
    let user_dirs: Vec<([f64; 2], Gains)> = params
        .iter()
        .map(|d| (*d, model.user_beam(d[0], d[1])))
        .collect();
    let sensing_dirs: Vec<([f64; 2], Gains)> = params
        .iter()
        .map(|d| (*d, model.sensing_beam(d[0], d[1])))
        .collect();

    // keep the best few feasible points as seeds for the local search
    const SEEDS: usize = 8;
    let mut best: Vec<(f64, [f64; 6])> = Vec::new();
    let mut feasible = 0;
    for (dw, gw) in &user_dirs {
        for (ds, gs) in &sensing_dirs {
            for k in 0..=grid {
                let split = k as f64 / grid as f64;
                let (sr, ok) =
                    model.evaluate(*gw, *gs, split * cfg.p_max, (1.0 - split) * cfg.p_max);
                if !ok {
                    continue;
                }
                feasible += 1;
                if best.len() < SEEDS || sr > best[best.len() - 1].0 {
                    best.push((sr, [dw[0], dw[1], ds[0], ds[1], split, 1.0]));
                    best.sort_by(|a, b| b.0.total_cmp(&a.0));
                    best.truncate(SEEDS);
                }
            }
        }
    }
    if best.is_empty() {
        return None;
    }

    let dz = -MIN_LOG_GAIN * step;
    let init_step = [dz, step, dz, step, 1.0 / grid as f64, 0.05];
    let mut champion = best[0];
    for &(sr0, x0) in &best {
        let (mut x, mut sr) = (x0, sr0);
        let mut step = init_step;
        while step.iter().any(|&h| h > 1e-9) {
            let mut improved = false;
            for d in 0..6 {
                for sign in [1.0, -1.0] {
                    let mut y = x;
                    y[d] += sign * step[d];
                    let (v, ok) = model.at(&y);
                    if ok && v > sr {
                        (x, sr) = (y, v);
                        improved = true;
                    }
                }
            }
            if !improved {
                step.iter_mut().for_each(|h| *h *= 0.5);
            }
        }
        if sr > champion.0 {
            champion = (sr, x);
        }
    }
    let (sr, x) = champion;
    let total = x[5] * cfg.p_max;
    Some(BruteForce {
        secrecy_rate: sr.max(0.0),
        w: model.user_beams.direction(x[0], x[1]) * c((x[4] * total).sqrt(), 0.0),
        s: model.sensing_beams.direction(x[2], x[3]) * c(((1.0 - x[4]) * total).sqrt(), 0.0),
        feasible_grid_points: feasible,
    })
}

/// The two-antenna, single-user scenario used by the exhaustive-search
/// comparison: default geometry with `γ_s = 20 dB`, well inside the region
/// where the sensing requirements can be met.
pub fn tiny_config(seed: u64) -> SystemConfig {
    let mut cfg = SystemConfig::default_profile();
    cfg.n_t = 2;
    cfg.set_users(1);
    cfg.gamma_s = db_to_linear(20.0);
    cfg.seed = seed;
    cfg
}

/// Secrecy rate of the iterative design vs exhaustive search on one tiny draw.
#[derive(Debug, Clone, Serialize)]
pub struct OracleComparison {
    pub seed: u64,
    pub iterative: f64,
    pub exhaustive: f64,
    /// `|iterative − exhaustive| / exhaustive`.
    pub relative_gap: f64,
}

pub fn compare_with_brute_force(seed: u64, grid: usize) -> Result<OracleComparison, String> {
    let cfg = tiny_config(seed);
    let ch = draw_channels(&cfg, &mut cfg.rng()).map_err(|e| e.to_string())?;
    let sol = run_secure_design(&ch, &cfg).map_err(|e| e.to_string())?;
    let bf = brute_force_single_user(&ch, &cfg, grid).ok_or("no feasible grid point")?;
    Ok(OracleComparison {
        seed,
        iterative: sol.secrecy_rate,
        exhaustive: bf.secrecy_rate,
        relative_gap: (sol.secrecy_rate - bf.secrecy_rate).abs() / bf.secrecy_rate.max(1e-12),
    })
}

fn complex_gaussian(rng: &mut impl Rng, scale: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * scale
}

/// Random PSD matrix `G G^H` with a random overall scale.
pub fn random_psd(n: usize, rng: &mut impl Rng) -> CMat {
    let scale = 10f64.powf(rng.random_range(-3.0..1.0));
    let g = CMat::from_fn(n, n, |_, _| complex_gaussian(rng, scale));
    &g * g.adjoint()
}

/// A random instance with `n` antennas and `k` users: Gaussian channels at
/// random scales, random PSD covariances, random noise powers.
pub fn random_instance(
    n: usize,
    k: usize,
    rng: &mut impl Rng,
) -> (SystemConfig, ChannelRealization, BeamformingSolution) {
    let mut cfg = SystemConfig::default_profile();
    cfg.n_t = n;
    cfg.set_users(k);
    cfg.sigma2_user = 10f64.powf(rng.random_range(-12.0..-8.0));
    cfg.sigma2_target = 10f64.powf(rng.random_range(-12.0..-8.0));
    cfg.sigma2_bs = 10f64.powf(rng.random_range(-14.0..-10.0));
    let mut vec_at = |s: f64| CVec::from_fn(n, |_, _| complex_gaussian(rng, s));
    let g = (0..k).map(|_| vec_at(1e-4)).collect();
    let h_ce = vec_at(1e-3);
    let h_e = (0..k).map(|_| complex_gaussian(rng, 1e-3)).collect();
    let ch = ChannelRealization::from_parts(g, h_ce, h_e);
    let q = (0..k).map(|_| random_psd(n, rng)).collect();
    let sol = BeamformingSolution::from_covariances(q, random_psd(n, rng));
    (cfg, ch, sol)
}

/// `x A x^H` for a row `x`, summed entry by entry.
fn row_quadratic(x: &CVec, a: &CMat) -> f64 {
    let n = x.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += x[i] * a[(i, j)] * x[j].conj();
        }
    }
    acc.re
}

/// Largest relative deviation between the metrics module and entry-wise
/// evaluations of the same ratios on `instances` random instances.
pub fn metric_oracle_deviation(instances: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut note =
        |lib: f64, oracle: f64| worst = worst.max((lib - oracle).abs() / oracle.abs().max(1e-300));
    for _ in 0..instances {
        let n = rng.random_range(1..=4);
        let k = rng.random_range(1..=3);
        let (cfg, ch, sol) = random_instance(n, k, &mut rng);
        let target_row = ch.h_ce.map(|z| z.conj());
        for u in 0..k {
            let h = CVec::from_fn(n, |i, _| ch.g[u][i].conj() + ch.h_e[u] * ch.h_ce[i].conj());
            let se = CVec::from_fn(n, |i, _| ch.h_e[u] * ch.h_ce[i].conj());
            let others = |x: &CVec| {
                (0..k)
                    .filter(|&i| i != u)
                    .map(|i| row_quadratic(x, &sol.q[i]))
                    .sum::<f64>()
            };
            note(
                metrics::sinr_user(u, &sol, &ch, &cfg),
                row_quadratic(&h, &sol.q[u])
                    / (cfg.sigma2_user + others(&h) + row_quadratic(&h, &sol.s)),
            );
            note(
                metrics::sinr_eve(u, &sol, &ch, &cfg),
                row_quadratic(&target_row, &sol.q[u])
                    / (cfg.sigma2_target
                        + row_quadratic(&target_row, &sol.s)
                        + others(&target_row)),
            );
            note(
                metrics::scnr_sense_eve(u, &sol, &ch, &cfg),
                (row_quadratic(&se, &sol.s) + row_quadratic(&se, &sol.q[u]))
                    / (cfg.sigma2_user + others(&se)),
            );
        }
        // Tr(H S H^H) with H = h_ce h_ce^H, by explicit products
        let hm = CMat::from_fn(n, n, |i, j| ch.h_ce[i] * ch.h_ce[j].conj());
        let tr = |a: &CMat| {
            (0..n)
                .map(|i| (&hm * a * hm.adjoint())[(i, i)].re)
                .sum::<f64>()
        };
        let clutter: f64 = sol.q.iter().map(tr).sum();
        note(
            metrics::scnr_bs(&sol, &ch, &cfg),
            tr(&sol.s) / (cfg.sigma2_bs + clutter),
        );
        let eig_sum: f64 = sol
            .q
            .iter()
            .chain(std::iter::once(&sol.s))
            .map(|m| m.clone().symmetric_eigenvalues().sum())
            .sum();
        note(metrics::total_power(&sol), eig_sum);
    }
    worst
}

/// Largest violation of `e^x ≥ e^{x0}(1 + x − x0)` and the smallest gap away
/// from the touching point, over `pairs` random pairs in `[−30, 30]²`.
pub fn surrogate_check(pairs: usize, seed: u64) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_violation: f64 = 0.0;
    let mut touching_elsewhere = 0;
    for _ in 0..pairs {
        let x: f64 = rng.random_range(-30.0..30.0);
        let x0: f64 = rng.random_range(-30.0..30.0);
        let scale = x.exp().max(x0.exp());
        let gap = (x.exp() - exp_tangent(x, x0)) / scale;
        worst_violation = worst_violation.max(-gap);
        // away from the touching point the gap is at least (x−x0)²/2 · e^{min}
        if (x - x0).abs() > 1e-3 && gap <= 1e-12 {
            touching_elsewhere += 1;
        }
    }
    (worst_violation, touching_elsewhere)
}

/// Largest relative deviation between quadratic forms read through the real
/// PSD embedding and direct complex evaluation.
pub fn embedding_deviation(instances: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let n = rng.random_range(1..=5);
        let mut p = ConeProgram::new();
        let block = p.embed_hermitian("A", n).expect("fresh program");
        let a = random_psd(n, &mut rng);
        let mut x = vec![0.0; p.num_vars()];
        block.assign(&a, &mut x);
        let h = CVec::from_fn(n, |_, _| complex_gaussian(&mut rng, 1.0));
        let direct = row_quadratic(&h, &a);
        let via = block.row_form(&h).eval(&x);
        worst = worst.max((via - direct).abs() / direct.abs().max(1e-300));
    }
    worst
}

/// The full self-check suite.
pub fn run_all(seed: u64) -> Vec<Check> {
    let mut checks = Vec::new();
    let dev = metric_oracle_deviation(1000, seed);
    checks.push(Check::new(
        "metric oracles",
        dev <= 1e-10,
        format!("max relative deviation {dev:.2e} over 1000 instances"),
    ));
    let dev = embedding_deviation(1000, seed);
    checks.push(Check::new(
        "real PSD embedding",
        dev <= 1e-10,
        format!("max relative deviation {dev:.2e} over 1000 instances"),
    ));
    let (viol, touch) = surrogate_check(100_000, seed);
    checks.push(Check::new(
        "exponential tangent bound",
        viol <= 1e-12 && touch == 0,
        format!(
            "max relative violation {viol:.2e}, {touch} spurious touching points over 1e5 pairs"
        ),
    ));
    for s in 0..3 {
        let seed = seed.wrapping_add(s);
        let check = match compare_with_brute_force(seed, 40) {
            Ok(cmp) => Check::new(
                &format!("exhaustive search, draw {seed}"),
                cmp.relative_gap <= 0.02,
                format!(
                    "iterative {:.4} vs exhaustive {:.4} bits/s/Hz (gap {:.2}%)",
                    cmp.iterative,
                    cmp.exhaustive,
                    100.0 * cmp.relative_gap
                ),
            ),
            Err(e) => Check::new(&format!("exhaustive search, draw {seed}"), false, e),
        };
        checks.push(check);
    }
    let cfg = SystemConfig {
        seed,
        ..SystemConfig::default_profile()
    };
    let check = match draw_channels(&cfg, &mut cfg.rng())
        .map_err(|e| e.to_string())
        .and_then(|ch| {
            run_secure_design(&ch, &cfg)
                .map(|sol| (sol, ch))
                .map_err(|e| e.to_string())
        }) {
        Ok((sol, ch)) => {
            let r = metrics::MetricsReport::evaluate(&sol, &ch, &cfg);
            let ok = sol.converged
                && r.scnr_sense_eve
                    .iter()
                    .all(|&x| x <= cfg.gamma_se * (1.0 + 1e-5))
                && r.scnr_bs >= cfg.gamma_s * (1.0 - 1e-5)
                && r.total_power <= cfg.p_max * (1.0 + 1e-6)
                && r.total_power >= cfg.p_max * (1.0 - 1e-3)
                && sol.rank_ratios.iter().all(|&x| x >= 0.999);
            Check::new(
                "default scenario end to end",
                ok,
                format!(
                    "SR {:.4} bits/s/Hz in {} iterations, min rank ratio {:.6}",
                    sol.secrecy_rate,
                    sol.iterations_used,
                    sol.rank_ratios.iter().cloned().fold(1.0, f64::min)
                ),
            )
        }
        Err(e) => Check::new("default scenario end to end", false, e),
    };
    checks.push(check);
    checks
}
