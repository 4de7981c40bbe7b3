//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Tolerances are pinned as constants below.

use std::f64::consts::PI;
use std::time::Instant;

use isac_hybrid::coverage::{self, BBox, CoverageQuery, Criterion, RegionBranch};
use isac_hybrid::crlb::{self, oracle, BoundCoefficients};
use isac_hybrid::estimator::{self, MonteCarloConfig};
use isac_hybrid::fisher::{self, FisherOptions};
use isac_hybrid::io::Scenario;
use isac_hybrid::scenario::{self, LinkBudget, OfdmConfig, SceneGeometry, Vec2};
use isac_hybrid_validation::{random_scene, rel_err, run_all, Check, SceneLimits};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use statrs::function::gamma::gamma;

const AC1_SAMPLES: usize = 10_000;
const AC1_MAX_REL: f64 = 1e-9;
const AC1_MAX_SECONDS: f64 = 10.0;

const AC2_TARGET: [f64; 2] = [200.0, 50.0];
const AC2_PEB_MONO: [f64; 2] = [0.96, 0.9134];
const AC2_PEB_LIMIT: f64 = 0.1081;
const AC2_REL_TOL: f64 = 0.02;

const AC3_SAMPLES: usize = 100_000;
const AC3_EQUALITY_REL: f64 = 1e-9;

const AC4_RHOS: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
const AC4_STEP: f64 = 1e-4;

const AC5_SNR_DB: [f64; 4] = [-10.0, 0.0, 10.0, 20.0];
const AC5_TRIALS: usize = 500;
const AC5_SEED: u64 = 2024;
const AC5_POS_RATIO: (f64, f64) = (0.75, 1.5);
const AC5_VEL_RATIO: (f64, f64) = (0.6, 1.5);
const AC5_MAX_SECONDS: f64 = 300.0;

const AC6_THRESHOLDS: [f64; 3] = [0.5, 1.0, 2.0];
const AC6_REL_TOL: f64 = 0.02;
const AC6_EXPONENT: f64 = 2.0 / 3.0;
const AC6_EXPONENT_TOL: f64 = 0.03;
const AC6_INTERVALS: usize = 20_000;

const AC7_LEADING: (f64, f64) = (2.6448, 0.0005);
const AC7_CORRECTION: (f64, f64) = (0.0327, 0.0001);

const AC8_TARGET: [f64; 2] = [200.0, 50.0];
const AC8_SWEEP: usize = 12;
const AC8_REL_TOL: f64 = 0.005;
const AC8_INTERVALS: usize = 40_000;
const AC8_FRACTIONS: [f64; 3] = [0.2, 0.5, 0.8];
const AC8_DENSITIES: [f64; 2] = [2e-6, 1e-5];
const AC8_REALIZATIONS: usize = 10_000;
const AC8_SIGMAS: f64 = 3.0;

const AC9_SWEEP_THRESHOLDS: [f64; 3] = [0.5, 1.0, 2.0];
const AC9_ORDER_THRESHOLDS: [f64; 5] = [0.25, 0.5, 1.0, 1.5, 2.0];
const AC9_CELL: f64 = 5.0;
/// Area changes below this fraction of the sweep maximum count as flat.
const AC9_FLAT_FRACTION: f64 = 0.005;

fn reference() -> (OfdmConfig, LinkBudget) {
    let s = Scenario::default();
    let lb = s.link_budget();
    (s.ofdm, lb)
}

fn none() -> FisherOptions {
    FisherOptions::default()
}

fn ac1() -> (bool, String) {
    let start = Instant::now();
    let (cfg, _) = reference();
    let cfg1 = OfdmConfig { rx_antennas: 1, ..cfg.clone() };
    let c = cfg.speed_of_light;
    let lam = cfg.wavelength();
    let mut rng = StdRng::seed_from_u64(1);
    let limits = SceneLimits::default();
    let mut worst = [0.0f64; 4];
    for _ in 0..AC1_SAMPLES {
        let lb = LinkBudget::from_db(rng.random_range(70.0..110.0), rng.random_range(70.0..110.0), &cfg);
        let g = random_scene(&mut rng, &limits);
        let (q, qu) = (g.target, g.ue);
        let fs = fisher::fisher_set(&cfg, &lb, &g, &none()).unwrap();
        let coeffs = BoundCoefficients::new(&cfg, &lb, &none());

        let hybrid = crlb::hybrid_position(&fs, &g, c).unwrap().crlb;
        worst[0] = worst[0].max(rel_err(hybrid, oracle::position_trace(&fs, q, qu, c)));

        let mono_ref = oracle::position_trace(&fs.without_ue(), q, qu, c);
        let mono = crlb::mono_from_fisher(&fs, g.range_bs, c).unwrap().crlb;
        worst[1] = worst[1].max(rel_err(mono, mono_ref)).max(rel_err(coeffs.mono(g.range_bs, g.aoa), mono_ref));

        let fs1 = fisher::fisher_set(&cfg1, &lb, &g, &none()).unwrap();
        let coeffs1 = BoundCoefficients::new(&cfg1, &lb, &none());
        let single_ref = oracle::position_trace(&fs1, q, qu, c);
        let single = crlb::single_antenna_position(&fs1, &g, c).unwrap().crlb;
        worst[2] = worst[2].max(rel_err(single, single_ref)).max(rel_err(coeffs1.single_antenna(&g), single_ref));

        let vel_ref = oracle::velocity_trace(&fs, q, qu, lam);
        let vel = crlb::velocity(&fs, &g, lam).unwrap().crlb;
        worst[3] = worst[3].max(rel_err(vel, vel_ref)).max(rel_err(coeffs.velocity(&g), vel_ref));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst.iter().all(|w| *w < AC1_MAX_REL) && secs < AC1_MAX_SECONDS;
    (
        pass,
        format!(
            "max rel err hybrid {:.1e}, mono {:.1e}, single-antenna {:.1e}, velocity {:.1e} over {AC1_SAMPLES} scenes \
             (tol {AC1_MAX_REL:e}); {secs:.2}s (limit {AC1_MAX_SECONDS}s)",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn ac2() -> (bool, String) {
    let (cfg, lb) = reference();
    let q = Vec2::from(AC2_TARGET);
    let fs = fisher::fisher_set_bs(&cfg, &lb, q.norm(), scenario::array_angle(q), &none());
    let g = scenario::derive_geometry(q, Vec2::new(0.0, 300.0)).unwrap();
    let mono = crlb::mono_from_fisher(&fs, q.norm(), cfg.speed_of_light).unwrap().peb;
    let limit = crlb::position_limit(&fs, &g, cfg.speed_of_light).unwrap().peb;
    let mono_ok = AC2_PEB_MONO.iter().any(|v| rel_err(mono, *v) <= AC2_REL_TOL);
    let limit_ok = rel_err(limit, AC2_PEB_LIMIT) <= AC2_REL_TOL;
    // Both bound terms scale as 1/Ῡ, so the PEB scales as Ῡ^{-1/2}.
    let implied = |peb: f64, reference: f64| 98.0 + 20.0 * (peb / reference).log10();
    (
        mono_ok && limit_ok,
        format!(
            "PEB_mono {mono:.4} m vs {:?} m, PEB_limit {limit:.4} m vs {AC2_PEB_LIMIT} m (tol {:.0}%); \
             reference values correspond to Ῡ ≈ {:.1}/{:.1}/{:.1} dB",
            AC2_PEB_MONO,
            AC2_REL_TOL * 100.0,
            implied(mono, AC2_PEB_MONO[0]),
            implied(mono, AC2_PEB_MONO[1]),
            implied(limit, AC2_PEB_LIMIT)
        ),
    )
}

fn ac3() -> (bool, String) {
    let (cfg, _) = reference();
    let c = cfg.speed_of_light;
    let mut rng = StdRng::seed_from_u64(3);
    let limits = SceneLimits { min_sin_bistatic: 0.0, ..SceneLimits::default() };
    let mut negatives = 0usize;
    let mut min_gain = f64::INFINITY;
    let mut worst_identity = 0.0f64;
    for _ in 0..AC3_SAMPLES {
        let lb = LinkBudget::from_db(rng.random_range(70.0..110.0), rng.random_range(70.0..110.0), &cfg);
        let g = random_scene(&mut rng, &limits);
        let fs = fisher::fisher_set(&cfg, &lb, &g, &none()).unwrap();
        let gain = crlb::fusion_gain(&fs, &g, c).unwrap();
        let mono = crlb::mono_from_fisher(&fs, g.range_bs, c).unwrap().crlb;
        let hybrid = crlb::hybrid_position(&fs, &g, c).unwrap().crlb;
        negatives += usize::from(gain < 0.0);
        min_gain = min_gain.min(gain / mono);
        worst_identity = worst_identity.max((gain - (mono - hybrid)).abs() / mono);
    }
    let mut worst_equality = 0.0f64;
    for _ in 0..1000 {
        let q = random_scene(&mut rng, &SceneLimits::default()).target;
        let ue = q + q.unit() * rng.random_range(5.0..500.0);
        let g = scenario::derive_geometry(q, ue).unwrap();
        let lb = LinkBudget::from_db(rng.random_range(70.0..110.0), rng.random_range(70.0..110.0), &cfg);
        let fs = fisher::fisher_set(&cfg, &lb, &g, &none()).unwrap();
        let mono = crlb::mono_from_fisher(&fs, g.range_bs, c).unwrap().crlb;
        worst_equality = worst_equality.max(crlb::fusion_gain(&fs, &g, c).unwrap().abs() / mono);
    }
    (
        negatives == 0 && worst_equality < AC3_EQUALITY_REL,
        format!(
            "{negatives} negative Δ_C in {AC3_SAMPLES} scenes (min Δ_C/C_mono {min_gain:.2e}, \
             |Δ_C − (C_mono − C_h)|/C_mono ≤ {worst_identity:.1e}); max |Δ_C|/C_mono at ψ=π {worst_equality:.1e} \
             (tol {AC3_EQUALITY_REL:e})"
        ),
    )
}

fn ac4() -> (bool, String) {
    let (cfg, lb) = reference();
    let lam = cfg.wavelength();
    let rb = 200.0;
    let fisher_at = |ru: f64| {
        let snr_b = scenario::bs_snr(&cfg, &lb, rb);
        let snr_u = scenario::ue_snr(&cfg, &lb, rb, ru);
        fisher::fisher_from_snr(&cfg, snr_b, snr_u, 0.0, &none())
    };
    let base = fisher_at(rb);
    let rho_at_rb = base.doppler_bs / base.doppler_ue;
    let mut pass = true;
    let mut parts = Vec::new();
    for rho in AC4_RHOS {
        let ru = rb * (rho / rho_at_rb).sqrt();
        let fs = fisher_at(ru);
        let rho_check = fs.doppler_bs / fs.doppler_ue;
        let psi_star = crlb::optimal_bistatic_angle(rho).unwrap();
        let (mut best, mut arg) = (f64::INFINITY, 0.0);
        let steps = (PI / AC4_STEP) as usize;
        for i in 1..steps {
            let psi = i as f64 * AC4_STEP;
            let g = SceneGeometry {
                target: Vec2::ZERO,
                ue: Vec2::ZERO,
                range_bs: rb,
                range_ue: ru,
                aoa: 0.0,
                ue_direction: 0.0,
                bistatic_angle: psi,
            };
            let v = crlb::velocity(&fs, &g, lam).unwrap().crlb;
            if v < best {
                best = v;
                arg = psi;
            }
        }
        let ok = (arg - psi_star).abs() <= AC4_STEP
            && psi_star > PI / 2.0
            && psi_star < PI
            && rel_err(rho_check, rho) < 1e-12;
        pass &= ok;
        parts.push(format!("ρ={rho}: ψ*={psi_star:.5} grid {arg:.5}"));
    }
    (pass, format!("{} (tol {AC4_STEP:e} rad, ψ* ∈ (π/2, π))", parts.join(", ")))
}

fn ac5() -> (bool, String) {
    let start = Instant::now();
    let s = Scenario::default();
    let lb = s.link_budget();
    let mc = MonteCarloConfig {
        snr_db: AC5_SNR_DB.to_vec(),
        trials: AC5_TRIALS,
        seed: AC5_SEED,
        ..MonteCarloConfig::default()
    };
    let points = estimator::monte_carlo(&s.ofdm, &lb, s.target, s.ue.unwrap(), s.velocity, &mc).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let top = points.last().unwrap();
    let r_mono = top.rmse_pos_mono / top.peb_mono;
    let r_hyb = top.rmse_pos_hybrid / top.peb_hybrid;
    let r_vel = top.rmse_vel / top.veb;
    let within = |r: f64, (lo, hi): (f64, f64)| r >= lo && r <= hi;
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let pass = within(r_mono, AC5_POS_RATIO)
        && within(r_hyb, AC5_POS_RATIO)
        && within(r_vel, AC5_VEL_RATIO)
        && secs < AC5_MAX_SECONDS;
    (
        pass,
        format!(
            "at Υ_B={} dB over {} trials: RMSE/PEB mono {r_mono:.3}, hybrid {r_hyb:.3} (tol {:?}), RMSE/VEB {r_vel:.3} \
             (tol {:?}), {} velocity failures; {secs:.1}s on {threads} thread(s) (limit {AC5_MAX_SECONDS}s)",
            top.snr_db, top.trials, AC5_POS_RATIO, AC5_VEL_RATIO, top.velocity_failures
        ),
    )
}

/// Least-squares slope of log y against log x.
fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn ac6() -> (bool, String) {
    let (cfg, lb) = reference();
    let coeffs = BoundCoefficients::new(&cfg, &lb, &none());
    let mut pass = true;
    let mut parts = Vec::new();
    for gamma_p in AC6_THRESHOLDS {
        let closed = coverage::coverage_mono_closed(&cfg, &lb, gamma_p).unwrap().area;
        let numeric = coverage::coverage_mono_quadrature(&coeffs, gamma_p, AC6_INTERVALS);
        let err = rel_err(closed, numeric);
        pass &= err < AC6_REL_TOL;
        parts.push(format!("γ={gamma_p}: {closed:.4e} vs {numeric:.4e} ({:.2}%)", err * 100.0));
    }
    let gammas: Vec<f64> = (0..=8).map(|i| 0.5 * 4f64.powf(i as f64 / 8.0)).collect();
    let numeric: Vec<f64> =
        gammas.iter().map(|g| coverage::coverage_mono_quadrature(&coeffs, *g, AC6_INTERVALS)).collect();
    let closed: Vec<f64> = gammas.iter().map(|g| coverage::coverage_mono_closed(&cfg, &lb, *g).unwrap().area).collect();
    let slope = log_log_slope(&gammas, &numeric);
    let slope_closed = log_log_slope(&gammas, &closed);
    pass &= (slope - AC6_EXPONENT).abs() <= AC6_EXPONENT_TOL;
    (
        pass,
        format!(
            "{} (tol {:.0}%); exponent {slope:.4} (closed form {slope_closed:.4}), target 2/3 ± {AC6_EXPONENT_TOL}",
            parts.join(", "),
            AC6_REL_TOL * 100.0
        ),
    )
}

fn ac7() -> (bool, String) {
    let leading = PI.sqrt() * gamma(5.0 / 6.0) / gamma(4.0 / 3.0) * (PI * PI / 6.0).cbrt();
    let correction = PI / 96.0;
    let ok_lead = (leading - AC7_LEADING.0).abs() <= AC7_LEADING.1;
    let ok_corr = (correction - AC7_CORRECTION.0).abs() <= AC7_CORRECTION.1;
    let ok_consts = (coverage::MONO_LEADING_COEFF - leading).abs() <= AC7_LEADING.1
        && (coverage::MONO_CORRECTION_COEFF - correction).abs() <= AC7_CORRECTION.1;
    (
        ok_lead && ok_corr && ok_consts,
        format!(
            "√π·Γ(5/6)/Γ(4/3)·(π²/6)^(1/3) = {leading:.6} (want {} ± {}), π/96 = {correction:.6} (want {} ± {})",
            AC7_LEADING.0, AC7_LEADING.1, AC7_CORRECTION.0, AC7_CORRECTION.1
        ),
    )
}

fn ac8() -> (bool, String) {
    let (cfg, lb) = reference();
    let q = Vec2::from(AC8_TARGET);
    let probe = coverage::ue_admissible_region(&cfg, &lb, q, 1.0, &none()).unwrap();
    let (lo, hi) = (probe.peb_limit, probe.peb_mono);
    let mut pass = true;
    let mut worst_area = 0.0f64;
    let mut branches = [0usize; 2];
    for i in 0..AC8_SWEEP {
        let gamma_p = lo + (hi - lo) * (i as f64 + 0.5) / AC8_SWEEP as f64;
        let region = coverage::ue_admissible_region(&cfg, &lb, q, gamma_p, &none()).unwrap();
        let numeric = coverage::ue_region_area_quadrature(&cfg, &lb, q, gamma_p, &none(), AC8_INTERVALS).unwrap();
        match region.branch {
            RegionBranch::FullLoop => branches[0] += 1,
            RegionBranch::PartialLoop => branches[1] += 1,
            _ => pass = false,
        }
        worst_area = worst_area.max(rel_err(region.area, numeric));
    }
    pass &= worst_area < AC8_REL_TOL;

    let mut worst_sigma = 0.0f64;
    let mut cdf_parts = Vec::new();
    for (fi, f) in AC8_FRACTIONS.iter().enumerate() {
        let gamma_p = lo + (hi - lo) * f;
        let region = coverage::ue_admissible_region(&cfg, &lb, q, gamma_p, &none()).unwrap();
        let reach = region.boundary.iter().map(|(_, r)| *r).fold(0.0, f64::max);
        let window = BBox::around(q, 1.1 * reach);
        for (di, density) in AC8_DENSITIES.iter().enumerate() {
            let formula = coverage::peb_cdf(&cfg, &lb, q, *density, gamma_p, &none()).unwrap();
            let seed = 80 + (fi * AC8_DENSITIES.len() + di) as u64;
            let mc =
                coverage::peb_cdf_monte_carlo(&cfg, &lb, q, *density, gamma_p, window, AC8_REALIZATIONS, seed, &none())
                    .unwrap();
            // Half a realisation keeps the bound meaningful when p is 0 or 1.
            let sigma = mc.std_error.max(0.5 / AC8_REALIZATIONS as f64);
            let z = (mc.probability - formula).abs() / sigma;
            worst_sigma = worst_sigma.max(z);
            pass &= z <= AC8_SIGMAS;
            cdf_parts.push(format!("({density:e}, {gamma_p:.3}): {formula:.4} vs {:.4}", mc.probability));
        }
    }
    (
        pass,
        format!(
            "area max rel err {:.3}% over {AC8_SWEEP} thresholds in ({lo:.4}, {hi:.4}) m \
             ({} full-loop, {} partial-loop; tol {:.1}%); CDF (λ, γ_p) {} ; worst {worst_sigma:.2}σ (tol {AC8_SIGMAS}σ)",
            worst_area * 100.0,
            branches[0],
            branches[1],
            AC8_REL_TOL * 100.0,
            cdf_parts.join(", ")
        ),
    )
}

/// True when the non-flat steps go up at least once, then down at least once, and never up again.
fn rise_then_fall(areas: &[f64]) -> bool {
    let max = areas.iter().cloned().fold(0.0, f64::max);
    let signs: Vec<i8> = areas
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| d.abs() > AC9_FLAT_FRACTION * max)
        .map(|d| if d > 0.0 { 1 } else { -1 })
        .collect();
    let Some(first_fall) = signs.iter().position(|s| *s < 0) else { return false };
    first_fall > 0 && signs[first_fall..].iter().all(|s| *s < 0)
}

fn ac9() -> (bool, String) {
    let (cfg, lb) = reference();
    let coeffs = BoundCoefficients::new(&cfg, &lb, &none());
    let xs: Vec<f64> = (1..=30).map(|i| 50.0 * i as f64).collect();
    let mut pass = true;
    let mut last_best = 0.0;
    let mut sweep_parts = Vec::new();
    for gamma_p in AC9_SWEEP_THRESHOLDS {
        let reach = coverage::coverage_radius_bound(&coeffs, gamma_p) * 1.02;
        let query = CoverageQuery {
            peb_threshold: gamma_p,
            veb_threshold: None,
            region: BBox::new(Vec2::new(0.0, -reach), Vec2::new(reach, reach)),
            cell: AC9_CELL,
            right_half_only: true,
        };
        let sweep = coverage::optimal_ue_sweep(&cfg, &lb, &xs, &query, &none()).unwrap();
        let shape_ok = rise_then_fall(&sweep.areas);
        let order_ok = sweep.best_position >= last_best;
        pass &= shape_ok && order_ok;
        last_best = sweep.best_position;
        sweep_parts.push(format!(
            "γ={gamma_p}: x_U*={} m{}",
            sweep.best_position,
            if shape_ok { "" } else { " (not rise-then-fall)" }
        ));
    }
    let ue = Scenario::default().ue.unwrap();
    let mut order_parts = Vec::new();
    for gamma_p in AC9_ORDER_THRESHOLDS {
        let query = coverage::auto_query(&coeffs, gamma_p, AC9_CELL);
        let mono = coverage::coverage_numeric(&cfg, &lb, Some(ue), &query, Criterion::Mono, &none()).unwrap().area;
        let hybrid = coverage::coverage_numeric(&cfg, &lb, Some(ue), &query, Criterion::Hybrid, &none()).unwrap().area;
        pass &= hybrid >= mono;
        order_parts.push(format!("γ={gamma_p}: {hybrid:.3e} ≥ {mono:.3e}"));
    }
    (pass, format!("sweep {}; hybrid vs mono {}", sweep_parts.join(", "), order_parts.join(", ")))
}

/// Set `ACCEPTANCE_ONLY=AC1,AC5` to run a subset.
fn main() {
    let checks: [(&str, &str, Check); 9] = [
        ("AC1", "closed forms match the Jacobian trace oracle", ac1),
        ("AC2", "reference point values at Ῡ = 98 dB", ac2),
        ("AC3", "fusion gain is non-negative and vanishes at ψ = π", ac3),
        ("AC4", "optimal bistatic angle matches the grid argmin", ac4),
        ("AC5", "Monte-Carlo RMSE approaches the bounds", ac5),
        ("AC6", "mono coverage closed form and γ^(2/3) scaling", ac6),
        ("AC7", "coverage coefficients from the gamma function", ac7),
        ("AC8", "admissible UE region area and PEB CDF", ac8),
        ("AC9", "UE sweep shape and hybrid-over-mono ordering", ac9),
    ];
    let only = std::env::var("ACCEPTANCE_ONLY").ok();
    let selected: Vec<_> = checks
        .into_iter()
        .filter(|(id, _, _)| only.as_deref().is_none_or(|o| o.split(',').any(|s| s.trim() == *id)))
        .collect();
    let failures = run_all(&selected);
    println!("acceptance: {} passed, {failures} failed", selected.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
