//! Sequential FFT parameter estimation, localization and the Monte-Carlo
//! harness that compares simulated errors against the bounds.
//!
//! Transform conventions, fixed by the synthesized phase model
//! `e^{−j2πkΔfτ} e^{j2πmT_s f_D} e^{jπ(n−c)sinθ}`:
//! - angle: forward DFT over antennas, bin p ↦ u = 2p/L wrapped to [−1, 1);
//! - delay: inverse DFT over subcarriers, bin p ↦ τ = p/(LΔf) ∈ [0, 1/Δf);
//! - Doppler: forward DFT over symbols, bin p ↦ f = p/(LT_s) wrapped to
//!   [−1/(2T_s), 1/(2T_s)).
//!
//! Peaks are plain argmax on the oversampled grid.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::RngCore;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::crlb;
use crate::error::{Error, Result};
use crate::fisher::{self, FisherOptions, FisherSet};
use crate::scenario::{self, LinkBudget, OfdmConfig, SceneGeometry, Vec2};
use crate::signal_sim::{self, RxGrid, SynthesisOptions};

/// FFT oversampling factors in the angle, delay and Doppler dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FftOversampling {
    pub angle: usize,
    pub delay: usize,
    pub doppler: usize,
}

impl Default for FftOversampling {
    fn default() -> Self {
        Self { angle: 2048, delay: 1024, doppler: 4096 }
    }
}

impl FftOversampling {
    pub fn validate(&self) -> Result<()> {
        if self.angle == 0 || self.delay == 0 || self.doppler == 0 {
            return Err(Error::InvalidConfig(format!("oversampling factors must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// How per-(k,m) spatial spectra are combined in the angle step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleAggregation {
    /// Sum of spectral magnitudes.
    #[default]
    Magnitude,
    /// Sum of spectral powers.
    Power,
}

/// Estimates at the BS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsEstimate {
    pub aoa: f64,
    pub delay: f64,
    pub doppler: f64,
}

/// Estimates at the UE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeEstimate {
    pub delay: f64,
    pub doppler: f64,
}

/// Oversampled grid spacings (angle as spatial frequency u = sinθ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinWidths {
    pub spatial_frequency: f64,
    pub delay: f64,
    pub doppler: f64,
}

/// Sequential angle, delay and Doppler estimator with FFT plans prepared once for a waveform configuration.
#[derive(Clone)]
pub struct SequentialEstimator {
    cfg: OfdmConfig,
    os: FftOversampling,
    aggregation: AngleAggregation,
    refine_delay: bool,
    angle_twiddles: Vec<Complex64>,
    delay_fft: Arc<dyn Fft<f64>>,
    doppler_fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SequentialEstimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SequentialEstimator")
            .field("os", &self.os)
            .field("aggregation", &self.aggregation)
            .field("refine_delay", &self.refine_delay)
            .finish_non_exhaustive()
    }
}

impl SequentialEstimator {
    pub fn new(cfg: &OfdmConfig, os: FftOversampling) -> Result<Self> {
        cfg.validate()?;
        os.validate()?;
        let mut planner = FftPlanner::new();
        let angle_len = os.angle * cfg.rx_antennas;
        let angle_twiddles =
            (0..angle_len).map(|i| Complex64::from_polar(1.0, -2.0 * PI * i as f64 / angle_len as f64)).collect();
        Ok(Self {
            cfg: cfg.clone(),
            os,
            aggregation: AngleAggregation::default(),
            refine_delay: false,
            angle_twiddles,
            delay_fft: planner.plan_fft_inverse(os.delay * cfg.subcarriers),
            doppler_fft: planner.plan_fft_forward(os.doppler * cfg.symbols),
        })
    }

    pub fn with_aggregation(mut self, aggregation: AngleAggregation) -> Self {
        self.aggregation = aggregation;
        self
    }

    /// After the Doppler step, re-estimate the delay from the
    /// Doppler-compensated symbol sum, then the Doppler once more. Removes the
    /// Dirichlet-kernel gain loss of the plain symbol sum at high speed.
    pub fn with_delay_refinement(mut self, refine: bool) -> Self {
        self.refine_delay = refine;
        self
    }

    pub fn config(&self) -> &OfdmConfig {
        &self.cfg
    }

    pub fn bin_widths(&self) -> BinWidths {
        BinWidths {
            spatial_frequency: 2.0 / self.angle_twiddles.len() as f64,
            delay: 1.0 / (self.delay_fft.len() as f64 * self.cfg.subcarrier_spacing_hz),
            doppler: 1.0 / (self.doppler_fft.len() as f64 * self.cfg.symbol_period()),
        }
    }

    fn check_grid(&self, grid: &RxGrid) -> Result<()> {
        if !grid.data_removed {
            return Err(Error::Domain("estimation requires a data-free grid".into()));
        }
        if grid.resource_elements() == 0 || grid.bs.is_empty() {
            return Err(Error::Domain("empty resource grid".into()));
        }
        if grid.subcarriers != self.cfg.subcarriers
            || grid.symbols != self.cfg.symbols
            || grid.rx_antennas != self.cfg.rx_antennas
        {
            return Err(Error::InvalidConfig("grid dimensions do not match the estimator".into()));
        }
        Ok(())
    }

    /// Angle, delay and Doppler from the data-free BS tensor.
    pub fn estimate_bs(&self, grid: &RxGrid) -> Result<BsEstimate> {
        self.check_grid(grid)?;
        let (nr, nk, nm) = (grid.rx_antennas, grid.subcarriers, grid.symbols);
        let u = self.spatial_frequency(grid);
        let aoa = u.asin();
        // Beamform: ỹ[k,m] = b(θ̂)ᴴ y[k,m].
        let weights: Vec<Complex64> = (0..nr).map(|n| signal_sim::steering(n, nr, aoa).conj()).collect();
        let mut beamformed = vec![Complex64::new(0.0, 0.0); nk * nm];
        for (n, w) in weights.iter().enumerate() {
            let block = &grid.bs[n * nk * nm..(n + 1) * nk * nm];
            for (acc, y) in beamformed.iter_mut().zip(block) {
                *acc += w * y;
            }
        }
        let (delay, doppler) = self.delay_doppler(&beamformed, nk, nm);
        Ok(BsEstimate { aoa, delay, doppler })
    }

    /// Delay and Doppler from the data-free UE matrix.
    pub fn estimate_ue(&self, grid: &RxGrid) -> Result<UeEstimate> {
        self.check_grid(grid)?;
        let (delay, doppler) = self.delay_doppler(&grid.ue, grid.subcarriers, grid.symbols);
        Ok(UeEstimate { delay, doppler })
    }

    fn spatial_frequency(&self, grid: &RxGrid) -> f64 {
        let nr = grid.rx_antennas;
        let re = grid.resource_elements();
        let len = self.angle_twiddles.len();
        // Snapshots laid out contiguously per resource element.
        let mut snaps = vec![Complex64::new(0.0, 0.0); re * nr];
        for n in 0..nr {
            for e in 0..re {
                snaps[e * nr + n] = grid.bs[n * re + e];
            }
        }
        let value = |p: usize| -> f64 {
            let mut acc = 0.0;
            for snap in snaps.chunks_exact(nr) {
                let mut x = Complex64::new(0.0, 0.0);
                let mut idx = 0;
                for s in snap {
                    x += s * self.angle_twiddles[idx];
                    idx += p;
                    if idx >= len {
                        idx -= len;
                    }
                }
                acc += match self.aggregation {
                    AngleAggregation::Magnitude => x.norm(),
                    AngleAggregation::Power => x.norm_sqr(),
                };
            }
            acc
        };
        // The spectrum is a sum of N_R-tap trigonometric polynomials, so its
        // peaks are wider than 2/N_R in u. Scan a coarse subgrid, then search
        // every fine bin around each competitive coarse local maximum.
        let stride = (len / (ANGLE_COARSE_FACTOR * nr)).max(1);
        let coarse: Vec<usize> = (0..len).step_by(stride).collect();
        let cvals: Vec<f64> = coarse.iter().map(|&p| value(p)).collect();
        let top = cvals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let nc = coarse.len();
        let mut best = (coarse[argmax(&cvals)], top);
        for i in 0..nc {
            let (l, r) = (cvals[(i + nc - 1) % nc], cvals[(i + 1) % nc]);
            if cvals[i] < l || cvals[i] < r || cvals[i] < 0.5 * top {
                continue;
            }
            for off in 1..stride {
                for p in [(coarse[i] + off) % len, (coarse[i] + len - off) % len] {
                    let v = value(p);
                    if v > best.1 || (v == best.1 && p < best.0) {
                        best = (p, v);
                    }
                }
            }
        }
        let u = 2.0 * best.0 as f64 / len as f64;
        if u >= 1.0 {
            u - 2.0
        } else {
            u
        }
    }

    fn delay_doppler(&self, grid: &[Complex64], nk: usize, nm: usize) -> (f64, f64) {
        let delay = self.delay_step(grid, nk, nm, 0.0);
        let doppler = self.doppler_step(grid, nk, nm, delay);
        if !self.refine_delay {
            return (delay, doppler);
        }
        let delay = self.delay_step(grid, nk, nm, doppler);
        (delay, self.doppler_step(grid, nk, nm, delay))
    }

    /// Delay from the symbol sum, each symbol de-rotated by Doppler `fd`.
    fn delay_step(&self, grid: &[Complex64], nk: usize, nm: usize, fd: f64) -> f64 {
        let df = self.cfg.subcarrier_spacing_hz;
        let ts = self.cfg.symbol_period();
        let derotate: Vec<Complex64> =
            (0..nm).map(|m| Complex64::from_polar(1.0, -2.0 * PI * m as f64 * ts * fd)).collect();
        let mut buf = vec![Complex64::new(0.0, 0.0); self.delay_fft.len()];
        for k in 0..nk {
            buf[k] = grid[k * nm..(k + 1) * nm].iter().zip(&derotate).map(|(y, r)| y * r).sum();
        }
        self.delay_fft.process(&mut buf);
        argmax_norm(&buf) as f64 / (buf.len() as f64 * df)
    }

    /// Doppler from the subcarrier sum compensated with the delay estimate.
    fn doppler_step(&self, grid: &[Complex64], nk: usize, nm: usize, delay: f64) -> f64 {
        let df = self.cfg.subcarrier_spacing_hz;
        let ts = self.cfg.symbol_period();
        let mut buf = vec![Complex64::new(0.0, 0.0); self.doppler_fft.len()];
        for k in 0..nk {
            let comp = Complex64::from_polar(1.0, 2.0 * PI * k as f64 * df * delay);
            for m in 0..nm {
                buf[m] += comp * grid[k * nm + m];
            }
        }
        self.doppler_fft.process(&mut buf);
        let len = buf.len();
        let p = argmax_norm(&buf);
        let wrapped = if 2 * p >= len { p as f64 - len as f64 } else { p as f64 };
        wrapped / (len as f64 * ts)
    }
}

/// Coarse angle subgrid density in bins per antenna.
const ANGLE_COARSE_FACTOR: usize = 16;

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn argmax_norm(values: &[Complex64]) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, v) in values.iter().enumerate() {
        let p = v.norm_sqr();
        if p > best_val {
            best = i;
            best_val = p;
        }
    }
    best
}

/// q̂ = (cτ̂_B/2)[cos θ̂, sin θ̂].
pub fn localize_mono(aoa: f64, delay_bs: f64, cfg: &OfdmConfig) -> Vec2 {
    let r = cfg.speed_of_light * delay_bs / 2.0;
    Vec2::new(r * aoa.cos(), r * aoa.sin())
}

/// Measurements fed to the weighted least-squares fusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridMeasurement {
    pub aoa: f64,
    pub delay_bs: f64,
    pub delay_ue: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridFix {
    pub position: Vec2,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

const GN_MAX_ITER: usize = 50;
const GN_STEP_TOL: f64 = 1e-9;
const GN_MAX_HALVINGS: usize = 40;

fn hybrid_objective(m: &HybridMeasurement, w: &FisherSet, q: Vec2, ue: Vec2, c: f64) -> f64 {
    let r = q.norm();
    let mut f = 0.0;
    if w.delay_bs > 0.0 {
        f += w.delay_bs * (m.delay_bs - 2.0 * r / c).powi(2);
    }
    if w.angle > 0.0 {
        f += w.angle * (m.aoa - scenario::array_angle(q)).powi(2);
    }
    if w.delay_ue > 0.0 {
        f += w.delay_ue * (m.delay_ue - (r + (q - ue).norm()) / c).powi(2);
    }
    f
}

/// Gauss-Newton minimiser of the Fisher-weighted squared residuals of
/// (τ_B, θ, τ_U); zero-information terms are dropped.
pub fn localize_hybrid(m: &HybridMeasurement, weights: &FisherSet, ue: Vec2, init: Vec2, c: f64) -> Result<HybridFix> {
    let terms = [weights.delay_bs, weights.angle, weights.delay_ue];
    if terms.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::Domain(format!("invalid fusion weights {weights:?}")));
    }
    if terms.iter().filter(|w| **w > 0.0).count() < 2 {
        return Err(Error::SingularGeometry("fewer than two informative measurements".into()));
    }
    if !init.is_finite() || init.norm() == 0.0 {
        return Err(Error::Domain(format!("invalid initial position {init:?}")));
    }
    let mut q = init;
    let mut f = hybrid_objective(m, weights, q, ue, c);
    for it in 1..=GN_MAX_ITER {
        let r = q.norm();
        let mut rows: Vec<(f64, Vec2, f64)> = Vec::with_capacity(3);
        if weights.delay_bs > 0.0 {
            rows.push((weights.delay_bs, q * (2.0 / (c * r)), m.delay_bs - 2.0 * r / c));
        }
        if weights.angle > 0.0 {
            rows.push((weights.angle, Vec2::new(-q.y, q.x) * (1.0 / (r * r)), m.aoa - scenario::array_angle(q)));
        }
        if weights.delay_ue > 0.0 {
            let d = q - ue;
            let dn = d.norm();
            let grad = if dn > 0.0 { q * (1.0 / r) + d * (1.0 / dn) } else { q * (1.0 / r) };
            rows.push((weights.delay_ue, grad * (1.0 / c), m.delay_ue - (r + dn) / c));
        }
        let (mut a, mut b, mut cc, mut gx, mut gy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (w, j, res) in &rows {
            a += w * j.x * j.x;
            b += w * j.x * j.y;
            cc += w * j.y * j.y;
            gx += w * j.x * res;
            gy += w * j.y * res;
        }
        let det = a * cc - b * b;
        if !(det > 1e-14 * a * cc) {
            return Err(Error::SingularGeometry("normal equations are singular".into()));
        }
        let step = Vec2::new((cc * gx - b * gy) / det, (a * gy - b * gx) / det);
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..GN_MAX_HALVINGS {
            let cand = q + step * scale;
            let fc = hybrid_objective(m, weights, cand, ue, c);
            if fc <= f {
                accepted = Some((cand, fc));
                break;
            }
            scale *= 0.5;
        }
        let Some((cand, fc)) = accepted else {
            return Ok(HybridFix { position: q, objective: f, iterations: it, converged: true });
        };
        debug_assert!(fc <= f);
        let moved = (cand - q).norm();
        q = cand;
        f = fc;
        if moved < GN_STEP_TOL {
            return Ok(HybridFix { position: q, objective: f, iterations: it, converged: true });
        }
    }
    Ok(HybridFix { position: q, objective: f, iterations: GN_MAX_ITER, converged: false })
}

/// Condition number above which the velocity map is treated as singular.
pub const VELOCITY_MAX_CONDITION: f64 = 1e12;

/// Solves f_B = 2û_t·v/λ and f_U = (û_t − û_r)·v/λ, with û_t = −q/‖q‖ and
/// û_r = −(q_U − q)/‖q_U − q‖, for v.
pub fn estimate_velocity(doppler_bs: f64, doppler_ue: f64, target: Vec2, ue: Vec2, cfg: &OfdmConfig) -> Result<Vec2> {
    let lambda = cfg.wavelength();
    let to_bs = (-target).unit();
    let to_ue = (ue - target).unit();
    if !to_bs.is_finite() || !to_ue.is_finite() {
        return Err(Error::SingularGeometry("target coincides with BS or UE".into()));
    }
    let r0 = to_bs * 2.0;
    let r1 = to_bs + to_ue;
    let det = r0.x * r1.y - r0.y * r1.x;
    // 2×2 condition number from the singular values.
    let fro2 = r0.dot(r0) + r1.dot(r1);
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    let smax2 = 0.5 * (fro2 + disc);
    let smin2 = 0.5 * (fro2 - disc);
    if !(smin2 > 0.0) || (smax2 / smin2).sqrt() > VELOCITY_MAX_CONDITION {
        return Err(Error::SingularGeometry("BS, target and UE are collinear".into()));
    }
    let fb = doppler_bs * lambda;
    let fu = doppler_ue * lambda;
    Ok(Vec2::new((r1.y * fb - r0.y * fu) / det, (r0.x * fu - r1.x * fb) / det))
}

/// One Monte-Carlo realisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub trial: u64,
    pub bs: BsEstimate,
    pub ue: UeEstimate,
    pub position_mono: Vec2,
    pub position_hybrid: Vec2,
    pub velocity: Option<Vec2>,
    pub hybrid_converged: bool,
    pub truth_aoa: f64,
    pub truth_delay_bs: f64,
    pub truth_delay_ue: f64,
    pub truth_doppler_bs: f64,
    pub truth_doppler_ue: f64,
    pub truth_position: Vec2,
    pub truth_velocity: Vec2,
    pub sq_err_mono: f64,
    pub sq_err_hybrid: f64,
    pub sq_err_velocity: Option<f64>,
}

/// Source of the fusion weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightSource {
    /// Fisher values of the true scene.
    #[default]
    Truth,
    /// Fisher values re-evaluated at the mono-static estimate.
    PlugIn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonteCarloConfig {
    /// Receive BS SNRs Υ_B [dB] to sweep; the UE SNR keeps its link-budget
    /// ratio to the BS SNR.
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub oversampling: FftOversampling,
    pub synthesis: SynthesisOptions,
    pub aggregation: AngleAggregation,
    /// Re-estimate delays after Doppler compensation.
    pub refine_delay: bool,
    pub weights: WeightSource,
    pub fisher: FisherOptions,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            snr_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            trials: 500,
            seed: 0,
            oversampling: FftOversampling::default(),
            synthesis: SynthesisOptions::default(),
            aggregation: AngleAggregation::default(),
            refine_delay: false,
            weights: WeightSource::default(),
            fisher: FisherOptions::default(),
        }
    }
}

/// Aggregate errors and bounds at one SNR point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McPoint {
    pub snr_db: f64,
    pub rmse_pos_mono: f64,
    pub rmse_pos_hybrid: f64,
    pub rmse_vel: f64,
    pub peb_mono: f64,
    pub peb_hybrid: f64,
    pub veb: f64,
    pub trials: usize,
    /// Trials whose velocity solve failed; excluded from `rmse_vel`.
    pub velocity_failures: usize,
    pub seed: u64,
}

impl McPoint {
    pub const CSV_HEADER: &'static str =
        "snr_db,rmse_pos_mono_m,rmse_pos_h_m,rmse_vel_mps,peb_mono_m,peb_h_m,veb_mps,trials,seed";
}

/// Runs `trials` independent realisations at a receive BS SNR of `snr_db`.
///
/// Trial t uses the RNG stream (seed, stream_base + t), so results are
/// identical for any thread count.
#[allow(clippy::too_many_arguments)]
pub fn run_trials(
    est: &SequentialEstimator,
    lb: &LinkBudget,
    g: &SceneGeometry,
    velocity: Vec2,
    snr_db: f64,
    mc: &MonteCarloConfig,
    stream_base: u64,
) -> Result<Vec<EstimateRecord>> {
    let cfg = est.config();
    let (snr_b0, snr_u0) = scenario::receive_snr(cfg, lb, g)?;
    let scale = scenario::db_to_linear(snr_db) / snr_b0;
    let (snr_b, snr_u) = (snr_b0 * scale, snr_u0 * scale);
    let truth_fisher = fisher::fisher_from_snr(cfg, snr_b, snr_u, g.aoa, &mc.fisher);
    (0..mc.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = signal_sim::stream_rng(mc.seed, stream_base + t);
            let ch = signal_sim::channel_from_snr(cfg, g, velocity, snr_b, snr_u, &mut rng);
            let grid_seed = rng.next_u64();
            let grid = signal_sim::remove_data(&signal_sim::synthesize(cfg, &ch, &mc.synthesis, grid_seed))?;
            let bs = est.estimate_bs(&grid)?;
            let ue = est.estimate_ue(&grid)?;
            let mono = localize_mono(bs.aoa, bs.delay, cfg);
            let weights = match mc.weights {
                WeightSource::Truth => truth_fisher,
                WeightSource::PlugIn => plug_in_weights(cfg, lb, scale, mono, g.ue, &mc.fisher).unwrap_or(truth_fisher),
            };
            let meas = HybridMeasurement { aoa: bs.aoa, delay_bs: bs.delay, delay_ue: ue.delay };
            let fix = localize_hybrid(&meas, &weights, g.ue, mono, cfg.speed_of_light)?;
            let vel = estimate_velocity(bs.doppler, ue.doppler, fix.position, g.ue, cfg).ok();
            Ok(EstimateRecord {
                trial: t,
                bs,
                ue,
                position_mono: mono,
                position_hybrid: fix.position,
                velocity: vel,
                hybrid_converged: fix.converged,
                truth_aoa: ch.aoa,
                truth_delay_bs: ch.delay_bs,
                truth_delay_ue: ch.delay_ue,
                truth_doppler_bs: ch.doppler_bs,
                truth_doppler_ue: ch.doppler_ue,
                truth_position: g.target,
                truth_velocity: velocity,
                sq_err_mono: (mono - g.target).dot(mono - g.target),
                sq_err_hybrid: (fix.position - g.target).dot(fix.position - g.target),
                sq_err_velocity: vel.map(|v| (v - velocity).dot(v - velocity)),
            })
        })
        .collect()
}

fn plug_in_weights(
    cfg: &OfdmConfig,
    lb: &LinkBudget,
    scale: f64,
    at: Vec2,
    ue: Vec2,
    opts: &FisherOptions,
) -> Result<FisherSet> {
    let g = scenario::derive_geometry(at, ue)?;
    let (b, u) = scenario::receive_snr(cfg, lb, &g)?;
    Ok(fisher::fisher_from_snr(cfg, b * scale, u * scale, g.aoa, opts))
}

/// RMSE curves and matching bounds over the SNR sweep.
pub fn monte_carlo(
    cfg: &OfdmConfig,
    lb: &LinkBudget,
    target: Vec2,
    ue: Vec2,
    velocity: Vec2,
    mc: &MonteCarloConfig,
) -> Result<Vec<McPoint>> {
    if mc.trials == 0 {
        return Err(Error::InvalidConfig("at least one trial is required".into()));
    }
    let g = scenario::derive_geometry(target, ue)?;
    let est = SequentialEstimator::new(cfg, mc.oversampling)?
        .with_aggregation(mc.aggregation)
        .with_delay_refinement(mc.refine_delay);
    let (snr_b0, snr_u0) = scenario::receive_snr(cfg, lb, &g)?;
    let mut out = Vec::with_capacity(mc.snr_db.len());
    for (i, &snr_db) in mc.snr_db.iter().enumerate() {
        let records = run_trials(&est, lb, &g, velocity, snr_db, mc, (i * mc.trials) as u64)?;
        let scale = scenario::db_to_linear(snr_db) / snr_b0;
        let fs = fisher::fisher_from_snr(cfg, snr_b0 * scale, snr_u0 * scale, g.aoa, &mc.fisher);
        let c = cfg.speed_of_light;
        out.push(summarize(
            &records,
            snr_db,
            crlb::mono_from_fisher(&fs, g.range_bs, c)?.peb,
            crlb::hybrid_position(&fs, &g, c)?.peb,
            crlb::velocity(&fs, &g, cfg.wavelength())?.veb,
            mc.seed,
        ));
    }
    Ok(out)
}

/// Root-mean-square errors of a set of records.
pub fn summarize(
    records: &[EstimateRecord],
    snr_db: f64,
    peb_mono: f64,
    peb_hybrid: f64,
    veb: f64,
    seed: u64,
) -> McPoint {
    let n = records.len() as f64;
    let rms = |sum: f64, count: f64| if count > 0.0 { (sum / count).sqrt() } else { f64::NAN };
    let vel: Vec<f64> = records.iter().filter_map(|r| r.sq_err_velocity).collect();
    McPoint {
        snr_db,
        rmse_pos_mono: rms(records.iter().map(|r| r.sq_err_mono).sum(), n),
        rmse_pos_hybrid: rms(records.iter().map(|r| r.sq_err_hybrid).sum(), n),
        rmse_vel: rms(vel.iter().sum(), vel.len() as f64),
        peb_mono,
        peb_hybrid,
        veb,
        trials: records.len(),
        velocity_failures: records.len() - vel.len(),
        seed,
    }
}
