//! Closed-form position and velocity bounds of hybrid sensing.
//!
//! Every closed form is evaluated in the polar parameterisation
//! (r_B, r_U, ψ) of [`SceneGeometry`]. The [`oracle`] submodule computes
//! the same quantities the long way, as tr((JᵀIJ)⁻¹) with Cartesian
//! Jacobians, and is what the closed forms are tested against.
//!
//! Unobservable configurations yield `f64::INFINITY`, not an error.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::{self, FisherOptions, FisherSet};
use crate::scenario::{self, LinkBudget, OfdmConfig, SceneGeometry, Vec2};

/// |sin ψ| below this is treated as exact collinearity.
pub const COLLINEAR_TOL: f64 = 1e-12;

/// The three Fisher terms that enter a position bound.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PositionTerms {
    pub delay_bs: f64,
    pub angle: f64,
    pub delay_ue: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionBound {
    /// Trace of the position CRLB [m²]; `INFINITY` when unobservable.
    pub crlb: f64,
    /// Position error bound √crlb [m].
    pub peb: f64,
    pub components: PositionTerms,
}

impl PositionBound {
    fn new(crlb: f64, fs: &FisherSet) -> Self {
        Self {
            crlb,
            peb: crlb.sqrt(),
            components: PositionTerms { delay_bs: fs.delay_bs, angle: fs.angle, delay_ue: fs.delay_ue },
        }
    }

    pub fn is_finite(&self) -> bool {
        self.crlb.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityBound {
    /// Trace of the velocity CRLB [m²/s²].
    pub crlb: f64,
    /// Velocity error bound √crlb [m/s].
    pub veb: f64,
}

impl VelocityBound {
    fn new(crlb: f64) -> Self {
        Self { crlb, veb: crlb.sqrt() }
    }
}

fn check(fs: &FisherSet) -> Result<()> {
    if fs.is_valid() {
        Ok(())
    } else {
        Err(Error::Domain(format!("Fisher informations must be finite and ≥ 0: {fs:?}")))
    }
}

fn ratio_or_inf(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

/// (sin²ψ, 1 + cos ψ, 1 − cos ψ) with the collinear snap applied.
fn trig(psi: f64) -> (f64, f64, f64) {
    let s = psi.sin();
    let half = 0.5 * psi;
    let one_plus = 2.0 * half.cos().powi(2);
    let one_minus = 2.0 * half.sin().powi(2);
    if s.abs() < COLLINEAR_TOL {
        let (p, m) = if psi > PI / 2.0 { (0.0, 2.0) } else { (2.0, 0.0) };
        (0.0, p, m)
    } else {
        (s * s, one_plus, one_minus)
    }
}

/// Hybrid position CRLB C_h(q, q_U) from the three diagonal Fisher terms.
pub fn hybrid_position(fs: &FisherSet, g: &SceneGeometry, c: f64) -> Result<PositionBound> {
    check(fs)?;
    let (a, b, u) = (fs.delay_bs, fs.angle, fs.delay_ue);
    let r2 = g.range_bs * g.range_bs;
    let c2 = c * c;
    let (s2, p, _) = trig(g.bistatic_angle);
    let num = 4.0 * c2 * r2 * a + c2 * c2 * b + 2.0 * c2 * r2 * p * u;
    let den = 4.0 * c2 * a * b + 4.0 * r2 * a * u * s2 + c2 * b * u * p * p;
    Ok(PositionBound::new(ratio_or_inf(num, den), fs))
}

/// Mono-static CRLB r_B²/I_θ + c²/(4I_τB) from Fisher values.
pub fn mono_from_fisher(fs: &FisherSet, range_bs: f64, c: f64) -> Result<PositionBound> {
    check(fs)?;
    let angle_term = ratio_or_inf(range_bs * range_bs, fs.angle);
    let range_term = ratio_or_inf(c * c, 4.0 * fs.delay_bs);
    Ok(PositionBound::new(angle_term + range_term, &fs.without_ue()))
}

/// Mono-static CRLB of a target at `target` from the link budget.
///
/// Infinite when N_R = 1 without an angle prior, or for an endfire target.
pub fn mono_position(cfg: &OfdmConfig, lb: &LinkBudget, target: Vec2, opts: &FisherOptions) -> Result<PositionBound> {
    let range_bs = target.norm();
    if !(range_bs > 0.0) || !target.is_finite() {
        return Err(Error::Domain("target must be away from the BS".into()));
    }
    let fs = fisher::fisher_set_bs(cfg, lb, range_bs, scenario::array_angle(target), opts);
    mono_from_fisher(&fs, range_bs, cfg.speed_of_light)
}

/// Position-independent constants c₁…c₆ of the closed forms.
///
/// `C_mono = c₁r_B⁶/cos²θ + c₂r_B⁴`, the delay-only hybrid bound
/// `c₃r_B²r_U²/sin²ψ + c₄r_B⁴/(1−cosψ)` and the velocity bound
/// `c₅r_B²r_U²/sin²ψ + c₆r_B⁴/(1−cosψ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
}

impl BoundCoefficients {
    pub fn new(cfg: &OfdmConfig, lb: &LinkBudget, opts: &FisherOptions) -> Self {
        // Fisher informations at unit distances; every bound term is c²,
        // r_B² or λ² over one of these, times the distance power.
        let bs = scenario::bs_snr(cfg, lb, 1.0);
        let ue = scenario::ue_snr(cfg, lb, 1.0, 1.0);
        let no_prior = FisherOptions { angle_prior: false, sync_std: 0.0, ..*opts };
        let i_tau_b = fisher::fisher_delay_bs(cfg, bs, &no_prior);
        let i_theta = fisher::fisher_angle(cfg, bs, 0.0, &no_prior);
        let i_tau_u = fisher::fisher_delay_ue_base(cfg, ue, &no_prior);
        let (i_fd_b, i_fd_u) = fisher::fisher_doppler(cfg, bs, ue);
        let c2 = cfg.speed_of_light.powi(2);
        let lam2 = cfg.wavelength().powi(2);
        Self {
            c1: 1.0 / i_theta,
            c2: c2 / (4.0 * i_tau_b),
            c3: c2 / i_tau_u,
            c4: c2 / (2.0 * i_tau_b),
            c5: lam2 / i_fd_u,
            c6: lam2 / (2.0 * i_fd_b),
        }
    }

    pub fn mono(&self, range_bs: f64, aoa: f64) -> f64 {
        let r4 = range_bs.powi(4);
        ratio_or_inf(self.c1 * r4 * range_bs * range_bs, aoa.cos().powi(2)) + self.c2 * r4
    }

    pub fn single_antenna(&self, g: &SceneGeometry) -> f64 {
        two_leg_form(self.c3, self.c4, g)
    }

    pub fn velocity(&self, g: &SceneGeometry) -> f64 {
        two_leg_form(self.c5, self.c6, g)
    }
}

fn two_leg_form(bistatic: f64, mono: f64, g: &SceneGeometry) -> f64 {
    let (s2, _, m) = trig(g.bistatic_angle);
    let rb2 = g.range_bs * g.range_bs;
    ratio_or_inf(bistatic * rb2 * g.range_ue * g.range_ue, s2) + ratio_or_inf(mono * rb2 * rb2, m)
}

/// Delay-only hybrid CRLB c²/(I_τU sin²ψ) + c²/(2(1−cosψ)I_τB), valid when I_θ = 0.
pub fn single_antenna_position(fs: &FisherSet, g: &SceneGeometry, c: f64) -> Result<PositionBound> {
    check(fs)?;
    let (s2, _, m) = trig(g.bistatic_angle);
    let c2 = c * c;
    let crlb = ratio_or_inf(c2, fs.delay_ue * s2) + ratio_or_inf(c2, 2.0 * m * fs.delay_bs);
    Ok(PositionBound::new(crlb, &FisherSet { angle: 0.0, ..*fs }))
}

/// Net CRLB reduction Δ_C = C_mono − C_h from fusing the UE delay.
pub fn fusion_gain(fs: &FisherSet, g: &SceneGeometry, c: f64) -> Result<f64> {
    check(fs)?;
    let (a, b, u) = (fs.delay_bs, fs.angle, fs.delay_ue);
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain("mono-static bound is infinite; fusion gain undefined".into()));
    }
    let r2 = g.range_bs * g.range_bs;
    let c2 = c * c;
    let (s2, p, _) = trig(g.bistatic_angle);
    let num = 16.0 * a * a * r2 * r2 * s2 + c2 * c2 * b * b * p * p;
    let den = 4.0 * c2 * a * b + 4.0 * r2 * a * u * s2 + c2 * b * u * p * p;
    Ok(u / (4.0 * a * b) * num / den)
}

/// The I_τU → ∞ floor min{c²/(4I_τB), r_B²/I_θ}.
pub fn position_limit(fs: &FisherSet, g: &SceneGeometry, c: f64) -> Result<PositionBound> {
    check(fs)?;
    let range_term = ratio_or_inf(c * c, 4.0 * fs.delay_bs);
    let angle_term = ratio_or_inf(g.range_bs * g.range_bs, fs.angle);
    Ok(PositionBound::new(range_term.min(angle_term), &FisherSet { delay_ue: f64::INFINITY, ..*fs }))
}

/// Velocity CRLB λ²/(I_fDU sin²ψ) + λ²/(2I_fDB(1−cosψ)).
pub fn velocity(fs: &FisherSet, g: &SceneGeometry, wavelength: f64) -> Result<VelocityBound> {
    check(fs)?;
    let (s2, _, m) = trig(g.bistatic_angle);
    let l2 = wavelength * wavelength;
    let crlb = ratio_or_inf(l2, fs.doppler_ue * s2) + ratio_or_inf(l2, 2.0 * fs.doppler_bs * m);
    Ok(VelocityBound::new(crlb))
}

/// Bistatic angle minimising the two-leg bounds for Fisher ratio ρ = I_B/I_U.
pub fn optimal_bistatic_angle(rho: f64) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("Fisher ratio must be positive and finite, got {rho}")));
    }
    // 2√(ρ(ρ+1)) − 2ρ − 1 rewritten to avoid cancellation for large ρ.
    let cos = -1.0 / (2.0 * (rho * (rho + 1.0)).sqrt() + 2.0 * rho + 1.0);
    Ok(cos.clamp(-1.0, 1.0).acos())
}

/// Sensing modes of the summary table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensingMode {
    Mono,
    Bistatic,
    Hybrid,
}

impl SensingMode {
    /// Keeps only the Fisher terms the mode can observe.
    pub fn restrict(self, fs: &FisherSet) -> FisherSet {
        match self {
            SensingMode::Mono => fs.without_ue(),
            SensingMode::Bistatic => FisherSet { delay_bs: 0.0, angle: 0.0, doppler_bs: 0.0, ..*fs },
            SensingMode::Hybrid => *fs,
        }
    }
}

/// One column of the position/velocity summary table.
pub fn mode_bounds(
    mode: SensingMode,
    fs: &FisherSet,
    g: &SceneGeometry,
    cfg: &OfdmConfig,
) -> Result<(PositionBound, VelocityBound)> {
    let restricted = mode.restrict(fs);
    Ok((hybrid_position(&restricted, g, cfg.speed_of_light)?, velocity(&restricted, g, cfg.wavelength())?))
}

pub mod oracle {
    //! tr((JᵀIJ)⁻¹) from Cartesian Jacobians, with diagonal I.

    use super::*;

    /// Which bound the oracle evaluates.
    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum Quantity {
        Position,
        Velocity,
    }

    /// Trace of the inverse of Σ wᵢ jᵢjᵢᵀ for rows jᵢ and weights wᵢ.
    fn trace_inverse(rows: &[(Vec2, f64)]) -> f64 {
        let (mut a, mut c) = (0.0, 0.0);
        for &(j, w) in rows {
            a += w * j.x * j.x;
            c += w * j.y * j.y;
        }
        // Cauchy-Binet: det = Σ_{i<k} wᵢw_k (jᵢ × j_k)², free of cancellation.
        let mut det = 0.0;
        for (i, &(ji, wi)) in rows.iter().enumerate() {
            for &(jk, wk) in &rows[i + 1..] {
                det += wi * wk * ji.cross(jk).powi(2);
            }
        }
        if !(det > 1e-12 * a * c) {
            return f64::INFINITY;
        }
        (a + c) / det
    }

    /// Position CRLB through the Jacobian of (τ_B, θ, τ_U) w.r.t. (x, y).
    pub fn position_trace(fs: &FisherSet, target: Vec2, ue: Vec2, c: f64) -> f64 {
        let (x, y) = (target.x, target.y);
        let rb = target.norm();
        let rb2 = rb * rb;
        let tau_b = Vec2::new(2.0 * x / (c * rb), 2.0 * y / (c * rb));
        let theta = Vec2::new(-y / rb2, x / rb2);
        let diff = target - ue;
        let ru = diff.norm();
        let tau_u = if ru > 0.0 {
            Vec2::new(x / (c * rb) + diff.x / (c * ru), y / (c * rb) + diff.y / (c * ru))
        } else {
            Vec2::ZERO
        };
        trace_inverse(&[(tau_b, fs.delay_bs), (theta, fs.angle), (tau_u, fs.delay_ue)])
    }

    /// Velocity CRLB through the Jacobian of (f_D^B, f_D^U) w.r.t. (v_x, v_y).
    pub fn velocity_trace(fs: &FisherSet, target: Vec2, ue: Vec2, wavelength: f64) -> f64 {
        let to_bs = (-target).unit();
        let to_ue = (ue - target).unit();
        let mono = to_bs * (2.0 / wavelength);
        let bistatic = (to_bs + to_ue) * (1.0 / wavelength);
        trace_inverse(&[(mono, fs.doppler_bs), (bistatic, fs.doppler_ue)])
    }

    pub fn numeric_bound(fs: &FisherSet, target: Vec2, ue: Vec2, cfg: &OfdmConfig, which: Quantity) -> f64 {
        match which {
            Quantity::Position => position_trace(fs, target, ue, cfg.speed_of_light),
            Quantity::Velocity => velocity_trace(fs, target, ue, cfg.wavelength()),
        }
    }
}
