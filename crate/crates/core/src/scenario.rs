//! Waveform configuration, BS-target-UE geometry and the SNR link budget.
//!
//! The BS sits at the origin with its transmit and receive ULAs on the y-axis,
//! so angles of arrival are measured from the x-axis and the array is only
//! unambiguous over (−π/2, π/2). Noise power per resource element is
//! normalised to one; all transmit power, antenna gain, RCS and path-loss
//! constants are folded into the distance-free SNR coefficients of
//! [`LinkBudget`].

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point or direction in the BS-anchored plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn unit(self) -> Vec2 {
        self * (1.0 / self.norm())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// OFDM waveform and array parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OfdmConfig {
    /// Carrier frequency f_c [Hz].
    pub carrier_hz: f64,
    /// Subcarrier spacing Δf [Hz].
    pub subcarrier_spacing_hz: f64,
    /// Number of subcarriers K.
    pub subcarriers: usize,
    /// Number of OFDM symbols M.
    pub symbols: usize,
    /// Transmit antennas N_T.
    pub tx_antennas: usize,
    /// Receive antennas N_R.
    pub rx_antennas: usize,
    /// Cyclic prefix length as a fraction of the useful symbol time.
    pub cp_fraction: f64,
    /// SNR penalty η ≥ 1 incurred by data removal (1 for constant envelope).
    pub data_penalty: f64,
    /// Propagation speed c [m/s].
    pub speed_of_light: f64,
}

impl Default for OfdmConfig {
    /// The 24 GHz / 120 kHz / K=100 / M=14 / 4×4 reference configuration.
    fn default() -> Self {
        Self {
            carrier_hz: 24e9,
            subcarrier_spacing_hz: 120e3,
            subcarriers: 100,
            symbols: 14,
            tx_antennas: 4,
            rx_antennas: 4,
            cp_fraction: 1.0 / 14.0,
            data_penalty: 1.0,
            speed_of_light: 3.0e8,
        }
    }
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.carrier_hz) {
            return Err(Error::InvalidConfig("carrier frequency must be positive".into()));
        }
        if !positive(self.subcarrier_spacing_hz) {
            return Err(Error::InvalidConfig("subcarrier spacing must be positive".into()));
        }
        if !positive(self.speed_of_light) {
            return Err(Error::InvalidConfig("propagation speed must be positive".into()));
        }
        if self.subcarriers < 2 || self.symbols < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 subcarriers and 2 symbols, got K={} M={}",
                self.subcarriers, self.symbols
            )));
        }
        if self.tx_antennas == 0 || self.rx_antennas == 0 {
            return Err(Error::InvalidConfig("antenna counts must be at least 1".into()));
        }
        if !(self.cp_fraction.is_finite() && self.cp_fraction >= 0.0) {
            return Err(Error::InvalidConfig("cp_fraction must be non-negative".into()));
        }
        if !(self.data_penalty.is_finite() && self.data_penalty >= 1.0) {
            return Err(Error::InvalidConfig("data penalty η must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Carrier wavelength λ_c = c / f_c.
    pub fn wavelength(&self) -> f64 {
        self.speed_of_light / self.carrier_hz
    }

    /// Useful symbol duration T = 1/Δf.
    pub fn symbol_time(&self) -> f64 {
        1.0 / self.subcarrier_spacing_hz
    }

    /// Cyclic prefix duration T_cp.
    pub fn cp_time(&self) -> f64 {
        self.symbol_time() * self.cp_fraction
    }

    /// Symbol duration including the cyclic prefix, T_s = T + T_cp.
    pub fn symbol_period(&self) -> f64 {
        self.symbol_time() * (1.0 + self.cp_fraction)
    }

    /// Occupied bandwidth W = K·Δf.
    pub fn bandwidth(&self) -> f64 {
        self.subcarriers as f64 * self.subcarrier_spacing_hz
    }

    pub(crate) fn k(&self) -> f64 {
        self.subcarriers as f64
    }

    pub(crate) fn m(&self) -> f64 {
        self.symbols as f64
    }

    pub(crate) fn nr(&self) -> f64 {
        self.rx_antennas as f64
    }
}

/// Distance-free SNR coefficients of the BS echo and the UE bistatic path.
///
/// The per-resource-element receive SNRs are `Υ_B = Ῡ_B·g/(η r_B⁴)` and
/// `Υ_U = Ῡ_U·g/(η r_B² r_U²)` where `g = β/N_T` is the beamforming gain
/// relative to a beam aimed exactly at the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// Ῡ_B, linear [m⁴].
    pub bs_coeff: f64,
    /// Ῡ_U, linear [m⁴].
    pub ue_coeff: f64,
    /// β, transmit beamforming gain toward the target, 0 < β ≤ N_T.
    pub beam_gain: f64,
}

impl LinkBudget {
    /// Both coefficients given in dB, beam aimed at the target.
    pub fn from_db(bs_db: f64, ue_db: f64, cfg: &OfdmConfig) -> Self {
        Self { bs_coeff: db_to_linear(bs_db), ue_coeff: db_to_linear(ue_db), beam_gain: cfg.tx_antennas as f64 }
    }

    pub fn validate(&self, cfg: &OfdmConfig) -> Result<()> {
        if !(self.bs_coeff.is_finite() && self.bs_coeff >= 0.0) || !(self.ue_coeff.is_finite() && self.ue_coeff >= 0.0)
        {
            return Err(Error::InvalidConfig("SNR coefficients must be finite and non-negative".into()));
        }
        let nt = cfg.tx_antennas as f64;
        if !(self.beam_gain > 0.0 && self.beam_gain <= nt * (1.0 + 1e-12)) {
            return Err(Error::InvalidConfig(format!(
                "beam gain β={} must lie in (0, N_T={}]",
                self.beam_gain, cfg.tx_antennas
            )));
        }
        Ok(())
    }

    fn scale(&self, cfg: &OfdmConfig) -> f64 {
        self.beam_gain / cfg.tx_antennas as f64 / cfg.data_penalty
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// BS-anchored target/UE geometry with the derived polar quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneGeometry {
    /// Target position q.
    pub target: Vec2,
    /// UE position q_U.
    pub ue: Vec2,
    /// r_B = ‖q‖.
    pub range_bs: f64,
    /// r_U = ‖q − q_U‖.
    pub range_ue: f64,
    /// θ, angle of arrival at the BS array, in [−π/2, π/2].
    pub aoa: f64,
    /// φ, direction of the UE seen from the target.
    pub ue_direction: f64,
    /// ψ ∈ [0, π], interior angle at the target between the BS and the UE.
    pub bistatic_angle: f64,
}

impl SceneGeometry {
    pub fn cos_bistatic(&self) -> f64 {
        self.bistatic_angle.cos()
    }

    pub fn sin_bistatic(&self) -> f64 {
        self.bistatic_angle.sin()
    }
}

/// AoA seen by a y-axis ULA: the arctangent of y/x, folded into [−π/2, π/2].
pub fn array_angle(q: Vec2) -> f64 {
    if q.x == 0.0 {
        if q.y >= 0.0 {
            PI / 2.0
        } else {
            -PI / 2.0
        }
    } else {
        (q.y / q.x).atan()
    }
}

/// Derives r_B, r_U, θ, φ and ψ for a target at `target` and UE at `ue`.
///
/// ψ is π when the UE lies beyond the target on the BS-target line and 0 when
/// it lies between them. A UE coincident with the target yields r_U = 0 and
/// ψ = π/2 by convention; only the limit operations accept that case.
pub fn derive_geometry(target: Vec2, ue: Vec2) -> Result<SceneGeometry> {
    if !target.is_finite() || !ue.is_finite() {
        return Err(Error::Domain("non-finite position".into()));
    }
    let range_bs = target.norm();
    if range_bs <= 0.0 {
        return Err(Error::Domain("target coincides with the BS".into()));
    }
    let to_ue = ue - target;
    let range_ue = to_ue.norm();
    let to_bs = -target;
    let (ue_direction, bistatic_angle) = if range_ue > 0.0 {
        // atan2 of (cross, dot) keeps full precision near collinearity.
        let psi = to_bs.cross(to_ue).abs().atan2(to_bs.dot(to_ue));
        (to_ue.y.atan2(to_ue.x), psi.clamp(0.0, PI))
    } else {
        (0.0, PI / 2.0)
    };
    Ok(SceneGeometry { target, ue, range_bs, range_ue, aoa: array_angle(target), ue_direction, bistatic_angle })
}

/// Per-resource-element receive SNRs (Υ_B, Υ_U) after data removal.
pub fn receive_snr(cfg: &OfdmConfig, lb: &LinkBudget, g: &SceneGeometry) -> Result<(f64, f64)> {
    if !(g.range_bs > 0.0) {
        return Err(Error::Domain("r_B must be positive".into()));
    }
    if !(g.range_ue > 0.0) {
        return Err(Error::Domain("r_U = 0 gives an unbounded UE SNR; use the limit bounds instead".into()));
    }
    Ok((bs_snr(cfg, lb, g.range_bs), ue_snr(cfg, lb, g.range_bs, g.range_ue)))
}

/// Υ_B at BS range `range_bs`.
pub fn bs_snr(cfg: &OfdmConfig, lb: &LinkBudget, range_bs: f64) -> f64 {
    lb.bs_coeff * lb.scale(cfg) / range_bs.powi(4)
}

/// Υ_U for the given BS-target and target-UE ranges.
pub fn ue_snr(cfg: &OfdmConfig, lb: &LinkBudget, range_bs: f64, range_ue: f64) -> f64 {
    lb.ue_coeff * lb.scale(cfg) / (range_bs * range_bs * range_ue * range_ue)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_budget(cfg: &OfdmConfig) -> LinkBudget {
        LinkBudget::from_db(98.0, 98.0, cfg)
    }

    #[test]
    fn geometry_reference_point() {
        let g = derive_geometry(Vec2::new(200.0, 50.0), Vec2::new(300.0, 0.0)).unwrap();
        assert_relative_eq!(g.range_bs, 42500f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(g.range_ue, 12500f64.sqrt(), max_relative = 1e-15);
        // (−q)·(q_U − q) = (−200)(100) + (−50)(−50) = −17500
        let cos_psi = -17500.0 / (42500f64.sqrt() * 12500f64.sqrt());
        assert_relative_eq!(g.bistatic_angle, cos_psi.acos(), max_relative = 1e-13);
        assert_relative_eq!(g.aoa, 0.25f64.atan(), max_relative = 1e-15);
    }

    #[test]
    fn collinear_cases() {
        let beyond = derive_geometry(Vec2::new(100.0, 0.0), Vec2::new(200.0, 0.0)).unwrap();
        assert_eq!(beyond.bistatic_angle, PI);
        let between = derive_geometry(Vec2::new(100.0, 0.0), Vec2::new(50.0, 0.0)).unwrap();
        assert_eq!(between.bistatic_angle, 0.0);
    }

    #[test]
    fn zero_target_is_domain_error() {
        assert!(matches!(derive_geometry(Vec2::ZERO, Vec2::new(1.0, 1.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn snr_reference_value() {
        let cfg = OfdmConfig::default();
        let lb = reference_budget(&cfg);
        let g = derive_geometry(Vec2::new(200.0, 0.0), Vec2::new(200.0, 100.0)).unwrap();
        let (ub, _) = receive_snr(&cfg, &lb, &g).unwrap();
        assert_relative_eq!(ub, 10f64.powf(9.8) / 1.6e9, max_relative = 1e-12);
        assert_relative_eq!(ub, 3.944, max_relative = 1e-3);
        let far = derive_geometry(Vec2::new(400.0, 0.0), Vec2::new(400.0, 100.0)).unwrap();
        let (ub2, _) = receive_snr(&cfg, &lb, &far).unwrap();
        assert_relative_eq!(ub / ub2, 16.0, max_relative = 1e-12);
    }

    #[test]
    fn ue_snr_scales_with_range_ratio() {
        let cfg = OfdmConfig::default();
        let lb = reference_budget(&cfg);
        let g = derive_geometry(Vec2::new(200.0, 50.0), Vec2::new(0.0, 300.0)).unwrap();
        let (ub, uu) = receive_snr(&cfg, &lb, &g).unwrap();
        let ratio = g.range_bs.powi(2) / g.range_ue.powi(2);
        assert_relative_eq!(uu, ub * ratio, max_relative = 1e-12);
    }

    #[test]
    fn zero_ue_range_rejected() {
        let cfg = OfdmConfig::default();
        let lb = reference_budget(&cfg);
        let q = Vec2::new(200.0, 50.0);
        let g = derive_geometry(q, q).unwrap();
        assert!(receive_snr(&cfg, &lb, &g).is_err());
    }

    #[test]
    fn beam_gain_and_penalty_scale_snr() {
        let mut cfg = OfdmConfig::default();
        let mut lb = reference_budget(&cfg);
        let full = bs_snr(&cfg, &lb, 100.0);
        lb.beam_gain = 2.0;
        assert_relative_eq!(bs_snr(&cfg, &lb, 100.0), full / 2.0, max_relative = 1e-14);
        cfg.data_penalty = 2.0;
        assert_relative_eq!(bs_snr(&cfg, &lb, 100.0), full / 4.0, max_relative = 1e-14);
    }

    #[test]
    fn config_validation() {
        let mut cfg = OfdmConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.subcarriers = 1;
        assert!(cfg.validate().is_err());
        let cfg = OfdmConfig { data_penalty: 0.5, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = OfdmConfig::default();
        assert_relative_eq!(cfg.wavelength(), 0.0125, max_relative = 1e-15);
        assert_relative_eq!(cfg.symbol_period(), (1.0 + 1.0 / 14.0) / 120e3, max_relative = 1e-15);
        assert_relative_eq!(cfg.bandwidth(), 12e6, max_relative = 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn mirror_across(p: Vec2, axis: Vec2) -> Vec2 {
            let u = axis.unit();
            let along = u * p.dot(u);
            along * 2.0 - p
        }

        proptest! {
            #[test]
            fn bistatic_angle_is_mirror_symmetric(
                x in 10.0f64..400.0, y in -200.0f64..200.0,
                ux in -400.0f64..400.0, uy in -400.0f64..400.0,
            ) {
                let q = Vec2::new(x, y);
                let qu = Vec2::new(ux, uy);
                prop_assume!((qu - q).norm() > 1.0);
                let mirrored = mirror_across(qu, q);
                let a = derive_geometry(q, qu).unwrap();
                let b = derive_geometry(q, mirrored).unwrap();
                prop_assert!((a.bistatic_angle - b.bistatic_angle).abs() < 1e-9);
                prop_assert!(a.bistatic_angle >= 0.0 && a.bistatic_angle <= PI);
            }

            #[test]
            fn snr_homogeneous_of_degree_minus_four(
                x in 10.0f64..400.0, y in -200.0f64..200.0,
                ux in -400.0f64..400.0, uy in -400.0f64..400.0,
                s in 0.1f64..10.0,
            ) {
                let cfg = OfdmConfig::default();
                let lb = LinkBudget::from_db(98.0, 95.0, &cfg);
                let q = Vec2::new(x, y);
                let qu = Vec2::new(ux, uy);
                prop_assume!((qu - q).norm() > 1.0);
                let g = derive_geometry(q, qu).unwrap();
                let gs = derive_geometry(q * s, qu * s).unwrap();
                let (b1, u1) = receive_snr(&cfg, &lb, &g).unwrap();
                let (b2, u2) = receive_snr(&cfg, &lb, &gs).unwrap();
                let k = s.powi(-4);
                prop_assert!((b2 / b1 / k - 1.0).abs() < 1e-10);
                prop_assert!((u2 / u1 / k - 1.0).abs() < 1e-10);
            }
        }
    }
}
