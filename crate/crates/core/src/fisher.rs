//! Scalar Fisher informations of the BS and UE sensing parameters.
//!
//! Angle and delay estimates at the BS are decoupled, and the BS and UE
//! observe independent noise, so the EFIMs of (τ_B, θ, τ_U) and
//! (f_D^B, f_D^U) are diagonal and fully described by [`FisherSet`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scenario::{self, LinkBudget, OfdmConfig, SceneGeometry};

/// Fisher information contributed by a uniform angle prior on (−π/2, π/2].
pub const ANGLE_PRIOR_INFO: f64 = 12.0 / (PI * PI);

/// Diagonal Fisher informations. Zero marks an unobservable parameter.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FisherSet {
    /// I_τB [s⁻²].
    pub delay_bs: f64,
    /// I_θ [rad⁻²].
    pub angle: f64,
    /// I_τU [s⁻²].
    pub delay_ue: f64,
    /// I_fDB [Hz⁻²].
    pub doppler_bs: f64,
    /// I_fDU [Hz⁻²].
    pub doppler_ue: f64,
}

impl FisherSet {
    pub fn is_valid(&self) -> bool {
        [self.delay_bs, self.angle, self.delay_ue, self.doppler_bs, self.doppler_ue]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
    }

    /// Same set with the UE measurements discarded.
    pub fn without_ue(mut self) -> Self {
        self.delay_ue = 0.0;
        self.doppler_ue = 0.0;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FisherOptions {
    /// Add the information of a uniform prior on θ.
    pub angle_prior: bool,
    /// Standard deviation σ_s of the BS-UE synchronisation error [s].
    pub sync_std: f64,
    /// Use the wideband approximation Δf²(K²−1) ≈ W² in the delay terms.
    pub wideband_approx: bool,
}

fn delay_aperture(cfg: &OfdmConfig, opts: &FisherOptions) -> f64 {
    let df = cfg.subcarrier_spacing_hz;
    let k = cfg.k();
    if opts.wideband_approx {
        cfg.bandwidth().powi(2)
    } else {
        df * df * (k * k - 1.0)
    }
}

/// I_τB = 2π²Δf²MK(K²−1)N_R Υ_B / 3.
pub fn fisher_delay_bs(cfg: &OfdmConfig, snr_bs: f64, opts: &FisherOptions) -> f64 {
    2.0 * PI * PI * delay_aperture(cfg, opts) * cfg.m() * cfg.k() * cfg.nr() * snr_bs / 3.0
}

/// I_θ = π²KM(N_R²−1)N_R Υ_B cos²θ / 6, plus 12/π² with the angle prior.
pub fn fisher_angle(cfg: &OfdmConfig, snr_bs: f64, aoa: f64, opts: &FisherOptions) -> f64 {
    let nr = cfg.nr();
    let cos = aoa.cos();
    let base = PI * PI * cfg.k() * cfg.m() * (nr * nr - 1.0) * nr * snr_bs * cos * cos / 6.0;
    if opts.angle_prior {
        base + ANGLE_PRIOR_INFO
    } else {
        base
    }
}

/// Base I_τU = 2π²Δf²MK(K²−1)Υ_U / 3 without synchronisation error.
pub fn fisher_delay_ue_base(cfg: &OfdmConfig, snr_ue: f64, opts: &FisherOptions) -> f64 {
    2.0 * PI * PI * delay_aperture(cfg, opts) * cfg.m() * cfg.k() * snr_ue / 3.0
}

/// Folds a Gaussian synchronisation error of std `sync_std` into I_τU.
pub fn apply_sync_error(info: f64, sync_std: f64) -> f64 {
    if sync_std <= 0.0 {
        return info;
    }
    if info.is_infinite() {
        return 1.0 / (sync_std * sync_std);
    }
    info / (1.0 + info * sync_std * sync_std)
}

/// I_τU including the synchronisation revision when σ_s > 0.
pub fn fisher_delay_ue(cfg: &OfdmConfig, snr_ue: f64, opts: &FisherOptions) -> f64 {
    apply_sync_error(fisher_delay_ue_base(cfg, snr_ue, opts), opts.sync_std)
}

/// (I_fDB, I_fDU) = 2π²T_s²KM(M²−1)/3 · (N_R Υ_B, Υ_U).
pub fn fisher_doppler(cfg: &OfdmConfig, snr_bs: f64, snr_ue: f64) -> (f64, f64) {
    let ts = cfg.symbol_period();
    let m = cfg.m();
    let common = 2.0 * PI * PI * ts * ts * cfg.k() * m * (m * m - 1.0) / 3.0;
    (common * cfg.nr() * snr_bs, common * snr_ue)
}

/// All five informations at the given receive SNRs and angle of arrival.
pub fn fisher_from_snr(cfg: &OfdmConfig, snr_bs: f64, snr_ue: f64, aoa: f64, opts: &FisherOptions) -> FisherSet {
    let (doppler_bs, doppler_ue) = fisher_doppler(cfg, snr_bs, snr_ue);
    FisherSet {
        delay_bs: fisher_delay_bs(cfg, snr_bs, opts),
        angle: fisher_angle(cfg, snr_bs, aoa, opts),
        delay_ue: fisher_delay_ue(cfg, snr_ue, opts),
        doppler_bs,
        doppler_ue,
    }
}

/// All five informations for a scene, via the link budget.
pub fn fisher_set(cfg: &OfdmConfig, lb: &LinkBudget, g: &SceneGeometry, opts: &FisherOptions) -> Result<FisherSet> {
    let (snr_bs, snr_ue) = scenario::receive_snr(cfg, lb, g)?;
    Ok(fisher_from_snr(cfg, snr_bs, snr_ue, g.aoa, opts))
}

/// BS-only informations for a target at range `range_bs` and angle `aoa`.
pub fn fisher_set_bs(cfg: &OfdmConfig, lb: &LinkBudget, range_bs: f64, aoa: f64, opts: &FisherOptions) -> FisherSet {
    let snr_bs = scenario::bs_snr(cfg, lb, range_bs);
    fisher_from_snr(cfg, snr_bs, 0.0, aoa, opts)
}
