//! Resource-element level synthesis of the BS echo and UE bistatic grids.
//!
//! After OFDM demodulation the BS sees, per antenna n, subcarrier k and
//! symbol m,
//!
//! ```text
//! y[n,k,m] = α_B b_n(θ) d[k,m] e^{−j2πkΔfτ_B} e^{j2πmT_s f_D^B} + z
//! ```
//!
//! and the UE the same single-antenna form with (α_U, τ_U, f_D^U). Noise is
//! unit-variance circular Gaussian, so |α|² is the per-element SNR before
//! data removal. Constant phases of the beamformer and of the conjugated
//! UE inner product are folded into α.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{self, LinkBudget, OfdmConfig, SceneGeometry, Vec2};

/// Deterministic RNG for the `index`-th independent work item of `seed`.
///
/// Each (seed, index) pair owns a separate ChaCha stream, so results do not
/// depend on the order in which items run.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Ground-truth channel parameters of the single target path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// α_B; |α_B|² is the pre-removal per-element SNR at the BS.
    pub gain_bs: Complex64,
    /// α_U.
    pub gain_ue: Complex64,
    /// τ_B = 2r_B/c [s].
    pub delay_bs: f64,
    /// τ_U = (r_B + r_U)/c [s].
    pub delay_ue: f64,
    /// f_D^B [Hz], positive for an approaching target.
    pub doppler_bs: f64,
    /// f_D^U [Hz].
    pub doppler_ue: f64,
    /// θ [rad].
    pub aoa: f64,
    /// Set when a delay exceeds the useful symbol time T = T_s − T_cp, where
    /// the per-subcarrier model no longer holds.
    pub exceeds_guard: bool,
}

/// Radial speeds (‖v_B‖, ‖v_U‖) of the mono-static and bistatic legs.
pub fn radial_speeds(target: Vec2, ue: Vec2, velocity: Vec2) -> (f64, f64) {
    let to_bs = (-target).unit();
    let to_ue = (ue - target).unit();
    (to_bs.dot(velocity), (to_bs + to_ue).dot(velocity))
}

/// Maps geometry and velocity to delays, Dopplers and random-phase gains.
pub fn truth_channel<R: Rng + ?Sized>(
    cfg: &OfdmConfig,
    lb: &LinkBudget,
    g: &SceneGeometry,
    velocity: Vec2,
    rng: &mut R,
) -> Result<ChannelParams> {
    let (snr_bs, snr_ue) = scenario::receive_snr(cfg, lb, g)?;
    Ok(channel_from_snr(cfg, g, velocity, snr_bs, snr_ue, rng))
}

/// As [`truth_channel`] but with explicit post-removal receive SNRs.
pub fn channel_from_snr<R: Rng + ?Sized>(
    cfg: &OfdmConfig,
    g: &SceneGeometry,
    velocity: Vec2,
    snr_bs: f64,
    snr_ue: f64,
    rng: &mut R,
) -> ChannelParams {
    let c = cfg.speed_of_light;
    let lambda = cfg.wavelength();
    let (v_bs, v_ue) = radial_speeds(g.target, g.ue, velocity);
    let delay_bs = 2.0 * g.range_bs / c;
    let delay_ue = (g.range_bs + g.range_ue) / c;
    let phase_bs = rng.random::<f64>() * 2.0 * PI;
    let phase_ue = rng.random::<f64>() * 2.0 * PI;
    // Data removal divides the SNR by η, so the pre-removal SNR is η·Υ.
    let eta = cfg.data_penalty;
    ChannelParams {
        gain_bs: Complex64::from_polar((eta * snr_bs).sqrt(), phase_bs),
        gain_ue: Complex64::from_polar((eta * snr_ue).sqrt(), phase_ue),
        delay_bs,
        delay_ue,
        doppler_bs: 2.0 * v_bs / lambda,
        doppler_ue: v_ue / lambda,
        aoa: g.aoa,
        exceeds_guard: delay_ue.max(delay_bs) >= cfg.symbol_time(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    #[default]
    Qpsk,
    Qam16,
}

impl Modulation {
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> Complex64 {
        match self {
            Modulation::Qpsk => {
                let re = if rng.random::<bool>() { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
                let im = if rng.random::<bool>() { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
                Complex64::new(re, im)
            }
            Modulation::Qam16 => {
                const LEVELS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];
                let scale = 1.0 / 10f64.sqrt();
                let re = LEVELS[rng.random_range(0..4)];
                let im = LEVELS[rng.random_range(0..4)];
                Complex64::new(re * scale, im * scale)
            }
        }
    }

    /// Exact SNR penalty η = E|d|²·E[1/|d|²] of symbol division.
    pub fn division_penalty(self) -> f64 {
        match self {
            Modulation::Qpsk => 1.0,
            // |d|² ∈ {2, 10, 10, 18}/10 with equal probability.
            Modulation::Qam16 => (10.0 / 2.0 + 2.0 * 10.0 / 10.0 + 10.0 / 18.0) / 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisOptions {
    pub modulation: Modulation,
    /// Omit the noise term.
    pub noiseless: bool,
}

/// Demodulated resource grids at the BS (N_R × K × M) and UE (K × M).
#[derive(Debug, Clone, PartialEq)]
pub struct RxGrid {
    pub rx_antennas: usize,
    pub subcarriers: usize,
    pub symbols: usize,
    /// Row-major over (antenna, subcarrier, symbol).
    pub bs: Vec<Complex64>,
    /// Row-major over (subcarrier, symbol).
    pub ue: Vec<Complex64>,
    /// Transmitted symbols d[k,m]; all ones once removed.
    pub data: Vec<Complex64>,
    pub data_removed: bool,
    pub seed: u64,
}

impl RxGrid {
    #[inline]
    pub fn bs_index(&self, n: usize, k: usize, m: usize) -> usize {
        (n * self.subcarriers + k) * self.symbols + m
    }

    #[inline]
    pub fn re_index(&self, k: usize, m: usize) -> usize {
        k * self.symbols + m
    }

    pub fn bs_at(&self, n: usize, k: usize, m: usize) -> Complex64 {
        self.bs[self.bs_index(n, k, m)]
    }

    pub fn ue_at(&self, k: usize, m: usize) -> Complex64 {
        self.ue[self.re_index(k, m)]
    }

    pub fn resource_elements(&self) -> usize {
        self.subcarriers * self.symbols
    }
}

/// Receive steering vector entry b_n(θ) of a centred half-wavelength ULA.
pub fn steering(n: usize, antennas: usize, aoa: f64) -> Complex64 {
    let offset = n as f64 - 0.5 * (antennas as f64 - 1.0);
    Complex64::from_polar(1.0, PI * offset * aoa.sin())
}

fn complex_noise<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * FRAC_1_SQRT_2
}

/// Synthesises both grids for `ch`; deterministic for a given `seed`.
pub fn synthesize(cfg: &OfdmConfig, ch: &ChannelParams, opts: &SynthesisOptions, seed: u64) -> RxGrid {
    let (nr, nk, nm) = (cfg.rx_antennas, cfg.subcarriers, cfg.symbols);
    let mut data_rng = stream_rng(seed, 0);
    let mut noise_rng = stream_rng(seed, 1);
    let data: Vec<Complex64> = (0..nk * nm).map(|_| opts.modulation.draw(&mut data_rng)).collect();

    let df = cfg.subcarrier_spacing_hz;
    let ts = cfg.symbol_period();
    let delay_phasor = |tau: f64, k: usize| Complex64::from_polar(1.0, -2.0 * PI * k as f64 * df * tau);
    let doppler_phasor = |fd: f64, m: usize| Complex64::from_polar(1.0, 2.0 * PI * m as f64 * ts * fd);

    let steer: Vec<Complex64> = (0..nr).map(|n| steering(n, nr, ch.aoa)).collect();
    let mut bs = Vec::with_capacity(nr * nk * nm);
    for b_n in &steer {
        for k in 0..nk {
            let dk = ch.gain_bs * b_n * delay_phasor(ch.delay_bs, k);
            for m in 0..nm {
                let mut v = dk * doppler_phasor(ch.doppler_bs, m) * data[k * nm + m];
                if !opts.noiseless {
                    v += complex_noise(&mut noise_rng);
                }
                bs.push(v);
            }
        }
    }
    let mut ue = Vec::with_capacity(nk * nm);
    for k in 0..nk {
        let dk = ch.gain_ue * delay_phasor(ch.delay_ue, k);
        for m in 0..nm {
            let mut v = dk * doppler_phasor(ch.doppler_ue, m) * data[k * nm + m];
            if !opts.noiseless {
                v += complex_noise(&mut noise_rng);
            }
            ue.push(v);
        }
    }
    RxGrid { rx_antennas: nr, subcarriers: nk, symbols: nm, bs, ue, data, data_removed: false, seed }
}

/// Divides every resource element by its (known) data symbol.
pub fn remove_data(grid: &RxGrid) -> Result<RxGrid> {
    if grid.data.iter().any(|d| d.norm_sqr() == 0.0) {
        return Err(Error::Domain("zero-magnitude data symbol cannot be divided out".into()));
    }
    let re = grid.resource_elements();
    let bs = grid.bs.iter().enumerate().map(|(i, y)| y / grid.data[i % re]).collect();
    let ue = grid.ue.iter().zip(&grid.data).map(|(y, d)| y / d).collect();
    Ok(RxGrid { bs, ue, data: vec![Complex64::new(1.0, 0.0); re], data_removed: true, ..grid.clone() })
}
