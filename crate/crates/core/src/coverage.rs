//! Coverage areas, the admissible UE region around a target and the PEB
//! distribution under Poisson UE deployment.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crlb::{self, BoundCoefficients};
use crate::error::{Error, Result};
use crate::fisher::{self, FisherOptions, FisherSet};
use crate::scenario::{self, LinkBudget, OfdmConfig, SceneGeometry, Vec2};
use crate::signal_sim::stream_rng;

/// Leading coefficient √π·Γ(5/6)/Γ(4/3)·(π²/6)^{1/3} of the mono coverage.
pub const MONO_LEADING_COEFF: f64 = 2.6448;
/// Correction coefficient π/96 of the mono coverage.
pub const MONO_CORRECTION_COEFF: f64 = 0.0327;

/// Axis-aligned rectangle [m].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min: Vec2,
    pub max: Vec2,
}

impl BBox {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Self { min, max }
    }

    /// Square of half-width `half` centred on `centre`.
    pub fn around(centre: Vec2, half: f64) -> Self {
        Self { min: centre - Vec2::new(half, half), max: centre + Vec2::new(half, half) }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageQuery {
    /// PEB threshold γ_p [m].
    pub peb_threshold: f64,
    /// Optional VEB threshold γ_v [m/s].
    pub veb_threshold: Option<f64>,
    pub region: BBox,
    /// Cell edge [m].
    pub cell: f64,
    /// Count only cells with x > 0.
    pub right_half_only: bool,
}

impl CoverageQuery {
    pub fn validate(&self) -> Result<()> {
        if !(self.peb_threshold > 0.0) || !self.peb_threshold.is_finite() {
            return Err(Error::Domain(format!("PEB threshold must be positive, got {}", self.peb_threshold)));
        }
        if let Some(v) = self.veb_threshold {
            if !(v > 0.0) {
                return Err(Error::Domain(format!("VEB threshold must be positive, got {v}")));
            }
        }
        if !(self.cell > 0.0) || !self.cell.is_finite() {
            return Err(Error::Domain(format!("cell size must be positive, got {}", self.cell)));
        }
        if !(self.region.width() > 0.0 && self.region.height() > 0.0) {
            return Err(Error::Domain("coverage region is empty".into()));
        }
        Ok(())
    }
}

/// Farthest range at which any mode can meet γ_p: the hybrid bound never
/// drops below min(c₂r⁴, c₁r⁶), so beyond both roots coverage is impossible.
pub fn coverage_radius_bound(coeffs: &BoundCoefficients, peb_threshold: f64) -> f64 {
    let g2 = peb_threshold * peb_threshold;
    (g2 / coeffs.c2).powf(0.25).max((g2 / coeffs.c1).powf(1.0 / 6.0))
}

/// Query covering every point that can meet γ_p, with a 2% margin.
pub fn auto_query(coeffs: &BoundCoefficients, peb_threshold: f64, cell: f64) -> CoverageQuery {
    let r = coverage_radius_bound(coeffs, peb_threshold) * 1.02;
    CoverageQuery {
        peb_threshold,
        veb_threshold: None,
        region: BBox::around(Vec2::ZERO, r),
        cell,
        right_half_only: false,
    }
}

/// Mono coverage from the first-order closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonoCoverage {
    /// Area [m²], both lobes, clamped at zero.
    pub area: f64,
    /// Unclamped value; negative means the approximation broke down.
    pub raw: f64,
    pub clamped: bool,
}

/// 2.6448 γ^{2/3}(N_R(N_R²−1)KMῩ_B)^{1/3} − 0.0327 c²(N_R²−1)/(Δf²(K²−1)).
pub fn coverage_mono_closed(cfg: &OfdmConfig, lb: &LinkBudget, peb_threshold: f64) -> Result<MonoCoverage> {
    cfg.validate()?;
    lb.validate(cfg)?;
    if !(peb_threshold > 0.0) {
        return Err(Error::Domain(format!("PEB threshold must be positive, got {peb_threshold}")));
    }
    let (nr, k, m) = (cfg.nr(), cfg.k(), cfg.m());
    let coeff = scenario::bs_snr(cfg, lb, 1.0);
    let lead = MONO_LEADING_COEFF * peb_threshold.powf(2.0 / 3.0) * (nr * (nr * nr - 1.0) * k * m * coeff).cbrt();
    let corr = MONO_CORRECTION_COEFF * cfg.speed_of_light.powi(2) * (nr * nr - 1.0)
        / (cfg.subcarrier_spacing_hz.powi(2) * (k * k - 1.0));
    let raw = lead - corr;
    Ok(MonoCoverage { area: raw.max(0.0), raw, clamped: raw < 0.0 })
}

/// Exact mono coverage by polar quadrature: for each θ solve
/// c₁s³/cos²θ + c₂s² = γ² for s = r² and integrate s over θ (both lobes).
pub fn coverage_mono_quadrature(coeffs: &BoundCoefficients, peb_threshold: f64, intervals: usize) -> f64 {
    let g2 = peb_threshold * peb_threshold;
    let s_of = |theta: f64| {
        let cos2 = theta.cos().powi(2);
        if cos2 <= 0.0 {
            return 0.0;
        }
        let f = |s: f64| coeffs.c1 * s * s * s / cos2 + coeffs.c2 * s * s - g2;
        // Bracket the unique positive root, then bisect.
        let mut hi = (g2 * cos2 / coeffs.c1).cbrt().min((g2 / coeffs.c2).sqrt());
        while f(hi) < 0.0 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    simpson(s_of, -PI / 2.0, PI / 2.0, intervals)
}

/// Composite Simpson rule with an even number of intervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals.max(2) + intervals % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Mono,
    Hybrid,
    /// Hybrid PEB and VEB thresholds together.
    Joint,
}

/// Cell-counted coverage with its indicator grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageMap {
    pub area: f64,
    pub cols: usize,
    pub rows: usize,
    pub region: BBox,
    pub cell: f64,
    /// Row-major from `region.min`, row index along y.
    pub covered: Vec<bool>,
}

impl CoverageMap {
    pub fn cell_centre(&self, row: usize, col: usize) -> Vec2 {
        self.region.min + Vec2::new((col as f64 + 0.5) * self.cell, (row as f64 + 0.5) * self.cell)
    }
}

/// Per-point bounds used by maps: PEB (mono or hybrid) and VEB.
pub fn point_bounds(
    cfg: &OfdmConfig,
    lb: &LinkBudget,
    target: Vec2,
    ue: Option<Vec2>,
    opts: &FisherOptions,
) -> Result<(f64, f64, f64)> {
    let c = cfg.speed_of_light;
    match ue {
        None => {
            let r = target.norm();
            if !(r > 0.0) {
                return Err(Error::Domain("target at the BS".into()));
            }
            let fs = fisher::fisher_set_bs(cfg, lb, r, scenario::array_angle(target), opts);
            let mono = crlb::mono_from_fisher(&fs, r, c)?.peb;
            Ok((mono, mono, f64::INFINITY))
        }
        Some(ue) => {
            let g = scenario::derive_geometry(target, ue)?;
            let fs = fisher::fisher_set(cfg, lb, &g, opts)?;
            Ok((
                crlb::mono_from_fisher(&fs, g.range_bs, c)?.peb,
                crlb::hybrid_position(&fs, &g, c)?.peb,
                crlb::velocity(&fs, &g, cfg.wavelength())?.veb,
            ))
        }
    }
}

/// Indicator-integral coverage over the query grid.
pub fn coverage_numeric(
    cfg: &OfdmConfig,
    lb: &LinkBudget,
    ue: Option<Vec2>,
    query: &CoverageQuery,
    criterion: Criterion,
    opts: &FisherOptions,
) -> Result<CoverageMap> {
    query.validate()?;
    cfg.validate()?;
    lb.validate(cfg)?;
    let needs_ue = matches!(criterion, Criterion::Hybrid | Criterion::Joint);
    if needs_ue && ue.is_none() {
        return Err(Error::InvalidConfig(format!("{criterion:?} coverage needs a UE position")));
    }
    if criterion == Criterion::Joint && query.veb_threshold.is_none() {
        return Err(Error::InvalidConfig("joint coverage needs a VEB threshold".into()));
    }
    let cols = (query.region.width() / query.cell).round().max(1.0) as usize;
    let rows = (query.region.height() / query.cell).round().max(1.0) as usize;
    let map = CoverageMap { area: 0.0, cols, rows, region: query.region, cell: query.cell, covered: Vec::new() };
    let gp = query.peb_threshold;
    let gv = query.veb_threshold.unwrap_or(f64::INFINITY);
    let ue_for_eval = if needs_ue { ue } else { None };
    let covered: Vec<bool> = (0..rows)
        .into_par_iter()
        .flat_map_iter(|row| {
            let map = &map;
            (0..cols).map(move |col| {
                let q = map.cell_centre(row, col);
                if query.right_half_only && q.x <= 0.0 {
                    return false;
                }
                match point_bounds(cfg, lb, q, ue_for_eval, opts) {
                    Ok((mono, hybrid, veb)) => match criterion {
                        Criterion::Mono => mono <= gp,
                        Criterion::Hybrid => hybrid <= gp,
                        Criterion::Joint => hybrid <= gp && veb <= gv,
                    },
                    Err(_) => false,
                }
            })
        })
        .collect();
    let count = covered.iter().filter(|c| **c).count();
    Ok(CoverageMap { area: count as f64 * query.cell * query.cell, covered, ..map })
}

/// Hybrid coverage for UEs placed on the positive x-axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeSweep {
    pub positions: Vec<f64>,
    pub areas: Vec<f64>,
    pub best_position: f64,
    pub best_area: f64,
}

pub fn optimal_ue_sweep(
    cfg: &OfdmConfig,
    lb: &LinkBudget,
    ue_x: &[f64],
    query: &CoverageQuery,
    opts: &FisherOptions,
) -> Result<UeSweep> {
    if ue_x.is_empty() {
        return Err(Error::InvalidConfig("empty UE sweep".into()));
    }
    let mut areas = Vec::with_capacity(ue_x.len());
    for &x in ue_x {
        areas.push(coverage_numeric(cfg, lb, Some(Vec2::new(x, 0.0)), query, Criterion::Hybrid, opts)?.area);
    }
    let mut best = 0;
    for (i, a) in areas.iter().enumerate() {
        if *a > areas[best] {
            best = i;
        }
    }
    Ok(UeSweep { positions: ue_x.to_vec(), best_position: ue_x[best], best_area: areas[best], areas })
}

/// Which part of the polar loop bounds the admissible UE region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionBranch {
    /// γ_p ≤ PEB_limit: no UE position suffices.
    Empty,
    FullLoop,
    PartialLoop,
    /// γ_p ≥ PEB_mono: the target is met without any UE.
    AllPlane,
}

/// Constants of the boundary r_U²(ψ) = K·(1+cosψ)(P₁ − P₂cosψ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionShape {
    /// K = Ĩ_τU / (c²(C_mono − γ²)).
    pub scale: f64,
    pub p1: f64,
    pub p2: f64,
}

impl RegionShape {
    /// r_U² at bistatic angle ψ; negative outside the admissible arc.
    pub fn radius_sq(&self, psi: f64) -> f64 {
        let c = psi.cos();
        self.scale * (1.0 + c) * (self.p1 - self.p2 * c)
    }

    /// Admissible ψ-interval within [0, π], or `None` when empty.
    pub fn arc(&self) -> Option<(f64, f64)> {
        let (p1, p2) = (self.p1, self.p2);
        if p2 == 0.0 {
            return (p1 >= 0.0).then_some((0.0, PI));
        }
        let x0 = p1 / p2;
        if p2 > 0.0 {
            // cos ψ ≤ x0
            if x0 >= 1.0 {
                Some((0.0, PI))
            } else if x0 < -1.0 {
                None
            } else {
                Some((x0.acos(), PI))
            }
        } else if x0 <= -1.0 {
            Some((0.0, PI))
        } else if x0 > 1.0 {
            None
        } else {
            Some((0.0, x0.acos()))
        }
    }

    fn antiderivative(&self, psi: f64) -> f64 {
        let (p1, p2) = (self.p1, self.p2);
        p1 * psi + (p1 - p2) * psi.sin() - p2 * (psi / 2.0 + (2.0 * psi).sin() / 4.0)
    }

    /// Polar area of the region: 2·½∫ r_U² dψ over the arc in [0, π].
    pub fn area(&self) -> f64 {
        match self.arc() {
            None => 0.0,
            Some((lo, hi)) => self.scale * (self.antiderivative(hi) - self.antiderivative(lo)),
        }
    }
}

/// f₂(P₁,P₂) = (P₁ − P₂/2)·acos(−P₁/P₂) + (P₂ − P₁/2)·√(1 − P₁²/P₂²).
pub fn partial_loop_factor(p1: f64, p2: f64) -> f64 {
    let x = (p1 / p2).clamp(-1.0, 1.0);
    (p1 - p2 / 2.0) * (-x).acos() + (p2 - p1 / 2.0) * (1.0 - x * x).sqrt()
}

/// Two-branch area: f₁(P₁ − P₂/2) on the full loop, f₁f₂/π on the partial
/// loop, with f₁ = πĨ_τU/(c²(C_mono − γ²)). Valid for P₂ > 0.
pub fn two_branch_area(shape: &RegionShape, full_loop: bool) -> f64 {
    let f1 = PI * shape.scale;
    if full_loop {
        f1 * (shape.p1 - shape.p2 / 2.0)
    } else {
        f1 * partial_loop_factor(shape.p1, shape.p2) / PI
    }
}

/// UE positions around a target that bring its PEB below γ_p.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeRegion {
    pub target: Vec2,
    pub peb_threshold: f64,
    pub branch: RegionBranch,
    /// Closed-form area [m²]; infinite for `AllPlane`.
    pub area: f64,
    pub shape: Option<RegionShape>,
    /// (ψ, r_U) boundary samples for ψ ∈ [0, π]; mirror for ψ < 0.
    pub boundary: Vec<(f64, f64)>,
    pub peb_mono: f64,
    pub peb_limit: f64,
}

impl UeRegion {
    /// Boundary point for bistatic angle ψ (signed: side of the BS-target line).
    pub fn boundary_point(&self, psi: f64, radius: f64) -> Vec2 {
        let axis = (-self.target).unit();
        let (s, c) = psi.sin_cos();
        let dir = Vec2::new(axis.x * c - axis.y * s, axis.x * s + axis.y * c);
        self.target + dir * radius
    }

    pub fn contains(&self, ue: Vec2) -> bool {
        match self.branch {
            RegionBranch::Empty => false,
            RegionBranch::AllPlane => true,
            _ => {
                let Some(shape) = self.shape else { return false };
                let Ok(g) = scenario::derive_geometry(self.target, ue) else { return false };
                g.range_ue * g.range_ue <= shape.radius_sq(g.bistatic_angle)
            }
        }
    }
}

/// Ĩ_τU = I_τU·r_U² for a target at range r_B.
pub fn ue_delay_info_scale(cfg: &OfdmConfig, lb: &LinkBudget, range_bs: f64, opts: &FisherOptions) -> f64 {
    fisher::fisher_delay_ue_base(cfg, scenario::ue_snr(cfg, lb, range_bs, 1.0), opts)
}

const REGION_SAMPLES: usize = 721;

/// Admissible UE region for target `q` and PEB threshold γ_p.
pub fn ue_admissible_region(
    cfg: &OfdmConfig,
    lb: &LinkBudget,
    target: Vec2,
    peb_threshold: f64,
    opts: &FisherOptions,
) -> Result<UeRegion> {
    if opts.sync_std > 0.0 {
        return Err(Error::InvalidConfig("the admissible-region closed form assumes perfect synchronisation".into()));
    }
    if !(peb_threshold > 0.0) || !target.is_finite() || target.norm() == 0.0 {
        return Err(Error::Domain(format!("invalid target {target:?} or threshold {peb_threshold}")));
    }
    let c = cfg.speed_of_light;
    let rb = target.norm();
    let fs = fisher::fisher_set_bs(cfg, lb, rb, scenario::array_angle(target), opts);
    let a = fs.delay_bs;
    let b = fs.angle;
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::SingularGeometry("mono-static Fisher information is zero".into()));
    }
    let range_term = c * c / (4.0 * a);
    let angle_term = rb * rb / b;
    let c_mono = range_term + angle_term;
    let limit = range_term.min(angle_term);
    let g2 = peb_threshold * peb_threshold;
    let mut region = UeRegion {
        target,
        peb_threshold,
        branch: RegionBranch::Empty,
        area: 0.0,
        shape: None,
        boundary: Vec::new(),
        peb_mono: c_mono.sqrt(),
        peb_limit: limit.sqrt(),
    };
    if g2 <= limit {
        return Ok(region);
    }
    if g2 >= c_mono {
        region.branch = RegionBranch::AllPlane;
        region.area = f64::INFINITY;
        return Ok(region);
    }
    let tilde = ue_delay_info_scale(cfg, lb, rb, opts);
    let shape = RegionShape {
        scale: tilde / (c * c * (c_mono - g2)),
        p1: g2 * (angle_term + range_term) - rb * rb * c * c / (2.0 * a * b),
        p2: g2 * (angle_term - range_term),
    };
    region.shape = Some(shape);
    region.branch = match shape.arc() {
        Some((lo, hi)) if lo == 0.0 && hi == PI => RegionBranch::FullLoop,
        Some(_) => RegionBranch::PartialLoop,
        None => RegionBranch::Empty,
    };
    region.area = shape.area();
    region.boundary = (0..REGION_SAMPLES)
        .map(|i| {
            let psi = PI * i as f64 / (REGION_SAMPLES - 1) as f64;
            (psi, shape.radius_sq(psi).max(0.0).sqrt())
        })
        .collect();
    Ok(region)
}

/// Region area without the closed form: the boundary radius on each ray is
/// found by root-finding the hybrid bound, then r_U² is integrated over ψ.
pub fn ue_region_area_quadrature(
    cfg: &OfdmConfig,
    lb: &LinkBudget,
    target: Vec2,
    peb_threshold: f64,
    opts: &FisherOptions,
    intervals: usize,
) -> Result<f64> {
    if !(peb_threshold > 0.0) || !target.is_finite() || target.norm() == 0.0 {
        return Err(Error::Domain(format!("invalid target {target:?} or threshold {peb_threshold}")));
    }
    let rb = target.norm();
    let fs = fisher::fisher_set_bs(cfg, lb, rb, scenario::array_angle(target), opts);
    let tilde = ue_delay_info_scale(cfg, lb, rb, opts);
    let g2 = peb_threshold * peb_threshold;
    let c = cfg.speed_of_light;
    if crlb::mono_from_fisher(&fs, rb, c)?.crlb <= g2 {
        return Ok(f64::INFINITY);
    }
    let fs = FisherSet { delay_ue: 0.0, doppler_ue: 0.0, ..fs };
    Ok(simpson(|psi| boundary_radius_sq_by_root(&fs, rb, tilde, psi, g2, c), 0.0, PI, intervals))
}

/// r_U² on the ray at bistatic angle ψ where the hybrid CRLB equals γ²,
/// found by bisection on I_τU (the bound is monotone in it); 0 if no UE
/// information level reaches γ².
pub fn boundary_radius_sq_by_root(fs: &FisherSet, range_bs: f64, tilde: f64, psi: f64, g2: f64, c: f64) -> f64 {
    let g = SceneGeometry {
        target: Vec2::new(range_bs, 0.0),
        ue: Vec2::ZERO,
        range_bs,
        range_ue: 1.0,
        aoa: 0.0,
        ue_direction: 0.0,
        bistatic_angle: psi,
    };
    let bound = |u: f64| {
        crlb::hybrid_position(&FisherSet { delay_ue: u, ..*fs }, &g, c).map(|b| b.crlb).unwrap_or(f64::INFINITY)
    };
    if bound(f64::MAX / 1e10) > g2 {
        return 0.0;
    }
    // Bisection in log I_τU.
    let (mut lo, mut hi) = (-300.0f64, 300.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bound(10f64.powf(mid)) > g2 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    tilde / 10f64.powf(0.5 * (lo + hi))
}

/// PEB CDF under a Poisson UE field of density λ with best-UE selection.
pub fn peb_cdf(
    cfg: &OfdmConfig,
    lb: &LinkBudget,
    target: Vec2,
    density: f64,
    peb_threshold: f64,
    opts: &FisherOptions,
) -> Result<f64> {
    if !(density >= 0.0) {
        return Err(Error::Domain(format!("UE density must be non-negative, got {density}")));
    }
    let region = ue_admissible_region(cfg, lb, target, peb_threshold, opts)?;
    Ok(match region.branch {
        RegionBranch::Empty => 0.0,
        RegionBranch::AllPlane => 1.0,
        _ => 1.0 - (-density * region.area).exp(),
    })
}

/// Empirical CDF estimate from Poisson drops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfEstimate {
    pub probability: f64,
    /// Binomial standard error √(p(1−p)/n) at the formula's probability.
    pub std_error: f64,
    pub realizations: usize,
}

/// Drops Poisson UEs in a square window around the target, keeps the UE
/// with the smallest hybrid CRLB and counts realisations meeting γ_p.
#[allow(clippy::too_many_arguments)]
pub fn peb_cdf_monte_carlo(
    cfg: &OfdmConfig,
    lb: &LinkBudget,
    target: Vec2,
    density: f64,
    peb_threshold: f64,
    window: BBox,
    realizations: usize,
    seed: u64,
    opts: &FisherOptions,
) -> Result<CdfEstimate> {
    if realizations == 0 {
        return Err(Error::InvalidConfig("at least one realisation is required".into()));
    }
    let g2 = peb_threshold * peb_threshold;
    let c = cfg.speed_of_light;
    let mean = density * window.area();
    let poisson = if mean > 0.0 { Some(Poisson::new(mean).map_err(|e| Error::Domain(e.to_string()))?) } else { None };
    let hits: usize = (0..realizations as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let n = poisson.as_ref().map_or(0, |p| p.sample(&mut rng) as u64);
            let mut best = f64::INFINITY;
            for _ in 0..n {
                let ue = Vec2::new(
                    rng.random_range(window.min.x..window.max.x),
                    rng.random_range(window.min.y..window.max.y),
                );
                let Ok(g) = scenario::derive_geometry(target, ue) else { continue };
                let Ok(fs) = fisher::fisher_set(cfg, lb, &g, opts) else { continue };
                if let Ok(b) = crlb::hybrid_position(&fs, &g, c) {
                    best = best.min(b.crlb);
                }
            }
            if best.is_infinite() {
                // No usable UE: mono-static bound.
                let fs = fisher::fisher_set_bs(cfg, lb, target.norm(), scenario::array_angle(target), opts);
                best = crlb::mono_from_fisher(&fs, target.norm(), c).map(|b| b.crlb).unwrap_or(f64::INFINITY);
            }
            usize::from(best <= g2)
        })
        .sum();
    let p = hits as f64 / realizations as f64;
    let p_ref = peb_cdf(cfg, lb, target, density, peb_threshold, opts)?;
    Ok(CdfEstimate { probability: p, std_error: (p_ref * (1.0 - p_ref) / realizations as f64).sqrt(), realizations })
}
