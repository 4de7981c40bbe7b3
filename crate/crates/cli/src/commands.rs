//! Subcommand bodies. Each returns the files it wrote, relative to `out`.

use std::path::Path;

use anyhow::{bail, Context};
use isac_hybrid::coverage::{self, BBox, Criterion, RegionBranch};
use isac_hybrid::crlb::{self, BoundCoefficients};
use isac_hybrid::error::Error;
use isac_hybrid::estimator::{self, McPoint, MonteCarloConfig};
use isac_hybrid::fisher;
use isac_hybrid::io::{atomic_write, fmt_num, CsvTable, GridField, Scenario};
use isac_hybrid::scenario::{self, Vec2};
use rayon::prelude::*;

use crate::{Command, CoverageArgs, MapArgs, MapMode, PebPointArgs, SimulateArgs, UeCdfArgs};

pub fn execute(command: &Command, scenario: &Scenario, seed: u64, out: &Path) -> anyhow::Result<Vec<String>> {
    match command {
        Command::PebPoint(a) => peb_point(a, scenario, out),
        Command::Map(a) => map(a, scenario, out),
        Command::Simulate(a) => simulate(a, scenario, seed, out),
        Command::Coverage(a) => coverage(a, scenario, out),
        Command::UeCdf(a) => ue_cdf(a, scenario, seed, out),
        Command::Replay { .. } => bail!(Error::InvalidConfig("a manifest cannot replay another replay".into())),
    }
}

fn write_table(out: &Path, name: &str, table: &CsvTable, echo: bool) -> anyhow::Result<String> {
    let text = table.render();
    atomic_write(&out.join(name), text.as_bytes()).with_context(|| format!("writing {name}"))?;
    if echo {
        print!("{text}");
    }
    Ok(name.to_string())
}

fn peb_point(a: &PebPointArgs, s: &Scenario, out: &Path) -> anyhow::Result<Vec<String>> {
    let cfg = &s.ofdm;
    let lb = s.link_budget();
    let c = cfg.speed_of_light;
    let target = a.target.unwrap_or(s.target);
    let ue = if a.mono_only { None } else { a.ue.or(s.ue) };
    let rb = target.norm();
    if !(rb > 0.0) {
        bail!(Error::Domain("target must be away from the BS".into()));
    }
    let mut t = CsvTable::new([
        "target_x_m",
        "target_y_m",
        "ue_x_m",
        "ue_y_m",
        "peb_mono_m",
        "peb_h_m",
        "peb_limit_m",
        "veb_mps",
        "psi_rad",
        "rho",
        "psi_star_rad",
    ]);
    match ue {
        Some(ue) => {
            let g = scenario::derive_geometry(target, ue)?;
            let fs = fisher::fisher_set(cfg, &lb, &g, &s.fisher)?;
            let rho = fs.doppler_bs / fs.doppler_ue;
            t.push_numbers(&[
                target.x,
                target.y,
                ue.x,
                ue.y,
                crlb::mono_from_fisher(&fs, rb, c)?.peb,
                crlb::hybrid_position(&fs, &g, c)?.peb,
                crlb::position_limit(&fs, &g, c)?.peb,
                crlb::velocity(&fs, &g, cfg.wavelength())?.veb,
                g.bistatic_angle,
                rho,
                crlb::optimal_bistatic_angle(rho).unwrap_or(f64::NAN),
            ]);
        }
        None => {
            let fs = fisher::fisher_set_bs(cfg, &lb, rb, scenario::array_angle(target), &s.fisher);
            let mono = crlb::mono_from_fisher(&fs, rb, c)?;
            let limit = (c * c / (4.0 * fs.delay_bs)).min(rb * rb / fs.angle).sqrt();
            t.push_numbers(&[
                target.x,
                target.y,
                f64::NAN,
                f64::NAN,
                mono.peb,
                mono.peb,
                limit,
                f64::INFINITY,
                f64::NAN,
                f64::NAN,
                f64::NAN,
            ]);
        }
    }
    Ok(vec![write_table(out, "peb_point.csv", &t, true)?])
}

fn map(a: &MapArgs, s: &Scenario, out: &Path) -> anyhow::Result<Vec<String>> {
    let [x0, y0, x1, y1] = a.bbox;
    if !(x1 > x0 && y1 > y0) {
        bail!(Error::InvalidConfig(format!("empty bounding box {:?}", a.bbox)));
    }
    if !(a.cell > 0.0) {
        bail!(Error::InvalidConfig(format!("cell size must be positive, got {}", a.cell)));
    }
    let ue = match a.mode {
        MapMode::PebMono => None,
        _ => Some(a.ue.or(s.ue).ok_or_else(|| Error::InvalidConfig("this map mode needs a UE position".into()))?),
    };
    let cfg = &s.ofdm;
    let lb = s.link_budget();
    let cols = ((x1 - x0) / a.cell).round().max(1.0) as usize;
    let rows = ((y1 - y0) / a.cell).round().max(1.0) as usize;
    let mut field = GridField { cols, rows, origin: Vec2::new(x0, y0), cell: a.cell, values: Vec::new() };
    field.values = (0..rows * cols)
        .into_par_iter()
        .map(|i| {
            let q = field.centre(i / cols, i % cols);
            match coverage::point_bounds(cfg, &lb, q, ue, &s.fisher) {
                Ok((mono, hybrid, veb)) => match a.mode {
                    MapMode::PebMono => mono,
                    MapMode::PebHybrid => hybrid,
                    MapMode::Veb => veb,
                },
                Err(_) => f64::NAN,
            }
        })
        .collect();
    let (name, unit) = match a.mode {
        MapMode::PebMono => ("peb_mono", "peb_mono_m"),
        MapMode::PebHybrid => ("peb_h", "peb_h_m"),
        MapMode::Veb => ("veb", "veb_mps"),
    };
    let csv = write_table(out, &format!("map_{name}.csv"), &field.to_csv(unit), false)?;
    let (lo, hi) = a.range.map(|[l, h]| (l, h)).or_else(|| field.finite_range()).unwrap_or((0.0, 1.0));
    let pgm = format!("map_{name}.pgm");
    atomic_write(&out.join(&pgm), &field.to_pgm(lo, hi)).with_context(|| format!("writing {pgm}"))?;
    println!("{cols}x{rows} cells, {unit} in [{}, {}], written to {csv} and {pgm}", fmt_num(lo), fmt_num(hi));
    Ok(vec![csv, pgm])
}

fn simulate(a: &SimulateArgs, s: &Scenario, seed: u64, out: &Path) -> anyhow::Result<Vec<String>> {
    let ue = s.ue.ok_or_else(|| Error::InvalidConfig("simulation needs a UE position in the scenario".into()))?;
    if a.snr_db.is_empty() {
        bail!(Error::InvalidConfig("empty SNR sweep".into()));
    }
    let mc = MonteCarloConfig {
        snr_db: a.snr_db.clone(),
        trials: a.trials,
        seed,
        aggregation: a.aggregation.into(),
        refine_delay: a.refine_delay,
        weights: a.weights.into(),
        fisher: s.fisher,
        ..MonteCarloConfig::default()
    };
    let velocity = a.velocity.unwrap_or(s.velocity);
    let points = estimator::monte_carlo(&s.ofdm, &s.link_budget(), s.target, ue, velocity, &mc)?;
    let mut t = CsvTable::new(McPoint::CSV_HEADER.split(','));
    for p in &points {
        t.push(vec![
            fmt_num(p.snr_db),
            fmt_num(p.rmse_pos_mono),
            fmt_num(p.rmse_pos_hybrid),
            fmt_num(p.rmse_vel),
            fmt_num(p.peb_mono),
            fmt_num(p.peb_hybrid),
            fmt_num(p.veb),
            p.trials.to_string(),
            p.seed.to_string(),
        ]);
    }
    let name = write_table(out, "simulate.csv", &t, true)?;
    if let Some(p) = points.iter().find(|p| !p.rmse_pos_mono.is_finite() || !p.rmse_pos_hybrid.is_finite()) {
        bail!(Error::Numerical(format!("position estimates diverged at {} dB", p.snr_db)));
    }
    Ok(vec![name])
}

fn coverage(a: &CoverageArgs, s: &Scenario, out: &Path) -> anyhow::Result<Vec<String>> {
    let cfg = &s.ofdm;
    let lb = s.link_budget();
    let coeffs = BoundCoefficients::new(cfg, &lb, &s.fisher);
    let ue = a.ue.or(s.ue);
    let side = if a.right_half { 0.5 } else { 1.0 };
    let query_for = |gamma: f64| {
        let mut q = coverage::auto_query(&coeffs, gamma, a.cell);
        q.veb_threshold = a.veb;
        q.right_half_only = a.right_half;
        q
    };
    let mut t = CsvTable::new([
        "peb_threshold_m",
        "mono_closed_m2",
        "mono_numeric_m2",
        "mono_rel_diff",
        "hybrid_numeric_m2",
        "joint_numeric_m2",
    ]);
    for &gamma in &a.peb {
        let query = query_for(gamma);
        query.validate()?;
        let closed = coverage::coverage_mono_closed(cfg, &lb, gamma)?.area * side;
        let mono = coverage::coverage_numeric(cfg, &lb, ue, &query, Criterion::Mono, &s.fisher)?.area;
        let hybrid = match ue {
            Some(_) => coverage::coverage_numeric(cfg, &lb, ue, &query, Criterion::Hybrid, &s.fisher)?.area,
            None => f64::NAN,
        };
        let joint = match (ue, a.veb) {
            (Some(_), Some(_)) => coverage::coverage_numeric(cfg, &lb, ue, &query, Criterion::Joint, &s.fisher)?.area,
            _ => f64::NAN,
        };
        t.push_numbers(&[gamma, closed, mono, (closed - mono) / mono, hybrid, joint]);
    }
    let mut outputs = vec![write_table(out, "coverage.csv", &t, true)?];

    if let Some([start, step, end]) = a.sweep {
        if !(step > 0.0 && end >= start) {
            bail!(Error::InvalidConfig(format!("invalid sweep {start}:{step}:{end}")));
        }
        let n = ((end - start) / step + 1e-9).floor() as usize + 1;
        let xs: Vec<f64> = (0..n).map(|i| start + step * i as f64).collect();
        let mut sweep = CsvTable::new(["peb_threshold_m", "ue_x_m", "hybrid_numeric_m2", "best"]);
        for &gamma in &a.peb {
            let r = coverage::optimal_ue_sweep(cfg, &lb, &xs, &query_for(gamma), &s.fisher)?;
            for (x, area) in r.positions.iter().zip(&r.areas) {
                let best = if *x == r.best_position { "1" } else { "0" };
                sweep.push(vec![fmt_num(gamma), fmt_num(*x), fmt_num(*area), best.into()]);
            }
        }
        outputs.push(write_table(out, "coverage_sweep.csv", &sweep, false)?);
    }
    Ok(outputs)
}

fn branch_name(b: RegionBranch) -> &'static str {
    match b {
        RegionBranch::Empty => "empty",
        RegionBranch::FullLoop => "full-loop",
        RegionBranch::PartialLoop => "partial-loop",
        RegionBranch::AllPlane => "all-plane",
    }
}

fn ue_cdf(a: &UeCdfArgs, s: &Scenario, seed: u64, out: &Path) -> anyhow::Result<Vec<String>> {
    let cfg = &s.ofdm;
    let lb = s.link_budget();
    let target = a.target.unwrap_or(s.target);
    if a.density.iter().any(|d| !(*d >= 0.0)) {
        bail!(Error::InvalidConfig("UE densities must be non-negative".into()));
    }
    let probe = coverage::ue_admissible_region(cfg, &lb, target, 1.0, &s.fisher)?;
    let thresholds = match &a.peb {
        Some(v) if !v.is_empty() => v.clone(),
        _ => {
            if a.points < 2 {
                bail!(Error::InvalidConfig("the threshold grid needs at least 2 points".into()));
            }
            let (lo, hi) = (0.9 * probe.peb_limit, 1.1 * probe.peb_mono);
            (0..a.points).map(|i| lo + (hi - lo) * i as f64 / (a.points - 1) as f64).collect()
        }
    };
    let mut t = CsvTable::new(["density_per_m2", "peb_threshold_m", "cdf", "branch", "cdf_mc", "cdf_mc_stderr"]);
    for (di, &density) in a.density.iter().enumerate() {
        for (gi, &gamma) in thresholds.iter().enumerate() {
            let region = coverage::ue_admissible_region(cfg, &lb, target, gamma, &s.fisher)?;
            let cdf = coverage::peb_cdf(cfg, &lb, target, density, gamma, &s.fisher)?;
            let (mc, se) = match (a.monte_carlo, region.branch) {
                (Some(n), RegionBranch::FullLoop | RegionBranch::PartialLoop) => {
                    let reach = region.boundary.iter().map(|(_, r)| *r).fold(0.0, f64::max);
                    let window = BBox::around(target, 1.1 * reach);
                    let stream = seed.wrapping_add((di * thresholds.len() + gi) as u64);
                    let e =
                        coverage::peb_cdf_monte_carlo(cfg, &lb, target, density, gamma, window, n, stream, &s.fisher)?;
                    (e.probability, e.std_error)
                }
                _ => (f64::NAN, f64::NAN),
            };
            t.push(vec![
                fmt_num(density),
                fmt_num(gamma),
                fmt_num(cdf),
                branch_name(region.branch).into(),
                fmt_num(mc),
                fmt_num(se),
            ]);
        }
    }
    println!(
        "target [{}, {}]: PEB_limit {} m, PEB_mono {} m, {} thresholds x {} densities",
        fmt_num(target.x),
        fmt_num(target.y),
        fmt_num(probe.peb_limit),
        fmt_num(probe.peb_mono),
        thresholds.len(),
        a.density.len()
    );
    Ok(vec![write_table(out, "ue_cdf.csv", &t, false)?])
}
