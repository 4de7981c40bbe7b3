//! Shared plumbing for the acceptance suite: outcome reporting and random
//! non-degenerate scene sampling.

use std::time::{Duration, Instant};

use isac_hybrid::{scenario, SceneGeometry, Vec2};
use rand::Rng;

/// Result of one acceptance criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: &'static str,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "{} {} | {} | {} | {:.1}s",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

/// A criterion body returns whether it passed and a one-line summary.
pub type Check = fn() -> (bool, String);

/// Runs every check in order, printing one line each, and returns the
/// number of failures.
pub fn run_all(checks: &[(&'static str, &'static str, Check)]) -> usize {
    let mut failures = 0;
    for (id, title, check) in checks {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check);
        let (pass, detail) = result.unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        });
        let outcome = Outcome { id, title, pass, detail, elapsed: start.elapsed() };
        println!("{}", outcome.line());
        failures += usize::from(!pass);
    }
    failures
}

/// Limits that keep a sampled scene away from singular configurations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneLimits {
    pub min_range: f64,
    pub max_range: f64,
    /// Lower bound on |sin ψ|.
    pub min_sin_bistatic: f64,
    /// Lower bound on |cos θ|.
    pub min_cos_aoa: f64,
}

impl Default for SceneLimits {
    fn default() -> Self {
        Self { min_range: 5.0, max_range: 500.0, min_sin_bistatic: 0.05, min_cos_aoa: 0.05 }
    }
}

/// Draws target and UE positions until the scene satisfies `limits`.
pub fn random_scene<R: Rng + ?Sized>(rng: &mut R, limits: &SceneLimits) -> SceneGeometry {
    loop {
        let polar = |rng: &mut R| {
            let r = rng.random_range(limits.min_range..limits.max_range);
            let phi = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            Vec2::new(r * phi.cos(), r * phi.sin())
        };
        let target = polar(rng);
        let ue = target + polar(rng);
        let Ok(g) = scenario::derive_geometry(target, ue) else { continue };
        if g.range_ue >= limits.min_range
            && g.sin_bistatic().abs() >= limits.min_sin_bistatic
            && g.aoa.cos().abs() >= limits.min_cos_aoa
        {
            return g;
        }
    }
}

/// Relative error |a − b| / |b|, with equal infinities counted as exact.
pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}
