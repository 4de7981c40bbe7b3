//! Hybrid mono-/bi-static OFDM-ISAC sensing analytics.
//!
//! A base station (BS) senses a target from its own echo while a cooperating
//! user equipment (UE) measures the target-scattered downlink path. This crate
//! evaluates the closed-form position and velocity error bounds of the fused
//! system, validates them with a resource-element level simulator and an
//! FFT/Gauss-Newton estimation chain, and derives coverage and UE-density
//! analytics on top of the bounds.
//!
//! Module map:
//! - [`scenario`]: waveform configuration, BS-target-UE geometry, link budget.
//! - [`fisher`]: scalar Fisher informations of delay, angle and Doppler.
//! - [`crlb`]: closed-form bounds and the Jacobian trace oracle.
//! - [`signal_sim`]: resource-grid synthesis and data removal.
//! - [`estimator`]: sequential FFT estimation, fusion and Monte-Carlo harness.
//! - [`coverage`]: coverage areas, admissible UE regions and PEB CDF.
//! - [`io`]: scenario files, CSV/PGM output, binary grid dumps.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coverage;
pub mod crlb;
pub mod error;
pub mod estimator;
pub mod fisher;
pub mod io;
pub mod scenario;
pub mod signal_sim;

pub use error::{Error, Result};
pub use scenario::{LinkBudget, OfdmConfig, SceneGeometry, Vec2};
