//! Batch front-end for the hybrid ISAC bounds, simulator and coverage
//! analytics. Every run writes CSV (and PGM for maps) plus a manifest that
//! `replay` re-executes.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use isac_hybrid::estimator::{AngleAggregation, WeightSource};
use isac_hybrid::io::Scenario;
use isac_hybrid::Vec2;
use serde::{Deserialize, Serialize};

use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "isac-hybrid", version, about = "Hybrid mono-/bi-static OFDM-ISAC bounds and coverage")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Scenario JSON; built-in reference scenario when omitted.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Position and velocity bounds at one target/UE placement.
    PebPoint(PebPointArgs),
    /// Bound heatmap over a bounding box (CSV + PGM).
    Map(MapArgs),
    /// Monte-Carlo RMSE versus bounds over an SNR sweep.
    Simulate(SimulateArgs),
    /// Coverage areas per PEB threshold, optionally a UE placement sweep.
    Coverage(CoverageArgs),
    /// PEB CDF under a Poisson UE field.
    UeCdf(UeCdfArgs),
    /// Re-run the command recorded in a manifest.
    #[serde(skip)]
    Replay { manifest: PathBuf },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::PebPoint(_) => "peb-point",
            Command::Map(_) => "map",
            Command::Simulate(_) => "simulate",
            Command::Coverage(_) => "coverage",
            Command::UeCdf(_) => "ue-cdf",
            Command::Replay { .. } => "replay",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PebPointArgs {
    /// Target position x,y [m]; scenario target when omitted.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub target: Option<Vec2>,
    /// UE position x,y [m]; scenario UE when omitted.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub ue: Option<Vec2>,
    /// Ignore any UE and report mono-static bounds only.
    #[arg(long)]
    pub mono_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapMode {
    PebMono,
    PebHybrid,
    Veb,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct MapArgs {
    #[arg(long, value_enum)]
    pub mode: MapMode,
    /// Bounding box xmin,ymin,xmax,ymax [m].
    #[arg(long, value_parser = parse_bbox, allow_hyphen_values = true)]
    pub bbox: [f64; 4],
    /// Cell edge [m].
    #[arg(long, default_value_t = 5.0)]
    pub cell: f64,
    /// UE position x,y [m]; scenario UE when omitted.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub ue: Option<Vec2>,
    /// PGM grey scale lo,hi in the map's unit; finite data range when omitted.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Receive BS SNRs [dB].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-10.0, -5.0, 0.0, 5.0, 10.0])]
    pub snr_db: Vec<f64>,
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    /// Target velocity vx,vy [m/s]; scenario velocity when omitted.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub velocity: Option<Vec2>,
    /// Re-estimate delays after Doppler compensation.
    #[arg(long)]
    pub refine_delay: bool,
    #[arg(long, value_enum, default_value_t = Weights::Truth)]
    pub weights: Weights,
    #[arg(long, value_enum, default_value_t = Aggregation::Magnitude)]
    pub aggregation: Aggregation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weights {
    Truth,
    PlugIn,
}

impl From<Weights> for WeightSource {
    fn from(w: Weights) -> Self {
        match w {
            Weights::Truth => WeightSource::Truth,
            Weights::PlugIn => WeightSource::PlugIn,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    Magnitude,
    Power,
}

impl From<Aggregation> for AngleAggregation {
    fn from(a: Aggregation) -> Self {
        match a {
            Aggregation::Magnitude => AngleAggregation::Magnitude,
            Aggregation::Power => AngleAggregation::Power,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CoverageArgs {
    /// PEB thresholds γ_p [m].
    #[arg(long, value_delimiter = ',', required = true)]
    pub peb: Vec<f64>,
    /// VEB threshold γ_v [m/s] for the joint column.
    #[arg(long)]
    pub veb: Option<f64>,
    /// UE position x,y [m]; scenario UE when omitted.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub ue: Option<Vec2>,
    /// Cell edge [m].
    #[arg(long, default_value_t = 5.0)]
    pub cell: f64,
    /// Count only x > 0 (closed-form mono area halved to match).
    #[arg(long)]
    pub right_half: bool,
    /// UE x positions start:step:end [m] for a placement sweep along the x axis.
    #[arg(long, value_parser = parse_range)]
    pub sweep: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct UeCdfArgs {
    /// Target position x,y [m]; scenario target when omitted.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub target: Option<Vec2>,
    /// UE densities λ [UEs/m²].
    #[arg(long, value_delimiter = ',', required = true)]
    pub density: Vec<f64>,
    /// PEB thresholds γ_p [m]; an even grid around [PEB_limit, PEB_mono] when omitted.
    #[arg(long, value_delimiter = ',')]
    pub peb: Option<Vec<f64>>,
    /// Points of the automatic threshold grid.
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// Add a Poisson Monte-Carlo column with this many realisations.
    #[arg(long)]
    pub monte_carlo: Option<usize>,
}

fn parse_floats<const N: usize>(s: &str, sep: char) -> Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(sep).map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("expected {N} values separated by '{sep}', got '{s}'"));
    }
    let mut out = [0.0f64; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|e| format!("'{p}': {e}"))?;
        if !o.is_finite() {
            return Err(format!("'{p}' is not finite"));
        }
    }
    Ok(out)
}

fn parse_point(s: &str) -> Result<Vec2, String> {
    parse_floats::<2>(s, ',').map(Vec2::from)
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    parse_floats(s, ',')
}

fn parse_bbox(s: &str) -> Result<[f64; 4], String> {
    parse_floats(s, ',')
}

fn parse_range(s: &str) -> Result<[f64; 3], String> {
    parse_floats(s, ':')
}

/// Process exit codes.
mod exit {
    pub const CONFIG: u8 = 2;
    pub const NUMERICAL: u8 = 3;
    pub const IO: u8 = 4;
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<isac_hybrid::Error>() {
            return match e {
                isac_hybrid::Error::Numerical(_) => exit::NUMERICAL,
                isac_hybrid::Error::Io(_) => exit::IO,
                _ => exit::CONFIG,
            };
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return exit::CONFIG;
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return exit::IO;
        }
    }
    exit::CONFIG
}

fn load_scenario(path: Option<&Path>) -> anyhow::Result<Scenario> {
    match path {
        Some(p) => Scenario::load(p).with_context(|| format!("loading scenario {}", p.display())),
        None => Ok(Scenario::default()),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (scenario, seed, threads, command) = match cli.command {
        Command::Replay { manifest } => {
            let m = RunManifest::load(&manifest)?;
            (m.scenario, m.seed, cli.global.threads.or(m.threads), m.args)
        }
        command => (load_scenario(cli.global.scenario.as_deref())?, cli.global.seed, cli.global.threads, command),
    };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let out = cli.global.out;
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let start = Instant::now();
    let outputs = commands::execute(&command, &scenario, seed, &out)?;
    let manifest = RunManifest {
        command: command.name().to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        threads,
        scenario,
        args: command,
        outputs,
        duration_s: start.elapsed().as_secs_f64(),
    };
    manifest.write(&out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
