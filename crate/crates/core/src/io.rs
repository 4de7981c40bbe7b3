//! Scenario files, CSV and PGM output, and binary resource-grid dumps.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::FisherOptions;
use crate::scenario::{db_to_linear, LinkBudget, OfdmConfig, Vec2};
use crate::signal_sim::RxGrid;

/// Link budget as written in scenario files (SNR coefficients in dB).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkBudgetSpec {
    /// Ῡ_B [dB].
    pub bs_db: f64,
    /// Ῡ_U [dB].
    pub ue_db: f64,
    /// β; defaults to N_T (beam aimed at the target).
    pub beam_gain: Option<f64>,
}

impl Default for LinkBudgetSpec {
    fn default() -> Self {
        Self { bs_db: 98.0, ue_db: 98.0, beam_gain: None }
    }
}

impl LinkBudgetSpec {
    pub fn resolve(&self, cfg: &OfdmConfig) -> LinkBudget {
        LinkBudget {
            bs_coeff: db_to_linear(self.bs_db),
            ue_coeff: db_to_linear(self.ue_db),
            beam_gain: self.beam_gain.unwrap_or(cfg.tx_antennas as f64),
        }
    }
}

/// Scenario file: `{ofdm, link_budget, target, ue}` plus optional
/// `velocity` and `fisher` sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub ofdm: OfdmConfig,
    pub link_budget: LinkBudgetSpec,
    /// Target position q [m].
    pub target: Vec2,
    /// Cooperating UE position q_U [m].
    pub ue: Option<Vec2>,
    /// Target velocity v [m/s].
    pub velocity: Vec2,
    pub fisher: FisherOptions,
}

impl Default for Scenario {
    /// Reference scene: q = [200, 50], q_U = [0, 300], v = [20, 0].
    fn default() -> Self {
        Self {
            ofdm: OfdmConfig::default(),
            link_budget: LinkBudgetSpec::default(),
            target: Vec2::new(200.0, 50.0),
            ue: Some(Vec2::new(0.0, 300.0)),
            velocity: Vec2::new(20.0, 0.0),
            fisher: FisherOptions::default(),
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn link_budget(&self) -> LinkBudget {
        self.link_budget.resolve(&self.ofdm)
    }

    pub fn validate(&self) -> Result<()> {
        self.ofdm.validate()?;
        self.link_budget().validate(&self.ofdm)?;
        if !self.target.is_finite() || !self.velocity.is_finite() || self.ue.is_some_and(|u| !u.is_finite()) {
            return Err(Error::InvalidConfig("positions and velocity must be finite".into()));
        }
        if !(self.fisher.sync_std >= 0.0) {
            return Err(Error::InvalidConfig("sync_std must be non-negative".into()));
        }
        Ok(())
    }
}

/// Locale-independent number formatting; non-finite values as `inf`,
/// `-inf` and `nan`.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v}")
    }
}

/// Numeric CSV table built in memory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|v| fmt_num(*v)).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Scalar field sampled on a regular grid, row-major with row 0 at the
/// smallest y.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub cols: usize,
    pub rows: usize,
    pub origin: Vec2,
    pub cell: f64,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn centre(&self, row: usize, col: usize) -> Vec2 {
        self.origin + Vec2::new((col as f64 + 0.5) * self.cell, (row as f64 + 0.5) * self.cell)
    }

    /// `(x_m, y_m, <value_name>)` rows.
    pub fn to_csv(&self, value_name: &str) -> CsvTable {
        let mut t = CsvTable::new(["x_m", "y_m", value_name]);
        for row in 0..self.rows {
            for col in 0..self.cols {
                let p = self.centre(row, col);
                t.push_numbers(&[p.x, p.y, self.values[row * self.cols + col]]);
            }
        }
        t
    }

    /// 8-bit binary PGM, north up. Finite values are mapped linearly from
    /// [lo, hi] to [0, 255] after clamping; non-finite values map to 255.
    pub fn to_pgm(&self, lo: f64, hi: f64) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.cols, self.rows).into_bytes();
        let span = if hi > lo { hi - lo } else { 1.0 };
        for row in (0..self.rows).rev() {
            for col in 0..self.cols {
                let v = self.values[row * self.cols + col];
                let px = if v.is_finite() { ((v.clamp(lo, hi) - lo) / span * 255.0).round() as u8 } else { 255 };
                out.push(px);
            }
        }
        out
    }

    /// Min and max over finite values.
    pub fn finite_range(&self) -> Option<(f64, f64)> {
        let mut it = self.values.iter().copied().filter(|v| v.is_finite());
        let first = it.next()?;
        Some(it.fold((first, first), |(a, b), v| (a.min(v), b.max(v))))
    }
}

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::Format(format!("not a file path: {}", path.display())))?;
    let mut tmp = PathBuf::from(dir);
    tmp.push(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// Magic of the binary grid dump, "ISACGRID" read as little-endian u64.
pub const GRID_MAGIC: u64 = u64::from_le_bytes(*b"ISACGRID");
pub const GRID_VERSION: u64 = 1;
const FLAG_DATA_REMOVED: u64 = 1;

/// Serialises a grid: eight little-endian u64 header fields (magic,
/// version, N_R, K, M, seed, flags, reserved) followed by the BS tensor,
/// the UE matrix and the data symbols as interleaved f32 (re, im) pairs.
pub fn encode_grid(grid: &RxGrid) -> Vec<u8> {
    let flags = if grid.data_removed { FLAG_DATA_REMOVED } else { 0 };
    let header = [
        GRID_MAGIC,
        GRID_VERSION,
        grid.rx_antennas as u64,
        grid.subcarriers as u64,
        grid.symbols as u64,
        grid.seed,
        flags,
        0,
    ];
    let n = grid.bs.len() + grid.ue.len() + grid.data.len();
    let mut out = Vec::with_capacity(64 + 8 * n);
    for h in header {
        out.extend_from_slice(&h.to_le_bytes());
    }
    for z in grid.bs.iter().chain(&grid.ue).chain(&grid.data) {
        out.extend_from_slice(&(z.re as f32).to_le_bytes());
        out.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    out
}

pub fn decode_grid(bytes: &[u8]) -> Result<RxGrid> {
    let word = |i: usize| -> Result<u64> {
        bytes
            .get(8 * i..8 * i + 8)
            .map(|b| u64::from_le_bytes(b.try_into().expect("8-byte slice")))
            .ok_or_else(|| Error::Format("truncated grid header".into()))
    };
    if word(0)? != GRID_MAGIC {
        return Err(Error::Format("not a grid dump (bad magic)".into()));
    }
    if word(1)? != GRID_VERSION {
        return Err(Error::Format(format!("unsupported grid dump version {}", word(1)?)));
    }
    let dim = |i: usize| -> Result<usize> {
        usize::try_from(word(i)?).map_err(|_| Error::Format("grid dimension overflows".into()))
    };
    let (nr, nk, nm) = (dim(2)?, dim(3)?, dim(4)?);
    let re = nk.checked_mul(nm).ok_or_else(|| Error::Format("grid dimension overflows".into()))?;
    let n_bs = nr.checked_mul(re).ok_or_else(|| Error::Format("grid dimension overflows".into()))?;
    let total = n_bs + 2 * re;
    let body = &bytes[64.min(bytes.len())..];
    if body.len() != 8 * total {
        return Err(Error::Format(format!("expected {} payload bytes, found {}", 8 * total, body.len())));
    }
    let values: Vec<Complex64> = body
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[0..4].try_into().expect("4 bytes"));
            let im = f32::from_le_bytes(c[4..8].try_into().expect("4 bytes"));
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    Ok(RxGrid {
        rx_antennas: nr,
        subcarriers: nk,
        symbols: nm,
        bs: values[..n_bs].to_vec(),
        ue: values[n_bs..n_bs + re].to_vec(),
        data: values[n_bs + re..].to_vec(),
        data_removed: word(6)? & FLAG_DATA_REMOVED != 0,
        seed: word(5)?,
    })
}
