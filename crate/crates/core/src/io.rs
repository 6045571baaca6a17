//! File formats: map and tolerance JSON, report envelopes, CSV point
//! clouds, and 16-bit PGM rasters.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonic::BBox;
use crate::lemniscate::LevelSetTrace;
use crate::maps::{RationalMap, Tolerances};
use crate::measure::EmpiricalMeasure;
use crate::poly::Poly;
use crate::rng::RNG_ALGORITHM;
use crate::roots::RootConfig;
use crate::verdict::{VerdictConfig, EQUALITY_BAND, SCHEMA_VERSION, TAU_SPREAD};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// On-disk form of a map: ascending coefficients as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFile {
    pub numerator: Vec<[f64; 2]>,
    pub denominator: Vec<[f64; 2]>,
}

impl MapFile {
    pub fn from_map(f: &RationalMap) -> Self {
        let pairs = |p: &Poly| p.coeffs().iter().map(|c| [c.re, c.im]).collect();
        MapFile { numerator: pairs(f.numerator()), denominator: pairs(f.denominator()) }
    }

    pub fn to_map(&self, tol: Tolerances) -> Result<RationalMap> {
        let poly = |v: &[[f64; 2]]| Poly::new(v.iter().map(|&[re, im]| Complex64::new(re, im)).collect());
        if self.numerator.is_empty() || self.denominator.is_empty() {
            return Err(Error::Validation("numerator and denominator need at least one coefficient".into()));
        }
        RationalMap::with_tolerances(poly(&self.numerator), poly(&self.denominator), tol)
    }
}

pub fn parse_map_str(text: &str, tol: Tolerances) -> Result<RationalMap> {
    let file: MapFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.to_map(tol)
}

pub fn parse_map_file(path: &Path, tol: Tolerances) -> Result<RationalMap> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_map_str(&text, tol).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn map_to_json(f: &RationalMap) -> String {
    serde_json::to_string(&MapFile::from_map(f)).expect("map serializes")
}

/// Every named tolerance, as read from a `--tol-file`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceSet {
    pub lead: f64,
    pub res: f64,
    pub gcd: f64,
    pub form: f64,
    pub point: f64,
    pub root_tol: f64,
    pub root_max_iter: usize,
    pub cluster_radius: f64,
    pub merge_radius: f64,
    pub merge_tol: f64,
    pub escape_tol: f64,
    pub tau_spread: f64,
    pub equality_band: f64,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        let t = Tolerances::default();
        ToleranceSet {
            lead: t.lead,
            res: t.res,
            gcd: t.gcd,
            form: t.form,
            point: t.point,
            root_tol: t.roots.tol,
            root_max_iter: t.roots.max_iter,
            cluster_radius: t.roots.cluster_radius,
            merge_radius: t.roots.merge_radius,
            merge_tol: t.roots.merge_tol,
            escape_tol: crate::escape::DEFAULT_TOL,
            tau_spread: TAU_SPREAD,
            equality_band: EQUALITY_BAND,
        }
    }
}

impl ToleranceSet {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("lead", self.lead),
            ("res", self.res),
            ("gcd", self.gcd),
            ("form", self.form),
            ("point", self.point),
            ("root_tol", self.root_tol),
            ("cluster_radius", self.cluster_radius),
            ("merge_radius", self.merge_radius),
            ("merge_tol", self.merge_tol),
            ("escape_tol", self.escape_tol),
            ("tau_spread", self.tau_spread),
            ("equality_band", self.equality_band),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        if self.root_max_iter == 0 {
            return Err(Error::Validation("root_max_iter must be positive".into()));
        }
        Ok(())
    }

    pub fn map_tolerances(&self) -> Tolerances {
        Tolerances {
            lead: self.lead,
            res: self.res,
            gcd: self.gcd,
            form: self.form,
            point: self.point,
            roots: RootConfig {
                tol: self.root_tol,
                max_iter: self.root_max_iter,
                cluster_radius: self.cluster_radius,
                merge_radius: self.merge_radius,
                merge_tol: self.merge_tol,
            },
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let t: ToleranceSet =
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        t.validate()?;
        Ok(t)
    }
}

/// Run configuration: the verdict settings plus the tolerance map and
/// output path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    #[serde(flatten)]
    pub run: VerdictConfig,
    pub tolerances: ToleranceSet,
    pub out: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Config::with_tolerances(VerdictConfig::default(), ToleranceSet::default())
    }
}

impl Config {
    pub fn with_tolerances(mut run: VerdictConfig, tolerances: ToleranceSet) -> Self {
        run.escape_tol = tolerances.escape_tol;
        run.tau_spread = tolerances.tau_spread;
        run.equality_band = tolerances.equality_band;
        Config { run, tolerances, out: None }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Config = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let c = Config { out: c.out.clone(), ..Config::with_tolerances(c.run, c.tolerances) };
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Config::from_json(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.tolerances.validate()?;
        self.run.validate()
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Wrapper written around every JSON report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportEnvelope<P> {
    pub schema_version: String,
    pub tool_version: String,
    pub rng: String,
    pub command: String,
    pub config: serde_json::Value,
    pub tolerances: ToleranceSet,
    pub timings_ms: Vec<(String, u64)>,
    pub payload: P,
}

impl<P: Serialize> ReportEnvelope<P> {
    pub fn new(command: &str, config: serde_json::Value, tolerances: ToleranceSet, payload: P) -> Self {
        ReportEnvelope {
            schema_version: SCHEMA_VERSION.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            rng: RNG_ALGORITHM.to_string(),
            command: command.to_string(),
            config,
            tolerances,
            timings_ms: Vec::new(),
            payload,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &(self.to_json() + "\n"))
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// `re,im,weight` rows.
pub fn points_csv(m: &EmpiricalMeasure) -> String {
    let mut out = String::from("re,im,weight\n");
    for (z, w) in m.iter() {
        let _ = writeln!(out, "{:e},{:e},{:e}", z.re, z.im, w);
    }
    out
}

/// `polyline,re,im` rows, one per vertex.
pub fn trace_csv(t: &LevelSetTrace) -> String {
    let mut out = String::from("polyline,re,im\n");
    for (k, line) in t.polylines.iter().enumerate() {
        for z in line {
            let _ = writeln!(out, "{k},{:e},{:e}", z.re, z.im);
        }
    }
    out
}

/// Sidecar of a raster: the values mapped to 0 and 65535.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterScale {
    pub min: f64,
    pub max: f64,
}

/// Encodes a row-major `nx × ny` grid as binary 16-bit PGM.
pub fn encode_pgm(values: &[f64], nx: usize, ny: usize) -> Result<(Vec<u8>, RasterScale)> {
    if values.len() != nx * ny || nx == 0 || ny == 0 {
        return Err(Error::Validation(format!("raster has {} values for {nx}x{ny}", values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("raster values must be finite".into()));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let mut bytes = format!("P5\n{nx} {ny}\n65535\n").into_bytes();
    bytes.reserve(2 * values.len());
    for &v in values {
        let level = if span > 0.0 { ((v - min) / span * 65535.0).round() as u16 } else { 0 };
        bytes.extend_from_slice(&level.to_be_bytes());
    }
    Ok((bytes, RasterScale { min, max }))
}

/// Sidecar path for a raster: `name.pgm` becomes `name.pgm.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes the PGM and its JSON sidecar.
pub fn emit_raster(values: &[f64], nx: usize, ny: usize, path: &Path) -> Result<RasterScale> {
    let (bytes, scale) = encode_pgm(values, nx, ny)?;
    write_bytes(path, &bytes)?;
    write_text(&sidecar_path(path), &(serde_json::to_string(&scale).expect("scale serializes") + "\n"))?;
    Ok(scale)
}

/// Values of `g` at the pixel centres of `bbox`, row `j = 0` at the bottom.
pub fn sample_field<G>(bbox: &BBox, nx: usize, ny: usize, g: G) -> Vec<f64>
where
    G: Fn(Complex64) -> f64 + Sync,
{
    use rayon::prelude::*;
    let hx = bbox.width() / nx as f64;
    let hy = bbox.height() / ny as f64;
    (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            g(Complex64::new(bbox.x0 + (i as f64 + 0.5) * hx, bbox.y0 + (j as f64 + 0.5) * hy))
        })
        .collect()
}
