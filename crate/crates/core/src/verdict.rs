//! The end-to-end experiment: algebraic classification of `f` against the
//! measure-side statistics, and whether the two agree.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{energy, full_preimage_tree, sample_julia, SamplerConfig};
use crate::error::{Error, Result};
use crate::escape::{EscapeRateEvaluator, DEFAULT_TOL};
use crate::harmonic::{default_delta, label_grid, sample_harmonic, BBox, HarmonicConfig, WalkerStats};
use crate::lemniscate::{
    claim_checks, composition_identity_residual, normalization_constant, trace_level_set, ClaimChecks,
    NormalizedLemniscate,
};
use crate::maps::{ProjectivePoint, RationalMap};
use crate::measure::{circle_probes, EmpiricalMeasure};
use crate::poly::Poly;

pub const SCHEMA_VERSION: &str = "brolin-report/1";

/// Spread threshold separating `p ≡ I` on the Julia set from its failure.
///
/// Three times the largest spread seen over the equality-case maps at the
/// reference settings; see `calibration/tau_spread.log`.
pub const TAU_SPREAD: f64 = 8.0e-10;
/// Version tag of [`TAU_SPREAD`] and [`EQUALITY_BAND`].
pub const CALIBRATION_VERSION: &str = "2026-10-19.1";
/// Upper edge of the discrepancy seen on equality-case maps (largest
/// observed 2.9e-3, rounded up).
pub const EQUALITY_BAND: f64 = 4.0e-3;
/// Smallest chordal distance from the witnesses to `∞` for `∞` to count as Fatou.
pub const DELTA_INF: f64 = 0.05;
/// Fewest witnesses the spread statistic accepts.
pub const MIN_SPREAD_WITNESSES: usize = 10_000;
/// Probe circle radius, relative to the support radius, for the discrepancy.
pub const DISCREPANCY_RADIUS_FACTOR: f64 = 1.1;
pub const DISCREPANCY_PROBES: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadStatistic {
    pub max_p: f64,
    pub min_p: f64,
    pub mean_p: f64,
    pub spread: f64,
}

/// Range of the equilibrium potential over the Julia witnesses.
pub fn julia_potential_spread(ev: &EscapeRateEvaluator, witnesses: &EmpiricalMeasure) -> Result<SpreadStatistic> {
    if witnesses.len() < MIN_SPREAD_WITNESSES {
        return Err(Error::InsufficientWitnesses { required: MIN_SPREAD_WITNESSES, got: witnesses.len() });
    }
    let d = infinity_distance(witnesses);
    if d <= DELTA_INF {
        return Err(Error::InfinityInJulia { min_distance: d });
    }
    let vals: Vec<Result<f64>> = witnesses.points().par_iter().map(|&z| ev.potential(z)).collect();
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for (v, w) in vals.into_iter().zip(witnesses.weights()) {
        let v = v?;
        lo = lo.min(v);
        hi = hi.max(v);
        sum += w * v;
    }
    Ok(SpreadStatistic { max_p: hi, min_p: lo, mean_p: sum, spread: hi - lo })
}

/// Smallest chordal distance from a witness to `∞`.
pub fn infinity_distance(witnesses: &EmpiricalMeasure) -> f64 {
    let inf = ProjectivePoint::infinity();
    witnesses
        .points()
        .iter()
        .map(|&z| ProjectivePoint::from_affine(z).chordal_distance(&inf))
        .fold(f64::INFINITY, f64::min)
}

/// Whether the witnesses stay at least [`DELTA_INF`] away from `∞`.
pub fn infinity_in_fatou(witnesses: &EmpiricalMeasure) -> bool {
    infinity_distance(witnesses) > DELTA_INF
}

/// Largest gap between the two empirical potentials over `probes`.
pub fn measure_discrepancy(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, probes: &[Complex64]) -> f64 {
    let a = mu.potentials(probes);
    let b = nu.potentials(probes);
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Probes on a circle about `center` enclosing both supports.
pub fn discrepancy_probes(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, center: Complex64) -> Vec<Complex64> {
    let r = mu.radius_about(center).max(nu.radius_about(center));
    circle_probes(center, DISCREPANCY_RADIUS_FACTOR * r, DISCREPANCY_PROBES)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerdictConfig {
    pub seed: u64,
    pub samples: usize,
    pub burn_in: usize,
    pub walkers: usize,
    /// Escape-rate truncation depth.
    pub depth: usize,
    /// Set from the tolerance file, echoed only.
    #[serde(skip_deserializing)]
    pub escape_tol: f64,
    /// Harmonic-measure grid.
    pub grid: (usize, usize),
    /// Target size of the preimage tree used as the dense witness set and
    /// as the equilibrium side of the discrepancy; 0 uses the sampler output.
    pub tree_points: usize,
    pub lemniscate_grid: (usize, usize),
    /// Fixed box for the harmonic grid and the lemniscate trace; `None`
    /// derives one from the witnesses.
    pub bbox: Option<BBox>,
    #[serde(skip_deserializing)]
    pub tau_spread: f64,
    #[serde(skip_deserializing)]
    pub equality_band: f64,
}

impl Default for VerdictConfig {
    fn default() -> Self {
        VerdictConfig {
            seed: 42,
            samples: 10_000,
            burn_in: 30,
            walkers: 100_000,
            depth: 64,
            escape_tol: DEFAULT_TOL,
            grid: (1024, 1024),
            tree_points: 500_000,
            lemniscate_grid: (256, 256),
            bbox: None,
            tau_spread: TAU_SPREAD,
            equality_band: EQUALITY_BAND,
        }
    }
}

impl VerdictConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.escape_tol, self.tau_spread, self.equality_band];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Validation("tolerances must be positive".into()));
        }
        if self.walkers == 0 || self.depth == 0 {
            return Err(Error::Validation("walkers and depth must be positive".into()));
        }
        if let Some(b) = &self.bbox {
            b.validate()?;
        }
        SamplerConfig { n_samples: self.samples, burn_in: self.burn_in, seed: self.seed, full_tree_depth: 0 }.validate()
    }

    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig { n_samples: self.samples, burn_in: self.burn_in, seed: self.seed, full_tree_depth: 0 }
    }
}

/// Escape-rate evaluator that stops at `depth` terms: the tolerance is
/// relaxed to the tail bound that depth can certify.
pub fn evaluator_at_depth(f: &RationalMap, tol: f64, depth: usize) -> Result<EscapeRateEvaluator> {
    let probe = EscapeRateEvaluator::with_settings(f.lift(), f64::MAX, depth)?;
    let tol = tol.max(probe.tail_bound(depth) * (1.0 + 1e-12));
    EscapeRateEvaluator::with_settings(f.lift(), tol, depth)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Algebraic {
    pub is_poly: bool,
    pub is_square_poly: bool,
    /// `(a, b)` when `f = a (z - b)^-d + b`, each as `[re, im]`.
    pub special_form: Option<([f64; 2], [f64; 2])>,
}

pub fn classify(f: &RationalMap) -> Result<Algebraic> {
    Ok(Algebraic {
        is_poly: f.is_polynomial(),
        is_square_poly: f.is_square_polynomial()?,
        special_form: f.classify_special_form().map(|(a, b)| ([a.re, a.im], [b.re, b.im])),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Consistent,
    Inconsistent,
    /// Not a square polynomial, but the spread is under twice the threshold.
    Inconclusive,
    /// `∞` is not in the Fatou set; no verdict is given.
    Refused,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: String,
    pub error: String,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemniscateSummary {
    pub c: f64,
    pub composition_residual: f64,
    pub checks: Option<ClaimChecks>,
    pub traced_vertices: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub map_id: String,
    pub d: usize,
    pub algebraic: Option<Algebraic>,
    pub infinity_in_fatou: Option<bool>,
    pub infinity_distance: Option<f64>,
    pub base_height: Option<f64>,
    pub energy: Option<f64>,
    pub spread: Option<SpreadStatistic>,
    pub harmonic_discrepancy: Option<f64>,
    /// Whether the discrepancy lies inside the equality-case band.
    pub within_equality_band: Option<bool>,
    pub walker_stats: Option<WalkerStats>,
    pub lemniscate: Option<LemniscateSummary>,
    pub consistent: bool,
    pub status: Status,
    pub stage_failure: Option<StageFailure>,
    pub config_echo: VerdictConfig,
    pub seeds: Vec<u64>,
    pub calibration_version: String,
    pub timings_ms: Vec<(String, u64)>,
}

impl VerdictReport {
    fn new(map_id: &str, d: usize, cfg: &VerdictConfig) -> Self {
        VerdictReport {
            map_id: map_id.to_string(),
            d,
            algebraic: None,
            infinity_in_fatou: None,
            infinity_distance: None,
            base_height: None,
            energy: None,
            spread: None,
            harmonic_discrepancy: None,
            within_equality_band: None,
            walker_stats: None,
            lemniscate: None,
            consistent: false,
            status: Status::Failed,
            stage_failure: None,
            config_echo: *cfg,
            seeds: vec![cfg.seed],
            calibration_version: CALIBRATION_VERSION.to_string(),
            timings_ms: Vec::new(),
        }
    }

    fn fail(mut self, stage: &str, e: Error) -> Self {
        self.status = if matches!(e, Error::InfinityInJulia { .. }) { Status::Refused } else { Status::Failed };
        self.consistent = false;
        self.stage_failure = Some(StageFailure { stage: stage.into(), error: e.to_string(), exit_code: e.exit_code() });
        self
    }
}

/// Box about the witness hull with 50% margin.
pub fn auto_bbox(witnesses: &EmpiricalMeasure) -> BBox {
    let pts = witnesses.points();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for z in pts {
        x0 = x0.min(z.re);
        x1 = x1.max(z.re);
        y0 = y0.min(z.im);
        y1 = y1.max(z.im);
    }
    let c = Complex64::new(0.5 * (x0 + x1), 0.5 * (y0 + y1));
    let r = witnesses.radius_about(c).max(1e-3);
    BBox::around(c, r, 0.5)
}

/// Maps the consistency rule over the algebraic flag and the spread.
pub fn decide(is_square_poly: bool, spread: f64, tau: f64) -> Status {
    if is_square_poly {
        if spread < tau {
            Status::Consistent
        } else {
            Status::Inconsistent
        }
    } else if spread >= 2.0 * tau {
        Status::Consistent
    } else {
        Status::Inconclusive
    }
}

/// Runs every stage on `f`. Stage errors end the run early and are
/// recorded in the report rather than returned.
pub fn run_verdict(map_id: &str, f: &RationalMap, cfg: &VerdictConfig) -> VerdictReport {
    let mut report = VerdictReport::new(map_id, f.degree(), cfg);
    if let Err(e) = cfg.validate() {
        return report.fail("config", e);
    }
    let mut clock = Instant::now();
    let mut lap = |report: &mut VerdictReport, name: &str| {
        report.timings_ms.push((name.to_string(), clock.elapsed().as_millis() as u64));
        clock = Instant::now();
    };

    let algebraic = match classify(f) {
        Ok(a) => a,
        Err(e) => return report.fail("classify", e),
    };
    report.algebraic = Some(algebraic.clone());
    lap(&mut report, "classify");

    let ev = match evaluator_at_depth(f, cfg.escape_tol, cfg.depth) {
        Ok(ev) => ev,
        Err(e) => return report.fail("escape_rate", e),
    };
    report.base_height = Some(ev.base_height());
    lap(&mut report, "escape_rate");

    let mu = match sample_julia(f, &cfg.sampler()) {
        Ok(m) => m,
        Err(e) => return report.fail("julia_sample", e),
    };
    let dist = infinity_distance(&mu);
    report.infinity_distance = Some(dist);
    report.infinity_in_fatou = Some(dist > DELTA_INF);
    lap(&mut report, "julia_sample");
    if dist <= DELTA_INF {
        return report.fail("fatou_check", Error::InfinityInJulia { min_distance: dist });
    }

    let energy_value = match energy(&mu, &ev) {
        Ok(v) => v,
        Err(e) => return report.fail("energy", e),
    };
    report.energy = Some(energy_value);
    lap(&mut report, "energy");

    let dense = match dense_witnesses(f, &mu, cfg.tree_points) {
        Ok(t) => t,
        Err(e) => return report.fail("preimage_tree", e),
    };
    lap(&mut report, "preimage_tree");

    let bbox = cfg.bbox.unwrap_or_else(|| auto_bbox(&mu));
    let (nx, ny) = cfg.grid;
    let harmonic = label_grid(&dense, bbox, nx, ny, default_delta(&bbox, nx, ny)).and_then(|g| {
        let hc = HarmonicConfig { n_walkers: cfg.walkers, seed: cfg.seed, ..Default::default() };
        sample_harmonic(&g, &hc)
    });
    let nu = match harmonic {
        Ok(h) => {
            report.walker_stats = Some(h.walker_stats);
            h.hits
        }
        Err(e) => return report.fail("harmonic_sample", e),
    };
    lap(&mut report, "harmonic_sample");

    let spread = match julia_potential_spread(&ev, &mu) {
        Ok(s) => s,
        Err(e) => return report.fail("spread", e),
    };
    report.spread = Some(spread);
    let probes = discrepancy_probes(&dense, &nu, bbox.center());
    let discrepancy = measure_discrepancy(&dense, &nu, &probes);
    report.harmonic_discrepancy = Some(discrepancy);
    report.within_equality_band = Some(discrepancy <= cfg.equality_band);
    lap(&mut report, "measure_side");

    if !algebraic.is_poly {
        match lemniscate_stage(f, &ev, energy_value, &mu, bbox, cfg) {
            Ok(l) => report.lemniscate = Some(l),
            Err(e) => return report.fail("lemniscate", e),
        }
        lap(&mut report, "lemniscate");
    }

    report.status = decide(algebraic.is_square_poly, spread.spread, cfg.tau_spread);
    report.consistent = report.status == Status::Consistent;
    report
}

/// All preimages of a sampled Julia point under the largest iterate whose
/// tree stays within `target` points.
pub fn dense_witnesses(f: &RationalMap, mu: &EmpiricalMeasure, target: usize) -> Result<EmpiricalMeasure> {
    let d = f.degree() as f64;
    if target < 2 || (target as f64) < d {
        return Ok(mu.clone());
    }
    let depth = ((target as f64).ln() / d.ln() + 1e-9).floor() as usize;
    full_preimage_tree(f, mu.points()[0], depth)
}

fn lemniscate_stage(
    f: &RationalMap,
    ev: &EscapeRateEvaluator,
    energy: f64,
    mu: &EmpiricalMeasure,
    bbox: BBox,
    cfg: &VerdictConfig,
) -> Result<LemniscateSummary> {
    let c = normalization_constant(ev, energy)?;
    let composition_residual = composition_identity_residual(f, c, cfg.seed)?;
    let l = NormalizedLemniscate::new(f, c, 1)?;
    let (nx, ny) = cfg.lemniscate_grid;
    let trace = match trace_level_set(&l, bbox, nx, ny) {
        Ok(t) => Some(t),
        Err(Error::EmptyLevelSet) => None,
        Err(e) => return Err(e),
    };
    let second = match trace_level_set(&l.with_order(2)?, bbox, nx, ny) {
        Ok(t) => Some(t),
        Err(Error::EmptyLevelSet) => None,
        Err(e) => return Err(e),
    };
    let checks = claim_checks(f, &l, mu, trace.as_ref(), second.as_ref(), ev, energy)?;
    let note = trace.is_none().then(|| "lemniscate does not cross the box".to_string());
    Ok(LemniscateSummary {
        c,
        composition_residual,
        checks: Some(checks),
        traced_vertices: trace.map_or(0, |t| t.vertex_count()),
        note,
    })
}

/// The built-in calibration maps as `(id, numerator, denominator)`.
pub fn suite_maps() -> Vec<(&'static str, RationalMap)> {
    let m = |num: &[f64], den: &[f64]| RationalMap::new(Poly::from_real(num), Poly::from_real(den)).expect("suite map");
    vec![
        ("z^2", m(&[0.0, 0.0, 1.0], &[1.0])),
        ("z^2-1", m(&[-1.0, 0.0, 1.0], &[1.0])),
        ("1/z^2", m(&[1.0], &[0.0, 0.0, 1.0])),
        ("1/z^3", m(&[1.0], &[0.0, 0.0, 0.0, 1.0])),
        // 2 / (z - 1)^3 + 1 = (z^3 - 3z^2 + 3z + 1) / (z^3 - 3z^2 + 3z - 1)
        ("2/(z-1)^3+1", m(&[1.0, 3.0, -3.0, 1.0], &[-1.0, 3.0, -3.0, 1.0])),
        ("(z^3+0.1)/z", m(&[0.1, 0.0, 0.0, 1.0], &[0.0, 1.0])),
    ]
}

pub fn run_suite(cfg: &VerdictConfig) -> Vec<VerdictReport> {
    suite_maps().iter().map(|(id, f)| run_verdict(id, f, cfg)).collect()
}

pub const SUITE_CSV_HEADER: &str =
    "map_id,d,is_poly,is_square_poly,infinity_in_fatou,spread,discrepancy,in_band,energy,base_height,tau_spread,status";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.9e}"))
}

/// One CSV row per report, formatted identically on every platform.
pub fn suite_csv(reports: &[VerdictReport], tau: f64) -> String {
    let mut out = String::from(SUITE_CSV_HEADER);
    out.push('\n');
    for r in reports {
        let alg = r.algebraic.as_ref();
        let status =
            serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{:.9e},{}\n",
            r.map_id,
            r.d,
            alg.map_or("NA".into(), |a| a.is_poly.to_string()),
            alg.map_or("NA".into(), |a| a.is_square_poly.to_string()),
            r.infinity_in_fatou.map_or("NA".into(), |b| b.to_string()),
            opt(r.spread.map(|s| s.spread)),
            opt(r.harmonic_discrepancy),
            r.within_equality_band.map_or("NA".into(), |b| b.to_string()),
            opt(r.energy),
            opt(r.base_height),
            tau,
            status,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decision_table() {
        assert_eq!(decide(true, 0.01, 0.03), Status::Consistent);
        assert_eq!(decide(true, 0.05, 0.03), Status::Inconsistent);
        assert_eq!(decide(false, 0.5, 0.03), Status::Consistent);
        assert_eq!(decide(false, 0.04, 0.03), Status::Inconclusive);
        assert_eq!(decide(false, 0.01, 0.03), Status::Inconclusive);
    }

    #[test]
    fn suite_classification() {
        let flags: Vec<bool> = suite_maps().iter().map(|(_, f)| f.is_square_polynomial().unwrap()).collect();
        assert_eq!(flags, vec![true, true, true, true, true, false]);
    }

    #[test]
    fn identical_measures_have_no_discrepancy() {
        let m = EmpiricalMeasure::uniform(circle_probes(Complex64::new(0.0, 0.0), 1.0, 100)).unwrap();
        let p = discrepancy_probes(&m, &m, Complex64::new(0.0, 0.0));
        assert_eq!(measure_discrepancy(&m, &m, &p), 0.0);
    }

    #[test]
    fn fatou_check_on_circle() {
        let m = EmpiricalMeasure::uniform(circle_probes(Complex64::new(0.0, 0.0), 1.0, 100)).unwrap();
        assert!(infinity_in_fatou(&m));
        let far = EmpiricalMeasure::uniform(vec![Complex64::new(1e3, 0.0)]).unwrap();
        assert!(!infinity_in_fatou(&far));
    }
}
