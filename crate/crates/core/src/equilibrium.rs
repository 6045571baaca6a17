//! Sampling the equilibrium measure by random inverse iteration.
//!
//! Starting from a non-exceptional point, each step replaces the current
//! point by one of its `d` preimages, chosen with probability proportional
//! to multiplicity. The normalized pullbacks `d^-n (f^n)^* δ_z` converge to
//! the equilibrium measure, so after a burn-in the chain visits points
//! distributed (up to correlation) like it.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::escape::EscapeRateEvaluator;
use crate::maps::{ProjectivePoint, RationalMap};
use crate::measure::{circle_probes, EmpiricalMeasure};
use crate::rng::rng_stream;

/// Default start point of every chain.
pub const DEFAULT_START: Complex64 = Complex64::new(1.618_033_9, 0.732_050_8);
/// Number of independent chains the samples are split across.
pub const CHAINS: usize = 256;
/// Largest preimage tree `full_preimage_tree` will build.
pub const MAX_TREE: u128 = 1_000_000;
/// Chordal distance to the exceptional set below which a point counts as exceptional.
const EXCEPTIONAL_GUARD: f64 = 1e-9;
/// Stream id reserved for re-drawing an exceptional start point.
const START_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_samples: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// When positive, `sample_julia` is replaced by the full preimage tree
    /// of this depth.
    pub full_tree_depth: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { n_samples: 10_000, burn_in: 30, seed: 42, full_tree_depth: 0 }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 1 {
            return Err(Error::Validation("n_samples must be at least 1".into()));
        }
        if self.burn_in < 10 {
            return Err(Error::Validation("burn_in must be at least 10".into()));
        }
        Ok(())
    }
}

fn near_any(p: &ProjectivePoint, set: &[ProjectivePoint]) -> bool {
    set.iter().any(|e| e.chordal_distance(p) <= EXCEPTIONAL_GUARD)
}

/// Samples the equilibrium measure of `f` by random inverse iteration.
pub fn sample_julia(f: &RationalMap, cfg: &SamplerConfig) -> Result<EmpiricalMeasure> {
    sample_julia_from(f, cfg, DEFAULT_START)
}

/// As [`sample_julia`] with an explicit start; an exceptional start is
/// re-drawn from the seed.
pub fn sample_julia_from(f: &RationalMap, cfg: &SamplerConfig, start: Complex64) -> Result<EmpiricalMeasure> {
    cfg.validate()?;
    let exceptional = f.exceptional_set()?;
    let mut start = ProjectivePoint::from_affine(start);
    if near_any(&start, &exceptional) {
        let mut rng = rng_stream(cfg.seed, START_STREAM);
        loop {
            let z = Complex64::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0);
            start = ProjectivePoint::from_affine(z);
            if !near_any(&start, &exceptional) {
                break;
            }
        }
    }
    run_chains(f, cfg, start)
}

/// Like [`sample_julia_from`] but fails with `ExceptionalStart` instead of
/// re-drawing.
pub fn sample_julia_strict(f: &RationalMap, cfg: &SamplerConfig, start: Complex64) -> Result<EmpiricalMeasure> {
    cfg.validate()?;
    let p = ProjectivePoint::from_affine(start);
    if near_any(&p, &f.exceptional_set()?) {
        return Err(Error::ExceptionalStart);
    }
    run_chains(f, cfg, p)
}

fn run_chains(f: &RationalMap, cfg: &SamplerConfig, start: ProjectivePoint) -> Result<EmpiricalMeasure> {
    let chains = CHAINS.min(cfg.n_samples);
    let per = cfg.n_samples / chains;
    let extra = cfg.n_samples % chains;
    let results: Vec<Result<Vec<Complex64>>> = (0..chains)
        .into_par_iter()
        .map(|c| {
            let count = per + usize::from(c < extra);
            run_chain(f, start, cfg.burn_in, count, cfg.seed, c as u64)
        })
        .collect();
    let mut points = Vec::with_capacity(cfg.n_samples);
    for r in results {
        points.extend(r?);
    }
    EmpiricalMeasure::uniform(points)
}

fn run_chain(
    f: &RationalMap,
    start: ProjectivePoint,
    burn_in: usize,
    count: usize,
    seed: u64,
    stream: u64,
) -> Result<Vec<Complex64>> {
    let mut rng = rng_stream(seed, stream);
    let d = f.degree();
    let mut z = start;
    let mut out = Vec::with_capacity(count);
    let mut step = 0usize;
    while out.len() < count {
        let fiber = f.preimages(&z)?;
        let mut pick = rng.gen_range(0..d);
        for (p, m) in fiber.iter() {
            if pick < m {
                z = *p;
                break;
            }
            pick -= m;
        }
        step += 1;
        if step > burn_in {
            // the point ∞ has zero mass; skip it if a chain lands there
            if let Some(a) = z.to_affine() {
                out.push(a);
            }
        }
    }
    Ok(out)
}

/// All `d^n` preimages of `z0` under `f^n`, weighted by multiplicity over
/// `d^n`. Preimages at `∞` are dropped and the rest renormalized.
pub fn full_preimage_tree(f: &RationalMap, z0: Complex64, depth: usize) -> Result<EmpiricalMeasure> {
    let d = f.degree() as u128;
    let size = (0..depth).try_fold(1u128, |acc, _| acc.checked_mul(d)).unwrap_or(u128::MAX);
    if size > MAX_TREE {
        return Err(Error::TreeTooLarge { size });
    }
    let start = ProjectivePoint::from_affine(z0);
    if near_any(&start, &f.exceptional_set()?) {
        return Err(Error::ExceptionalStart);
    }
    let inv_d = 1.0 / f.degree() as f64;
    let mut level = vec![(start, 1.0f64)];
    for _ in 0..depth {
        let next: Vec<Result<Vec<(ProjectivePoint, f64)>>> = level
            .par_iter()
            .map(|(p, w)| Ok(f.preimages(p)?.iter().map(|(q, m)| (*q, w * m as f64 * inv_d)).collect()))
            .collect();
        level = Vec::with_capacity(level.len() * f.degree());
        for n in next {
            level.extend(n?);
        }
    }
    let (pts, ws): (Vec<_>, Vec<_>) = level.into_iter().filter_map(|(p, w)| p.to_affine().map(|a| (a, w))).unzip();
    EmpiricalMeasure::normalized(pts, ws)
}

/// `sum_i w_i p_μ(z_i)`, the energy estimate of the sampled measure.
pub fn energy(measure: &EmpiricalMeasure, ev: &EscapeRateEvaluator) -> Result<f64> {
    let vals: Vec<Result<f64>> = measure.points().par_iter().map(|&z| ev.potential(z)).collect();
    let mut total = 0.0;
    for (v, w) in vals.into_iter().zip(measure.weights()) {
        total += w * v?;
    }
    Ok(total)
}

/// Number of probes on the balance circle.
pub const BALANCE_PROBES: usize = 64;
/// Probe circle radius as a multiple of the larger support radius.
pub const BALANCE_RADIUS_FACTOR: f64 = 1.25;

/// Largest difference between the empirical potentials of `f_* μ` and `μ`
/// on a circle enclosing both supports.
pub fn balance_residual(f: &RationalMap, measure: &EmpiricalMeasure) -> Result<f64> {
    let pushed = measure.pushforward(|z| f.eval_affine(z).ok().flatten())?;
    let origin = Complex64::new(0.0, 0.0);
    let radius = BALANCE_RADIUS_FACTOR * measure.radius_about(origin).max(pushed.radius_about(origin));
    let probes = circle_probes(origin, radius.max(1e-6), BALANCE_PROBES);
    let a = measure.potentials(&probes);
    let b = pushed.potentials(&probes);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Poly;

    fn map(num: &[f64], den: &[f64]) -> RationalMap {
        RationalMap::new(Poly::from_real(num), Poly::from_real(den)).unwrap()
    }

    #[test]
    fn squaring_samples_stay_on_circle() {
        let f = map(&[0.0, 0.0, 1.0], &[1.0]);
        let cfg = SamplerConfig { n_samples: 2000, ..Default::default() };
        let m = sample_julia(&f, &cfg).unwrap();
        assert_eq!(m.len(), 2000);
        for z in m.points() {
            assert!((z.norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let f = map(&[-1.0, 0.0, 1.0], &[1.0]);
        let cfg = SamplerConfig { n_samples: 1000, ..Default::default() };
        assert_eq!(sample_julia(&f, &cfg).unwrap(), sample_julia(&f, &cfg).unwrap());
        let other = SamplerConfig { seed: 7, ..cfg };
        assert_ne!(sample_julia(&f, &cfg).unwrap(), sample_julia(&f, &other).unwrap());
    }

    #[test]
    fn config_validation() {
        let f = map(&[0.0, 0.0, 1.0], &[1.0]);
        let cfg = SamplerConfig { burn_in: 5, ..Default::default() };
        assert!(sample_julia(&f, &cfg).is_err());
        let cfg = SamplerConfig { n_samples: 0, ..Default::default() };
        assert!(sample_julia(&f, &cfg).is_err());
    }

    #[test]
    fn exceptional_start_is_rejected_or_redrawn() {
        let f = map(&[0.0, 0.0, 1.0], &[1.0]);
        let cfg = SamplerConfig { n_samples: 100, ..Default::default() };
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!(sample_julia_strict(&f, &cfg, zero), Err(Error::ExceptionalStart));
        let m = sample_julia_from(&f, &cfg, zero).unwrap();
        assert!(m.points().iter().all(|z| (z.norm() - 1.0).abs() < 1e-6));
    }

    #[test]
    fn tree_of_squaring() {
        let f = map(&[0.0, 0.0, 1.0], &[1.0]);
        let t = full_preimage_tree(&f, Complex64::new(1.0, 0.0), 3).unwrap();
        assert_eq!(t.len(), 8);
        for (z, w) in t.iter() {
            assert!((w - 0.125).abs() < 1e-15);
            assert!((z.powu(8) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        assert_eq!(full_preimage_tree(&f, Complex64::new(0.0, 0.0), 3), Err(Error::ExceptionalStart));
        assert!(matches!(full_preimage_tree(&f, Complex64::new(1.0, 0.0), 20), Err(Error::TreeTooLarge { .. })));
    }

    #[test]
    fn point_mass_is_not_balanced() {
        let f = map(&[0.0, 0.0, 1.0], &[1.0]);
        let m = EmpiricalMeasure::uniform(vec![Complex64::new(0.5, 0.0)]).unwrap();
        assert!(balance_residual(&f, &m).unwrap() > 0.5);
    }
}
