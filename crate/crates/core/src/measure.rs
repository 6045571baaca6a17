//! Weighted point clouds in the plane and their logarithmic potentials.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// A finite probability measure `sum_i w_i δ_{z_i}` on the plane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalMeasure {
    points: Vec<Complex64>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    /// Validates finite points and positive weights summing to 1 within
    /// 1e-12 plus the rounding error of the sum itself.
    pub fn new(points: Vec<Complex64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::Validation("points and weights differ in length".into()));
        }
        if points.is_empty() {
            return Err(Error::Validation("empirical measure needs at least one point".into()));
        }
        if points.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Validation("non-finite point in empirical measure".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Validation("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 + 4.0 * f64::EPSILON * points.len() as f64 {
            return Err(Error::Validation(format!("weights sum to {total}, not 1")));
        }
        Ok(EmpiricalMeasure { points, weights })
    }

    /// Equal weights `1 / n`.
    pub fn uniform(points: Vec<Complex64>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0 / n.max(1) as f64; n])
    }

    /// Weights are rescaled to sum to 1 before validation.
    pub fn normalized(points: Vec<Complex64>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        Self::new(points, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Complex64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    /// Largest `|z_i - center|`.
    pub fn radius_about(&self, center: Complex64) -> f64 {
        self.points.iter().map(|z| (z - center).norm()).fold(0.0, f64::max)
    }

    /// `sum_i w_i log|z - z_i|`.
    pub fn potential_at(&self, z: Complex64) -> f64 {
        self.iter().map(|(p, w)| w * (z - p).norm().ln()).sum()
    }

    /// Potential with the kernel `log max(|z - z_i|, h)`.
    pub fn smoothed_potential_at(&self, z: Complex64, h: f64) -> f64 {
        self.iter().map(|(p, w)| w * (z - p).norm().max(h).ln()).sum()
    }

    /// Potentials at many probes, evaluated in parallel; the output order
    /// matches `probes`.
    pub fn potentials(&self, probes: &[Complex64]) -> Vec<f64> {
        probes.par_iter().map(|&z| self.potential_at(z)).collect()
    }

    pub fn smoothed_potentials(&self, probes: &[Complex64], h: f64) -> Vec<f64> {
        probes.par_iter().map(|&z| self.smoothed_potential_at(z, h)).collect()
    }

    /// `sum_i w_i δ_{g(z_i)}`, dropping points `g` sends to `None` and
    /// renormalizing.
    pub fn pushforward<F>(&self, g: F) -> Result<Self>
    where
        F: Fn(Complex64) -> Option<Complex64> + Sync,
    {
        let mapped: Vec<Option<Complex64>> = self.points.par_iter().map(|&z| g(z)).collect();
        let (pts, ws): (Vec<_>, Vec<_>) =
            mapped.into_iter().zip(&self.weights).filter_map(|(p, &w)| p.map(|p| (p, w))).unzip();
        Self::normalized(pts, ws)
    }
}

/// `n` points equally spaced on the circle `|z - center| = radius`.
pub fn circle_probes(center: Complex64, radius: f64, n: usize) -> Vec<Complex64> {
    (0..n).map(|k| center + Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / n as f64)).collect()
}

/// Kolmogorov–Smirnov distance between the sample and the uniform law on
/// `[0, 1)`.
pub fn ks_uniform(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let lo = x - i as f64 / n;
            let hi = (i + 1) as f64 / n - x;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}
