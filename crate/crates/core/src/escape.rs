//! The escape-rate function of a lift and the equilibrium potential.
//!
//! For a lift `F` of degree `d` and `W_0 = Z / |Z|`, `W_k = F(W_{k-1}) / |F(W_{k-1})|`,
//!
//! ```text
//! G(Z) = log|Z| + sum_{k >= 1} d^-k log|F(W_{k-1})|
//! ```
//!
//! which equals `lim log|F^n(Z)| / d^n` by homogeneity but never forms
//! `F^n(Z)`. The terms are bounded by `max(|log m|, |log M|)` where `m` and
//! `M` bound `|F|` on the unit sphere, giving a geometric tail bound used
//! as the stopping rule.

use num_complex::Complex;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::maps::{HomogeneousLift, ProjectivePoint};
use crate::rng::{radical_inverse, rng_stream, uniform};
use crate::scalar::Scalar;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_DEPTH: usize = 64;
const SPHERE_SAMPLES: u64 = 10_000;
const SPHERE_SAFETY: f64 = 2.0;

/// Evaluates `G^F` for a fixed lift.
#[derive(Debug, Clone)]
pub struct EscapeRateEvaluator<T: Scalar = f64> {
    lift: HomogeneousLift<T>,
    tol: T,
    max_depth: usize,
    sphere_bounds: (T, T),
    log_bound: T,
    base_height: T,
}

impl<T: Scalar> EscapeRateEvaluator<T> {
    pub fn new(lift: &HomogeneousLift<T>) -> Result<Self> {
        Self::with_settings(lift, DEFAULT_TOL, DEFAULT_MAX_DEPTH)
    }

    /// Builds the evaluator, estimating the sphere bounds of `|F|` from
    /// quasi-random unit vectors.
    pub fn with_settings(lift: &HomogeneousLift<T>, tol: f64, max_depth: usize) -> Result<Self> {
        if lift.degree() < 2 {
            return Err(Error::Validation("escape rate needs a lift of degree > 1".into()));
        }
        if !(tol > 0.0) || max_depth == 0 {
            return Err(Error::Validation("tolerance and depth must be positive".into()));
        }
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 1..=SPHERE_SAMPLES {
            // |z0|^2 uniform in [0, 1] is the Fubini-Study measure
            let u = radical_inverse(i, 2);
            let v = radical_inverse(i, 3);
            let w = sphere_point::<T>(u, v);
            let (_, l) = lift.eval_log(&w)?;
            lo = lo.min(l);
            hi = hi.max(l);
        }
        for w in [ProjectivePoint::from_affine(Complex::zero()), ProjectivePoint::infinity()] {
            let (_, l) = lift.eval_log(&w)?;
            lo = lo.min(l);
            hi = hi.max(l);
        }
        let log_bound = T::lit(SPHERE_SAFETY) * lo.abs().max(hi.abs()).max(T::lit(1e-3));
        let mut ev = EscapeRateEvaluator {
            lift: lift.clone(),
            tol: T::lit(tol),
            max_depth,
            sphere_bounds: (lo.exp(), hi.exp()),
            log_bound,
            base_height: T::zero(),
        };
        ev.base_height = ev.escape_rate_point(&ProjectivePoint::infinity())?;
        Ok(ev)
    }

    pub fn lift(&self) -> &HomogeneousLift<T> {
        &self.lift
    }

    pub fn degree(&self) -> usize {
        self.lift.degree()
    }

    pub fn tol(&self) -> T {
        self.tol
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    /// Estimated `(min, max)` of `|F(W)|` over unit `W`.
    pub fn sphere_bounds(&self) -> (T, T) {
        self.sphere_bounds
    }

    /// `G^F(0, 1)`.
    pub fn base_height(&self) -> T {
        self.base_height
    }

    /// Bound on the series remainder after `k` terms.
    pub fn tail_bound(&self, k: usize) -> T {
        let d = T::from_usize(self.degree()).unwrap();
        self.log_bound * d.powi(-(k as i32)) / (d - T::one())
    }

    /// `G^F(z0, z1)` for any nonzero pair.
    pub fn escape_rate(&self, z0: Complex<T>, z1: Complex<T>) -> Result<T> {
        let n = z0.norm().hypot(z1.norm());
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::Validation("escape rate is undefined at (0, 0)".into()));
        }
        let w = ProjectivePoint::new(z0, z1)?;
        Ok(n.ln() + self.escape_rate_point(&w)?)
    }

    /// `G^F` at a unit-norm representative.
    pub fn escape_rate_point(&self, w: &ProjectivePoint<T>) -> Result<T> {
        let d = T::from_usize(self.degree()).unwrap();
        let inv_d = d.recip();
        let mut weight = T::one();
        let mut acc = T::zero();
        let mut w = *w;
        for k in 1..=self.max_depth {
            let (next, l) = self.lift.eval_log(&w)?;
            weight = weight * inv_d;
            acc = acc + weight * l;
            w = next;
            if self.tail_bound(k) < self.tol {
                return Ok(acc);
            }
        }
        Err(Error::DepthExceeded { max_depth: self.max_depth })
    }

    /// Partial sum with exactly `depth` terms and no stopping rule.
    pub fn escape_rate_truncated(&self, z0: Complex<T>, z1: Complex<T>, depth: usize) -> Result<T> {
        let n = z0.norm().hypot(z1.norm());
        let mut w = ProjectivePoint::new(z0, z1)?;
        let inv_d = T::from_usize(self.degree()).unwrap().recip();
        let mut weight = T::one();
        let mut acc = n.ln();
        for _ in 0..depth {
            let (next, l) = self.lift.eval_log(&w)?;
            weight = weight * inv_d;
            acc = acc + weight * l;
            w = next;
        }
        Ok(acc)
    }

    /// `p_μ(z) = G^F(1, z) - G^F(0, 1)`.
    pub fn potential(&self, z: Complex<T>) -> Result<T> {
        Ok(self.escape_rate(Complex::one(), z)? - self.base_height)
    }

    /// Absolute difference of the two sides of
    /// `p(f^n z) + log|F0^(n)(1, z)| = d^n p(z) + (d^n - 1) G(0, 1)`,
    /// with `iterate` the lift `F^n`.
    pub fn pullback_residual_with(&self, iterate: &HomogeneousLift<T>, n: usize, z: Complex<T>) -> Result<T> {
        let (image, log_norm) = iterate.eval_log_pair(Complex::one(), z)?;
        let guard = T::lit(1e-8);
        let pole = image.z0().norm();
        if pole <= guard {
            return Err(Error::PoleProximity { value: pole.to_f64_lossy() });
        }
        let log_f0 = log_norm + pole.ln();
        let fz = image.to_affine().expect("checked away from the pole");
        let dn = T::from_usize(self.degree()).unwrap().powi(n as i32);
        let lhs = self.potential(fz)? + log_f0;
        let rhs = dn * self.potential(z)? + (dn - T::one()) * self.base_height;
        Ok((lhs - rhs).abs())
    }

    /// As [`Self::pullback_residual_with`], composing `F^n` on the fly.
    pub fn pullback_residual(&self, n: usize, z: Complex<T>) -> Result<T> {
        let it = self.lift.iterate(n)?;
        self.pullback_residual_with(&it, n, z)
    }

    /// Maximum residuals of the escape-rate identities over `samples` random
    /// unit points and `c ∈ {0.5, 2, 1+i}`.
    pub fn functional_equation_residuals(&self, samples: usize, seed: u64) -> Result<FunctionalResiduals<T>> {
        if samples == 0 {
            return Err(Error::Validation("need at least one sample".into()));
        }
        let d = T::from_usize(self.degree()).unwrap();
        let scales = [
            Complex::new(T::lit(0.5), T::zero()),
            Complex::new(T::lit(2.0), T::zero()),
            Complex::new(T::one(), T::one()),
        ];
        let scaled: Vec<EscapeRateEvaluator<T>> = scales
            .iter()
            .map(|&c| EscapeRateEvaluator::with_settings(&self.lift.scaled(c), self.tol.to_f64_lossy(), self.max_depth))
            .collect::<Result<_>>()?;
        let second = EscapeRateEvaluator::with_settings(
            &self.lift.compose(&self.lift)?,
            self.tol.to_f64_lossy(),
            self.max_depth,
        )?;
        let mut rng = rng_stream(seed, 0);
        let mut out = FunctionalResiduals::<T>::default();
        for _ in 0..samples {
            let w = sphere_point::<T>(uniform(&mut rng), uniform(&mut rng));
            // random global phase so the representative is not always real in z0
            let phase = Complex::from_polar(T::one(), T::lit(rng.gen::<f64>() * std::f64::consts::TAU));
            let (z0, z1) = (w.z0() * phase, w.z1() * phase);
            let g = self.escape_rate(z0, z1)?;

            let (f0, f1) = self.lift.eval(z0, z1);
            let fe = (self.escape_rate(f0, f1)? - d * g).abs();
            out.fe = out.fe.max(fe);

            for (c, ev_c) in scales.iter().zip(&scaled) {
                let hom = (self.escape_rate(z0 * c, z1 * c)? - g - c.norm().ln()).abs();
                out.hom = out.hom.max(hom);
                let sc = (ev_c.escape_rate(z0, z1)? - g - c.norm().ln() / (d - T::one())).abs();
                out.scale = out.scale.max(sc);
            }
            let it = (second.escape_rate(z0, z1)? - g).abs();
            out.iterate = out.iterate.max(it);
        }
        Ok(out)
    }
}

/// Unit vector with `|z0|^2 = u` and `arg z1 = 2 π v`.
pub(crate) fn sphere_point<T: Scalar>(u: f64, v: f64) -> ProjectivePoint<T> {
    let a = u.sqrt();
    let b = (1.0 - u).sqrt();
    let (s, c) = (std::f64::consts::TAU * v).sin_cos();
    ProjectivePoint::new(Complex::new(T::lit(a), T::zero()), Complex::new(T::lit(b * c), T::lit(b * s)))
        .unwrap_or_else(|_| ProjectivePoint::infinity())
}

/// Maximum residuals of `G∘F = d G`, `G(cZ) = G(Z) + log|c|`,
/// `G^{cF} = G^F + log|c| / (d - 1)` and `G^{F^2} = G^F`.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct FunctionalResiduals<T: Scalar = f64> {
    pub fe: T,
    pub hom: T,
    pub scale: T,
    pub iterate: T,
}

impl<T: Scalar> FunctionalResiduals<T> {
    pub fn max(&self) -> T {
        self.fe.max(self.hom).max(self.scale).max(self.iterate)
    }
}

/// Constants attached to a map's equilibrium potential as the pipeline
/// fills them in.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PotentialProfile {
    /// `G^F(0, 1)` for the canonical lift.
    pub base_height: f64,
    /// Energy of the equilibrium measure.
    pub energy: Option<f64>,
    /// Normalizing scalar of the lemniscate construction.
    pub lift_scale_c: Option<[f64; 2]>,
}

impl PotentialProfile {
    pub fn new(ev: &EscapeRateEvaluator<f64>) -> Self {
        PotentialProfile { base_height: ev.base_height(), energy: None, lift_scale_c: None }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::RationalMap;
    use crate::poly::Poly;

    type C = Complex<f64>;

    fn ev(num: &[f64], den: &[f64]) -> EscapeRateEvaluator {
        let f = RationalMap::new(Poly::from_real(num), Poly::from_real(den)).unwrap();
        EscapeRateEvaluator::new(f.lift()).unwrap()
    }

    #[test]
    fn squaring_closed_form() {
        let e = ev(&[0.0, 0.0, 1.0], &[1.0]);
        let g = e.escape_rate(C::new(1.0, 0.0), C::new(2.0, 0.0)).unwrap();
        assert!((g - 2f64.ln()).abs() < 1e-12);
        assert!((e.potential(C::new(2.0, 0.0)).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!(e.potential(C::new(0.5, 0.0)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn fixed_unit_vectors() {
        let swap = ev(&[1.0], &[0.0, 0.0, 1.0]);
        assert!(swap.escape_rate(C::new(0.0, 0.0), C::new(1.0, 0.0)).unwrap().abs() < 1e-15);
        let basilica = ev(&[-1.0, 0.0, 1.0], &[1.0]);
        assert!(basilica.base_height().abs() < 1e-15);
    }

    #[test]
    fn reciprocal_square_potential() {
        let e = ev(&[1.0], &[0.0, 0.0, 1.0]);
        assert!((e.potential(C::new(3.0, 0.0)).unwrap() - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn truncation_consistency() {
        let e = ev(&[0.1, 0.0, 0.0, 1.0], &[0.0, 1.0]);
        let (z0, z1) = (C::new(0.3, 0.1), C::new(-0.7, 0.2));
        for k in [4, 8, 16] {
            let a = e.escape_rate_truncated(z0, z1, k).unwrap();
            let b = e.escape_rate_truncated(z0, z1, k + 8).unwrap();
            assert!((a - b).abs() <= e.tail_bound(k));
        }
    }

    #[test]
    fn depth_exceeded_when_budget_too_small() {
        let f = RationalMap::new(Poly::from_real(&[-1.0, 0.0, 1.0]), Poly::from_real(&[1.0])).unwrap();
        let e = EscapeRateEvaluator::with_settings(f.lift(), 1e-12, 5).unwrap_err();
        assert_eq!(e, Error::DepthExceeded { max_depth: 5 });
    }

    #[test]
    fn pole_proximity() {
        let e = ev(&[1.0], &[0.0, 0.0, 1.0]);
        assert!(matches!(e.pullback_residual(1, C::new(0.0, 0.0)), Err(Error::PoleProximity { .. })));
    }

    #[test]
    fn single_precision_escape_rate() {
        let f = RationalMap::<f32>::new(Poly::from_real(&[0.0, 0.0, 1.0]), Poly::from_real(&[1.0])).unwrap();
        let e = EscapeRateEvaluator::with_settings(f.lift(), 1e-6, 64).unwrap();
        let p = e.potential(Complex::new(2.0f32, 0.0)).unwrap();
        assert!((p - 2f32.ln()).abs() < 1e-5);
    }
}
