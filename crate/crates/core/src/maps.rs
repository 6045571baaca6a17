//! Rational maps on the Riemann sphere and their homogeneous lifts.
//!
//! A point of the sphere is a pair `[z0 : z1]`; the affine coordinate is
//! `z1 / z0`, so `[1 : 0]` is `0` and `[0 : 1]` is `∞`. A rational map
//! `f = num / den` of degree `d` is represented by the lift
//! `F = (F0, F1)` with `F0(1, z) = den(z)` and `F1(1, z) = num(z)` up to a
//! common scale. Coefficient `j` of a homogeneous polynomial multiplies
//! `z0^(d-j) z1^j`.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::poly::{convolve, Poly};
use crate::roots::{roots_with_multiplicity, RootConfig};
use crate::scalar::Scalar;

/// Numerical thresholds used by map construction and the fiber computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative size below which a leading coefficient counts as zero.
    pub lead: f64,
    /// Minimum modulus of the resultant of the canonical lift.
    pub res: f64,
    /// Minimum of `|num(r)|` over denominator roots `r` (and vice versa).
    pub gcd: f64,
    /// Relative coefficient tolerance for the `a (z - b)^-d + b` test.
    pub form: f64,
    /// Chordal distance below which two points of the sphere coincide.
    pub point: f64,
    pub roots: RootConfig,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { lead: 1e-12, res: 1e-12, gcd: 1e-9, form: 1e-9, point: 1e-6, roots: RootConfig::default() }
    }
}

/// A point of the Riemann sphere in homogeneous coordinates, stored with
/// unit Euclidean norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectivePoint<T: Scalar = f64> {
    z0: Complex<T>,
    z1: Complex<T>,
}

impl<T: Scalar> ProjectivePoint<T> {
    /// Normalizes `(z0, z1)`; fails on `(0, 0)` or non-finite input.
    pub fn new(z0: Complex<T>, z1: Complex<T>) -> Result<Self> {
        let n = pair_norm(z0, z1);
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::Validation(format!("invalid homogeneous pair ({z0}, {z1})")));
        }
        Ok(ProjectivePoint { z0: z0 / n, z1: z1 / n })
    }

    pub fn from_affine(z: Complex<T>) -> Self {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Self::infinity();
        }
        // scale before squaring so huge |z| does not overflow
        let (a, b) = if z.norm() > T::one() { (z.inv(), Complex::one()) } else { (Complex::one(), z) };
        let n = pair_norm(a, b);
        ProjectivePoint { z0: a / n, z1: b / n }
    }

    pub fn infinity() -> Self {
        ProjectivePoint { z0: Complex::zero(), z1: Complex::one() }
    }

    pub fn z0(&self) -> Complex<T> {
        self.z0
    }

    pub fn z1(&self) -> Complex<T> {
        self.z1
    }

    pub fn is_infinity(&self) -> bool {
        self.z0.is_zero()
    }

    /// Affine coordinate, `None` at `∞`.
    pub fn to_affine(&self) -> Option<Complex<T>> {
        if self.z0.is_zero() {
            None
        } else {
            Some(self.z1 / self.z0)
        }
    }

    /// Chordal distance `|z0 w1 - z1 w0|` in `[0, 1]`.
    pub fn chordal_distance(&self, other: &Self) -> T {
        (self.z0 * other.z1 - self.z1 * other.z0).norm()
    }
}

fn pair_norm<T: Scalar>(a: Complex<T>, b: Complex<T>) -> T {
    a.norm().hypot(b.norm())
}

/// Distinct points of the sphere with positive integer multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalPointSet<T: Scalar = f64> {
    pub points: Vec<ProjectivePoint<T>>,
    pub multiplicities: Vec<usize>,
}

impl<T: Scalar> SphericalPointSet<T> {
    pub fn total_multiplicity(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ProjectivePoint<T>, usize)> {
        self.points.iter().zip(self.multiplicities.iter().copied())
    }

    /// True when the set is the single point `p` (up to `tol` chordally).
    pub fn is_single(&self, p: &ProjectivePoint<T>, tol: T) -> bool {
        self.points.len() == 1 && self.points[0].chordal_distance(p) <= tol
    }
}

/// A pair of degree-`d` homogeneous polynomials `(F0, F1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousLift<T: Scalar = f64> {
    f0: Vec<Complex<T>>,
    f1: Vec<Complex<T>>,
}

impl<T: Scalar> HomogeneousLift<T> {
    /// Both coefficient vectors must have length `d + 1` with `d >= 1`.
    pub fn new(f0: Vec<Complex<T>>, f1: Vec<Complex<T>>) -> Result<Self> {
        if f0.len() != f1.len() || f0.len() < 2 {
            return Err(Error::Validation(format!(
                "lift components must have equal length >= 2, got {} and {}",
                f0.len(),
                f1.len()
            )));
        }
        if f0.iter().chain(&f1).any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Validation("non-finite lift coefficient".into()));
        }
        Ok(HomogeneousLift { f0, f1 })
    }

    pub fn degree(&self) -> usize {
        self.f0.len() - 1
    }

    pub fn f0(&self) -> &[Complex<T>] {
        &self.f0
    }

    pub fn f1(&self) -> &[Complex<T>] {
        &self.f1
    }

    pub fn max_abs(&self) -> T {
        self.f0.iter().chain(&self.f1).fold(T::zero(), |m, c| m.max(c.norm()))
    }

    /// `c F`.
    pub fn scaled(&self, c: Complex<T>) -> Self {
        HomogeneousLift { f0: self.f0.iter().map(|&x| x * c).collect(), f1: self.f1.iter().map(|&x| x * c).collect() }
    }

    /// The representative with largest coefficient modulus 1.
    pub fn canonical(&self) -> Self {
        let m = self.max_abs();
        if m > T::zero() {
            self.scaled(Complex::new(m.recip(), T::zero()))
        } else {
            self.clone()
        }
    }

    /// `F0(1, z)` as a univariate polynomial.
    pub fn denominator(&self) -> Poly<T> {
        Poly::new(self.f0.clone())
    }

    /// `F1(1, z)` as a univariate polynomial.
    pub fn numerator(&self) -> Poly<T> {
        Poly::new(self.f1.clone())
    }

    /// Raw value `F(z0, z1)`.
    pub fn eval(&self, z0: Complex<T>, z1: Complex<T>) -> (Complex<T>, Complex<T>) {
        let d = self.degree() as i32;
        if z0.norm() >= z1.norm() {
            let t = z1 / z0;
            let s = z0.powi(d);
            (horner(&self.f0, t) * s, horner(&self.f1, t) * s)
        } else {
            let t = z0 / z1;
            let s = z1.powi(d);
            (horner_rev(&self.f0, t) * s, horner_rev(&self.f1, t) * s)
        }
    }

    /// `F(W)` split as `(F(W) / |F(W)|, log |F(W)|)` without forming
    /// `z0^d` explicitly, so neither underflow nor overflow occurs for
    /// unit-norm `W`.
    pub fn eval_log(&self, w: &ProjectivePoint<T>) -> Result<(ProjectivePoint<T>, T)> {
        self.eval_log_pair(w.z0, w.z1)
    }

    pub(crate) fn eval_log_pair(&self, z0: Complex<T>, z1: Complex<T>) -> Result<(ProjectivePoint<T>, T)> {
        let d = T::from_usize(self.degree()).unwrap();
        let (a, b, base, log_base) = if z0.norm() >= z1.norm() {
            let t = z1 / z0;
            (horner(&self.f0, t), horner(&self.f1, t), z0, z0.norm().ln())
        } else {
            let t = z0 / z1;
            (horner_rev(&self.f0, t), horner_rev(&self.f1, t), z1, z1.norm().ln())
        };
        let n = pair_norm(a, b);
        let floor = T::epsilon() * T::epsilon() * self.max_abs();
        if !(n > floor) || !n.is_finite() {
            return Err(Error::DegenerateEvaluation);
        }
        // the phase of base^d is irrelevant projectively
        let phase = {
            let u = base / base.norm();
            u.powi(self.degree() as i32)
        };
        let p = ProjectivePoint { z0: a * phase / n, z1: b * phase / n };
        Ok((p, n.ln() + d * log_base))
    }

    /// `F ∘ G`, of degree `deg F · deg G`.
    pub fn compose(&self, g: &HomogeneousLift<T>) -> Result<Self> {
        let df = self.degree();
        let mut pow0 = vec![vec![Complex::one()]];
        let mut pow1 = vec![vec![Complex::one()]];
        for k in 1..=df {
            pow0.push(convolve(&pow0[k - 1], &g.f0));
            pow1.push(convolve(&pow1[k - 1], &g.f1));
        }
        let len = df * g.degree() + 1;
        let combine = |coeffs: &[Complex<T>]| -> Vec<Complex<T>> {
            let mut out = vec![Complex::zero(); len];
            for (j, &c) in coeffs.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let term = convolve(&pow0[df - j], &pow1[j]);
                for (o, t) in out.iter_mut().zip(term) {
                    *o = *o + c * t;
                }
            }
            out
        };
        let f0 = combine(&self.f0);
        let f1 = combine(&self.f1);
        if f0.iter().chain(&f1).any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::CoefficientOverflow);
        }
        Ok(HomogeneousLift { f0, f1 })
    }

    /// `F^n`, the `n`-fold composition (`n >= 1`).
    pub fn iterate(&self, n: usize) -> Result<Self> {
        assert!(n >= 1, "iterate order must be positive");
        let mut acc = self.clone();
        for _ in 1..n {
            acc = self.compose(&acc)?;
        }
        Ok(acc)
    }

    /// Homogeneous resultant of `F0` and `F1` (vanishes iff they share a
    /// zero on the sphere).
    pub fn resultant(&self) -> Complex<T> {
        let d = self.degree();
        let n = 2 * d;
        let mut m = vec![vec![Complex::<T>::zero(); n]; n];
        for r in 0..d {
            for j in 0..=d {
                m[r][r + j] = self.f0[j];
                m[r + d][r + j] = self.f1[j];
            }
        }
        determinant(m)
    }
}

fn horner<T: Scalar>(c: &[Complex<T>], t: Complex<T>) -> Complex<T> {
    c.iter().rev().fold(Complex::zero(), |acc, &x| acc * t + x)
}

/// `sum c_j t^(d-j)`.
fn horner_rev<T: Scalar>(c: &[Complex<T>], t: Complex<T>) -> Complex<T> {
    c.iter().fold(Complex::zero(), |acc, &x| acc * t + x)
}

fn determinant<T: Scalar>(mut m: Vec<Vec<Complex<T>>>) -> Complex<T> {
    let n = m.len();
    let mut det = Complex::one();
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| m[a][col].norm().partial_cmp(&m[b][col].norm()).unwrap()).unwrap();
        if m[pivot][col].is_zero() {
            return Complex::zero();
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        let p = m[col][col];
        det = det * p;
        for r in (col + 1)..n {
            let factor = m[r][col] / p;
            if factor.is_zero() {
                continue;
            }
            for c in col..n {
                let v = m[col][c];
                m[r][c] = m[r][c] - factor * v;
            }
        }
    }
    det
}

/// A reduced rational map of degree `d > 1` with its canonical lift.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalMap<T: Scalar = f64> {
    numerator: Poly<T>,
    denominator: Poly<T>,
    degree: usize,
    lift: HomogeneousLift<T>,
    tol: Tolerances,
}

impl<T: Scalar> RationalMap<T> {
    /// Validates and builds `num / den` with default tolerances.
    pub fn new(numerator: Poly<T>, denominator: Poly<T>) -> Result<Self> {
        Self::with_tolerances(numerator, denominator, Tolerances::default())
    }

    pub fn with_tolerances(numerator: Poly<T>, denominator: Poly<T>, tol: Tolerances) -> Result<Self> {
        let lead = T::lit(tol.lead);
        let scale = numerator.max_abs().max(denominator.max_abs());
        if !(scale > T::zero()) || !scale.is_finite() {
            return Err(Error::Validation("coefficients must be finite and not all zero".into()));
        }
        let num = trim_against(&numerator, lead * scale);
        let den = trim_against(&denominator, lead * scale);
        if den.is_zero() {
            return Err(Error::Validation("denominator is zero".into()));
        }
        if num.is_zero() {
            return Err(Error::Validation("numerator is zero: the map is constant".into()));
        }
        let degree = num.degree().max(den.degree());
        if degree <= 1 {
            return Err(Error::Validation(format!("degree must exceed 1, got {degree}")));
        }
        let inv = Complex::new(scale.recip(), T::zero());
        let (num_n, den_n) = (num.scale(inv), den.scale(inv));
        check_coprime(&num_n, &den_n, &tol)?;
        let lift = HomogeneousLift { f0: den_n.padded(degree + 1), f1: num_n.padded(degree + 1) }.canonical();
        let res = lift.resultant().norm();
        if !(res > T::lit(tol.res)) {
            return Err(Error::Validation(format!("lift is degenerate: |resultant| = {:e}", res.to_f64_lossy())));
        }
        Ok(RationalMap { numerator: num, denominator: den, degree, lift, tol })
    }

    /// The map whose canonical lift is `lift`. Lifts produced by composing
    /// non-degenerate lifts are non-degenerate, so no coprimality test runs.
    pub fn from_lift(lift: &HomogeneousLift<T>, tol: Tolerances) -> Result<Self> {
        let lift = lift.canonical();
        let degree = lift.degree();
        if degree <= 1 {
            return Err(Error::Validation(format!("degree must exceed 1, got {degree}")));
        }
        let lead = T::lit(tol.lead);
        let numerator = trim_against(&lift.numerator(), lead);
        let denominator = trim_against(&lift.denominator(), lead);
        Ok(RationalMap { numerator, denominator, degree, lift, tol })
    }

    pub fn numerator(&self) -> &Poly<T> {
        &self.numerator
    }

    pub fn denominator(&self) -> &Poly<T> {
        &self.denominator
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn lift(&self) -> &HomogeneousLift<T> {
        &self.lift
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// `f(z)` on the sphere.
    pub fn evaluate(&self, z: &ProjectivePoint<T>) -> Result<ProjectivePoint<T>> {
        Ok(self.lift.eval_log(z)?.0)
    }

    /// `f(z)` in the affine chart; `None` when the image is `∞`.
    pub fn eval_affine(&self, z: Complex<T>) -> Result<Option<Complex<T>>> {
        Ok(self.evaluate(&ProjectivePoint::from_affine(z))?.to_affine())
    }

    /// `f^n` via composition of lifts.
    pub fn iterate(&self, n: usize) -> Result<Self> {
        Self::from_lift(&self.lift.iterate(n)?, self.tol)
    }

    /// The fiber `f^{-1}(a)` with multiplicities summing to `d`.
    pub fn preimages(&self, a: &ProjectivePoint<T>) -> Result<SphericalPointSet<T>> {
        let coeffs: Vec<Complex<T>> =
            self.lift.f1.iter().zip(&self.lift.f0).map(|(&n, &d)| a.z0 * n - a.z1 * d).collect();
        let q = Poly::new(coeffs);
        let q = q.trimmed(T::lit(self.tol.lead));
        let mut points = Vec::new();
        let mut multiplicities = Vec::new();
        if q.degree() > 0 {
            for (r, m) in roots_with_multiplicity(&q, &self.tol.roots)? {
                points.push(ProjectivePoint::from_affine(r));
                multiplicities.push(m);
            }
        }
        let at_infinity = self.degree - q.degree();
        if at_infinity > 0 {
            points.push(ProjectivePoint::infinity());
            multiplicities.push(at_infinity);
        }
        Ok(SphericalPointSet { points, multiplicities })
    }

    /// Fixed points of `f^2` on the sphere.
    fn second_iterate_fixed_points(&self) -> Result<Vec<ProjectivePoint<T>>> {
        let f2 = self.lift.compose(&self.lift)?;
        let dd = f2.degree();
        // z0 F1(z) - z1 F0(z), coefficient j multiplies z0^(D+1-j) z1^j
        let mut h = vec![Complex::zero(); dd + 2];
        for j in 0..=dd {
            h[j] = h[j] + f2.f1[j];
            h[j + 1] = h[j + 1] - f2.f0[j];
        }
        let q = Poly::new(h).trimmed(T::lit(self.tol.lead));
        let mut pts = Vec::new();
        if q.degree() > 0 {
            for (r, _) in roots_with_multiplicity(&q, &self.tol.roots)? {
                pts.push(ProjectivePoint::from_affine(r));
            }
        }
        if q.degree() < dd + 1 {
            pts.push(ProjectivePoint::infinity());
        }
        Ok(pts)
    }

    /// `E(f) = { a : f^{-2}(a) = {a} }`, at most two points.
    pub fn exceptional_set(&self) -> Result<Vec<ProjectivePoint<T>>> {
        let tol = T::lit(self.tol.point);
        let mut out: Vec<ProjectivePoint<T>> = Vec::new();
        for a in self.second_iterate_fixed_points()? {
            if out.iter().any(|e| e.chordal_distance(&a) <= tol) {
                continue;
            }
            if self.is_exceptional(&a)? {
                out.push(a);
            }
        }
        Ok(out)
    }

    /// `f^{-2}(a) = {a}`, decided as `f^{-1}(a) = {b}` and `f^{-1}(b) = {a}`.
    pub fn is_exceptional(&self, a: &ProjectivePoint<T>) -> Result<bool> {
        let tol = T::lit(self.tol.point);
        let first = self.preimages(a)?;
        if first.len() != 1 {
            return Ok(false);
        }
        let b = first.points[0];
        Ok(self.preimages(&b)?.is_single(a, tol))
    }

    /// Constant denominator, i.e. `f^{-1}(∞) = {∞}`.
    pub fn is_polynomial(&self) -> bool {
        self.denominator.degree() == 0
    }

    /// `f^{-2}(∞) = {∞}`, computed from the fibers of `f`.
    pub fn is_square_polynomial(&self) -> Result<bool> {
        let inf = ProjectivePoint::infinity();
        let tol = T::lit(self.tol.point);
        for (b, _) in self.preimages(&inf)?.iter() {
            if !self.preimages(b)?.is_single(&inf, tol) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The same predicate read off `F^2`: its `F0` component has no terms
    /// besides `z0^(d^2)`.
    pub fn is_square_polynomial_by_lift(&self) -> Result<bool> {
        let f2 = self.lift.compose(&self.lift)?;
        let cutoff = T::lit(self.tol.lead) * f2.max_abs();
        Ok(f2.f0.iter().skip(1).all(|c| c.norm() <= cutoff))
    }

    /// `(a, b)` with `f(z) = a (z - b)^{-d} + b`, if `f` has that form.
    pub fn classify_special_form(&self) -> Option<(Complex<T>, Complex<T>)> {
        let d = self.degree;
        let den = &self.denominator;
        if den.degree() != d {
            return None;
        }
        let tol = T::lit(self.tol.form);
        let scale = self.numerator.max_abs().max(den.max_abs());
        let lambda = den.leading();
        let b = -den.coeffs()[d - 1] / (lambda * T::from_usize(d).unwrap());
        let power = Poly::linear_root(b).pow(d as u32).scale(lambda);
        let close = |p: &Poly<T>, q: &Poly<T>| -> bool {
            let n = p.degree().max(q.degree()) + 1;
            p.padded(n).iter().zip(q.padded(n)).all(|(x, y)| (x - y).norm() <= tol * scale)
        };
        if !close(den, &power) {
            return None;
        }
        let rest = &self.numerator - &den.scale(b);
        if rest.coeffs().iter().skip(1).any(|c| c.norm() > tol * scale) {
            return None;
        }
        let a = rest.coeffs()[0] / lambda;
        if a.norm() <= tol * scale {
            return None;
        }
        Some((a, b))
    }

    /// Total-variation distance between `f^* ν_a` and `d ν_a` for
    /// `ν_a = (δ_a + δ_{f(a)}) / 2`.
    pub fn balanced_check_exceptional(&self, a: &ProjectivePoint<T>) -> Result<T> {
        if !self.is_exceptional(a)? {
            return Err(Error::NotExceptional);
        }
        let tol = T::lit(self.tol.point);
        let half = T::lit(0.5);
        let fa = self.evaluate(a)?;
        let nu = vec![(*a, half), (fa, half)];
        let d = T::from_usize(self.degree).unwrap();
        let mut pulled: Vec<(ProjectivePoint<T>, T)> = Vec::new();
        for (x, w) in &nu {
            for (b, m) in self.preimages(x)?.iter() {
                add_atom(&mut pulled, *b, *w * T::from_usize(m).unwrap(), tol);
            }
        }
        let mut target: Vec<(ProjectivePoint<T>, T)> = Vec::new();
        for (x, w) in &nu {
            add_atom(&mut target, *x, *w * d, tol);
        }
        // signed difference on the union of supports
        let mut diff = pulled;
        for (x, w) in target {
            add_atom(&mut diff, x, -w, tol);
        }
        Ok(diff.iter().fold(T::zero(), |s, (_, w)| s + w.abs()) * half)
    }
}

fn add_atom<T: Scalar>(atoms: &mut Vec<(ProjectivePoint<T>, T)>, p: ProjectivePoint<T>, w: T, tol: T) {
    if let Some(slot) = atoms.iter_mut().find(|(q, _)| q.chordal_distance(&p) <= tol) {
        slot.1 = slot.1 + w;
    } else {
        atoms.push((p, w));
    }
}

fn trim_against<T: Scalar>(p: &Poly<T>, cutoff: T) -> Poly<T> {
    let mut c = p.coeffs().to_vec();
    while c.len() > 1 && c.last().is_some_and(|x| x.norm() <= cutoff) {
        c.pop();
    }
    Poly::new(c)
}

fn check_coprime<T: Scalar>(num: &Poly<T>, den: &Poly<T>, tol: &Tolerances) -> Result<()> {
    let gcd = T::lit(tol.gcd);
    for (roots_of, other, name) in [(den, num, "denominator"), (num, den, "numerator")] {
        if roots_of.degree() == 0 {
            continue;
        }
        for (r, _) in roots_with_multiplicity(roots_of, &tol.roots)? {
            let v = other.eval(r).norm();
            if !(v > gcd) {
                return Err(Error::Validation(format!(
                    "numerator and denominator share the root {} (|value| = {:e} at a {} root)",
                    format_complex(r),
                    v.to_f64_lossy(),
                    name
                )));
            }
        }
    }
    Ok(())
}

fn format_complex<T: Scalar>(z: Complex<T>) -> String {
    format!("{:.6}{:+.6}i", z.re.to_f64_lossy(), z.im.to_f64_lossy())
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn map(num: &[f64], den: &[f64]) -> RationalMap {
        RationalMap::new(Poly::from_real(num), Poly::from_real(den)).unwrap()
    }

    fn affine(p: &ProjectivePoint) -> C {
        p.to_affine().unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let sq = map(&[0.0, 0.0, 1.0], &[1.0]);
        let out = sq.evaluate(&ProjectivePoint::new(c(1.0, 0.0), c(2.0, 0.0)).unwrap()).unwrap();
        assert!((affine(&out) - c(4.0, 0.0)).norm() < 1e-14);

        let inv = map(&[1.0], &[0.0, 0.0, 1.0]);
        let out = inv.evaluate(&ProjectivePoint::infinity()).unwrap();
        assert!(out.chordal_distance(&ProjectivePoint::from_affine(c(0.0, 0.0))) < 1e-15);

        let f = map(&[0.1, 0.0, 0.0, 1.0], &[0.0, 1.0]);
        let out = f.evaluate(&ProjectivePoint::from_affine(c(1.0, 0.0))).unwrap();
        assert!((affine(&out) - c(1.1, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn rejects_low_degree_and_shared_roots() {
        assert!(RationalMap::new(Poly::from_real(&[0.0, 1.0]), Poly::from_real(&[1.0])).is_err());
        // (z^2 - 1) / (z - 1) shares the root 1
        let err = RationalMap::new(Poly::from_real(&[-1.0, 0.0, 1.0]), Poly::from_real(&[-1.0, 1.0])).unwrap_err();
        match err {
            Error::Validation(msg) => assert!(msg.contains("1.000000"), "{msg}"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn canonical_lift_has_unit_max_coefficient() {
        let f = map(&[2.0, 0.0, 6.0], &[3.0]);
        assert!((f.lift().max_abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn compose_examples() {
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        let sq = HomogeneousLift::new(vec![one, zero, zero], vec![zero, zero, one]).unwrap();
        let sq2 = sq.compose(&sq).unwrap();
        assert_eq!(sq2.f0(), &[one, zero, zero, zero, zero]);
        assert_eq!(sq2.f1(), &[zero, zero, zero, zero, one]);

        let swap = HomogeneousLift::new(vec![zero, zero, one], vec![one, zero, zero]).unwrap();
        let swap2 = swap.compose(&swap).unwrap();
        assert_eq!(swap2.f0(), &[one, zero, zero, zero, zero]);
        assert_eq!(swap2.f1(), &[zero, zero, zero, zero, one]);
    }

    #[test]
    fn preimage_examples() {
        let sq = map(&[0.0, 0.0, 1.0], &[1.0]);
        let fib = sq.preimages(&ProjectivePoint::from_affine(c(4.0, 0.0))).unwrap();
        assert_eq!(fib.multiplicities, vec![1, 1]);
        let mut xs: Vec<f64> = fib.points.iter().map(|p| affine(p).re).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((xs[0] + 2.0).abs() < 1e-12 && (xs[1] - 2.0).abs() < 1e-12);

        let fib = sq.preimages(&ProjectivePoint::infinity()).unwrap();
        assert_eq!(fib.multiplicities, vec![2]);
        assert!(fib.points[0].is_infinity());

        let f = map(&[0.1, 0.0, 0.0, 1.0], &[0.0, 1.0]);
        let fib = f.preimages(&ProjectivePoint::infinity()).unwrap();
        assert_eq!(fib.total_multiplicity(), 3);
        assert_eq!(fib.len(), 2);
        assert!(fib.points[0].to_affine().unwrap().norm() < 1e-14);
        assert_eq!(fib.multiplicities[0], 1);
        assert!(fib.points[1].is_infinity());
        assert_eq!(fib.multiplicities[1], 2);
    }

    #[test]
    fn exceptional_sets() {
        let zero = ProjectivePoint::from_affine(c(0.0, 0.0));
        let inf = ProjectivePoint::infinity();
        let has = |set: &[ProjectivePoint], p: &ProjectivePoint| set.iter().any(|q| q.chordal_distance(p) < 1e-9);

        let e = map(&[0.0, 0.0, 1.0], &[1.0]).exceptional_set().unwrap();
        assert_eq!(e.len(), 2);
        assert!(has(&e, &zero) && has(&e, &inf));

        let e = map(&[-1.0, 0.0, 1.0], &[1.0]).exceptional_set().unwrap();
        assert_eq!(e.len(), 1);
        assert!(has(&e, &inf));

        let e = map(&[1.0], &[0.0, 0.0, 1.0]).exceptional_set().unwrap();
        assert_eq!(e.len(), 2);
        assert!(has(&e, &zero) && has(&e, &inf));
    }

    #[test]
    fn classifiers() {
        let basilica = map(&[-1.0, 0.0, 1.0], &[1.0]);
        let inv = map(&[1.0], &[0.0, 0.0, 1.0]);
        let mcm = map(&[0.1, 0.0, 0.0, 1.0], &[0.0, 1.0]);
        assert!(basilica.is_polynomial());
        assert!(!inv.is_polynomial());
        assert!(!mcm.is_polynomial());
        assert!(basilica.is_square_polynomial().unwrap());
        assert!(inv.is_square_polynomial().unwrap());
        assert!(!mcm.is_square_polynomial().unwrap());
        assert!(!mcm.is_square_polynomial_by_lift().unwrap());
        assert!(inv.is_square_polynomial_by_lift().unwrap());

        let (a, b) = inv.classify_special_form().unwrap();
        assert!((a - c(1.0, 0.0)).norm() < 1e-12 && b.norm() < 1e-12);
        assert!(mcm.classify_special_form().is_none());

        // 2/(z-1)^3 + 1 = ((z-1)^3 + 2) / (z-1)^3
        let cube = Poly::linear_root(c(1.0, 0.0)).pow(3);
        let num = &cube + &Poly::constant(c(2.0, 0.0));
        let special = RationalMap::new(num, cube).unwrap();
        let (a, b) = special.classify_special_form().unwrap();
        assert!((a - c(2.0, 0.0)).norm() < 1e-9 && (b - c(1.0, 0.0)).norm() < 1e-9);
        assert!(special.is_square_polynomial().unwrap());
    }

    #[test]
    fn balanced_check() {
        let zero = ProjectivePoint::from_affine(c(0.0, 0.0));
        let sq = map(&[0.0, 0.0, 1.0], &[1.0]);
        assert!(sq.balanced_check_exceptional(&zero).unwrap() < 1e-12);
        let inv = map(&[1.0], &[0.0, 0.0, 1.0]);
        assert!(inv.balanced_check_exceptional(&zero).unwrap() < 1e-12);
        let basilica = map(&[-1.0, 0.0, 1.0], &[1.0]);
        assert!(basilica.balanced_check_exceptional(&ProjectivePoint::infinity()).unwrap() < 1e-12);
        assert_eq!(basilica.balanced_check_exceptional(&zero), Err(Error::NotExceptional));
    }

    #[test]
    fn single_precision_evaluation() {
        let f = RationalMap::<f32>::new(Poly::from_real(&[-1.0, 0.0, 1.0]), Poly::from_real(&[1.0])).unwrap();
        let out = f.eval_affine(Complex::new(2.0f32, 0.0)).unwrap().unwrap();
        assert!((out - Complex::new(3.0f32, 0.0)).norm() < 1e-6);
    }
}
