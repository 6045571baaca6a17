//! Dense univariate complex polynomials in ascending coefficient order.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::Scalar;

/// A complex polynomial `c[0] + c[1] z + ... + c[n] z^n`.
///
/// The zero polynomial is stored as a single zero coefficient and has
/// degree 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T: Scalar = f64> {
    coeffs: Vec<Complex<T>>,
}

impl<T: Scalar> Poly<T> {
    /// Builds a polynomial, dropping trailing coefficients that are exactly zero.
    pub fn new(coeffs: Vec<Complex<T>>) -> Self {
        let mut p = Poly { coeffs };
        p.trim_exact();
        p
    }

    /// Builds a polynomial from real coefficients.
    pub fn from_real(coeffs: &[T]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex::new(c, T::zero())).collect())
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![Complex::zero()] }
    }

    pub fn constant(c: Complex<T>) -> Self {
        Poly { coeffs: vec![c] }
    }

    /// `z - root`.
    pub fn linear_root(root: Complex<T>) -> Self {
        Poly { coeffs: vec![-root, Complex::one()] }
    }

    /// Drops trailing coefficients whose modulus is at most `rel_tol` times
    /// the largest coefficient modulus.
    pub fn trimmed(&self, rel_tol: T) -> Self {
        let scale = self.max_abs();
        let mut coeffs = self.coeffs.clone();
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.norm() <= rel_tol * scale) {
            coeffs.pop();
        }
        Poly::new(coeffs)
    }

    fn trim_exact(&mut self) {
        while self.coeffs.len() > 1 && self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(Complex::zero());
        }
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> Complex<T> {
        *self.coeffs.last().expect("nonempty")
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()))
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        self.coeffs.iter().rev().fold(Complex::zero(), |acc, &c| acc * z + c)
    }

    /// Value and first derivative in one Horner pass.
    pub fn eval_with_derivative(&self, z: Complex<T>) -> (Complex<T>, Complex<T>) {
        let mut p = Complex::zero();
        let mut dp = Complex::zero();
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// `sum |c_i| |z|^i`, the natural scale of a rounding error in `eval(z)`.
    pub fn eval_scale(&self, z: Complex<T>) -> T {
        let r = z.norm();
        self.coeffs.iter().rev().fold(T::zero(), |acc, c| acc * r + c.norm())
    }

    pub fn derivative(&self) -> Self {
        if self.degree() == 0 {
            return Poly::zero();
        }
        Poly::new(self.coeffs.iter().enumerate().skip(1).map(|(i, &c)| c * T::from_usize(i).unwrap()).collect())
    }

    /// Taylor coefficients at `c`: `p(c + t) = sum_k out[k] t^k`.
    pub fn taylor_at(&self, c: Complex<T>) -> Vec<Complex<T>> {
        // repeated synthetic division by (z - c)
        let mut work = self.coeffs.clone();
        let n = work.len();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            for i in (k..n - 1).rev() {
                let carry = work[i + 1] * c;
                work[i] = work[i] + carry;
            }
            out.push(work[k]);
        }
        out
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Poly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Poly::constant(Complex::one());
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Composition `self(inner(z))`.
    pub fn compose(&self, inner: &Poly<T>) -> Self {
        self.coeffs.iter().rev().fold(Poly::zero(), |acc, &c| &(&acc * inner) + &Poly::constant(c))
    }

    /// Coefficients padded with zeros to length `len`.
    pub fn padded(&self, len: usize) -> Vec<Complex<T>> {
        let mut v = self.coeffs.clone();
        v.resize(len.max(v.len()), Complex::zero());
        v
    }
}

impl<T: Scalar> Add for &Poly<T> {
    type Output = Poly<T>;
    fn add(self, rhs: Self) -> Poly<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let a = self.padded(n);
        let b = rhs.padded(n);
        Poly::new(a.iter().zip(&b).map(|(&x, &y)| x + y).collect())
    }
}

impl<T: Scalar> Sub for &Poly<T> {
    type Output = Poly<T>;
    fn sub(self, rhs: Self) -> Poly<T> {
        self + &(-rhs)
    }
}

impl<T: Scalar> Neg for &Poly<T> {
    type Output = Poly<T>;
    fn neg(self) -> Poly<T> {
        Poly::new(self.coeffs.iter().map(|&c| -c).collect())
    }
}

impl<T: Scalar> Mul for &Poly<T> {
    type Output = Poly<T>;
    fn mul(self, rhs: Self) -> Poly<T> {
        Poly::new(convolve(&self.coeffs, &rhs.coeffs))
    }
}

/// Plain coefficient convolution.
pub(crate) fn convolve<T: Scalar>(a: &[Complex<T>], b: &[Complex<T>]) -> Vec<Complex<T>> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = out[i + j] + x * y;
        }
    }
    out
}
