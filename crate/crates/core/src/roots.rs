//! Polynomial root finding.
//!
//! Roots are found by Aberth–Ehrlich simultaneous iteration. If that fails
//! to converge the eigenvalues of the companion matrix are computed by a
//! shifted complex QR iteration instead. Multiplicities are assigned by
//! clustering.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::scalar::Scalar;

/// Root solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootConfig {
    /// Relative residual at which an Aberth iterate counts as converged.
    pub tol: f64,
    pub max_iter: usize,
    /// Roots closer than this (scaled by `max(1, |z|)`) are one cluster.
    pub cluster_radius: f64,
    /// Radius within which tighter clusters are tested for being a single
    /// multiple root.
    pub merge_radius: f64,
    /// Relative size below which the low-order Taylor coefficients at a
    /// merged centroid count as vanishing.
    pub merge_tol: f64,
}

impl Default for RootConfig {
    fn default() -> Self {
        RootConfig { tol: 1e-12, max_iter: 500, cluster_radius: 1e-6, merge_radius: 1e-3, merge_tol: 1e-11 }
    }
}

/// All roots of `p`, repeated by multiplicity, in no particular order.
pub fn roots<T: Scalar>(p: &Poly<T>, cfg: &RootConfig) -> Result<Vec<Complex<T>>> {
    let n = p.degree();
    if p.is_zero() {
        return Err(Error::Validation("cannot solve the zero polynomial".into()));
    }
    let c = p.coeffs();
    // exact zero roots first
    let zeros = c.iter().take_while(|x| x.is_zero()).count();
    let mut out = vec![Complex::zero(); zeros];
    let reduced = Poly::new(c[zeros..].to_vec());
    match reduced.degree() {
        0 => {}
        1 => {
            let rc = reduced.coeffs();
            out.push(-rc[0] / rc[1]);
        }
        _ => {
            let r = match aberth(&reduced, cfg) {
                Some(r) => r,
                None => companion_roots(&reduced, cfg).ok_or(Error::RootSolveFailure { degree: n })?,
            };
            out.extend(r);
        }
    }
    Ok(out)
}

/// Distinct roots of `p` with multiplicities summing to its degree.
pub fn roots_with_multiplicity<T: Scalar>(p: &Poly<T>, cfg: &RootConfig) -> Result<Vec<(Complex<T>, usize)>> {
    let r = roots(p, cfg)?;
    Ok(cluster_roots(p, &r, cfg))
}

/// Aberth–Ehrlich iteration. Returns `None` when the iteration stalls or
/// produces non-finite values.
pub fn aberth<T: Scalar>(p: &Poly<T>, cfg: &RootConfig) -> Option<Vec<Complex<T>>> {
    let n = p.degree();
    let tol = T::lit(cfg.tol);
    // no tolerance below what the scalar type can resolve
    let tol = tol.max(T::epsilon() * T::lit(16.0));
    let dp = p.derivative();
    let mut z = initial_guesses(p);
    for _ in 0..cfg.max_iter {
        let mut converged = true;
        for i in 0..n {
            let zi = z[i];
            let pv = p.eval(zi);
            if pv.is_zero() {
                continue;
            }
            let scale = p.eval_scale(zi);
            let dv = dp.eval(zi);
            let ratio = pv / dv;
            let mut sum = Complex::zero();
            for (j, &zj) in z.iter().enumerate() {
                if j != i {
                    let diff = zi - zj;
                    if !diff.is_zero() {
                        sum = sum + diff.inv();
                    }
                }
            }
            let step = if dv.is_zero() {
                // nudge off a critical point
                Complex::new(tol.sqrt(), tol.sqrt()) * T::one().max(zi.norm())
            } else {
                ratio / (Complex::<T>::one() - ratio * sum)
            };
            let next = zi - step;
            if !next.re.is_finite() || !next.im.is_finite() {
                return None;
            }
            z[i] = next;
            let small_step = step.norm() <= tol * T::one().max(next.norm());
            let small_residual = pv.norm() <= tol * scale;
            if !(small_step || small_residual) {
                converged = false;
            }
        }
        if converged {
            return Some(z);
        }
    }
    None
}

fn initial_guesses<T: Scalar>(p: &Poly<T>) -> Vec<Complex<T>> {
    let c = p.coeffs();
    let n = p.degree();
    let nt = T::from_usize(n).unwrap();
    let lead = p.leading();
    let center = -c[n - 1] / (lead * nt);
    // radius from the coefficients of p(center + t)
    let shifted = p.taylor_at(center);
    let mut radius = T::zero();
    for k in 0..n {
        let a = (shifted[k] / lead).norm();
        if a > T::zero() {
            let e = T::one() / T::from_usize(n - k).unwrap();
            radius = radius.max(a.powf(e));
        }
    }
    if radius == T::zero() {
        radius = T::one();
    }
    let offset = T::lit(0.4);
    (0..n)
        .map(|k| {
            let theta = T::TAU() * T::from_usize(k).unwrap() / nt + offset;
            center + Complex::from_polar(radius, theta)
        })
        .collect()
}

/// Roots as eigenvalues of the companion matrix.
pub fn companion_roots<T: Scalar>(p: &Poly<T>, cfg: &RootConfig) -> Option<Vec<Complex<T>>> {
    let n = p.degree();
    let c = p.coeffs();
    let lead = p.leading();
    let mut h = vec![vec![Complex::<T>::zero(); n]; n];
    for j in 0..n {
        h[0][j] = -c[n - 1 - j] / lead;
    }
    for i in 1..n {
        h[i][i - 1] = Complex::one();
    }
    let mut eig = hessenberg_eigenvalues(h)?;
    // a few Newton steps to polish
    let dp = p.derivative();
    let tol = T::lit(cfg.tol);
    for z in eig.iter_mut() {
        for _ in 0..3 {
            let (v, d) = (p.eval(*z), dp.eval(*z));
            if d.is_zero() || v.norm() <= tol * p.eval_scale(*z) {
                break;
            }
            let cand = *z - v / d;
            if p.eval(cand).norm() < v.norm() {
                *z = cand;
            } else {
                break;
            }
        }
    }
    Some(eig)
}

/// Eigenvalues of a complex upper Hessenberg matrix by single-shift QR with
/// Wilkinson shifts and deflation.
fn hessenberg_eigenvalues<T: Scalar>(mut h: Vec<Vec<Complex<T>>>) -> Option<Vec<Complex<T>>> {
    let n = h.len();
    let eps = T::epsilon();
    let mut eig = vec![Complex::zero(); n];
    if n == 0 {
        return Some(eig);
    }
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let s = h[l - 1][l - 1].norm() + h[l][l].norm();
            if h[l][l - 1].norm() <= eps * s.max(T::min_positive_value()) {
                h[l][l - 1] = Complex::zero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[hi][hi];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > 100 * n {
            return None;
        }
        let a = h[hi - 1][hi - 1];
        let b = h[hi - 1][hi];
        let c = h[hi][hi - 1];
        let d = h[hi][hi];
        let mu = if iter.is_multiple_of(11) {
            // exceptional shift
            d + Complex::new(c.norm() * T::lit(0.75), c.norm() * T::lit(0.4))
        } else {
            let half = T::lit(0.5);
            let m = (a + d) * half;
            let disc = ((a - d) * (a - d) * half * half + b * c).sqrt();
            let mu1 = m + disc;
            let mu2 = m - disc;
            if (mu1 - d).norm() < (mu2 - d).norm() {
                mu1
            } else {
                mu2
            }
        };
        for k in l..=hi {
            h[k][k] = h[k][k] - mu;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let x = h[k][k];
            let y = h[k + 1][k];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (cs, sn) = if r == T::zero() { (Complex::one(), Complex::zero()) } else { (x / r, y / r) };
            for j in k..=hi {
                let u = h[k][j];
                let v = h[k + 1][j];
                h[k][j] = cs.conj() * u + sn.conj() * v;
                h[k + 1][j] = -sn * u + cs * v;
            }
            rots.push((cs, sn));
        }
        for (idx, k) in (l..hi).enumerate() {
            let (cs, sn) = rots[idx];
            let top = (k + 2).min(hi);
            for i in l..=top {
                let u = h[i][k];
                let v = h[i][k + 1];
                h[i][k] = u * cs + v * sn;
                h[i][k + 1] = -(u * sn.conj()) + v * cs.conj();
            }
        }
        for k in l..=hi {
            h[k][k] = h[k][k] + mu;
        }
    }
    eig[0] = h[0][0];
    if eig.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Some(eig)
    } else {
        None
    }
}

/// Groups numerically repeated roots.
///
/// Roots within `cluster_radius` are joined first. Groups of those clusters
/// lying within `merge_radius` of each other are then merged when the
/// polynomial's Taylor coefficients of order below the combined multiplicity
/// vanish at the group centroid, which is how a genuine multiple root shows
/// up after rounding has split it.
pub fn cluster_roots<T: Scalar>(p: &Poly<T>, roots: &[Complex<T>], cfg: &RootConfig) -> Vec<(Complex<T>, usize)> {
    let tight = single_linkage(roots, T::lit(cfg.cluster_radius));
    let loose = single_linkage(roots, T::lit(cfg.merge_radius));
    let abs_poly = Poly::new(p.coeffs().iter().map(|c| Complex::new(c.norm(), T::zero())).collect());
    let merge_tol = T::lit(cfg.merge_tol);

    let mut out = Vec::new();
    let mut loose_groups: Vec<Vec<usize>> = Vec::new();
    for (i, &g) in loose.iter().enumerate() {
        if g == loose_groups.len() {
            loose_groups.push(Vec::new());
        }
        loose_groups[g].push(i);
    }
    for members in loose_groups {
        let tight_ids: Vec<usize> = {
            let mut ids: Vec<usize> = members.iter().map(|&i| tight[i]).collect();
            ids.sort_unstable();
            ids.dedup();
            ids
        };
        if tight_ids.len() > 1 {
            let m = members.len();
            let centroid = refine_multiple_root(p, mean(members.iter().map(|&i| roots[i])), m);
            let taylor = p.taylor_at(centroid);
            let scale = abs_poly.taylor_at(Complex::new(centroid.norm(), T::zero()));
            let vanishes = (0..m).all(|k| taylor[k].norm() <= merge_tol * scale[k].re);
            if vanishes {
                out.push((centroid, m));
                continue;
            }
        }
        for id in tight_ids {
            let pts: Vec<Complex<T>> = members.iter().filter(|&&i| tight[i] == id).map(|&i| roots[i]).collect();
            out.push((mean(pts.iter().copied()), pts.len()));
        }
    }
    out
}

/// Newton iteration on `p^(m-1)`, which has a simple root at an `m`-fold
/// root of `p`.
fn refine_multiple_root<T: Scalar>(p: &Poly<T>, start: Complex<T>, m: usize) -> Complex<T> {
    let mut q = p.clone();
    for _ in 1..m {
        q = q.derivative();
    }
    let dq = q.derivative();
    let mut z = start;
    for _ in 0..30 {
        let (v, d) = (q.eval(z), dq.eval(z));
        if d.is_zero() {
            break;
        }
        let step = v / d;
        z = z - step;
        if step.norm() <= T::epsilon() * T::one().max(z.norm()) {
            break;
        }
    }
    if z.re.is_finite() && z.im.is_finite() {
        z
    } else {
        start
    }
}

fn mean<T: Scalar>(it: impl Iterator<Item = Complex<T>>) -> Complex<T> {
    let mut s = Complex::zero();
    let mut n = 0usize;
    for z in it {
        s = s + z;
        n += 1;
    }
    s / T::from_usize(n.max(1)).unwrap()
}

/// Component labels (numbered in first-appearance order) of the graph
/// joining roots closer than `radius * max(1, |z|)`.
fn single_linkage<T: Scalar>(pts: &[Complex<T>], radius: T) -> Vec<usize> {
    let n = pts.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let s = T::one().max(pts[i].norm()).max(pts[j].norm());
            if (pts[i] - pts[j]).norm() <= radius * s {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    let mut out = vec![0; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if label[r] == usize::MAX {
            label[r] = next;
            next += 1;
        }
        out[i] = label[r];
    }
    out
}
