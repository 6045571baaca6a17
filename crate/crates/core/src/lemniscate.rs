//! Normalized lemniscates `{ |(cF)_0^(n)(1, z)| = 1 }` and the checks run on them.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::escape::EscapeRateEvaluator;
use crate::harmonic::BBox;
use crate::maps::{HomogeneousLift, RationalMap};
use crate::measure::EmpiricalMeasure;
use crate::poly::Poly;
use crate::rng::rng_stream;

/// Largest `| |value| - 1 |` tolerated at a traced vertex.
pub const TRACE_TOL: f64 = 1e-3;
/// Smallest accepted tracing grid along either axis.
pub const MIN_TRACE_GRID: usize = 64;
/// Tolerance on `G^{cF}(0, 1) = -I` when checking the normalization.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// The real positive `c` with `|c| = exp(-(d - 1)(I + G^F(0, 1)))`.
///
/// Fails with `NormalizationMismatch` unless the rescaled lift has
/// `G^{cF}(0, 1) = -I` within [`NORMALIZATION_TOL`].
pub fn normalization_constant(ev: &EscapeRateEvaluator, energy: f64) -> Result<f64> {
    if !energy.is_finite() {
        return Err(Error::Validation("energy must be finite".into()));
    }
    let d = ev.degree() as f64;
    let c = (-(d - 1.0) * (energy + ev.base_height())).exp();
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::NormalizationMismatch { got: c, expected: -energy });
    }
    let scaled = ev.lift().scaled(Complex64::new(c, 0.0));
    let tol = ev.tol().max(1e-2 * NORMALIZATION_TOL);
    let check = EscapeRateEvaluator::with_settings(&scaled, tol, ev.max_depth())?;
    let got = check.base_height();
    if (got + energy).abs() > NORMALIZATION_TOL {
        return Err(Error::NormalizationMismatch { got, expected: -energy });
    }
    Ok(c)
}

/// `L_{(cF)^n}` for a fixed map, constant and order.
#[derive(Debug, Clone)]
pub struct NormalizedLemniscate {
    c: f64,
    n: usize,
    lift: HomogeneousLift,
    denom_poly: Option<Poly>,
}

impl NormalizedLemniscate {
    pub fn new(f: &RationalMap, c: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("lemniscate order must be positive".into()));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Validation("lemniscate constant must be positive".into()));
        }
        let lift = f.lift().scaled(Complex64::new(c, 0.0));
        // expanded coefficients are only formed for small orders
        let denom_poly = if n <= 2 { Some(lift.iterate(n)?.denominator()) } else { None };
        Ok(NormalizedLemniscate { c, n, lift, denom_poly })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// The scaled lift `cF`.
    pub fn lift(&self) -> &HomogeneousLift {
        &self.lift
    }

    /// `(cF)_0^(n)(1, ·)` for orders up to 2.
    pub fn denom_poly(&self) -> Option<&Poly> {
        self.denom_poly.as_ref()
    }

    /// Same constant, different order.
    pub fn with_order(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("lemniscate order must be positive".into()));
        }
        let denom_poly = if n <= 2 { Some(self.lift.iterate(n)?.denominator()) } else { None };
        Ok(NormalizedLemniscate { c: self.c, n, lift: self.lift.clone(), denom_poly })
    }

    /// `log |(cF)_0^(n)(1, z)|`, telescoped through normalized iterates.
    pub fn log_value(&self, z: Complex64) -> f64 {
        log_first_component(&self.lift, self.n, Complex64::new(1.0, 0.0), z)
    }

    /// `|(cF)_0^(n)(1, z)|`; underflow gives 0.
    pub fn value(&self, z: Complex64) -> f64 {
        self.log_value(z).exp()
    }
}

/// `log |F_0^(n)(z0, z1)|`, accumulated as `L_k = d L_{k-1} + log |F(W_{k-1})|`.
fn log_first_component(lift: &HomogeneousLift, n: usize, z0: Complex64, z1: Complex64) -> f64 {
    let d = lift.degree() as f64;
    let (mut w0, mut w1) = (z0, z1);
    let mut acc = 0.0;
    for _ in 0..n {
        match lift.eval_log_pair(w0, w1) {
            Ok((w, l)) => {
                acc = d * acc + l;
                w0 = w.z0();
                w1 = w.z1();
            }
            Err(_) => return f64::NAN,
        }
    }
    acc + w0.norm().ln()
}

/// `lemniscate_value` as a free function.
pub fn lemniscate_value(l: &NormalizedLemniscate, z: Complex64) -> f64 {
    l.value(z)
}

/// Number of random points used by [`composition_identity_residual`].
pub const COMPOSITION_SAMPLES: usize = 100;

/// Largest relative gap between `(cF)_0^(2)(1, z)` from the composed lift
/// and `(cF)_0(1, f(z)) ((cF)_0(1, z))^d` from pointwise evaluation.
pub fn composition_identity_residual(f: &RationalMap, c: f64, seed: u64) -> Result<f64> {
    let lift = f.lift().scaled(Complex64::new(c, 0.0));
    let second = lift.iterate(2)?.denominator();
    let first = lift.denominator();
    let numer = lift.numerator();
    let d = lift.degree() as i32;
    let mut rng = rng_stream(seed, 0);
    let mut worst = 0.0f64;
    let mut taken = 0;
    while taken < COMPOSITION_SAMPLES {
        let z = Complex64::new(4.0 * rng.gen::<f64>() - 2.0, 4.0 * rng.gen::<f64>() - 2.0);
        let den = first.eval(z);
        if den.norm() < 1e-6 * first.max_abs().max(1e-300) {
            // too close to a pole of f
            continue;
        }
        let fz = numer.eval(z) / den;
        let lhs = second.eval(z);
        let rhs = first.eval(fz) * den.powi(d);
        let scale = lhs.norm().max(rhs.norm()).max(f64::MIN_POSITIVE);
        worst = worst.max((lhs - rhs).norm() / scale);
        taken += 1;
    }
    Ok(worst)
}

/// Polylines of a traced level set.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSetTrace {
    pub polylines: Vec<Vec<Complex64>>,
    /// Whether each polyline closes on itself (its last vertex repeats the first).
    pub closed: Vec<bool>,
    pub bbox: BBox,
    pub nx: usize,
    pub ny: usize,
    /// Largest `| |value| - 1 |` over all vertices.
    pub max_vertex_error: f64,
}

impl LevelSetTrace {
    pub fn vertices(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.polylines.iter().flatten().copied()
    }

    pub fn vertex_count(&self) -> usize {
        self.polylines.iter().map(Vec::len).sum()
    }
}

/// Traces `L_{(cF)^n}` on an `nx × ny` node grid.
pub fn trace_level_set(l: &NormalizedLemniscate, bbox: BBox, nx: usize, ny: usize) -> Result<LevelSetTrace> {
    if l.lift.denominator().is_constant() && l.n == 1 {
        return Err(Error::EmptyLevelSet);
    }
    trace_zero_set(|z| l.log_value(z), bbox, nx, ny)
}

/// Traces `{ |p(z)| = 1 }`.
pub fn trace_poly_level_set(p: &Poly, bbox: BBox, nx: usize, ny: usize) -> Result<LevelSetTrace> {
    trace_zero_set(|z| p.eval(z).norm().ln(), bbox, nx, ny)
}

/// Marching squares on `phi`, a log-magnitude, with crossings refined along
/// each edge.
pub fn trace_zero_set<P>(phi: P, bbox: BBox, nx: usize, ny: usize) -> Result<LevelSetTrace>
where
    P: Fn(Complex64) -> f64 + Sync,
{
    bbox.validate()?;
    if nx < MIN_TRACE_GRID || ny < MIN_TRACE_GRID {
        return Err(Error::Validation(format!("tracing grid must be at least {MIN_TRACE_GRID}x{MIN_TRACE_GRID}")));
    }
    let hx = bbox.width() / (nx - 1) as f64;
    let hy = bbox.height() / (ny - 1) as f64;
    let node = |i: usize, j: usize| Complex64::new(bbox.x0 + i as f64 * hx, bbox.y0 + j as f64 * hy);
    let vals: Vec<f64> = (0..nx * ny).into_par_iter().map(|k| phi(node(k % nx, k / nx))).collect();
    let pos: Vec<bool> = vals.iter().map(|&v| !(v < 0.0)).collect();
    let at = |i: usize, j: usize| j * nx + i;

    // horizontal edge (i, j)-(i+1, j) has id j (nx-1) + i, vertical edges follow
    let n_h = (nx - 1) * ny;
    let edge_ends = |e: usize| -> (usize, usize) {
        if e < n_h {
            let (i, j) = (e % (nx - 1), e / (nx - 1));
            (at(i, j), at(i + 1, j))
        } else {
            let e = e - n_h;
            let (i, j) = (e % nx, e / nx);
            (at(i, j), at(i, j + 1))
        }
    };
    let n_edges = n_h + nx * (ny - 1);
    let crossings: Vec<Option<Complex64>> = (0..n_edges)
        .into_par_iter()
        .map(|e| {
            let (a, b) = edge_ends(e);
            if pos[a] == pos[b] {
                return None;
            }
            let za = node(a % nx, a / nx);
            let zb = node(b % nx, b / nx);
            Some(refine_crossing(&phi, za, zb, vals[a], vals[b]))
        })
        .collect();
    if crossings.iter().all(Option::is_none) {
        return Err(Error::EmptyLevelSet);
    }

    let h_edge = |i: usize, j: usize| j * (nx - 1) + i;
    let v_edge = |i: usize, j: usize| n_h + j * nx + i;
    let mut segments: Vec<(usize, usize)> = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let e = [h_edge(i, j), v_edge(i + 1, j), h_edge(i, j + 1), v_edge(i, j)];
            let cut: Vec<usize> = e.iter().copied().filter(|&k| crossings[k].is_some()).collect();
            match cut.len() {
                2 => segments.push((cut[0], cut[1])),
                4 => {
                    let centre = phi(node(i, j) + Complex64::new(0.5 * hx, 0.5 * hy));
                    if !(centre < 0.0) == pos[at(i, j)] {
                        segments.push((e[0], e[1]));
                        segments.push((e[2], e[3]));
                    } else {
                        segments.push((e[3], e[0]));
                        segments.push((e[1], e[2]));
                    }
                }
                _ => {}
            }
        }
    }

    let mut incident: HashMap<usize, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        incident.entry(a).or_default().push(s);
        incident.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();
    let mut closed = Vec::new();
    // open curves start at an edge with a single incident segment
    let mut starts: Vec<(usize, usize)> = Vec::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        for e in [a, b] {
            if incident[&e].len() == 1 {
                starts.push((s, e));
            }
        }
    }
    let all: Vec<(usize, usize)> = (0..segments.len()).map(|s| (s, segments[s].0)).collect();
    for (s0, e0) in starts.into_iter().chain(all) {
        if used[s0] {
            continue;
        }
        let mut line = vec![crossings[e0].unwrap()];
        let (mut s, mut e) = (s0, e0);
        loop {
            used[s] = true;
            let (a, b) = segments[s];
            let other = if a == e { b } else { a };
            line.push(crossings[other].unwrap());
            e = other;
            match incident[&e].iter().find(|&&t| !used[t]) {
                Some(&t) => s = t,
                None => break,
            }
        }
        closed.push(e == e0 && line.len() > 2);
        polylines.push(line);
    }

    let max_vertex_error =
        polylines.par_iter().flat_map_iter(|l| l.iter().map(|&z| (phi(z).exp() - 1.0).abs())).reduce(|| 0.0, f64::max);
    Ok(LevelSetTrace { polylines, closed, bbox, nx, ny, max_vertex_error })
}

/// Root of `phi` on the segment `[za, zb]`, starting from linear
/// interpolation and refined by the Illinois variant of false position.
fn refine_crossing<P: Fn(Complex64) -> f64>(phi: &P, za: Complex64, zb: Complex64, fa: f64, fb: f64) -> Complex64 {
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let (mut fa, mut fb) = (fa, fb);
    let sign_a = !(fa < 0.0);
    let mut side = 0i8;
    for _ in 0..60 {
        let t = if fa.is_finite() && fb.is_finite() && fa != fb {
            (a - fa * (b - a) / (fb - fa)).clamp(a, b)
        } else {
            0.5 * (a + b)
        };
        let ft = phi(za + (zb - za) * t);
        if ft.abs() < 1e-12 || (b - a) < 1e-14 {
            return za + (zb - za) * t;
        }
        if !(ft < 0.0) == sign_a {
            a = t;
            fa = ft;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = t;
            fb = ft;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    za + (zb - za) * (0.5 * (a + b))
}

/// The four lemniscate statistics; `None` where no traced vertex exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClaimChecks {
    pub julia_containment: f64,
    pub level_coincidence: Option<f64>,
    pub forward_invariance: Option<f64>,
    pub doubling: Option<f64>,
}

impl ClaimChecks {
    pub fn max(&self) -> f64 {
        [Some(self.julia_containment), self.level_coincidence, self.forward_invariance, self.doubling]
            .into_iter()
            .flatten()
            .fold(0.0, f64::max)
    }
}

/// Evaluates the lemniscate statistics.
///
/// `trace` is a trace of `L_{cF}`; when `trace_second` (a trace of
/// `L_{(cF)^2}`) is also given, level coincidence covers both inclusions.
pub fn claim_checks(
    f: &RationalMap,
    l: &NormalizedLemniscate,
    witnesses: &EmpiricalMeasure,
    trace: Option<&LevelSetTrace>,
    trace_second: Option<&LevelSetTrace>,
    ev: &EscapeRateEvaluator,
    energy: f64,
) -> Result<ClaimChecks> {
    if l.lift.denominator().is_constant() {
        return Err(Error::DegenerateLemniscate);
    }
    if witnesses.is_empty() && trace.is_none_or(|t| t.vertex_count() == 0) {
        return Err(Error::Validation("claim checks need witnesses or a trace".into()));
    }
    let first = l.with_order(1)?;
    let second = l.with_order(2)?;
    let julia_containment =
        witnesses.points().par_iter().map(|&z| (first.value(z) - 1.0).abs()).reduce(|| 0.0, f64::max);

    let max_over = |t: &LevelSetTrace, g: &(dyn Fn(Complex64) -> f64 + Sync)| -> f64 {
        let v: Vec<Complex64> = t.vertices().collect();
        v.par_iter().map(|&z| g(z)).reduce(|| 0.0, f64::max)
    };
    let d = f.degree() as f64;
    let (mut level, mut forward, mut doubling) = (None, None, None);
    if let Some(t) = trace.filter(|t| t.vertex_count() > 0) {
        let mut lc = max_over(t, &|z| (second.value(z) - 1.0).abs());
        if let Some(t2) = trace_second.filter(|t| t.vertex_count() > 0) {
            lc = lc.max(max_over(t2, &|z| (first.value(z) - 1.0).abs()));
        }
        level = Some(lc);
        forward = Some(max_over(t, &|z| match f.eval_affine(z) {
            Ok(Some(w)) => (first.value(w) - 1.0).abs(),
            _ => f64::INFINITY,
        }));
        doubling = Some(max_over(t, &|z| {
            let fz = match f.eval_affine(z) {
                Ok(Some(w)) => w,
                _ => return f64::INFINITY,
            };
            match (ev.potential(fz), ev.potential(z)) {
                (Ok(pf), Ok(p)) => ((pf - energy) - d * (p - energy)).abs(),
                _ => f64::INFINITY,
            }
        }));
    }
    Ok(ClaimChecks { julia_containment, level_coincidence: level, forward_invariance: forward, doubling })
}
