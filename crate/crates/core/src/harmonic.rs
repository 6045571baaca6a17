//! Harmonic measure of the basin of infinity, by Brownian hitting.
//!
//! The plane is cut into a grid. Cells near a Julia witness are marked,
//! everything reachable from the frame without crossing a marked cell is
//! taken to be the basin of infinity, and the rest is its complement.
//! Walkers then run walk-on-spheres against the exact Euclidean distance
//! to the non-basin cells.

use std::collections::VecDeque;

use kiddo::immutable::float::kdtree::ImmutableKdTree;
use kiddo::SquaredEuclidean;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{circle_probes, EmpiricalMeasure};
use crate::rng::rng_stream;

/// Fewest witnesses `label_grid` accepts.
pub const MIN_WITNESSES: usize = 1000;
/// Step budget per walker.
pub const MAX_STEPS: usize = 100_000;
/// Largest tolerated fraction of abandoned walkers.
pub const MAX_ABANDONED_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        let b = BBox { x0, y0, x1, y1 };
        b.validate()?;
        Ok(b)
    }

    /// The square `[-r, r]^2`.
    pub fn square(r: f64) -> Self {
        BBox { x0: -r, y0: -r, x1: r, y1: r }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.x0, self.y0, self.x1, self.y1].iter().all(|v| v.is_finite())
            && self.x1 > self.x0
            && self.y1 > self.y0;
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("degenerate bounding box {self:?}")))
        }
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.x0 && z.re <= self.x1 && z.im >= self.y0 && z.im <= self.y1
    }

    /// Square box centred on `center` whose inscribed disk has radius
    /// `(1 + margin) * radius`.
    pub fn around(center: Complex64, radius: f64, margin: f64) -> Self {
        let r = radius * (1.0 + margin);
        BBox { x0: center.re - r, y0: center.im - r, x1: center.re + r, y1: center.im + r }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellLabel {
    DInf,
    Complement,
    NearJulia,
}

/// Labeled grid plus the distance field walkers step against.
#[derive(Clone)]
pub struct GridLabeling {
    bbox: BBox,
    nx: usize,
    ny: usize,
    delta: f64,
    labels: Vec<CellLabel>,
    witnesses: EmpiricalMeasure,
    /// Distance from each cell centre to the nearest non-basin cell centre.
    dist: Vec<f64>,
    /// Index of that nearest cell.
    nearest: Vec<u32>,
    /// Nearest-witness index.
    tree: WitnessTree,
}

type WitnessTree = ImmutableKdTree<f64, u32, 2, 32>;

impl std::fmt::Debug for GridLabeling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridLabeling")
            .field("bbox", &self.bbox)
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("delta", &self.delta)
            .field("witnesses", &self.witnesses.len())
            .finish_non_exhaustive()
    }
}

impl GridLabeling {
    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn labels(&self) -> &[CellLabel] {
        &self.labels
    }

    pub fn witnesses(&self) -> &EmpiricalMeasure {
        &self.witnesses
    }

    pub fn label(&self, i: usize, j: usize) -> CellLabel {
        self.labels[j * self.nx + i]
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (self.bbox.width() / self.nx as f64, self.bbox.height() / self.ny as f64)
    }

    pub fn cell_diagonal(&self) -> f64 {
        let (hx, hy) = self.cell_size();
        hx.hypot(hy)
    }

    pub fn cell_center(&self, idx: usize) -> Complex64 {
        let (hx, hy) = self.cell_size();
        let (i, j) = (idx % self.nx, idx / self.nx);
        Complex64::new(self.bbox.x0 + (i as f64 + 0.5) * hx, self.bbox.y0 + (j as f64 + 0.5) * hy)
    }

    /// Cell containing `z`, if inside the box.
    pub fn cell_of(&self, z: Complex64) -> Option<usize> {
        if !self.bbox.contains(z) {
            return None;
        }
        let (hx, hy) = self.cell_size();
        let i = (((z.re - self.bbox.x0) / hx) as usize).min(self.nx - 1);
        let j = (((z.im - self.bbox.y0) / hy) as usize).min(self.ny - 1);
        Some(j * self.nx + i)
    }

    /// Distance from the cell centre to the nearest non-basin cell centre.
    pub fn distance(&self, idx: usize) -> f64 {
        self.dist[idx]
    }

    pub fn nearest_site(&self, idx: usize) -> usize {
        self.nearest[idx] as usize
    }

    pub fn count(&self, label: CellLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Radius about the box centre of a disk containing every non-basin cell.
    pub fn hull_radius(&self) -> f64 {
        let c = self.bbox.center();
        let half = 0.5 * self.cell_diagonal();
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l != CellLabel::DInf)
            .map(|(k, _)| (self.cell_center(k) - c).norm() + half)
            .fold(0.0, f64::max)
    }

    /// Witness closest to `z`.
    pub fn nearest_witness(&self, z: Complex64) -> Option<Complex64> {
        self.nearest_witness_with_distance(z).map(|(_, w)| w)
    }

    /// Witness closest to `z` and its distance.
    pub fn nearest_witness_with_distance(&self, z: Complex64) -> Option<(f64, Complex64)> {
        if self.witnesses.is_empty() {
            return None;
        }
        let hit = self.tree.nearest_one::<SquaredEuclidean>(&[z.re, z.im]);
        Some((hit.distance.sqrt(), self.witnesses.points()[hit.item as usize]))
    }

    /// Near-Julia cells with a basin cell among their four neighbours.
    pub fn frontier(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for j in 0..self.ny {
            for i in 0..self.nx {
                if self.label(i, j) != CellLabel::NearJulia {
                    continue;
                }
                let touches = neighbours(i, j, self.nx, self.ny).any(|(a, b)| self.label(a, b) == CellLabel::DInf)
                    || i == 0
                    || j == 0
                    || i + 1 == self.nx
                    || j + 1 == self.ny;
                if touches {
                    out.push(j * self.nx + i);
                }
            }
        }
        out
    }
}

fn neighbours(i: usize, j: usize, nx: usize, ny: usize) -> impl Iterator<Item = (usize, usize)> {
    let cand = [(i.wrapping_sub(1), j), (i + 1, j), (i, j.wrapping_sub(1)), (i, j + 1)];
    cand.into_iter().filter(move |&(a, b)| a < nx && b < ny)
}

/// Default fattening radius: two cell diagonals.
pub fn default_delta(bbox: &BBox, nx: usize, ny: usize) -> f64 {
    2.0 * (bbox.width() / nx as f64).hypot(bbox.height() / ny as f64)
}

/// Labels the grid from Julia witnesses.
pub fn label_grid(witnesses: &EmpiricalMeasure, bbox: BBox, nx: usize, ny: usize, delta: f64) -> Result<GridLabeling> {
    bbox.validate()?;
    if nx < 2 || ny < 2 {
        return Err(Error::Validation("grid needs at least 2x2 cells".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::Validation("delta must be positive".into()));
    }
    if witnesses.len() < MIN_WITNESSES {
        return Err(Error::InsufficientWitnesses { required: MIN_WITNESSES, got: witnesses.len() });
    }
    let hx = bbox.width() / nx as f64;
    let hy = bbox.height() / ny as f64;
    let mut labels = vec![CellLabel::Complement; nx * ny];

    let ri = (delta / hx).ceil() as isize + 1;
    let rj = (delta / hy).ceil() as isize + 1;
    let d2 = delta * delta;
    for &w in witnesses.points() {
        let ci = ((w.re - bbox.x0) / hx).floor() as isize;
        let cj = ((w.im - bbox.y0) / hy).floor() as isize;
        for j in (cj - rj).max(0)..=(cj + rj).min(ny as isize - 1) {
            let y = bbox.y0 + (j as f64 + 0.5) * hy - w.im;
            for i in (ci - ri).max(0)..=(ci + ri).min(nx as isize - 1) {
                let x = bbox.x0 + (i as f64 + 0.5) * hx - w.re;
                if x * x + y * y <= d2 {
                    labels[j as usize * nx + i as usize] = CellLabel::NearJulia;
                }
            }
        }
    }

    // flood fill from the exterior super-cell, which touches every frame cell
    let mut queue = VecDeque::new();
    for j in 0..ny {
        for i in 0..nx {
            if (i == 0 || j == 0 || i + 1 == nx || j + 1 == ny) && labels[j * nx + i] == CellLabel::Complement {
                labels[j * nx + i] = CellLabel::DInf;
                queue.push_back((i, j));
            }
        }
    }
    while let Some((i, j)) = queue.pop_front() {
        for (a, b) in neighbours(i, j, nx, ny) {
            if labels[b * nx + a] == CellLabel::Complement {
                labels[b * nx + a] = CellLabel::DInf;
                queue.push_back((a, b));
            }
        }
    }

    let sites: Vec<bool> = labels.iter().map(|&l| l != CellLabel::DInf).collect();
    let (dist, nearest) = distance_transform(&sites, nx, ny, hx, hy);
    let coords: Vec<[f64; 2]> = witnesses.points().iter().map(|z| [z.re, z.im]).collect();
    let tree = ImmutableKdTree::new_from_slice(&coords);
    Ok(GridLabeling { bbox, nx, ny, delta, labels, witnesses: witnesses.clone(), dist, nearest, tree })
}

/// One-dimensional squared distance transform of a sampled function
/// (Felzenszwalb and Huttenlocher), returning values and argmins.
fn dt_1d(f: &[f64], spacing: f64, out: &mut [f64], arg: &mut [usize], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let s2 = spacing * spacing;
    let mut k = 0usize;
    let mut first = None;
    for q in 0..n {
        if f[q].is_finite() {
            first = Some(q);
            break;
        }
    }
    let Some(q0) = first else {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        arg.iter_mut().for_each(|a| *a = usize::MAX);
        return;
    };
    v[0] = q0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in q0 + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + s2 * (q * q) as f64) - (f[p] + s2 * (p * p) as f64)) / (2.0 * s2 * (q as f64 - p as f64));
            // z[0] is -inf, so k never underflows
            if s <= z[k] {
                k -= 1;
                continue;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    k = 0;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        out[q] = s2 * dq * dq + f[p];
        arg[q] = p;
    }
}

/// Exact Euclidean distance from every cell centre to the nearest site
/// centre, with the index of that site.
fn distance_transform(sites: &[bool], nx: usize, ny: usize, hx: f64, hy: f64) -> (Vec<f64>, Vec<u32>) {
    // columns first: squared vertical distance and the row of the nearest site
    let mut col_val = vec![f64::INFINITY; nx * ny];
    let mut col_row = vec![usize::MAX; nx * ny];
    let cols: Vec<(Vec<f64>, Vec<usize>)> = (0..nx)
        .into_par_iter()
        .map(|i| {
            let f: Vec<f64> = (0..ny).map(|j| if sites[j * nx + i] { 0.0 } else { f64::INFINITY }).collect();
            let mut out = vec![0.0; ny];
            let mut arg = vec![0; ny];
            let mut v = vec![0; ny];
            let mut z = vec![0.0; ny + 1];
            dt_1d(&f, hy, &mut out, &mut arg, &mut v, &mut z);
            (out, arg)
        })
        .collect();
    for (i, (out, arg)) in cols.into_iter().enumerate() {
        for j in 0..ny {
            col_val[j * nx + i] = out[j];
            col_row[j * nx + i] = arg[j];
        }
    }
    let rows: Vec<(Vec<f64>, Vec<u32>)> = (0..ny)
        .into_par_iter()
        .map(|j| {
            let f = &col_val[j * nx..(j + 1) * nx];
            let mut out = vec![0.0; nx];
            let mut arg = vec![0; nx];
            let mut v = vec![0; nx];
            let mut z = vec![0.0; nx + 1];
            dt_1d(f, hx, &mut out, &mut arg, &mut v, &mut z);
            let near = arg
                .iter()
                .map(|&i| if i == usize::MAX { u32::MAX } else { (col_row[j * nx + i] * nx + i) as u32 })
                .collect();
            (out.into_iter().map(f64::sqrt).collect(), near)
        })
        .collect();
    let mut dist = Vec::with_capacity(nx * ny);
    let mut nearest = Vec::with_capacity(nx * ny);
    for (d, n) in rows {
        dist.extend(d);
        nearest.extend(n);
    }
    (dist, nearest)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicConfig {
    pub n_walkers: usize,
    pub seed: u64,
    /// Launch circle radius about the box centre; `None` launches from the
    /// smallest circle the walk accepts, just outside the hull.
    pub r_launch: Option<f64>,
    /// Hit tolerance; `None` uses half a cell diagonal.
    pub eps_hit: Option<f64>,
    pub max_steps: usize,
    /// Once a walker reaches the fattened band, keep walking against the
    /// witness cloud itself and record the witness it stops at. Without
    /// this the hit is where the walker met the band, up to two fattening
    /// radii outside `J`.
    pub refine: bool,
}

impl Default for HarmonicConfig {
    fn default() -> Self {
        HarmonicConfig {
            n_walkers: 100_000,
            seed: 42,
            r_launch: None,
            eps_hit: None,
            max_steps: MAX_STEPS,
            refine: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkerStats {
    pub mean_steps: f64,
    pub max_steps: usize,
    pub abandoned: usize,
    pub r_launch: f64,
    pub eps_hit: f64,
    pub delta: f64,
}

#[derive(Debug, Clone)]
pub struct HarmonicSample {
    pub hits: EmpiricalMeasure,
    pub walker_stats: WalkerStats,
}

enum Walk {
    Hit(Complex64, usize),
    Abandoned(usize),
}

/// Point on the circle `|w - c| = rho` distributed by harmonic measure of
/// the disk exterior seen from `z`.
fn exterior_jump<R: Rng>(rng: &mut R, c: Complex64, rho: f64, z: Complex64) -> Complex64 {
    // reflect into the unit disk, where the hitting law from `a` is the
    // image of the uniform law under the disk automorphism taking 0 to `a`
    let a = 1.0 / ((z - c) / rho).conj();
    let u = Complex64::from_polar(1.0, std::f64::consts::TAU * rng.gen::<f64>());
    let w = (u + a) / (Complex64::new(1.0, 0.0) + a.conj() * u);
    c + w * rho
}

/// Runs `cfg.n_walkers` walkers from infinity and returns their hit points.
pub fn sample_harmonic(grid: &GridLabeling, cfg: &HarmonicConfig) -> Result<HarmonicSample> {
    if cfg.n_walkers == 0 {
        return Err(Error::Validation("n_walkers must be positive".into()));
    }
    let diag = grid.cell_diagonal();
    let eps = cfg.eps_hit.unwrap_or(0.5 * diag);
    let c = grid.bbox.center();
    let hull = grid.hull_radius();
    if hull == 0.0 {
        return Err(Error::Validation("grid has no near-Julia cells".into()));
    }
    // walkers beyond this circle jump straight back onto it
    let rho = hull + 2.0 * diag;
    let half_side = 0.5 * grid.bbox.width().min(grid.bbox.height());
    if rho > half_side - diag {
        return Err(Error::Validation(format!(
            "bounding box too tight: hull radius {hull:.4} needs half-side above {:.4}",
            rho + diag
        )));
    }
    let r_launch = cfg.r_launch.unwrap_or(rho);
    if !(r_launch >= rho) {
        return Err(Error::Validation(format!("launch radius {r_launch} inside the hull disk {rho}")));
    }

    let walks: Vec<Walk> = (0..cfg.n_walkers)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_stream(cfg.seed, k as u64);
            // stratified launch angles; the law of each one is still uniform
            let u = (k as f64 + rng.gen::<f64>()) / cfg.n_walkers as f64;
            let mut z = c + Complex64::from_polar(r_launch, std::f64::consts::TAU * u);
            for step in 1..=cfg.max_steps {
                if (z - c).norm() > rho {
                    z = exterior_jump(&mut rng, c, rho, z);
                    continue;
                }
                let Some(idx) = grid.cell_of(z) else {
                    z = exterior_jump(&mut rng, c, rho, z);
                    continue;
                };
                let mut r = grid.dist[idx] - diag;
                if r < eps {
                    if !cfg.refine {
                        return Walk::Hit(z, step);
                    }
                    let Some((dw, w)) = grid.nearest_witness_with_distance(z) else {
                        return Walk::Hit(z, step);
                    };
                    // a walker that slipped between witnesses into a bounded
                    // component stops at once
                    if dw < eps || grid.labels[idx] == CellLabel::Complement {
                        return Walk::Hit(w, step);
                    }
                    r = dw;
                }
                z += Complex64::from_polar(r, std::f64::consts::TAU * rng.gen::<f64>());
            }
            Walk::Abandoned(cfg.max_steps)
        })
        .collect();

    let mut hits = Vec::with_capacity(walks.len());
    let (mut total, mut max_steps, mut abandoned) = (0usize, 0usize, 0usize);
    for w in walks {
        match w {
            Walk::Hit(z, s) => {
                hits.push(z);
                total += s;
                max_steps = max_steps.max(s);
            }
            Walk::Abandoned(s) => {
                abandoned += 1;
                total += s;
                max_steps = max_steps.max(s);
            }
        }
    }
    if abandoned as f64 >= MAX_ABANDONED_FRACTION * cfg.n_walkers as f64 {
        return Err(Error::WalkerBudgetExceeded);
    }
    let walker_stats = WalkerStats {
        mean_steps: total as f64 / cfg.n_walkers as f64,
        max_steps,
        abandoned,
        r_launch,
        eps_hit: eps,
        delta: grid.delta,
    };
    Ok(HarmonicSample { hits: EmpiricalMeasure::uniform(hits)?, walker_stats })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrostmanResidual {
    /// Largest deviation of the potential from its mean over probes on `K`.
    pub max_dev: f64,
    /// Smallest excess of the potential over that mean at basin probes.
    pub min_margin: f64,
    pub mean: f64,
}

/// Frostman check for the hit measure, with the kernel smoothed at `h`.
pub fn frostman_residual(
    nu: &EmpiricalMeasure,
    probes_on_k: &[Complex64],
    probes_outside: &[Complex64],
    h: f64,
) -> FrostmanResidual {
    let on_k = nu.smoothed_potentials(probes_on_k, h);
    let mean = if on_k.is_empty() { 0.0 } else { on_k.iter().sum::<f64>() / on_k.len() as f64 };
    let max_dev = on_k.iter().map(|p| (p - mean).abs()).fold(0.0, f64::max);
    let min_margin =
        nu.smoothed_potentials(probes_outside, h).into_iter().map(|p| p - mean).fold(f64::INFINITY, f64::min);
    FrostmanResidual { max_dev, min_margin, mean }
}

/// Up to `n` frontier cell centres at distance at least `h` from every hit,
/// spread evenly along the frontier list.
pub fn frontier_probes(grid: &GridLabeling, hits: &EmpiricalMeasure, n: usize, h: f64) -> Vec<Complex64> {
    let (nx, ny) = grid.dims();
    let (hx, hy) = grid.cell_size();
    let mut occupied = vec![false; nx * ny];
    for &z in hits.points() {
        if let Some(idx) = grid.cell_of(z) {
            occupied[idx] = true;
        }
    }
    let ri = (h / hx).ceil() as isize + 1;
    let rj = (h / hy).ceil() as isize + 1;
    let clear = |idx: usize| {
        let c = grid.cell_center(idx);
        let (i, j) = ((idx % nx) as isize, (idx / nx) as isize);
        for b in (j - rj).max(0)..=(j + rj).min(ny as isize - 1) {
            for a in (i - ri).max(0)..=(i + ri).min(nx as isize - 1) {
                let k = b as usize * nx + a as usize;
                if occupied[k] && (grid.cell_center(k) - c).norm() < h + 0.5 * hx.hypot(hy) {
                    // coarse test passed; confirm against the actual points
                    return hits.points().iter().all(|&z| (z - c).norm() >= h);
                }
            }
        }
        true
    };
    let frontier = grid.frontier();
    if frontier.is_empty() || n == 0 {
        return Vec::new();
    }
    let stride = (frontier.len() / (4 * n)).max(1);
    let mut out = Vec::with_capacity(n);
    for &idx in frontier.iter().step_by(stride) {
        if out.len() == n {
            break;
        }
        if clear(idx) {
            out.push(grid.cell_center(idx));
        }
    }
    out
}

/// `n` witnesses taken at an even stride: probes lying on the compact set
/// itself, where the potential of harmonic measure is constant.
pub fn witness_probes(witnesses: &EmpiricalMeasure, n: usize) -> Vec<Complex64> {
    let pts = witnesses.points();
    if n == 0 || pts.is_empty() {
        return Vec::new();
    }
    let step = (pts.len() / n).max(1);
    pts.iter().step_by(step).take(n).copied().collect()
}

/// Probes on a circle well inside the basin of infinity.
pub fn exterior_probes(grid: &GridLabeling, n: usize) -> Vec<Complex64> {
    circle_probes(grid.bbox.center(), 1.5 * grid.hull_radius(), n)
}
