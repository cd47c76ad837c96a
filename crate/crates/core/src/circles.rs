//! Circles around a cone point: continuation windows, Monte Carlo arc-length
//! histograms over a cell grid, and sector volume estimates.
//!
//! Every sample belongs to one of `REPLICATES` independent stratified
//! replicates of the same estimator; per-cell standard errors come from the
//! spread between replicates.

use std::f64::consts::TAU;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{rational_to_f64, Rational};
use crate::paths::{for_each_path, ConcatGraph};
use crate::report::{heatmap_svg, sig12, HeatRect};
use crate::surface::TranslationSurface;
use crate::unfold::ftrace::{window_start, FloatSurface};
use crate::unfold::ConeDirection;

const REPLICATES: usize = 8;
const CHUNK: usize = 512;

/// Allowed outgoing directions at a cone point after arriving along `back`,
/// as an interval of angular positions `(start, start + width)` modulo the
/// cone angle.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionWindow {
    pub cone: usize,
    /// Angular position of the window start, measured like
    /// [`ConeDirection::angle_position`].
    pub start: f64,
    pub width: f64,
    pub back: Option<ConeDirection>,
}

impl DirectionWindow {
    /// Is angular position `pos` strictly inside the window?
    pub fn contains(&self, pos: f64, cone_angle: f64) -> bool {
        if self.back.is_none() {
            return true;
        }
        let d = (pos - self.start).rem_euclid(cone_angle);
        d > 0.0 && d < self.width
    }
}

/// The window after `path` (saddle ids) from `x`; the full cone when empty.
pub fn direction_window(s: &TranslationSurface, g: &ConcatGraph, x: usize, path: &[usize]) -> Result<DirectionWindow> {
    g.cone_checked(x)?;
    match path.last() {
        None => Ok(DirectionWindow { cone: x, start: 0.0, width: TAU * (g.k(x) + 1) as f64, back: None }),
        Some(&last) => {
            let sc = geometry(g)?.get(last).ok_or(Error::UnknownSaddle(last))?;
            let total = s.cone(sc.end)?.angle;
            Ok(DirectionWindow {
                cone: sc.end,
                start: window_start(sc.back_dir.angle_position(s), total),
                width: TAU * g.k(sc.end) as f64,
                back: Some(sc.back_dir.clone()),
            })
        }
    }
}

fn geometry(g: &ConcatGraph) -> Result<&[crate::unfold::SaddleConnection]> {
    if g.saddles().len() != g.len() {
        return Err(Error::InvalidParams("concatenation graph carries no surface geometry".into()));
    }
    Ok(g.saddles())
}

/// One cell of a [`CellGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub id: usize,
    pub polygon: usize,
    pub i: usize,
    pub j: usize,
    /// Exact area of the cell's part of the polygon.
    pub area: Rational,
    /// `[x0, y0, x1, y1]` of the sub-rectangle.
    pub rect: [f64; 4],
}

/// Each polygon's bounding box cut into `n × n` congruent rectangles; cells
/// missing the polygon's interior are dropped.
#[derive(Clone, Debug)]
pub struct CellGrid {
    n: usize,
    cells: Vec<Cell>,
    boxes: Vec<[f64; 4]>,
    exact_boxes: Vec<[Rational; 4]>,
    /// Per polygon, cell id at `i * n + j`; zero-area slots point at the
    /// nearest real cell.
    lookup: Vec<Vec<usize>>,
}

impl CellGrid {
    pub fn new(s: &TranslationSurface, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("grid resolution must be positive".into()));
        }
        let nn = Rational::from_integer(n as i128);
        let mut cells = Vec::new();
        let mut boxes = Vec::new();
        let mut exact_boxes = Vec::new();
        let mut lookup = Vec::new();
        for (p, poly) in s.polygons().iter().enumerate() {
            let (lo, hi) = poly.bounding_box();
            let w = (hi.x - lo.x) / nn;
            let h = (hi.y - lo.y) / nn;
            let verts: Vec<[Rational; 2]> = poly.vertices().iter().map(|v| [v.x, v.y]).collect();
            let mut slots = vec![usize::MAX; n * n];
            for i in 0..n {
                for j in 0..n {
                    let x0 = lo.x + w * Rational::from_integer(i as i128);
                    let y0 = lo.y + h * Rational::from_integer(j as i128);
                    let area = clipped_area(&verts, [x0, y0, x0 + w, y0 + h]);
                    if area.is_zero() {
                        continue;
                    }
                    slots[i * n + j] = cells.len();
                    cells.push(Cell {
                        id: cells.len(),
                        polygon: p,
                        i,
                        j,
                        area,
                        rect: [x0, y0, x0 + w, y0 + h].map(|v| rational_to_f64(&v)),
                    });
                }
            }
            let real: Vec<usize> = slots.iter().copied().filter(|&c| c != usize::MAX).collect();
            for idx in 0..n * n {
                if slots[idx] == usize::MAX {
                    let (i, j) = ((idx / n) as i64, (idx % n) as i64);
                    slots[idx] = *real
                        .iter()
                        .min_by_key(|&&c| {
                            let (ci, cj) = (cells[c].i as i64, cells[c].j as i64);
                            ((ci - i).pow(2) + (cj - j).pow(2), c)
                        })
                        .expect("polygon has positive area");
                }
            }
            boxes.push([lo.x, lo.y, hi.x, hi.y].map(|v| rational_to_f64(&v)));
            exact_boxes.push([lo.x, lo.y, hi.x, hi.y]);
            lookup.push(slots);
        }
        Ok(CellGrid { n, cells, boxes, exact_boxes, lookup })
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total_area(&self) -> Rational {
        self.cells.iter().fold(Rational::zero(), |a, c| a + c.area)
    }

    /// Cell containing a point given in a polygon's frame.
    pub fn locate(&self, polygon: usize, p: [f64; 2]) -> usize {
        let b = self.boxes[polygon];
        let idx = |v: f64, lo: f64, hi: f64| {
            let t = ((v - lo) / (hi - lo) * self.n as f64).floor();
            (t.max(0.0) as usize).min(self.n - 1)
        };
        self.lookup[polygon][idx(p[0], b[0], b[2]) * self.n + idx(p[1], b[1], b[3])]
    }

    /// Cells meeting a segment in a polygon's frame, with the length of each
    /// part. The split points are exact; only the lengths are rounded.
    pub(crate) fn split_segment(&self, polygon: usize, from: &[Rational; 2], to: &[Rational; 2]) -> Vec<(usize, f64)> {
        let [bx0, by0, bx1, by1] = self.exact_boxes[polygon];
        let d = [to[0] - from[0], to[1] - from[1]];
        let len = rational_to_f64(&(d[0] * d[0] + d[1] * d[1])).sqrt();
        let mut ts = vec![Rational::zero(), Rational::from_integer(1)];
        let n = Rational::from_integer(self.n as i128);
        let lines = |a: Rational, b: Rational| -> Vec<Rational> {
            (1..self.n as i128).map(|k| a + (b - a) * Rational::from_integer(k) / n).collect()
        };
        let (xs, ys) = (lines(bx0, bx1), lines(by0, by1));
        let lo = [from[0].min(to[0]), from[1].min(to[1])];
        let hi = [from[0].max(to[0]), from[1].max(to[1])];
        for x in xs {
            if !d[0].is_zero() && x > lo[0] && x < hi[0] {
                ts.push((x - from[0]) / d[0]);
            }
        }
        for y in ys {
            if !d[1].is_zero() && y > lo[1] && y < hi[1] {
                ts.push((y - from[1]) / d[1]);
            }
        }
        ts.sort();
        ts.dedup();
        let half = Rational::new(1, 2);
        let mut out: Vec<(usize, f64)> = Vec::new();
        for w in ts.windows(2) {
            let mid = (w[0] + w[1]) * half;
            let p = [from[0] + d[0] * mid, from[1] + d[1] * mid];
            let cell = self.locate(polygon, [rational_to_f64(&p[0]), rational_to_f64(&p[1])]);
            let part = rational_to_f64(&(w[1] - w[0])) * len;
            match out.last_mut() {
                Some((c, l)) if *c == cell => *l += part,
                _ => out.push((cell, part)),
            }
        }
        out
    }

    /// Heat map of `values` (one per cell), polygons laid out left to right.
    pub fn heatmap_svg(&self, values: &[f64], title: &str) -> String {
        let mut shift = Vec::with_capacity(self.boxes.len());
        let mut x = 0.0;
        for b in &self.boxes {
            shift.push(x - b[0]);
            x += (b[2] - b[0]) * 1.1;
        }
        let rects: Vec<HeatRect> = self
            .cells
            .iter()
            .map(|c| HeatRect {
                x0: c.rect[0] + shift[c.polygon],
                y0: c.rect[1],
                x1: c.rect[2] + shift[c.polygon],
                y1: c.rect[3],
                value: values[c.id],
            })
            .collect();
        heatmap_svg(&rects, title)
    }
}

/// Area of a convex polygon clipped to an axis-aligned rectangle.
fn clipped_area(poly: &[[Rational; 2]], rect: [Rational; 4]) -> Rational {
    let mut pts = poly.to_vec();
    // (axis, bound, keep values >= bound)
    for (axis, bound, above) in [(0, rect[0], true), (0, rect[2], false), (1, rect[1], true), (1, rect[3], false)] {
        let inside = |p: &[Rational; 2]| if above { p[axis] >= bound } else { p[axis] <= bound };
        let mut out = Vec::with_capacity(pts.len() + 2);
        for i in 0..pts.len() {
            let a = &pts[i];
            let b = &pts[(i + 1) % pts.len()];
            if inside(a) {
                out.push(*a);
            }
            if inside(a) != inside(b) {
                let t = (bound - a[axis]) / (b[axis] - a[axis]);
                out.push([a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t]);
            }
        }
        pts = out;
        if pts.len() < 3 {
            return Rational::zero();
        }
    }
    let n = pts.len();
    let twice = (0..n).fold(Rational::zero(), |acc, i| {
        let (a, b) = (&pts[i], &pts[(i + 1) % n]);
        acc + a[0] * b[1] - a[1] * b[0]
    });
    twice / Rational::from_integer(2)
}

/// Nonnegative masses indexed by cell id.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureHistogram {
    pub masses: Vec<f64>,
    /// Monte Carlo standard error of each mass (zero for exact measures).
    pub std_err: Vec<f64>,
    pub total: f64,
    /// Total before normalization.
    pub raw_total: f64,
    /// R for circles, T for occupancy measures.
    pub radius: f64,
    pub samples: u64,
    pub seed: u64,
    pub dropped: u64,
}

impl MeasureHistogram {
    /// Sum of `|a − b|` over cells.
    pub fn l1_distance(&self, other: &MeasureHistogram) -> f64 {
        self.masses.iter().zip(&other.masses).map(|(a, b)| (a - b).abs()).sum()
    }

    /// Mass divided by cell area.
    pub fn densities(&self, grid: &CellGrid) -> Vec<f64> {
        grid.cells.iter().map(|c| self.masses[c.id] / rational_to_f64(&c.area)).collect()
    }

    /// Largest density gap between two cells in units of its standard error.
    pub fn max_density_contrast(&self, grid: &CellGrid) -> f64 {
        let d = self.densities(grid);
        let se: Vec<f64> = grid.cells.iter().map(|c| self.std_err[c.id] / rational_to_f64(&c.area)).collect();
        let mut best = 0.0f64;
        for a in 0..d.len() {
            for b in a + 1..d.len() {
                let s = (se[a] * se[a] + se[b] * se[b]).sqrt();
                let z = if s > 0.0 { (d[a] - d[b]).abs() / s } else if d[a] != d[b] { f64::INFINITY } else { 0.0 };
                best = best.max(z);
            }
        }
        best
    }

    pub fn to_csv(&self, grid: &CellGrid) -> String {
        let mut out = format!(
            "# radius={}\n# samples={}\n# seed={}\n# dropped={}\n# raw_total={}\ncell_id,polygon,i,j,area,mass,density\n",
            sig12(self.radius),
            self.samples,
            self.seed,
            self.dropped,
            sig12(self.raw_total)
        );
        let dens = self.densities(grid);
        for c in &grid.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                c.id,
                c.polygon,
                c.i,
                c.j,
                sig12(rational_to_f64(&c.area)),
                sig12(self.masses[c.id]),
                sig12(dens[c.id])
            ));
        }
        out
    }

    pub fn to_svg(&self, grid: &CellGrid, title: &str) -> String {
        grid.heatmap_svg(&self.densities(grid), title)
    }
}

/// A circular sector of the ball: directions in a window, radii up to `radius`.
#[derive(Clone, Copy, Debug)]
struct Sector {
    cone: usize,
    start: f64,
    width: f64,
    radius: f64,
}

fn sectors(s: &TranslationSurface, g: &ConcatGraph, x: usize, r: f64) -> Result<Vec<Sector>> {
    if !(r > 0.0) {
        return Err(Error::DegenerateRadius(r));
    }
    g.cone_checked(x)?;
    let saddles = geometry(g)?;
    let starts: Vec<f64> = saddles
        .iter()
        .map(|sc| window_start(sc.back_dir.angle_position(s), s.cone_points()[sc.end].angle))
        .collect();
    let mut out = vec![Sector { cone: x, start: 0.0, width: TAU * (g.k(x) + 1) as f64, radius: r }];
    for_each_path(g, x, r, |l, last| {
        if l < r {
            let cone = g.end(last);
            out.push(Sector { cone, start: starts[last], width: TAU * g.k(cone) as f64, radius: r - l });
        }
    })?;
    Ok(out)
}

/// Samples per replicate for a window of the given width.
fn per_replicate(width: f64, samples_per_unit_angle: usize) -> usize {
    ((samples_per_unit_angle as f64 * width) / REPLICATES as f64).ceil().max(1.0) as usize
}

struct Tally {
    /// `REPLICATES × cells`, replicate-major.
    mass: Vec<f64>,
    samples: u64,
    dropped: u64,
}

/// Runs `sample(sector, rng) -> Option<(cell, weight)>`-style stratified
/// sampling over all sectors, deterministic in `seed`.
fn run_sectors(
    f: &FloatSurface,
    grid: &CellGrid,
    sectors: &[Sector],
    samples_per_unit_angle: usize,
    seed: u64,
    volume: bool,
) -> Tally {
    let cells = grid.len();
    let partials: Vec<Tally> = sectors
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(chunk, secs)| {
            let mut t = Tally { mass: vec![0.0; REPLICATES * cells], samples: 0, dropped: 0 };
            for (k, sec) in secs.iter().enumerate() {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream((chunk * CHUNK + k) as u64);
                let m = per_replicate(sec.width, samples_per_unit_angle);
                let stratum = sec.width / m as f64;
                let weight = if volume {
                    sec.width * sec.radius * sec.radius / 2.0 / m as f64
                } else {
                    sec.radius * stratum
                };
                for b in 0..REPLICATES {
                    for i in 0..m {
                        let u: f64 = rng.gen();
                        let dist = if volume { sec.radius * rng.gen::<f64>().sqrt() } else { sec.radius };
                        let theta = sec.start + (i as f64 + u) * stratum;
                        t.samples += 1;
                        let hit = trace_once(f, sec.cone, theta, dist)
                            .or_else(|| trace_once(f, sec.cone, theta + stratum * 1e-6, dist));
                        match hit {
                            Some((poly, p)) => t.mass[b * cells + grid.locate(poly, p)] += weight,
                            None => t.dropped += 1,
                        }
                    }
                }
            }
            t
        })
        .collect();
    let mut total = Tally { mass: vec![0.0; REPLICATES * cells], samples: 0, dropped: 0 };
    for p in partials {
        for (a, b) in total.mass.iter_mut().zip(&p.mass) {
            *a += b;
        }
        total.samples += p.samples;
        total.dropped += p.dropped;
    }
    total
}

fn trace_once(f: &FloatSurface, cone: usize, theta: f64, dist: f64) -> Option<(usize, [f64; 2])> {
    let (slot, dir) = f.direction(cone, theta);
    f.trace(cone, slot, dir, dist).map(|e| (e.polygon, e.position))
}

/// Replicate means and standard errors per cell.
fn reduce(t: &Tally, cells: usize) -> (Vec<f64>, Vec<f64>) {
    let rep = REPLICATES as f64;
    let mut mean = vec![0.0; cells];
    let mut se = vec![0.0; cells];
    for c in 0..cells {
        let xs: Vec<f64> = (0..REPLICATES).map(|b| t.mass[b * cells + c]).collect();
        let m = xs.iter().sum::<f64>() / rep;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (rep - 1.0);
        mean[c] = m;
        se[c] = (var / rep).sqrt();
    }
    (mean, se)
}

/// Monte Carlo estimate of the normalized arc-length measure μ_R of the
/// circle of radius `r` around cone `x`.
pub fn circle_measure(
    s: &TranslationSurface,
    g: &ConcatGraph,
    x: usize,
    r: f64,
    grid: &CellGrid,
    samples_per_unit_angle: usize,
    seed: u64,
) -> Result<MeasureHistogram> {
    if samples_per_unit_angle == 0 {
        return Err(Error::InvalidParams("samples per unit angle must be positive".into()));
    }
    let secs = sectors(s, g, x, r)?;
    let exact: f64 = secs.iter().map(|q| q.width * q.radius).sum();
    let f = FloatSurface::new(s);
    let t = run_sectors(&f, grid, &secs, samples_per_unit_angle, seed, false);
    let (mean, se) = reduce(&t, grid.len());
    let raw_total: f64 = mean.iter().sum();
    let masses: Vec<f64> = mean.iter().map(|m| m / exact).collect();
    log::debug!("circle R={r}: {} sectors, {} samples, {} dropped", secs.len(), t.samples, t.dropped);
    Ok(MeasureHistogram {
        total: masses.iter().sum(),
        masses,
        std_err: se.iter().map(|e| e / exact).collect(),
        raw_total,
        radius: r,
        samples: t.samples,
        seed,
        dropped: t.dropped,
    })
}

/// Estimate of V_A(R) with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VolumeEstimate {
    pub estimate: f64,
    pub std_err: f64,
    pub samples: u64,
    pub dropped: u64,
}

/// Monte Carlo estimate of the volume of the ball of radius `r` around cone
/// `x` inside the cells `region`, counted with multiplicity over sectors.
pub fn region_volume(
    s: &TranslationSurface,
    g: &ConcatGraph,
    x: usize,
    r: f64,
    grid: &CellGrid,
    region: &[usize],
    samples_per_unit_angle: usize,
    seed: u64,
) -> Result<VolumeEstimate> {
    if samples_per_unit_angle == 0 {
        return Err(Error::InvalidParams("samples per unit angle must be positive".into()));
    }
    let mut member = vec![false; grid.len()];
    for &c in region {
        *member.get_mut(c).ok_or_else(|| Error::InvalidParams(format!("no cell {c}")))? = true;
    }
    let secs = sectors(s, g, x, r)?;
    let f = FloatSurface::new(s);
    let t = run_sectors(&f, grid, &secs, samples_per_unit_angle, seed, true);
    let cells = grid.len();
    let reps: Vec<f64> = (0..REPLICATES)
        .map(|b| (0..cells).filter(|&c| member[c]).map(|c| t.mass[b * cells + c]).sum())
        .collect();
    let rep = REPLICATES as f64;
    let mean = reps.iter().sum::<f64>() / rep;
    let var = reps.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (rep - 1.0);
    Ok(VolumeEstimate { estimate: mean, std_err: (var / rep).sqrt(), samples: t.samples, dropped: t.dropped })
}

/// Exact ℓ(C(x, R)) as the sum of sector arc lengths; agrees with
/// [`crate::paths::circle_length`].
pub fn sector_circle_length(s: &TranslationSurface, g: &ConcatGraph, x: usize, r: f64) -> Result<f64> {
    Ok(sectors(s, g, x, r)?.iter().map(|q| q.width * q.radius).sum())
}
