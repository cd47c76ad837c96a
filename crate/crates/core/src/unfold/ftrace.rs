//! Floating-point ray tracing from cone points, for Monte Carlo sampling.
//!
//! Directions are addressed by their angular position on the cone, measured
//! counterclockwise from the clockwise edge of star slot 0.

use std::f64::consts::TAU;

use crate::geom::rational_to_f64;
use crate::surface::{EdgeRef, TranslationSurface};

type P = [f64; 2];

fn cross(a: P, b: P) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: P, b: P) -> P {
    [a[0] - b[0], a[1] - b[1]]
}

struct ConeData {
    /// (polygon, vertex) of each star slot.
    star: Vec<(usize, usize)>,
    /// Cumulative angle at the start of each slot.
    start: Vec<f64>,
    /// Argument of the clockwise edge of each slot.
    base: Vec<f64>,
    total: f64,
}

/// A float copy of a surface's polygons and gluings.
pub(crate) struct FloatSurface {
    verts: Vec<Vec<P>>,
    partner: Vec<Vec<(usize, usize)>>,
    cones: Vec<ConeData>,
    tol: f64,
}

/// Where a traced segment ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct FloatEnd {
    pub polygon: usize,
    pub position: P,
}

impl FloatSurface {
    pub fn new(s: &TranslationSurface) -> Self {
        let verts: Vec<Vec<P>> = s
            .polygons()
            .iter()
            .map(|p| p.vertices().iter().map(|v| [rational_to_f64(&v.x), rational_to_f64(&v.y)]).collect())
            .collect();
        let partner = s
            .polygons()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                (0..p.len())
                    .map(|j| {
                        let e = s.partner(EdgeRef::new(i, j));
                        (e.polygon, e.edge)
                    })
                    .collect()
            })
            .collect();
        let cones = s
            .cone_points()
            .iter()
            .map(|c| {
                let mut start = Vec::with_capacity(c.star.len());
                let mut base = Vec::with_capacity(c.star.len());
                let mut acc = 0.0;
                for corner in &c.star {
                    start.push(acc);
                    acc += s.corner_angle(*corner);
                    let e = s.e_out(*corner).to_f64();
                    base.push(e[1].atan2(e[0]));
                }
                ConeData {
                    star: c.star.iter().map(|k| (k.polygon, k.vertex)).collect(),
                    start,
                    base,
                    total: c.angle,
                }
            })
            .collect();
        let diam = verts
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v[0].abs()).max(v[1].abs()))
            .max(1.0);
        FloatSurface { verts, partner, cones, tol: 1e-11 * diam }
    }

    #[cfg(test)]
    pub fn cone_angle(&self, cone: usize) -> f64 {
        self.cones[cone].total
    }

    /// Slot and unit vector of the direction at angular position `pos`.
    pub fn direction(&self, cone: usize, pos: f64) -> (usize, P) {
        let c = &self.cones[cone];
        let pos = pos.rem_euclid(c.total);
        let slot = match c.start.binary_search_by(|a| a.partial_cmp(&pos).unwrap()) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let a = c.base[slot] + (pos - c.start[slot]);
        (slot, [a.cos(), a.sin()])
    }

    /// Traces length `r` from the cone point leaving along `dir` in `slot`.
    /// Returns `None` when the segment passes within tolerance of a vertex.
    pub fn trace(&self, cone: usize, slot: usize, dir: P, r: f64) -> Option<FloatEnd> {
        let (p, v) = self.cones[cone].star[slot];
        let n = self.verts[p].len();
        let skip = [v, (v + n - 1) % n];
        self.run(p, self.verts[p][v], dir, r, &skip)
    }

    fn run(&self, mut poly: usize, mut pos: P, dir: P, mut rest: f64, skip0: &[usize]) -> Option<FloatEnd> {
        let mut skip: Vec<usize> = skip0.to_vec();
        for _ in 0..1_000_000 {
            let vs = &self.verts[poly];
            let n = vs.len();
            let mut best: Option<(f64, usize)> = None;
            for i in 0..n {
                if skip.contains(&i) {
                    continue;
                }
                let e = sub(vs[(i + 1) % n], vs[i]);
                let den = cross(e, dir);
                if den >= 0.0 {
                    continue;
                }
                let t = cross(e, sub(vs[i], pos)) / den;
                // Reject edges whose line, but not segment, is met first.
                let x = [pos[0] + t * dir[0], pos[1] + t * dir[1]];
                let el = e[0] * e[0] + e[1] * e[1];
                let u = ((x[0] - vs[i][0]) * e[0] + (x[1] - vs[i][1]) * e[1]) / el;
                let slack = self.tol / el.sqrt();
                if u < -slack || u > 1.0 + slack {
                    continue;
                }
                if best.map_or(true, |(b, _)| t < b) {
                    best = Some((t, i));
                }
            }
            let (t, i) = best?;
            let t = t.max(0.0);
            if rest <= t {
                return Some(FloatEnd {
                    polygon: poly,
                    position: [pos[0] + rest * dir[0], pos[1] + rest * dir[1]],
                });
            }
            let x = [pos[0] + t * dir[0], pos[1] + t * dir[1]];
            let a = vs[i];
            let b = vs[(i + 1) % n];
            let near = |w: P| (x[0] - w[0]).abs() <= self.tol && (x[1] - w[1]).abs() <= self.tol;
            if near(a) || near(b) {
                return None;
            }
            let (q, j) = self.partner[poly][i];
            let qn = self.verts[q].len();
            let b2 = self.verts[q][(j + 1) % qn];
            pos = [b2[0] + (x[0] - a[0]), b2[1] + (x[1] - a[1])];
            rest -= t;
            poly = q;
            skip.clear();
            skip.push(j);
        }
        None
    }
}

/// Angular position where continuations after arriving along `back` begin:
/// π counterclockwise from the back direction.
pub(crate) fn window_start(back_position: f64, total: f64) -> f64 {
    (back_position + TAU / 2.0).rem_euclid(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::BuiltinSurface;
    use std::f64::consts::PI;

    #[test]
    fn directions_cover_the_cone() {
        let s = BuiltinSurface::lshape_default().build().unwrap();
        let f = FloatSurface::new(&s);
        assert!((f.cone_angle(0) - 6.0 * PI).abs() < 1e-12);
        let mut seen = vec![0usize; 12];
        for i in 0..120 {
            let (slot, d) = f.direction(0, (i as f64 + 0.5) * 6.0 * PI / 120.0);
            seen[slot] += 1;
            assert!((d[0].hypot(d[1]) - 1.0).abs() < 1e-12);
        }
        assert!(seen.iter().all(|&c| c == 10));
    }

    #[test]
    fn agrees_with_exact_tracer_on_rational_direction() {
        let s = BuiltinSurface::lshape_default().build().unwrap();
        let f = FloatSurface::new(&s);
        // Slot at (0,0) in the square whose clockwise edge points along +x.
        let (slot, d) = f.direction(0, 0.0);
        let (p, v) = f.cones[0].star[slot];
        let a = 0.3f64;
        let dir = [d[0] * a.cos() - d[1] * a.sin(), d[0] * a.sin() + d[1] * a.cos()];
        let end = f.trace(0, slot, dir, 3.7).unwrap();
        let start = f.verts[p][v];
        // Unfolded endpoint modulo the lattice of the surface must match the
        // plain translation by 3.7·dir reduced to a unit cell.
        let x = start[0] + 3.7 * dir[0];
        let y = start[1] + 3.7 * dir[1];
        assert!(((end.position[0] - x).rem_euclid(1.0) + 1e-9) % 1.0 < 2e-9);
        assert!(((end.position[1] - y).rem_euclid(1.0) + 1e-9) % 1.0 < 2e-9);
    }

    #[test]
    fn vertex_hits_are_reported() {
        let s = BuiltinSurface::lshape_default().build().unwrap();
        let f = FloatSurface::new(&s);
        let (slot, d) = f.direction(0, PI / 4.0);
        assert!(f.direction(0, 0.0).0 == slot);
        assert!(f.trace(0, slot, d, 2.0).is_none());
        assert!(f.trace(0, slot, d, 1.0).is_some());
    }
}
