//! Saddle connection enumeration by wedge unfolding.
//!
//! From every corner of every cone point the corner polygon is developed with
//! the apex at the origin. A branch is a developed polygon copy together with
//! a wedge of directions whose rays all reach it. Vertices of the copy inside
//! the wedge are hit by exactly one ray: cone points are emitted as saddle
//! connections, regular points are traced through. The rest of the wedge is
//! split along the far edges and recursed into the glued neighbours, pruning
//! any sub-wedge whose part of the edge lies beyond the length budget.

use num_traits::Signed;
use rayon::prelude::*;

use super::trace::continue_through_regular;
use super::{ConeDirection, SaddleConnection};
use crate::error::{Error, Result};
use crate::geom::{ccw_cmp_from, IVec, Rational, Vec2};
use crate::surface::{Corner, EdgeRef, TranslationSurface};

/// Direction wedge from `lo` counterclockwise to `hi`, at most π wide.
#[derive(Clone, Copy, Debug)]
struct Wedge {
    lo: IVec,
    lo_closed: bool,
    hi: IVec,
    hi_closed: bool,
}

impl Wedge {
    fn contains(&self, u: IVec) -> bool {
        if u.same_direction(self.lo) {
            return self.lo_closed;
        }
        if u.same_direction(self.hi) {
            return self.hi_closed;
        }
        ccw_cmp_from(self.lo, u, self.hi).is_lt()
    }

    fn contains_closed(&self, u: IVec) -> bool {
        u.same_direction(self.lo) || u.same_direction(self.hi) || ccw_cmp_from(self.lo, u, self.hi).is_lt()
    }

    /// Intersection with the open angular interval strictly between `a` and
    /// `b` (`a × b > 0`).
    fn clip_open(&self, a: IVec, b: IVec) -> Option<Wedge> {
        let strictly_inside = |x: IVec| a.cross(x) > 0 && x.cross(b) > 0;
        let (lo, lo_closed) = if self.contains_closed(a) {
            (a, false)
        } else if strictly_inside(self.lo) {
            (self.lo, self.lo_closed)
        } else {
            return None;
        };
        let (hi, hi_closed) = if self.contains_closed(b) {
            (b, false)
        } else if strictly_inside(self.hi) {
            (self.hi, self.hi_closed)
        } else {
            return None;
        };
        let nonempty = if lo.same_direction(hi) {
            lo_closed && hi_closed
        } else {
            lo.cross(hi) > 0
        };
        nonempty.then_some(Wedge { lo, lo_closed, hi, hi_closed })
    }
}

/// Squared distance from the origin to the part of segment `a→b` seen
/// inside `w` is below `budget`.
fn reachable(a: IVec, b: IVec, w: &Wedge, budget: &Rational) -> bool {
    let e = b - a;
    let h = a.cross(e);
    let hh = Rational::from_integer(h * h);
    // Foot of the perpendicular, scaled by |e|² to stay integral.
    let foot = a * e.norm_sq() - e * a.dot(e);
    let foot_inside = w.contains_closed(foot);
    if foot_inside {
        return hh < budget * Rational::from_integer(e.norm_sq());
    }
    let dist_sq = |v: IVec| {
        let c = v.cross(e);
        hh * Rational::from_integer(v.norm_sq()) / Rational::from_integer(c * c)
    };
    dist_sq(w.lo) < *budget || dist_sq(w.hi) < *budget
}

struct Branch {
    polygon: usize,
    offset: IVec,
    wedge: Wedge,
    crossings: Vec<EdgeRef>,
}

struct Found {
    holonomy: IVec,
    end: usize,
    back_slot: usize,
    crossings: Vec<EdgeRef>,
}

fn enumerate_from_corner(s: &TranslationSurface, corner: Corner, budget: &Rational) -> Vec<Found> {
    let mut found = Vec::new();
    let apex = s.ivertex(corner);
    let mut stack = vec![Branch {
        polygon: corner.polygon,
        offset: -apex,
        wedge: Wedge { lo: s.e_out(corner), lo_closed: true, hi: s.e_in_rev(corner), hi_closed: false },
        crossings: Vec::new(),
    }];
    while let Some(br) = stack.pop() {
        let verts: Vec<IVec> = s.ipoly(br.polygon).iter().map(|v| *v + br.offset).collect();
        let n = verts.len();
        for (i, &u) in verts.iter().enumerate() {
            if u.is_zero() || !br.wedge.contains(u) {
                continue;
            }
            let shadowed = verts.iter().any(|&w| w.same_direction(u) && w.norm_sq() < u.norm_sq());
            if shadowed || Rational::from_integer(u.norm_sq()) > *budget {
                continue;
            }
            let c = Corner::new(br.polygon, i);
            match s.cone_of_corner(c) {
                Some(end) => found.push(Found {
                    holonomy: u,
                    end,
                    back_slot: s.normalize_slot(c, -u),
                    crossings: br.crossings.clone(),
                }),
                None => {
                    if let Some((end, back_slot, holonomy, more)) =
                        continue_through_regular(s, c, br.offset, u, budget)
                    {
                        let mut crossings = br.crossings.clone();
                        crossings.extend(more);
                        found.push(Found { holonomy, end, back_slot, crossings });
                    }
                }
            }
        }
        for i in 0..n {
            let a = verts[i];
            let b = verts[(i + 1) % n];
            if a.cross(b) <= 0 {
                continue;
            }
            let Some(sub) = br.wedge.clip_open(a, b) else { continue };
            if !reachable(a, b, &sub, budget) {
                continue;
            }
            let e = EdgeRef::new(br.polygon, i);
            let p = s.partner(e);
            let mut crossings = br.crossings.clone();
            crossings.push(e);
            stack.push(Branch {
                polygon: p.polygon,
                offset: b - s.ivertex(Corner::new(p.polygon, p.edge)),
                wedge: sub,
                crossings,
            });
        }
    }
    found
}

/// All oriented saddle connections with `length² ≤ max_length_sq`, sorted by
/// (length², holonomy, start cone, out slot) and numbered in that order.
pub fn enumerate_saddle_connections(
    s: &TranslationSurface,
    max_length_sq: &Rational,
) -> Result<Vec<SaddleConnection>> {
    if !max_length_sq.is_positive() {
        return Err(Error::InvalidParams(format!("length budget must be positive, got {max_length_sq}")));
    }
    let scale = s.lattice_scale();
    let budget = max_length_sq * Rational::from_integer(scale * scale);
    let corners: Vec<(usize, usize, Corner)> = s
        .cone_points()
        .iter()
        .flat_map(|c| c.star.iter().enumerate().map(move |(slot, &corner)| (c.id, slot, corner)))
        .collect();
    let mut all: Vec<SaddleConnection> = corners
        .par_iter()
        .flat_map_iter(|&(cone, slot, corner)| {
            enumerate_from_corner(s, corner, &budget).into_iter().map(move |f| {
                let holonomy = Vec2::new(Rational::new(f.holonomy.x, scale), Rational::new(f.holonomy.y, scale));
                SaddleConnection {
                    id: 0,
                    start: cone,
                    end: f.end,
                    length_sq: holonomy.norm_sq(),
                    holonomy,
                    out_dir: ConeDirection::from_lattice(cone, slot, f.holonomy, scale),
                    back_dir: ConeDirection::from_lattice(f.end, f.back_slot, -f.holonomy, scale),
                    crossing_sequence: f.crossings,
                }
            })
        })
        .collect();
    all.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
    for (i, sc) in all.iter_mut().enumerate() {
        sc.id = i;
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::BuiltinSurface;
    use crate::unfold::{trace_from_cone, TraceOutcome};
    use num_integer::Integer;

    fn r(n: i128) -> Rational {
        Rational::from_integer(n)
    }

    fn primitive_count(max_sq: i128) -> usize {
        let m = (max_sq as f64).sqrt() as i128 + 1;
        let mut count = 0;
        for x in -m..=m {
            for y in -m..=m {
                if (x, y) != (0, 0) && x * x + y * y <= max_sq && x.gcd(&y) == 1 {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn lshape_unit_budget() {
        let s = BuiltinSurface::lshape_default().build().unwrap();
        let sc = enumerate_saddle_connections(&s, &r(1)).unwrap();
        assert_eq!(sc.len(), 12);
        for h in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let n = sc.iter().filter(|c| c.holonomy == Vec2::from_ints(h.0, h.1)).count();
            assert_eq!(n, 3, "{h:?}");
        }
    }

    #[test]
    fn lshape_counts_match_primitive_vectors() {
        let s = BuiltinSurface::lshape_default().build().unwrap();
        for l2 in [2, 4, 5, 10] {
            let sc = enumerate_saddle_connections(&s, &r(l2)).unwrap();
            assert_eq!(sc.len(), 3 * primitive_count(l2), "L²={l2}");
            for c in &sc {
                let d = c.holonomy.primitive_direction();
                assert_eq!(Vec2::from_ints(d.x, d.y), c.holonomy, "non-primitive holonomy");
            }
        }
    }

    #[test]
    fn slit_tori_short_connections() {
        let s = BuiltinSurface::slit_tori_default().build().unwrap();
        let sc = enumerate_saddle_connections(&s, &Rational::new(1, 4)).unwrap();
        // The two slits and the two complementary halves of the horizontal
        // circles through the slit ends, in both orientations.
        assert_eq!(sc.len(), 8);
        assert!(sc.iter().all(|c| c.length_sq == Rational::new(1, 4)));
        assert!(sc.iter().all(|c| c.start != c.end));
    }

    #[test]
    fn retraces_and_reverses_with_regular_points() {
        let slit = Vec2::new(Rational::new(1, 2), Rational::new(1, 3));
        let s = BuiltinSurface::SlitTori { slit }.build().unwrap();
        let sc = enumerate_saddle_connections(&s, &r(5)).unwrap();
        assert!(!sc.is_empty());
        for c in &sc {
            match trace_from_cone(&s, &c.out_dir, &c.length_sq).unwrap() {
                TraceOutcome::SingularHit { cone, back_slot, consumed_len_sq, crossings } => {
                    assert_eq!(cone, c.end);
                    assert_eq!(back_slot, c.back_dir.slot);
                    assert_eq!(consumed_len_sq, c.length_sq);
                    assert_eq!(crossings, c.crossing_sequence);
                }
                other => panic!("saddle {} did not retrace: {other:?}", c.id),
            }
            let rev = c.reversed(&s);
            let found = sc.iter().any(|d| {
                d.start == rev.start
                    && d.out_dir.slot == rev.out_dir.slot
                    && d.holonomy == rev.holonomy
                    && d.crossing_sequence == rev.crossing_sequence
            });
            assert!(found, "reverse of {} missing", c.id);
        }
    }

    #[test]
    fn rejects_nonpositive_budget() {
        let s = BuiltinSurface::lshape_default().build().unwrap();
        assert!(enumerate_saddle_connections(&s, &r(0)).is_err());
    }
}
