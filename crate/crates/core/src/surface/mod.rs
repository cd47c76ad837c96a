//! Translation surfaces glued from convex rational polygons.
//!
//! A surface is validated once at construction and is immutable afterwards.
//! Besides the public polygon/gluing data it caches an integer-lattice copy of
//! every polygon (coordinates multiplied by the common denominator), the
//! partner of every edge, and the cyclic star of corners around every vertex
//! class. Vertex classes of total angle 2π are regular points; the others are
//! the cone points, ordered by their smallest corner.

mod builtin;
mod format;

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;

use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{arg_cmp, ccw_angle_f64, ccw_cmp_from, rational_to_f64, to_scaled_int, IVec, Point2, Rational, Vec2};

pub use builtin::BuiltinSurface;
pub use format::{emit_surface, load_surface};

/// Tolerance for recognizing a sum of corner angles as a multiple of 2π.
pub const CONE_ANGLE_TOLERANCE: f64 = 1e-9;

/// Edge `edge` of polygon `polygon`, running from vertex `edge` to vertex `edge + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeRef {
    pub polygon: usize,
    pub edge: usize,
}

impl EdgeRef {
    pub const fn new(polygon: usize, edge: usize) -> Self {
        EdgeRef { polygon, edge }
    }
}

impl fmt::Display for EdgeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.polygon, self.edge)
    }
}

/// Vertex `vertex` of polygon `polygon`, seen as a corner (an angular sector).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Corner {
    pub polygon: usize,
    pub vertex: usize,
}

impl Corner {
    pub const fn new(polygon: usize, vertex: usize) -> Self {
        Corner { polygon, vertex }
    }
}

/// Convex polygon with counterclockwise vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polygon {
    vertices: Vec<Point2>,
}

impl Polygon {
    /// Validates convexity and orientation. `index` is only used in errors.
    pub fn new(vertices: Vec<Point2>, index: usize) -> Result<Self> {
        let bad = |reason: &str| Error::NonConvexPolygon { index, reason: reason.to_string() };
        let n = vertices.len();
        if n < 3 {
            return Err(bad("fewer than 3 vertices"));
        }
        for i in 0..n {
            for j in i + 1..n {
                if vertices[i] == vertices[j] {
                    return Err(bad("repeated vertex"));
                }
            }
        }
        let mut strict = 0;
        let mut turning = 0.0;
        for i in 0..n {
            let e0 = &vertices[(i + 1) % n] - &vertices[i];
            let e1 = &vertices[(i + 2) % n] - &vertices[(i + 1) % n];
            let c = e0.cross(&e1);
            if c.is_negative() {
                return Err(bad("reflex or clockwise turn"));
            }
            if c.is_zero() {
                if e0.dot(&e1).is_negative() {
                    return Err(bad("edge doubles back"));
                }
            } else {
                strict += 1;
                turning += rational_to_f64(&c).atan2(rational_to_f64(&e0.dot(&e1)));
            }
        }
        if strict < 3 {
            return Err(bad("fewer than three strict turns"));
        }
        if (turning - TAU).abs() > 1e-6 {
            return Err(bad("boundary winds more than once"));
        }
        Ok(Polygon { vertices })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Holonomy vector of edge `i`.
    pub fn edge(&self, i: usize) -> Vec2 {
        let n = self.vertices.len();
        &self.vertices[(i + 1) % n] - &self.vertices[i]
    }

    pub fn area(&self) -> Rational {
        let n = self.vertices.len();
        let twice = (0..n).fold(Rational::zero(), |acc, i| {
            acc + self.vertices[i].cross(&self.vertices[(i + 1) % n])
        });
        twice / Rational::from_integer(2)
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Point2, Point2) {
        let mut lo = self.vertices[0].clone();
        let mut hi = self.vertices[0].clone();
        for v in &self.vertices[1..] {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    /// Closed containment test.
    pub fn contains(&self, p: &Point2) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| !self.edge(i).cross(&(p - &self.vertices[i])).is_negative())
    }
}

/// Unordered edge pairs; every edge of every polygon occurs exactly once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gluing {
    pairs: Vec<(EdgeRef, EdgeRef)>,
}

impl Gluing {
    /// Normalizes each pair to `(min, max)` and sorts the list.
    pub fn new(pairs: impl IntoIterator<Item = (EdgeRef, EdgeRef)>) -> Self {
        let mut pairs: Vec<_> = pairs
            .into_iter()
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        pairs.sort();
        Gluing { pairs }
    }

    pub fn pairs(&self) -> &[(EdgeRef, EdgeRef)] {
        &self.pairs
    }
}

/// A singular point of cone angle `2π(k + 1)`, `k ≥ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConePoint {
    pub id: usize,
    pub k: usize,
    /// Corners around the point in counterclockwise order, starting at the
    /// lexicographically smallest corner.
    pub star: Vec<Corner>,
    /// Floating-point sum of the corner angles.
    pub angle: f64,
}

/// Equivalence class of polygon vertices after gluing.
#[derive(Clone, Debug)]
pub(crate) struct VertexClass {
    pub star: Vec<Corner>,
    pub multiple: usize,
    pub cone: Option<usize>,
    /// Number of times the positive x-axis was crossed before each slot's
    /// clockwise boundary, walking the star from slot 0.
    pub sheet: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct TranslationSurface {
    polygons: Vec<Polygon>,
    gluing: Gluing,
    cone_points: Vec<ConePoint>,
    genus: usize,
    scale: i128,
    ipoly: Vec<Vec<IVec>>,
    partner: Vec<Vec<EdgeRef>>,
    corner_class: Vec<Vec<usize>>,
    corner_slot: Vec<Vec<usize>>,
    corner_angle: Vec<Vec<f64>>,
    classes: Vec<VertexClass>,
}

impl TranslationSurface {
    /// Builds and validates a surface.
    pub fn new(polygons: Vec<Vec<Point2>>, gluings: Vec<(EdgeRef, EdgeRef)>) -> Result<Self> {
        let polygons = polygons
            .into_iter()
            .enumerate()
            .map(|(i, v)| Polygon::new(v, i))
            .collect::<Result<Vec<_>>>()?;
        if polygons.is_empty() {
            return Err(Error::Parse("no polygons".into()));
        }

        // Every edge exactly once, paired with an exact opposite.
        let mut partner: Vec<Vec<Option<EdgeRef>>> =
            polygons.iter().map(|p| vec![None; p.len()]).collect();
        for &(a, b) in &gluings {
            for e in [a, b] {
                if e.polygon >= polygons.len() || e.edge >= polygons[e.polygon].len() {
                    return Err(Error::InvalidGluing(format!("edge {e} out of range")));
                }
            }
            if a == b {
                return Err(Error::EdgeMismatch { a, b, reason: "edge glued to itself".into() });
            }
            let ha = polygons[a.polygon].edge(a.edge);
            let hb = polygons[b.polygon].edge(b.edge);
            if !(&ha + &hb).is_zero() {
                return Err(Error::EdgeMismatch {
                    a,
                    b,
                    reason: format!("holonomies {ha} and {hb} are not opposite"),
                });
            }
            for (e, f) in [(a, b), (b, a)] {
                let slot = &mut partner[e.polygon][e.edge];
                if slot.is_some() {
                    return Err(Error::InvalidGluing(format!("edge {e} glued more than once")));
                }
                *slot = Some(f);
            }
        }
        let partner: Vec<Vec<EdgeRef>> = partner
            .into_iter()
            .enumerate()
            .map(|(p, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(e, x)| {
                        x.ok_or_else(|| {
                            Error::InvalidGluing(format!("edge {} is not glued", EdgeRef::new(p, e)))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;

        // Connectivity of the polygon adjacency graph.
        let mut seen = vec![false; polygons.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(p) = stack.pop() {
            for e in &partner[p] {
                if !seen[e.polygon] {
                    seen[e.polygon] = true;
                    stack.push(e.polygon);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Disconnected);
        }

        let scale = polygons
            .iter()
            .flat_map(|p| p.vertices.iter())
            .fold(1i128, |acc, v| acc.lcm(v.x.denom()).lcm(v.y.denom()));
        let ipoly: Vec<Vec<IVec>> = polygons
            .iter()
            .map(|p| {
                p.vertices
                    .iter()
                    .map(|v| IVec::new(to_scaled_int(&v.x, scale), to_scaled_int(&v.y, scale)))
                    .collect()
            })
            .collect();

        let corner_angle: Vec<Vec<f64>> = ipoly
            .iter()
            .map(|vs| {
                let n = vs.len();
                (0..n)
                    .map(|v| {
                        let out = vs[(v + 1) % n] - vs[v];
                        let back = vs[(v + n - 1) % n] - vs[v];
                        ccw_angle_f64(out.to_f64(), back.to_f64())
                    })
                    .collect()
            })
            .collect();

        // Vertex classes by walking corner stars.
        let unset = usize::MAX;
        let mut corner_class: Vec<Vec<usize>> =
            polygons.iter().map(|p| vec![unset; p.len()]).collect();
        let mut corner_slot = corner_class.clone();
        let mut classes = Vec::new();
        for p in 0..polygons.len() {
            for v in 0..polygons[p].len() {
                if corner_class[p][v] != unset {
                    continue;
                }
                let start = Corner::new(p, v);
                let mut star = vec![start];
                let mut cur = next_ccw(&partner, &polygons, start);
                while cur != start {
                    if star.len() > 4 * corner_class.iter().map(Vec::len).sum::<usize>() {
                        return Err(Error::InvalidGluing("corner star does not close".into()));
                    }
                    star.push(cur);
                    cur = next_ccw(&partner, &polygons, cur);
                }
                // Rotate to the smallest corner.
                let min_pos = (0..star.len()).min_by_key(|&i| star[i]).unwrap();
                star.rotate_left(min_pos);
                let angle: f64 = star.iter().map(|c| corner_angle[c.polygon][c.vertex]).sum();
                let multiple = (angle / TAU).round();
                if multiple < 1.0 || (angle - multiple * TAU).abs() > CONE_ANGLE_TOLERANCE {
                    return Err(Error::BadConeAngle { angle });
                }
                let id = classes.len();
                for (slot, c) in star.iter().enumerate() {
                    if corner_class[c.polygon][c.vertex] != unset {
                        return Err(Error::InvalidGluing("corner in two stars".into()));
                    }
                    corner_class[c.polygon][c.vertex] = id;
                    corner_slot[c.polygon][c.vertex] = slot;
                }
                let mut sheet = Vec::with_capacity(star.len());
                let mut s = 0;
                for (i, c) in star.iter().enumerate() {
                    if i > 0 {
                        let prev = e_out_of(&ipoly, star[i - 1]);
                        let here = e_out_of(&ipoly, *c);
                        if arg_cmp(here, prev).is_lt() {
                            s += 1;
                        }
                    }
                    sheet.push(s);
                }
                classes.push(VertexClass { star, multiple: multiple as usize, cone: None, sheet });
            }
        }

        // Classes were discovered in corner order, so the first corner of
        // each star is increasing and the cone ids come out canonical.
        let mut cone_points = Vec::new();
        for class in classes.iter_mut() {
            if class.multiple >= 2 {
                let id = cone_points.len();
                class.cone = Some(id);
                let angle = class
                    .star
                    .iter()
                    .map(|c| corner_angle[c.polygon][c.vertex])
                    .sum();
                cone_points.push(ConePoint { id, k: class.multiple - 1, star: class.star.clone(), angle });
            }
        }
        if cone_points.is_empty() {
            return Err(Error::NoSingularities);
        }

        let v = classes.len() as i64;
        let e = gluings.len() as i64;
        let f = polygons.len() as i64;
        let chi = v - e + f;
        if chi > 0 || chi % 2 != 0 {
            return Err(Error::InvalidGluing(format!("Euler characteristic {chi} is not that of a closed orientable surface of genus ≥ 1")));
        }
        let genus = ((2 - chi) / 2) as usize;
        let total_k: usize = cone_points.iter().map(|c| c.k).sum();
        if total_k != 2 * genus - 2 {
            return Err(Error::InvalidGluing(format!(
                "cone excess {total_k} does not match genus {genus}"
            )));
        }

        Ok(TranslationSurface {
            polygons,
            gluing: Gluing::new(gluings),
            cone_points,
            genus,
            scale,
            ipoly,
            partner,
            corner_class,
            corner_slot,
            corner_angle,
            classes,
        })
    }

    pub fn builtin(which: BuiltinSurface) -> Result<Self> {
        which.build()
    }

    pub fn polygons(&self) -> &[Polygon] {
        &self.polygons
    }

    pub fn gluing(&self) -> &Gluing {
        &self.gluing
    }

    pub fn cone_points(&self) -> &[ConePoint] {
        &self.cone_points
    }

    pub fn cone(&self, id: usize) -> Result<&ConePoint> {
        self.cone_points.get(id).ok_or(Error::UnknownCone(id))
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    /// Number of regular (angle 2π) vertex classes.
    pub fn regular_vertex_count(&self) -> usize {
        self.classes.iter().filter(|c| c.cone.is_none()).count()
    }

    pub fn area(&self) -> Rational {
        self.polygons.iter().map(Polygon::area).fold(Rational::zero(), |a, b| a + b)
    }

    pub fn partner(&self, e: EdgeRef) -> EdgeRef {
        self.partner[e.polygon][e.edge]
    }

    /// Multiplies every coordinate by `c > 0`.
    pub fn scaled(&self, c: &Rational) -> Result<Self> {
        if !c.is_positive() {
            return Err(Error::InvalidParams(format!("scale factor must be positive, got {c}")));
        }
        let polys = self
            .polygons
            .iter()
            .map(|p| p.vertices.iter().map(|v| v.scale(c)).collect())
            .collect();
        TranslationSurface::new(polys, self.gluing.pairs.clone())
    }

    // ---- crate-internal lattice view ----

    pub(crate) fn lattice_scale(&self) -> i128 {
        self.scale
    }

    pub(crate) fn ipoly(&self, p: usize) -> &[IVec] {
        &self.ipoly[p]
    }

    pub(crate) fn ivertex(&self, c: Corner) -> IVec {
        self.ipoly[c.polygon][c.vertex]
    }

    pub(crate) fn e_out(&self, c: Corner) -> IVec {
        e_out_of(&self.ipoly, c)
    }

    pub(crate) fn e_in_rev(&self, c: Corner) -> IVec {
        let vs = &self.ipoly[c.polygon];
        let n = vs.len();
        vs[(c.vertex + n - 1) % n] - vs[c.vertex]
    }

    pub(crate) fn class_of(&self, c: Corner) -> usize {
        self.corner_class[c.polygon][c.vertex]
    }

    pub(crate) fn slot_of(&self, c: Corner) -> usize {
        self.corner_slot[c.polygon][c.vertex]
    }

    pub(crate) fn class(&self, id: usize) -> &VertexClass {
        &self.classes[id]
    }

    pub(crate) fn corner_angle(&self, c: Corner) -> f64 {
        self.corner_angle[c.polygon][c.vertex]
    }

    /// Cone id of the vertex at corner `c`, if it is singular.
    pub(crate) fn cone_of_corner(&self, c: Corner) -> Option<usize> {
        self.classes[self.class_of(c)].cone
    }

    pub(crate) fn cone_class(&self, cone: usize) -> &VertexClass {
        let c = self.cone_points[cone].star[0];
        self.class(self.class_of(c))
    }

    /// Half-open membership of `d` in the corner wedge `[e_out, e_in_rev)`.
    pub(crate) fn corner_contains(&self, c: Corner, d: IVec) -> bool {
        let out = self.e_out(c);
        let back = self.e_in_rev(c);
        ccw_cmp_from(out, d, back).is_lt()
    }

    /// Closed membership of `d` in the corner wedge.
    pub(crate) fn corner_contains_closed(&self, c: Corner, d: IVec) -> bool {
        let out = self.e_out(c);
        let back = self.e_in_rev(c);
        !ccw_cmp_from(out, d, back).is_gt()
    }

    /// Slot of `d` in the vertex class, given a corner whose closed wedge contains it.
    pub(crate) fn normalize_slot(&self, c: Corner, d: IVec) -> usize {
        let class = self.class(self.class_of(c));
        let slot = self.slot_of(c);
        if self.corner_contains(c, d) {
            slot
        } else {
            debug_assert!(self.corner_contains_closed(c, d));
            (slot + 1) % class.star.len()
        }
    }

    /// Finds the unique slot of a regular vertex class containing `d`.
    pub(crate) fn regular_slot(&self, class: usize, d: IVec) -> Option<usize> {
        let cl = &self.classes[class];
        (0..cl.star.len()).find(|&s| self.corner_contains(cl.star[s], d))
    }
}

fn e_out_of(ipoly: &[Vec<IVec>], c: Corner) -> IVec {
    let vs = &ipoly[c.polygon];
    vs[(c.vertex + 1) % vs.len()] - vs[c.vertex]
}

/// Corner following `c` counterclockwise around their common vertex.
fn next_ccw(partner: &[Vec<EdgeRef>], polygons: &[Polygon], c: Corner) -> Corner {
    let n = polygons[c.polygon].len();
    let incoming = EdgeRef::new(c.polygon, (c.vertex + n - 1) % n);
    let p = partner[incoming.polygon][incoming.edge];
    Corner::new(p.polygon, p.edge)
}

/// Summary used by `info` style reports.
pub fn describe(s: &TranslationSurface) -> BTreeMap<&'static str, String> {
    let mut m = BTreeMap::new();
    m.insert("genus", s.genus().to_string());
    m.insert("polygons", s.polygons().len().to_string());
    m.insert("gluing_pairs", s.gluing().pairs().len().to_string());
    m.insert(
        "cone_k",
        s.cone_points().iter().map(|c| c.k.to_string()).collect::<Vec<_>>().join(","),
    );
    m.insert("regular_vertices", s.regular_vertex_count().to_string());
    m.insert("area", crate::geom::format_rational(&s.area()));
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x0: i128, y0: i128) -> Vec<Point2> {
        vec![
            Vec2::from_ints(x0, y0),
            Vec2::from_ints(x0 + 1, y0),
            Vec2::from_ints(x0 + 1, y0 + 1),
            Vec2::from_ints(x0, y0 + 1),
        ]
    }

    #[test]
    fn flat_torus_has_no_singularities() {
        let g = vec![
            (EdgeRef::new(0, 0), EdgeRef::new(0, 2)),
            (EdgeRef::new(0, 1), EdgeRef::new(0, 3)),
        ];
        assert!(matches!(TranslationSurface::new(vec![square(0, 0)], g), Err(Error::NoSingularities)));
    }

    #[test]
    fn rejects_nonconvex_and_clockwise() {
        let mut cw = square(0, 0);
        cw.reverse();
        assert!(matches!(Polygon::new(cw, 0), Err(Error::NonConvexPolygon { .. })));
        let dart = vec![
            Vec2::from_ints(0, 0),
            Vec2::from_ints(2, 0),
            Vec2::from_ints(1, 1),
            Vec2::from_ints(2, 2),
            Vec2::from_ints(0, 2),
        ];
        assert!(matches!(Polygon::new(dart, 3), Err(Error::NonConvexPolygon { index: 3, .. })));
    }

    #[test]
    fn rejects_mismatched_edges() {
        let g = vec![
            (EdgeRef::new(0, 0), EdgeRef::new(0, 1)),
            (EdgeRef::new(0, 2), EdgeRef::new(0, 3)),
        ];
        let err = TranslationSurface::new(vec![square(0, 0)], g).unwrap_err();
        match err {
            Error::EdgeMismatch { a, b, .. } => {
                assert_eq!(a, EdgeRef::new(0, 0));
                assert_eq!(b, EdgeRef::new(0, 1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_unglued_and_disconnected() {
        let g = vec![(EdgeRef::new(0, 0), EdgeRef::new(0, 2))];
        assert!(matches!(
            TranslationSurface::new(vec![square(0, 0)], g),
            Err(Error::InvalidGluing(_))
        ));
        let g = vec![
            (EdgeRef::new(0, 0), EdgeRef::new(0, 2)),
            (EdgeRef::new(0, 1), EdgeRef::new(0, 3)),
            (EdgeRef::new(1, 0), EdgeRef::new(1, 2)),
            (EdgeRef::new(1, 1), EdgeRef::new(1, 3)),
        ];
        assert!(matches!(
            TranslationSurface::new(vec![square(0, 0), square(5, 5)], g),
            Err(Error::Disconnected)
        ));
    }

    #[test]
    fn collinear_vertex_is_allowed() {
        let hexagonish = vec![
            Vec2::from_ints(0, 0),
            Vec2::from_ints(1, 0),
            Vec2::from_ints(2, 0),
            Vec2::from_ints(2, 2),
            Vec2::from_ints(0, 2),
        ];
        let p = Polygon::new(hexagonish, 0).unwrap();
        assert_eq!(p.area(), Rational::from_integer(4));
        assert!(p.contains(&Vec2::from_ints(1, 0)));
        assert!(!p.contains(&Vec2::from_ints(3, 0)));
    }
}
