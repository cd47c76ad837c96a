//! Exact straight-line tracing across glued edges.
//!
//! The ray is kept in the developed frame of the polygon it started in:
//! `X(s) = origin + s·dir` with a rational parameter `s`, while each visited
//! polygon copy is an integer translate of its lattice vertices. Exit points,
//! vertex hits and the budget test are all exact.

use num_traits::{Signed, ToPrimitive, Zero};

use super::ConeDirection;
use crate::error::{Error, Result};
use crate::geom::{rational_sqrt, IVec, Point2, Rational, Vec2};
use crate::surface::{Corner, EdgeRef, TranslationSurface};

/// A point of the surface given in the frame of one polygon.
#[derive(Clone, Debug, PartialEq)]
pub struct TracePoint {
    pub polygon: usize,
    pub position: Point2,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TraceOutcome {
    /// The budget ran out at `end`. `exact` is false when the endpoint
    /// parameter is irrational and `end.position` was rounded (the polygon
    /// is still determined exactly).
    Reached { end: TracePoint, exact: bool, crossings: Vec<EdgeRef> },
    /// The segment ran into a cone point before (or exactly at) the end of
    /// the budget.
    SingularHit { cone: usize, back_slot: usize, consumed_len_sq: Rational, crossings: Vec<EdgeRef> },
}

/// One straight piece of a traced segment inside a single polygon.
#[derive(Clone, Debug)]
pub(crate) struct TracePiece {
    pub polygon: usize,
    /// Endpoints in the polygon's own (unscaled) frame.
    pub from: [Rational; 2],
    pub to: [Rational; 2],
}

fn rat(v: i128) -> Rational {
    Rational::from_integer(v)
}

#[derive(Clone, Debug)]
pub(crate) struct RVec {
    x: Rational,
    y: Rational,
}

impl RVec {
    fn from_ivec(v: IVec) -> Self {
        RVec { x: rat(v.x), y: rat(v.y) }
    }
    fn at(&self, d: IVec, s: &Rational) -> RVec {
        RVec { x: self.x + s * rat(d.x), y: self.y + s * rat(d.y) }
    }
    fn eq_ivec(&self, v: IVec) -> bool {
        self.x == rat(v.x) && self.y == rat(v.y)
    }
}

/// Cross product `E × (W - O)` with integer `E`, `W` and rational `O`.
fn cross_to(e: IVec, w: IVec, o: &RVec) -> Rational {
    rat(e.x) * (rat(w.y) - o.y) - rat(e.y) * (rat(w.x) - o.x)
}

pub(crate) enum EngineEnd {
    Reached { polygon: usize, offset: IVec, s_end: Rational, exact: bool },
    Hit { cone: usize, back_slot: usize, s_hit: Rational },
}

/// Where the ray currently is.
pub(crate) struct RayState {
    pub polygon: usize,
    pub offset: IVec,
    pub s: Rational,
}

/// Ray engine. `budget` bounds `s²·|dir|²` (lattice units).
pub(crate) struct Ray<'a> {
    pub surface: &'a TranslationSurface,
    pub origin: RVec,
    pub dir: IVec,
    pub budget: Rational,
    pub crossings: Vec<EdgeRef>,
    pub pieces: Option<Vec<TracePiece>>,
}

impl<'a> Ray<'a> {
    fn len_sq(&self, s: &Rational) -> Rational {
        s * s * rat(self.dir.norm_sq())
    }

    fn record(&mut self, st: &RayState, s0: &Rational, s1: &Rational) {
        if let Some(pieces) = self.pieces.as_mut() {
            let scale = rat(self.surface.lattice_scale());
            let local = |s: &Rational| {
                let p = self.origin.at(self.dir, s);
                [(p.x - rat(st.offset.x)) / scale, (p.y - rat(st.offset.y)) / scale]
            };
            if s1 > s0 {
                pieces.push(TracePiece { polygon: st.polygon, from: local(s0), to: local(s1) });
            }
        }
    }

    /// Continues through a regular vertex at lattice point `x`.
    fn through_regular(&self, corner: Corner, x: IVec) -> Option<(usize, IVec)> {
        let class = self.surface.class_of(corner);
        let slot = self.surface.regular_slot(class, self.dir)?;
        let c = self.surface.class(class).star[slot];
        Some((c.polygon, x - self.surface.ivertex(c)))
    }

    /// Runs until the budget ends or a cone point is hit.
    pub fn run(&mut self, mut st: RayState) -> EngineEnd {
        let s = self.surface;
        loop {
            let verts: Vec<IVec> = s.ipoly(st.polygon).iter().map(|v| *v + st.offset).collect();
            let n = verts.len();
            let mut best: Option<Rational> = None;
            let mut best_edges: Vec<usize> = Vec::with_capacity(2);
            for i in 0..n {
                let e = verts[(i + 1) % n] - verts[i];
                let c = e.cross(self.dir);
                if c >= 0 {
                    continue;
                }
                let si = cross_to(e, verts[i], &self.origin) / rat(c);
                match &best {
                    Some(b) if si > *b => {}
                    Some(b) if si == *b => best_edges.push(i),
                    _ => {
                        best = Some(si);
                        best_edges.clear();
                        best_edges.push(i);
                    }
                }
            }
            let mut s_exit = best.expect("ray inside a bounded polygon must exit");
            let exit = self.origin.at(self.dir, &s_exit);
            let mut vertex = None;
            for &i in &best_edges {
                for j in [i, (i + 1) % n] {
                    if exit.eq_ivec(verts[j]) {
                        vertex = Some(j);
                    }
                }
            }
            // A ray running along the boundary meets vertices before it exits.
            for (j, v) in verts.iter().enumerate() {
                if !cross_to(self.dir, *v, &self.origin).is_zero() {
                    continue;
                }
                let sv = ((rat(v.x) - self.origin.x) * rat(self.dir.x) + (rat(v.y) - self.origin.y) * rat(self.dir.y))
                    / rat(self.dir.norm_sq());
                if sv > st.s && sv < s_exit {
                    s_exit = sv;
                    vertex = Some(j);
                }
            }
            let exit_len = self.len_sq(&s_exit);

            if let Some(j) = vertex {
                let corner = Corner::new(st.polygon, j);
                if let Some(cone) = s.cone_of_corner(corner) {
                    if exit_len <= self.budget {
                        self.record(&st, &st.s.clone(), &s_exit);
                        let back_slot = s.normalize_slot(corner, -self.dir);
                        return EngineEnd::Hit { cone, back_slot, s_hit: s_exit };
                    }
                }
            }
            if exit_len >= self.budget {
                let q = self.budget / rat(self.dir.norm_sq());
                let (s_end, exact) = match rational_sqrt(&q) {
                    Some(r) => (r, true),
                    None => (approx_sqrt(&q), false),
                };
                self.record(&st, &st.s.clone(), &s_end);
                return EngineEnd::Reached { polygon: st.polygon, offset: st.offset, s_end, exact };
            }
            self.record(&st, &st.s.clone(), &s_exit);
            match vertex {
                Some(j) => {
                    let x = verts[j];
                    let (poly, offset) = self
                        .through_regular(Corner::new(st.polygon, j), x)
                        .expect("regular vertex has a slot for every direction");
                    st = RayState { polygon: poly, offset, s: s_exit };
                }
                None => {
                    // Collinear edges tie; take the one holding the exit point.
                    let on_edge = |i: usize| {
                        let a = verts[i];
                        let e = verts[(i + 1) % n] - a;
                        let t = (exit.x - rat(a.x)) * rat(e.x) + (exit.y - rat(a.y)) * rat(e.y);
                        !t.is_negative() && t <= rat(e.norm_sq())
                    };
                    let i = *best_edges.iter().find(|&&i| on_edge(i)).unwrap_or(&best_edges[0]);
                    let e = EdgeRef::new(st.polygon, i);
                    let p = s.partner(e);
                    let offset = verts[(i + 1) % n] - s.ivertex(Corner::new(p.polygon, p.edge));
                    self.crossings.push(e);
                    st = RayState { polygon: p.polygon, offset, s: s_exit };
                }
            }
        }
    }
}

fn approx_sqrt(q: &Rational) -> Rational {
    let f = q.to_f64().unwrap_or(0.0).sqrt();
    let den: i128 = 1 << 48;
    Rational::new((f * den as f64).round() as i128, den)
}

fn outcome(s: &TranslationSurface, mut ray: Ray<'_>, st: RayState) -> TraceOutcome {
    let scale = rat(s.lattice_scale());
    match ray.run(st) {
        EngineEnd::Reached { polygon, offset, s_end, exact } => {
            let p = ray.origin.at(ray.dir, &s_end);
            let position = Vec2::new((p.x - rat(offset.x)) / scale, (p.y - rat(offset.y)) / scale);
            TraceOutcome::Reached { end: TracePoint { polygon, position }, exact, crossings: ray.crossings }
        }
        EngineEnd::Hit { cone, back_slot, s_hit } => TraceOutcome::SingularHit {
            cone,
            back_slot,
            consumed_len_sq: ray.len_sq(&s_hit) / (scale * scale),
            crossings: ray.crossings,
        },
    }
}

/// Traces a straight segment of squared length `len_sq_budget` from a point.
///
/// The start may lie in the interior or on the boundary of its polygon, or
/// on a regular vertex, but not on a cone point (use [`trace_from_cone`]).
pub fn trace_ray(
    s: &TranslationSurface,
    start: &TracePoint,
    dir: &Vec2,
    len_sq_budget: &Rational,
) -> Result<TraceOutcome> {
    if dir.is_zero() {
        return Err(Error::InvalidDirection("zero direction".into()));
    }
    if len_sq_budget.is_negative() {
        return Err(Error::InvalidParams("negative length budget".into()));
    }
    let poly = s
        .polygons()
        .get(start.polygon)
        .ok_or_else(|| Error::InvalidParams(format!("no polygon {}", start.polygon)))?;
    if !poly.contains(&start.position) {
        return Err(Error::InvalidParams(format!(
            "start {} is outside polygon {}",
            start.position, start.polygon
        )));
    }
    for (j, v) in poly.vertices().iter().enumerate() {
        if *v == start.position && s.cone_of_corner(Corner::new(start.polygon, j)).is_some() {
            return Err(Error::InvalidParams("start lies on a cone point".into()));
        }
    }
    let scale = s.lattice_scale();
    let d = dir.primitive_direction();
    // Parameter s scales the primitive lattice direction; convert the budget.
    let budget = len_sq_budget * rat(scale * scale);
    if budget.is_zero() {
        return Ok(TraceOutcome::Reached { end: start.clone(), exact: true, crossings: vec![] });
    }
    let origin = RVec { x: start.position.x * rat(scale), y: start.position.y * rat(scale) };
    let ray = Ray { surface: s, origin, dir: d, budget, crossings: vec![], pieces: None };
    let st = RayState { polygon: start.polygon, offset: IVec::default(), s: Rational::zero() };
    Ok(outcome(s, ray, st))
}

/// Traces from a cone point along a direction in one of its corner slots.
pub fn trace_from_cone(
    s: &TranslationSurface,
    d: &ConeDirection,
    len_sq_budget: &Rational,
) -> Result<TraceOutcome> {
    if len_sq_budget.is_negative() {
        return Err(Error::InvalidParams("negative length budget".into()));
    }
    let (ray, st) = cone_ray(s, d, len_sq_budget, false)?;
    if ray.budget.is_zero() {
        let c = s.cone(d.cone_id)?.star[d.slot];
        let position = s.polygons()[c.polygon].vertices()[c.vertex].clone();
        return Ok(TraceOutcome::Reached {
            end: TracePoint { polygon: c.polygon, position },
            exact: true,
            crossings: vec![],
        });
    }
    Ok(outcome(s, ray, st))
}

fn cone_ray<'a>(
    s: &'a TranslationSurface,
    d: &ConeDirection,
    len_sq_budget: &Rational,
    pieces: bool,
) -> Result<(Ray<'a>, RayState)> {
    let c = s.cone(d.cone_id)?.star[d.slot];
    let scale = s.lattice_scale();
    let apex = s.ivertex(c);
    let ray = Ray {
        surface: s,
        origin: RVec::from_ivec(apex),
        dir: d.idir(),
        budget: len_sq_budget * rat(scale * scale),
        crossings: vec![],
        pieces: pieces.then(Vec::new),
    };
    Ok((ray, RayState { polygon: c.polygon, offset: IVec::default(), s: Rational::zero() }))
}

/// Straight pieces of a segment from a cone point, split at polygon edges.
pub(crate) fn trace_pieces(
    s: &TranslationSurface,
    d: &ConeDirection,
    len_sq: &Rational,
) -> Result<Vec<TracePiece>> {
    let (mut ray, st) = cone_ray(s, d, len_sq, true)?;
    ray.run(st);
    Ok(ray.pieces.unwrap_or_default())
}

/// Continues the ray from lattice origin `0` along `dir`, currently at the
/// regular vertex `corner` (translated by `offset`) with parameter 1.
/// Returns the cone hit, its back slot, the full holonomy and the crossings.
pub(crate) fn continue_through_regular(
    s: &TranslationSurface,
    corner: Corner,
    offset: IVec,
    dir: IVec,
    budget: &Rational,
) -> Option<(usize, usize, IVec, Vec<EdgeRef>)> {
    let mut ray = Ray {
        surface: s,
        origin: RVec::from_ivec(IVec::default()),
        dir,
        budget: *budget,
        crossings: vec![],
        pieces: None,
    };
    let x = s.ivertex(corner) + offset;
    let (poly, off) = ray.through_regular(corner, x)?;
    match ray.run(RayState { polygon: poly, offset: off, s: Rational::from_integer(1) }) {
        EngineEnd::Hit { cone, back_slot, s_hit } => {
            // The hit is a lattice point, so `s_hit · dir` is integral.
            let hx = s_hit * rat(dir.x);
            let hy = s_hit * rat(dir.y);
            Some((cone, back_slot, IVec::new(hx.to_integer(), hy.to_integer()), ray.crossings))
        }
        EngineEnd::Reached { .. } => None,
    }
}
