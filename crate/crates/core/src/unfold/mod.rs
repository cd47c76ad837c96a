//! Developing-map machinery.
//!
//! Directions at a cone point are stored as a slot of its corner star plus a
//! planar vector. Because gluings are translations, every corner wedge of a
//! star lives in the same planar frame; walking the star counterclockwise the
//! direction argument wraps past the positive x-axis exactly `k + 1` times.
//! Recording the wrap count ("sheet") turns angular questions on the cone into
//! exact sign tests.

mod enumerate;
pub(crate) mod ftrace;
mod trace;

use std::cmp::Ordering;

use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::geom::{arg_cmp, ccw_below_pi, rational_to_f64, IVec, Rational, Vec2};
use crate::surface::{EdgeRef, TranslationSurface};

pub use enumerate::enumerate_saddle_connections;
pub use trace::{trace_from_cone, trace_ray, TraceOutcome, TracePoint};
pub(crate) use trace::trace_pieces;

/// A direction leaving a cone point.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConeDirection {
    pub cone_id: usize,
    /// Index into the cone's star.
    pub slot: usize,
    pub dir: Vec2,
    idir: IVec,
}

impl ConeDirection {
    /// Validates that `dir` lies in the closed wedge of the given slot and
    /// normalizes it to the half-open convention `[e_out, e_in_rev)`.
    pub fn new(s: &TranslationSurface, cone_id: usize, slot: usize, dir: Vec2) -> Result<Self> {
        let cone = s.cone(cone_id)?;
        if slot >= cone.star.len() || dir.is_zero() {
            return Err(Error::InvalidDirection(format!("slot {slot} direction {dir}")));
        }
        let idir = dir.primitive_direction();
        let corner = cone.star[slot];
        if !s.corner_contains_closed(corner, idir) {
            return Err(Error::InvalidDirection(format!("{dir} at slot {slot}")));
        }
        let slot = s.normalize_slot(corner, idir);
        Ok(ConeDirection { cone_id, slot, dir, idir })
    }

    pub(crate) fn from_lattice(cone_id: usize, slot: usize, v: IVec, scale: i128) -> Self {
        let dir = Vec2::new(Rational::new(v.x, scale), Rational::new(v.y, scale));
        let g = num_integer::gcd(v.x, v.y).max(1);
        ConeDirection { cone_id, slot, dir, idir: IVec::new(v.x / g, v.y / g) }
    }

    pub(crate) fn idir(&self) -> IVec {
        self.idir
    }

    /// Index of the sheet (wrap count modulo `k + 1`) this direction is on.
    fn sheet(&self, s: &TranslationSurface) -> usize {
        let class = s.cone_class(self.cone_id);
        let corner = class.star[self.slot];
        let wrapped = arg_cmp(self.idir, s.e_out(corner)) == Ordering::Less;
        (class.sheet[self.slot] + wrapped as usize) % class.multiple
    }

    /// Counterclockwise angle from the clockwise edge of slot 0, in `[0, 2π(k+1))`.
    pub fn angle_position(&self, s: &TranslationSurface) -> f64 {
        let class = s.cone_class(self.cone_id);
        let mut a = 0.0;
        for c in &class.star[..self.slot] {
            a += s.corner_angle(*c);
        }
        let out = s.e_out(class.star[self.slot]);
        a + crate::geom::ccw_angle_f64(out.to_f64(), self.idir.to_f64())
    }
}

/// Is the counterclockwise angle from `d1` to `d2`, measured on the cone, at
/// least π? Equality counts as satisfied.
pub fn angle_ccw_at_least_pi(
    s: &TranslationSurface,
    d1: &ConeDirection,
    d2: &ConeDirection,
) -> Result<bool> {
    if d1.cone_id != d2.cone_id {
        return Err(Error::MismatchedCone(d1.cone_id, d2.cone_id));
    }
    Ok(ccw_at_least_pi_unchecked(s, d1, d2))
}

pub(crate) fn ccw_at_least_pi_unchecked(
    s: &TranslationSurface,
    d1: &ConeDirection,
    d2: &ConeDirection,
) -> bool {
    let m = s.cone_class(d1.cone_id).multiple;
    let wrapped = arg_cmp(d2.idir, d1.idir) == Ordering::Less;
    let whole_turns = (d2.sheet(s) + 2 * m - d1.sheet(s) - wrapped as usize) % m;
    whole_turns >= 1 || !ccw_below_pi(d1.idir, d2.idir)
}

/// Both side angles between an arriving and a departing segment are ≥ π.
pub fn concatenation_allowed(
    s: &TranslationSurface,
    back: &ConeDirection,
    out: &ConeDirection,
) -> bool {
    back.cone_id == out.cone_id
        && ccw_at_least_pi_unchecked(s, back, out)
        && ccw_at_least_pi_unchecked(s, out, back)
}

/// An oriented saddle connection.
#[derive(Clone, Debug, PartialEq)]
pub struct SaddleConnection {
    pub id: usize,
    pub start: usize,
    pub end: usize,
    pub holonomy: Vec2,
    pub length_sq: Rational,
    /// Direction of departure at `start`.
    pub out_dir: ConeDirection,
    /// Direction at `end` pointing back along the segment.
    pub back_dir: ConeDirection,
    /// Polygon edges crossed, in order.
    pub crossing_sequence: Vec<EdgeRef>,
}

impl SaddleConnection {
    pub fn length(&self) -> f64 {
        rational_to_f64(&self.length_sq).sqrt()
    }

    /// Same segment traversed backwards (id is left unchanged).
    pub fn reversed(&self, s: &TranslationSurface) -> SaddleConnection {
        SaddleConnection {
            id: self.id,
            start: self.end,
            end: self.start,
            holonomy: -&self.holonomy,
            length_sq: self.length_sq,
            out_dir: self.back_dir.clone(),
            back_dir: self.out_dir.clone(),
            crossing_sequence: self.crossing_sequence.iter().rev().map(|e| s.partner(*e)).collect(),
        }
    }

    /// Canonical ordering key: length², holonomy, start cone, out slot.
    pub(crate) fn order_key(&self) -> (Rational, Rational, Rational, usize, usize) {
        (self.length_sq, self.holonomy.x, self.holonomy.y, self.start, self.out_dir.slot)
    }
}

/// Writes the saddle connection CSV
/// (`id,start,end,hx,hy,length,out_slot,back_slot`).
pub fn saddles_csv(saddles: &[SaddleConnection]) -> String {
    let mut out = String::from("id,start,end,hx,hy,length,out_slot,back_slot\n");
    for sc in saddles {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            sc.id,
            sc.start,
            sc.end,
            crate::geom::format_rational(&sc.holonomy.x),
            crate::geom::format_rational(&sc.holonomy.y),
            crate::report::sig12(sc.length()),
            sc.out_dir.slot,
            sc.back_dir.slot
        ));
    }
    out
}

/// Largest length that a `max_length_sq` budget covers.
pub fn budget_length(max_length_sq: &Rational) -> f64 {
    max_length_sq.to_f64().unwrap_or(f64::INFINITY).sqrt()
}
