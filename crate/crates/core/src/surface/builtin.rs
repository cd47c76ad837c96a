//! Built-in example surfaces.

use num_traits::{One, Signed, Zero};

use super::{EdgeRef, TranslationSurface};
use crate::error::{Error, Result};
use crate::geom::{Point2, Rational, Vec2};

#[derive(Clone, Debug, PartialEq)]
pub enum BuiltinSurface {
    /// Unit square with a `width × 1` rectangle glued on the right and a
    /// `1 × height` rectangle glued on top. One cone point of angle 6π.
    LShape { width: Rational, height: Rational },
    /// Two unit tori, each slit along the segment from the origin to `slit`,
    /// glued crosswise along the slits. Two cone points of angle 4π.
    SlitTori { slit: Vec2 },
}

fn r(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

fn p(x: Rational, y: Rational) -> Point2 {
    Vec2::new(x, y)
}

fn e(polygon: usize, edge: usize) -> EdgeRef {
    EdgeRef::new(polygon, edge)
}

impl BuiltinSurface {
    pub fn lshape_default() -> Self {
        BuiltinSurface::LShape { width: Rational::one(), height: Rational::one() }
    }

    pub fn slit_tori_default() -> Self {
        BuiltinSurface::SlitTori { slit: Vec2::new(r(1, 2), Rational::zero()) }
    }

    /// Resolves a name (`lshape`, `slit_tori`) and optional parameters.
    pub fn from_name(name: &str, params: &[Rational]) -> Result<Self> {
        match (name, params) {
            ("lshape", []) => Ok(Self::lshape_default()),
            ("lshape", [w, h]) => Ok(BuiltinSurface::LShape { width: *w, height: *h }),
            ("slit_tori", []) => Ok(Self::slit_tori_default()),
            ("slit_tori", [x, y]) => Ok(BuiltinSurface::SlitTori { slit: Vec2::new(*x, *y) }),
            ("lshape" | "slit_tori", _) => Err(Error::InvalidParams(format!(
                "{name} takes either no parameters or exactly two"
            ))),
            _ => Err(Error::InvalidParams(format!("unknown builtin surface {name:?}"))),
        }
    }

    pub fn build(&self) -> Result<TranslationSurface> {
        match self {
            BuiltinSurface::LShape { width, height } => lshape(*width, *height),
            BuiltinSurface::SlitTori { slit } => slit_tori(slit),
        }
    }
}

fn lshape(w: Rational, h: Rational) -> Result<TranslationSurface> {
    if !w.is_positive() || !h.is_positive() {
        return Err(Error::InvalidParams("L-shape side lengths must be positive".into()));
    }
    let (z, o) = (Rational::zero(), Rational::one());
    let polys = vec![
        vec![p(z, z), p(o, z), p(o, o), p(z, o)],
        vec![p(o, z), p(o + w, z), p(o + w, o), p(o, o)],
        vec![p(z, o), p(o, o), p(o, o + h), p(z, o + h)],
    ];
    let gluings = vec![
        (e(0, 1), e(1, 3)),
        (e(1, 1), e(0, 3)),
        (e(2, 1), e(2, 3)),
        (e(0, 2), e(2, 0)),
        (e(2, 2), e(0, 0)),
        (e(1, 0), e(1, 2)),
    ];
    TranslationSurface::new(polys, gluings)
}

/// One slit torus as polygons, plus its internal gluings and the two slit
/// sides `(lower, upper)`: `lower` runs from the slit end back to the origin,
/// `upper` from the origin to the slit end.
fn slit_torus(a: Rational, b: Rational, base: usize) -> (Vec<Vec<Point2>>, Vec<(EdgeRef, EdgeRef)>, EdgeRef, EdgeRef) {
    let (z, o) = (Rational::zero(), Rational::one());
    if b.is_zero() {
        // Hexagon with the slit on the bottom edge and its twin on the top.
        let hex = vec![p(z, z), p(a, z), p(o, z), p(o, o), p(a, o), p(z, o)];
        let g = vec![(e(base, 1), e(base, 3)), (e(base, 2), e(base, 5))];
        return (vec![hex], g, e(base, 4), e(base, 0));
    }
    let (lo, up) = (base, base + 1);
    if b < a {
        let c = b / a;
        let lower = vec![p(z, z), p(o, z), p(o, c), p(a, b)];
        let upper = vec![p(z, z), p(a, b), p(o, c), p(o, o), p(z, o), p(z, c)];
        let g = vec![
            (e(lo, 0), e(up, 3)),
            (e(lo, 1), e(up, 5)),
            (e(up, 2), e(up, 4)),
            (e(lo, 2), e(up, 1)),
        ];
        (vec![lower, upper], g, e(lo, 3), e(up, 0))
    } else if b == a {
        let lower = vec![p(z, z), p(o, z), p(o, o), p(a, a)];
        let upper = vec![p(z, z), p(a, a), p(o, o), p(z, o)];
        let g = vec![(e(lo, 0), e(up, 2)), (e(lo, 1), e(up, 3)), (e(lo, 2), e(up, 1))];
        (vec![lower, upper], g, e(lo, 3), e(up, 0))
    } else {
        let c = a / b;
        let lower = vec![p(z, z), p(c, z), p(o, z), p(o, o), p(c, o), p(a, b)];
        let upper = vec![p(z, z), p(a, b), p(c, o), p(z, o)];
        let g = vec![
            (e(lo, 0), e(up, 2)),
            (e(lo, 1), e(lo, 3)),
            (e(lo, 2), e(up, 3)),
            (e(lo, 4), e(up, 1)),
        ];
        (vec![lower, upper], g, e(lo, 5), e(up, 0))
    }
}

fn slit_tori(slit: &Vec2) -> Result<TranslationSurface> {
    let (a, b) = (slit.x, slit.y);
    let inside = a.is_positive() && a < Rational::one() && !b.is_negative() && b < Rational::one();
    if !inside {
        return Err(Error::InvalidParams(format!(
            "slit vector {slit} must satisfy 0 < x < 1 and 0 <= y < 1"
        )));
    }
    let (mut polys, mut gluings, lower1, upper1) = slit_torus(a, b, 0);
    let (polys2, gluings2, lower2, upper2) = slit_torus(a, b, polys.len());
    polys.extend(polys2);
    gluings.extend(gluings2);
    gluings.push((lower1, upper2));
    gluings.push((lower2, upper1));
    TranslationSurface::new(polys, gluings)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lshape_counts() {
        let s = BuiltinSurface::lshape_default().build().unwrap();
        assert_eq!(s.polygons().len(), 3);
        assert_eq!(s.gluing().pairs().len(), 6);
        assert_eq!(s.cone_points().len(), 1);
        assert_eq!(s.cone_points()[0].k, 2);
        assert_eq!(s.cone_points()[0].star.len(), 12);
        assert_eq!(s.genus(), 2);
        let total_k: usize = s.cone_points().iter().map(|c| c.k).sum();
        assert_eq!(total_k, 2 * s.genus() - 2);
    }

    #[test]
    fn slit_tori_counts() {
        let s = BuiltinSurface::slit_tori_default().build().unwrap();
        let ks: Vec<usize> = s.cone_points().iter().map(|c| c.k).collect();
        assert_eq!(ks, vec![1, 1]);
        assert_eq!(s.genus(), 2);
        assert_eq!(s.regular_vertex_count(), 0);
    }

    #[test]
    fn sloped_slits_introduce_regular_points() {
        for (x, y) in [(r(1, 2), r(1, 3)), (r(1, 2), r(1, 2)), (r(1, 3), r(1, 2)), (r(5, 6), r(1, 6)), (r(1, 6), r(5, 6))] {
            let s = BuiltinSurface::SlitTori { slit: Vec2::new(x, y) }.build().unwrap();
            let ks: Vec<usize> = s.cone_points().iter().map(|c| c.k).collect();
            assert_eq!(ks, vec![1, 1], "slit ({x},{y})");
            assert_eq!(s.genus(), 2);
            assert_eq!(s.area(), Rational::from_integer(2));
        }
    }

    #[test]
    fn invalid_params() {
        let bad = BuiltinSurface::LShape { width: Rational::zero(), height: Rational::one() };
        assert!(matches!(bad.build(), Err(Error::InvalidParams(_))));
        let bad = BuiltinSurface::SlitTori { slit: Vec2::from_ints(1, 0) };
        assert!(matches!(bad.build(), Err(Error::InvalidParams(_))));
        assert!(BuiltinSurface::from_name("octagon", &[]).is_err());
        assert!(BuiltinSurface::from_name("lshape", &[Rational::one()]).is_err());
    }

    #[test]
    fn scaling_preserves_topology() {
        let s = BuiltinSurface::slit_tori_default().build().unwrap();
        let half = s.scaled(&r(1, 2)).unwrap();
        assert_eq!(half.genus(), s.genus());
        assert_eq!(half.cone_points().len(), s.cone_points().len());
        let same = s.scaled(&Rational::one()).unwrap();
        assert_eq!(same.polygons(), s.polygons());
        assert!(s.scaled(&Rational::zero()).is_err());
    }
}
