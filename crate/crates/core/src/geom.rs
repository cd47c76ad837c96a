//! Exact planar arithmetic.
//!
//! Public coordinates are rationals. Internally every surface is rescaled by
//! the common denominator of its vertices so that developed polygons live on
//! an integer lattice; all orientation and ordering decisions are then sign
//! tests on `i128` products.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::Error;

/// Exact rational number in reduced form with a positive denominator.
pub type Rational = Ratio<i128>;

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"-1.25"`.
pub fn parse_rational(text: &str) -> Result<Rational, Error> {
    let t = text.trim();
    if t.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    if let Some((num, den)) = t.split_once('/') {
        let n: i128 = num
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in {t:?}")))?;
        let d: i128 = den
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in {t:?}")))?;
        if d == 0 {
            return Err(Error::Parse(format!("zero denominator in {t:?}")));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let negative = int.trim_start().starts_with('-');
        let digits = frac.len() as u32;
        if digits > 30 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(Error::Parse(format!("bad decimal {t:?}")));
        }
        let int_part: i128 = if int.is_empty() || int == "-" || int == "+" {
            0
        } else {
            int.parse()
                .map_err(|_| Error::Parse(format!("bad decimal {t:?}")))?
        };
        let frac_part: i128 = if frac.is_empty() { 0 } else { frac.parse().unwrap() };
        let scale = 10i128.pow(digits);
        let mag = int_part.abs() * scale + frac_part;
        let num = if negative { -mag } else { mag };
        return Ok(Rational::new(num, scale));
    }
    t.parse::<i128>()
        .map(Rational::from_integer)
        .map_err(|_| Error::Parse(format!("bad rational {t:?}")))
}

/// Formats a rational as `"p"` or `"p/q"`.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational square root, if one exists.
pub fn rational_sqrt(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let n = isqrt_exact(*r.numer())?;
    let d = isqrt_exact(*r.denom())?;
    Some(Rational::new(n, d))
}

fn isqrt_exact(v: i128) -> Option<i128> {
    if v < 0 {
        return None;
    }
    let mut s = (v as f64).sqrt() as i128;
    while s * s > v {
        s -= 1;
    }
    while (s + 1) * (s + 1) <= v {
        s += 1;
    }
    (s * s == v).then_some(s)
}

/// Rational plane vector. Also used for points.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Vec2 {
    pub x: Rational,
    pub y: Rational,
}

pub type Point2 = Vec2;

impl Vec2 {
    pub fn new(x: Rational, y: Rational) -> Self {
        Vec2 { x, y }
    }

    pub fn from_ints(x: i128, y: i128) -> Self {
        Vec2::new(Rational::from_integer(x), Rational::from_integer(y))
    }

    pub fn zero() -> Self {
        Vec2::from_ints(0, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn cross(&self, other: &Vec2) -> Rational {
        self.x * other.y - self.y * other.x
    }

    pub fn dot(&self, other: &Vec2) -> Rational {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(&self) -> Rational {
        self.dot(self)
    }

    pub fn scale(&self, c: &Rational) -> Vec2 {
        Vec2::new(self.x * c, self.y * c)
    }

    pub fn to_f64(&self) -> [f64; 2] {
        [rational_to_f64(&self.x), rational_to_f64(&self.y)]
    }

    /// Smallest positive integer vector pointing in the same direction.
    pub fn primitive_direction(&self) -> IVec {
        let l = self.x.denom().lcm(self.y.denom());
        let ix = *(self.x * Rational::from_integer(l)).numer();
        let iy = *(self.y * Rational::from_integer(l)).numer();
        let g = ix.gcd(&iy).max(1);
        IVec::new(ix / g, iy / g)
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", format_rational(&self.x), format_rational(&self.y))
    }
}

impl Add for &Vec2 {
    type Output = Vec2;
    fn add(self, o: &Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for &Vec2 {
    type Output = Vec2;
    fn sub(self, o: &Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for &Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Integer lattice vector in the rescaled frame of a surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct IVec {
    pub x: i128,
    pub y: i128,
}

impl IVec {
    pub const fn new(x: i128, y: i128) -> Self {
        IVec { x, y }
    }

    #[inline]
    pub fn cross(self, o: IVec) -> i128 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn dot(self, o: IVec) -> i128 {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn norm_sq(self) -> i128 {
        self.dot(self)
    }

    pub fn is_zero(self) -> bool {
        self.x == 0 && self.y == 0
    }

    pub fn to_f64(self) -> [f64; 2] {
        [self.x as f64, self.y as f64]
    }

    /// Same ray from the origin (positive multiple).
    #[inline]
    pub fn same_direction(self, o: IVec) -> bool {
        self.cross(o) == 0 && self.dot(o) > 0
    }
}

impl Add for IVec {
    type Output = IVec;
    #[inline]
    fn add(self, o: IVec) -> IVec {
        IVec::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for IVec {
    type Output = IVec;
    #[inline]
    fn sub(self, o: IVec) -> IVec {
        IVec::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for IVec {
    type Output = IVec;
    #[inline]
    fn neg(self) -> IVec {
        IVec::new(-self.x, -self.y)
    }
}

impl Mul<i128> for IVec {
    type Output = IVec;
    #[inline]
    fn mul(self, c: i128) -> IVec {
        IVec::new(self.x * c, self.y * c)
    }
}

/// 0 for arguments in `[0, π)`, 1 for `[π, 2π)`.
#[inline]
fn half(v: IVec) -> u8 {
    if v.y > 0 || (v.y == 0 && v.x > 0) {
        0
    } else {
        1
    }
}

/// Compares `arg(u)` and `arg(v)` with arguments taken in `[0, 2π)`.
pub fn arg_cmp(u: IVec, v: IVec) -> Ordering {
    half(u)
        .cmp(&half(v))
        .then_with(|| 0.cmp(&u.cross(v)))
}

/// True when the counterclockwise angle from `u` to `v` lies in `[0, π)`.
#[inline]
pub fn ccw_below_pi(u: IVec, v: IVec) -> bool {
    let c = u.cross(v);
    c > 0 || (c == 0 && u.dot(v) > 0)
}

/// Compares the counterclockwise angles from `base` to `u` and to `v`,
/// both taken in `[0, 2π)`.
pub fn ccw_cmp_from(base: IVec, u: IVec, v: IVec) -> Ordering {
    let hu = !ccw_below_pi(base, u) as u8;
    let hv = !ccw_below_pi(base, v) as u8;
    hu.cmp(&hv).then_with(|| {
        if u.same_direction(v) {
            Ordering::Equal
        } else {
            0.cmp(&u.cross(v))
        }
    })
}

/// Exact counterclockwise angle from `u` to `v` in `[0, 2π)` as `f64`.
pub fn ccw_angle_f64(u: [f64; 2], v: [f64; 2]) -> f64 {
    let c = u[0] * v[1] - u[1] * v[0];
    let d = u[0] * v[0] + u[1] * v[1];
    let a = c.atan2(d);
    if a < 0.0 {
        a + std::f64::consts::TAU
    } else {
        a
    }
}

/// Converts a rational to an exact multiple of `1/scale`.
pub(crate) fn to_scaled_int(r: &Rational, scale: i128) -> i128 {
    let v = r * Rational::from_integer(scale);
    debug_assert!(v.is_integer());
    v.to_integer()
}
