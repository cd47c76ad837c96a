//! Geometry and dynamics of translation surfaces glued from rational polygons.
//!
//! The pipeline runs bottom-up:
//!
//! * [`surface`] validates a polygon gluing and extracts its cone points.
//! * [`unfold`] holds the exact developing-map machinery: the angle test for
//!   concatenating geodesic segments at a cone point, ray tracing, and
//!   enumeration of saddle connections by wedge unfolding.
//! * [`paths`] builds the concatenation graph and counts saddle connection
//!   paths, giving exact circle lengths and ball volumes.
//! * [`spectral`] solves for the volume entropy as the parameter where the
//!   truncated transfer matrix has Perron value one.
//! * [`circles`] samples circles and disks on a cell grid.
//! * [`geodesics`] enumerates primitive closed geodesics through cone points.

pub mod circles;
pub mod error;
pub mod geodesics;
pub mod geom;
pub mod paths;
pub mod report;
pub mod spectral;
pub mod surface;
pub mod unfold;

pub use error::{Error, Result};
pub use geom::{Point2, Rational, Vec2};
pub use paths::{ConcatGraph, SaddlePath};
pub use surface::{BuiltinSurface, TranslationSurface};
pub use unfold::{ConeDirection, SaddleConnection};
