//! The `.tsurf` text format.
//!
//! ```text
//! { "polygons": [ [ ["0","0"], ["1","0"], ["1","1"], ["0","1"] ], ... ],
//!   "gluings":  [ [[0,0],[0,2]], [[0,1],[0,3]], ... ] }
//! ```
//!
//! Coordinates are strings holding `"p/q"` or `"p"`; a gluing entry is an
//! unordered pair of `[polygon, edge]` references.

use serde::{Deserialize, Serialize};

use super::{EdgeRef, TranslationSurface};
use crate::error::{Error, Result};
use crate::geom::{format_rational, parse_rational, Vec2};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurfaceFile {
    polygons: Vec<Vec<[String; 2]>>,
    gluings: Vec<[[usize; 2]; 2]>,
}

pub fn load_surface(text: &str) -> Result<TranslationSurface> {
    let file: SurfaceFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("surface file: {e}")))?;
    let polygons = file
        .polygons
        .iter()
        .map(|poly| {
            poly.iter()
                .map(|[x, y]| Ok(Vec2::new(parse_rational(x)?, parse_rational(y)?)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let gluings = file
        .gluings
        .iter()
        .map(|[a, b]| (EdgeRef::new(a[0], a[1]), EdgeRef::new(b[0], b[1])))
        .collect();
    TranslationSurface::new(polygons, gluings)
}

pub fn emit_surface(s: &TranslationSurface) -> String {
    let file = SurfaceFile {
        polygons: s
            .polygons()
            .iter()
            .map(|p| {
                p.vertices()
                    .iter()
                    .map(|v| [format_rational(&v.x), format_rational(&v.y)])
                    .collect()
            })
            .collect(),
        gluings: s
            .gluing()
            .pairs()
            .iter()
            .map(|(a, b)| [[a.polygon, a.edge], [b.polygon, b.edge]])
            .collect(),
    };
    let mut out = String::from("{\n  \"polygons\": [\n");
    for (i, poly) in file.polygons.iter().enumerate() {
        let verts: Vec<String> =
            poly.iter().map(|[x, y]| format!("[\"{x}\",\"{y}\"]")).collect();
        out.push_str(&format!("    [{}]", verts.join(", ")));
        out.push_str(if i + 1 < file.polygons.len() { ",\n" } else { "\n" });
    }
    out.push_str("  ],\n  \"gluings\": [\n");
    for (i, [a, b]) in file.gluings.iter().enumerate() {
        out.push_str(&format!("    [[{},{}],[{},{}]]", a[0], a[1], b[0], b[1]));
        out.push_str(if i + 1 < file.gluings.len() { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    out
}
