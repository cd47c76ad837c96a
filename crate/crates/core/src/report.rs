//! Number formatting and small SVG writers shared by the report emitters.

/// Decimal with 12 significant digits, trailing zeros trimmed.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (11 - mag).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

/// Linear blue-to-red colour for `t ∈ [0, 1]`.
fn heat(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (255.0 * t).round() as u8;
    let b = (255.0 * (1.0 - t)).round() as u8;
    let g = (120.0 * (1.0 - (2.0 * t - 1.0).abs())).round() as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Axis-aligned rectangle with a scalar to colour by.
pub struct HeatRect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub value: f64,
}

/// Heat map of rectangles in their own coordinates, y pointing up.
pub fn heatmap_svg(rects: &[HeatRect], title: &str) -> String {
    let px = 120.0;
    let (mut xmin, mut ymin, mut xmax, mut ymax) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    let (mut vmin, mut vmax) = (f64::MAX, f64::MIN);
    for r in rects {
        xmin = xmin.min(r.x0);
        ymin = ymin.min(r.y0);
        xmax = xmax.max(r.x1);
        ymax = ymax.max(r.y1);
        vmin = vmin.min(r.value);
        vmax = vmax.max(r.value);
    }
    if rects.is_empty() {
        (xmin, ymin, xmax, ymax, vmin, vmax) = (0.0, 0.0, 1.0, 1.0, 0.0, 1.0);
    }
    let span = if vmax > vmin { vmax - vmin } else { 1.0 };
    let w = (xmax - xmin) * px + 20.0;
    let h = (ymax - ymin) * px + 40.0;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\">\n<text x=\"10\" y=\"16\" font-size=\"12\">{title}</text>\n"
    );
    for r in rects {
        let x = 10.0 + (r.x0 - xmin) * px;
        let y = 30.0 + (ymax - r.y1) * px;
        out.push_str(&format!(
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\" stroke=\"#333\" stroke-width=\"0.5\"/>\n",
            (r.x1 - r.x0) * px,
            (r.y1 - r.y0) * px,
            heat((r.value - vmin) / span)
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Line chart of one or more series sharing an x axis.
pub fn line_chart_svg(xs: &[f64], series: &[(&str, Vec<f64>)], title: &str) -> String {
    let (w, h, pad) = (640.0, 400.0, 40.0);
    let xmin = xs.iter().cloned().fold(f64::MAX, f64::min);
    let xmax = xs.iter().cloned().fold(f64::MIN, f64::max);
    let all = series.iter().flat_map(|(_, ys)| ys.iter().cloned()).filter(|y| y.is_finite());
    let (ymin, ymax) = all.fold((f64::MAX, f64::MIN), |(a, b), y| (a.min(y), b.max(y)));
    let sx = |x: f64| pad + (x - xmin) / (xmax - xmin).max(1e-300) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - ymin) / (ymax - ymin).max(1e-300) * (h - 2.0 * pad);
    let colours = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n<text x=\"{pad}\" y=\"20\" font-size=\"12\">{title}</text>\n"
    );
    out.push_str(&format!(
        "<line x1=\"{pad}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n<line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{0}\" stroke=\"black\"/>\n",
        h - pad,
        w - pad
    ));
    for (i, (name, ys)) in series.iter().enumerate() {
        let pts: Vec<String> = xs
            .iter()
            .zip(ys)
            .filter(|(_, y)| y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        let c = colours[i % colours.len()];
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{c}\" points=\"{}\"/>\n<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{c}\">{name}</text>\n",
            pts.join(" "),
            w - pad - 120.0,
            pad + 14.0 * i as f64
        ));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(sig12(2f64.sqrt()), "1.41421356237");
        assert_eq!(sig12(1.0), "1");
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(123456.789), "123456.789");
        assert_eq!(sig12(-0.5), "-0.5");
        assert_eq!(sig12(3.0 * std::f64::consts::PI), "9.42477796077");
    }

    #[test]
    fn svg_is_well_formed() {
        let s = heatmap_svg(&[HeatRect { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0, value: 2.0 }], "t");
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        let l = line_chart_svg(&[0.0, 1.0], &[("a", vec![0.0, 1.0])], "t");
        assert!(l.contains("polyline"));
    }
}
