//! Minimal SVG line charts (no dependencies); optional output only — all
//! experiment verdicts ride on the CSV reports.

/// One labelled curve.
pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Render curves as an SVG polyline chart with a log10 x-axis.
pub fn render_log_x(title: &str, curves: &[Curve]) -> String {
    let (w, h, ml, mb, mt, mr) = (640.0, 420.0, 60.0, 40.0, 30.0, 20.0);
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for c in curves {
        for &(x, y) in &c.points {
            if x > 0.0 && y.is_finite() {
                pts.push((x.log10(), y));
            }
        }
    }
    if pts.is_empty() {
        return format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\"></svg>");
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let sy = |y: f64| h - mb - (y - y0) / (y1 - y0) * (h - mb - mt);
    let palette = ["#1b6ca8", "#c0392b", "#1e8449", "#8e44ad", "#b7950b", "#34495e"];
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!("<text x=\"{}\" y=\"18\" text-anchor=\"middle\">{}</text>\n", w / 2.0, title));
    svg.push_str(&format!(
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>\n",
        w - ml - mr,
        h - mb - mt
    ));
    for (ci, c) in curves.iter().enumerate() {
        let color = palette[ci % palette.len()];
        let path: Vec<String> = c
            .points
            .iter()
            .filter(|(x, y)| *x > 0.0 && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x.log10()), sy(y)))
            .collect();
        if !path.is_empty() {
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                path.join(" ")
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>\n",
            ml + 8.0,
            mt + 16.0 + 16.0 * ci as f64,
            c.label
        ));
    }
    // axis extremes
    svg.push_str(&format!(
        "<text x=\"{ml}\" y=\"{}\">1e{:.0}</text><text x=\"{}\" y=\"{}\" text-anchor=\"end\">1e{:.0}</text>\n",
        h - mb + 16.0,
        x0,
        w - mr,
        h - mb + 16.0,
        x1
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text><text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text>\n",
        ml - 6.0,
        h - mb,
        y0,
        ml - 6.0,
        mt + 10.0,
        y1
    ));
    svg.push_str("</svg>\n");
    svg
}
