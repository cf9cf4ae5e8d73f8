//! Minimal SVG line charts over an integer x axis.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 40.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#7f7f7f"];

/// One polyline per named series; x is the index. Non-finite points are dropped.
pub fn line_svg(series: &[(&str, Vec<f64>)]) -> String {
    let finite = || series.iter().flat_map(|(_, ys)| ys.iter().copied()).filter(|y| y.is_finite());
    let lo = finite().fold(f64::INFINITY, f64::min);
    let hi = finite().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
    let span = (hi - lo).max(1e-12);
    let len = series.iter().map(|(_, ys)| ys.len()).max().unwrap_or(0);
    let dx = (WIDTH - 2.0 * MARGIN) / (len.max(2) - 1) as f64;
    let px = |i: usize| MARGIN + i as f64 * dx;
    let py = |y: f64| HEIGHT - MARGIN - (y - lo) / span * (HEIGHT - 2.0 * MARGIN);

    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    out.push_str(&format!(
        "<line x1=\"{MARGIN}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{MARGIN}\" y1=\"{MARGIN}\" x2=\"{MARGIN}\" y2=\"{b}\" stroke=\"black\"/>\n",
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    ));
    out.push_str(&format!(
        "<text x=\"4\" y=\"{:.2}\" font-size=\"10\">{lo:.4}</text>\n<text x=\"4\" y=\"{:.2}\" font-size=\"10\">{hi:.4}</text>\n",
        py(lo),
        py(hi)
    ));
    for (k, (name, ys)) in series.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        let points: Vec<String> = ys
            .iter()
            .enumerate()
            .filter(|(_, y)| y.is_finite())
            .map(|(i, &y)| format!("{:.2},{:.2}", px(i), py(y)))
            .collect();
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"2\" points=\"{}\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"{colour}\">{name}</text>\n",
            points.join(" "),
            WIDTH - MARGIN - 120.0,
            MARGIN + 14.0 * k as f64
        ));
    }
    out.push_str("</svg>\n");
    out
}
