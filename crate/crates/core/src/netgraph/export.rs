use serde_json::{json, Value};

use super::layout::LayoutState;
use super::modularity::Partition;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// `{"nodes": [{"id", "x", "y", "community"}], ...}`; community is null without a partition.
pub fn layout_json(layout: &LayoutState, partition: Option<&Partition>) -> Value {
    let nodes: Vec<Value> = layout
        .positions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            json!({
                "id": i,
                "x": p[0],
                "y": p[1],
                "community": partition.map(|q| q.community(i)),
            })
        })
        .collect();
    json!({
        "nodes": nodes,
        "k": layout.k,
        "area": layout.area,
        "c": layout.c,
        "iterations": layout.iterations,
    })
}

/// Scatter plot of the layout, coloured by community, with optional node labels.
pub fn layout_svg(layout: &LayoutState, partition: Option<&Partition>, labels: Option<&[String]>) -> String {
    const SIZE: f64 = 640.0;
    const MARGIN: f64 = 32.0;
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &layout.positions {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    for (i, p) in layout.positions.iter().enumerate() {
        let x = MARGIN + (p[0] - lo[0]) * scale;
        let y = SIZE - MARGIN - (p[1] - lo[1]) * scale;
        let colour = partition.map_or(PALETTE[0], |q| PALETTE[q.community(i) % PALETTE.len()]);
        out.push_str(&format!(
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"5\" fill=\"{colour}\"><title>{}</title></circle>\n",
            labels.and_then(|l| l.get(i)).cloned().unwrap_or_else(|| i.to_string())
        ));
    }
    out.push_str("</svg>\n");
    out
}
