//! `decompose`, `scores`, `graph` and `compare`.

use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::artifact::{csv_run_config, OutDir};
use crate::plot::line_svg;
use crate::{run_config, Ctx};
use phid_core::headscore::{
    compute_pair_atoms, layer_means, read_atoms_csv, scores_from_pairs, separation_statistic,
    write_atoms_csv, write_scores_csv, HeadScoreTable, LayerProfile, PairAtomTable, PairOptions,
};
use phid_core::infodyn::Unit;
use phid_core::netgraph::{
    build_graph, detect_communities, force_layout, global_efficiency, layout_json, layout_svg,
    modularity, GraphKind, HeadGraph, LayoutParams, LayoutState, Partition,
};
use phid_core::traces::{decode_trace, read_trace, TraceTensor, MAGIC};
use phid_core::{Error, Result};

pub fn load_heads(path: &Path) -> Result<TraceTensor> {
    read_trace(path)?.into_head_norms()
}

/// Atoms from a trace, or from an atoms CSV in the unit its header records.
pub fn load_pair_table(ctx: &Ctx, path: &Path) -> Result<(PairAtomTable, Option<PairOptions>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(MAGIC) {
        let trace = decode_trace(&bytes)?.into_head_norms()?;
        let opts = ctx.pair_options(trace.heads());
        return Ok((compute_pair_atoms(&trace, &opts)?, Some(opts)));
    }
    let text = String::from_utf8_lossy(&bytes);
    let unit = csv_run_config(&text)
        .and_then(|c| serde_json::from_value::<Unit>(c["units"].clone()).ok())
        .unwrap_or(ctx.args.units);
    Ok((read_atoms_csv(bytes.as_slice(), unit)?, None))
}

/// Communities, efficiency, modularity and layout of one head graph.
#[derive(Debug, Clone)]
pub struct GraphAnalysis {
    pub graph: HeadGraph,
    /// In nats⁻¹-scaled weights, i.e. the unit of the atoms.
    pub efficiency: f64,
    pub partition: Partition,
    /// `None` for a graph without edges.
    pub modularity: Option<f64>,
    pub layout: LayoutState,
}

pub fn analyse_graph(table: &PairAtomTable, kind: GraphKind, seed: u64, iterations: usize) -> Result<GraphAnalysis> {
    let graph = build_graph(table, kind);
    let efficiency = global_efficiency(&graph)?;
    let (partition, modularity) = if graph.is_empty() {
        (Partition::singletons(graph.n()), None)
    } else {
        let p = detect_communities(&graph, seed)?;
        let q = modularity(&graph, &p)?;
        (p, Some(q))
    };
    let params = LayoutParams {
        iterations,
        seed,
        ..LayoutParams::default()
    };
    let layout = force_layout(&graph, &params)?;
    Ok(GraphAnalysis {
        graph,
        efficiency,
        partition,
        modularity,
        layout,
    })
}

/// `L<layer>H<index>` for every head.
pub fn head_labels(heads: usize, heads_per_layer: usize) -> Vec<String> {
    (0..heads)
        .map(|h| format!("L{}H{}", h / heads_per_layer, h % heads_per_layer))
        .collect()
}

pub fn decompose(ctx: &Ctx, trace_path: &Path) -> Result<()> {
    let trace = load_heads(trace_path)?;
    let opts = ctx.pair_options(trace.heads());
    let out = OutDir::create(&run_config(ctx, "decompose", &[trace_path], ctx.seed(), Some(opts.strategy), json!({})))?;
    let table = compute_pair_atoms(&trace, &opts)?;
    out.write_csv("atoms.csv", |buf| write_atoms_csv(buf, &table, ctx.args.units))?;
    Ok(())
}

#[derive(Serialize)]
struct ProfileReport {
    unit: Unit,
    layers: usize,
    layer_mean_diff: Vec<f64>,
    profile: Option<LayerProfile>,
    profile_error: Option<String>,
}

fn profile_report(scores: &HeadScoreTable, unit: Unit) -> ProfileReport {
    let means: Vec<f64> = layer_means(scores).into_iter().map(|v| unit.from_nats(v)).collect();
    let (profile, profile_error) = match LayerProfile::from_means(means.clone()) {
        Ok(p) => (Some(p), None),
        Err(e) => (None, Some(e.to_string())),
    };
    ProfileReport {
        unit,
        layers: means.len(),
        layer_mean_diff: means,
        profile,
        profile_error,
    }
}

pub fn scores(ctx: &Ctx, trace_path: &Path) -> Result<()> {
    let trace = load_heads(trace_path)?;
    let opts = ctx.pair_options(trace.heads());
    let out = OutDir::create(&run_config(ctx, "scores", &[trace_path], ctx.seed(), Some(opts.strategy), json!({})))?;
    let table = compute_pair_atoms(&trace, &opts)?;
    let scores = scores_from_pairs(&table)?;
    out.write_csv("scores.csv", |buf| write_scores_csv(buf, &scores, ctx.args.units))?;
    let report = profile_report(&scores, ctx.args.units);
    let mut series = vec![("mean abs − mem", report.layer_mean_diff.clone())];
    if let Some(p) = &report.profile {
        series.push(("quadratic fit", p.fitted.clone()));
    }
    out.write_svg("layer_profile.svg", &line_svg(&series))?;
    out.write_json("layer_profile.json", report)?;
    Ok(())
}

#[derive(Serialize)]
struct GraphReport {
    kind: GraphKind,
    nodes: usize,
    edges: usize,
    unit: Unit,
    total_weight: f64,
    global_efficiency: f64,
    modularity: Option<f64>,
    communities: usize,
    partition: Vec<usize>,
    layout: serde_json::Value,
}

pub fn graph(ctx: &Ctx, input: &Path, kind: GraphKind, iterations: usize) -> Result<()> {
    let (table, opts) = load_pair_table(ctx, input)?;
    let options = json!({"kind": kind, "iterations": iterations});
    let out = OutDir::create(&run_config(ctx, "graph", &[input], ctx.seed(), opts.map(|o| o.strategy), options))?;
    let a = analyse_graph(&table, kind, ctx.seed(), iterations)?;
    let n = a.graph.n();
    let edges = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| a.graph.weight(i, j) > 0.0)
        .count();
    let unit = ctx.args.units;
    let labels = head_labels(n, table.heads_per_layer());
    out.write_svg(
        &format!("layout_{}.svg", kind.as_str()),
        &layout_svg(&a.layout, Some(&a.partition), Some(&labels)),
    )?;
    out.write_json(
        &format!("graph_{}.json", kind.as_str()),
        GraphReport {
            kind,
            nodes: n,
            edges,
            unit,
            total_weight: unit.from_nats(a.graph.total_weight() / 2.0),
            global_efficiency: unit.from_nats(a.efficiency),
            modularity: a.modularity,
            communities: a.partition.count(),
            partition: a.partition.ids().to_vec(),
            layout: layout_json(&a.layout, Some(&a.partition)),
        },
    )?;
    Ok(())
}

pub fn compare(ctx: &Ctx, easy: &Path, hard: &Path, q: f64, iterations: usize) -> Result<()> {
    let (easy_trace, hard_trace) = (load_heads(easy)?, load_heads(hard)?);
    let opts = ctx.pair_options(easy_trace.heads());
    let options = json!({"q": q, "iterations": iterations, "layout_graph": GraphKind::Abstract});
    let out = OutDir::create(&run_config(ctx, "compare", &[easy, hard], ctx.seed(), Some(opts.strategy), options))?;
    let condition = |trace: &TraceTensor| -> Result<(HeadScoreTable, GraphAnalysis)> {
        let table = compute_pair_atoms(trace, &opts)?;
        let scores = scores_from_pairs(&table)?;
        Ok((scores, analyse_graph(&table, GraphKind::Abstract, ctx.seed(), iterations)?))
    };
    let (es, eg) = condition(&easy_trace)?;
    let (hs, hg) = condition(&hard_trace)?;
    let cmp = separation_statistic(&es, &eg.layout.positions, &hs, &hg.layout.positions, q)?;
    out.write_json("separation.json", cmp)?;
    Ok(())
}
