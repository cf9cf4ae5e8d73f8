//! `toy train|trace|skip|ablate|ig`.

use std::ops::Range;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::analysis::load_heads;
use crate::args::{InputSet, Split};
use crate::artifact::OutDir;
use crate::plot::line_svg;
use crate::{run_config, Ctx};
use phid_core::headscore::{score_heads, write_scores_csv, HeadScoreTable};
use phid_core::traces::{encode_trace, Trace};
use phid_core::{Error, Result};
use phid_toy::checkpoint::{encode_checkpoint, load_checkpoint};
use phid_toy::experiments::{
    ablate_and_eval, cosine_contributions, energy_profile, skip_disturbance, AblationOrder, AblationPoint,
    SkipReport,
};
use phid_toy::ig::integrated_gradients;
use phid_toy::{train, Example, Intervention, ToyConfig, ToyModel};

/// The examples of a split in task order; `All` is train followed by holdout.
pub fn split_examples(model: &ToyModel, split: Split) -> Vec<Example> {
    let cfg = &model.config;
    let data = cfg.task.dataset(cfg.train.train_fraction, cfg.seed);
    match split {
        Split::Train => data.train,
        Split::Holdout => data.holdout,
        Split::All => data.train.into_iter().chain(data.holdout).collect(),
    }
}

fn select(model: &ToyModel, inputs: &InputSet) -> Result<Vec<Vec<usize>>> {
    let ex = split_examples(model, inputs.split);
    if ex.is_empty() || inputs.examples == 0 {
        return Err(Error::Validation(format!("no {:?} examples selected", inputs.split)));
    }
    Ok(ex.into_iter().take(inputs.examples).map(|e| e.tokens).collect())
}

/// Layer ranges of the early, middle and final thirds: `[⌊iL/3⌋, ⌊(i+1)L/3⌋)`.
pub fn layer_thirds(layers: usize) -> [Range<usize>; 3] {
    let cut = |i: usize| i * layers / 3;
    [cut(0)..cut(1), cut(1)..cut(2), cut(2)..cut(3)]
}

/// Mean of the defined per-skip means over skipped layers in `range`.
pub fn mean_skip_disturbance(reports: &[SkipReport], range: Range<usize>) -> Option<f64> {
    let vals: Vec<f64> = reports
        .iter()
        .filter(|r| range.contains(&r.skipped_layer))
        .filter_map(SkipReport::mean)
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

fn model_config(ctx: &Ctx, path: Option<&Path>, steps: Option<usize>) -> Result<ToyConfig> {
    let mut config = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| {
                Error::Parse(phid_core::error::ParseError::Header(format!("{}: {e}", p.display())))
            })?
        }
        None => ToyConfig::modular_addition(),
    };
    if let Some(seed) = ctx.args.seed {
        config.seed = seed;
    }
    if let Some(s) = steps {
        config.train.steps = s;
    }
    config.validate()?;
    Ok(config)
}

fn seed_of(ctx: &Ctx, model: &ToyModel) -> u64 {
    ctx.args.seed.unwrap_or(model.config.seed)
}

fn accuracy_series(curve: &[phid_toy::train::EpochRecord], holdout: bool) -> Vec<f64> {
    curve
        .iter()
        .map(|r| if holdout { r.holdout_accuracy.unwrap_or(f64::NAN) } else { r.train_accuracy })
        .collect()
}

pub fn train_cmd(ctx: &Ctx, config_path: Option<&Path>, steps: Option<usize>) -> Result<()> {
    let config = model_config(ctx, config_path, steps)?;
    let inputs: Vec<&Path> = config_path.into_iter().collect();
    let out = OutDir::create(&run_config(ctx, "toy train", &inputs, config.seed, None, json!({"model": config})))?;
    let start = std::time::Instant::now();
    let (model, data, report) = train(config)?;
    out.log(&format!(
        "trained {} steps in {:.1}s, train accuracy {:.4}",
        report.steps,
        start.elapsed().as_secs_f64(),
        report.train.accuracy
    ))?;
    out.write_container("model.phid", &encode_checkpoint(&model))?;
    out.write_records("train_curve.csv", &report.curve)?;
    out.write_svg(
        "train_curve.svg",
        &line_svg(&[
            ("train accuracy", accuracy_series(&report.curve, false)),
            ("holdout accuracy", accuracy_series(&report.curve, true)),
        ]),
    )?;
    out.write_json(
        "train_report.json",
        json!({
            "steps": report.steps,
            "epochs": report.curve.len(),
            "stopped_early": report.stopped_early,
            "train": report.train,
            "holdout": report.holdout,
            "train_examples": data.train.len(),
            "holdout_examples": data.holdout.len(),
            "parameters": model.params.count(),
        }),
    )?;
    Ok(())
}

#[derive(Serialize)]
struct CosineRow {
    layer: usize,
    attention: Option<f64>,
    mlp: Option<f64>,
    layer_total: Option<f64>,
    skipped_attention: usize,
    skipped_mlp: usize,
    skipped_layer_total: usize,
}

pub fn trace_cmd(ctx: &Ctx, checkpoint: &Path, inputs: &InputSet) -> Result<()> {
    let model = load_checkpoint(checkpoint)?;
    let tokens = select(&model, inputs)?;
    let rc = run_config(ctx, "toy trace", &[checkpoint], seed_of(ctx, &model), None, json!({"inputs": inputs}));
    let out = OutDir::create(&rc)?;
    let cap = model.forward(&tokens, &Intervention::None)?;
    let cosines = cosine_contributions(&cap.residual);
    let energies = energy_profile(&cap.residual);
    let rows: Vec<CosineRow> = cosines
        .iter()
        .map(|c| CosineRow {
            layer: c.layer,
            attention: c.attention,
            mlp: c.mlp,
            layer_total: c.layer_total,
            skipped_attention: c.skipped[0],
            skipped_mlp: c.skipped[1],
            skipped_layer_total: c.skipped[2],
        })
        .collect();
    out.write_records("cosine.csv", &rows)?;
    out.write_records("energy.csv", &energies)?;
    let nan = |v: Option<f64>| v.unwrap_or(f64::NAN);
    out.write_svg(
        "cosine.svg",
        &line_svg(&[
            ("attention", cosines.iter().map(|c| nan(c.attention)).collect()),
            ("mlp", cosines.iter().map(|c| nan(c.mlp)).collect()),
            ("layer", cosines.iter().map(|c| nan(c.layer_total)).collect()),
        ]),
    )?;
    out.write_json(
        "trace_summary.json",
        json!({
            "sequences": tokens.len(),
            "steps": cap.heads.steps(),
            "heads": cap.heads.heads(),
            "layers": model.config.layers,
            "additivity_error": cap.residual.additivity_error(),
            "energy": energies,
        }),
    )?;
    out.write_container("heads.phid", &encode_trace(&Trace::HeadNorms(cap.heads)))?;
    out.write_container("residual.phid", &encode_trace(&Trace::Residual(cap.residual)))?;
    Ok(())
}

#[derive(Serialize)]
struct SkipRow {
    skipped_layer: usize,
    layer: usize,
    disturbance: Option<f64>,
    undefined_steps: usize,
}

pub fn skip_cmd(ctx: &Ctx, checkpoint: &Path, inputs: &InputSet, layers: Option<&[usize]>) -> Result<()> {
    let model = load_checkpoint(checkpoint)?;
    let tokens = select(&model, inputs)?;
    let l_count = model.config.layers;
    let layers: Vec<usize> = layers.map_or_else(|| (0..l_count).collect(), <[usize]>::to_vec);
    let options = json!({"inputs": inputs, "layers": layers});
    let out = OutDir::create(&run_config(ctx, "toy skip", &[checkpoint], seed_of(ctx, &model), None, options))?;
    let reports = layers
        .iter()
        .map(|&s| skip_disturbance(&model, &tokens, s))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<SkipRow> = reports
        .iter()
        .flat_map(|r| {
            (r.skipped_layer + 1..l_count).map(move |l| SkipRow {
                skipped_layer: r.skipped_layer,
                layer: l,
                disturbance: r.disturbance[l],
                undefined_steps: r.undefined_steps[l],
            })
        })
        .collect();
    out.write_records("skip.csv", &rows)?;
    let thirds = layer_thirds(l_count);
    let per_skip: Vec<_> = reports
        .iter()
        .map(|r| json!({"skipped_layer": r.skipped_layer, "mean_disturbance": r.mean()}))
        .collect();
    out.write_json(
        "skip_summary.json",
        json!({
            "per_skip": per_skip,
            "thirds": thirds.iter().map(|r| [r.start, r.end]).collect::<Vec<_>>(),
            "early_mean": mean_skip_disturbance(&reports, thirds[0].clone()),
            "middle_mean": mean_skip_disturbance(&reports, thirds[1].clone()),
            "final_mean": mean_skip_disturbance(&reports, thirds[2].clone()),
        }),
    )?;
    Ok(())
}

#[derive(Serialize)]
struct AblationRow {
    order: String,
    k: usize,
    loss: f64,
    accuracy: f64,
    loss_ratio: f64,
    heads: String,
}

/// Mean loss and accuracy over the random orders at each `k`.
pub fn random_mean(curves: &[(AblationOrder, Vec<AblationPoint>)]) -> Vec<(usize, f64, f64)> {
    let random: Vec<&Vec<AblationPoint>> = curves
        .iter()
        .filter(|(o, _)| matches!(o, AblationOrder::Random { .. }))
        .map(|(_, p)| p)
        .collect();
    let Some(first) = random.first() else {
        return Vec::new();
    };
    let n = random.len() as f64;
    (0..first.len())
        .map(|i| {
            let loss = random.iter().map(|p| p[i].loss).sum::<f64>() / n;
            let acc = random.iter().map(|p| p[i].accuracy).sum::<f64>() / n;
            (first[i].k, loss, acc)
        })
        .collect()
}

/// Scores from a head trace file, or from a capture on the training split.
pub fn ablation_scores(
    ctx: &Ctx,
    model: &ToyModel,
    trace: Option<&Path>,
    trace_examples: usize,
) -> Result<HeadScoreTable> {
    let opts = ctx.pair_options(model.config.total_heads());
    let heads = match trace {
        Some(p) => load_heads(p)?,
        None => {
            let inputs = InputSet {
                split: Split::Train,
                examples: trace_examples,
            };
            model.forward(&select(model, &inputs)?, &Intervention::None)?.heads
        }
    };
    score_heads(&heads, &opts)
}

#[allow(clippy::too_many_arguments)]
pub fn ablate_cmd(
    ctx: &Ctx,
    checkpoint: &Path,
    trace: Option<&Path>,
    orders: &[AblationOrder],
    ks: Option<&[usize]>,
    trace_examples: usize,
    eval_split: Split,
) -> Result<()> {
    let model = load_checkpoint(checkpoint)?;
    let n = model.config.total_heads();
    let ks: Vec<usize> = ks.map_or_else(|| (0..=n).collect(), <[usize]>::to_vec);
    let opts = ctx.pair_options(n);
    let inputs: Vec<&Path> = std::iter::once(checkpoint).chain(trace).collect();
    let options = json!({
        "orders": orders.iter().map(AblationOrder::label).collect::<Vec<_>>(),
        "ks": ks,
        "trace_examples": if trace.is_some() { None } else { Some(trace_examples) },
        "eval_split": eval_split,
    });
    let rc = run_config(ctx, "toy ablate", &inputs, seed_of(ctx, &model), Some(opts.strategy), options);
    let out = OutDir::create(&rc)?;
    let scores = ablation_scores(ctx, &model, trace, trace_examples)?;
    out.write_csv("scores.csv", |buf| write_scores_csv(buf, &scores, ctx.args.units))?;
    let eval = split_examples(&model, eval_split);
    if eval.is_empty() {
        return Err(Error::Validation(format!("the {eval_split:?} split is empty")));
    }
    let curves = orders
        .iter()
        .map(|&o| Ok((o, ablate_and_eval(&model, &scores, o, &ks, &eval)?)))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<AblationRow> = curves
        .iter()
        .flat_map(|(o, pts)| {
            pts.iter().map(move |p| AblationRow {
                order: o.label(),
                k: p.k,
                loss: p.loss,
                accuracy: p.accuracy,
                loss_ratio: p.loss_ratio,
                heads: p.heads.iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
            })
        })
        .collect();
    out.write_records("ablation.csv", &rows)?;
    let labels: Vec<String> = curves.iter().map(|(o, _)| o.label()).collect();
    let series: Vec<(&str, Vec<f64>)> = curves
        .iter()
        .zip(&labels)
        .map(|((_, pts), l)| (l.as_str(), pts.iter().map(|p| p.loss).collect()))
        .collect();
    out.write_svg("ablation.svg", &line_svg(&series))?;
    let random: Vec<_> = random_mean(&curves)
        .into_iter()
        .map(|(k, loss, accuracy)| json!({"k": k, "loss": loss, "accuracy": accuracy}))
        .collect();
    out.write_json(
        "ablation_summary.json",
        json!({
            "eval_examples": eval.len(),
            "curves": curves.iter().map(|(o, p)| json!({"order": o.label(), "points": p})).collect::<Vec<_>>(),
            "random_mean": random,
        }),
    )?;
    Ok(())
}

#[derive(Serialize)]
struct IgRow {
    position: usize,
    dimension: usize,
    attribution: f64,
}

pub fn ig_cmd(ctx: &Ctx, checkpoint: &Path, split: Split, index: usize, steps: usize) -> Result<()> {
    let model = load_checkpoint(checkpoint)?;
    let examples = split_examples(&model, split);
    let ex = examples.get(index).ok_or_else(|| {
        Error::Validation(format!("example {index} outside the {} {split:?} examples", examples.len()))
    })?;
    let options = json!({"split": split, "index": index, "steps": steps});
    let out = OutDir::create(&run_config(ctx, "toy ig", &[checkpoint], seed_of(ctx, &model), None, options))?;
    let report = integrated_gradients(&model, &ex.tokens, ex.target, steps)?;
    let d = report.d_model;
    let rows: Vec<IgRow> = report
        .attributions
        .iter()
        .enumerate()
        .map(|(i, &a)| IgRow {
            position: i / d,
            dimension: i % d,
            attribution: a,
        })
        .collect();
    out.write_records("ig.csv", &rows)?;
    out.write_json(
        "ig.json",
        json!({
            "tokens": report.tokens,
            "target": report.target,
            "m_steps": report.m_steps,
            "f_input": report.f_input,
            "f_baseline": report.f_baseline,
            "attribution_sum": report.attribution_sum,
            "completeness_residual": report.completeness_residual,
            "per_position": report.per_position(),
            "per_dimension": report.per_dimension(),
        }),
    )?;
    Ok(())
}
