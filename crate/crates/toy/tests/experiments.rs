use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use phid_core::headscore::HeadScoreTable;
use phid_core::traces::ResidualTrace;
use phid_toy::experiments::{
    ablate_and_eval, cosine_contributions, energy_profile, skip_disturbance, AblationOrder,
};
use phid_toy::ig::integrated_gradients;
use phid_toy::{train, Intervention, TaskSpec, ToyConfig, ToyModel, TrainConfig};

fn config(task: TaskSpec, layers: usize) -> ToyConfig {
    ToyConfig {
        layers,
        heads: 2,
        d_model: 16,
        d_mlp: 32,
        seed: 4,
        task,
        train: TrainConfig {
            steps: 300,
            batch_size: 32,
            warmup: 20,
            train_fraction: 1.0,
            ..TrainConfig::default()
        },
    }
}

/// One layer per write rule; `h_{l+1} = h_l + a_l + m_l` with `m = 0`.
fn trace_from_writes(h0: &[Vec<f64>], writes: &[fn(&[f64]) -> Vec<f64>]) -> ResidualTrace {
    let (steps, layers, d) = (h0.len(), writes.len(), h0[0].len());
    let (mut h, mut a, mut m) = (Vec::new(), Vec::new(), Vec::new());
    for x in h0 {
        let mut cur = x.clone();
        h.extend_from_slice(&cur);
        for w in writes {
            let al = w(&cur);
            cur.iter_mut().zip(&al).for_each(|(c, v)| *c += v);
            a.extend(al);
            m.extend(vec![0.0; d]);
            h.extend_from_slice(&cur);
        }
    }
    ResidualTrace::new(steps, layers, d, h, a, m, "constructed", "t", vec![0]).unwrap()
}

fn gaussian_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect()).collect()
}

#[test]
fn cosine_of_enhancing_erasing_and_orthogonal_writes() {
    let h0 = gaussian_rows(5, 6, 1);
    let rt = trace_from_writes(
        &h0,
        &[
            |h| h.to_vec(),
            |h| h.iter().map(|x| -0.5 * x).collect(),
            // Rotate pairs of coordinates by 90°.
            |h| h.chunks(2).flat_map(|c| [-c[1], c[0]]).collect(),
        ],
    );
    let c = cosine_contributions(&rt);
    assert!((c[0].attention.unwrap() - 1.0).abs() < 1e-12);
    assert!((c[1].attention.unwrap() + 1.0).abs() < 1e-12);
    assert!(c[2].attention.unwrap().abs() < 1e-12);
    assert!(c[0].mlp.is_none() && c[0].skipped[1] == 5);
    assert!((c[1].layer_total.unwrap() + 1.0).abs() < 1e-12);
}

#[test]
fn random_isotropic_writes_are_nearly_orthogonal() {
    let d = 256;
    let bound = 3.0 / (d as f64).sqrt();
    let h0 = gaussian_rows(400, d, 2);
    let writes = gaussian_rows(400, d, 3);
    let (mut h, mut a) = (Vec::new(), Vec::new());
    for (x, w) in h0.iter().zip(&writes) {
        h.extend_from_slice(x);
        h.extend(x.iter().zip(w).map(|(p, q)| p + q));
        a.extend_from_slice(w);
    }
    let rt = ResidualTrace::new(400, 1, d, h, a, vec![0.0; 400 * d], "iso", "t", vec![0]).unwrap();
    let mean = cosine_contributions(&rt)[0].attention.unwrap();
    assert!(mean.abs() < bound / 10.0, "mean {mean}");
    let within = h0
        .iter()
        .zip(&writes)
        .filter(|(x, w)| phid_toy::experiments::cosine(w, x).unwrap().abs() <= bound)
        .count();
    assert!(within >= 396, "{within}/400 within ±3/√d");
}

#[test]
fn energy_profile_cases() {
    let h0 = gaussian_rows(4, 6, 5);
    let rt = trace_from_writes(
        &h0,
        &[
            |h| vec![0.0; h.len()],
            |h| h.to_vec(),
            |h| h.chunks(2).flat_map(|c| [-c[1] - c[0], c[0] - c[1]]).collect(),
        ],
    );
    let e = energy_profile(&rt);
    assert_eq!(e.iter().map(|x| x.layer).collect::<Vec<_>>(), vec![1, 2, 3]);
    assert!(e[0].energy.unwrap().abs() < 1e-12);
    assert!(e[1].energy.unwrap().abs() < 1e-12);
    assert!((e[2].energy.unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn skipping_an_inert_layer_disturbs_nothing() {
    let cfg = config(TaskSpec::ModAdd { p: 7 }, 4);
    let mut model = ToyModel::new(cfg.clone()).unwrap();
    let inert = &mut model.params.layers[1];
    inert.wo.fill(0.0);
    inert.w2.fill(0.0);
    inert.b2.fill(0.0);
    let tokens: Vec<Vec<usize>> = cfg.task.examples(0).into_iter().take(10).map(|e| e.tokens).collect();
    let r = skip_disturbance(&model, &tokens, 1).unwrap();
    assert_eq!(r.disturbance[..2], [None, None]);
    for l in 2..4 {
        assert_eq!(r.disturbance[l], Some(0.0));
    }
    let live = skip_disturbance(&model, &tokens, 0).unwrap();
    assert!(live.disturbance[1].is_none() || live.disturbance[1] == Some(0.0));
    assert!(live.disturbance[2].unwrap() > 0.0);
    assert!(skip_disturbance(&model, &tokens, 3).unwrap().mean().is_none());
    assert!(skip_disturbance(&model, &tokens, 4).is_err());
}

fn scores_for(model: &ToyModel) -> HeadScoreTable {
    let n = model.config.total_heads();
    let rows: Vec<(f64, f64, usize)> = (0..n).map(|i| (i as f64 * 0.1, 0.05 * (n - i) as f64, n - 1)).collect();
    HeadScoreTable::from_scores(model.config.heads, &rows).unwrap()
}

#[test]
fn ablation_endpoints() {
    let p = 7;
    let cfg = config(TaskSpec::ModAdd { p }, 2);
    let (model, data, _) = train(cfg).unwrap();
    let eval = data.train;
    assert_eq!(eval.len(), p * p);
    let scores = scores_for(&model);
    let n = model.config.total_heads();
    let base = model.evaluate(&eval, &Intervention::None).unwrap();
    for order in [AblationOrder::AbsFirst, AblationOrder::MemFirst, AblationOrder::Random { seed: 1 }] {
        let pts = ablate_and_eval(&model, &scores, order, &[0, n], &eval).unwrap();
        assert_eq!(pts[0].loss, base.loss);
        assert_eq!(pts[0].accuracy, base.accuracy);
        assert_eq!(pts[0].loss_ratio, 1.0);
        // Without attention the last position only sees the "=" token, so the
        // prediction is constant and hits exactly one class in p.
        assert!((pts[1].accuracy - 1.0 / p as f64).abs() < 1e-12, "{:?}", pts[1]);
        assert_eq!(pts[1].heads.len(), n);
    }
    let abs = AblationOrder::AbsFirst.heads(&scores);
    let mem = AblationOrder::MemFirst.heads(&scores);
    assert_eq!(abs[0], n - 1);
    assert_eq!(mem[0], 0);
    assert!(ablate_and_eval(&model, &scores, AblationOrder::AbsFirst, &[n + 1], &eval).is_err());
}

#[test]
fn integrated_gradients_properties() {
    let cfg = config(TaskSpec::ModAdd { p: 7 }, 2);
    let (model, data, _) = train(cfg).unwrap();
    let ex = &data.train[3];

    let r = integrated_gradients(&model, &ex.tokens, ex.target, 256).unwrap();
    assert!(r.completeness_residual <= 0.02, "{}", r.completeness_residual);
    assert_eq!(r.attributions.len(), 3 * 16);

    // Halving: the right Riemann sum converges at rate 1/m.
    let residual = |m| integrated_gradients(&model, &ex.tokens, ex.target, m).unwrap().completeness_residual;
    let rs: Vec<f64> = [16, 32, 64, 128].into_iter().map(residual).collect();
    for w in rs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.6..=2.4).contains(&ratio), "residuals {rs:?}");
    }

    let mut at_baseline = model.clone();
    at_baseline.params.tok_emb.fill(0.0);
    let z = integrated_gradients(&at_baseline, &ex.tokens, ex.target, 16).unwrap();
    assert!(z.attributions.iter().all(|&v| v == 0.0));
    assert!(integrated_gradients(&model, &ex.tokens, ex.target, 4).is_err());
}
