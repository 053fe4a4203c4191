use deft_core::data::{generate_dynamic_sbm, SbmConfig};
use deft_core::tasks::{contexts_for, evaluate, fit, mean_rank, mrr, Phase};
use deft_core::{DeftConfig, TaskModel, TaskSpec, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn separable_loss_halves_within_fifty_epochs() {
    let data = generate_dynamic_sbm(&SbmConfig::preset("separable").unwrap()).unwrap();
    let cfg = DeftConfig {
        hidden_dim: 32,
        ..Default::default()
    };
    let train = TrainConfig {
        epochs: 50,
        max_positives: 200,
        eval_every: 0,
        ..Default::default()
    };
    let mut tm = TaskModel::new(cfg, TaskSpec::default(), data.feature_dim(), 0).unwrap();
    let ctxs = contexts_for(&data, &tm).unwrap();
    let out = fit(&data, &ctxs, &mut tm, &train, 0).unwrap();
    let (first, last) = (out.loss_per_epoch[0], out.loss_per_epoch[49]);
    assert!(last < 0.5 * first, "epoch 1 {first}, epoch 50 {last}");
    let report = evaluate(&data, &ctxs, &tm, &train, Phase::Test).unwrap();
    assert!(report.mrr.is_some() && report.map.is_some() && report.micro_f1.is_none());
}

#[test]
fn random_scores_give_harmonic_mrr() {
    // uniform rank among 10 candidates: E[1/r] = H_10 / 10
    let expected: f64 = (1..=10).map(|r| 1.0 / r as f64).sum::<f64>() / 10.0;
    assert!((expected - 0.2929).abs() < 1e-4);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ranks: Vec<f64> = (0..1000)
        .map(|_| {
            let pos: f64 = rng.random();
            let negs: Vec<f64> = (0..9).map(|_| rng.random()).collect();
            mean_rank(pos, &negs)
        })
        .collect();
    assert!((mrr(&ranks).unwrap() - expected).abs() < 0.05);
}
