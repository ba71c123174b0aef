use std::collections::HashSet;

use alloom_core::engine::{run_on_split, ExperimentConfig, SimulatedOracle};
use alloom_core::learners::ModelConfig;
use alloom_core::split::stratified_split;
use alloom_core::strategies::{score_least_confidence, score_vote_entropy, CommitteeVotes, StrategyConfig, StrategyKind};
use alloom_core::{FeatureDataset, LabelSpace};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn skewed(counts: &[usize], seed: u64) -> FeatureDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (class, &n) in counts.iter().enumerate() {
        for _ in 0..n {
            rows.push(class as f64 * 1.5 + rng.random_range(-1.0..1.0));
            rows.push(rng.random_range(-1.0..1.0));
            labels.push(class);
        }
    }
    let n = labels.len();
    FeatureDataset::new(
        Array2::from_shape_vec((n, 2), rows).unwrap(),
        labels,
        LabelSpace::new((0..counts.len()).map(|c| format!("c{c}"))).unwrap(),
        vec!["x".into(), "y".into()],
        None,
    )
    .unwrap()
}

fn configs() -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    for kind in [StrategyKind::Random, StrategyKind::Uncertainty, StrategyKind::Qbc, StrategyKind::Emc] {
        for balanced in [false, true] {
            let mut strategy = StrategyConfig::new(kind);
            strategy.emc_candidate_cap = 12;
            let mut cfg = ExperimentConfig::new(strategy, ModelConfig::decision_tree(), 40, 8, 9265);
            cfg.balanced = balanced;
            out.push(cfg);
        }
    }
    out
}

#[test]
fn poisoned_test_labels_leave_queries_unchanged() {
    let ds = skewed(&[40, 6, 20, 10], 3);
    for cfg in configs() {
        let split = stratified_split(&ds, cfg.test_fraction, cfg.seed).unwrap();
        let mut poisoned = ds.clone();
        for &i in &split.test {
            poisoned.labels[i] = (poisoned.labels[i] + 1) % 4;
        }
        let clean = run_on_split(&ds, &split, &cfg, &mut SimulatedOracle::new(ds.labels.clone())).unwrap();
        let dirty =
            run_on_split(&poisoned, &split, &cfg, &mut SimulatedOracle::new(poisoned.labels.clone())).unwrap();
        let queries = |r: &alloom_core::engine::RunRecord| r.steps.iter().map(|s| s.queried.clone()).collect::<Vec<_>>();
        assert_eq!(queries(&clean), queries(&dirty), "{:?} balanced={}", cfg.strategy.kind, cfg.balanced);
        assert_ne!(
            clean.steps.last().unwrap().macro_f1,
            dirty.steps.last().unwrap().macro_f1,
            "evaluation should see the poisoned labels"
        );
    }
}

#[test]
fn test_split_is_never_queried() {
    let ds = skewed(&[40, 6, 20, 10], 5);
    for cfg in configs() {
        let split = stratified_split(&ds, cfg.test_fraction, cfg.seed).unwrap();
        let test: HashSet<usize> = split.test.iter().copied().collect();
        let run = run_on_split(&ds, &split, &cfg, &mut SimulatedOracle::new(ds.labels.clone())).unwrap();
        for step in &run.steps {
            assert!(step.queried.iter().all(|i| !test.contains(i)));
        }
    }
}

#[test]
fn score_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2000 {
        let k = rng.random_range(2..=9);
        let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let probs = Array2::from_shape_vec((1, k), raw.iter().map(|v| v / total).collect()).unwrap();
        let (lc, _) = score_least_confidence(probs.view()).unwrap();
        assert!(lc[0] >= 0.0 && lc[0] <= 1.0 - 1.0 / k as f64 + 1e-12, "{lc:?}");

        let c = rng.random_range(1..=12);
        let votes = CommitteeVotes {
            votes: Array2::from_shape_fn((1, c), |_| rng.random_range(0..k)),
            n_classes: k,
        };
        let ve = score_vote_entropy(&votes).unwrap()[0];
        assert!(ve >= 0.0 && ve <= (k.min(c) as f64).ln() + 1e-12, "{ve}");
    }
}
