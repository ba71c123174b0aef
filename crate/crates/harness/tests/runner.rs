use alloom_core::featurize::{featurize_dataset, FeatureSet, WindowConfig};
use alloom_harness::io::{read_feature_csv, write_feature_csv};
use alloom_harness::runner::{run_spec, write_outputs};
use alloom_harness::spec::ExperimentSpec;
use alloom_harness::synth::{sine_mix, SyntheticSpec};

fn spec_text(out: &str) -> String {
    format!(
        r#"{{
  "version": 1,
  "dataset": {{ "kind": "synthetic", "generator": "sine_mix", "counts": [20, 4, 8] }},
  "window": {{ "window_s": 6, "overlap": 0.5 }},
  "experiments": [
    {{ "strategy": "uncertainty", "model": "rf", "balanced": true, "budget_fraction": 0.5, "step": 8 }},
    {{ "strategy": "qbc", "model": "dt", "committee_size": 3, "budget": 24, "step": 8 }},
    {{ "strategy": "emc", "model": "dt", "emc_candidate_cap": 10, "budget": 16, "step": 8 }}
  ],
  "seed_count": 3,
  "output_dir": "{out}"
}}"#
    )
}

fn run_with_threads(threads: usize, text: &str) -> alloom_harness::RunOutput {
    let spec = ExperimentSpec::from_json(text).unwrap();
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(|| run_spec(&spec, text).unwrap())
}

#[test]
fn results_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let text = spec_text(dir.path().to_str().unwrap());
    let one = run_with_threads(1, &text);
    let three = run_with_threads(3, &text);
    assert_eq!(one.results_csv(), three.results_csv());
    assert_eq!(one.manifest, three.manifest);
    assert_eq!(one.rows.len(), 3 * (5 + 3 + 2));

    let files = write_outputs(&one, dir.path()).unwrap();
    let written = std::fs::read(&files.results).unwrap();
    assert_eq!(written, one.results_csv().into_bytes());
    assert_eq!(
        one.manifest.results_sha256,
        alloom_harness::runner::sha256_hex(&written)
    );
    assert!(files.grid.is_none());
}

#[test]
fn summaries_cover_every_template() {
    let dir = tempfile::tempdir().unwrap();
    let text = spec_text(dir.path().to_str().unwrap());
    let out = run_with_threads(2, &text);
    let strategies: Vec<&str> = out.summaries.iter().map(|s| s.strategy.as_str()).collect();
    assert_eq!(strategies, ["uncertainty", "qbc", "emc"]);
    for s in &out.summaries {
        assert_eq!(s.steps.last().unwrap().labeled_count, s.budget);
        assert!(s.steps.iter().all(|st| st.runs == 3));
    }
}

#[test]
fn feature_file_round_trip_with_four_channels() {
    let mut spec = SyntheticSpec::sine_mix(vec![3, 2]);
    spec.channels = 4;
    let series = sine_mix(&spec).unwrap();
    let ds = featurize_dataset(&series, &WindowConfig::new(6.0, 0.5, FeatureSet::Fiber12).unwrap()).unwrap();
    assert_eq!(ds.n_features(), 48);
    let ids: Vec<usize> = (0..ds.len()).map(|i| 1000 + 7 * i).collect();
    let mut buf = Vec::new();
    write_feature_csv(&mut buf, &ds, &ids).unwrap();
    let (back, back_ids) = read_feature_csv(buf.as_slice()).unwrap();
    assert_eq!(back, ds);
    assert_eq!(back_ids, ids);
}
