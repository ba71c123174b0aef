use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use alloom_core::engine::{run_al_experiment, RunRecord, SimulatedOracle};
use alloom_core::featurize::{featurize_dataset, slide_windows};
use alloom_core::FeatureDataset;
use alloom_harness::io::{read_feature_csv, save_feature_csv};
use alloom_harness::spec::{ExperimentTemplate, WindowSpec};
use alloom_harness::synth::{sine_mix, SyntheticSpec};
use alloom_service::api::{BatchResponse, CreateResponse, ProgressResponse, SessionState};
use alloom_service::{router, AppState};
use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn synth() -> SyntheticSpec {
    SyntheticSpec::sine_mix(vec![24, 6, 10])
}

fn window() -> WindowSpec {
    WindowSpec {
        window_s: 6.0,
        overlap: 0.5,
        feature_set: alloom_core::featurize::FeatureSet::Tactile11,
        history_horizon_s: None,
    }
}

fn dataset() -> FeatureDataset {
    featurize_dataset(&sine_mix(&synth()).unwrap(), &window().config().unwrap()).unwrap()
}

fn template(strategy: &str, balanced: bool) -> Value {
    json!({"strategy": strategy, "model": "rf", "balanced": balanced, "budget": 40, "step": 10})
}

fn create_body(experiment: Value, seed: u64) -> Value {
    json!({
        "api_version": 1,
        "dataset": {"kind": "synthetic", "generator": "sine_mix", "counts": [24, 6, 10]},
        "window": {"window_s": 6.0, "overlap": 0.5},
        "experiment": experiment,
        "seed": seed,
    })
}

struct Client {
    app: axum::Router,
}

impl Client {
    fn new(state: Arc<AppState>) -> Self {
        Self { app: router(state) }
    }

    async fn send(&self, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Vec<(String, String)>, String) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(body.map(Body::from).unwrap_or_else(Body::empty))
            .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let headers = resp
            .headers()
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_str().unwrap().to_string()))
            .collect();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, headers, String::from_utf8(bytes.to_vec()).unwrap())
    }

    async fn json(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let (s, _, text) = self.send(method, uri, body.map(|b| b.to_string())).await;
        (s, serde_json::from_str(&text).unwrap_or(Value::String(text)))
    }

    async fn create(&self, body: Value) -> CreateResponse {
        let (s, v) = self.json("POST", "/sessions", Some(body)).await;
        assert_eq!(s, StatusCode::CREATED, "{v}");
        serde_json::from_value(v).unwrap()
    }

    /// Polls until the session stops training.
    async fn batch(&self, id: &str) -> BatchResponse {
        for _ in 0..2000 {
            let (s, headers, text) = self.send("GET", &format!("/sessions/{id}/batch"), None).await;
            match s {
                StatusCode::OK => return serde_json::from_str(&text).unwrap(),
                StatusCode::ACCEPTED => {
                    assert!(headers.iter().any(|(k, v)| k == "retry-after" && v == "1"));
                    tokio::time::sleep(Duration::from_millis(5)).await;
                }
                other => panic!("unexpected {other}: {text}"),
            }
        }
        panic!("session {id} never left training");
    }

    async fn label(&self, id: &str, labels: Value) -> (StatusCode, Value) {
        self.json("POST", &format!("/sessions/{id}/labels"), Some(json!({ "labels": labels })))
            .await
    }

    async fn progress(&self, id: &str) -> ProgressResponse {
        let (s, v) = self.json("GET", &format!("/sessions/{id}/progress"), None).await;
        assert_eq!(s, StatusCode::OK, "{v}");
        serde_json::from_value(v).unwrap()
    }

    /// Answers every batch from ground truth, each in two halves.
    async fn drive(&self, id: &str, ds: &FeatureDataset, max_batches: usize) {
        for _ in 0..max_batches {
            let b = self.batch(id).await;
            if b.state == SessionState::Finished {
                return;
            }
            let answers: Vec<(String, Value)> = b
                .items
                .iter()
                .filter(|it| it.submitted_class.is_none())
                .map(|it| {
                    let name = ds.label_space.name(ds.labels[it.instance_id]).unwrap();
                    (it.instance_id.to_string(), json!(name))
                })
                .collect();
            let half = answers.len() / 2;
            for part in [&answers[..half], &answers[half..]] {
                if part.is_empty() {
                    continue;
                }
                let (s, v) = self.label(id, Value::Object(part.iter().cloned().collect())).await;
                assert!(s == StatusCode::OK || s == StatusCode::ACCEPTED, "{s} {v}");
            }
        }
        self.batch(id).await;
    }
}

fn trace_of(p: &ProgressResponse, seed: u64) -> RunRecord {
    RunRecord {
        seed,
        steps: p.steps.clone(),
    }
}

fn offline(strategy: &str, balanced: bool, seed: u64) -> RunRecord {
    let ds = dataset();
    let t: ExperimentTemplate = serde_json::from_value(template(strategy, balanced)).unwrap();
    let test: usize = alloom_core::split::stratified_test_counts(&ds.class_counts(), 0.2).iter().sum();
    let cfg = t.config(ds.len() - test, seed).unwrap();
    run_al_experiment(&ds, &cfg, &mut SimulatedOracle::new(ds.labels.clone())).unwrap()
}

#[tokio::test]
async fn scripted_annotator_matches_offline_run() {
    let ds = dataset();
    let c = Client::new(AppState::ephemeral("."));
    for (strategy, balanced) in [("uncertainty", true), ("qbc", false)] {
        let created = c.create(create_body(template(strategy, balanced), 1415)).await;
        let id = created.session.session_id.clone();
        assert_eq!(created.batch.items.len(), 10);
        assert!(created.batch.items.iter().all(|it| it.score.is_none()));
        c.drive(&id, &ds, 10).await;
        let p = c.progress(&id).await;
        assert_eq!(p.state, SessionState::Finished);
        assert_eq!(p.labeled_count, 40);
        assert!(
            trace_of(&p, 1415).same_trace(&offline(strategy, balanced, 1415)),
            "{strategy} balanced={balanced}"
        );
        let b = c.batch(&id).await;
        assert!(b.items.is_empty() && b.remaining == 0);
    }
}

#[tokio::test]
async fn batches_never_reveal_labels() {
    let ds = dataset();
    let c = Client::new(AppState::ephemeral("."));
    let created = c.create(create_body(template("uncertainty", true), 9265)).await;
    let id = created.session.session_id;
    c.drive(&id, &ds, 1).await;
    let b = c.batch(&id).await;
    let (_, raw) = c.json("GET", &format!("/sessions/{id}/batch"), None).await;
    let allowed = [
        "instance_id",
        "features",
        "provenance",
        "window",
        "score",
        "predicted_class",
        "predicted_ordinal",
        "probabilities",
        "submitted_class",
    ];
    for item in raw["items"].as_array().unwrap() {
        for key in item.as_object().unwrap().keys() {
            assert!(allowed.contains(&key.as_str()), "unexpected field {key}");
        }
        assert!(item["submitted_class"].is_null());
    }
    assert!(b.items.iter().all(|it| it.score.is_some() && it.probabilities.is_some()));
}

#[tokio::test]
async fn window_samples_match_the_series() {
    let series = sine_mix(&synth()).unwrap();
    let cfg = window().config().unwrap();
    let windows: Vec<_> = series.iter().flat_map(|s| slide_windows(s, &cfg).unwrap()).collect();
    let c = Client::new(AppState::ephemeral("."));
    let created = c.create(create_body(template("uncertainty", false), 1415)).await;
    for it in &created.batch.items {
        let w = &windows[it.instance_id];
        let got = it.window.as_ref().unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].samples.len(), 300);
        assert_eq!(got[0].samples.as_slice(), w.channels[0].1);
        let prov = it.provenance.as_ref().unwrap();
        assert_eq!(prov.series_id, w.series_id);
        assert_eq!(prov.window_start_s, w.start_s);
    }
}

#[tokio::test]
async fn error_codes() {
    let dir = tempfile::tempdir().unwrap();
    let c = Client::new(AppState::ephemeral(dir.path()));
    let (s, _) = c.json("GET", "/sessions/nope/batch", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    let (s, _, _) = c.send("POST", "/sessions", Some("{not json".into())).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let mut missing = create_body(template("uncertainty", false), 1);
    missing["dataset"] = json!({"kind": "feature_csv", "path": "absent.csv"});
    missing.as_object_mut().unwrap().remove("window");
    let (s, v) = c.json("POST", "/sessions", Some(missing)).await;
    assert_eq!(s, StatusCode::NOT_FOUND, "{v}");

    let mut big = template("uncertainty", false);
    big["budget"] = json!(10_000);
    let (s, v) = c.json("POST", "/sessions", Some(create_body(big, 1))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST, "{v}");

    let mut qbc = template("qbc", false);
    qbc["step"] = json!(1);
    let (s, _) = c.json("POST", "/sessions", Some(create_body(qbc, 1))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let mut future = create_body(template("uncertainty", false), 1);
    future["api_version"] = json!(2);
    let (s, _) = c.json("POST", "/sessions", Some(future)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let created = c.create(create_body(template("uncertainty", false), 1)).await;
    let id = created.session.session_id;
    let pending: Vec<usize> = created.batch.items.iter().map(|it| it.instance_id).collect();
    let outside = (0..10_000).find(|i| !pending.contains(i)).unwrap();
    let (a, b) = (pending[0].to_string(), pending[1].to_string());

    let (s, _) = c.label(&id, json!({ outside.to_string(): "c0" })).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, _) = c.label(&id, json!({ a.clone(): "walking" })).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = c.label(&id, json!({ a.clone(): 3 })).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = c.label(&id, json!({})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let dup = format!("{{\"labels\": {{\"{a}\": \"c0\", \"{a}\": \"c1\"}}}}");
    let (s, _, _) = c.send("POST", &format!("/sessions/{id}/labels"), Some(dup)).await;
    assert_eq!(s, StatusCode::CONFLICT);

    // a rejected submission changes nothing
    let (s, _) = c.label(&id, json!({ a.clone(): "c0", b.clone(): "nope" })).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(c.batch(&id).await.remaining, 10);

    let (s, v) = c.label(&id, json!({ a.clone(): 1 })).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!((v["accepted"].as_u64(), v["remaining"].as_u64()), (Some(1), Some(9)));
    let (s, _) = c.label(&id, json!({ a.clone(): "c1" })).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let b = c.batch(&id).await;
    let first = b.items.iter().find(|it| it.instance_id == pending[0]).unwrap();
    assert_eq!(first.submitted_class.as_deref(), Some("c1"));

    let ds = dataset();
    c.drive(&id, &ds, 10).await;
    assert_eq!(c.batch(&id).await.state, SessionState::Finished);
    let (s, _) = c.label(&id, json!({ a: "c0" })).await;
    assert_eq!(s, StatusCode::CONFLICT);
}

#[tokio::test]
async fn submitting_during_training_conflicts() {
    let c = Client::new(AppState::ephemeral("."));
    let mut slow = template("qbc", false);
    slow["committee_size"] = json!(7);
    let created = c.create(create_body(slow, 5)).await;
    let id = created.session.session_id;
    let ds = dataset();
    let all: serde_json::Map<String, Value> = created
        .batch
        .items
        .iter()
        .map(|it| (it.instance_id.to_string(), json!(ds.labels[it.instance_id])))
        .collect();
    let (s, v) = c.label(&id, Value::Object(all.clone())).await;
    assert_eq!(s, StatusCode::ACCEPTED);
    assert_eq!(v["state"], "training");
    let (s, _) = c.label(&id, Value::Object(all)).await;
    // either still training or already on the next batch, which these ids are not part of
    assert_eq!(s, StatusCode::CONFLICT);
}

#[tokio::test]
async fn journal_replay_restores_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let journal = dir.path().join("sessions.jsonl");
    let ds = dataset();

    let (id, before_batch, before_progress) = {
        let c = Client::new(AppState::with_journal(dir.path(), &journal).unwrap());
        let created = c.create(create_body(template("uncertainty", true), 3589)).await;
        let id = created.session.session_id;
        c.drive(&id, &ds, 2).await;
        let b = c.batch(&id).await;
        let one = &b.items[0];
        let (s, _) = c
            .label(&id, json!({ one.instance_id.to_string(): ds.labels[one.instance_id] }))
            .await;
        assert_eq!(s, StatusCode::OK);
        let (b, p) = (c.batch(&id).await, c.progress(&id).await);
        (id, b, p)
    };

    let c = Client::new(AppState::with_journal(dir.path(), &journal).unwrap());
    let after_batch = c.batch(&id).await;
    let after_progress = c.progress(&id).await;
    assert_eq!(after_batch.items, before_batch.items);
    assert_eq!(after_batch.remaining, before_batch.remaining);
    assert!(trace_of(&after_progress, 0).same_trace(&trace_of(&before_progress, 0)));

    c.drive(&id, &ds, 10).await;
    let done = c.progress(&id).await;
    assert!(trace_of(&done, 3589).same_trace(&offline("uncertainty", true, 3589)));
}

#[tokio::test]
async fn feature_file_session_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dataset();
    save_feature_csv(&dir.path().join("feats.csv"), &ds).unwrap();
    let c = Client::new(AppState::ephemeral(dir.path()));
    let body = json!({
        "dataset": {"kind": "feature_csv", "path": "feats.csv"},
        "experiment": template("uncertainty", false),
        "holdout": "none",
    });
    let created = c.create(body).await;
    let id = created.session.session_id;
    assert!(!created.session.evaluated);
    assert!(created.batch.items.iter().all(|it| it.window.is_none()));
    c.drive(&id, &ds, 2).await;
    let p = c.progress(&id).await;
    assert_eq!(p.steps.len(), 2);
    assert!(p.steps.iter().all(|s| s.macro_f1.is_none()));

    let (s, headers, text) = c.send("GET", &format!("/sessions/{id}/export"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert!(headers.iter().any(|(k, v)| k == "content-type" && v.starts_with("text/csv")));
    let (exported, ids) = read_feature_csv(text.as_bytes()).unwrap();
    let queried: Vec<usize> = p.steps.iter().flat_map(|s| s.queried.clone()).collect();
    assert_eq!(ids, queried);
    for (r, &id) in ids.iter().enumerate() {
        assert_eq!(exported.labels[r], ds.labels[id]);
        assert_eq!(exported.instances.row(r), ds.instances.row(id));
    }
    assert_eq!(
        p.labeled_class_counts.iter().sum::<usize>(),
        20,
        "{:?}",
        p.labeled_class_counts
    );
}

#[tokio::test]
async fn health_and_listing() {
    let c = Client::new(AppState::ephemeral(Path::new(".")));
    let (s, v) = c.json("GET", "/health", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v, json!({"api_version": 1, "status": "ok", "sessions": 0}));
    c.create(create_body(template("random", false), 1)).await;
    let (_, v) = c.json("GET", "/sessions", None).await;
    assert_eq!(v.as_array().unwrap().len(), 1);
    assert_eq!(v[0]["state"], "awaiting_labels");
    assert_eq!(v[0]["classes"], json!(["c0", "c1", "c2"]));
}
