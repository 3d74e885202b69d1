mod common;

use std::time::Duration;

use common::{MockServer, Reply};
use layout_critic::critique::{QualityWeights, RewardWeights};
use layout_critic::geometry::BBox;
use layout_critic::layout::{CanvasSpec, ElementCategory, Layout, ParseStatus};
use layout_critic_llm::{best_of_n, build_prompt, rerank, sample_candidates, EndpointConfig, LlmError};

fn spec() -> CanvasSpec {
    CanvasSpec::masked(513, 750, &[ElementCategory::Text], vec![]).unwrap()
}

fn centered(spec: &CanvasSpec) -> String {
    Layout::from_boxes(spec, &[BBox::new(0.25, 0.45, 0.5, 0.1).unwrap()]).to_dual_output("one centered block")
}

fn config(url: &str) -> EndpointConfig {
    EndpointConfig {
        concurrency: 1,
        retries: 0,
        timeout: Duration::from_secs(5),
        api_key: Some("test-key".into()),
        ..EndpointConfig::new(url, "mock-model")
    }
}

#[test]
fn returns_fixtures_in_order_with_bearer_auth() {
    let fixtures = vec!["first".to_string(), "second".to_string(), "third".to_string()];
    let server = MockServer::start(fixtures.iter().cloned().map(Reply::Content).collect());
    let out = sample_candidates(&config(&server.url), "prompt", 3).unwrap();
    assert_eq!(out, fixtures);
    let seen = server.seen.lock().unwrap();
    assert_eq!(seen.bodies.len(), 3);
    assert!(seen.auth.iter().all(|a| a.as_deref() == Some("Bearer test-key")));
    let body: serde_json::Value = serde_json::from_str(&seen.bodies[0]).unwrap();
    assert_eq!(body["model"], "mock-model");
    assert_eq!(body["messages"][0]["content"], "prompt");
}

#[test]
fn single_candidate_issues_one_request() {
    let server = MockServer::start(vec![Reply::Content("only".into())]);
    let out = sample_candidates(&config(&server.url), "p", 1).unwrap();
    assert_eq!(out, vec!["only"]);
    assert_eq!(server.seen.lock().unwrap().bodies.len(), 1);
}

#[test]
fn timed_out_request_degrades_to_empty_candidate() {
    let server = MockServer::start(vec![
        Reply::Content("a".into()),
        Reply::Delayed(Duration::from_millis(1500), "late".into()),
        Reply::Content("c".into()),
        Reply::Content("d".into()),
    ]);
    let cfg = EndpointConfig {
        timeout: Duration::from_millis(400),
        ..config(&server.url)
    };
    let out = sample_candidates(&cfg, "p", 4).unwrap();
    assert_eq!(out, vec!["a", "", "c", "d"]);
}

#[test]
fn failed_status_is_retried() {
    let server = MockServer::start(vec![Reply::Status(500), Reply::Content("ok".into())]);
    let cfg = EndpointConfig {
        retries: 1,
        ..config(&server.url)
    };
    assert_eq!(sample_candidates(&cfg, "p", 1).unwrap(), vec!["ok"]);
}

#[test]
fn unreachable_endpoint_is_an_error() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    drop(listener);
    let err = sample_candidates(&config(&url), "p", 2).unwrap_err();
    assert!(matches!(err, LlmError::Unreachable(_)), "{err}");
}

#[test]
fn best_of_n_picks_the_valid_response() {
    let s = spec();
    let server = MockServer::start(vec![
        Reply::Content("I would put it in the middle.".into()),
        Reply::Content("<design>x</design><layout>{\"elements\": []}</layout>".into()),
        Reply::Content(centered(&s)),
    ]);
    let res = best_of_n(
        &config(&server.url),
        &s,
        None,
        3,
        &RewardWeights::BALANCED_HYBRID,
        &QualityWeights::default(),
    )
    .unwrap();
    assert_eq!(res.winner, 2);
    let statuses: Vec<ParseStatus> = res.candidates.iter().map(|c| c.parsed.status).collect();
    assert_eq!(statuses, vec![ParseStatus::MissingBlock, ParseStatus::SchemaMismatch, ParseStatus::Valid]);
    assert!(res.candidates.iter().all(|c| c.latency_ms.is_some()));
    let body: serde_json::Value = serde_json::from_str(&server.seen.lock().unwrap().bodies[0]).unwrap();
    assert_eq!(body["messages"][0]["content"], build_prompt(&s));
}

#[test]
fn rerank_rules() {
    let s = spec();
    let rw = RewardWeights::FORMAT_FOCUSED;
    let qw = QualityWeights::default();
    let res = rerank(&s, None, &["no blocks".into(), centered(&s)], &rw, &qw).unwrap();
    assert_eq!(res.winner, 1);
    assert!(res.candidates[0].reward.r_total < res.candidates[1].reward.r_total);
    assert_eq!(rerank(&s, None, &[centered(&s)], &rw, &qw).unwrap().winner, 0);
    assert_eq!(rerank(&s, None, &[centered(&s), centered(&s)], &rw, &qw).unwrap().winner, 0);
    assert!(rerank(&s, None, &[], &rw, &qw).is_err());
    let failed = &res.candidates[0];
    assert!(failed.parsed.layout.is_none());
    assert_eq!(failed.reward.r_quality, 0.0);
}
