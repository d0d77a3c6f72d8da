//! Network-facing behaviour against a scripted local HTTP server: redirect
//! following and the gateway's retry policy over the live provider.

mod common;

use common::{Route, TestServer};
use metaharvest_core::gateway::http::{HttpChatModel, HttpEmbeddingModel};
use metaharvest_core::gateway::{Gateway, GatewayConfig, GatewayError, LiveSettings, Message};
use metaharvest_core::ingest::{FetchConfig, FetchError, PageRenderer, StaticFetcher};
use std::time::Duration;

#[test]
fn three_redirects_followed_under_limit_five() {
    let server = TestServer::spawn(vec![
        Route::redirect("/a", "/b"),
        Route::redirect("/b", "/c"),
        Route::redirect("/c", "/d"),
        Route::ok("/d", "text/html", "<p>final body</p>"),
    ]);
    let fetcher = StaticFetcher::new(&FetchConfig {
        redirect_limit: 5,
        ..FetchConfig::default()
    });
    let page = fetcher.render(&server.url("/a")).unwrap();
    assert_eq!(page.body, b"<p>final body</p>");
    assert_eq!(page.media_type, "text/html");
}

#[test]
fn not_found_is_reported_with_url() {
    let server = TestServer::spawn(vec![Route::status("/missing", 404)]);
    let fetcher = StaticFetcher::new(&FetchConfig::default());
    match fetcher.render(&server.url("/missing")) {
        Err(FetchError::NotFound { url }) => assert!(url.ends_with("/missing")),
        other => panic!("expected not-found, got {other:?}"),
    }
}

#[test]
fn server_error_carries_status() {
    let server = TestServer::spawn(vec![Route::status("/broken", 503)]);
    let fetcher = StaticFetcher::new(&FetchConfig::default());
    match fetcher.render(&server.url("/broken")) {
        Err(FetchError::Status { status, .. }) => assert_eq!(status, 503),
        other => panic!("expected status error, got {other:?}"),
    }
}

fn live_gateway(server: &TestServer, api_key: &str) -> Gateway {
    let settings = LiveSettings {
        base_url: server.base_url.clone(),
        api_key: api_key.into(),
        chat_model: "test-model".into(),
        embed_model: "test-embed".into(),
    };
    let timeout = Duration::from_secs(5);
    Gateway::new(
        Box::new(HttpChatModel::new(&settings, timeout)),
        Box::new(HttpEmbeddingModel::new(&settings, timeout)),
        GatewayConfig {
            chat_model: settings.chat_model.clone(),
            embed_model: settings.embed_model.clone(),
            backoff_ms: 1,
            ..GatewayConfig::default()
        },
        None,
    )
}

fn chat_body(content: &str) -> String {
    serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": content}}]
    })
    .to_string()
}

#[test]
fn transient_429_then_200_succeeds_after_one_retry() {
    // Two routes on the same path are served in order: 429 first, then 200.
    let server = TestServer::spawn(vec![
        Route::status("/chat/completions", 429),
        Route::ok(
            "/chat/completions",
            "application/json",
            &chat_body("recovered"),
        ),
    ]);
    let gateway = live_gateway(&server, "key");
    let req = gateway.chat_request(vec![Message::user("hello")]);
    assert_eq!(gateway.complete(&req).unwrap(), "recovered");
    assert_eq!(gateway.stats().chat_provider_calls, 2);
}

#[test]
fn invalid_credential_fails_without_retry() {
    let server = TestServer::spawn(vec![Route::status("/chat/completions", 401)]);
    let gateway = live_gateway(&server, "wrong");
    let req = gateway.chat_request(vec![Message::user("hello")]);
    match gateway.complete(&req) {
        Err(GatewayError::Auth(_)) => {}
        other => panic!("expected auth error, got {other:?}"),
    }
    assert_eq!(gateway.stats().chat_provider_calls, 1);
}

#[test]
fn embedding_endpoint_parsed() {
    let body = serde_json::json!({"data": [{"embedding": [0.6, 0.8]}]}).to_string();
    let server = TestServer::spawn(vec![Route::ok("/embeddings", "application/json", &body)]);
    let gateway = live_gateway(&server, "key");
    let vector = gateway.embed("some text").unwrap();
    assert_eq!(vector.values, vec![0.6, 0.8]);
    assert_eq!(vector.model, "test-embed");
}

#[test]
fn malformed_chat_response_is_an_error() {
    let server = TestServer::spawn(vec![Route::ok(
        "/chat/completions",
        "application/json",
        "{\"unexpected\": true}",
    )]);
    let gateway = live_gateway(&server, "key");
    let req = gateway.chat_request(vec![Message::user("hello")]);
    assert!(matches!(
        gateway.complete(&req),
        Err(GatewayError::Provider { .. })
    ));
}
