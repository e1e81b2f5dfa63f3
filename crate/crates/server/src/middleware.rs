use std::time::{Duration, Instant};

use axum::extract::{MatchedPath, Request, State};
use axum::http::HeaderValue;
use axum::middleware::Next;
use axum::response::Response;

use crate::{AppState, API_VERSION, DURATION_HEADER};

/// Adds the duration and API-version headers, applies the debug delay and
/// logs one line per request.
pub(crate) async fn instrument(State(state): State<AppState>, request: Request, next: Next) -> Response {
    let started = Instant::now();
    let method = request.method().clone();
    let route = request.extensions().get::<MatchedPath>().map(|p| p.as_str().to_owned()).unwrap_or_else(|| request.uri().path().to_owned());
    let delay = state.delay_ms();
    if delay > 0 && route != "/health" {
        tokio::time::sleep(Duration::from_millis(delay)).await;
    }
    let mut response = next.run(request).await;
    let elapsed = started.elapsed();
    let ms = elapsed.as_secs_f64() * 1000.0;
    let headers = response.headers_mut();
    headers.insert(DURATION_HEADER, HeaderValue::from_str(&format!("{ms:.3}")).expect("ascii"));
    headers.insert("x-api-version", HeaderValue::from(API_VERSION));
    tracing::info!(%method, route, status = response.status().as_u16(), duration_ms = ms, "request");
    response
}

/// Allow-list CORS for the browser player; `None` when no origin is configured.
pub(crate) fn cors(origins: &[HeaderValue]) -> Option<tower_http::cors::CorsLayer> {
    use axum::http::{header, Method};
    use tower_http::cors::{AllowOrigin, CorsLayer};
    if origins.is_empty() {
        return None;
    }
    Some(
        CorsLayer::new()
            .allow_origin(AllowOrigin::list(origins.iter().cloned()))
            .allow_methods([Method::GET, Method::POST, Method::PUT, Method::DELETE])
            .allow_headers([header::AUTHORIZATION, header::CONTENT_TYPE, header::IF_NONE_MATCH])
            .expose_headers([header::ETAG, header::HeaderName::from_static(DURATION_HEADER), header::HeaderName::from_static("x-api-version")]),
    )
}
