use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::{Body as HttpBody, Bytes};
use axum::extract::{FromRequest, Multipart, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::Router;
use tokio::sync::oneshot;

use super::{ApiRequest, ApiResponse, Body, Method, Part, ResponseBody, Service};
use crate::sandbox::serve_mock;

/// Largest request body accepted, notebooks included.
const BODY_LIMIT: usize = 32 * 1024 * 1024;

fn bearer(headers: &HeaderMap) -> Option<String> {
    let value = headers.get(header::AUTHORIZATION)?.to_str().ok()?;
    value.strip_prefix("Bearer ").map(|t| t.trim().to_string())
}

async fn read_body(req: Request) -> Result<Body, ApiResponse> {
    let is_multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|ct| ct.starts_with("multipart/form-data"));
    if is_multipart {
        let mut form = Multipart::from_request(req, &())
            .await
            .map_err(|e| ApiResponse::error(400, "bad_request", e.body_text()))?;
        let mut parts = Vec::new();
        while let Some(field) = form
            .next_field()
            .await
            .map_err(|e| ApiResponse::error(400, "bad_request", e.body_text()))?
        {
            let name = field.name().unwrap_or_default().to_string();
            let bytes = field
                .bytes()
                .await
                .map_err(|e| ApiResponse::error(400, "bad_request", e.body_text()))?;
            parts.push(Part { name, bytes: bytes.to_vec() });
        }
        return Ok(Body::Multipart(parts));
    }
    let bytes = axum::body::to_bytes(req.into_body(), BODY_LIMIT)
        .await
        .map_err(|e| ApiResponse::error(400, "bad_request", e.to_string()))?;
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Ok(Body::Empty);
    }
    serde_json::from_slice(&bytes)
        .map(Body::Json)
        .map_err(|e| ApiResponse::error(400, "bad_request", format!("body is not JSON: {e}")))
}

fn into_http(resp: ApiResponse) -> Response {
    let status = StatusCode::from_u16(resp.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    match resp.body {
        ResponseBody::Json(v) => (status, [(header::CONTENT_TYPE, "application/json")], v.to_string()).into_response(),
        ResponseBody::Text(t) => (status, [(header::CONTENT_TYPE, "application/x-ndjson")], t).into_response(),
    }
}

async fn handle(State(service): State<Arc<Service>>, req: Request) -> Response {
    let method = match *req.method() {
        axum::http::Method::GET => Method::Get,
        axum::http::Method::POST => Method::Post,
        _ => return into_http(ApiResponse::error(405, "method_not_allowed", req.method().to_string())),
    };
    let path = req.uri().path().to_string();
    let query = Query::<BTreeMap<String, String>>::try_from_uri(req.uri())
        .map(|q| q.0)
        .unwrap_or_default();
    let token = bearer(req.headers());
    let body = match read_body(req).await {
        Ok(b) => b,
        Err(resp) => return into_http(resp),
    };
    let api_req = ApiRequest {
        method,
        path,
        query,
        token,
        body,
    };
    let resp = tokio::task::spawn_blocking(move || service.handle(&api_req))
        .await
        .unwrap_or_else(|e| ApiResponse::error(500, "internal", e.to_string()));
    into_http(resp)
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .fallback(handle)
        .layer(axum::extract::DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(service)
}

/// A runner endpoint that answers wire v1 requests with the mock runner.
pub fn runner_router() -> Router {
    Router::new().route(
        "/run",
        post(|body: Bytes| async move {
            let out = tokio::task::spawn_blocking(move || serve_mock(&body)).await.unwrap_or_default();
            ([(header::CONTENT_TYPE, "application/json")], HttpBody::from(out))
        }),
    )
}

pub async fn serve(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app).await
}

/// A server running on its own thread and runtime.
pub struct ServerHandle {
    pub addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl ServerHandle {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Bind `addr` and serve `app` until the handle is dropped.
pub fn spawn_server(addr: &str, app: Router) -> std::io::Result<ServerHandle> {
    let std_listener = std::net::TcpListener::bind(addr)?;
    std_listener.set_nonblocking(true)?;
    let addr = std_listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .expect("tokio runtime");
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(std_listener).expect("listener");
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
    });
    Ok(ServerHandle {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}
