//! The HTTP surface, independent of any server framework.
//!
//! [`Service::handle`] takes a parsed request and returns status plus body;
//! `server` adapts it to axum. Every mutating endpoint calls exactly one
//! platform operation.

mod server;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

pub use server::{router, runner_router, serve, spawn_server, ServerHandle};

use crate::manifest::{Decision, Ecosystem, VersionSpec};
use crate::notebook::ParamValue;
use crate::platform::{ErrorKind, Platform, PlatformError, UserRecord};
use crate::workflow::{export_lines, ReviewAction, VersionRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Get,
    Post,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Get => "GET",
            Method::Post => "POST",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Endpoint {
    CreateApp,
    ListApps,
    SubmitVersion,
    ListVersions,
    AssignReviewer,
    Review,
    RunVersion,
    ReviewQueue,
    RequestPackage,
    DecidePackage,
    Registry,
    Audit,
    Scale,
    Retire,
    Rollback,
    OpenApp,
    RunApp,
    OpenPreview,
    RunPreview,
}

/// Method, path template and endpoint, in documentation order.
pub const ENDPOINTS: &[(Method, &str, Endpoint)] = &[
    (Method::Post, "/api/apps", Endpoint::CreateApp),
    (Method::Get, "/api/apps", Endpoint::ListApps),
    (Method::Post, "/api/apps/{app_id}/versions", Endpoint::SubmitVersion),
    (Method::Get, "/api/apps/{app_id}/versions", Endpoint::ListVersions),
    (Method::Post, "/api/versions/{id}/assign-reviewer", Endpoint::AssignReviewer),
    (Method::Post, "/api/versions/{id}/review", Endpoint::Review),
    (Method::Post, "/api/versions/{id}/run", Endpoint::RunVersion),
    (Method::Get, "/api/reviews", Endpoint::ReviewQueue),
    (Method::Post, "/api/packages/requests", Endpoint::RequestPackage),
    (Method::Post, "/api/packages/{ecosystem}/{name}/decision", Endpoint::DecidePackage),
    (Method::Get, "/api/registry", Endpoint::Registry),
    (Method::Get, "/api/audit", Endpoint::Audit),
    (Method::Post, "/api/deployments/{slug}/scale", Endpoint::Scale),
    (Method::Post, "/api/deployments/{slug}/retire", Endpoint::Retire),
    (Method::Post, "/api/apps/{app_id}/rollback", Endpoint::Rollback),
    (Method::Get, "/internal/{slug}", Endpoint::OpenApp),
    (Method::Post, "/internal/{slug}/run", Endpoint::RunApp),
    (Method::Get, "/preview/{token}", Endpoint::OpenPreview),
    (Method::Post, "/preview/{token}/run", Endpoint::RunPreview),
];

impl Endpoint {
    pub fn template(self) -> (Method, &'static str) {
        ENDPOINTS
            .iter()
            .find(|(_, _, e)| *e == self)
            .map(|(m, t, _)| (*m, *t))
            .expect("every endpoint is listed")
    }

    /// Fill a path template with values for its `{placeholders}`, in order.
    pub fn path(self, args: &[&str]) -> String {
        let (_, template) = self.template();
        let mut args = args.iter();
        template
            .split('/')
            .map(|seg| {
                if seg.starts_with('{') {
                    (*args.next().expect("one value per placeholder")).to_string()
                } else {
                    seg.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join("/")
    }
}

fn match_template(template: &str, path: &str) -> Option<Vec<String>> {
    let t: Vec<&str> = template.split('/').collect();
    let p: Vec<&str> = path.trim_end_matches('/').split('/').collect();
    if t.len() != p.len() {
        return None;
    }
    let mut params = Vec::new();
    for (ts, ps) in t.iter().zip(&p) {
        if ts.starts_with('{') {
            if ps.is_empty() {
                return None;
            }
            params.push(ps.to_string());
        } else if ts != ps {
            return None;
        }
    }
    Some(params)
}

pub enum Routed {
    Found(Endpoint, Vec<String>),
    WrongMethod,
    NotFound,
}

pub fn route(method: Method, path: &str) -> Routed {
    let mut path_matched = false;
    for (m, template, endpoint) in ENDPOINTS {
        if let Some(params) = match_template(template, path) {
            if *m == method {
                return Routed::Found(*endpoint, params);
            }
            path_matched = true;
        }
    }
    if path_matched {
        Routed::WrongMethod
    } else {
        Routed::NotFound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Part {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Body {
    #[default]
    Empty,
    Json(Value),
    Multipart(Vec<Part>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiRequest {
    pub method: Method,
    pub path: String,
    pub query: BTreeMap<String, String>,
    pub token: Option<String>,
    pub body: Body,
}

impl ApiRequest {
    pub fn new(method: Method, path: impl Into<String>) -> Self {
        ApiRequest {
            method,
            path: path.into(),
            query: BTreeMap::new(),
            token: None,
            body: Body::Empty,
        }
    }

    pub fn token(mut self, token: &str) -> Self {
        self.token = Some(token.to_string());
        self
    }

    pub fn json(mut self, body: Value) -> Self {
        self.body = Body::Json(body);
        self
    }

    pub fn parts(mut self, parts: &[(&str, &[u8])]) -> Self {
        self.body = Body::Multipart(
            parts
                .iter()
                .map(|(name, bytes)| Part {
                    name: name.to_string(),
                    bytes: bytes.to_vec(),
                })
                .collect(),
        );
        self
    }

    pub fn query(mut self, key: &str, value: &str) -> Self {
        self.query.insert(key.to_string(), value.to_string());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResponseBody {
    Json(Value),
    /// Newline-delimited text, used for the audit stream.
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiResponse {
    pub status: u16,
    pub body: ResponseBody,
}

impl ApiResponse {
    fn ok(body: Value) -> Self {
        ApiResponse {
            status: 200,
            body: ResponseBody::Json(body),
        }
    }

    pub fn error(status: u16, code: &str, message: impl Into<String>) -> Self {
        ApiResponse {
            status,
            body: ResponseBody::Json(json!({"error": code, "message": message.into()})),
        }
    }

    pub fn json(&self) -> Option<&Value> {
        match &self.body {
            ResponseBody::Json(v) => Some(v),
            ResponseBody::Text(_) => None,
        }
    }
}

pub fn status_for(kind: ErrorKind) -> (u16, &'static str) {
    match kind {
        ErrorKind::BadRequest => (400, "bad_request"),
        ErrorKind::Unauthenticated => (401, "unauthenticated"),
        ErrorKind::Forbidden => (403, "forbidden"),
        ErrorKind::NotFound => (404, "not_found"),
        ErrorKind::Conflict => (409, "conflict"),
        ErrorKind::Internal => (500, "internal"),
        ErrorKind::Unavailable => (503, "unavailable"),
    }
}

impl From<PlatformError> for ApiResponse {
    fn from(e: PlatformError) -> Self {
        let (status, code) = status_for(e.kind());
        ApiResponse::error(status, code, e.to_string())
    }
}

fn bad(msg: impl Into<String>) -> PlatformError {
    PlatformError::Invalid(msg.into())
}

fn to_json<T: serde::Serialize>(v: T) -> Value {
    serde_json::to_value(v).expect("response serializes")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateApp {
    title: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AssignReviewer {
    reviewer: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Review {
    action: ReviewAction,
    #[serde(default)]
    comment: String,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct Run {
    #[serde(default)]
    params: BTreeMap<String, ParamValue>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PackageRequest {
    ecosystem: Ecosystem,
    name: String,
    #[serde(default)]
    note: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PackageDecision {
    decision: Decision,
    #[serde(default)]
    allowed_versions: Option<VersionSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Scale {
    replicas: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Rollback {
    version_no: u32,
}

fn json_body<T: DeserializeOwned>(body: &Body) -> Result<T, PlatformError> {
    match body {
        Body::Json(v) => serde_json::from_value(v.clone()).map_err(|e| bad(format!("body: {e}"))),
        Body::Empty => serde_json::from_value(json!({})).map_err(|e| bad(format!("body: {e}"))),
        Body::Multipart(_) => Err(bad("expected a JSON body")),
    }
}

fn run_body(body: &Body) -> Result<Run, PlatformError> {
    match body {
        Body::Empty => Ok(Run::default()),
        other => json_body(other),
    }
}

fn version_ref(id: &str) -> Result<VersionRef, PlatformError> {
    id.parse().map_err(bad)
}

pub struct Service {
    platform: Arc<Platform>,
    /// Start the sandbox build check in the background after a submission
    /// validates.
    auto_build_check: bool,
}

impl Service {
    pub fn new(platform: Arc<Platform>) -> Self {
        Service {
            platform,
            auto_build_check: false,
        }
    }

    pub fn with_auto_build_check(mut self, on: bool) -> Self {
        self.auto_build_check = on;
        self
    }

    pub fn platform(&self) -> &Arc<Platform> {
        &self.platform
    }

    pub fn handle(&self, req: &ApiRequest) -> ApiResponse {
        let (endpoint, params) = match route(req.method, &req.path) {
            Routed::Found(e, p) => (e, p),
            Routed::WrongMethod => return ApiResponse::error(405, "method_not_allowed", format!("{} {}", req.method.as_str(), req.path)),
            Routed::NotFound => return ApiResponse::error(404, "not_found", format!("no endpoint at {}", req.path)),
        };
        let user = match self.platform.authenticate(req.token.as_deref()) {
            Ok(u) => u,
            Err(e) => return e.into(),
        };
        match self.dispatch(endpoint, &params, req, &user) {
            Ok(resp) => resp,
            Err(e) => e.into(),
        }
    }

    fn dispatch(&self, endpoint: Endpoint, args: &[String], req: &ApiRequest, user: &UserRecord) -> Result<ApiResponse, PlatformError> {
        let p = &self.platform;
        let arg = |i: usize| args[i].as_str();
        let body = &req.body;
        Ok(match endpoint {
            Endpoint::CreateApp => {
                let b: CreateApp = json_body(body)?;
                ApiResponse::ok(to_json(p.create_app(user, &b.title)?))
            }
            Endpoint::ListApps => ApiResponse::ok(json!({ "apps": p.apps() })),
            Endpoint::SubmitVersion => {
                let Body::Multipart(parts) = body else {
                    return Err(bad("submissions are multipart with notebook and manifest parts"));
                };
                let part = |name: &str| parts.iter().find(|p| p.name == name).map(|p| p.bytes.as_slice());
                let notebook = part("notebook").ok_or_else(|| bad("missing notebook part"))?;
                let manifest = part("manifest").ok_or_else(|| bad("missing manifest part"))?;
                let ecosystem = match part("ecosystem") {
                    Some(raw) => std::str::from_utf8(raw)
                        .map_err(|_| bad("ecosystem is not UTF-8"))?
                        .trim()
                        .parse()?,
                    None => Ecosystem::Pypi,
                };
                let rec = p.submit_version(user, arg(0), notebook, manifest, ecosystem)?;
                if self.auto_build_check && rec.version.state == crate::workflow::LifecycleState::Validated {
                    let platform = p.clone();
                    let r = rec.version.version_ref();
                    std::thread::spawn(move || {
                        let _ = platform.run_build_check(&r, &BTreeMap::new());
                    });
                }
                ApiResponse::ok(to_json(rec))
            }
            Endpoint::ListVersions => ApiResponse::ok(json!({ "versions": p.version_history(arg(0))? })),
            Endpoint::AssignReviewer => {
                let b: AssignReviewer = json_body(body)?;
                let (version, preview) = p.assign_reviewer(user, &version_ref(arg(0))?, &b.reviewer)?;
                ApiResponse::ok(json!({ "version": version, "preview": preview }))
            }
            Endpoint::Review => {
                let b: Review = json_body(body)?;
                ApiResponse::ok(to_json(p.record_review(user, &version_ref(arg(0))?, b.action, &b.comment)?))
            }
            Endpoint::RunVersion => {
                let b = run_body(body)?;
                ApiResponse::ok(to_json(p.run_version(user, &version_ref(arg(0))?, &b.params)?))
            }
            Endpoint::ReviewQueue => ApiResponse::ok(json!({ "versions": p.review_queue(user) })),
            Endpoint::RequestPackage => {
                let b: PackageRequest = json_body(body)?;
                ApiResponse::ok(to_json(p.request_package(user, b.ecosystem, &b.name, &b.note)?))
            }
            Endpoint::DecidePackage => {
                let b: PackageDecision = json_body(body)?;
                let ecosystem: Ecosystem = arg(0).parse()?;
                let spec = b.allowed_versions.unwrap_or(VersionSpec::Any);
                ApiResponse::ok(to_json(p.decide_package(user, ecosystem, arg(1), b.decision, spec)?))
            }
            Endpoint::Registry => ApiResponse::ok(json!({ "packages": p.registry_rows() })),
            Endpoint::Audit => {
                let from = match req.query.get("from") {
                    Some(v) => v.parse::<u64>().map_err(|_| bad("from must be a non-negative integer"))?,
                    None => 0,
                };
                ApiResponse {
                    status: 200,
                    body: ResponseBody::Text(export_lines(&p.audit_events(user, from)?)),
                }
            }
            Endpoint::Scale => {
                let b: Scale = json_body(body)?;
                ApiResponse::ok(to_json(p.scale(user, arg(0), b.replicas)?))
            }
            Endpoint::Retire => {
                let _: serde_json::Map<String, Value> = json_body(body)?;
                ApiResponse::ok(to_json(p.retire(user, arg(0))?))
            }
            Endpoint::Rollback => {
                let b: Rollback = json_body(body)?;
                ApiResponse::ok(to_json(p.rollback_to(user, arg(0), b.version_no)?))
            }
            Endpoint::OpenApp => ApiResponse::ok(to_json(p.app_shell(&format!("/internal/{}", arg(0)), Some(user))?)),
            Endpoint::RunApp => {
                let b = run_body(body)?;
                ApiResponse::ok(to_json(p.run_app(&format!("/internal/{}", arg(0)), Some(user), &b.params)?))
            }
            Endpoint::OpenPreview => ApiResponse::ok(to_json(p.app_shell(&format!("/preview/{}", arg(0)), Some(user))?)),
            Endpoint::RunPreview => {
                let b = run_body(body)?;
                ApiResponse::ok(to_json(p.run_app(&format!("/preview/{}", arg(0)), Some(user), &b.params)?))
            }
        })
    }
}
