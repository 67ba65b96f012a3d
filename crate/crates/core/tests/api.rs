use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use appforge::api::{router, spawn_server, ApiRequest, ApiResponse, Endpoint, Method, ResponseBody, Service, ENDPOINTS};
use appforge::demo::{self, memory_platform, token_for, BINITA_REQUIREMENTS, BINITA_V1, BINITA_V2};
use appforge::manifest::Ecosystem;
use appforge::workflow::verify_export;
use serde_json::{json, Value};

struct World {
    service: Service,
    binita_app: String,
    sirak_app: String,
    preview_token: String,
}

/// Binita's app is live; Sirak's first version is in review with Marina.
fn world() -> World {
    let (p, cast) = memory_platform().unwrap();
    let binita = demo::binita_scenario(&p, &cast).unwrap();
    let app = p.create_app(&cast.sirak, "Text Analysis Tool").unwrap();
    let rec = p
        .submit_version(&cast.sirak, &app.app_id, demo::SIRAK_V2, demo::SIRAK_REQUIREMENTS, Ecosystem::Pypi)
        .unwrap();
    let r = rec.version.version_ref();
    p.run_build_check(&r, &BTreeMap::new()).unwrap();
    let (_, preview) = p.assign_reviewer(&cast.sirak, &r, "marina").unwrap();
    World {
        service: Service::new(Arc::new(p)),
        binita_app: binita.app.app_id,
        sirak_app: app.app_id,
        preview_token: preview.preview_token.unwrap(),
    }
}

fn call(w: &World, user: Option<&str>, req: ApiRequest) -> ApiResponse {
    let req = match user {
        Some(u) => req.token(&token_for(u)),
        None => req,
    };
    w.service.handle(&req)
}

/// A representative request for every endpoint.
fn sample(w: &World, e: Endpoint) -> ApiRequest {
    let (method, _) = e.template();
    let b = &w.binita_app;
    let s1 = format!("{}.1", w.sirak_app);
    let path = match e {
        Endpoint::CreateApp | Endpoint::ListApps | Endpoint::ReviewQueue | Endpoint::Registry | Endpoint::Audit => e.path(&[]),
        Endpoint::RequestPackage => e.path(&[]),
        Endpoint::SubmitVersion | Endpoint::ListVersions | Endpoint::Rollback => e.path(&[b]),
        Endpoint::AssignReviewer | Endpoint::Review | Endpoint::RunVersion => e.path(&[&s1]),
        Endpoint::DecidePackage => e.path(&["pypi", "plotly"]),
        Endpoint::Scale | Endpoint::Retire | Endpoint::OpenApp | Endpoint::RunApp => e.path(&["spreadsheets-generator"]),
        Endpoint::OpenPreview | Endpoint::RunPreview => e.path(&[&w.preview_token]),
    };
    let req = ApiRequest::new(method, path);
    match e {
        Endpoint::CreateApp => req.json(json!({"title": "Bridge Inspections"})),
        Endpoint::SubmitVersion => req.parts(&[("notebook", BINITA_V2), ("manifest", BINITA_REQUIREMENTS)]),
        Endpoint::AssignReviewer => req.json(json!({"reviewer": "yaw"})),
        Endpoint::Review => req.json(json!({"action": "approve"})),
        Endpoint::RequestPackage => req.json(json!({"ecosystem": "pypi", "name": "plotly"})),
        Endpoint::DecidePackage => req.json(json!({"decision": "reject"})),
        Endpoint::Scale => req.json(json!({"replicas": 2})),
        Endpoint::Rollback => req.json(json!({"version_no": 1})),
        Endpoint::RunVersion | Endpoint::RunApp | Endpoint::RunPreview => req.json(json!({"params": {}})),
        _ => req,
    }
}

#[test]
fn every_endpoint_requires_a_token() {
    let w = world();
    for (_, template, e) in ENDPOINTS {
        let resp = call(&w, None, sample(&w, *e));
        assert_eq!(resp.status, 401, "{template} without a token");
        let resp = w.service.handle(&sample(&w, *e).token("not-a-real-token"));
        assert_eq!(resp.status, 401, "{template} with an unknown token");
    }
}

#[test]
fn role_matrix() {
    use Endpoint as E;
    // (endpoint, user, expected status). Each row runs against a fresh world.
    let rows: &[(Endpoint, &str, u16)] = &[
        (E::CreateApp, "binita", 200),
        (E::CreateApp, "marina", 403),
        (E::ListApps, "marina", 200),
        (E::SubmitVersion, "binita", 200),
        (E::SubmitVersion, "sirak", 403),
        (E::SubmitVersion, "security", 403),
        (E::ListVersions, "sirak", 200),
        (E::AssignReviewer, "binita", 403),
        (E::AssignReviewer, "sirak", 409),
        (E::Review, "marina", 200),
        (E::Review, "yaw", 403),
        (E::Review, "sirak", 403),
        (E::RunVersion, "marina", 200),
        (E::RunVersion, "sirak", 200),
        (E::RunVersion, "binita", 403),
        (E::ReviewQueue, "marina", 200),
        (E::RequestPackage, "binita", 200),
        (E::DecidePackage, "security", 404),
        (E::DecidePackage, "binita", 403),
        (E::Registry, "sirak", 200),
        (E::Audit, "ops", 200),
        (E::Audit, "binita", 403),
        (E::Scale, "ops", 200),
        (E::Scale, "binita", 403),
        (E::Retire, "binita", 200),
        (E::Retire, "sirak", 403),
        (E::Retire, "ops", 200),
        (E::Rollback, "binita", 409),
        (E::Rollback, "sirak", 403),
        (E::OpenApp, "marina", 200),
        (E::RunApp, "sirak", 200),
        (E::OpenPreview, "sirak", 200),
        (E::OpenPreview, "marina", 200),
        (E::OpenPreview, "binita", 403),
        (E::OpenPreview, "ops", 403),
        (E::RunPreview, "marina", 200),
        (E::RunPreview, "yaw", 403),
    ];
    for (e, user, want) in rows {
        let w = world();
        let resp = call(&w, Some(user), sample(&w, *e));
        assert_eq!(resp.status, *want, "{e:?} as {user}: {:?}", resp.body);
    }
    let covered: std::collections::BTreeSet<Endpoint> = rows.iter().map(|r| r.0).collect();
    assert_eq!(covered.len(), ENDPOINTS.len(), "every endpoint appears in the matrix");
}

#[test]
fn decisions_on_requested_packages() {
    let w = world();
    let resp = call(&w, Some("binita"), sample(&w, Endpoint::RequestPackage));
    assert_eq!(resp.json().unwrap()["status"], "pending");
    let resp = call(&w, Some("security"), sample(&w, Endpoint::DecidePackage));
    assert_eq!(resp.status, 200);
    assert_eq!(resp.json().unwrap()["status"], "rejected");
}

#[test]
fn malformed_requests() {
    let w = world();
    let unknown_field = ApiRequest::new(Method::Post, "/api/apps").json(json!({"title": "x", "colour": "red"}));
    assert_eq!(call(&w, Some("binita"), unknown_field).status, 400);
    let not_multipart = ApiRequest::new(Method::Post, format!("/api/apps/{}/versions", w.binita_app)).json(json!({}));
    assert_eq!(call(&w, Some("binita"), not_multipart).status, 400);
    let no_manifest = ApiRequest::new(Method::Post, format!("/api/apps/{}/versions", w.binita_app)).parts(&[("notebook", BINITA_V1)]);
    assert_eq!(call(&w, Some("binita"), no_manifest).status, 400);
    let bad_ref = ApiRequest::new(Method::Post, "/api/versions/nodot/run");
    assert_eq!(call(&w, Some("binita"), bad_ref).status, 400);
    let bad_from = ApiRequest::new(Method::Get, "/api/audit").query("from", "-1");
    assert_eq!(call(&w, Some("ops"), bad_from).status, 400);
    assert_eq!(call(&w, Some("binita"), ApiRequest::new(Method::Get, "/api/nothing")).status, 404);
    assert_eq!(call(&w, Some("binita"), ApiRequest::new(Method::Post, "/api/registry")).status, 405);
    let zero = ApiRequest::new(Method::Post, "/api/deployments/spreadsheets-generator/scale").json(json!({"replicas": 0}));
    assert_eq!(call(&w, Some("ops"), zero).status, 400);
}

#[test]
fn audit_reads_are_ndjson_and_resume_from_a_sequence_number() {
    let w = world();
    let all = call(&w, Some("ops"), ApiRequest::new(Method::Get, "/api/audit"));
    let ResponseBody::Text(text) = &all.body else { panic!("audit is text") };
    assert!(verify_export(text).ok);
    let total = text.lines().count();
    let tail = call(&w, Some("ops"), ApiRequest::new(Method::Get, "/api/audit").query("from", "5"));
    let ResponseBody::Text(tail) = &tail.body else { panic!() };
    let first: Value = serde_json::from_str(tail.lines().next().unwrap()).unwrap();
    assert_eq!(first["seq"], 5);
    assert_eq!(tail.lines().count(), total - 4);
}

#[test]
fn runs_never_echo_code_cells() {
    let w = world();
    let req = ApiRequest::new(Method::Post, "/internal/spreadsheets-generator/run").json(json!({"params": {"month": "4", "county_name": 22}}));
    let resp = call(&w, Some("sirak"), req);
    assert_eq!(resp.status, 200, "{:?}", resp.body);
    let body = resp.json().unwrap();
    assert_eq!(body["result"]["status"], "success");
    assert_eq!(body["purpose"], "live");
    let text = body.to_string();
    assert!(!text.contains("import pandas"));
}

// Over a real socket: the Binita walkthrough as HTTP calls, with the build
// check started by the service in the background.

struct Http {
    base: String,
    client: reqwest::blocking::Client,
}

impl Http {
    fn send(&self, user: &str, method: Method, path: &str, body: Option<Value>) -> (u16, Value) {
        let url = format!("{}{path}", self.base);
        let req = match method {
            Method::Get => self.client.get(url),
            Method::Post => self.client.post(url).json(&body.unwrap_or_else(|| json!({}))),
        };
        let resp = req.bearer_auth(token_for(user)).send().unwrap();
        let status = resp.status().as_u16();
        let text = resp.text().unwrap();
        (status, serde_json::from_str(&text).unwrap_or(Value::String(text)))
    }

    fn submit(&self, user: &str, app: &str, nb: &[u8], mf: &[u8]) -> (u16, Value) {
        let form = reqwest::blocking::multipart::Form::new()
            .part("notebook", reqwest::blocking::multipart::Part::bytes(nb.to_vec()).file_name("nb.ipynb"))
            .part("manifest", reqwest::blocking::multipart::Part::bytes(mf.to_vec()).file_name("requirements.txt"));
        let resp = self
            .client
            .post(format!("{}/api/apps/{app}/versions", self.base))
            .bearer_auth(token_for(user))
            .multipart(form)
            .send()
            .unwrap();
        (resp.status().as_u16(), resp.json().unwrap())
    }

    fn wait_for_state(&self, app: &str, n: u64, want: &str) {
        let started = Instant::now();
        loop {
            let (_, doc) = self.send("binita", Method::Get, &format!("/api/apps/{app}/versions"), None);
            let state = doc["versions"][(n - 1) as usize]["version"]["state"].clone();
            if state == want {
                return;
            }
            assert!(started.elapsed() < Duration::from_secs(10), "{app}.{n} stuck in {state}");
            std::thread::sleep(Duration::from_millis(20));
        }
    }
}

#[test]
fn binita_over_http() {
    let store = Arc::new(appforge::persist::MemoryStore::new());
    let (p, _cast) = demo::seeded_platform(store, 3).unwrap();
    let service = Service::new(Arc::new(p)).with_auto_build_check(true);
    let server = spawn_server("127.0.0.1:0", router(Arc::new(service))).unwrap();
    let h = Http {
        base: server.url(),
        client: reqwest::blocking::Client::new(),
    };

    let (status, app) = h.send("binita", Method::Post, "/api/apps", Some(json!({"title": "Spreadsheets Generator"})));
    assert_eq!(status, 200);
    let app = app["app_id"].as_str().unwrap().to_string();

    let (status, v1) = h.submit("binita", &app, BINITA_V1, BINITA_REQUIREMENTS);
    assert_eq!(status, 200);
    assert_eq!(v1["version"]["state"], "ValidationFailed");
    assert_eq!(v1["checks"]["manifest"]["violations"][0]["subject"], "spacy");

    h.send("binita", Method::Post, "/api/packages/requests", Some(json!({"ecosystem": "pypi", "name": "spacy"})));
    let (status, _) = h.send("security", Method::Post, "/api/packages/pypi/spacy/decision", Some(json!({"decision": "approve"})));
    assert_eq!(status, 200);

    let (_, v2) = h.submit("binita", &app, BINITA_V1, BINITA_REQUIREMENTS);
    assert_eq!(v2["version"]["state"], "Validated");
    h.wait_for_state(&app, 2, "SandboxPassed");

    let (status, assigned) = h.send("binita", Method::Post, &format!("/api/versions/{app}.2/assign-reviewer"), Some(json!({"reviewer": "yaw"})));
    assert_eq!(status, 200);
    let preview = assigned["preview"]["preview_token"].as_str().unwrap().to_string();
    let (status, shell) = h.send("yaw", Method::Get, &format!("/preview/{preview}"), None);
    assert_eq!(status, 200);
    assert_eq!(shell["schema"]["controls"].as_array().unwrap().len(), 2);
    let (_, queue) = h.send("yaw", Method::Get, "/api/reviews", None);
    assert_eq!(queue["versions"].as_array().unwrap().len(), 1);

    let (status, _) = h.send(
        "yaw",
        Method::Post,
        &format!("/api/versions/{app}.2/review"),
        Some(json!({"action": "request_changes", "comment": "Please clarify the chart title."})),
    );
    assert_eq!(status, 200);

    h.submit("binita", &app, BINITA_V2, BINITA_REQUIREMENTS);
    h.wait_for_state(&app, 3, "SandboxPassed");
    h.send("binita", Method::Post, &format!("/api/versions/{app}.3/assign-reviewer"), Some(json!({"reviewer": "yaw"})));
    let (_, outcome) = h.send("yaw", Method::Post, &format!("/api/versions/{app}.3/review"), Some(json!({"action": "approve"})));
    assert_eq!(outcome["version"]["version"]["state"], "Deployed");
    assert_eq!(outcome["deployment"]["url"], format!("{}/internal/spreadsheets-generator", demo::BASE_URL));

    let (status, run) = h.send(
        "sirak",
        Method::Post,
        "/internal/spreadsheets-generator/run",
        Some(json!({"params": {"month": 7, "county_name": "Loudoun"}})),
    );
    assert_eq!(status, 200);
    assert_eq!(run["result"]["status"], "success");

    let audit = h
        .client
        .get(format!("{}/api/audit", h.base))
        .bearer_auth(token_for("ops"))
        .send()
        .unwrap()
        .text()
        .unwrap();
    assert!(verify_export(&audit).ok);

    let (status, _) = h.send("ops", Method::Get, "/api/registry", None);
    assert_eq!(status, 200);
    let resp = h.client.delete(format!("{}/api/apps", h.base)).send().unwrap();
    assert_eq!(resp.status().as_u16(), 405);
}
