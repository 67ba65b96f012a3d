use std::fmt::Write;

use base64::Engine;
use serde_json::Value;

use super::CliError;

fn s(v: &Value) -> String {
    match v {
        Value::String(t) => t.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

pub(super) fn error(e: &CliError) -> String {
    match e {
        CliError::Usage(m) | CliError::Transport(m) => m.clone(),
        CliError::Rejected { status, body } => format!("{} ({status})", message(body)),
        CliError::BadRequest { body } => format!("{} (400)", message(body)),
    }
}

fn message(body: &Value) -> String {
    body.get("message").map(s).unwrap_or_else(|| s(body))
}

pub(super) fn app(d: &Value) -> String {
    format!("app {} \"{}\" owned by {}", s(&d["app_id"]), s(&d["title"]), s(&d["owner"]))
}

pub(super) fn apps(d: &Value) -> String {
    let mut out = String::new();
    for a in d["apps"].as_array().into_iter().flatten() {
        let latest = match a["latest_version"].as_u64() {
            Some(n) => format!("v{n} {}", s(&a["latest_state"])),
            None => "no versions".into(),
        };
        let _ = writeln!(out, "{}  {}  {latest}  {}", s(&a["app_id"]), s(&a["title"]), s(&a["url"]));
    }
    if out.is_empty() {
        out.push_str("no applications");
    }
    out
}

fn report_lines(out: &mut String, label: &str, report: &Value) {
    for v in report["violations"].as_array().into_iter().flatten() {
        let _ = writeln!(out, "  {label}: {}: {} ({})", s(&v["subject"]), s(&v["kind"]), s(&v["detail"]));
    }
}

pub(super) fn version(d: &Value) -> String {
    let v = &d["version"];
    let mut out = format!("{}.{} {}", s(&v["app_id"]), s(&v["version_no"]), s(&v["state"]));
    if let Some(r) = d["reviewer"].as_str() {
        let _ = write!(out, " (reviewer {r})");
    }
    out.push('\n');
    report_lines(&mut out, "manifest", &d["checks"]["manifest"]);
    report_lines(&mut out, "config", &d["checks"]["config"]);
    for e in d["checks"]["errors"].as_array().into_iter().flatten() {
        let _ = writeln!(out, "  error: {}", s(e));
    }
    for r in d["reviews"].as_array().into_iter().flatten() {
        let _ = writeln!(out, "  review by {}: {} {}", s(&r["reviewer"]), s(&r["action"]), s(&r["comment"]));
    }
    out
}

pub(super) fn versions(d: &Value) -> String {
    let list = d["versions"].as_array().cloned().unwrap_or_default();
    if list.is_empty() {
        return "no versions".into();
    }
    list.iter().map(version).collect()
}

pub(super) fn assignment(d: &Value) -> String {
    format!("{}preview: {}", version(&d["version"]), s(&d["preview"]["url"]))
}

pub(super) fn review(d: &Value) -> String {
    let mut out = version(&d["version"]);
    if let Some(url) = d["deployment"]["url"].as_str() {
        let _ = write!(out, "deployed at {url}");
    }
    out
}

pub(super) fn registry(d: &Value) -> String {
    let mut out = String::new();
    for p in d["packages"].as_array().into_iter().flatten() {
        let _ = writeln!(
            out,
            "{}/{}  {}  {}  by {}",
            s(&p["ecosystem"]),
            s(&p["normalized_name"]),
            s(&p["status"]),
            s(&p["allowed_versions"]),
            s(&p["decided_by"])
        );
    }
    if out.is_empty() {
        out.push_str("registry is empty");
    }
    out
}

pub(super) fn package(d: &Value) -> String {
    format!("{}/{} {} {}", s(&d["ecosystem"]), s(&d["normalized_name"]), s(&d["status"]), s(&d["allowed_versions"]))
}

pub(super) fn deployment(d: &Value) -> String {
    format!(
        "{}.{} {} x{} at {}",
        s(&d["app_id"]),
        s(&d["version_no"]),
        s(&d["status"]),
        s(&d["replicas"]),
        s(&d["url"])
    )
}

pub(super) fn run(d: &Value) -> String {
    let r = &d["result"];
    let v = &d["version"];
    let mut out = format!("{}.{} {} in {}s\n", s(&v["app_id"]), s(&v["version_no"]), s(&r["status"]), s(&r["wall_seconds"]));
    for o in r["outputs"].as_array().into_iter().flatten() {
        let payload = r["payloads"][s(&o["payload_ref"])].as_str().unwrap_or_default();
        let bytes = base64::engine::general_purpose::STANDARD.decode(payload).unwrap_or_default();
        match (o["mime_kind"].as_str(), std::str::from_utf8(&bytes)) {
            (Some("text"), Ok(text)) => out.push_str(text),
            _ => {
                let _ = writeln!(out, "[{} output, {} bytes]", s(&o["mime_kind"]), bytes.len());
            }
        }
    }
    for v in r["violations"].as_array().into_iter().flatten() {
        let _ = writeln!(out, "policy violation: {} {}", s(&v["kind"]), s(&v["detail"]));
    }
    out
}

pub(super) fn shell(d: &Value) -> String {
    let mut out = format!("{} v{} at {}\n", s(&d["title"]), s(&d["version_no"]), s(&d["url"]));
    for c in d["schema"]["controls"].as_array().into_iter().flatten() {
        let _ = writeln!(out, "  {} ({}): {}", s(&c["name"]), s(&c["kind"]), s(&c["label"]));
    }
    out
}
