use std::collections::BTreeMap;
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use super::runner::{Runner, RunnerError};
use super::wire::{
    decode_payload, parse_result, to_canonical, ExecutionRequest, ExecutionResult, MimeKind,
    RunStatus, INLINE_PAYLOAD_LIMIT, PROTOCOL_VERSION,
};
use super::SandboxError;
use crate::hash::Digest;
use crate::notebook::parse_notebook;

/// Extra time the orchestrator waits past `max_wall_seconds` before it
/// declares a timeout on its own.
pub const BACKSTOP_GRACE: Duration = Duration::from_secs(2);

/// Shortest code-cell source the hidden-code scan looks for.
const MIN_SCANNED_SOURCE: usize = 8;

/// A checked result plus the payload bytes it references, ready to be
/// moved into the content store.
#[derive(Debug, Clone, PartialEq)]
pub struct Dispatched {
    pub result: ExecutionResult,
    pub payloads: BTreeMap<Digest, Vec<u8>>,
}

/// Send one request to a runner and check what comes back.
///
/// Runner failures that happen after the runner was reached become result
/// values (`timeout`, `error`); only an unreachable runner or a document
/// that breaks the protocol is an `Err`.
pub fn dispatch(request: &ExecutionRequest, runner: Arc<dyn Runner>) -> Result<Dispatched, SandboxError> {
    request.policy.validate()?;
    let descriptor = runner.descriptor();
    if descriptor.protocol_version != PROTOCOL_VERSION {
        return Err(SandboxError::Protocol(format!(
            "runner {} speaks protocol {}, need {PROTOCOL_VERSION}",
            descriptor.name, descriptor.protocol_version
        )));
    }

    let limit = Duration::from_secs_f64(request.policy.max_wall_seconds);
    let backstop = limit + BACKSTOP_GRACE;
    let doc = to_canonical(request);
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let _ = tx.send(runner.exchange(&doc, backstop));
    });

    let id = request.request_id.as_str();
    let reply = match rx.recv_timeout(backstop) {
        Ok(reply) => reply,
        Err(_) => {
            return Ok(terminal(id, RunStatus::Timeout, "orchestrator backstop: no result before the wall-clock limit", backstop))
        }
    };
    let bytes = match reply {
        Ok(bytes) => bytes,
        Err(RunnerError::Unavailable(why)) => return Err(SandboxError::RunnerUnavailable(why)),
        Err(RunnerError::TimedOut) => {
            return Ok(terminal(id, RunStatus::Timeout, "runner killed at the wall-clock limit", backstop))
        }
        Err(e @ RunnerError::Exited { .. }) => {
            return Ok(terminal(id, RunStatus::Error, &format!("undeclared runner exit: {e}"), Duration::ZERO))
        }
    };

    let mut result = parse_result(&bytes).map_err(|e| SandboxError::Protocol(e.to_string()))?;
    if result.request_id != request.request_id {
        return Err(SandboxError::Protocol(format!(
            "result is for request {:?}, expected {:?}",
            result.request_id, request.request_id
        )));
    }
    let violating = result.status == RunStatus::PolicyViolation;
    if violating == result.violations.is_empty() {
        return Err(SandboxError::Protocol(
            "violations must be reported exactly when status is policy_violation".into(),
        ));
    }
    if !result.wall_seconds.is_finite() || result.wall_seconds < 0.0 {
        return Err(SandboxError::Protocol("wall_seconds must be a non-negative number".into()));
    }

    let mut payloads = BTreeMap::new();
    for (digest, text) in std::mem::take(&mut result.payloads) {
        let bytes = decode_payload(&text)
            .ok_or_else(|| SandboxError::Protocol(format!("payload {digest} is not base64")))?;
        if Digest::of(&bytes) != digest {
            return Err(SandboxError::Protocol(format!("payload {digest} does not match its address")));
        }
        payloads.insert(digest, bytes);
    }
    for out in &mut result.outputs {
        let bytes = payloads
            .get(&out.payload_ref)
            .ok_or_else(|| SandboxError::Protocol(format!("output references missing payload {}", out.payload_ref)))?;
        if bytes.len() > INLINE_PAYLOAD_LIMIT {
            out.mime_kind = MimeKind::File;
        }
    }
    payloads.retain(|d, _| result.outputs.iter().any(|o| o.payload_ref == *d));

    if result.status == RunStatus::Success {
        if let Some(cell) = leaked_cell(&request.notebook, &result, &payloads) {
            result.status = RunStatus::Error;
            result.outputs.clear();
            payloads.clear();
            result.log = format!("output exposed the source of code cell {cell}; outputs discarded");
        }
    }

    if result.wall_seconds > backstop.as_secs_f64() {
        result.status = RunStatus::Timeout;
    }
    Ok(Dispatched { result, payloads })
}

fn terminal(id: &str, status: RunStatus, log: &str, wall: Duration) -> Dispatched {
    Dispatched {
        result: ExecutionResult::without_payloads(id, status, log, wall.as_secs_f64()),
        payloads: BTreeMap::new(),
    }
}

fn leaked_cell(notebook: &str, result: &ExecutionResult, payloads: &BTreeMap<Digest, Vec<u8>>) -> Option<usize> {
    let nb = parse_notebook(notebook.as_bytes()).ok()?;
    let sources: Vec<(usize, &str)> = nb
        .code_cells()
        .map(|(i, c)| (i, c.source.trim()))
        .filter(|(_, s)| s.len() >= MIN_SCANNED_SOURCE)
        .collect();
    for out in &result.outputs {
        let text = String::from_utf8_lossy(&payloads[&out.payload_ref]);
        if let Some((i, _)) = sources.iter().find(|(_, s)| text.contains(s)) {
            return Some(*i);
        }
    }
    None
}
