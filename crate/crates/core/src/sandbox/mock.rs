use std::fmt::Write as _;

use super::wire::{
    ExecutionRequest, ExecutionResult, MimeKind, PolicyViolation, RunStatus, ViolationCategory,
};
use crate::notebook::{parse_notebook, read_bindings, PARAMETERS_TAG};

pub const DIRECTIVE_NETWORK: &str = "#!sandbox:network";
pub const DIRECTIVE_SLEEP: &str = "#!sandbox:sleep";
pub const DIRECTIVE_ERROR: &str = "#!sandbox:error";

/// Deterministic stand-in for a real runner.
///
/// Emits one text output per author code cell listing the cell index and
/// the sorted parameter bindings. Cells containing a `#!sandbox:` directive
/// simulate a network violation, a timeout or a runtime error; execution
/// stops at the first such cell.
pub fn mock_run(request: &ExecutionRequest) -> ExecutionResult {
    let id = &request.request_id;
    let nb = match parse_notebook(request.notebook.as_bytes()) {
        Ok(nb) => nb,
        Err(e) => return ExecutionResult::without_payloads(id, RunStatus::Error, format!("mock runner: {e}"), 0.0),
    };
    let bindings = nb
        .cells
        .iter()
        .find(|c| c.has_tag(PARAMETERS_TAG))
        .map(read_bindings)
        .unwrap_or_default();

    let mut result = ExecutionResult::without_payloads(id, RunStatus::Success, "", 0.0);
    let mut executed = 0usize;
    for (index, cell) in nb.code_cells().filter(|(_, c)| !c.has_tag(PARAMETERS_TAG)) {
        executed += 1;
        let step = |n: usize| n as f64 * 0.25;
        if cell.source.contains(DIRECTIVE_NETWORK) {
            result.status = RunStatus::PolicyViolation;
            result.violations.push(PolicyViolation {
                kind: ViolationCategory::Network,
                detail: format!("cell {index} attempted an outbound connection outside the allowlist"),
            });
            result.log = format!("mock runner: blocked network access in cell {index}");
            result.wall_seconds = step(executed);
            return result;
        }
        if cell.source.contains(DIRECTIVE_SLEEP) {
            result.status = RunStatus::Timeout;
            result.log = format!("mock runner: cell {index} exceeded the wall-clock limit");
            result.wall_seconds = request.policy.max_wall_seconds;
            return result;
        }
        if cell.source.contains(DIRECTIVE_ERROR) {
            result.status = RunStatus::Error;
            result.log = format!("mock runner: cell {index} raised an error");
            result.wall_seconds = step(executed);
            return result;
        }
        let mut text = format!("cell {index}\n");
        for (name, value) in &bindings {
            let _ = writeln!(text, "{name}={value}");
        }
        result.push_output(index, MimeKind::Text, text.as_bytes());
        result.wall_seconds = step(executed);
    }
    result.log = format!("mock runner: executed {executed} code cells");
    result
}
