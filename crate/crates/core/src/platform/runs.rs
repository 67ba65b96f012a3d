use std::collections::BTreeMap;

use serde::Serialize;

use super::state::ExecutionRecord;
use super::{Platform, PlatformError, Record, Result, UserRecord};
use crate::hash::Digest;
use crate::manifest::parse_manifest;
use crate::notebook::{bind_parameters, extract_app_config, parse_notebook, AppConfig, ParamValue, WidgetKind};
use crate::sandbox::{dispatch, encode_payload, ExecutionRequest, ExecutionResult, Purpose, RunStatus};
use crate::workflow::{AuditDraft, LifecycleEvent, LifecycleState, VersionRef, WorkflowError, SYSTEM_ACTOR};

/// A finished run with its payloads attached, as shown to whoever asked
/// for it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub version: VersionRef,
    pub purpose: Purpose,
    /// The version's state after the run; build checks move it.
    pub state: LifecycleState,
    pub result: ExecutionResult,
}

/// Values for a build check: whatever the caller gave, then declared
/// defaults, then a representative value for each remaining input.
pub fn sample_values(cfg: &AppConfig, given: &BTreeMap<String, ParamValue>) -> BTreeMap<String, ParamValue> {
    let mut values = given.clone();
    for input in &cfg.inputs {
        if values.contains_key(&input.name) || input.default.is_some() {
            continue;
        }
        let sample = match input.widget {
            WidgetKind::Text => ParamValue::Text(String::new()),
            WidgetKind::Dropdown => match input.choices.first() {
                Some(c) => ParamValue::Text(c.clone()),
                None => continue,
            },
            WidgetKind::Slider => ParamValue::Number(input.min.unwrap_or(0.0)),
            WidgetKind::File => ParamValue::Text(Digest::of(b"").to_hex()),
        };
        values.insert(input.name.clone(), sample);
    }
    values
}

/// Line values up with the declared widget kinds. Clients that cannot
/// see the schema send `7` for a text input or `"7"` for a slider; both
/// are taken at face value here and checked by binding.
pub fn coerce_values(cfg: &AppConfig, values: &BTreeMap<String, ParamValue>) -> BTreeMap<String, ParamValue> {
    values
        .iter()
        .map(|(name, value)| {
            let widget = cfg.input(name).map(|i| i.widget);
            let value = match (widget, value) {
                (Some(WidgetKind::Slider), ParamValue::Text(t)) => match t.trim().parse::<f64>() {
                    Ok(n) => ParamValue::Number(n),
                    Err(_) => value.clone(),
                },
                (Some(WidgetKind::Text | WidgetKind::Dropdown | WidgetKind::File), ParamValue::Number(_)) => {
                    ParamValue::Text(value.to_string())
                }
                _ => value.clone(),
            };
            (name.clone(), value)
        })
        .collect()
}

fn wrong_state(state: LifecycleState, operation: &str) -> PlatformError {
    WorkflowError::WrongState {
        state,
        operation: operation.into(),
    }
    .into()
}

impl Platform {
    /// Bind parameters into the stored notebook and wrap it in a wire
    /// request under the app's effective policy.
    pub fn build_execution_request(
        &self,
        r: &VersionRef,
        params: &BTreeMap<String, ParamValue>,
        purpose: Purpose,
    ) -> Result<ExecutionRequest> {
        let (state, notebook, manifest, ecosystem) = self.read(|s| {
            let rec = s.version(r).ok_or_else(|| WorkflowError::UnknownVersion(r.to_string()))?;
            let get = |d: &Digest| s.content.get(d).expect("stored content").to_vec();
            Ok::<_, PlatformError>((
                rec.version.state,
                get(&rec.version.notebook_ref),
                get(&rec.version.manifest_ref),
                rec.version.ecosystem,
            ))
        })?;
        if !state.passed_validation() {
            return Err(wrong_state(state, "run"));
        }
        let nb = parse_notebook(&notebook)?;
        let cfg = extract_app_config(&nb)?;
        let params = coerce_values(&cfg, params);
        let values = match purpose {
            Purpose::BuildCheck => sample_values(&cfg, &params),
            Purpose::Preview | Purpose::Live => params,
        };
        let bound = bind_parameters(&nb, &values, &cfg)?;
        let manifest = parse_manifest(&manifest, ecosystem.as_str())?;
        Ok(ExecutionRequest {
            request_id: format!("run-{}", self.random_hex(6)),
            version: r.clone(),
            notebook: String::from_utf8(bound.to_ipynb()).expect("notebook JSON is UTF-8"),
            manifest: manifest.normalized_names(),
            policy: self.effective_policy(&r.app_id)?,
            purpose,
        })
    }

    /// Execute a validated version once in the sandbox and record the
    /// verdict as `SandboxPassed` or `SandboxFailed`.
    ///
    /// If the runner cannot be reached or breaks the protocol the version
    /// is failed and the error is returned as well.
    pub fn run_build_check(&self, r: &VersionRef, params: &BTreeMap<String, ParamValue>) -> Result<RunOutcome> {
        let request = self.build_execution_request(r, params, Purpose::BuildCheck)?;
        self.write(|tx| {
            let state = tx.version(r)?.version.state;
            if state != LifecycleState::Validated {
                return Err(wrong_state(state, "build_check"));
            }
            tx.transition(r, LifecycleEvent::SandboxStart, SYSTEM_ACTOR, Some(request.request_id.clone()))?;
            Ok(())
        })?;

        let dispatched = dispatch(&request, self.runner.clone());
        self.write(|tx| {
            let state = tx.version(r)?.version.state;
            if state != LifecycleState::SandboxRunning {
                return Err(wrong_state(state, "finish build_check"));
            }
            match &dispatched {
                Ok(d) => {
                    let event = if d.result.status == RunStatus::Success {
                        LifecycleEvent::SandboxPass
                    } else {
                        LifecycleEvent::SandboxFail
                    };
                    record_execution(tx, &request, SYSTEM_ACTOR, &d.result, &d.payloads);
                    let detail = format!("{} {}", request.request_id, status_name(d.result.status));
                    tx.transition(r, event, SYSTEM_ACTOR, Some(detail))?;
                }
                Err(e) => {
                    tx.transition(r, LifecycleEvent::SandboxFail, SYSTEM_ACTOR, Some(e.to_string()))?;
                }
            }
            Ok(())
        })?;
        let d = dispatched?;
        Ok(RunOutcome {
            version: r.clone(),
            purpose: Purpose::BuildCheck,
            state: self.version(r)?.version.state,
            result: with_payloads(d.result, &d.payloads),
        })
    }

    /// Run a version on behalf of a user. A `Validated` version gets its
    /// build check (owner or admin); later versions get a preview run
    /// (owner, assigned reviewer or admin).
    pub fn run_version(&self, user: &UserRecord, r: &VersionRef, params: &BTreeMap<String, ParamValue>) -> Result<RunOutcome> {
        let rec = self.version(r)?;
        let owner = self.app(&r.app_id)?.owner == user.user_id;
        let reviewer = rec.reviewer.as_deref() == Some(user.user_id.as_str());
        match rec.version.state {
            LifecycleState::Validated => {
                if !owner && !user.is_admin() {
                    return Err(PlatformError::forbidden("only the owner or an admin may start a build check"));
                }
                self.run_build_check(r, params)
            }
            LifecycleState::SandboxPassed
            | LifecycleState::InReview
            | LifecycleState::Approved
            | LifecycleState::Deployed
            | LifecycleState::Superseded => {
                if !owner && !reviewer && !user.is_admin() {
                    return Err(PlatformError::forbidden("only the owner, the reviewer or an admin may run this version"));
                }
                self.execute(&user.user_id, r, params, Purpose::Preview)
            }
            state => Err(wrong_state(state, "run")),
        }
    }

    /// Run a deployed app through its stable or preview path.
    pub fn run_app(&self, path: &str, user: Option<&UserRecord>, params: &BTreeMap<String, ParamValue>) -> Result<RunOutcome> {
        let dep = self.resolve(path, user)?;
        let user = user.expect("resolve requires a user");
        let purpose = if dep.is_preview() { Purpose::Preview } else { Purpose::Live };
        self.execute(&user.user_id, &dep.version_ref(), params, purpose)
    }

    fn execute(&self, actor: &str, r: &VersionRef, params: &BTreeMap<String, ParamValue>, purpose: Purpose) -> Result<RunOutcome> {
        let request = self.build_execution_request(r, params, purpose)?;
        let d = dispatch(&request, self.runner.clone())?;
        let state = self.write(|tx| {
            record_execution(tx, &request, actor, &d.result, &d.payloads);
            Ok(tx.version(r)?.version.state)
        })?;
        Ok(RunOutcome {
            version: r.clone(),
            purpose,
            state,
            result: with_payloads(d.result, &d.payloads),
        })
    }
}

fn status_name(status: RunStatus) -> &'static str {
    match status {
        RunStatus::Success => "success",
        RunStatus::Error => "error",
        RunStatus::PolicyViolation => "policy_violation",
        RunStatus::Timeout => "timeout",
    }
}

fn record_execution(
    tx: &mut super::state::Tx,
    request: &ExecutionRequest,
    actor: &str,
    result: &ExecutionResult,
    payloads: &BTreeMap<Digest, Vec<u8>>,
) {
    for bytes in payloads.values() {
        tx.put_blob(bytes);
    }
    let r = &request.version;
    tx.push(Record::Execution(Box::new(ExecutionRecord {
        request_id: request.request_id.clone(),
        version: r.clone(),
        purpose: request.purpose,
        actor: actor.to_string(),
        at: tx.at,
        result: result.clone(),
    })));
    let purpose = serde_json::to_value(request.purpose).expect("purpose serializes");
    tx.audit(
        AuditDraft::new(actor, "run")
            .version(&r.app_id, r.version_no)
            .detail(format!("{} {} {}", request.request_id, purpose.as_str().unwrap_or(""), status_name(result.status))),
    );
}

fn with_payloads(mut result: ExecutionResult, payloads: &BTreeMap<Digest, Vec<u8>>) -> ExecutionResult {
    result.payloads = payloads.iter().map(|(d, b)| (*d, encode_payload(b))).collect();
    result
}
