//! Platform state and the records that change it.
//!
//! State is only ever modified by applying records from committed batches,
//! both live and during recovery, so a recovered platform is exactly the
//! one that crashed minus its uncommitted work.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::users::UserRecord;
use crate::deploy::Deployment;
use crate::hash::Digest;
use crate::manifest::{PackageRegistry, PackageRegistryEntry};
use crate::sandbox::{decode_payload, encode_payload, ExecutionResult, PolicyOverride, Purpose};
use crate::workflow::{
    next_state, Application, AuditDraft, AuditEvent, AuditLog, ContentStore, LifecycleEvent,
    LifecycleState, VersionRecord, VersionRef, WorkflowError,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionRecord {
    pub request_id: String,
    pub version: VersionRef,
    pub purpose: Purpose,
    pub actor: String,
    pub at: DateTime<Utc>,
    /// Payloads live in the content store, referenced by the outputs.
    pub result: ExecutionResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    User(UserRecord),
    Blob { data: String },
    App(Application),
    Version(Box<VersionRecord>),
    Registry { index: usize, row: PackageRegistryEntry },
    Deployment { index: usize, deployment: Deployment },
    Execution(Box<ExecutionRecord>),
    PolicyOverride { app_id: String, policy: PolicyOverride },
    Audit(AuditEvent),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub records: Vec<Record>,
}

#[derive(Debug, Clone, Default)]
pub struct State {
    pub users: BTreeMap<String, UserRecord>,
    pub content: ContentStore,
    pub apps: BTreeMap<String, Application>,
    pub versions: BTreeMap<String, Vec<VersionRecord>>,
    pub registry: PackageRegistry,
    pub deployments: Vec<Deployment>,
    pub executions: Vec<ExecutionRecord>,
    pub overrides: BTreeMap<String, PolicyOverride>,
    pub audit: AuditLog,
}

impl State {
    pub fn apply(&mut self, record: Record) -> Result<(), String> {
        match record {
            Record::User(u) => {
                self.users.insert(u.user_id.clone(), u);
            }
            Record::Blob { data } => {
                let bytes = decode_payload(&data).ok_or("blob is not base64")?;
                self.content.put(bytes);
            }
            Record::App(app) => {
                self.apps.insert(app.app_id.clone(), app);
            }
            Record::Version(rec) => {
                let v = &rec.version;
                if !self.apps.contains_key(&v.app_id) {
                    return Err(format!("version of unknown app {}", v.app_id));
                }
                if !self.content.contains(&v.notebook_ref) || !self.content.contains(&v.manifest_ref) {
                    return Err(format!("version {} references missing content", v.version_ref()));
                }
                let list = self.versions.entry(v.app_id.clone()).or_default();
                let slot = v.version_no as usize;
                if slot == list.len() + 1 {
                    list.push(*rec);
                } else if (1..=list.len()).contains(&slot) {
                    list[slot - 1] = *rec;
                } else {
                    return Err(format!("version number {slot} leaves a gap"));
                }
            }
            Record::Registry { index, row } => {
                if index > self.registry.history().len() {
                    return Err(format!("registry row {index} leaves a gap"));
                }
                self.registry.put(index, row);
            }
            Record::Deployment { index, deployment } => {
                if index == self.deployments.len() {
                    self.deployments.push(deployment);
                } else if index < self.deployments.len() {
                    self.deployments[index] = deployment;
                } else {
                    return Err(format!("deployment {index} leaves a gap"));
                }
            }
            Record::Execution(rec) => self.executions.push(*rec),
            Record::PolicyOverride { app_id, policy } => {
                self.overrides.insert(app_id, policy);
            }
            Record::Audit(event) => {
                self.audit
                    .push_sealed(event)
                    .map_err(|e| format!("audit event {} does not extend the chain", e.seq))?;
            }
        }
        Ok(())
    }

    pub fn version(&self, r: &VersionRef) -> Option<&VersionRecord> {
        self.versions.get(&r.app_id)?.get((r.version_no as usize).checked_sub(1)?)
    }

    /// Index of the live, non-preview deployment serving `slug`.
    pub fn active_for_slug(&self, slug: &str) -> Option<usize> {
        self.deployments
            .iter()
            .position(|d| d.is_active() && !d.is_preview() && d.slug.as_deref() == Some(slug))
    }
}

/// Work in progress for one batch: staged copies of whatever the operation
/// touched, the records to persist and the audit events, already sealed
/// onto the current chain head.
pub struct Tx<'a> {
    pub base: &'a State,
    pub at: DateTime<Utc>,
    records: Vec<Record>,
    versions: BTreeMap<VersionRef, VersionRecord>,
    deployments: BTreeMap<usize, Deployment>,
    apps: BTreeMap<String, Application>,
    registry_len: usize,
    seq: u64,
    head: Digest,
}

impl<'a> Tx<'a> {
    pub fn new(base: &'a State, at: DateTime<Utc>) -> Self {
        Tx {
            base,
            at,
            records: Vec::new(),
            versions: BTreeMap::new(),
            deployments: BTreeMap::new(),
            apps: BTreeMap::new(),
            registry_len: base.registry.history().len(),
            seq: base.audit.next_seq(),
            head: base.audit.head(),
        }
    }

    pub fn into_batch(self) -> Batch {
        Batch { records: self.records }
    }

    pub fn audit(&mut self, draft: AuditDraft) -> AuditEvent {
        let event = draft.seal(self.seq, self.head, self.at);
        self.seq += 1;
        self.head = event.event_hash;
        self.records.push(Record::Audit(event.clone()));
        event
    }

    pub fn put_blob(&mut self, bytes: &[u8]) -> Digest {
        let digest = Digest::of(bytes);
        if !self.base.content.contains(&digest) {
            self.records.push(Record::Blob { data: encode_payload(bytes) });
        }
        digest
    }

    pub fn push(&mut self, record: Record) {
        self.records.push(record);
    }

    pub fn app(&self, app_id: &str) -> Option<Application> {
        self.apps.get(app_id).or_else(|| self.base.apps.get(app_id)).cloned()
    }

    pub fn put_app(&mut self, app: Application) {
        self.apps.insert(app.app_id.clone(), app.clone());
        self.records.push(Record::App(app));
    }

    pub fn version(&self, r: &VersionRef) -> Result<VersionRecord, WorkflowError> {
        self.versions
            .get(r)
            .or_else(|| self.base.version(r))
            .cloned()
            .ok_or_else(|| WorkflowError::UnknownVersion(r.to_string()))
    }

    pub fn put_version(&mut self, rec: VersionRecord) {
        self.versions.insert(rec.version.version_ref(), rec.clone());
        self.records.push(Record::Version(Box::new(rec)));
    }

    pub fn deployment(&self, index: usize) -> Deployment {
        self.deployments
            .get(&index)
            .cloned()
            .unwrap_or_else(|| self.base.deployments[index].clone())
    }

    pub fn deployment_count(&self) -> usize {
        self.deployments
            .keys()
            .next_back()
            .map_or(0, |k| k + 1)
            .max(self.base.deployments.len())
    }

    /// All deployments as this batch would leave them.
    pub fn deployments(&self) -> Vec<(usize, Deployment)> {
        (0..self.deployment_count()).map(|i| (i, self.deployment(i))).collect()
    }

    pub fn put_deployment(&mut self, index: usize, deployment: Deployment) {
        self.deployments.insert(index, deployment.clone());
        self.records.push(Record::Deployment { index, deployment });
    }

    pub fn put_registry(&mut self, index: usize, row: PackageRegistryEntry) {
        if index == self.registry_len {
            self.registry_len += 1;
        }
        self.records.push(Record::Registry { index, row });
    }

    pub fn registry_len(&self) -> usize {
        self.registry_len
    }

    /// Move a version along the transition table and log it.
    pub fn transition(
        &mut self,
        r: &VersionRef,
        event: LifecycleEvent,
        actor: &str,
        detail: Option<String>,
    ) -> Result<LifecycleState, WorkflowError> {
        let mut rec = self.version(r)?;
        let from = rec.version.state;
        let to = next_state(from, event).ok_or(WorkflowError::IllegalTransition { from, event })?;
        rec.version.state = to;
        self.put_version(rec);
        let mut draft = AuditDraft::new(actor, event.as_str())
            .version(&r.app_id, r.version_no)
            .states(Some(from), to);
        if let Some(d) = detail {
            draft = draft.detail(d);
        }
        self.audit(draft);
        Ok(to)
    }
}
