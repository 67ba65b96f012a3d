//! Application and version lifecycle, peer review records, the content
//! store and the audit chain.

mod audit;
mod lifecycle;
mod store;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use audit::{
    export_lines, replay_states, verify_audit_chain, verify_export, verify_segment, AuditDraft,
    AuditEvent, AuditLog, ChainVerdict, ReplayMismatch, SYSTEM_ACTOR,
};
pub use lifecycle::{next_state, LifecycleEvent, LifecycleState};
pub use store::ContentStore;

use crate::hash::Digest;
use crate::manifest::Ecosystem;
use crate::report::ValidationReport;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Application {
    pub app_id: String,
    pub title: String,
    /// Frozen at first deploy.
    pub slug: Option<String>,
    pub owner: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VersionRef {
    pub app_id: String,
    pub version_no: u32,
}

impl VersionRef {
    pub fn new(app_id: impl Into<String>, version_no: u32) -> Self {
        VersionRef {
            app_id: app_id.into(),
            version_no,
        }
    }
}

/// Rendered as `{app_id}.{version_no}`, the id used in API paths.
impl fmt::Display for VersionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.app_id, self.version_no)
    }
}

impl FromStr for VersionRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (app, no) = s
            .rsplit_once('.')
            .ok_or_else(|| format!("version id {s:?} is not of the form app.n"))?;
        let version_no: u32 = no
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| format!("bad version number in {s:?}"))?;
        if app.is_empty() {
            return Err(format!("missing app id in {s:?}"));
        }
        Ok(VersionRef::new(app, version_no))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppVersion {
    pub app_id: String,
    pub version_no: u32,
    pub content_hash: Digest,
    pub notebook_ref: Digest,
    pub manifest_ref: Digest,
    pub ecosystem: Ecosystem,
    pub state: LifecycleState,
    pub submitted_by: String,
    pub submitted_at: DateTime<Utc>,
}

impl AppVersion {
    pub fn version_ref(&self) -> VersionRef {
        VersionRef::new(self.app_id.clone(), self.version_no)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewAction {
    Approve,
    RequestChanges,
    Reject,
}

impl ReviewAction {
    pub fn event(self) -> LifecycleEvent {
        match self {
            ReviewAction::Approve => LifecycleEvent::Approve,
            ReviewAction::RequestChanges => LifecycleEvent::ReviewRequestChanges,
            ReviewAction::Reject => LifecycleEvent::Reject,
        }
    }

    pub fn is_decisive(self) -> bool {
        !matches!(self, ReviewAction::RequestChanges)
    }
}

impl FromStr for ReviewAction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "approve" => Ok(ReviewAction::Approve),
            "request_changes" | "request-changes" => Ok(ReviewAction::RequestChanges),
            "reject" => Ok(ReviewAction::Reject),
            other => Err(format!("unknown review action {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub version: VersionRef,
    pub reviewer: String,
    pub action: ReviewAction,
    pub comment: String,
    pub at: DateTime<Utc>,
}

/// What the synchronous validation pipeline found at submit time.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SubmissionChecks {
    pub manifest: Option<ValidationReport>,
    pub config: Option<ValidationReport>,
    /// Parse failures that prevented a report from being produced.
    pub errors: Vec<String>,
}

impl SubmissionChecks {
    pub fn passed(&self) -> bool {
        self.errors.is_empty()
            && self.manifest.as_ref().is_some_and(ValidationReport::passed)
            && self.config.as_ref().is_some_and(ValidationReport::passed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionRecord {
    pub version: AppVersion,
    pub checks: SubmissionChecks,
    pub reviewer: Option<String>,
    pub reviews: Vec<ReviewRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WorkflowError {
    #[error("unknown application {0}")]
    UnknownApp(String),
    #[error("unknown version {0}")]
    UnknownVersion(String),
    #[error("forbidden: {0}")]
    Forbidden(String),
    #[error("illegal transition: {event} from {from}")]
    IllegalTransition {
        from: LifecycleState,
        event: LifecycleEvent,
    },
    #[error("{operation} is not allowed while the version is {state}")]
    WrongState {
        state: LifecycleState,
        operation: String,
    },
    #[error("authors cannot review their own versions")]
    SelfReview,
    #[error("{0} is not the assigned reviewer")]
    NotAssignedReviewer(String),
    #[error("version {0} was never approved")]
    NeverApproved(String),
}
