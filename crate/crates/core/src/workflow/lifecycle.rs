use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Where a version sits in the submission pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LifecycleState {
    Submitted,
    ValidationFailed,
    Validated,
    SandboxRunning,
    SandboxFailed,
    SandboxPassed,
    InReview,
    ChangesRequested,
    Rejected,
    Approved,
    Deployed,
    Superseded,
    Retired,
}

impl LifecycleState {
    pub const ALL: [LifecycleState; 13] = [
        LifecycleState::Submitted,
        LifecycleState::ValidationFailed,
        LifecycleState::Validated,
        LifecycleState::SandboxRunning,
        LifecycleState::SandboxFailed,
        LifecycleState::SandboxPassed,
        LifecycleState::InReview,
        LifecycleState::ChangesRequested,
        LifecycleState::Rejected,
        LifecycleState::Approved,
        LifecycleState::Deployed,
        LifecycleState::Superseded,
        LifecycleState::Retired,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LifecycleState::Submitted => "Submitted",
            LifecycleState::ValidationFailed => "ValidationFailed",
            LifecycleState::Validated => "Validated",
            LifecycleState::SandboxRunning => "SandboxRunning",
            LifecycleState::SandboxFailed => "SandboxFailed",
            LifecycleState::SandboxPassed => "SandboxPassed",
            LifecycleState::InReview => "InReview",
            LifecycleState::ChangesRequested => "ChangesRequested",
            LifecycleState::Rejected => "Rejected",
            LifecycleState::Approved => "Approved",
            LifecycleState::Deployed => "Deployed",
            LifecycleState::Superseded => "Superseded",
            LifecycleState::Retired => "Retired",
        }
    }

    /// True once the version has cleared dependency and config validation.
    pub fn passed_validation(self) -> bool {
        !matches!(self, LifecycleState::Submitted | LifecycleState::ValidationFailed)
    }

    /// No further transitions for this version; a new version restarts the pipeline.
    pub fn is_terminal(self) -> bool {
        LifecycleEvent::ALL.iter().all(|e| next_state(self, *e).is_none())
    }

    /// Whether this version ever reached Approved.
    pub fn was_approved(self) -> bool {
        matches!(
            self,
            LifecycleState::Approved
                | LifecycleState::Deployed
                | LifecycleState::Superseded
                | LifecycleState::Retired
        )
    }
}

impl fmt::Display for LifecycleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LifecycleState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| format!("unknown lifecycle state {s:?}"))
    }
}

/// Events that move a version between states. The serialized names double
/// as audit actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LifecycleEvent {
    Validate,
    ValidationFail,
    SandboxStart,
    SandboxPass,
    SandboxFail,
    AssignReviewer,
    Approve,
    ReviewRequestChanges,
    Reject,
    Deploy,
    Supersede,
    Rollback,
    Retire,
}

impl LifecycleEvent {
    pub const ALL: [LifecycleEvent; 13] = [
        LifecycleEvent::Validate,
        LifecycleEvent::ValidationFail,
        LifecycleEvent::SandboxStart,
        LifecycleEvent::SandboxPass,
        LifecycleEvent::SandboxFail,
        LifecycleEvent::AssignReviewer,
        LifecycleEvent::Approve,
        LifecycleEvent::ReviewRequestChanges,
        LifecycleEvent::Reject,
        LifecycleEvent::Deploy,
        LifecycleEvent::Supersede,
        LifecycleEvent::Rollback,
        LifecycleEvent::Retire,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LifecycleEvent::Validate => "validate",
            LifecycleEvent::ValidationFail => "validation_fail",
            LifecycleEvent::SandboxStart => "sandbox_start",
            LifecycleEvent::SandboxPass => "sandbox_pass",
            LifecycleEvent::SandboxFail => "sandbox_fail",
            LifecycleEvent::AssignReviewer => "assign_reviewer",
            LifecycleEvent::Approve => "approve",
            LifecycleEvent::ReviewRequestChanges => "review_request_changes",
            LifecycleEvent::Reject => "reject",
            LifecycleEvent::Deploy => "deploy",
            LifecycleEvent::Supersede => "supersede",
            LifecycleEvent::Rollback => "rollback",
            LifecycleEvent::Retire => "retire",
        }
    }

    /// Pipeline events fired by the platform itself rather than a person.
    pub fn is_system_event(self) -> bool {
        matches!(
            self,
            LifecycleEvent::Validate
                | LifecycleEvent::ValidationFail
                | LifecycleEvent::SandboxStart
                | LifecycleEvent::SandboxPass
                | LifecycleEvent::SandboxFail
        )
    }
}

impl fmt::Display for LifecycleEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LifecycleEvent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| format!("unknown lifecycle event {s:?}"))
    }
}

/// The transition table.
pub fn next_state(from: LifecycleState, event: LifecycleEvent) -> Option<LifecycleState> {
    use LifecycleEvent as E;
    use LifecycleState as S;
    Some(match (from, event) {
        (S::Submitted, E::Validate) => S::Validated,
        (S::Submitted, E::ValidationFail) => S::ValidationFailed,
        (S::Validated, E::SandboxStart) => S::SandboxRunning,
        (S::SandboxRunning, E::SandboxPass) => S::SandboxPassed,
        (S::SandboxRunning, E::SandboxFail) => S::SandboxFailed,
        (S::SandboxPassed, E::AssignReviewer) => S::InReview,
        (S::InReview, E::Approve) => S::Approved,
        (S::InReview, E::ReviewRequestChanges) => S::ChangesRequested,
        (S::InReview, E::Reject) => S::Rejected,
        (S::Approved, E::Deploy) => S::Deployed,
        (S::Deployed, E::Supersede) => S::Superseded,
        (S::Deployed, E::Retire) => S::Retired,
        // Restoring an earlier release repoints the slug back to it.
        (S::Superseded, E::Rollback) => S::Deployed,
        _ => return None,
    })
}
