use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportStatus {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    // Manifest against registry.
    NotInRegistry,
    PendingApproval,
    Rejected,
    VersionOutsideRange,
    // App-config input rules.
    EmptyTitle,
    DuplicateInput,
    InvalidInputName,
    EmptyChoices,
    DefaultNotInChoices,
    InvalidRange,
    InvalidStep,
    DefaultOutOfRange,
    InvalidDefault,
    FileDefault,
    MisplacedParameter,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Package name for manifest checks, input name (or `title`) for config checks.
    pub subject: String,
    pub kind: ViolationKind,
    pub detail: String,
}

/// Outcome of a validation pass. `status` is `pass` exactly when there are
/// no violations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub status: ReportStatus,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn from_violations(violations: Vec<Violation>) -> Self {
        let status = if violations.is_empty() {
            ReportStatus::Pass
        } else {
            ReportStatus::Fail
        };
        ValidationReport { status, violations }
    }

    pub fn pass() -> Self {
        Self::from_violations(Vec::new())
    }

    pub fn passed(&self) -> bool {
        self.status == ReportStatus::Pass
    }
}

impl Default for ValidationReport {
    fn default() -> Self {
        Self::pass()
    }
}
