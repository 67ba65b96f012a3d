use std::collections::BTreeSet;

use super::state::Tx;
use super::{Platform, PlatformError, Result, Role, UserRecord};
use crate::deploy::{make_slug, preview_url, Deployment, DeploymentStatus};
use crate::hash::content_hash;
use crate::manifest::{parse_manifest, Ecosystem};
use crate::notebook::{extract_app_config, generate_widget_schema, parse_notebook, validate_app_config};
use crate::report::ValidationReport;
use crate::workflow::{
    AppVersion, Application, AuditDraft, LifecycleEvent, LifecycleState, ReviewAction, ReviewRecord,
    SubmissionChecks, VersionRecord, VersionRef, WorkflowError, SYSTEM_ACTOR,
};

/// Outcome of a review, including the deployment an approval triggered.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct ReviewOutcome {
    pub version: VersionRecord,
    pub deployment: Option<Deployment>,
}

/// Run both submission checks. Parse failures are recorded rather than
/// returned: a submission that cannot be parsed is still a submission.
pub(super) fn run_checks(tx: &Tx, notebook: &[u8], manifest: &[u8], ecosystem: Ecosystem) -> SubmissionChecks {
    let mut checks = SubmissionChecks::default();
    match parse_manifest(manifest, ecosystem.as_str()) {
        Ok(m) => checks.manifest = Some(tx.base.registry.validate(&m)),
        Err(e) => checks.errors.push(format!("manifest: {e}")),
    }
    let config = parse_notebook(notebook).and_then(|nb| extract_app_config(&nb));
    match config {
        Ok(cfg) => {
            let report = validate_app_config(&cfg);
            if report.passed() {
                if let Err(e) = generate_widget_schema(&cfg) {
                    checks.errors.push(format!("notebook: {e}"));
                }
            }
            checks.config = Some(report);
        }
        Err(e) => checks.errors.push(format!("notebook: {e}")),
    }
    checks
}

fn summarize(checks: &SubmissionChecks) -> String {
    let reports: [&Option<ValidationReport>; 2] = [&checks.manifest, &checks.config];
    let mut parts: Vec<String> = reports
        .into_iter()
        .flatten()
        .flat_map(|r| &r.violations)
        .map(|v| format!("{}: {}", v.subject, serde_json::to_value(v.kind).unwrap().as_str().unwrap_or("")))
        .collect();
    parts.extend(checks.errors.iter().cloned());
    parts.join("; ")
}

impl Platform {
    /// Any author may create an application; they become its owner.
    pub fn create_app(&self, user: &UserRecord, title: &str) -> Result<Application> {
        if !user.has_role(Role::Author) {
            return Err(PlatformError::forbidden("creating applications requires the author role"));
        }
        let title = title.trim();
        make_slug(title, &BTreeSet::new())?;
        let app_id = format!("app-{}", self.random_hex(4));
        self.write(|tx| {
            if tx.app(&app_id).is_some() {
                return Err(PlatformError::Invalid("application id collision, retry".into()));
            }
            let app = Application {
                app_id: app_id.clone(),
                title: title.to_string(),
                slug: None,
                owner: user.user_id.clone(),
                created_at: tx.at,
            };
            tx.put_app(app.clone());
            tx.audit(AuditDraft::new(&user.user_id, "app_create").app(&app_id).detail(title));
            Ok(app)
        })
    }

    /// Store a new version and validate it synchronously. The returned
    /// record is in `Validated` or `ValidationFailed`.
    pub fn submit_version(
        &self,
        user: &UserRecord,
        app_id: &str,
        notebook: &[u8],
        manifest: &[u8],
        ecosystem: Ecosystem,
    ) -> Result<VersionRecord> {
        self.write(|tx| {
            let app = tx.app(app_id).ok_or_else(|| WorkflowError::UnknownApp(app_id.to_string()))?;
            if app.owner != user.user_id {
                return Err(PlatformError::forbidden("only the owner may submit versions"));
            }
            let version_no = tx.base.versions.get(app_id).map_or(0, Vec::len) as u32 + 1;
            let notebook_ref = tx.put_blob(notebook);
            let manifest_ref = tx.put_blob(manifest);
            let checks = run_checks(tx, notebook, manifest, ecosystem);
            let passed = checks.passed();
            let detail = summarize(&checks);
            let rec = VersionRecord {
                version: AppVersion {
                    app_id: app_id.to_string(),
                    version_no,
                    content_hash: content_hash(notebook, manifest),
                    notebook_ref,
                    manifest_ref,
                    ecosystem,
                    state: LifecycleState::Submitted,
                    submitted_by: user.user_id.clone(),
                    submitted_at: tx.at,
                },
                checks,
                reviewer: None,
                reviews: Vec::new(),
            };
            tx.put_version(rec.clone());
            tx.audit(
                AuditDraft::new(&user.user_id, "submit")
                    .version(app_id, version_no)
                    .states(None, LifecycleState::Submitted)
                    .detail(rec.version.content_hash.to_hex()),
            );
            let r = rec.version.version_ref();
            if passed {
                tx.transition(&r, LifecycleEvent::Validate, SYSTEM_ACTOR, None)?;
            } else {
                tx.transition(&r, LifecycleEvent::ValidationFail, SYSTEM_ACTOR, Some(detail))?;
            }
            Ok(tx.version(&r)?)
        })
    }

    /// Fire a pipeline event as the system actor. Only the automated
    /// events (validation and sandbox outcomes) can be driven this way;
    /// the rest have dedicated operations with their own preconditions.
    pub fn system_transition(&self, r: &VersionRef, event: LifecycleEvent) -> Result<LifecycleState> {
        if !event.is_system_event() {
            return Err(PlatformError::forbidden(format!("{event} is not a system pipeline event")));
        }
        self.write(|tx| Ok(tx.transition(r, event, SYSTEM_ACTOR, None)?))
    }

    /// Bind a reviewer and open the private preview. The owner or an admin
    /// chooses the reviewer, who must hold the reviewer role and must not be
    /// the author.
    pub fn assign_reviewer(&self, user: &UserRecord, r: &VersionRef, reviewer_id: &str) -> Result<(VersionRecord, Deployment)> {
        let token = self.preview_token();
        let instance = self.random_hex(6);
        self.write(|tx| {
            let rec = tx.version(r)?;
            let app = tx.app(&r.app_id).ok_or_else(|| WorkflowError::UnknownApp(r.app_id.clone()))?;
            if app.owner != user.user_id && !user.is_admin() {
                return Err(PlatformError::forbidden("only the owner or an admin may assign reviewers"));
            }
            let reviewer = tx
                .base
                .users
                .get(reviewer_id)
                .filter(|u| !u.revoked)
                .ok_or_else(|| PlatformError::UnknownUser(reviewer_id.to_string()))?;
            if reviewer_id == rec.version.submitted_by {
                return Err(WorkflowError::SelfReview.into());
            }
            if !reviewer.has_role(Role::Reviewer) {
                return Err(PlatformError::forbidden(format!("{reviewer_id} does not hold the reviewer role")));
            }
            if rec.version.state != LifecycleState::SandboxPassed {
                return Err(WorkflowError::WrongState {
                    state: rec.version.state,
                    operation: "assign_reviewer".into(),
                }
                .into());
            }
            tx.transition(r, LifecycleEvent::AssignReviewer, &user.user_id, Some(reviewer_id.to_string()))?;
            let mut rec = tx.version(r)?;
            rec.reviewer = Some(reviewer_id.to_string());
            tx.put_version(rec.clone());
            let preview = open_preview(tx, &self.config.base_url, r, token, instance, &user.user_id);
            Ok((rec, preview))
        })
    }

    /// Open an additional preview for a version under review.
    pub fn preview_deploy(&self, user: &UserRecord, r: &VersionRef) -> Result<Deployment> {
        let token = self.preview_token();
        let instance = self.random_hex(6);
        self.write(|tx| {
            let rec = tx.version(r)?;
            let allowed = rec.version.submitted_by == user.user_id
                || rec.reviewer.as_deref() == Some(&user.user_id)
                || user.is_admin();
            if !allowed {
                return Err(PlatformError::forbidden("previews are limited to the author and the assigned reviewer"));
            }
            if !matches!(rec.version.state, LifecycleState::SandboxPassed | LifecycleState::InReview) {
                return Err(WorkflowError::WrongState {
                    state: rec.version.state,
                    operation: "preview_deploy".into(),
                }
                .into());
            }
            Ok(open_preview(tx, &self.config.base_url, r, token, instance, &user.user_id))
        })
    }

    /// Record the assigned reviewer's verdict. An approval is followed, in
    /// its own batch, by an automatic deploy when the platform is set up
    /// for it.
    pub fn record_review(&self, user: &UserRecord, r: &VersionRef, action: ReviewAction, comment: &str) -> Result<ReviewOutcome> {
        let version = self.write(|tx| {
            let rec = tx.version(r)?;
            if rec.version.state != LifecycleState::InReview {
                return Err(WorkflowError::WrongState {
                    state: rec.version.state,
                    operation: "review".into(),
                }
                .into());
            }
            if rec.reviewer.as_deref() != Some(user.user_id.as_str()) {
                return Err(WorkflowError::NotAssignedReviewer(user.user_id.clone()).into());
            }
            tx.transition(r, action.event(), &user.user_id, Some(comment.to_string()).filter(|c| !c.is_empty()))?;
            let mut rec = tx.version(r)?;
            rec.reviews.push(ReviewRecord {
                version: r.clone(),
                reviewer: user.user_id.clone(),
                action,
                comment: comment.to_string(),
                at: tx.at,
            });
            tx.put_version(rec.clone());
            retire_previews(tx, r, SYSTEM_ACTOR);
            Ok(rec)
        })?;
        if action == ReviewAction::Approve && self.config.auto_deploy {
            let deployment = self.deploy_as(SYSTEM_ACTOR, r)?;
            return Ok(ReviewOutcome {
                version: self.version(r)?,
                deployment: Some(deployment),
            });
        }
        Ok(ReviewOutcome { version, deployment: None })
    }
}

fn open_preview(tx: &mut Tx, base_url: &str, r: &VersionRef, token: String, instance: String, actor: &str) -> Deployment {
    let dep = Deployment {
        slug: None,
        app_id: r.app_id.clone(),
        version_no: r.version_no,
        url: preview_url(base_url, &token),
        replicas: 1,
        status: DeploymentStatus::Active,
        preview_token: Some(token),
        created_at: tx.at,
        instance_id: format!("preview-{instance}"),
    };
    let index = tx.deployment_count();
    tx.put_deployment(index, dep.clone());
    tx.audit(AuditDraft::new(actor, "preview_deploy").version(&r.app_id, r.version_no));
    dep
}

fn retire_previews(tx: &mut Tx, r: &VersionRef, actor: &str) {
    let open: Vec<(usize, Deployment)> = tx
        .deployments()
        .into_iter()
        .filter(|(_, d)| d.is_preview() && d.is_active() && d.app_id == r.app_id && d.version_no == r.version_no)
        .collect();
    for (index, mut d) in open {
        d.status = DeploymentStatus::Retired;
        tx.put_deployment(index, d);
        tx.audit(AuditDraft::new(actor, "preview_retire").version(&r.app_id, r.version_no));
    }
}
