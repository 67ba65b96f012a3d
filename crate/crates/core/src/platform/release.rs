use std::collections::BTreeSet;

use serde::Serialize;

use super::state::Tx;
use super::{Platform, PlatformError, Result, UserRecord};
use crate::deploy::{make_slug, stable_url, Deployment, DeploymentStatus};
use crate::notebook::{extract_app_config, generate_widget_schema, parse_notebook, WidgetSchema};
use crate::workflow::{AuditDraft, LifecycleEvent, LifecycleState, VersionRef, WorkflowError};

/// What `GET /internal/{slug}` and `GET /preview/{token}` serve: enough
/// to render the form, and nothing of the notebook's code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppShell {
    pub app_id: String,
    pub title: String,
    pub version_no: u32,
    pub url: String,
    pub preview: bool,
    pub schema: WidgetSchema,
}

enum Route<'p> {
    Stable(&'p str),
    Preview(&'p str),
}

fn route<'p>(base_url: &str, path: &'p str) -> Result<Route<'p>> {
    let path = path.strip_prefix(base_url.trim_end_matches('/')).unwrap_or(path);
    let path = path.trim_end_matches('/');
    if let Some(slug) = path.strip_prefix("/internal/").filter(|s| !s.is_empty() && !s.contains('/')) {
        Ok(Route::Stable(slug))
    } else if let Some(token) = path.strip_prefix("/preview/").filter(|s| !s.is_empty() && !s.contains('/')) {
        Ok(Route::Preview(token))
    } else {
        Err(PlatformError::Invalid(format!("{path:?} is not an /internal/ or /preview/ path")))
    }
}

impl Platform {
    /// Deploy an approved version. Admin only; approvals deploy
    /// automatically as the system actor when so configured.
    pub fn deploy(&self, user: &UserRecord, r: &VersionRef) -> Result<Deployment> {
        if !user.is_admin() {
            return Err(PlatformError::forbidden("manual deploys require the admin role"));
        }
        self.deploy_as(&user.user_id, r)
    }

    pub(super) fn deploy_as(&self, actor: &str, r: &VersionRef) -> Result<Deployment> {
        let instance = self.random_hex(6);
        self.write(|tx| {
            let state = tx.version(r)?.version.state;
            if state != LifecycleState::Approved {
                return Err(WorkflowError::WrongState {
                    state,
                    operation: "deploy".into(),
                }
                .into());
            }
            activate(tx, &self.config.base_url, r, LifecycleEvent::Deploy, actor, instance)
        })
    }

    /// Point the app's slug back at an earlier release.
    pub fn rollback_to(&self, user: &UserRecord, app_id: &str, version_no: u32) -> Result<Deployment> {
        let instance = self.random_hex(6);
        self.write(|tx| {
            let app = tx.app(app_id).ok_or_else(|| WorkflowError::UnknownApp(app_id.to_string()))?;
            if app.owner != user.user_id && !user.is_admin() {
                return Err(PlatformError::forbidden("only the owner or an admin may roll back"));
            }
            let r = VersionRef::new(app_id, version_no);
            let state = tx.version(&r)?.version.state;
            let wrong = |operation: &str| -> PlatformError {
                WorkflowError::WrongState {
                    state,
                    operation: operation.into(),
                }
                .into()
            };
            match state {
                LifecycleState::Superseded => {
                    activate(tx, &self.config.base_url, &r, LifecycleEvent::Rollback, &user.user_id, instance)
                }
                LifecycleState::Approved => {
                    tx.audit(
                        AuditDraft::new(&user.user_id, "rollback")
                            .app(app_id)
                            .detail(format!("to version {version_no}")),
                    );
                    activate(tx, &self.config.base_url, &r, LifecycleEvent::Deploy, &user.user_id, instance)
                }
                LifecycleState::Deployed => Err(wrong("rollback to the live version")),
                LifecycleState::Retired => Err(wrong("rollback to a retired version")),
                _ => Err(WorkflowError::NeverApproved(r.to_string()).into()),
            }
        })
    }

    /// Change the replica count of a live deployment. Admin only.
    pub fn scale(&self, user: &UserRecord, slug: &str, replicas: u32) -> Result<Deployment> {
        if replicas == 0 {
            return Err(PlatformError::Invalid("replicas must be at least 1".into()));
        }
        self.write(|tx| {
            let (index, mut dep) = live(tx, slug)?;
            if !user.is_admin() {
                return Err(PlatformError::forbidden("scaling requires the admin role"));
            }
            let before = dep.replicas;
            dep.replicas = replicas;
            tx.put_deployment(index, dep.clone());
            tx.audit(
                AuditDraft::new(&user.user_id, "scale")
                    .version(&dep.app_id, dep.version_no)
                    .detail(format!("{slug}: {before} -> {replicas} replicas")),
            );
            Ok(dep)
        })
    }

    /// Take a deployment offline. Owner or admin.
    pub fn retire(&self, user: &UserRecord, slug: &str) -> Result<Deployment> {
        self.write(|tx| {
            let (index, mut dep) = live(tx, slug)?;
            let owner = tx.app(&dep.app_id).map(|a| a.owner);
            if owner.as_deref() != Some(user.user_id.as_str()) && !user.is_admin() {
                return Err(PlatformError::forbidden("only the owner or an admin may retire"));
            }
            dep.status = DeploymentStatus::Retired;
            tx.put_deployment(index, dep.clone());
            tx.transition(&dep.version_ref(), LifecycleEvent::Retire, &user.user_id, Some(slug.to_string()))?;
            Ok(dep)
        })
    }

    /// Map an `/internal/{slug}` or `/preview/{token}` path (optionally
    /// prefixed with the base URL) to the deployment serving it.
    pub fn resolve(&self, path: &str, user: Option<&UserRecord>) -> Result<Deployment> {
        let user = user.ok_or(PlatformError::Unauthenticated)?;
        let route = route(&self.config.base_url, path)?;
        self.read(|s| match route {
            Route::Stable(slug) => s
                .active_for_slug(slug)
                .map(|i| s.deployments[i].clone())
                .ok_or_else(|| PlatformError::UnknownSlug(path.to_string())),
            Route::Preview(token) => {
                let dep = s
                    .deployments
                    .iter()
                    .find(|d| d.is_active() && d.preview_token.as_deref() == Some(token))
                    .ok_or_else(|| PlatformError::UnknownSlug(path.to_string()))?;
                let rec = s.version(&dep.version_ref()).expect("deployment references a stored version");
                if rec.version.submitted_by != user.user_id && rec.reviewer.as_deref() != Some(&user.user_id) {
                    return Err(PlatformError::forbidden("previews are limited to the author and the assigned reviewer"));
                }
                Ok(dep.clone())
            }
        })
    }

    pub fn app_shell(&self, path: &str, user: Option<&UserRecord>) -> Result<AppShell> {
        let dep = self.resolve(path, user)?;
        let (title, notebook) = self.read(|s| {
            let rec = s.version(&dep.version_ref()).expect("deployment references a stored version");
            let nb = s.content.get(&rec.version.notebook_ref).expect("stored notebook").to_vec();
            (s.apps[&dep.app_id].title.clone(), nb)
        });
        let cfg = extract_app_config(&parse_notebook(&notebook)?)?;
        Ok(AppShell {
            app_id: dep.app_id.clone(),
            title,
            version_no: dep.version_no,
            url: dep.url.clone(),
            preview: dep.is_preview(),
            schema: generate_widget_schema(&cfg)?,
        })
    }
}

fn live(tx: &Tx, slug: &str) -> Result<(usize, Deployment)> {
    tx.deployments()
        .into_iter()
        .find(|(_, d)| d.is_active() && !d.is_preview() && d.slug.as_deref() == Some(slug))
        .ok_or_else(|| PlatformError::UnknownSlug(slug.to_string()))
}

/// Make `r` the live version behind its app's slug: freeze the slug on
/// first use, supersede whatever was live, and record the new deployment.
fn activate(
    tx: &mut Tx,
    base_url: &str,
    r: &VersionRef,
    event: LifecycleEvent,
    actor: &str,
    instance: String,
) -> Result<Deployment> {
    let mut app = tx.app(&r.app_id).ok_or_else(|| WorkflowError::UnknownApp(r.app_id.clone()))?;
    let slug = match app.slug.clone() {
        Some(slug) => slug,
        None => {
            let taken: BTreeSet<String> = tx
                .base
                .apps
                .values()
                .filter_map(|a| a.slug.clone())
                .collect();
            let slug = make_slug(&app.title, &taken)?;
            app.slug = Some(slug.clone());
            tx.put_app(app.clone());
            slug
        }
    };

    let mut replicas = 1;
    if let Ok((index, mut prev)) = live(tx, &slug) {
        if prev.app_id != r.app_id {
            return Err(PlatformError::SlugConflict(slug));
        }
        replicas = prev.replicas;
        prev.status = DeploymentStatus::Superseded;
        tx.put_deployment(index, prev.clone());
        let prev_ref = prev.version_ref();
        if tx.version(&prev_ref)?.version.state == LifecycleState::Deployed {
            tx.transition(&prev_ref, LifecycleEvent::Supersede, actor, Some(format!("by version {}", r.version_no)))?;
        }
    }

    let dep = Deployment {
        slug: Some(slug.clone()),
        app_id: r.app_id.clone(),
        version_no: r.version_no,
        url: stable_url(base_url, &slug),
        replicas,
        status: DeploymentStatus::Active,
        preview_token: None,
        created_at: tx.at,
        instance_id: format!("{slug}-{instance}"),
    };
    let index = tx.deployment_count();
    tx.put_deployment(index, dep.clone());
    tx.transition(r, event, actor, Some(dep.url.clone()))?;
    Ok(dep)
}
