//! The platform facade: every workflow, registry, sandbox and deployment
//! operation, with role checks, persisted through atomic batches.

mod packages;
mod release;
mod runs;
mod state;
mod submissions;
mod users;

use std::collections::BTreeMap;
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub use runs::{coerce_values, sample_values, RunOutcome};
pub use release::AppShell;
pub use submissions::ReviewOutcome;
pub use state::{Batch, ExecutionRecord, Record, State};
pub use users::{find_by_token, hash_token, Role, UserRecord};

use state::Tx;

use crate::clock::{truncate_micros, Clock, SystemClock};
use crate::deploy::{Deployment, SlugError};
use crate::hash::Digest;
use crate::manifest::{ManifestError, PackageRegistryEntry};
use crate::notebook::NotebookError;
use crate::persist::{BatchStore, StorageError};
use crate::sandbox::{MockRunner, PolicyOverride, Runner, SandboxError, SandboxPolicy};
use crate::workflow::{
    replay_states, verify_audit_chain, Application, AuditDraft, AuditEvent, ChainVerdict,
    LifecycleState, VersionRecord, VersionRef, WorkflowError, SYSTEM_ACTOR,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlatformError {
    #[error("authentication required")]
    Unauthenticated,
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Notebook(#[from] NotebookError),
    #[error(transparent)]
    Sandbox(#[from] SandboxError),
    #[error(transparent)]
    Slug(#[from] SlugError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error("unknown user {0}")]
    UnknownUser(String),
    #[error("no live deployment at {0}")]
    UnknownSlug(String),
    #[error("slug {0} is already serving another application")]
    SlugConflict(String),
    #[error("user {0} already exists")]
    UserExists(String),
    #[error("invalid request: {0}")]
    Invalid(String),
}

/// Coarse classes of failure, shared by the HTTP mapping and CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    BadRequest,
    Unauthenticated,
    Forbidden,
    NotFound,
    Conflict,
    Unavailable,
    Internal,
}

impl PlatformError {
    pub fn forbidden(why: impl Into<String>) -> Self {
        PlatformError::Workflow(WorkflowError::Forbidden(why.into()))
    }

    pub fn kind(&self) -> ErrorKind {
        use ErrorKind as K;
        match self {
            PlatformError::Unauthenticated => K::Unauthenticated,
            PlatformError::Workflow(e) => match e {
                WorkflowError::UnknownApp(_) | WorkflowError::UnknownVersion(_) => K::NotFound,
                WorkflowError::Forbidden(_) | WorkflowError::NotAssignedReviewer(_) => K::Forbidden,
                WorkflowError::IllegalTransition { .. }
                | WorkflowError::WrongState { .. }
                | WorkflowError::SelfReview
                | WorkflowError::NeverApproved(_) => K::Conflict,
            },
            PlatformError::Manifest(e) => match e {
                ManifestError::AlreadyApproved(_)
                | ManifestError::AlreadyPending(_)
                | ManifestError::NotPending(_) => K::Conflict,
                ManifestError::UnknownPackage(_) => K::NotFound,
                ManifestError::Forbidden(_) => K::Forbidden,
                _ => K::BadRequest,
            },
            PlatformError::Notebook(_) | PlatformError::Slug(_) | PlatformError::Invalid(_) => K::BadRequest,
            PlatformError::Sandbox(e) => match e {
                SandboxError::InvalidPolicy(_) | SandboxError::PolicyWidening(_) => K::BadRequest,
                SandboxError::RunnerUnavailable(_) | SandboxError::Protocol(_) => K::Unavailable,
            },
            PlatformError::Storage(_) => K::Internal,
            PlatformError::UnknownUser(_) | PlatformError::UnknownSlug(_) => K::NotFound,
            PlatformError::SlugConflict(_) | PlatformError::UserExists(_) => K::Conflict,
        }
    }
}

pub type Result<T, E = PlatformError> = std::result::Result<T, E>;

#[derive(Debug, Clone)]
pub struct PlatformConfig {
    pub base_url: String,
    pub default_policy: SandboxPolicy,
    /// Deploy as the system actor as soon as a version is approved.
    pub auto_deploy: bool,
    /// Seed for ids and preview tokens. `None` draws from the OS.
    pub seed: Option<u64>,
}

impl Default for PlatformConfig {
    fn default() -> Self {
        PlatformConfig {
            base_url: "https://apps.department.gov".into(),
            default_policy: SandboxPolicy::default(),
            auto_deploy: true,
            seed: None,
        }
    }
}

/// Fields for a new account. The token is hashed before it is stored.
#[derive(Debug, Clone)]
pub struct NewUser {
    pub user_id: String,
    pub display_name: String,
    pub roles: Vec<Role>,
    pub token: String,
}

impl NewUser {
    pub fn new(user_id: &str, roles: &[Role], token: &str) -> Self {
        NewUser {
            user_id: user_id.to_string(),
            display_name: user_id.to_string(),
            roles: roles.to_vec(),
            token: token.to_string(),
        }
    }
}

/// Application plus the state of its newest version and where it is served.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct AppSummary {
    #[serde(flatten)]
    pub app: Application,
    pub latest_version: Option<u32>,
    pub latest_state: Option<LifecycleState>,
    pub url: Option<String>,
}

pub struct Platform {
    state: RwLock<State>,
    store: Arc<dyn BatchStore>,
    clock: Arc<dyn Clock>,
    runner: Arc<dyn Runner>,
    rng: Mutex<StdRng>,
    config: PlatformConfig,
}

impl Platform {
    /// Rebuild the platform from every batch the store holds.
    pub fn open(store: Arc<dyn BatchStore>, config: PlatformConfig) -> Result<Self> {
        let mut state = State::default();
        for (n, frame) in store.load()?.into_iter().enumerate() {
            let batch: Batch = serde_json::from_slice(&frame)
                .map_err(|e| StorageError(format!("batch {}: {e}", n + 1)))?;
            for record in batch.records {
                state
                    .apply(record)
                    .map_err(|e| StorageError(format!("batch {}: {e}", n + 1)))?;
            }
        }
        let rng = match config.seed {
            Some(seed) => StdRng::seed_from_u64(seed ^ state.audit.next_seq()),
            None => StdRng::from_os_rng(),
        };
        Ok(Platform {
            state: RwLock::new(state),
            store,
            clock: Arc::new(SystemClock),
            runner: Arc::new(MockRunner),
            rng: Mutex::new(rng),
            config,
        })
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_runner(mut self, runner: Arc<dyn Runner>) -> Self {
        self.runner = runner;
        self
    }

    pub fn config(&self) -> &PlatformConfig {
        &self.config
    }

    fn random_hex(&self, bytes: usize) -> String {
        let mut rng = self.rng.lock();
        (0..bytes).map(|_| format!("{:02x}", rng.random::<u8>())).collect()
    }

    fn preview_token(&self) -> String {
        crate::deploy::new_preview_token(&mut *self.rng.lock())
    }

    /// Run `f` against a staging transaction and commit what it produced as
    /// one batch. Nothing is applied if `f` fails or the commit fails.
    fn write<T>(&self, f: impl FnOnce(&mut Tx) -> Result<T>) -> Result<T> {
        let mut state = self.state.write();
        let at = truncate_micros(self.clock.now());
        let (value, batch) = {
            let mut tx = Tx::new(&state, at);
            let value = f(&mut tx)?;
            (value, tx.into_batch())
        };
        if !batch.records.is_empty() {
            let bytes = serde_json::to_vec(&batch).expect("batch serializes");
            self.store.commit(&bytes)?;
            for record in batch.records {
                state.apply(record).expect("a staged record applies to the state it was staged against");
            }
        }
        Ok(value)
    }

    fn read<T>(&self, f: impl FnOnce(&State) -> T) -> T {
        f(&self.state.read())
    }

    // ---- users ----

    /// Operator-level account creation; not exposed over HTTP.
    pub fn register_user(&self, new: NewUser) -> Result<UserRecord> {
        if new.user_id.trim().is_empty() || new.user_id == SYSTEM_ACTOR {
            return Err(PlatformError::Invalid(format!("user id {:?} is reserved or empty", new.user_id)));
        }
        if new.token.len() < 8 {
            return Err(PlatformError::Invalid("tokens must be at least 8 characters".into()));
        }
        self.write(|tx| {
            if tx.base.users.contains_key(&new.user_id) {
                return Err(PlatformError::UserExists(new.user_id.clone()));
            }
            let user = UserRecord {
                user_id: new.user_id.clone(),
                display_name: new.display_name.clone(),
                roles: new.roles.iter().copied().collect(),
                token_hash: hash_token(&new.token),
                revoked: false,
            };
            tx.push(Record::User(user.clone()));
            let roles: Vec<&str> = user.roles.iter().map(|r| r.as_str()).collect();
            tx.audit(AuditDraft::new(SYSTEM_ACTOR, "user_register").detail(format!("{} [{}]", user.user_id, roles.join(","))));
            Ok(user)
        })
    }

    pub fn revoke_user(&self, user_id: &str) -> Result<UserRecord> {
        self.write(|tx| {
            let mut user = tx
                .base
                .users
                .get(user_id)
                .cloned()
                .ok_or_else(|| PlatformError::UnknownUser(user_id.to_string()))?;
            user.revoked = true;
            tx.push(Record::User(user.clone()));
            tx.audit(AuditDraft::new(SYSTEM_ACTOR, "user_revoke").detail(user_id));
            Ok(user)
        })
    }

    pub fn authenticate(&self, token: Option<&str>) -> Result<UserRecord> {
        let token = token.filter(|t| !t.is_empty()).ok_or(PlatformError::Unauthenticated)?;
        self.read(|s| find_by_token(s.users.values(), token).cloned())
            .ok_or(PlatformError::Unauthenticated)
    }

    pub fn user(&self, user_id: &str) -> Option<UserRecord> {
        self.read(|s| s.users.get(user_id).cloned())
    }

    // ---- reads ----

    pub fn apps(&self) -> Vec<AppSummary> {
        self.read(|s| {
            let mut apps: Vec<&Application> = s.apps.values().collect();
            apps.sort_by(|a, b| (a.created_at, &a.app_id).cmp(&(b.created_at, &b.app_id)));
            apps.into_iter()
                .map(|app| {
                    let latest = s.versions.get(&app.app_id).and_then(|v| v.last());
                    let url = app
                        .slug
                        .as_deref()
                        .filter(|slug| s.active_for_slug(slug).is_some())
                        .map(|slug| crate::deploy::stable_url(&self.config.base_url, slug));
                    AppSummary {
                        app: app.clone(),
                        latest_version: latest.map(|v| v.version.version_no),
                        latest_state: latest.map(|v| v.version.state),
                        url,
                    }
                })
                .collect()
        })
    }

    pub fn app(&self, app_id: &str) -> Result<Application> {
        self.read(|s| s.apps.get(app_id).cloned())
            .ok_or_else(|| WorkflowError::UnknownApp(app_id.to_string()).into())
    }

    pub fn version(&self, r: &VersionRef) -> Result<VersionRecord> {
        self.read(|s| s.version(r).cloned())
            .ok_or_else(|| WorkflowError::UnknownVersion(r.to_string()).into())
    }

    /// Every version of an app, oldest first.
    pub fn version_history(&self, app_id: &str) -> Result<Vec<VersionRecord>> {
        self.read(|s| {
            if !s.apps.contains_key(app_id) {
                return Err(WorkflowError::UnknownApp(app_id.to_string()).into());
            }
            Ok(s.versions.get(app_id).cloned().unwrap_or_default())
        })
    }

    /// Versions waiting on `user`'s review.
    pub fn review_queue(&self, user: &UserRecord) -> Vec<VersionRecord> {
        self.read(|s| {
            s.versions
                .values()
                .flatten()
                .filter(|v| v.version.state == LifecycleState::InReview && v.reviewer.as_deref() == Some(&user.user_id))
                .cloned()
                .collect()
        })
    }

    pub fn registry_rows(&self) -> Vec<PackageRegistryEntry> {
        self.read(|s| s.registry.current_rows())
    }

    pub fn registry_tsv(&self) -> String {
        self.read(|s| s.registry.export_tsv())
    }

    pub fn deployments(&self) -> Vec<Deployment> {
        self.read(|s| s.deployments.clone())
    }

    pub fn executions(&self, r: &VersionRef) -> Vec<ExecutionRecord> {
        self.read(|s| s.executions.iter().filter(|e| &e.version == r).cloned().collect())
    }

    pub fn blob(&self, digest: &Digest) -> Option<Vec<u8>> {
        self.read(|s| s.content.get(digest).map(<[u8]>::to_vec))
    }

    /// Events with `seq >= from`. Requires the admin role.
    pub fn audit_events(&self, user: &UserRecord, from: u64) -> Result<Vec<AuditEvent>> {
        if !user.is_admin() {
            return Err(PlatformError::forbidden("reading the audit log requires the admin role"));
        }
        Ok(self.all_audit_events(from))
    }

    /// Unchecked read used by operators and tests.
    pub fn all_audit_events(&self, from: u64) -> Vec<AuditEvent> {
        self.read(|s| s.audit.since(from).to_vec())
    }

    pub fn verify_audit(&self) -> ChainVerdict {
        self.read(|s| verify_audit_chain(s.audit.events()))
    }

    /// Check that the audit chain is intact and that replaying its
    /// transitions lands every version in its recorded state.
    pub fn check_consistency(&self) -> std::result::Result<(), String> {
        self.read(|s| {
            let verdict = verify_audit_chain(s.audit.events());
            if !verdict.ok {
                return Err(format!("audit chain breaks at seq {:?}", verdict.first_bad_seq));
            }
            let replayed = replay_states(s.audit.events()).map_err(|e| e.to_string())?;
            let recorded: BTreeMap<(String, u32), LifecycleState> = s
                .versions
                .values()
                .flatten()
                .map(|v| ((v.version.app_id.clone(), v.version.version_no), v.version.state))
                .collect();
            if replayed != recorded {
                return Err(format!("replayed states {replayed:?} differ from recorded {recorded:?}"));
            }
            for v in s.versions.values().flatten() {
                let nb = s.content.get(&v.version.notebook_ref).ok_or("notebook bytes missing")?;
                let mf = s.content.get(&v.version.manifest_ref).ok_or("manifest bytes missing")?;
                if crate::hash::content_hash(nb, mf) != v.version.content_hash {
                    return Err(format!("content hash mismatch for {}", v.version.version_ref()));
                }
            }
            let mut live = std::collections::BTreeSet::new();
            for d in s.deployments.iter().filter(|d| d.is_active()) {
                if !live.insert(d.instance_id.clone()) {
                    return Err(format!("instance {} serves two deployments", d.instance_id));
                }
                if let Some(slug) = d.slug.as_deref().filter(|_| !d.is_preview()) {
                    if s.deployments.iter().filter(|o| o.is_active() && !o.is_preview() && o.slug.as_deref() == Some(slug)).count() > 1 {
                        return Err(format!("slug {slug} has more than one active deployment"));
                    }
                }
            }
            Ok(())
        })
    }

    // ---- policy ----

    pub fn effective_policy(&self, app_id: &str) -> Result<SandboxPolicy> {
        let over = self.read(|s| s.overrides.get(app_id).cloned());
        match over {
            Some(o) => Ok(self.config.default_policy.tighten(&o)?),
            None => Ok(self.config.default_policy.clone()),
        }
    }

    /// Tighten the sandbox policy for one application. Admin only.
    pub fn set_policy_override(&self, user: &UserRecord, app_id: &str, policy: PolicyOverride) -> Result<SandboxPolicy> {
        if !user.is_admin() {
            return Err(PlatformError::forbidden("policy overrides require the admin role"));
        }
        let effective = self.config.default_policy.tighten(&policy)?;
        self.write(|tx| {
            tx.app(app_id).ok_or_else(|| WorkflowError::UnknownApp(app_id.to_string()))?;
            tx.push(Record::PolicyOverride {
                app_id: app_id.to_string(),
                policy: policy.clone(),
            });
            tx.audit(
                AuditDraft::new(&user.user_id, "policy_override")
                    .app(app_id)
                    .detail(serde_json::to_string(&policy).expect("override serializes")),
            );
            Ok(effective)
        })
    }
}
