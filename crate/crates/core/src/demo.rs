//! The two worked scenarios as data: notebooks, manifests, the seed
//! registry and the people involved.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::clock::SteppingClock;
use crate::deploy::Deployment;
use crate::manifest::{Decision, Ecosystem, VersionSpec};
use crate::persist::{BatchStore, MemoryStore};
use crate::platform::{NewUser, Platform, PlatformConfig, Result, Role, UserRecord};
use crate::workflow::{Application, ReviewAction, VersionRecord};

pub const BINITA_V1: &[u8] = include_bytes!("../fixtures/binita/notebook_v1.ipynb");
pub const BINITA_V2: &[u8] = include_bytes!("../fixtures/binita/notebook_v2.ipynb");
pub const BINITA_REQUIREMENTS: &[u8] = include_bytes!("../fixtures/binita/requirements.txt");
pub const SIRAK_V1: &[u8] = include_bytes!("../fixtures/sirak/notebook_v1.ipynb");
pub const SIRAK_V2: &[u8] = include_bytes!("../fixtures/sirak/notebook_v2.ipynb");
pub const SIRAK_REQUIREMENTS: &[u8] = include_bytes!("../fixtures/sirak/requirements.txt");
pub const STATIC_NOTEBOOK: &[u8] = include_bytes!("../fixtures/static/notebook.ipynb");
pub const STATIC_REQUIREMENTS: &[u8] = include_bytes!("../fixtures/static/requirements.txt");
/// pandas, numpy and geopandas, approved by IT security.
pub const REGISTRY_SEED: &str = include_str!("../fixtures/registry_seed.tsv");

pub const BASE_URL: &str = "https://apps.department.gov";

/// Everyone who appears in the scenarios. Tokens are `<user>-token`.
pub struct Cast {
    pub binita: UserRecord,
    pub yaw: UserRecord,
    pub sirak: UserRecord,
    pub marina: UserRecord,
    /// Decides package requests.
    pub security: UserRecord,
    /// Platform operator: scaling, retiring, audit reads.
    pub ops: UserRecord,
}

pub const CAST: [(&str, &[Role]); 6] = [
    ("binita", &[Role::Author]),
    ("yaw", &[Role::Author, Role::Reviewer]),
    ("sirak", &[Role::Author]),
    ("marina", &[Role::Reviewer]),
    ("security", &[Role::Admin]),
    ("ops", &[Role::Admin]),
];

pub fn token_for(user_id: &str) -> String {
    format!("{user_id}-token")
}

impl Cast {
    pub fn register(platform: &Platform) -> Result<Cast> {
        let mut users = Vec::new();
        for (id, roles) in CAST {
            users.push(platform.register_user(NewUser::new(id, roles, &token_for(id)))?);
        }
        let mut it = users.into_iter();
        let mut next = || it.next().expect("one record per cast member");
        Ok(Cast {
            binita: next(),
            yaw: next(),
            sirak: next(),
            marina: next(),
            security: next(),
            ops: next(),
        })
    }
}

pub fn config(seed: u64) -> PlatformConfig {
    PlatformConfig {
        base_url: BASE_URL.into(),
        seed: Some(seed),
        ..PlatformConfig::default()
    }
}

/// A platform on the given store with a deterministic clock and ids,
/// the cast registered and the registry seeded.
pub fn seeded_platform(store: Arc<dyn BatchStore>, seed: u64) -> Result<(Platform, Cast)> {
    let platform = Platform::open(store, config(seed))?.with_clock(Arc::new(SteppingClock::default()));
    let cast = Cast::register(&platform)?;
    platform.seed_registry(REGISTRY_SEED)?;
    Ok((platform, cast))
}

/// In-memory variant of [`seeded_platform`].
pub fn memory_platform() -> Result<(Platform, Cast)> {
    seeded_platform(Arc::new(MemoryStore::new()), 7)
}

/// Everything the Binita walkthrough produced, step by step.
#[derive(Debug, Clone)]
pub struct BinitaRun {
    pub app: Application,
    /// First upload, blocked on spacy.
    pub blocked: VersionRecord,
    /// Same notebook after spacy was approved; sent back by Yaw.
    pub resubmitted: VersionRecord,
    pub preview: Deployment,
    /// Notebook with the clarified chart title.
    pub revised: VersionRecord,
    pub deployment: Deployment,
}

/// Spreadsheets Generator: unapproved package, package request, review
/// with requested changes, second review, deployment.
pub fn binita_scenario(p: &Platform, cast: &Cast) -> Result<BinitaRun> {
    let app = p.create_app(&cast.binita, "Spreadsheets Generator")?;
    let submit = |nb: &[u8]| p.submit_version(&cast.binita, &app.app_id, nb, BINITA_REQUIREMENTS, Ecosystem::Pypi);

    let blocked = submit(BINITA_V1)?;
    p.request_package(&cast.binita, Ecosystem::Pypi, "spacy", "tokenizing road names in the district join")?;
    p.decide_package(&cast.security, Ecosystem::Pypi, "spacy", Decision::Approve, VersionSpec::Any)?;

    let resubmitted = submit(BINITA_V1)?;
    let r = resubmitted.version.version_ref();
    p.run_build_check(&r, &BTreeMap::new())?;
    let (_, preview) = p.assign_reviewer(&cast.binita, &r, &cast.yaw.user_id)?;
    p.run_app(&preview.url, Some(&cast.yaw), &BTreeMap::new())?;
    let resubmitted = p
        .record_review(&cast.yaw, &r, ReviewAction::RequestChanges, "Please clarify the title of the district chart.")?
        .version;

    let revised = submit(BINITA_V2)?;
    let r = revised.version.version_ref();
    p.run_build_check(&r, &BTreeMap::new())?;
    p.assign_reviewer(&cast.binita, &r, &cast.yaw.user_id)?;
    let outcome = p.record_review(&cast.yaw, &r, ReviewAction::Approve, "Chart title reads well now.")?;
    let deployment = outcome
        .deployment
        .ok_or_else(|| crate::platform::PlatformError::Invalid("approval did not deploy".into()))?;
    Ok(BinitaRun {
        app,
        blocked,
        resubmitted,
        preview,
        revised: outcome.version,
        deployment,
    })
}

#[derive(Debug, Clone)]
pub struct SirakRun {
    pub app: Application,
    /// Free-text `day` input; Marina asks for a dropdown.
    pub first: VersionRecord,
    pub revised: VersionRecord,
    pub deployment: Deployment,
}

/// Text Analysis Tool: every package already approved, one round of
/// review feedback on the input widget, then deployment.
pub fn sirak_scenario(p: &Platform, cast: &Cast) -> Result<SirakRun> {
    let app = p.create_app(&cast.sirak, "Text Analysis Tool")?;
    let submit = |nb: &[u8]| p.submit_version(&cast.sirak, &app.app_id, nb, SIRAK_REQUIREMENTS, Ecosystem::Pypi);

    let first = submit(SIRAK_V1)?;
    let r = first.version.version_ref();
    p.run_build_check(&r, &BTreeMap::new())?;
    p.assign_reviewer(&cast.sirak, &r, &cast.marina.user_id)?;
    let first = p
        .record_review(
            &cast.marina,
            &r,
            ReviewAction::RequestChanges,
            "Use a dropdown of weekdays and label it \"Day of Week\".",
        )?
        .version;

    let revised = submit(SIRAK_V2)?;
    let r = revised.version.version_ref();
    p.run_build_check(&r, &BTreeMap::new())?;
    p.assign_reviewer(&cast.sirak, &r, &cast.marina.user_id)?;
    let outcome = p.record_review(&cast.marina, &r, ReviewAction::Approve, "")?;
    let deployment = outcome
        .deployment
        .ok_or_else(|| crate::platform::PlatformError::Invalid("approval did not deploy".into()))?;
    Ok(SirakRun {
        app,
        first,
        revised: outcome.version,
        deployment,
    })
}
