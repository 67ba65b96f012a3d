//! Slugs, stable URLs and deployment records.

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::workflow::VersionRef;

pub const MAX_SLUG_LEN: usize = 63;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SlugError {
    #[error("title is empty")]
    EmptyTitle,
    #[error("title {0:?} has no letters or digits to build a slug from")]
    Unsluggable(String),
}

/// Derive a URL slug from a title, avoiding every slug in `existing`.
///
/// Only ASCII letters and digits survive; everything else (including
/// non-ASCII letters) acts as a separator.
pub fn make_slug(title: &str, existing: &BTreeSet<String>) -> Result<String, SlugError> {
    if title.trim().is_empty() {
        return Err(SlugError::EmptyTitle);
    }
    let mut base = String::with_capacity(title.len());
    for ch in title.chars() {
        if ch.is_ascii_alphanumeric() {
            base.push(ch.to_ascii_lowercase());
        } else if !base.is_empty() && !base.ends_with('-') {
            base.push('-');
        }
    }
    let base = base.trim_end_matches('-');
    if base.is_empty() {
        return Err(SlugError::Unsluggable(title.to_string()));
    }
    let base = clip(base, MAX_SLUG_LEN);
    if !existing.contains(base) {
        return Ok(base.to_string());
    }
    (2u64..)
        .map(|n| {
            let suffix = format!("-{n}");
            format!("{}{suffix}", clip(base, MAX_SLUG_LEN - suffix.len()))
        })
        .find(|candidate| !existing.contains(candidate))
        .ok_or_else(|| SlugError::Unsluggable(title.to_string()))
}

fn clip(s: &str, max: usize) -> &str {
    s[..s.len().min(max)].trim_end_matches('-')
}

pub fn is_valid_slug(s: &str) -> bool {
    !s.is_empty()
        && s.len() <= MAX_SLUG_LEN
        && !s.starts_with('-')
        && !s.ends_with('-')
        && !s.contains("--")
        && s.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-')
}

pub fn stable_url(base_url: &str, slug: &str) -> String {
    format!("{}/internal/{slug}", base_url.trim_end_matches('/'))
}

pub fn preview_url(base_url: &str, token: &str) -> String {
    format!("{}/preview/{token}", base_url.trim_end_matches('/'))
}

/// 128 random bits as lowercase hex.
pub fn new_preview_token(rng: &mut impl rand::Rng) -> String {
    hex::encode(rng.random::<[u8; 16]>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeploymentStatus {
    Active,
    Superseded,
    Retired,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deployment {
    /// `None` for previews, which are reachable only through their token.
    pub slug: Option<String>,
    pub app_id: String,
    pub version_no: u32,
    pub url: String,
    pub replicas: u32,
    pub status: DeploymentStatus,
    pub preview_token: Option<String>,
    pub created_at: DateTime<Utc>,
    /// Identifies the isolated runner instance serving this deployment.
    pub instance_id: String,
}

impl Deployment {
    pub fn version_ref(&self) -> VersionRef {
        VersionRef::new(self.app_id.clone(), self.version_no)
    }

    pub fn is_preview(&self) -> bool {
        self.preview_token.is_some()
    }

    pub fn is_active(&self) -> bool {
        self.status == DeploymentStatus::Active
    }
}
