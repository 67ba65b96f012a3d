use serde::{Deserialize, Serialize};

use super::SandboxError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CredentialsMode {
    #[default]
    ReadOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilesystemScope {
    #[default]
    WorkspaceOnly,
}

/// Execution limits handed to the runner with every request.
///
/// Host patterns are exact host names or `*.suffix` wildcards. An empty
/// allowlist denies all network access.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SandboxPolicy {
    pub network_allowlist: Vec<String>,
    pub max_wall_seconds: f64,
    pub max_memory_mb: u64,
    pub credentials_mode: CredentialsMode,
    pub filesystem_scope: FilesystemScope,
}

impl Default for SandboxPolicy {
    fn default() -> Self {
        SandboxPolicy {
            network_allowlist: Vec::new(),
            max_wall_seconds: 300.0,
            max_memory_mb: 2048,
            credentials_mode: CredentialsMode::ReadOnly,
            filesystem_scope: FilesystemScope::WorkspaceOnly,
        }
    }
}

/// Per-application adjustments. Each field may only tighten the platform default.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyOverride {
    #[serde(default)]
    pub network_allowlist: Option<Vec<String>>,
    #[serde(default)]
    pub max_wall_seconds: Option<f64>,
    #[serde(default)]
    pub max_memory_mb: Option<u64>,
}

/// Whether every host matched by `inner` is also matched by `outer`.
pub fn pattern_covers(outer: &str, inner: &str) -> bool {
    if outer == inner {
        return true;
    }
    match outer.strip_prefix('*') {
        Some(suffix) if suffix.starts_with('.') => {
            let inner_host = inner.strip_prefix('*').unwrap_or(inner);
            inner_host.len() > suffix.len() && inner_host.ends_with(suffix)
        }
        _ => false,
    }
}

impl SandboxPolicy {
    pub fn allows_host(&self, host: &str) -> bool {
        let host = host.to_ascii_lowercase();
        self.network_allowlist
            .iter()
            .any(|p| pattern_covers(&p.to_ascii_lowercase(), &host))
    }

    pub fn validate(&self) -> Result<(), SandboxError> {
        if !(self.max_wall_seconds.is_finite() && self.max_wall_seconds > 0.0) {
            return Err(SandboxError::InvalidPolicy("max_wall_seconds must be positive".into()));
        }
        if self.max_memory_mb == 0 {
            return Err(SandboxError::InvalidPolicy("max_memory_mb must be positive".into()));
        }
        Ok(())
    }

    /// Apply an override. Anything that would loosen the default is refused.
    pub fn tighten(&self, o: &PolicyOverride) -> Result<SandboxPolicy, SandboxError> {
        let mut out = self.clone();
        if let Some(hosts) = &o.network_allowlist {
            if let Some(extra) = hosts
                .iter()
                .find(|h| !self.network_allowlist.iter().any(|d| pattern_covers(d, h)))
            {
                return Err(SandboxError::PolicyWidening(format!(
                    "host pattern {extra:?} is not covered by the platform allowlist"
                )));
            }
            out.network_allowlist = hosts.clone();
        }
        if let Some(secs) = o.max_wall_seconds {
            if !(secs > 0.0 && secs <= self.max_wall_seconds) {
                return Err(SandboxError::PolicyWidening(format!(
                    "max_wall_seconds {secs} exceeds the platform limit {}",
                    self.max_wall_seconds
                )));
            }
            out.max_wall_seconds = secs;
        }
        if let Some(mb) = o.max_memory_mb {
            if mb == 0 || mb > self.max_memory_mb {
                return Err(SandboxError::PolicyWidening(format!(
                    "max_memory_mb {mb} exceeds the platform limit {}",
                    self.max_memory_mb
                )));
            }
            out.max_memory_mb = mb;
        }
        Ok(out)
    }
}
