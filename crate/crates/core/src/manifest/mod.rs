//! Dependency manifests and the curated package registry.

mod name;
mod parse;
mod registry;
mod version;

pub use name::{is_normalized, normalize_package_name};
pub use parse::{parse_manifest, DependencyManifest, Ecosystem, ManifestEntry};
pub use registry::{
    parse_registry_tsv, validate_manifest, Decision, PackageRegistry, PackageRegistryEntry,
    PackageStatus,
};
pub use version::{Bound, Constraint, Interval, Operator, Version, VersionSpec};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ManifestError {
    #[error("package name is empty")]
    EmptyName,
    #[error("illegal character {0:?} in package name")]
    IllegalCharacter(char),
    #[error("line {line_no}: {reason}")]
    Parse { line_no: usize, reason: String },
    #[error("line {line_no}: duplicate package {name} (first declared on line {first_line_no})")]
    DuplicatePackage {
        name: String,
        line_no: usize,
        first_line_no: usize,
    },
    #[error("unsupported ecosystem {0:?}")]
    UnsupportedEcosystem(String),
    #[error("invalid version {0:?}")]
    InvalidVersion(String),
    #[error("invalid version constraint {0:?}")]
    InvalidConstraint(String),
    #[error("{0} is already approved")]
    AlreadyApproved(String),
    #[error("{0} already has a pending request")]
    AlreadyPending(String),
    #[error("{0} has no pending request")]
    NotPending(String),
    #[error("unknown package {0}")]
    UnknownPackage(String),
    #[error("forbidden: {0}")]
    Forbidden(String),
}
