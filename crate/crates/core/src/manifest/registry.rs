use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::name::{is_normalized, normalize_package_name};
use super::parse::{DependencyManifest, Ecosystem};
use super::version::VersionSpec;
use super::ManifestError;
use crate::report::{ValidationReport, Violation, ViolationKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PackageStatus {
    Approved,
    Pending,
    Rejected,
}

impl PackageStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PackageStatus::Approved => "approved",
            PackageStatus::Pending => "pending",
            PackageStatus::Rejected => "rejected",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "approved" => Some(PackageStatus::Approved),
            "pending" => Some(PackageStatus::Pending),
            "rejected" => Some(PackageStatus::Rejected),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Approve,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageRegistryEntry {
    pub ecosystem: Ecosystem,
    pub normalized_name: String,
    pub allowed_versions: VersionSpec,
    pub status: PackageStatus,
    pub requested_by: Option<String>,
    pub decided_by: Option<String>,
    pub note: String,
    pub created_at: DateTime<Utc>,
    pub decided_at: Option<DateTime<Utc>>,
}

impl PackageRegistryEntry {
    fn key_matches(&self, ecosystem: Ecosystem, name: &str) -> bool {
        self.ecosystem == ecosystem && self.normalized_name == name
    }
}

/// Check a manifest against the current registry rows.
///
/// Rows from other ecosystems are ignored. Violations come out in
/// manifest order, at most one per entry.
pub fn validate_manifest(
    manifest: &DependencyManifest,
    registry: &[PackageRegistryEntry],
) -> ValidationReport {
    let violations = manifest
        .entries
        .iter()
        .filter_map(|entry| {
            // Latest row wins if callers pass the full history.
            let row = registry
                .iter()
                .rev()
                .find(|r| r.key_matches(manifest.ecosystem, &entry.normalized_name));
            let (kind, detail) = match row {
                None => (
                    ViolationKind::NotInRegistry,
                    format!(
                        "{} is not in the {} registry; submit an approval request",
                        entry.normalized_name, manifest.ecosystem
                    ),
                ),
                Some(r) if r.status == PackageStatus::Pending => (
                    ViolationKind::PendingApproval,
                    format!("{} is awaiting approval", entry.normalized_name),
                ),
                Some(r) if r.status == PackageStatus::Rejected => (
                    ViolationKind::Rejected,
                    format!("{} was rejected: {}", entry.normalized_name, r.note),
                ),
                Some(r) if !r.allowed_versions.admits(entry.constraint.as_ref()) => (
                    ViolationKind::VersionOutsideRange,
                    format!(
                        "{}{} is outside the approved range {}",
                        entry.normalized_name,
                        entry
                            .constraint
                            .as_ref()
                            .map(|c| c.to_string())
                            .unwrap_or_default(),
                        r.allowed_versions
                    ),
                ),
                Some(_) => return None,
            };
            Some(Violation {
                subject: entry.normalized_name.clone(),
                kind,
                detail,
            })
        })
        .collect();
    ValidationReport::from_violations(violations)
}

/// The curated package registry. Rows are never deleted; a re-request
/// after rejection appends a new row that supersedes the old one.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageRegistry {
    rows: Vec<PackageRegistryEntry>,
}

impl PackageRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every row ever written, oldest first.
    pub fn history(&self) -> &[PackageRegistryEntry] {
        &self.rows
    }

    /// Index of the current row for a key.
    pub fn current_index(&self, ecosystem: Ecosystem, name: &str) -> Option<usize> {
        self.rows.iter().rposition(|r| r.key_matches(ecosystem, name))
    }

    pub fn current(&self, ecosystem: Ecosystem, name: &str) -> Option<&PackageRegistryEntry> {
        self.current_index(ecosystem, name).map(|i| &self.rows[i])
    }

    /// The latest row per (ecosystem, name), in first-seen order.
    pub fn current_rows(&self) -> Vec<PackageRegistryEntry> {
        let mut out: Vec<PackageRegistryEntry> = Vec::new();
        for row in &self.rows {
            match out
                .iter_mut()
                .find(|r| r.key_matches(row.ecosystem, &row.normalized_name))
            {
                Some(slot) => *slot = row.clone(),
                None => out.push(row.clone()),
            }
        }
        out
    }

    pub fn validate(&self, manifest: &DependencyManifest) -> ValidationReport {
        validate_manifest(manifest, &self.current_rows())
    }

    /// Build the pending row for an approval request. Does not mutate.
    pub fn prepare_request(
        &self,
        ecosystem: Ecosystem,
        raw_name: &str,
        requester: &str,
        note: &str,
        at: DateTime<Utc>,
    ) -> Result<(usize, PackageRegistryEntry), ManifestError> {
        let name = normalize_package_name(raw_name)?;
        match self.current(ecosystem, &name).map(|r| r.status) {
            Some(PackageStatus::Approved) => return Err(ManifestError::AlreadyApproved(name)),
            Some(PackageStatus::Pending) => return Err(ManifestError::AlreadyPending(name)),
            Some(PackageStatus::Rejected) | None => {}
        }
        let row = PackageRegistryEntry {
            ecosystem,
            normalized_name: name,
            allowed_versions: VersionSpec::Any,
            status: PackageStatus::Pending,
            requested_by: Some(requester.to_string()),
            decided_by: None,
            note: note.to_string(),
            created_at: at,
            decided_at: None,
        };
        Ok((self.rows.len(), row))
    }

    /// Build the decided row for a pending request. The caller is
    /// responsible for checking that `admin` holds the admin role.
    pub fn prepare_decision(
        &self,
        ecosystem: Ecosystem,
        name: &str,
        decision: Decision,
        admin: &str,
        allowed_versions: VersionSpec,
        at: DateTime<Utc>,
    ) -> Result<(usize, PackageRegistryEntry), ManifestError> {
        let idx = self
            .current_index(ecosystem, name)
            .ok_or_else(|| ManifestError::UnknownPackage(name.to_string()))?;
        let mut row = self.rows[idx].clone();
        if row.status != PackageStatus::Pending {
            return Err(ManifestError::NotPending(name.to_string()));
        }
        if row.requested_by.as_deref() == Some(admin) {
            return Err(ManifestError::Forbidden(
                "a package request cannot be decided by its requester".into(),
            ));
        }
        row.status = match decision {
            Decision::Approve => PackageStatus::Approved,
            Decision::Reject => PackageStatus::Rejected,
        };
        row.allowed_versions = allowed_versions;
        row.decided_by = Some(admin.to_string());
        row.decided_at = Some(at);
        Ok((idx, row))
    }

    /// Upsert at `index`; `index == len` appends.
    pub fn put(&mut self, index: usize, row: PackageRegistryEntry) {
        if index == self.rows.len() {
            self.rows.push(row);
        } else {
            self.rows[index] = row;
        }
    }

    /// Tab-separated export: ecosystem, name, status, allowed_versions,
    /// decided_by, decided_at. One line per row, history included.
    pub fn export_tsv(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                r.ecosystem,
                r.normalized_name,
                r.status.as_str(),
                r.allowed_versions,
                r.decided_by.as_deref().unwrap_or(""),
                r.decided_at.map(|t| t.to_rfc3339()).unwrap_or_default(),
            ));
        }
        out
    }
}

/// Parse a registry export. Rows are returned in file order; `created_at`
/// is taken from `decided_at` when present, else `now`.
pub fn parse_registry_tsv(
    text: &str,
    now: DateTime<Utc>,
) -> Result<Vec<PackageRegistryEntry>, ManifestError> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let bad = |reason: String| ManifestError::Parse { line_no, reason };
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(bad(format!("expected 6 tab-separated fields, found {}", fields.len())));
        }
        let ecosystem: Ecosystem = fields[0].parse()?;
        let name = fields[1];
        if !is_normalized(name) {
            return Err(bad(format!("{name:?} is not a normalized package name")));
        }
        let status = PackageStatus::parse(fields[2])
            .ok_or_else(|| bad(format!("unknown status {:?}", fields[2])))?;
        let allowed_versions: VersionSpec = fields[3].parse().map_err(|e: ManifestError| bad(e.to_string()))?;
        let decided_by = Some(fields[4]).filter(|s| !s.is_empty()).map(str::to_string);
        let decided_at = if fields[5].is_empty() {
            None
        } else {
            Some(
                DateTime::parse_from_rfc3339(fields[5])
                    .map_err(|e| bad(format!("decided_at: {e}")))?
                    .with_timezone(&Utc),
            )
        };
        if status == PackageStatus::Approved && (decided_by.is_none() || decided_at.is_none()) {
            return Err(bad("approved rows need decided_by and decided_at".into()));
        }
        rows.push(PackageRegistryEntry {
            ecosystem,
            normalized_name: name.to_string(),
            allowed_versions,
            status,
            requested_by: None,
            decided_by,
            note: String::new(),
            created_at: decided_at.unwrap_or(now),
            decided_at,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::parse_manifest;
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2025, 1, 6, 9, 0, 0).unwrap()
    }

    fn approved(name: &str, versions: &str) -> PackageRegistryEntry {
        PackageRegistryEntry {
            ecosystem: Ecosystem::Pypi,
            normalized_name: name.into(),
            allowed_versions: versions.parse().unwrap(),
            status: PackageStatus::Approved,
            requested_by: None,
            decided_by: Some("it-sec".into()),
            note: String::new(),
            created_at: t0(),
            decided_at: Some(t0()),
        }
    }

    fn seeded() -> PackageRegistry {
        let mut reg = PackageRegistry::new();
        for (i, n) in ["pandas", "numpy", "geopandas"].iter().enumerate() {
            reg.put(i, approved(n, "any"));
        }
        reg
    }

    #[test]
    fn unapproved_package_is_the_only_violation() {
        let m = parse_manifest(b"pandas\nnumpy\ngeopandas\nspacy\n", "pypi").unwrap();
        let report = seeded().validate(&m);
        assert!(!report.passed());
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].subject, "spacy");
        assert_eq!(report.violations[0].kind, ViolationKind::NotInRegistry);
    }

    #[test]
    fn request_then_approve_makes_package_available() {
        let mut reg = seeded();
        let (i, row) = reg
            .prepare_request(Ecosystem::Pypi, "spacy", "binita", "NLP for reports", t0())
            .unwrap();
        assert_eq!(row.status, PackageStatus::Pending);
        reg.put(i, row);

        let m = parse_manifest(b"pandas\nspacy\n", "pypi").unwrap();
        assert_eq!(reg.validate(&m).violations[0].kind, ViolationKind::PendingApproval);

        assert!(matches!(
            reg.prepare_request(Ecosystem::Pypi, "SpaCy", "sirak", "", t0()),
            Err(ManifestError::AlreadyPending(_))
        ));
        assert!(matches!(
            reg.prepare_decision(Ecosystem::Pypi, "spacy", Decision::Approve, "binita", VersionSpec::Any, t0()),
            Err(ManifestError::Forbidden(_))
        ));

        let (i, row) = reg
            .prepare_decision(Ecosystem::Pypi, "spacy", Decision::Approve, "it-sec", VersionSpec::Any, t0())
            .unwrap();
        assert_eq!(row.decided_by.as_deref(), Some("it-sec"));
        reg.put(i, row);
        assert!(reg.validate(&m).passed());

        assert!(matches!(
            reg.prepare_decision(Ecosystem::Pypi, "spacy", Decision::Reject, "it-sec", VersionSpec::Any, t0()),
            Err(ManifestError::NotPending(_))
        ));
        assert!(matches!(
            reg.prepare_request(Ecosystem::Pypi, "pandas", "binita", "", t0()),
            Err(ManifestError::AlreadyApproved(_))
        ));
    }

    #[test]
    fn rejected_rows_are_kept_and_can_be_re_requested() {
        let mut reg = PackageRegistry::new();
        let (i, row) = reg.prepare_request(Ecosystem::Pypi, "x", "a", "", t0()).unwrap();
        reg.put(i, row);
        let (i, row) = reg
            .prepare_decision(Ecosystem::Pypi, "x", Decision::Reject, "admin", VersionSpec::Any, t0())
            .unwrap();
        reg.put(i, row);
        let m = parse_manifest(b"x\n", "pypi").unwrap();
        assert_eq!(reg.validate(&m).violations[0].kind, ViolationKind::Rejected);

        let (i, row) = reg.prepare_request(Ecosystem::Pypi, "x", "a", "again", t0()).unwrap();
        assert_eq!(i, 1);
        reg.put(i, row);
        assert_eq!(reg.history().len(), 2);
        assert_eq!(reg.history()[0].status, PackageStatus::Rejected);
        assert_eq!(reg.current_rows().len(), 1);
        assert_eq!(reg.current_rows()[0].status, PackageStatus::Pending);
    }

    #[test]
    fn version_range_violation() {
        let mut reg = PackageRegistry::new();
        reg.put(0, approved("pandas", ">=2.0,<3.0"));
        let ok = parse_manifest(b"pandas==2.1.0\n", "pypi").unwrap();
        let bad = parse_manifest(b"pandas<2\n", "pypi").unwrap();
        assert!(reg.validate(&ok).passed());
        assert_eq!(reg.validate(&bad).violations[0].kind, ViolationKind::VersionOutsideRange);
    }

    #[test]
    fn other_ecosystems_are_ignored() {
        let mut reg = PackageRegistry::new();
        let mut row = approved("dplyr", "any");
        row.ecosystem = Ecosystem::Cran;
        reg.put(0, row);
        let m = parse_manifest(b"dplyr\n", "pypi").unwrap();
        assert_eq!(reg.validate(&m).violations[0].kind, ViolationKind::NotInRegistry);
        let m = parse_manifest(b"dplyr\n", "cran").unwrap();
        assert!(reg.validate(&m).passed());
    }

    #[test]
    fn empty_against_empty_passes() {
        let m = parse_manifest(b"", "pypi").unwrap();
        assert!(PackageRegistry::new().validate(&m).passed());
    }

    #[test]
    fn tsv_round_trip() {
        let mut reg = seeded();
        let (i, row) = reg.prepare_request(Ecosystem::Pypi, "spacy", "binita", "", t0()).unwrap();
        reg.put(i, row);
        reg.put(4, approved("scipy", ">=1.10,<2"));
        let text = reg.export_tsv();
        assert!(text.starts_with("pypi\tpandas\tapproved\tany\tit-sec\t2025-01-06T09:00:00+00:00\n"));
        let rows = parse_registry_tsv(&text, t0()).unwrap();
        let mut again = PackageRegistry::new();
        for (i, r) in rows.into_iter().enumerate() {
            again.put(i, r);
        }
        assert_eq!(again.export_tsv(), text);
    }

    #[test]
    fn tsv_errors() {
        assert!(parse_registry_tsv("pypi\tpandas\tapproved\n", t0()).is_err());
        assert!(parse_registry_tsv("pypi\tPandas\tapproved\tany\tx\t2025-01-06T09:00:00Z\n", t0()).is_err());
        assert!(parse_registry_tsv("pypi\tpandas\tapproved\tany\t\t\n", t0()).is_err());
        assert!(parse_registry_tsv("pypi\tpandas\tmaybe\tany\t\t\n", t0()).is_err());
    }

    fn arb_registry() -> impl Strategy<Value = Vec<PackageRegistryEntry>> {
        let names = prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]);
        let status = prop::sample::select(vec![
            PackageStatus::Approved,
            PackageStatus::Pending,
            PackageStatus::Rejected,
        ]);
        let spec = prop::sample::select(vec!["any", ">=1.0", "<1.0", "==1.2", "~=1.1"]);
        prop::collection::btree_map(names, (status, spec), 0..6).prop_map(|m| {
            m.into_iter()
                .map(|(n, (s, v))| {
                    let mut r = approved(n, v);
                    r.status = s;
                    r
                })
                .collect()
        })
    }

    fn arb_manifest() -> impl Strategy<Value = DependencyManifest> {
        let line = (
            prop::sample::select(vec!["a", "b", "c", "d", "e", "f", "g"]),
            prop::sample::select(vec!["", "==1.2", ">=0.5", "<1.0", "~=1.1.0"]),
        );
        prop::collection::btree_map(line.0, line.1, 0..6).prop_flat_map(|m| {
            let lines: Vec<String> = m.into_iter().map(|(n, c)| format!("{n}{c}")).collect();
            Just(lines).prop_shuffle().prop_map(|lines| {
                parse_manifest(lines.join("\n").as_bytes(), "pypi").unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn violations_follow_manifest_order(rows in arb_registry(), m in arb_manifest()) {
            let report = validate_manifest(&m, &rows);
            let positions: Vec<usize> = report.violations.iter()
                .map(|v| m.entries.iter().position(|e| e.normalized_name == v.subject).unwrap())
                .collect();
            prop_assert!(positions.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(report.passed(), report.violations.is_empty());
        }

        #[test]
        fn pass_means_every_entry_resolves_to_one_approved_row(rows in arb_registry(), m in arb_manifest()) {
            if validate_manifest(&m, &rows).passed() {
                for e in &m.entries {
                    let hits: Vec<_> = rows.iter().filter(|r| r.normalized_name == e.normalized_name).collect();
                    prop_assert_eq!(hits.len(), 1);
                    prop_assert_eq!(hits[0].status, PackageStatus::Approved);
                    prop_assert!(hits[0].allowed_versions.admits(e.constraint.as_ref()));
                }
            }
        }

        #[test]
        fn adding_an_approved_row_never_breaks_a_pass(rows in arb_registry(), m in arb_manifest(), extra in "[g-k]") {
            if validate_manifest(&m, &rows).passed() {
                let mut more = rows.clone();
                more.push(approved(&extra, "any"));
                prop_assert!(validate_manifest(&m, &more).passed());
            }
        }
    }
}
