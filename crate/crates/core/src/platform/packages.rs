use super::{Platform, PlatformError, Result, UserRecord};
use crate::manifest::{parse_registry_tsv, Decision, Ecosystem, PackageRegistryEntry, VersionSpec};
use crate::workflow::{AuditDraft, SYSTEM_ACTOR};

impl Platform {
    /// Ask for a package to be added to the registry. Open to any user.
    pub fn request_package(&self, user: &UserRecord, ecosystem: Ecosystem, name: &str, note: &str) -> Result<PackageRegistryEntry> {
        self.write(|tx| {
            let (index, row) = tx.base.registry.prepare_request(ecosystem, name, &user.user_id, note, tx.at)?;
            tx.put_registry(index, row.clone());
            tx.audit(AuditDraft::new(&user.user_id, "package_request").detail(format!("{ecosystem}/{}", row.normalized_name)));
            Ok(row)
        })
    }

    /// Approve or reject a pending request. Admin only, and never the
    /// requester.
    pub fn decide_package(
        &self,
        user: &UserRecord,
        ecosystem: Ecosystem,
        name: &str,
        decision: Decision,
        allowed_versions: VersionSpec,
    ) -> Result<PackageRegistryEntry> {
        if !user.is_admin() {
            return Err(PlatformError::forbidden("package decisions require the admin role"));
        }
        let name = crate::manifest::normalize_package_name(name)?;
        self.write(|tx| {
            let (index, row) = tx
                .base
                .registry
                .prepare_decision(ecosystem, &name, decision, &user.user_id, allowed_versions.clone(), tx.at)?;
            tx.put_registry(index, row.clone());
            let action = match decision {
                Decision::Approve => "package_approve",
                Decision::Reject => "package_reject",
            };
            tx.audit(AuditDraft::new(&user.user_id, action).detail(format!("{ecosystem}/{name} {}", row.allowed_versions)));
            Ok(row)
        })
    }

    /// Append rows from a registry export. Admin only.
    pub fn import_registry(&self, user: &UserRecord, tsv: &str) -> Result<usize> {
        if !user.is_admin() {
            return Err(PlatformError::forbidden("registry imports require the admin role"));
        }
        self.import_rows(&user.user_id, tsv)
    }

    /// Operator bootstrap: load a curated registry export as the system.
    pub fn seed_registry(&self, tsv: &str) -> Result<usize> {
        self.import_rows(SYSTEM_ACTOR, tsv)
    }

    fn import_rows(&self, actor: &str, tsv: &str) -> Result<usize> {
        self.write(|tx| {
            let rows = parse_registry_tsv(tsv, tx.at)?;
            let count = rows.len();
            for row in rows {
                let index = tx.registry_len();
                tx.put_registry(index, row);
            }
            tx.audit(AuditDraft::new(actor, "registry_import").detail(format!("{count} rows")));
            Ok(count)
        })
    }
}
