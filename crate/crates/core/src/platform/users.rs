use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use subtle::ConstantTimeEq;

use crate::hash::Digest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Author,
    Reviewer,
    Admin,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Author, Role::Reviewer, Role::Admin];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Author => "author",
            Role::Reviewer => "reviewer",
            Role::Admin => "admin",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown role {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: String,
    pub display_name: String,
    pub roles: BTreeSet<Role>,
    /// SHA-256 of the bearer token. The token itself is never stored.
    pub token_hash: Digest,
    #[serde(default)]
    pub revoked: bool,
}

impl UserRecord {
    pub fn has_role(&self, role: Role) -> bool {
        self.roles.contains(&role)
    }

    pub fn is_admin(&self) -> bool {
        self.has_role(Role::Admin)
    }
}

pub fn hash_token(token: &str) -> Digest {
    Digest::of(token.as_bytes())
}

/// Find the live user holding `token`. Every stored hash is compared, in
/// constant time, so the scan takes the same path whether or not a match
/// turns up early.
pub fn find_by_token<'a>(users: impl IntoIterator<Item = &'a UserRecord>, token: &str) -> Option<&'a UserRecord> {
    let presented = hash_token(token);
    let mut found = None;
    for user in users {
        let hit: bool = user.token_hash.as_bytes().ct_eq(presented.as_bytes()).into();
        if hit && !user.revoked && found.is_none() {
            found = Some(user);
        }
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;

    fn user(id: &str, token: &str) -> UserRecord {
        UserRecord {
            user_id: id.into(),
            display_name: id.into(),
            roles: [Role::Author].into(),
            token_hash: hash_token(token),
            revoked: false,
        }
    }

    #[test]
    fn lookup() {
        let mut users = vec![user("binita", "tok-b"), user("yaw", "tok-y")];
        assert_eq!(find_by_token(&users, "tok-y").unwrap().user_id, "yaw");
        assert!(find_by_token(&users, "tok-x").is_none());
        assert!(find_by_token(&users, "").is_none());
        users[1].revoked = true;
        assert!(find_by_token(&users, "tok-y").is_none());
    }

    #[test]
    fn stored_record_never_holds_the_token() {
        let json = serde_json::to_string(&user("binita", "s3cret-token")).unwrap();
        assert!(!json.contains("s3cret-token"));
    }
}
