use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};

/// A SHA-256 digest. Serialized as 64 lowercase hex characters.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const ZERO: Digest = Digest([0u8; 32]);

    pub fn of(bytes: &[u8]) -> Self {
        Digest(Sha256::digest(bytes).into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("invalid digest: expected 64 lowercase hex characters")]
pub struct DigestParseError;

impl FromStr for Digest {
    type Err = DigestParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 64 || s.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(DigestParseError);
        }
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(|_| DigestParseError)?;
        Ok(Digest(out))
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Identity of a submitted version: SHA-256 over the length-framed
/// notebook and manifest bytes.
///
/// Layout: `u64_be(len(notebook)) || notebook || u64_be(len(manifest)) || manifest`.
pub fn content_hash(notebook: &[u8], manifest: &[u8]) -> Digest {
    let mut hasher = Sha256::new();
    hasher.update((notebook.len() as u64).to_be_bytes());
    hasher.update(notebook);
    hasher.update((manifest.len() as u64).to_be_bytes());
    hasher.update(manifest);
    Digest(hasher.finalize().into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_pair_hashes_sixteen_zero_bytes() {
        assert_eq!(content_hash(b"", b""), Digest::of(&[0u8; 16]));
    }

    #[test]
    fn swapping_inputs_of_distinct_lengths_changes_digest() {
        assert_ne!(content_hash(b"abc", b"de"), content_hash(b"de", b"abc"));
    }

    #[test]
    fn framing_separates_boundary() {
        // Same concatenation, different split.
        assert_ne!(content_hash(b"ab", b"c"), content_hash(b"a", b"bc"));
    }

    #[test]
    fn hex_round_trip() {
        let d = Digest::of(b"x");
        assert_eq!(d.to_hex().parse::<Digest>().unwrap(), d);
        assert!("AB".repeat(32).parse::<Digest>().is_err());
        assert!("zz".parse::<Digest>().is_err());
    }
}
