use std::collections::BTreeMap;

use crate::hash::Digest;

/// Content-addressed blob store keyed by SHA-256 of the bytes.
#[derive(Debug, Clone, Default)]
pub struct ContentStore {
    blobs: BTreeMap<Digest, Vec<u8>>,
}

impl ContentStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn address(bytes: &[u8]) -> Digest {
        Digest::of(bytes)
    }

    pub fn put(&mut self, bytes: Vec<u8>) -> Digest {
        let key = Digest::of(&bytes);
        self.blobs.entry(key).or_insert(bytes);
        key
    }

    pub fn get(&self, key: &Digest) -> Option<&[u8]> {
        self.blobs.get(key).map(Vec::as_slice)
    }

    pub fn contains(&self, key: &Digest) -> bool {
        self.blobs.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.blobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blobs.is_empty()
    }
}
