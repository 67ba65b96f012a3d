//! Runner wire protocol, version 1.
//!
//! One request document in, one result document out. Documents are
//! compact UTF-8 JSON with sorted keys; unknown fields are rejected.

use std::collections::BTreeMap;

use base64::Engine as _;
use serde::{Deserialize, Serialize};

use super::policy::SandboxPolicy;
use crate::hash::Digest;
use crate::workflow::VersionRef;

pub const PROTOCOL_VERSION: u32 = 1;

/// Payloads larger than this are delivered as file artifacts.
pub const INLINE_PAYLOAD_LIMIT: usize = 64 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    BuildCheck,
    Preview,
    Live,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecutionRequest {
    pub request_id: String,
    pub version: VersionRef,
    /// The bound notebook, as v4 notebook JSON text.
    pub notebook: String,
    /// Normalized names of the declared packages.
    pub manifest: Vec<String>,
    pub policy: SandboxPolicy,
    pub purpose: Purpose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Success,
    Error,
    PolicyViolation,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MimeKind {
    Text,
    Html,
    ImagePng,
    Table,
    File,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputArtifact {
    pub source_cell_index: usize,
    pub mime_kind: MimeKind,
    /// Content address (SHA-256 hex) of the payload bytes.
    pub payload_ref: Digest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCategory {
    Network,
    Import,
    Filesystem,
    Credentials,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyViolation {
    pub kind: ViolationCategory,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecutionResult {
    pub request_id: String,
    pub status: RunStatus,
    pub outputs: Vec<OutputArtifact>,
    pub violations: Vec<PolicyViolation>,
    pub log: String,
    pub wall_seconds: f64,
    /// Payload bytes keyed by `payload_ref`, base64-encoded. Present only on
    /// the wire; the orchestrator moves them into the content store.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub payloads: BTreeMap<Digest, String>,
}

impl ExecutionResult {
    pub fn without_payloads(request_id: &str, status: RunStatus, log: impl Into<String>, wall_seconds: f64) -> Self {
        ExecutionResult {
            request_id: request_id.to_string(),
            status,
            outputs: Vec::new(),
            violations: Vec::new(),
            log: log.into(),
            wall_seconds,
            payloads: BTreeMap::new(),
        }
    }

    /// Attach a payload and its artifact.
    pub fn push_output(&mut self, source_cell_index: usize, mime_kind: MimeKind, bytes: &[u8]) {
        let payload_ref = Digest::of(bytes);
        self.payloads
            .insert(payload_ref, base64::engine::general_purpose::STANDARD.encode(bytes));
        self.outputs.push(OutputArtifact {
            source_cell_index,
            mime_kind,
            payload_ref,
        });
    }
}

pub fn encode_payload(bytes: &[u8]) -> String {
    base64::engine::general_purpose::STANDARD.encode(bytes)
}

pub fn decode_payload(text: &str) -> Option<Vec<u8>> {
    base64::engine::general_purpose::STANDARD.decode(text).ok()
}

pub fn to_canonical<T: Serialize>(doc: &T) -> Vec<u8> {
    let value = serde_json::to_value(doc).expect("wire document serializes");
    serde_json::to_vec(&value).expect("value serializes")
}

pub fn parse_request(bytes: &[u8]) -> Result<ExecutionRequest, serde_json::Error> {
    serde_json::from_slice(bytes)
}

pub fn parse_result(bytes: &[u8]) -> Result<ExecutionResult, serde_json::Error> {
    serde_json::from_slice(bytes)
}
