//! Execution requests, runners and the policy they run under.

mod mock;
mod orchestrator;
mod policy;
mod runner;
mod wire;

pub use mock::{mock_run, DIRECTIVE_ERROR, DIRECTIVE_NETWORK, DIRECTIVE_SLEEP};
pub use orchestrator::{dispatch, Dispatched, BACKSTOP_GRACE};
pub use policy::{pattern_covers, CredentialsMode, FilesystemScope, PolicyOverride, SandboxPolicy};
pub use runner::{
    read_frame, serve_mock, write_frame, HttpRunner, MockRunner, ProcessRunner, Runner,
    RunnerDescriptor, RunnerError, Transport,
};
pub use wire::{
    decode_payload, encode_payload, parse_request, parse_result, to_canonical, ExecutionRequest,
    ExecutionResult, MimeKind, OutputArtifact, PolicyViolation, Purpose, RunStatus,
    ViolationCategory, INLINE_PAYLOAD_LIMIT, PROTOCOL_VERSION,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SandboxError {
    #[error("invalid sandbox policy: {0}")]
    InvalidPolicy(String),
    #[error("override would loosen the platform policy: {0}")]
    PolicyWidening(String),
    #[error("runner unavailable: {0}")]
    RunnerUnavailable(String),
    #[error("runner protocol error: {0}")]
    Protocol(String),
}
