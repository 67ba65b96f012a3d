//! Send execution requests to a runner: the in-process mock by default, or
//! a runner program speaking length-prefixed frames on stdin/stdout.
//!
//!     cargo run --example sandbox_run
//!     cargo run --example sandbox_run -- target/debug/appforge mock-runner

use std::sync::Arc;

use appforge::sandbox::{dispatch, ExecutionRequest, MockRunner, ProcessRunner, Purpose, Runner, SandboxPolicy, DIRECTIVE_NETWORK};
use appforge::workflow::VersionRef;
use serde_json::json;

fn request(id: &str, cells: &[&str]) -> ExecutionRequest {
    let cells: Vec<_> = cells
        .iter()
        .map(|src| json!({"cell_type": "code", "metadata": {}, "source": src, "outputs": [], "execution_count": null}))
        .collect();
    ExecutionRequest {
        request_id: id.into(),
        version: VersionRef::new("app-demo", 1),
        notebook: json!({"nbformat": 4, "nbformat_minor": 5, "metadata": {}, "cells": cells}).to_string(),
        manifest: vec!["pandas".into()],
        policy: SandboxPolicy::default(),
        purpose: Purpose::BuildCheck,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let runner: Arc<dyn Runner> = match args.split_first() {
        Some((program, rest)) => Arc::new(ProcessRunner::new(program.clone(), rest.to_vec())),
        None => Arc::new(MockRunner),
    };

    let fetch = format!("{DIRECTIVE_NETWORK}\nrequests.get('https://example.org')");
    for req in [
        request("req-ok", &["import pandas as pd", "pd.DataFrame({'a': [1, 2]})"]),
        request("req-net", &[&fetch]),
    ] {
        let d = dispatch(&req, runner.clone())?;
        println!("{}: {:?}, {} outputs, {} stored payloads", req.request_id, d.result.status, d.result.outputs.len(), d.payloads.len());
        for v in &d.result.violations {
            println!("  violation {:?}: {}", v.kind, v.detail);
        }
    }
    Ok(())
}
