use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::mock::mock_run;
use super::wire::{parse_request, to_canonical, ExecutionResult, RunStatus, PROTOCOL_VERSION};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transport {
    InProcess,
    Process { program: String, args: Vec<String> },
    Http { endpoint: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunnerDescriptor {
    pub name: String,
    pub transport: Transport,
    pub protocol_version: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunnerError {
    #[error("runner unavailable: {0}")]
    Unavailable(String),
    #[error("runner exceeded its deadline")]
    TimedOut,
    #[error("runner exited without a result (code {code:?}): {stderr}")]
    Exited { code: Option<i32>, stderr: String },
}

/// Something that executes one wire request and returns one wire result.
pub trait Runner: Send + Sync {
    fn descriptor(&self) -> RunnerDescriptor;

    /// Exchange one request document for one result document. Implementations
    /// should give up at `deadline`; the orchestrator stops waiting then anyway.
    fn exchange(&self, request: &[u8], deadline: Duration) -> Result<Vec<u8>, RunnerError>;
}

/// In-process deterministic runner.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockRunner;

impl Runner for MockRunner {
    fn descriptor(&self) -> RunnerDescriptor {
        RunnerDescriptor {
            name: "mock".into(),
            transport: Transport::InProcess,
            protocol_version: PROTOCOL_VERSION,
        }
    }

    fn exchange(&self, request: &[u8], _deadline: Duration) -> Result<Vec<u8>, RunnerError> {
        Ok(serve_mock(request))
    }
}

/// Answer one request document with the mock runner, as a runner process would.
pub fn serve_mock(request: &[u8]) -> Vec<u8> {
    let result = match parse_request(request) {
        Ok(req) => mock_run(&req),
        Err(e) => ExecutionResult::without_payloads("", RunStatus::Error, format!("bad request: {e}"), 0.0),
    };
    to_canonical(&result)
}

/// Write one length-prefixed document: u32 big-endian byte count, then the bytes.
pub fn write_frame(w: &mut impl Write, doc: &[u8]) -> std::io::Result<()> {
    let len = u32::try_from(doc.len())
        .map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidInput, "document too large"))?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(doc)?;
    w.flush()
}

pub fn read_frame(r: &mut impl Read) -> std::io::Result<Vec<u8>> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut doc = vec![0u8; u32::from_be_bytes(len) as usize];
    r.read_exact(&mut doc)?;
    Ok(doc)
}

/// Spawns one process per request and speaks length-prefixed frames over
/// its stdin/stdout.
#[derive(Debug, Clone)]
pub struct ProcessRunner {
    pub program: String,
    pub args: Vec<String>,
}

impl ProcessRunner {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        ProcessRunner {
            program: program.into(),
            args,
        }
    }
}

impl Runner for ProcessRunner {
    fn descriptor(&self) -> RunnerDescriptor {
        RunnerDescriptor {
            name: format!("process:{}", self.program),
            transport: Transport::Process {
                program: self.program.clone(),
                args: self.args.clone(),
            },
            protocol_version: PROTOCOL_VERSION,
        }
    }

    fn exchange(&self, request: &[u8], deadline: Duration) -> Result<Vec<u8>, RunnerError> {
        let started = Instant::now();
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| RunnerError::Unavailable(format!("{}: {e}", self.program)))?;

        let mut stdin = child.stdin.take().expect("piped stdin");
        let mut stdout = child.stdout.take().expect("piped stdout");
        let mut stderr = child.stderr.take().expect("piped stderr");
        let payload = request.to_vec();
        let writer = thread::spawn(move || write_frame(&mut stdin, &payload));
        let reader = thread::spawn(move || {
            let mut buf = Vec::new();
            stdout.read_to_end(&mut buf).map(|_| buf)
        });
        let err_reader = thread::spawn(move || {
            let mut buf = String::new();
            let _ = stderr.read_to_string(&mut buf);
            buf
        });

        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) if started.elapsed() >= deadline => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(RunnerError::TimedOut);
                }
                Ok(None) => thread::sleep(Duration::from_millis(5)),
                Err(e) => return Err(RunnerError::Unavailable(e.to_string())),
            }
        };
        let _ = writer.join();
        let out = reader.join().ok().and_then(Result::ok).unwrap_or_default();
        let err_text = err_reader.join().unwrap_or_default();
        let exited = || RunnerError::Exited {
            code: status.code(),
            stderr: err_text.trim().to_string(),
        };
        if !status.success() {
            return Err(exited());
        }
        let mut cursor = out.as_slice();
        let doc = read_frame(&mut cursor).map_err(|_| exited())?;
        if !cursor.is_empty() {
            return Err(exited());
        }
        Ok(doc)
    }
}

/// POSTs the request document to an endpoint and reads the result from the
/// response body.
#[derive(Debug, Clone)]
pub struct HttpRunner {
    pub endpoint: String,
}

impl HttpRunner {
    pub fn new(endpoint: impl Into<String>) -> Self {
        HttpRunner {
            endpoint: endpoint.into(),
        }
    }
}

impl Runner for HttpRunner {
    fn descriptor(&self) -> RunnerDescriptor {
        RunnerDescriptor {
            name: format!("http:{}", self.endpoint),
            transport: Transport::Http {
                endpoint: self.endpoint.clone(),
            },
            protocol_version: PROTOCOL_VERSION,
        }
    }

    fn exchange(&self, request: &[u8], deadline: Duration) -> Result<Vec<u8>, RunnerError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(deadline)
            .build()
            .map_err(|e| RunnerError::Unavailable(e.to_string()))?;
        let resp = client
            .post(&self.endpoint)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(request.to_vec())
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    RunnerError::TimedOut
                } else {
                    RunnerError::Unavailable(e.to_string())
                }
            })?;
        let status = resp.status();
        let body = resp.bytes().map_err(|e| RunnerError::Unavailable(e.to_string()))?;
        if !status.is_success() {
            return Err(RunnerError::Exited {
                code: Some(i32::from(status.as_u16())),
                stderr: String::from_utf8_lossy(&body).into_owned(),
            });
        }
        Ok(body.to_vec())
    }
}
