//! The `appforge` command-line client, plus `serve` for operators.
//!
//! Every subcommand talks to a running service over HTTP. With `--machine`
//! each result is printed as one compact JSON document with sorted keys;
//! otherwise the output is short prose meant for people.

mod client;
mod render;
mod serve;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::api::Endpoint;
use crate::workflow::{verify_export, ChainVerdict};
use client::{Client, Payload, Reply};

pub use serve::{load_users, UsersFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_TRANSPORT: i32 = 3;

const DEFAULT_URL: &str = "http://127.0.0.1:8080";

#[derive(Debug, Parser)]
#[command(name = "appforge", version, about = "Client for an appforge notebook app platform")]
pub struct Cli {
    /// Service base URL.
    #[arg(long, global = true, env = "APPFORGE_URL")]
    url: Option<String>,
    /// Print one canonical JSON document per result.
    #[arg(long, global = true)]
    machine: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create and list applications.
    #[command(subcommand)]
    App(AppCmd),
    /// Submit a notebook and its requirements as a new version.
    Submit(SubmitArgs),
    /// Show the versions of an application.
    Status(StatusArgs),
    /// Reviewer queue and review decisions.
    #[command(subcommand)]
    Review(ReviewCmd),
    /// The approved package registry.
    #[command(subcommand)]
    Registry(RegistryCmd),
    /// Operate on live deployments.
    #[command(subcommand)]
    Deploy(DeployCmd),
    /// Read and check the audit log.
    #[command(subcommand)]
    Audit(AuditCmd),
    /// Execute a version, a deployed app or a preview with parameters.
    Run(RunArgs),
    /// Show a deployed app or a preview: title, version and controls.
    Open(OpenArgs),
    /// Run the service.
    Serve(serve::ServeArgs),
    /// Answer one wire request on stdin/stdout with the mock runner, or
    /// serve the mock runner over HTTP.
    #[command(hide = true)]
    MockRunner(serve::MockRunnerArgs),
}

#[derive(Debug, Subcommand)]
enum AppCmd {
    Create {
        #[arg(long)]
        title: String,
    },
    List,
}

#[derive(Debug, Args)]
struct SubmitArgs {
    #[arg(long)]
    app: String,
    #[arg(long)]
    notebook: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "pypi")]
    ecosystem: String,
    /// Wait for the sandbox build check to finish.
    #[arg(long)]
    wait: bool,
    #[arg(long, default_value_t = 60)]
    wait_seconds: u64,
}

#[derive(Debug, Args)]
struct StatusArgs {
    #[arg(long)]
    app: String,
    #[arg(long)]
    version: Option<u32>,
}

#[derive(Debug, Subcommand)]
enum ReviewCmd {
    /// Versions waiting on you.
    List,
    Assign {
        /// Version id, `<app_id>.<n>`.
        #[arg(long)]
        version: String,
        #[arg(long)]
        reviewer: String,
    },
    Approve(Decide),
    RequestChanges(Decide),
    Reject(Decide),
}

#[derive(Debug, Args)]
struct Decide {
    #[arg(long)]
    version: String,
    #[arg(long, default_value = "")]
    comment: String,
}

#[derive(Debug, Subcommand)]
enum RegistryCmd {
    List,
    Request {
        #[arg(long)]
        name: String,
        #[arg(long, default_value = "pypi")]
        ecosystem: String,
        #[arg(long, default_value = "")]
        note: String,
    },
    Decide {
        #[arg(long)]
        name: String,
        #[arg(long, default_value = "pypi")]
        ecosystem: String,
        #[arg(long, value_parser = ["approve", "reject"])]
        decision: String,
        /// `any` or clauses such as `>=1.0,<2.0`.
        #[arg(long)]
        allowed_versions: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
enum DeployCmd {
    Rollback {
        #[arg(long)]
        app: String,
        #[arg(long)]
        version: u32,
    },
    Scale {
        #[arg(long)]
        slug: String,
        #[arg(long)]
        replicas: u32,
    },
    Retire {
        #[arg(long)]
        slug: String,
    },
}

#[derive(Debug, Subcommand)]
enum AuditCmd {
    /// Write the log as one JSON event per line.
    Export {
        #[arg(long, default_value_t = 0)]
        from: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the hash chain of an exported file, or of the live log.
    Verify {
        #[arg(long)]
        file: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct RunTarget {
    #[arg(long)]
    slug: Option<String>,
    #[arg(long)]
    preview: Option<String>,
    #[arg(long)]
    version: Option<String>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    target: RunTarget,
    /// `name=value`; repeat for each input.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, String)>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct OpenTarget {
    #[arg(long)]
    slug: Option<String>,
    #[arg(long)]
    preview: Option<String>,
}

#[derive(Debug, Args)]
struct OpenArgs {
    #[command(flatten)]
    target: OpenTarget,
}

fn parse_param(raw: &str) -> Result<(String, String), String> {
    match raw.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.to_string())),
        _ => Err(format!("expected name=value, got {raw:?}")),
    }
}

/// Which endpoints each command reaches. Every endpoint belongs to exactly
/// one top-level command.
pub const COVERAGE: &[(&str, &[Endpoint])] = &[
    ("app create", &[Endpoint::CreateApp]),
    ("app list", &[Endpoint::ListApps]),
    ("submit", &[Endpoint::SubmitVersion]),
    ("status", &[Endpoint::ListVersions]),
    ("review list", &[Endpoint::ReviewQueue]),
    ("review assign", &[Endpoint::AssignReviewer]),
    ("review approve", &[Endpoint::Review]),
    ("review request-changes", &[Endpoint::Review]),
    ("review reject", &[Endpoint::Review]),
    ("registry list", &[Endpoint::Registry]),
    ("registry request", &[Endpoint::RequestPackage]),
    ("registry decide", &[Endpoint::DecidePackage]),
    ("deploy rollback", &[Endpoint::Rollback]),
    ("deploy scale", &[Endpoint::Scale]),
    ("deploy retire", &[Endpoint::Retire]),
    ("audit export", &[Endpoint::Audit]),
    ("audit verify", &[Endpoint::Audit]),
    ("run", &[Endpoint::RunVersion, Endpoint::RunApp, Endpoint::RunPreview]),
    ("open", &[Endpoint::OpenApp, Endpoint::OpenPreview]),
];

/// The command tree, for help text and coverage checks.
pub fn command() -> clap::Command {
    <Cli as clap::CommandFactory>::command()
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// The service refused: forbidden, not found, conflicting state.
    Rejected { status: u16, body: Value },
    /// The service answered 400 to something the client sent.
    BadRequest { body: Value },
    Transport(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::BadRequest { .. } => EXIT_USAGE,
            CliError::Rejected { .. } => EXIT_REJECTED,
            CliError::Transport(_) => EXIT_TRANSPORT,
        }
    }

    fn document(&self) -> Value {
        match self {
            CliError::Usage(m) => json!({"error": "usage", "message": m}),
            CliError::Transport(m) => json!({"error": "transport", "message": m}),
            CliError::Rejected { status, body } => json!({"status": status, "response": body}),
            CliError::BadRequest { body } => json!({"status": 400, "response": body}),
        }
    }
}

/// Settings from `~/.config/appforge/config.toml` (or `$APPFORGE_CONFIG`).
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub url: Option<String>,
    pub token: Option<String>,
    pub machine: Option<bool>,
}

pub fn config_path() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os("APPFORGE_CONFIG") {
        return Some(PathBuf::from(p));
    }
    let base = match std::env::var_os("XDG_CONFIG_HOME") {
        Some(x) if !x.is_empty() => PathBuf::from(x),
        _ => PathBuf::from(std::env::var_os("HOME")?).join(".config"),
    };
    Some(base.join("appforge").join("config.toml"))
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile, CliError> {
    let Some(path) = path else { return Ok(ConfigFile::default()) };
    match std::fs::read_to_string(path) {
        Ok(text) => toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(ConfigFile::default()),
        Err(e) => Err(CliError::Usage(format!("{}: {e}", path.display()))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputMode {
    Human,
    Machine,
}

#[derive(Debug, Clone)]
pub struct CliConfig {
    pub base_url: String,
    pub token: Option<String>,
    pub output_mode: OutputMode,
}

/// Parse `argv` (program name first), run the command and return the exit code.
pub fn main_with(argv: impl IntoIterator<Item = OsString>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let file = match load_config(config_path().as_deref()) {
        Ok(f) => f,
        Err(e) => return report_error(&e, cli.machine),
    };
    let config = CliConfig {
        base_url: cli.url.clone().or(file.url).unwrap_or_else(|| DEFAULT_URL.to_string()),
        token: std::env::var("APPFORGE_TOKEN").ok().filter(|t| !t.is_empty()).or(file.token),
        output_mode: if cli.machine || file.machine == Some(true) {
            OutputMode::Machine
        } else {
            OutputMode::Human
        },
    };
    match execute(cli.command, &config) {
        Ok(code) => code,
        Err(e) => report_error(&e, config.output_mode == OutputMode::Machine),
    }
}

fn report_error(e: &CliError, machine: bool) -> i32 {
    if machine {
        println!("{}", e.document());
    } else {
        eprintln!("error: {}", render::error(e));
    }
    e.exit_code()
}

struct Session<'c> {
    client: Client,
    config: &'c CliConfig,
}

impl Session<'_> {
    fn call(&self, endpoint: Endpoint, args: &[&str], payload: Payload) -> Result<Value, CliError> {
        self.call_query(endpoint, args, &[], payload)?.json()
    }

    fn call_query(&self, endpoint: Endpoint, args: &[&str], query: &[(&str, String)], payload: Payload) -> Result<Reply, CliError> {
        let reply = self.client.call(endpoint, args, query, payload)?;
        let body = || serde_json::from_str(&reply.text).unwrap_or_else(|_| Value::String(reply.text.clone()));
        match reply.status {
            200..=299 => Ok(reply),
            400 | 405 | 413 => Err(CliError::BadRequest { body: body() }),
            401 | 403 | 404 | 409 => Err(CliError::Rejected {
                status: reply.status,
                body: body(),
            }),
            s => Err(CliError::Transport(format!("service answered {s}: {}", reply.text.trim()))),
        }
    }

    fn emit(&self, doc: &Value, human: impl FnOnce(&Value) -> String) {
        match self.config.output_mode {
            OutputMode::Machine => println!("{doc}"),
            OutputMode::Human => {
                let text = human(doc);
                if !text.is_empty() {
                    println!("{}", text.trim_end());
                }
            }
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn params_body(params: &[(String, String)]) -> Value {
    let values: BTreeMap<&str, Value> = params
        .iter()
        .map(|(k, v)| {
            let value = match v.trim().parse::<f64>() {
                Ok(n) if n.is_finite() => json!(n),
                _ => json!(v),
            };
            (k.as_str(), value)
        })
        .collect();
    json!({ "params": values })
}

fn state_of(record: &Value) -> &str {
    record["version"]["state"].as_str().unwrap_or_default()
}

fn settled(state: &str) -> bool {
    !matches!(state, "Submitted" | "Validated" | "SandboxRunning")
}

fn execute(command: Command, config: &CliConfig) -> Result<i32, CliError> {
    let s = match &command {
        Command::Serve(args) => return serve::serve(args),
        Command::MockRunner(args) => return serve::mock_runner(args),
        Command::Audit(AuditCmd::Verify { file: Some(path) }) => {
            let text = String::from_utf8(read_file(path)?).map_err(|_| CliError::Usage("audit file is not UTF-8".into()))?;
            return Ok(verdict(&verify_export(&text), config.output_mode));
        }
        _ => Session {
            client: Client::new(&config.base_url, config.token.clone())?,
            config,
        },
    };

    match command {
        Command::App(AppCmd::Create { title }) => {
            let doc = s.call(Endpoint::CreateApp, &[], Payload::Json(json!({ "title": title })))?;
            s.emit(&doc, render::app);
        }
        Command::App(AppCmd::List) => {
            let doc = s.call(Endpoint::ListApps, &[], Payload::None)?;
            s.emit(&doc, render::apps);
        }
        Command::Submit(a) => {
            let parts = vec![
                ("notebook", read_file(&a.notebook)?),
                ("manifest", read_file(&a.manifest)?),
                ("ecosystem", a.ecosystem.into_bytes()),
            ];
            let mut doc = s.call(Endpoint::SubmitVersion, &[&a.app], Payload::Form(parts))?;
            if a.wait {
                doc = wait_for(&s, &doc, Duration::from_secs(a.wait_seconds))?;
            }
            s.emit(&doc, render::version);
            if matches!(state_of(&doc), "ValidationFailed" | "SandboxFailed") {
                return Ok(EXIT_REJECTED);
            }
        }
        Command::Status(a) => {
            let doc = s.call(Endpoint::ListVersions, &[&a.app], Payload::None)?;
            match a.version {
                None => s.emit(&doc, render::versions),
                Some(n) => {
                    let one = doc["versions"]
                        .as_array()
                        .and_then(|vs| vs.iter().find(|v| v["version"]["version_no"] == json!(n)))
                        .cloned()
                        .ok_or_else(|| CliError::Rejected {
                            status: 404,
                            body: json!({"error": "not_found", "message": format!("{}.{n} does not exist", a.app)}),
                        })?;
                    s.emit(&one, render::version);
                }
            }
        }
        Command::Review(cmd) => {
            let (id, action, comment) = match cmd {
                ReviewCmd::List => {
                    let doc = s.call(Endpoint::ReviewQueue, &[], Payload::None)?;
                    s.emit(&doc, render::versions);
                    return Ok(EXIT_OK);
                }
                ReviewCmd::Assign { version, reviewer } => {
                    let doc = s.call(Endpoint::AssignReviewer, &[&version], Payload::Json(json!({ "reviewer": reviewer })))?;
                    s.emit(&doc, render::assignment);
                    return Ok(EXIT_OK);
                }
                ReviewCmd::Approve(d) => (d.version, "approve", d.comment),
                ReviewCmd::RequestChanges(d) => (d.version, "request_changes", d.comment),
                ReviewCmd::Reject(d) => (d.version, "reject", d.comment),
            };
            let doc = s.call(Endpoint::Review, &[&id], Payload::Json(json!({ "action": action, "comment": comment })))?;
            s.emit(&doc, render::review);
        }
        Command::Registry(RegistryCmd::List) => {
            let doc = s.call(Endpoint::Registry, &[], Payload::None)?;
            s.emit(&doc, render::registry);
        }
        Command::Registry(RegistryCmd::Request { name, ecosystem, note }) => {
            let body = json!({ "ecosystem": ecosystem, "name": name, "note": note });
            let doc = s.call(Endpoint::RequestPackage, &[], Payload::Json(body))?;
            s.emit(&doc, render::package);
        }
        Command::Registry(RegistryCmd::Decide {
            name,
            ecosystem,
            decision,
            allowed_versions,
        }) => {
            let mut body = json!({ "decision": decision });
            if let Some(spec) = allowed_versions {
                body["allowed_versions"] = json!(spec);
            }
            let doc = s.call(Endpoint::DecidePackage, &[&ecosystem, &name], Payload::Json(body))?;
            s.emit(&doc, render::package);
        }
        Command::Deploy(cmd) => {
            let doc = match cmd {
                DeployCmd::Rollback { app, version } => {
                    s.call(Endpoint::Rollback, &[&app], Payload::Json(json!({ "version_no": version })))?
                }
                DeployCmd::Scale { slug, replicas } => {
                    s.call(Endpoint::Scale, &[&slug], Payload::Json(json!({ "replicas": replicas })))?
                }
                DeployCmd::Retire { slug } => s.call(Endpoint::Retire, &[&slug], Payload::None)?,
            };
            s.emit(&doc, render::deployment);
        }
        Command::Audit(AuditCmd::Export { from, out }) => {
            let reply = s.call_query(Endpoint::Audit, &[], &[("from", from.to_string())], Payload::None)?;
            match out {
                Some(path) => {
                    std::fs::write(&path, &reply.text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                    let lines = reply.text.lines().count();
                    s.emit(&json!({ "events": lines, "path": path.display().to_string() }), |d| {
                        format!("wrote {} events to {}", d["events"], path.display())
                    });
                }
                None => print!("{}", reply.text),
            }
        }
        Command::Audit(AuditCmd::Verify { file: None }) => {
            let reply = s.call_query(Endpoint::Audit, &[], &[("from", "0".into())], Payload::None)?;
            return Ok(verdict(&verify_export(&reply.text), config.output_mode));
        }
        Command::Run(a) => {
            let body = Payload::Json(params_body(&a.params));
            let t = a.target;
            let doc = match (t.slug, t.preview, t.version) {
                (Some(slug), _, _) => s.call(Endpoint::RunApp, &[&slug], body)?,
                (_, Some(token), _) => s.call(Endpoint::RunPreview, &[&token], body)?,
                (_, _, Some(id)) => s.call(Endpoint::RunVersion, &[&id], body)?,
                _ => return Err(CliError::Usage("one of --slug, --preview or --version is required".into())),
            };
            s.emit(&doc, render::run);
            if doc["result"]["status"] != json!("success") {
                return Ok(EXIT_REJECTED);
            }
        }
        Command::Open(a) => {
            let doc = match (a.target.slug, a.target.preview) {
                (Some(slug), _) => s.call(Endpoint::OpenApp, &[&slug], Payload::None)?,
                (_, Some(token)) => s.call(Endpoint::OpenPreview, &[&token], Payload::None)?,
                _ => return Err(CliError::Usage("one of --slug or --preview is required".into())),
            };
            s.emit(&doc, render::shell);
        }
        Command::Serve(_) | Command::MockRunner(_) | Command::Audit(AuditCmd::Verify { file: Some(_) }) => unreachable!("handled above"),
    }
    Ok(EXIT_OK)
}

fn wait_for(s: &Session<'_>, submitted: &Value, limit: Duration) -> Result<Value, CliError> {
    let app = submitted["version"]["app_id"].as_str().unwrap_or_default().to_string();
    let n = submitted["version"]["version_no"].clone();
    let started = Instant::now();
    let mut current = submitted.clone();
    while !settled(state_of(&current)) {
        if started.elapsed() > limit {
            return Err(CliError::Transport(format!("{app}.{n} still {} after {}s", state_of(&current), limit.as_secs())));
        }
        std::thread::sleep(Duration::from_millis(100));
        let doc = s.call(Endpoint::ListVersions, &[&app], Payload::None)?;
        if let Some(v) = doc["versions"].as_array().and_then(|vs| vs.iter().find(|v| v["version"]["version_no"] == n)) {
            current = v.clone();
        }
    }
    Ok(current)
}

fn verdict(v: &ChainVerdict, mode: OutputMode) -> i32 {
    match mode {
        OutputMode::Machine => println!("{}", json!(v)),
        OutputMode::Human => match v.first_bad_seq {
            None => println!("audit chain intact: {} events", v.checked),
            Some(seq) => println!("audit chain broken at event {seq} ({} verified before it)", v.checked),
        },
    }
    if v.ok {
        EXIT_OK
    } else {
        EXIT_REJECTED
    }
}
