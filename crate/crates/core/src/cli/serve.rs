use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Args;
use serde::Deserialize;

use super::{CliError, EXIT_OK};
use crate::api::{router, runner_router, Service};
use crate::persist::WalStore;
use crate::platform::{NewUser, Platform, PlatformConfig, Role};
use crate::sandbox::{read_frame, serve_mock, write_frame, HttpRunner, MockRunner, ProcessRunner, Runner};

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: String,
    /// Batch log; created on first start and replayed afterwards.
    #[arg(long)]
    data: PathBuf,
    /// TOML file of accounts to create if they do not exist yet.
    #[arg(long)]
    users: Option<PathBuf>,
    /// Registry export loaded when the registry is empty.
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Prefix for stable and preview URLs.
    #[arg(long, default_value = "http://127.0.0.1:8080")]
    base_url: String,
    /// `mock`, `process:<program> [args...]` or `http:<url>`.
    #[arg(long, default_value = "mock")]
    runner: String,
    /// Leave approved versions for an admin to deploy.
    #[arg(long)]
    no_auto_deploy: bool,
    /// Leave validated versions until someone runs them.
    #[arg(long)]
    no_auto_build_check: bool,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct MockRunnerArgs {
    /// Serve `POST /run` on this address instead of reading stdin.
    #[arg(long)]
    http: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserEntry {
    pub id: String,
    #[serde(default)]
    pub name: Option<String>,
    pub roles: Vec<Role>,
    pub token: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UsersFile {
    #[serde(default, rename = "user")]
    pub users: Vec<UserEntry>,
}

pub fn load_users(text: &str) -> Result<UsersFile, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

fn parse_runner(spec: &str) -> Result<Arc<dyn Runner>, CliError> {
    if spec == "mock" {
        return Ok(Arc::new(MockRunner));
    }
    if let Some(cmd) = spec.strip_prefix("process:") {
        let mut words = cmd.split_whitespace().map(String::from);
        let program = words.next().ok_or_else(|| CliError::Usage("process runner needs a program".into()))?;
        return Ok(Arc::new(ProcessRunner::new(program, words.collect())));
    }
    if let Some(url) = spec.strip_prefix("http:") {
        return Ok(Arc::new(HttpRunner::new(url)));
    }
    Err(CliError::Usage(format!("unknown runner {spec:?}")))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn startup(e: impl std::fmt::Display) -> CliError {
    CliError::Transport(format!("startup: {e}"))
}

pub(super) fn serve(args: &ServeArgs) -> Result<i32, CliError> {
    let store = WalStore::open(&args.data).map_err(startup)?;
    let config = PlatformConfig {
        base_url: args.base_url.trim_end_matches('/').to_string(),
        auto_deploy: !args.no_auto_deploy,
        seed: args.seed,
        ..PlatformConfig::default()
    };
    let platform = Platform::open(Arc::new(store), config)
        .map_err(startup)?
        .with_runner(parse_runner(&args.runner)?);

    if let Some(path) = &args.users {
        let file = load_users(&read_text(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        for u in file.users {
            if platform.user(&u.id).is_some() {
                continue;
            }
            let mut new = NewUser::new(&u.id, &u.roles, &u.token);
            if let Some(name) = u.name {
                new.display_name = name;
            }
            platform.register_user(new).map_err(startup)?;
        }
    }
    if let Some(path) = &args.registry {
        if platform.registry_rows().is_empty() {
            platform.seed_registry(&read_text(path)?).map_err(startup)?;
        }
    }

    let service = Service::new(Arc::new(platform)).with_auto_build_check(!args.no_auto_build_check);
    let app = router(Arc::new(service));
    run_until_killed(&args.listen, app)
}

fn run_until_killed(addr: &str, app: axum::Router) -> Result<i32, CliError> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(startup)?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(startup)?;
        let local = listener.local_addr().map_err(startup)?;
        println!("listening on http://{local}");
        let _ = std::io::stdout().flush();
        crate::api::serve(listener, app).await.map_err(startup)?;
        Ok(EXIT_OK)
    })
}

pub(super) fn mock_runner(args: &MockRunnerArgs) -> Result<i32, CliError> {
    if let Some(addr) = &args.http {
        return run_until_killed(addr, runner_router());
    }
    let request = read_frame(&mut std::io::stdin().lock()).map_err(|e| CliError::Transport(format!("stdin: {e}")))?;
    write_frame(&mut std::io::stdout().lock(), &serve_mock(&request)).map_err(|e| CliError::Transport(format!("stdout: {e}")))?;
    Ok(EXIT_OK)
}
