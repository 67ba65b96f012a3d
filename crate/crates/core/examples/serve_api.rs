//! Start the HTTP API on an ephemeral port with the demo cast and data,
//! then query it the way the CLI does.

use std::sync::Arc;

use appforge::api::{router, spawn_server, Service};
use appforge::demo::{binita_scenario, memory_platform, token_for};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (p, cast) = memory_platform()?;
    binita_scenario(&p, &cast)?;
    let server = spawn_server("127.0.0.1:0", router(Arc::new(Service::new(Arc::new(p)))))?;
    println!("listening on {}", server.url());

    let http = reqwest::blocking::Client::new();
    for (user, path) in [("binita", "/api/apps"), ("security", "/api/registry"), ("binita", "/internal/spreadsheets-generator")] {
        let resp = http.get(format!("{}{path}", server.url())).bearer_auth(token_for(user)).send()?;
        println!("\nGET {path} as {user}: {}", resp.status());
        println!("{}", resp.text()?);
    }
    let resp = http.get(format!("{}/api/apps", server.url())).send()?;
    println!("\nGET /api/apps without a token: {}", resp.status());
    Ok(())
}
