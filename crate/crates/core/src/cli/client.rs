use std::time::Duration;

use reqwest::blocking::{multipart, Client as Http, RequestBuilder};
use serde_json::Value;

use super::CliError;
use crate::api::{Endpoint, Method};

pub(crate) enum Payload {
    None,
    Json(Value),
    Form(Vec<(&'static str, Vec<u8>)>),
}

pub(crate) struct Reply {
    pub status: u16,
    pub text: String,
}

impl Reply {
    pub fn json(&self) -> Result<Value, CliError> {
        serde_json::from_str(&self.text).map_err(|e| CliError::Transport(format!("response is not JSON: {e}")))
    }
}

pub(crate) struct Client {
    base: String,
    token: Option<String>,
    http: Http,
}

impl Client {
    pub fn new(base: &str, token: Option<String>) -> Result<Self, CliError> {
        let http = Http::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| CliError::Transport(e.to_string()))?;
        Ok(Client {
            base: base.trim_end_matches('/').to_string(),
            token,
            http,
        })
    }

    pub fn call(&self, endpoint: Endpoint, args: &[&str], query: &[(&str, String)], payload: Payload) -> Result<Reply, CliError> {
        let (method, _) = endpoint.template();
        let url = format!("{}{}", self.base, endpoint.path(args));
        let mut req: RequestBuilder = match method {
            Method::Get => self.http.get(&url),
            Method::Post => self.http.post(&url),
        };
        if !query.is_empty() {
            req = req.query(query);
        }
        if let Some(t) = &self.token {
            req = req.bearer_auth(t);
        }
        req = match payload {
            Payload::None if method == Method::Post => req.json(&serde_json::json!({})),
            Payload::None => req,
            Payload::Json(v) => req.json(&v),
            Payload::Form(parts) => {
                let mut form = multipart::Form::new();
                for (name, bytes) in parts {
                    form = form.part(name, multipart::Part::bytes(bytes).file_name(name));
                }
                req.multipart(form)
            }
        };
        let resp = req.send().map_err(|e| CliError::Transport(format!("{url}: {e}")))?;
        let status = resp.status().as_u16();
        let text = resp.text().map_err(|e| CliError::Transport(e.to_string()))?;
        Ok(Reply { status, text })
    }
}
