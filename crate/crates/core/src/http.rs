//! Blocking JSON POST shared by the compiler and ledger clients.

use std::time::Duration;

use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum HttpFailure {
    Unreachable(String),
    Timeout,
    Malformed(String),
}

pub(crate) struct HttpResponse {
    pub status: u16,
    pub body: String,
}

impl HttpResponse {
    pub fn json(&self) -> Result<Value, HttpFailure> {
        serde_json::from_str(&self.body).map_err(|e| {
            HttpFailure::Malformed(format!("HTTP {} with a body that is not JSON: {e}", self.status))
        })
    }
}

pub(crate) fn post_json(url: &str, body: &Value, timeout: Duration) -> Result<HttpResponse, HttpFailure> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into();
    let mut resp = agent.post(url).send_json(body).map_err(classify)?;
    let status = resp.status().as_u16();
    let body = resp.body_mut().read_to_string().map_err(classify)?;
    Ok(HttpResponse { status, body })
}

fn classify(e: ureq::Error) -> HttpFailure {
    match e {
        ureq::Error::Timeout(_) => HttpFailure::Timeout,
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => HttpFailure::Timeout,
        ureq::Error::Io(io) => HttpFailure::Unreachable(io.to_string()),
        ureq::Error::ConnectionFailed | ureq::Error::HostNotFound | ureq::Error::BadUri(_) => {
            HttpFailure::Unreachable(e.to_string())
        }
        ureq::Error::Protocol(p) => HttpFailure::Unreachable(format!("connection failed mid-response: {p}")),
        other => HttpFailure::Malformed(other.to_string()),
    }
}
