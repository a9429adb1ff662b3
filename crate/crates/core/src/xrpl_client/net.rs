use std::time::Duration;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use super::tx::{tx_hash, TestnetAccount};
use crate::address::AccountAddress;
use crate::http::{post_json, HttpFailure};

pub const ENV_TESTNET_URL: &str = "HOOKFORGE_TESTNET_URL";
pub const ENV_FAUCET_URL: &str = "HOOKFORGE_FAUCET_URL";
pub const DEFAULT_TESTNET_URL: &str = "https://hooks-testnet-v3.xrpl-labs.com";
pub const DEFAULT_FAUCET_URL: &str = "https://hooks-testnet-v3.xrpl-labs.com/accounts";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(20);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClientError {
    #[error("faucet unreachable: {0}")]
    FaucetUnreachable(String),
    #[error("faucet refused: {0}")]
    FaucetRefused(String),
    #[error("node unreachable: {0}")]
    NodeUnreachable(String),
    #[error("node response is malformed: {0}")]
    MalformedResponse(String),
}

impl ClientError {
    pub fn code(&self) -> &'static str {
        match self {
            ClientError::FaucetUnreachable(_) => "FAUCET_UNREACHABLE",
            ClientError::FaucetRefused(_) => "FAUCET_REFUSED",
            ClientError::NodeUnreachable(_) => "NODE_UNREACHABLE",
            ClientError::MalformedResponse(_) => "MALFORMED_RESPONSE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoints {
    pub node_url: String,
    pub faucet_url: String,
    pub timeout: Duration,
}

impl Endpoints {
    pub fn from_env() -> Self {
        Endpoints {
            node_url: std::env::var(ENV_TESTNET_URL).unwrap_or_else(|_| DEFAULT_TESTNET_URL.into()),
            faucet_url: std::env::var(ENV_FAUCET_URL).unwrap_or_else(|_| DEFAULT_FAUCET_URL.into()),
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

const DROPS_PER_XRP: f64 = 1_000_000.0;

/// Asks the faucet for a new funded account. The faucet's reported balance
/// is in XRP.
pub fn faucet_create_account(faucet_url: &str, timeout: Duration) -> Result<TestnetAccount, ClientError> {
    let resp = post_json(faucet_url, &json!({}), timeout).map_err(|f| match f {
        HttpFailure::Unreachable(m) => ClientError::FaucetUnreachable(m),
        HttpFailure::Timeout => ClientError::FaucetUnreachable(format!("no answer within {timeout:?}")),
        HttpFailure::Malformed(m) => ClientError::FaucetRefused(m),
    })?;
    if !(200..300).contains(&resp.status) {
        return Err(ClientError::FaucetRefused(format!("HTTP {}: {}", resp.status, resp.body.chars().take(200).collect::<String>())));
    }
    let body = resp.json().map_err(|_| ClientError::FaucetRefused("response is not JSON".into()))?;
    let refused = |m: &str| ClientError::FaucetRefused(m.to_string());
    // `{account: {address, secret}, balance}`, or the flat `{address, secret, xrp}` some faucets use
    let holder = if body["account"].is_object() { &body["account"] } else { &body };
    let address = holder["address"].as_str().ok_or_else(|| refused("response lacks account.address"))?;
    let secret = holder["secret"].as_str().ok_or_else(|| refused("response lacks account.secret"))?;
    let xrp = body["balance"].as_f64().or_else(|| body["xrp"].as_f64()).ok_or_else(|| refused("response lacks a numeric balance"))?;
    let drops = (xrp * DROPS_PER_XRP).round();
    if !(drops >= 1.0 && drops <= u64::MAX as f64) {
        return Err(refused("faucet funded the account with nothing"));
    }
    let address = AccountAddress::parse(address).map_err(|e| ClientError::FaucetRefused(e.to_string()))?;
    TestnetAccount::new(address, secret.to_string(), drops as u64).map_err(|e| ClientError::FaucetRefused(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubmitStatus {
    Success,
    Failure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubmitResult {
    pub status: SubmitStatus,
    pub engine_code: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub engine_message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tx_hash: Option<String>,
}

fn rpc(node_url: &str, method: &str, params: Value, timeout: Duration) -> Result<Value, ClientError> {
    let body = json!({ "method": method, "params": [params] });
    let resp = post_json(node_url, &body, timeout).map_err(|f| match f {
        HttpFailure::Unreachable(m) => ClientError::NodeUnreachable(m),
        HttpFailure::Timeout => ClientError::NodeUnreachable(format!("no answer within {timeout:?}")),
        HttpFailure::Malformed(m) => ClientError::MalformedResponse(m),
    })?;
    let value = resp.json().map_err(|_| ClientError::MalformedResponse(format!("HTTP {} with a non-JSON body", resp.status)))?;
    match value.get("result") {
        Some(r) if r.is_object() => Ok(r.clone()),
        _ => Err(ClientError::MalformedResponse(format!("HTTP {} without a result object", resp.status))),
    }
}

/// Submits a signed blob. The hash is computed locally, so resubmitting the
/// same blob always reports the same hash.
pub fn submit(blob_hex: &str, node_url: &str, timeout: Duration) -> Result<SubmitResult, ClientError> {
    let blob = hex::decode(blob_hex).map_err(|e| ClientError::MalformedResponse(format!("blob is not hex: {e}")))?;
    let local_hash = tx_hash(&blob);
    let result = rpc(node_url, "submit", json!({ "tx_blob": blob_hex }), timeout)?;

    if result["status"] == "error" {
        let code = result["error"].as_str().ok_or_else(|| ClientError::MalformedResponse("error without a code".into()))?;
        return Ok(SubmitResult {
            status: SubmitStatus::Failure,
            engine_code: code.to_string(),
            engine_message: result["error_message"].as_str().map(str::to_string),
            tx_hash: None,
        });
    }
    let engine = result["engine_result"]
        .as_str()
        .ok_or_else(|| ClientError::MalformedResponse("result lacks engine_result".into()))?;
    if let Some(reported) = result["tx_json"]["hash"].as_str() {
        if !reported.eq_ignore_ascii_case(&local_hash) {
            return Err(ClientError::MalformedResponse(format!("node reports hash {reported}, expected {local_hash}")));
        }
    }
    let ok = engine == "tesSUCCESS" || engine == "terQUEUED";
    Ok(SubmitResult {
        status: if ok { SubmitStatus::Success } else { SubmitStatus::Failure },
        engine_code: engine.to_string(),
        engine_message: result["engine_result_message"].as_str().map(str::to_string),
        tx_hash: Some(local_hash),
    })
}

/// Next sequence number for `account`, from `account_info`.
pub fn account_sequence(account: &AccountAddress, node_url: &str, timeout: Duration) -> Result<u32, ClientError> {
    let result = rpc(node_url, "account_info", json!({ "account": account.as_str(), "ledger_index": "current" }), timeout)?;
    if result["status"] == "error" {
        let code = result["error"].as_str().unwrap_or("unknown error");
        return Err(ClientError::MalformedResponse(format!("account_info failed: {code}")));
    }
    result["account_data"]["Sequence"]
        .as_u64()
        .and_then(|n| u32::try_from(n).ok())
        .ok_or_else(|| ClientError::MalformedResponse("account_info lacks account_data.Sequence".into()))
}
