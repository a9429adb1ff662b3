//! Local stand-ins for the testnet faucet and a rippled JSON-RPC node.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::Router;
use serde_json::{json, Value};

use super::keys::{sha512_half, Seed};
use super::tx::{tx_hash, verify_signed_blob};
use crate::mock_http::{self, MockError, ServerHandle};

/// Balance every mock faucet account starts with.
pub const MOCK_FAUCET_XRP: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaucetOptions {
    pub balance_xrp: u64,
    /// Answer every request with HTTP 503.
    pub refuse: bool,
}

impl Default for FaucetOptions {
    fn default() -> Self {
        FaucetOptions { balance_xrp: MOCK_FAUCET_XRP, refuse: false }
    }
}

struct FaucetState {
    options: FaucetOptions,
    issued: AtomicU64,
    requests: Mutex<Vec<String>>,
}

pub struct MockFaucet {
    server: ServerHandle,
    state: Arc<FaucetState>,
}

impl MockFaucet {
    pub fn url(&self) -> String {
        self.server.url("/accounts")
    }

    /// Raw request bodies received so far.
    pub fn requests(&self) -> Vec<String> {
        self.state.requests.lock().expect("request log").clone()
    }

    pub fn join(self) {
        self.server.join()
    }
}

/// The seed the mock faucet hands out as its `n`th account (0-based).
pub fn mock_faucet_seed(n: u64) -> Seed {
    let mut data = b"hookforge mock faucet".to_vec();
    data.extend(n.to_be_bytes());
    Seed::from_entropy(sha512_half(&data)[..16].try_into().expect("16 bytes"))
}

pub fn serve_mock_faucet(port: u16, options: FaucetOptions) -> Result<MockFaucet, MockError> {
    let listener = mock_http::bind(port)?;
    let state = Arc::new(FaucetState { options, issued: AtomicU64::new(0), requests: Mutex::new(Vec::new()) });
    let router = Router::new()
        .route("/accounts", post(faucet_handler))
        .route("/", post(faucet_handler))
        .with_state(state.clone());
    Ok(MockFaucet { server: mock_http::spawn(listener, router)?, state })
}

async fn faucet_handler(State(state): State<Arc<FaucetState>>, body: String) -> (StatusCode, String) {
    state.requests.lock().expect("request log").push(body);
    if state.options.refuse {
        return (StatusCode::SERVICE_UNAVAILABLE, json!({"error": "faucet is dry"}).to_string());
    }
    let n = state.issued.fetch_add(1, Ordering::SeqCst);
    let seed = mock_faucet_seed(n);
    let response = json!({
        "account": { "address": seed.keypair().address().as_str(), "secret": seed.encode() },
        "balance": state.options.balance_xrp,
    });
    (StatusCode::OK, response.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeOptions {
    /// Engine result every valid submission gets instead of `tesSUCCESS`.
    pub reject_with: Option<String>,
    pub min_fee_drops: u64,
    pub verify_signatures: bool,
}

impl Default for NodeOptions {
    fn default() -> Self {
        NodeOptions { reject_with: None, min_fee_drops: 10, verify_signatures: true }
    }
}

struct NodeState {
    options: NodeOptions,
    results: Mutex<HashMap<String, Value>>,
    sequences: Mutex<HashMap<String, u32>>,
    requests: Mutex<Vec<String>>,
}

pub struct MockNode {
    server: ServerHandle,
    state: Arc<NodeState>,
}

impl MockNode {
    pub fn url(&self) -> String {
        self.server.url("/")
    }

    pub fn requests(&self) -> Vec<String> {
        self.state.requests.lock().expect("request log").clone()
    }

    pub fn join(self) {
        self.server.join()
    }
}

pub fn serve_mock_node(port: u16, options: NodeOptions) -> Result<MockNode, MockError> {
    let listener = mock_http::bind(port)?;
    let state = Arc::new(NodeState {
        options,
        results: Mutex::new(HashMap::new()),
        sequences: Mutex::new(HashMap::new()),
        requests: Mutex::new(Vec::new()),
    });
    let router = Router::new().route("/", post(node_handler)).with_state(state.clone());
    Ok(MockNode { server: mock_http::spawn(listener, router)?, state })
}

fn rpc_error(error: &str, message: impl Into<String>) -> Value {
    json!({ "result": { "status": "error", "error": error, "error_message": message.into() } })
}

async fn node_handler(State(state): State<Arc<NodeState>>, body: String) -> (StatusCode, String) {
    state.requests.lock().expect("request log").push(body.clone());
    let Ok(req) = serde_json::from_str::<Value>(&body) else {
        return (StatusCode::BAD_REQUEST, rpc_error("invalidParams", "body is not JSON").to_string());
    };
    let params = &req["params"][0];
    let response = match req["method"].as_str() {
        Some("submit") => submit(&state, params),
        Some("account_info") => match params["account"].as_str() {
            Some(account) => {
                let seq = state.sequences.lock().expect("sequences").get(account).copied().unwrap_or(1);
                json!({ "result": { "status": "success", "account_data": { "Account": account, "Sequence": seq } } })
            }
            None => rpc_error("invalidParams", "missing account"),
        },
        Some(other) => rpc_error("unknownCmd", format!("unknown method {other}")),
        None => rpc_error("invalidParams", "missing method"),
    };
    (StatusCode::OK, response.to_string())
}

fn submit(state: &NodeState, params: &Value) -> Value {
    let Some(blob_hex) = params["tx_blob"].as_str() else {
        return rpc_error("invalidParams", "missing tx_blob");
    };
    let Ok(blob) = hex::decode(blob_hex) else {
        return rpc_error("invalidTransaction", "tx_blob is not hex");
    };
    let hash = tx_hash(&blob);
    if let Some(previous) = state.results.lock().expect("results").get(&hash) {
        return previous.clone();
    }
    let tx = if state.options.verify_signatures {
        match verify_signed_blob(&blob) {
            Ok(tx) => tx,
            Err(e) => return rpc_error("invalidTransaction", format!("fails local checks: {e}")),
        }
    } else {
        match super::codec::decode(&blob) {
            Ok(tx) => tx,
            Err(e) => return rpc_error("invalidTransaction", e.to_string()),
        }
    };
    let account = tx.get("Account").and_then(Value::as_str).unwrap_or_default().to_string();
    let fee: u64 = tx.get("Fee").and_then(Value::as_str).and_then(|f| f.parse().ok()).unwrap_or(0);
    let sequence = tx.get("Sequence").and_then(Value::as_u64).unwrap_or(0);

    let mut sequences = state.sequences.lock().expect("sequences");
    let expected = sequences.get(&account).copied().unwrap_or(1) as u64;
    let (engine, message) = if fee < state.options.min_fee_drops {
        ("telINSUF_FEE_P".to_string(), "Fee insufficient.".to_string())
    } else if sequence < expected {
        ("tefPAST_SEQ".to_string(), "This sequence number has already passed.".to_string())
    } else if sequence > expected {
        ("terPRE_SEQ".to_string(), "Missing/inapplicable prior transaction.".to_string())
    } else if let Some(code) = &state.options.reject_with {
        (code.clone(), "Rejected by mock node.".to_string())
    } else {
        sequences.insert(account, expected as u32 + 1);
        ("tesSUCCESS".to_string(), "The transaction was applied.".to_string())
    };
    let mut tx_json = tx;
    tx_json.insert("hash".into(), json!(hash));
    let response = json!({ "result": {
        "status": "success",
        "engine_result": engine,
        "engine_result_message": message,
        "tx_blob": blob_hex,
        "tx_json": tx_json,
    }});
    state.results.lock().expect("results").insert(hash, response.clone());
    response
}
