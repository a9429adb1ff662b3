//! Client for a remote C to wasm compile service, and a scripted local
//! stand-in for it.
//!
//! Wire protocol, `POST /compile`:
//!
//! ```text
//! request  {"source": "<C text>", "output": "wasm"}
//! success  {"success": true, "wasm_base64": "...", "compiler_id": "..."}
//! failure  {"success": false, "errors": [{"line": 3, "column": 7, "message": "..."}]}
//! ```

use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::Router;
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codegen_c::{block_at, CSource, LineRange};
use crate::http::{post_json, HttpFailure};
use crate::mock_http::{self, MockError, ServerHandle};

pub const WASM_MAGIC: [u8; 8] = [0x00, 0x61, 0x73, 0x6D, 0x01, 0x00, 0x00, 0x00];
/// The empty module: just the header. Smallest input `WebAssembly.validate` accepts.
pub const MOCK_MODULE: [u8; 8] = WASM_MAGIC;
pub const MOCK_COMPILER_ID: &str = "mock";
pub const DEFAULT_COMPILER_URL: &str = "http://127.0.0.1:9870/compile";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
pub const ENV_COMPILER_URL: &str = "HOOKFORGE_COMPILER_URL";
/// Command run by the compile server instead of the canned module when set.
pub const ENV_LOCAL_TOOLCHAIN: &str = "HOOKFORGE_LOCAL_TOOLCHAIN";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WasmArtifact {
    #[serde(skip)]
    pub bytes: Vec<u8>,
    /// Hex SHA-256 of the C text that was compiled.
    pub source_digest: String,
    pub compiler_id: String,
    pub size_bytes: usize,
}

impl WasmArtifact {
    pub fn new(bytes: Vec<u8>, source_text: &str, compiler_id: impl Into<String>) -> Result<Self, BridgeError> {
        if !bytes.starts_with(&WASM_MAGIC) {
            let head = hex::encode_upper(&bytes[..bytes.len().min(8)]);
            return Err(BridgeError::ArtifactInvalid(format!("module starts with {head:?}, not the wasm header")));
        }
        Ok(WasmArtifact {
            size_bytes: bytes.len(),
            bytes,
            source_digest: hex::encode(Sha256::digest(source_text.as_bytes())),
            compiler_id: compiler_id.into(),
        })
    }

    pub fn to_base64(&self) -> String {
        BASE64.encode(&self.bytes)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileError {
    /// 1-based line in the submitted C, 0 for errors without a position.
    pub line: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapped_block_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompileOutcome {
    Artifact(WasmArtifact),
    Errors(Vec<CompileError>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BridgeError {
    #[error("compiler endpoint unreachable: {0}")]
    EndpointUnreachable(String),
    #[error("compiler did not answer within {0:?}")]
    Timeout(Duration),
    #[error("compiler response violates the protocol: {0}")]
    ProtocolError(String),
    #[error("compiler returned an invalid module: {0}")]
    ArtifactInvalid(String),
}

impl BridgeError {
    pub fn code(&self) -> &'static str {
        match self {
            BridgeError::EndpointUnreachable(_) => "ENDPOINT_UNREACHABLE",
            BridgeError::Timeout(_) => "TIMEOUT",
            BridgeError::ProtocolError(_) => "PROTOCOL_ERROR",
            BridgeError::ArtifactInvalid(_) => "ARTIFACT_INVALID",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompilerConfig {
    pub url: String,
    pub timeout: Duration,
}

impl Default for CompilerConfig {
    fn default() -> Self {
        CompilerConfig { url: DEFAULT_COMPILER_URL.into(), timeout: DEFAULT_TIMEOUT }
    }
}

impl CompilerConfig {
    pub fn from_env() -> Self {
        let url = std::env::var(ENV_COMPILER_URL).unwrap_or_else(|_| DEFAULT_COMPILER_URL.into());
        CompilerConfig { url, ..Default::default() }
    }
}

pub fn compile_c(source: &CSource, config: &CompilerConfig) -> Result<CompileOutcome, BridgeError> {
    compile_text(&source.text, &source.block_map, config)
}

/// Compiles raw C text; errors are mapped back through `block_map` when given.
pub fn compile_text(text: &str, block_map: &[LineRange], config: &CompilerConfig) -> Result<CompileOutcome, BridgeError> {
    let request = json!({ "source": text, "output": "wasm" });
    let resp = post_json(&config.url, &request, config.timeout).map_err(|f| match f {
        HttpFailure::Unreachable(m) => BridgeError::EndpointUnreachable(m),
        HttpFailure::Timeout => BridgeError::Timeout(config.timeout),
        HttpFailure::Malformed(m) => BridgeError::ProtocolError(m),
    })?;
    let body = resp.json().map_err(|_| {
        BridgeError::ProtocolError(format!("HTTP {} with a body that is not JSON", resp.status))
    })?;
    parse_response(&body, text, block_map).map_err(|m| BridgeError::ProtocolError(format!("HTTP {}: {m}", resp.status)))?
}

#[derive(Deserialize)]
struct WireResponse {
    success: bool,
    wasm_base64: Option<String>,
    compiler_id: Option<String>,
    errors: Option<Vec<CompileError>>,
}

fn parse_response(body: &Value, text: &str, block_map: &[LineRange]) -> Result<Result<CompileOutcome, BridgeError>, String> {
    let wire: WireResponse = serde_json::from_value(body.clone()).map_err(|e| e.to_string())?;
    if wire.success {
        let encoded = wire.wasm_base64.ok_or("success without wasm_base64")?;
        let compiler_id = wire.compiler_id.ok_or("success without compiler_id")?;
        let bytes = BASE64.decode(encoded.trim()).map_err(|e| format!("wasm_base64 is not base64: {e}"))?;
        return Ok(WasmArtifact::new(bytes, text, compiler_id).map(CompileOutcome::Artifact));
    }
    let mut errors = wire.errors.filter(|e| !e.is_empty()).ok_or("failure without errors")?;
    let line_count = text.lines().count();
    for e in &mut errors {
        if e.line > line_count {
            e.line = 0;
        }
        e.mapped_block_id = block_at(block_map, e.line).map(str::to_string);
    }
    Ok(Ok(CompileOutcome::Errors(errors)))
}

/// How the compile server turns C into wasm.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum CompilerBackend {
    /// Canned module plus `//mock:` directives.
    #[default]
    Mock,
    /// Runs `<cmd> <input.c> <output.wasm>` and relays its diagnostics.
    Toolchain(PathBuf),
}

impl CompilerBackend {
    pub fn from_env() -> Self {
        match std::env::var_os(ENV_LOCAL_TOOLCHAIN) {
            Some(cmd) if !cmd.is_empty() => CompilerBackend::Toolchain(cmd.into()),
            _ => CompilerBackend::Mock,
        }
    }
}

struct ServerState {
    backend: CompilerBackend,
    requests: Mutex<Vec<String>>,
}

pub struct MockCompiler {
    server: ServerHandle,
    state: Arc<ServerState>,
}

impl MockCompiler {
    pub fn url(&self) -> String {
        self.server.url("/compile")
    }

    pub fn config(&self) -> CompilerConfig {
        CompilerConfig { url: self.url(), timeout: DEFAULT_TIMEOUT }
    }

    pub fn addr(&self) -> std::net::SocketAddr {
        self.server.addr()
    }

    /// Sources received so far, in arrival order.
    pub fn requests(&self) -> Vec<String> {
        self.state.requests.lock().expect("request log").clone()
    }

    pub fn join(self) {
        self.server.join()
    }
}

/// Starts the scripted compiler on 127.0.0.1:`port` (0 for any free port).
///
/// Directives in the C text steer the response:
/// `//mock:fail:<line>:<message>` reports an error (repeatable),
/// `//mock:badmagic` returns a module with a wrong header,
/// `//mock:garbage` returns a body that is not JSON,
/// `//mock:sleep:<ms>` delays the answer. Without directives, a line that
/// looks like a statement but lacks its `;` is reported; anything else
/// compiles to the canned module.
pub fn serve_mock_compiler(port: u16) -> Result<MockCompiler, MockError> {
    serve_compiler(port, CompilerBackend::Mock)
}

pub fn serve_compiler(port: u16, backend: CompilerBackend) -> Result<MockCompiler, MockError> {
    let listener = mock_http::bind(port)?;
    let state = Arc::new(ServerState { backend, requests: Mutex::new(Vec::new()) });
    let router = Router::new().route("/compile", post(handle_compile)).with_state(state.clone());
    Ok(MockCompiler { server: mock_http::spawn(listener, router)?, state })
}

async fn handle_compile(State(state): State<Arc<ServerState>>, body: String) -> (StatusCode, String) {
    let Ok(req) = serde_json::from_str::<Value>(&body) else {
        return (StatusCode::BAD_REQUEST, json!({"success": false, "errors": [{"line": 0, "message": "request is not JSON"}]}).to_string());
    };
    let (Some(source), Some("wasm")) = (req["source"].as_str(), req["output"].as_str()) else {
        let err = json!({"success": false, "errors": [{"line": 0, "message": "expected {\"source\": string, \"output\": \"wasm\"}"}]});
        return (StatusCode::BAD_REQUEST, err.to_string());
    };
    state.requests.lock().expect("request log").push(source.to_string());

    let directives = Directives::scan(source);
    if let Some(ms) = directives.sleep_ms {
        tokio::time::sleep(Duration::from_millis(ms)).await;
    }
    if directives.garbage {
        return (StatusCode::OK, "<html>internal error</html>".into());
    }
    let response = match &state.backend {
        CompilerBackend::Mock => mock_response(source, &directives),
        CompilerBackend::Toolchain(cmd) => {
            let (cmd, source) = (cmd.clone(), source.to_string());
            tokio::task::spawn_blocking(move || toolchain_response(&cmd, &source))
                .await
                .unwrap_or_else(|e| failure(vec![(0, None, format!("toolchain task failed: {e}"))]))
        }
    };
    (StatusCode::OK, response.to_string())
}

#[derive(Default)]
struct Directives {
    fails: Vec<(usize, String)>,
    badmagic: bool,
    garbage: bool,
    sleep_ms: Option<u64>,
}

impl Directives {
    fn scan(source: &str) -> Self {
        let mut d = Directives::default();
        for line in source.lines() {
            let Some(rest) = line.trim().strip_prefix("//mock:") else { continue };
            if let Some(spec) = rest.strip_prefix("fail:") {
                let (n, msg) = spec.split_once(':').unwrap_or((spec, "error"));
                d.fails.push((n.trim().parse().unwrap_or(0), msg.to_string()));
            } else if rest == "badmagic" {
                d.badmagic = true;
            } else if rest == "garbage" {
                d.garbage = true;
            } else if let Some(ms) = rest.strip_prefix("sleep:") {
                d.sleep_ms = ms.trim().parse().ok();
            }
        }
        d
    }
}

fn failure(errors: Vec<(usize, Option<usize>, String)>) -> Value {
    let errors: Vec<Value> = errors
        .into_iter()
        .map(|(line, column, message)| match column {
            Some(c) => json!({"line": line, "column": c, "message": message}),
            None => json!({"line": line, "message": message}),
        })
        .collect();
    json!({"success": false, "errors": errors})
}

fn success(bytes: &[u8], compiler_id: &str) -> Value {
    json!({"success": true, "wasm_base64": BASE64.encode(bytes), "compiler_id": compiler_id})
}

fn mock_response(source: &str, d: &Directives) -> Value {
    if !d.fails.is_empty() {
        return failure(d.fails.iter().map(|(l, m)| (*l, None, m.clone())).collect());
    }
    let missing = missing_semicolons(source);
    if !missing.is_empty() {
        return failure(missing.into_iter().map(|(l, c)| (l, Some(c), "expected ';' after expression".into())).collect());
    }
    if d.badmagic {
        return success(b"\0wasm\x02\0\0\0", MOCK_COMPILER_ID);
    }
    success(&MOCK_MODULE, MOCK_COMPILER_ID)
}

/// `line` up to a `//` that is not inside a string or character literal.
fn strip_line_comment(line: &str) -> &str {
    let bytes = line.as_bytes();
    let mut quote = None;
    let mut i = 0;
    while i < bytes.len() {
        match (quote, bytes[i]) {
            (Some(_), b'\\') => i += 1,
            (Some(q), c) if c == q => quote = None,
            (None, b'"' | b'\'') => quote = Some(bytes[i]),
            (None, b'/') if bytes.get(i + 1) == Some(&b'/') => return &line[..i],
            _ => {}
        }
        i += 1;
    }
    line
}

/// Lines that look like statements but do not end like one.
fn missing_semicolons(source: &str) -> Vec<(usize, usize)> {
    let mut in_comment = false;
    let mut out = Vec::new();
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim_end();
        let t = line.trim_start();
        if in_comment {
            in_comment = !t.contains("*/");
            continue;
        }
        if t.starts_with("/*") {
            in_comment = !t.contains("*/");
            continue;
        }
        let code = strip_line_comment(line).trim_end();
        let t = code.trim_start();
        if t.is_empty() || t.starts_with('#') || t.ends_with("*/") {
            continue;
        }
        if !matches!(t.chars().last(), Some(';' | '{' | '}' | ',' | ':' | '(' | '|' | '&')) {
            out.push((i + 1, code.len() + 1));
        }
    }
    out
}

fn toolchain_response(cmd: &std::path::Path, source: &str) -> Value {
    let run = || -> std::io::Result<(std::process::Output, Vec<u8>)> {
        let dir = tempfile::tempdir()?;
        let input = dir.path().join("hook.c");
        let output = dir.path().join("hook.wasm");
        std::fs::write(&input, source)?;
        let out = std::process::Command::new(cmd).arg(&input).arg(&output).output()?;
        let wasm = if out.status.success() { std::fs::read(&output)? } else { Vec::new() };
        Ok((out, wasm))
    };
    match run() {
        Ok((out, wasm)) if out.status.success() => {
            let id = format!("local:{}", cmd.file_name().map(|f| f.to_string_lossy()).unwrap_or_default());
            success(&wasm, &id)
        }
        Ok((out, _)) => {
            let diagnostics = parse_diagnostics(&String::from_utf8_lossy(&out.stderr));
            if diagnostics.is_empty() {
                failure(vec![(0, None, format!("toolchain exited with {}", out.status))])
            } else {
                failure(diagnostics)
            }
        }
        Err(e) => failure(vec![(0, None, format!("cannot run {}: {e}", cmd.display()))]),
    }
}

/// Extracts `file:line:col: error: message` lines, clang and gcc style.
fn parse_diagnostics(stderr: &str) -> Vec<(usize, Option<usize>, String)> {
    let re = regex::Regex::new(r"^[^:\n]+:(\d+):(?:(\d+):)?\s*(?:fatal )?error:\s*(.*)$").expect("valid regex");
    stderr
        .lines()
        .filter_map(|l| {
            let c = re.captures(l)?;
            Some((c[1].parse().ok()?, c.get(2).and_then(|m| m.as_str().parse().ok()), c[3].to_string()))
        })
        .collect()
}
