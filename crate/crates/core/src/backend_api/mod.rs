//! HTTP service gluing a browser frontend to the generator, checker,
//! simulator and compile bridge.
//!
//! There is deliberately no signing or submission endpoint: secrets stay on
//! the client.

mod sessions;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post, MethodRouter};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::services::ServeDir;

use crate::block_ir::{catalog, parse_workspace_value, validate, ParseError, Severity, CATALOG_VERSION};
use crate::codegen_c::{generate, program_digest, LineRange};
use crate::compiler_bridge::{compile_text, CompileOutcome, CompilerConfig};
use crate::examples::EXAMPLES;
use crate::guard_check::analyze;
use crate::hook_vm::{run_scenario_on, ExamplesOnly, LedgerState, Scenario, SimConfig};
use crate::mock_http::{self, MockError, ServerHandle};
use crate::xrpl_client::Endpoints;

pub use sessions::{SessionStore, SESSION_HEADER};

pub const ENV_ALLOWED_ORIGINS: &str = "HOOKFORGE_ALLOWED_ORIGINS";
pub const DEFAULT_ALLOWED_ORIGINS: &str = "http://localhost:5173";
pub const DEFAULT_PORT: u16 = 8787;
pub const DEFAULT_SESSION_IDLE: Duration = Duration::from_secs(30 * 60);

/// Every route the service answers, as (method, path).
pub const ROUTES: &[(&str, &str)] = &[
    ("GET", "/api/health"),
    ("GET", "/api/config"),
    ("GET", "/api/catalog"),
    ("GET", "/api/examples"),
    ("POST", "/api/generate"),
    ("POST", "/api/compile"),
    ("POST", "/api/simulate"),
    ("POST", "/api/sessions"),
    ("GET", "/api/sessions/{id}"),
    ("DELETE", "/api/sessions/{id}"),
];

#[derive(Debug, Clone)]
pub struct ApiConfig {
    pub compiler: CompilerConfig,
    /// Advertised to the frontend, which talks to the testnet itself.
    pub endpoints: Endpoints,
    pub allowed_origins: Vec<String>,
    pub session_idle: Duration,
    pub sim: SimConfig,
    /// Frontend assets served under `/`, when set.
    pub static_dir: Option<PathBuf>,
}

impl Default for ApiConfig {
    fn default() -> Self {
        ApiConfig {
            compiler: CompilerConfig::default(),
            endpoints: Endpoints::from_env(),
            allowed_origins: parse_origins(DEFAULT_ALLOWED_ORIGINS),
            session_idle: DEFAULT_SESSION_IDLE,
            sim: SimConfig::default(),
            static_dir: None,
        }
    }
}

impl ApiConfig {
    pub fn from_env() -> Self {
        let origins = std::env::var(ENV_ALLOWED_ORIGINS).unwrap_or_else(|_| DEFAULT_ALLOWED_ORIGINS.into());
        ApiConfig {
            compiler: CompilerConfig::from_env(),
            endpoints: Endpoints::from_env(),
            allowed_origins: parse_origins(&origins),
            ..Default::default()
        }
    }
}

/// Comma-separated origins; blanks are dropped.
pub fn parse_origins(text: &str) -> Vec<String> {
    text.split(',').map(str::trim).filter(|o| !o.is_empty()).map(str::to_string).collect()
}

struct AppState {
    config: ApiConfig,
    sessions: SessionStore,
}

pub fn router(config: ApiConfig) -> Router {
    let origins: Vec<HeaderValue> = config.allowed_origins.iter().filter_map(|o| o.parse().ok()).collect();
    let cors = CorsLayer::new()
        .allow_origin(AllowOrigin::list(origins))
        .allow_methods([Method::GET, Method::POST, Method::DELETE])
        .allow_headers([header::CONTENT_TYPE, header::HeaderName::from_static(SESSION_HEADER)])
        .expose_headers([header::HeaderName::from_static(SESSION_HEADER)]);
    let static_dir = config.static_dir.clone();
    let state = Arc::new(AppState { sessions: SessionStore::new(config.session_idle), config });

    let mut app = Router::new();
    for (method, path) in ROUTES {
        app = app.route(path, handler_for(method, path));
    }
    let app = match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    };
    app.with_state(state).layer(cors)
}

fn handler_for(method: &str, path: &str) -> MethodRouter<Arc<AppState>> {
    match (method, path) {
        ("GET", "/api/health") => get(|| async { Json(json!({ "status": "ok" })) }),
        ("GET", "/api/config") => get(config_handler),
        ("GET", "/api/catalog") => get(|| async { Json(json!({ "version": CATALOG_VERSION, "blocks": catalog() })) }),
        ("GET", "/api/examples") => get(examples_handler),
        ("POST", "/api/generate") => post(generate_handler),
        ("POST", "/api/compile") => post(compile_handler),
        ("POST", "/api/simulate") => post(simulate_handler),
        ("POST", "/api/sessions") => post(create_session),
        ("GET", "/api/sessions/{id}") => get(get_session),
        ("DELETE", "/api/sessions/{id}") => delete(delete_session),
        _ => unreachable!("no handler for {method} {path}"),
    }
}

/// Serves the API on 127.0.0.1:`port` in the background.
pub fn serve(port: u16, config: ApiConfig) -> Result<ServerHandle, MockError> {
    serve_on(mock_http::bind(port)?, config)
}

pub fn serve_on(listener: std::net::TcpListener, config: ApiConfig) -> Result<ServerHandle, MockError> {
    mock_http::spawn(listener, router(config))
}

/// An error answer: `{"error": {"code", "message", ...}}`.
#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status, body: json!({ "error": { "code": code, "message": message.into() } }) }
    }

    fn with_line(mut self, line: usize) -> Self {
        self.body["error"]["line"] = json!(line);
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn json_body(body: &[u8]) -> Result<Value, ApiError> {
    serde_json::from_slice(body).map_err(|e| {
        ApiError::new(StatusCode::BAD_REQUEST, "MALFORMED_BODY", format!("body is not JSON: {e}")).with_line(e.line())
    })
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e.to_string()))
}

async fn config_handler(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({
        "catalog_version": CATALOG_VERSION,
        "testnet_url": state.config.endpoints.node_url,
        "faucet_url": state.config.endpoints.faucet_url,
        "session_idle_secs": state.config.session_idle.as_secs(),
    }))
}

async fn examples_handler() -> Json<Value> {
    let list: Vec<Value> = EXAMPLES
        .iter()
        .map(|e| {
            let workspace: Value = serde_json::from_str(e.workspace_json).expect("bundled examples are JSON");
            json!({ "name": e.name, "description": e.description, "trigger": e.trigger, "workspace": workspace })
        })
        .collect();
    Json(Value::Array(list))
}

fn rejected(stage: &str, issues: Vec<Value>) -> Response {
    (StatusCode::UNPROCESSABLE_ENTITY, Json(json!({ "stage": stage, "issues": issues }))).into_response()
}

fn parse_issue(e: &ParseError) -> Value {
    json!({ "severity": Severity::Error, "block_id": e.block_id(), "code": e.code(), "message": e.to_string() })
}

/// parse, validate, guard-check, generate. The first failing stage answers 422.
async fn generate_handler(body: Bytes) -> Result<Response, ApiError> {
    let doc = json_body(&body)?;
    let program = match parse_workspace_value(&doc) {
        Ok(p) => p,
        Err(e @ ParseError::MalformedDocument(_)) => {
            return Err(ApiError::new(StatusCode::BAD_REQUEST, e.code(), e.to_string()))
        }
        Err(e) => return Ok(rejected("parse", vec![parse_issue(&e)])),
    };
    let report = validate(&program);
    if !report.ok {
        return Ok(rejected("validate", report.issues.iter().map(|i| json!(i)).collect()));
    }
    let guard = analyze(&program);
    if !guard.ok {
        let issues = guard
            .violations
            .iter()
            .map(|v| json!({ "severity": Severity::Error, "block_id": v.block_id, "code": v.rule, "message": v.message }))
            .collect();
        return Ok(rejected("guard_check", issues));
    }
    let source = match generate(&program) {
        Ok(s) => s,
        Err(e) => return Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.code(), e.to_string())),
    };
    let warnings: Vec<_> = report.issues.iter().filter(|i| i.severity == Severity::Warning).collect();
    Ok(Json(json!({
        "c_source": source.text,
        "block_map": source.block_map,
        "source_digest": source.source_digest,
        "program_digest": program_digest(&program),
        "static_step_bound": guard.static_step_bound,
        "cbak_step_bound": guard.cbak_step_bound,
        "warnings": warnings,
    }))
    .into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CompileRequest {
    c_source: String,
    #[serde(default)]
    block_map: Vec<LineRange>,
}

async fn compile_handler(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: CompileRequest = serde_json::from_value(json_body(&body)?)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "MALFORMED_BODY", e.to_string()))?;
    let config = state.config.compiler.clone();
    let outcome = blocking(move || compile_text(&req.c_source, &req.block_map, &config)).await?;
    match outcome {
        Ok(CompileOutcome::Artifact(a)) => Ok(Json(json!({
            "wasm_base64": a.to_base64(),
            "compiler_id": a.compiler_id,
            "size_bytes": a.size_bytes,
            "source_digest": a.source_digest,
        }))
        .into_response()),
        Ok(CompileOutcome::Errors(errors)) => {
            Ok((StatusCode::UNPROCESSABLE_ENTITY, Json(json!({ "errors": errors }))).into_response())
        }
        Err(e) => Err(ApiError::new(StatusCode::BAD_GATEWAY, e.code(), e.to_string())),
    }
}

/// Runs a scenario document. With a session header the scenario continues
/// from that session's ledger and the result becomes its new ledger;
/// otherwise it starts from an empty ledger.
async fn simulate_handler(State(state): State<Arc<AppState>>, headers: HeaderMap, body: Bytes) -> Result<Response, ApiError> {
    let text = String::from_utf8(body.to_vec())
        .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "MALFORMED_BODY", "body is not UTF-8"))?;
    let scenario = Scenario::parse(&text, &ExamplesOnly)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, &e.code, e.message).with_line(e.line))?;
    let session = match headers.get(SESSION_HEADER) {
        Some(id) => {
            let id = id.to_str().unwrap_or_default();
            Some(state.sessions.get(id).ok_or_else(|| session_not_found(id))?)
        }
        None => None,
    };
    let sim = state.config.sim;
    let report = blocking(move || match session {
        Some(session) => {
            let mut ledger = session.lock();
            let report = run_scenario_on(&ledger, &scenario, sim)?;
            *ledger = report.final_ledger.clone();
            Ok(report)
        }
        None => run_scenario_on(&LedgerState::default(), &scenario, sim),
    })
    .await?
    .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, &e.code, e.message).with_line(e.line))?;
    Ok(([(header::CONTENT_TYPE, "application/json")], report.to_machine()).into_response())
}

fn session_not_found(id: &str) -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "SESSION_NOT_FOUND", format!("no live session {id:?}"))
}

async fn create_session(State(state): State<Arc<AppState>>) -> Response {
    let id = state.sessions.create();
    let body = json!({ "session_id": id, "idle_expiry_secs": state.config.session_idle.as_secs() });
    (StatusCode::CREATED, [(SESSION_HEADER, id)], Json(body)).into_response()
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let session = state.sessions.get(&id).ok_or_else(|| session_not_found(&id))?;
    let ledger = blocking(move || serde_json::to_value(&*session.lock()).expect("ledger serializes")).await?;
    Ok(Json(json!({ "session_id": id, "ledger": ledger })))
}

async fn delete_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    if state.sessions.remove(&id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(session_not_found(&id))
    }
}
