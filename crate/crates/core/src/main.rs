use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use hookforge::backend_api::{self, ApiConfig};
use hookforge::block_ir::{parse_workspace, validate, Severity};
use hookforge::codegen_c::{generate, LineRange};
use hookforge::compiler_bridge::{self, compile_text, CompileOutcome, CompilerBackend, CompilerConfig, WasmArtifact};
use hookforge::examples::EXAMPLES;
use hookforge::guard_check::analyze;
use hookforge::hook_vm::{run_scenario_with, Scenario, SimConfig};
use hookforge::xrpl_client::mock::{serve_mock_faucet, serve_mock_node, FaucetOptions, NodeOptions};
use hookforge::xrpl_client::{
    account_sequence, build_sethook_tx, faucet_create_account, sign_tx, submit, Endpoints, SetHookOptions,
    SubmitStatus, TestnetAccount, FEE_FLOOR_DROPS,
};

#[derive(Parser)]
#[command(name = "hookforge", version, about = "Block programs to XRPL Hooks: check, generate, simulate, compile, deploy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimFormat {
    Text,
    Machine,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MockKind {
    Compiler,
    Faucet,
    Node,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and guard-check a workspace. Exits 0 only when both pass.
    Check {
        workspace: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
    },
    /// Generate Hooks C from a workspace.
    Gen {
        workspace: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Also write the line to block map as JSON.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Run a simulation scenario.
    Sim {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: SimFormat,
        /// Fixed fee burned for every applied payment.
        #[arg(long, default_value_t = 0)]
        fee_drops: u64,
    },
    /// Compile C to wasm through the compile service.
    Compile {
        c_file: PathBuf,
        /// Use an in-process mock compiler instead of HOOKFORGE_COMPILER_URL.
        #[arg(long)]
        mock: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Line to block map written by `gen --map`, for error attribution.
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, env = compiler_bridge::ENV_COMPILER_URL, default_value = compiler_bridge::DEFAULT_COMPILER_URL)]
        url: String,
        #[arg(long, default_value_t = 30)]
        timeout_secs: u64,
    },
    /// Sign a SetHook transaction locally and submit it.
    Deploy {
        wasm: PathBuf,
        #[arg(long)]
        account_file: PathBuf,
        /// Account sequence; looked up on the node when omitted.
        #[arg(long)]
        sequence: Option<u32>,
        #[arg(long, default_value_t = FEE_FLOOR_DROPS)]
        fee: u64,
        #[arg(long)]
        network_id: Option<u32>,
        #[arg(long, env = "HOOKFORGE_TESTNET_URL", default_value = hookforge::xrpl_client::DEFAULT_TESTNET_URL)]
        node: String,
        /// Print the signed transaction instead of submitting it.
        #[arg(long)]
        dry_run: bool,
    },
    /// Create a funded testnet account and save it to an account file.
    Faucet {
        #[arg(short, long, default_value = "account.json")]
        out: PathBuf,
        #[arg(long, env = "HOOKFORGE_FAUCET_URL", default_value = hookforge::xrpl_client::DEFAULT_FAUCET_URL)]
        url: String,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = backend_api::DEFAULT_PORT)]
        port: u16,
        /// Frontend assets to serve under `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        #[arg(long, default_value_t = backend_api::DEFAULT_SESSION_IDLE.as_secs())]
        session_idle_secs: u64,
    },
    /// Run a local mock of an external service until interrupted.
    Mock {
        #[arg(value_enum)]
        kind: MockKind,
        #[arg(long, default_value_t = 0)]
        port: u16,
        /// Node only: engine result every submission gets.
        #[arg(long)]
        reject_with: Option<String>,
    },
    /// List bundled examples, or print one workspace.
    Examples { name: Option<String> },
}

/// A failure to report: a code and a message, printed to stderr.
struct Failure {
    code: String,
    message: String,
    exit: u8,
}

impl Failure {
    fn new(code: impl Into<String>, message: impl Into<String>) -> Self {
        Failure { code: code.into(), message: message.into(), exit: 1 }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure { code: "IO_ERROR".into(), message: format!("{}: {e}", path.display()), exit: 2 }
    }
}

type Outcome = Result<ExitCode, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn write(path: &Path, data: impl AsRef<[u8]>) -> Result<(), Failure> {
    std::fs::write(path, data).map_err(|e| Failure::io(path, e))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { workspace, format } => check(&workspace, format),
        Command::Gen { workspace, out, map } => gen(&workspace, out.as_deref(), map.as_deref()),
        Command::Sim { scenario, format, fee_drops } => sim(&scenario, format, fee_drops),
        Command::Compile { c_file, mock, out, map, url, timeout_secs } => {
            compile(&c_file, mock, out.as_deref(), map.as_deref(), url, Duration::from_secs(timeout_secs))
        }
        Command::Deploy { wasm, account_file, sequence, fee, network_id, node, dry_run } => {
            deploy(&wasm, &account_file, sequence, fee, network_id, &node, dry_run)
        }
        Command::Faucet { out, url } => faucet(&out, &url),
        Command::Serve { port, static_dir, session_idle_secs } => serve(port, static_dir, session_idle_secs),
        Command::Mock { kind, port, reject_with } => mock(kind, port, reject_with),
        Command::Examples { name } => list_examples(name.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}: {}", f.code, f.message);
            ExitCode::from(f.exit)
        }
    }
}

fn load_program(path: &Path) -> Result<hookforge::block_ir::BlockProgram, Failure> {
    parse_workspace(&read(path)?).map_err(|e| {
        let at = e.block_id().map(|b| format!(" (block {b})")).unwrap_or_default();
        Failure::new(e.code(), format!("{e}{at}"))
    })
}

fn check(path: &Path, format: ReportFormat) -> Outcome {
    let program = load_program(path)?;
    let validation = validate(&program);
    let guard = analyze(&program);
    let ok = validation.ok && guard.ok;
    match format {
        ReportFormat::Json => {
            let doc = json!({ "ok": ok, "validation": validation, "guard": guard });
            println!("{}", serde_json::to_string_pretty(&doc).expect("reports serialize"));
        }
        ReportFormat::Text => {
            println!("ok: {ok}");
            println!("static_step_bound: {}", guard.static_step_bound);
            if let Some(b) = guard.cbak_step_bound {
                println!("cbak_step_bound: {b}");
            }
            for i in &validation.issues {
                let sev = if i.severity == Severity::Error { "error" } else { "warning" };
                println!("{sev} {} {}: {}", i.block_id, i.code, i.message);
            }
            for v in &guard.violations {
                println!("error {} {}: {}", v.block_id, v.rule, v.message);
            }
        }
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn gen(path: &Path, out: Option<&Path>, map: Option<&Path>) -> Outcome {
    let program = load_program(path)?;
    let source = generate(&program).map_err(|e| Failure::new(e.code(), e.to_string()))?;
    match out {
        Some(out) => write(out, &source.text)?,
        None => print!("{}", source.text),
    }
    if let Some(map) = map {
        write(map, serde_json::to_string_pretty(&source.block_map).expect("map serializes"))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn sim(path: &Path, format: SimFormat, fee_drops: u64) -> Outcome {
    let scenario = Scenario::load(path).map_err(|e| Failure::new(&e.code, format!("line {}: {}", e.line, e.message)))?;
    let report = run_scenario_with(&scenario, SimConfig { fee_drops })
        .map_err(|e| Failure::new(&e.code, format!("line {}: {}", e.line, e.message)))?;
    match format {
        SimFormat::Text => print!("{}", report.to_text()),
        SimFormat::Machine => print!("{}", report.to_machine()),
    }
    Ok(ExitCode::SUCCESS)
}

fn compile(c_file: &Path, mock: bool, out: Option<&Path>, map: Option<&Path>, url: String, timeout: Duration) -> Outcome {
    let text = read(c_file)?;
    let block_map: Vec<LineRange> = match map {
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| Failure::new("MALFORMED_MAP", e.to_string()))?,
        None => Vec::new(),
    };
    let server = if mock {
        Some(compiler_bridge::serve_mock_compiler(0).map_err(|e| Failure::new(e.code(), e.to_string()))?)
    } else {
        None
    };
    let config = match &server {
        Some(s) => CompilerConfig { timeout, ..s.config() },
        None => CompilerConfig { url, timeout },
    };
    match compile_text(&text, &block_map, &config).map_err(|e| Failure::new(e.code(), e.to_string()))? {
        CompileOutcome::Artifact(a) => {
            let out = out.map(Path::to_path_buf).unwrap_or_else(|| c_file.with_extension("wasm"));
            write(&out, &a.bytes)?;
            println!("{}", serde_json::to_string_pretty(&json!({ "artifact": a, "path": out })).expect("serializes"));
            Ok(ExitCode::SUCCESS)
        }
        CompileOutcome::Errors(errors) => {
            for e in &errors {
                let col = e.column.map(|c| format!(":{c}")).unwrap_or_default();
                let block = e.mapped_block_id.as_deref().map(|b| format!(" [block {b}]")).unwrap_or_default();
                eprintln!("{}:{}{col}: error: {}{block}", c_file.display(), e.line, e.message);
            }
            Ok(ExitCode::FAILURE)
        }
    }
}

fn deploy(
    wasm: &Path,
    account_file: &Path,
    sequence: Option<u32>,
    fee: u64,
    network_id: Option<u32>,
    node: &str,
    dry_run: bool,
) -> Outcome {
    let bytes = std::fs::read(wasm).map_err(|e| Failure::io(wasm, e))?;
    let account = TestnetAccount::load(account_file).map_err(|e| Failure::new(e.code(), e.to_string()))?;
    let artifact = WasmArtifact::new(bytes, "", "file").map_err(|e| Failure::new(e.code(), e.to_string()))?;
    let timeout = Endpoints::from_env().timeout;
    let sequence = match sequence {
        Some(s) => s,
        None => account_sequence(&account.address, node, timeout).map_err(|e| Failure::new(e.code(), e.to_string()))?,
    };
    let options = SetHookOptions { network_id, ..Default::default() };
    let tx = build_sethook_tx(&account.address, &artifact, sequence, fee, &options)
        .map_err(|e| Failure::new(e.code(), e.to_string()))?;
    for w in &tx.warnings {
        eprintln!("warning: {w}");
    }
    let signed = sign_tx(&tx, &account).map_err(|e| Failure::new(e.code(), e.to_string()))?;
    if dry_run {
        println!("{}", serde_json::to_string_pretty(&signed).expect("serializes"));
        return Ok(ExitCode::SUCCESS);
    }
    let result = submit(&signed.tx_blob, node, timeout).map_err(|e| Failure::new(e.code(), e.to_string()))?;
    println!("{}", serde_json::to_string_pretty(&result).expect("serializes"));
    Ok(if result.status == SubmitStatus::Success { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn faucet(out: &Path, url: &str) -> Outcome {
    let account = faucet_create_account(url, Endpoints::from_env().timeout).map_err(|e| Failure::new(e.code(), e.to_string()))?;
    account.save(out).map_err(|e| Failure::new(e.code(), e.to_string()))?;
    let doc = json!({ "address": account.address, "balance_drops": account.balance_drops, "account_file": out });
    println!("{}", serde_json::to_string_pretty(&doc).expect("serializes"));
    Ok(ExitCode::SUCCESS)
}

fn serve(port: u16, static_dir: Option<PathBuf>, session_idle_secs: u64) -> Outcome {
    let config = ApiConfig { static_dir, session_idle: Duration::from_secs(session_idle_secs), ..ApiConfig::from_env() };
    let server = backend_api::serve(port, config).map_err(|e| Failure::new(e.code(), e.to_string()))?;
    eprintln!("listening on {}", server.url(""));
    server.join();
    Ok(ExitCode::SUCCESS)
}

fn mock(kind: MockKind, port: u16, reject_with: Option<String>) -> Outcome {
    let fail = |e: hookforge::mock_http::MockError| Failure::new(e.code(), e.to_string());
    match kind {
        MockKind::Compiler => {
            let s = compiler_bridge::serve_compiler(port, CompilerBackend::from_env()).map_err(fail)?;
            eprintln!("mock compiler on {}", s.url());
            s.join();
        }
        MockKind::Faucet => {
            let s = serve_mock_faucet(port, FaucetOptions::default()).map_err(fail)?;
            eprintln!("mock faucet on {}", s.url());
            s.join();
        }
        MockKind::Node => {
            let s = serve_mock_node(port, NodeOptions { reject_with, ..Default::default() }).map_err(fail)?;
            eprintln!("mock node on {}", s.url());
            s.join();
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn list_examples(name: Option<&str>) -> Outcome {
    match name {
        Some(name) => {
            let e = hookforge::examples::get(name).ok_or_else(|| Failure::new("UNKNOWN_EXAMPLE", format!("no example named {name:?}")))?;
            print!("{}", e.workspace_json);
        }
        None => {
            for e in EXAMPLES {
                println!("{:<14} {:<9} {}", e.name, e.trigger, e.description);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
