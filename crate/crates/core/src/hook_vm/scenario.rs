use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::address::AccountAddress;
use crate::block_ir::{parse_workspace, parse_workspace_value, BlockProgram};

use super::{apply_transaction, install_hook, LedgerState, SimConfig, SimulationReport, Transaction, Trigger};

/// A scripted simulation: starting balances, hooks to install, payments to
/// submit in order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Scenario {
    pub genesis: BTreeMap<AccountAddress, u64>,
    pub installs: Vec<ScenarioInstall>,
    pub payments: Vec<ScenarioPayment>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioInstall {
    pub account: AccountAddress,
    pub program: BlockProgram,
    pub trigger: Trigger,
    /// Line in the scenario file, 0 when built in code.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioPayment {
    pub from: AccountAddress,
    pub to: AccountAddress,
    pub amount_drops: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {code}: {message}")]
pub struct ScenarioError {
    pub line: usize,
    pub code: String,
    pub message: String,
}

/// Where `workspace_file` and `example` references are resolved.
pub trait WorkspaceSource {
    fn read_file(&self, path: &str) -> Result<String, String>;
    fn example(&self, name: &str) -> Option<String> {
        crate::examples::get(name).map(|e| e.workspace_json.to_string())
    }
}

/// Resolves files relative to a directory, examples from the bundled set.
pub struct DirSource(pub PathBuf);

impl WorkspaceSource for DirSource {
    fn read_file(&self, path: &str) -> Result<String, String> {
        let full = self.0.join(path);
        std::fs::read_to_string(&full).map_err(|e| format!("cannot read {}: {e}", full.display()))
    }
}

/// Only bundled examples; file references fail.
pub struct ExamplesOnly;

impl WorkspaceSource for ExamplesOnly {
    fn read_file(&self, path: &str) -> Result<String, String> {
        Err(format!("file references are not allowed here ({path})"))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    #[serde(default)]
    genesis: BTreeMap<AccountAddress, u64>,
    #[serde(default)]
    installs: Vec<InstallDoc>,
    #[serde(default)]
    transactions: Vec<ScenarioPayment>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstallDoc {
    account: AccountAddress,
    workspace_file: Option<String>,
    workspace: Option<serde_json::Value>,
    example: Option<String>,
    trigger: Trigger,
}

impl Scenario {
    pub fn parse(text: &str, source: &dyn WorkspaceSource) -> Result<Scenario, ScenarioError> {
        let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| ScenarioError {
            line: e.line(),
            code: "SCENARIO_MALFORMED".into(),
            message: e.to_string(),
        })?;
        let installs_at = text.find("\"installs\"").unwrap_or(0);
        let mut cursor = installs_at;
        let mut installs = Vec::with_capacity(doc.installs.len());
        for (i, inst) in doc.installs.into_iter().enumerate() {
            // each install object starts with its account string somewhere after the previous one
            let needle = format!("\"{}\"", inst.account);
            let at = text[cursor..].find(&needle).map_or(cursor, |p| cursor + p);
            cursor = at + needle.len().min(text.len() - at);
            let line = line_at(text, at);
            let fail = |code: &str, message: String| ScenarioError { line, code: code.into(), message };

            let refs = [inst.workspace_file.is_some(), inst.workspace.is_some(), inst.example.is_some()];
            if refs.iter().filter(|&&r| r).count() != 1 {
                return Err(fail(
                    "SCENARIO_MALFORMED",
                    format!("install #{} needs exactly one of workspace_file, workspace or example", i + 1),
                ));
            }
            let parsed = if let Some(path) = &inst.workspace_file {
                let text = source.read_file(path).map_err(|m| fail("WORKSPACE_UNREADABLE", m))?;
                parse_workspace(&text)
            } else if let Some(name) = &inst.example {
                let text = source.example(name).ok_or_else(|| fail("UNKNOWN_EXAMPLE", format!("no example named {name:?}")))?;
                parse_workspace(&text)
            } else {
                parse_workspace_value(inst.workspace.as_ref().expect("checked above"))
            };
            let program = parsed.map_err(|e| fail(e.code(), e.to_string()))?;
            installs.push(ScenarioInstall { account: inst.account, program, trigger: inst.trigger, line });
        }
        Ok(Scenario { genesis: doc.genesis, installs, payments: doc.transactions })
    }

    /// Reads a scenario file; relative workspace paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError {
            line: 0,
            code: "SCENARIO_UNREADABLE".into(),
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Scenario::parse(&text, &DirSource(dir))
    }
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

pub fn run_scenario(scenario: &Scenario) -> Result<SimulationReport, ScenarioError> {
    run_scenario_with(scenario, SimConfig::default())
}

/// Installs every hook, then applies the payments in order. Only install
/// failures are errors; rejected payments are part of the report.
pub fn run_scenario_with(scenario: &Scenario, config: SimConfig) -> Result<SimulationReport, ScenarioError> {
    run_scenario_on(&LedgerState::default(), scenario, config)
}

/// Like [`run_scenario_with`], starting from an existing ledger. Genesis
/// entries open new accounts; naming an account that already exists is an
/// error, so balances are never minted out of thin air.
pub fn run_scenario_on(start: &LedgerState, scenario: &Scenario, config: SimConfig) -> Result<SimulationReport, ScenarioError> {
    let mut ledger = start.clone();
    for (account, drops) in &scenario.genesis {
        if ledger.accounts.contains_key(account) {
            return Err(ScenarioError {
                line: 0,
                code: "ACCOUNT_EXISTS".into(),
                message: format!("genesis account {account} already exists in this ledger"),
            });
        }
        ledger.accounts.insert(account.clone(), *drops);
    }
    for inst in &scenario.installs {
        ledger = install_hook(&ledger, &inst.account, inst.program.clone(), inst.trigger).map_err(|e| ScenarioError {
            line: inst.line,
            code: e.code().into(),
            message: e.to_string(),
        })?;
    }
    let mut transactions = Vec::with_capacity(scenario.payments.len());
    for p in &scenario.payments {
        let (next, report) =
            apply_transaction(&ledger, &Transaction::payment(p.from.clone(), p.to.clone(), p.amount_drops), config);
        ledger = next;
        transactions.push(report);
    }
    Ok(SimulationReport { transactions, final_ledger: ledger })
}
