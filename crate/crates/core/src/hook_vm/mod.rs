//! Local simulation of hook execution against an in-memory ledger.
//!
//! Hooks run before the originating payment is applied. The sender's hook
//! runs first, then the receiver's; the first non-accept disposition rejects
//! the payment and leaves the ledger untouched. Emitted payments are applied
//! afterwards without triggering hooks, each followed by the emitting hook's
//! callback.

mod exec;
mod ledger;
mod scenario;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize, Serializer};

use crate::address::AccountAddress;
use crate::block_ir::BlockProgram;

pub use exec::{execute_cbak, execute_hook, HookContext};
pub use ledger::{apply_transaction, install_hook, SimConfig, VmError};
pub use scenario::{
    run_scenario, run_scenario_on, run_scenario_with, DirSource, ExamplesOnly, Scenario, ScenarioError, ScenarioInstall, ScenarioPayment,
    WorkspaceSource,
};

pub type Drops = u64;

/// Rollback code used when arithmetic overflows at runtime.
pub const CODE_OVERFLOW: i64 = -2;
pub const CODE_DIVIDE_BY_ZERO: i64 = -3;
pub const CODE_EMIT_FAILED: i64 = -4;
pub const CODE_NO_TERMINAL: i64 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    Outgoing,
    Incoming,
    Both,
}

impl Trigger {
    pub fn on_outgoing(self) -> bool {
        matches!(self, Trigger::Outgoing | Trigger::Both)
    }
    pub fn on_incoming(self) -> bool {
        matches!(self, Trigger::Incoming | Trigger::Both)
    }
}

impl std::str::FromStr for Trigger {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "outgoing" => Ok(Trigger::Outgoing),
            "incoming" => Ok(Trigger::Incoming),
            "both" => Ok(Trigger::Both),
            other => Err(format!("unknown trigger {other:?} (expected outgoing, incoming or both)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstalledHook {
    pub program: BlockProgram,
    pub trigger: Trigger,
    pub step_bound: u64,
    pub cbak_step_bound: Option<u64>,
    pub digest: String,
}

pub type StateKey = (AccountAddress, String);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LedgerState {
    pub accounts: BTreeMap<AccountAddress, Drops>,
    pub hooks: BTreeMap<AccountAddress, Arc<InstalledHook>>,
    pub state_store: BTreeMap<StateKey, i64>,
    pub ledger_seq: u64,
    /// Fees destroyed in fixed-fee mode; always 0 by default.
    pub burned_drops: Drops,
}

impl LedgerState {
    pub fn with_accounts(balances: impl IntoIterator<Item = (AccountAddress, Drops)>) -> Self {
        LedgerState { accounts: balances.into_iter().collect(), ..Default::default() }
    }

    pub fn balance(&self, account: &AccountAddress) -> Option<Drops> {
        self.accounts.get(account).copied()
    }

    pub fn total_drops(&self) -> u128 {
        self.accounts.values().map(|&d| d as u128).sum::<u128>() + self.burned_drops as u128
    }
}

#[derive(Serialize)]
struct HookView<'a> {
    name: &'a str,
    trigger: Trigger,
    digest: &'a str,
}

#[derive(Serialize)]
struct StateEntry<'a> {
    account: &'a AccountAddress,
    key: &'a str,
    value: i64,
}

impl Serialize for LedgerState {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct View<'a> {
            ledger_seq: u64,
            accounts: &'a BTreeMap<AccountAddress, Drops>,
            hooks: BTreeMap<&'a AccountAddress, HookView<'a>>,
            state: Vec<StateEntry<'a>>,
            #[serde(skip_serializing_if = "is_zero")]
            burned_drops: Drops,
        }
        View {
            ledger_seq: self.ledger_seq,
            accounts: &self.accounts,
            hooks: self
                .hooks
                .iter()
                .map(|(a, h)| {
                    (a, HookView { name: &h.program.metadata.name, trigger: h.trigger, digest: &h.digest })
                })
                .collect(),
            state: self
                .state_store
                .iter()
                .map(|((account, key), &value)| StateEntry { account, key, value })
                .collect(),
            burned_drops: self.burned_drops,
        }
        .serialize(serializer)
    }
}

fn is_zero(v: &u64) -> bool {
    *v == 0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EmitOrigin {
    pub account: AccountAddress,
    pub generation: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Transaction {
    pub kind: TxKind,
    pub account: AccountAddress,
    pub destination: AccountAddress,
    pub amount: Drops,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emitted_by: Option<EmitOrigin>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TxKind {
    Payment,
}

impl Transaction {
    pub fn payment(account: AccountAddress, destination: AccountAddress, amount: Drops) -> Self {
        Transaction { kind: TxKind::Payment, account, destination, amount, emitted_by: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Disposition {
    Accepted { msg: String, code: i64 },
    RolledBack { msg: String, code: i64 },
    GuardViolation { guard_id: i64 },
}

impl Disposition {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Disposition::Accepted { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateWrite {
    pub account: AccountAddress,
    pub key: String,
    pub value: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExecutionResult {
    pub disposition: Disposition,
    pub trace_log: Vec<String>,
    pub emitted: Vec<Transaction>,
    pub state_writes: Vec<StateWrite>,
    pub steps_executed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TxOutcome {
    Applied { ledger_seq: u64 },
    Rejected { code: String, message: String },
}

impl TxOutcome {
    pub fn is_applied(&self) -> bool {
        matches!(self, TxOutcome::Applied { .. })
    }

    fn rejected(code: &str, message: impl Into<String>) -> Self {
        TxOutcome::Rejected { code: code.to_string(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EmittedReport {
    pub tx: Transaction,
    /// 0 when applied, nonzero otherwise; this is what the callback sees.
    pub result_code: i64,
    pub outcome: TxOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cbak: Option<ExecutionResult>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TxReport {
    pub tx: Transaction,
    pub outcome: TxOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sender_hook: Option<ExecutionResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub receiver_hook: Option<ExecutionResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub emitted: Vec<EmittedReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimulationReport {
    pub transactions: Vec<TxReport>,
    pub final_ledger: LedgerState,
}

impl SimulationReport {
    pub fn to_machine(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        for (i, r) in self.transactions.iter().enumerate() {
            let _ = writeln!(out, "tx #{}: {} -> {} {} drops", i + 1, r.tx.account, r.tx.destination, r.tx.amount);
            for (role, exec) in [("sender hook", &r.sender_hook), ("receiver hook", &r.receiver_hook)] {
                if let Some(e) = exec {
                    write_exec(&mut out, "  ", role, e);
                }
            }
            let _ = writeln!(out, "  outcome: {}", outcome_text(&r.outcome));
            for em in &r.emitted {
                let _ = writeln!(
                    out,
                    "  emitted: {} -> {} {} drops, result {} ({})",
                    em.tx.account,
                    em.tx.destination,
                    em.tx.amount,
                    em.result_code,
                    outcome_text(&em.outcome)
                );
                if let Some(cb) = &em.cbak {
                    write_exec(&mut out, "    ", "callback", cb);
                }
            }
        }
        let _ = writeln!(out, "final ledger (seq {}):", self.final_ledger.ledger_seq);
        for (account, balance) in &self.final_ledger.accounts {
            let _ = writeln!(out, "  {account} {balance}");
        }
        for ((account, key), value) in &self.final_ledger.state_store {
            let _ = writeln!(out, "  state {account} {key:?} = {value}");
        }
        out
    }
}

fn outcome_text(o: &TxOutcome) -> String {
    match o {
        TxOutcome::Applied { ledger_seq } => format!("applied in ledger {ledger_seq}"),
        TxOutcome::Rejected { code, message } => format!("rejected {code}: {message}"),
    }
}

fn write_exec(out: &mut String, indent: &str, role: &str, e: &ExecutionResult) {
    use std::fmt::Write;
    let disposition = match &e.disposition {
        Disposition::Accepted { msg, code } => format!("accepted {msg:?} ({code})"),
        Disposition::RolledBack { msg, code } => format!("rolled back {msg:?} ({code})"),
        Disposition::GuardViolation { guard_id } => format!("guard {guard_id} violated"),
    };
    let _ = writeln!(out, "{indent}{role}: {disposition}, {} steps", e.steps_executed);
    for line in &e.trace_log {
        let _ = writeln!(out, "{indent}  trace: {line}");
    }
}
