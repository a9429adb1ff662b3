use std::sync::Arc;

use thiserror::Error;

use crate::address::AccountAddress;
use crate::block_ir::{validate, BlockProgram};
use crate::codegen_c::program_digest;
use crate::guard_check;

use super::{
    execute_cbak, execute_hook, Disposition, EmittedReport, ExecutionResult, HookContext, InstalledHook, LedgerState,
    StateWrite, Transaction, Trigger, TxOutcome, TxReport,
};

/// Result codes handed to a callback for an emitted payment.
pub const EMIT_OK: i64 = 0;
pub const EMIT_UNKNOWN_DESTINATION: i64 = 1;
pub const EMIT_INSUFFICIENT_BALANCE: i64 = 2;
pub const EMIT_BALANCE_OVERFLOW: i64 = 3;
pub const EMIT_MALFORMED: i64 = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimConfig {
    /// Fixed fee charged to the sender of every applied payment. 0 disables fees.
    pub fee_drops: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VmError {
    #[error("account {0} does not exist in the ledger")]
    UnknownAccount(AccountAddress),
    #[error("program is not installable: {}", .codes.join(", "))]
    ProgramNotClean { codes: Vec<String> },
}

impl VmError {
    pub fn code(&self) -> &'static str {
        match self {
            VmError::UnknownAccount(_) => "UNKNOWN_ACCOUNT",
            VmError::ProgramNotClean { .. } => "PROGRAM_NOT_CLEAN",
        }
    }
}

/// Installs `program` on `account`, replacing any hook already there. Only
/// programs that validate and pass guard checking can be installed.
pub fn install_hook(
    ledger: &LedgerState,
    account: &AccountAddress,
    program: BlockProgram,
    trigger: Trigger,
) -> Result<LedgerState, VmError> {
    if !ledger.accounts.contains_key(account) {
        return Err(VmError::UnknownAccount(account.clone()));
    }
    let validation = validate(&program);
    let guards = guard_check::analyze(&program);
    if !validation.ok || !guards.ok {
        let mut codes: Vec<String> = validation.errors().map(|i| i.code.to_string()).collect();
        codes.extend(guards.violations.iter().map(|v| v.rule.to_string()));
        codes.dedup();
        return Err(VmError::ProgramNotClean { codes });
    }
    let hook = InstalledHook {
        digest: program_digest(&program),
        program,
        trigger,
        step_bound: guards.static_step_bound,
        cbak_step_bound: guards.cbak_step_bound,
    };
    let mut next = ledger.clone();
    next.hooks.insert(account.clone(), Arc::new(hook));
    Ok(next)
}

/// Applies one payment and everything it emits. The input ledger is never
/// modified; a rejected payment returns an identical copy of it.
pub fn apply_transaction(ledger: &LedgerState, tx: &Transaction, config: SimConfig) -> (LedgerState, TxReport) {
    let mut report = TxReport {
        tx: tx.clone(),
        outcome: TxOutcome::Applied { ledger_seq: 0 },
        sender_hook: None,
        receiver_hook: None,
        emitted: Vec::new(),
    };
    let reject = |mut report: TxReport, code: &str, message: String| {
        report.outcome = TxOutcome::rejected(code, message);
        (ledger.clone(), report)
    };

    if tx.amount == 0 || tx.account == tx.destination {
        return reject(report, "MALFORMED_TX", "payments must move at least one drop between two accounts".into());
    }
    if !ledger.accounts.contains_key(&tx.account) {
        return reject(report, "UNKNOWN_ACCOUNT", format!("sender {} does not exist", tx.account));
    }
    if !ledger.accounts.contains_key(&tx.destination) {
        return reject(report, "UNKNOWN_DESTINATION", format!("destination {} does not exist", tx.destination));
    }

    let run_hook = |account: &AccountAddress, wanted: fn(Trigger) -> bool| -> Option<ExecutionResult> {
        let hook = ledger.hooks.get(account).filter(|h| wanted(h.trigger))?;
        let ctx = HookContext { otxn: tx, hook_account: account, state: &ledger.state_store };
        Some(execute_hook(&hook.program, &ctx))
    };
    if tx.emitted_by.is_none() {
        report.sender_hook = run_hook(&tx.account, Trigger::on_outgoing);
        if let Some(message) = hook_refusal("sender", report.sender_hook.as_ref()) {
            return reject(report, "HOOK_REJECTED", message);
        }
        report.receiver_hook = run_hook(&tx.destination, Trigger::on_incoming);
        if let Some(message) = hook_refusal("receiver", report.receiver_hook.as_ref()) {
            return reject(report, "HOOK_REJECTED", message);
        }
    }

    let mut next = ledger.clone();
    if let Err((code, message)) = transfer(&mut next, tx, config) {
        return reject(report, code, message);
    }
    for exec in [&report.sender_hook, &report.receiver_hook].into_iter().flatten() {
        commit_writes(&mut next, &exec.state_writes);
    }
    report.outcome = TxOutcome::Applied { ledger_seq: next.ledger_seq };

    let queue: Vec<Transaction> = [&report.sender_hook, &report.receiver_hook]
        .into_iter()
        .flatten()
        .flat_map(|e| e.emitted.iter().cloned())
        .collect();
    for emitted in queue {
        let (outcome, result_code) = match transfer(&mut next, &emitted, config) {
            Ok(()) => (TxOutcome::Applied { ledger_seq: next.ledger_seq }, EMIT_OK),
            Err((code, message)) => {
                let result = match code {
                    "UNKNOWN_DESTINATION" => EMIT_UNKNOWN_DESTINATION,
                    "INSUFFICIENT_BALANCE" => EMIT_INSUFFICIENT_BALANCE,
                    "BALANCE_OVERFLOW" => EMIT_BALANCE_OVERFLOW,
                    _ => EMIT_MALFORMED,
                };
                (TxOutcome::rejected(code, message), result)
            }
        };
        let emitter = emitted.account.clone();
        let cbak = next.hooks.get(&emitter).cloned().and_then(|hook| {
            let ctx = HookContext { otxn: &emitted, hook_account: &emitter, state: &next.state_store };
            execute_cbak(&hook.program, &ctx, result_code)
        });
        if let Some(cb) = cbak.as_ref().filter(|cb| cb.disposition.is_accepted()) {
            commit_writes(&mut next, &cb.state_writes);
        }
        report.emitted.push(EmittedReport { tx: emitted, result_code, outcome, cbak });
    }
    (next, report)
}

fn hook_refusal(role: &str, exec: Option<&ExecutionResult>) -> Option<String> {
    Some(match &exec?.disposition {
        Disposition::Accepted { .. } => return None,
        Disposition::RolledBack { msg, code } => format!("{role} hook rolled back: {msg:?} ({code})"),
        Disposition::GuardViolation { guard_id } => format!("{role} hook exceeded guard {guard_id}"),
    })
}

/// Moves funds and charges the fee, bumping the ledger sequence. Leaves the
/// ledger untouched on failure.
fn transfer(ledger: &mut LedgerState, tx: &Transaction, config: SimConfig) -> Result<(), (&'static str, String)> {
    if tx.amount == 0 || tx.account == tx.destination {
        return Err(("MALFORMED_TX", "payments must move at least one drop between two accounts".into()));
    }
    let Some(&dest_balance) = ledger.accounts.get(&tx.destination) else {
        return Err(("UNKNOWN_DESTINATION", format!("destination {} does not exist", tx.destination)));
    };
    let Some(&balance) = ledger.accounts.get(&tx.account) else {
        return Err(("UNKNOWN_ACCOUNT", format!("sender {} does not exist", tx.account)));
    };
    let cost = tx.amount.checked_add(config.fee_drops).filter(|&c| c <= balance).ok_or_else(|| {
        (
            "INSUFFICIENT_BALANCE",
            format!("{} holds {balance} drops, needs {} plus a fee of {}", tx.account, tx.amount, config.fee_drops),
        )
    })?;
    let credited = dest_balance
        .checked_add(tx.amount)
        .ok_or_else(|| ("BALANCE_OVERFLOW", format!("crediting {} would overflow", tx.destination)))?;
    ledger.accounts.insert(tx.account.clone(), balance - cost);
    ledger.accounts.insert(tx.destination.clone(), credited);
    ledger.burned_drops += config.fee_drops;
    ledger.ledger_seq += 1;
    Ok(())
}

fn commit_writes(ledger: &mut LedgerState, writes: &[StateWrite]) {
    for w in writes {
        ledger.state_store.insert((w.account.clone(), w.key.clone()), w.value);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block_ir::{chain, Block, BlockKind as K};

    const A: &str = "rHb9CJAWyB4rj91VRWn96DkukG4bwdtyTh";
    const B: &str = "rrrrrrrrrrrrrrrrrrrrBZbvji";
    const C: &str = "rrrrrrrrrrrrrrrrrrrrrhoLvTp";

    fn acc(s: &str) -> AccountAddress {
        AccountAddress::parse(s).unwrap()
    }

    fn ledger() -> LedgerState {
        LedgerState::with_accounts([(acc(A), 1_000), (acc(B), 1_000), (acc(C), 1_000)])
    }

    fn lit(id: &str, n: i64) -> Block {
        Block::new(id, K::LiteralNumber).with_field("NUM", n).with_field("UNIT", "DROPS")
    }

    fn hook(stmts: Vec<Block>, cbak: Option<Vec<Block>>) -> BlockProgram {
        let mut blocks = vec![Block::new("entry", K::HookEntry)];
        blocks[0].next = chain(stmts).map(Box::new);
        if let Some(cb) = cbak {
            let mut e = Block::new("cbentry", K::CbakEntry);
            e.next = chain(cb).map(Box::new);
            blocks.push(e);
        }
        BlockProgram::new(blocks)
    }

    fn guard(id: &str, gid: i64) -> Block {
        Block::new(id, K::Guard).with_field("ID", gid).with_field("MAXITER", 1)
    }

    fn terminal(id: &str, kind: K) -> Block {
        Block::new(id, kind).with_field("MSG", id).with_field("CODE", 0)
    }

    #[test]
    fn plain_payment_moves_funds() {
        let l = ledger();
        let (next, r) = apply_transaction(&l, &Transaction::payment(acc(A), acc(B), 300), SimConfig::default());
        assert_eq!(r.outcome, TxOutcome::Applied { ledger_seq: 1 });
        assert_eq!(next.balance(&acc(A)), Some(700));
        assert_eq!(next.balance(&acc(B)), Some(1_300));
        assert_eq!(next.total_drops(), l.total_drops());
    }

    #[test]
    fn rejections_leave_ledger_untouched() {
        let l = ledger();
        let cases = [
            (Transaction::payment(acc(A), acc(B), 5_000), "INSUFFICIENT_BALANCE"),
            (Transaction::payment(acc(A), acc(A), 1), "MALFORMED_TX"),
            (Transaction::payment(acc(A), acc(B), 0), "MALFORMED_TX"),
        ];
        for (tx, code) in cases {
            let (next, r) = apply_transaction(&l, &tx, SimConfig::default());
            assert_eq!(next, l);
            assert!(matches!(r.outcome, TxOutcome::Rejected { code: ref c, .. } if c == code), "{r:?}");
        }
        let unknown = AccountAddress::parse("rLUEXYuLiQptky37CqLcm9USQpPiz5rkpD").unwrap();
        let (next, r) = apply_transaction(&l, &Transaction::payment(acc(A), unknown, 1), SimConfig::default());
        assert_eq!(next, l);
        assert!(matches!(r.outcome, TxOutcome::Rejected { ref code, .. } if code == "UNKNOWN_DESTINATION"));
    }

    #[test]
    fn install_requires_clean_program_and_known_account() {
        let l = ledger();
        let dirty = hook(vec![terminal("ok", K::Accept)], None);
        let err = install_hook(&l, &acc(A), dirty, Trigger::Both).unwrap_err();
        assert_eq!(err.code(), "PROGRAM_NOT_CLEAN");
        assert!(matches!(err, VmError::ProgramNotClean { ref codes } if codes == &["GUARD_ABSENT"]));

        let unknown = AccountAddress::parse("rLUEXYuLiQptky37CqLcm9USQpPiz5rkpD").unwrap();
        let clean = hook(vec![guard("g", 1), terminal("ok", K::Accept)], None);
        assert_eq!(install_hook(&l, &unknown, clean, Trigger::Both).unwrap_err().code(), "UNKNOWN_ACCOUNT");
    }

    #[test]
    fn receiver_hook_can_reject() {
        let l = install_hook(&ledger(), &acc(B), hook(vec![guard("g", 1), terminal("no", K::Rollback)], None), Trigger::Incoming)
            .unwrap();
        let (next, r) = apply_transaction(&l, &Transaction::payment(acc(A), acc(B), 10), SimConfig::default());
        assert_eq!(next, l);
        assert!(matches!(r.outcome, TxOutcome::Rejected { ref code, .. } if code == "HOOK_REJECTED"));
        assert!(r.receiver_hook.is_some() && r.sender_hook.is_none());

        // outgoing payments from B do not fire an incoming-only hook
        let (_, r) = apply_transaction(&l, &Transaction::payment(acc(B), acc(A), 10), SimConfig::default());
        assert!(r.outcome.is_applied());
        assert!(r.sender_hook.is_none());
    }

    #[test]
    fn emission_and_callback() {
        let emit = Block::new("e", K::EmitPayment)
            .with_input("DESTINATION", Block::new("d", K::LiteralAccount).with_field("ADDRESS", acc(C)))
            .with_input("AMOUNT", lit("n", 50));
        let record = Block::new("s", K::StateSet).with_field("KEY", "last").with_input("VALUE", Block::new("er", K::EmitResult));
        let p = hook(vec![guard("g", 1), emit, terminal("ok", K::Accept)], Some(vec![guard("cg", 2), record]));
        let l = install_hook(&ledger(), &acc(B), p, Trigger::Incoming).unwrap();
        let (next, r) = apply_transaction(&l, &Transaction::payment(acc(A), acc(B), 100), SimConfig::default());
        assert!(r.outcome.is_applied());
        assert_eq!(r.emitted.len(), 1);
        assert_eq!(r.emitted[0].result_code, EMIT_OK);
        assert_eq!(next.balance(&acc(A)), Some(900));
        assert_eq!(next.balance(&acc(B)), Some(1_050));
        assert_eq!(next.balance(&acc(C)), Some(1_050));
        assert_eq!(next.ledger_seq, 2);
        assert_eq!(next.state_store.get(&(acc(B), "last".into())), Some(&0));
    }

    #[test]
    fn failed_emission_reports_nonzero_result() {
        let emit = Block::new("e", K::EmitPayment)
            .with_input("DESTINATION", Block::new("d", K::LiteralAccount).with_field("ADDRESS", acc(C)))
            .with_input("AMOUNT", lit("n", 1_000_000));
        let record = Block::new("s", K::StateSet).with_field("KEY", "last").with_input("VALUE", Block::new("er", K::EmitResult));
        let p = hook(vec![guard("g", 1), emit, terminal("ok", K::Accept)], Some(vec![guard("cg", 2), record]));
        let l = install_hook(&ledger(), &acc(B), p, Trigger::Incoming).unwrap();
        let (next, r) = apply_transaction(&l, &Transaction::payment(acc(A), acc(B), 100), SimConfig::default());
        assert!(r.outcome.is_applied());
        assert_eq!(r.emitted[0].result_code, EMIT_INSUFFICIENT_BALANCE);
        assert_eq!(next.balance(&acc(C)), Some(1_000));
        assert_eq!(next.state_store.get(&(acc(B), "last".into())), Some(&EMIT_INSUFFICIENT_BALANCE));
        assert_eq!(next.total_drops(), l.total_drops());
    }

    #[test]
    fn fixed_fee_is_burned() {
        let l = ledger();
        let (next, _) = apply_transaction(&l, &Transaction::payment(acc(A), acc(B), 100), SimConfig { fee_drops: 12 });
        assert_eq!(next.balance(&acc(A)), Some(888));
        assert_eq!(next.burned_drops, 12);
        assert_eq!(next.total_drops(), l.total_drops());
    }
}
