use std::collections::BTreeMap;

use crate::address::AccountAddress;
use crate::arith;
use crate::block_ir::{Block, BlockKind, BlockProgram, FieldValue};

use super::{
    Disposition, EmitOrigin, ExecutionResult, StateKey, StateWrite, Transaction, CODE_DIVIDE_BY_ZERO,
    CODE_EMIT_FAILED, CODE_NO_TERMINAL, CODE_OVERFLOW,
};

/// What a hook can observe while running.
#[derive(Debug, Clone, Copy)]
pub struct HookContext<'a> {
    pub otxn: &'a Transaction,
    pub hook_account: &'a AccountAddress,
    pub state: &'a BTreeMap<StateKey, i64>,
}

/// Runs the hook entry of `program`. A program without a hook entry rolls
/// back as if it fell off the end.
pub fn execute_hook(program: &BlockProgram, ctx: &HookContext<'_>) -> ExecutionResult {
    let body = program.hook_entry().and_then(|e| e.next.as_deref());
    Machine::new(ctx, None).run(body, || Disposition::RolledBack { msg: "no terminal".into(), code: CODE_NO_TERMINAL })
}

/// Runs the callback entry with the result of an emitted transaction, if the
/// program has one. Falling off the end of a callback accepts.
pub fn execute_cbak(program: &BlockProgram, ctx: &HookContext<'_>, emit_result: i64) -> Option<ExecutionResult> {
    let entry = program.cbak_entry()?;
    Some(
        Machine::new(ctx, Some(emit_result))
            .run(entry.next.as_deref(), || Disposition::Accepted { msg: String::new(), code: 0 }),
    )
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Num(i64),
    Bool(bool),
    Text(String),
    Account(AccountAddress),
}

impl Value {
    fn num(self) -> i64 {
        match self {
            Value::Num(n) => n,
            Value::Bool(b) => b as i64,
            _ => 0,
        }
    }
    fn truthy(self) -> bool {
        match self {
            Value::Bool(b) => b,
            Value::Num(n) => n != 0,
            _ => false,
        }
    }
}

type Flow<T> = Result<T, Disposition>;

fn overflow() -> Disposition {
    Disposition::RolledBack { msg: "hookforge: arithmetic overflow".into(), code: CODE_OVERFLOW }
}

struct Machine<'a, 'c> {
    ctx: &'c HookContext<'a>,
    emit_result: Option<i64>,
    guard_counters: BTreeMap<i64, u64>,
    vars: BTreeMap<String, i64>,
    written: BTreeMap<String, i64>,
    trace_log: Vec<String>,
    emitted: Vec<Transaction>,
    state_writes: Vec<StateWrite>,
    steps: u64,
}

impl<'a, 'c> Machine<'a, 'c> {
    fn new(ctx: &'c HookContext<'a>, emit_result: Option<i64>) -> Self {
        Machine {
            ctx,
            emit_result,
            guard_counters: BTreeMap::new(),
            vars: BTreeMap::new(),
            written: BTreeMap::new(),
            trace_log: Vec::new(),
            emitted: Vec::new(),
            state_writes: Vec::new(),
            steps: 0,
        }
    }

    fn run(mut self, body: Option<&Block>, fall_off: impl FnOnce() -> Disposition) -> ExecutionResult {
        let disposition = match self.chain(body) {
            Ok(()) => fall_off(),
            Err(d) => d,
        };
        if !disposition.is_accepted() {
            self.emitted.clear();
            self.state_writes.clear();
        }
        ExecutionResult {
            disposition,
            trace_log: self.trace_log,
            emitted: self.emitted,
            state_writes: self.state_writes,
            steps_executed: self.steps,
        }
    }

    fn chain(&mut self, head: Option<&Block>) -> Flow<()> {
        let Some(head) = head else { return Ok(()) };
        for stmt in head.chain_iter() {
            self.statement(stmt)?;
        }
        Ok(())
    }

    fn statement(&mut self, b: &Block) -> Flow<()> {
        let int = |f: &str| b.field(f).and_then(FieldValue::as_integer).unwrap_or_default();
        let text = |f: &str| b.field(f).and_then(FieldValue::as_text).unwrap_or_default().to_string();

        if b.kind == BlockKind::Guard {
            let id = int("ID");
            let count = self.guard_counters.entry(id).or_default();
            *count += 1;
            if *count > int("MAXITER").max(0) as u64 {
                return Err(Disposition::GuardViolation { guard_id: id });
            }
            self.steps += 1;
            return Ok(());
        }

        self.steps += 1;
        match b.kind {
            BlockKind::Accept => Err(Disposition::Accepted { msg: text("MSG"), code: int("CODE") }),
            BlockKind::Rollback => Err(Disposition::RolledBack { msg: text("MSG"), code: int("CODE") }),
            BlockKind::Trace => {
                let msg = text("MSG");
                let line = match b.input("VALUE") {
                    None => msg,
                    Some(v) => match self.expr(v)? {
                        Value::Num(n) => format!("{msg} {n}"),
                        Value::Bool(x) => format!("{msg} {}", x as i64),
                        Value::Text(t) => format!("{msg} {t}"),
                        Value::Account(a) => format!("{msg} {a}"),
                    },
                };
                self.trace_log.push(line);
                Ok(())
            }
            BlockKind::EmitPayment => {
                let dest = self.expr(b.input("DESTINATION").expect("validated"))?;
                let amount = self.expr(b.input("AMOUNT").expect("validated"))?.num();
                let emit_failed = || Disposition::RolledBack { msg: "hookforge: emit failed".into(), code: CODE_EMIT_FAILED };
                let Value::Account(dest) = dest else { return Err(emit_failed()) };
                if amount < 1 || &dest == self.ctx.hook_account || self.emit_result.is_some() {
                    return Err(emit_failed());
                }
                let generation = self.ctx.otxn.emitted_by.as_ref().map_or(0, |o| o.generation) + 1;
                self.emitted.push(Transaction {
                    kind: super::TxKind::Payment,
                    account: self.ctx.hook_account.clone(),
                    destination: dest,
                    amount: amount as u64,
                    emitted_by: Some(EmitOrigin { account: self.ctx.hook_account.clone(), generation }),
                });
                Ok(())
            }
            BlockKind::StateSet => {
                let value = self.expr(b.input("VALUE").expect("validated"))?.num();
                let key = text("KEY");
                self.written.insert(key.clone(), value);
                self.state_writes.push(StateWrite { account: self.ctx.hook_account.clone(), key, value });
                Ok(())
            }
            BlockKind::VarSet => {
                let value = self.expr(b.input("VALUE").expect("validated"))?.num();
                self.vars.insert(text("VAR"), value);
                Ok(())
            }
            BlockKind::If => {
                if self.expr(b.input("COND").expect("validated"))?.truthy() {
                    self.chain(b.input("DO"))?;
                }
                Ok(())
            }
            BlockKind::IfElse => {
                let branch = if self.expr(b.input("COND").expect("validated"))?.truthy() { "DO" } else { "ELSE" };
                self.chain(b.input(branch))
            }
            BlockKind::Repeat => {
                for _ in 0..int("COUNT").max(0) {
                    self.chain(b.input("DO"))?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn expr(&mut self, b: &Block) -> Flow<Value> {
        let field_text = |f: &str| b.field(f).and_then(FieldValue::as_text).unwrap_or_default();
        Ok(match b.kind {
            BlockKind::LiteralNumber => Value::Num(b.field("NUM").and_then(FieldValue::as_integer).unwrap_or_default()),
            BlockKind::LiteralText => Value::Text(field_text("TEXT").to_string()),
            BlockKind::LiteralAccount => Value::Account(b.field("ADDRESS").and_then(FieldValue::as_account).expect("validated").clone()),
            BlockKind::OtxnAmount => Value::Num(i64::try_from(self.ctx.otxn.amount).unwrap_or(i64::MAX)),
            BlockKind::OtxnAccount => Value::Account(self.ctx.otxn.account.clone()),
            BlockKind::OtxnDestination => Value::Account(self.ctx.otxn.destination.clone()),
            BlockKind::HookAccount => Value::Account(self.ctx.hook_account.clone()),
            BlockKind::EmitResult => Value::Num(self.emit_result.unwrap_or_default()),
            BlockKind::StateGet => {
                let key = field_text("KEY");
                let stored = self.written.get(key).copied().or_else(|| {
                    self.ctx.state.get(&(self.ctx.hook_account.clone(), key.to_string())).copied()
                });
                Value::Num(stored.unwrap_or(0))
            }
            BlockKind::VarGet => Value::Num(self.vars.get(field_text("VAR")).copied().unwrap_or(0)),
            BlockKind::Compare => {
                let op = field_text("OP").to_string();
                let a = self.expr(b.input("A").expect("validated"))?.num();
                let c = self.expr(b.input("B").expect("validated"))?.num();
                Value::Bool(match op.as_str() {
                    "LT" => a < c,
                    "LTE" => a <= c,
                    "EQ" => a == c,
                    "NEQ" => a != c,
                    "GTE" => a >= c,
                    _ => a > c,
                })
            }
            BlockKind::Arithmetic => {
                let op = field_text("OP").to_string();
                let a = self.expr(b.input("A").expect("validated"))?.num();
                let c = self.expr(b.input("B").expect("validated"))?.num();
                let r = match op.as_str() {
                    "ADD" => a.checked_add(c),
                    "SUB" => a.checked_sub(c),
                    "MUL" => a.checked_mul(c),
                    _ if c == 0 => {
                        return Err(Disposition::RolledBack {
                            msg: "hookforge: divide by zero".into(),
                            code: CODE_DIVIDE_BY_ZERO,
                        })
                    }
                    _ => arith::floor_div(a, c),
                };
                Value::Num(r.ok_or_else(overflow)?)
            }
            BlockKind::PercentOf => {
                let p = b.field("PERCENT").and_then(FieldValue::as_integer).unwrap_or_default();
                let x = self.expr(b.input("VALUE").expect("validated"))?.num();
                Value::Num(arith::percent_of(p, x).ok_or_else(overflow)?)
            }
            BlockKind::AccountEquals => {
                let a = self.expr(b.input("A").expect("validated"))?;
                let c = self.expr(b.input("B").expect("validated"))?;
                Value::Bool(a == c)
            }
            BlockKind::AccountListContains => {
                let acc = self.expr(b.input("ACCOUNT").expect("validated"))?;
                let list = b.field("LIST").and_then(FieldValue::as_account_list).unwrap_or_default();
                Value::Bool(matches!(acc, Value::Account(a) if list.contains(&a)))
            }
            BlockKind::LogicOperation => {
                // both sides are side-effect free, so evaluation order is not observable
                let and = field_text("OP") == "AND";
                let a = self.expr(b.input("A").expect("validated"))?.truthy();
                let c = self.expr(b.input("B").expect("validated"))?.truthy();
                Value::Bool(if and { a && c } else { a || c })
            }
            BlockKind::LogicNegate => Value::Bool(!self.expr(b.input("BOOL").expect("validated"))?.truthy()),
            _ => Value::Num(0),
        })
    }
}
