use serde::Serialize;

use super::catalog::{SocketType, MAX_STATE_KEY_BYTES};
use super::structure;
use super::{Block, BlockKind, BlockProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub severity: Severity,
    pub block_id: String,
    pub code: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn has(&self, code: &str) -> bool {
        self.issues.iter().any(|i| i.code == code)
    }
}

struct Collector {
    issues: Vec<Issue>,
}

impl Collector {
    fn push(&mut self, severity: Severity, block: &str, code: &'static str, message: impl Into<String>) {
        self.issues.push(Issue { severity, block_id: block.to_string(), code, message: message.into() });
    }
    fn error(&mut self, block: &str, code: &'static str, message: impl Into<String>) {
        self.push(Severity::Error, block, code, message);
    }
    fn warn(&mut self, block: &str, code: &'static str, message: impl Into<String>) {
        self.push(Severity::Warning, block, code, message);
    }
}

/// Checks every rule and returns all violations. Never fails.
pub fn validate(program: &BlockProgram) -> ValidationReport {
    let mut c = Collector { issues: Vec::new() };

    for p in structure::check(program) {
        c.error(&p.block_id, p.rule.code(), p.message);
    }

    for top in &program.blocks {
        match top.kind {
            BlockKind::HookEntry | BlockKind::CbakEntry => {
                let in_cbak = top.kind == BlockKind::CbakEntry;
                top.walk(&mut |b| check_semantics(b, in_cbak, &mut c));
                if let Some(body) = top.next.as_deref() {
                    check_unreachable(body, &mut c);
                }
            }
            _ => c.warn(&top.id, "DEAD_CODE", format!("{} is not connected to an entry block", top.kind)),
        }
    }

    if let Some(hook) = program.hook_entry() {
        if !chain_terminates(hook.next.as_deref()) {
            c.error(
                &hook.id,
                "NO_TERMINAL_ON_PATH",
                "some path through the hook ends without accept or rollback",
            );
        }
    }

    let ok = !c.issues.iter().any(|i| i.severity == Severity::Error);
    ValidationReport { ok, issues: c.issues }
}

fn check_semantics(b: &Block, in_cbak: bool, c: &mut Collector) {
    let entry = b.entry();
    for spec in entry.inputs {
        if spec.required && matches!(spec.ty, SocketType::Value(_)) && b.input(spec.name).is_none() {
            c.error(&b.id, "EMPTY_SOCKET", format!("{} needs a block in {}", b.kind, spec.name));
        }
    }
    match b.kind {
        BlockKind::EmitPayment if in_cbak => {
            c.error(&b.id, "EMIT_IN_CBAK", "callbacks cannot emit transactions")
        }
        BlockKind::EmitResult if !in_cbak => {
            c.error(&b.id, "EMIT_RESULT_OUTSIDE_CBAK", "emit_result is only available in the callback")
        }
        BlockKind::StateGet | BlockKind::StateSet => {
            if let Some(key) = b.field("KEY").and_then(|v| v.as_text()) {
                if key.is_empty() || key.len() > MAX_STATE_KEY_BYTES {
                    c.error(
                        &b.id,
                        "STATE_KEY_INVALID",
                        format!("state keys must be 1-{MAX_STATE_KEY_BYTES} bytes, got {}", key.len()),
                    );
                }
            }
        }
        BlockKind::VarGet | BlockKind::VarSet => {
            if b.field("VAR").and_then(|v| v.as_text()).is_some_and(str::is_empty) {
                c.error(&b.id, "VARIABLE_NAME_INVALID", "variable name is empty");
            }
        }
        BlockKind::Arithmetic | BlockKind::PercentOf => match const_eval(b) {
            Some(Err(msg)) => {
                let code = if msg.contains("zero") { "DIVIDE_BY_ZERO" } else { "ARITHMETIC_OVERFLOW" };
                c.warn(&b.id, code, msg)
            }
            _ => {
                if b.kind == BlockKind::Arithmetic
                    && b.field("OP").and_then(|v| v.as_text()) == Some("DIV")
                    && b.input("B").and_then(const_eval) == Some(Ok(0))
                {
                    c.warn(&b.id, "DIVIDE_BY_ZERO", "division by a constant zero");
                }
            }
        },
        _ => {}
    }
}

/// Warns about statements that follow a definite terminal.
fn check_unreachable(head: &Block, c: &mut Collector) {
    let mut terminated = false;
    for stmt in head.chain_iter() {
        if terminated {
            c.warn(&stmt.id, "UNREACHABLE_STATEMENT", format!("{} can never run", stmt.kind));
            break;
        }
        for spec in stmt.entry().inputs {
            if spec.ty == SocketType::Statement {
                if let Some(body) = stmt.input(spec.name) {
                    check_unreachable(body, c);
                }
            }
        }
        terminated = statement_terminates(stmt);
    }
}

/// True when every execution of the chain reaches accept or rollback.
pub(crate) fn chain_terminates(head: Option<&Block>) -> bool {
    head.is_some_and(|h| h.chain_iter().any(statement_terminates))
}

fn statement_terminates(b: &Block) -> bool {
    match b.kind {
        BlockKind::Accept | BlockKind::Rollback => true,
        BlockKind::IfElse => chain_terminates(b.input("DO")) && chain_terminates(b.input("ELSE")),
        BlockKind::Repeat => {
            b.field("COUNT").and_then(|v| v.as_integer()).is_some_and(|n| n >= 1) && chain_terminates(b.input("DO"))
        }
        _ => false,
    }
}

/// Folds literal-only arithmetic. `None` when the expression is not constant.
fn const_eval(b: &Block) -> Option<Result<i64, String>> {
    match b.kind {
        BlockKind::LiteralNumber => b.field("NUM")?.as_integer().map(Ok),
        BlockKind::Arithmetic => {
            let a = match const_eval(b.input("A")?)? {
                Ok(v) => v,
                e => return Some(e),
            };
            let d = match const_eval(b.input("B")?)? {
                Ok(v) => v,
                e => return Some(e),
            };
            let op = b.field("OP")?.as_text()?;
            let r = match op {
                "ADD" => a.checked_add(d),
                "SUB" => a.checked_sub(d),
                "MUL" => a.checked_mul(d),
                "DIV" if d == 0 => return Some(Err("division by a constant zero".into())),
                "DIV" => crate::arith::floor_div(a, d),
                _ => return None,
            };
            Some(r.ok_or_else(|| format!("constant arithmetic {a} {op} {d} overflows")))
        }
        BlockKind::PercentOf => {
            let p = b.field("PERCENT")?.as_integer()?;
            let x = match const_eval(b.input("VALUE")?)? {
                Ok(v) => v,
                e => return Some(e),
            };
            Some(crate::arith::percent_of(p, x).ok_or_else(|| format!("{p}% of {x} overflows")))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{chain, Block, BlockKind as K, BlockProgram};
    use super::*;

    fn accept(id: &str) -> Block {
        Block::new(id, K::Accept).with_field("MSG", "ok").with_field("CODE", 0)
    }

    fn guard(id: &str, gid: i64, max: i64) -> Block {
        Block::new(id, K::Guard).with_field("ID", gid).with_field("MAXITER", max)
    }

    fn lit(id: &str, n: i64) -> Block {
        Block::new(id, K::LiteralNumber).with_field("NUM", n).with_field("UNIT", "DROPS")
    }

    fn hook(stmts: Vec<Block>) -> BlockProgram {
        BlockProgram::new(vec![Block::new("entry", K::HookEntry).with_body_next(stmts)])
    }

    trait BodyNext {
        fn with_body_next(self, stmts: Vec<Block>) -> Self;
    }
    impl BodyNext for Block {
        fn with_body_next(mut self, stmts: Vec<Block>) -> Self {
            self.next = chain(stmts).map(Box::new);
            self
        }
    }

    #[test]
    fn accept_all_is_clean() {
        let p = hook(vec![
            guard("g", 1, 1),
            Block::new("t", K::Trace).with_field("MSG", "Accept.c: Called."),
            Block::new("a", K::Accept).with_field("MSG", "Accepted!").with_field("CODE", 1),
        ]);
        let r = validate(&p);
        assert!(r.ok, "{:?}", r.issues);
        assert!(r.issues.is_empty());
    }

    #[test]
    fn missing_terminal_on_if_path() {
        let cond = Block::new("c", K::Compare)
            .with_field("OP", "LT")
            .with_input("A", Block::new("amt", K::OtxnAmount))
            .with_input("B", lit("n", 5));
        let p = hook(vec![guard("g", 1, 1), Block::new("if", K::If).with_input("COND", cond).with_body("DO", vec![accept("a")])]);
        let r = validate(&p);
        assert!(!r.ok);
        assert!(r.has("NO_TERMINAL_ON_PATH"));
    }

    #[test]
    fn if_else_with_terminals_on_both_sides_is_fine() {
        let cond = Block::new("c", K::AccountEquals)
            .with_input("A", Block::new("x", K::OtxnAccount))
            .with_input("B", Block::new("y", K::HookAccount));
        let p = hook(vec![
            guard("g", 1, 1),
            Block::new("ie", K::IfElse)
                .with_input("COND", cond)
                .with_body("DO", vec![accept("a1")])
                .with_body("ELSE", vec![accept("a2")]),
        ]);
        assert!(validate(&p).ok);
    }

    #[test]
    fn text_in_number_socket_is_type_mismatch() {
        let cond = Block::new("c", K::Compare)
            .with_field("OP", "LT")
            .with_input("A", Block::new("t", K::LiteralText).with_field("TEXT", "20"))
            .with_input("B", lit("n", 5));
        let p = hook(vec![guard("g", 1, 1), Block::new("if", K::If).with_input("COND", cond), accept("a")]);
        let r = validate(&p);
        assert!(!r.ok);
        assert!(r.issues.iter().any(|i| i.code == "TYPE_MISMATCH" && i.block_id == "t"));
    }

    #[test]
    fn dead_trees_are_warnings() {
        let mut p = hook(vec![guard("g", 1, 1), accept("a")]);
        p.blocks.push(Block::new("lonely", K::Trace).with_field("MSG", "x"));
        let r = validate(&p);
        assert!(r.ok);
        assert_eq!(r.issues[0].code, "DEAD_CODE");
        assert_eq!(r.issues[0].severity, Severity::Warning);
    }

    #[test]
    fn empty_required_socket() {
        let p = hook(vec![guard("g", 1, 1), Block::new("e", K::EmitPayment), accept("a")]);
        let r = validate(&p);
        assert_eq!(r.errors().filter(|i| i.code == "EMPTY_SOCKET").count(), 2);
    }

    #[test]
    fn emit_rules_follow_entry_kind() {
        let mut p = hook(vec![guard("g", 1, 1), Block::new("v", K::VarSet).with_field("VAR", "x").with_input("VALUE", Block::new("er", K::EmitResult)), accept("a")]);
        p.blocks.push(Block::new("cb", K::CbakEntry).with_body_next(vec![Block::new("e", K::EmitPayment)
            .with_input("DESTINATION", Block::new("h", K::HookAccount))
            .with_input("AMOUNT", lit("n", 1))]));
        let r = validate(&p);
        assert!(r.has("EMIT_RESULT_OUTSIDE_CBAK"));
        assert!(r.has("EMIT_IN_CBAK"));
    }

    #[test]
    fn constant_overflow_and_zero_division_warn() {
        let over = Block::new("m", K::Arithmetic)
            .with_field("OP", "MUL")
            .with_input("A", lit("a", i64::MAX))
            .with_input("B", lit("b", 2));
        let div = Block::new("d", K::Arithmetic)
            .with_field("OP", "DIV")
            .with_input("A", Block::new("amt", K::OtxnAmount))
            .with_input("B", lit("z", 0));
        let p = hook(vec![
            guard("g", 1, 1),
            Block::new("s1", K::VarSet).with_field("VAR", "x").with_input("VALUE", over),
            Block::new("s2", K::VarSet).with_field("VAR", "y").with_input("VALUE", div),
            accept("done"),
        ]);
        let r = validate(&p);
        assert!(r.ok, "{:?}", r.issues);
        assert!(r.has("ARITHMETIC_OVERFLOW"));
        assert!(r.has("DIVIDE_BY_ZERO"));
    }

    #[test]
    fn statements_after_accept_warn() {
        let p = hook(vec![guard("g", 1, 1), accept("a"), Block::new("t", K::Trace).with_field("MSG", "never")]);
        let r = validate(&p);
        assert!(r.ok);
        assert!(r.has("UNREACHABLE_STATEMENT"));
    }

    #[test]
    fn state_key_length() {
        let p = hook(vec![
            guard("g", 1, 1),
            Block::new("s", K::StateSet).with_field("KEY", "k".repeat(33).as_str()).with_input("VALUE", lit("n", 1)),
            accept("a"),
        ]);
        assert!(validate(&p).has("STATE_KEY_INVALID"));
    }

    #[test]
    fn missing_entry_reported() {
        let r = validate(&BlockProgram::new(vec![]));
        assert!(!r.ok);
        assert!(r.has("MISSING_ENTRY"));
    }
}
