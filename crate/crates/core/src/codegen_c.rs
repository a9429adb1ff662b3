//! Hooks-C generation from guard-clean block programs.
//!
//! Output is deterministic: 4-space indentation, LF newlines, helpers and
//! buffers emitted only when used, in first-use order.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::address::AccountAddress;
use crate::block_ir::{serialize_workspace_value, validate, Block, BlockKind, BlockProgram, FieldValue};
use crate::guard_check::{self, loop_iterations, GuardConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineRange {
    pub start_line: usize,
    pub end_line: usize,
    pub block_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CSource {
    pub text: String,
    pub source_digest: String,
    pub block_map: Vec<LineRange>,
}

impl CSource {
    /// Innermost block whose lines contain `line` (1-based).
    pub fn block_at(&self, line: usize) -> Option<&str> {
        block_at(&self.block_map, line)
    }
}

pub fn block_at(map: &[LineRange], line: usize) -> Option<&str> {
    map.iter()
        .filter(|r| r.start_line <= line && line <= r.end_line)
        .min_by_key(|r| r.end_line - r.start_line)
        .map(|r| r.block_id.as_str())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodegenError {
    #[error("precondition failed: {stage} reported {codes:?}")]
    PreconditionFailed { stage: &'static str, codes: Vec<String> },
}

impl CodegenError {
    pub fn code(&self) -> &'static str {
        "PRECONDITION_FAILED"
    }
}

/// Hex SHA-256 of the compact workspace document.
pub fn program_digest(program: &BlockProgram) -> String {
    let doc = serde_json::to_vec(&serialize_workspace_value(program)).expect("json values serialize");
    hex::encode(Sha256::digest(doc))
}

pub fn generate(program: &BlockProgram) -> Result<CSource, CodegenError> {
    generate_with(program, GuardConfig::default())
}

pub fn generate_with(program: &BlockProgram, config: GuardConfig) -> Result<CSource, CodegenError> {
    let report = validate(program);
    if !report.ok {
        return Err(CodegenError::PreconditionFailed {
            stage: "validate",
            codes: report.errors().map(|i| i.code.to_string()).collect(),
        });
    }
    let guards = guard_check::analyze_with(program, config);
    if !guards.ok {
        return Err(CodegenError::PreconditionFailed {
            stage: "guard_check",
            codes: guards.violations.iter().map(|v| v.rule.to_string()).collect(),
        });
    }

    let hook = program.hook_entry().expect("validated program has a hook entry");
    let mut globals = Globals::default();
    let cbak_fn = program.cbak_entry().map(|cb| Function::translate(cb, &mut globals));
    let hook_fn = Function::translate(hook, &mut globals);

    let mut out = Output::default();
    out.line("#include <stdint.h>");
    out.line("#include \"hookapi.h\"");
    out.line("");
    if !globals.accounts.is_empty() {
        for (address, name) in globals.accounts_in_order() {
            let bytes = address.account_id().0;
            let init = bytes.iter().map(|b| format!("0x{b:02X}")).collect::<Vec<_>>().join(", ");
            out.line(&format!("static const uint8_t {name}[20] = {{{init}}}; // {address}"));
        }
        out.line("");
    }
    for helper in Helper::ALL {
        if globals.helpers.contains(helper) {
            for l in helper.source().lines() {
                out.line(l);
            }
            out.line("");
        }
    }

    match cbak_fn {
        Some(f) => out.function("cbak", f),
        None => {
            out.line("int64_t cbak(uint32_t reserved) {");
            out.line("    return 0;");
            out.line("}");
        }
    }
    out.line("");
    out.function("hook", hook_fn);

    Ok(CSource { text: out.text, source_digest: program_digest(program), block_map: out.map })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Helper {
    OtxnDrops,
    StateGet,
    Add,
    Sub,
    Mul,
    FloorDiv,
}

impl Helper {
    const ALL: &'static [Helper] =
        &[Helper::OtxnDrops, Helper::StateGet, Helper::Add, Helper::Sub, Helper::Mul, Helper::FloorDiv];

    fn source(self) -> &'static str {
        match self {
            Helper::OtxnDrops => {
                "static int64_t hf_otxn_drops(void) {
    uint8_t amount[8];
    if (otxn_field(SBUF(amount), sfAmount) != 8) {
        return 0;
    }
    return AMOUNT_TO_DROPS(amount);
}"
            }
            Helper::StateGet => {
                "static int64_t hf_state_get(uint32_t key_ptr, uint32_t key_len) {
    int64_t value = 0;
    if (state(SVAR(value), key_ptr, key_len) != sizeof(value)) {
        return 0;
    }
    return value;
}"
            }
            Helper::Add => {
                "static int64_t hf_add(int64_t a, int64_t b) {
    int64_t r;
    if (__builtin_add_overflow(a, b, &r)) {
        rollback(SBUF(\"hookforge: arithmetic overflow\"), -2);
    }
    return r;
}"
            }
            Helper::Sub => {
                "static int64_t hf_sub(int64_t a, int64_t b) {
    int64_t r;
    if (__builtin_sub_overflow(a, b, &r)) {
        rollback(SBUF(\"hookforge: arithmetic overflow\"), -2);
    }
    return r;
}"
            }
            Helper::Mul => {
                "static int64_t hf_mul(int64_t a, int64_t b) {
    int64_t r;
    if (__builtin_mul_overflow(a, b, &r)) {
        rollback(SBUF(\"hookforge: arithmetic overflow\"), -2);
    }
    return r;
}"
            }
            Helper::FloorDiv => {
                "static int64_t hf_floordiv(int64_t a, int64_t b) {
    if (b == 0) {
        rollback(SBUF(\"hookforge: divide by zero\"), -3);
    }
    if (a == INT64_MIN && b == -1) {
        rollback(SBUF(\"hookforge: arithmetic overflow\"), -2);
    }
    int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) {
        q -= 1;
    }
    return q;
}"
            }
        }
    }
}

#[derive(Default)]
struct Globals {
    accounts: BTreeMap<AccountAddress, (usize, String)>,
    helpers: Vec<Helper>,
}

impl Globals {
    fn account(&mut self, address: &AccountAddress) -> String {
        let n = self.accounts.len() + 1;
        self.accounts.entry(address.clone()).or_insert_with(|| (n, format!("hf_acc_{n}"))).1.clone()
    }

    fn accounts_in_order(&self) -> Vec<(&AccountAddress, &str)> {
        let mut v: Vec<_> = self.accounts.iter().map(|(a, (n, name))| (*n, a, name.as_str())).collect();
        v.sort_by_key(|(n, ..)| *n);
        v.into_iter().map(|(_, a, name)| (a, name)).collect()
    }

    fn helper(&mut self, h: Helper) {
        if !self.helpers.contains(&h) {
            self.helpers.push(h);
        }
    }
}

/// One translated entry point: prologue declarations plus statements.
struct Function {
    entry_id: String,
    prologue: Vec<String>,
    body: Vec<Stmt>,
    needs_return: bool,
}

/// A statement with its nested children, kept structured until line
/// numbers are assigned.
enum Stmt {
    Lines { block_id: String, lines: Vec<String> },
    Nested { block_id: String, open: String, children: Vec<Stmt>, branches: Vec<(String, Vec<Stmt>)> },
}

struct FnState<'g> {
    globals: &'g mut Globals,
    vars: Vec<(String, String)>,
    host_buffers: Vec<&'static str>,
    loop_counter: usize,
    in_cbak: bool,
}

impl Function {
    fn translate(entry: &Block, globals: &mut Globals) -> Function {
        let in_cbak = entry.kind == BlockKind::CbakEntry;
        let mut st = FnState { globals, vars: Vec::new(), host_buffers: Vec::new(), loop_counter: 0, in_cbak };
        let body = st.chain(entry.next.as_deref());
        let needs_return = !entry
            .next
            .as_deref()
            .and_then(|h| h.chain_iter().last())
            .is_some_and(|last| matches!(last.kind, BlockKind::Accept | BlockKind::Rollback));

        let mut prologue = Vec::new();
        for (_, ident) in &st.vars {
            prologue.push(format!("int64_t {ident} = 0;"));
        }
        for buf in &st.host_buffers {
            prologue.push(format!("uint8_t {buf}[20];"));
            prologue.push(match *buf {
                "hf_otxn_account" => "otxn_field(SBUF(hf_otxn_account), sfAccount);".to_string(),
                "hf_otxn_destination" => "otxn_field(SBUF(hf_otxn_destination), sfDestination);".to_string(),
                _ => "hook_account(SBUF(hf_hook_account));".to_string(),
            });
        }
        if !in_cbak {
            let reserve = emit_bound(entry.next.as_deref());
            if reserve > 0 {
                prologue.push(format!("etxn_reserve({reserve});"));
            }
        }
        Function { entry_id: entry.id.clone(), prologue, body, needs_return }
    }
}

/// Upper bound on emits per run, used for `etxn_reserve`.
fn emit_bound(head: Option<&Block>) -> u64 {
    head.map_or(0, |h| {
        h.chain_iter()
            .map(|b| match b.kind {
                BlockKind::EmitPayment => 1,
                BlockKind::Repeat => loop_iterations(b).saturating_mul(emit_bound(b.input("DO"))),
                BlockKind::If => emit_bound(b.input("DO")),
                BlockKind::IfElse => emit_bound(b.input("DO")).max(emit_bound(b.input("ELSE"))),
                _ => 0,
            })
            .fold(0u64, u64::saturating_add)
    })
}

impl FnState<'_> {
    fn chain(&mut self, head: Option<&Block>) -> Vec<Stmt> {
        head.map(|h| h.chain_iter().map(|b| self.statement(b)).collect()).unwrap_or_default()
    }

    fn var(&mut self, name: &str) -> String {
        if let Some((_, ident)) = self.vars.iter().find(|(n, _)| n == name) {
            return ident.clone();
        }
        let base: String = format!(
            "v_{}",
            name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect::<String>()
        );
        let mut ident = base.clone();
        let mut n = 2;
        while self.vars.iter().any(|(_, i)| *i == ident) {
            ident = format!("{base}_{n}");
            n += 1;
        }
        self.vars.push((name.to_string(), ident.clone()));
        ident
    }

    fn host_buffer(&mut self, name: &'static str) -> String {
        if !self.host_buffers.contains(&name) {
            self.host_buffers.push(name);
        }
        name.to_string()
    }

    fn statement(&mut self, b: &Block) -> Stmt {
        let id = b.id.clone();
        let text = |b: &Block, f: &str| c_string(b.field(f).and_then(FieldValue::as_text).unwrap_or_default());
        let int = |b: &Block, f: &str| b.field(f).and_then(FieldValue::as_integer).unwrap_or_default();
        let one = |block_id: String, line: String| Stmt::Lines { block_id, lines: vec![line] };
        match b.kind {
            BlockKind::Guard => one(id, format!("_g({},{});", int(b, "ID"), int(b, "MAXITER"))),
            BlockKind::Accept | BlockKind::Rollback => {
                one(id, format!("{}(SBUF({}),{});", b.kind, text(b, "MSG"), int(b, "CODE")))
            }
            BlockKind::Trace => {
                let msg = text(b, "MSG");
                let line = match b.input("VALUE") {
                    None => format!("TRACESTR({msg});"),
                    Some(v) if v.entry().output == Some(crate::block_ir::ValueType::Text) => {
                        format!("trace(SBUF({msg}), SBUF({}), 0);", self.expr(v))
                    }
                    Some(v) if v.entry().output == Some(crate::block_ir::ValueType::Account) => {
                        format!("trace(SBUF({msg}), {}, 20, 1);", self.expr(v))
                    }
                    Some(v) => format!("trace_num(SBUF({msg}), {});", self.expr(v)),
                };
                one(id, line)
            }
            BlockKind::EmitPayment => {
                let dest = self.expr(b.input("DESTINATION").expect("validated"));
                let amount = self.expr(b.input("AMOUNT").expect("validated"));
                Stmt::Lines {
                    block_id: id,
                    lines: vec![
                        format!("// emit_payment: destination={dest}, amount={amount}"),
                        "{".into(),
                        "    uint8_t hf_tx[PREPARE_PAYMENT_SIMPLE_SIZE];".into(),
                        format!("    PREPARE_PAYMENT_SIMPLE(hf_tx, {amount}, {dest}, 0, 0);"),
                        "    uint8_t hf_emithash[32];".into(),
                        "    if (emit(SBUF(hf_emithash), SBUF(hf_tx)) != 32) {".into(),
                        "        rollback(SBUF(\"hookforge: emit failed\"), -4);".into(),
                        "    }".into(),
                        "}".into(),
                    ],
                }
            }
            BlockKind::StateSet => {
                let value = self.expr(b.input("VALUE").expect("validated"));
                Stmt::Lines {
                    block_id: id,
                    lines: vec![
                        "{".into(),
                        format!("    int64_t hf_value = {value};"),
                        format!("    state_set(SVAR(hf_value), SBUF({}));", text(b, "KEY")),
                        "}".into(),
                    ],
                }
            }
            BlockKind::VarSet => {
                let ident = self.var(b.field("VAR").and_then(FieldValue::as_text).unwrap_or_default());
                let value = self.expr(b.input("VALUE").expect("validated"));
                one(id, format!("{ident} = {value};"))
            }
            BlockKind::If => {
                let cond = self.expr(b.input("COND").expect("validated"));
                let children = self.chain(b.input("DO"));
                Stmt::Nested { block_id: id, open: format!("if ({}) {{", strip_parens(&cond)), children, branches: vec![] }
            }
            BlockKind::IfElse => {
                let cond = self.expr(b.input("COND").expect("validated"));
                let children = self.chain(b.input("DO"));
                let otherwise = self.chain(b.input("ELSE"));
                Stmt::Nested {
                    block_id: id,
                    open: format!("if ({}) {{", strip_parens(&cond)),
                    children,
                    branches: vec![("} else {".into(), otherwise)],
                }
            }
            BlockKind::Repeat => {
                self.loop_counter += 1;
                let i = format!("hf_i{}", self.loop_counter);
                let children = self.chain(b.input("DO"));
                Stmt::Nested {
                    block_id: id,
                    open: format!("for (int64_t {i} = 0; {i} < {}; ++{i}) {{", int(b, "COUNT")),
                    children,
                    branches: vec![],
                }
            }
            // expressions never reach statement position in a validated program
            _ => one(id, format!("/* {} */", b.kind)),
        }
    }

    fn expr(&mut self, b: &Block) -> String {
        let field_text = |f: &str| b.field(f).and_then(FieldValue::as_text).unwrap_or_default().to_string();
        match b.kind {
            BlockKind::LiteralNumber => {
                let n = b.field("NUM").and_then(FieldValue::as_integer).unwrap_or_default();
                if n == i64::MIN {
                    "INT64_MIN".into()
                } else {
                    n.to_string()
                }
            }
            BlockKind::LiteralText => c_string(&field_text("TEXT")),
            BlockKind::LiteralAccount => {
                let address = b.field("ADDRESS").and_then(FieldValue::as_account).expect("validated");
                self.globals.account(address)
            }
            BlockKind::OtxnAmount => {
                self.globals.helper(Helper::OtxnDrops);
                "hf_otxn_drops()".into()
            }
            BlockKind::OtxnAccount => self.host_buffer("hf_otxn_account"),
            BlockKind::OtxnDestination => self.host_buffer("hf_otxn_destination"),
            BlockKind::HookAccount => self.host_buffer("hf_hook_account"),
            BlockKind::EmitResult => {
                debug_assert!(self.in_cbak);
                "((int64_t)reserved)".into()
            }
            BlockKind::StateGet => {
                self.globals.helper(Helper::StateGet);
                format!("hf_state_get(SBUF({}))", c_string(&field_text("KEY")))
            }
            BlockKind::VarGet => self.var(&field_text("VAR")),
            BlockKind::Compare => {
                let op = match field_text("OP").as_str() {
                    "LT" => "<",
                    "LTE" => "<=",
                    "EQ" => "==",
                    "NEQ" => "!=",
                    "GTE" => ">=",
                    _ => ">",
                };
                let a = self.expr(b.input("A").expect("validated"));
                let c = self.expr(b.input("B").expect("validated"));
                format!("({a} {op} {c})")
            }
            BlockKind::Arithmetic => {
                let helper = match field_text("OP").as_str() {
                    "ADD" => Helper::Add,
                    "SUB" => Helper::Sub,
                    "MUL" => Helper::Mul,
                    _ => Helper::FloorDiv,
                };
                self.globals.helper(helper);
                let name = match helper {
                    Helper::Add => "hf_add",
                    Helper::Sub => "hf_sub",
                    Helper::Mul => "hf_mul",
                    _ => "hf_floordiv",
                };
                let a = self.expr(b.input("A").expect("validated"));
                let c = self.expr(b.input("B").expect("validated"));
                format!("{name}({a}, {c})")
            }
            BlockKind::PercentOf => {
                let p = b.field("PERCENT").and_then(FieldValue::as_integer).unwrap_or_default();
                let x = self.expr(b.input("VALUE").expect("validated"));
                format!("(({x}) * {p}) / 100")
            }
            BlockKind::AccountEquals => {
                let a = self.expr(b.input("A").expect("validated"));
                let c = self.expr(b.input("B").expect("validated"));
                format!("BUFFER_EQUAL_20({a}, {c})")
            }
            BlockKind::AccountListContains => {
                let acc = self.expr(b.input("ACCOUNT").expect("validated"));
                let list = b.field("LIST").and_then(FieldValue::as_account_list).unwrap_or_default();
                if list.is_empty() {
                    return "0".into();
                }
                let terms: Vec<_> = list
                    .iter()
                    .map(|a| format!("BUFFER_EQUAL_20({acc}, {})", self.globals.account(a)))
                    .collect();
                format!("({})", terms.join(" || "))
            }
            BlockKind::LogicOperation => {
                let op = if field_text("OP") == "AND" { "&&" } else { "||" };
                let a = self.expr(b.input("A").expect("validated"));
                let c = self.expr(b.input("B").expect("validated"));
                format!("({a} {op} {c})")
            }
            BlockKind::LogicNegate => format!("(!{})", self.expr(b.input("BOOL").expect("validated"))),
            _ => format!("/* {} */ 0", b.kind),
        }
    }
}

fn strip_parens(cond: &str) -> &str {
    // `if ((a < b))` reads badly; drop one redundant pair when it wraps the whole expression
    if cond.starts_with('(') && cond.ends_with(')') {
        let inner = &cond[1..cond.len() - 1];
        let mut depth = 0i32;
        for c in inner.chars() {
            match c {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth < 0 {
                        return cond;
                    }
                }
                _ => {}
            }
        }
        if depth == 0 {
            return inner;
        }
    }
    cond
}

/// C string literal with escapes for quotes, backslashes and control bytes.
pub fn c_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            // break up trigraphs
            '?' if out.ends_with('?') => out.push_str("\\?"),
            c if (c as u32) < 0x20 || c as u32 == 0x7f => {
                let _ = write!(out, "\\{:03o}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[derive(Default)]
struct Output {
    text: String,
    lines: usize,
    map: Vec<LineRange>,
}

impl Output {
    fn line(&mut self, l: &str) {
        self.text.push_str(l);
        self.text.push('\n');
        self.lines += 1;
    }

    fn indented(&mut self, depth: usize, l: &str) {
        let pad = "    ".repeat(depth);
        self.line(&format!("{pad}{l}"));
    }

    fn function(&mut self, name: &str, f: Function) {
        let start = self.lines + 1;
        self.line(&format!("int64_t {name}(uint32_t reserved) {{"));
        for l in &f.prologue {
            self.indented(1, l);
        }
        for s in f.body {
            self.stmt(1, s);
        }
        if f.needs_return {
            self.indented(1, "return 0;");
        }
        self.line("}");
        self.map.push(LineRange { start_line: start, end_line: self.lines, block_id: f.entry_id });
    }

    fn stmt(&mut self, depth: usize, s: Stmt) {
        let start = self.lines + 1;
        let block_id = match s {
            Stmt::Lines { block_id, lines } => {
                for l in &lines {
                    self.indented(depth, l);
                }
                block_id
            }
            Stmt::Nested { block_id, open, children, branches } => {
                self.indented(depth, &open);
                for c in children {
                    self.stmt(depth + 1, c);
                }
                for (header, body) in branches {
                    self.indented(depth, &header);
                    for c in body {
                        self.stmt(depth + 1, c);
                    }
                }
                self.indented(depth, "}");
                block_id
            }
        };
        self.map.push(LineRange { start_line: start, end_line: self.lines, block_id });
    }
}
