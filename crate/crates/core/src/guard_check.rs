//! Static enforcement of the guard discipline.
//!
//! Every entry tree must call a guard, every `repeat` body must start with a
//! guard, guard bounds and repeat counts are positive literals, guard ids are
//! unique, and the worst-case number of executed statements stays below a
//! ceiling. The worst case is computed as
//!
//! ```text
//! bound(chain)   = Σ bound(stmt)
//! bound(repeat)  = 1 + min(count, leading guard maxiter) × bound(body)
//! bound(if)      = 1 + bound(then)
//! bound(if_else) = 1 + max(bound(then), bound(else))
//! bound(other)   = 1
//! ```

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::block_ir::{Block, BlockKind, BlockProgram};

pub const DEFAULT_STEP_CEILING: u64 = 65_536;
/// Largest guard bound or repeat count accepted.
pub const MAX_BOUND: i64 = i32::MAX as i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GuardConfig {
    pub step_ceiling: u64,
}

impl Default for GuardConfig {
    fn default() -> Self {
        GuardConfig { step_ceiling: DEFAULT_STEP_CEILING }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub block_id: String,
    pub rule: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GuardReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    /// Worst-case statements executed by one run of the hook entry.
    pub static_step_bound: u64,
    /// Same for the callback, when the program has one.
    pub cbak_step_bound: Option<u64>,
    pub guard_ids_used: BTreeSet<i64>,
}

pub fn analyze(program: &BlockProgram) -> GuardReport {
    analyze_with(program, GuardConfig::default())
}

pub fn analyze_with(program: &BlockProgram, config: GuardConfig) -> GuardReport {
    let mut violations = Vec::new();
    let mut guards: BTreeMap<i64, Vec<String>> = BTreeMap::new();

    let mut bound_of = |entry: Option<&Block>, violations: &mut Vec<Violation>| -> Option<u64> {
        let entry = entry?;
        let body = entry.next.as_deref();
        let mut has_guard = false;
        if let Some(body) = body {
            body.walk(&mut |b| {
                if b.kind == BlockKind::Guard {
                    has_guard = true;
                    if let Some(id) = b.field("ID").and_then(|v| v.as_integer()) {
                        guards.entry(id).or_default().push(b.id.clone());
                    }
                }
            });
            check_rules(body, violations);
        }
        if !has_guard {
            violations.push(Violation {
                block_id: entry.id.clone(),
                rule: "GUARD_ABSENT",
                message: format!("{} never calls a guard", entry.kind),
            });
        }
        let bound = chain_bound(body);
        if bound > config.step_ceiling {
            violations.push(Violation {
                block_id: entry.id.clone(),
                rule: "STEP_BOUND_EXCEEDED",
                message: format!("worst case of {bound} statements exceeds the ceiling of {}", config.step_ceiling),
            });
        }
        Some(bound)
    };

    let static_step_bound = bound_of(program.hook_entry(), &mut violations).unwrap_or(0);
    let cbak_step_bound = bound_of(program.cbak_entry(), &mut violations);

    for (id, blocks) in &guards {
        for dup in blocks.iter().skip(1) {
            violations.push(Violation {
                block_id: dup.clone(),
                rule: "GUARD_ID_REUSE",
                message: format!("guard id {id} is already used by block {}", blocks[0]),
            });
        }
    }

    GuardReport {
        ok: violations.is_empty(),
        violations,
        static_step_bound,
        cbak_step_bound,
        guard_ids_used: guards.into_keys().collect(),
    }
}

fn check_rules(head: &Block, out: &mut Vec<Violation>) {
    head.walk(&mut |b| match b.kind {
        BlockKind::Guard => {
            check_bound(b, "MAXITER", out);
            match b.field("ID").and_then(|v| v.as_integer()) {
                Some(id) if (0..=MAX_BOUND).contains(&id) => {}
                Some(id) => out.push(Violation {
                    block_id: b.id.clone(),
                    rule: "GUARD_ID_INVALID",
                    message: format!("guard id {id} is outside 0..={MAX_BOUND}"),
                }),
                None => out.push(Violation {
                    block_id: b.id.clone(),
                    rule: "GUARD_BOUND_NONCONST",
                    message: "guard id is not an integer literal".into(),
                }),
            }
        }
        BlockKind::Repeat => {
            check_bound(b, "COUNT", out);
            if b.input("DO").map(|first| first.kind) != Some(BlockKind::Guard) {
                out.push(Violation {
                    block_id: b.id.clone(),
                    rule: "LOOP_UNGUARDED",
                    message: "the first statement of a repeat body must be a guard".into(),
                });
            }
        }
        _ => {}
    });
}

fn check_bound(b: &Block, field: &str, out: &mut Vec<Violation>) {
    let (rule, message) = match b.field(field).and_then(|v| v.as_integer()) {
        None => ("GUARD_BOUND_NONCONST", format!("{field} must be an integer literal")),
        Some(v) if v < 1 => ("GUARD_BOUND_NONPOSITIVE", format!("{field} is {v}, must be at least 1")),
        Some(v) if v > MAX_BOUND => ("GUARD_BOUND_TOO_LARGE", format!("{field} is {v}, must be at most {MAX_BOUND}")),
        Some(_) => return,
    };
    out.push(Violation { block_id: b.id.clone(), rule, message });
}

fn literal(b: &Block, field: &str) -> u64 {
    b.field(field).and_then(|v| v.as_integer()).map_or(0, |v| v.clamp(0, MAX_BOUND) as u64)
}

/// Iterations a repeat block may run: its count capped by its leading guard.
pub(crate) fn loop_iterations(repeat: &Block) -> u64 {
    let count = literal(repeat, "COUNT");
    match repeat.input("DO") {
        Some(first) if first.kind == BlockKind::Guard => count.min(literal(first, "MAXITER")),
        _ => count,
    }
}

pub(crate) fn chain_bound(head: Option<&Block>) -> u64 {
    head.map_or(0, |h| h.chain_iter().fold(0u64, |acc, s| acc.saturating_add(statement_bound(s))))
}

fn statement_bound(b: &Block) -> u64 {
    let inner = match b.kind {
        BlockKind::Repeat => loop_iterations(b).saturating_mul(chain_bound(b.input("DO"))),
        BlockKind::If => chain_bound(b.input("DO")),
        BlockKind::IfElse => chain_bound(b.input("DO")).max(chain_bound(b.input("ELSE"))),
        _ => 0,
    };
    inner.saturating_add(1)
}
