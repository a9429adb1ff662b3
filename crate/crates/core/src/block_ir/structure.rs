//! Structural well-formedness shared by the parser and `validate`.

use std::collections::BTreeSet;

use super::catalog::{FieldSpec, FieldType, SocketType, ValueType, MAX_TEXT_BYTES};
use super::{Block, BlockKind, BlockProgram, FieldValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Rule {
    EmptyId,
    DuplicateId,
    FieldMismatch,
    InputMismatch,
    TypeMismatch,
    MissingEntry,
    MultipleEntries,
}

impl Rule {
    pub(crate) fn code(self) -> &'static str {
        match self {
            Rule::EmptyId => "EMPTY_ID",
            Rule::DuplicateId => "DUPLICATE_ID",
            Rule::FieldMismatch => "FIELD_MISMATCH",
            Rule::InputMismatch => "INPUT_MISMATCH",
            Rule::TypeMismatch => "TYPE_MISMATCH",
            Rule::MissingEntry => "MISSING_ENTRY",
            Rule::MultipleEntries => "MULTIPLE_ENTRIES",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Problem {
    pub block_id: String,
    pub rule: Rule,
    /// Socket or field name the problem is attached to, if any.
    pub socket: Option<String>,
    pub message: String,
}

#[derive(Clone, Copy)]
enum Position {
    TopLevel,
    Statement,
    Value(&'static [ValueType]),
}

/// Checks one literal against its declared type.
pub(crate) fn check_field_value(spec: &FieldSpec, value: &FieldValue) -> Result<(), String> {
    match (spec.ty, value) {
        (FieldType::Integer, FieldValue::Integer(_)) => Ok(()),
        (FieldType::Text, FieldValue::Text(t)) => {
            if t.len() > MAX_TEXT_BYTES {
                Err(format!("text is {} bytes, limit is {MAX_TEXT_BYTES}", t.len()))
            } else {
                Ok(())
            }
        }
        (FieldType::Choice(options), FieldValue::Text(t)) => {
            if options.contains(&t.as_str()) {
                Ok(())
            } else {
                Err(format!("{t:?} is not one of {options:?}"))
            }
        }
        (FieldType::AccountAddress, FieldValue::Account(_)) => Ok(()),
        (FieldType::AccountList, FieldValue::AccountList(_)) => Ok(()),
        (ty, v) => Err(format!("expected {ty:?}, found {v:?}")),
    }
}

pub(crate) fn check(program: &BlockProgram) -> Vec<Problem> {
    let mut problems = Vec::new();
    let mut seen = BTreeSet::new();
    for top in &program.blocks {
        check_chain(top, Position::TopLevel, &mut seen, &mut problems);
    }
    let hooks: Vec<_> = program.blocks.iter().filter(|b| b.kind == BlockKind::HookEntry).collect();
    let cbaks: Vec<_> = program.blocks.iter().filter(|b| b.kind == BlockKind::CbakEntry).collect();
    if hooks.is_empty() {
        problems.push(Problem {
            block_id: String::new(),
            rule: Rule::MissingEntry,
            socket: None,
            message: "workspace has no hook_entry block".into(),
        });
    }
    for (kind, found) in [(BlockKind::HookEntry, &hooks), (BlockKind::CbakEntry, &cbaks)] {
        for extra in found.iter().skip(1) {
            problems.push(Problem {
                block_id: extra.id.clone(),
                rule: Rule::MultipleEntries,
                socket: None,
                message: format!("more than one {kind} block"),
            });
        }
    }
    problems
}

fn check_chain(head: &Block, pos: Position, seen: &mut BTreeSet<String>, out: &mut Vec<Problem>) {
    let mut pos = pos;
    for block in head.chain_iter() {
        check_block(block, pos, seen, out);
        // successors of any block are statements; value blocks may not chain
        if block.next.is_some() && block.entry().output.is_some() {
            out.push(Problem {
                block_id: block.id.clone(),
                rule: Rule::TypeMismatch,
                socket: Some("next".into()),
                message: format!("{} produces a value and cannot have a next statement", block.kind),
            });
            return;
        }
        pos = Position::Statement;
    }
}

fn check_block(block: &Block, pos: Position, seen: &mut BTreeSet<String>, out: &mut Vec<Problem>) {
    let entry = block.entry();
    let problem = |rule, socket: Option<&str>, message: String| Problem {
        block_id: block.id.clone(),
        rule,
        socket: socket.map(str::to_string),
        message,
    };

    if block.id.is_empty() {
        out.push(problem(Rule::EmptyId, None, format!("{} block has an empty id", block.kind)));
    } else if !seen.insert(block.id.clone()) {
        out.push(problem(Rule::DuplicateId, None, format!("id {:?} is used more than once", block.id)));
    }

    match pos {
        Position::TopLevel => {}
        Position::Statement => {
            if !entry.is_statement() {
                out.push(problem(
                    Rule::TypeMismatch,
                    None,
                    format!("{} cannot be used as a statement", block.kind),
                ));
            }
        }
        Position::Value(accepts) => match entry.output {
            Some(out_ty) if accepts.contains(&out_ty) => {}
            Some(out_ty) => out.push(problem(
                Rule::TypeMismatch,
                None,
                format!("{} produces {out_ty}, socket accepts {}", block.kind, describe(accepts)),
            )),
            None => out.push(problem(
                Rule::TypeMismatch,
                None,
                format!("{} is not an expression, socket accepts {}", block.kind, describe(accepts)),
            )),
        },
    }

    for spec in entry.fields {
        match block.fields.get(spec.name) {
            None => out.push(problem(Rule::FieldMismatch, Some(spec.name), format!("missing field {}", spec.name))),
            Some(v) => {
                if let Err(e) = check_field_value(spec, v) {
                    out.push(problem(Rule::FieldMismatch, Some(spec.name), format!("field {}: {e}", spec.name)));
                }
            }
        }
    }
    for name in block.fields.keys() {
        if entry.field(name).is_none() {
            out.push(problem(Rule::FieldMismatch, Some(name), format!("{} has no field {name}", block.kind)));
        }
    }
    for name in block.inputs.keys() {
        if entry.socket(name).is_none() {
            out.push(problem(Rule::InputMismatch, Some(name), format!("{} has no input {name}", block.kind)));
        }
    }
    for spec in entry.inputs {
        match block.inputs.get(spec.name) {
            None => out.push(problem(Rule::InputMismatch, Some(spec.name), format!("missing input {}", spec.name))),
            Some(None) => {}
            Some(Some(child)) => {
                // Type errors are attributed to the parent's socket.
                let before = out.len();
                match spec.ty {
                    SocketType::Statement => check_chain(child, Position::Statement, seen, out),
                    SocketType::Value(accepts) => check_chain(child, Position::Value(accepts), seen, out),
                }
                for p in &mut out[before..] {
                    if p.rule == Rule::TypeMismatch && p.block_id == child.id && p.socket.is_none() {
                        p.socket = Some(spec.name.to_string());
                    }
                }
            }
        }
    }
}

fn describe(accepts: &[ValueType]) -> String {
    accepts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join("|")
}
