//! Blockly-compatible workspace documents.
//!
//! ```text
//! { "blocks": { "languageVersion": 0, "blocks": [ <block>* ] },
//!   "metadata": { "name": "...", "description": "..." } }
//! <block> := { "type", "id", "fields"?, "inputs"?, "next"? }
//! ```
//!
//! Keys Blockly adds for editor state (`x`, `y`, `collapsed`, `shadow`, ...)
//! are accepted and dropped.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};
use thiserror::Error;

use super::catalog::{lookup, FieldType, DROPS_PER_XRP};
use super::structure::{self, check_field_value, Rule};
use super::{Block, BlockKind, BlockProgram, FieldValue, Metadata};
use crate::address::AccountAddress;

/// Deepest object/array nesting accepted in a document.
pub const MAX_NESTING: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("unknown block kind {0:?}")]
    UnknownBlockKind(String),
    #[error("duplicate block id {0:?}")]
    DuplicateId(String),
    #[error("type mismatch at {block_id}.{socket}: {detail}")]
    TypeMismatch { block_id: String, socket: String, detail: String },
    #[error("workspace has no hook_entry block")]
    MissingEntry,
    #[error("more than one {0} block")]
    MultipleEntries(String),
}

impl ParseError {
    pub fn code(&self) -> &'static str {
        match self {
            ParseError::MalformedDocument(_) => "MALFORMED_DOCUMENT",
            ParseError::UnknownBlockKind(_) => "UNKNOWN_BLOCK_KIND",
            ParseError::DuplicateId(_) => "DUPLICATE_ID",
            ParseError::TypeMismatch { .. } => "TYPE_MISMATCH",
            ParseError::MissingEntry => "MISSING_ENTRY",
            ParseError::MultipleEntries(_) => "MULTIPLE_ENTRIES",
        }
    }

    /// Block the error is attached to, when there is one.
    pub fn block_id(&self) -> Option<&str> {
        match self {
            ParseError::DuplicateId(id) => Some(id),
            ParseError::TypeMismatch { block_id, .. } => Some(block_id),
            _ => None,
        }
    }
}

fn malformed(msg: impl Into<String>) -> ParseError {
    ParseError::MalformedDocument(msg.into())
}

pub fn parse_workspace(text: &str) -> Result<BlockProgram, ParseError> {
    check_nesting(text)?;
    let mut de = serde_json::Deserializer::from_str(text);
    de.disable_recursion_limit();
    let doc: Value = serde::Deserialize::deserialize(&mut de).map_err(|e| malformed(e.to_string()))?;
    de.end().map_err(|e| malformed(e.to_string()))?;
    parse_workspace_value(&doc)
}

pub fn parse_workspace_value(doc: &Value) -> Result<BlockProgram, ParseError> {
    let root = doc.as_object().ok_or_else(|| malformed("document is not an object"))?;
    let container = root.get("blocks").ok_or_else(|| malformed("missing \"blocks\""))?;
    let container = container.as_object().ok_or_else(|| malformed("\"blocks\" is not an object"))?;
    if let Some(v) = container.get("languageVersion") {
        if v.as_i64() != Some(0) {
            return Err(malformed("unsupported languageVersion"));
        }
    }
    let list = match container.get("blocks") {
        None => &[][..],
        Some(Value::Array(a)) => a.as_slice(),
        Some(_) => return Err(malformed("\"blocks.blocks\" is not an array")),
    };
    let blocks = list.iter().map(parse_block).collect::<Result<Vec<_>, _>>()?;

    let metadata = match root.get("metadata") {
        None => Metadata::default(),
        Some(Value::Object(m)) => Metadata { name: opt_str(m, "name")?, description: opt_str(m, "description")? },
        Some(_) => return Err(malformed("\"metadata\" is not an object")),
    };
    let program = BlockProgram { blocks, metadata };

    // First structural problem wins, in a fixed rule order.
    let problems = structure::check(&program);
    for rule in [Rule::DuplicateId, Rule::TypeMismatch, Rule::MissingEntry, Rule::MultipleEntries] {
        if let Some(p) = problems.iter().find(|p| p.rule == rule) {
            return Err(match rule {
                Rule::DuplicateId => ParseError::DuplicateId(p.block_id.clone()),
                Rule::TypeMismatch => ParseError::TypeMismatch {
                    block_id: p.block_id.clone(),
                    socket: p.socket.clone().unwrap_or_default(),
                    detail: p.message.clone(),
                },
                Rule::MissingEntry => ParseError::MissingEntry,
                _ => ParseError::MultipleEntries(
                    program.find(&p.block_id).map(|b| b.kind.to_string()).unwrap_or_default(),
                ),
            });
        }
    }
    Ok(program)
}

fn opt_str(m: &Map<String, Value>, key: &str) -> Result<String, ParseError> {
    match m.get(key) {
        None | Some(Value::Null) => Ok(String::new()),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(malformed(format!("metadata.{key} is not a string"))),
    }
}

/// Rejects documents nested deeper than [`MAX_NESTING`] before any recursive
/// processing happens.
fn check_nesting(text: &str) -> Result<(), ParseError> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for b in text.bytes() {
        if in_string {
            match (escaped, b) {
                (true, _) => escaped = false,
                (false, b'\\') => escaped = true,
                (false, b'"') => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' | b'[' => {
                depth += 1;
                if depth > MAX_NESTING {
                    return Err(malformed(format!("nesting deeper than {MAX_NESTING}")));
                }
            }
            b'}' | b']' => depth = depth.saturating_sub(1),
            _ => {}
        }
    }
    Ok(())
}

fn parse_block(v: &Value) -> Result<Block, ParseError> {
    let obj = v.as_object().ok_or_else(|| malformed("block is not an object"))?;
    let kind_name = obj
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("block without a string \"type\""))?;
    let kind: BlockKind = kind_name.parse().map_err(ParseError::UnknownBlockKind)?;
    let id = obj
        .get("id")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed(format!("{kind_name} block without a string \"id\"")))?
        .to_string();
    if id.is_empty() {
        return Err(malformed(format!("{kind_name} block has an empty id")));
    }
    let entry = lookup(kind);

    let empty = Map::new();
    let raw_fields = match obj.get("fields") {
        None => &empty,
        Some(Value::Object(m)) => m,
        Some(_) => return Err(malformed(format!("{id}: \"fields\" is not an object"))),
    };
    let mut fields = BTreeMap::new();
    for (name, raw) in raw_fields {
        let spec = entry
            .field(name)
            .ok_or_else(|| malformed(format!("{id}: {kind_name} has no field {name}")))?;
        let mismatch = |detail: String| ParseError::TypeMismatch {
            block_id: id.clone(),
            socket: name.clone(),
            detail,
        };
        let value = field_value(spec.ty, raw).map_err(&mismatch)?;
        check_field_value(spec, &value).map_err(&mismatch)?;
        fields.insert(name.clone(), value);
    }
    for spec in entry.fields {
        if !fields.contains_key(spec.name) {
            return Err(malformed(format!("{id}: missing field {}", spec.name)));
        }
    }
    if kind == BlockKind::LiteralNumber {
        normalize_units(&id, &mut fields)?;
    }

    let mut inputs: BTreeMap<String, Option<Box<Block>>> =
        entry.inputs.iter().map(|s| (s.name.to_string(), None)).collect();
    match obj.get("inputs") {
        None => {}
        Some(Value::Object(m)) => {
            for (name, raw) in m {
                let slot = inputs
                    .get_mut(name)
                    .ok_or_else(|| malformed(format!("{id}: {kind_name} has no input {name}")))?;
                *slot = connection(raw, &format!("{id}.inputs.{name}"))?.map(Box::new);
            }
        }
        Some(_) => return Err(malformed(format!("{id}: \"inputs\" is not an object"))),
    }

    let next = match obj.get("next") {
        None => None,
        Some(raw) => connection(raw, &format!("{id}.next"))?.map(Box::new),
    };

    Ok(Block { id, kind, fields, inputs, next })
}

/// `{ "block": <block> }`; a connection holding only a shadow counts as empty.
fn connection(raw: &Value, at: &str) -> Result<Option<Block>, ParseError> {
    let obj = raw.as_object().ok_or_else(|| malformed(format!("{at} is not an object")))?;
    match obj.get("block") {
        None | Some(Value::Null) => Ok(None),
        Some(b) => parse_block(b).map(Some),
    }
}

fn field_value(ty: FieldType, raw: &Value) -> Result<FieldValue, String> {
    match ty {
        FieldType::Integer => integer(raw).map(FieldValue::Integer),
        FieldType::Text | FieldType::Choice(_) => match raw {
            Value::String(s) => Ok(FieldValue::Text(s.clone())),
            other => Err(format!("expected a string, found {other}")),
        },
        FieldType::AccountAddress => match raw {
            Value::String(s) => AccountAddress::parse(s).map(FieldValue::Account).map_err(|e| e.to_string()),
            other => Err(format!("expected an address string, found {other}")),
        },
        FieldType::AccountList => match raw {
            Value::Array(items) => items
                .iter()
                .map(|item| match item {
                    Value::String(s) => AccountAddress::parse(s).map_err(|e| e.to_string()),
                    other => Err(format!("expected an address string, found {other}")),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(FieldValue::AccountList),
            other => Err(format!("expected a list of addresses, found {other}")),
        },
    }
}

fn integer(raw: &Value) -> Result<i64, String> {
    let Value::Number(n) = raw else {
        return Err(format!("expected an integer, found {raw}"));
    };
    if let Some(i) = n.as_i64() {
        return Ok(i);
    }
    // Blockly number fields may come back as 20.0
    match n.as_f64() {
        Some(f) if f.fract() == 0.0 && f >= i64::MIN as f64 && f < i64::MAX as f64 => Ok(f as i64),
        _ => Err(format!("{n} is not a 64-bit integer")),
    }
}

/// Rewrites an XRP literal as drops.
fn normalize_units(id: &str, fields: &mut BTreeMap<String, FieldValue>) -> Result<(), ParseError> {
    if fields.get("UNIT").and_then(FieldValue::as_text) != Some("XRP") {
        return Ok(());
    }
    let num = fields["NUM"].as_integer().expect("NUM checked as integer");
    let drops = num.checked_mul(DROPS_PER_XRP).ok_or_else(|| ParseError::TypeMismatch {
        block_id: id.to_string(),
        socket: "NUM".into(),
        detail: format!("{num} XRP does not fit in 64-bit drops"),
    })?;
    fields.insert("NUM".into(), FieldValue::Integer(drops));
    fields.insert("UNIT".into(), FieldValue::Text("DROPS".into()));
    Ok(())
}

pub fn serialize_workspace_value(program: &BlockProgram) -> Value {
    let mut root = json!({
        "blocks": {
            "languageVersion": 0,
            "blocks": program.blocks.iter().map(block_value).collect::<Vec<_>>(),
        }
    });
    if program.metadata != Metadata::default() {
        root["metadata"] = json!({
            "name": program.metadata.name,
            "description": program.metadata.description,
        });
    }
    root
}

/// Pretty-printed document with a trailing newline.
pub fn serialize_workspace(program: &BlockProgram) -> String {
    let mut text = serde_json::to_string_pretty(&serialize_workspace_value(program)).expect("json values serialize");
    text.push('\n');
    text
}

fn block_value(block: &Block) -> Value {
    let mut obj = Map::new();
    obj.insert("type".into(), Value::String(block.kind.as_str().into()));
    obj.insert("id".into(), Value::String(block.id.clone()));
    if !block.fields.is_empty() {
        let fields = block
            .fields
            .iter()
            .map(|(k, v)| {
                let v = match v {
                    FieldValue::Integer(i) => json!(i),
                    FieldValue::Text(t) => json!(t),
                    FieldValue::Account(a) => json!(a.as_str()),
                    FieldValue::AccountList(list) => json!(list.iter().map(|a| a.as_str()).collect::<Vec<_>>()),
                };
                (k.clone(), v)
            })
            .collect::<Map<_, _>>();
        obj.insert("fields".into(), Value::Object(fields));
    }
    let inputs = block
        .inputs
        .iter()
        .filter_map(|(k, v)| v.as_ref().map(|b| (k.clone(), json!({ "block": block_value(b) }))))
        .collect::<Map<_, _>>();
    if !inputs.is_empty() {
        obj.insert("inputs".into(), Value::Object(inputs));
    }
    if let Some(next) = &block.next {
        obj.insert("next".into(), json!({ "block": block_value(next) }));
    }
    Value::Object(obj)
}
