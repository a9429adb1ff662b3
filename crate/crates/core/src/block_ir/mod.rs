//! The visual block language: catalog, program representation, the
//! Blockly-compatible workspace format and validation.

pub mod catalog;
mod structure;
mod validate;
mod workspace;

use std::collections::BTreeMap;

use crate::address::AccountAddress;

pub use catalog::{
    catalog, lookup, BlockCatalogEntry, BlockKind, Category, FieldSpec, FieldType, SocketSpec, SocketType,
    ValueType, CATALOG_VERSION,
};
pub use validate::{validate, Issue, Severity, ValidationReport};
pub use workspace::{parse_workspace, parse_workspace_value, serialize_workspace, serialize_workspace_value, ParseError, MAX_NESTING};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldValue {
    Integer(i64),
    /// Text and dropdown (choice) values.
    Text(String),
    Account(AccountAddress),
    AccountList(Vec<AccountAddress>),
}

impl FieldValue {
    pub fn as_integer(&self) -> Option<i64> {
        match self {
            FieldValue::Integer(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            FieldValue::Text(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_account(&self) -> Option<&AccountAddress> {
        match self {
            FieldValue::Account(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_account_list(&self) -> Option<&[AccountAddress]> {
        match self {
            FieldValue::AccountList(v) => Some(v),
            _ => None,
        }
    }
}

impl From<i64> for FieldValue {
    fn from(v: i64) -> Self {
        FieldValue::Integer(v)
    }
}

impl From<&str> for FieldValue {
    fn from(v: &str) -> Self {
        FieldValue::Text(v.to_string())
    }
}

impl From<AccountAddress> for FieldValue {
    fn from(v: AccountAddress) -> Self {
        FieldValue::Account(v)
    }
}

impl From<Vec<AccountAddress>> for FieldValue {
    fn from(v: Vec<AccountAddress>) -> Self {
        FieldValue::AccountList(v)
    }
}

/// One block. `inputs` always carries every socket the catalog declares for
/// the kind, with `None` for empty sockets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub id: String,
    pub kind: BlockKind,
    pub fields: BTreeMap<String, FieldValue>,
    pub inputs: BTreeMap<String, Option<Box<Block>>>,
    pub next: Option<Box<Block>>,
}

impl Block {
    /// An empty block of `kind` with all declared sockets present and empty.
    pub fn new(id: impl Into<String>, kind: BlockKind) -> Self {
        let inputs = lookup(kind).inputs.iter().map(|s| (s.name.to_string(), None)).collect();
        Block { id: id.into(), kind, fields: BTreeMap::new(), inputs, next: None }
    }

    pub fn with_field(mut self, name: &str, value: impl Into<FieldValue>) -> Self {
        self.fields.insert(name.to_string(), value.into());
        self
    }

    pub fn with_input(mut self, socket: &str, child: Block) -> Self {
        self.inputs.insert(socket.to_string(), Some(Box::new(child)));
        self
    }

    /// Attaches a statement chain (first element first) to a body socket.
    pub fn with_body(self, socket: &str, statements: Vec<Block>) -> Self {
        match chain(statements) {
            Some(first) => self.with_input(socket, first),
            None => self,
        }
    }

    pub fn with_next(mut self, next: Block) -> Self {
        self.next = Some(Box::new(next));
        self
    }

    pub fn field(&self, name: &str) -> Option<&FieldValue> {
        self.fields.get(name)
    }

    pub fn input(&self, socket: &str) -> Option<&Block> {
        self.inputs.get(socket).and_then(|b| b.as_deref())
    }

    pub fn entry(&self) -> &'static BlockCatalogEntry {
        lookup(self.kind)
    }

    /// Iterates this block and its `next` successors.
    pub fn chain_iter(&self) -> ChainIter<'_> {
        ChainIter { cur: Some(self) }
    }

    /// Pre-order walk over this block, its inputs (in socket-name order) and
    /// its successors.
    pub fn walk<'a>(&'a self, visit: &mut dyn FnMut(&'a Block)) {
        for block in self.chain_iter() {
            visit(block);
            for child in block.inputs.values().flatten() {
                child.walk(visit);
            }
        }
    }
}

pub struct ChainIter<'a> {
    cur: Option<&'a Block>,
}

impl<'a> Iterator for ChainIter<'a> {
    type Item = &'a Block;
    fn next(&mut self) -> Option<&'a Block> {
        let cur = self.cur?;
        self.cur = cur.next.as_deref();
        Some(cur)
    }
}

/// Links `statements` through `next`, returning the head.
pub fn chain(statements: Vec<Block>) -> Option<Block> {
    statements.into_iter().rev().fold(None, |tail, mut block| {
        if let Some(t) = tail {
            let mut last = &mut block;
            while last.next.is_some() {
                last = last.next.as_mut().unwrap();
            }
            last.next = Some(Box::new(t));
        }
        Some(block)
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metadata {
    pub name: String,
    pub description: String,
}

/// A workspace: top-level block trees plus free-form metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockProgram {
    pub blocks: Vec<Block>,
    pub metadata: Metadata,
}

impl BlockProgram {
    pub fn new(blocks: Vec<Block>) -> Self {
        BlockProgram { blocks, metadata: Metadata::default() }
    }

    pub fn with_metadata(mut self, name: &str, description: &str) -> Self {
        self.metadata = Metadata { name: name.to_string(), description: description.to_string() };
        self
    }

    /// The first top-level `hook_entry` block.
    pub fn hook_entry(&self) -> Option<&Block> {
        self.blocks.iter().find(|b| b.kind == BlockKind::HookEntry)
    }

    pub fn cbak_entry(&self) -> Option<&Block> {
        self.blocks.iter().find(|b| b.kind == BlockKind::CbakEntry)
    }

    /// Pre-order walk over every block of every top-level tree.
    pub fn walk<'a>(&'a self, visit: &mut dyn FnMut(&'a Block)) {
        for top in &self.blocks {
            top.walk(visit);
        }
    }

    pub fn block_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    pub fn find(&self, id: &str) -> Option<&Block> {
        let mut found = None;
        self.walk(&mut |b| {
            if found.is_none() && b.id == id {
                found = Some(b);
            }
        });
        found
    }
}
