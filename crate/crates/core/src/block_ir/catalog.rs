use std::fmt;
use std::str::FromStr;

use serde::Serialize;

/// Bumped whenever a kind, field or socket changes.
pub const CATALOG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Entry,
    Action,
    Value,
    Control,
    Logic,
}

/// Literal field types. `Choice` is a dropdown whose value is stored as text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "type", content = "options", rename_all = "snake_case")]
pub enum FieldType {
    Integer,
    Text,
    AccountAddress,
    AccountList,
    Choice(&'static [&'static str]),
}

/// Types carried by expression blocks and accepted by value sockets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueType {
    Number,
    Text,
    Boolean,
    Account,
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueType::Number => "number",
            ValueType::Text => "text",
            ValueType::Boolean => "boolean",
            ValueType::Account => "account",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "type", content = "accepts", rename_all = "snake_case")]
pub enum SocketType {
    Value(&'static [ValueType]),
    /// Holds the first block of a nested statement chain.
    Statement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FieldSpec {
    pub name: &'static str,
    #[serde(rename = "value_type")]
    pub ty: FieldType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SocketSpec {
    pub name: &'static str,
    #[serde(rename = "socket_type")]
    pub ty: SocketType,
    pub required: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockCatalogEntry {
    pub kind: BlockKind,
    pub category: Category,
    pub fields: &'static [FieldSpec],
    pub inputs: &'static [SocketSpec],
    /// `None` for statements.
    pub output: Option<ValueType>,
    pub description: &'static str,
}

impl BlockCatalogEntry {
    pub fn is_statement(&self) -> bool {
        self.output.is_none() && self.category != Category::Entry
    }

    pub fn field(&self, name: &str) -> Option<&FieldSpec> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn socket(&self, name: &str) -> Option<&SocketSpec> {
        self.inputs.iter().find(|s| s.name == name)
    }
}

macro_rules! block_kinds {
    ($($variant:ident => $name:literal),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum BlockKind {
            $($variant),*
        }

        impl BlockKind {
            pub const ALL: &'static [BlockKind] = &[$(BlockKind::$variant),*];

            pub fn as_str(&self) -> &'static str {
                match self {
                    $(BlockKind::$variant => $name),*
                }
            }
        }

        impl FromStr for BlockKind {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok(BlockKind::$variant),)*
                    other => Err(other.to_string()),
                }
            }
        }
    };
}

block_kinds! {
    HookEntry => "hook_entry",
    CbakEntry => "cbak_entry",
    Guard => "guard",
    Accept => "accept",
    Rollback => "rollback",
    Trace => "trace",
    EmitPayment => "emit_payment",
    StateGet => "state_get",
    StateSet => "state_set",
    OtxnAmount => "otxn_amount",
    OtxnAccount => "otxn_account",
    OtxnDestination => "otxn_destination",
    HookAccount => "hook_account",
    EmitResult => "emit_result",
    If => "if",
    IfElse => "if_else",
    Repeat => "repeat",
    Compare => "compare",
    Arithmetic => "arithmetic",
    PercentOf => "percent_of",
    LiteralNumber => "literal_number",
    LiteralText => "literal_text",
    LiteralAccount => "literal_account",
    AccountEquals => "account_equals",
    AccountListContains => "account_list_contains",
    LogicOperation => "logic_operation",
    LogicNegate => "logic_negate",
    VarGet => "var_get",
    VarSet => "var_set",
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for BlockKind {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

pub const COMPARE_OPS: &[&str] = &["LT", "LTE", "EQ", "NEQ", "GTE", "GT"];
pub const ARITHMETIC_OPS: &[&str] = &["ADD", "SUB", "MUL", "DIV"];
pub const LOGIC_OPS: &[&str] = &["AND", "OR"];
pub const UNITS: &[&str] = &["DROPS", "XRP"];

pub const DROPS_PER_XRP: i64 = 1_000_000;
pub const MAX_TEXT_BYTES: usize = 128;
pub const MAX_STATE_KEY_BYTES: usize = 32;

const NUMBER: &[ValueType] = &[ValueType::Number];
const BOOLEAN: &[ValueType] = &[ValueType::Boolean];
const ACCOUNT: &[ValueType] = &[ValueType::Account];
const TRACEABLE: &[ValueType] = &[ValueType::Number, ValueType::Text, ValueType::Account];

const fn field(name: &'static str, ty: FieldType) -> FieldSpec {
    FieldSpec { name, ty }
}

const fn value(name: &'static str, accepts: &'static [ValueType]) -> SocketSpec {
    SocketSpec { name, ty: SocketType::Value(accepts), required: true }
}

const fn body(name: &'static str) -> SocketSpec {
    SocketSpec { name, ty: SocketType::Statement, required: false }
}

const fn entry(
    kind: BlockKind,
    category: Category,
    fields: &'static [FieldSpec],
    inputs: &'static [SocketSpec],
    output: Option<ValueType>,
    description: &'static str,
) -> BlockCatalogEntry {
    BlockCatalogEntry { kind, category, fields, inputs, output, description }
}

use BlockKind as K;
use Category as C;

static CATALOG: &[BlockCatalogEntry] = &[
    entry(K::HookEntry, C::Entry, &[], &[], None, "Runs for every transaction the hook is triggered by"),
    entry(K::CbakEntry, C::Entry, &[], &[], None, "Runs once per emitted transaction with its result"),
    entry(
        K::Guard,
        C::Control,
        &[field("ID", FieldType::Integer), field("MAXITER", FieldType::Integer)],
        &[],
        None,
        "Guard call bounding how often this point may be reached",
    ),
    entry(
        K::Accept,
        C::Action,
        &[field("MSG", FieldType::Text), field("CODE", FieldType::Integer)],
        &[],
        None,
        "Accept the transaction and stop",
    ),
    entry(
        K::Rollback,
        C::Action,
        &[field("MSG", FieldType::Text), field("CODE", FieldType::Integer)],
        &[],
        None,
        "Reject the transaction and stop",
    ),
    entry(
        K::Trace,
        C::Action,
        &[field("MSG", FieldType::Text)],
        &[SocketSpec { name: "VALUE", ty: SocketType::Value(TRACEABLE), required: false }],
        None,
        "Write a line to the trace log, optionally followed by a value",
    ),
    entry(
        K::EmitPayment,
        C::Action,
        &[],
        &[value("DESTINATION", ACCOUNT), value("AMOUNT", NUMBER)],
        None,
        "Emit a payment in drops from the hook account",
    ),
    entry(
        K::StateGet,
        C::Value,
        &[field("KEY", FieldType::Text)],
        &[],
        Some(ValueType::Number),
        "Read a number from hook state (0 when unset)",
    ),
    entry(
        K::StateSet,
        C::Action,
        &[field("KEY", FieldType::Text)],
        &[value("VALUE", NUMBER)],
        None,
        "Write a number to hook state",
    ),
    entry(K::OtxnAmount, C::Value, &[], &[], Some(ValueType::Number), "Amount of the originating transaction in drops"),
    entry(K::OtxnAccount, C::Value, &[], &[], Some(ValueType::Account), "Sender of the originating transaction"),
    entry(
        K::OtxnDestination,
        C::Value,
        &[],
        &[],
        Some(ValueType::Account),
        "Destination of the originating transaction",
    ),
    entry(K::HookAccount, C::Value, &[], &[], Some(ValueType::Account), "Account the hook is installed on"),
    entry(
        K::EmitResult,
        C::Value,
        &[],
        &[],
        Some(ValueType::Number),
        "In a callback: 0 when the emitted transaction applied, nonzero otherwise",
    ),
    entry(K::If, C::Control, &[], &[value("COND", BOOLEAN), body("DO")], None, "Run the body when the condition holds"),
    entry(
        K::IfElse,
        C::Control,
        &[],
        &[value("COND", BOOLEAN), body("DO"), body("ELSE")],
        None,
        "Run one of two bodies",
    ),
    entry(
        K::Repeat,
        C::Control,
        &[field("COUNT", FieldType::Integer)],
        &[body("DO")],
        None,
        "Run the body a constant number of times; the body must start with a guard",
    ),
    entry(
        K::Compare,
        C::Logic,
        &[field("OP", FieldType::Choice(COMPARE_OPS))],
        &[value("A", NUMBER), value("B", NUMBER)],
        Some(ValueType::Boolean),
        "Compare two numbers",
    ),
    entry(
        K::Arithmetic,
        C::Value,
        &[field("OP", FieldType::Choice(ARITHMETIC_OPS))],
        &[value("A", NUMBER), value("B", NUMBER)],
        Some(ValueType::Number),
        "Integer arithmetic; division rounds toward negative infinity",
    ),
    entry(
        K::PercentOf,
        C::Value,
        &[field("PERCENT", FieldType::Integer)],
        &[value("VALUE", NUMBER)],
        Some(ValueType::Number),
        "floor(VALUE * PERCENT / 100)",
    ),
    entry(
        K::LiteralNumber,
        C::Value,
        &[field("NUM", FieldType::Integer), field("UNIT", FieldType::Choice(UNITS))],
        &[],
        Some(ValueType::Number),
        "A number; XRP amounts are stored as drops",
    ),
    entry(K::LiteralText, C::Value, &[field("TEXT", FieldType::Text)], &[], Some(ValueType::Text), "A text literal"),
    entry(
        K::LiteralAccount,
        C::Value,
        &[field("ADDRESS", FieldType::AccountAddress)],
        &[],
        Some(ValueType::Account),
        "A fixed account address",
    ),
    entry(
        K::AccountEquals,
        C::Logic,
        &[],
        &[value("A", ACCOUNT), value("B", ACCOUNT)],
        Some(ValueType::Boolean),
        "True when both accounts are the same",
    ),
    entry(
        K::AccountListContains,
        C::Logic,
        &[field("LIST", FieldType::AccountList)],
        &[value("ACCOUNT", ACCOUNT)],
        Some(ValueType::Boolean),
        "True when the account is in the list",
    ),
    entry(
        K::LogicOperation,
        C::Logic,
        &[field("OP", FieldType::Choice(LOGIC_OPS))],
        &[value("A", BOOLEAN), value("B", BOOLEAN)],
        Some(ValueType::Boolean),
        "Boolean and/or",
    ),
    entry(K::LogicNegate, C::Logic, &[], &[value("BOOL", BOOLEAN)], Some(ValueType::Boolean), "Boolean not"),
    entry(K::VarGet, C::Value, &[field("VAR", FieldType::Text)], &[], Some(ValueType::Number), "Read a variable (0 when unset)"),
    entry(
        K::VarSet,
        C::Action,
        &[field("VAR", FieldType::Text)],
        &[value("VALUE", NUMBER)],
        None,
        "Assign a variable",
    ),
];

/// The closed block catalog in a fixed order.
pub fn catalog() -> &'static [BlockCatalogEntry] {
    CATALOG
}

pub fn lookup(kind: BlockKind) -> &'static BlockCatalogEntry {
    CATALOG
        .iter()
        .find(|e| e.kind == kind)
        .expect("every BlockKind has a catalog entry")
}
