//! Binary serialization for the transaction fields hookforge needs.
//!
//! Transactions are handled in their JSON form: integers as numbers, drop
//! amounts as decimal strings, blobs and hashes as uppercase hex, accounts as
//! classic addresses. Any field outside the table below is refused.

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::address::{AccountAddress, AccountId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("field {0} is not supported")]
    UnsupportedField(String),
    #[error("field {field}: {message}")]
    InvalidValue { field: String, message: String },
    #[error("binary input is malformed: {0}")]
    Malformed(String),
}

impl CodecError {
    pub fn code(&self) -> &'static str {
        match self {
            CodecError::UnsupportedField(_) => "UNSUPPORTED_FIELD",
            CodecError::InvalidValue { .. } => "INVALID_FIELD_VALUE",
            CodecError::Malformed(_) => "MALFORMED_BLOB",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    UInt16,
    UInt32,
    Hash256,
    Amount,
    Blob,
    AccountId,
    Object,
    Array,
}

impl Kind {
    fn type_code(self) -> u8 {
        match self {
            Kind::UInt16 => 1,
            Kind::UInt32 => 2,
            Kind::Hash256 => 5,
            Kind::Amount => 6,
            Kind::Blob => 7,
            Kind::AccountId => 8,
            Kind::Object => 14,
            Kind::Array => 15,
        }
    }
}

struct FieldDef {
    name: &'static str,
    kind: Kind,
    nth: u8,
    signing: bool,
}

const fn f(name: &'static str, kind: Kind, nth: u8) -> FieldDef {
    FieldDef { name, kind, nth, signing: true }
}

const FIELDS: &[FieldDef] = &[
    f("TransactionType", Kind::UInt16, 2),
    f("HookApiVersion", Kind::UInt16, 20),
    f("NetworkID", Kind::UInt32, 1),
    f("Flags", Kind::UInt32, 2),
    f("Sequence", Kind::UInt32, 4),
    f("LastLedgerSequence", Kind::UInt32, 27),
    f("HookOn", Kind::Hash256, 20),
    f("HookNamespace", Kind::Hash256, 32),
    f("Amount", Kind::Amount, 1),
    f("Fee", Kind::Amount, 8),
    f("SigningPubKey", Kind::Blob, 3),
    FieldDef { name: "TxnSignature", kind: Kind::Blob, nth: 4, signing: false },
    f("CreateCode", Kind::Blob, 11),
    f("Account", Kind::AccountId, 1),
    f("Destination", Kind::AccountId, 3),
    f("Hook", Kind::Object, 14),
    f("Hooks", Kind::Array, 11),
];

const OBJECT_END: u8 = 0xE1;
const ARRAY_END: u8 = 0xF1;
/// Largest drop amount a native amount can carry.
pub const MAX_DROPS: u64 = 100_000_000_000_000_000;

const TX_TYPES: &[(&str, u16)] = &[("Payment", 0), ("SetHook", 22)];

fn def_by_name(name: &str) -> Option<&'static FieldDef> {
    FIELDS.iter().find(|d| d.name == name)
}

fn def_by_code(type_code: u8, nth: u8) -> Option<&'static FieldDef> {
    FIELDS.iter().find(|d| d.kind.type_code() == type_code && d.nth == nth)
}

/// Serializes a JSON transaction in canonical field order.
pub fn encode(tx: &Map<String, Value>) -> Result<Vec<u8>, CodecError> {
    let mut out = Vec::new();
    encode_object(tx, false, &mut out)?;
    Ok(out)
}

/// Serialization covered by the signature: everything but `TxnSignature`.
pub fn encode_for_signing(tx: &Map<String, Value>) -> Result<Vec<u8>, CodecError> {
    let mut out = Vec::new();
    encode_object(tx, true, &mut out)?;
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<Map<String, Value>, CodecError> {
    let mut r = Reader { bytes, pos: 0 };
    let map = decode_fields(&mut r, None)?;
    if r.pos != bytes.len() {
        return Err(CodecError::Malformed(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(map)
}

fn encode_object(obj: &Map<String, Value>, signing_only: bool, out: &mut Vec<u8>) -> Result<(), CodecError> {
    let mut fields = Vec::with_capacity(obj.len());
    for (name, value) in obj {
        let def = def_by_name(name).ok_or_else(|| CodecError::UnsupportedField(name.clone()))?;
        if signing_only && !def.signing {
            continue;
        }
        fields.push((def, value));
    }
    fields.sort_by_key(|(d, _)| (d.kind.type_code(), d.nth));
    for (def, value) in fields {
        encode_field(def, value, signing_only, out)?;
    }
    Ok(())
}

fn field_header(type_code: u8, nth: u8, out: &mut Vec<u8>) {
    match (type_code < 16, nth < 16) {
        (true, true) => out.push(type_code << 4 | nth),
        (true, false) => out.extend([type_code << 4, nth]),
        (false, true) => out.extend([nth, type_code]),
        (false, false) => out.extend([0, type_code, nth]),
    }
}

fn invalid(def: &FieldDef, message: impl Into<String>) -> CodecError {
    CodecError::InvalidValue { field: def.name.to_string(), message: message.into() }
}

fn encode_field(def: &FieldDef, value: &Value, signing_only: bool, out: &mut Vec<u8>) -> Result<(), CodecError> {
    field_header(def.kind.type_code(), def.nth, out);
    match def.kind {
        Kind::UInt16 => {
            let n = if def.name == "TransactionType" {
                let name = value.as_str().ok_or_else(|| invalid(def, "expected a transaction type name"))?;
                TX_TYPES
                    .iter()
                    .find(|(n, _)| *n == name)
                    .map(|(_, c)| *c)
                    .ok_or_else(|| CodecError::UnsupportedField(format!("TransactionType {name}")))?
            } else {
                value.as_u64().and_then(|n| u16::try_from(n).ok()).ok_or_else(|| invalid(def, "expected 0..=65535"))?
            };
            out.extend(n.to_be_bytes());
        }
        Kind::UInt32 => {
            let n = value.as_u64().and_then(|n| u32::try_from(n).ok()).ok_or_else(|| invalid(def, "expected 0..=4294967295"))?;
            out.extend(n.to_be_bytes());
        }
        Kind::Hash256 => {
            let bytes = hex_value(def, value)?;
            if bytes.len() != 32 {
                return Err(invalid(def, "expected 32 bytes of hex"));
            }
            out.extend(bytes);
        }
        Kind::Amount => {
            let drops = value
                .as_str()
                .filter(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) && (*s == "0" || !s.starts_with('0')))
                .and_then(|s| s.parse::<u64>().ok())
                .filter(|&d| d <= MAX_DROPS)
                .ok_or_else(|| invalid(def, "expected a decimal string of drops"))?;
            out.extend((drops | 0x4000_0000_0000_0000).to_be_bytes());
        }
        Kind::Blob => {
            let bytes = hex_value(def, value)?;
            encode_vl(bytes.len(), out).map_err(|m| invalid(def, m))?;
            out.extend(bytes);
        }
        Kind::AccountId => {
            let text = value.as_str().ok_or_else(|| invalid(def, "expected an address"))?;
            let id = AccountAddress::parse(text).map_err(|e| invalid(def, e.to_string()))?.account_id();
            out.push(20);
            out.extend(id.0);
        }
        Kind::Object => {
            let obj = value.as_object().ok_or_else(|| invalid(def, "expected an object"))?;
            encode_object(obj, signing_only, out)?;
            out.push(OBJECT_END);
        }
        Kind::Array => {
            let items = value.as_array().ok_or_else(|| invalid(def, "expected an array"))?;
            for item in items {
                // each element is a single-key object naming the wrapped object field
                let wrapper = item.as_object().filter(|o| o.len() == 1).ok_or_else(|| invalid(def, "elements must be {\"Name\": {...}}"))?;
                let (name, inner) = wrapper.iter().next().expect("one entry");
                let inner_def = def_by_name(name).ok_or_else(|| CodecError::UnsupportedField(name.clone()))?;
                if inner_def.kind != Kind::Object {
                    return Err(invalid(def, format!("{name} is not an object field")));
                }
                encode_field(inner_def, inner, signing_only, out)?;
            }
            out.push(ARRAY_END);
        }
    }
    Ok(())
}

fn hex_value(def: &FieldDef, value: &Value) -> Result<Vec<u8>, CodecError> {
    let s = value.as_str().ok_or_else(|| invalid(def, "expected hex text"))?;
    if s.bytes().any(|b| b.is_ascii_lowercase()) {
        return Err(invalid(def, "hex must be uppercase"));
    }
    hex::decode(s).map_err(|e| invalid(def, e.to_string()))
}

pub(crate) fn encode_vl(len: usize, out: &mut Vec<u8>) -> Result<(), String> {
    match len {
        0..=192 => out.push(len as u8),
        193..=12_480 => {
            let l = len - 193;
            out.extend([193 + (l >> 8) as u8, (l & 0xFF) as u8]);
        }
        12_481..=918_744 => {
            let l = len - 12_481;
            out.extend([241 + (l >> 16) as u8, ((l >> 8) & 0xFF) as u8, (l & 0xFF) as u8]);
        }
        _ => return Err(format!("{len} bytes is too long for a variable-length field")),
    }
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], CodecError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| CodecError::Malformed(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn byte(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    fn vl(&mut self) -> Result<usize, CodecError> {
        let b0 = self.byte()? as usize;
        Ok(match b0 {
            0..=192 => b0,
            193..=240 => 193 + ((b0 - 193) << 8) + self.byte()? as usize,
            241..=254 => {
                let b1 = self.byte()? as usize;
                12_481 + ((b0 - 241) << 16) + (b1 << 8) + self.byte()? as usize
            }
            _ => return Err(CodecError::Malformed("bad length prefix".into())),
        })
    }

    fn header(&mut self) -> Result<(u8, u8), CodecError> {
        let b = self.byte()?;
        Ok(match (b >> 4, b & 0x0F) {
            (0, 0) => (self.byte()?, self.byte()?),
            (0, nth) => (self.byte()?, nth),
            (t, 0) => (t, self.byte()?),
            (t, nth) => (t, nth),
        })
    }
}

fn decode_fields(r: &mut Reader<'_>, end_marker: Option<u8>) -> Result<Map<String, Value>, CodecError> {
    let mut map = Map::new();
    let mut last: Option<(u8, u8)> = None;
    loop {
        if r.at_end() {
            if end_marker.is_some() {
                return Err(CodecError::Malformed("object is not terminated".into()));
            }
            return Ok(map);
        }
        if Some(r.bytes[r.pos]) == end_marker {
            r.pos += 1;
            return Ok(map);
        }
        let (t, n) = r.header()?;
        let def = def_by_code(t, n).ok_or_else(|| CodecError::UnsupportedField(format!("type {t} field {n}")))?;
        if last.is_some_and(|l| l >= (t, n)) {
            return Err(CodecError::Malformed(format!("{} is out of canonical order", def.name)));
        }
        last = Some((t, n));
        let value = decode_value(def, r)?;
        map.insert(def.name.to_string(), value);
    }
}

fn decode_value(def: &FieldDef, r: &mut Reader<'_>) -> Result<Value, CodecError> {
    Ok(match def.kind {
        Kind::UInt16 => {
            let n = u16::from_be_bytes(r.take(2)?.try_into().expect("2 bytes"));
            if def.name == "TransactionType" {
                let name = TX_TYPES
                    .iter()
                    .find(|(_, c)| *c == n)
                    .map(|(name, _)| *name)
                    .ok_or_else(|| CodecError::UnsupportedField(format!("TransactionType {n}")))?;
                json!(name)
            } else {
                json!(n)
            }
        }
        Kind::UInt32 => json!(u32::from_be_bytes(r.take(4)?.try_into().expect("4 bytes"))),
        Kind::Hash256 => json!(hex::encode_upper(r.take(32)?)),
        Kind::Amount => {
            let raw = u64::from_be_bytes(r.take(8)?.try_into().expect("8 bytes"));
            if raw & 0x8000_0000_0000_0000 != 0 {
                return Err(CodecError::UnsupportedField(format!("{} as an issued amount", def.name)));
            }
            if raw & 0x4000_0000_0000_0000 == 0 {
                return Err(CodecError::Malformed(format!("{} is a negative native amount", def.name)));
            }
            let drops = raw & !0x4000_0000_0000_0000;
            if drops > MAX_DROPS {
                return Err(CodecError::Malformed(format!("{} exceeds the maximum", def.name)));
            }
            json!(drops.to_string())
        }
        Kind::Blob => {
            let len = r.vl()?;
            json!(hex::encode_upper(r.take(len)?))
        }
        Kind::AccountId => {
            if r.vl()? != 20 {
                return Err(CodecError::Malformed(format!("{} is not 20 bytes", def.name)));
            }
            let id: [u8; 20] = r.take(20)?.try_into().expect("20 bytes");
            json!(AccountId(id).to_address().as_str())
        }
        Kind::Object => Value::Object(decode_fields(r, Some(OBJECT_END))?),
        Kind::Array => {
            let mut items = Vec::new();
            loop {
                if r.at_end() {
                    return Err(CodecError::Malformed("array is not terminated".into()));
                }
                if r.bytes[r.pos] == ARRAY_END {
                    r.pos += 1;
                    break;
                }
                let (t, n) = r.header()?;
                let inner = def_by_code(t, n)
                    .filter(|d| d.kind == Kind::Object)
                    .ok_or_else(|| CodecError::Malformed(format!("array element type {t} field {n} is not an object")))?;
                let mut wrapper = Map::new();
                wrapper.insert(inner.name.to_string(), decode_value(inner, r)?);
                items.push(Value::Object(wrapper));
            }
            Value::Array(items)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn headers() {
        let mut out = Vec::new();
        field_header(1, 2, &mut out);
        field_header(1, 20, &mut out);
        field_header(5, 32, &mut out);
        field_header(15, 11, &mut out);
        assert_eq!(out, [0x12, 0x10, 20, 0x50, 32, 0xFB]);
        let mut r = Reader { bytes: &out, pos: 0 };
        assert_eq!(r.header().unwrap(), (1, 2));
        assert_eq!(r.header().unwrap(), (1, 20));
        assert_eq!(r.header().unwrap(), (5, 32));
        assert_eq!(r.header().unwrap(), (15, 11));
    }

    #[test]
    fn vl_lengths() {
        for len in [0, 1, 192, 193, 194, 500, 12_480, 12_481, 70_000, 918_744] {
            let mut out = Vec::new();
            encode_vl(len, &mut out).unwrap();
            assert_eq!(out.len(), if len <= 192 { 1 } else if len <= 12_480 { 2 } else { 3 });
            assert_eq!(Reader { bytes: &out, pos: 0 }.vl().unwrap(), len, "{len}");
        }
        assert!(encode_vl(918_745, &mut Vec::new()).is_err());
    }

    #[test]
    fn payment_encoding_by_hand() {
        let tx = obj(json!({
            "TransactionType": "Payment",
            "Account": "rHb9CJAWyB4rj91VRWn96DkukG4bwdtyTh",
            "Destination": "rrrrrrrrrrrrrrrrrrrrBZbvji",
            "Amount": "1000",
            "Fee": "10",
            "Sequence": 1,
        }));
        let bytes = encode(&tx).unwrap();
        let expected = [
            "120000",
            "2400000001",
            "6140000000000003E8",
            "68400000000000000A",
            "8114B5F762798A53D543A014CAF8B297CFF8F2F937E8",
            "83140000000000000000000000000000000000000001",
        ]
        .concat();
        assert_eq!(hex::encode_upper(&bytes), expected);
        assert_eq!(decode(&bytes).unwrap(), tx);
    }

    #[test]
    fn sethook_round_trip() {
        let tx = obj(json!({
            "TransactionType": "SetHook",
            "Account": "rHb9CJAWyB4rj91VRWn96DkukG4bwdtyTh",
            "Fee": "12",
            "Sequence": 7,
            "Flags": 0,
            "NetworkID": 21338,
            "SigningPubKey": "ED00",
            "TxnSignature": "AB",
            "Hooks": [{"Hook": {
                "CreateCode": "0061736D01000000",
                "HookOn": "F".repeat(64),
                "HookNamespace": "0".repeat(64),
                "HookApiVersion": 0,
            }}],
        }));
        let bytes = encode(&tx).unwrap();
        assert_eq!(decode(&bytes).unwrap(), tx);
        let signing = encode_for_signing(&tx).unwrap();
        assert_eq!(bytes.len() - signing.len(), 3);
    }

    #[test]
    fn refuses_unknown_fields_and_bad_values() {
        assert_eq!(encode(&obj(json!({"Memos": []}))).unwrap_err().code(), "UNSUPPORTED_FIELD");
        assert_eq!(encode(&obj(json!({"TransactionType": "OfferCreate"}))).unwrap_err().code(), "UNSUPPORTED_FIELD");
        assert_eq!(encode(&obj(json!({"Fee": 12}))).unwrap_err().code(), "INVALID_FIELD_VALUE");
        assert_eq!(encode(&obj(json!({"SigningPubKey": "ed"}))).unwrap_err().code(), "INVALID_FIELD_VALUE");
        assert_eq!(encode(&obj(json!({"Sequence": -1}))).unwrap_err().code(), "INVALID_FIELD_VALUE");
        assert_eq!(decode(&[0x24, 0, 0]).unwrap_err().code(), "MALFORMED_BLOB");
        // Sequence before TransactionType is not canonical
        assert_eq!(decode(&[0x24, 0, 0, 0, 1, 0x12, 0, 0]).unwrap_err().code(), "MALFORMED_BLOB");
    }
}
