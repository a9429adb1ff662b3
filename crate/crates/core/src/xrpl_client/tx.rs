use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::codec::{self, CodecError};
use super::keys::{self, sha512_half, KeyError, Seed, SIGN_PREFIX, TX_ID_PREFIX};
use crate::address::AccountAddress;
use crate::compiler_bridge::{WasmArtifact, WASM_MAGIC};

/// Lowest fee the testnet accepts for a SetHook, in drops.
pub const FEE_FLOOR_DROPS: u64 = 10;
/// Hook fires on Payment only. Bits are inverted: a cleared bit enables the type.
pub const HOOK_ON_PAYMENT: &str = "FFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFBFFFFE";

/// A funded account plus its secret. The secret stays in memory and in the
/// user's account file; it is never logged or sent anywhere.
#[derive(Clone, PartialEq, Eq)]
pub struct TestnetAccount {
    pub address: AccountAddress,
    secret: String,
    pub balance_drops: u64,
}

impl fmt::Debug for TestnetAccount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestnetAccount")
            .field("address", &self.address)
            .field("secret", &"<redacted>")
            .field("balance_drops", &self.balance_drops)
            .finish()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AccountFile {
    address: AccountAddress,
    secret: String,
    #[serde(default)]
    balance_drops: u64,
}

#[derive(Debug, Error)]
pub enum AccountFileError {
    #[error("cannot access account file: {0}")]
    Io(#[from] std::io::Error),
    #[error("account file is malformed: {0}")]
    Malformed(String),
    #[error("secret does not belong to {0}")]
    Mismatch(AccountAddress),
}

impl AccountFileError {
    pub fn code(&self) -> &'static str {
        match self {
            AccountFileError::Io(_) => "ACCOUNT_FILE_UNREADABLE",
            AccountFileError::Malformed(_) => "ACCOUNT_FILE_MALFORMED",
            AccountFileError::Mismatch(_) => "ACCOUNT_MISMATCH",
        }
    }
}

impl TestnetAccount {
    /// Checks that `secret` is an ed25519 seed for `address`.
    pub fn new(address: AccountAddress, secret: String, balance_drops: u64) -> Result<Self, AccountFileError> {
        let seed = Seed::parse(&secret).map_err(|e| AccountFileError::Malformed(e.to_string()))?;
        if seed.keypair().address() != address {
            return Err(AccountFileError::Mismatch(address));
        }
        Ok(TestnetAccount { address, secret, balance_drops })
    }

    pub fn from_seed(seed: &Seed, balance_drops: u64) -> Self {
        TestnetAccount { address: seed.keypair().address(), secret: seed.encode(), balance_drops }
    }

    pub fn seed(&self) -> Seed {
        Seed::parse(&self.secret).expect("checked on construction")
    }

    /// The secret in its encoded form, for the local account file only.
    pub fn expose_secret(&self) -> &str {
        &self.secret
    }

    pub fn to_account_file(&self) -> String {
        let file = AccountFile { address: self.address.clone(), secret: self.secret.clone(), balance_drops: self.balance_drops };
        let mut s = serde_json::to_string_pretty(&file).expect("account file serializes");
        s.push('\n');
        s
    }

    pub fn from_account_file(text: &str) -> Result<Self, AccountFileError> {
        let f: AccountFile = serde_json::from_str(text).map_err(|e| AccountFileError::Malformed(e.to_string()))?;
        TestnetAccount::new(f.address, f.secret, f.balance_drops)
    }

    pub fn load(path: &Path) -> Result<Self, AccountFileError> {
        Self::from_account_file(&std::fs::read_to_string(path)?)
    }

    /// Writes the account file, readable by the owner only where supported.
    pub fn save(&self, path: &Path) -> Result<(), AccountFileError> {
        std::fs::write(path, self.to_account_file())?;
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            std::fs::set_permissions(path, std::fs::Permissions::from_mode(0o600))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnsignedSetHookTx {
    pub account: AccountAddress,
    /// Uppercase hex of the wasm module.
    pub create_code: String,
    pub hook_on: String,
    pub hook_namespace: String,
    pub hook_api_version: u16,
    pub sequence: u32,
    pub fee_drops: u64,
    pub network_id: Option<u32>,
    /// Additional top-level fields; anything outside the codec's subset makes signing fail.
    pub extra_fields: BTreeMap<String, Value>,
    /// Adjustments made while building, such as fee clamping.
    #[serde(skip)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetHookOptions {
    pub hook_on: String,
    pub hook_namespace: String,
    pub hook_api_version: u16,
    pub network_id: Option<u32>,
}

impl Default for SetHookOptions {
    fn default() -> Self {
        SetHookOptions {
            hook_on: HOOK_ON_PAYMENT.into(),
            hook_namespace: hex::encode_upper(Sha256::digest(b"hookforge")),
            hook_api_version: 0,
            network_id: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TxError {
    #[error("the wasm artifact is empty")]
    EmptyArtifact,
    #[error("sequence must be at least 1")]
    InvalidSequence,
    #[error("{0}")]
    InvalidOption(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error("account {account} cannot sign for {tx_account}")]
    AccountMismatch { account: AccountAddress, tx_account: AccountAddress },
}

impl TxError {
    pub fn code(&self) -> &'static str {
        match self {
            TxError::EmptyArtifact => "EMPTY_ARTIFACT",
            TxError::InvalidSequence => "INVALID_SEQUENCE",
            TxError::InvalidOption(_) => "INVALID_OPTION",
            TxError::Codec(e) => e.code(),
            TxError::Key(e) => e.code(),
            TxError::AccountMismatch { .. } => "ACCOUNT_MISMATCH",
        }
    }
}

fn check_hash256(name: &str, value: &str) -> Result<String, TxError> {
    let upper = value.to_ascii_uppercase();
    match hex::decode(&upper) {
        Ok(b) if b.len() == 32 => Ok(upper),
        _ => Err(TxError::InvalidOption(format!("{name} must be 64 hex characters"))),
    }
}

pub fn build_sethook_tx(
    account: &AccountAddress,
    artifact: &WasmArtifact,
    sequence: u32,
    fee_drops: u64,
    options: &SetHookOptions,
) -> Result<UnsignedSetHookTx, TxError> {
    if artifact.bytes.is_empty() {
        return Err(TxError::EmptyArtifact);
    }
    if !artifact.bytes.starts_with(&WASM_MAGIC) {
        return Err(TxError::InvalidOption("artifact is not a wasm module".into()));
    }
    if sequence == 0 {
        return Err(TxError::InvalidSequence);
    }
    let mut warnings = Vec::new();
    let fee = if fee_drops < FEE_FLOOR_DROPS {
        let w = format!("fee of {fee_drops} drops is below the floor; using {FEE_FLOOR_DROPS}");
        log::warn!("{w}");
        warnings.push(w);
        FEE_FLOOR_DROPS
    } else {
        fee_drops
    };
    Ok(UnsignedSetHookTx {
        account: account.clone(),
        create_code: hex::encode_upper(&artifact.bytes),
        hook_on: check_hash256("hook_on", &options.hook_on)?,
        hook_namespace: check_hash256("hook_namespace", &options.hook_namespace)?,
        hook_api_version: options.hook_api_version,
        sequence,
        fee_drops: fee,
        network_id: options.network_id,
        extra_fields: BTreeMap::new(),
        warnings,
    })
}

impl UnsignedSetHookTx {
    /// The transaction in codec JSON form, without signing fields.
    pub fn to_json(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("TransactionType".into(), json!("SetHook"));
        m.insert("Account".into(), json!(self.account.as_str()));
        m.insert("Sequence".into(), json!(self.sequence));
        m.insert("Fee".into(), json!(self.fee_drops.to_string()));
        m.insert("Flags".into(), json!(0));
        if let Some(id) = self.network_id {
            m.insert("NetworkID".into(), json!(id));
        }
        m.insert(
            "Hooks".into(),
            json!([{ "Hook": {
                "CreateCode": self.create_code,
                "HookOn": self.hook_on,
                "HookNamespace": self.hook_namespace,
                "HookApiVersion": self.hook_api_version,
            }}]),
        );
        for (k, v) in &self.extra_fields {
            m.insert(k.clone(), v.clone());
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignedTx {
    pub tx_blob: String,
    pub hash: String,
}

/// Signs any supported transaction JSON with `seed`. `SigningPubKey` and
/// `TxnSignature` are filled in.
pub fn sign_json(tx: &Map<String, Value>, seed: &Seed) -> Result<SignedTx, TxError> {
    let kp = seed.keypair();
    let mut tx = tx.clone();
    tx.remove("TxnSignature");
    tx.insert("SigningPubKey".into(), json!(kp.public_key_hex()));
    let mut message = SIGN_PREFIX.to_vec();
    message.extend(codec::encode_for_signing(&tx)?);
    tx.insert("TxnSignature".into(), json!(hex::encode_upper(kp.sign(&message))));
    let blob = codec::encode(&tx)?;
    Ok(SignedTx { hash: tx_hash(&blob), tx_blob: hex::encode_upper(blob) })
}

pub fn sign_tx(tx: &UnsignedSetHookTx, account: &TestnetAccount) -> Result<SignedTx, TxError> {
    if tx.account != account.address {
        return Err(TxError::AccountMismatch { account: account.address.clone(), tx_account: tx.account.clone() });
    }
    sign_json(&tx.to_json(), &account.seed())
}

/// Identifying hash of a signed blob, uppercase hex.
pub fn tx_hash(blob: &[u8]) -> String {
    let mut data = TX_ID_PREFIX.to_vec();
    data.extend(blob);
    hex::encode_upper(sha512_half(&data))
}

/// Decodes a signed blob and checks its signature and that the key owns the
/// `Account`. Returns the decoded transaction when everything holds.
pub fn verify_signed_blob(blob: &[u8]) -> Result<Map<String, Value>, String> {
    let tx = codec::decode(blob).map_err(|e| e.to_string())?;
    let hex_field = |name: &str| -> Result<Vec<u8>, String> {
        tx.get(name).and_then(Value::as_str).and_then(|s| hex::decode(s).ok()).ok_or_else(|| format!("missing {name}"))
    };
    let public_key = hex_field("SigningPubKey")?;
    let signature = hex_field("TxnSignature")?;
    let mut message = SIGN_PREFIX.to_vec();
    message.extend(codec::encode_for_signing(&tx).map_err(|e| e.to_string())?);
    if !keys::verify(&public_key, &message, &signature) {
        return Err("signature does not verify".into());
    }
    let account = tx.get("Account").and_then(Value::as_str).ok_or("missing Account")?;
    if keys::account_id_of(&public_key).to_address().as_str() != account {
        return Err("signing key does not own the account".into());
    }
    Ok(tx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler_bridge::MOCK_MODULE;

    fn artifact() -> WasmArtifact {
        WasmArtifact::new(MOCK_MODULE.to_vec(), "", "mock").unwrap()
    }

    fn account() -> TestnetAccount {
        TestnetAccount::from_seed(&Seed::from_entropy([3; 16]), 0)
    }

    #[test]
    fn payload_is_uppercase_hex_of_the_module() {
        let tx = build_sethook_tx(&account().address, &artifact(), 1, 12, &SetHookOptions::default()).unwrap();
        assert_eq!(tx.create_code, "0061736D01000000");
        assert!(tx.warnings.is_empty());
    }

    #[test]
    fn fee_is_clamped_and_sequence_checked() {
        let a = account();
        let tx = build_sethook_tx(&a.address, &artifact(), 1, 3, &SetHookOptions::default()).unwrap();
        assert_eq!(tx.fee_drops, 10);
        assert_eq!(tx.warnings.len(), 1);
        let err = build_sethook_tx(&a.address, &artifact(), 0, 12, &SetHookOptions::default()).unwrap_err();
        assert_eq!(err.code(), "INVALID_SEQUENCE");
        let mut empty = artifact();
        empty.bytes.clear();
        let err = build_sethook_tx(&a.address, &empty, 1, 12, &SetHookOptions::default()).unwrap_err();
        assert_eq!(err.code(), "EMPTY_ARTIFACT");
    }

    #[test]
    fn signing_is_deterministic_and_verifiable() {
        let a = account();
        let tx = build_sethook_tx(&a.address, &artifact(), 5, 12, &SetHookOptions::default()).unwrap();
        let s1 = sign_tx(&tx, &a).unwrap();
        let s2 = sign_tx(&tx, &a).unwrap();
        assert_eq!(s1, s2);
        let blob = hex::decode(&s1.tx_blob).unwrap();
        let decoded = verify_signed_blob(&blob).unwrap();
        assert_eq!(decoded["Sequence"], json!(5));

        // flip one byte of the wasm payload
        let code_at = blob.windows(8).position(|w| w == MOCK_MODULE).unwrap();
        let mut tampered = blob.clone();
        tampered[code_at + 7] ^= 0x01;
        assert!(verify_signed_blob(&tampered).is_err());
    }

    #[test]
    fn unsupported_extra_field() {
        let a = account();
        let mut tx = build_sethook_tx(&a.address, &artifact(), 5, 12, &SetHookOptions::default()).unwrap();
        tx.extra_fields.insert("Memos".into(), json!([]));
        assert_eq!(sign_tx(&tx, &a).unwrap_err().code(), "UNSUPPORTED_FIELD");
    }

    #[test]
    fn account_file_round_trip_and_redaction() {
        let a = account();
        let back = TestnetAccount::from_account_file(&a.to_account_file()).unwrap();
        assert_eq!(back, a);
        assert!(!format!("{a:?}").contains(a.expose_secret()));
        let other = TestnetAccount::from_seed(&Seed::from_entropy([4; 16]), 0);
        let forged = format!(r#"{{"address": "{}", "secret": "{}"}}"#, other.address, a.expose_secret());
        assert_eq!(TestnetAccount::from_account_file(&forged).unwrap_err().code(), "ACCOUNT_MISMATCH");
    }
}
