//! Ed25519 family seeds, keys, and transaction signatures.

use std::fmt;

use ed25519_dalek::{Signer, SigningKey, Verifier, VerifyingKey};
use ripemd::Ripemd160;
use sha2::{Digest, Sha256, Sha512};
use thiserror::Error;

use crate::address::{AccountAddress, AccountId};

/// Prefix that makes encoded ed25519 seeds start with `sEd`.
const ED25519_SEED_PREFIX: [u8; 3] = [0x01, 0xE1, 0x4B];
pub const SIGN_PREFIX: [u8; 4] = *b"STX\0";
pub const TX_ID_PREFIX: [u8; 4] = *b"TXN\0";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeyError {
    #[error("secret is not an ed25519 family seed")]
    InvalidSeed,
}

impl KeyError {
    pub fn code(&self) -> &'static str {
        "INVALID_SEED"
    }
}

pub fn sha512_half(data: &[u8]) -> [u8; 32] {
    Sha512::digest(data)[..32].try_into().expect("64-byte digest")
}

/// 16 bytes of seed entropy. Never printed.
#[derive(Clone, PartialEq, Eq)]
pub struct Seed([u8; 16]);

impl fmt::Debug for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Seed(<redacted>)")
    }
}

impl Seed {
    pub fn from_entropy(entropy: [u8; 16]) -> Self {
        Seed(entropy)
    }

    pub fn parse(text: &str) -> Result<Self, KeyError> {
        let raw = bs58::decode(text.trim())
            .with_alphabet(bs58::Alphabet::RIPPLE)
            .with_check(None)
            .into_vec()
            .map_err(|_| KeyError::InvalidSeed)?;
        match raw.split_first_chunk::<3>() {
            Some((prefix, entropy)) if *prefix == ED25519_SEED_PREFIX && entropy.len() == 16 => {
                Ok(Seed(entropy.try_into().expect("16 bytes")))
            }
            _ => Err(KeyError::InvalidSeed),
        }
    }

    pub fn encode(&self) -> String {
        let mut payload = ED25519_SEED_PREFIX.to_vec();
        payload.extend(self.0);
        bs58::encode(payload).with_alphabet(bs58::Alphabet::RIPPLE).with_check().into_string()
    }

    pub fn keypair(&self) -> Keypair {
        Keypair { signing: SigningKey::from_bytes(&sha512_half(&self.0)) }
    }
}

pub struct Keypair {
    signing: SigningKey,
}

impl fmt::Debug for Keypair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Keypair").field("public_key", &self.public_key_hex()).finish_non_exhaustive()
    }
}

impl Keypair {
    /// 33 bytes: `ED` followed by the raw ed25519 key.
    pub fn public_key(&self) -> [u8; 33] {
        let mut out = [0u8; 33];
        out[0] = 0xED;
        out[1..].copy_from_slice(self.signing.verifying_key().as_bytes());
        out
    }

    pub fn public_key_hex(&self) -> String {
        hex::encode_upper(self.public_key())
    }

    pub fn account_id(&self) -> AccountId {
        account_id_of(&self.public_key())
    }

    pub fn address(&self) -> AccountAddress {
        self.account_id().to_address()
    }

    pub fn sign(&self, message: &[u8]) -> [u8; 64] {
        self.signing.sign(message).to_bytes()
    }
}

pub fn account_id_of(public_key: &[u8]) -> AccountId {
    let sha = Sha256::digest(public_key);
    AccountId(Ripemd160::digest(sha).into())
}

/// Checks an ed25519 signature made by a `ED`-prefixed public key.
pub fn verify(public_key: &[u8], message: &[u8], signature: &[u8]) -> bool {
    let Some((&0xED, raw)) = public_key.split_first() else { return false };
    let (Ok(raw), Ok(sig)) = (<[u8; 32]>::try_from(raw), <[u8; 64]>::try_from(signature)) else { return false };
    let Ok(key) = VerifyingKey::from_bytes(&raw) else { return false };
    key.verify(message, &ed25519_dalek::Signature::from_bytes(&sig)).is_ok()
}
