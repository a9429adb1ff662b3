//! Classic XRPL account addresses.
//!
//! An address is the base58-check encoding (ripple alphabet) of a one-byte
//! version prefix `0x00` followed by the 20-byte account id.

use std::fmt;
use std::str::FromStr;

use bs58::Alphabet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const ACCOUNT_ID_VERSION: u8 = 0x00;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AddressError {
    #[error("address must be 25-35 characters starting with 'r', got {0:?}")]
    Shape(String),
    #[error("address {0:?} is not valid base58-check: {1}")]
    Checksum(String, String),
    #[error("address {0:?} does not encode a 20-byte account id")]
    Payload(String),
}

/// 20-byte account identifier.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AccountId(pub [u8; 20]);

impl AccountId {
    pub fn to_address(&self) -> AccountAddress {
        let text = bs58::encode(self.0)
            .with_alphabet(Alphabet::RIPPLE)
            .with_check_version(ACCOUNT_ID_VERSION)
            .into_string();
        AccountAddress(text)
    }
}

impl fmt::Debug for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AccountId({})", hex::encode_upper(self.0))
    }
}

/// A validated classic address such as `rHb9CJAWyB4rj91VRWn96DkukG4bwdtyTh`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AccountAddress(String);

impl AccountAddress {
    pub fn parse(text: &str) -> Result<Self, AddressError> {
        decode_account_id(text)?;
        Ok(AccountAddress(text.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn account_id(&self) -> AccountId {
        // validated on construction
        decode_account_id(&self.0).expect("AccountAddress holds a valid address")
    }
}

pub fn decode_account_id(text: &str) -> Result<AccountId, AddressError> {
    if !(25..=35).contains(&text.len()) || !text.starts_with('r') {
        return Err(AddressError::Shape(text.to_string()));
    }
    let decoded = bs58::decode(text)
        .with_alphabet(Alphabet::RIPPLE)
        .with_check(Some(ACCOUNT_ID_VERSION))
        .into_vec()
        .map_err(|e| AddressError::Checksum(text.to_string(), e.to_string()))?;
    // decoded = version byte + payload
    if decoded.len() != 21 {
        return Err(AddressError::Payload(text.to_string()));
    }
    let mut id = [0u8; 20];
    id.copy_from_slice(&decoded[1..]);
    Ok(AccountId(id))
}

impl FromStr for AccountAddress {
    type Err = AddressError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AccountAddress::parse(s)
    }
}

impl TryFrom<String> for AccountAddress {
    type Error = AddressError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        decode_account_id(&value)?;
        Ok(AccountAddress(value))
    }
}

impl From<AccountAddress> for String {
    fn from(value: AccountAddress) -> Self {
        value.0
    }
}

impl fmt::Display for AccountAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for AccountAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}
