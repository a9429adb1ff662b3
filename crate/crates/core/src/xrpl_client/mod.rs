//! Testnet client: faucet accounts, SetHook construction, local signing and
//! submission. Secrets are used only for local signing.

pub mod codec;
pub mod keys;
pub mod mock;
mod net;
mod tx;

pub use keys::{Keypair, Seed};
pub use net::{
    account_sequence, faucet_create_account, submit, ClientError, Endpoints, SubmitResult, SubmitStatus,
    DEFAULT_FAUCET_URL, DEFAULT_TESTNET_URL, ENV_FAUCET_URL, ENV_TESTNET_URL,
};
pub use tx::{
    build_sethook_tx, sign_json, sign_tx, tx_hash, verify_signed_blob, AccountFileError, SetHookOptions, SignedTx,
    TestnetAccount, TxError, UnsignedSetHookTx, FEE_FLOOR_DROPS, HOOK_ON_PAYMENT,
};
