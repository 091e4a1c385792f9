//! Signature suites, blockchain-address derivation, key transport and
//! primitive timing.

mod address;
mod dsa_params;
pub mod kem;
mod keys;
mod sign;
mod suite;
pub mod timing;

use thiserror::Error;

pub use address::{derive_bc_address, BcAddress, BC_ADDRESS_LEN};
pub use keys::{generate_keypair, generate_keypair_with, KeyPair, PublicKey};
pub use sign::{canonical_content, field, sign, verify, Field, Nonce, Signature, NONCE_LEN};
pub use suite::{CryptoSuite, SuiteKind};
pub use timing::{measure_primitives, Composition, Op, Primitive, PrimitiveTimings};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("unsupported suite: {0}")]
    UnsupportedSuite(String),
    #[error("empty input")]
    EmptyInput,
    #[error("nothing to sign")]
    EmptyContent,
    #[error("malformed key: {0}")]
    MalformedKey(&'static str),
    #[error("decryption failed")]
    DecryptFailed,
    #[error("missing timing entry {0}")]
    MissingTiming(Primitive),
    #[error("parse error: {0}")]
    Parse(String),
}
