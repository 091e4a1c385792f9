//! Blockchain-enabled RAN building blocks: ledger-backed identity binding,
//! the three-message BeMutual handshake, a BC-address switch, a
//! deterministic emergency-scenario simulator and the handshake overhead
//! models.

pub mod bemutual;
pub mod bench;
pub mod beswitch;
pub mod codec;
pub mod crypto;
pub mod ledger;
pub mod simnet;
