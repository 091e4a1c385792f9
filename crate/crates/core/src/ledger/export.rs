//! JSON-lines chain export: one block per line, byte strings as lowercase hex.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{BcAddress, PublicKey, Signature, SuiteKind};

use super::record::BINDING_DESCRIPTOR;
use super::{BindingRecord, Block, PhysicalAddress};

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: bad {what}")]
    Field { line: usize, what: &'static str },
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    bc_address: BcAddress,
    physical_address: PhysicalAddress,
    suite: SuiteKind,
    public_key: String,
    signature: String,
    sequence_number: u64,
    timestamp: u64,
}

#[derive(Serialize, Deserialize)]
struct BlockLine {
    height: u64,
    previous_hash: String,
    block_hash: String,
    records: Vec<RecordLine>,
    balance_deltas: Vec<(BcAddress, i64)>,
}

pub fn export_chain(chain: &[Block]) -> String {
    let mut out = String::new();
    for block in chain {
        let line = BlockLine {
            height: block.height,
            previous_hash: hex::encode(block.previous_hash),
            block_hash: hex::encode(block.block_hash),
            records: block
                .records
                .iter()
                .map(|r| RecordLine {
                    bc_address: r.bc_address,
                    physical_address: r.physical_address,
                    suite: r.public_key.kind(),
                    public_key: hex::encode(r.public_key.as_bytes()),
                    signature: hex::encode(&r.signature.bytes),
                    sequence_number: r.sequence_number,
                    timestamp: r.timestamp,
                })
                .collect(),
            balance_deltas: block.balance_deltas.clone(),
        };
        out.push_str(&serde_json::to_string(&line).expect("plain data serializes"));
        out.push('\n');
    }
    out
}

/// Parses an export. The result is not verified; pass it to
/// [`super::Ledger::from_chain`] for that.
pub fn import_chain(text: &str) -> Result<Vec<Block>, ImportError> {
    let mut chain = Vec::new();
    for (i, raw) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let line = i + 1;
        let parsed: BlockLine =
            serde_json::from_str(raw).map_err(|source| ImportError::Json { line, source })?;
        let hash = |s: &str, what| -> Result<[u8; 32], ImportError> {
            hex::decode(s)
                .ok()
                .and_then(|v| v.try_into().ok())
                .ok_or(ImportError::Field { line, what })
        };
        let mut records = Vec::with_capacity(parsed.records.len());
        for r in parsed.records {
            let pk = hex::decode(&r.public_key).map_err(|_| ImportError::Field {
                line,
                what: "public_key",
            })?;
            let sig = hex::decode(&r.signature).map_err(|_| ImportError::Field {
                line,
                what: "signature",
            })?;
            records.push(BindingRecord {
                bc_address: r.bc_address,
                physical_address: r.physical_address,
                public_key: PublicKey::from_raw(r.suite, pk),
                signature: Signature {
                    suite: r.suite,
                    bytes: sig,
                    signed_content_descriptor: BINDING_DESCRIPTOR
                        .iter()
                        .map(|s| (*s).to_owned())
                        .collect(),
                },
                sequence_number: r.sequence_number,
                timestamp: r.timestamp,
            });
        }
        chain.push(Block {
            height: parsed.height,
            previous_hash: hash(&parsed.previous_hash, "previous_hash")?,
            records,
            balance_deltas: parsed.balance_deltas,
            block_hash: hash(&parsed.block_hash, "block_hash")?,
        });
    }
    Ok(chain)
}
