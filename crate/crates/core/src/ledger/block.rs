use sha2::{Digest, Sha256};

use crate::codec::{DecodeError, Reader, Writer};
use crate::crypto::BcAddress;

use super::BindingRecord;

pub type Hash256 = [u8; 32];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub height: u64,
    pub previous_hash: Hash256,
    pub records: Vec<BindingRecord>,
    pub balance_deltas: Vec<(BcAddress, i64)>,
    pub block_hash: Hash256,
}

impl Block {
    pub fn seal(
        height: u64,
        previous_hash: Hash256,
        records: Vec<BindingRecord>,
        balance_deltas: Vec<(BcAddress, i64)>,
    ) -> Self {
        let mut block = Self {
            height,
            previous_hash,
            records,
            balance_deltas,
            block_hash: [0; 32],
        };
        block.block_hash = block.compute_hash();
        block
    }

    fn encode_body(&self, w: &mut Writer) {
        w.u64(self.height).raw(&self.previous_hash);
        w.u32(self.records.len() as u32);
        for rec in &self.records {
            rec.encode(w);
        }
        w.u32(self.balance_deltas.len() as u32);
        for (addr, delta) in &self.balance_deltas {
            w.raw(addr.as_bytes()).i64(*delta);
        }
    }

    /// SHA-256 over the canonical encoding of everything except the hash.
    pub fn compute_hash(&self) -> Hash256 {
        let mut w = Writer::new();
        self.encode_body(&mut w);
        Sha256::digest(w.finish()).into()
    }

    /// Canonical body followed by the stored block hash.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode_body(&mut w);
        w.raw(&self.block_hash);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let height = r.u64()?;
        let previous_hash = r.array()?;
        let n = r.u32()? as usize;
        let mut records = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            records.push(BindingRecord::decode(&mut r)?);
        }
        let n = r.u32()? as usize;
        let mut balance_deltas = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            balance_deltas.push((BcAddress::from_bytes(r.array()?), r.i64()?));
        }
        let block_hash = r.array()?;
        r.finish()?;
        Ok(Self {
            height,
            previous_hash,
            records,
            balance_deltas,
            block_hash,
        })
    }
}

/// Reason a chain failed verification, located at the first bad height.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("chain invalid at height {height}")]
pub struct InvalidChain {
    pub height: u64,
}

/// Checks heights, hash links and block hashes from genesis onward.
pub fn verify_blocks(chain: &[Block]) -> Result<(), InvalidChain> {
    if chain.is_empty() {
        return Err(InvalidChain { height: 0 });
    }
    let mut previous = [0u8; 32];
    for (i, block) in chain.iter().enumerate() {
        let height = i as u64;
        if block.height != height
            || block.previous_hash != previous
            || block.compute_hash() != block.block_hash
        {
            return Err(InvalidChain { height });
        }
        previous = block.block_hash;
    }
    Ok(())
}
