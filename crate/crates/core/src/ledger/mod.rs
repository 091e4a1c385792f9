//! Append-only hash-chained registry of address bindings and balances.
//!
//! The ledger keeps the raw chain plus indices that are always the fold of
//! that chain from genesis. Submissions go to a pending set and become
//! visible to lookups only once a block is committed.

mod block;
mod export;
mod phys;
mod record;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::crypto::BcAddress;

pub use block::{verify_blocks, Block, Hash256, InvalidChain};
pub use export::{export_chain, import_chain, ImportError};
pub use phys::{format_mac, parse_mac, Mac48, PhysicalAddress, PhysicalKind};
pub use record::BindingRecord;
pub(crate) use record::BINDING_DESCRIPTOR;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum BindingRejection {
    #[error("public key does not hash to the claimed BC address")]
    AddressKeyMismatch,
    #[error("binding signature does not verify")]
    BadSignature,
    #[error("sequence number is not newer than the stored binding")]
    StaleSequence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum BalanceRejection {
    #[error("balance would become negative")]
    Overdraft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SyncRejection {
    #[error("peer chain invalid at height {0}")]
    InvalidChain(u64),
    #[error("peer chain is not longer than the local chain")]
    NotLonger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    Allowed,
    Denied,
}

/// Genesis contents: pre-provisioned bindings and an initial balance for
/// every allowlisted address.
#[derive(Debug, Clone, Default)]
pub struct GenesisConfig {
    pub initial_balance: u64,
    pub allowlist: Vec<BcAddress>,
    pub bindings: Vec<BindingRecord>,
}

/// Derived lookup state. Always equal to folding `apply` over the chain.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LedgerIndex {
    pub bindings: BTreeMap<BcAddress, BindingRecord>,
    pub reverse: BTreeMap<PhysicalAddress, BcAddress>,
    pub balances: BTreeMap<BcAddress, u64>,
    /// Highest committed sequence number per address, kept even after the
    /// address loses its physical address to another owner.
    pub sequences: BTreeMap<BcAddress, u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
enum ApplyError {
    #[error("record rejected: {0}")]
    Record(BindingRejection),
    #[error("overdraft")]
    Overdraft,
}

impl LedgerIndex {
    pub fn rebuild(chain: &[Block]) -> Result<Self, InvalidChain> {
        let mut index = Self::default();
        for block in chain {
            index.apply(block).map_err(|_| InvalidChain {
                height: block.height,
            })?;
        }
        Ok(index)
    }

    fn check_record(&self, record: &BindingRecord) -> Result<(), BindingRejection> {
        record.check()?;
        match self.sequences.get(&record.bc_address) {
            Some(&last) if record.sequence_number <= last => Err(BindingRejection::StaleSequence),
            _ => Ok(()),
        }
    }

    fn apply(&mut self, block: &Block) -> Result<(), ApplyError> {
        for record in &block.records {
            self.check_record(record).map_err(ApplyError::Record)?;
            let bc = record.bc_address;
            if let Some(old) = self.bindings.get(&bc) {
                if self.reverse.get(&old.physical_address) == Some(&bc) {
                    self.reverse.remove(&old.physical_address);
                }
            }
            if let Some(prev_owner) = self.reverse.get(&record.physical_address).copied() {
                if prev_owner != bc {
                    self.bindings.remove(&prev_owner);
                }
            }
            self.reverse.insert(record.physical_address, bc);
            self.bindings.insert(bc, record.clone());
            self.sequences.insert(bc, record.sequence_number);
        }
        for (addr, delta) in &block.balance_deltas {
            let current = self.balances.get(addr).copied().unwrap_or(0) as i128;
            let next = current + *delta as i128;
            if next < 0 || next > u64::MAX as i128 {
                return Err(ApplyError::Overdraft);
            }
            self.balances.insert(*addr, next as u64);
        }
        Ok(())
    }
}

/// Produces the next block from the pending set.
pub trait BlockCommitter {
    fn commit(&mut self, ledger: &mut Ledger) -> Block;
}

/// The only committer used in simulations: the DU's BC node seals every
/// pending submission immediately.
#[derive(Debug, Default, Clone, Copy)]
pub struct SingleCommitter;

impl BlockCommitter for SingleCommitter {
    fn commit(&mut self, ledger: &mut Ledger) -> Block {
        ledger.commit_block()
    }
}

#[derive(Debug, Clone)]
pub struct Ledger {
    chain: Vec<Block>,
    pending: Vec<BindingRecord>,
    pending_deltas: Vec<(BcAddress, i64)>,
    index: LedgerIndex,
}

impl Ledger {
    pub fn new(genesis: GenesisConfig) -> Result<Self, InvalidChain> {
        let deltas = genesis
            .allowlist
            .iter()
            .map(|a| (*a, genesis.initial_balance as i64))
            .collect();
        let block = Block::seal(0, [0; 32], genesis.bindings, deltas);
        Self::from_chain(vec![block])
    }

    /// Adopts an existing chain after full verification.
    pub fn from_chain(chain: Vec<Block>) -> Result<Self, InvalidChain> {
        verify_blocks(&chain)?;
        let index = LedgerIndex::rebuild(&chain)?;
        Ok(Self {
            chain,
            pending: Vec::new(),
            pending_deltas: Vec::new(),
            index,
        })
    }

    pub fn chain(&self) -> &[Block] {
        &self.chain
    }

    pub fn index(&self) -> &LedgerIndex {
        &self.index
    }

    pub fn height(&self) -> u64 {
        self.chain.len() as u64 - 1
    }

    pub fn tip_hash(&self) -> Hash256 {
        self.chain.last().expect("chain has genesis").block_hash
    }

    pub fn pending(&self) -> &[BindingRecord] {
        &self.pending
    }

    pub fn submit_binding(&mut self, record: BindingRecord) -> Result<(), BindingRejection> {
        self.index.check_record(&record)?;
        let pending_max = self
            .pending
            .iter()
            .filter(|r| r.bc_address == record.bc_address)
            .map(|r| r.sequence_number)
            .max();
        if pending_max.is_some_and(|seq| record.sequence_number <= seq) {
            return Err(BindingRejection::StaleSequence);
        }
        self.pending.push(record);
        Ok(())
    }

    pub fn submit_balance_delta(
        &mut self,
        addr: BcAddress,
        delta: i64,
    ) -> Result<(), BalanceRejection> {
        let current = self.index.balances.get(&addr).copied().unwrap_or(0) as i128;
        let pending: i128 = self
            .pending_deltas
            .iter()
            .filter(|(a, _)| *a == addr)
            .map(|(_, d)| *d as i128)
            .sum();
        let next = current + pending + delta as i128;
        if next < 0 || next > u64::MAX as i128 {
            return Err(BalanceRejection::Overdraft);
        }
        self.pending_deltas.push((addr, delta));
        Ok(())
    }

    /// Seals the pending set into a new block. Empty blocks are allowed.
    pub fn commit_block(&mut self) -> Block {
        let block = Block::seal(
            self.chain.len() as u64,
            self.tip_hash(),
            std::mem::take(&mut self.pending),
            std::mem::take(&mut self.pending_deltas),
        );
        self.index
            .apply(&block)
            .expect("pending submissions were validated against the index");
        self.chain.push(block.clone());
        block
    }

    pub fn lookup_by_bc(&self, addr: &BcAddress) -> Option<PhysicalAddress> {
        self.index.bindings.get(addr).map(|r| r.physical_address)
    }

    pub fn lookup_by_phys(&self, phys: &PhysicalAddress) -> Option<BcAddress> {
        self.index.reverse.get(phys).copied()
    }

    /// Latest committed binding record for an address.
    pub fn binding(&self, addr: &BcAddress) -> Option<&BindingRecord> {
        self.index.bindings.get(addr)
    }

    /// Next sequence number the owner of `addr` should use.
    pub fn next_sequence(&self, addr: &BcAddress) -> u64 {
        let committed = self.index.sequences.get(addr).copied().unwrap_or(0);
        let pending = self
            .pending
            .iter()
            .filter(|r| r.bc_address == *addr)
            .map(|r| r.sequence_number)
            .max()
            .unwrap_or(0);
        committed.max(pending) + 1
    }

    pub fn is_registered(&self, addr: &BcAddress) -> bool {
        self.index.sequences.contains_key(addr)
    }

    pub fn balance(&self, addr: &BcAddress) -> u64 {
        self.index.balances.get(addr).copied().unwrap_or(0)
    }

    pub fn verify_chain(&self) -> Result<(), InvalidChain> {
        verify_blocks(&self.chain)
    }

    /// Allowed iff the address has ever been bound and holds at least
    /// `minimum_balance` tokens.
    pub fn check_access(&self, addr: &BcAddress, minimum_balance: u64) -> Access {
        if self.is_registered(addr) && self.balance(addr) >= minimum_balance {
            Access::Allowed
        } else {
            Access::Denied
        }
    }

    /// Longest-valid-chain adoption. The peer chain must share our genesis,
    /// verify end to end and be strictly longer.
    pub fn sync_from(&mut self, peer_chain: &[Block]) -> Result<(), SyncRejection> {
        verify_blocks(peer_chain).map_err(|e| SyncRejection::InvalidChain(e.height))?;
        if peer_chain[0].block_hash != self.chain[0].block_hash {
            return Err(SyncRejection::InvalidChain(0));
        }
        let index =
            LedgerIndex::rebuild(peer_chain).map_err(|e| SyncRejection::InvalidChain(e.height))?;
        if peer_chain.len() <= self.chain.len() {
            return Err(SyncRejection::NotLonger);
        }
        self.chain = peer_chain.to_vec();
        self.index = index;
        let pending = std::mem::take(&mut self.pending);
        for record in pending {
            // dropped if the adopted chain already supersedes it
            let _ = self.submit_binding(record);
        }
        let deltas = std::mem::take(&mut self.pending_deltas);
        for (addr, delta) in deltas {
            let _ = self.submit_balance_delta(addr, delta);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{generate_keypair, CryptoSuite, KeyPair};

    fn key(n: u8) -> KeyPair {
        generate_keypair(CryptoSuite::ELLIPTIC_CURVE, Some([n; 32])).unwrap()
    }

    fn mac(n: u8) -> PhysicalAddress {
        PhysicalAddress::Mac48([2, 0, 0, 0, 0, n])
    }

    fn bc(k: &KeyPair) -> BcAddress {
        crate::crypto::derive_bc_address(k.public_key().as_bytes()).unwrap()
    }

    fn empty() -> Ledger {
        Ledger::new(GenesisConfig::default()).unwrap()
    }

    #[test]
    fn genesis_shape() {
        let l = empty();
        assert_eq!(l.height(), 0);
        assert_eq!(l.chain()[0].previous_hash, [0; 32]);
        l.verify_chain().unwrap();
    }

    #[test]
    fn fresh_binding_is_accepted_and_visible_after_commit() {
        let mut l = empty();
        let k = key(1);
        l.submit_binding(BindingRecord::signed(&k, mac(1), 1, 0).unwrap())
            .unwrap();
        assert_eq!(l.lookup_by_bc(&bc(&k)), None, "not visible before commit");
        l.commit_block();
        assert_eq!(l.lookup_by_bc(&bc(&k)), Some(mac(1)));
        assert_eq!(l.lookup_by_phys(&mac(1)), Some(bc(&k)));
    }

    #[test]
    fn mismatched_key_is_rejected() {
        let mut l = empty();
        let mut rec = BindingRecord::signed(&key(1), mac(1), 1, 0).unwrap();
        rec.public_key = key(2).public_key().clone();
        assert_eq!(
            l.submit_binding(rec),
            Err(BindingRejection::AddressKeyMismatch)
        );
    }

    #[test]
    fn replay_of_committed_record_is_stale() {
        let mut l = empty();
        let rec = BindingRecord::signed(&key(1), mac(1), 1, 0).unwrap();
        l.submit_binding(rec.clone()).unwrap();
        l.commit_block();
        assert_eq!(l.submit_binding(rec), Err(BindingRejection::StaleSequence));
    }

    #[test]
    fn duplicate_pending_sequence_is_stale() {
        let mut l = empty();
        let rec = BindingRecord::signed(&key(1), mac(1), 1, 0).unwrap();
        l.submit_binding(rec.clone()).unwrap();
        assert_eq!(l.submit_binding(rec), Err(BindingRejection::StaleSequence));
    }

    #[test]
    fn empty_commit_advances_height() {
        let mut l = empty();
        let b = l.commit_block();
        assert_eq!(b.height, 1);
        assert!(b.records.is_empty());
    }

    #[test]
    fn two_bindings_in_one_block() {
        let mut l = empty();
        let (a, b) = (key(1), key(2));
        l.submit_binding(BindingRecord::signed(&a, mac(1), 1, 0).unwrap())
            .unwrap();
        l.submit_binding(BindingRecord::signed(&b, mac(2), 1, 0).unwrap())
            .unwrap();
        let block = l.commit_block();
        assert_eq!(block.records.len(), 2);
        assert_eq!(l.lookup_by_bc(&bc(&a)), Some(mac(1)));
        assert_eq!(l.lookup_by_bc(&bc(&b)), Some(mac(2)));
    }

    #[test]
    fn ten_commits_verify() {
        let mut l = empty();
        for _ in 0..10 {
            l.commit_block();
        }
        l.verify_chain().unwrap();
        assert_eq!(l.height(), 10);
    }

    #[test]
    fn later_binding_wins() {
        let mut l = empty();
        let k = key(1);
        l.submit_binding(BindingRecord::signed(&k, mac(1), 1, 0).unwrap())
            .unwrap();
        l.commit_block();
        l.submit_binding(BindingRecord::signed(&k, mac(2), 2, 1).unwrap())
            .unwrap();
        l.commit_block();
        assert_eq!(l.lookup_by_bc(&bc(&k)), Some(mac(2)));
        assert_eq!(l.lookup_by_phys(&mac(1)), None);
    }

    #[test]
    fn rebound_mac_has_new_owner() {
        let mut l = empty();
        let (a, b) = (key(1), key(2));
        l.submit_binding(BindingRecord::signed(&a, mac(1), 1, 0).unwrap())
            .unwrap();
        l.commit_block();
        l.submit_binding(BindingRecord::signed(&b, mac(1), 1, 1).unwrap())
            .unwrap();
        l.commit_block();
        assert_eq!(l.lookup_by_phys(&mac(1)), Some(bc(&b)));
        assert_eq!(
            l.lookup_by_bc(&bc(&a)),
            None,
            "old owner no longer resolves"
        );
        // the evicted owner's sequence history survives
        let replay = BindingRecord::signed(&a, mac(1), 1, 2).unwrap();
        assert_eq!(
            l.submit_binding(replay),
            Err(BindingRejection::StaleSequence)
        );
    }

    #[test]
    fn unknown_lookups_are_none() {
        let l = empty();
        assert_eq!(l.lookup_by_bc(&bc(&key(9))), None);
        assert_eq!(l.lookup_by_phys(&mac(9)), None);
    }

    #[test]
    fn record_corruption_in_block_3_is_located() {
        let mut l = empty();
        for i in 1..=5u8 {
            l.submit_binding(BindingRecord::signed(&key(i), mac(i), 1, 0).unwrap())
                .unwrap();
            l.commit_block();
        }
        let mut chain = l.chain().to_vec();
        chain[3].records[0].timestamp ^= 1;
        assert_eq!(verify_blocks(&chain), Err(InvalidChain { height: 3 }));
    }

    #[test]
    fn swapped_blocks_are_detected_at_first_inconsistency() {
        let mut l = empty();
        for _ in 0..6 {
            l.commit_block();
        }
        let mut chain = l.chain().to_vec();
        chain.swap(2, 4);
        assert_eq!(verify_blocks(&chain), Err(InvalidChain { height: 2 }));
    }

    #[test]
    fn access_checks() {
        let k = key(1);
        let addr = bc(&k);
        let mut l = Ledger::new(GenesisConfig {
            initial_balance: 10,
            allowlist: vec![addr],
            bindings: vec![BindingRecord::signed(&k, mac(1), 1, 0).unwrap()],
        })
        .unwrap();
        assert_eq!(l.check_access(&addr, 5), Access::Allowed);
        assert_eq!(l.check_access(&addr, 10), Access::Allowed);
        assert_eq!(l.check_access(&addr, 11), Access::Denied);
        l.submit_balance_delta(addr, -10).unwrap();
        l.commit_block();
        assert_eq!(l.check_access(&addr, 1), Access::Denied);
        assert_eq!(l.check_access(&addr, 0), Access::Allowed);
        assert_eq!(l.check_access(&bc(&key(2)), 0), Access::Denied);
        assert_eq!(
            l.submit_balance_delta(addr, -1),
            Err(BalanceRejection::Overdraft)
        );
    }

    #[test]
    fn sync_adopts_longer_valid_chain() {
        let mut local = empty();
        let mut peer = local.clone();
        peer.submit_binding(BindingRecord::signed(&key(1), mac(1), 1, 0).unwrap())
            .unwrap();
        peer.commit_block();
        local.sync_from(peer.chain()).unwrap();
        assert_eq!(local.chain(), peer.chain());
        assert_eq!(local.index(), peer.index());
    }

    #[test]
    fn sync_rejects_broken_or_short_chains() {
        let mut local = empty();
        let mut peer = local.clone();
        peer.commit_block();
        peer.commit_block();
        let mut broken = peer.chain().to_vec();
        broken[1].previous_hash[0] ^= 1;
        assert_eq!(
            local.sync_from(&broken),
            Err(SyncRejection::InvalidChain(1))
        );
        local.commit_block();
        local.commit_block();
        local.commit_block();
        assert_eq!(local.sync_from(peer.chain()), Err(SyncRejection::NotLonger));
        let foreign = Ledger::new(GenesisConfig {
            initial_balance: 1,
            allowlist: vec![bc(&key(3))],
            bindings: vec![],
        })
        .unwrap();
        let mut long_foreign = foreign.clone();
        for _ in 0..5 {
            long_foreign.commit_block();
        }
        assert_eq!(
            local.sync_from(long_foreign.chain()),
            Err(SyncRejection::InvalidChain(0))
        );
    }

    #[test]
    fn sync_rejects_rehashed_chain_with_forged_record() {
        let mut local = empty();
        let mut peer = local.clone();
        peer.submit_binding(BindingRecord::signed(&key(1), mac(1), 1, 0).unwrap())
            .unwrap();
        peer.commit_block();
        let mut forged = peer.chain().to_vec();
        forged[1].records[0].physical_address = mac(7);
        forged[1] = Block::seal(1, forged[0].block_hash, forged[1].records.clone(), vec![]);
        assert_eq!(
            local.sync_from(&forged),
            Err(SyncRejection::InvalidChain(1))
        );
    }
}
