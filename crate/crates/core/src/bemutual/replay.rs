use std::collections::{HashMap, HashSet, VecDeque};

use crate::crypto::{BcAddress, Nonce};

pub const REPLAY_WINDOW: usize = 1024;

/// Remembers the most recent nonces accepted from each peer.
#[derive(Debug, Clone)]
pub struct ReplayGuard {
    window: usize,
    peers: HashMap<BcAddress, Window>,
}

#[derive(Debug, Clone, Default)]
struct Window {
    order: VecDeque<Nonce>,
    members: HashSet<Nonce>,
}

impl Default for ReplayGuard {
    fn default() -> Self {
        Self::with_window(REPLAY_WINDOW)
    }
}

impl ReplayGuard {
    pub fn with_window(window: usize) -> Self {
        assert!(window > 0, "replay window must be positive");
        Self {
            window,
            peers: HashMap::new(),
        }
    }

    pub fn contains(&self, peer: &BcAddress, nonce: &Nonce) -> bool {
        self.peers
            .get(peer)
            .is_some_and(|w| w.members.contains(nonce))
    }

    /// Records `nonce` for `peer`. Returns false if it was already present.
    pub fn insert(&mut self, peer: BcAddress, nonce: Nonce) -> bool {
        let w = self.peers.entry(peer).or_default();
        if !w.members.insert(nonce) {
            return false;
        }
        w.order.push_back(nonce);
        if w.order.len() > self.window {
            let evicted = w.order.pop_front().expect("non-empty");
            w.members.remove(&evicted);
        }
        true
    }
}
