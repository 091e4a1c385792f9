//! Fixtures shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use beran_core::bemutual::{
    AuthRequest, AuthResponse, Endpoint, HandshakeFailure, HandshakeState, Identity, Phase,
    SessionKeyConfirm,
};
use beran_core::crypto::{generate_keypair_with, BcAddress, Nonce, PublicKey, SuiteKind};
use beran_core::ledger::{BindingRecord, GenesisConfig, Ledger, PhysicalAddress};
use rand::{Rng, RngCore};
use rand_chacha::ChaCha20Rng;

pub fn random_ipv6(rng: &mut impl RngCore) -> PhysicalAddress {
    let mut ip: [u8; 16] = rng.gen();
    ip[0] = 0xfd;
    PhysicalAddress::Ipv6(ip)
}

pub fn random_endpoint(suite: SuiteKind, rng: &mut ChaCha20Rng) -> Endpoint {
    let kp = generate_keypair_with(suite.into(), rng).unwrap();
    Endpoint::new(Identity::new(kp, random_ipv6(rng)))
}

pub fn flip_phys(p: PhysicalAddress) -> PhysicalAddress {
    match p {
        PhysicalAddress::Ipv6(mut ip) => {
            ip[15] ^= 1;
            PhysicalAddress::Ipv6(ip)
        }
        PhysicalAddress::Mac48(mut mac) => {
            mac[5] ^= 1;
            PhysicalAddress::Mac48(mac)
        }
    }
}

pub fn flip_nonce(n: Nonce) -> Nonce {
    let mut b = n.0;
    b[0] ^= 0x80;
    Nonce(b)
}

pub fn flip_bc(a: BcAddress) -> BcAddress {
    let mut b = *a.as_bytes();
    b[10] ^= 4;
    BcAddress::from_bytes(b)
}

pub fn flip_pk(pk: &PublicKey) -> PublicKey {
    let mut b = pk.as_bytes().to_vec();
    let last = b.len() - 1;
    b[last] ^= 1;
    PublicKey::from_raw(pk.kind(), b)
}

type RequestTamper = (&'static str, fn(&mut AuthRequest), HandshakeFailure);
type ResponseTamper = (&'static str, fn(&mut AuthResponse), HandshakeFailure);
type ConfirmTamper = (&'static str, fn(&mut SessionKeyConfirm), HandshakeFailure);

/// Every field of message 1 with the failure the responder must report.
pub fn request_tampers() -> Vec<RequestTamper> {
    use HandshakeFailure::*;
    vec![
        (
            "trusted_peer_bc_address",
            |m| m.trusted_peer_bc_address = flip_bc(m.trusted_peer_bc_address),
            FieldMismatch,
        ),
        (
            "sender_address",
            |m| m.sender_address = flip_phys(m.sender_address),
            FieldMismatch,
        ),
        (
            "sender_public_key",
            |m| m.sender_public_key = flip_pk(&m.sender_public_key),
            AddressKeyMismatch,
        ),
        ("nonce1", |m| m.nonce1 = flip_nonce(m.nonce1), FieldMismatch),
        (
            "signed_sender_address",
            |m| m.signed_sender_address = flip_phys(m.signed_sender_address),
            SignatureInvalid,
        ),
        (
            "signed_nonce1",
            |m| m.signed_nonce1 = flip_nonce(m.signed_nonce1),
            SignatureInvalid,
        ),
        (
            "signature",
            |m| m.signature.bytes[5] ^= 0x10,
            SignatureInvalid,
        ),
    ]
}

pub fn response_tampers() -> Vec<ResponseTamper> {
    use HandshakeFailure::*;
    vec![
        (
            "trusted_peer_bc_address",
            |m| m.trusted_peer_bc_address = flip_bc(m.trusted_peer_bc_address),
            FieldMismatch,
        ),
        (
            "echoed_sender_address",
            |m| m.echoed_sender_address = flip_phys(m.echoed_sender_address),
            FieldMismatch,
        ),
        (
            "responder_address",
            |m| m.responder_address = flip_phys(m.responder_address),
            FieldMismatch,
        ),
        (
            "responder_public_key",
            |m| m.responder_public_key = flip_pk(&m.responder_public_key),
            AddressKeyMismatch,
        ),
        ("nonce2", |m| m.nonce2 = flip_nonce(m.nonce2), FieldMismatch),
        (
            "signed_sender_address",
            |m| m.signed_sender_address = flip_phys(m.signed_sender_address),
            SignatureInvalid,
        ),
        (
            "signed_responder_address",
            |m| m.signed_responder_address = flip_phys(m.signed_responder_address),
            SignatureInvalid,
        ),
        (
            "signed_nonce2",
            |m| m.signed_nonce2 = flip_nonce(m.signed_nonce2),
            SignatureInvalid,
        ),
        (
            "signature",
            |m| m.signature.bytes[5] ^= 0x10,
            SignatureInvalid,
        ),
    ]
}

pub fn confirm_tampers() -> Vec<ConfirmTamper> {
    use HandshakeFailure::*;
    vec![
        (
            "peer_bc_address",
            |m| m.peer_bc_address = flip_bc(m.peer_bc_address),
            DecryptFailed,
        ),
        (
            "verified_responder_address",
            |m| m.verified_responder_address = flip_phys(m.verified_responder_address),
            DecryptFailed,
        ),
        (
            "sender_address",
            |m| m.sender_address = flip_phys(m.sender_address),
            DecryptFailed,
        ),
        (
            "encrypted_key_material",
            |m| {
                let mid = m.encrypted_key_material.len() / 2;
                m.encrypted_key_material[mid] ^= 1;
            },
            DecryptFailed,
        ),
    ]
}

/// Result of one adversarial case: expected failure, what happened, and
/// whether any side still reached Established.
#[derive(Debug)]
pub struct CaseResult {
    pub name: String,
    pub expected: HandshakeFailure,
    pub got: Result<(), HandshakeFailure>,
    pub established: bool,
}

impl CaseResult {
    pub fn ok(&self) -> bool {
        self.got == Err(self.expected) && !self.established
    }
}

fn established(states: &[&HandshakeState]) -> bool {
    states.iter().any(|s| s.phase() == Phase::Established)
}

/// Runs every single-field tamper and both replay cases on a fresh pair of
/// endpoints drawn from `rng`.
pub fn adversarial_cases(suite: SuiteKind, rng: &mut ChaCha20Rng) -> Vec<CaseResult> {
    let mut out = Vec::new();
    for (name, tamper, expected) in request_tampers() {
        let (mut a, mut b) = (random_endpoint(suite, rng), random_endpoint(suite, rng));
        let (a_state, mut req) = a.initiate(b.identity().bc_address(), rng);
        tamper(&mut req);
        let got = b.respond(&req, a.identity().bc_address(), rng).map(|_| ());
        out.push(CaseResult {
            name: format!("msg1.{name}"),
            expected,
            got,
            established: established(&[&a_state]),
        });
    }
    for (name, tamper, expected) in response_tampers() {
        let (mut a, mut b) = (random_endpoint(suite, rng), random_endpoint(suite, rng));
        let (mut a_state, req) = a.initiate(b.identity().bc_address(), rng);
        let (b_state, mut resp) = b.respond(&req, a.identity().bc_address(), rng).unwrap();
        tamper(&mut resp);
        let got = a.confirm(&mut a_state, &resp, rng).map(|_| ());
        out.push(CaseResult {
            name: format!("msg2.{name}"),
            expected,
            got,
            established: established(&[&a_state, &b_state]),
        });
    }
    for (name, tamper, expected) in confirm_tampers() {
        let (mut a, mut b) = (random_endpoint(suite, rng), random_endpoint(suite, rng));
        let (mut a_state, req) = a.initiate(b.identity().bc_address(), rng);
        let (mut b_state, resp) = b.respond(&req, a.identity().bc_address(), rng).unwrap();
        let (mut confirm, _) = a.confirm(&mut a_state, &resp, rng).unwrap();
        tamper(&mut confirm);
        let got = b.finalize(&mut b_state, &confirm).map(|_| ());
        out.push(CaseResult {
            name: format!("msg3.{name}"),
            expected,
            got,
            established: established(&[&b_state]),
        });
    }

    // message 1 delivered twice
    let (mut a, mut b) = (random_endpoint(suite, rng), random_endpoint(suite, rng));
    let (_, req) = a.initiate(b.identity().bc_address(), rng);
    b.respond(&req, a.identity().bc_address(), rng).unwrap();
    let got = b.respond(&req, a.identity().bc_address(), rng).map(|_| ());
    out.push(CaseResult {
        name: "replay.msg1".into(),
        expected: HandshakeFailure::NonceReplay,
        got,
        established: false,
    });

    // an old message 2 answered into a new session
    let (mut a, mut b) = (random_endpoint(suite, rng), random_endpoint(suite, rng));
    let (mut s1, req) = a.initiate(b.identity().bc_address(), rng);
    let (_, resp) = b.respond(&req, a.identity().bc_address(), rng).unwrap();
    a.confirm(&mut s1, &resp, rng).unwrap();
    let (mut s2, _) = a.initiate(b.identity().bc_address(), rng);
    let got = a.confirm(&mut s2, &resp, rng).map(|_| ());
    out.push(CaseResult {
        name: "replay.msg2".into(),
        expected: HandshakeFailure::NonceReplay,
        got,
        established: established(&[&s2]),
    });
    out
}

/// A ledger with `blocks` blocks after genesis, each binding or rebinding
/// one of a few identities.
pub fn busy_ledger(suite: SuiteKind, blocks: usize, rng: &mut ChaCha20Rng) -> Ledger {
    let keys: Vec<_> = (0..4)
        .map(|_| generate_keypair_with(suite.into(), rng).unwrap())
        .collect();
    let mut ledger = Ledger::new(GenesisConfig::default()).unwrap();
    for i in 0..blocks {
        let key = &keys[i % keys.len()];
        let addr = beran_core::crypto::derive_bc_address(key.public_key().as_bytes()).unwrap();
        let seq = ledger.next_sequence(&addr);
        let rec = BindingRecord::signed(key, random_ipv6(rng), seq, i as u64).unwrap();
        ledger.submit_binding(rec).unwrap();
        ledger
            .submit_balance_delta(addr, rng.gen_range(1..50))
            .unwrap();
        ledger.commit_block();
    }
    ledger
}

/// Applies `steps` random submissions and commits to a fresh ledger, using
/// the given identities. Rejected submissions are simply skipped.
pub fn random_ledger(
    keys: &[beran_core::crypto::KeyPair],
    steps: usize,
    rng: &mut ChaCha20Rng,
) -> Ledger {
    let addrs: Vec<BcAddress> = keys
        .iter()
        .map(|k| beran_core::crypto::derive_bc_address(k.public_key().as_bytes()).unwrap())
        .collect();
    let mut ledger = Ledger::new(GenesisConfig {
        initial_balance: 10,
        allowlist: addrs[..addrs.len() / 2].to_vec(),
        bindings: Vec::new(),
    })
    .unwrap();
    for step in 0..steps {
        let who = rng.gen_range(0..keys.len());
        match rng.gen_range(0..3) {
            0 => {
                let seq = ledger
                    .next_sequence(&addrs[who])
                    .saturating_sub(rng.gen_range(0..2));
                let phys = PhysicalAddress::Mac48([2, 0, 0, 0, 0, rng.gen_range(0..3)]);
                let rec = BindingRecord::signed(&keys[who], phys, seq, step as u64).unwrap();
                let _ = ledger.submit_binding(rec);
            }
            1 => {
                let _ = ledger.submit_balance_delta(addrs[who], rng.gen_range(-20..20));
            }
            _ => {
                ledger.commit_block();
            }
        }
    }
    ledger.commit_block();
    ledger
}
