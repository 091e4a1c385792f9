//! Three-message certificateless mutual authentication.
//!
//! Each party is an [`Endpoint`] holding its identity, a replay guard shared
//! by all of its handshakes, and operation counters. A single handshake is a
//! [`HandshakeState`] driven through `initiate`/`confirm` on the initiator
//! and `respond`/`finalize` on the responder.

mod messages;
mod replay;

use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::crypto::{
    self, derive_bc_address, kem, BcAddress, Composition, CryptoSuite, KeyPair, Nonce, Op,
    PublicKey,
};
use crate::ledger::PhysicalAddress;

pub use messages::{
    AuthRequest, AuthResponse, Message, SessionKeyConfirm, CODEC_CONCRETE, CODEC_PAPER,
};
pub use replay::{ReplayGuard, REPLAY_WINDOW};

use messages::{request_content, response_content};

const SESSION_KDF_LABEL: &[u8] = b"beran-session-v1";
const KEY_MATERIAL_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum HandshakeFailure {
    #[error("claimed public key does not derive the pre-trusted BC address")]
    AddressKeyMismatch,
    #[error("signature does not verify")]
    SignatureInvalid,
    #[error("plaintext and signed fields disagree")]
    FieldMismatch,
    #[error("nonce already seen from this peer")]
    NonceReplay,
    #[error("key material could not be decrypted")]
    DecryptFailed,
    #[error("operation not valid in the current phase")]
    WrongPhase,
}

impl HandshakeFailure {
    pub fn label(self) -> &'static str {
        match self {
            HandshakeFailure::AddressKeyMismatch => "address-key-mismatch",
            HandshakeFailure::SignatureInvalid => "signature-invalid",
            HandshakeFailure::FieldMismatch => "field-mismatch",
            HandshakeFailure::NonceReplay => "nonce-replay",
            HandshakeFailure::DecryptFailed => "decrypt-failed",
            HandshakeFailure::WrongPhase => "wrong-phase",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Initiator,
    Responder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Idle,
    AwaitingResponse,
    AwaitingConfirm,
    /// Initiator checked message 2 but has not sent message 3 yet.
    ResponseVerified,
    Established,
    Failed,
}

/// A key pair bound to the physical address it currently uses.
#[derive(Debug, Clone)]
pub struct Identity {
    keypair: KeyPair,
    physical_address: PhysicalAddress,
    bc_address: BcAddress,
}

impl Identity {
    pub fn new(keypair: KeyPair, physical_address: PhysicalAddress) -> Self {
        let bc_address = derive_bc_address(keypair.public_key().as_bytes())
            .expect("public keys are never empty");
        Self {
            keypair,
            physical_address,
            bc_address,
        }
    }

    pub fn keypair(&self) -> &KeyPair {
        &self.keypair
    }

    pub fn public_key(&self) -> &PublicKey {
        self.keypair.public_key()
    }

    pub fn physical_address(&self) -> PhysicalAddress {
        self.physical_address
    }

    pub fn bc_address(&self) -> BcAddress {
        self.bc_address
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct SessionKey {
    pub bits: [u8; 32],
    pub peer_bc_address: BcAddress,
    pub established_at: u64,
}

impl SessionKey {
    /// Short public digest of the key, safe to print in traces.
    pub fn fingerprint(&self) -> String {
        hex::encode(&Sha256::digest(self.bits)[..4])
    }
}

impl std::fmt::Debug for SessionKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "SessionKey({}, peer {}, t={})",
            self.fingerprint(),
            self.peer_bc_address,
            self.established_at
        )
    }
}

/// Per-peer handshake progress. Established and Failed are terminal.
#[derive(Debug, Clone)]
pub struct HandshakeState {
    role: Role,
    phase: Phase,
    own_bc_address: BcAddress,
    own_address: PhysicalAddress,
    trusted_peer: BcAddress,
    peer_address: Option<PhysicalAddress>,
    nonce1: Option<Nonce>,
    nonce2: Option<Nonce>,
    session_key: Option<SessionKey>,
}

impl HandshakeState {
    fn new(role: Role, identity: &Identity, trusted_peer: BcAddress) -> Self {
        Self {
            role,
            phase: Phase::Idle,
            own_bc_address: identity.bc_address,
            own_address: identity.physical_address,
            trusted_peer,
            peer_address: None,
            nonce1: None,
            nonce2: None,
            session_key: None,
        }
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn own_bc_address(&self) -> BcAddress {
        self.own_bc_address
    }

    pub fn own_address(&self) -> PhysicalAddress {
        self.own_address
    }

    pub fn trusted_peer(&self) -> BcAddress {
        self.trusted_peer
    }

    pub fn peer_address(&self) -> Option<PhysicalAddress> {
        self.peer_address
    }

    pub fn nonce1(&self) -> Option<Nonce> {
        self.nonce1
    }

    pub fn nonce2(&self) -> Option<Nonce> {
        self.nonce2
    }

    pub fn session_key(&self) -> Option<&SessionKey> {
        self.session_key.as_ref()
    }

    fn fail(&mut self, failure: HandshakeFailure) -> HandshakeFailure {
        self.phase = Phase::Failed;
        failure
    }

    fn establish(&mut self, key_material: &[u8], now: u64) -> SessionKey {
        let (n1, n2) = (
            self.nonce1.expect("nonce1 set"),
            self.nonce2.expect("nonce2 set"),
        );
        let mut h = Sha256::new();
        h.update(SESSION_KDF_LABEL);
        h.update(key_material);
        h.update(n1.as_bytes());
        h.update(n2.as_bytes());
        let key = SessionKey {
            bits: h.finalize().into(),
            peer_bc_address: self.trusted_peer,
            established_at: now,
        };
        self.phase = Phase::Established;
        self.session_key = Some(key.clone());
        key
    }
}

/// Counts of the cryptographic operations an endpoint has performed.
/// Key transport (message 3 encryption and decryption) is tracked apart
/// from the signature and hash counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub sign: u32,
    pub verify: u32,
    pub address_hash: u32,
    pub key_transport: u32,
}

impl OpCounters {
    pub fn composition(&self) -> Composition {
        Composition::from_counts(&[
            (Op::Sign, self.sign),
            (Op::Verify, self.verify),
            (Op::Hash, self.address_hash),
        ])
    }

    pub fn plus(self, other: Self) -> Self {
        Self {
            sign: self.sign + other.sign,
            verify: self.verify + other.verify,
            address_hash: self.address_hash + other.address_hash,
            key_transport: self.key_transport + other.key_transport,
        }
    }
}

/// Composition of the full handshake across both parties, excluding key
/// transport. The same for both suites.
pub fn handshake_cost_model(_suite: CryptoSuite) -> Composition {
    Composition::from_counts(&[(Op::Sign, 2), (Op::Verify, 2), (Op::Hash, 2)])
}

#[derive(Debug, Clone)]
pub struct Endpoint {
    identity: Identity,
    replay: ReplayGuard,
    counters: OpCounters,
    now: u64,
}

impl Endpoint {
    pub fn new(identity: Identity) -> Self {
        Self {
            identity,
            replay: ReplayGuard::default(),
            counters: OpCounters::default(),
            now: 0,
        }
    }

    pub fn identity(&self) -> &Identity {
        &self.identity
    }

    pub fn counters(&self) -> OpCounters {
        self.counters
    }

    pub fn reset_counters(&mut self) {
        self.counters = OpCounters::default();
    }

    /// Sets the logical clock stamped on established session keys.
    pub fn set_now(&mut self, tick: u64) {
        self.now = tick;
    }

    fn derive_counted(&mut self, pk: &PublicKey) -> Option<BcAddress> {
        self.counters.address_hash += 1;
        derive_bc_address(pk.as_bytes()).ok()
    }

    fn sign_counted(&mut self, content: &[crypto::Field<'_>]) -> crypto::Signature {
        self.counters.sign += 1;
        crypto::sign(&self.identity.keypair, content).expect("identity keys are well formed")
    }

    fn verify_counted(
        &mut self,
        pk: &PublicKey,
        sig: &crypto::Signature,
        content: &[crypto::Field<'_>],
    ) -> bool {
        self.counters.verify += 1;
        crypto::verify(pk, sig, content)
    }

    /// Message 1 towards a pre-trusted peer.
    pub fn initiate<R: RngCore + CryptoRng>(
        &mut self,
        trusted_peer: BcAddress,
        rng: &mut R,
    ) -> (HandshakeState, AuthRequest) {
        let mut state = HandshakeState::new(Role::Initiator, &self.identity, trusted_peer);
        let nonce1 = Nonce::random(rng);
        let addr = self.identity.physical_address;
        let addr_bytes = addr.canonical_bytes();
        let signature = self.sign_counted(&request_content(&addr_bytes, &nonce1));
        state.nonce1 = Some(nonce1);
        state.phase = Phase::AwaitingResponse;
        let request = AuthRequest {
            trusted_peer_bc_address: trusted_peer,
            sender_address: addr,
            sender_public_key: self.identity.public_key().clone(),
            nonce1,
            signed_sender_address: addr,
            signed_nonce1: nonce1,
            signature,
        };
        (state, request)
    }

    /// Checks message 1 from `expected_peer` and answers with message 2.
    pub fn respond<R: RngCore + CryptoRng>(
        &mut self,
        request: &AuthRequest,
        expected_peer: BcAddress,
        rng: &mut R,
    ) -> Result<(HandshakeState, AuthResponse), HandshakeFailure> {
        if self.derive_counted(&request.sender_public_key) != Some(expected_peer) {
            return Err(HandshakeFailure::AddressKeyMismatch);
        }
        let signed_addr = request.signed_sender_address.canonical_bytes();
        if !self.verify_counted(
            &request.sender_public_key,
            &request.signature,
            &request_content(&signed_addr, &request.signed_nonce1),
        ) {
            return Err(HandshakeFailure::SignatureInvalid);
        }
        if request.trusted_peer_bc_address != self.identity.bc_address
            || request.nonce1 != request.signed_nonce1
            || request.sender_address != request.signed_sender_address
        {
            return Err(HandshakeFailure::FieldMismatch);
        }
        if !self.replay.insert(expected_peer, request.nonce1) {
            return Err(HandshakeFailure::NonceReplay);
        }

        let mut state = HandshakeState::new(Role::Responder, &self.identity, expected_peer);
        let nonce2 = Nonce::random(rng);
        let own = self.identity.physical_address;
        let (a, b) = (
            request.sender_address.canonical_bytes(),
            own.canonical_bytes(),
        );
        let signature = self.sign_counted(&response_content(&a, &b, &nonce2));
        state.peer_address = Some(request.sender_address);
        state.nonce1 = Some(request.nonce1);
        state.nonce2 = Some(nonce2);
        state.phase = Phase::AwaitingConfirm;
        let response = AuthResponse {
            trusted_peer_bc_address: expected_peer,
            echoed_sender_address: request.sender_address,
            responder_address: own,
            responder_public_key: self.identity.public_key().clone(),
            nonce2,
            signed_sender_address: request.sender_address,
            signed_responder_address: own,
            signed_nonce2: nonce2,
            signature,
        };
        Ok((state, response))
    }

    /// Checks message 2, picks key material and produces message 3.
    pub fn confirm<R: RngCore + CryptoRng>(
        &mut self,
        state: &mut HandshakeState,
        response: &AuthResponse,
        rng: &mut R,
    ) -> Result<(SessionKeyConfirm, SessionKey), HandshakeFailure> {
        self.accept_response(state, response)?;
        Ok(self.send_confirm(state, &response.responder_public_key, rng))
    }

    /// Checks message 2 without sending message 3.
    pub fn accept_response(
        &mut self,
        state: &mut HandshakeState,
        response: &AuthResponse,
    ) -> Result<(), HandshakeFailure> {
        if state.role != Role::Initiator || state.phase != Phase::AwaitingResponse {
            return Err(HandshakeFailure::WrongPhase);
        }
        if self.derive_counted(&response.responder_public_key) != Some(state.trusted_peer) {
            return Err(state.fail(HandshakeFailure::AddressKeyMismatch));
        }
        let a = response.signed_sender_address.canonical_bytes();
        let b = response.signed_responder_address.canonical_bytes();
        if !self.verify_counted(
            &response.responder_public_key,
            &response.signature,
            &response_content(&a, &b, &response.signed_nonce2),
        ) {
            return Err(state.fail(HandshakeFailure::SignatureInvalid));
        }
        if response.trusted_peer_bc_address != self.identity.bc_address
            || response.echoed_sender_address != self.identity.physical_address
            || response.signed_sender_address != response.echoed_sender_address
            || response.signed_responder_address != response.responder_address
            || response.signed_nonce2 != response.nonce2
        {
            return Err(state.fail(HandshakeFailure::FieldMismatch));
        }
        if !self.replay.insert(state.trusted_peer, response.nonce2) {
            return Err(state.fail(HandshakeFailure::NonceReplay));
        }
        state.peer_address = Some(response.responder_address);
        state.nonce2 = Some(response.nonce2);
        state.phase = Phase::ResponseVerified;
        Ok(())
    }

    /// Key transport after [`Endpoint::accept_response`]: encrypts fresh key
    /// material to the responder's verified key and establishes the session.
    ///
    /// # Panics
    /// If `state` is not in [`Phase::ResponseVerified`].
    pub fn send_confirm<R: RngCore + CryptoRng>(
        &mut self,
        state: &mut HandshakeState,
        responder_key: &PublicKey,
        rng: &mut R,
    ) -> (SessionKeyConfirm, SessionKey) {
        assert_eq!(
            state.phase,
            Phase::ResponseVerified,
            "send_confirm before accept_response"
        );
        let responder_address = state.peer_address.expect("set by accept_response");
        let mut key_material = [0u8; KEY_MATERIAL_LEN];
        rng.fill_bytes(&mut key_material);
        let mut confirm = SessionKeyConfirm {
            peer_bc_address: state.trusted_peer,
            verified_responder_address: responder_address,
            sender_address: self.identity.physical_address,
            encrypted_key_material: Vec::new(),
        };
        self.counters.key_transport += 1;
        confirm.encrypted_key_material =
            kem::seal(responder_key, &confirm.aad(), &key_material, rng)
                .expect("a key that verified a signature accepts encryption");
        let key = state.establish(&key_material, self.now);
        (confirm, key)
    }

    /// Decrypts message 3 and derives the shared session key.
    pub fn finalize(
        &mut self,
        state: &mut HandshakeState,
        confirm: &SessionKeyConfirm,
    ) -> Result<SessionKey, HandshakeFailure> {
        if state.role != Role::Responder || state.phase != Phase::AwaitingConfirm {
            return Err(HandshakeFailure::WrongPhase);
        }
        self.counters.key_transport += 1;
        let key_material = match kem::open(
            &self.identity.keypair,
            &confirm.aad(),
            &confirm.encrypted_key_material,
        ) {
            Ok(km) if km.len() == KEY_MATERIAL_LEN => km,
            _ => return Err(state.fail(HandshakeFailure::DecryptFailed)),
        };
        if confirm.peer_bc_address != self.identity.bc_address
            || confirm.verified_responder_address != self.identity.physical_address
            || Some(confirm.sender_address) != state.peer_address
        {
            return Err(state.fail(HandshakeFailure::FieldMismatch));
        }
        Ok(state.establish(&key_material, self.now))
    }
}

/// Runs all three messages between two endpoints in memory. Alice must
/// pre-trust Bob's BC address and vice versa.
pub fn run_handshake<R: RngCore + CryptoRng>(
    alice: &mut Endpoint,
    bob: &mut Endpoint,
    rng: &mut R,
) -> Result<(SessionKey, SessionKey), HandshakeFailure> {
    let (mut a_state, request) = alice.initiate(bob.identity.bc_address, rng);
    let (mut b_state, response) = bob.respond(&request, alice.identity.bc_address, rng)?;
    let (confirm, a_key) = alice.confirm(&mut a_state, &response, rng)?;
    let b_key = bob.finalize(&mut b_state, &confirm)?;
    Ok((a_key, b_key))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{generate_keypair, SuiteKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn endpoint(kind: SuiteKind, n: u8) -> Endpoint {
        let kp = generate_keypair(kind.into(), Some([n; 32])).unwrap();
        let phys: PhysicalAddress = format!("fd00::{n}").parse().unwrap();
        Endpoint::new(Identity::new(kp, phys))
    }

    fn pair() -> (Endpoint, Endpoint, ChaCha20Rng) {
        (
            endpoint(SuiteKind::EllipticCurve, 1),
            endpoint(SuiteKind::EllipticCurve, 2),
            ChaCha20Rng::seed_from_u64(7),
        )
    }

    #[test]
    fn honest_run_agrees_for_both_suites() {
        for kind in SuiteKind::ALL {
            let mut alice = endpoint(kind, 1);
            let mut bob = endpoint(kind, 2);
            let mut rng = ChaCha20Rng::seed_from_u64(1);
            let (a, b) = run_handshake(&mut alice, &mut bob, &mut rng).unwrap();
            assert_eq!(a.bits, b.bits);
            assert_eq!(a.peer_bc_address, bob.identity().bc_address());
            assert_eq!(b.peer_bc_address, alice.identity().bc_address());
        }
    }

    #[test]
    fn counters_match_cost_model() {
        let (mut alice, mut bob, mut rng) = pair();
        run_handshake(&mut alice, &mut bob, &mut rng).unwrap();
        let total = alice.counters().plus(bob.counters());
        assert_eq!(
            total.composition(),
            handshake_cost_model(CryptoSuite::ELLIPTIC_CURVE)
        );
        assert_eq!(total.key_transport, 2);
    }

    #[test]
    fn fresh_nonces_per_initiation() {
        let (mut alice, bob, mut rng) = pair();
        let (_, r1) = alice.initiate(bob.identity().bc_address(), &mut rng);
        let (_, r2) = alice.initiate(bob.identity().bc_address(), &mut rng);
        assert_ne!(r1.nonce1, r2.nonce1);
    }

    #[test]
    fn request_paper_size_ec_ipv6() {
        let (mut alice, bob, mut rng) = pair();
        let (_, req) = alice.initiate(bob.identity().bc_address(), &mut rng);
        assert_eq!(req.paper_bits(), 1296);
    }

    #[test]
    fn swapped_key_is_address_mismatch() {
        let (mut alice, mut bob, mut rng) = pair();
        let (_, mut req) = alice.initiate(bob.identity().bc_address(), &mut rng);
        req.sender_public_key = endpoint(SuiteKind::EllipticCurve, 9)
            .identity()
            .public_key()
            .clone();
        let err = bob
            .respond(&req, alice.identity().bc_address(), &mut rng)
            .unwrap_err();
        assert_eq!(err, HandshakeFailure::AddressKeyMismatch);
    }

    #[test]
    fn replayed_request_is_rejected() {
        let (mut alice, mut bob, mut rng) = pair();
        let (_, req) = alice.initiate(bob.identity().bc_address(), &mut rng);
        bob.respond(&req, alice.identity().bc_address(), &mut rng)
            .unwrap();
        let err = bob
            .respond(&req, alice.identity().bc_address(), &mut rng)
            .unwrap_err();
        assert_eq!(err, HandshakeFailure::NonceReplay);
    }

    #[test]
    fn replayed_response_is_rejected_in_a_new_session() {
        let (mut alice, mut bob, mut rng) = pair();
        let (mut s1, req) = alice.initiate(bob.identity().bc_address(), &mut rng);
        let (_, resp) = bob
            .respond(&req, alice.identity().bc_address(), &mut rng)
            .unwrap();
        alice.confirm(&mut s1, &resp, &mut rng).unwrap();
        let (mut s2, _) = alice.initiate(bob.identity().bc_address(), &mut rng);
        assert_eq!(
            alice.confirm(&mut s2, &resp, &mut rng).unwrap_err(),
            HandshakeFailure::NonceReplay
        );
        assert_eq!(s2.phase(), Phase::Failed);
    }

    #[test]
    fn mismatched_signed_responder_address() {
        let (mut alice, mut bob, mut rng) = pair();
        let (mut s, req) = alice.initiate(bob.identity().bc_address(), &mut rng);
        let (_, mut resp) = bob
            .respond(&req, alice.identity().bc_address(), &mut rng)
            .unwrap();
        resp.responder_address = "fd00::99".parse().unwrap();
        assert_eq!(
            alice.confirm(&mut s, &resp, &mut rng).unwrap_err(),
            HandshakeFailure::FieldMismatch
        );
    }

    #[test]
    fn phases_are_terminal() {
        let (mut alice, mut bob, mut rng) = pair();
        let (mut s, req) = alice.initiate(bob.identity().bc_address(), &mut rng);
        let (_, resp) = bob
            .respond(&req, alice.identity().bc_address(), &mut rng)
            .unwrap();
        alice.confirm(&mut s, &resp, &mut rng).unwrap();
        assert_eq!(
            alice.confirm(&mut s, &resp, &mut rng).unwrap_err(),
            HandshakeFailure::WrongPhase
        );
        assert_eq!(s.phase(), Phase::Established);
        assert!(s.session_key().is_some());
    }

    #[test]
    fn corrupted_or_misdelivered_confirm_fails_to_decrypt() {
        let (mut alice, mut bob, mut rng) = pair();
        let mut carol = endpoint(SuiteKind::EllipticCurve, 3);
        let (mut s, req) = alice.initiate(bob.identity().bc_address(), &mut rng);
        let (mut bs, resp) = bob
            .respond(&req, alice.identity().bc_address(), &mut rng)
            .unwrap();
        let (confirm, _) = alice.confirm(&mut s, &resp, &mut rng).unwrap();

        let (_, req_c) = alice.initiate(carol.identity().bc_address(), &mut rng);
        let (mut cs, _) = carol
            .respond(&req_c, alice.identity().bc_address(), &mut rng)
            .unwrap();
        assert_eq!(
            carol.finalize(&mut cs, &confirm).unwrap_err(),
            HandshakeFailure::DecryptFailed
        );

        let mut bad = confirm.clone();
        let last = bad.encrypted_key_material.len() - 1;
        bad.encrypted_key_material[last] ^= 1;
        assert_eq!(
            bob.finalize(&mut bs, &bad).unwrap_err(),
            HandshakeFailure::DecryptFailed
        );
        assert_eq!(
            bob.finalize(&mut bs, &confirm).unwrap_err(),
            HandshakeFailure::WrongPhase
        );
    }

    #[test]
    fn concrete_codec_round_trips() {
        let (mut alice, mut bob, mut rng) = pair();
        let (mut s, req) = alice.initiate(bob.identity().bc_address(), &mut rng);
        let (_, resp) = bob
            .respond(&req, alice.identity().bc_address(), &mut rng)
            .unwrap();
        let (confirm, _) = alice.confirm(&mut s, &resp, &mut rng).unwrap();
        for msg in [
            Message::Request(req),
            Message::Response(resp),
            Message::Confirm(confirm),
        ] {
            let bytes = msg.encode_concrete();
            assert_eq!(bytes[0], CODEC_CONCRETE);
            assert_eq!(Message::decode_concrete(&bytes).unwrap(), msg);
        }
    }
}
