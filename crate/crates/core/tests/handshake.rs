mod common;

use beran_core::bemutual::{run_handshake, HandshakeFailure, Message, Phase};
use beran_core::crypto::{Composition, Op, SuiteKind};
use common::{adversarial_cases, random_endpoint, request_tampers, response_tampers};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn honest_handshakes_agree(seed in any::<u64>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut a = random_endpoint(SuiteKind::EllipticCurve, &mut rng);
        let mut b = random_endpoint(SuiteKind::EllipticCurve, &mut rng);
        let (ka, kb) = run_handshake(&mut a, &mut b, &mut rng).unwrap();
        prop_assert_eq!(ka.bits, kb.bits);
        prop_assert_eq!(ka.peer_bc_address, b.identity().bc_address());
        prop_assert_eq!(kb.peer_bc_address, a.identity().bc_address());
        let both = a.counters().plus(b.counters());
        prop_assert_eq!(both.composition(), Composition::from_counts(&[(Op::Sign, 2), (Op::Verify, 2), (Op::Hash, 2)]));
        prop_assert_eq!(both.key_transport, 2);
    }

    #[test]
    fn any_single_field_mutation_is_typed(seed in any::<u64>(), which in 0usize..16) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut a = random_endpoint(SuiteKind::EllipticCurve, &mut rng);
        let mut b = random_endpoint(SuiteKind::EllipticCurve, &mut rng);
        let (mut a_state, mut req) = a.initiate(b.identity().bc_address(), &mut rng);
        let requests = request_tampers();
        if which < requests.len() {
            let (_, tamper, expected) = requests[which];
            tamper(&mut req);
            let got = b.respond(&req, a.identity().bc_address(), &mut rng).map(|_| ());
            prop_assert_eq!(got, Err(expected));
        } else {
            let (_, mut resp) = b.respond(&req, a.identity().bc_address(), &mut rng).unwrap();
            let (_, tamper, expected) = response_tampers()[which - requests.len()];
            tamper(&mut resp);
            let got = a.confirm(&mut a_state, &resp, &mut rng).map(|_| ());
            prop_assert_eq!(got, Err(expected));
            prop_assert_eq!(a_state.phase(), Phase::Failed);
        }
    }
}

#[test]
fn finite_field_handshakes_agree() {
    let mut rng = ChaCha20Rng::seed_from_u64(42);
    for _ in 0..20 {
        let mut a = random_endpoint(SuiteKind::FiniteField, &mut rng);
        let mut b = random_endpoint(SuiteKind::FiniteField, &mut rng);
        let (ka, kb) = run_handshake(&mut a, &mut b, &mut rng).unwrap();
        assert_eq!(ka.bits, kb.bits);
    }
}

#[test]
fn adversarial_table_both_suites() {
    for suite in SuiteKind::ALL {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for case in adversarial_cases(suite, &mut rng) {
            assert!(
                case.ok(),
                "{suite:?} {}: expected {:?}, got {:?}",
                case.name,
                case.expected,
                case.got
            );
        }
    }
}

#[test]
fn every_wire_bit_flip_of_message_two_fails() {
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    let mut a = random_endpoint(SuiteKind::EllipticCurve, &mut rng);
    let mut b = random_endpoint(SuiteKind::EllipticCurve, &mut rng);
    let (state, req) = a.initiate(b.identity().bc_address(), &mut rng);
    let (_, resp) = b
        .respond(&req, a.identity().bc_address(), &mut rng)
        .unwrap();
    let wire = Message::Response(resp).encode_concrete();
    for bit in 0..wire.len() * 8 {
        let mut bytes = wire.clone();
        bytes[bit / 8] ^= 0x80 >> (bit % 8);
        let Ok(Message::Response(tampered)) = Message::decode_concrete(&bytes) else {
            continue;
        };
        let mut s = state.clone();
        let mut fresh = a.clone();
        let got = fresh.confirm(&mut s, &tampered, &mut rng);
        assert!(
            matches!(
                got,
                Err(HandshakeFailure::AddressKeyMismatch
                    | HandshakeFailure::SignatureInvalid
                    | HandshakeFailure::FieldMismatch)
            ),
            "bit {bit} accepted"
        );
    }
}
