//! Key transport to a suite public key: ephemeral (EC)DH against the
//! recipient key, HKDF-SHA256, then AES-256-GCM with caller-supplied
//! associated data.

use aes_gcm::aead::{Aead, KeyInit, Payload};
use aes_gcm::{Aes256Gcm, Nonce as GcmNonce};
use hkdf::Hkdf;
use num_bigint_dig::BigUint;
use p256::elliptic_curve::sec1::ToEncodedPoint;
use rand::{CryptoRng, RngCore};
use sha2::Sha256;

use super::keys::{dsa_components, random_below_q, to_fixed_be, KeyPair, PublicKey, SecretKey};
use super::suite::{CryptoSuite, SuiteKind};
use super::CryptoError;

const KDF_INFO: &[u8] = b"beran-key-transport-v1";
const EC_EPHEMERAL_LEN: usize = 33;

fn ephemeral_len(kind: SuiteKind) -> usize {
    match kind {
        SuiteKind::FiniteField => CryptoSuite::FINITE_FIELD.public_key_len(),
        SuiteKind::EllipticCurve => EC_EPHEMERAL_LEN,
    }
}

fn aead_for(shared: &[u8], ephemeral: &[u8], recipient: &PublicKey) -> (Aes256Gcm, [u8; 12]) {
    let hk = Hkdf::<Sha256>::new(None, shared);
    let mut info =
        Vec::with_capacity(KDF_INFO.len() + ephemeral.len() + recipient.as_bytes().len());
    info.extend_from_slice(KDF_INFO);
    info.extend_from_slice(ephemeral);
    info.extend_from_slice(recipient.as_bytes());
    let mut okm = [0u8; 44];
    hk.expand(&info, &mut okm)
        .expect("44 bytes is a valid HKDF length");
    let cipher = Aes256Gcm::new_from_slice(&okm[..32]).expect("32-byte key");
    let mut nonce = [0u8; 12];
    nonce.copy_from_slice(&okm[32..]);
    (cipher, nonce)
}

/// Encrypts `plaintext` so only the holder of `recipient`'s private key can
/// read it. Output is `ephemeral public value || AEAD ciphertext`.
pub fn seal<R: RngCore + CryptoRng>(
    recipient: &PublicKey,
    aad: &[u8],
    plaintext: &[u8],
    rng: &mut R,
) -> Result<Vec<u8>, CryptoError> {
    let (ephemeral, shared) = match recipient.kind() {
        SuiteKind::FiniteField => {
            let group = dsa_components();
            let y = BigUint::from_bytes_be(recipient.as_bytes());
            if y <= BigUint::from(1u8) || &y >= group.p() {
                return Err(CryptoError::MalformedKey("y out of range"));
            }
            let r = random_below_q(rng);
            let len = ephemeral_len(SuiteKind::FiniteField);
            let eph = to_fixed_be(&group.g().modpow(&r, group.p()), len);
            let shared = to_fixed_be(&y.modpow(&r, group.p()), len);
            (eph, shared)
        }
        SuiteKind::EllipticCurve => {
            let point = recipient.ec_point()?;
            let secret = p256::ecdh::EphemeralSecret::random(rng);
            let eph = secret
                .public_key()
                .to_encoded_point(true)
                .as_bytes()
                .to_vec();
            let shared = secret.diffie_hellman(&point).raw_secret_bytes().to_vec();
            (eph, shared)
        }
    };
    let (cipher, nonce) = aead_for(&shared, &ephemeral, recipient);
    let body = cipher
        .encrypt(
            &GcmNonce::from(nonce),
            Payload {
                msg: plaintext,
                aad,
            },
        )
        .map_err(|_| CryptoError::DecryptFailed)?;
    let mut out = ephemeral;
    out.extend_from_slice(&body);
    Ok(out)
}

pub fn open(recipient: &KeyPair, aad: &[u8], ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError> {
    let kind = recipient.suite().kind;
    let eph_len = ephemeral_len(kind);
    if ciphertext.len() < eph_len + 16 {
        return Err(CryptoError::DecryptFailed);
    }
    let (ephemeral, body) = ciphertext.split_at(eph_len);
    let shared = match recipient.secret() {
        SecretKey::Dsa(sk) => {
            let group = dsa_components();
            let e = BigUint::from_bytes_be(ephemeral);
            if e <= BigUint::from(1u8) || &e >= group.p() {
                return Err(CryptoError::DecryptFailed);
            }
            to_fixed_be(&e.modpow(sk.x(), group.p()), eph_len)
        }
        SecretKey::Ecdsa(sk) => {
            let eph = p256::PublicKey::from_sec1_bytes(ephemeral)
                .map_err(|_| CryptoError::DecryptFailed)?;
            p256::ecdh::diffie_hellman(sk.as_nonzero_scalar(), eph.as_affine())
                .raw_secret_bytes()
                .to_vec()
        }
    };
    let (cipher, nonce) = aead_for(&shared, ephemeral, recipient.public_key());
    cipher
        .decrypt(&GcmNonce::from(nonce), Payload { msg: body, aad })
        .map_err(|_| CryptoError::DecryptFailed)
}
