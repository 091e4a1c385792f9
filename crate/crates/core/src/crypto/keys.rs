use std::fmt;
use std::sync::OnceLock;

use num_bigint_dig::BigUint;
use p256::elliptic_curve::sec1::ToEncodedPoint;
use p256::NonZeroScalar;
use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::dsa_params;
use super::suite::{CryptoSuite, SuiteKind};
use super::CryptoError;
use crate::codec::{DecodeError, Reader, Writer};

pub(crate) fn dsa_components() -> &'static dsa::Components {
    static GROUP: OnceLock<dsa::Components> = OnceLock::new();
    GROUP.get_or_init(|| {
        let p = BigUint::parse_bytes(dsa_params::P_HEX.concat().as_bytes(), 16)
            .expect("embedded p parses");
        let q = BigUint::parse_bytes(dsa_params::Q_HEX.as_bytes(), 16).expect("embedded q parses");
        let g = BigUint::parse_bytes(dsa_params::G_HEX.concat().as_bytes(), 16)
            .expect("embedded g parses");
        dsa::Components::from_components(p, q, g).expect("embedded DSA group is valid")
    })
}

/// Left-pads a big-endian integer to `len` bytes.
pub(crate) fn to_fixed_be(value: &BigUint, len: usize) -> Vec<u8> {
    let raw = value.to_bytes_be();
    let mut out = vec![0u8; len.saturating_sub(raw.len())];
    out.extend_from_slice(&raw);
    out
}

/// Canonical encoding of a public key: the 384-byte DSA `y` for the finite
/// field suite, the 32-byte x coordinate of an even-y P-256 point otherwise.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PublicKey {
    kind: SuiteKind,
    bytes: Vec<u8>,
}

pub(crate) enum VerifierKey {
    Dsa(dsa::VerifyingKey),
    Ecdsa(p256::ecdsa::VerifyingKey),
}

impl PublicKey {
    pub fn from_bytes(kind: SuiteKind, bytes: &[u8]) -> Result<Self, CryptoError> {
        let key = Self {
            kind,
            bytes: bytes.to_vec(),
        };
        key.verifier()?;
        Ok(key)
    }

    /// Wraps bytes without validating them; malformed keys simply fail
    /// every verification.
    pub fn from_raw(kind: SuiteKind, bytes: Vec<u8>) -> Self {
        Self { kind, bytes }
    }

    pub fn kind(&self) -> SuiteKind {
        self.kind
    }

    pub fn encode(&self, w: &mut Writer) {
        w.u8(self.kind.wire_tag()).short_bytes(&self.bytes);
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let kind = SuiteKind::from_wire_tag(r.u8()?).ok_or(DecodeError::Invalid("suite tag"))?;
        Ok(Self::from_raw(kind, r.short_bytes()?.to_vec()))
    }

    pub fn suite(&self) -> CryptoSuite {
        CryptoSuite::new(self.kind)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn bit_len(&self) -> usize {
        self.bytes.len() * 8
    }

    pub(crate) fn verifier(&self) -> Result<VerifierKey, CryptoError> {
        let expected = self.suite().public_key_len();
        if self.bytes.len() != expected {
            return Err(CryptoError::MalformedKey("public key length"));
        }
        match self.kind {
            SuiteKind::FiniteField => {
                let group = dsa_components();
                let y = BigUint::from_bytes_be(&self.bytes);
                if y <= BigUint::from(1u8) || &y >= group.p() {
                    return Err(CryptoError::MalformedKey("y out of range"));
                }
                dsa::VerifyingKey::from_components(group.clone(), y)
                    .map(VerifierKey::Dsa)
                    .map_err(|_| CryptoError::MalformedKey("dsa public key"))
            }
            SuiteKind::EllipticCurve => Ok(VerifierKey::Ecdsa(self.ec_point()?.into())),
        }
    }

    pub(crate) fn ec_point(&self) -> Result<p256::PublicKey, CryptoError> {
        let mut sec1 = [0u8; 33];
        sec1[0] = 0x02;
        sec1[1..].copy_from_slice(&self.bytes);
        p256::PublicKey::from_sec1_bytes(&sec1)
            .map_err(|_| CryptoError::MalformedKey("x not on curve"))
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hex = hex::encode(&self.bytes);
        write!(
            f,
            "PublicKey({}:{}..)",
            self.kind,
            &hex[..16.min(hex.len())]
        )
    }
}

#[derive(Clone)]
pub(crate) enum SecretKey {
    Dsa(dsa::SigningKey),
    Ecdsa(p256::ecdsa::SigningKey),
}

/// A signing key pair for one suite.
#[derive(Clone)]
pub struct KeyPair {
    suite: CryptoSuite,
    public_key: PublicKey,
    secret: SecretKey,
}

impl KeyPair {
    pub fn suite(&self) -> CryptoSuite {
        self.suite
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.public_key
    }

    /// The 256-bit private scalar, big-endian.
    pub fn private_key_bytes(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        match &self.secret {
            SecretKey::Dsa(sk) => out.copy_from_slice(&to_fixed_be(sk.x(), 32)),
            SecretKey::Ecdsa(sk) => out.copy_from_slice(&sk.to_bytes()),
        }
        out
    }

    pub(crate) fn secret(&self) -> &SecretKey {
        &self.secret
    }

    /// Rebuilds a key pair from its private scalar.
    pub fn from_private_key(suite: CryptoSuite, bytes: &[u8]) -> Result<Self, CryptoError> {
        suite.validate()?;
        if bytes.len() != suite.private_key_len() {
            return Err(CryptoError::MalformedKey("private key length"));
        }
        match suite.kind {
            SuiteKind::FiniteField => {
                let x = BigUint::from_bytes_be(bytes);
                let group = dsa_components();
                if x == BigUint::from(0u8) || &x >= group.q() {
                    return Err(CryptoError::MalformedKey("x out of range"));
                }
                Ok(Self::dsa_from_x(x))
            }
            SuiteKind::EllipticCurve => {
                let sk = p256::ecdsa::SigningKey::from_slice(bytes)
                    .map_err(|_| CryptoError::MalformedKey("scalar out of range"))?;
                let point = sk.verifying_key().to_encoded_point(true);
                if point.as_bytes()[0] != 0x02 {
                    return Err(CryptoError::MalformedKey("point has odd y"));
                }
                Ok(Self::ecdsa_from_signing_key(sk))
            }
        }
    }

    fn dsa_from_x(x: BigUint) -> Self {
        let group = dsa_components();
        let y = group.g().modpow(&x, group.p());
        let public_key = PublicKey {
            kind: SuiteKind::FiniteField,
            bytes: to_fixed_be(&y, CryptoSuite::FINITE_FIELD.public_key_len()),
        };
        let vk = dsa::VerifyingKey::from_components(group.clone(), y).expect("y in range");
        let sk = dsa::SigningKey::from_components(vk, x).expect("x in range");
        Self {
            suite: CryptoSuite::FINITE_FIELD,
            public_key,
            secret: SecretKey::Dsa(sk),
        }
    }

    fn ecdsa_from_signing_key(sk: p256::ecdsa::SigningKey) -> Self {
        let point = sk.verifying_key().to_encoded_point(true);
        let public_key = PublicKey {
            kind: SuiteKind::EllipticCurve,
            bytes: point.x().expect("compressed point has x").to_vec(),
        };
        Self {
            suite: CryptoSuite::ELLIPTIC_CURVE,
            public_key,
            secret: SecretKey::Ecdsa(sk),
        }
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair")
            .field("suite", &self.suite.signature_scheme_label)
            .field("public_key", &self.public_key)
            .finish_non_exhaustive()
    }
}

/// Generates a key pair. A seed switches to a deterministic ChaCha20 stream
/// (test and simulation mode); without one the OS entropy source is used.
pub fn generate_keypair(
    suite: CryptoSuite,
    seed: Option<[u8; 32]>,
) -> Result<KeyPair, CryptoError> {
    match seed {
        Some(seed) => generate_keypair_with(suite, &mut ChaCha20Rng::from_seed(seed)),
        None => generate_keypair_with(suite, &mut rand::rngs::OsRng),
    }
}

pub fn generate_keypair_with<R: RngCore + CryptoRng>(
    suite: CryptoSuite,
    rng: &mut R,
) -> Result<KeyPair, CryptoError> {
    suite.validate()?;
    match suite.kind {
        SuiteKind::FiniteField => Ok(KeyPair::dsa_from_x(random_below_q(rng))),
        SuiteKind::EllipticCurve => {
            let mut scalar = NonZeroScalar::random(&mut *rng);
            let point = (p256::ProjectivePoint::GENERATOR * *scalar).to_encoded_point(true);
            if point.as_bytes()[0] != 0x02 {
                scalar = -scalar;
            }
            Ok(KeyPair::ecdsa_from_signing_key(scalar.into()))
        }
    }
}

/// Uniform value in [1, q).
pub(crate) fn random_below_q<R: RngCore + CryptoRng>(rng: &mut R) -> BigUint {
    let q = dsa_components().q();
    loop {
        let mut buf = [0u8; 32];
        rng.fill_bytes(&mut buf);
        let x = BigUint::from_bytes_be(&buf);
        if x != BigUint::from(0u8) && &x < q {
            return x;
        }
    }
}
