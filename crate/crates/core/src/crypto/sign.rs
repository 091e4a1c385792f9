use std::fmt;

use p256::ecdsa::signature::{SignatureEncoding, Signer, Verifier};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use super::keys::{KeyPair, PublicKey, SecretKey, VerifierKey};
use super::suite::SuiteKind;
use super::CryptoError;
use crate::codec::{DecodeError, Reader, Writer};

pub const NONCE_LEN: usize = 32;

/// 256-bit random value.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Nonce(pub [u8; NONCE_LEN]);

impl Nonce {
    pub fn random<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut bytes = [0u8; NONCE_LEN];
        rng.fill_bytes(&mut bytes);
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; NONCE_LEN] {
        &self.0
    }
}

impl fmt::Debug for Nonce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Nonce({}..)", hex::encode(&self.0[..6]))
    }
}

/// One labelled element of signed content.
#[derive(Debug, Clone, Copy)]
pub struct Field<'a> {
    pub label: &'a str,
    pub value: &'a [u8],
}

pub fn field<'a>(label: &'a str, value: &'a [u8]) -> Field<'a> {
    Field { label, value }
}

/// Length-prefixed concatenation of field values in order.
pub fn canonical_content(content: &[Field<'_>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(content.iter().map(|f| f.value.len() + 4).sum());
    for f in content {
        out.extend_from_slice(&(f.value.len() as u32).to_be_bytes());
        out.extend_from_slice(f.value);
    }
    out
}

#[derive(Clone, PartialEq, Eq)]
pub struct Signature {
    pub suite: SuiteKind,
    pub bytes: Vec<u8>,
    /// Labels of the fields the signature covers, in signing order.
    pub signed_content_descriptor: Vec<String>,
}

impl Signature {
    pub fn covers(&self, content: &[Field<'_>]) -> bool {
        self.signed_content_descriptor.len() == content.len()
            && self
                .signed_content_descriptor
                .iter()
                .zip(content)
                .all(|(label, f)| label == f.label)
    }

    /// Suite tag and length-prefixed signature bytes; the descriptor is
    /// implied by the enclosing message type.
    pub fn encode(&self, w: &mut Writer) {
        w.u8(self.suite.wire_tag()).short_bytes(&self.bytes);
    }

    pub fn decode(r: &mut Reader<'_>, descriptor: &[&str]) -> Result<Self, DecodeError> {
        let suite = SuiteKind::from_wire_tag(r.u8()?).ok_or(DecodeError::Invalid("suite tag"))?;
        Ok(Self {
            suite,
            bytes: r.short_bytes()?.to_vec(),
            signed_content_descriptor: descriptor.iter().map(|s| (*s).to_owned()).collect(),
        })
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Signature({}, {} bytes, {:?})",
            self.suite,
            self.bytes.len(),
            self.signed_content_descriptor
        )
    }
}

pub fn sign(key: &KeyPair, content: &[Field<'_>]) -> Result<Signature, CryptoError> {
    if content.is_empty() {
        return Err(CryptoError::EmptyContent);
    }
    let message = canonical_content(content);
    let bytes = match key.secret() {
        SecretKey::Dsa(sk) => {
            let sig: dsa::Signature = sk
                .try_sign(&message)
                .map_err(|_| CryptoError::MalformedKey("dsa signing failed"))?;
            sig.to_vec()
        }
        SecretKey::Ecdsa(sk) => {
            let sig: p256::ecdsa::Signature = sk
                .try_sign(&message)
                .map_err(|_| CryptoError::MalformedKey("ecdsa signing failed"))?;
            sig.to_vec()
        }
    };
    Ok(Signature {
        suite: key.suite().kind,
        bytes,
        signed_content_descriptor: content.iter().map(|f| f.label.to_owned()).collect(),
    })
}

/// Malformed keys or signatures verify as false.
pub fn verify(public_key: &PublicKey, signature: &Signature, content: &[Field<'_>]) -> bool {
    if signature.suite != public_key.kind() || !signature.covers(content) {
        return false;
    }
    let Ok(verifier) = public_key.verifier() else {
        return false;
    };
    let message = canonical_content(content);
    match verifier {
        VerifierKey::Dsa(vk) => dsa::Signature::try_from(signature.bytes.as_slice())
            .map(|sig| vk.verify(&message, &sig).is_ok())
            .unwrap_or(false),
        VerifierKey::Ecdsa(vk) => p256::ecdsa::Signature::from_slice(&signature.bytes)
            .map(|sig| vk.verify(&message, &sig).is_ok())
            .unwrap_or(false),
    }
}
