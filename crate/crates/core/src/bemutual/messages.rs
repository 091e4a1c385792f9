//! The three handshake messages and their two codecs.
//!
//! Concrete mode is the real wire form: codec tag, message type, then
//! length-delimited fields including the actual signature bytes. Paper mode
//! is an accounting form: codec tag followed by the raw field values, with
//! each signature replaced by the plaintext it covers. Paper mode is
//! encode-only since it drops the signature.

use crate::codec::{DecodeError, Reader, Writer};
use crate::crypto::{field, BcAddress, Field, Nonce, PublicKey, Signature};
use crate::ledger::PhysicalAddress;

pub const CODEC_CONCRETE: u8 = 0x01;
pub const CODEC_PAPER: u8 = 0x02;

const TYPE_REQUEST: u8 = 1;
const TYPE_RESPONSE: u8 = 2;
const TYPE_CONFIRM: u8 = 3;

pub(crate) const REQUEST_DESCRIPTOR: [&str; 2] = ["sender_address", "nonce1"];
pub(crate) const RESPONSE_DESCRIPTOR: [&str; 3] = ["sender_address", "responder_address", "nonce2"];

/// Message 1: Alice to Bob.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthRequest {
    /// BC ADD_B, pre-trusted by Alice.
    pub trusted_peer_bc_address: BcAddress,
    pub sender_address: PhysicalAddress,
    pub sender_public_key: PublicKey,
    pub nonce1: Nonce,
    pub signed_sender_address: PhysicalAddress,
    pub signed_nonce1: Nonce,
    pub signature: Signature,
}

/// Message 2: Bob to Alice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthResponse {
    /// BC ADD_A, pre-trusted by Bob.
    pub trusted_peer_bc_address: BcAddress,
    pub echoed_sender_address: PhysicalAddress,
    pub responder_address: PhysicalAddress,
    pub responder_public_key: PublicKey,
    pub nonce2: Nonce,
    pub signed_sender_address: PhysicalAddress,
    pub signed_responder_address: PhysicalAddress,
    pub signed_nonce2: Nonce,
    pub signature: Signature,
}

/// Message 3: Alice to Bob, key material encrypted to PK_B.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionKeyConfirm {
    /// BC ADD of the recipient (Bob).
    pub peer_bc_address: BcAddress,
    pub verified_responder_address: PhysicalAddress,
    pub sender_address: PhysicalAddress,
    pub encrypted_key_material: Vec<u8>,
}

pub(crate) fn request_content<'a>(addr: &'a [u8], nonce: &'a Nonce) -> [Field<'a>; 2] {
    [
        field(REQUEST_DESCRIPTOR[0], addr),
        field(REQUEST_DESCRIPTOR[1], nonce.as_bytes()),
    ]
}

pub(crate) fn response_content<'a>(a: &'a [u8], b: &'a [u8], nonce: &'a Nonce) -> [Field<'a>; 3] {
    [
        field(RESPONSE_DESCRIPTOR[0], a),
        field(RESPONSE_DESCRIPTOR[1], b),
        field(RESPONSE_DESCRIPTOR[2], nonce.as_bytes()),
    ]
}

fn header(codec: u8, ty: u8) -> Writer {
    let mut w = Writer::new();
    w.u8(codec);
    if codec == CODEC_CONCRETE {
        w.u8(ty);
    }
    w
}

fn open_concrete<'a>(bytes: &'a [u8], ty: u8) -> Result<Reader<'a>, DecodeError> {
    let mut r = Reader::new(bytes);
    if r.u8()? != CODEC_CONCRETE {
        return Err(DecodeError::Invalid("codec tag"));
    }
    if r.u8()? != ty {
        return Err(DecodeError::Invalid("message type"));
    }
    Ok(r)
}

fn nonce(r: &mut Reader<'_>) -> Result<Nonce, DecodeError> {
    Ok(Nonce(r.array()?))
}

fn paper_bits(encoded: &[u8]) -> usize {
    8 * (encoded.len() - 1)
}

impl AuthRequest {
    pub fn encode_concrete(&self) -> Vec<u8> {
        let mut w = header(CODEC_CONCRETE, TYPE_REQUEST);
        w.raw(self.trusted_peer_bc_address.as_bytes());
        self.sender_address.encode(&mut w);
        self.sender_public_key.encode(&mut w);
        w.raw(self.nonce1.as_bytes());
        self.signed_sender_address.encode(&mut w);
        w.raw(self.signed_nonce1.as_bytes());
        self.signature.encode(&mut w);
        w.finish()
    }

    pub fn decode_concrete(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = open_concrete(bytes, TYPE_REQUEST)?;
        let msg = Self {
            trusted_peer_bc_address: BcAddress::from_bytes(r.array()?),
            sender_address: PhysicalAddress::decode(&mut r)?,
            sender_public_key: PublicKey::decode(&mut r)?,
            nonce1: nonce(&mut r)?,
            signed_sender_address: PhysicalAddress::decode(&mut r)?,
            signed_nonce1: nonce(&mut r)?,
            signature: Signature::decode(&mut r, &REQUEST_DESCRIPTOR)?,
        };
        r.finish()?;
        Ok(msg)
    }

    pub fn encode_paper(&self) -> Vec<u8> {
        let mut w = header(CODEC_PAPER, TYPE_REQUEST);
        w.raw(self.trusted_peer_bc_address.as_bytes())
            .raw(self.sender_address.as_bytes())
            .raw(self.sender_public_key.as_bytes())
            .raw(self.nonce1.as_bytes())
            .raw(self.signed_sender_address.as_bytes())
            .raw(self.signed_nonce1.as_bytes());
        w.finish()
    }

    pub fn paper_bits(&self) -> usize {
        paper_bits(&self.encode_paper())
    }
}

impl AuthResponse {
    pub fn encode_concrete(&self) -> Vec<u8> {
        let mut w = header(CODEC_CONCRETE, TYPE_RESPONSE);
        w.raw(self.trusted_peer_bc_address.as_bytes());
        self.echoed_sender_address.encode(&mut w);
        self.responder_address.encode(&mut w);
        self.responder_public_key.encode(&mut w);
        w.raw(self.nonce2.as_bytes());
        self.signed_sender_address.encode(&mut w);
        self.signed_responder_address.encode(&mut w);
        w.raw(self.signed_nonce2.as_bytes());
        self.signature.encode(&mut w);
        w.finish()
    }

    pub fn decode_concrete(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = open_concrete(bytes, TYPE_RESPONSE)?;
        let msg = Self {
            trusted_peer_bc_address: BcAddress::from_bytes(r.array()?),
            echoed_sender_address: PhysicalAddress::decode(&mut r)?,
            responder_address: PhysicalAddress::decode(&mut r)?,
            responder_public_key: PublicKey::decode(&mut r)?,
            nonce2: nonce(&mut r)?,
            signed_sender_address: PhysicalAddress::decode(&mut r)?,
            signed_responder_address: PhysicalAddress::decode(&mut r)?,
            signed_nonce2: nonce(&mut r)?,
            signature: Signature::decode(&mut r, &RESPONSE_DESCRIPTOR)?,
        };
        r.finish()?;
        Ok(msg)
    }

    pub fn encode_paper(&self) -> Vec<u8> {
        let mut w = header(CODEC_PAPER, TYPE_RESPONSE);
        w.raw(self.trusted_peer_bc_address.as_bytes())
            .raw(self.echoed_sender_address.as_bytes())
            .raw(self.responder_address.as_bytes())
            .raw(self.responder_public_key.as_bytes())
            .raw(self.nonce2.as_bytes())
            .raw(self.signed_sender_address.as_bytes())
            .raw(self.signed_responder_address.as_bytes())
            .raw(self.signed_nonce2.as_bytes());
        w.finish()
    }

    pub fn paper_bits(&self) -> usize {
        paper_bits(&self.encode_paper())
    }
}

impl SessionKeyConfirm {
    fn encode_header(&self, w: &mut Writer) {
        w.raw(self.peer_bc_address.as_bytes());
        self.verified_responder_address.encode(w);
        self.sender_address.encode(w);
    }

    /// Associated data binding the plaintext fields to the ciphertext.
    pub(crate) fn aad(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode_header(&mut w);
        w.finish()
    }

    pub fn encode_concrete(&self) -> Vec<u8> {
        let mut w = header(CODEC_CONCRETE, TYPE_CONFIRM);
        self.encode_header(&mut w);
        w.long_bytes(&self.encrypted_key_material);
        w.finish()
    }

    pub fn decode_concrete(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = open_concrete(bytes, TYPE_CONFIRM)?;
        let msg = Self {
            peer_bc_address: BcAddress::from_bytes(r.array()?),
            verified_responder_address: PhysicalAddress::decode(&mut r)?,
            sender_address: PhysicalAddress::decode(&mut r)?,
            encrypted_key_material: r.long_bytes()?.to_vec(),
        };
        r.finish()?;
        Ok(msg)
    }

    pub fn encode_paper(&self) -> Vec<u8> {
        let mut w = header(CODEC_PAPER, TYPE_CONFIRM);
        w.raw(self.peer_bc_address.as_bytes())
            .raw(self.verified_responder_address.as_bytes())
            .raw(self.sender_address.as_bytes())
            .raw(&self.encrypted_key_material);
        w.finish()
    }

    pub fn paper_bits(&self) -> usize {
        paper_bits(&self.encode_paper())
    }
}

/// Any handshake message, for transports that carry them opaquely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Request(AuthRequest),
    Response(AuthResponse),
    Confirm(SessionKeyConfirm),
}

impl Message {
    pub fn encode_concrete(&self) -> Vec<u8> {
        match self {
            Message::Request(m) => m.encode_concrete(),
            Message::Response(m) => m.encode_concrete(),
            Message::Confirm(m) => m.encode_concrete(),
        }
    }

    pub fn decode_concrete(bytes: &[u8]) -> Result<Self, DecodeError> {
        match bytes.get(1) {
            Some(&TYPE_REQUEST) => AuthRequest::decode_concrete(bytes).map(Message::Request),
            Some(&TYPE_RESPONSE) => AuthResponse::decode_concrete(bytes).map(Message::Response),
            Some(&TYPE_CONFIRM) => SessionKeyConfirm::decode_concrete(bytes).map(Message::Confirm),
            Some(_) => Err(DecodeError::Invalid("message type")),
            None => Err(DecodeError::Truncated { needed: 2 }),
        }
    }

    /// Short label used in traces.
    pub fn label(&self) -> &'static str {
        match self {
            Message::Request(_) => "hs1",
            Message::Response(_) => "hs2",
            Message::Confirm(_) => "hs3",
        }
    }
}
