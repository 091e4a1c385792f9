use thiserror::Error;

use crate::codec::{Reader, Writer};
use crate::crypto::{BcAddress, PublicKey, Signature, BC_ADDRESS_LEN};
use crate::ledger::{BindingRecord, Mac48, PhysicalAddress};

const KIND_MASK: u8 = 0x0f;
const RESERVED_MASK: u8 = 0x30;
/// Set once a frame has crossed a bridge.
const BRIDGED_BIT: u8 = 0x40;
const DEST_MAC_BIT: u8 = 0x80;

/// kind + two BC addresses + source MAC + payload length
pub const MIN_FRAME_LEN: usize = 1 + 2 * BC_ADDRESS_LEN + 6 + 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Registry = 1,
    Connect = 2,
    Data = 3,
    Control = 4,
}

impl FrameKind {
    pub const ALL: [FrameKind; 4] = [
        FrameKind::Registry,
        FrameKind::Connect,
        FrameKind::Data,
        FrameKind::Control,
    ];

    fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| *k as u8 == code)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MalformedFrame {
    #[error("frame shorter than its header")]
    TooShort,
    #[error("unknown frame kind byte {0:#04x}")]
    BadKind(u8),
    #[error("declared length disagrees with frame size")]
    LengthMismatch,
    #[error("registry extension cannot be decoded")]
    BadExtension,
}

/// Binding proof carried by registry frames: the key behind the source BC
/// address and its signature over (BC address, source MAC, sequence).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryExtension {
    pub public_key: PublicKey,
    pub sequence_number: u64,
    pub timestamp: u64,
    pub signature: Signature,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeMacFrame {
    pub kind: FrameKind,
    pub bridged: bool,
    pub destination_bc_address: BcAddress,
    pub source_bc_address: BcAddress,
    pub source_mac: Mac48,
    pub destination_mac: Option<Mac48>,
    pub payload: Vec<u8>,
    pub registry: Option<RegistryExtension>,
}

impl BeMacFrame {
    pub fn new(
        kind: FrameKind,
        src: BcAddress,
        src_mac: Mac48,
        dest: BcAddress,
        payload: Vec<u8>,
    ) -> Self {
        Self {
            kind,
            bridged: false,
            destination_bc_address: dest,
            source_bc_address: src,
            source_mac: src_mac,
            destination_mac: None,
            payload,
            registry: None,
        }
    }

    /// Registry frame announcing `record`. The destination is the DU's own
    /// BC address.
    pub fn registry(record: &BindingRecord, du: BcAddress) -> Option<Self> {
        let PhysicalAddress::Mac48(mac) = record.physical_address else {
            return None;
        };
        let mut frame = Self::new(FrameKind::Registry, record.bc_address, mac, du, Vec::new());
        frame.registry = Some(RegistryExtension {
            public_key: record.public_key.clone(),
            sequence_number: record.sequence_number,
            timestamp: record.timestamp,
            signature: record.signature.clone(),
        });
        Some(frame)
    }

    /// Binding record reconstructed from a registry frame.
    pub fn binding_record(&self) -> Option<BindingRecord> {
        let ext = self.registry.as_ref()?;
        Some(BindingRecord {
            bc_address: self.source_bc_address,
            physical_address: PhysicalAddress::Mac48(self.source_mac),
            public_key: ext.public_key.clone(),
            signature: ext.signature.clone(),
            sequence_number: ext.sequence_number,
            timestamp: ext.timestamp,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut kind = self.kind as u8;
        if self.bridged {
            kind |= BRIDGED_BIT;
        }
        if self.destination_mac.is_some() {
            kind |= DEST_MAC_BIT;
        }
        let mut w = Writer::new();
        w.u8(kind)
            .raw(self.destination_bc_address.as_bytes())
            .raw(self.source_bc_address.as_bytes())
            .raw(&self.source_mac);
        if let Some(mac) = &self.destination_mac {
            w.raw(mac);
        }
        w.short_bytes(&self.payload);
        if let Some(ext) = &self.registry {
            ext.public_key.encode(&mut w);
            w.u64(ext.sequence_number).u64(ext.timestamp);
            ext.signature.encode(&mut w);
        }
        w.finish()
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, MalformedFrame> {
        let kind_byte = *bytes.first().ok_or(MalformedFrame::TooShort)?;
        let kind = match FrameKind::from_code(kind_byte & KIND_MASK) {
            Some(k) if kind_byte & RESERVED_MASK == 0 => k,
            _ => return Err(MalformedFrame::BadKind(kind_byte)),
        };
        let has_dest_mac = kind_byte & DEST_MAC_BIT != 0;
        let header_len = MIN_FRAME_LEN + if has_dest_mac { 6 } else { 0 };
        if bytes.len() < header_len {
            return Err(MalformedFrame::TooShort);
        }
        let mut r = Reader::new(&bytes[1..]);
        let short = |_| MalformedFrame::TooShort;
        let destination_bc_address = BcAddress::from_bytes(r.array().map_err(short)?);
        let source_bc_address = BcAddress::from_bytes(r.array().map_err(short)?);
        let source_mac = r.array().map_err(short)?;
        let destination_mac = if has_dest_mac {
            Some(r.array().map_err(short)?)
        } else {
            None
        };
        let payload = r
            .short_bytes()
            .map_err(|_| MalformedFrame::LengthMismatch)?
            .to_vec();
        let registry = if kind == FrameKind::Registry {
            Some(parse_extension(&mut r)?)
        } else {
            None
        };
        r.finish().map_err(|_| MalformedFrame::LengthMismatch)?;
        Ok(Self {
            kind,
            bridged: kind_byte & BRIDGED_BIT != 0,
            destination_bc_address,
            source_bc_address,
            source_mac,
            destination_mac,
            payload,
            registry,
        })
    }
}

fn parse_extension(r: &mut Reader<'_>) -> Result<RegistryExtension, MalformedFrame> {
    let bad = |_| MalformedFrame::BadExtension;
    let public_key = PublicKey::decode(r).map_err(bad)?;
    let sequence_number = r.u64().map_err(bad)?;
    let timestamp = r.u64().map_err(bad)?;
    let signature = Signature::decode(r, &crate::ledger::BINDING_DESCRIPTOR).map_err(bad)?;
    Ok(RegistryExtension {
        public_key,
        sequence_number,
        timestamp,
        signature,
    })
}

/// Reads only the kind byte and the destination MAC, as a relay that does
/// not interpret BC fields would.
pub fn peek_destination_mac(bytes: &[u8]) -> Option<Mac48> {
    let start = 1 + 2 * BC_ADDRESS_LEN + 6;
    if bytes.first()? & DEST_MAC_BIT == 0 {
        return None;
    }
    bytes.get(start..start + 6)?.try_into().ok()
}

/// Offset of the payload within an encoded frame.
pub fn payload_offset(bytes: &[u8]) -> Option<usize> {
    let dest = if bytes.first()? & DEST_MAC_BIT != 0 {
        6
    } else {
        0
    };
    let offset = MIN_FRAME_LEN + dest;
    (bytes.len() >= offset).then_some(offset)
}

/// One golden-trace line: tick, port, lowercase hex of the frame.
pub fn hexdump_line(tick: u64, port: u16, frame: &[u8]) -> String {
    format!("{tick:04} {port} {}", hex::encode(frame))
}
