use crate::codec::{DecodeError, Reader, Writer};
use crate::crypto::{
    self, derive_bc_address, field, BcAddress, CryptoError, KeyPair, PublicKey, Signature,
};

use super::{BindingRejection, PhysicalAddress};

pub(crate) const BINDING_DESCRIPTOR: [&str; 3] =
    ["bc_address", "physical_address", "sequence_number"];

/// Signed claim that `bc_address` is currently reachable at `physical_address`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BindingRecord {
    pub bc_address: BcAddress,
    pub physical_address: PhysicalAddress,
    pub public_key: PublicKey,
    pub signature: Signature,
    pub sequence_number: u64,
    /// Logical tick at which the claim was made; not covered by the signature.
    pub timestamp: u64,
}

impl BindingRecord {
    pub fn signed(
        key: &KeyPair,
        physical_address: PhysicalAddress,
        sequence_number: u64,
        timestamp: u64,
    ) -> Result<Self, CryptoError> {
        let bc_address = derive_bc_address(key.public_key().as_bytes())?;
        let phys = physical_address.canonical_bytes();
        let seq = sequence_number.to_be_bytes();
        let signature = crypto::sign(key, &signed_content(&bc_address, &phys, &seq))?;
        Ok(Self {
            bc_address,
            physical_address,
            public_key: key.public_key().clone(),
            signature,
            sequence_number,
            timestamp,
        })
    }

    /// Checks the address/key relation and the signature.
    pub fn check(&self) -> Result<(), BindingRejection> {
        match derive_bc_address(self.public_key.as_bytes()) {
            Ok(derived) if derived == self.bc_address => {}
            _ => return Err(BindingRejection::AddressKeyMismatch),
        }
        let phys = self.physical_address.canonical_bytes();
        let seq = self.sequence_number.to_be_bytes();
        if crypto::verify(
            &self.public_key,
            &self.signature,
            &signed_content(&self.bc_address, &phys, &seq),
        ) {
            Ok(())
        } else {
            Err(BindingRejection::BadSignature)
        }
    }

    pub fn encode(&self, w: &mut Writer) {
        w.raw(self.bc_address.as_bytes());
        self.physical_address.encode(w);
        self.public_key.encode(w);
        self.signature.encode(w);
        w.u64(self.sequence_number).u64(self.timestamp);
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            bc_address: BcAddress::from_bytes(r.array()?),
            physical_address: PhysicalAddress::decode(r)?,
            public_key: PublicKey::decode(r)?,
            signature: Signature::decode(r, &BINDING_DESCRIPTOR)?,
            sequence_number: r.u64()?,
            timestamp: r.u64()?,
        })
    }
}

fn signed_content<'a>(bc: &'a BcAddress, phys: &'a [u8], seq: &'a [u8]) -> [crypto::Field<'a>; 3] {
    [
        field(BINDING_DESCRIPTOR[0], bc.as_bytes()),
        field(BINDING_DESCRIPTOR[1], phys),
        field(BINDING_DESCRIPTOR[2], seq),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{generate_keypair, CryptoSuite};

    fn record() -> BindingRecord {
        let kp = generate_keypair(CryptoSuite::ELLIPTIC_CURVE, Some([4; 32])).unwrap();
        BindingRecord::signed(&kp, "02:00:00:00:00:01".parse().unwrap(), 1, 0).unwrap()
    }

    #[test]
    fn fresh_record_checks() {
        record().check().unwrap();
    }

    #[test]
    fn foreign_key_is_address_mismatch() {
        let mut rec = record();
        let other = generate_keypair(CryptoSuite::ELLIPTIC_CURVE, Some([5; 32])).unwrap();
        rec.public_key = other.public_key().clone();
        assert_eq!(rec.check(), Err(BindingRejection::AddressKeyMismatch));
    }

    #[test]
    fn rebinding_or_resequencing_breaks_signature() {
        let mut rec = record();
        rec.physical_address = "02:00:00:00:00:02".parse().unwrap();
        assert_eq!(rec.check(), Err(BindingRejection::BadSignature));
        let mut rec = record();
        rec.sequence_number = 2;
        assert_eq!(rec.check(), Err(BindingRejection::BadSignature));
    }

    #[test]
    fn encoding_round_trips() {
        let rec = record();
        let mut w = Writer::new();
        rec.encode(&mut w);
        let bytes = w.finish();
        let mut r = Reader::new(&bytes);
        assert_eq!(BindingRecord::decode(&mut r).unwrap(), rec);
        r.finish().unwrap();
    }
}
