use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::CryptoError;

pub const BC_ADDRESS_LEN: usize = 34;
pub const BC_ADDRESS_VERSION: u8 = 0x01;

/// 272-bit blockchain address: version byte, SHA-256 of the public key,
/// one checksum byte.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BcAddress([u8; BC_ADDRESS_LEN]);

impl BcAddress {
    pub fn from_bytes(bytes: [u8; BC_ADDRESS_LEN]) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; BC_ADDRESS_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// True if the version byte and checksum are consistent.
    pub fn is_well_formed(&self) -> bool {
        self.0[0] == BC_ADDRESS_VERSION && self.0[33] == checksum(&self.0[..33])
    }
}

fn checksum(prefix: &[u8]) -> u8 {
    Sha256::digest(prefix)[0]
}

pub fn derive_bc_address(public_key: &[u8]) -> Result<BcAddress, CryptoError> {
    if public_key.is_empty() {
        return Err(CryptoError::EmptyInput);
    }
    let mut out = [0u8; BC_ADDRESS_LEN];
    out[0] = BC_ADDRESS_VERSION;
    out[1..33].copy_from_slice(&Sha256::digest(public_key));
    out[33] = checksum(&out[..33]);
    Ok(BcAddress(out))
}

impl fmt::Display for BcAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for BcAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BcAddress({}..)", &self.to_hex()[..12])
    }
}

impl FromStr for BcAddress {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let raw = hex::decode(s).map_err(|e| CryptoError::Parse(e.to_string()))?;
        let bytes: [u8; BC_ADDRESS_LEN] = raw
            .try_into()
            .map_err(|_| CryptoError::Parse("address must be 34 bytes".into()))?;
        Ok(Self(bytes))
    }
}

impl Serialize for BcAddress {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for BcAddress {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
