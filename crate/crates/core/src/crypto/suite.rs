use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CryptoError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteKind {
    FiniteField,
    EllipticCurve,
}

impl SuiteKind {
    pub const ALL: [SuiteKind; 2] = [SuiteKind::FiniteField, SuiteKind::EllipticCurve];

    /// Short token used in reports, file names and on the command line.
    pub fn token(self) -> &'static str {
        match self {
            SuiteKind::FiniteField => "ff",
            SuiteKind::EllipticCurve => "ec",
        }
    }

    pub(crate) fn wire_tag(self) -> u8 {
        match self {
            SuiteKind::FiniteField => 0x01,
            SuiteKind::EllipticCurve => 0x02,
        }
    }

    pub(crate) fn from_wire_tag(tag: u8) -> Option<Self> {
        match tag {
            0x01 => Some(SuiteKind::FiniteField),
            0x02 => Some(SuiteKind::EllipticCurve),
            _ => None,
        }
    }
}

impl fmt::Display for SuiteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for SuiteKind {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ff" | "finite-field" | "finitefield" | "dsa" => Ok(SuiteKind::FiniteField),
            "ec" | "elliptic-curve" | "ellipticcurve" | "ecdsa" => Ok(SuiteKind::EllipticCurve),
            _ => Err(CryptoError::UnsupportedSuite(s.to_owned())),
        }
    }
}

/// A signature/key-transport suite together with its key sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CryptoSuite {
    pub kind: SuiteKind,
    pub public_key_bits: u32,
    pub private_key_bits: u32,
    pub signature_scheme_label: &'static str,
}

impl CryptoSuite {
    pub const FINITE_FIELD: CryptoSuite = CryptoSuite {
        kind: SuiteKind::FiniteField,
        public_key_bits: 3072,
        private_key_bits: 256,
        signature_scheme_label: "DSA-3072-256-SHA256",
    };

    pub const ELLIPTIC_CURVE: CryptoSuite = CryptoSuite {
        kind: SuiteKind::EllipticCurve,
        public_key_bits: 256,
        private_key_bits: 256,
        signature_scheme_label: "ECDSA-P256-SHA256",
    };

    pub fn new(kind: SuiteKind) -> Self {
        match kind {
            SuiteKind::FiniteField => Self::FINITE_FIELD,
            SuiteKind::EllipticCurve => Self::ELLIPTIC_CURVE,
        }
    }

    pub fn public_key_len(&self) -> usize {
        self.public_key_bits as usize / 8
    }

    pub fn private_key_len(&self) -> usize {
        self.private_key_bits as usize / 8
    }

    /// Rejects hand-built suites whose sizes do not match a supported scheme.
    pub fn validate(&self) -> Result<(), CryptoError> {
        if *self == Self::new(self.kind) {
            Ok(())
        } else {
            Err(CryptoError::UnsupportedSuite(format!(
                "{} with {}/{} bit keys",
                self.kind, self.public_key_bits, self.private_key_bits
            )))
        }
    }
}

impl From<SuiteKind> for CryptoSuite {
    fn from(kind: SuiteKind) -> Self {
        Self::new(kind)
    }
}
