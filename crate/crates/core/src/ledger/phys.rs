use std::fmt;
use std::net::Ipv6Addr;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::codec::{DecodeError, Reader, Writer};

pub type Mac48 = [u8; 6];

/// Routable address a BC address is bound to.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhysicalAddress {
    Mac48(Mac48),
    Ipv6([u8; 16]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhysicalKind {
    Mac48,
    Ipv6,
}

impl PhysicalAddress {
    pub fn kind(&self) -> PhysicalKind {
        match self {
            PhysicalAddress::Mac48(_) => PhysicalKind::Mac48,
            PhysicalAddress::Ipv6(_) => PhysicalKind::Ipv6,
        }
    }

    pub fn as_bytes(&self) -> &[u8] {
        match self {
            PhysicalAddress::Mac48(b) => b,
            PhysicalAddress::Ipv6(b) => b,
        }
    }

    pub fn bit_len(&self) -> usize {
        self.as_bytes().len() * 8
    }

    fn tag(&self) -> u8 {
        match self {
            PhysicalAddress::Mac48(_) => 0x01,
            PhysicalAddress::Ipv6(_) => 0x02,
        }
    }

    /// Kind tag followed by the raw address.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(17);
        out.push(self.tag());
        out.extend_from_slice(self.as_bytes());
        out
    }

    pub fn encode(&self, w: &mut Writer) {
        w.u8(self.tag()).raw(self.as_bytes());
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        match r.u8()? {
            0x01 => Ok(PhysicalAddress::Mac48(r.array()?)),
            0x02 => Ok(PhysicalAddress::Ipv6(r.array()?)),
            _ => Err(DecodeError::Invalid("physical address kind")),
        }
    }

    pub fn mac(&self) -> Option<Mac48> {
        match self {
            PhysicalAddress::Mac48(m) => Some(*m),
            PhysicalAddress::Ipv6(_) => None,
        }
    }
}

pub fn format_mac(mac: &Mac48) -> String {
    mac.iter()
        .map(|b| format!("{b:02x}"))
        .collect::<Vec<_>>()
        .join(":")
}

pub fn parse_mac(s: &str) -> Option<Mac48> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 6 {
        return None;
    }
    let mut mac = [0u8; 6];
    for (slot, part) in mac.iter_mut().zip(parts) {
        if part.len() != 2 {
            return None;
        }
        *slot = u8::from_str_radix(part, 16).ok()?;
    }
    Some(mac)
}

impl fmt::Display for PhysicalAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhysicalAddress::Mac48(m) => f.write_str(&format_mac(m)),
            PhysicalAddress::Ipv6(b) => write!(f, "{}", Ipv6Addr::from(*b)),
        }
    }
}

impl fmt::Debug for PhysicalAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for PhysicalAddress {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(mac) = parse_mac(s) {
            return Ok(PhysicalAddress::Mac48(mac));
        }
        s.parse::<Ipv6Addr>()
            .map(|ip| PhysicalAddress::Ipv6(ip.octets()))
            .map_err(|_| format!("not a MAC or IPv6 address: {s:?}"))
    }
}

impl Serialize for PhysicalAddress {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PhysicalAddress {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths_match_kind() {
        let mac: PhysicalAddress = "02:00:00:00:00:0a".parse().unwrap();
        assert_eq!(mac.kind(), PhysicalKind::Mac48);
        assert_eq!(mac.bit_len(), 48);
        let ip: PhysicalAddress = "fd00::1".parse().unwrap();
        assert_eq!(ip.kind(), PhysicalKind::Ipv6);
        assert_eq!(ip.bit_len(), 128);
        assert_eq!(mac.to_string(), "02:00:00:00:00:0a");
        assert_eq!(ip.to_string(), "fd00::1");
    }

    #[test]
    fn rejects_garbage() {
        assert!("02:00:00:00:00".parse::<PhysicalAddress>().is_err());
        assert!("zz:00:00:00:00:00".parse::<PhysicalAddress>().is_err());
        assert!(PhysicalAddress::decode(&mut Reader::new(&[9, 0])).is_err());
    }
}
