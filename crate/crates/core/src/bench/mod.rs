//! Communication and computation overhead of the BE-RAN handshake against
//! certificate-based IKEv2 and TLS 1.3, plus an in-process measurement of
//! the executable handshake.

mod report;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bemutual::{handshake_cost_model, Endpoint, Identity};
use crate::crypto::timing::median;
use crate::crypto::{
    generate_keypair, Composition, CryptoError, CryptoSuite, Op, PrimitiveTimings, SuiteKind,
};
use crate::ledger::PhysicalAddress;

pub use report::{
    build_report, csv_report, text_report, write_report, OverheadRow, ReportFormat, CSV_HEADER,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("parameter table: {0}")]
    Params(#[from] toml::de::Error),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("unknown protocol {0:?}")]
    UnknownProtocol(String),
    #[error("unknown mode {0:?}")]
    UnknownMode(String),
    #[error("writing report: {0}")]
    Io(#[from] std::io::Error),
    #[error("encoding csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Field lengths in bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamTable {
    pub nonce_bits: u64,
    /// Physical address; IPv6 by default.
    pub address_bits: u64,
    pub prf_bits: u64,
    pub cert_bits: u64,
    pub pk_ff_bits: u64,
    pub sk_ff_bits: u64,
    pub pk_ec_bits: u64,
    pub sk_ec_bits: u64,
    pub bc_addr_bits: u64,
    /// Signature value as carried on the wire, `hash(sign.)`.
    pub hash_bits: u64,
    pub hmac_bits: u64,
    pub dh_param_ff_bits: u64,
    pub dh_param_ec_bits: u64,
}

impl Default for ParamTable {
    fn default() -> Self {
        Self {
            nonce_bits: 256,
            address_bits: 128,
            prf_bits: 256,
            cert_bits: 5592,
            pk_ff_bits: 3072,
            sk_ff_bits: 256,
            pk_ec_bits: 256,
            sk_ec_bits: 256,
            bc_addr_bits: 272,
            hash_bits: 256,
            hmac_bits: 256,
            dh_param_ff_bits: 3072,
            dh_param_ec_bits: 256,
        }
    }
}

impl ParamTable {
    /// Reads overrides from TOML; missing keys keep their defaults.
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        Ok(toml::from_str(text)?)
    }

    pub fn pk_bits(&self, suite: SuiteKind) -> u64 {
        match suite {
            SuiteKind::FiniteField => self.pk_ff_bits,
            SuiteKind::EllipticCurve => self.pk_ec_bits,
        }
    }

    pub fn dh_param_bits(&self, suite: SuiteKind) -> u64 {
        match suite {
            SuiteKind::FiniteField => self.dh_param_ff_bits,
            SuiteKind::EllipticCurve => self.dh_param_ec_bits,
        }
    }

    /// Every field multiplied by `k`.
    pub fn scaled(&self, k: u64) -> Self {
        Self {
            nonce_bits: self.nonce_bits * k,
            address_bits: self.address_bits * k,
            prf_bits: self.prf_bits * k,
            cert_bits: self.cert_bits * k,
            pk_ff_bits: self.pk_ff_bits * k,
            sk_ff_bits: self.sk_ff_bits * k,
            pk_ec_bits: self.pk_ec_bits * k,
            sk_ec_bits: self.sk_ec_bits * k,
            bc_addr_bits: self.bc_addr_bits * k,
            hash_bits: self.hash_bits * k,
            hmac_bits: self.hmac_bits * k,
            dh_param_ff_bits: self.dh_param_ff_bits * k,
            dh_param_ec_bits: self.dh_param_ec_bits * k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    BeRan,
    IkeV2,
    Tls13,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::BeRan, Protocol::IkeV2, Protocol::Tls13];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::BeRan => "be-ran",
            Protocol::IkeV2 => "ikev2",
            Protocol::Tls13 => "tls13",
        }
    }

    /// Number of signalling messages, including ones that carry 0 bits.
    pub fn signal_count(self) -> usize {
        match self {
            Protocol::BeRan => 2,
            Protocol::IkeV2 => 4,
            Protocol::Tls13 => 9,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| BenchError::UnknownProtocol(s.to_owned()))
    }
}

/// What TLS sends in its Certificate messages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertMode {
    #[default]
    RawPublicKey,
    Certificate,
}

impl CertMode {
    pub fn name(self) -> &'static str {
        match self {
            CertMode::RawPublicKey => "raw-pk",
            CertMode::Certificate => "cert",
        }
    }
}

impl FromStr for CertMode {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw-pk" => Ok(CertMode::RawPublicKey),
            "cert" => Ok(CertMode::Certificate),
            _ => Err(BenchError::UnknownMode(s.to_owned())),
        }
    }
}

/// How BE-RAN signal sizes are counted: the analytic field sums, or the
/// byte length of the implemented wire encoding.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sizing {
    #[default]
    Paper,
    Concrete,
}

impl Sizing {
    pub fn name(self) -> &'static str {
        match self {
            Sizing::Paper => "paper",
            Sizing::Concrete => "concrete",
        }
    }
}

impl FromStr for Sizing {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Sizing::Paper),
            "concrete" => Ok(Sizing::Concrete),
            _ => Err(BenchError::UnknownMode(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ModelOptions {
    pub cert_mode: CertMode,
    pub sizing: Sizing,
}

impl ModelOptions {
    /// Label for the report's mode column.
    pub fn mode_label(&self, protocol: Protocol) -> &'static str {
        match protocol {
            Protocol::BeRan => self.sizing.name(),
            Protocol::IkeV2 => CertMode::Certificate.name(),
            Protocol::Tls13 => self.cert_mode.name(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommOverhead {
    pub signals: Vec<u64>,
    pub total_bits: u64,
    pub total_bytes: u64,
}

impl CommOverhead {
    fn from_signals(signals: Vec<u64>) -> Self {
        let total_bits = signals.iter().sum();
        Self {
            signals,
            total_bits,
            total_bytes: u64::div_ceil(total_bits, 8),
        }
    }
}

/// Per-signal bit counts under the analytic field model.
pub fn comm_overhead(
    protocol: Protocol,
    suite: SuiteKind,
    params: &ParamTable,
    cert_mode: CertMode,
) -> CommOverhead {
    let p = params;
    let pk = p.pk_bits(suite);
    let hello = p.dh_param_bits(suite) + p.nonce_bits;
    let signals = match protocol {
        Protocol::BeRan => {
            // two nonces and a BC address
            let header = 2 * p.nonce_bits + p.bc_addr_bits;
            vec![
                header + 2 * p.address_bits + pk,
                header + 4 * p.address_bits + pk,
            ]
        }
        Protocol::IkeV2 => {
            let auth = 2 * p.address_bits + 2 * p.cert_bits + p.nonce_bits + p.prf_bits;
            vec![hello, hello, auth, auth]
        }
        Protocol::Tls13 => {
            let credential = match cert_mode {
                CertMode::RawPublicKey => pk,
                CertMode::Certificate => p.cert_bits,
            };
            vec![
                hello,
                hello,
                0,
                credential,
                p.hash_bits,
                p.hmac_bits,
                credential,
                p.hash_bits,
                p.hmac_bits,
            ]
        }
    };
    CommOverhead::from_signals(signals)
}

/// BE-RAN signal sizes from the implemented wire encoding of messages 1
/// and 2, between IPv6-addressed peers with deterministic keys.
pub fn concrete_beran_signals(suite: SuiteKind) -> Result<CommOverhead, CryptoError> {
    let (mut alice, mut bob) = bench_endpoints(suite)?;
    let mut rng = ChaCha20Rng::seed_from_u64(0x7369_7a65);
    let (_, request) = alice.initiate(bob.identity().bc_address(), &mut rng);
    let (_, response) = bob
        .respond(&request, alice.identity().bc_address(), &mut rng)
        .expect("honest request verifies");
    let bits = |len: usize| 8 * len as u64;
    Ok(CommOverhead::from_signals(vec![
        bits(request.encode_concrete().len()),
        bits(response.encode_concrete().len()),
    ]))
}

/// Operation multiset behind each protocol's computation cost.
pub fn compute_composition(protocol: Protocol) -> Composition {
    match protocol {
        Protocol::BeRan => handshake_cost_model(CryptoSuite::ELLIPTIC_CURVE),
        Protocol::IkeV2 => Composition::from_counts(&[
            (Op::KeyExchange, 1),
            (Op::Sym, 4),
            (Op::Hmac, 4),
            (Op::Sign, 2),
            (Op::Verify, 2),
        ]),
        Protocol::Tls13 => Composition::from_counts(&[
            (Op::KeyExchange, 1),
            (Op::Sym, 14),
            (Op::Sign, 2),
            (Op::Hash, 2),
            (Op::Verify, 2),
            (Op::Hmac, 2),
        ]),
    }
}

/// Predicted computation time in microseconds. The key-exchange term uses
/// t_dh for the finite-field suite and t_ecdh for the elliptic-curve one.
pub fn predict_compute(protocol: Protocol, timings: &PrimitiveTimings) -> Result<f64, CryptoError> {
    compute_composition(protocol).dot(timings)
}

/// Median wall-clock timings of the in-process three-message handshake.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandshakeTiming {
    pub suite: SuiteKind,
    /// Message 1 creation through verification of message 2.
    pub signals_us: f64,
    /// Encryption and decryption of the message-3 key material.
    pub key_transport_us: f64,
    pub total_us: f64,
}

fn bench_endpoints(suite: SuiteKind) -> Result<(Endpoint, Endpoint), CryptoError> {
    let make = |n: u8| -> Result<Endpoint, CryptoError> {
        let kp = generate_keypair(suite.into(), Some([n; 32]))?;
        let mut ip = [0u8; 16];
        ip[0] = 0xfd;
        ip[15] = n;
        Ok(Endpoint::new(Identity::new(kp, PhysicalAddress::Ipv6(ip))))
    };
    Ok((make(1)?, make(2)?))
}

/// Runs `repetitions` handshakes between two fixed identities. Key
/// generation is excluded. Runs single-threaded on the caller's thread.
pub fn measure_beran_handshake(
    suite: SuiteKind,
    repetitions: usize,
) -> Result<HandshakeTiming, CryptoError> {
    let (mut alice, mut bob) = bench_endpoints(suite)?;
    let (a_addr, b_addr) = (alice.identity().bc_address(), bob.identity().bc_address());
    let mut rng = ChaCha20Rng::seed_from_u64(0x0068_736b);
    let repetitions = repetitions.max(1);
    let (mut signals, mut transport, mut total) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..repetitions {
        let start = Instant::now();
        let (mut a_state, request) = alice.initiate(b_addr, &mut rng);
        let (mut b_state, response) = bob
            .respond(&request, a_addr, &mut rng)
            .expect("honest request");
        alice
            .accept_response(&mut a_state, &response)
            .expect("honest response");
        let verified = Instant::now();
        let (confirm, a_key) =
            alice.send_confirm(&mut a_state, &response.responder_public_key, &mut rng);
        let b_key = bob
            .finalize(&mut b_state, &confirm)
            .expect("honest confirm");
        let end = Instant::now();
        assert_eq!(a_key.bits, b_key.bits);
        signals.push((verified - start).as_secs_f64() * 1e6);
        transport.push((end - verified).as_secs_f64() * 1e6);
        total.push((end - start).as_secs_f64() * 1e6);
    }
    Ok(HandshakeTiming {
        suite,
        signals_us: median(&mut signals),
        key_transport_us: median(&mut transport),
        total_us: median(&mut total),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_sizes() {
        let p = ParamTable::default();
        let raw = CertMode::RawPublicKey;
        let ec = comm_overhead(Protocol::BeRan, SuiteKind::EllipticCurve, &p, raw);
        assert_eq!(ec.signals, [1296, 1552]);
        assert_eq!(ec.total_bytes, 356);
        let ff = comm_overhead(Protocol::BeRan, SuiteKind::FiniteField, &p, raw);
        assert_eq!(ff.signals, [4112, 4368]);
        assert_eq!(ff.total_bytes, 1060);
        assert_eq!(
            comm_overhead(Protocol::Tls13, SuiteKind::EllipticCurve, &p, raw).total_bytes,
            320
        );
        assert_eq!(
            comm_overhead(Protocol::Tls13, SuiteKind::FiniteField, &p, raw).total_bytes,
            1728
        );
        let cert = CertMode::Certificate;
        assert_eq!(
            comm_overhead(Protocol::Tls13, SuiteKind::FiniteField, &p, cert).total_bytes,
            2358
        );
        assert_eq!(
            comm_overhead(Protocol::IkeV2, SuiteKind::FiniteField, &p, raw).total_bytes,
            3820
        );
        assert_eq!(
            comm_overhead(Protocol::IkeV2, SuiteKind::EllipticCurve, &p, raw).total_bytes,
            3116
        );
    }

    #[test]
    fn signal_counts() {
        let p = ParamTable::default();
        for suite in SuiteKind::ALL {
            for proto in Protocol::ALL {
                let c = comm_overhead(proto, suite, &p, CertMode::default());
                assert_eq!(c.signals.len(), proto.signal_count());
                let nonzero = c.signals.iter().filter(|b| **b > 0).count();
                let expected = if proto == Protocol::Tls13 {
                    8
                } else {
                    proto.signal_count()
                };
                assert_eq!(nonzero, expected);
            }
            let tls = comm_overhead(Protocol::Tls13, suite, &p, CertMode::default());
            assert_eq!(tls.signals[2], 0);
        }
    }

    #[test]
    fn bytes_round_up() {
        let p = ParamTable {
            nonce_bits: 1,
            ..ParamTable::default()
        };
        let c = comm_overhead(
            Protocol::BeRan,
            SuiteKind::EllipticCurve,
            &p,
            CertMode::default(),
        );
        assert_eq!(c.total_bits % 8, 4);
        assert_eq!(c.total_bytes, c.total_bits / 8 + 1);
    }

    #[test]
    fn reference_predictions() {
        let ec = PrimitiveTimings::published_reference(SuiteKind::EllipticCurve);
        let ff = PrimitiveTimings::published_reference(SuiteKind::FiniteField);
        let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
        assert!(close(predict_compute(Protocol::BeRan, &ec).unwrap(), 233.0));
        assert!(close(
            predict_compute(Protocol::BeRan, &ff).unwrap(),
            3073.0
        ));
        assert!(close(
            predict_compute(Protocol::Tls13, &ec).unwrap(),
            2409.8
        ));
        assert!(close(
            predict_compute(Protocol::IkeV2, &ec).unwrap(),
            2381.6
        ));
        assert!(close(
            predict_compute(Protocol::Tls13, &ff).unwrap(),
            4929.8
        ));
        assert!(close(
            predict_compute(Protocol::IkeV2, &ff).unwrap(),
            4901.6
        ));
    }

    #[test]
    fn zero_timings_predict_zero() {
        for suite in SuiteKind::ALL {
            let mut t = PrimitiveTimings::new(suite);
            t.set_components(0.0, 0.0);
            for p in crate::crypto::Primitive::ALL {
                if t.get(p).is_none() {
                    t.set(p, 0.0);
                }
            }
            for proto in Protocol::ALL {
                assert_eq!(predict_compute(proto, &t).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn missing_timing_is_an_error() {
        let t = PrimitiveTimings::new(SuiteKind::EllipticCurve);
        assert!(matches!(
            predict_compute(Protocol::BeRan, &t),
            Err(CryptoError::MissingTiming(_))
        ));
    }

    #[test]
    fn param_overrides() {
        let p = ParamTable::from_toml("cert_bits = 8000\n").unwrap();
        assert_eq!(p.cert_bits, 8000);
        assert_eq!(p.nonce_bits, 256);
        assert!(ParamTable::from_toml("cert_size = 1").is_err());
    }

    #[test]
    fn concrete_sizes_exceed_paper_sizes() {
        let p = ParamTable::default();
        for suite in SuiteKind::ALL {
            let concrete = concrete_beran_signals(suite).unwrap();
            let paper = comm_overhead(Protocol::BeRan, suite, &p, CertMode::default());
            assert!(concrete.total_bits > paper.total_bits);
        }
    }

    #[test]
    fn names_parse_back() {
        for p in Protocol::ALL {
            assert_eq!(p.name().parse::<Protocol>().unwrap(), p);
        }
        assert!("quic".parse::<Protocol>().is_err());
        assert_eq!("cert".parse::<CertMode>().unwrap(), CertMode::Certificate);
        assert_eq!("concrete".parse::<Sizing>().unwrap(), Sizing::Concrete);
    }

    #[test]
    fn handshake_measurement_runs() {
        let t = measure_beran_handshake(SuiteKind::EllipticCurve, 3).unwrap();
        assert!(t.signals_us > 0.0 && t.key_transport_us > 0.0);
        assert!(t.total_us >= t.signals_us);
    }
}
