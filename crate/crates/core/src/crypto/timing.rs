//! Primitive timing measurement and the flat text report the overhead
//! benchmark consumes.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use aes_gcm::aead::{Aead, KeyInit};
use aes_gcm::{Aes256Gcm, Nonce as GcmNonce};
use hmac::{Hmac, Mac};
use num_bigint_dig::BigUint;
use p256::elliptic_curve::Field as _;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::keys::{dsa_components, generate_keypair_with, random_below_q};
use super::sign::{field, sign, verify};
use super::suite::{CryptoSuite, SuiteKind};
use super::CryptoError;

pub const DEFAULT_PAYLOAD_BYTES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Primitive {
    Sign,
    Verify,
    Hash,
    Sym,
    Hmac,
    Dh,
    Ecdh,
    Pm,
    Exp,
}

impl Primitive {
    pub const ALL: [Primitive; 9] = [
        Primitive::Sign,
        Primitive::Verify,
        Primitive::Hash,
        Primitive::Sym,
        Primitive::Hmac,
        Primitive::Dh,
        Primitive::Ecdh,
        Primitive::Pm,
        Primitive::Exp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Primitive::Sign => "t_sign",
            Primitive::Verify => "t_verify",
            Primitive::Hash => "t_hash",
            Primitive::Sym => "t_sym",
            Primitive::Hmac => "t_hmac",
            Primitive::Dh => "t_dh",
            Primitive::Ecdh => "t_ecdh",
            Primitive::Pm => "t_pm",
            Primitive::Exp => "t_exp",
        }
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Primitive {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Primitive::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| CryptoError::Parse(format!("unknown primitive {s:?}")))
    }
}

/// Per-primitive durations in microseconds for one suite.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveTimings {
    pub suite: SuiteKind,
    values: BTreeMap<Primitive, f64>,
}

impl PrimitiveTimings {
    pub fn new(suite: SuiteKind) -> Self {
        Self {
            suite,
            values: BTreeMap::new(),
        }
    }

    pub fn get(&self, primitive: Primitive) -> Option<f64> {
        self.values.get(&primitive).copied()
    }

    pub fn set(&mut self, primitive: Primitive, micros: f64) -> &mut Self {
        self.values.insert(primitive, micros);
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (Primitive, f64)> + '_ {
        self.values.iter().map(|(p, v)| (*p, *v))
    }

    /// Stores component measurements and derives the key-exchange entries
    /// from them: t_dh = 2 t_exp, t_ecdh = 2 t_pm.
    pub fn set_components(&mut self, exp_us: f64, pm_us: f64) -> &mut Self {
        self.set(Primitive::Exp, exp_us)
            .set(Primitive::Pm, pm_us)
            .set(Primitive::Dh, 2.0 * exp_us)
            .set(Primitive::Ecdh, 2.0 * pm_us)
    }

    /// Published reference timings of the original benchmark host. The
    /// (EC)DH entries are the published figures, not 2x the component rows.
    pub fn published_reference(suite: SuiteKind) -> Self {
        let mut t = Self::new(suite);
        let (sign_us, verify_us) = match suite {
            SuiteKind::FiniteField => (1506.0, 30.0),
            SuiteKind::EllipticCurve => (16.0, 100.0),
        };
        t.set(Primitive::Sign, sign_us)
            .set(Primitive::Verify, verify_us)
            .set(Primitive::Hash, 0.5)
            .set(Primitive::Sym, 3.0)
            .set(Primitive::Hmac, 1.4)
            .set(Primitive::Pm, 906.0)
            .set(Primitive::Exp, 925.0)
            .set(Primitive::Dh, 1812.0)
            .set(Primitive::Ecdh, 2132.0);
        t
    }

    /// One `name suite microseconds` line per primitive.
    pub fn to_report(&self) -> String {
        let mut out = String::new();
        for (p, v) in self.iter() {
            writeln!(out, "{} {} {:.6}", p.name(), self.suite.token(), v).unwrap();
        }
        out
    }
}

pub fn timings_report(all: &[PrimitiveTimings]) -> String {
    all.iter().map(PrimitiveTimings::to_report).collect()
}

/// Parses one or more suites' timings. Blank lines and `#` comments are
/// skipped; suites come back in order of first appearance.
pub fn parse_timings_report(text: &str) -> Result<Vec<PrimitiveTimings>, CryptoError> {
    let mut out: Vec<PrimitiveTimings> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [name, suite, micros] = parts[..] else {
            return Err(CryptoError::Parse(format!(
                "line {}: expected 3 fields",
                lineno + 1
            )));
        };
        let primitive: Primitive = name.parse()?;
        let suite: SuiteKind = suite.parse()?;
        let micros: f64 = micros
            .parse()
            .map_err(|_| CryptoError::Parse(format!("line {}: bad duration", lineno + 1)))?;
        if !micros.is_finite() || micros < 0.0 {
            return Err(CryptoError::Parse(format!(
                "line {}: negative or non-finite",
                lineno + 1
            )));
        }
        match out.iter_mut().find(|t| t.suite == suite) {
            Some(t) => {
                t.set(primitive, micros);
            }
            None => {
                let mut t = PrimitiveTimings::new(suite);
                t.set(primitive, micros);
                out.push(t);
            }
        }
    }
    Ok(out)
}

/// Operation classes counted in a protocol's computation cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Op {
    Sign,
    Verify,
    Hash,
    Sym,
    Hmac,
    /// DH for the finite-field suite, ECDH for the elliptic-curve suite.
    KeyExchange,
}

impl Op {
    pub fn name(self) -> &'static str {
        match self {
            Op::Sign => "sign",
            Op::Verify => "verify",
            Op::Hash => "hash",
            Op::Sym => "sym",
            Op::Hmac => "hmac",
            Op::KeyExchange => "dh",
        }
    }

    pub fn timing_for(self, suite: SuiteKind) -> Primitive {
        match self {
            Op::Sign => Primitive::Sign,
            Op::Verify => Primitive::Verify,
            Op::Hash => Primitive::Hash,
            Op::Sym => Primitive::Sym,
            Op::Hmac => Primitive::Hmac,
            Op::KeyExchange => match suite {
                SuiteKind::FiniteField => Primitive::Dh,
                SuiteKind::EllipticCurve => Primitive::Ecdh,
            },
        }
    }
}

/// Multiset of operations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Composition(BTreeMap<Op, u32>);

impl Composition {
    pub fn from_counts(counts: &[(Op, u32)]) -> Self {
        let mut c = Self::default();
        for (op, n) in counts {
            c.add(*op, *n);
        }
        c
    }

    pub fn add(&mut self, op: Op, n: u32) {
        if n > 0 {
            *self.0.entry(op).or_insert(0) += n;
        }
    }

    pub fn count(&self, op: Op) -> u32 {
        self.0.get(&op).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Op, u32)> + '_ {
        self.0.iter().map(|(o, n)| (*o, *n))
    }

    /// Sum of count x duration in microseconds.
    pub fn dot(&self, timings: &PrimitiveTimings) -> Result<f64, CryptoError> {
        self.iter().try_fold(0.0, |acc, (op, n)| {
            let primitive = op.timing_for(timings.suite);
            timings
                .get(primitive)
                .map(|t| acc + f64::from(n) * t)
                .ok_or(CryptoError::MissingTiming(primitive))
        })
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .iter()
            .map(|(op, n)| format!("{}:{}", op.name(), n))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

pub fn median(samples: &mut [f64]) -> f64 {
    assert!(!samples.is_empty(), "median of empty sample");
    samples.sort_by(f64::total_cmp);
    let mid = samples.len() / 2;
    if samples.len().is_multiple_of(2) {
        (samples[mid - 1] + samples[mid]) / 2.0
    } else {
        samples[mid]
    }
}

fn time_median(repetitions: usize, mut op: impl FnMut()) -> f64 {
    let mut samples: Vec<f64> = (0..repetitions)
        .map(|_| {
            let start = Instant::now();
            op();
            start.elapsed().as_secs_f64() * 1e6
        })
        .collect();
    median(&mut samples)
}

/// Median-of-`repetitions` timing of every primitive on this host. Runs on
/// the calling thread; callers should avoid running it concurrently with
/// other heavy work.
pub fn measure_primitives(
    suite: CryptoSuite,
    repetitions: usize,
    payload_bytes: usize,
) -> Result<PrimitiveTimings, CryptoError> {
    suite.validate()?;
    let repetitions = repetitions.max(1);
    let mut rng = ChaCha20Rng::seed_from_u64(0x7469_6d65);
    let key = generate_keypair_with(suite, &mut rng)?;
    let payload: Vec<u8> = (0..payload_bytes).map(|i| (i % 251) as u8).collect();
    let content = [field("payload", &payload)];
    let signature = sign(&key, &content)?;

    let mut timings = PrimitiveTimings::new(suite.kind);
    timings.set(
        Primitive::Sign,
        time_median(repetitions, || {
            black_box(sign(&key, black_box(&content)).expect("sign"));
        }),
    );
    timings.set(
        Primitive::Verify,
        time_median(repetitions, || {
            assert!(verify(key.public_key(), &signature, black_box(&content)));
        }),
    );
    timings.set(
        Primitive::Hash,
        time_median(repetitions, || {
            black_box(Sha256::digest(black_box(&payload)));
        }),
    );
    let cipher = Aes256Gcm::new_from_slice(&[7u8; 32]).expect("32-byte key");
    let gcm_nonce = [1u8; 12];
    timings.set(
        Primitive::Sym,
        time_median(repetitions, || {
            black_box(
                cipher
                    .encrypt(&GcmNonce::from(gcm_nonce), black_box(payload.as_slice()))
                    .expect("encrypt"),
            );
        }),
    );
    timings.set(
        Primitive::Hmac,
        time_median(repetitions, || {
            let mut mac =
                <Hmac<Sha256> as Mac>::new_from_slice(&[9u8; 32]).expect("any key length");
            mac.update(black_box(&payload));
            black_box(mac.finalize());
        }),
    );

    let group = dsa_components();
    let base = group.g().modpow(&BigUint::from(0x1234_5678u32), group.p());
    let exponents: Vec<BigUint> = (0..repetitions).map(|_| random_below_q(&mut rng)).collect();
    let mut i = 0;
    let exp_us = time_median(repetitions, || {
        black_box(base.modpow(&exponents[i], group.p()));
        i += 1;
    });
    let point = p256::ProjectivePoint::GENERATOR * p256::Scalar::random(&mut rng);
    let scalars: Vec<p256::Scalar> = (0..repetitions)
        .map(|_| p256::Scalar::random(&mut rng))
        .collect();
    let mut j = 0;
    let pm_us = time_median(repetitions, || {
        black_box(point * scalars[j]);
        j += 1;
    });
    timings.set_components(exp_us, pm_us);
    Ok(timings)
}
