//! `beran`: key generation, ledger tooling, handshake demos, scenario runs
//! and overhead reports.
//!
//! Exit status is 0 on success, 1 when a handshake or scenario fails or a
//! chain does not verify, and 2 on usage, config or I/O errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use beran_core::bemutual::{Endpoint, HandshakeFailure, Identity, Message};
use beran_core::bench::{
    build_report, csv_report, measure_beran_handshake, text_report, CertMode, ModelOptions,
    ParamTable, Sizing,
};
use beran_core::crypto::timing::{parse_timings_report, timings_report, DEFAULT_PAYLOAD_BYTES};
use beran_core::crypto::{
    derive_bc_address, generate_keypair, measure_primitives, KeyPair, PrimitiveTimings, SuiteKind,
};
use beran_core::ledger::{export_chain, import_chain, Ledger, PhysicalAddress};
use beran_core::simnet::Simulation;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "beran",
    version,
    about = "Ledger-backed mutual authentication toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an identity file and print its BC address.
    Keygen {
        #[arg(long, value_enum, default_value_t = Suite::Ec)]
        suite: Suite,
        /// Deterministic key from this seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "identity.json")]
        out: PathBuf,
    },
    /// Inspect, verify or export ledger chains
    #[command(subcommand)]
    Ledger(LedgerCommand),
    /// Run a handshake between two fresh endpoints
    #[command(subcommand)]
    Handshake(HandshakeCommand),
    /// Run a simulation scenario
    #[command(subcommand)]
    Scenario(ScenarioCommand),
    /// Communication and computation overhead
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Overhead report for all protocol/suite pairs using the built-in
    /// reference timings.
    Report {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long, default_value = "report.txt")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum LedgerCommand {
    /// Print blocks and the current bindings of an exported chain.
    Inspect { chain: PathBuf },
    /// Check hash links and every binding of an exported chain.
    Verify { chain: PathBuf },
    /// Run a scenario and export one node's ledger copy.
    Export {
        config: PathBuf,
        #[arg(long)]
        node: String,
        #[arg(long, default_value = "chain.jsonl")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum HandshakeCommand {
    /// Run an honest three-message handshake and print each message.
    Demo(HandshakeArgs),
    /// Flip one bit of one encoded message in flight.
    Tamper {
        #[command(flatten)]
        common: HandshakeArgs,
        /// Message to corrupt (1, 2 or 3).
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        message: u8,
        /// Bit index into the encoded message, wrapped to its length.
        #[arg(long)]
        bit: usize,
    },
}

#[derive(Args)]
struct HandshakeArgs {
    #[arg(long, value_enum, default_value_t = Suite::Ec)]
    suite: Suite,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Simulate a topology file; exits 0 iff a session is established.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "trace.txt")]
        out: PathBuf,
        /// Also write the hex dump of every delivered frame.
        #[arg(long)]
        frames: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Communication overhead; no measurement involved.
    Comm {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long, default_value = "comm.csv")]
        out: PathBuf,
    },
    /// Measure primitives and the handshake on this host, then predict.
    Compute {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 100)]
        repetitions: usize,
        /// Use timings from this file instead of measuring primitives.
        #[arg(long)]
        timings: Option<PathBuf>,
        /// Write the primitive timings used.
        #[arg(long)]
        timings_out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long, default_value = "compute.csv")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// TOML file overriding parameter lengths.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = CertArg::RawPk)]
    cert_mode: CertArg,
    #[arg(long, value_enum, default_value_t = SizingArg::Paper)]
    sizing: SizingArg,
}

impl ModelArgs {
    fn load(&self) -> Result<(ParamTable, ModelOptions)> {
        let params = match &self.params {
            Some(path) => {
                ParamTable::from_toml(&read(path)?).with_context(|| path.display().to_string())?
            }
            None => ParamTable::default(),
        };
        let options = ModelOptions {
            cert_mode: match self.cert_mode {
                CertArg::RawPk => CertMode::RawPublicKey,
                CertArg::Cert => CertMode::Certificate,
            },
            sizing: match self.sizing {
                SizingArg::Paper => Sizing::Paper,
                SizingArg::Concrete => Sizing::Concrete,
            },
        };
        Ok((params, options))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Ec,
    Ff,
}

impl From<Suite> for SuiteKind {
    fn from(s: Suite) -> Self {
        match s {
            Suite::Ec => SuiteKind::EllipticCurve,
            Suite::Ff => SuiteKind::FiniteField,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CertArg {
    RawPk,
    Cert,
}

#[derive(Clone, Copy, ValueEnum)]
enum SizingArg {
    Paper,
    Concrete,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Text,
}

/// Domain outcome of a command that ran to completion.
enum Outcome {
    Success,
    Failed,
}

#[derive(Serialize)]
struct IdentityFile {
    suite: SuiteKind,
    bc_address: String,
    public_key: String,
    private_key: String,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn seed_bytes(seed: u64) -> [u8; 32] {
    let mut out = [0u8; 32];
    out[..8].copy_from_slice(&seed.to_be_bytes());
    out
}

fn keygen(suite: SuiteKind, seed: Option<u64>, out: &Path) -> Result<Outcome> {
    let kp = generate_keypair(suite.into(), seed.map(seed_bytes))?;
    let bc = derive_bc_address(kp.public_key().as_bytes())?;
    let file = IdentityFile {
        suite,
        bc_address: bc.to_hex(),
        public_key: hex::encode(kp.public_key().as_bytes()),
        private_key: hex::encode(kp.private_key_bytes()),
    };
    write(out, &(serde_json::to_string_pretty(&file)? + "\n"))?;
    println!("{bc}");
    Ok(Outcome::Success)
}

fn load_chain(path: &Path) -> Result<Vec<beran_core::ledger::Block>> {
    import_chain(&read(path)?).with_context(|| path.display().to_string())
}

fn ledger_inspect(path: &Path) -> Result<Outcome> {
    let chain = load_chain(path)?;
    for block in &chain {
        println!(
            "block {} hash {} records {} deltas {}",
            block.height,
            hex::encode(&block.block_hash[..8]),
            block.records.len(),
            block.balance_deltas.len()
        );
    }
    match Ledger::from_chain(chain) {
        Ok(ledger) => {
            for (bc, record) in &ledger.index().bindings {
                println!(
                    "binding {bc} -> {} seq {} balance {}",
                    record.physical_address,
                    record.sequence_number,
                    ledger.balance(bc)
                );
            }
            Ok(Outcome::Success)
        }
        Err(e) => {
            println!("invalid: {e}");
            Ok(Outcome::Failed)
        }
    }
}

fn ledger_verify(path: &Path) -> Result<Outcome> {
    match Ledger::from_chain(load_chain(path)?) {
        Ok(ledger) => {
            println!(
                "valid: height {} tip {}",
                ledger.height(),
                hex::encode(ledger.tip_hash())
            );
            Ok(Outcome::Success)
        }
        Err(e) => {
            println!("invalid: {e}");
            Ok(Outcome::Failed)
        }
    }
}

fn load_simulation(config: &Path) -> Result<Simulation> {
    Simulation::from_toml(&read(config)?).with_context(|| config.display().to_string())
}

fn ledger_export(config: &Path, node: &str, out: &Path) -> Result<Outcome> {
    let mut sim = load_simulation(config)?;
    let trace = sim.run_configured()?;
    let ledger = sim
        .ledger(node)
        .with_context(|| format!("{node} holds no ledger"))?;
    write(out, &export_chain(ledger.chain()))?;
    println!("exported {} blocks from {node}", ledger.chain().len());
    Ok(if trace.is_established() {
        Outcome::Success
    } else {
        Outcome::Failed
    })
}

fn scenario_run(config: &Path, out: &Path, frames: Option<&Path>) -> Result<Outcome> {
    let mut sim = load_simulation(config)?;
    let trace = sim.run_configured()?;
    write(out, &trace.to_text())?;
    if let Some(path) = frames {
        write(path, &sim.frame_dump())?;
    }
    let outcome = trace
        .outcome()
        .map(|e| e.outcome.clone())
        .unwrap_or_default();
    println!("{outcome}");
    Ok(if trace.is_established() {
        Outcome::Success
    } else {
        Outcome::Failed
    })
}

fn demo_endpoints(args: &HandshakeArgs) -> Result<(Endpoint, Endpoint)> {
    let make = |n: u64, ip: &str| -> Result<Endpoint> {
        let kp: KeyPair = generate_keypair(
            SuiteKind::from(args.suite).into(),
            Some(seed_bytes(args.seed * 2 + n)),
        )?;
        let phys: PhysicalAddress = ip.parse().map_err(anyhow::Error::msg)?;
        Ok(Endpoint::new(Identity::new(kp, phys)))
    };
    Ok((make(0, "fd00::a")?, make(1, "fd00::b")?))
}

fn flip(bytes: &mut [u8], bit: usize) {
    let bit = bit % (bytes.len() * 8);
    bytes[bit / 8] ^= 0x80 >> (bit % 8);
}

/// Carries a message across the "wire", optionally corrupting it.
fn transmit(msg: Message, tamper: Option<usize>) -> Result<Message, String> {
    let mut bytes = msg.encode_concrete();
    println!(
        "{} {} bytes {}",
        msg.label(),
        bytes.len(),
        hex::encode(&bytes)
    );
    if let Some(bit) = tamper {
        flip(&mut bytes, bit);
        println!("{} tampered bit {}", msg.label(), bit % (bytes.len() * 8));
    }
    Message::decode_concrete(&bytes).map_err(|e| format!("malformed ({e})"))
}

fn handshake(args: &HandshakeArgs, tamper: Option<(u8, usize)>) -> Result<Outcome> {
    use rand::SeedableRng;
    let (mut alice, mut bob) = demo_endpoints(args)?;
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(args.seed);
    println!("alice {}", alice.identity().bc_address());
    println!("bob   {}", bob.identity().bc_address());
    let bit_for = |n: u8| tamper.filter(|(m, _)| *m == n).map(|(_, b)| b);
    let failed = |why: &str| {
        println!("failed: {why}");
        Ok(Outcome::Failed)
    };
    let label = |f: HandshakeFailure| f.label().to_owned();

    let (mut a_state, req) = alice.initiate(bob.identity().bc_address(), &mut rng);
    let Message::Request(req) = (match transmit(Message::Request(req), bit_for(1)) {
        Ok(m) => m,
        Err(e) => return failed(&e),
    }) else {
        return failed("unexpected message type");
    };
    let (mut b_state, resp) = match bob.respond(&req, alice.identity().bc_address(), &mut rng) {
        Ok(v) => v,
        Err(f) => return failed(&label(f)),
    };
    let Message::Response(resp) = (match transmit(Message::Response(resp), bit_for(2)) {
        Ok(m) => m,
        Err(e) => return failed(&e),
    }) else {
        return failed("unexpected message type");
    };
    let (confirm, a_key) = match alice.confirm(&mut a_state, &resp, &mut rng) {
        Ok(v) => v,
        Err(f) => return failed(&label(f)),
    };
    let Message::Confirm(confirm) = (match transmit(Message::Confirm(confirm), bit_for(3)) {
        Ok(m) => m,
        Err(e) => return failed(&e),
    }) else {
        return failed("unexpected message type");
    };
    let b_key = match bob.finalize(&mut b_state, &confirm) {
        Ok(k) => k,
        Err(f) => return failed(&label(f)),
    };
    if a_key.bits != b_key.bits {
        return failed("key-mismatch");
    }
    println!("established {}", a_key.fingerprint());
    Ok(Outcome::Success)
}

fn render(rows: &[beran_core::bench::OverheadRow], format: Format) -> Result<String> {
    Ok(match format {
        Format::Csv => csv_report(rows)?,
        Format::Text => text_report(rows),
    })
}

fn bench_comm(model: &ModelArgs, format: Format, out: &Path) -> Result<Outcome> {
    let (params, options) = model.load()?;
    let rows = build_report(&params, options, &[], &[])?;
    write(out, &render(&rows, format)?)?;
    for row in &rows {
        println!(
            "{} {} {}: {} bytes",
            row.protocol,
            row.suite.token(),
            row.mode,
            row.comm.total_bytes
        );
    }
    Ok(Outcome::Success)
}

struct ComputeArgs<'a> {
    model: &'a ModelArgs,
    repetitions: usize,
    timings: Option<&'a Path>,
    timings_out: Option<&'a Path>,
    format: Format,
    out: &'a Path,
}

fn bench_compute(args: ComputeArgs<'_>) -> Result<Outcome> {
    let (params, options) = args.model.load()?;
    let timings: Vec<PrimitiveTimings> = match args.timings {
        Some(path) => {
            parse_timings_report(&read(path)?).with_context(|| path.display().to_string())?
        }
        None => SuiteKind::ALL
            .into_iter()
            .map(|s| measure_primitives(s.into(), args.repetitions, DEFAULT_PAYLOAD_BYTES))
            .collect::<Result<_, _>>()?,
    };
    if let Some(path) = args.timings_out {
        write(path, &timings_report(&timings))?;
    }
    let measured = SuiteKind::ALL
        .into_iter()
        .map(|s| measure_beran_handshake(s, args.repetitions))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = build_report(&params, options, &timings, &measured)?;
    write(args.out, &render(&rows, args.format)?)?;
    for row in &rows {
        let fmt = |v: Option<f64>| {
            v.map(|x| format!("{x:.1} us"))
                .unwrap_or_else(|| "-".into())
        };
        println!(
            "{} {}: predicted {} measured {}",
            row.protocol,
            row.suite.token(),
            fmt(row.predicted_us),
            fmt(row.measured_us)
        );
    }
    Ok(Outcome::Success)
}

fn report(model: &ModelArgs, format: Format, out: &Path) -> Result<Outcome> {
    let (params, options) = model.load()?;
    let timings: Vec<_> = SuiteKind::ALL
        .into_iter()
        .map(PrimitiveTimings::published_reference)
        .collect();
    let rows = build_report(&params, options, &timings, &[])?;
    write(out, &render(&rows, format)?)?;
    println!("wrote {}", out.display());
    Ok(Outcome::Success)
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Keygen { suite, seed, out } => keygen(suite.into(), seed, &out),
        Command::Ledger(LedgerCommand::Inspect { chain }) => ledger_inspect(&chain),
        Command::Ledger(LedgerCommand::Verify { chain }) => ledger_verify(&chain),
        Command::Ledger(LedgerCommand::Export { config, node, out }) => {
            ledger_export(&config, &node, &out)
        }
        Command::Handshake(HandshakeCommand::Demo(args)) => handshake(&args, None),
        Command::Handshake(HandshakeCommand::Tamper {
            common,
            message,
            bit,
        }) => handshake(&common, Some((message, bit))),
        Command::Scenario(ScenarioCommand::Run {
            config,
            out,
            frames,
        }) => scenario_run(&config, &out, frames.as_deref()),
        Command::Bench(BenchCommand::Comm { model, format, out }) => {
            bench_comm(&model, format, &out)
        }
        Command::Bench(BenchCommand::Compute {
            model,
            repetitions,
            timings,
            timings_out,
            format,
            out,
        }) => {
            if repetitions == 0 {
                bail!("--repetitions must be positive");
            }
            bench_compute(ComputeArgs {
                model: &model,
                repetitions,
                timings: timings.as_deref(),
                timings_out: timings_out.as_deref(),
                format,
                out: &out,
            })
        }
        Command::Report { model, format, out } => report(&model, format, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
