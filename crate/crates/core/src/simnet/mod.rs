//! Deterministic discrete-event simulation of the emergency-call scenario.
//!
//! UEs attach through transparent RUs to DUs. Each DU hosts a BC node (its
//! own ledger copy, which is also the only committer for registrations it
//! receives) and a BE-switch. Bridges join DU domains. Time advances in
//! integer ticks and events are processed in (tick, sequence) order, so a
//! given config and seed always yields the same trace.

mod config;
mod trace;

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bemutual::{Endpoint, HandshakeState, Identity, Message, SessionKey};
use crate::beswitch::{
    hexdump_line, payload_offset, peek_destination_mac, BeMacFrame, BeSwitch, ForwardDecision,
    FrameKind, PortId, RegisterRejection,
};
use crate::codec::{Reader, Writer};
use crate::crypto::{generate_keypair, BcAddress, CryptoError, CryptoSuite};
use crate::ledger::{
    parse_mac, BindingRecord, BindingRejection, Block, GenesisConfig, Ledger, Mac48,
    PhysicalAddress,
};

pub use config::{
    FailureConfig, LinkConfig, NodeConfig, NodeRole, ScenarioConfig, ScenarioKind, SimConfig,
    TamperConfig, DEFAULT_TIMEOUT_TICKS,
};
pub use trace::{Trace, TraceEvent, OUTCOME_LABEL};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config: {0}")]
    Config(String),
    #[error("duplicate node id {0}")]
    DuplicateNode(String),
    #[error("duplicate link id {0}")]
    DuplicateLink(String),
    #[error("link {link} references undeclared node {node}")]
    DanglingLink { link: String, node: String },
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("unknown link {0}")]
    UnknownLink(String),
    #[error("node {0} needs a MAC address")]
    MissingMac(String),
    #[error("node {0} has a malformed MAC address")]
    BadMac(String),
    #[error("node {0} is not a UE")]
    NotAUe(String),
    #[error("UE {0} is not attached to an RU or DU")]
    NotAttached(String),
    #[error("{caller} has no contact entry for {callee}")]
    NotInContacts { caller: String, callee: String },
    #[error("no direct link between {0} and {1}")]
    NoDirectLink(String, String),
    #[error("config has no scenario section")]
    NoScenario,
    #[error("simulation already ran")]
    AlreadyRun,
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

const CTRL_SYNC: u8 = 1;
const CTRL_REGISTERED: u8 = 2;
const CTRL_PAGE: u8 = 3;
const CTRL_PAGE_ACK: u8 = 4;

struct Link {
    id: String,
    ends: [usize; 2],
    latency: u64,
    down_from: Option<u64>,
}

impl Link {
    fn is_up(&self, tick: u64) -> bool {
        self.down_from.is_none_or(|t| tick < t)
    }

    fn other(&self, node: usize) -> usize {
        if self.ends[0] == node {
            self.ends[1]
        } else {
            self.ends[0]
        }
    }
}

struct UeState {
    endpoint: Endpoint,
    ledger: Ledger,
    contacts: Vec<BcAddress>,
    uplink: Option<usize>,
    serving_du: Option<BcAddress>,
    /// Link used for handshake frames; the uplink unless running D2D.
    outbound: Option<usize>,
    direct_peer_mac: Option<Mac48>,
    peer: Option<BcAddress>,
    handshake: Option<HandshakeState>,
    session: Option<SessionKey>,
}

impl UeState {
    fn mac(&self) -> Mac48 {
        self.endpoint
            .identity()
            .physical_address()
            .mac()
            .expect("UE identities use MAC addresses")
    }

    fn bc(&self) -> BcAddress {
        self.endpoint.identity().bc_address()
    }
}

struct DuState {
    identity: Identity,
    ledger: Ledger,
    switch: BeSwitch,
    /// Port n is `ports[n - 1]`.
    ports: Vec<usize>,
}

impl DuState {
    fn port_of(&self, link: usize) -> PortId {
        self.ports
            .iter()
            .position(|l| *l == link)
            .expect("link attached to DU") as PortId
            + 1
    }

    fn link_of(&self, port: PortId) -> usize {
        self.ports[port as usize - 1]
    }

    fn mac(&self) -> Mac48 {
        self.identity
            .physical_address()
            .mac()
            .expect("DU identities use MAC addresses")
    }
}

enum NodeState {
    Ue(Box<UeState>),
    Du(Box<DuState>),
    Ru,
    Bridge,
    Passive,
}

struct Node {
    id: String,
    links: Vec<usize>,
    state: NodeState,
}

enum Step {
    Register { frame: BeMacFrame, port: PortId },
    Committed { frame: BeMacFrame, port: PortId },
    Lookup { frame: BeMacFrame },
}

enum EventKind {
    LinkDown(usize),
    Start,
    Hop {
        link: usize,
        from: usize,
        to: usize,
        label: &'static str,
        bytes: Vec<u8>,
    },
    Internal {
        node: usize,
        label: &'static str,
        step: Step,
    },
}

struct Event {
    tick: u64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        (self.tick, self.seq) == (other.tick, other.seq)
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.tick, self.seq).cmp(&(other.tick, other.seq))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Emergency,
    D2d,
}

pub struct Simulation {
    config: SimConfig,
    nodes: Vec<Node>,
    links: Vec<Link>,
    index: HashMap<String, usize>,
    queue: BinaryHeap<Reverse<Event>>,
    seq: u64,
    now: u64,
    rng: ChaCha20Rng,
    trace: Trace,
    frames: Vec<String>,
    finished: bool,
    ran: bool,
    mode: Mode,
    parties: (usize, usize),
    tamper: Option<TamperConfig>,
}

fn identity_seed(seed: u64, node_id: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"beran-sim-identity");
    h.update(seed.to_be_bytes());
    h.update(node_id.as_bytes());
    h.finalize().into()
}

fn rejection_label(r: RegisterRejection) -> &'static str {
    match r {
        RegisterRejection::NotRegistryFrame => "not-registry-frame",
        RegisterRejection::Ledger(BindingRejection::AddressKeyMismatch) => "address-key-mismatch",
        RegisterRejection::Ledger(BindingRejection::BadSignature) => "bad-signature",
        RegisterRejection::Ledger(BindingRejection::StaleSequence) => "stale-sequence",
    }
}

fn encode_chain(chain: &[Block]) -> Vec<u8> {
    let mut w = Writer::new();
    w.u8(CTRL_SYNC).u32(chain.len() as u32);
    for block in chain {
        w.long_bytes(&block.to_bytes());
    }
    w.finish()
}

fn decode_chain(payload: &[u8]) -> Option<Vec<Block>> {
    let mut r = Reader::new(payload.get(1..)?);
    let n = r.u32().ok()?;
    let mut chain = Vec::new();
    for _ in 0..n {
        chain.push(Block::from_bytes(r.long_bytes().ok()?).ok()?);
    }
    r.finish().ok()?;
    Some(chain)
}

impl Simulation {
    /// Builds every node with its identity and a genesis ledger.
    pub fn build(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let suite = CryptoSuite::new(config.suite);
        let index: HashMap<String, usize> = config
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();

        let mut links = Vec::new();
        let mut node_links = vec![Vec::new(); config.nodes.len()];
        for (i, l) in config.links.iter().enumerate() {
            let ends = [index[&l.a], index[&l.b]];
            node_links[ends[0]].push(i);
            node_links[ends[1]].push(i);
            links.push(Link {
                id: l.id.clone(),
                ends,
                latency: l.latency,
                down_from: None,
            });
        }
        let role = |i: usize| config.nodes[i].role;

        let mut identities: Vec<Option<Identity>> = Vec::with_capacity(config.nodes.len());
        for (i, n) in config.nodes.iter().enumerate() {
            let identity = match n.role {
                NodeRole::Ue | NodeRole::Du => {
                    let mac = match &n.mac {
                        Some(m) => parse_mac(m).ok_or_else(|| SimError::BadMac(n.id.clone()))?,
                        None => [0x02, 0, 0, 0xff, (i >> 8) as u8, i as u8],
                    };
                    let kp = generate_keypair(suite, Some(identity_seed(config.seed, &n.id)))?;
                    Some(Identity::new(kp, PhysicalAddress::Mac48(mac)))
                }
                _ => None,
            };
            identities.push(identity);
        }

        let mut genesis = GenesisConfig {
            initial_balance: config.initial_balance,
            ..GenesisConfig::default()
        };
        for (i, n) in config.nodes.iter().enumerate() {
            if n.role != NodeRole::Ue {
                continue;
            }
            let id = identities[i].as_ref().expect("UEs have identities");
            genesis.allowlist.push(id.bc_address());
            if n.provisioned {
                genesis.bindings.push(BindingRecord::signed(
                    id.keypair(),
                    id.physical_address(),
                    1,
                    0,
                )?);
            }
        }
        let ledger = Ledger::new(genesis).expect("genesis built from valid records");

        let first_link_to = |node: usize, roles: &[NodeRole]| {
            node_links[node]
                .iter()
                .copied()
                .find(|l| roles.contains(&role(links[*l].other(node))))
        };
        // DU that terminates each UE's uplink, and the DU-side link towards it
        let mut attachment: Vec<Option<(usize, usize)>> = vec![None; config.nodes.len()];
        let mut uplinks: Vec<Option<usize>> = vec![None; config.nodes.len()];
        for (i, n) in config.nodes.iter().enumerate() {
            if n.role != NodeRole::Ue {
                continue;
            }
            let Some(up) = first_link_to(i, &[NodeRole::Ru, NodeRole::Du]) else {
                continue;
            };
            uplinks[i] = Some(up);
            let next = links[up].other(i);
            attachment[i] = if role(next) == NodeRole::Du {
                Some((next, up))
            } else {
                first_link_to(next, &[NodeRole::Du]).map(|l| (links[l].other(next), l))
            };
        }

        let mut nodes = Vec::with_capacity(config.nodes.len());
        for (i, n) in config.nodes.iter().enumerate() {
            let state = match n.role {
                NodeRole::Ue => {
                    let identity = identities[i].clone().expect("UE identity");
                    let contacts = n
                        .contacts
                        .iter()
                        .filter_map(|c| identities[index[c]].as_ref().map(|id| id.bc_address()))
                        .collect();
                    NodeState::Ue(Box::new(UeState {
                        endpoint: Endpoint::new(identity),
                        ledger: ledger.clone(),
                        contacts,
                        uplink: uplinks[i],
                        serving_du: attachment[i].map(|(du, _)| {
                            identities[du].as_ref().expect("DU identity").bc_address()
                        }),
                        outbound: uplinks[i],
                        direct_peer_mac: None,
                        peer: None,
                        handshake: None,
                        session: None,
                    }))
                }
                NodeRole::Du => {
                    let mut switch = match config.minimum_balance {
                        Some(min) => BeSwitch::with_access_policy(min),
                        None => BeSwitch::new(),
                    };
                    let ports = node_links[i].clone();
                    for (p, l) in ports.iter().enumerate() {
                        if role(links[*l].other(i)) == NodeRole::Bridge {
                            switch.add_bridge_port(p as PortId + 1);
                        }
                    }
                    for (ue, cfg) in config.nodes.iter().enumerate() {
                        if let (true, Some((du, link))) = (cfg.provisioned, attachment[ue]) {
                            if du == i {
                                let port = ports.iter().position(|x| *x == link).expect("DU link")
                                    as PortId
                                    + 1;
                                let bc = identities[ue].as_ref().expect("UE identity").bc_address();
                                switch.install(&ledger, bc, port, 0);
                            }
                        }
                    }
                    NodeState::Du(Box::new(DuState {
                        identity: identities[i].clone().expect("DU identity"),
                        ledger: ledger.clone(),
                        switch,
                        ports,
                    }))
                }
                NodeRole::Ru => NodeState::Ru,
                NodeRole::Bridge => NodeState::Bridge,
                _ => NodeState::Passive,
            };
            nodes.push(Node {
                id: n.id.clone(),
                links: node_links[i].clone(),
                state,
            });
        }

        let mut sim = Self {
            rng: ChaCha20Rng::seed_from_u64(config.seed),
            tamper: config.scenario.as_ref().and_then(|s| s.tamper.clone()),
            config,
            nodes,
            links,
            index,
            queue: BinaryHeap::new(),
            seq: 0,
            now: 0,
            trace: Trace::default(),
            frames: Vec::new(),
            finished: false,
            ran: false,
            mode: Mode::Emergency,
            parties: (0, 0),
        };
        for f in sim.config.failures.clone() {
            sim.inject_link_failure(&f.link, f.at_tick)?;
        }
        Ok(sim)
    }

    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        Self::build(SimConfig::from_toml(text)?)
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Marks a link Down from `at_tick` on. Repeating a failure keeps the
    /// earliest tick.
    pub fn inject_link_failure(&mut self, link_id: &str, at_tick: u64) -> Result<(), SimError> {
        let link = self
            .links
            .iter_mut()
            .find(|l| l.id == link_id)
            .ok_or_else(|| SimError::UnknownLink(link_id.to_owned()))?;
        link.down_from = Some(link.down_from.map_or(at_tick, |t| t.min(at_tick)));
        Ok(())
    }

    /// Runs whatever the config's scenario section asks for.
    pub fn run_configured(&mut self) -> Result<Trace, SimError> {
        let s = self.config.scenario.clone().ok_or(SimError::NoScenario)?;
        match s.kind {
            ScenarioKind::Emergency => self.run_emergency_scenario(&s.caller, &s.callee),
            ScenarioKind::D2d => self.run_d2d_handshake(&s.caller, &s.callee),
        }
    }

    fn ue_index(&self, id: &str) -> Result<usize, SimError> {
        let i = *self
            .index
            .get(id)
            .ok_or_else(|| SimError::UnknownNode(id.to_owned()))?;
        match self.nodes[i].state {
            NodeState::Ue(_) => Ok(i),
            _ => Err(SimError::NotAUe(id.to_owned())),
        }
    }

    fn ue(&mut self, i: usize) -> &mut UeState {
        match &mut self.nodes[i].state {
            NodeState::Ue(ue) => ue,
            _ => unreachable!("checked to be a UE"),
        }
    }

    fn begin(
        &mut self,
        caller: &str,
        callee: &str,
        mode: Mode,
    ) -> Result<(usize, usize), SimError> {
        if self.ran {
            return Err(SimError::AlreadyRun);
        }
        let (a, b) = (self.ue_index(caller)?, self.ue_index(callee)?);
        let callee_bc = self.ue(b).bc();
        if !self.ue(a).contacts.contains(&callee_bc) {
            return Err(SimError::NotInContacts {
                caller: caller.to_owned(),
                callee: callee.to_owned(),
            });
        }
        self.ue(a).peer = Some(callee_bc);
        self.ran = true;
        self.mode = mode;
        self.parties = (a, b);
        Ok((a, b))
    }

    /// Full Fig.-5-style flow: attach and registration, connect request and
    /// paging through the switch, then the three-message handshake.
    pub fn run_emergency_scenario(
        &mut self,
        caller: &str,
        callee: &str,
    ) -> Result<Trace, SimError> {
        let (a, b) = self.begin(caller, callee, Mode::Emergency)?;
        for i in [a, b] {
            if self.ue(i).uplink.is_none() {
                return Err(SimError::NotAttached(self.nodes[i].id.clone()));
            }
        }
        self.run_loop();
        Ok(self.trace.clone())
    }

    /// Handshake over a direct UE-to-UE link with no switch involved.
    pub fn run_d2d_handshake(&mut self, a_id: &str, b_id: &str) -> Result<Trace, SimError> {
        let (a, b) = (self.ue_index(a_id)?, self.ue_index(b_id)?);
        let direct = self
            .links
            .iter()
            .position(|l| l.ends == [a, b] || l.ends == [b, a])
            .ok_or_else(|| SimError::NoDirectLink(a_id.to_owned(), b_id.to_owned()))?;
        self.begin(a_id, b_id, Mode::D2d)?;
        let (mac_a, mac_b) = (self.ue(a).mac(), self.ue(b).mac());
        for (i, peer_mac) in [(a, mac_b), (b, mac_a)] {
            let ue = self.ue(i);
            ue.outbound = Some(direct);
            ue.direct_peer_mac = Some(peer_mac);
        }
        self.run_loop();
        Ok(self.trace.clone())
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    /// Every frame received by any node, as `tick port hex` lines.
    pub fn frame_dump(&self) -> String {
        self.frames.iter().map(|l| format!("{l}\n")).collect()
    }

    pub fn session_key(&self, node_id: &str) -> Option<&SessionKey> {
        match &self.nodes[*self.index.get(node_id)?].state {
            NodeState::Ue(ue) => ue.session.as_ref(),
            _ => None,
        }
    }

    pub fn bc_address(&self, node_id: &str) -> Option<BcAddress> {
        match &self.nodes[*self.index.get(node_id)?].state {
            NodeState::Ue(ue) => Some(ue.bc()),
            NodeState::Du(du) => Some(du.identity.bc_address()),
            _ => None,
        }
    }

    /// Ledger copy held by a UE or DU.
    pub fn ledger(&self, node_id: &str) -> Option<&Ledger> {
        match &self.nodes[*self.index.get(node_id)?].state {
            NodeState::Ue(ue) => Some(&ue.ledger),
            NodeState::Du(du) => Some(&du.ledger),
            _ => None,
        }
    }

    fn schedule(&mut self, tick: u64, kind: EventKind) {
        self.seq += 1;
        self.queue.push(Reverse(Event {
            tick,
            seq: self.seq,
            kind,
        }));
    }

    fn run_loop(&mut self) {
        for (i, l) in self.links.iter().enumerate() {
            if let Some(t) = l.down_from {
                self.seq += 1;
                self.queue.push(Reverse(Event {
                    tick: t,
                    seq: self.seq,
                    kind: EventKind::LinkDown(i),
                }));
            }
        }
        self.schedule(0, EventKind::Start);
        let timeout = self.config.timeout_ticks;
        let mut last_progress = 0;
        while let Some(Reverse(event)) = self.queue.pop() {
            if event.tick > last_progress + timeout {
                break;
            }
            let is_progress = !matches!(event.kind, EventKind::LinkDown(_));
            self.now = event.tick;
            if is_progress {
                last_progress = event.tick;
            }
            self.dispatch(event.kind);
            if self.finished {
                return;
            }
        }
        self.now = last_progress + timeout;
        self.finish("failed:timeout".to_owned());
    }

    fn finish(&mut self, outcome: String) {
        let (a, b) = self.parties;
        let (a, b) = (self.nodes[a].id.clone(), self.nodes[b].id.clone());
        self.trace.push(self.now, OUTCOME_LABEL, &a, &b, outcome);
        self.finished = true;
        self.queue.clear();
    }

    fn fail(&mut self, label: &str, node: usize, reason: &str) {
        let id = self.nodes[node].id.clone();
        self.trace
            .push(self.now, label, &id, "-", format!("fail:{reason}"));
        self.finish(format!("failed:{reason}"));
    }

    fn send(&mut self, from: usize, link: usize, label: &'static str, frame: &BeMacFrame) {
        self.send_raw(from, link, label, frame.to_bytes());
    }

    fn send_raw(&mut self, from: usize, link: usize, label: &'static str, mut bytes: Vec<u8>) {
        if let Some(t) = self.tamper.as_ref().filter(|t| t.label == label) {
            let start = payload_offset(&bytes)
                .filter(|o| *o < bytes.len())
                .unwrap_or(0);
            let bit = t.bit % ((bytes.len() - start) * 8);
            bytes[start + bit / 8] ^= 0x80 >> (bit % 8);
            self.tamper = None;
        }
        let l = &self.links[link];
        let to = l.other(from);
        if !l.is_up(self.now) {
            let (f, t) = (self.nodes[from].id.clone(), self.nodes[to].id.clone());
            self.trace.push(self.now, label, &f, &t, "drop:link-down");
            return;
        }
        let tick = self.now + l.latency;
        self.schedule(
            tick,
            EventKind::Hop {
                link,
                from,
                to,
                label,
                bytes,
            },
        );
    }

    fn dispatch(&mut self, kind: EventKind) {
        match kind {
            EventKind::LinkDown(l) => {
                let link = &self.links[l];
                let (a, b) = (
                    self.nodes[link.ends[0]].id.clone(),
                    self.nodes[link.ends[1]].id.clone(),
                );
                self.trace.push(self.now, "link-failure", &a, &b, "down");
            }
            EventKind::Start => self.start(),
            EventKind::Hop {
                link,
                from,
                to,
                label,
                bytes,
            } => {
                let (f, t) = (self.nodes[from].id.clone(), self.nodes[to].id.clone());
                if !self.links[link].is_up(self.now) {
                    self.trace.push(self.now, label, &f, &t, "drop:link-down");
                    return;
                }
                self.trace.push(self.now, label, &f, &t, "ok");
                let port = self.nodes[to]
                    .links
                    .iter()
                    .position(|x| *x == link)
                    .expect("attached") as u16
                    + 1;
                self.frames.push(hexdump_line(self.now, port, &bytes));
                let state = std::mem::replace(&mut self.nodes[to].state, NodeState::Passive);
                let state = match state {
                    NodeState::Ue(mut ue) => {
                        self.ue_receive(to, &mut ue, label, &bytes);
                        NodeState::Ue(ue)
                    }
                    NodeState::Du(mut du) => {
                        self.du_receive(to, &mut du, link, label, &bytes);
                        NodeState::Du(du)
                    }
                    NodeState::Ru => {
                        self.ru_relay(to, link, label, bytes);
                        NodeState::Ru
                    }
                    NodeState::Bridge => {
                        if let Some(out) = self.nodes[to].links.iter().copied().find(|l| *l != link)
                        {
                            self.send_raw(to, out, label, bytes);
                        }
                        NodeState::Bridge
                    }
                    NodeState::Passive => NodeState::Passive,
                };
                self.nodes[to].state = state;
            }
            EventKind::Internal { node, label, step } => {
                let state = std::mem::replace(&mut self.nodes[node].state, NodeState::Passive);
                if let NodeState::Du(mut du) = state {
                    self.du_step(node, &mut du, label, step);
                    self.nodes[node].state = NodeState::Du(du);
                } else {
                    self.nodes[node].state = state;
                }
            }
        }
    }

    fn start(&mut self) {
        let (a, _) = self.parties;
        match self.mode {
            Mode::Emergency => {
                let now = self.now;
                let ue = self.ue(a);
                let identity = ue.endpoint.identity().clone();
                let seq = ue.ledger.next_sequence(&identity.bc_address());
                let (uplink, du) = (ue.uplink.expect("checked"), ue.serving_du);
                let Some(du) = du else {
                    return self.fail("msg1", a, "no-serving-du");
                };
                let record = BindingRecord::signed(
                    identity.keypair(),
                    identity.physical_address(),
                    seq,
                    now,
                )
                .expect("identity keys sign");
                let frame = BeMacFrame::registry(&record, du).expect("MAC binding");
                self.send(a, uplink, "msg1", &frame);
            }
            Mode::D2d => {
                let NodeState::Ue(mut ue) =
                    std::mem::replace(&mut self.nodes[a].state, NodeState::Passive)
                else {
                    unreachable!("checked to be a UE")
                };
                self.initiate_handshake(a, &mut ue);
                self.nodes[a].state = NodeState::Ue(ue);
            }
        }
    }

    fn initiate_handshake(&mut self, node: usize, ue: &mut UeState) {
        let peer = ue.peer.expect("caller has a peer");
        ue.endpoint.set_now(self.now);
        let (state, request) = ue.endpoint.initiate(peer, &mut self.rng);
        ue.handshake = Some(state);
        self.ue_send(
            node,
            ue,
            "hs1",
            FrameKind::Data,
            peer,
            Message::Request(request).encode_concrete(),
        );
    }

    fn ru_relay(&mut self, ru: usize, link: usize, label: &'static str, bytes: Vec<u8>) {
        let links = self.nodes[ru].links.clone();
        let from_du = matches!(
            self.nodes[self.links[link].other(ru)].state,
            NodeState::Du(_)
        );
        let out = if from_du {
            let mac = peek_destination_mac(&bytes);
            links
                .iter()
                .copied()
                .find(|l| match &self.nodes[self.links[*l].other(ru)].state {
                    NodeState::Ue(ue) => Some(ue.mac()) == mac,
                    _ => false,
                })
        } else {
            links
                .iter()
                .copied()
                .find(|l| matches!(self.nodes[self.links[*l].other(ru)].state, NodeState::Du(_)))
        };
        match out {
            Some(out) => self.send_raw(ru, out, label, bytes),
            None => self.fail(label, ru, "no-route"),
        }
    }

    fn du_receive(
        &mut self,
        node: usize,
        du: &mut DuState,
        link: usize,
        label: &'static str,
        bytes: &[u8],
    ) {
        let port = du.port_of(link);
        let frame = match BeMacFrame::parse(bytes) {
            Ok(f) => f,
            Err(_) => return self.fail(label, node, "malformed-frame"),
        };
        let next = self.now + 1;
        match frame.kind {
            FrameKind::Registry => self.schedule(
                next,
                EventKind::Internal {
                    node,
                    label: "msg2",
                    step: Step::Register { frame, port },
                },
            ),
            FrameKind::Connect => self.schedule(
                next,
                EventKind::Internal {
                    node,
                    label: "msg7",
                    step: Step::Lookup { frame },
                },
            ),
            FrameKind::Data | FrameKind::Control => self.du_forward(node, du, frame, label),
        }
    }

    fn du_forward(
        &mut self,
        node: usize,
        du: &mut DuState,
        mut frame: BeMacFrame,
        label: &'static str,
    ) {
        match du.switch.forward(&du.ledger, &mut frame, self.now) {
            ForwardDecision::Deliver(port) => {
                let out_label = match (frame.kind, frame.payload.first()) {
                    (FrameKind::Control, Some(&CTRL_PAGE_ACK)) => "msg10",
                    _ => label,
                };
                self.send(node, du.link_of(port), out_label, &frame);
            }
            ForwardDecision::Bridge(port) => self.send(node, du.link_of(port), label, &frame),
            ForwardDecision::Drop(reason) => self.fail(label, node, reason.label()),
        }
    }

    fn du_step(&mut self, node: usize, du: &mut DuState, label: &'static str, step: Step) {
        let id = self.nodes[node].id.clone();
        let (sw, bc) = (format!("{id}.switch"), format!("{id}.bc"));
        let next = self.now + 1;
        match step {
            Step::Register { frame, port } => {
                if let Err(r) = du.switch.register_from_frame(&mut du.ledger, &frame, port) {
                    self.trace.push(
                        self.now,
                        label,
                        &sw,
                        &bc,
                        format!("fail:{}", rejection_label(r)),
                    );
                    return self.finish(format!("failed:{}", rejection_label(r)));
                }
                self.trace.push(self.now, label, &sw, &bc, "ok");
                du.ledger.commit_block();
                let mut sync = BeMacFrame::new(
                    FrameKind::Control,
                    du.identity.bc_address(),
                    du.mac(),
                    frame.source_bc_address,
                    encode_chain(du.ledger.chain()),
                );
                sync.destination_mac = Some(frame.source_mac);
                self.send(node, du.link_of(port), "msg3", &sync);
                self.schedule(
                    next,
                    EventKind::Internal {
                        node,
                        label: "msg4",
                        step: Step::Committed { frame, port },
                    },
                );
            }
            Step::Committed { frame, port } => {
                du.switch.apply_commit(&du.ledger, self.now);
                let registered = du.switch.table().get(&frame.source_bc_address).is_some();
                if !registered {
                    self.trace
                        .push(self.now, label, &bc, &sw, "fail:not-committed");
                    return self.finish("failed:not-committed".to_owned());
                }
                self.trace.push(self.now, label, &bc, &sw, "ok");
                let mut note = BeMacFrame::new(
                    FrameKind::Control,
                    du.identity.bc_address(),
                    du.mac(),
                    frame.source_bc_address,
                    vec![CTRL_REGISTERED],
                );
                note.destination_mac = Some(frame.source_mac);
                self.send(node, du.link_of(port), "msg5", &note);
            }
            Step::Lookup { mut frame } => match du.switch.forward(&du.ledger, &mut frame, self.now)
            {
                ForwardDecision::Deliver(port) => {
                    self.trace.push(self.now, label, &sw, &bc, "ok");
                    frame.kind = FrameKind::Control;
                    frame.payload = vec![CTRL_PAGE];
                    self.send(node, du.link_of(port), "msg8", &frame);
                }
                ForwardDecision::Bridge(port) => {
                    self.trace.push(self.now, label, &sw, &bc, "bridge");
                    self.send(node, du.link_of(port), label, &frame);
                }
                ForwardDecision::Drop(reason) => {
                    self.trace.push(
                        self.now,
                        label,
                        &sw,
                        &bc,
                        format!("fail:{}", reason.label()),
                    );
                    self.finish(format!("failed:{}", reason.label()));
                }
            },
        }
    }

    fn ue_send(
        &mut self,
        node: usize,
        ue: &UeState,
        label: &'static str,
        kind: FrameKind,
        dest: BcAddress,
        payload: Vec<u8>,
    ) {
        let mut frame = BeMacFrame::new(kind, ue.bc(), ue.mac(), dest, payload);
        frame.destination_mac = ue.direct_peer_mac;
        let link = if kind == FrameKind::Data {
            ue.outbound
        } else {
            ue.uplink
        };
        match link {
            Some(link) => self.send(node, link, label, &frame),
            None => self.fail(label, node, "not-attached"),
        }
    }

    fn ue_receive(&mut self, node: usize, ue: &mut UeState, label: &'static str, bytes: &[u8]) {
        let frame = match BeMacFrame::parse(bytes) {
            Ok(f) => f,
            Err(_) => return self.fail(label, node, "malformed-frame"),
        };
        if frame.destination_bc_address != ue.bc() {
            return;
        }
        match (frame.kind, frame.payload.first().copied()) {
            (FrameKind::Control, Some(CTRL_SYNC)) => {
                if let Some(chain) = decode_chain(&frame.payload) {
                    let _ = ue.ledger.sync_from(&chain);
                }
            }
            (FrameKind::Control, Some(CTRL_REGISTERED)) => {
                if ue.ledger.lookup_by_bc(&ue.bc())
                    != Some(ue.endpoint.identity().physical_address())
                {
                    return self.fail(label, node, "not-registered");
                }
                let peer = ue.peer.expect("caller has a peer");
                self.ue_send(node, ue, "msg6", FrameKind::Connect, peer, Vec::new());
            }
            (FrameKind::Control, Some(CTRL_PAGE)) => {
                self.ue_send(
                    node,
                    ue,
                    "msg9",
                    FrameKind::Control,
                    frame.source_bc_address,
                    vec![CTRL_PAGE_ACK],
                );
            }
            (FrameKind::Control, Some(CTRL_PAGE_ACK)) => self.initiate_handshake(node, ue),
            (FrameKind::Data, _) => self.ue_handshake(node, ue, label, &frame),
            _ => {}
        }
    }

    fn ue_handshake(
        &mut self,
        node: usize,
        ue: &mut UeState,
        label: &'static str,
        frame: &BeMacFrame,
    ) {
        let message = match Message::decode_concrete(&frame.payload) {
            Ok(m) => m,
            Err(_) => return self.fail(label, node, "malformed-message"),
        };
        ue.endpoint.set_now(self.now);
        let rng = &mut self.rng;
        let result = match message {
            Message::Request(req) => {
                let peer = frame.source_bc_address;
                if !ue.contacts.contains(&peer) {
                    return self.fail(label, node, "unknown-peer");
                }
                ue.endpoint.respond(&req, peer, rng).map(|(state, resp)| {
                    ue.handshake = Some(state);
                    Some(("hs2", peer, Message::Response(resp)))
                })
            }
            Message::Response(resp) => match ue.handshake.as_mut() {
                Some(state) => ue
                    .endpoint
                    .confirm(state, &resp, rng)
                    .map(|(confirm, key)| {
                        ue.session = Some(key);
                        Some(("hs3", state.trusted_peer(), Message::Confirm(confirm)))
                    }),
                None => return self.fail(label, node, "no-handshake"),
            },
            Message::Confirm(confirm) => match ue.handshake.as_mut() {
                Some(state) => ue.endpoint.finalize(state, &confirm).map(|key| {
                    ue.session = Some(key);
                    None
                }),
                None => return self.fail(label, node, "no-handshake"),
            },
        };
        match result {
            Err(f) => self.fail(label, node, f.label()),
            Ok(Some((out_label, dest, msg))) => self.ue_send(
                node,
                ue,
                out_label,
                FrameKind::Data,
                dest,
                msg.encode_concrete(),
            ),
            Ok(None) => {
                let mine = ue.session.clone().expect("just established");
                let (a, _) = self.parties;
                let theirs = match &self.nodes[a].state {
                    NodeState::Ue(caller) => caller.session.clone(),
                    _ => None,
                };
                if theirs.is_some_and(|k| k.bits == mine.bits) {
                    self.finish(format!("established:{}", mine.fingerprint()));
                } else {
                    self.finish("failed:key-mismatch".to_owned());
                }
            }
        }
    }
}
