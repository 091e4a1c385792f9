//! Layer-2 switch that forwards by BC address using bindings from the ledger.

mod frame;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::crypto::BcAddress;
use crate::ledger::{Access, BindingRejection, Ledger, Mac48, PhysicalAddress};

pub use frame::{
    hexdump_line, payload_offset, peek_destination_mac, BeMacFrame, FrameKind, MalformedFrame,
    RegistryExtension, MIN_FRAME_LEN,
};

pub type PortId = u16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwitchEntry {
    pub mac: Mac48,
    pub port: PortId,
    pub last_seen: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RegisterRejection {
    #[error("not a registry frame")]
    NotRegistryFrame,
    #[error(transparent)]
    Ledger(#[from] BindingRejection),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    UnknownDestination,
    AccessDenied,
    /// Frame already crossed a bridge and its destination is not local.
    LoopPrevented,
    /// Registry frames terminate at the switch.
    NotForwardable,
}

impl DropReason {
    pub fn label(self) -> &'static str {
        match self {
            DropReason::UnknownDestination => "unknown-destination",
            DropReason::AccessDenied => "access-denied",
            DropReason::LoopPrevented => "loop-prevented",
            DropReason::NotForwardable => "not-forwardable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardDecision {
    Deliver(PortId),
    Bridge(PortId),
    Drop(DropReason),
}

#[derive(Debug, Clone, Default)]
pub struct SwitchTable {
    entries: BTreeMap<BcAddress, SwitchEntry>,
    bridge_ports: Vec<PortId>,
}

impl SwitchTable {
    pub fn get(&self, addr: &BcAddress) -> Option<&SwitchEntry> {
        self.entries.get(addr)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&BcAddress, &SwitchEntry)> {
        self.entries.iter()
    }

    pub fn bridge_ports(&self) -> &[PortId] {
        &self.bridge_ports
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// A BE-switch. It owns only the forwarding table; the ledger belongs to
/// the co-located BC node and is passed in.
#[derive(Debug, Clone, Default)]
pub struct BeSwitch {
    table: SwitchTable,
    /// Registrations accepted by the BC node but not yet committed.
    pending: BTreeMap<BcAddress, (Mac48, PortId)>,
    /// When set, sources must hold at least this balance to be forwarded.
    minimum_balance: Option<u64>,
}

impl BeSwitch {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_access_policy(minimum_balance: u64) -> Self {
        Self {
            minimum_balance: Some(minimum_balance),
            ..Self::default()
        }
    }

    pub fn add_bridge_port(&mut self, port: PortId) {
        if !self.table.bridge_ports.contains(&port) {
            self.table.bridge_ports.push(port);
        }
    }

    pub fn table(&self) -> &SwitchTable {
        &self.table
    }

    /// Hands the frame's binding to the BC node. The table entry appears
    /// only after the next commit is applied with [`BeSwitch::apply_commit`].
    pub fn register_from_frame(
        &mut self,
        ledger: &mut Ledger,
        frame: &BeMacFrame,
        ingress: PortId,
    ) -> Result<(), RegisterRejection> {
        let record = match frame.kind {
            FrameKind::Registry => frame
                .binding_record()
                .ok_or(RegisterRejection::NotRegistryFrame)?,
            _ => return Err(RegisterRejection::NotRegistryFrame),
        };
        ledger.submit_binding(record)?;
        self.pending
            .insert(frame.source_bc_address, (frame.source_mac, ingress));
        Ok(())
    }

    /// Promotes pending registrations that the ledger now holds and drops
    /// entries the ledger no longer agrees with.
    pub fn apply_commit(&mut self, ledger: &Ledger, tick: u64) {
        let pending = std::mem::take(&mut self.pending);
        for (addr, (mac, port)) in pending {
            if ledger.lookup_by_bc(&addr) == Some(PhysicalAddress::Mac48(mac)) {
                self.table.entries.insert(
                    addr,
                    SwitchEntry {
                        mac,
                        port,
                        last_seen: tick,
                    },
                );
            } else if ledger.pending().iter().any(|r| r.bc_address == addr) {
                self.pending.insert(addr, (mac, port));
            }
        }
        self.table
            .entries
            .retain(|addr, e| ledger.lookup_by_bc(addr) == Some(PhysicalAddress::Mac48(e.mac)));
    }

    /// Adds an entry for a binding that is already committed, such as one
    /// provisioned at genesis. Returns false if the ledger disagrees.
    pub fn install(&mut self, ledger: &Ledger, addr: BcAddress, port: PortId, tick: u64) -> bool {
        match ledger.lookup_by_bc(&addr) {
            Some(PhysicalAddress::Mac48(mac)) => {
                self.table.entries.insert(
                    addr,
                    SwitchEntry {
                        mac,
                        port,
                        last_seen: tick,
                    },
                );
                true
            }
            _ => false,
        }
    }

    fn local_port(&self, ledger: &Ledger, frame: &BeMacFrame) -> Option<SwitchEntry> {
        let agrees = |addr: &BcAddress, e: &SwitchEntry| {
            ledger.lookup_by_bc(addr) == Some(PhysicalAddress::Mac48(e.mac))
        };
        if let Some(e) = self.table.entries.get(&frame.destination_bc_address) {
            if agrees(&frame.destination_bc_address, e) {
                return Some(*e);
            }
        }
        let mac = frame.destination_mac?;
        self.table
            .entries
            .iter()
            .find(|(addr, e)| e.mac == mac && agrees(addr, e))
            .map(|(_, e)| *e)
    }

    /// Decides where a frame goes. On delivery the destination MAC is filled
    /// in; on bridging the frame is marked as having crossed a bridge.
    pub fn forward(
        &mut self,
        ledger: &Ledger,
        frame: &mut BeMacFrame,
        tick: u64,
    ) -> ForwardDecision {
        if frame.kind == FrameKind::Registry {
            return ForwardDecision::Drop(DropReason::NotForwardable);
        }
        if let Some(min) = self.minimum_balance {
            if ledger.check_access(&frame.source_bc_address, min) == Access::Denied {
                return ForwardDecision::Drop(DropReason::AccessDenied);
            }
        }
        if let Some(e) = self.table.entries.get_mut(&frame.source_bc_address) {
            if e.mac == frame.source_mac {
                e.last_seen = tick;
            }
        }
        if let Some(entry) = self.local_port(ledger, frame) {
            frame.destination_mac = Some(entry.mac);
            return ForwardDecision::Deliver(entry.port);
        }
        match self.table.bridge_ports.first() {
            Some(_) if frame.bridged => ForwardDecision::Drop(DropReason::LoopPrevented),
            Some(&port) => {
                frame.bridged = true;
                ForwardDecision::Bridge(port)
            }
            None => ForwardDecision::Drop(DropReason::UnknownDestination),
        }
    }
}
