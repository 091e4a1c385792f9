use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::crypto::SuiteKind;

use super::SimError;

pub const DEFAULT_TIMEOUT_TICKS: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeRole {
    Ue,
    Ru,
    Du,
    BcNode,
    BeSwitch,
    Bridge,
    Cu,
    Cn,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub id: String,
    pub role: NodeRole,
    /// Colon-separated MAC; required for UEs.
    #[serde(default)]
    pub mac: Option<String>,
    /// Node ids whose BC addresses this node holds out of band.
    #[serde(default)]
    pub contacts: Vec<String>,
    /// Whether the genesis block already binds this UE.
    #[serde(default)]
    pub provisioned: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub id: String,
    pub a: String,
    pub b: String,
    #[serde(default = "default_latency")]
    pub latency: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureConfig {
    pub link: String,
    pub at_tick: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Emergency,
    D2d,
}

/// Adversary that flips one bit of the first frame carrying `label`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TamperConfig {
    pub label: String,
    /// Bit index into the frame payload, wrapped to its length.
    pub bit: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub caller: String,
    pub callee: String,
    #[serde(default)]
    pub tamper: Option<TamperConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    #[serde(default = "default_suite")]
    pub suite: SuiteKind,
    #[serde(default = "default_balance")]
    pub initial_balance: u64,
    /// Enables the switch access policy when set.
    #[serde(default)]
    pub minimum_balance: Option<u64>,
    #[serde(default = "default_timeout")]
    pub timeout_ticks: u64,
    pub nodes: Vec<NodeConfig>,
    #[serde(default)]
    pub links: Vec<LinkConfig>,
    #[serde(default)]
    pub failures: Vec<FailureConfig>,
    #[serde(default)]
    pub scenario: Option<ScenarioConfig>,
}

fn default_latency() -> u64 {
    1
}

fn default_suite() -> SuiteKind {
    SuiteKind::EllipticCurve
}

fn default_balance() -> u64 {
    100
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_TICKS
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let config: Self = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let mut ids = HashSet::new();
        for node in &self.nodes {
            if !ids.insert(node.id.as_str()) {
                return Err(SimError::DuplicateNode(node.id.clone()));
            }
            match (&node.mac, node.role) {
                (Some(mac), _) if crate::ledger::parse_mac(mac).is_none() => {
                    return Err(SimError::BadMac(node.id.clone()));
                }
                (None, NodeRole::Ue) => return Err(SimError::MissingMac(node.id.clone())),
                _ => {}
            }
        }
        for node in &self.nodes {
            if let Some(c) = node.contacts.iter().find(|c| !ids.contains(c.as_str())) {
                return Err(SimError::UnknownNode(c.clone()));
            }
        }
        let mut link_ids = HashSet::new();
        for link in &self.links {
            if !link_ids.insert(link.id.as_str()) {
                return Err(SimError::DuplicateLink(link.id.clone()));
            }
            for end in [&link.a, &link.b] {
                if !ids.contains(end.as_str()) {
                    return Err(SimError::DanglingLink {
                        link: link.id.clone(),
                        node: end.clone(),
                    });
                }
            }
        }
        if let Some(f) = self
            .failures
            .iter()
            .find(|f| !link_ids.contains(f.link.as_str()))
        {
            return Err(SimError::UnknownLink(f.link.clone()));
        }
        if let Some(s) = &self.scenario {
            for end in [&s.caller, &s.callee] {
                if !ids.contains(end.as_str()) {
                    return Err(SimError::UnknownNode(end.clone()));
                }
            }
        }
        Ok(())
    }
}
