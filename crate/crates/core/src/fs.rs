//! Forwarder selection.
//!
//! With forwarder selection on, RR slots come in triplets. After the sink's
//! reply every node knows its hop distance from the sink (`h_u`); in the
//! third slot the new source floods its own `h_u` as `h` together with the
//! slot number, and every receiver learns its distance from the source
//! (`h_d`). A node forwards the slot iff `h_u + h_d == h`, i.e. it lies on a
//! shortest sink-source path. Everyone else sleeps through that data slot.

use std::collections::{BTreeMap, BTreeSet};

use log::debug;
use serde::{Deserialize, Serialize};

use crate::config::Mode;
use crate::glossy::FloodOutcome;
use crate::lwb::{NodeState, SlotIndex, World};
use crate::topology::NodeId;

/// Third-slot announcement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnouncePacket {
    pub source: NodeId,
    /// The source's hop distance from the sink (≥ 1).
    pub h: u32,
    pub slot: SlotIndex,
}

impl AnnouncePacket {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.source.0.to_be_bytes().to_vec();
        out.push(self.h.min(255) as u8);
        out.extend_from_slice(&(self.slot as u16).to_be_bytes());
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ForwarderTable {
    /// Data slots this node relays.
    pub slots: BTreeSet<SlotIndex>,
    /// `h_d` observed for each announce this node heard.
    pub h_d: BTreeMap<SlotIndex, u32>,
}

impl ForwarderTable {
    pub fn forwards(&self, slot: SlotIndex) -> bool {
        self.slots.contains(&slot)
    }
}

/// Records the node's hop distance from the sink from a reply flood.
/// Nodes that missed the reply keep whatever they had before.
pub fn record_hu(node: &mut NodeState, reply_outcome: &FloodOutcome) {
    if let Some(hop) = reply_outcome.hop(node.id) {
        node.h_u = Some(hop);
    }
}

/// The announce a freshly assigned source sends, or `None` when it has no
/// usable `h_u` (it missed its own reply).
pub fn build_announce(source: &NodeState, assigned_slot: SlotIndex) -> Option<AnnouncePacket> {
    match source.h_u {
        Some(h) if h >= 1 => Some(AnnouncePacket { source: source.id, h, slot: assigned_slot }),
        _ => None,
    }
}

/// Applies an announce at one node. Returns whether the slot joined the
/// node's forwarder set. Nodes without `h_u`, or that missed the announce,
/// stay non-forwarders.
pub fn apply_announce(node: &mut NodeState, announce: &AnnouncePacket, announce_outcome: &FloodOutcome) -> bool {
    let Some(h_d) = announce_outcome.hop(node.id) else {
        debug!("node {} missed announce for slot {}", node.id, announce.slot);
        return false;
    };
    node.forwarders.h_d.insert(announce.slot, h_d);
    let Some(h_u) = node.h_u else {
        debug!("node {} has no h_u for slot {}", node.id, announce.slot);
        return false;
    };
    if h_u + h_d == announce.h {
        node.forwarders.slots.insert(announce.slot);
        true
    } else {
        false
    }
}

/// Nodes that take part in data slot `slot` of the current round. Only
/// nodes that heard this round's sync are eligible. In FS-LWB mode the set
/// shrinks to the slot's forwarders plus its owner and the sink, unless the
/// slot was never announced.
pub fn data_participants(world: &World, slot: SlotIndex) -> BTreeSet<NodeId> {
    let active = world.active_nodes();
    if world.mode() == Mode::Lwb || !world.schedule.announced.contains_key(&slot) {
        return active;
    }
    let owner = world.schedule.owner(slot);
    let sink = world.config.sink_node_id;
    active
        .into_iter()
        .filter(|&n| n == sink || Some(n) == owner || world.nodes[&n].forwarders.forwards(slot))
        .collect()
}

/// Forwarder-set dump entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForwarderRecord {
    pub slot: SlotIndex,
    pub owner: NodeId,
    /// Announced hop distance; absent when the slot was never announced.
    pub h: Option<u32>,
    pub forwarders: Vec<NodeId>,
}

/// Forwarder sets of every assigned slot, independent of who is synced
/// right now. Unannounced slots list every node.
pub fn forwarder_sets(world: &World) -> Vec<ForwarderRecord> {
    let sink = world.config.sink_node_id;
    world
        .schedule
        .owners()
        .map(|(slot, owner)| match world.schedule.announced.get(&slot) {
            Some(announce) => ForwarderRecord {
                slot,
                owner,
                h: Some(announce.h),
                forwarders: world
                    .nodes
                    .values()
                    .filter(|n| n.id == sink || n.id == owner || n.forwarders.forwards(slot))
                    .map(|n| n.id)
                    .collect(),
            },
            None => ForwarderRecord {
                slot,
                owner,
                h: None,
                forwarders: world.topology.nodes().collect(),
            },
        })
        .collect()
}
