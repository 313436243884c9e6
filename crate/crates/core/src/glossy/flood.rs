use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use thiserror::Error;

use super::{slot_radio_cost, SlotRole};
use crate::time::Micros;
use crate::topology::{NodeId, Topology};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FloodError {
    #[error("flood initiator {0} is not part of the topology")]
    UnknownInitiator(NodeId),
    #[error("payload of {len} bytes exceeds MAX_PAYLOAD_LEN {max}")]
    PayloadTooLarge { len: usize, max: usize },
    #[error("loss probability {0} outside [0, 1)")]
    InvalidLossProbability(f64),
}

/// A packet as the initiator first transmits it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FloodPacket {
    pub initiator: NodeId,
    /// Counter carried by the initiator's own transmission. Each relay
    /// increments it, so its value at reception is the receiver's hop count.
    pub relay_counter: u32,
    pub payload: Vec<u8>,
}

impl FloodPacket {
    pub fn new(
        initiator: NodeId,
        payload: Vec<u8>,
        max_payload_len: usize,
    ) -> Result<Self, FloodError> {
        if payload.len() > max_payload_len {
            return Err(FloodError::PayloadTooLarge { len: payload.len(), max: max_payload_len });
        }
        Ok(Self { initiator, relay_counter: 1, payload })
    }
}

/// One node's record of a flood.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reception {
    pub received: bool,
    /// Counter value at reception (0 for the initiator).
    pub hop: Option<u32>,
    pub role: SlotRole,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FloodOutcome {
    pub initiator: NodeId,
    pub nodes: BTreeMap<NodeId, Reception>,
    /// Number of transmission waves, including the initiator's.
    pub waves: u32,
}

impl FloodOutcome {
    pub fn received(&self, node: NodeId) -> bool {
        self.nodes.get(&node).is_some_and(|r| r.received)
    }

    pub fn hop(&self, node: NodeId) -> Option<u32> {
        self.nodes.get(&node).and_then(|r| r.hop)
    }

    pub fn receivers(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(|(_, r)| r.received).map(|(&n, _)| n)
    }

    pub fn role(&self, node: NodeId) -> SlotRole {
        self.nodes.get(&node).map_or(SlotRole::Asleep, |r| r.role)
    }

    pub fn radio_on(&self, node: NodeId, slot_length: Micros) -> Micros {
        slot_radio_cost(self.role(node), slot_length)
    }

    /// Hop counts shaped like [`Topology::bfs_distances`] output.
    pub fn hop_map(&self) -> BTreeMap<NodeId, Option<u32>> {
        self.nodes.iter().map(|(&n, r)| (n, r.hop)).collect()
    }
}

/// Floods `packet` with every node listening and `participants` relaying.
pub fn flood<R: Rng + ?Sized>(
    topology: &Topology,
    packet: &FloodPacket,
    participants: &BTreeSet<NodeId>,
    loss_probability: f64,
    rng: &mut R,
) -> Result<FloodOutcome, FloodError> {
    run_waves(topology, packet, participants, None, loss_probability, rng)
}

/// Like [`flood`], but only `listeners` (and the initiator) have their radio
/// on; everyone else is asleep and can neither receive nor relay.
pub fn flood_with_listeners<R: Rng + ?Sized>(
    topology: &Topology,
    packet: &FloodPacket,
    relays: &BTreeSet<NodeId>,
    listeners: &BTreeSet<NodeId>,
    loss_probability: f64,
    rng: &mut R,
) -> Result<FloodOutcome, FloodError> {
    run_waves(topology, packet, relays, Some(listeners), loss_probability, rng)
}

fn run_waves<R: Rng + ?Sized>(
    topology: &Topology,
    packet: &FloodPacket,
    relays: &BTreeSet<NodeId>,
    listeners: Option<&BTreeSet<NodeId>>,
    loss_probability: f64,
    rng: &mut R,
) -> Result<FloodOutcome, FloodError> {
    let initiator = packet.initiator;
    if !topology.contains(initiator) {
        return Err(FloodError::UnknownInitiator(initiator));
    }
    if !(0.0..1.0).contains(&loss_probability) {
        return Err(FloodError::InvalidLossProbability(loss_probability));
    }
    let listening = |n: NodeId| listeners.is_none_or(|set| set.contains(&n));

    let mut nodes: BTreeMap<NodeId, Reception> = topology
        .nodes()
        .map(|n| {
            let role = if !listening(n) {
                SlotRole::Asleep
            } else if relays.contains(&n) {
                SlotRole::Relay
            } else {
                SlotRole::ListenerOnly
            };
            (n, Reception { received: false, hop: None, role })
        })
        .collect();
    nodes.insert(
        initiator,
        Reception { received: true, hop: Some(0), role: SlotRole::Initiator },
    );

    let mut transmitters = vec![initiator];
    let mut counter = packet.relay_counter;
    let mut waves = 0;
    while !transmitters.is_empty() {
        waves += 1;
        // Candidates in ascending id order so loss draws follow a fixed order.
        let candidates: BTreeSet<NodeId> = transmitters
            .iter()
            .flat_map(|&t| topology.neighbors(t))
            .filter(|n| !nodes[n].received && listening(*n))
            .collect();
        let mut next = Vec::new();
        for node in candidates {
            if loss_probability > 0.0 && rng.random_bool(loss_probability) {
                continue;
            }
            let entry = nodes.get_mut(&node).expect("candidate is a node");
            entry.received = true;
            entry.hop = Some(counter);
            if relays.contains(&node) {
                next.push(node);
            }
        }
        transmitters = next;
        counter += 1;
    }

    Ok(FloodOutcome { initiator, nodes, waves })
}
