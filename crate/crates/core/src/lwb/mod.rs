//! The LWB protocol proper.
//!
//! A round is one sync slot from the sink, then `n_rr` request/reply slots
//! (pairs, or triplets with forwarder selection), then `n_data` data slots,
//! one per source. The sink runs the phase machine in [`SinkSchedule`]; every
//! other node runs [`NodeState`]. [`run_round`] executes one round over a
//! [`World`].

mod contention;
mod node;
mod packet;
mod round;
mod sink;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use contention::contend;
pub use node::{NodeState, QueuedPacket};
pub use packet::{reading_payload, DataPacket, ReplyPacket, RequestPacket, SyncHeader};
pub use round::{run_round, PacketRef, RoundTrace, SlotKind, SlotOutcome, SlotTrace};
pub use sink::{
    data_round_cadence, stabilization_rr, AssignError, Phase, RequestOutcome, RoundCadence,
    SinkSchedule, BOOTSTRAP_ROUND_PERIOD,
};

use crate::config::{ConfigError, Mode, SimConfig};
use crate::glossy::ClockState;
use crate::time::Micros;
use crate::topology::{NodeId, Topology};

/// Data-slot index within a round.
pub type SlotIndex = u32;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("sink node {0} is not part of the topology")]
    SinkMissing(NodeId),
    #[error("node {node} exceeds MAX_NODE_NUMBER {max}")]
    NodeOutOfRange { node: NodeId, max: u16 },
}

/// Everything a run owns: topology, sink schedule, node states, the single
/// random stream and the clock.
#[derive(Debug, Clone)]
pub struct World {
    pub config: SimConfig,
    pub topology: Topology,
    pub schedule: SinkSchedule,
    pub nodes: BTreeMap<NodeId, NodeState>,
    pub rng: ChaCha8Rng,
    /// Start of the next round.
    pub now: Micros,
    /// Index of the last executed round (rounds count from 1).
    pub round: u64,
}

impl World {
    /// Non-sink nodes draw their drift from `DRIFT_PPM_RANGE` in id order
    /// before anything else touches the random stream.
    pub fn new(config: SimConfig, topology: Topology) -> Result<Self, WorldError> {
        config.validate()?;
        let sink = config.sink_node_id;
        if !topology.contains(sink) {
            return Err(WorldError::SinkMissing(sink));
        }
        if let Some(node) = topology.nodes().find(|n| n.0 > config.max_node_number) {
            return Err(WorldError::NodeOutOfRange { node, max: config.max_node_number });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (lo, hi) = config.drift_ppm_range;
        let nodes = topology
            .nodes()
            .map(|id| {
                let clock = if id == sink {
                    ClockState::master(config.guard_time)
                } else {
                    let drift = if lo == hi { lo } else { rng.random_range(lo..=hi) };
                    ClockState::unsynced(drift, config.guard_time)
                };
                (id, NodeState::new(id, clock, config.queue_capacity))
            })
            .collect();
        Ok(Self {
            schedule: SinkSchedule::new(&config),
            config,
            topology,
            nodes,
            rng,
            now: 0,
            round: 0,
        })
    }

    pub fn mode(&self) -> Mode {
        self.schedule.mode
    }

    pub fn sink(&self) -> NodeId {
        self.config.sink_node_id
    }

    /// Nodes that received the sync of the current round (the sink included).
    pub fn active_nodes(&self) -> BTreeSet<NodeId> {
        self.nodes
            .values()
            .filter(|n| n.id == self.sink() || n.synced_round == Some(self.round))
            .map(|n| n.id)
            .collect()
    }

    /// No two nodes believe they own the same slot, and every belief matches
    /// the sink's ledger.
    pub fn check_slot_uniqueness(&self) -> Result<(), String> {
        if !self.schedule.ledger_is_consistent() {
            return Err("sink ledger is not injective".into());
        }
        let mut seen: BTreeMap<SlotIndex, NodeId> = BTreeMap::new();
        for node in self.nodes.values() {
            if let Some(slot) = node.my_slot {
                if let Some(other) = seen.insert(slot, node.id) {
                    return Err(format!("nodes {other} and {} both claim slot {slot}", node.id));
                }
                if self.schedule.owner(slot) != Some(node.id) {
                    return Err(format!("node {} claims slot {slot} owned by {:?}", node.id, self.schedule.owner(slot)));
                }
            }
        }
        Ok(())
    }
}
