use std::collections::VecDeque;

use serde::Serialize;

use super::packet::SyncHeader;
use super::SlotIndex;
use crate::fs::ForwarderTable;
use crate::glossy::ClockState;
use crate::topology::NodeId;

/// An application reading waiting for the node's data slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueuedPacket {
    pub sequence: u32,
    pub generated_round: u64,
    pub payload: Vec<u8>,
}

/// Per-node protocol state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeState {
    pub id: NodeId,
    pub clock: ClockState,
    /// Slot this node believes it owns. Once set the node stops contending.
    pub my_slot: Option<SlotIndex>,
    /// Hop distance from the sink, refreshed by each reply flood (FS-LWB).
    pub h_u: Option<u32>,
    pub known_round: Option<SyncHeader>,
    /// Round whose sync this node last received.
    pub synced_round: Option<u64>,
    pub forwarders: ForwarderTable,
    pub outbound_queue: VecDeque<QueuedPacket>,
    pub queue_capacity: usize,
    pub next_sequence: u32,
    pub dropped: u64,
}

impl NodeState {
    pub fn new(id: NodeId, clock: ClockState, queue_capacity: usize) -> Self {
        Self {
            id,
            clock,
            my_slot: None,
            h_u: None,
            known_round: None,
            synced_round: None,
            forwarders: ForwarderTable::default(),
            outbound_queue: VecDeque::new(),
            queue_capacity,
            next_sequence: 1,
            dropped: 0,
        }
    }

    /// A bootstrapping node keeps its radio on until it hears a sync.
    pub fn is_bootstrapping(&self) -> bool {
        !self.clock.synced
    }

    pub fn wants_slot(&self) -> bool {
        self.my_slot.is_none()
    }

    /// Queues a new reading, evicting the oldest one when full. Returns the
    /// assigned sequence number and whether a packet was dropped.
    pub fn generate(&mut self, round: u64, payload: Vec<u8>) -> (u32, bool) {
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        let mut dropped = false;
        if self.queue_capacity == 0 {
            self.dropped += 1;
            return (sequence, true);
        }
        if self.outbound_queue.len() >= self.queue_capacity {
            self.outbound_queue.pop_front();
            self.dropped += 1;
            dropped = true;
        }
        self.outbound_queue.push_back(QueuedPacket { sequence, generated_round: round, payload });
        (sequence, dropped)
    }
}
