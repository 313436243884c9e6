//! Round execution.
//!
//! Each slot is a flood among the nodes that are awake for it. Per-node slot
//! flags use a one-character alphabet, in ascending node-id order:
//!
//! | flag | meaning |
//! |------|---------|
//! | `*` | initiated the flood |
//! | `1` | received |
//! | `0` | awake, nothing received |
//! | `-` | asleep |
//! | `b` | bootstrapping (radio on all round, outside the schedule) |

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::contention::contend;
use super::packet::{DataPacket, RequestPacket, SyncHeader};
use super::sink::{AssignError, Phase, RequestOutcome};
use super::{SlotIndex, World};
use crate::config::Mode;
use crate::fs;
use crate::glossy::{flood_with_listeners, FloodOutcome, FloodPacket};
use crate::lwb::reading_payload;
use crate::time::Micros;
use crate::topology::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlotKind {
    Sync,
    Request,
    Reply,
    Announce,
    Data,
}

/// Identifies an application packet across generation and delivery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PacketRef {
    pub source: NodeId,
    pub sequence: u32,
    pub generated_round: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlotOutcome {
    Sync {
        round_period: Micros,
        n_rr: u32,
        n_data: u32,
        /// Non-sink nodes that received the sync.
        synced: u32,
    },
    Request {
        contenders: u32,
        winner: Option<NodeId>,
        sink_rx: bool,
    },
    Reply {
        requester: Option<NodeId>,
        slot: Option<SlotIndex>,
        requester_rx: bool,
        error: Option<AssignError>,
    },
    Announce {
        source: Option<NodeId>,
        h: Option<u32>,
        slot: Option<SlotIndex>,
        forwarders: u32,
    },
    Data {
        slot: SlotIndex,
        owner: Option<NodeId>,
        /// `None` for an empty-queue filler or a silent slot.
        packet: Option<PacketRef>,
        sink_rx: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SlotTrace {
    pub kind: SlotKind,
    pub start: Micros,
    pub length: Micros,
    pub initiator: Option<NodeId>,
    pub outcome: SlotOutcome,
    pub flags: String,
}

impl SlotTrace {
    /// Nodes charged radio time for this slot.
    pub fn awake_count(&self) -> usize {
        self.flags.chars().filter(|c| matches!(c, '*' | '1' | '0')).count()
    }
}

/// Everything that happened in one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundTrace {
    pub round: u64,
    pub start: Micros,
    pub phase: Phase,
    pub header: SyncHeader,
    pub slots: Vec<SlotTrace>,
    pub radio_on: BTreeMap<NodeId, Micros>,
    /// Part of `radio_on` spent bootstrapping.
    pub bootstrap_time: BTreeMap<NodeId, Micros>,
    /// Nodes whose clock left the guard at the start of this round.
    pub desynced: Vec<NodeId>,
    pub generated: Vec<PacketRef>,
    /// Sources whose queue overflowed this round (one entry per drop).
    pub dropped: Vec<NodeId>,
    /// Slots nodes learned they own this round.
    pub acquisitions: Vec<(NodeId, SlotIndex)>,
    /// New ledger entries at the sink.
    pub new_assignments: u32,
    pub request_outcomes: Vec<RequestOutcome>,
}

impl RoundTrace {
    /// At most one new assignment per request group.
    pub fn respects_request_bound(&self, mode: Mode) -> bool {
        self.new_assignments <= self.header.n_rr / mode.rr_group_size()
    }

    pub fn end(&self) -> Micros {
        self.start + self.header.round_period
    }
}

/// Executes one round announced by `header`.
pub fn run_round(world: &mut World, header: SyncHeader) -> RoundTrace {
    let mode = world.mode();
    let mut runner = RoundRunner::start(world, header);
    runner.generate_readings();
    runner.sync_slot();
    for _ in 0..header.rr_groups(mode) {
        runner.rr_group();
    }
    for slot in 0..header.n_data {
        runner.data_slot(slot);
    }
    runner.finish()
}

struct RoundRunner<'a> {
    world: &'a mut World,
    header: SyncHeader,
    trace: RoundTrace,
    order: Vec<NodeId>,
    cursor: Micros,
    active: BTreeSet<NodeId>,
    bootstrap: BTreeSet<NodeId>,
}

impl<'a> RoundRunner<'a> {
    fn start(world: &'a mut World, header: SyncHeader) -> Self {
        world.round += 1;
        let order: Vec<NodeId> = world.nodes.keys().copied().collect();
        let zeros: BTreeMap<NodeId, Micros> = order.iter().map(|&n| (n, 0)).collect();
        let trace = RoundTrace {
            round: world.round,
            start: world.now,
            phase: world.schedule.phase,
            header,
            slots: Vec::new(),
            radio_on: zeros.clone(),
            bootstrap_time: zeros,
            desynced: Vec::new(),
            generated: Vec::new(),
            dropped: Vec::new(),
            acquisitions: Vec::new(),
            new_assignments: 0,
            request_outcomes: Vec::new(),
        };
        Self {
            cursor: world.now,
            world,
            header,
            trace,
            order,
            active: BTreeSet::new(),
            bootstrap: BTreeSet::new(),
        }
    }

    fn sink(&self) -> NodeId {
        self.world.config.sink_node_id
    }

    /// Readings are generated at IPI boundaries, i.e. at the start of every
    /// data-bearing operational round.
    fn generate_readings(&mut self) {
        if self.trace.phase != Phase::Operational || self.header.n_rr == 0 {
            return;
        }
        let sink = self.sink();
        let round = self.trace.round;
        let max_len = self.world.config.max_payload_len;
        for node in self.world.nodes.values_mut().filter(|n| n.id != sink) {
            let payload = reading_payload(node.id, node.next_sequence, max_len);
            let (sequence, dropped) = node.generate(round, payload);
            self.trace.generated.push(PacketRef { source: node.id, sequence, generated_round: round });
            if dropped {
                self.trace.dropped.push(node.id);
            }
        }
    }

    fn flood(&mut self, initiator: NodeId, payload: Vec<u8>, awake: &BTreeSet<NodeId>) -> FloodOutcome {
        let packet = FloodPacket { initiator, relay_counter: 1, payload };
        flood_with_listeners(
            &self.world.topology,
            &packet,
            awake,
            awake,
            self.world.config.loss_probability,
            &mut self.world.rng,
        )
        .expect("initiator is a topology node and the loss probability was validated")
    }

    fn record(
        &mut self,
        kind: SlotKind,
        outcome: SlotOutcome,
        flood: Option<&FloodOutcome>,
        awake: &BTreeSet<NodeId>,
        length: Micros,
    ) {
        let initiator = flood.map(|f| f.initiator);
        let mut flags = String::with_capacity(self.order.len());
        for &node in &self.order {
            let flag = if self.bootstrap.contains(&node) {
                'b'
            } else if initiator == Some(node) {
                '*'
            } else if flood.is_some_and(|f| f.received(node)) {
                '1'
            } else if awake.contains(&node) {
                '0'
            } else {
                '-'
            };
            if matches!(flag, '*' | '1' | '0') {
                *self.trace.radio_on.get_mut(&node).expect("known node") += length;
            }
            flags.push(flag);
        }
        self.trace.slots.push(SlotTrace { kind, start: self.cursor, length, initiator, outcome, flags });
        self.cursor += length;
    }

    fn sync_slot(&mut self) {
        let sink = self.sink();
        let start = self.trace.start;
        let mut missed_wakeup = BTreeSet::new();
        for node in self.world.nodes.values_mut() {
            if node.id != sink && node.clock.synced && !node.clock.check_guard(start) {
                missed_wakeup.insert(node.id);
            }
        }
        self.trace.desynced = missed_wakeup.iter().copied().collect();

        let listeners: BTreeSet<NodeId> =
            self.order.iter().copied().filter(|n| !missed_wakeup.contains(n)).collect();
        let outcome = self.flood(sink, self.header.encode(), &listeners);
        let round = self.trace.round;
        for id in outcome.receivers() {
            let node = self.world.nodes.get_mut(&id).expect("receiver is a node");
            if id != sink {
                node.clock.apply_sync(start);
            }
            node.known_round = Some(self.header);
            node.synced_round = Some(round);
        }
        self.active = outcome.receivers().collect();
        self.bootstrap = self
            .order
            .iter()
            .copied()
            .filter(|n| !self.active.contains(n) && self.world.nodes[n].is_bootstrapping())
            .collect();
        for &node in &self.bootstrap {
            self.trace.radio_on.insert(node, self.header.round_period);
            self.trace.bootstrap_time.insert(node, self.header.round_period);
        }

        let summary = SlotOutcome::Sync {
            round_period: self.header.round_period,
            n_rr: self.header.n_rr,
            n_data: self.header.n_data,
            synced: (self.active.len() - 1) as u32,
        };
        let length = self.world.config.sync_slot();
        self.record(SlotKind::Sync, summary, Some(&outcome), &listeners, length);
    }

    fn rr_group(&mut self) {
        let sink = self.sink();
        let slot_length = self.world.config.slot_length;
        let active = self.active.clone();

        // Request: nodes without a slot contend.
        let contenders: BTreeSet<NodeId> = active
            .iter()
            .copied()
            .filter(|&n| n != sink && self.world.nodes[&n].wants_slot())
            .collect();
        let winner = contend(&contenders, self.world.config.contention_policy, &mut self.world.rng);
        let request_flood = winner.map(|w| self.flood(w, RequestPacket { requester: w }.encode(), &active));
        let heard = match (winner, &request_flood) {
            (Some(w), Some(f)) if f.received(sink) => Some(w),
            _ => None,
        };
        self.trace
            .request_outcomes
            .push(heard.map_or(RequestOutcome::Empty, RequestOutcome::Received));
        let summary = SlotOutcome::Request {
            contenders: contenders.len() as u32,
            winner,
            sink_rx: heard.is_some(),
        };
        self.record(SlotKind::Request, summary, request_flood.as_ref(), &active, slot_length);

        // Reply: the sink answers what it heard.
        let mut reply_receivers = BTreeSet::new();
        let mut confirmed = None;
        let ledger_before = self.world.schedule.assigned_slots();
        match heard.map(|w| (w, self.world.schedule.assign(w))) {
            Some((requester, Ok(reply))) => {
                if self.world.schedule.assigned_slots() > ledger_before {
                    self.trace.new_assignments += 1;
                }
                let outcome = self.flood(sink, reply.encode(), &active);
                let requester_rx = outcome.received(requester);
                if requester_rx {
                    let node = self.world.nodes.get_mut(&requester).expect("requester is a node");
                    if node.my_slot != Some(reply.assigned_slot) {
                        node.my_slot = Some(reply.assigned_slot);
                        self.trace.acquisitions.push((requester, reply.assigned_slot));
                    }
                    confirmed = Some((requester, reply.assigned_slot));
                }
                if self.world.mode() == Mode::FsLwb {
                    for id in outcome.receivers() {
                        fs::record_hu(self.world.nodes.get_mut(&id).expect("receiver is a node"), &outcome);
                    }
                }
                reply_receivers = outcome.receivers().collect();
                let summary = SlotOutcome::Reply {
                    requester: Some(requester),
                    slot: Some(reply.assigned_slot),
                    requester_rx,
                    error: None,
                };
                self.record(SlotKind::Reply, summary, Some(&outcome), &active, slot_length);
            }
            Some((requester, Err(error))) => {
                log::warn!("round {}: {error}", self.trace.round);
                let summary = SlotOutcome::Reply {
                    requester: Some(requester),
                    slot: None,
                    requester_rx: false,
                    error: Some(error),
                };
                self.record(SlotKind::Reply, summary, None, &active, slot_length);
            }
            None => {
                let summary =
                    SlotOutcome::Reply { requester: None, slot: None, requester_rx: false, error: None };
                self.record(SlotKind::Reply, summary, None, &active, slot_length);
            }
        }

        if self.world.mode() == Mode::FsLwb {
            self.announce_slot(confirmed, &reply_receivers);
        }
    }

    /// Third slot of an FS-LWB triplet. Only nodes that heard a reply know
    /// an announce follows; the rest sleep.
    fn announce_slot(&mut self, confirmed: Option<(NodeId, SlotIndex)>, awake: &BTreeSet<NodeId>) {
        let slot_length = self.world.config.slot_length;
        let announce = confirmed.and_then(|(source, slot)| fs::build_announce(&self.world.nodes[&source], slot));
        let Some(announce) = announce else {
            let summary = SlotOutcome::Announce { source: None, h: None, slot: None, forwarders: 0 };
            self.record(SlotKind::Announce, summary, None, awake, slot_length);
            return;
        };
        let outcome = self.flood(announce.source, announce.encode(), awake);
        let mut forwarders = 0;
        for id in awake {
            let node = self.world.nodes.get_mut(id).expect("awake node exists");
            if fs::apply_announce(node, &announce, &outcome) {
                forwarders += 1;
            }
        }
        if outcome.received(self.sink()) {
            self.world.schedule.announced.insert(announce.slot, announce);
        }
        let summary = SlotOutcome::Announce {
            source: Some(announce.source),
            h: Some(announce.h),
            slot: Some(announce.slot),
            forwarders,
        };
        self.record(SlotKind::Announce, summary, Some(&outcome), awake, slot_length);
    }

    fn data_slot(&mut self, slot: SlotIndex) {
        let slot_length = self.world.config.slot_length;
        let participants = fs::data_participants(self.world, slot);
        let owner = self.world.schedule.owner(slot);
        let initiating = owner.filter(|o| {
            self.active.contains(o) && self.world.nodes[o].my_slot == Some(slot)
        });
        let Some(source) = initiating else {
            let summary = SlotOutcome::Data { slot, owner, packet: None, sink_rx: false };
            self.record(SlotKind::Data, summary, None, &participants, slot_length);
            return;
        };
        let queued = self
            .world
            .nodes
            .get_mut(&source)
            .expect("owner is a node")
            .outbound_queue
            .pop_front();
        let packet_ref = queued.as_ref().map(|q| PacketRef {
            source,
            sequence: q.sequence,
            generated_round: q.generated_round,
        });
        let data = DataPacket {
            source,
            sequence: packet_ref.map_or(0, |p| p.sequence),
            payload: queued.map(|q| q.payload).unwrap_or_default(),
        };
        let max_len = self.world.config.max_payload_len;
        let packet = FloodPacket::new(source, data.payload, max_len)
            .expect("readings are generated within MAX_PAYLOAD_LEN");
        let outcome = self.flood(source, packet.payload, &participants);
        let sink_rx = outcome.received(self.sink());
        let summary = SlotOutcome::Data { slot, owner, packet: packet_ref, sink_rx };
        self.record(SlotKind::Data, summary, Some(&outcome), &participants, slot_length);
    }

    fn finish(self) -> RoundTrace {
        self.world.now = self.trace.start + self.header.round_period;
        debug_assert!(self.cursor <= self.world.now, "slots overran the round");
        self.trace
    }
}
