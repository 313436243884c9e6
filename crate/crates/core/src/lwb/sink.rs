//! The sink's scheduler: phase machine, RR-slot dynamics and the data-slot
//! ledger.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::packet::{ReplyPacket, SyncHeader};
use super::SlotIndex;
use crate::config::{Mode, RrShrinkTrigger, SimConfig};
use crate::fs::AnnouncePacket;
use crate::time::{Micros, SECOND};
use crate::topology::NodeId;

/// Round period during cool-off and stabilization.
pub const BOOTSTRAP_ROUND_PERIOD: Micros = SECOND;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    CoolOff,
    Stabilization,
    Operational,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::CoolOff => "cool-off",
            Phase::Stabilization => "stabilization",
            Phase::Operational => "operational",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundCadence {
    DataBearing,
    SyncOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum AssignError {
    #[error("no data slot left for node {requester}: {capacity} slots already assigned")]
    Capacity { requester: NodeId, capacity: u32 },
}

/// Outcome of one request slot as the sink saw it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RequestOutcome {
    Received(NodeId),
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinkSchedule {
    pub mode: Mode,
    pub phase: Phase,
    /// Time spent in the current phase.
    pub phase_clock: Micros,
    /// Dense ledger: index is the data slot, value its owner.
    slot_owner: Vec<NodeId>,
    owner_slot: BTreeMap<NodeId, SlotIndex>,
    pub capacity: u32,
    pub rr_current: u32,
    /// Consecutive request slots in which nothing was received.
    pub empty_request_streak: u32,
    /// Consecutive rounds whose request slots were all empty.
    pub empty_round_streak: u32,
    pub rr_reduced: bool,
    /// Operational rounds already executed.
    pub operational_rounds: u64,
    /// Announcements the sink heard, by slot. Slots missing here were never
    /// announced, so every node keeps participating in them.
    pub announced: BTreeMap<SlotIndex, AnnouncePacket>,
}

impl SinkSchedule {
    pub fn new(config: &SimConfig) -> Self {
        let mut schedule = Self {
            mode: config.mode(),
            phase: Phase::CoolOff,
            phase_clock: 0,
            slot_owner: Vec::new(),
            owner_slot: BTreeMap::new(),
            capacity: config.data_slot_capacity(),
            rr_current: stabilization_rr(config),
            empty_request_streak: 0,
            empty_round_streak: 0,
            rr_reduced: false,
            operational_rounds: 0,
            announced: BTreeMap::new(),
        };
        // Zero-length phases are skipped before the first round.
        schedule.advance_phase(config);
        schedule
    }

    pub fn assigned_slots(&self) -> u32 {
        self.slot_owner.len() as u32
    }

    /// Alias matching the ledger's "next free slot" reading.
    pub fn next_free_slot(&self) -> SlotIndex {
        self.slot_owner.len() as SlotIndex
    }

    pub fn owner(&self, slot: SlotIndex) -> Option<NodeId> {
        self.slot_owner.get(slot as usize).copied()
    }

    pub fn slot_of(&self, node: NodeId) -> Option<SlotIndex> {
        self.owner_slot.get(&node).copied()
    }

    pub fn owners(&self) -> impl Iterator<Item = (SlotIndex, NodeId)> + '_ {
        self.slot_owner.iter().enumerate().map(|(i, &n)| (i as SlotIndex, n))
    }

    /// Header for the round about to start.
    pub fn build_sync(&self, config: &SimConfig) -> SyncHeader {
        match self.phase {
            Phase::CoolOff => SyncHeader::sync_only(BOOTSTRAP_ROUND_PERIOD),
            Phase::Stabilization => SyncHeader {
                round_period: BOOTSTRAP_ROUND_PERIOD,
                n_rr: self.rr_current,
                n_data: 0,
            },
            Phase::Operational => match data_round_cadence(config, self.operational_rounds) {
                RoundCadence::DataBearing => SyncHeader {
                    round_period: config.minimum_lwb_round,
                    n_rr: self.mode.rr_group_size(),
                    n_data: self.assigned_slots(),
                },
                RoundCadence::SyncOnly => SyncHeader::sync_only(config.minimum_lwb_round),
            },
        }
    }

    /// Moves to the next phase once the current one has lasted long enough.
    /// Phases never regress.
    pub fn advance_phase(&mut self, config: &SimConfig) {
        loop {
            let next = match self.phase {
                Phase::CoolOff if self.phase_clock >= config.cooloff_period => Phase::Stabilization,
                Phase::Stabilization if self.phase_clock >= config.stabilization_period => {
                    Phase::Operational
                }
                _ => return,
            };
            self.phase = next;
            self.phase_clock = 0;
        }
    }

    /// Books the end of a round: advances the phase clock, applies RR
    /// dynamics during stabilization and counts operational rounds.
    pub fn finish_round(&mut self, config: &SimConfig, header: &SyncHeader, outcomes: &[RequestOutcome]) {
        match self.phase {
            Phase::Stabilization => self.update_rr_dynamics(outcomes, config.rr_shrink_trigger),
            Phase::Operational => self.operational_rounds += 1,
            Phase::CoolOff => {}
        }
        self.phase_clock += header.round_period;
        self.advance_phase(config);
    }

    /// Assigns the next free slot to `requester`, or returns the slot it
    /// already holds.
    pub fn assign(&mut self, requester: NodeId) -> Result<ReplyPacket, AssignError> {
        if let Some(&slot) = self.owner_slot.get(&requester) {
            return Ok(ReplyPacket { requester, assigned_slot: slot });
        }
        if self.assigned_slots() >= self.capacity {
            return Err(AssignError::Capacity { requester, capacity: self.capacity });
        }
        let slot = self.next_free_slot();
        self.slot_owner.push(requester);
        self.owner_slot.insert(requester, slot);
        Ok(ReplyPacket { requester, assigned_slot: slot })
    }

    /// Shrinks the RR count to the minimum group once contention has died
    /// down. Only meaningful during stabilization.
    pub fn update_rr_dynamics(&mut self, outcomes: &[RequestOutcome], trigger: RrShrinkTrigger) {
        if outcomes.is_empty() {
            return;
        }
        let mut two_empty = false;
        for outcome in outcomes {
            match outcome {
                RequestOutcome::Empty => self.empty_request_streak += 1,
                RequestOutcome::Received(_) => self.empty_request_streak = 0,
            }
            two_empty |= self.empty_request_streak >= 2;
        }
        if outcomes.iter().all(|o| *o == RequestOutcome::Empty) {
            self.empty_round_streak += 1;
        } else {
            self.empty_round_streak = 0;
        }
        let fired = match trigger {
            RrShrinkTrigger::EmptySlots => two_empty,
            RrShrinkTrigger::EmptyRounds => self.empty_round_streak >= 2,
        };
        if fired && !self.rr_reduced {
            self.rr_current = self.mode.rr_group_size();
            self.rr_reduced = true;
        }
    }

    /// Ledger invariants: injective and dense.
    pub fn ledger_is_consistent(&self) -> bool {
        self.owner_slot.len() == self.slot_owner.len()
            && self
                .owner_slot
                .iter()
                .all(|(&node, &slot)| self.slot_owner.get(slot as usize) == Some(&node))
    }
}

/// Initial stabilization RR count: as many whole groups as fit in one
/// second after the sync slot.
pub fn stabilization_rr(config: &SimConfig) -> u32 {
    let group = config.mode().rr_group_size();
    let slots = (BOOTSTRAP_ROUND_PERIOD.saturating_sub(config.sync_slot()) / config.slot_length) as u32;
    slots / group * group
}

/// Whether operational round `round_index` (0-based) carries RR and data
/// slots or only a sync.
pub fn data_round_cadence(config: &SimConfig, round_index: u64) -> RoundCadence {
    if round_index.is_multiple_of(config.data_round_ratio()) {
        RoundCadence::DataBearing
    } else {
        RoundCadence::SyncOnly
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::MILLISECOND;

    fn config(extra: &str) -> SimConfig {
        SimConfig::parse(extra).unwrap()
    }

    #[test]
    fn cooloff_header() {
        let c = config("");
        let s = SinkSchedule::new(&c);
        assert_eq!(s.build_sync(&c), SyncHeader { round_period: SECOND, n_rr: 0, n_data: 0 });
    }

    #[test]
    fn stabilization_rr_count() {
        // floor((1000 - 15) / 15) = 65 -> 64 pairs / 63 triplets
        assert_eq!(stabilization_rr(&config("")), 64);
        assert_eq!(stabilization_rr(&config("FORWARDER_SELECTION=1")), 63);
        assert_eq!(stabilization_rr(&config("SLOT_LENGTH=20, SYNC_SLOT_LENGTH=40")), 48);
        let c = config("");
        let mut s = SinkSchedule::new(&c);
        s.phase = Phase::Stabilization;
        assert_eq!(s.build_sync(&c), SyncHeader { round_period: SECOND, n_rr: 64, n_data: 0 });
        assert!(SECOND >= c.sync_slot() + 64 * c.slot_length);
    }

    #[test]
    fn operational_data_round_header() {
        let c = config("");
        let mut s = SinkSchedule::new(&c);
        for n in 2..=8 {
            s.assign(NodeId(n)).unwrap();
        }
        s.phase = Phase::Operational;
        assert_eq!(s.build_sync(&c), SyncHeader { round_period: 5 * SECOND, n_rr: 2, n_data: 7 });
        s.operational_rounds = 1;
        assert_eq!(s.build_sync(&c), SyncHeader::sync_only(5 * SECOND));
        let fs = config("FORWARDER_SELECTION=1");
        let mut s = SinkSchedule::new(&fs);
        s.phase = Phase::Operational;
        assert_eq!(s.build_sync(&fs).n_rr, 3);
    }

    #[test]
    fn phase_boundaries_follow_round_count() {
        let c = config("");
        let mut s = SinkSchedule::new(&c);
        let mut phases = Vec::new();
        for _ in 0..25 {
            phases.push(s.phase);
            let h = s.build_sync(&c);
            s.finish_round(&c, &h, &[]);
        }
        // rounds 1..10 cool-off, 11..20 stabilization, then operational
        assert!(phases[..10].iter().all(|p| *p == Phase::CoolOff));
        assert!(phases[10..20].iter().all(|p| *p == Phase::Stabilization));
        assert!(phases[20..].iter().all(|p| *p == Phase::Operational));
        assert!(phases.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn zero_length_phases_are_skipped() {
        let c = config("COOLOFF_PERIOD=0, STABILIZATION_PERIOD=0");
        assert_eq!(SinkSchedule::new(&c).phase, Phase::Operational);
        let c = config("COOLOFF_PERIOD=0");
        assert_eq!(SinkSchedule::new(&c).phase, Phase::Stabilization);
    }

    #[test]
    fn assignment_is_dense_and_idempotent() {
        let c = config("");
        let mut s = SinkSchedule::new(&c);
        assert_eq!(s.assign(NodeId(4)).unwrap().assigned_slot, 0);
        assert_eq!(s.assign(NodeId(9)).unwrap().assigned_slot, 1);
        assert_eq!(s.assign(NodeId(4)).unwrap().assigned_slot, 0);
        assert_eq!(s.assigned_slots(), 2);
        assert!(s.ledger_is_consistent());
        assert_eq!(s.owner(1), Some(NodeId(9)));
        assert_eq!(s.slot_of(NodeId(4)), Some(0));
    }

    #[test]
    fn capacity_error() {
        // 100 ms round: (100 - 15 - 30) / 15 = 3 data slots
        let c = config("MINIMUM_LWB_ROUND=100ms, IPI=100ms");
        let mut s = SinkSchedule::new(&c);
        assert_eq!(s.capacity, 3);
        for n in 2..5 {
            s.assign(NodeId(n)).unwrap();
        }
        assert_eq!(
            s.assign(NodeId(5)),
            Err(AssignError::Capacity { requester: NodeId(5), capacity: 3 })
        );
        assert_eq!(s.assigned_slots(), 3);
    }

    use RequestOutcome::{Empty, Received};

    #[test]
    fn rr_shrinks_after_two_consecutive_empty_request_slots() {
        let c = config("");
        let mut s = SinkSchedule::new(&c);
        s.update_rr_dynamics(&[Received(NodeId(2)), Received(NodeId(3)), Empty, Empty, Empty], RrShrinkTrigger::EmptySlots);
        assert_eq!(s.rr_current, 2);
        let fs = config("FORWARDER_SELECTION=1");
        let mut s = SinkSchedule::new(&fs);
        s.update_rr_dynamics(&[Received(NodeId(2)), Empty, Empty], RrShrinkTrigger::EmptySlots);
        assert_eq!(s.rr_current, 3);
    }

    #[test]
    fn rr_unchanged_while_requests_keep_arriving() {
        let c = config("");
        let mut s = SinkSchedule::new(&c);
        s.update_rr_dynamics(&[Received(NodeId(2)); 32], RrShrinkTrigger::EmptySlots);
        assert_eq!(s.rr_current, 64);
        assert!(!s.rr_reduced);
    }

    #[test]
    fn streak_is_consecutive() {
        let c = config("");
        let mut s = SinkSchedule::new(&c);
        s.update_rr_dynamics(&[Empty, Received(NodeId(2)), Empty], RrShrinkTrigger::EmptySlots);
        assert_eq!(s.empty_request_streak, 1);
        assert_eq!(s.rr_current, 64);
        // The streak carries into the next round.
        s.update_rr_dynamics(&[Empty], RrShrinkTrigger::EmptySlots);
        assert_eq!(s.rr_current, 2);
    }

    #[test]
    fn mid_round_streak_counts() {
        let c = config("");
        let mut s = SinkSchedule::new(&c);
        s.update_rr_dynamics(&[Empty, Empty, Received(NodeId(2))], RrShrinkTrigger::EmptySlots);
        assert_eq!(s.rr_current, 2);
    }

    #[test]
    fn round_trigger_needs_two_empty_rounds() {
        let c = config("RR_SHRINK_TRIGGER=rounds");
        let mut s = SinkSchedule::new(&c);
        s.update_rr_dynamics(&[Received(NodeId(2)), Empty, Empty, Empty], c.rr_shrink_trigger);
        assert_eq!(s.rr_current, 64);
        s.update_rr_dynamics(&[Empty; 32], c.rr_shrink_trigger);
        assert_eq!(s.rr_current, 64);
        s.update_rr_dynamics(&[Empty; 32], c.rr_shrink_trigger);
        assert_eq!(s.rr_current, 2);
    }

    #[test]
    fn cadence() {
        let c = config("");
        let seq: Vec<_> = (0..4).map(|i| data_round_cadence(&c, i)).collect();
        assert_eq!(
            seq,
            [RoundCadence::DataBearing, RoundCadence::SyncOnly, RoundCadence::DataBearing, RoundCadence::SyncOnly]
        );
        let c = config("IPI=5");
        assert!((0..4).all(|i| data_round_cadence(&c, i) == RoundCadence::DataBearing));
        let c = config("IPI=12");
        assert_eq!(c.data_round_ratio(), 2);
        assert_eq!(data_round_cadence(&c, 2), RoundCadence::DataBearing);
        assert_eq!(data_round_cadence(&c, 3), RoundCadence::SyncOnly);
        assert_eq!(c.slot_length, 15 * MILLISECOND);
    }
}
