//! The round loop, trace records and the canned scenarios behind the CLI.

use std::io::{self, Write};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Mode, SimConfig};
use crate::fs::{forwarder_sets, ForwarderRecord};
use crate::lwb::{run_round, Phase, RoundTrace, SlotKind, World, WorldError};
use crate::metrics::{compare, ComparisonReport, MetricsError, RunStats};
use crate::time::Micros;
use crate::topology::{NodeId, Topology};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("round {round}: {message}")]
    Invariant { round: u64, message: String },
}

/// One line of the trace file: a single executed slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub time_us: Micros,
    pub round: u64,
    pub phase: Phase,
    pub slot: SlotKind,
    /// Position of the slot within its round.
    pub index: u32,
    pub initiator: Option<NodeId>,
    pub outcome: serde_json::Value,
    /// Per-node flags in ascending id order (see [`crate::lwb`] round docs).
    pub rx: String,
}

pub fn trace_records(rounds: &[RoundTrace]) -> impl Iterator<Item = TraceRecord> + '_ {
    rounds.iter().flat_map(|round| {
        round.slots.iter().enumerate().map(move |(index, slot)| TraceRecord {
            time_us: slot.start,
            round: round.round,
            phase: round.phase,
            slot: slot.kind,
            index: index as u32,
            initiator: slot.initiator,
            outcome: serde_json::to_value(&slot.outcome).expect("outcome serializes"),
            rx: slot.flags.clone(),
        })
    })
}

/// Writes the trace as JSON lines.
pub fn write_trace<W: Write>(mut out: W, rounds: &[RoundTrace]) -> io::Result<()> {
    for record in trace_records(rounds) {
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn trace_string(rounds: &[RoundTrace]) -> String {
    let mut buf = Vec::new();
    write_trace(&mut buf, rounds).expect("writing to memory");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// Stepwise driver. Each [`Simulation::step`] runs one round and checks the
/// per-round invariants.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub world: World,
    pub stats: RunStats,
    pub duration: Micros,
}

impl Simulation {
    pub fn new(config: SimConfig, topology: Topology) -> Result<Self, SimError> {
        for warning in config.warnings() {
            warn!("{warning}");
        }
        let duration = config.duration;
        let mut stats = RunStats::new(config.mode(), config.seed, config.sink_node_id, topology.nodes());
        if let Ok(hops) = topology.hop_distances(config.sink_node_id) {
            stats.unreachable = hops.iter().filter(|(_, h)| h.is_none()).map(|(&n, _)| n).collect();
        }
        if !stats.unreachable.is_empty() {
            warn!("{} node(s) cannot reach the sink: {:?}", stats.unreachable.len(), stats.unreachable);
        }
        let world = World::new(config, topology)?;
        Ok(Self { world, stats, duration })
    }

    pub fn is_finished(&self) -> bool {
        self.world.now >= self.duration
    }

    pub fn step(&mut self) -> Result<RoundTrace, SimError> {
        let mode = self.world.mode();
        let header = self.world.schedule.build_sync(&self.world.config);
        let trace = run_round(&mut self.world, header);
        let config = self.world.config.clone();
        self.world.schedule.finish_round(&config, &header, &trace.request_outcomes);
        let invariant = |message: String| SimError::Invariant { round: trace.round, message };
        if !header.is_well_formed(mode) {
            return Err(invariant(format!("malformed header {header:?}")));
        }
        if !trace.respects_request_bound(mode) {
            return Err(invariant(format!(
                "{} new assignments with n_rr {}",
                trace.new_assignments, header.n_rr
            )));
        }
        self.world.check_slot_uniqueness().map_err(invariant)?;
        self.stats.accumulate(&trace)?;
        if self.world.schedule.phase != trace.phase {
            info!("round {}: entering {}", trace.round, self.world.schedule.phase.name());
        }
        Ok(trace)
    }

    pub fn run(mut self) -> Result<RunOutput, SimError> {
        let mut rounds = Vec::new();
        while !self.is_finished() {
            rounds.push(self.step()?);
        }
        Ok(RunOutput { rounds, stats: self.stats, world: self.world })
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rounds: Vec<RoundTrace>,
    pub stats: RunStats,
    /// Final state, e.g. for inspecting the sink ledger.
    pub world: World,
}

impl RunOutput {
    pub fn trace(&self) -> String {
        trace_string(&self.rounds)
    }

    pub fn operational_rounds(&self) -> impl Iterator<Item = &RoundTrace> {
        self.rounds.iter().filter(|r| r.phase == Phase::Operational)
    }
}

/// Runs `config` from bootstrap until `config.duration` has elapsed.
pub fn run_simulation(config: &SimConfig, topology: &Topology) -> Result<RunOutput, SimError> {
    Simulation::new(config.clone(), topology.clone())?.run()
}

/// Runs the scenario with forwarder selection off, then on, and compares.
/// The two runs are independent and execute on separate threads.
pub fn compare_modes(
    config: &SimConfig,
    topology: &Topology,
) -> Result<(RunOutput, RunOutput, ComparisonReport), SimError> {
    let lwb = config.clone().with_mode(Mode::Lwb);
    let fs = config.clone().with_mode(Mode::FsLwb);
    let (a, b) = std::thread::scope(|scope| {
        let a = scope.spawn(|| run_simulation(&lwb, topology));
        let b = scope.spawn(|| run_simulation(&fs, topology));
        (a.join().expect("LWB run panicked"), b.join().expect("FS-LWB run panicked"))
    });
    let (a, b) = (a?, b?);
    let report = compare(&a.stats, &b.stats)?;
    Ok((a, b, report))
}

/// Runs FS-LWB through cool-off and stabilization and returns the forwarder
/// set of every slot assigned by then.
pub fn run_forwarders(
    config: &SimConfig,
    topology: &Topology,
) -> Result<(RunOutput, Vec<ForwarderRecord>), SimError> {
    let mut config = config.clone().with_mode(Mode::FsLwb);
    config.duration = config.cooloff_period + config.stabilization_period;
    let run = run_simulation(&config, topology)?;
    let sets = forwarder_sets(&run.world);
    Ok((run, sets))
}
