//! Protocol engine and deterministic slot-stepped simulator for the
//! Low-Power Wireless Bus (LWB) and its forwarder-selection variant (FS-LWB).
//!
//! The crate is organised bottom-up:
//!
//! - [`topology`]: connectivity graphs, the edge-list loader and BFS distances.
//! - [`glossy`]: the flood primitive (synchronous BFS waves), the per-node
//!   clock/guard model and per-slot radio cost.
//! - [`lwb`]: packet formats, the sink scheduler and its phase machine, the
//!   per-node state machine and the round executor.
//! - [`fs`]: forwarder selection (triplet RR slots, hop announcements,
//!   data-slot participation filtering).
//! - [`metrics`]: duty-cycle and delivery accounting, run comparison.
//! - [`config`] and [`sim`]: run configuration, the round loop and trace
//!   emission.
//!
//! Every capability has a runnable program under `examples/`; the
//! `lwb-sim` binary wraps [`sim`] and [`metrics`] for command-line use.
//!
//! ```
//! use lwb_sim::{config::SimConfig, sim::run_simulation, topology::Topology};
//!
//! let topology: Topology = "1 2\n2 3\n3 4\n4 5".parse().unwrap();
//! let config: SimConfig = "duration=40s".parse().unwrap();
//! let run = run_simulation(&config, &topology).unwrap();
//! assert_eq!(run.world.schedule.assigned_slots(), 4);
//! ```

pub mod config;
pub mod fs;
pub mod glossy;
pub mod lwb;
pub mod metrics;
pub mod sim;
pub mod time;
pub mod topology;

pub use config::{ContentionPolicy, Mode, SimConfig};
pub use glossy::{ClockState, FloodOutcome, FloodPacket};
pub use lwb::{NodeState, Phase, RoundTrace, SinkSchedule, SyncHeader, World};
pub use metrics::{ComparisonReport, RunStats};
pub use sim::{run_simulation, RunOutput, Simulation};
pub use time::Micros;
pub use topology::{NodeId, Topology};
