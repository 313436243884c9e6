//! A run from cold start: cool-off, stabilization with the RR shrink, then
//! operational rounds alternating data-bearing and sync-only.
//!
//! `cargo run --example bootstrap_phases`

use lwb_sim::lwb::SlotOutcome;
use lwb_sim::time::display_duration;
use lwb_sim::{run_simulation, SimConfig, Topology};

fn main() {
    let topology: Topology = include_str!("../data/mesh10.txt").parse().unwrap();
    let config = SimConfig::parse("SEED=7, DURATION=60").unwrap();
    let run = run_simulation(&config, &topology).unwrap();
    println!("{:>5} {:>8} {:<14} {:>5} {:>6} {:>4}  acquisitions", "round", "start", "phase", "n_rr", "n_data", "rx");
    for r in &run.rounds {
        let SlotOutcome::Sync { synced, .. } = r.slots[0].outcome else { unreachable!() };
        let acquired: Vec<String> = r.acquisitions.iter().map(|(n, s)| format!("{n}->{s}")).collect();
        println!(
            "{:>5} {:>8} {:<14} {:>5} {:>6} {:>4}  {}",
            r.round,
            display_duration(r.start),
            r.phase.name(),
            r.header.n_rr,
            r.header.n_data,
            synced,
            acquired.join(" ")
        );
    }
}
