//! Drift accumulates between syncs; a node whose offset exceeds the guard
//! time falls back to bootstrapping.
//!
//! `cargo run --example clock_guard`

use lwb_sim::glossy::DEFAULT_GUARD_TIME;
use lwb_sim::time::SECOND;
use lwb_sim::{run_simulation, ClockState, SimConfig, Topology};

fn main() {
    println!("drift 100 ppm, guard {} us", DEFAULT_GUARD_TIME);
    for gap in [5, 10, 20, 21, 30] {
        let mut clock = ClockState::unsynced(100, DEFAULT_GUARD_TIME);
        clock.apply_sync(0);
        let now = gap * SECOND;
        println!("  gap {gap:>2} s: offset {:>5} us, synced {}", clock.offset_at(now), clock.check_guard(now));
    }

    // Operational rounds of 30 s: every other round a node misses the sync
    // and listens for the whole round.
    let config = SimConfig::parse("DRIFT_PPM_RANGE=100..100, MINIMUM_LWB_ROUND=30, IPI=30, DURATION=200").unwrap();
    let run = run_simulation(&config, &Topology::line(3)).unwrap();
    for round in run.operational_rounds() {
        let boot: Vec<String> = round
            .bootstrap_time
            .iter()
            .filter(|(_, &t)| t > 0)
            .map(|(n, _)| n.to_string())
            .collect();
        println!(
            "round {:>2} at {:>3} s: sync flags {}  bootstrapping [{}]",
            round.round,
            round.start / SECOND,
            round.slots[0].flags,
            boot.join(" ")
        );
    }
}
