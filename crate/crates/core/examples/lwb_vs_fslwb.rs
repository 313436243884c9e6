//! Duty cycle of plain LWB against forwarder-selection LWB on the same
//! scenario.
//!
//! `cargo run --example lwb_vs_fslwb -- [nodes] [seed]`

use lwb_sim::sim::compare_modes;
use lwb_sim::{SimConfig, Topology};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut args = std::env::args().skip(1);
    let nodes: u16 = args.next().map_or(15, |a| a.parse().expect("node count"));
    let seed: u64 = args.next().map_or(1, |a| a.parse().expect("seed"));
    let topology = Topology::random_connected(nodes, 0.08, &mut ChaCha8Rng::seed_from_u64(seed));
    let mut config = SimConfig::parse("DURATION=300").unwrap();
    config.seed = seed;
    let (_, _, report) = compare_modes(&config, &topology).unwrap();
    print!("{}", report.to_text());
}
