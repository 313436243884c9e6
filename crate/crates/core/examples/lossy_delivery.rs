//! Packet delivery ratio and duty cycle as link loss grows.
//!
//! `cargo run --example lossy_delivery`

use lwb_sim::{run_simulation, Mode, SimConfig, Topology};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let topology = Topology::random_connected(15, 0.15, &mut ChaCha8Rng::seed_from_u64(4));
    println!("{:>5} {:>7} {:>9} {:>9} {:>6}", "loss", "mode", "mean PDR", "mean duty", "slots");
    for loss in [0.0, 0.05, 0.1, 0.2, 0.4] {
        for mode in [Mode::Lwb, Mode::FsLwb] {
            let config = SimConfig::parse(&format!("LOSS_PROBABILITY={loss}, DURATION=300, SEED=2"))
                .unwrap()
                .with_mode(mode);
            let run = run_simulation(&config, &topology).unwrap();
            let summary = run.stats.summary();
            let pdrs: Vec<f64> = summary.nodes.iter().filter_map(|n| n.pdr).collect();
            let mean_pdr = pdrs.iter().sum::<f64>() / pdrs.len().max(1) as f64;
            println!(
                "{loss:>5} {:>7} {:>8.1}% {:>8.3}% {:>6}",
                mode.name(),
                mean_pdr * 100.0,
                summary.mean_duty_cycle * 100.0,
                run.world.schedule.assigned_slots()
            );
        }
    }
}
