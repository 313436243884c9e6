//! Request-slot contention under the capture and collision policies, and
//! how fast a 20-node network fills its slot ledger.
//!
//! `cargo run --example slot_contention`

use std::collections::BTreeSet;

use lwb_sim::lwb::contend;
use lwb_sim::{run_simulation, ContentionPolicy, NodeId, SimConfig, Topology};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let contenders: BTreeSet<NodeId> = (2..=6).map(NodeId).collect();
    for policy in [ContentionPolicy::Capture, ContentionPolicy::Collision] {
        let winners: Vec<String> = (0..8)
            .map(|_| contend(&contenders, policy, &mut rng).map_or("-".into(), |w| w.to_string()))
            .collect();
        println!("{policy:?}: winners over 8 slots with 5 contenders: {}", winners.join(" "));
    }

    // Strict collision resolves nothing once two nodes contend, so only a
    // network with a single source ever gets a slot under it.
    let topology = Topology::random_connected(20, 0.1, &mut ChaCha8Rng::seed_from_u64(11));
    for policy in ["capture", "collision"] {
        let config = SimConfig::parse(&format!("CONTENTION_POLICY={policy}, DURATION=40")).unwrap();
        let run = run_simulation(&config, &topology).unwrap();
        let per_round: Vec<String> = run
            .rounds
            .iter()
            .filter(|r| r.new_assignments > 0)
            .map(|r| format!("r{}:+{}", r.round, r.new_assignments))
            .collect();
        println!(
            "{policy:<9}: {} of 19 sources assigned ({})",
            run.world.schedule.assigned_slots(),
            per_round.join(" ")
        );
    }
}
