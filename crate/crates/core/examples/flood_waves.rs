//! Glossy floods as synchronous waves: hop counts, relay restriction and loss.
//!
//! `cargo run --example flood_waves`

use std::collections::BTreeSet;

use lwb_sim::glossy::{flood, flood_with_listeners};
use lwb_sim::{FloodPacket, NodeId, Topology};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn show(label: &str, outcome: &lwb_sim::FloodOutcome) {
    let hops: Vec<String> = outcome
        .hop_map()
        .into_iter()
        .map(|(n, h)| format!("{n}:{}", h.map_or("-".into(), |h| h.to_string())))
        .collect();
    println!("{label:<28} waves={} hops [{}]", outcome.waves, hops.join(" "));
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t: Topology = "1 2\n1 3\n2 4\n3 4\n2 5\n4 6".parse().unwrap();
    let packet = FloodPacket::new(NodeId(1), b"sync".to_vec(), 40).unwrap();

    show("everyone relays", &flood(&t, &packet, &t.node_set(), 0.0, &mut rng).unwrap());

    let no_two: BTreeSet<NodeId> = t.nodes().filter(|&n| n != NodeId(2)).collect();
    show("node 2 listens only", &flood(&t, &packet, &no_two, 0.0, &mut rng).unwrap());

    let awake: BTreeSet<NodeId> = [1, 3, 4, 6].map(NodeId).into();
    show("2 and 5 asleep", &flood_with_listeners(&t, &packet, &awake, &awake, 0.0, &mut rng).unwrap());

    for seed in 0..3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let outcome = flood(&t, &packet, &t.node_set(), 0.3, &mut rng).unwrap();
        show(&format!("30% loss, seed {seed}"), &outcome);
    }
}
