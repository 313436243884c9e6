//! Forwarder selection on a diamond with a pendant: only nodes on a shortest
//! sink-source path stay awake for the source's data slot.
//!
//! `cargo run --example forwarder_sets`

use lwb_sim::sim::run_forwarders;
use lwb_sim::{SimConfig, Topology};

fn main() {
    let topology: Topology = include_str!("../data/diamond_pendant.txt").parse().unwrap();
    let (run, sets) = run_forwarders(&SimConfig::default(), &topology).unwrap();
    for node in run.world.nodes.values() {
        println!("node {}: h_u {:?}, h_d per slot {:?}", node.id, node.h_u, node.forwarders.h_d);
    }
    for record in sets {
        let members: Vec<String> = record.forwarders.iter().map(|n| n.to_string()).collect();
        println!("slot {} (source {}, h {:?}): {{{}}}", record.slot, record.owner, record.h, members.join(","));
    }
}
