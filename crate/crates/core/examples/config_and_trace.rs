//! Parse a configuration document, then stream the first records of the
//! JSON-lines trace.
//!
//! `cargo run --example config_and_trace`

use lwb_sim::sim::write_trace;
use lwb_sim::{run_simulation, SimConfig, Topology};

fn main() {
    let config: SimConfig = "# short lossy run\nforwarder_selection = 1\nLOSS_PROBABILITY=0.1; DURATION=25s\nSEED=42"
        .parse()
        .unwrap();
    println!("canonical config:\n{config}");
    for warning in config.warnings() {
        println!("warning: {warning}");
    }

    let run = run_simulation(&config, &Topology::line(4)).unwrap();
    let mut buf = Vec::new();
    write_trace(&mut buf, &run.rounds).unwrap();
    let text = String::from_utf8(buf).unwrap();
    println!("{} trace records; rounds 11 and 12:", text.lines().count());
    for line in text.lines().filter(|l| l.contains("\"round\":11,") || l.contains("\"round\":12,")).take(8) {
        println!("{line}");
    }
}
