//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.
//!
//! Regenerate the golden traces with `LWB_SIM_BLESS=1 cargo test --test acceptance`.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use lwb_sim::glossy::flood;
use lwb_sim::lwb::{stabilization_rr, SlotKind, SlotOutcome};
use lwb_sim::sim::{compare_modes, run_forwarders, trace_string};
use lwb_sim::time::SECOND;
use lwb_sim::{
    run_simulation, ClockState, FloodPacket, Mode, NodeId, Phase, RoundTrace, SimConfig, Simulation,
    Topology,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{all_pairs_bfs, floyd_warshall, random_graph, shortest_path_members, INF};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn config(text: &str) -> SimConfig {
    SimConfig::parse(text).expect("test config parses")
}

fn manifest_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn load_topology(rel: &str) -> Topology {
    std::fs::read_to_string(manifest_path(rel)).unwrap().parse().unwrap()
}

fn sources(t: &Topology, sink: NodeId) -> Vec<NodeId> {
    t.nodes().filter(|&n| n != sink).collect()
}

fn c1_flood_matches_floyd_warshall() -> Outcome {
    let started = Instant::now();
    let mut samples = 0;
    for g in 0..200u64 {
        let t = random_graph(g, 2, 50);
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + g);
        let nodes: Vec<NodeId> = t.nodes().collect();
        for sample in 0..4 {
            let initiator = nodes[rng.random_range(0..nodes.len())];
            let keep = [1.0, 0.8, 0.5, 0.2][sample];
            let relays: BTreeSet<NodeId> = nodes.iter().copied().filter(|_| rng.random_bool(keep)).collect();
            let packet = FloodPacket::new(initiator, vec![0; 8], 40).unwrap();
            let outcome = flood(&t, &packet, &relays, 0.0, &mut rng).unwrap();
            let mut oracle_relays = relays.clone();
            oracle_relays.insert(initiator);
            let (g_idx, d) = floyd_warshall(&t, &oracle_relays);
            let s = g_idx.index[&initiator];
            for (v, &id) in g_idx.ids.iter().enumerate() {
                let expected = (d[s][v] != INF).then_some(d[s][v]);
                ensure(outcome.hop(id) == expected, || {
                    format!("graph {g} sample {sample}: node {id} hop {:?} vs oracle {expected:?}", outcome.hop(id))
                })?;
            }
            samples += 1;
        }
    }
    let elapsed = started.elapsed();
    ensure(elapsed.as_secs_f64() < 10.0, || format!("took {elapsed:?}"))?;
    Ok(format!("200 graphs, {samples} floods, exact match, {:.2} s", elapsed.as_secs_f64()))
}

fn c2_forwarder_sets_match_bfs() -> Outcome {
    let mut slots = 0;
    for g in 0..100u64 {
        let t = random_graph(200 + g, 2, 50);
        let c = config(&format!("SEED={g}"));
        let (run, sets) = run_forwarders(&c, &t).map_err(|e| e.to_string())?;
        let sink = c.sink_node_id;
        ensure(sets.len() == t.len() - 1, || {
            format!("graph {g}: {} of {} sources hold slots", sets.len(), t.len() - 1)
        })?;
        ensure(run.world.schedule.owners().count() == sets.len(), || "ledger/dump mismatch".into())?;
        let dist = all_pairs_bfs(&t);
        for record in &sets {
            let expected = shortest_path_members(&dist, t.nodes(), sink, record.owner);
            ensure(record.forwarders == expected, || {
                format!("graph {g} slot {}: {:?} vs oracle {expected:?}", record.slot, record.forwarders)
            })?;
            ensure(record.h == Some(dist[&(sink, record.owner)]), || format!("graph {g}: wrong h"))?;
            slots += 1;
        }
    }
    Ok(format!("100 graphs, {slots} slots, exact match"))
}

fn c3_request_bound() -> Outcome {
    let mut rounds = 0;
    let mut assignments = 0;
    for case in 0..24u64 {
        let t = random_graph(400 + case, 5, 45);
        let mode = if case % 2 == 0 { "0" } else { "1" };
        let loss = [0.0, 0.1, 0.3][(case % 3) as usize];
        let policy = if case % 4 < 2 { "capture" } else { "collision" };
        let c = config(&format!(
            "FORWARDER_SELECTION={mode}, LOSS_PROBABILITY={loss}, CONTENTION_POLICY={policy}, SEED={case}"
        ));
        let run = run_simulation(&c, &t).map_err(|e| format!("case {case}: {e}"))?;
        for r in &run.rounds {
            let group = c.mode().rr_group_size();
            ensure(r.new_assignments <= r.header.n_rr / group, || {
                format!("case {case} round {}: {} > {}/{group}", r.round, r.new_assignments, r.header.n_rr)
            })?;
            assignments += u64::from(r.new_assignments);
            rounds += 1;
        }
    }
    Ok(format!("24 runs, {rounds} rounds, {assignments} assignments, bound held in every round"))
}

/// Structural checks of the phase schedule, independent of the golden file.
fn check_schedule(rounds: &[RoundTrace], mode: Mode, c: &SimConfig, n_sources: u32) -> Result<(), String> {
    let group = mode.rr_group_size();
    let initial_rr = stabilization_rr(c);
    ensure(initial_rr == if mode == Mode::Lwb { 64 } else { 63 }, || format!("initial rr {initial_rr}"))?;
    let mut streak = 0;
    let mut shrunk = false;
    let mut saw_shrink = false;
    let mut operational = 0u64;
    for (i, r) in rounds.iter().enumerate() {
        let index = i as u64 + 1;
        ensure(r.round == index, || format!("round index gap at {index}"))?;
        let ctx = |m: &str| format!("{} round {index}: {m}", mode.name());
        if index <= 10 {
            ensure(r.phase == Phase::CoolOff, || ctx("expected cool-off"))?;
            ensure(r.start == (index - 1) * SECOND && r.header.round_period == SECOND, || ctx("cool-off timing"))?;
            ensure(r.header.n_rr == 0 && r.header.n_data == 0, || ctx("cool-off is sync-only"))?;
            ensure(r.slots.len() == 1 && r.slots[0].kind == SlotKind::Sync, || ctx("one sync slot"))?;
        } else if index <= 20 {
            ensure(r.phase == Phase::Stabilization, || ctx("expected stabilization"))?;
            ensure(r.start == (index - 1) * SECOND && r.header.round_period == SECOND, || ctx("stabilization timing"))?;
            let expected_rr = if shrunk { group } else { initial_rr };
            ensure(r.header.n_rr == expected_rr, || ctx(&format!("n_rr {} expected {expected_rr}", r.header.n_rr)))?;
            ensure(r.header.n_data == 0, || ctx("no data slots"))?;
            saw_shrink |= shrunk;
            for slot in &r.slots {
                if let SlotOutcome::Request { sink_rx, .. } = slot.outcome {
                    streak = if sink_rx { 0 } else { streak + 1 };
                    shrunk |= streak >= 2;
                }
            }
        } else {
            ensure(r.phase == Phase::Operational, || ctx("expected operational"))?;
            let expected_start = 20 * SECOND + operational * 5 * SECOND;
            ensure(r.start == expected_start && r.header.round_period == 5 * SECOND, || ctx("operational timing"))?;
            let (rr, data) = if operational.is_multiple_of(2) { (group, n_sources) } else { (0, 0) };
            ensure(r.header.n_rr == rr && r.header.n_data == data, || {
                ctx(&format!("header {:?}, expected n_rr {rr} n_data {data}", r.header))
            })?;
            let data_slots = r.slots.iter().filter(|s| s.kind == SlotKind::Data).count() as u32;
            ensure(data_slots == data, || ctx("data slot count"))?;
            operational += 1;
        }
    }
    ensure(saw_shrink, || format!("{}: RR never shrank", mode.name()))?;
    ensure(operational >= 4, || "too few operational rounds".into())
}

fn c4_phase_schedule_golden() -> Outcome {
    let t = load_topology("data/mesh10.txt");
    let bless = std::env::var_os("LWB_SIM_BLESS").is_some();
    let mut notes = Vec::new();
    for mode in [Mode::Lwb, Mode::FsLwb] {
        let c = config("SEED=7, DURATION=60").with_mode(mode);
        let run = run_simulation(&c, &t).map_err(|e| e.to_string())?;
        check_schedule(&run.rounds, mode, &c, (t.len() - 1) as u32)?;
        ensure(run.world.schedule.assigned_slots() == 9, || "not all sources hold slots".into())?;
        let path = manifest_path(&format!("tests/golden/mesh10_{}.jsonl", if mode == Mode::Lwb { "lwb" } else { "fs-lwb" }));
        let trace = trace_string(&run.rounds);
        if bless {
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(&path, &trace).unwrap();
        }
        let golden = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        if golden != trace {
            let line = golden.lines().zip(trace.lines()).position(|(a, b)| a != b);
            return Err(format!("{} trace differs from golden at line {:?}", mode.name(), line.map(|l| l + 1)));
        }
        notes.push(format!("{} {} records", mode.name(), trace.lines().count()));
    }
    Ok(format!("10 cool-off / 10 stabilization / 5 s operational, golden match ({})", notes.join(", ")))
}

/// Replays the sync slots of a trace and predicts each round's desyncs from
/// the last reception time and the drift.
fn predicted_desyncs(rounds: &[RoundTrace], ppm: u64, guard: u64) -> Vec<(u64, usize)> {
    let n = rounds[0].slots[0].flags.len();
    let mut last = vec![None::<u64>; n];
    let mut out = Vec::new();
    for r in rounds {
        for (i, slot_last) in last.iter_mut().enumerate() {
            if let Some(t) = *slot_last {
                if (r.start - t) * ppm > guard * 1_000_000 {
                    out.push((r.round, i));
                    *slot_last = None;
                }
            }
        }
        for (i, flag) in r.slots[0].flags.chars().enumerate() {
            if flag == '1' {
                last[i] = Some(r.start);
            }
        }
    }
    out
}

fn c5_guard_boundary() -> Outcome {
    let guard = 2_000;
    let mut clock = ClockState::unsynced(100, guard);
    clock.apply_sync(0);
    ensure(clock.offset_at(10 * SECOND) == 1_000 && clock.check_guard(10 * SECOND), || "10 s gap".into())?;
    ensure(clock.offset_at(20 * SECOND) == guard && clock.check_guard(20 * SECOND), || "offset == guard must stay synced".into())?;
    ensure(!clock.within_guard(20 * SECOND + 1), || "one µs past the boundary must desync".into())?;
    ensure(!clock.check_guard(30 * SECOND) && !clock.synced, || "30 s gap".into())?;

    let t = Topology::line(4);
    let mut details = Vec::new();
    for gap in [10u64, 20, 30] {
        let c = config(&format!(
            "DRIFT_PPM_RANGE=100..100, MINIMUM_LWB_ROUND={gap}, IPI={gap}, DURATION={}",
            20 + 8 * gap
        ));
        let run = run_simulation(&c, &t).map_err(|e| e.to_string())?;
        let observed: Vec<(u64, usize)> = run
            .rounds
            .iter()
            .flat_map(|r| r.desynced.iter().map(move |n| (r.round, n.0 as usize - 1)))
            .collect();
        let predicted = predicted_desyncs(&run.rounds, 100, guard);
        ensure(observed == predicted, || format!("gap {gap}: desyncs {observed:?} vs replay {predicted:?}"))?;
        let rebootstrap: u64 = run
            .operational_rounds()
            .map(|r| r.bootstrap_time.values().sum::<u64>())
            .sum();
        if gap < 30 {
            ensure(observed.is_empty() && rebootstrap == 0, || format!("gap {gap} s must stay synced"))?;
        } else {
            ensure(!observed.is_empty() && rebootstrap > 0, || "30 s gap must desync and re-bootstrap".into())?;
            for &(round, node) in &observed {
                let Some(next) = run.rounds.get(round as usize) else { continue };
                ensure(next.slots[0].flags.as_bytes()[node] == b'1', || {
                    format!("node {} did not resync after round {round}", node + 1)
                })?;
            }
        }
        details.push(format!("{gap} s: {} desyncs", observed.len()));
    }
    Ok(format!("offset 1 ms / 2 ms (= guard) synced, 3 ms desyncs; {}", details.join(", ")))
}

fn c6_cost_dominance() -> Outcome {
    let mut strict = 0;
    let mut nodes = 0;
    for g in 0..50u64 {
        let t = random_graph(600 + g, 3, 20);
        let c = config("SEED=5, DURATION=60");
        let (lwb, fs, _) = compare_modes(&c, &t).map_err(|e| e.to_string())?;
        let sink = c.sink_node_id;
        let dist = all_pairs_bfs(&t);
        let srcs = sources(&t, sink);
        for u in t.nodes() {
            let a = lwb.stats.energy[&u].radio_on;
            let b = fs.stats.energy[&u].radio_on;
            ensure(b <= a, || format!("graph {g} node {u}: FS-LWB {b} us > LWB {a} us"))?;
            let off_some_path = srcs
                .iter()
                .any(|&s| !shortest_path_members(&dist, t.nodes(), sink, s).contains(&u));
            if off_some_path {
                ensure(b < a, || format!("graph {g} node {u}: off-path node not strictly cheaper ({b} vs {a})"))?;
                strict += 1;
            }
            nodes += 1;
        }
    }
    Ok(format!("50 graphs (3-20 nodes), {nodes} nodes dominated, {strict} strictly"))
}

fn c7_delivery_preservation() -> Outcome {
    let mut sources_checked = 0;
    let mut min_rounds = u64::MAX;
    for g in 0..4u64 {
        let t = random_graph(800 + g, 10, 30);
        for mode in [Mode::Lwb, Mode::FsLwb] {
            let c = config(&format!("SEED={g}, DURATION=520")).with_mode(mode);
            let run = run_simulation(&c, &t).map_err(|e| e.to_string())?;
            let operational = run.operational_rounds().count() as u64;
            min_rounds = min_rounds.min(operational);
            ensure(operational >= 100, || format!("only {operational} operational rounds"))?;
            for s in sources(&t, c.sink_node_id) {
                let d = &run.stats.delivery[&s];
                ensure(d.slot.is_some(), || format!("graph {g} {}: node {s} holds no slot", mode.name()))?;
                ensure(d.generated > 0 && run.stats.pdr(s) == Some(1.0), || {
                    format!("graph {g} {}: node {s} delivered {}/{}", mode.name(), d.delivered_to_sink, d.generated)
                })?;
                sources_checked += 1;
            }
        }
    }
    Ok(format!("{sources_checked} source runs at PDR 1.0, at least {min_rounds} operational rounds each"))
}

fn c8_convergence() -> Outcome {
    for g in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + g);
        let t = Topology::random_connected(20, 0.1, &mut rng);
        for mode in [Mode::Lwb, Mode::FsLwb] {
            let c = config(&format!("SEED={g}, DURATION=20, CONTENTION_POLICY=capture")).with_mode(mode);
            let mut sim = Simulation::new(c.clone(), t.clone()).map_err(|e| e.to_string())?;
            while !sim.is_finished() {
                let trace = sim.step().map_err(|e| e.to_string())?;
                sim.world.check_slot_uniqueness()?;
                ensure(trace.end() <= 20 * SECOND, || "ran past stabilization".into())?;
            }
            let holders: BTreeMap<NodeId, u32> =
                sim.world.nodes.values().filter_map(|n| n.my_slot.map(|s| (n.id, s))).collect();
            let distinct: BTreeSet<u32> = holders.values().copied().collect();
            ensure(holders.len() == 19 && distinct.len() == 19, || {
                format!("graph {g} {}: {} holders, {} distinct slots", mode.name(), holders.len(), distinct.len())
            })?;
            ensure(sim.world.schedule.phase == Phase::Operational, || "stabilization did not end at 20 s".into())?;
        }
    }
    Ok("10 graphs x 2 modes, 19/19 distinct slots by 20 s, uniqueness held every round".into())
}

fn run_cli(dir: &Path, seed: u64, name: &str) -> Result<Vec<u8>, String> {
    let trace = dir.join(name);
    let status = Command::new(env!("CARGO_BIN_EXE_lwb-sim"))
        .args(["run", "--topology"])
        .arg(manifest_path("data/mesh10.txt"))
        .arg("--config")
        .arg(dir.join("lossy.cfg"))
        .args(["--seed", &seed.to_string(), "--trace"])
        .arg(&trace)
        .arg("--summary")
        .arg(dir.join(format!("{name}.summary")))
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), || format!("cli exited with {status}"))?;
    std::fs::read(&trace).map_err(|e| e.to_string())
}

fn c9_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    std::fs::write(
        dir.path().join("lossy.cfg"),
        "LOSS_PROBABILITY=0.1\nDRIFT_PPM_RANGE=-50..50\nFORWARDER_SELECTION=1\nDURATION=60\n",
    )
    .unwrap();
    let a = run_cli(dir.path(), 3, "a.jsonl")?;
    let b = run_cli(dir.path(), 3, "b.jsonl")?;
    let c = run_cli(dir.path(), 4, "c.jsonl")?;
    ensure(!a.is_empty() && a == b, || "same seed produced different traces".into())?;
    ensure(a != c, || "seed + 1 produced the same trace".into())?;
    Ok(format!("{} bytes byte-identical across reruns; seed+1 differs", a.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("flood hop counts equal Floyd-Warshall distances", c1_flood_matches_floyd_warshall),
        ("forwarder sets equal shortest-path oracle", c2_forwarder_sets_match_bfs),
        ("at most one new assignment per request group", c3_request_bound),
        ("phase schedule and golden trace", c4_phase_schedule_golden),
        ("guard-time boundary", c5_guard_boundary),
        ("FS-LWB radio-on never exceeds LWB", c6_cost_dominance),
        ("PDR 1.0 without loss", c7_delivery_preservation),
        ("20-node convergence with unique slots", c8_convergence),
        ("byte-identical traces per seed", c9_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS [{}] {name}: {detail} ({secs:.1} s)", i + 1),
            Err(reason) => {
                failed += 1;
                println!("FAIL [{}] {name}: {reason} ({secs:.1} s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
