//! Duty-cycle and delivery accounting.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::config::Mode;
use crate::lwb::{RoundTrace, SlotIndex, SlotOutcome};
use crate::time::Micros;
use crate::topology::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("round {got} arrived after round {last}; traces must be gapless and in order")]
    OutOfOrder { last: u64, got: u64 },
    #[error("runs are not comparable: {0}")]
    NotComparable(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EnergyStats {
    pub radio_on: Micros,
    pub bootstrap: Micros,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DeliveryStats {
    pub generated: u64,
    pub delivered_to_sink: u64,
    pub dropped: u64,
    /// Delivery round minus generation round, per delivered packet.
    pub latency_rounds: Vec<u64>,
    pub slot: Option<SlotIndex>,
    pub slot_acquisition_round: Option<u64>,
}

impl DeliveryStats {
    pub fn pdr(&self) -> Option<f64> {
        (self.generated > 0).then(|| self.delivered_to_sink as f64 / self.generated as f64)
    }

    pub fn mean_latency(&self) -> Option<f64> {
        if self.latency_rounds.is_empty() {
            return None;
        }
        Some(self.latency_rounds.iter().sum::<u64>() as f64 / self.latency_rounds.len() as f64)
    }
}

/// Accumulated statistics for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStats {
    pub mode: Mode,
    pub seed: u64,
    pub sink: NodeId,
    pub rounds: u64,
    pub elapsed: Micros,
    /// Nodes with no path to the sink; they bootstrap for the whole run.
    pub unreachable: Vec<NodeId>,
    pub energy: BTreeMap<NodeId, EnergyStats>,
    pub delivery: BTreeMap<NodeId, DeliveryStats>,
}

impl RunStats {
    pub fn new(mode: Mode, seed: u64, sink: NodeId, nodes: impl IntoIterator<Item = NodeId>) -> Self {
        let nodes: Vec<NodeId> = nodes.into_iter().collect();
        Self {
            mode,
            seed,
            sink,
            rounds: 0,
            elapsed: 0,
            unreachable: Vec::new(),
            energy: nodes.iter().map(|&n| (n, EnergyStats::default())).collect(),
            delivery: nodes
                .iter()
                .filter(|&&n| n != sink)
                .map(|&n| (n, DeliveryStats::default()))
                .collect(),
        }
    }

    pub fn accumulate(&mut self, trace: &RoundTrace) -> Result<(), MetricsError> {
        if trace.round != self.rounds + 1 {
            return Err(MetricsError::OutOfOrder { last: self.rounds, got: trace.round });
        }
        self.rounds = trace.round;
        self.elapsed = trace.end();
        for (node, &on) in &trace.radio_on {
            let entry = self.energy.entry(*node).or_default();
            entry.radio_on += on;
            entry.bootstrap += trace.bootstrap_time.get(node).copied().unwrap_or(0);
        }
        for packet in &trace.generated {
            self.delivery.entry(packet.source).or_default().generated += 1;
        }
        for source in &trace.dropped {
            self.delivery.entry(*source).or_default().dropped += 1;
        }
        for &(node, slot) in &trace.acquisitions {
            let entry = self.delivery.entry(node).or_default();
            entry.slot = Some(slot);
            entry.slot_acquisition_round.get_or_insert(trace.round);
        }
        for slot in &trace.slots {
            if let SlotOutcome::Data { packet: Some(packet), sink_rx: true, .. } = &slot.outcome {
                let entry = self.delivery.entry(packet.source).or_default();
                entry.delivered_to_sink += 1;
                entry.latency_rounds.push(trace.round - packet.generated_round);
            }
        }
        Ok(())
    }

    pub fn duty_cycle(&self, node: NodeId) -> f64 {
        if self.elapsed == 0 {
            return 0.0;
        }
        self.energy.get(&node).map_or(0.0, |e| e.radio_on as f64 / self.elapsed as f64)
    }

    pub fn pdr(&self, node: NodeId) -> Option<f64> {
        self.delivery.get(&node).and_then(DeliveryStats::pdr)
    }

    pub fn total_drops(&self) -> u64 {
        self.delivery.values().map(|d| d.dropped).sum()
    }

    pub fn summary(&self) -> Summary {
        let nodes: Vec<NodeSummary> = self
            .energy
            .iter()
            .map(|(&id, energy)| {
                let delivery = self.delivery.get(&id);
                NodeSummary {
                    id,
                    duty_cycle: self.duty_cycle(id),
                    radio_on_us: energy.radio_on,
                    pdr: self.pdr(id),
                    slot: delivery.and_then(|d| d.slot),
                    acquisition_round: delivery.and_then(|d| d.slot_acquisition_round),
                    generated: delivery.map_or(0, |d| d.generated),
                    delivered: delivery.map_or(0, |d| d.delivered_to_sink),
                    dropped: delivery.map_or(0, |d| d.dropped),
                    mean_latency_rounds: delivery.and_then(DeliveryStats::mean_latency),
                }
            })
            .collect();
        let duties: Vec<f64> = nodes.iter().map(|n| n.duty_cycle).collect();
        Summary {
            mode: self.mode,
            seed: self.seed,
            rounds: self.rounds,
            elapsed_us: self.elapsed,
            mean_duty_cycle: mean(&duties),
            max_duty_cycle: duties.iter().copied().fold(0.0, f64::max),
            total_drops: self.total_drops(),
            unreachable: self.unreachable.clone(),
            nodes,
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeSummary {
    pub id: NodeId,
    pub duty_cycle: f64,
    pub radio_on_us: Micros,
    pub pdr: Option<f64>,
    pub slot: Option<SlotIndex>,
    pub acquisition_round: Option<u64>,
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub mean_latency_rounds: Option<f64>,
}

/// Run summary: per-node table plus aggregates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mode: Mode,
    pub seed: u64,
    pub rounds: u64,
    pub elapsed_us: Micros,
    pub mean_duty_cycle: f64,
    pub max_duty_cycle: f64,
    pub total_drops: u64,
    pub unreachable: Vec<NodeId>,
    pub nodes: Vec<NodeSummary>,
}

fn opt<T: std::fmt::Display>(value: Option<T>) -> String {
    value.map_or_else(|| "-".to_owned(), |v| v.to_string())
}

fn opt_pct(value: Option<f64>) -> String {
    value.map_or_else(|| "-".to_owned(), |v| format!("{:.1}%", v * 100.0))
}

impl Summary {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} run, seed {}, {} rounds, {:.3} s simulated",
            self.mode.name(),
            self.seed,
            self.rounds,
            self.elapsed_us as f64 / 1e6
        );
        let _ = writeln!(out, "{:>5} {:>10} {:>7} {:>5} {:>9} {:>6}", "node", "duty", "PDR", "slot", "acquired", "drops");
        for n in &self.nodes {
            let _ = writeln!(
                out,
                "{:>5} {:>9.4}% {:>7} {:>5} {:>9} {:>6}",
                n.id,
                n.duty_cycle * 100.0,
                opt_pct(n.pdr),
                opt(n.slot),
                opt(n.acquisition_round),
                n.dropped
            );
        }
        let _ = writeln!(
            out,
            "mean duty {:.4}%, max duty {:.4}%, total drops {}",
            self.mean_duty_cycle * 100.0,
            self.max_duty_cycle * 100.0,
            self.total_drops
        );
        if !self.unreachable.is_empty() {
            let ids: Vec<String> = self.unreachable.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "unreachable from the sink: {}", ids.join(" "));
        }
        out
    }

    /// Text table followed by the JSON form on a single line.
    pub fn to_document(&self) -> String {
        let json = serde_json::to_string(self).expect("summary serializes");
        format!("{}\n{json}\n", self.to_text())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeComparison {
    pub id: NodeId,
    pub duty_a: f64,
    pub duty_b: f64,
    pub duty_delta: f64,
    pub pdr_a: Option<f64>,
    pub pdr_b: Option<f64>,
    pub pdr_delta: Option<f64>,
    pub acquisition_a: Option<u64>,
    pub acquisition_b: Option<u64>,
    pub acquisition_delta: Option<i64>,
}

/// Deltas are `b - a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub mode_a: Mode,
    pub mode_b: Mode,
    pub elapsed_us: Micros,
    pub mean_duty_a: f64,
    pub mean_duty_b: f64,
    pub mean_duty_delta: f64,
    pub nodes: Vec<NodeComparison>,
}

impl ComparisonReport {
    pub fn node(&self, id: NodeId) -> Option<&NodeComparison> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let a = self.mode_a.name();
        let b = self.mode_b.name();
        let _ = writeln!(out, "{a} (a) vs {b} (b), {:.3} s simulated", self.elapsed_us as f64 / 1e6);
        let _ = writeln!(
            out,
            "{:>5} {:>10} {:>10} {:>10} {:>7} {:>7} {:>6} {:>6}",
            "node", "duty a", "duty b", "delta", "PDR a", "PDR b", "acq a", "acq b"
        );
        for n in &self.nodes {
            let _ = writeln!(
                out,
                "{:>5} {:>9.4}% {:>9.4}% {:>+9.4}% {:>7} {:>7} {:>6} {:>6}",
                n.id,
                n.duty_a * 100.0,
                n.duty_b * 100.0,
                n.duty_delta * 100.0,
                opt_pct(n.pdr_a),
                opt_pct(n.pdr_b),
                opt(n.acquisition_a),
                opt(n.acquisition_b)
            );
        }
        let _ = writeln!(
            out,
            "mean duty a {:.4}%, b {:.4}%, delta {:+.4}%",
            self.mean_duty_a * 100.0,
            self.mean_duty_b * 100.0,
            self.mean_duty_delta * 100.0
        );
        out
    }

    pub fn to_document(&self) -> String {
        let json = serde_json::to_string(self).expect("report serializes");
        format!("{}\n{json}\n", self.to_text())
    }
}

/// Per-node and aggregate differences between two runs of the same scenario.
pub fn compare(run_a: &RunStats, run_b: &RunStats) -> Result<ComparisonReport, MetricsError> {
    if run_a.energy.keys().ne(run_b.energy.keys()) {
        return Err(MetricsError::NotComparable("node sets differ".into()));
    }
    if run_a.elapsed != run_b.elapsed {
        return Err(MetricsError::NotComparable(format!(
            "durations differ ({} us vs {} us)",
            run_a.elapsed, run_b.elapsed
        )));
    }
    if run_a.seed != run_b.seed {
        return Err(MetricsError::NotComparable("seeds differ".into()));
    }
    let nodes: Vec<NodeComparison> = run_a
        .energy
        .keys()
        .map(|&id| {
            let (duty_a, duty_b) = (run_a.duty_cycle(id), run_b.duty_cycle(id));
            let (pdr_a, pdr_b) = (run_a.pdr(id), run_b.pdr(id));
            let acq = |r: &RunStats| r.delivery.get(&id).and_then(|d| d.slot_acquisition_round);
            let (acquisition_a, acquisition_b) = (acq(run_a), acq(run_b));
            NodeComparison {
                id,
                duty_a,
                duty_b,
                duty_delta: duty_b - duty_a,
                pdr_a,
                pdr_b,
                pdr_delta: pdr_a.zip(pdr_b).map(|(a, b)| b - a),
                acquisition_a,
                acquisition_b,
                acquisition_delta: acquisition_a.zip(acquisition_b).map(|(a, b)| b as i64 - a as i64),
            }
        })
        .collect();
    let mean_duty_a = mean(&nodes.iter().map(|n| n.duty_a).collect::<Vec<_>>());
    let mean_duty_b = mean(&nodes.iter().map(|n| n.duty_b).collect::<Vec<_>>());
    Ok(ComparisonReport {
        mode_a: run_a.mode,
        mode_b: run_b.mode,
        elapsed_us: run_a.elapsed,
        mean_duty_a,
        mean_duty_b,
        mean_duty_delta: mean_duty_b - mean_duty_a,
        nodes,
    })
}
