//! Run configuration.
//!
//! The eight application parameters keep their `slot-def.h` names and
//! defaults; the remaining keys are simulator knobs. The document format is
//! `KEY=value` pairs, one per line or separated by commas, with `#` comments.
//! Keys are case-insensitive.
//!
//! | key | default | unit of a bare number |
//! |-----|---------|-----------------------|
//! | `IPI` | 10 s | s |
//! | `MINIMUM_LWB_ROUND` | 5 s | s |
//! | `COOLOFF_PERIOD` | 10 s | s |
//! | `STABILIZATION_PERIOD` | 10 s | s |
//! | `MAX_PAYLOAD_LEN` | 40 | bytes |
//! | `SINK_NODE_ID` | 1 | |
//! | `MAX_NODE_NUMBER` | 150 | |
//! | `FORWARDER_SELECTION` | 0 | `0`/`1` |
//! | `SLOT_LENGTH` | 15 ms | ms |
//! | `SYNC_SLOT_LENGTH` | `SLOT_LENGTH` | ms |
//! | `GLOSSY_GUARD_TIME` | 2 ms | ms |
//! | `LOSS_PROBABILITY` | 0 | |
//! | `DRIFT_PPM_RANGE` | `0..0` | ppm, `lo..hi` inclusive |
//! | `CONTENTION_POLICY` | `capture` | `capture`/`collision` |
//! | `RR_SHRINK_TRIGGER` | `slots` | `slots`/`rounds` |
//! | `QUEUE_CAPACITY` | 8 | packets |
//! | `SEED` | 0 | |
//! | `DURATION` | 60 s | s |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::glossy::DEFAULT_GUARD_TIME;
use crate::time::{format_duration, parse_duration, DefaultUnit, Micros, MILLISECOND, SECOND};
use crate::topology::{NodeId, DEFAULT_MAX_NODE_NUMBER};

/// Protocol variant, selected globally by `FORWARDER_SELECTION`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Lwb,
    FsLwb,
}

impl Mode {
    /// RR slots per request group: request/reply, plus announce in FS-LWB.
    pub fn rr_group_size(self) -> u32 {
        match self {
            Mode::Lwb => 2,
            Mode::FsLwb => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Lwb => "LWB",
            Mode::FsLwb => "FS-LWB",
        }
    }
}

/// How the sink resolves several simultaneous requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContentionPolicy {
    /// One contender, drawn uniformly, is decoded.
    Capture,
    /// Any overlap destroys every request.
    Collision,
}

/// What counts as "contention has died down" during stabilization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RrShrinkTrigger {
    /// Two consecutive request slots with no successful request.
    EmptySlots,
    /// Two consecutive rounds whose request slots were all empty.
    EmptyRounds,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: unknown key `{key}`; valid keys: {}", VALID_KEYS.join(", "))]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{entry}` is not a KEY=value pair")]
    Syntax { line: usize, entry: String },
    #[error("invalid value `{value}` for {key}: {reason}")]
    InvalidValue { key: &'static str, value: String, reason: String },
    #[error("invalid configuration: {0}")]
    Validation(String),
}

pub const VALID_KEYS: &[&str] = &[
    "IPI",
    "MINIMUM_LWB_ROUND",
    "COOLOFF_PERIOD",
    "STABILIZATION_PERIOD",
    "MAX_PAYLOAD_LEN",
    "SINK_NODE_ID",
    "MAX_NODE_NUMBER",
    "FORWARDER_SELECTION",
    "SLOT_LENGTH",
    "SYNC_SLOT_LENGTH",
    "GLOSSY_GUARD_TIME",
    "LOSS_PROBABILITY",
    "DRIFT_PPM_RANGE",
    "CONTENTION_POLICY",
    "RR_SHRINK_TRIGGER",
    "QUEUE_CAPACITY",
    "SEED",
    "DURATION",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Sensing period of the application.
    pub ipi: Micros,
    pub minimum_lwb_round: Micros,
    pub cooloff_period: Micros,
    pub stabilization_period: Micros,
    pub max_payload_len: usize,
    pub sink_node_id: NodeId,
    pub max_node_number: u16,
    pub forwarder_selection: bool,
    pub slot_length: Micros,
    /// `None` means "same as `slot_length`".
    pub sync_slot_length: Option<Micros>,
    pub guard_time: Micros,
    pub loss_probability: f64,
    pub drift_ppm_range: (i64, i64),
    pub contention_policy: ContentionPolicy,
    pub rr_shrink_trigger: RrShrinkTrigger,
    pub queue_capacity: usize,
    pub seed: u64,
    pub duration: Micros,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            ipi: 10 * SECOND,
            minimum_lwb_round: 5 * SECOND,
            cooloff_period: 10 * SECOND,
            stabilization_period: 10 * SECOND,
            max_payload_len: 40,
            sink_node_id: NodeId(1),
            max_node_number: DEFAULT_MAX_NODE_NUMBER,
            forwarder_selection: false,
            slot_length: 15 * MILLISECOND,
            sync_slot_length: None,
            guard_time: DEFAULT_GUARD_TIME,
            loss_probability: 0.0,
            drift_ppm_range: (0, 0),
            contention_policy: ContentionPolicy::Capture,
            rr_shrink_trigger: RrShrinkTrigger::EmptySlots,
            queue_capacity: 8,
            seed: 0,
            duration: 60 * SECOND,
        }
    }
}

impl SimConfig {
    pub fn mode(&self) -> Mode {
        if self.forwarder_selection {
            Mode::FsLwb
        } else {
            Mode::Lwb
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.forwarder_selection = mode == Mode::FsLwb;
        self
    }

    pub fn sync_slot(&self) -> Micros {
        self.sync_slot_length.unwrap_or(self.slot_length)
    }

    /// Operational rounds per data-bearing round, ⌊IPI / MINIMUM_LWB_ROUND⌋ ≥ 1.
    pub fn data_round_ratio(&self) -> u64 {
        (self.ipi / self.minimum_lwb_round.max(1)).max(1)
    }

    /// Data slots that fit in an operational round after the sync slot and
    /// the minimum RR group.
    pub fn data_slot_capacity(&self) -> u32 {
        let used = self.sync_slot() + u64::from(self.mode().rr_group_size()) * self.slot_length;
        (self.minimum_lwb_round.saturating_sub(used) / self.slot_length) as u32
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Validation(msg));
        if self.slot_length == 0 || self.sync_slot() == 0 {
            return fail("slot lengths must be positive".into());
        }
        if self.minimum_lwb_round == 0 {
            return fail("MINIMUM_LWB_ROUND must be positive".into());
        }
        if self.ipi < self.minimum_lwb_round {
            return fail(format!(
                "IPI ({} us) is shorter than MINIMUM_LWB_ROUND ({} us)",
                self.ipi, self.minimum_lwb_round
            ));
        }
        if self.max_node_number == 0 {
            return fail("MAX_NODE_NUMBER must be at least 1".into());
        }
        if self.sink_node_id.0 == 0 || self.sink_node_id.0 > self.max_node_number {
            return fail(format!(
                "SINK_NODE_ID {} outside [1, {}]",
                self.sink_node_id, self.max_node_number
            ));
        }
        if !(0.0..1.0).contains(&self.loss_probability) {
            return fail(format!("LOSS_PROBABILITY {} outside [0, 1)", self.loss_probability));
        }
        if self.drift_ppm_range.0 > self.drift_ppm_range.1 {
            return fail("DRIFT_PPM_RANGE lower bound exceeds upper bound".into());
        }
        if self.sync_slot() > SECOND {
            return fail("sync slot does not fit in a one-second round".into());
        }
        if self.sync_slot() + u64::from(self.mode().rr_group_size()) * self.slot_length
            > self.minimum_lwb_round
        {
            return fail("MINIMUM_LWB_ROUND cannot hold the sync slot and one RR group".into());
        }
        Ok(())
    }

    /// Non-fatal oddities worth logging at startup.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.ipi.is_multiple_of(self.minimum_lwb_round) {
            out.push(format!(
                "IPI is not a multiple of MINIMUM_LWB_ROUND; data rounds every {} rounds (effective IPI {} us)",
                self.data_round_ratio(),
                self.data_round_ratio() * self.minimum_lwb_round
            ));
        }
        out
    }

    pub fn parse(document: &str) -> Result<Self, ConfigError> {
        let mut config = SimConfig::default();
        for (index, raw) in document.lines().enumerate() {
            let line = index + 1;
            let content = raw.split('#').next().unwrap_or("");
            for entry in content.split([',', ';']) {
                let entry = entry.trim();
                if entry.is_empty() {
                    continue;
                }
                let (key, value) = entry
                    .split_once('=')
                    .ok_or_else(|| ConfigError::Syntax { line, entry: entry.to_owned() })?;
                config.set(line, key.trim(), value.trim())?;
            }
        }
        config.validate()?;
        Ok(config)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        let upper = key.to_ascii_uppercase();
        let key: &'static str = VALID_KEYS
            .iter()
            .find(|k| **k == upper)
            .ok_or_else(|| ConfigError::UnknownKey { line, key: key.to_owned() })?;
        let invalid = |reason: &str| ConfigError::InvalidValue {
            key,
            value: value.to_owned(),
            reason: reason.to_owned(),
        };
        let seconds = || parse_duration(value, DefaultUnit::Seconds).ok_or_else(|| invalid("expected a duration"));
        let millis = || parse_duration(value, DefaultUnit::Milliseconds).ok_or_else(|| invalid("expected a duration"));
        match key {
            "IPI" => self.ipi = seconds()?,
            "MINIMUM_LWB_ROUND" => self.minimum_lwb_round = seconds()?,
            "COOLOFF_PERIOD" => self.cooloff_period = seconds()?,
            "STABILIZATION_PERIOD" => self.stabilization_period = seconds()?,
            "DURATION" => self.duration = seconds()?,
            "SLOT_LENGTH" => self.slot_length = millis()?,
            "SYNC_SLOT_LENGTH" => self.sync_slot_length = Some(millis()?),
            "GLOSSY_GUARD_TIME" => self.guard_time = millis()?,
            "MAX_PAYLOAD_LEN" => {
                let bytes = value.strip_suffix("bytes").unwrap_or(value).trim();
                self.max_payload_len = bytes.parse().map_err(|_| invalid("expected a byte count"))?
            }
            "SINK_NODE_ID" => {
                self.sink_node_id = NodeId(value.parse().map_err(|_| invalid("expected a node id"))?)
            }
            "MAX_NODE_NUMBER" => {
                self.max_node_number = value.parse().map_err(|_| invalid("expected an integer"))?
            }
            "FORWARDER_SELECTION" => {
                self.forwarder_selection = match value.to_ascii_lowercase().as_str() {
                    "0" | "false" | "off" => false,
                    "1" | "true" | "on" => true,
                    _ => return Err(invalid("expected 0 or 1")),
                }
            }
            "LOSS_PROBABILITY" => {
                self.loss_probability = value.parse().map_err(|_| invalid("expected a probability"))?
            }
            "DRIFT_PPM_RANGE" => {
                let (lo, hi) = value.split_once("..").unwrap_or((value, value));
                let lo = lo.trim().parse().map_err(|_| invalid("expected `lo..hi` in ppm"))?;
                let hi = hi.trim().parse().map_err(|_| invalid("expected `lo..hi` in ppm"))?;
                self.drift_ppm_range = (lo, hi);
            }
            "CONTENTION_POLICY" => {
                self.contention_policy = match value.to_ascii_lowercase().as_str() {
                    "capture" => ContentionPolicy::Capture,
                    "collision" => ContentionPolicy::Collision,
                    _ => return Err(invalid("expected `capture` or `collision`")),
                }
            }
            "RR_SHRINK_TRIGGER" => {
                self.rr_shrink_trigger = match value.to_ascii_lowercase().as_str() {
                    "slots" => RrShrinkTrigger::EmptySlots,
                    "rounds" => RrShrinkTrigger::EmptyRounds,
                    _ => return Err(invalid("expected `slots` or `rounds`")),
                }
            }
            "QUEUE_CAPACITY" => {
                self.queue_capacity = value.parse().map_err(|_| invalid("expected an integer"))?
            }
            "SEED" => self.seed = value.parse().map_err(|_| invalid("expected a 64-bit integer"))?,
            _ => unreachable!("key list and match arms agree"),
        }
        Ok(())
    }
}

impl FromStr for SimConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

/// Canonical document form; parsing it yields an identical config.
impl fmt::Display for SimConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IPI={}", format_duration(self.ipi))?;
        writeln!(f, "MINIMUM_LWB_ROUND={}", format_duration(self.minimum_lwb_round))?;
        writeln!(f, "COOLOFF_PERIOD={}", format_duration(self.cooloff_period))?;
        writeln!(f, "STABILIZATION_PERIOD={}", format_duration(self.stabilization_period))?;
        writeln!(f, "MAX_PAYLOAD_LEN={}", self.max_payload_len)?;
        writeln!(f, "SINK_NODE_ID={}", self.sink_node_id)?;
        writeln!(f, "MAX_NODE_NUMBER={}", self.max_node_number)?;
        writeln!(f, "FORWARDER_SELECTION={}", u8::from(self.forwarder_selection))?;
        writeln!(f, "SLOT_LENGTH={}", format_duration(self.slot_length))?;
        if let Some(sync) = self.sync_slot_length {
            writeln!(f, "SYNC_SLOT_LENGTH={}", format_duration(sync))?;
        }
        writeln!(f, "GLOSSY_GUARD_TIME={}", format_duration(self.guard_time))?;
        writeln!(f, "LOSS_PROBABILITY={}", self.loss_probability)?;
        writeln!(f, "DRIFT_PPM_RANGE={}..{}", self.drift_ppm_range.0, self.drift_ppm_range.1)?;
        let policy = match self.contention_policy {
            ContentionPolicy::Capture => "capture",
            ContentionPolicy::Collision => "collision",
        };
        writeln!(f, "CONTENTION_POLICY={policy}")?;
        let trigger = match self.rr_shrink_trigger {
            RrShrinkTrigger::EmptySlots => "slots",
            RrShrinkTrigger::EmptyRounds => "rounds",
        };
        writeln!(f, "RR_SHRINK_TRIGGER={trigger}")?;
        writeln!(f, "QUEUE_CAPACITY={}", self.queue_capacity)?;
        writeln!(f, "SEED={}", self.seed)?;
        writeln!(f, "DURATION={}", format_duration(self.duration))
    }
}
