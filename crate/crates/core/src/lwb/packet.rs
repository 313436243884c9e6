//! Packet formats carried by LWB floods.
//!
//! Control packets have a compact big-endian wire form; it is what the
//! simulator hands to the flood primitive, so every flood carries real bytes.

use serde::{Deserialize, Serialize};

use super::SlotIndex;
use crate::config::Mode;
use crate::time::Micros;
use crate::topology::NodeId;

/// The sink's per-round announcement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncHeader {
    /// Time until the next sync.
    pub round_period: Micros,
    pub n_rr: u32,
    pub n_data: u32,
}

impl SyncHeader {
    pub fn sync_only(round_period: Micros) -> Self {
        Self { round_period, n_rr: 0, n_data: 0 }
    }

    pub fn is_well_formed(&self, mode: Mode) -> bool {
        self.round_period > 0 && self.n_rr.is_multiple_of(mode.rr_group_size())
    }

    pub fn rr_groups(&self, mode: Mode) -> u32 {
        self.n_rr / mode.rr_group_size()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12);
        out.extend_from_slice(&self.round_period.to_be_bytes());
        out.extend_from_slice(&(self.n_rr as u16).to_be_bytes());
        out.extend_from_slice(&(self.n_data as u16).to_be_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Option<Self> {
        let bytes: &[u8; 12] = bytes.try_into().ok()?;
        Some(Self {
            round_period: u64::from_be_bytes(bytes[0..8].try_into().ok()?),
            n_rr: u32::from(u16::from_be_bytes([bytes[8], bytes[9]])),
            n_data: u32::from(u16::from_be_bytes([bytes[10], bytes[11]])),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestPacket {
    pub requester: NodeId,
}

impl RequestPacket {
    pub fn encode(&self) -> Vec<u8> {
        self.requester.0.to_be_bytes().to_vec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplyPacket {
    pub requester: NodeId,
    pub assigned_slot: SlotIndex,
}

impl ReplyPacket {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.requester.0.to_be_bytes().to_vec();
        out.extend_from_slice(&(self.assigned_slot as u16).to_be_bytes());
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataPacket {
    pub source: NodeId,
    pub sequence: u32,
    pub payload: Vec<u8>,
}

/// Synthetic sensor reading: source id and sequence number repeated to fill
/// up to `max_len` bytes.
pub fn reading_payload(source: NodeId, sequence: u32, max_len: usize) -> Vec<u8> {
    let mut pattern = source.0.to_be_bytes().to_vec();
    pattern.extend_from_slice(&sequence.to_be_bytes());
    pattern.iter().copied().cycle().take(max_len.min(16)).collect()
}
