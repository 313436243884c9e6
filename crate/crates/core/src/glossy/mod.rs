//! The Glossy flood primitive, modelled as synchronous BFS waves, plus the
//! per-node clock model and slot-granularity radio accounting.

mod clock;
mod flood;

pub use clock::{ClockState, DEFAULT_GUARD_TIME};
pub use flood::{flood, flood_with_listeners, FloodError, FloodOutcome, FloodPacket, Reception};

use serde::{Deserialize, Serialize};

use crate::time::Micros;

/// What a node does during one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlotRole {
    Initiator,
    Relay,
    ListenerOnly,
    Bootstrap,
    Asleep,
}

/// Radio-on time charged for one slot. Any awake role pays the full slot;
/// bootstrap nodes keep the radio on for however long `slot_length` spans.
pub fn slot_radio_cost(role: SlotRole, slot_length: Micros) -> Micros {
    match role {
        SlotRole::Initiator | SlotRole::Relay | SlotRole::ListenerOnly | SlotRole::Bootstrap => {
            slot_length
        }
        SlotRole::Asleep => 0,
    }
}
