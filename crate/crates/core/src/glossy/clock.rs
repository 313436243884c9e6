use serde::{Deserialize, Serialize};

use crate::time::{Micros, MILLISECOND};

/// GLOSSY_GUARD_TIME: the accumulated clock offset a node tolerates between syncs.
pub const DEFAULT_GUARD_TIME: Micros = 2 * MILLISECOND;

/// A node's view of the sink's clock.
///
/// Drift is accounted analytically: after `elapsed` µs without a sync the
/// node's offset is `elapsed * |drift_ppm| / 10^6` µs. The global timeline is
/// never skewed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockState {
    pub synced: bool,
    pub last_sync_time: Micros,
    pub drift_ppm: i64,
    pub guard: Micros,
}

impl ClockState {
    pub fn unsynced(drift_ppm: i64, guard: Micros) -> Self {
        Self { synced: false, last_sync_time: 0, drift_ppm, guard }
    }

    /// The sink's own clock: always synchronized, no drift against itself.
    pub fn master(guard: Micros) -> Self {
        Self { synced: true, last_sync_time: 0, drift_ppm: 0, guard }
    }

    /// Sync reception at `now`: offset resets to zero.
    pub fn apply_sync(&mut self, now: Micros) {
        self.synced = true;
        self.last_sync_time = now;
    }

    /// Offset accumulated by `now`, rounded down to whole µs.
    pub fn offset_at(&self, now: Micros) -> Micros {
        let scaled = self.offset_scaled(now);
        (scaled / 1_000_000) as Micros
    }

    // elapsed * |ppm|, i.e. the offset in units of 10^-6 µs.
    fn offset_scaled(&self, now: Micros) -> u128 {
        let elapsed = now.abs_diff(self.last_sync_time);
        u128::from(elapsed) * u128::from(self.drift_ppm.unsigned_abs())
    }

    /// Whether the offset at `now` still fits inside the guard. Exact at the
    /// boundary: an offset equal to the guard is tolerated.
    pub fn within_guard(&self, now: Micros) -> bool {
        self.offset_scaled(now) <= u128::from(self.guard) * 1_000_000
    }

    /// Flips `synced` off once the offset exceeds the guard. Returns whether
    /// the node is still synchronized.
    pub fn check_guard(&mut self, now: Micros) -> bool {
        if self.synced && !self.within_guard(now) {
            self.synced = false;
        }
        self.synced
    }
}
