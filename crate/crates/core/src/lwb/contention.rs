use std::collections::BTreeSet;

use rand::Rng;

use crate::config::ContentionPolicy;
use crate::topology::NodeId;

/// Resolves one request slot. Draws from `rng` only when two or more nodes
/// contend under the capture policy.
pub fn contend<R: Rng + ?Sized>(
    contenders: &BTreeSet<NodeId>,
    policy: ContentionPolicy,
    rng: &mut R,
) -> Option<NodeId> {
    match contenders.len() {
        0 => None,
        1 => contenders.first().copied(),
        n => match policy {
            ContentionPolicy::Capture => contenders.iter().nth(rng.random_range(0..n)).copied(),
            ContentionPolicy::Collision => None,
        },
    }
}
