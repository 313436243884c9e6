//! Connectivity graphs and shortest-path helpers.
//!
//! A [`Topology`] is a static undirected graph over [`NodeId`]s. Floods run
//! over it, and the BFS routines here double as oracles for hop counts.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default upper bound on node ids.
pub const DEFAULT_MAX_NODE_NUMBER: u16 = 150;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct NodeId(pub u16);

impl NodeId {
    pub fn get(self) -> u16 {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl From<u16> for NodeId {
    fn from(id: u16) -> Self {
        NodeId(id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: node id {id} outside [1, {max}]")]
    OutOfRange { line: usize, id: i64, max: u16 },
    #[error("line {line}: self-loop on node {id}")]
    SelfLoop { line: usize, id: NodeId },
    #[error("topology has no nodes")]
    Empty,
    #[error("node {0} is not part of the topology")]
    UnknownNode(NodeId),
}

/// Hop distance per node; `None` marks unreachable nodes.
pub type HopMap = BTreeMap<NodeId, Option<u32>>;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Topology {
    adjacency: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl Topology {
    /// Builds a graph from an explicit node list and edge list. Edge
    /// endpoints are added to the node set.
    pub fn from_parts(
        nodes: impl IntoIterator<Item = NodeId>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, TopologyError> {
        let mut topology = Topology::default();
        for node in nodes {
            topology.adjacency.entry(node).or_default();
        }
        for (index, (u, v)) in edges.into_iter().enumerate() {
            if u == v {
                return Err(TopologyError::SelfLoop { line: index + 1, id: u });
            }
            topology.insert_edge(u, v);
        }
        if topology.adjacency.is_empty() {
            return Err(TopologyError::Empty);
        }
        Ok(topology)
    }

    pub fn from_edges(edges: &[(u16, u16)]) -> Result<Self, TopologyError> {
        Self::from_parts(
            std::iter::empty(),
            edges.iter().map(|&(u, v)| (NodeId(u), NodeId(v))),
        )
    }

    /// The path 1-2-...-n.
    pub fn line(n: u16) -> Self {
        let nodes = (1..=n.max(1)).map(NodeId);
        let edges = (1..n).map(|i| (NodeId(i), NodeId(i + 1)));
        Self::from_parts(nodes, edges).expect("line graph is valid")
    }

    fn insert_edge(&mut self, u: NodeId, v: NodeId) {
        self.adjacency.entry(u).or_default().insert(v);
        self.adjacency.entry(v).or_default().insert(u);
    }

    /// Parses the edge-list format: one `u v` edge or one isolated `u` per
    /// line, `#` starts a comment, blank lines are ignored.
    pub fn parse_edge_list(text: &str, max_node_number: u16) -> Result<Self, TopologyError> {
        let mut topology = Topology::default();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let ids = content
                .split_whitespace()
                .map(|token| parse_id(token, line, max_node_number))
                .collect::<Result<Vec<_>, _>>()?;
            match ids.as_slice() {
                [u] => {
                    topology.adjacency.entry(*u).or_default();
                }
                [u, v] if u == v => return Err(TopologyError::SelfLoop { line, id: *u }),
                [u, v] => topology.insert_edge(*u, *v),
                _ => {
                    return Err(TopologyError::Parse {
                        line,
                        message: format!("expected `u v` or `u`, found {} tokens", ids.len()),
                    })
                }
            }
        }
        if topology.adjacency.is_empty() {
            return Err(TopologyError::Empty);
        }
        Ok(topology)
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.adjacency.contains_key(&node)
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn node_set(&self) -> BTreeSet<NodeId> {
        self.nodes().collect()
    }

    pub fn neighbors(&self, node: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency.get(&node).into_iter().flatten().copied()
    }

    /// Every edge once, as `(smaller, larger)`.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency
            .iter()
            .flat_map(|(&u, peers)| peers.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// Shortest hop counts from `root`, where every interior vertex of a path
    /// must be in `allowed_relays`. The root always relays.
    pub fn bfs_distances(
        &self,
        root: NodeId,
        allowed_relays: &BTreeSet<NodeId>,
    ) -> Result<HopMap, TopologyError> {
        if !self.contains(root) {
            return Err(TopologyError::UnknownNode(root));
        }
        let mut dist: HopMap = self.nodes().map(|n| (n, None)).collect();
        dist.insert(root, Some(0));
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            if u != root && !allowed_relays.contains(&u) {
                continue;
            }
            let next = dist[&u].expect("queued nodes are reached") + 1;
            for v in self.neighbors(u) {
                let slot = dist.get_mut(&v).expect("neighbor is a node");
                if slot.is_none() {
                    *slot = Some(next);
                    queue.push_back(v);
                }
            }
        }
        Ok(dist)
    }

    /// BFS with every node allowed to relay.
    pub fn hop_distances(&self, root: NodeId) -> Result<HopMap, TopologyError> {
        self.bfs_distances(root, &self.node_set())
    }

    /// True iff every node is reachable from `sink`.
    pub fn is_connected(&self, sink: NodeId) -> bool {
        match self.hop_distances(sink) {
            Ok(dist) => dist.values().all(Option::is_some),
            Err(_) => false,
        }
    }

    /// Random connected graph on nodes `1..=n`: a random spanning tree plus
    /// each remaining pair with probability `extra_edge_probability`.
    pub fn random_connected<R: Rng + ?Sized>(
        n: u16,
        extra_edge_probability: f64,
        rng: &mut R,
    ) -> Self {
        let n = n.max(1);
        let mut order: Vec<u16> = (1..=n).collect();
        order.shuffle(rng);
        let mut edges = Vec::new();
        for i in 1..order.len() {
            let parent = order[rng.random_range(0..i)];
            edges.push((NodeId(parent), NodeId(order[i])));
        }
        for u in 1..=n {
            for v in (u + 1)..=n {
                if rng.random_bool(extra_edge_probability) {
                    edges.push((NodeId(u), NodeId(v)));
                }
            }
        }
        Self::from_parts((1..=n).map(NodeId), edges).expect("generated graph is valid")
    }
}

fn parse_id(token: &str, line: usize, max: u16) -> Result<NodeId, TopologyError> {
    let value: i64 = token.parse().map_err(|_| TopologyError::Parse {
        line,
        message: format!("`{token}` is not an integer node id"),
    })?;
    if value < 1 || value > i64::from(max) {
        return Err(TopologyError::OutOfRange { line, id: value, max });
    }
    Ok(NodeId(value as u16))
}

impl FromStr for Topology {
    type Err = TopologyError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        Self::parse_edge_list(text, DEFAULT_MAX_NODE_NUMBER)
    }
}

/// Canonical edge-list text: edges in order, then isolated nodes.
impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (u, v) in self.edges() {
            writeln!(f, "{u} {v}")?;
        }
        for (node, peers) in &self.adjacency {
            if peers.is_empty() {
                writeln!(f, "{node}")?;
            }
        }
        Ok(())
    }
}
