//! Reference computations for the integration tests. Nothing here calls the
//! library's own graph routines; graphs are read through `Topology::edges`.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use lwb_sim::{NodeId, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const INF: u32 = u32::MAX / 4;

/// Dense index over the graph's nodes.
pub struct Indexed {
    pub ids: Vec<NodeId>,
    pub index: BTreeMap<NodeId, usize>,
    pub adj: Vec<Vec<usize>>,
}

impl Indexed {
    pub fn new(t: &Topology) -> Self {
        let ids: Vec<NodeId> = t.nodes().collect();
        let index: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut adj = vec![Vec::new(); ids.len()];
        for (a, b) in t.edges() {
            adj[index[&a]].push(index[&b]);
            adj[index[&b]].push(index[&a]);
        }
        Self { ids, index, adj }
    }
}

/// Floyd-Warshall where only nodes in `relays` may be interior vertices.
#[allow(clippy::needless_range_loop)]
pub fn floyd_warshall(t: &Topology, relays: &BTreeSet<NodeId>) -> (Indexed, Vec<Vec<u32>>) {
    let g = Indexed::new(t);
    let n = g.ids.len();
    let mut d = vec![vec![INF; n]; n];
    for i in 0..n {
        d[i][i] = 0;
        for &j in &g.adj[i] {
            d[i][j] = 1;
        }
    }
    for k in 0..n {
        if !relays.contains(&g.ids[k]) {
            continue;
        }
        for i in 0..n {
            if d[i][k] == INF {
                continue;
            }
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    (g, d)
}

/// Hop counts from every node, by plain BFS on an index-based adjacency.
pub fn all_pairs_bfs(t: &Topology) -> BTreeMap<(NodeId, NodeId), u32> {
    let g = Indexed::new(t);
    let mut out = BTreeMap::new();
    for s in 0..g.ids.len() {
        let mut dist = vec![INF; g.ids.len()];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in &g.adj[u] {
                if dist[v] == INF {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for (v, &d) in dist.iter().enumerate() {
            if d != INF {
                out.insert((g.ids[s], g.ids[v]), d);
            }
        }
    }
    out
}

/// Nodes on at least one shortest sink-source path, endpoints included.
pub fn shortest_path_members(
    dist: &BTreeMap<(NodeId, NodeId), u32>,
    nodes: impl Iterator<Item = NodeId>,
    sink: NodeId,
    source: NodeId,
) -> Vec<NodeId> {
    let h = dist[&(sink, source)];
    nodes
        .filter(|&u| match (dist.get(&(sink, u)), dist.get(&(u, source))) {
            (Some(a), Some(b)) => a + b == h,
            _ => false,
        })
        .collect()
}

/// Connected random graph with `min_nodes..=max_nodes` nodes.
pub fn random_graph(seed: u64, min_nodes: u16, max_nodes: u16) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(min_nodes..=max_nodes);
    let density = rng.random_range(0.02..0.25);
    Topology::random_connected(n, density, &mut rng)
}

/// Largest hop distance from `root`.
pub fn depth_from(t: &Topology, root: NodeId) -> u32 {
    all_pairs_bfs(t)
        .iter()
        .filter(|((s, _), _)| *s == root)
        .map(|(_, &d)| d)
        .max()
        .unwrap_or(0)
}
