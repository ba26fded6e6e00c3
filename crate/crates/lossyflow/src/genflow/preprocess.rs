//! Preprocessing: least-lossy path gains and the pruning pass that removes
//! vertices too lossy to matter.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::network::FlowNetwork;
use super::GenFlowError;

/// Least-lossy-paths tree rooted at the source: for each reachable vertex
/// the maximum product of multipliers over s→v paths, with the argmax tree.
/// Unreachable vertices carry gain 0 and no parent.
#[derive(Debug, Clone)]
pub struct LossTree {
    pub gain: Vec<f64>,
    pub parent_edge: Vec<Option<usize>>,
}

struct HeapItem {
    dist: f64,
    vertex: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.vertex == other.vertex
    }
}
impl Eq for HeapItem {}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (dist, vertex) for deterministic tie handling.
        other
            .dist
            .total_cmp(&self.dist)
            .then(other.vertex.cmp(&self.vertex))
    }
}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra with edge weights `−log γ(e)`: shortest distance equals the
/// maximum path gain.
pub fn least_lossy_tree(net: &FlowNetwork) -> LossTree {
    let n = net.n();
    let out = net.out_edges();
    let mut dist = vec![f64::INFINITY; n];
    let mut gain = vec![0.0; n];
    let mut parent_edge = vec![None; n];
    let mut done = vec![false; n];
    dist[net.s()] = 0.0;
    gain[net.s()] = 1.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem {
        dist: 0.0,
        vertex: net.s(),
    });
    while let Some(HeapItem { dist: d, vertex: u }) = heap.pop() {
        if done[u] || d > dist[u] {
            continue;
        }
        done[u] = true;
        for &j in &out[u] {
            let e = &net.edges()[j];
            let w = -(e.gamma.value().ln());
            let nd = dist[u] + w;
            if nd < dist[e.head] {
                dist[e.head] = nd;
                gain[e.head] = gain[u] * e.gamma.value();
                parent_edge[e.head] = Some(j);
                heap.push(HeapItem {
                    dist: nd,
                    vertex: e.head,
                });
            }
        }
    }
    LossTree { gain, parent_edge }
}

/// Pruned network plus the maps back to the original ids.
#[derive(Debug, Clone)]
pub struct Pruned {
    pub net: FlowNetwork,
    pub vertex_map: Vec<Option<usize>>,
    pub edge_map: Vec<Option<usize>>,
}

/// Removes every vertex (other than s, t) whose best path gain falls below
/// `ε/(2mnU)` — such a vertex can carry only a negligible share of the
/// optimum — and every vertex with no remaining path to the sink, which the
/// flow-repair pass needs. Incident edges go with them; ids are remapped.
pub fn prune(net: &FlowNetwork, epsilon: f64) -> Result<Pruned, GenFlowError> {
    if !(epsilon > 0.0) {
        return Err(GenFlowError::InvalidConfig(
            "epsilon must be positive".into(),
        ));
    }
    let tree = least_lossy_tree(net);
    let m = net.m() as f64;
    let n = net.n() as f64;
    let threshold = epsilon / (2.0 * m * n * net.u_max() as f64);
    let mut keep: Vec<bool> = (0..net.n())
        .map(|v| v == net.s() || v == net.t() || tree.gain[v] >= threshold)
        .collect();

    // Reverse reachability to t over the kept subgraph.
    let mut reaches_t = vec![false; net.n()];
    reaches_t[net.t()] = true;
    let mut queue = std::collections::VecDeque::from([net.t()]);
    let in_edges = net.in_edges();
    while let Some(v) = queue.pop_front() {
        for &j in &in_edges[v] {
            let u = net.edges()[j].tail;
            if keep[u] && keep[v] && !reaches_t[u] {
                reaches_t[u] = true;
                queue.push_back(u);
            }
        }
    }
    if !reaches_t[net.s()] {
        return Err(GenFlowError::SinkUnreachable);
    }
    for v in 0..net.n() {
        keep[v] = keep[v] && reaches_t[v];
    }

    let mut vertex_map = vec![None; net.n()];
    let mut next = 0usize;
    for (v, map) in vertex_map.iter_mut().enumerate() {
        if keep[v] {
            *map = Some(next);
            next += 1;
        }
    }
    let mut edges = Vec::new();
    let mut edge_map = vec![None; net.m()];
    for (j, e) in net.edges().iter().enumerate() {
        if let (Some(tail), Some(head)) = (vertex_map[e.tail], vertex_map[e.head]) {
            edge_map[j] = Some(edges.len());
            edges.push(super::network::Edge { tail, head, ..*e });
        }
    }
    let s = vertex_map[net.s()].expect("source kept");
    let t = vertex_map[net.t()].expect("sink kept");
    Ok(Pruned {
        net: FlowNetwork::internal(next, edges, s, t, net.u_max()),
        vertex_map,
        edge_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genflow::network::{Edge, Gamma};

    fn edge(tail: usize, head: usize, cap: u64, num: u64, den: u64) -> Edge {
        Edge {
            tail,
            head,
            capacity: cap,
            gamma: Gamma::new(num, den).unwrap(),
            cost: None,
        }
    }

    #[test]
    fn single_edge_gain() {
        let net = FlowNetwork::new(3, vec![edge(0, 1, 2, 1, 2), edge(1, 2, 2, 1, 1)], 0, 2, None)
            .unwrap();
        let tree = least_lossy_tree(&net);
        assert_eq!(tree.gain[0], 1.0);
        assert_eq!(tree.gain[1], 0.5);
        assert_eq!(tree.gain[2], 0.5);
        assert_eq!(tree.parent_edge[1], Some(0));
    }

    #[test]
    fn parallel_paths_take_the_better_gain() {
        // Two s→a routes with gains 1/2 and 1/3.
        let net = FlowNetwork::new(
            4,
            vec![
                edge(0, 1, 2, 1, 2),
                edge(0, 2, 2, 1, 3),
                edge(2, 1, 2, 1, 1),
                edge(1, 3, 2, 1, 1),
            ],
            0,
            3,
            None,
        )
        .unwrap();
        let tree = least_lossy_tree(&net);
        assert!((tree.gain[1] - 0.5).abs() < 1e-15);
        assert_eq!(tree.parent_edge[1], Some(0));
    }

    #[test]
    fn gains_match_exhaustive_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(44);
        for _ in 0..20 {
            let n = 3 + rng.random_range(0..6);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in 0..n {
                    if u != v && rng.random::<f64>() < 0.4 {
                        let den = 1 + rng.random_range(0..6);
                        let num = 1 + rng.random_range(0..den);
                        edges.push(edge(u, v, 1, num, den));
                    }
                }
            }
            if edges.is_empty() {
                continue;
            }
            let net = FlowNetwork::new(n, edges, 0, n - 1, None).unwrap();
            let tree = least_lossy_tree(&net);
            // Brute force: best gain over all simple paths.
            let out = net.out_edges();
            let mut best = vec![0.0f64; n];
            fn dfs(
                u: usize,
                g: f64,
                net: &FlowNetwork,
                out: &[Vec<usize>],
                on_path: &mut Vec<bool>,
                best: &mut Vec<f64>,
            ) {
                if g > best[u] {
                    best[u] = g;
                }
                for &j in &out[u] {
                    let e = &net.edges()[j];
                    if !on_path[e.head] {
                        on_path[e.head] = true;
                        dfs(e.head, g * e.gamma.value(), net, out, on_path, best);
                        on_path[e.head] = false;
                    }
                }
            }
            let mut on_path = vec![false; n];
            on_path[0] = true;
            dfs(0, 1.0, &net, &out, &mut on_path, &mut best);
            for v in 0..n {
                assert!(
                    (tree.gain[v] - best[v]).abs() <= 1e-12 * (1.0 + best[v]),
                    "vertex {v}: dijkstra {} vs brute {}",
                    tree.gain[v],
                    best[v]
                );
            }
        }
    }

    #[test]
    fn lossless_network_keeps_everything() {
        let net = FlowNetwork::new(
            4,
            vec![
                edge(0, 1, 3, 1, 1),
                edge(1, 2, 3, 1, 1),
                edge(2, 3, 3, 1, 1),
            ],
            0,
            3,
            None,
        )
        .unwrap();
        let pruned = prune(&net, 1e-2).unwrap();
        assert_eq!(pruned.net.n(), 4);
        assert_eq!(pruned.net.m(), 3);
    }

    #[test]
    fn long_lossy_chain_is_cut() {
        // A chain of γ = 1/2 edges: gains halve every hop; far vertices fall
        // below ε/(2mnU) and are removed, and with them the route to t.
        let len = 60;
        let mut edges = Vec::new();
        for i in 0..len {
            edges.push(edge(i, i + 1, 1, 1, 2));
        }
        let net = FlowNetwork::new(len + 1, edges, 0, len, None).unwrap();
        match prune(&net, 1e-2) {
            Err(GenFlowError::SinkUnreachable) => {}
            other => panic!("expected the lossy chain to disconnect, got {other:?}"),
        }
    }

    #[test]
    fn moderately_lossy_chain_keeps_prefix() {
        // Side branches hang off a short lossless trunk; deep ones vanish.
        let mut edges = vec![edge(0, 1, 2, 1, 1), edge(1, 2, 2, 1, 1)];
        // Deep lossy appendage off vertex 1 that cannot reach t.
        edges.push(edge(1, 3, 1, 1, 6));
        edges.push(edge(3, 4, 1, 1, 6));
        let net = FlowNetwork::new(5, edges, 0, 2, None).unwrap();
        let pruned = prune(&net, 1e-2).unwrap();
        // 3 and 4 cannot reach t, so only the trunk survives.
        assert_eq!(pruned.net.n(), 3);
        assert_eq!(pruned.net.m(), 2);
        assert_eq!(pruned.vertex_map[3], None);
        assert_eq!(pruned.edge_map[2], None);
    }
}
