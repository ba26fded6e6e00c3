//! Lossy flow networks: directed graphs with integer capacities, rational
//! loss multipliers γ = p/q ≤ 1, and optional integer costs.

use super::GenFlowError;

/// Loss multiplier carried as an exact integer pair; converted to floating
/// point only inside matrix assembly and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gamma {
    pub num: u64,
    pub den: u64,
}

impl Gamma {
    pub const ONE: Gamma = Gamma { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Gamma, GenFlowError> {
        if num == 0 || den == 0 {
            return Err(GenFlowError::InvalidNetwork(
                "gamma numerator and denominator must be positive".into(),
            ));
        }
        if num > den {
            return Err(GenFlowError::InvalidNetwork(format!(
                "gamma = {num}/{den} exceeds 1; only lossy multipliers are supported"
            )));
        }
        Ok(Gamma { num, den })
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_one(&self) -> bool {
        self.num == self.den
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub capacity: u64,
    pub gamma: Gamma,
    pub cost: Option<u64>,
}

/// A directed lossy flow network with distinguished source and sink.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    n: usize,
    edges: Vec<Edge>,
    s: usize,
    t: usize,
    u_max: u64,
}

impl FlowNetwork {
    /// Validates a user-supplied network: capacities and costs in
    /// `{1..U}`, lossy multipliers with integer parts in `{1..U}`. When
    /// `declared_u` is given it is the range bound; otherwise the bound is
    /// the largest integer observed.
    pub fn new(
        n: usize,
        edges: Vec<Edge>,
        s: usize,
        t: usize,
        declared_u: Option<u64>,
    ) -> Result<FlowNetwork, GenFlowError> {
        if n < 2 {
            return Err(GenFlowError::InvalidNetwork(
                "a network needs at least source and sink".into(),
            ));
        }
        if s >= n || t >= n || s == t {
            return Err(GenFlowError::InvalidNetwork(format!(
                "source {s} / sink {t} invalid for {n} vertices"
            )));
        }
        let mut observed: u64 = 1;
        for (idx, e) in edges.iter().enumerate() {
            if e.tail >= n || e.head >= n {
                return Err(GenFlowError::InvalidNetwork(format!(
                    "edge {idx} endpoint outside vertex range"
                )));
            }
            if e.capacity == 0 {
                return Err(GenFlowError::InvalidNetwork(format!(
                    "edge {idx} capacity must be at least 1"
                )));
            }
            if e.gamma.num == 0 || e.gamma.num > e.gamma.den {
                return Err(GenFlowError::InvalidNetwork(format!(
                    "edge {idx} multiplier must satisfy 0 < γ ≤ 1"
                )));
            }
            if let Some(q) = e.cost {
                if q == 0 {
                    return Err(GenFlowError::InvalidNetwork(format!(
                        "edge {idx} cost must be at least 1"
                    )));
                }
                observed = observed.max(q);
            }
            observed = observed.max(e.capacity).max(e.gamma.num).max(e.gamma.den);
        }
        let u_max = match declared_u {
            Some(u) => {
                if observed > u {
                    return Err(GenFlowError::InvalidNetwork(format!(
                        "entry {observed} exceeds the declared range bound U = {u}"
                    )));
                }
                u
            }
            None => observed,
        };
        Ok(FlowNetwork {
            n,
            edges,
            s,
            t,
            u_max,
        })
    }

    /// Relaxed constructor for internally derived networks (artificial sink
    /// edges may exceed the user ranges).
    pub(crate) fn internal(
        n: usize,
        edges: Vec<Edge>,
        s: usize,
        t: usize,
        u_max: u64,
    ) -> FlowNetwork {
        FlowNetwork {
            n,
            edges,
            s,
            t,
            u_max,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// The integer range bound `U`.
    pub fn u_max(&self) -> u64 {
        self.u_max
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn has_costs(&self) -> bool {
        !self.edges.is_empty() && self.edges.iter().all(|e| e.cost.is_some())
    }

    pub fn all_unit_gamma(&self) -> bool {
        self.edges.iter().all(|e| e.gamma.is_one())
    }

    /// Per-vertex outgoing edge ids, in edge-id order.
    pub fn out_edges(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n];
        for (j, e) in self.edges.iter().enumerate() {
            out[e.tail].push(j);
        }
        out
    }

    /// Per-vertex incoming edge ids, in edge-id order.
    pub fn in_edges(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.n];
        for (j, e) in self.edges.iter().enumerate() {
            inc[e.head].push(j);
        }
        inc
    }

    /// The single in-edge of the sink; requires a normalized network.
    pub fn sink_edge(&self) -> Result<usize, GenFlowError> {
        let inc = self.in_edges();
        let out = self.out_edges();
        if inc[self.t].len() == 1 && out[self.t].is_empty() {
            Ok(inc[self.t][0])
        } else {
            Err(GenFlowError::InvalidNetwork(format!(
                "sink has {} in-edges and {} out-edges; normalize_sink first",
                inc[self.t].len(),
                out[self.t].len()
            )))
        }
    }

    /// True when `t` is reachable from `s`.
    pub fn sink_reachable(&self) -> bool {
        let out = self.out_edges();
        let mut seen = vec![false; self.n];
        let mut queue = std::collections::VecDeque::from([self.s]);
        seen[self.s] = true;
        while let Some(u) = queue.pop_front() {
            if u == self.t {
                return true;
            }
            for &j in &out[u] {
                let v = self.edges[j].head;
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        false
    }
}

/// Ensures the sink has exactly one in-edge and no out-edges, adding a fresh
/// sink `t′` joined by a lossless pass-through edge when needed. The new
/// edge's capacity `(n+m)·U` exceeds any amount the network can deliver, so
/// the maximum flow value is preserved.
pub fn normalize_sink(net: &FlowNetwork) -> Result<FlowNetwork, GenFlowError> {
    if !net.sink_reachable() {
        return Err(GenFlowError::SinkUnreachable);
    }
    let in_deg = net.in_edges()[net.t].len();
    let out_deg = net.out_edges()[net.t].len();
    if in_deg == 1 && out_deg == 0 {
        return Ok(net.clone());
    }
    let mut edges = net.edges.clone();
    let cost = if net.has_costs() { Some(0) } else { None };
    let t_new = net.n;
    edges.push(Edge {
        tail: net.t,
        head: t_new,
        capacity: (net.n as u64 + net.m() as u64) * net.u_max,
        gamma: Gamma::ONE,
        cost,
    });
    Ok(FlowNetwork::internal(
        net.n + 1,
        edges,
        net.s,
        t_new,
        net.u_max,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn edge(tail: usize, head: usize, cap: u64, num: u64, den: u64) -> Edge {
        Edge {
            tail,
            head,
            capacity: cap,
            gamma: Gamma::new(num, den).unwrap(),
            cost: None,
        }
    }

    #[test]
    fn validates_ranges() {
        assert!(FlowNetwork::new(2, vec![edge(0, 1, 0, 1, 1)], 0, 1, None).is_err());
        assert!(Gamma::new(3, 2).is_err());
        assert!(Gamma::new(0, 2).is_err());
        assert!(FlowNetwork::new(2, vec![edge(0, 1, 4, 1, 2)], 0, 1, Some(3)).is_err());
        assert!(FlowNetwork::new(2, vec![edge(0, 1, 4, 1, 2)], 0, 0, None).is_err());
        let net = FlowNetwork::new(2, vec![edge(0, 1, 4, 1, 2)], 0, 1, None).unwrap();
        assert_eq!(net.u_max(), 4);
    }

    #[test]
    fn normalized_net_unchanged() {
        let net = FlowNetwork::new(2, vec![edge(0, 1, 4, 1, 2)], 0, 1, None).unwrap();
        let norm = normalize_sink(&net).unwrap();
        assert_eq!(norm.n(), 2);
        assert_eq!(norm.m(), 1);
        assert_eq!(norm.sink_edge().unwrap(), 0);
    }

    #[test]
    fn multi_in_edge_sink_gains_passthrough() {
        let net = FlowNetwork::new(
            3,
            vec![edge(0, 2, 4, 1, 2), edge(0, 1, 2, 1, 1), edge(1, 2, 2, 1, 1)],
            0,
            2,
            None,
        )
        .unwrap();
        let norm = normalize_sink(&net).unwrap();
        assert_eq!(norm.n(), 4);
        assert_eq!(norm.m(), 4);
        assert_eq!(norm.t(), 3);
        let e = norm.edges().last().unwrap();
        assert_eq!((e.tail, e.head), (2, 3));
        assert!(e.gamma.is_one());
        assert!(e.capacity >= (net.n() as u64) * net.u_max());
        assert_eq!(norm.sink_edge().unwrap(), 3);
    }

    #[test]
    fn unreachable_sink_is_reported() {
        let net = FlowNetwork::new(3, vec![edge(0, 1, 2, 1, 1)], 0, 2, None).unwrap();
        assert!(matches!(
            normalize_sink(&net),
            Err(GenFlowError::SinkUnreachable)
        ));
    }
}
