//! Flow reports and the approximate-to-exact flow repair: balance deficits
//! leaf-to-root along the least-lossy tree, push excesses along a spanning
//! tree toward the sink, then scale the whole flow down to clear the
//! capacity slack without raising the cost.

use std::collections::VecDeque;

use super::network::FlowNetwork;
use super::preprocess::least_lossy_tree;
use super::GenFlowError;

/// Per-edge amount entering each edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    amounts: Vec<f64>,
}

impl Flow {
    pub fn new(amounts: Vec<f64>) -> Result<Flow, GenFlowError> {
        for (j, &a) in amounts.iter().enumerate() {
            if !a.is_finite() || a < 0.0 {
                return Err(GenFlowError::InvalidFlow(format!(
                    "flow on edge {j} is {a}; must be finite and nonnegative"
                )));
            }
        }
        Ok(Flow { amounts })
    }

    pub fn zero(m: usize) -> Flow {
        Flow {
            amounts: vec![0.0; m],
        }
    }

    pub fn amounts(&self) -> &[f64] {
        &self.amounts
    }

    pub fn is_zero(&self) -> bool {
        self.amounts.iter().all(|&a| a == 0.0)
    }
}

/// Measured properties of a flow against a network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowReport {
    /// Net delivery at the sink, post-multiplier.
    pub value: f64,
    /// Total cost (zero where costs are absent).
    pub cost: f64,
    pub max_capacity_violation: f64,
    /// Largest conservation imbalance over vertices other than s and t.
    pub max_conservation_violation: f64,
}

/// Recomputes value, cost, and violations from scratch.
pub fn report(net: &FlowNetwork, flow: &Flow) -> Result<FlowReport, GenFlowError> {
    if flow.amounts.len() != net.m() {
        return Err(GenFlowError::InvalidFlow(format!(
            "flow over {} edges against network with {}",
            flow.amounts.len(),
            net.m()
        )));
    }
    let mut value = 0.0;
    let mut cost = 0.0;
    let mut max_cap = 0.0f64;
    let mut balance = vec![0.0f64; net.n()];
    for (j, e) in net.edges().iter().enumerate() {
        let f = flow.amounts[j];
        let delivered = e.gamma.value() * f;
        balance[e.head] += delivered;
        balance[e.tail] -= f;
        if e.head == net.t() {
            value += delivered;
        }
        if e.tail == net.t() {
            value -= f;
        }
        if let Some(q) = e.cost {
            cost += q as f64 * f;
        }
        max_cap = max_cap.max(f - e.capacity as f64);
    }
    let mut max_cons = 0.0f64;
    for (v, &b) in balance.iter().enumerate() {
        if v != net.s() && v != net.t() {
            max_cons = max_cons.max(b.abs());
        }
    }
    Ok(FlowReport {
        value,
        cost,
        max_capacity_violation: max_cap.max(0.0),
        max_conservation_violation: max_cons,
    })
}

/// Tree-depth ordering, deepest first, from a parent-edge map.
fn depth_order(parent_edge: &[Option<usize>], tails: impl Fn(usize) -> Option<usize>, n: usize) -> Vec<usize> {
    let mut depth = vec![0usize; n];
    for v in 0..n {
        let mut d = 0;
        let mut cur = v;
        while let Some(e) = parent_edge[cur] {
            d += 1;
            match tails(e) {
                Some(p) => cur = p,
                None => break,
            }
            if d > n {
                break; // cycle guard; parent maps from trees never loop
            }
        }
        depth[v] = d;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(depth[v]));
    order
}

/// Converts an `eps_flow`-approximate flow on a preprocessed network (every
/// vertex gain at least `ε/(2mnU)`, every vertex reaching `t`) into an exact
/// flow. The value drops by at most `ε/4` and the cost never rises.
pub fn repair_flow(
    net: &FlowNetwork,
    flow: &Flow,
    epsilon: f64,
    eps_flow: f64,
) -> Result<Flow, GenFlowError> {
    let initial = report(net, flow)?;
    let slack = eps_flow * 1e-9 + 1e-14;
    if initial.max_capacity_violation > eps_flow + slack
        || initial.max_conservation_violation > eps_flow + slack
    {
        return Err(GenFlowError::RepairRejected {
            capacity: initial.max_capacity_violation,
            conservation: initial.max_conservation_violation,
            eps_flow,
        });
    }
    // A flow this small is beaten by the empty flow within budget.
    if initial.value < epsilon / 4.0 {
        return Ok(Flow::zero(net.m()));
    }
    let sink_edge = net.sink_edge()?;
    let mut f = flow.amounts.clone();
    let in_edges = net.in_edges();
    let out_edges = net.out_edges();

    let balance_at = |f: &[f64], v: usize| -> f64 {
        let mut b = 0.0;
        for &j in &in_edges[v] {
            b += net.edges()[j].gamma.value() * f[j];
        }
        for &j in &out_edges[v] {
            b -= f[j];
        }
        b
    };

    // Pass 1: no vertex may ship more than it receives. Children of the
    // least-lossy tree settle before their parents; a deficit is met by
    // raising the tree in-edge.
    let tree = least_lossy_tree(net);
    let order = depth_order(
        &tree.parent_edge,
        |e| Some(net.edges()[e].tail),
        net.n(),
    );
    for &v in &order {
        if v == net.s() || v == net.t() {
            continue;
        }
        let deficit = -balance_at(&f, v);
        if deficit > 0.0 {
            let e = tree.parent_edge[v].ok_or_else(|| {
                GenFlowError::InvalidFlow(format!(
                    "vertex {v} has a deficit but no tree path from the source"
                ))
            })?;
            f[e] += deficit / net.edges()[e].gamma.value();
        }
    }

    // Pass 2: push leftover excess towards t along a reverse-BFS spanning
    // tree (ties broken by smallest edge id).
    let mut to_sink: Vec<Option<usize>> = vec![None; net.n()];
    let mut seen = vec![false; net.n()];
    seen[net.t()] = true;
    let mut queue = VecDeque::from([net.t()]);
    while let Some(v) = queue.pop_front() {
        for &j in &in_edges[v] {
            let u = net.edges()[j].tail;
            if !seen[u] {
                seen[u] = true;
                to_sink[u] = Some(j);
                queue.push_back(u);
            }
        }
    }
    let order = depth_order(&to_sink, |e| Some(net.edges()[e].head), net.n());
    for &v in &order {
        if v == net.s() || v == net.t() {
            continue;
        }
        let excess = balance_at(&f, v);
        if excess > 0.0 {
            let e = to_sink[v].ok_or_else(|| {
                GenFlowError::InvalidFlow(format!(
                    "vertex {v} has an excess but no path to the sink"
                ))
            })?;
            f[e] += excess;
        }
    }

    // Scale down to clear the remaining capacity slack. The reference value
    // bound is what the sink edge can carry (at least U), so the value lost
    // is at most ε/4.
    let e_t = &net.edges()[sink_edge];
    let v_ref = (net.u_max() as f64).max(e_t.gamma.value() * e_t.capacity as f64);
    let factor = 1.0 / (1.0 + epsilon / (4.0 * v_ref));
    for a in f.iter_mut() {
        *a *= factor;
    }
    Flow::new(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genflow::network::{Edge, Gamma};

    fn edge_c(tail: usize, head: usize, cap: u64, num: u64, den: u64, cost: u64) -> Edge {
        Edge {
            tail,
            head,
            capacity: cap,
            gamma: Gamma::new(num, den).unwrap(),
            cost: Some(cost),
        }
    }

    fn chain_net() -> FlowNetwork {
        FlowNetwork::new(
            3,
            vec![edge_c(0, 1, 4, 1, 2, 1), edge_c(1, 2, 10, 1, 2, 2)],
            0,
            2,
            None,
        )
        .unwrap()
    }

    #[test]
    fn zero_flow_report_is_zero() {
        let net = chain_net();
        let rep = report(&net, &Flow::zero(2)).unwrap();
        assert_eq!(rep.value, 0.0);
        assert_eq!(rep.cost, 0.0);
        assert_eq!(rep.max_capacity_violation, 0.0);
        assert_eq!(rep.max_conservation_violation, 0.0);
    }

    #[test]
    fn feasible_flow_report() {
        // 4 into the first edge delivers 2 at the middle; 2 forwarded, 1
        // reaches t.
        let net = chain_net();
        let flow = Flow::new(vec![4.0, 2.0]).unwrap();
        let rep = report(&net, &flow).unwrap();
        assert!((rep.value - 1.0).abs() < 1e-15);
        assert!((rep.cost - 8.0).abs() < 1e-15);
        assert_eq!(rep.max_capacity_violation, 0.0);
        assert!(rep.max_conservation_violation < 1e-15);
    }

    #[test]
    fn report_measures_injected_perturbations() {
        let net = chain_net();
        let flow = Flow::new(vec![4.0 + 3e-3, 2.0 - 1e-3]).unwrap();
        let rep = report(&net, &flow).unwrap();
        // Capacity: edge 0 is 3e−3 over.
        assert!((rep.max_capacity_violation - 3e-3).abs() < 1e-12);
        // Conservation at the middle: in 2 + 1.5e−3, out 2 − 1e−3.
        assert!((rep.max_conservation_violation - 2.5e-3).abs() < 1e-12);
    }

    #[test]
    fn repair_scales_exact_flows() {
        let net = chain_net();
        let flow = Flow::new(vec![4.0, 2.0]).unwrap();
        let eps = 1e-2;
        let fixed = repair_flow(&net, &flow, eps, 1e-6).unwrap();
        let u = net.u_max() as f64;
        let factor = 1.0 / (1.0 + eps / (4.0 * u));
        for (got, want) in fixed.amounts().iter().zip([4.0 * factor, 2.0 * factor]) {
            assert!((got - want).abs() < 1e-12);
        }
        let rep = report(&net, &fixed).unwrap();
        assert_eq!(rep.max_capacity_violation, 0.0);
        assert!(rep.max_conservation_violation < 1e-12);
        // Value loses at most ε/4.
        assert!(rep.value >= 1.0 - eps / 4.0);
    }

    #[test]
    fn repair_zero_flow_stays_zero() {
        let net = chain_net();
        let fixed = repair_flow(&net, &Flow::zero(2), 1e-2, 1e-6).unwrap();
        assert!(fixed.is_zero());
    }

    #[test]
    fn repair_fixes_perturbed_flows_exactly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        // Diamond with a tail: s→a, s→b, a→c, b→c, c→t.
        let net = FlowNetwork::new(
            5,
            vec![
                edge_c(0, 1, 4, 1, 2, 1),
                edge_c(0, 2, 4, 3, 4, 2),
                edge_c(1, 3, 4, 1, 1, 1),
                edge_c(2, 3, 4, 1, 2, 3),
                edge_c(3, 4, 8, 1, 1, 1),
            ],
            0,
            4,
            None,
        )
        .unwrap();
        let eps = 1e-2;
        let eps_flow = 1e-5;
        // A feasible base flow: 2 on each source edge; c receives
        // 1·1 + 0.5·1.5 = 1.75 and forwards it all.
        let base = vec![2.0, 2.0, 1.0, 1.5, 1.75];
        for _ in 0..50 {
            let mut amounts = base.clone();
            // Per-edge perturbations of ±ε_FLOW/8 keep every vertex imbalance
            // (summed over at most three incident edges) below ε_FLOW.
            for a in amounts.iter_mut() {
                *a = (*a + (rng.random::<f64>() - 0.5) * eps_flow / 4.0).max(0.0);
            }
            let flow = Flow::new(amounts).unwrap();
            let before = report(&net, &flow).unwrap();
            assert!(before.max_conservation_violation <= eps_flow);
            let fixed = repair_flow(&net, &flow, eps, eps_flow).unwrap();
            let after = report(&net, &fixed).unwrap();
            assert_eq!(after.max_capacity_violation, 0.0, "capacity clean");
            assert!(
                after.max_conservation_violation <= 1e-10,
                "conservation {}",
                after.max_conservation_violation
            );
            assert!(after.value >= before.value - eps / 4.0 - 1e-9);
            assert!(after.cost <= before.cost + 1e-9);
        }
    }

    #[test]
    fn repair_rejects_gross_violations() {
        let net = chain_net();
        let flow = Flow::new(vec![4.5, 2.0]).unwrap(); // 0.5 over capacity
        match repair_flow(&net, &flow, 1e-2, 1e-6) {
            Err(GenFlowError::RepairRejected { capacity, .. }) => {
                assert!((capacity - 0.5).abs() < 1e-12);
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }
}
