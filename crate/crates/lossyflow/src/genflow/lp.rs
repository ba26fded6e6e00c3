//! Canonical-form linear programs for generalized max-flow and min-cost
//! flow. Both share the block constraint matrix
//!
//! ```text
//! Ā = [ A  .  .  I  −I ]   x = (x₁ flow, x₂ unused cap, x₃ cap relax,
//!     [ I  I  −I .   . ]        x₄/x₅ conservation relax)
//! ```
//!
//! where the relaxation blocks carry a penalty large enough that they vanish
//! at the optimum while keeping the dual polytope bounded.

use crate::ipm::CanonicalLP;
use crate::linalg::SparseMat;

use super::network::FlowNetwork;
use super::GenFlowError;

/// Where each variable/constraint block lives inside the LP.
#[derive(Debug, Clone)]
pub struct LpLayout {
    pub m_edges: usize,
    /// Number of vertex conservation rows (n−2 for max-flow, n−1 for
    /// min-cost, which keeps the sink row).
    pub n_vertex_rows: usize,
    /// Vertex id → conservation row.
    pub vertex_row: Vec<Option<usize>>,
}

impl LpLayout {
    pub fn total_cols(&self) -> usize {
        3 * self.m_edges + 2 * self.n_vertex_rows
    }

    pub fn total_rows(&self) -> usize {
        self.n_vertex_rows + self.m_edges
    }
}

/// A built flow LP: the canonical program plus the pieces the structured
/// backend and the drivers need.
#[derive(Debug, Clone)]
pub struct FlowLp {
    pub lp: CanonicalLP,
    pub layout: LpLayout,
    /// The bare flow block `A` over the vertex rows (γ at heads, −1 at
    /// tails); its gram is an M-matrix for every lossy network.
    pub flow_block: SparseMat,
    pub eps_flow: f64,
}

fn vertex_rows(net: &FlowNetwork, keep_sink_row: bool) -> LpLayout {
    let mut vertex_row = vec![None; net.n()];
    let mut next = 0usize;
    for v in 0..net.n() {
        if v == net.s() || (!keep_sink_row && v == net.t()) {
            continue;
        }
        vertex_row[v] = Some(next);
        next += 1;
    }
    LpLayout {
        m_edges: net.m(),
        n_vertex_rows: next,
        vertex_row,
    }
}

fn flow_block(net: &FlowNetwork, layout: &LpLayout) -> Result<SparseMat, GenFlowError> {
    let mut cols = Vec::with_capacity(net.m());
    for e in net.edges() {
        let mut col: Vec<(usize, f64)> = Vec::new();
        let tail_row = layout.vertex_row[e.tail];
        let head_row = layout.vertex_row[e.head];
        match (tail_row, head_row) {
            (Some(r1), Some(r2)) if r1 == r2 => {
                // Self-loop on an internal vertex: net multiplier γ − 1.
                let v = e.gamma.value() - 1.0;
                if v != 0.0 {
                    col.push((r1, v));
                }
            }
            _ => {
                if let Some(r) = tail_row {
                    col.push((r, -1.0));
                }
                if let Some(r) = head_row {
                    col.push((r, e.gamma.value()));
                }
            }
        }
        cols.push(col);
    }
    SparseMat::from_columns(layout.n_vertex_rows, cols)
        .map_err(|e| GenFlowError::InvalidNetwork(e.to_string()))
}

/// Assembles the full block matrix Ā from the flow block.
fn assemble_block_matrix(
    flow: &SparseMat,
    layout: &LpLayout,
) -> Result<SparseMat, GenFlowError> {
    let nv = layout.n_vertex_rows;
    let m = layout.m_edges;
    let mut cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(layout.total_cols());
    // x₁: A over vertex rows plus I over edge rows.
    for j in 0..m {
        let mut col: Vec<(usize, f64)> = flow.col(j).collect();
        col.push((nv + j, 1.0));
        cols.push(col);
    }
    // x₂: I over edge rows.
    for j in 0..m {
        cols.push(vec![(nv + j, 1.0)]);
    }
    // x₃: −I over edge rows.
    for j in 0..m {
        cols.push(vec![(nv + j, -1.0)]);
    }
    // x₄: I over vertex rows.
    for i in 0..nv {
        cols.push(vec![(i, 1.0)]);
    }
    // x₅: −I over vertex rows.
    for i in 0..nv {
        cols.push(vec![(i, -1.0)]);
    }
    SparseMat::from_columns(layout.total_rows(), cols)
        .map_err(|e| GenFlowError::InvalidNetwork(e.to_string()))
}

/// Builds the modified max-flow LP: objective `−γ(e_t)·x₁(e_t)` plus penalty
/// `4U/ε_FLOW` on the relaxation blocks; dual bound `(nU+1)·4U/ε_FLOW + 1`;
/// `y⁰ = (0, −(2U/ε_FLOW)·1)` whose slacks stay at least `U/ε_FLOW`;
/// `λ_min = 2`.
pub fn build_maxflow_lp(net: &FlowNetwork, eps_flow: f64) -> Result<FlowLp, GenFlowError> {
    if !(eps_flow > 0.0) {
        return Err(GenFlowError::InvalidConfig(
            "eps_flow must be positive".into(),
        ));
    }
    let sink_edge = net.sink_edge()?;
    let layout = vertex_rows(net, false);
    let flow = flow_block(net, &layout)?;
    let a_bar = assemble_block_matrix(&flow, &layout)?;
    let nv = layout.n_vertex_rows;
    let m = layout.m_edges;
    let u = net.u_max() as f64;
    let n = net.n() as f64;
    let penalty = 4.0 * u / eps_flow;

    let mut c = vec![0.0; layout.total_cols()];
    c[sink_edge] = -net.edges()[sink_edge].gamma.value();
    for j in 2 * m..3 * m {
        c[j] = penalty;
    }
    for j in 3 * m..3 * m + 2 * nv {
        c[j] = penalty;
    }
    let mut b = vec![0.0; layout.total_rows()];
    for (j, e) in net.edges().iter().enumerate() {
        b[nv + j] = e.capacity as f64;
    }
    let mut y0 = vec![0.0; layout.total_rows()];
    for slot in y0.iter_mut().skip(nv) {
        *slot = -penalty / 2.0; // −2U/ε_FLOW
    }
    let t_bound = (n * u + 1.0) * penalty + 1.0;
    let lp = CanonicalLP::new(a_bar, b, c, t_bound, 2.0, y0)
        .map_err(|e| GenFlowError::LpConstruction(e.to_string()))?;
    Ok(FlowLp {
        lp,
        layout,
        flow_block: flow,
        eps_flow,
    })
}

/// Builds the modified min-cost LP for target value `f_value`. The flow
/// block keeps the sink row, so conservation at `t` pins the delivered
/// value: `b = (F·e_t; c)`. Costs arrive as an explicit vector so callers
/// may pre-scale them (`cost_scale` multiplies the penalty, the dual bound
/// and `y⁰` to match). Penalty `4mU²/ε_FLOW`, dual bound `(nU+1)·4mU²/ε_FLOW`,
/// `y⁰ = (0, −(mU²/ε_FLOW)·1)` with slacks at least `mU²/ε_FLOW`.
pub fn build_mincost_lp(
    net: &FlowNetwork,
    f_value: f64,
    eps_flow: f64,
    costs: &[f64],
    cost_scale: f64,
) -> Result<FlowLp, GenFlowError> {
    if !(eps_flow > 0.0) || !(cost_scale > 0.0) {
        return Err(GenFlowError::InvalidConfig(
            "eps_flow and cost_scale must be positive".into(),
        ));
    }
    if costs.len() != net.m() {
        return Err(GenFlowError::InvalidConfig(format!(
            "cost vector of length {} against {} edges",
            costs.len(),
            net.m()
        )));
    }
    if !(f_value > 0.0) {
        return Err(GenFlowError::InvalidConfig(
            "target value must be positive; handle zero targets upstream".into(),
        ));
    }
    net.sink_edge()?;
    let layout = vertex_rows(net, true);
    let flow = flow_block(net, &layout)?;
    let a_bar = assemble_block_matrix(&flow, &layout)?;
    let nv = layout.n_vertex_rows;
    let m = layout.m_edges;
    let u = net.u_max() as f64;
    let n = net.n() as f64;
    let penalty = cost_scale * 4.0 * m as f64 * u * u / eps_flow;

    let mut c = vec![0.0; layout.total_cols()];
    c[..m].copy_from_slice(costs);
    for j in 2 * m..3 * m {
        c[j] = penalty;
    }
    for j in 3 * m..3 * m + 2 * nv {
        c[j] = penalty;
    }
    let mut b = vec![0.0; layout.total_rows()];
    b[layout.vertex_row[net.t()].expect("sink row present")] = f_value;
    for (j, e) in net.edges().iter().enumerate() {
        b[nv + j] = e.capacity as f64;
    }
    let mut y0 = vec![0.0; layout.total_rows()];
    for slot in y0.iter_mut().skip(nv) {
        *slot = -penalty / 4.0; // −mU²/ε_FLOW, scaled
    }
    let t_bound = (n * u + 1.0) * penalty;
    let lp = CanonicalLP::new(a_bar, b, c, t_bound, 2.0, y0)
        .map_err(|e| GenFlowError::LpConstruction(e.to_string()))?;
    Ok(FlowLp {
        lp,
        layout,
        flow_block: flow,
        eps_flow,
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
            cost: Some(1),
        }
    }

    fn one_edge_net() -> FlowNetwork {
        FlowNetwork::new(2, vec![edge(0, 1, 4, 1, 2)], 0, 1, None).unwrap()
    }

    #[test]
    fn one_edge_dimensions_and_objective() {
        let net = one_edge_net();
        let flp = build_maxflow_lp(&net, 1e-3).unwrap();
        // No internal vertices: variables = 3m, constraints = m.
        assert_eq!(flp.layout.n_vertex_rows, 0);
        assert_eq!(flp.lp.a.cols(), 3);
        assert_eq!(flp.lp.a.rows(), 1);
        // Objective carries −γ(e_t) on the sink edge.
        assert_eq!(flp.lp.c[0], -0.5);
        assert_eq!(flp.lp.b[0], 4.0);
    }

    #[test]
    fn block_dimensions_general() {
        // Chain s→a→t: one internal vertex.
        let net = FlowNetwork::new(
            3,
            vec![edge(0, 1, 4, 1, 2), edge(1, 2, 10, 1, 2)],
            0,
            2,
            None,
        )
        .unwrap();
        let flp = build_maxflow_lp(&net, 1e-3).unwrap();
        let (n, m) = (3usize, 2usize);
        assert_eq!(flp.layout.n_vertex_rows, n - 2);
        assert_eq!(flp.lp.a.cols(), 3 * m + 2 * (n - 2));
        assert_eq!(flp.lp.a.rows(), (n - 2) + m);
        // Initial slacks stay at least U/ε_FLOW.
        let floor = net.u_max() as f64 / flp.eps_flow;
        assert!(flp.lp.s0_min() >= floor);
    }

    #[test]
    fn mincost_keeps_sink_row() {
        let net = FlowNetwork::new(
            3,
            vec![edge(0, 1, 4, 1, 2), edge(1, 2, 10, 1, 2)],
            0,
            2,
            None,
        )
        .unwrap();
        let flp = build_mincost_lp(&net, 1.0, 1e-3, &[1.0, 1.0], 1.0).unwrap();
        assert_eq!(flp.layout.n_vertex_rows, 2);
        let t_row = flp.layout.vertex_row[2].unwrap();
        assert_eq!(flp.lp.b[t_row], 1.0);
        let floor = net.m() as f64 * (net.u_max() as f64).powi(2) / flp.eps_flow;
        assert!(flp.lp.s0_min() >= floor * (1.0 - 1e-12));
    }

    #[test]
    fn flow_block_gram_is_m_matrix() {
        // Off-diagonals of A·Aᵀ are ≤ 0 for every lossy net: each column has
        // the pattern (−1, γ).
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let n = 4 + rng.random_range(0..5);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in 0..n {
                    if u != v && rng.random::<f64>() < 0.5 {
                        let den = 1 + rng.random_range(0..4);
                        let num = 1 + rng.random_range(0..den);
                        edges.push(edge(u, v, 1 + rng.random_range(0..5), num, den));
                    }
                }
            }
            if edges.is_empty() {
                continue;
            }
            let net = FlowNetwork::new(n, edges, 0, n - 1, None).unwrap();
            let layout = vertex_rows(&net, false);
            let flow = flow_block(&net, &layout).unwrap();
            let nv = layout.n_vertex_rows;
            let mut gram = vec![0.0; nv * nv];
            for j in 0..flow.cols() {
                let entries: Vec<(usize, f64)> = flow.col(j).collect();
                for &(i1, v1) in &entries {
                    for &(i2, v2) in &entries {
                        gram[i1 * nv + i2] += v1 * v2;
                    }
                }
            }
            for i in 0..nv {
                for k in 0..nv {
                    if i != k {
                        assert!(gram[i * nv + k] <= 1e-14, "positive off-diagonal");
                    }
                }
            }
        }
    }
}
