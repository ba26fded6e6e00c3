//! Generalized (lossy) max-flow and min-cost flow: network preprocessing,
//! the penalized LP constructions, the structured system backend, and the
//! end-to-end drivers that turn interior-point output into exact flows.

mod backend;
mod lp;
mod network;
mod preprocess;
mod repair;

pub use backend::{structured_backend, StructuredBackend};
pub use lp::{build_maxflow_lp, build_mincost_lp, FlowLp, LpLayout};
pub use network::{normalize_sink, Edge, FlowNetwork, Gamma};
pub use preprocess::{least_lossy_tree, prune, LossTree, Pruned};
pub use repair::{repair_flow, report, Flow, FlowReport};

use thiserror::Error;

use crate::ipm::{
    interior_point_traced, DenseBackend, IpmConfig, IpmError, IpmStats, IterativeBackend,
    SystemBackend, TraceSink,
};
pub use crate::mmatrix::ParamMode;
use crate::mmatrix::SchurInner;

#[derive(Debug, Error)]
pub enum GenFlowError {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid flow: {0}")]
    InvalidFlow(String),
    #[error("the sink is not reachable from the source; the maximum flow is 0")]
    SinkUnreachable,
    #[error("LP construction failed: {0}")]
    LpConstruction(String),
    #[error(transparent)]
    Ipm(#[from] IpmError),
    #[error(
        "penalty variable {index} = {value:.3e} exceeds ε_FLOW/2 = {threshold:.3e}; \
         the solution cannot be a flow"
    )]
    PenaltyResidue {
        index: usize,
        value: f64,
        threshold: f64,
    },
    #[error(
        "flow rejected by repair: capacity violation {capacity:.3e}, conservation \
         violation {conservation:.3e} exceed ε_FLOW = {eps_flow:.3e}"
    )]
    RepairRejected {
        capacity: f64,
        conservation: f64,
        eps_flow: f64,
    },
    #[error("min-cost flow requires a cost on every edge")]
    MissingCosts,
}

/// Which linear-system backend drives the interior-point iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FlowBackend {
    /// Dense factorization of the assembled normal matrix.
    Dense,
    /// Matrix-free conjugate gradients; suited to mild conditioning only.
    Iterative,
    /// Schur-complement route with a direct inner solve (default).
    #[default]
    Structured,
    /// Schur-complement route through the full randomized M-matrix
    /// reduction.
    StructuredMMatrix,
}

/// Driver configuration.
#[derive(Debug, Clone)]
pub struct GenFlowConfig {
    /// Additive approximation target for the flow value.
    pub epsilon: f64,
    pub mode: ParamMode,
    pub seed: u64,
    pub backend: FlowBackend,
}

impl GenFlowConfig {
    pub fn new(epsilon: f64) -> GenFlowConfig {
        GenFlowConfig {
            epsilon,
            mode: ParamMode::Practical,
            seed: 0,
            backend: FlowBackend::Structured,
        }
    }

    /// The per-constraint slack the interior-point stage is allowed:
    /// `ε²/(64m²n²U³)` in paper-exact mode. That constant underflows
    /// double-precision conditioning beyond toy sizes, so practical mode
    /// uses `ε/(16mU)` and relies on the a-posteriori repair and report
    /// checks instead of the worst-case constants.
    pub fn eps_flow(&self, m: usize, n: usize, u: u64) -> f64 {
        let (m, n, u) = (m as f64, n as f64, u as f64);
        match self.mode {
            ParamMode::PaperExact => {
                self.epsilon * self.epsilon / (64.0 * m * m * n * n * u * u * u)
            }
            ParamMode::Practical => self.epsilon / (16.0 * m * u),
        }
    }

    fn validate(&self, net: &FlowNetwork) -> Result<(), GenFlowError> {
        if !(self.epsilon > 0.0 && self.epsilon < net.u_max() as f64) {
            return Err(GenFlowError::InvalidConfig(format!(
                "epsilon = {} must lie in (0, U = {})",
                self.epsilon,
                net.u_max()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MaxFlowResult {
    /// Exact feasible flow on the original edges.
    pub flow: Flow,
    /// Net delivery at the sink.
    pub value: f64,
    pub report: FlowReport,
    pub stats: IpmStats,
}

#[derive(Debug, Clone)]
pub struct MinCostResult {
    pub flow: Flow,
    pub value: f64,
    pub cost: f64,
    pub report: FlowReport,
    pub stats: IpmStats,
}

fn make_backend(cfg: &GenFlowConfig, flp: &FlowLp) -> Box<dyn SystemBackend> {
    match cfg.backend {
        FlowBackend::Dense => Box::new(DenseBackend::new(flp.lp.a.clone())),
        FlowBackend::Iterative => Box::new(IterativeBackend::new(flp.lp.a.clone(), 500_000)),
        FlowBackend::Structured => {
            Box::new(structured_backend(flp, SchurInner::Direct, cfg.seed ^ 0x5f5f))
        }
        FlowBackend::StructuredMMatrix => Box::new(structured_backend(
            flp,
            SchurInner::MMatrix,
            cfg.seed ^ 0x5f5f,
        )),
    }
}

/// Every relaxation variable must have collapsed to at most `ε_FLOW/2`,
/// otherwise the LP answer does not describe a flow.
fn check_penalty_collapse(x: &[f64], m: usize, eps_flow: f64) -> Result<(), GenFlowError> {
    let threshold = eps_flow / 2.0;
    for (offset, &xj) in x[2 * m..].iter().enumerate() {
        if xj > threshold * (1.0 + 1e-6) {
            return Err(GenFlowError::PenaltyResidue {
                index: 2 * m + offset,
                value: xj,
                threshold,
            });
        }
    }
    Ok(())
}

/// Lifts a repaired flow on the pruned network back to the original edge
/// ids; pruned-away edges carry zero, the artificial sink edge (if any) is
/// dropped.
fn map_back(original_m: usize, pruned: &Pruned, flow: &Flow) -> Flow {
    let mut amounts = vec![0.0; original_m];
    for (j, slot) in amounts.iter_mut().enumerate() {
        if let Some(pj) = pruned.edge_map.get(j).copied().flatten() {
            *slot = flow.amounts()[pj];
        }
    }
    Flow::new(amounts).expect("mapped flow entries are finite and nonnegative")
}

fn zero_max_result(net: &FlowNetwork) -> Result<MaxFlowResult, GenFlowError> {
    let flow = Flow::zero(net.m());
    let rep = report(net, &flow)?;
    Ok(MaxFlowResult {
        flow,
        value: 0.0,
        report: rep,
        stats: IpmStats::default(),
    })
}

fn zero_min_cost_result(net: &FlowNetwork, stats: IpmStats) -> Result<MinCostResult, GenFlowError> {
    let flow = Flow::zero(net.m());
    let rep = report(net, &flow)?;
    Ok(MinCostResult {
        flow,
        value: 0.0,
        cost: 0.0,
        report: rep,
        stats,
    })
}

/// Generalized max-flow: preprocess, solve the penalized LP to an
/// `ε_FLOW`-approximate flow within `ε_FLOW/2` of the optimum, repair it to
/// an exact flow, and map back. The result is feasible with value at least
/// `OPT − ε`.
pub fn max_flow(net: &FlowNetwork, cfg: &GenFlowConfig) -> Result<MaxFlowResult, GenFlowError> {
    max_flow_traced(net, cfg, None)
}

pub fn max_flow_traced(
    net: &FlowNetwork,
    cfg: &GenFlowConfig,
    trace: TraceSink<'_, '_>,
) -> Result<MaxFlowResult, GenFlowError> {
    cfg.validate(net)?;
    let normalized = match normalize_sink(net) {
        Ok(n) => n,
        Err(GenFlowError::SinkUnreachable) => return zero_max_result(net),
        Err(e) => return Err(e),
    };
    let pruned = match prune(&normalized, cfg.epsilon) {
        Ok(p) => p,
        Err(GenFlowError::SinkUnreachable) => return zero_max_result(net),
        Err(e) => return Err(e),
    };
    let eps_flow = cfg.eps_flow(pruned.net.m(), pruned.net.n(), pruned.net.u_max());
    let flp = build_maxflow_lp(&pruned.net, eps_flow)?;
    let mut backend = make_backend(cfg, &flp);
    let ipm_cfg = IpmConfig::new(eps_flow / 2.0);
    let sol = interior_point_traced(&flp.lp, &ipm_cfg, backend.as_mut(), trace)?;
    check_penalty_collapse(&sol.x, flp.layout.m_edges, eps_flow)?;
    let lp_flow = Flow::new(sol.x[..flp.layout.m_edges].to_vec())?;
    let repaired = repair_flow(&pruned.net, &lp_flow, cfg.epsilon, eps_flow)?;
    let flow = map_back(net.m(), &pruned, &repaired);
    let rep = report(net, &flow)?;
    Ok(MaxFlowResult {
        value: rep.value,
        report: rep,
        flow,
        stats: sol.stats,
    })
}

/// Generalized min-cost flow: find a value `F` within `ε/8` of the maximum
/// with an exact max-flow pass, solve the min-cost LP at that value, scale
/// down slightly so the cost drops below the optimum cost, and repair. The
/// result has value at least `OPT − ε` and cost at most the minimum cost of
/// a maximum flow.
pub fn min_cost_flow(net: &FlowNetwork, cfg: &GenFlowConfig) -> Result<MinCostResult, GenFlowError> {
    min_cost_flow_traced(net, cfg, None)
}

pub fn min_cost_flow_traced(
    net: &FlowNetwork,
    cfg: &GenFlowConfig,
    mut trace: TraceSink<'_, '_>,
) -> Result<MinCostResult, GenFlowError> {
    cfg.validate(net)?;
    if !net.has_costs() {
        return Err(GenFlowError::MissingCosts);
    }
    let normalized = match normalize_sink(net) {
        Ok(n) => n,
        Err(GenFlowError::SinkUnreachable) => {
            return zero_min_cost_result(net, IpmStats::default())
        }
        Err(e) => return Err(e),
    };
    let pruned = match prune(&normalized, cfg.epsilon) {
        Ok(p) => p,
        Err(GenFlowError::SinkUnreachable) => {
            return zero_min_cost_result(net, IpmStats::default())
        }
        Err(e) => return Err(e),
    };
    let eps_flow = cfg.eps_flow(pruned.net.m(), pruned.net.n(), pruned.net.u_max());
    let m = pruned.net.m();

    // Stage 1: an exact max flow of the pruned network fixes the target
    // value F within ε/8 of the maximum (the repair at ε/4 loses at most
    // ε/16 on top of the ε_FLOW/2 LP gap).
    let flp1 = build_maxflow_lp(&pruned.net, eps_flow)?;
    let mut backend1 = make_backend(cfg, &flp1);
    let sol1 = interior_point_traced(
        &flp1.lp,
        &IpmConfig::new(eps_flow / 2.0),
        backend1.as_mut(),
        trace.as_deref_mut(),
    )?;
    check_penalty_collapse(&sol1.x, m, eps_flow)?;
    let stage1_flow = Flow::new(sol1.x[..m].to_vec())?;
    let repaired1 = repair_flow(&pruned.net, &stage1_flow, cfg.epsilon / 4.0, eps_flow)?;
    let f_target = report(&pruned.net, &repaired1)?.value;
    let mut stats = sol1.stats;
    if f_target <= cfg.epsilon / 4.0 {
        return zero_min_cost_result(net, stats);
    }

    // Stage 2: minimum cost at value F.
    let costs: Vec<f64> = pruned
        .net
        .edges()
        .iter()
        .map(|e| e.cost.expect("validated above") as f64)
        .collect();
    let flp2 = build_mincost_lp(&pruned.net, f_target, eps_flow, &costs, 1.0)?;
    let mut backend2 = make_backend(cfg, &flp2);
    let sol2 = interior_point_traced(
        &flp2.lp,
        &IpmConfig::new(eps_flow / 2.0),
        backend2.as_mut(),
        trace,
    )?;
    check_penalty_collapse(&sol2.x, m, eps_flow)?;
    stats.unshift_iters += sol2.stats.unshift_iters;
    stats.shift_iters += sol2.stats.shift_iters;
    stats.solve_calls += sol2.stats.solve_calls;

    // Scale down so the cost drops below the optimum cost of a maximum
    // flow; the reference bound mirrors the repair scaling.
    let sink_edge = pruned.net.sink_edge()?;
    let e_t = &pruned.net.edges()[sink_edge];
    let v_ref = (pruned.net.u_max() as f64).max(e_t.gamma.value() * e_t.capacity as f64);
    let shrink = 1.0 - cfg.epsilon / (12.0 * v_ref);
    let scaled: Vec<f64> = sol2.x[..m].iter().map(|&x| x * shrink).collect();
    let repaired2 = repair_flow(&pruned.net, &Flow::new(scaled)?, cfg.epsilon, eps_flow)?;
    let flow = map_back(net.m(), &pruned, &repaired2);
    let rep = report(net, &flow)?;
    Ok(MinCostResult {
        value: rep.value,
        cost: rep.cost,
        report: rep,
        flow,
        stats,
    })
}
