//! Short-step dual path-following interior-point method running on an
//! approximate linear-system backend.
//!
//! The method follows the central path of the dual polytope
//! `{(y, s) : Aᵀy + s = c, s ≥ 0}` augmented with the objective cut
//! `bᵀy ≥ z`, whose slack is counted `m` times. Each step solves one system
//! in `ÃS̃⁻²Ãᵀ = AS⁻²Aᵀ + m·s_gap⁻²·bbᵀ` through the [`SystemBackend`]
//! contract. Proximity to the path (η) is never computed here; dense oracles
//! for it live in [`oracle`] and are exercised by tests.

mod backend;
pub mod oracle;

pub use backend::{DenseBackend, IterativeBackend, SystemBackend};

use thiserror::Error;

use crate::linalg::{LdltFactor, LinalgError, SparseMat, SparseSym};
use crate::mmatrix::MMatrixError;

#[derive(Debug, Error)]
pub enum IpmError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    MMatrix(#[from] MMatrixError),
    #[error("invalid linear program: {0}")]
    InvalidLp(String),
    #[error("invalid interior-point configuration: {0}")]
    InvalidConfig(String),
    #[error("{what}[{index}] = {value:.6e} is not positive")]
    SlackNotPositive {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("newton step rejected: {0}")]
    StepRejected(String),
    #[error("{phase:?} phase exceeded {iterations} iterations (z = {z:.6e}, s_gap = {s_gap:.6e})")]
    IterationCap {
        phase: Phase,
        iterations: usize,
        z: f64,
        s_gap: f64,
    },
    #[error("primal extraction failed: {0}")]
    ExtractionFailure(String),
    #[error("objective vector b is numerically zero; the path-following target is degenerate")]
    DegenerateObjective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Unshift,
    Shift,
    Extract,
}

/// A linear program in the canonical primal form
/// `min cᵀx  s.t.  Ax = b, x ≥ 0`, with the bounds the path-following
/// method needs: `t_bound` on the magnitude of all feasible dual
/// coordinates, `lambda_min` on the eigenvalues of `AAᵀ`, and a strictly
/// interior initial dual point `y0`.
#[derive(Debug, Clone)]
pub struct CanonicalLP {
    pub a: SparseMat,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub t_bound: f64,
    pub lambda_min: f64,
    pub y0: Vec<f64>,
    u_abs: f64,
    s0_min: f64,
}

/// Positive-definiteness of `AAᵀ` is verified by factorization up to this
/// dimension; larger systems are trusted.
const PD_CHECK_LIMIT: usize = 512;

impl CanonicalLP {
    pub fn new(
        a: SparseMat,
        b: Vec<f64>,
        c: Vec<f64>,
        t_bound: f64,
        lambda_min: f64,
        y0: Vec<f64>,
    ) -> Result<CanonicalLP, IpmError> {
        let (n, m) = (a.rows(), a.cols());
        if b.len() != n || c.len() != m || y0.len() != n {
            return Err(IpmError::InvalidLp(format!(
                "A is {n}x{m} but |b| = {}, |c| = {}, |y0| = {}",
                b.len(),
                c.len(),
                y0.len()
            )));
        }
        if !(t_bound > 0.0) || !(lambda_min > 0.0) {
            return Err(IpmError::InvalidLp(format!(
                "bounds T = {t_bound}, lambda_min = {lambda_min} must be positive"
            )));
        }
        let at_y0 = a.t_mat_vec(&y0)?;
        let mut s0_min = f64::INFINITY;
        for (j, (&cj, &t)) in c.iter().zip(&at_y0).enumerate() {
            let s = cj - t;
            if !(s > 0.0) {
                return Err(IpmError::InvalidLp(format!(
                    "initial slack s0[{j}] = {s:.6e}; y0 must be strictly interior"
                )));
            }
            s0_min = s0_min.min(s);
        }
        let u_abs = a
            .max_abs_entry()
            .max(b.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
            .max(c.iter().fold(0.0f64, |acc, v| acc.max(v.abs())));
        if n <= PD_CHECK_LIMIT {
            let gram = assemble_normal(&a, &vec![1.0; m], &[])?;
            if LdltFactor::new(&gram, false).is_err() {
                return Err(IpmError::InvalidLp("AAᵀ is not positive definite".into()));
            }
        }
        Ok(CanonicalLP {
            a,
            b,
            c,
            t_bound,
            lambda_min,
            y0,
            u_abs,
            s0_min,
        })
    }

    /// Largest entry magnitude over `A`, `b`, `c`.
    pub fn u_abs(&self) -> f64 {
        self.u_abs
    }

    /// Smallest initial slack `min(c − Aᵀy0)`.
    pub fn s0_min(&self) -> f64 {
        self.s0_min
    }

    fn slack(&self, y: &[f64]) -> Result<Vec<f64>, IpmError> {
        let at_y = self.a.t_mat_vec(y)?;
        Ok(self.c.iter().zip(&at_y).map(|(c, t)| c - t).collect())
    }
}

/// Interior dual iterate `(y, s, s_gap, z)`; slack positivity is enforced on
/// construction.
#[derive(Debug, Clone)]
pub struct DualState {
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub s_gap: f64,
    pub z: f64,
}

impl DualState {
    /// Builds the state for `(y, z)` against `lp`, recomputing the slacks.
    pub fn new(lp: &CanonicalLP, y: Vec<f64>, z: f64) -> Result<DualState, IpmError> {
        let s = lp.slack(&y)?;
        for (j, &sj) in s.iter().enumerate() {
            if !(sj > 0.0) {
                return Err(IpmError::SlackNotPositive {
                    what: "s",
                    index: j,
                    value: sj,
                });
            }
        }
        let s_gap = dot(&lp.b, &y) - z;
        if !(s_gap > 0.0) {
            return Err(IpmError::SlackNotPositive {
                what: "s_gap",
                index: 0,
                value: s_gap,
            });
        }
        Ok(DualState { y, s, s_gap, z })
    }

    /// Validates externally supplied parts against `lp` to 1e−10 relative.
    pub fn from_parts(
        lp: &CanonicalLP,
        y: Vec<f64>,
        s: Vec<f64>,
        s_gap: f64,
        z: f64,
    ) -> Result<DualState, IpmError> {
        let fresh = DualState::new(lp, y, z)?;
        for (j, (&given, &computed)) in s.iter().zip(&fresh.s).enumerate() {
            let scale = 1.0 + given.abs().max(computed.abs());
            if (given - computed).abs() > 1e-10 * scale {
                return Err(IpmError::InvalidLp(format!(
                    "s[{j}] = {given} disagrees with c − Aᵀy = {computed}"
                )));
            }
        }
        let scale = 1.0 + s_gap.abs().max(fresh.s_gap.abs());
        if (s_gap - fresh.s_gap).abs() > 1e-10 * scale {
            return Err(IpmError::InvalidLp(format!(
                "s_gap = {s_gap} disagrees with bᵀy − z = {}",
                fresh.s_gap
            )));
        }
        Ok(fresh)
    }
}

/// Driver configuration. `epsilon` is the additive optimality target;
/// iteration caps default to `⌈40·√m·ln(TUm/(λ_min·s⁰_min·ε))⌉`.
#[derive(Debug, Clone)]
pub struct IpmConfig {
    pub epsilon: f64,
    pub max_shift_iters: Option<usize>,
    pub max_unshift_iters: Option<usize>,
    pub eps3_override: Option<f64>,
    pub eps4_override: Option<f64>,
}

impl IpmConfig {
    pub fn new(epsilon: f64) -> IpmConfig {
        IpmConfig {
            epsilon,
            max_shift_iters: None,
            max_unshift_iters: None,
            eps3_override: None,
            eps4_override: None,
        }
    }

    fn validate(&self) -> Result<(), IpmError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(IpmError::InvalidConfig(format!(
                "epsilon = {}; must lie in (0, 1)",
                self.epsilon
            )));
        }
        Ok(())
    }

    fn default_cap(&self, lp: &CanonicalLP) -> usize {
        let m = lp.a.cols() as f64;
        let arg = lp.t_bound * lp.u_abs * m / (lp.lambda_min * lp.s0_min * self.epsilon);
        let log = arg.max(std::f64::consts::E).ln();
        (40.0 * m.sqrt() * log).ceil() as usize
    }
}

/// One line of the iteration trace.
#[derive(Debug, Clone, Copy)]
pub struct TraceEvent {
    pub phase: Phase,
    pub iter: usize,
    pub z: f64,
    pub s_gap: f64,
    pub eps: f64,
    pub solve_calls: usize,
}

pub type TraceSink<'s, 't> = Option<&'s mut (dyn FnMut(&TraceEvent) + 't)>;

/// Iteration counts of a completed run.
#[derive(Debug, Clone, Copy, Default)]
pub struct IpmStats {
    pub unshift_iters: usize,
    pub shift_iters: usize,
    pub solve_calls: usize,
}

/// Output of [`interior_point`].
#[derive(Debug, Clone)]
pub struct IpmSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub stats: IpmStats,
    pub final_z: f64,
    pub final_s_gap: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Assembles `A·diag(w)·Aᵀ (+ vvᵀ)` sparsely; used for LP validation.
fn assemble_normal(a: &SparseMat, w: &[f64], v: &[f64]) -> Result<SparseSym, LinalgError> {
    let n = a.rows();
    let mut dense = vec![0.0; n * n];
    for j in 0..a.cols() {
        let wj = w[j];
        let entries: Vec<(usize, f64)> = a.col(j).collect();
        for &(i1, v1) in &entries {
            for &(i2, v2) in &entries {
                if i2 <= i1 {
                    dense[i1 * n + i2] += wj * v1 * v2;
                }
            }
        }
    }
    if !v.is_empty() {
        for i1 in 0..n {
            for i2 in 0..=i1 {
                dense[i1 * n + i2] += v[i1] * v[i2];
            }
        }
    }
    let mut triplets = Vec::new();
    for i in 0..n {
        for j in 0..=i {
            if dense[i * n + j] != 0.0 {
                triplets.push((i, j, dense[i * n + j]));
            }
        }
    }
    SparseSym::from_triplets(n, &triplets)
}

/// One Newton step toward the analytic center of `{y : Aᵀy ≤ c}`:
/// `d_y` approximately solves `(AS⁻²Aᵀ)d = −AS⁻¹1` at
/// `ε₃ = 1/(20(√m+1))` and the step is damped by `1 − ε₃`.
pub fn newton_step(
    a: &SparseMat,
    c: &[f64],
    y: &[f64],
    backend: &mut dyn SystemBackend,
) -> Result<Vec<f64>, IpmError> {
    let at_y = a.t_mat_vec(y)?;
    let s: Vec<f64> = c.iter().zip(&at_y).map(|(ci, t)| ci - t).collect();
    for (j, &sj) in s.iter().enumerate() {
        if !(sj > 0.0) {
            return Err(IpmError::SlackNotPositive {
                what: "s",
                index: j,
                value: sj,
            });
        }
    }
    let m = a.cols() as f64;
    let eps3 = 1.0 / (20.0 * (m.sqrt() + 1.0));
    let inv_s: Vec<f64> = s.iter().map(|&x| 1.0 / x).collect();
    let g = a.mat_vec(&inv_s)?;
    let rhs: Vec<f64> = g.iter().map(|&x| -x).collect();
    let w: Vec<f64> = s.iter().map(|&x| 1.0 / (x * x)).collect();
    let d_y = backend.solve_weighted(&w, &[], &rhs, eps3)?;
    let y_plus: Vec<f64> = y
        .iter()
        .zip(&d_y)
        .map(|(yi, di)| yi + (1.0 - eps3) * di)
        .collect();
    // The step keeps the slacks positive for η < 1 starts.
    let at_y_plus = a.t_mat_vec(&y_plus)?;
    for (j, (&cj, &t)) in c.iter().zip(&at_y_plus).enumerate() {
        if !(cj - t > 0.0) {
            return Err(IpmError::StepRejected(format!(
                "post-step slack {j} is {:.6e}; the proximity precondition was violated",
                cj - t
            )));
        }
    }
    Ok(y_plus)
}

/// Newton step on the augmented system `Ã = [A | −b·1ᵀ_m]` with the cut at
/// `z_new`. The gap copies enter as the rank-one term `m·s_gap⁻²·bbᵀ` and
/// the tolerance uses the augmented column count `2m`.
fn newton_step_gap(
    lp: &CanonicalLP,
    y: &[f64],
    z_new: f64,
    eps3_override: Option<f64>,
    backend: &mut dyn SystemBackend,
) -> Result<Vec<f64>, IpmError> {
    let a = &lp.a;
    let m = a.cols() as f64;
    let at_y = a.t_mat_vec(y)?;
    let s: Vec<f64> = lp.c.iter().zip(&at_y).map(|(ci, t)| ci - t).collect();
    for (j, &sj) in s.iter().enumerate() {
        if !(sj > 0.0) {
            return Err(IpmError::SlackNotPositive {
                what: "s",
                index: j,
                value: sj,
            });
        }
    }
    let s_gap = dot(&lp.b, y) - z_new;
    if !(s_gap > 0.0) {
        return Err(IpmError::SlackNotPositive {
            what: "s_gap",
            index: 0,
            value: s_gap,
        });
    }
    let eps3 = eps3_override.unwrap_or(1.0 / (20.0 * ((2.0 * m).sqrt() + 1.0)));
    let inv_s: Vec<f64> = s.iter().map(|&x| 1.0 / x).collect();
    let g = a.mat_vec(&inv_s)?;
    // rhs = −Ã·S̃⁻¹·1 = −(A·S⁻¹1 − (m/s_gap)·b)
    let rhs: Vec<f64> = g
        .iter()
        .zip(&lp.b)
        .map(|(&gi, &bi)| -(gi - m / s_gap * bi))
        .collect();
    let w: Vec<f64> = s.iter().map(|&x| 1.0 / (x * x)).collect();
    let v: Vec<f64> = lp.b.iter().map(|&bi| m.sqrt() / s_gap * bi).collect();
    let d_y = backend.solve_weighted(&w, &v, &rhs, eps3)?;
    Ok(y
        .iter()
        .zip(&d_y)
        .map(|(yi, di)| yi + (1.0 - eps3) * di)
        .collect())
}

/// Advances the cut: `z⁺ = z + s_gap/(10√m)`, then one augmented Newton
/// step re-centers. `z` strictly increases and stays below the optimum.
pub fn shift(
    lp: &CanonicalLP,
    state: &DualState,
    backend: &mut dyn SystemBackend,
) -> Result<DualState, IpmError> {
    shift_with(lp, state, None, backend)
}

fn shift_with(
    lp: &CanonicalLP,
    state: &DualState,
    eps3_override: Option<f64>,
    backend: &mut dyn SystemBackend,
) -> Result<DualState, IpmError> {
    let m = lp.a.cols() as f64;
    let z_plus = state.z + state.s_gap / (10.0 * m.sqrt());
    let y_plus = newton_step_gap(lp, &state.y, z_plus, eps3_override, backend)?;
    DualState::new(lp, y_plus, z_plus)
}

/// Reverse step used to find the path: `ẑ⁺ = ẑ − ŝ_gap/(10√m)` against the
/// synthetic objective, growing the gap each iteration.
pub fn unshift(
    lp_hat: &CanonicalLP,
    state: &DualState,
    backend: &mut dyn SystemBackend,
) -> Result<DualState, IpmError> {
    unshift_with(lp_hat, state, None, backend)
}

fn unshift_with(
    lp_hat: &CanonicalLP,
    state: &DualState,
    eps3_override: Option<f64>,
    backend: &mut dyn SystemBackend,
) -> Result<DualState, IpmError> {
    let m = lp_hat.a.cols() as f64;
    let z_minus = state.z - state.s_gap / (10.0 * m.sqrt());
    let y_plus = newton_step_gap(lp_hat, &state.y, z_minus, eps3_override, backend)?;
    DualState::new(lp_hat, y_plus, z_minus)
}

/// Builds the synthetic objective `b̂ = A(S⁰)⁻¹1` whose central path passes
/// through `y0` exactly, and the companion LP sharing everything else.
pub fn hat_lp(lp: &CanonicalLP) -> Result<(CanonicalLP, f64), IpmError> {
    let s0 = lp.slack(&lp.y0)?;
    let inv_s0: Vec<f64> = s0.iter().map(|&x| 1.0 / x).collect();
    let b_hat = lp.a.mat_vec(&inv_s0)?;
    let m = lp.a.cols() as f64;
    let z_hat0 = dot(&b_hat, &lp.y0) - m;
    let lp_hat = CanonicalLP::new(
        lp.a.clone(),
        b_hat,
        lp.c.clone(),
        lp.t_bound,
        lp.lambda_min,
        lp.y0.clone(),
    )?;
    Ok((lp_hat, z_hat0))
}

/// Walks the `b̂`-path away from `y0` until the polytope is wide enough that
/// the true path is nearby, then transfers to the `b`-objective with
/// `z = bᵀy − 40·λ_min^{−1/2}·T·m·‖b‖`.
pub fn find_central_path(
    lp: &CanonicalLP,
    cfg: &IpmConfig,
    backend: &mut dyn SystemBackend,
) -> Result<(DualState, usize), IpmError> {
    find_central_path_traced(lp, cfg, backend, &mut None)
}

fn find_central_path_traced(
    lp: &CanonicalLP,
    cfg: &IpmConfig,
    backend: &mut dyn SystemBackend,
    trace: &mut TraceSink<'_, '_>,
) -> Result<(DualState, usize), IpmError> {
    cfg.validate()?;
    let m = lp.a.cols() as f64;
    if norm2(&lp.b) == 0.0 {
        return Err(IpmError::DegenerateObjective);
    }
    let (lp_hat, z_hat0) = hat_lp(lp)?;
    let mut state = DualState::new(&lp_hat, lp.y0.clone(), z_hat0)?;
    let threshold = 40.0 / lp.lambda_min.sqrt() * lp.t_bound * m * norm2(&lp_hat.b);
    let cap = cfg.max_unshift_iters.unwrap_or_else(|| cfg.default_cap(lp));
    let mut iters = 0usize;
    while state.s_gap < threshold {
        if iters >= cap {
            return Err(IpmError::IterationCap {
                phase: Phase::Unshift,
                iterations: iters,
                z: state.z,
                s_gap: state.s_gap,
            });
        }
        state = unshift_with(&lp_hat, &state, cfg.eps3_override, backend)?;
        iters += 1;
        if let Some(sink) = trace.as_mut() {
            sink(&TraceEvent {
                phase: Phase::Unshift,
                iter: iters,
                z: state.z,
                s_gap: state.s_gap,
                eps: cfg
                    .eps3_override
                    .unwrap_or(1.0 / (20.0 * ((2.0 * m).sqrt() + 1.0))),
                solve_calls: backend.solve_calls(),
            });
        }
    }
    let z = dot(&lp.b, &state.y) - threshold_for(lp);
    let out = DualState::new(lp, state.y, z)?;
    Ok((out, iters))
}

fn threshold_for(lp: &CanonicalLP) -> f64 {
    40.0 / lp.lambda_min.sqrt() * lp.t_bound * lp.a.cols() as f64 * norm2(&lp.b)
}

/// Recovers a strictly positive primal point from the terminal dual state:
/// one last solve at `ε₄ = min(1, (s_min/TU)·(√m/n))`, then
/// `x = x′/(m·x′_gap)`.
pub fn extract_primal(
    lp: &CanonicalLP,
    state: &DualState,
    backend: &mut dyn SystemBackend,
) -> Result<Vec<f64>, IpmError> {
    extract_primal_with(lp, state, None, backend)
}

fn extract_primal_with(
    lp: &CanonicalLP,
    state: &DualState,
    eps4_override: Option<f64>,
    backend: &mut dyn SystemBackend,
) -> Result<Vec<f64>, IpmError> {
    let a = &lp.a;
    let m = a.cols() as f64;
    let n = a.rows() as f64;
    let s_min = state.s.iter().fold(state.s_gap, |acc, &v| acc.min(v));
    let eps4 = eps4_override
        .unwrap_or_else(|| (s_min / (lp.t_bound * lp.u_abs) * (m.sqrt() / n)).min(1.0));
    let inv_s: Vec<f64> = state.s.iter().map(|&x| 1.0 / x).collect();
    let g = a.mat_vec(&inv_s)?;
    // rhs = Ã·S̃⁻¹·1 (positive sign, unlike the Newton right-hand side).
    let rhs: Vec<f64> = g
        .iter()
        .zip(&lp.b)
        .map(|(&gi, &bi)| gi - m / state.s_gap * bi)
        .collect();
    let w: Vec<f64> = state.s.iter().map(|&x| 1.0 / (x * x)).collect();
    let v: Vec<f64> = lp
        .b
        .iter()
        .map(|&bi| m.sqrt() / state.s_gap * bi)
        .collect();
    let sol = backend.solve_weighted(&w, &v, &rhs, eps4)?;
    let at_sol = a.t_mat_vec(&sol)?;
    let x_gap_prime = 1.0 / state.s_gap + dot(&lp.b, &sol) / (state.s_gap * state.s_gap);
    if !(x_gap_prime > 0.0) {
        return Err(IpmError::ExtractionFailure(format!(
            "x'_gap = {x_gap_prime:.6e} is not positive; the proximity contract was violated"
        )));
    }
    let mut x = Vec::with_capacity(state.s.len());
    for (j, (&sj, &t)) in state.s.iter().zip(&at_sol).enumerate() {
        let xj = 1.0 / sj - t / (sj * sj);
        if !(xj > 0.0) {
            return Err(IpmError::ExtractionFailure(format!(
                "x'[{j}] = {xj:.6e} is not positive; the proximity contract was violated"
            )));
        }
        x.push(xj / (m * x_gap_prime));
    }
    Ok(x)
}

/// Full driver: find the path, shift until `s_gap ≤ ε/3`, extract a primal
/// point with `x > 0`, `‖Ax − b‖ ≤ ε` and `cᵀx < z* + ε`.
pub fn interior_point(
    lp: &CanonicalLP,
    cfg: &IpmConfig,
    backend: &mut dyn SystemBackend,
) -> Result<IpmSolution, IpmError> {
    interior_point_traced(lp, cfg, backend, None)
}

/// Driver variant that reports one event per unshift/shift to `trace`.
pub fn interior_point_traced(
    lp: &CanonicalLP,
    cfg: &IpmConfig,
    backend: &mut dyn SystemBackend,
    mut trace: TraceSink<'_, '_>,
) -> Result<IpmSolution, IpmError> {
    cfg.validate()?;
    let m = lp.a.cols() as f64;
    let (mut state, unshift_iters) = find_central_path_traced(lp, cfg, backend, &mut trace)?;
    let cap = cfg.max_shift_iters.unwrap_or_else(|| cfg.default_cap(lp));
    let mut shift_iters = 0usize;
    while state.s_gap > cfg.epsilon / 3.0 {
        if shift_iters >= cap {
            return Err(IpmError::IterationCap {
                phase: Phase::Shift,
                iterations: shift_iters,
                z: state.z,
                s_gap: state.s_gap,
            });
        }
        state = shift_with(lp, &state, cfg.eps3_override, backend)?;
        shift_iters += 1;
        if let Some(sink) = trace.as_mut() {
            sink(&TraceEvent {
                phase: Phase::Shift,
                iter: shift_iters,
                z: state.z,
                s_gap: state.s_gap,
                eps: cfg
                    .eps3_override
                    .unwrap_or(1.0 / (20.0 * ((2.0 * m).sqrt() + 1.0))),
                solve_calls: backend.solve_calls(),
            });
        }
    }
    let x = extract_primal_with(lp, &state, cfg.eps4_override, backend)?;
    let objective = dot(&lp.c, &x);
    Ok(IpmSolution {
        x,
        objective,
        stats: IpmStats {
            unshift_iters,
            shift_iters,
            solve_calls: backend.solve_calls(),
        },
        final_z: state.z,
        final_s_gap: state.s_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Box dual polytope `{|y_i| ≤ 1}` from columns ±e_i, plus the data the
    /// driver needs. Optimum of the dual is `z* = Σ|b_i|`.
    pub(crate) fn box_lp(b: Vec<f64>, y0: Vec<f64>) -> CanonicalLP {
        let n = b.len();
        let mut cols = Vec::new();
        for i in 0..n {
            cols.push(vec![(i, 1.0)]);
            cols.push(vec![(i, -1.0)]);
        }
        let a = SparseMat::from_columns(n, cols).unwrap();
        let c = vec![1.0; 2 * n];
        // |y_i| ≤ 1 and s = c − Aᵀy ≤ 2 for all feasible duals.
        CanonicalLP::new(a, b, c, 2.5, 2.0, y0).unwrap()
    }

    #[test]
    fn shift_advances_z_by_gap_over_ten_root_m() {
        // s_gap = 1, m = 4 → z⁺ = z + 1/20.
        let lp = box_lp(vec![0.6, 0.1], vec![0.0, 0.0]);
        let z = dot(&lp.b, &lp.y0) - 1.0; // s_gap = 1
        let state = DualState::new(&lp, vec![0.0, 0.0], z).unwrap();
        assert!((state.s_gap - 1.0).abs() < 1e-12);
        let mut backend = DenseBackend::new(lp.a.clone());
        let next = shift(&lp, &state, &mut backend).unwrap();
        assert!((next.z - (z + 0.05)).abs() < 1e-12);
        assert!(next.z > state.z);
    }

    #[test]
    fn unshift_decreases_z_and_grows_gap() {
        let lp = box_lp(vec![0.5, 0.3], vec![0.2, -0.1]);
        let (lp_hat, z_hat0) = hat_lp(&lp).unwrap();
        let state = DualState::new(&lp_hat, lp.y0.clone(), z_hat0).unwrap();
        let mut backend = DenseBackend::new(lp.a.clone());
        let mut prev_gap = state.s_gap;
        let mut prev_z = state.z;
        let mut cur = state;
        for _ in 0..5 {
            cur = unshift(&lp_hat, &cur, &mut backend).unwrap();
            assert!(cur.z < prev_z);
            assert!(cur.s_gap > prev_gap);
            prev_z = cur.z;
            prev_gap = cur.s_gap;
        }
    }

    #[test]
    fn newton_step_fixed_point_at_center() {
        // At y = 0 the box polytope's center: AS⁻¹1 = 0, so y⁺ = y.
        let lp = box_lp(vec![0.6, 0.1], vec![0.0, 0.0]);
        let mut backend = DenseBackend::new(lp.a.clone());
        let y_plus = newton_step(&lp.a, &lp.c, &[0.0, 0.0], &mut backend).unwrap();
        assert!(y_plus.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn initial_hat_state_is_centered() {
        let lp = box_lp(vec![0.5, 0.3], vec![0.2, -0.4]);
        let (lp_hat, z_hat0) = hat_lp(&lp).unwrap();
        let state = DualState::new(&lp_hat, lp.y0.clone(), z_hat0).unwrap();
        assert!((state.s_gap - lp.a.cols() as f64).abs() < 1e-10);
        let s0 = lp.slack(&lp.y0).unwrap();
        let eta = oracle::eta_tilde_exact(&lp.a, &lp_hat.b, &s0, state.s_gap).unwrap();
        assert!(eta <= 1e-10, "initial hat-path proximity {eta}");
    }

    #[test]
    fn full_run_on_box_lp_reaches_optimum() {
        let b = vec![0.7, 0.3];
        let z_star = 1.0; // Σ|b_i| at the vertex y = (1, 1)
        let lp = box_lp(b, vec![0.25, -0.45]);
        let eps = 1e-3;
        let mut backend = DenseBackend::new(lp.a.clone());
        let sol = interior_point(&lp, &IpmConfig::new(eps), &mut backend).unwrap();
        assert!(sol.x.iter().all(|&v| v > 0.0));
        let ax = lp.a.mat_vec(&sol.x).unwrap();
        let feas: f64 = ax
            .iter()
            .zip(&lp.b)
            .map(|(l, r)| (l - r) * (l - r))
            .sum::<f64>()
            .sqrt();
        assert!(feas <= eps, "feasibility residual {feas}");
        assert!(sol.objective > z_star, "weak duality violated");
        assert!(sol.objective < z_star + eps, "objective {}", sol.objective);
        assert!(sol.final_s_gap <= eps / 3.0);
        assert!(sol.stats.shift_iters > 0 && sol.stats.solve_calls > 0);
    }

    #[test]
    fn halved_epsilon_halves_terminal_gap_threshold() {
        let lp = box_lp(vec![0.4, 0.2], vec![0.1, 0.1]);
        let mut backend = DenseBackend::new(lp.a.clone());
        let sol1 = interior_point(&lp, &IpmConfig::new(1e-2), &mut backend).unwrap();
        let mut backend2 = DenseBackend::new(lp.a.clone());
        let sol2 = interior_point(&lp, &IpmConfig::new(5e-3), &mut backend2).unwrap();
        assert!(sol1.final_s_gap <= 1e-2 / 3.0);
        assert!(sol2.final_s_gap <= 5e-3 / 3.0);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let lp = box_lp(vec![0.7, 0.3], vec![0.0, 0.0]);
        let cfg = IpmConfig {
            max_shift_iters: Some(3),
            ..IpmConfig::new(1e-6)
        };
        let mut backend = DenseBackend::new(lp.a.clone());
        match interior_point(&lp, &cfg, &mut backend) {
            Err(IpmError::IterationCap {
                phase: Phase::Shift,
                iterations: 3,
                ..
            }) => {}
            other => panic!("expected shift cap, got {other:?}"),
        }
    }

    #[test]
    fn backends_agree_on_primal_value() {
        let lp = box_lp(vec![0.55, 0.25, 0.1], vec![0.1, 0.0, -0.2]);
        let eps = 1e-3;
        let mut dense = DenseBackend::new(lp.a.clone());
        let sol_d = interior_point(&lp, &IpmConfig::new(eps), &mut dense).unwrap();
        let mut iter = IterativeBackend::new(lp.a.clone(), 200_000);
        let sol_i = interior_point(&lp, &IpmConfig::new(eps), &mut iter).unwrap();
        assert!(
            (sol_d.objective - sol_i.objective).abs() <= 10.0 * eps,
            "dense {} vs iterative {}",
            sol_d.objective,
            sol_i.objective
        );
    }

    #[test]
    fn trace_emits_one_line_per_shift() {
        let lp = box_lp(vec![0.6, 0.2], vec![0.0, 0.0]);
        let mut events = Vec::new();
        let mut sink = |e: &TraceEvent| events.push(*e);
        let mut backend = DenseBackend::new(lp.a.clone());
        let sol = interior_point_traced(&lp, &IpmConfig::new(1e-2), &mut backend, Some(&mut sink))
            .unwrap();
        let shifts = events.iter().filter(|e| e.phase == Phase::Shift).count();
        assert_eq!(shifts, sol.stats.shift_iters);
        // z is nondecreasing across the shift trace.
        let mut last = f64::NEG_INFINITY;
        for e in events.iter().filter(|e| e.phase == Phase::Shift) {
            assert!(e.z >= last);
            last = e.z;
        }
    }

    #[test]
    fn rejects_non_interior_start() {
        let n = 2;
        let mut cols = Vec::new();
        for i in 0..n {
            cols.push(vec![(i, 1.0)]);
            cols.push(vec![(i, -1.0)]);
        }
        let a = SparseMat::from_columns(n, cols).unwrap();
        let c = vec![1.0; 4];
        // y0 on the boundary: slack hits zero.
        assert!(CanonicalLP::new(a, vec![0.5, 0.5], c, 2.5, 2.0, vec![1.0, 0.0]).is_err());
    }
}
