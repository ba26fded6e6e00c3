//! The randomized diagonal-scaling loop: each iteration estimates the Schur
//! complement diagonals through a Gaussian projection, draws a random
//! rescaling of the non-dominated block, and solves one diagonally dominant
//! system to rescale the dominated block, so that a constant fraction of the
//! remaining rows become dominated with constant probability.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{
    dominated_rows, gram, gram_masked, mat_vec, DiagMatrix, Solver, SparseSym, TwoNnzFactor,
};

use super::{MMatrixConfig, MMatrixError};

/// Scaling loop state: the current diagonal and which rows of `DMD` are
/// dominated. Rows once dominated are kept in the top block even if a later
/// rescaling makes them marginal by less than the dominance slack; the row
/// sums of the top block stay nonnegative in exact arithmetic and tolerances
/// can blur this.
#[derive(Debug, Clone)]
pub struct ScalingState {
    pub d: DiagMatrix,
    pub dominated: Vec<bool>,
}

impl ScalingState {
    /// Initial state: `D = I`, dominated set read off `M` itself.
    pub fn initial(m: &SparseSym) -> ScalingState {
        ScalingState {
            d: DiagMatrix::identity(m.n()),
            dominated: dominated_rows(m),
        }
    }

    pub fn all_dominated(&self) -> bool {
        self.dominated.iter().all(|&b| b)
    }

    pub fn dominated_fraction(&self) -> f64 {
        let count = self.dominated.iter().filter(|&&b| b).count();
        count as f64 / self.dominated.len().max(1) as f64
    }

    /// Top (dominated) and bottom (remaining) row index lists, ascending.
    pub fn partition(&self) -> (Vec<usize>, Vec<usize>) {
        let mut top = Vec::new();
        let mut bottom = Vec::new();
        for (i, &dom) in self.dominated.iter().enumerate() {
            if dom {
                top.push(i);
            } else {
                bottom.push(i);
            }
        }
        (top, bottom)
    }
}

/// Result of the full scaling loop.
#[derive(Debug, Clone)]
pub struct ScalingResult {
    pub d: DiagMatrix,
    pub outer_iterations: usize,
}

/// Estimates the diagonal of the Schur complement
/// `S = M₂₂ − M₁₂ᵀ M₁₁⁻¹ M₁₂` for the row partition (`top`, `bottom`) of the
/// factor, via a `k`-row Gaussian projection: `σ_i = ‖(R − Q D₁ A₁) a_iᵀ‖²`
/// with `q_iᵀ` an approximate solve of `D₁M₁₁D₁` against `D₁A₁r_iᵀ`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_schur_diagonals(
    f: &TwoNnzFactor,
    top: &[usize],
    bottom: &[usize],
    d1: &[f64],
    k: usize,
    eps1: f64,
    solver: &Solver,
    rng: &mut ChaCha8Rng,
) -> Result<DiagMatrix, MMatrixError> {
    let m = f.cols();
    if d1.len() != top.len() {
        return Err(MMatrixError::Dimension(format!(
            "top scaling has length {}, partition has {} dominated rows",
            d1.len(),
            top.len()
        )));
    }
    // Map original row index -> position within the top block.
    let mut top_pos = vec![None; f.rows()];
    for (p, &i) in top.iter().enumerate() {
        top_pos[i] = Some(p);
    }

    // R: k×m standard normal.
    let mut r = vec![0.0f64; k * m];
    for v in r.iter_mut() {
        *v = rng.sample(StandardNormal);
    }

    // Q rows solve D₁M₁₁D₁ q = D₁A₁rᵀ; a shared preparation serves all k.
    let mut q = vec![0.0f64; k * top.len()];
    if !top.is_empty() {
        let m11 = gram_masked(f, &top_pos, top.len());
        let d1m11d1 = m11
            .scaled(&DiagMatrix::new(d1.to_vec()).map_err(MMatrixError::Linalg)?)
            .map_err(MMatrixError::Linalg)?;
        let prepared = solver.prepare(&d1m11d1).map_err(MMatrixError::Linalg)?;
        let row_inc = f.row_incidence();
        for ell in 0..k {
            // rhs = D₁ A₁ r_ellᵀ restricted to top rows.
            let mut rhs = vec![0.0; top.len()];
            for (p, &i) in top.iter().enumerate() {
                let mut acc = 0.0;
                for &(j, v) in &row_inc[i] {
                    acc += v * r[ell * m + j];
                }
                rhs[p] = d1[p] * acc;
            }
            let sol = prepared.solve(&rhs, eps1).map_err(MMatrixError::Linalg)?;
            q[ell * top.len()..(ell + 1) * top.len()].copy_from_slice(&sol);
        }
    }

    // P = R − Q D₁ A₁, dense k×m.
    let mut p = r;
    for j in 0..m {
        for (row, val) in f.col_entries(j) {
            if row == usize::MAX {
                continue;
            }
            if let Some(pos) = top_pos[row] {
                let scaled = d1[pos] * val;
                for ell in 0..k {
                    p[ell * m + j] -= q[ell * top.len() + pos] * scaled;
                }
            }
        }
    }

    // σ_i = ‖P a_iᵀ‖² over bottom rows a_i.
    let row_inc = f.row_incidence();
    let mut sigma = Vec::with_capacity(bottom.len());
    for (idx, &i) in bottom.iter().enumerate() {
        let mut acc = 0.0;
        for ell in 0..k {
            let mut dot = 0.0;
            for &(j, v) in &row_inc[i] {
                dot += v * p[ell * m + j];
            }
            acc += dot * dot;
        }
        if !(acc > 0.0) || !acc.is_finite() {
            return Err(MMatrixError::NonPositiveSigma {
                index: idx,
                value: acc,
            });
        }
        sigma.push(acc);
    }
    DiagMatrix::new(sigma).map_err(MMatrixError::Linalg)
}

/// One pass of the scaling loop: returns the next state with a fresh
/// diagonal `D′ = diag(D′₁, D′₂)` and the dominated set recomputed (never
/// shrinking).
pub fn scaling_iteration(
    f: &TwoNnzFactor,
    m: &SparseSym,
    state: &ScalingState,
    cfg: &MMatrixConfig,
    solver: &Solver,
    rng: &mut ChaCha8Rng,
) -> Result<ScalingState, MMatrixError> {
    cfg.validate()?;
    let (top, bottom) = state.partition();
    if bottom.is_empty() {
        return Ok(state.clone());
    }
    let d1: Vec<f64> = top.iter().map(|&i| state.d.get(i)).collect();

    let sigma = estimate_schur_diagonals(
        f, &top, &bottom, &d1, cfg.k, cfg.eps1, solver, rng,
    )?;

    // D′₂ = Σ^{−1/2} D_R with D_R uniform in (0,1).
    let d2_new: Vec<f64> = sigma
        .as_slice()
        .iter()
        .map(|&s| {
            let mut u: f64 = rng.random();
            while u == 0.0 {
                u = rng.random();
            }
            u / s.sqrt()
        })
        .collect();

    // D′₁ = D₁ · Solve(D₁M₁₁D₁, D₁(−M₁₂ D′₂ + δI)1, ε₂).
    let mut d_new = state.d.as_slice().to_vec();
    if !top.is_empty() {
        let mut top_pos = vec![None; f.rows()];
        for (p, &i) in top.iter().enumerate() {
            top_pos[i] = Some(p);
        }
        // M₁₂ D′₂ 1 = A₁ (A₂ᵀ d₂_vec): expand d₂ over full rows, form Aᵀd,
        // then contract with A over top rows.
        let mut d2_full = vec![0.0; f.rows()];
        for (p, &i) in bottom.iter().enumerate() {
            d2_full[i] = d2_new[p];
        }
        let at_d2 = f.t_mat_vec(&d2_full).map_err(MMatrixError::Linalg)?;
        let row_inc = f.row_incidence();
        let mut rhs = vec![0.0; top.len()];
        for (p, &i) in top.iter().enumerate() {
            // (M₁₂ D′₂ 1)_i = Σ_j A[i,j]·(A₂ᵀ d₂)_j; d₂ is zero on top rows,
            // so the full transpose product already restricts to the bottom.
            let mut m12_d2 = 0.0;
            for &(j, v) in &row_inc[i] {
                m12_d2 += v * at_d2[j];
            }
            rhs[p] = d1[p] * (-m12_d2 + cfg.delta);
        }
        let m11 = gram_masked(f, &top_pos, top.len());
        let d1m11d1 = m11
            .scaled(&DiagMatrix::new(d1.clone()).map_err(MMatrixError::Linalg)?)
            .map_err(MMatrixError::Linalg)?;
        let sol = solver
            .solve(&d1m11d1, &rhs, cfg.eps2)
            .map_err(MMatrixError::Linalg)?;
        // Entries provably stay positive by a δ·λ_max⁻¹/4 margin; round-off
        // within that margin is floored, anything worse is an inconsistency.
        let floor = cfg.delta / (4.0 * cfg.lambda_max);
        let tol = floor;
        for (p, &i) in top.iter().enumerate() {
            let v = d1[p] * sol[p];
            if v <= 0.0 {
                if v < -tol {
                    return Err(MMatrixError::NonPositiveScale { index: i, value: v });
                }
                d_new[i] = floor.max(f64::MIN_POSITIVE.sqrt());
            } else {
                d_new[i] = v;
            }
        }
    }
    for (p, &i) in bottom.iter().enumerate() {
        d_new[i] = d2_new[p];
    }

    let d = DiagMatrix::new(d_new).map_err(MMatrixError::Linalg)?;
    let scaled = m.scaled(&d).map_err(MMatrixError::Linalg)?;
    let fresh = dominated_rows(&scaled);
    let dominated: Vec<bool> = state
        .dominated
        .iter()
        .zip(&fresh)
        .map(|(&old, &new)| old || new)
        .collect();
    Ok(ScalingState { d, dominated })
}

/// Finds a positive diagonal `D` with `D·M·D` diagonally dominant, where
/// `M = f·fᵀ`.
pub fn find_dd_scaling(
    f: &TwoNnzFactor,
    cfg: &MMatrixConfig,
    solver: &Solver,
    rng: &mut ChaCha8Rng,
) -> Result<ScalingResult, MMatrixError> {
    cfg.validate()?;
    let m = gram(f, &DiagMatrix::identity(f.cols())).map_err(MMatrixError::Linalg)?;
    let mut state = ScalingState::initial(&m);
    let mut best_fraction = state.dominated_fraction();
    for iter in 0..cfg.max_outer_iters {
        if state.all_dominated() {
            return Ok(ScalingResult {
                d: state.d,
                outer_iterations: iter,
            });
        }
        state = scaling_iteration(f, &m, &state, cfg, solver, rng)?;
        best_fraction = best_fraction.max(state.dominated_fraction());
    }
    if state.all_dominated() {
        return Ok(ScalingResult {
            d: state.d,
            outer_iterations: cfg.max_outer_iters,
        });
    }
    Err(MMatrixError::ScalingStalled {
        iterations: cfg.max_outer_iters,
        best_fraction,
    })
}

/// Outcome of a single random-scaling draw, together with the quantities the
/// Random Scaling Lemma bounds: with probability at least
/// `(1−4r)/(4r+7)`, the fraction reaches
/// `(1/8 − r/2)(1 − β − 2/(3ζ))` where β is the fraction of diagonals below
/// ζ times the average diagonal.
#[derive(Debug, Clone, Copy)]
pub struct ScalingTrial {
    /// `|T|/n` with `T = {i : (MD·1)_i ≥ r·m_ii}` for the drawn `D`.
    pub fraction: f64,
    /// The lemma's guaranteed fraction for these `(r, ζ, M)`.
    pub target_fraction: f64,
    /// The lemma's success probability `(1−4r)/(4r+7)`.
    pub success_probability: f64,
    /// Fraction of diagonals below ζ times the average diagonal.
    pub beta: f64,
}

/// Draws `D` with uniform (0,1) diagonal and measures which rows of `MD`
/// have sums at least `r` times the pre-scaled diagonal.
pub fn random_scaling_trial(
    m: &SparseSym,
    r: f64,
    zeta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ScalingTrial, MMatrixError> {
    if !(0.0..=0.25).contains(&r) {
        return Err(MMatrixError::InvalidConfig(format!(
            "r = {r}; the lemma requires 0 ≤ r ≤ 1/4"
        )));
    }
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(MMatrixError::InvalidConfig(format!(
            "zeta = {zeta}; the lemma requires 0 < ζ ≤ 1"
        )));
    }
    let n = m.n();
    let d: Vec<f64> = (0..n)
        .map(|_| {
            let mut u: f64 = rng.random();
            while u == 0.0 {
                u = rng.random();
            }
            u
        })
        .collect();
    let sums = mat_vec(m, &d).map_err(MMatrixError::Linalg)?;
    let diag = m.diagonal();
    let count = (0..n).filter(|&i| sums[i] >= r * diag[i]).count();
    let avg = diag.iter().sum::<f64>() / n as f64;
    let beta = diag.iter().filter(|&&v| v < zeta * avg).count() as f64 / n as f64;
    Ok(ScalingTrial {
        fraction: count as f64 / n as f64,
        target_fraction: (0.125 - r / 2.0) * (1.0 - beta - 2.0 / (3.0 * zeta)),
        success_probability: (1.0 - 4.0 * r) / (4.0 * r + 7.0),
        beta,
    })
}

/// Test fixtures shared across the crate's test modules.
#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Random factor whose gram is an M-matrix: mixed-sign two-entry columns
    /// plus single-entry columns that keep the gram positive definite.
    pub(crate) fn random_mmatrix_factor(
        n: usize,
        extra_cols: usize,
        rng: &mut ChaCha8Rng,
    ) -> TwoNnzFactor {
        let mut cols = Vec::new();
        for i in 0..n {
            cols.push(vec![(i, 0.3 + rng.random::<f64>())]);
        }
        for _ in 0..extra_cols {
            let r1 = rng.random_range(0..n);
            let mut r2 = rng.random_range(0..n);
            while r2 == r1 {
                r2 = rng.random_range(0..n);
            }
            cols.push(vec![
                (r1, 0.2 + 2.0 * rng.random::<f64>()),
                (r2, -(0.2 + 2.0 * rng.random::<f64>())),
            ]);
        }
        TwoNnzFactor::new(n, cols).unwrap()
    }

    /// Adversarial row rescaling destroys any accidental dominance.
    pub(crate) fn skew_rows(f: &TwoNnzFactor, spread: f64, rng: &mut ChaCha8Rng) -> TwoNnzFactor {
        let scales: Vec<f64> = (0..f.rows())
            .map(|_| spread.powf(rng.random::<f64>() * 2.0 - 1.0))
            .collect();
        f.scale_rows(&scales).unwrap()
    }
}
