//! Linear systems in symmetric M-matrices given a two-nonzero factor
//! `M = A Aᵀ`: a randomized diagonal-scaling loop reduces the system to a
//! diagonally dominant one, which the `linalg` backends solve, plus the
//! Schur-complement / Sherman–Morrison solver for the augmented matrices the
//! interior-point method produces.

mod augmented;
mod jl;
mod scaling;
mod solve;

pub use augmented::{solve_augmented, AugSystem, AugmentedOpts, SchurInner};
pub use jl::{jl_success_bound, k_jl};
pub use scaling::{
    estimate_schur_diagonals, find_dd_scaling, random_scaling_trial, scaling_iteration,
    ScalingResult, ScalingState, ScalingTrial,
};
pub use solve::mmatrix_solve;

use crate::linalg::LinalgError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MMatrixError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid M-matrix configuration: {0}")]
    InvalidConfig(String),
    #[error("k_JL search exceeded 2^31 without meeting the target probability")]
    KJlOverflow,
    #[error(
        "scaling loop hit the iteration cap ({iterations}) with dominated \
         fraction {best_fraction:.4}"
    )]
    ScalingStalled {
        iterations: usize,
        best_fraction: f64,
    },
    #[error(
        "scaled diagonal went non-positive beyond tolerance at index {index} \
         (value {value:.3e}); eigenvalue bounds or inner tolerances are violated"
    )]
    NonPositiveScale { index: usize, value: f64 },
    #[error("Schur diagonal estimate {value:.3e} at index {index} is not positive")]
    NonPositiveSigma { index: usize, value: f64 },
    #[error("rank-one denominator 1 + vᵀz = {denominator:.3e} is at or below the numerical floor")]
    RankOneBreakdown { denominator: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Parameter mode: the paper's displayed constants or desk-scale defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParamMode {
    /// δ, ε₁, ε₂ and the Johnson–Lindenstrauss dimension exactly as displayed.
    PaperExact,
    /// k = 32 and ε₁ = ε₂ = 1e−8; δ keeps the displayed formula. The displayed
    /// k is impractically large and the tolerances far tighter than needed at
    /// desk scale; both modes are kept so the constants stay auditable.
    #[default]
    Practical,
}

/// Parameters of the M-matrix solve: eigenvalue bounds for `M = AAᵀ`, the
/// projection dimension, and the inner solve tolerances.
#[derive(Debug, Clone)]
pub struct MMatrixConfig {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Johnson–Lindenstrauss projection dimension.
    pub k: usize,
    /// Shift added to the right-hand side that defines the new top-block
    /// scaling, keeping it strictly positive under approximate solves.
    pub delta: f64,
    /// Tolerance of the solves behind the Schur-diagonal estimates.
    pub eps1: f64,
    /// Tolerance of the solve that produces the new top-block scaling.
    pub eps2: f64,
    pub max_outer_iters: usize,
    pub mode: ParamMode,
}

impl MMatrixConfig {
    /// The displayed parameter substitutions for an `n×m` factor:
    /// `δ = (1/24)·λ_min^{1/2}·κ^{−1/2}/n`, `ε₁ = 0.005·(1.01·κ·m·n)^{−1/2}`,
    /// `ε₂ = (1/72)·κ^{−5/2}/n²`, `k = k_JL(1/100, 1/5, 1/100, 1/3)`.
    pub fn paper_exact(
        lambda_min: f64,
        lambda_max: f64,
        n: usize,
        m: usize,
    ) -> Result<MMatrixConfig, MMatrixError> {
        let kappa = check_bounds(lambda_min, lambda_max)?;
        let nf = n as f64;
        let mf = m as f64;
        Ok(MMatrixConfig {
            lambda_min,
            lambda_max,
            k: k_jl(0.01, 0.2, 0.01, 1.0 / 3.0)?,
            delta: (1.0 / 24.0) * lambda_min.sqrt() / kappa.sqrt() / nf,
            eps1: 0.005 / (1.01 * kappa * mf * nf).sqrt(),
            eps2: (1.0 / 72.0) / kappa.powf(2.5) / (nf * nf),
            max_outer_iters: default_outer_cap(n),
            mode: ParamMode::PaperExact,
        })
    }

    /// Desk-scale defaults: `k = 32`, `ε₁ = ε₂ = 1e−8`, δ per the displayed
    /// formula.
    pub fn practical(
        lambda_min: f64,
        lambda_max: f64,
        n: usize,
    ) -> Result<MMatrixConfig, MMatrixError> {
        let kappa = check_bounds(lambda_min, lambda_max)?;
        Ok(MMatrixConfig {
            lambda_min,
            lambda_max,
            k: 32,
            delta: (1.0 / 24.0) * lambda_min.sqrt() / kappa.sqrt() / n as f64,
            eps1: 1e-8,
            eps2: 1e-8,
            max_outer_iters: default_outer_cap(n),
            mode: ParamMode::Practical,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }

    pub(crate) fn validate(&self) -> Result<(), MMatrixError> {
        check_bounds(self.lambda_min, self.lambda_max)?;
        if self.k < 4 {
            return Err(MMatrixError::InvalidConfig(format!(
                "projection dimension k = {}; must be ≥ 4",
                self.k
            )));
        }
        if !(self.delta > 0.0 && self.eps1 > 0.0 && self.eps2 > 0.0) {
            return Err(MMatrixError::InvalidConfig(
                "delta, eps1, eps2 must all be positive".into(),
            ));
        }
        if self.max_outer_iters == 0 {
            return Err(MMatrixError::InvalidConfig(
                "max_outer_iters must be ≥ 1".into(),
            ));
        }
        Ok(())
    }
}

fn check_bounds(lambda_min: f64, lambda_max: f64) -> Result<f64, MMatrixError> {
    if !(lambda_min > 0.0 && lambda_max >= lambda_min) {
        return Err(MMatrixError::InvalidConfig(format!(
            "eigenvalue bounds [{lambda_min}, {lambda_max}] must satisfy 0 < λ_min ≤ λ_max"
        )));
    }
    Ok(lambda_max / lambda_min)
}

/// Generous multiple of the expected O(log n) iteration count.
fn default_outer_cap(n: usize) -> usize {
    40 * ((n.max(2) as f64).log2().ceil() as usize + 2)
}
