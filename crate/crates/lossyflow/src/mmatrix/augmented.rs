//! Solver for the augmented block systems the interior-point method emits:
//!
//! ```text
//! M + vvᵀ,   M = [ A·D₁²·Aᵀ + D₂²   A·D₁²        ]
//!                [ D₁²·Aᵀ           D₁² + D₃²    ]
//! ```
//!
//! The Schur complement of `M` is again a factored M-matrix,
//! `M_S = A_S·A_Sᵀ` with `A_S = [A·D₁D₃(D₁²+D₃²)^{−1/2} | D₂]`, so two
//! M-matrix solves plus a block back-substitution solve `M`, and the
//! Sherman–Morrison formula folds in the rank-one update.

use std::fmt;

use rand_chacha::ChaCha8Rng;

use crate::linalg::{DiagMatrix, Solver, SparseMat, TwoNnzFactor};

use super::{mmatrix_solve, MMatrixConfig, MMatrixError, ParamMode};

/// An augmented system instance. `a` holds at most two nonzeros per column
/// (zero columns are allowed; they decouple). `v` has length `n + m`; a zero
/// `v` drops the rank-one term.
#[derive(Debug, Clone)]
pub struct AugSystem {
    /// The `n×m` block whose gram is an M-matrix.
    pub a: SparseMat,
    /// Diagonal of length `m`.
    pub d1: DiagMatrix,
    /// Diagonal of length `n`.
    pub d2: DiagMatrix,
    /// Diagonal of length `m`.
    pub d3: DiagMatrix,
    /// Rank-one update vector of length `n + m`.
    pub v: Vec<f64>,
}

impl AugSystem {
    pub fn new(
        a: SparseMat,
        d1: DiagMatrix,
        d2: DiagMatrix,
        d3: DiagMatrix,
        v: Vec<f64>,
    ) -> Result<AugSystem, MMatrixError> {
        let (n, m) = (a.rows(), a.cols());
        if d1.n() != m || d3.n() != m || d2.n() != n || v.len() != n + m {
            return Err(MMatrixError::Dimension(format!(
                "augmented system with A {n}x{m} needs |d1| = |d3| = {m}, |d2| = {n}, |v| = {}",
                n + m
            )));
        }
        for j in 0..m {
            if a.col(j).count() > 2 {
                return Err(MMatrixError::Dimension(format!(
                    "column {j} of A has more than two nonzeros"
                )));
            }
        }
        Ok(AugSystem { a, d1, d2, d3, v })
    }

    pub fn dim(&self) -> usize {
        self.a.rows() + self.a.cols()
    }

    fn has_rank_one(&self) -> bool {
        self.v.iter().any(|&x| x != 0.0)
    }

    /// The factored Schur complement `A_S = [A·D₁D₃(D₁²+D₃²)^{−1/2} | D₂]`,
    /// with zero columns of `A` omitted (they contribute nothing to the
    /// gram).
    fn schur_factor(&self) -> Result<TwoNnzFactor, MMatrixError> {
        let (n, m) = (self.a.rows(), self.a.cols());
        let mut cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m + n);
        for j in 0..m {
            let d1 = self.d1.get(j);
            let d3 = self.d3.get(j);
            let scale = d1 * d3 / (d1 * d1 + d3 * d3).sqrt();
            let col: Vec<(usize, f64)> = self
                .a
                .col(j)
                .map(|(r, val)| (r, val * scale))
                .collect();
            if !col.is_empty() {
                cols.push(col);
            }
        }
        for i in 0..n {
            cols.push(vec![(i, self.d2.get(i))]);
        }
        TwoNnzFactor::new(n, cols).map_err(MMatrixError::Linalg)
    }

    /// Eigenvalue bounds for `M_S`: `[d_min², d_max²(U√(nm)+1)]` over the
    /// diagonals of `D₁, D₂, D₃` and the largest entry magnitude of `A`.
    fn schur_eig_bounds(&self) -> (f64, f64) {
        let mut d_min = f64::INFINITY;
        let mut d_max = 0.0f64;
        for d in [&self.d1, &self.d2, &self.d3] {
            for &x in d.as_slice() {
                d_min = d_min.min(x);
                d_max = d_max.max(x);
            }
        }
        let u = self.a.max_abs_entry().max(1.0);
        let nm = (self.a.rows() * self.a.cols()).max(1) as f64;
        (d_min * d_min, d_max * d_max * (u * nm.sqrt() + 1.0))
    }
}

/// Plain-text dump for failure triage.
impl fmt::Display for AugSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "augsystem n={} m={}", self.a.rows(), self.a.cols())?;
        writeln!(f, "d1 {:?}", self.d1.as_slice())?;
        writeln!(f, "d2 {:?}", self.d2.as_slice())?;
        writeln!(f, "d3 {:?}", self.d3.as_slice())?;
        writeln!(f, "v {:?}", self.v)?;
        for j in 0..self.a.cols() {
            write!(f, "col {j}:")?;
            for (r, val) in self.a.col(j) {
                write!(f, " ({r}, {val})")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Which solver backs the two Schur-complement solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchurInner {
    /// The full randomized M-matrix reduction.
    #[default]
    MMatrix,
    /// Direct factorization of the assembled Schur complement; at desk scale
    /// the reduction buys nothing when a direct solver runs behind it anyway.
    Direct,
}

/// Options for `solve_augmented`.
#[derive(Debug, Clone)]
pub struct AugmentedOpts {
    pub mode: ParamMode,
    pub inner: SchurInner,
    pub max_outer_iters: Option<usize>,
}

impl Default for AugmentedOpts {
    fn default() -> Self {
        AugmentedOpts {
            mode: ParamMode::Practical,
            inner: SchurInner::MMatrix,
            max_outer_iters: None,
        }
    }
}

struct SchurContext<'a> {
    sys: &'a AugSystem,
    a_s: TwoNnzFactor,
    cfg: Option<MMatrixConfig>,
    solver: &'a Solver,
    /// (D₁² + D₃²) per column.
    w: Vec<f64>,
}

impl SchurContext<'_> {
    /// Solves `M x = b` through the Schur complement: the norm splits over
    /// the two blocks, so an `eps`-accurate Schur solve plus the exact
    /// back-substitution meets the contract on the full system.
    fn solve(&self, b: &[f64], eps: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, MMatrixError> {
        let (n, m) = (self.sys.a.rows(), self.sys.a.cols());
        let (b1, b2) = b.split_at(n);
        let top = if n == 0 {
            Vec::new()
        } else {
            // rhs = b₁ − A·D₁²(D₁²+D₃²)⁻¹·b₂
            let scaled_b2: Vec<f64> = (0..m)
                .map(|j| {
                    let d1 = self.sys.d1.get(j);
                    d1 * d1 / self.w[j] * b2[j]
                })
                .collect();
            let a_b2 = self.sys.a.mat_vec(&scaled_b2)?;
            let rhs: Vec<f64> = b1.iter().zip(&a_b2).map(|(x, y)| x - y).collect();
            match (&self.cfg, self.solver) {
                (Some(cfg), solver) => mmatrix_solve(&self.a_s, &rhs, eps, cfg, solver, rng)?,
                (None, solver) => {
                    let unit = DiagMatrix::identity(self.a_s.cols());
                    let m_s = crate::linalg::gram(&self.a_s, &unit)?;
                    solver.solve(&m_s, &rhs, eps)?
                }
            }
        };
        // bottom = (D₁²+D₃²)⁻¹(b₂ − D₁²Aᵀ·top)
        let at_top = self.sys.a.t_mat_vec(&top)?;
        let bottom: Vec<f64> = (0..m)
            .map(|j| {
                let d1 = self.sys.d1.get(j);
                (b2[j] - d1 * d1 * at_top[j]) / self.w[j]
            })
            .collect();
        let mut x = top;
        x.extend(bottom);
        Ok(x)
    }
}

/// Solves `(M + vvᵀ) x = b` to relative matrix-norm tolerance `eps`.
///
/// The inner tolerances the analysis wants are
/// `ε₁ = (ε/2)(1+vᵀM⁻¹v)⁻¹` and `ε₂ = min{1/2, (ε/14)(1+vᵀM⁻¹v)⁻¹}`, which
/// depend on the unknown `vᵀM⁻¹v`; the v-system is solved once at tolerance
/// `min{1/2, ε/14}`, `vᵀM⁻¹v` is estimated by `vᵀz` and inflated by a factor
/// of two, and both systems are then re-solved at the resulting tolerances.
pub fn solve_augmented(
    sys: &AugSystem,
    b: &[f64],
    eps: f64,
    opts: &AugmentedOpts,
    solver: &Solver,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>, MMatrixError> {
    if b.len() != sys.dim() {
        return Err(MMatrixError::Dimension(format!(
            "rhs of length {} against augmented system of dimension {}",
            b.len(),
            sys.dim()
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(MMatrixError::InvalidConfig(format!(
            "eps = {eps}; must lie in (0, 1)"
        )));
    }
    let a_s = sys.schur_factor()?;
    let (lo, hi) = sys.schur_eig_bounds();
    let cfg = match opts.inner {
        SchurInner::MMatrix => {
            let mut cfg = match opts.mode {
                ParamMode::PaperExact => {
                    MMatrixConfig::paper_exact(lo, hi, a_s.rows().max(1), a_s.cols().max(1))?
                }
                ParamMode::Practical => MMatrixConfig::practical(lo, hi, a_s.rows().max(1))?,
            };
            if let Some(cap) = opts.max_outer_iters {
                cfg.max_outer_iters = cap;
            }
            Some(cfg)
        }
        SchurInner::Direct => None,
    };
    let w: Vec<f64> = (0..sys.a.cols())
        .map(|j| {
            let d1 = sys.d1.get(j);
            let d3 = sys.d3.get(j);
            d1 * d1 + d3 * d3
        })
        .collect();
    let ctx = SchurContext {
        sys,
        a_s,
        cfg,
        solver,
        w,
    };

    if !sys.has_rank_one() {
        return ctx.solve(b, eps, rng);
    }

    // Probe solve to estimate vᵀM⁻¹v.
    let probe_eps = (eps / 14.0).min(0.5);
    let z0 = ctx.solve(&sys.v, probe_eps, rng)?;
    let rho = 2.0 * dot(&sys.v, &z0).max(0.0);
    let eps1 = (eps / 2.0) / (1.0 + rho);
    let eps2 = ((eps / 14.0) / (1.0 + rho)).min(0.5);

    let z = ctx.solve(&sys.v, eps2, rng)?;
    let y = ctx.solve(b, eps1, rng)?;
    let denom = 1.0 + dot(&sys.v, &z);
    if denom <= 1e-12 {
        return Err(MMatrixError::RankOneBreakdown { denominator: denom });
    }
    let coeff = dot(&z, b) / denom;
    Ok(y.iter().zip(&z).map(|(yi, zi)| yi - coeff * zi).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
