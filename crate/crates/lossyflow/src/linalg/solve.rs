//! The approximate-solver contract and its two backends: preconditioned
//! conjugate gradients and a dense pivoted factorization used as oracle and
//! as the default at desk scale.
//!
//! `solve_approx` promises `‖x − M⁻¹b‖_M ≤ eps·‖M⁻¹b‖_M`. The iterative
//! backend cannot observe that error directly, so it stops on
//! `‖r‖₂/‖b‖₂ ≤ eps·√(λ_lo/λ_hi)` when eigenvalue bounds are supplied and on
//! `eps·1e−2` otherwise; the matrix-norm contract is verified a posteriori in
//! tests against `solve_direct`.

use super::sparse::{mat_vec, SparseSym};
use super::LinalgError;

/// Which solver implementation backs `solve_approx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// Dense pivoted LDLᵀ factorization; ignores `eps` (solves to round-off).
    #[default]
    Direct,
    /// Conjugate gradients with a Jacobi preconditioner.
    Iterative,
    /// Conjugate gradients with an incomplete-Cholesky (IC(0)) preconditioner,
    /// falling back to Jacobi when the incomplete factorization breaks down.
    IterativeIc0,
}

/// Configuration for the approximate solver.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    /// Relative matrix-norm error target, in (0, 1).
    pub eps: f64,
    /// Iteration cap for the iterative backends.
    pub max_iters: usize,
    /// Seed carried for reproducibility of randomized callers.
    pub seed: u64,
    pub backend: Backend,
    /// Optional `(λ_lo, λ_hi)` eigenvalue bounds used by the iterative
    /// stopping rule.
    pub eig_bounds: Option<(f64, f64)>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            eps: 1e-8,
            max_iters: 20_000,
            seed: 0,
            backend: Backend::Direct,
            eig_bounds: None,
        }
    }
}

impl SolveConfig {
    fn validate(&self) -> Result<(), LinalgError> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(LinalgError::InvalidConfig(format!(
                "eps = {}; must lie in (0, 1)",
                self.eps
            )));
        }
        if self.max_iters == 0 {
            return Err(LinalgError::InvalidConfig("max_iters must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Solves `M x = b` under the matrix-norm contract at tolerance `cfg.eps`.
pub fn solve_approx(m: &SparseSym, b: &[f64], cfg: &SolveConfig) -> Result<Vec<f64>, LinalgError> {
    cfg.validate()?;
    Solver::new(cfg.clone()).solve(m, b, cfg.eps)
}

/// Direct solve via a pivoted dense LDLᵀ factorization; the relative residual
/// on well-conditioned desk-scale systems is at round-off level.
pub fn solve_direct(m: &SparseSym, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let factor = LdltFactor::new(m, false)?;
    factor.solve_refined(m, b)
}

/// A solver handle carrying backend choice; tolerances are supplied per call
/// so one handle serves inner loops with varying accuracy needs.
#[derive(Debug, Clone)]
pub struct Solver {
    cfg: SolveConfig,
}

impl Solver {
    pub fn new(cfg: SolveConfig) -> Solver {
        Solver { cfg }
    }

    pub fn direct() -> Solver {
        Solver::new(SolveConfig::default())
    }

    pub fn config(&self) -> &SolveConfig {
        &self.cfg
    }

    pub fn solve(&self, m: &SparseSym, b: &[f64], eps: f64) -> Result<Vec<f64>, LinalgError> {
        self.prepare(m)?.solve(b, eps)
    }

    /// Factors (or wraps) `m` once so repeated solves against the same matrix
    /// reuse the preparation.
    pub fn prepare<'a>(&self, m: &'a SparseSym) -> Result<PreparedSolver<'a>, LinalgError> {
        match self.cfg.backend {
            Backend::Direct => Ok(PreparedSolver::Factored {
                factor: LdltFactor::new(m, true)?,
                m,
            }),
            Backend::Iterative => Ok(PreparedSolver::Cg {
                m,
                precond: Preconditioner::jacobi(m),
                cfg: self.cfg.clone(),
            }),
            Backend::IterativeIc0 => {
                let precond = Preconditioner::ic0(m).unwrap_or_else(|| Preconditioner::jacobi(m));
                Ok(PreparedSolver::Cg {
                    m,
                    precond,
                    cfg: self.cfg.clone(),
                })
            }
        }
    }
}

/// A solver bound to one matrix; `solve` may be called many times.
pub enum PreparedSolver<'a> {
    Factored {
        factor: LdltFactor,
        m: &'a SparseSym,
    },
    Cg {
        m: &'a SparseSym,
        precond: Preconditioner,
        cfg: SolveConfig,
    },
}

impl PreparedSolver<'_> {
    pub fn solve(&self, b: &[f64], eps: f64) -> Result<Vec<f64>, LinalgError> {
        match self {
            PreparedSolver::Factored { factor, m } => factor.solve_refined(m, b),
            PreparedSolver::Cg { m, precond, cfg } => {
                let threshold = match cfg.eig_bounds {
                    Some((lo, hi)) if lo > 0.0 && hi >= lo => eps * (lo / hi).sqrt(),
                    _ => eps * 1e-2,
                };
                cg(m, b, precond, threshold.max(1e-15), cfg.max_iters)
            }
        }
    }
}

/// Dense LDLᵀ with symmetric pivoting on the largest remaining diagonal.
///
/// With `regularize` set, pivots that collapse below round-off are clamped
/// instead of failing; production interior-point paths use that form on
/// nearly singular scaled systems, while the strict form is the test oracle.
pub struct LdltFactor {
    n: usize,
    /// Packed lower factor with D on the diagonal, row-major.
    lower: Vec<f64>,
    perm: Vec<usize>,
    equil: Vec<f64>,
}

impl LdltFactor {
    pub fn new(m: &SparseSym, regularize: bool) -> Result<LdltFactor, LinalgError> {
        let n = m.n();
        // Symmetric Jacobi equilibration keeps pivoting sane when the
        // diagonal spans many orders of magnitude.
        let equil: Vec<f64> = (0..n)
            .map(|i| {
                let d = m.get(i, i).abs();
                if d > 0.0 {
                    1.0 / d.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let mut a = m.to_dense();
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] *= equil[i] * equil[j];
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let max_diag = (0..n).fold(0.0f64, |acc, i| acc.max(a[i * n + i].abs()));
        let floor = f64::EPSILON * max_diag.max(1e-300) * n as f64;
        for k in 0..n {
            // Pivot: largest remaining diagonal.
            let mut best = k;
            for i in k + 1..n {
                if a[perm[i] * n + perm[i]] > a[perm[best] * n + perm[best]] {
                    best = i;
                }
            }
            perm.swap(k, best);
            let pk = perm[k];
            let mut d = a[pk * n + pk];
            if d <= floor {
                if regularize {
                    d = floor.max(f64::MIN_POSITIVE.sqrt());
                    a[pk * n + pk] = d;
                } else {
                    return Err(LinalgError::Singular { step: k, pivot: d });
                }
            }
            // Snapshot the pivot column before overwriting it with multipliers.
            let col: Vec<f64> = (k + 1..n).map(|i| a[perm[i] * n + pk]).collect();
            for (ii, i) in (k + 1..n).enumerate() {
                let pi = perm[i];
                let l = col[ii] / d;
                for (jj, j) in (k + 1..=i).enumerate() {
                    let pj = perm[j];
                    a[pi * n + pj] -= l * col[jj];
                    a[pj * n + pi] = a[pi * n + pj];
                }
                a[pi * n + pk] = l;
                a[pk * n + pi] = l;
            }
        }
        // Pack L (unit diagonal implicit) and D in permuted order.
        let mut lower = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                lower[i * n + j] = a[perm[i] * n + perm[j]];
            }
        }
        Ok(LdltFactor {
            n,
            lower,
            perm,
            equil,
        })
    }

    /// One triangular solve pass.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.n;
        if b.len() != n {
            return Err(LinalgError::DimensionMismatch(format!(
                "rhs of length {} against factor of size {n}",
                b.len()
            )));
        }
        // Scale and permute.
        let mut y: Vec<f64> = (0..n).map(|i| b[self.perm[i]] * self.equil[self.perm[i]]).collect();
        // Forward substitution with unit lower factor.
        for i in 0..n {
            for j in 0..i {
                y[i] -= self.lower[i * n + j] * y[j];
            }
        }
        // Diagonal.
        for i in 0..n {
            y[i] /= self.lower[i * n + i];
        }
        // Backward substitution with Lᵀ.
        for i in (0..n).rev() {
            for j in i + 1..n {
                y[i] -= self.lower[j * n + i] * y[j];
            }
        }
        // Un-permute and un-scale.
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[self.perm[i]] = y[i] * self.equil[self.perm[i]];
        }
        Ok(x)
    }

    /// Solve with one step of iterative refinement against the original
    /// matrix, which recovers a residual near round-off.
    pub fn solve_refined(&self, m: &SparseSym, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut x = self.solve(b)?;
        let mx = mat_vec(m, &x)?;
        let r: Vec<f64> = b.iter().zip(&mx).map(|(bi, mi)| bi - mi).collect();
        let dx = self.solve(&r)?;
        for i in 0..x.len() {
            x[i] += dx[i];
        }
        Ok(x)
    }
}

/// Preconditioner for conjugate gradients.
pub enum Preconditioner {
    Jacobi(Vec<f64>),
    /// IC(0): incomplete Cholesky on the sparsity pattern of the lower
    /// triangle, stored column-wise.
    Ic0 {
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    },
}

impl Preconditioner {
    pub fn jacobi(m: &SparseSym) -> Preconditioner {
        let inv: Vec<f64> = (0..m.n())
            .map(|i| {
                let d = m.get(i, i);
                if d > 0.0 {
                    1.0 / d
                } else {
                    1.0
                }
            })
            .collect();
        Preconditioner::Jacobi(inv)
    }

    /// Returns `None` when a pivot goes non-positive (breakdown).
    pub fn ic0(m: &SparseSym) -> Option<Preconditioner> {
        let n = m.n();
        let mut col_ptr = vec![0usize];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for j in 0..n {
            for (i, v) in m.col(j) {
                if i >= j {
                    row_idx.push(i);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        for j in 0..n {
            let lo = col_ptr[j];
            let hi = col_ptr[j + 1];
            if row_idx[lo] != j {
                return None;
            }
            let d = values[lo];
            if d <= 0.0 {
                return None;
            }
            let d = d.sqrt();
            values[lo] = d;
            for k in lo + 1..hi {
                values[k] /= d;
            }
            // Update later columns restricted to their own pattern.
            for k in lo + 1..hi {
                let i = row_idx[k];
                let lik = values[k];
                let tlo = col_ptr[i];
                let thi = col_ptr[i + 1];
                let mut t = tlo;
                for k2 in lo + 1..hi {
                    let r = row_idx[k2];
                    if r < i {
                        continue;
                    }
                    while t < thi && row_idx[t] < r {
                        t += 1;
                    }
                    if t < thi && row_idx[t] == r {
                        values[t] -= lik * values[k2];
                    }
                }
            }
        }
        Some(Preconditioner::Ic0 {
            col_ptr,
            row_idx,
            values,
        })
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        match self {
            Preconditioner::Jacobi(inv) => r.iter().zip(inv).map(|(x, d)| x * d).collect(),
            Preconditioner::Ic0 {
                col_ptr,
                row_idx,
                values,
            } => {
                let n = col_ptr.len() - 1;
                let mut y = r.to_vec();
                // Forward solve L y = r.
                for j in 0..n {
                    let lo = col_ptr[j];
                    let hi = col_ptr[j + 1];
                    y[j] /= values[lo];
                    let yj = y[j];
                    for k in lo + 1..hi {
                        y[row_idx[k]] -= values[k] * yj;
                    }
                }
                // Backward solve Lᵀ z = y.
                for j in (0..n).rev() {
                    let lo = col_ptr[j];
                    let hi = col_ptr[j + 1];
                    let mut acc = y[j];
                    for k in lo + 1..hi {
                        acc -= values[k] * y[row_idx[k]];
                    }
                    y[j] = acc / values[lo];
                }
                y
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn cg(
    m: &SparseSym,
    b: &[f64],
    precond: &Preconditioner,
    rel_threshold: f64,
    max_iters: usize,
) -> Result<Vec<f64>, LinalgError> {
    let n = m.n();
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "rhs of length {} against {n}x{n} matrix",
            b.len()
        )));
    }
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = precond.apply(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut last_rel = 1.0;
    for iter in 0..max_iters {
        let ap = mat_vec(m, &p)?;
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            // Indefinite or numerically singular direction.
            return Err(LinalgError::ConvergenceFailure {
                iterations: iter,
                rel_residual: last_rel,
                last_iterate: x,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        last_rel = norm2(&r) / b_norm;
        if last_rel <= rel_threshold {
            return Ok(x);
        }
        z = precond.apply(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rz = rz_new;
    }
    Err(LinalgError::ConvergenceFailure {
        iterations: max_iters,
        rel_residual: last_rel,
        last_iterate: x,
    })
}

/// Estimated extreme eigenvalues of an SPD matrix: Gershgorin upper bound
/// paired with an inverse-power-iteration lower estimate (scaled down so it
/// stays below λ_min on reasonable inputs).
pub fn extreme_eigenvalue_bounds(
    m: &SparseSym,
    iters: usize,
    seed: u64,
) -> Result<(f64, f64), LinalgError> {
    use rand::{Rng, SeedableRng};
    let n = m.n();
    let mut hi = 0.0f64;
    for i in 0..n {
        let mut row_sum = 0.0;
        for (r, v) in m.col(i) {
            let _ = r;
            row_sum += v.abs();
        }
        hi = hi.max(row_sum);
    }
    let factor = LdltFactor::new(m, false)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut lo = hi;
    for _ in 0..iters.max(8) {
        let w = factor.solve(&v)?;
        let norm = norm2(&w);
        if norm == 0.0 {
            break;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
        let mv = mat_vec(m, &v)?;
        lo = dot(&v, &mv);
    }
    Ok(((lo * 0.9).max(f64::MIN_POSITIVE), hi.max(f64::MIN_POSITIVE)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sparse::m_norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_by_two() -> SparseSym {
        SparseSym::from_triplets(2, &[(0, 0, 2.0), (1, 1, 2.0), (0, 1, -1.0)]).unwrap()
    }

    /// Random strictly diagonally dominant test system.
    fn random_sdd(n: usize, rng: &mut ChaCha8Rng) -> SparseSym {
        let mut triplets = Vec::new();
        let mut row_load = vec![0.0f64; n];
        for _ in 0..(3 * n) {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i == j {
                continue;
            }
            let v = -(rng.random::<f64>() * 2.0);
            triplets.push((i, j, v));
            row_load[i] += v.abs();
            row_load[j] += v.abs();
        }
        for (i, extra) in row_load.iter().enumerate() {
            triplets.push((i, i, extra + 0.5 + rng.random::<f64>()));
        }
        SparseSym::from_triplets(n, &triplets).unwrap()
    }

    #[test]
    fn direct_identity() {
        let m = SparseSym::identity(3);
        let b = vec![1.0, -2.0, 3.0];
        assert_eq!(solve_direct(&m, &b).unwrap(), b);
    }

    #[test]
    fn direct_small_exact() {
        let x = solve_direct(&two_by_two(), &[1.0, 1.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn direct_residual_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let n = 40;
            let m = random_sdd(n, &mut rng);
            let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            let x = solve_direct(&m, &b).unwrap();
            let mx = mat_vec(&m, &x).unwrap();
            let res: f64 = mx
                .iter()
                .zip(&b)
                .map(|(a, c)| (a - c) * (a - c))
                .sum::<f64>()
                .sqrt();
            let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(res / bn <= 1e-12, "residual {}", res / bn);
        }
    }

    #[test]
    fn direct_rejects_singular() {
        let m = SparseSym::from_triplets(2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0)]).unwrap();
        assert!(matches!(
            solve_direct(&m, &[1.0, 1.0]),
            Err(LinalgError::Singular { .. })
        ));
    }

    #[test]
    fn approx_trivial_cases() {
        let cfg = SolveConfig {
            eps: 1e-8,
            backend: Backend::Iterative,
            ..Default::default()
        };
        let m = SparseSym::identity(4);
        let b = vec![1.0, 2.0, 3.0, 4.0];
        let x = solve_approx(&m, &b, &cfg).unwrap();
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-8);
        }
        let x = solve_approx(&two_by_two(), &[1.0, 1.0], &cfg).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn approx_meets_matrix_norm_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for backend in [Backend::Iterative, Backend::IterativeIc0] {
            for trial in 0..20 {
                let n = 20 + (trial % 5) * 30;
                let m = random_sdd(n, &mut rng);
                let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
                for eps in [1e-2, 1e-6] {
                    let bounds = extreme_eigenvalue_bounds(&m, 30, 1).unwrap();
                    let cfg = SolveConfig {
                        eps,
                        backend,
                        eig_bounds: Some(bounds),
                        ..Default::default()
                    };
                    let x = solve_approx(&m, &b, &cfg).unwrap();
                    let exact = solve_direct(&m, &b).unwrap();
                    let diff: Vec<f64> = x.iter().zip(&exact).map(|(a, c)| a - c).collect();
                    let err = m_norm(&m, &diff).unwrap();
                    let base = m_norm(&m, &exact).unwrap();
                    assert!(
                        err <= eps * base + 1e-10,
                        "eps={eps} err={err} base={base}"
                    );
                }
            }
        }
    }

    #[test]
    fn iterative_cap_reports_failure_with_iterate() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_sdd(60, &mut rng);
        let b: Vec<f64> = (0..60).map(|_| rng.random::<f64>()).collect();
        let cfg = SolveConfig {
            eps: 1e-9,
            max_iters: 2,
            backend: Backend::Iterative,
            ..Default::default()
        };
        match solve_approx(&m, &b, &cfg) {
            Err(LinalgError::ConvergenceFailure {
                iterations,
                rel_residual,
                last_iterate,
            }) => {
                assert_eq!(iterations, 2);
                assert!(rel_residual > 0.0);
                assert_eq!(last_iterate.len(), 60);
            }
            other => panic!("expected convergence failure, got {other:?}"),
        }
    }

    #[test]
    fn eig_bounds_bracket_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let m = random_sdd(30, &mut rng);
        let (lo, hi) = extreme_eigenvalue_bounds(&m, 40, 3).unwrap();
        // Rayleigh quotients of random vectors must land inside [lo, hi].
        for _ in 0..20 {
            let v: Vec<f64> = (0..30).map(|_| rng.random::<f64>() - 0.5).collect();
            let mv = mat_vec(&m, &v).unwrap();
            let q = dot(&v, &mv) / dot(&v, &v);
            assert!(q >= lo * 0.999 && q <= hi * 1.001, "q={q} lo={lo} hi={hi}");
        }
    }
}
