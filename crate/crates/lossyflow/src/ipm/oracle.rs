//! Dense test oracles for the analytic-center quantities. The production
//! path never computes η — the algorithm does not need it — so these exist
//! for tests and diagnostics only, and they rely on exact solves.

use crate::linalg::{solve_direct, LinalgError, SparseMat, SparseSym};

/// `η_A(s) = ‖A S⁻¹ 1‖_{(A S⁻² Aᵀ)⁻¹}`, evaluated with a direct solve.
/// Zero exactly at the analytic center.
pub fn eta_exact(a: &SparseMat, s: &[f64]) -> Result<f64, LinalgError> {
    eta_general(a, s, None)
}

/// η for the augmented system `Ã = [A | −b·1ᵀ_m]`, `s̃ = (s, s_gap·1_m)`,
/// without materializing the extra columns:
/// `ÃS̃⁻²Ãᵀ = AS⁻²Aᵀ + m·s_gap⁻²·bbᵀ` and
/// `ÃS̃⁻¹1 = AS⁻¹1 − (m/s_gap)·b`.
pub fn eta_tilde_exact(
    a: &SparseMat,
    b: &[f64],
    s: &[f64],
    s_gap: f64,
) -> Result<f64, LinalgError> {
    eta_general(a, s, Some((b, s_gap)))
}

fn eta_general(
    a: &SparseMat,
    s: &[f64],
    gap: Option<(&[f64], f64)>,
) -> Result<f64, LinalgError> {
    let n = a.rows();
    let m = a.cols();
    if s.len() != m {
        return Err(LinalgError::DimensionMismatch(format!(
            "slack vector of length {} against {m} columns",
            s.len()
        )));
    }
    let inv_s: Vec<f64> = s.iter().map(|&x| 1.0 / x).collect();
    let mut g = a.mat_vec(&inv_s)?;
    // Dense normal matrix A S⁻² Aᵀ (+ rank-one gap term).
    let mut dense = vec![0.0; n * n];
    for j in 0..m {
        let wj = 1.0 / (s[j] * s[j]);
        let entries: Vec<(usize, f64)> = a.col(j).collect();
        for &(i1, v1) in &entries {
            for &(i2, v2) in &entries {
                dense[i1 * n + i2] += wj * v1 * v2;
            }
        }
    }
    if let Some((b, s_gap)) = gap {
        let scale = m as f64 / (s_gap * s_gap);
        for i in 0..n {
            for k in 0..n {
                dense[i * n + k] += scale * b[i] * b[k];
            }
        }
        let shift = m as f64 / s_gap;
        for (gi, &bi) in g.iter_mut().zip(b) {
            *gi -= shift * bi;
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
    let m_sys = SparseSym::from_triplets(n, &triplets)?;
    let w = solve_direct(&m_sys, &g)?;
    let q: f64 = g.iter().zip(&w).map(|(x, y)| x * y).sum();
    Ok(q.max(0.0).sqrt())
}

/// Dense analytic-center finder: damped Newton iterations on the log-barrier
/// of `{y : Aᵀy ≤ c}`, run to machine precision. Intended for tiny instances
/// (m ≤ 40 or so).
pub fn analytic_center(
    a: &SparseMat,
    c: &[f64],
    y0: &[f64],
    max_iters: usize,
) -> Result<Vec<f64>, LinalgError> {
    let mut y = y0.to_vec();
    let slack = |y: &[f64]| -> Result<Vec<f64>, LinalgError> {
        let at_y = a.t_mat_vec(y)?;
        Ok(c.iter().zip(&at_y).map(|(ci, t)| ci - t).collect())
    };
    let mut s = slack(&y)?;
    if s.iter().any(|&v| v <= 0.0) {
        return Err(LinalgError::InvalidMatrix(
            "analytic_center requires a strictly interior start".into(),
        ));
    }
    for _ in 0..max_iters {
        let eta = eta_exact(a, &s)?;
        if eta <= 1e-13 {
            break;
        }
        let inv_s: Vec<f64> = s.iter().map(|&x| 1.0 / x).collect();
        let g = a.mat_vec(&inv_s)?;
        let neg_g: Vec<f64> = g.iter().map(|&x| -x).collect();
        // Newton direction for maximizing Σ log s_j.
        let n = a.rows();
        let m = a.cols();
        let mut dense = vec![0.0; n * n];
        for j in 0..m {
            let wj = 1.0 / (s[j] * s[j]);
            let entries: Vec<(usize, f64)> = a.col(j).collect();
            for &(i1, v1) in &entries {
                for &(i2, v2) in &entries {
                    dense[i1 * n + i2] += wj * v1 * v2;
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
        let m_sys = SparseSym::from_triplets(n, &triplets)?;
        let d = solve_direct(&m_sys, &neg_g)?;
        // Damped step keeping s strictly positive.
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = y.iter().zip(&d).map(|(yi, di)| yi + t * di).collect();
            let s_trial = slack(&trial)?;
            if s_trial.iter().all(|&v| v > 0.0) {
                y = trial;
                s = s_trial;
                break;
            }
            t *= 0.5;
            if t < 1e-18 {
                return Err(LinalgError::ConvergenceFailure {
                    iterations: max_iters,
                    rel_residual: eta,
                    last_iterate: y,
                });
            }
        }
    }
    Ok(y)
}
