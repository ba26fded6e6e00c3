//! Pluggable linear-system backends for the path-following method.
//!
//! Every Newton step solves one system of the form
//! `(A·diag(w)·Aᵀ + vvᵀ)·x = rhs` where `w` carries the inverse-squared
//! slacks and `v` folds the gap-slack copies of the augmented matrix into a
//! rank-one term. A backend promises the matrix-norm contract
//! `‖x − M⁻¹rhs‖_M ≤ eps·‖M⁻¹rhs‖_M`.

use crate::linalg::{LdltFactor, LinalgError, SparseMat, SparseSym};

use super::IpmError;

pub trait SystemBackend {
    /// Solves `(A·diag(w)·Aᵀ + vvᵀ)x = rhs` at relative matrix-norm
    /// tolerance `eps`. `w` has one entry per column of `A`; an empty `v`
    /// drops the rank-one term.
    fn solve_weighted(
        &mut self,
        w: &[f64],
        v: &[f64],
        rhs: &[f64],
        eps: f64,
    ) -> Result<Vec<f64>, IpmError>;

    /// Number of solves performed so far.
    fn solve_calls(&self) -> usize;
}

/// Dense direct backend: assembles the normal matrix and factors it with the
/// regularized pivoted LDLᵀ, then applies one step of iterative refinement.
/// Solves to round-off, which satisfies any requested tolerance the
/// short-step method asks for.
pub struct DenseBackend {
    a: SparseMat,
    calls: usize,
}

impl DenseBackend {
    pub fn new(a: SparseMat) -> DenseBackend {
        DenseBackend { a, calls: 0 }
    }

    fn assemble(&self, w: &[f64], v: &[f64]) -> Result<SparseSym, LinalgError> {
        let n = self.a.rows();
        let mut dense = vec![0.0; n * n];
        for j in 0..self.a.cols() {
            let wj = w[j];
            if wj == 0.0 {
                continue;
            }
            let entries: Vec<(usize, f64)> = self.a.col(j).collect();
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
                let val = dense[i * n + j];
                if val != 0.0 {
                    triplets.push((i, j, val));
                }
            }
        }
        SparseSym::from_triplets(n, &triplets)
    }
}

impl SystemBackend for DenseBackend {
    fn solve_weighted(
        &mut self,
        w: &[f64],
        v: &[f64],
        rhs: &[f64],
        _eps: f64,
    ) -> Result<Vec<f64>, IpmError> {
        self.calls += 1;
        let m = self.assemble(w, v).map_err(IpmError::Linalg)?;
        let factor = LdltFactor::new(&m, true).map_err(IpmError::Linalg)?;
        factor.solve_refined(&m, rhs).map_err(IpmError::Linalg)
    }

    fn solve_calls(&self) -> usize {
        self.calls
    }
}

/// Matrix-free conjugate-gradient backend with a Jacobi preconditioner.
/// Stops on `‖r‖/‖rhs‖ ≤ eps·1e−2`, the fallback stopping rule when no
/// eigenvalue bounds are at hand; suited to well-conditioned desk systems.
pub struct IterativeBackend {
    a: SparseMat,
    max_iters: usize,
    calls: usize,
}

impl IterativeBackend {
    pub fn new(a: SparseMat, max_iters: usize) -> IterativeBackend {
        IterativeBackend {
            a,
            max_iters,
            calls: 0,
        }
    }

    fn apply(&self, w: &[f64], v: &[f64], x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut at_x = self.a.t_mat_vec(x)?;
        for (t, &wj) in at_x.iter_mut().zip(w) {
            *t *= wj;
        }
        let mut y = self.a.mat_vec(&at_x)?;
        if !v.is_empty() {
            let vx: f64 = v.iter().zip(x).map(|(a, b)| a * b).sum();
            for (yi, &vi) in y.iter_mut().zip(v) {
                *yi += vx * vi;
            }
        }
        Ok(y)
    }
}

impl SystemBackend for IterativeBackend {
    fn solve_weighted(
        &mut self,
        w: &[f64],
        v: &[f64],
        rhs: &[f64],
        eps: f64,
    ) -> Result<Vec<f64>, IpmError> {
        self.calls += 1;
        let n = self.a.rows();
        let mut diag = vec![0.0f64; n];
        for j in 0..self.a.cols() {
            for (i, val) in self.a.col(j) {
                diag[i] += w[j] * val * val;
            }
        }
        if !v.is_empty() {
            for (d, &vi) in diag.iter_mut().zip(v) {
                *d += vi * vi;
            }
        }
        let inv_diag: Vec<f64> = diag
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
            .collect();

        let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
        let rhs_norm = dot(rhs, rhs).sqrt();
        if rhs_norm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let threshold = (eps * 1e-2).max(1e-14);
        let mut x = vec![0.0; n];
        let mut r = rhs.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut rel = 1.0;
        for it in 0..self.max_iters {
            let ap = self.apply(w, v, &p).map_err(IpmError::Linalg)?;
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                return Err(IpmError::Linalg(LinalgError::ConvergenceFailure {
                    iterations: it,
                    rel_residual: rel,
                    last_iterate: x,
                }));
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            rel = dot(&r, &r).sqrt() / rhs_norm;
            if rel <= threshold {
                return Ok(x);
            }
            z = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
            rz = rz_new;
        }
        Err(IpmError::Linalg(LinalgError::ConvergenceFailure {
            iterations: self.max_iters,
            rel_residual: rel,
            last_iterate: x,
        }))
    }

    fn solve_calls(&self) -> usize {
        self.calls
    }
}
