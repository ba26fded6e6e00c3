//! The M-matrix solve: find a dominance-restoring diagonal, then solve the
//! rescaled diagonally dominant system and undo the scaling.

use rand_chacha::ChaCha8Rng;

use crate::linalg::{gram, DiagMatrix, Solver, TwoNnzFactor};

use super::{find_dd_scaling, MMatrixConfig, MMatrixError};

/// Solves `M x = b` with `M = f·fᵀ` under the matrix-norm contract at
/// relative tolerance `eps`: the answer is `D·Solve(DMD, Db, eps)` for the
/// diagonal produced by the scaling loop, which transfers the contract back
/// to `M` exactly.
pub fn mmatrix_solve(
    f: &TwoNnzFactor,
    b: &[f64],
    eps: f64,
    cfg: &MMatrixConfig,
    solver: &Solver,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>, MMatrixError> {
    cfg.validate()?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(MMatrixError::InvalidConfig(format!(
            "eps = {eps}; must lie in (0, 1)"
        )));
    }
    let n = f.rows();
    if b.len() != n {
        return Err(MMatrixError::Dimension(format!(
            "rhs of length {} against factor with {n} rows",
            b.len()
        )));
    }
    if b.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; n]);
    }
    if n == 1 {
        // The loop machinery is vacuous for a scalar system.
        let m11: f64 = (0..f.cols())
            .map(|j| {
                let [(_, v), _] = f.col_entries(j);
                v * v
            })
            .sum();
        return Ok(vec![b[0] / m11]);
    }
    let scaling = find_dd_scaling(f, cfg, solver, rng)?;
    let m = gram(f, &DiagMatrix::identity(f.cols()))?;
    let dmd = m.scaled(&scaling.d)?;
    let db = scaling.d.apply(b);
    let y = solver.solve(&dmd, &db, eps)?;
    Ok(scaling.d.apply(&y))
}
