//! Sparse matrix types: symmetric CSC, general rectangular CSC, two-nonzero
//! column factors, and positive diagonal matrices.

use std::collections::BTreeMap;

use super::LinalgError;

/// Relative slack used by diagonal-dominance tests: floating-point row sums
/// of exactly-dominant rows can dip just below zero.
const DD_TOL_REL: f64 = 1e-9;

/// Symmetric sparse matrix stored in compressed-column form with both
/// triangles present and row indices sorted within each column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSym {
    /// Builds a symmetric matrix from entries of one triangle (either order);
    /// the mirror entry is filled in automatically. Duplicate coordinates
    /// accumulate. Exact zeros are dropped.
    pub fn from_triplets(
        n: usize,
        entries: &[(usize, usize, f64)],
    ) -> Result<SparseSym, LinalgError> {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(i, j, v) in entries {
            if i >= n || j >= n {
                return Err(LinalgError::DimensionMismatch(format!(
                    "entry ({i},{j}) outside {n}x{n} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(LinalgError::InvalidMatrix(format!(
                    "non-finite value at ({i},{j})"
                )));
            }
            let key = if i <= j { (i, j) } else { (j, i) };
            *map.entry(key).or_insert(0.0) += v;
        }
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (&(i, j), &v) in &map {
            if v == 0.0 {
                continue;
            }
            cols[j].push((i, v));
            if i != j {
                cols[i].push((j, v));
            }
        }
        Ok(Self::from_columns(n, cols))
    }

    fn from_columns(n: usize, mut cols: Vec<Vec<(usize, f64)>>) -> SparseSym {
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for col in cols.iter_mut() {
            col.sort_unstable_by_key(|&(r, _)| r);
            for &(r, v) in col.iter() {
                row_idx.push(r);
                values.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        SparseSym {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> SparseSym {
        let entries: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        SparseSym::from_triplets(n, &entries).expect("identity is well formed")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of column `j` as `(row, value)` pairs, rows ascending.
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.col_ptr[j];
        let hi = self.col_ptr[j + 1];
        self.row_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.col_ptr[j];
        let hi = self.col_ptr[j + 1];
        match self.row_idx[lo..hi].binary_search(&i) {
            Ok(pos) => self.values[lo + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// The congruence `D M D` for a positive diagonal `D`.
    pub fn scaled(&self, d: &DiagMatrix) -> Result<SparseSym, LinalgError> {
        if d.n() != self.n {
            return Err(LinalgError::DimensionMismatch(format!(
                "scaling of dimension {} applied to {}x{} matrix",
                d.n(),
                self.n,
                self.n
            )));
        }
        let mut out = self.clone();
        for j in 0..self.n {
            let lo = out.col_ptr[j];
            let hi = out.col_ptr[j + 1];
            for k in lo..hi {
                out.values[k] *= d.get(out.row_idx[k]) * d.get(j);
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.n * self.n];
        for j in 0..self.n {
            for (i, v) in self.col(j) {
                dense[i * self.n + j] = v;
            }
        }
        dense
    }

    pub fn max_abs_diagonal(&self) -> f64 {
        (0..self.n).fold(0.0, |acc, i| acc.max(self.get(i, i).abs()))
    }
}

/// `M x` for a symmetric sparse matrix; exact up to floating round-off.
pub fn mat_vec(m: &SparseSym, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if x.len() != m.n {
        return Err(LinalgError::DimensionMismatch(format!(
            "vector of length {} against {}x{} matrix",
            x.len(),
            m.n,
            m.n
        )));
    }
    let mut y = vec![0.0; m.n];
    for j in 0..m.n {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        for (i, v) in m.col(j) {
            y[i] += v * xj;
        }
    }
    Ok(y)
}

/// The matrix norm `‖v‖_M = √(vᵀMv)`.
///
/// Returns an error when the quadratic form is negative beyond a small
/// tolerance, which signals a non-PSD input; tiny negative round-off is
/// clamped to zero.
pub fn m_norm(m: &SparseSym, v: &[f64]) -> Result<f64, LinalgError> {
    let mv = mat_vec(m, v)?;
    let qf: f64 = v.iter().zip(&mv).map(|(a, b)| a * b).sum();
    let scale = m.max_abs_diagonal() * v.iter().map(|x| x * x).sum::<f64>();
    if qf < -1e-10 * scale.max(1.0) {
        return Err(LinalgError::NotPsd(qf));
    }
    Ok(qf.max(0.0).sqrt())
}

/// Per-row diagonal dominance: row `i` is dominated when
/// `m_ii ≥ Σ_{j≠i} |m_ij| − tol` with `tol = 1e−9 · max diagonal`.
pub fn dominated_rows(m: &SparseSym) -> Vec<bool> {
    let tol = DD_TOL_REL * m.max_abs_diagonal();
    let mut margin = vec![0.0; m.n];
    for j in 0..m.n {
        for (i, v) in m.col(j) {
            if i == j {
                margin[i] += v;
            } else {
                margin[i] -= v.abs();
            }
        }
    }
    margin.into_iter().map(|s| s >= -tol).collect()
}

/// True iff every row of `m` is dominated by its diagonal.
pub fn is_dd(m: &SparseSym) -> bool {
    dominated_rows(m).into_iter().all(|d| d)
}

/// An `n×m` sparse matrix with at most two nonzero entries per column,
/// the factor in `M = A Aᵀ` for symmetric M-matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoNnzFactor {
    n: usize,
    cols: Vec<FactorColumn>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum FactorColumn {
    One(usize, f64),
    Two(usize, f64, usize, f64),
}

impl TwoNnzFactor {
    /// Builds the factor from per-column entry lists. Every column must have
    /// one or two nonzeros with finite values.
    pub fn new(n: usize, columns: Vec<Vec<(usize, f64)>>) -> Result<TwoNnzFactor, LinalgError> {
        let mut cols = Vec::with_capacity(columns.len());
        for (j, col) in columns.into_iter().enumerate() {
            for &(r, v) in &col {
                if r >= n {
                    return Err(LinalgError::DimensionMismatch(format!(
                        "row {r} outside factor with {n} rows (column {j})"
                    )));
                }
                if !v.is_finite() || v == 0.0 {
                    return Err(LinalgError::InvalidMatrix(format!(
                        "column {j} carries a zero or non-finite entry"
                    )));
                }
            }
            match col.as_slice() {
                [(r, v)] => cols.push(FactorColumn::One(*r, *v)),
                [(r1, v1), (r2, v2)] => {
                    if r1 == r2 {
                        // Collapse a duplicated row into a single entry.
                        let v = v1 + v2;
                        if v == 0.0 {
                            return Err(LinalgError::InvalidMatrix(format!(
                                "column {j} cancels to zero"
                            )));
                        }
                        cols.push(FactorColumn::One(*r1, v));
                    } else {
                        cols.push(FactorColumn::Two(*r1, *v1, *r2, *v2));
                    }
                }
                _ => {
                    return Err(LinalgError::InvalidMatrix(format!(
                        "column {j} has {} nonzeros; expected 1 or 2",
                        col.len()
                    )))
                }
            }
        }
        Ok(TwoNnzFactor { n, cols })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.cols.len()
    }

    /// Entries of column `j` as `(row, value)`, at most two.
    pub fn col_entries(&self, j: usize) -> [(usize, f64); 2] {
        match self.cols[j] {
            FactorColumn::One(r, v) => [(r, v), (usize::MAX, 0.0)],
            FactorColumn::Two(r1, v1, r2, v2) => [(r1, v1), (r2, v2)],
        }
    }

    pub fn max_abs_entry(&self) -> f64 {
        let mut best: f64 = 0.0;
        for col in &self.cols {
            match *col {
                FactorColumn::One(_, v) => best = best.max(v.abs()),
                FactorColumn::Two(_, v1, _, v2) => best = best.max(v1.abs()).max(v2.abs()),
            }
        }
        best
    }

    /// `A x` for a column-weight vector `x` of length `m`.
    pub fn mat_vec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.cols() {
            return Err(LinalgError::DimensionMismatch(format!(
                "vector of length {} against factor with {} columns",
                x.len(),
                self.cols()
            )));
        }
        let mut y = vec![0.0; self.n];
        for (j, col) in self.cols.iter().enumerate() {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            match *col {
                FactorColumn::One(r, v) => y[r] += v * xj,
                FactorColumn::Two(r1, v1, r2, v2) => {
                    y[r1] += v1 * xj;
                    y[r2] += v2 * xj;
                }
            }
        }
        Ok(y)
    }

    /// `Aᵀ y` for a row vector `y` of length `n`.
    pub fn t_mat_vec(&self, y: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if y.len() != self.n {
            return Err(LinalgError::DimensionMismatch(format!(
                "vector of length {} against factor with {} rows",
                y.len(),
                self.n
            )));
        }
        let mut x = vec![0.0; self.cols()];
        for (j, col) in self.cols.iter().enumerate() {
            x[j] = match *col {
                FactorColumn::One(r, v) => v * y[r],
                FactorColumn::Two(r1, v1, r2, v2) => v1 * y[r1] + v2 * y[r2],
            };
        }
        Ok(x)
    }

    /// Scales row `i` of the factor by `scale[i]`; the gram becomes
    /// `diag(scale)·M·diag(scale)`.
    pub fn scale_rows(&self, scale: &[f64]) -> Result<TwoNnzFactor, LinalgError> {
        if scale.len() != self.n {
            return Err(LinalgError::DimensionMismatch(
                "row scaling length mismatch".into(),
            ));
        }
        let cols = self
            .cols
            .iter()
            .map(|col| match *col {
                FactorColumn::One(r, v) => FactorColumn::One(r, v * scale[r]),
                FactorColumn::Two(r1, v1, r2, v2) => {
                    FactorColumn::Two(r1, v1 * scale[r1], r2, v2 * scale[r2])
                }
            })
            .collect();
        Ok(TwoNnzFactor { n: self.n, cols })
    }

    /// Per-row lists of `(column, value)` incidences.
    pub fn row_incidence(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows = vec![Vec::new(); self.n];
        for (j, col) in self.cols.iter().enumerate() {
            match *col {
                FactorColumn::One(r, v) => rows[r].push((j, v)),
                FactorColumn::Two(r1, v1, r2, v2) => {
                    rows[r1].push((j, v1));
                    rows[r2].push((j, v2));
                }
            }
        }
        rows
    }
}

/// Assembles `A·diag(w)·Aᵀ` as a symmetric sparse matrix.
pub fn gram(f: &TwoNnzFactor, w: &DiagMatrix) -> Result<SparseSym, LinalgError> {
    if w.n() != f.cols() {
        return Err(LinalgError::DimensionMismatch(format!(
            "weight vector of length {} against factor with {} columns",
            w.n(),
            f.cols()
        )));
    }
    gram_weighted(f, w.as_slice(), None)
}

/// Gram of the row-submatrix of `f` selected by `keep`, with unit weights.
/// `keep[i] = Some(p)` maps original row `i` to output row `p`.
pub fn gram_masked(f: &TwoNnzFactor, keep: &[Option<usize>], out_n: usize) -> SparseSym {
    let ones = vec![1.0; f.cols()];
    gram_weighted_masked(f, &ones, keep, out_n)
}

fn gram_weighted(
    f: &TwoNnzFactor,
    w: &[f64],
    _unused: Option<()>,
) -> Result<SparseSym, LinalgError> {
    let keep: Vec<Option<usize>> = (0..f.rows()).map(Some).collect();
    Ok(gram_weighted_masked(f, w, &keep, f.rows()))
}

fn gram_weighted_masked(
    f: &TwoNnzFactor,
    w: &[f64],
    keep: &[Option<usize>],
    out_n: usize,
) -> SparseSym {
    let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut add = |i: usize, j: usize, v: f64| {
        let key = if i <= j { (i, j) } else { (j, i) };
        *map.entry(key).or_insert(0.0) += v;
    };
    for j in 0..f.cols() {
        let wj = w[j];
        let [(r1, v1), (r2, v2)] = f.col_entries(j);
        let k1 = keep[r1];
        let k2 = if r2 == usize::MAX { None } else { keep[r2] };
        if let Some(p1) = k1 {
            add(p1, p1, v1 * v1 * wj);
        }
        if let Some(p2) = k2 {
            add(p2, p2, v2 * v2 * wj);
        }
        if let (Some(p1), Some(p2)) = (k1, k2) {
            add(p1, p2, v1 * v2 * wj);
        }
    }
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); out_n];
    for (&(i, j), &v) in &map {
        if v == 0.0 {
            continue;
        }
        cols[j].push((i, v));
        if i != j {
            cols[i].push((j, v));
        }
    }
    SparseSym::from_columns(out_n, cols)
}

/// Positive diagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagMatrix {
    d: Vec<f64>,
}

impl DiagMatrix {
    pub fn new(d: Vec<f64>) -> Result<DiagMatrix, LinalgError> {
        for (i, &v) in d.iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(LinalgError::InvalidMatrix(format!(
                    "diagonal entry {i} is {v}; must be strictly positive and finite"
                )));
            }
        }
        Ok(DiagMatrix { d })
    }

    pub fn identity(n: usize) -> DiagMatrix {
        DiagMatrix { d: vec![1.0; n] }
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.d[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.d
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.d
    }

    /// Componentwise product `D v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.d.iter().zip(v).map(|(d, x)| d * x).collect()
    }
}

/// General rectangular sparse matrix in compressed-column form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMat {
    n_rows: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMat {
    /// Builds from per-column `(row, value)` lists; rows need not be sorted.
    pub fn from_columns(
        n_rows: usize,
        columns: Vec<Vec<(usize, f64)>>,
    ) -> Result<SparseMat, LinalgError> {
        let mut col_ptr = Vec::with_capacity(columns.len() + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for (j, mut col) in columns.into_iter().enumerate() {
            col.sort_unstable_by_key(|&(r, _)| r);
            for &(r, v) in &col {
                if r >= n_rows {
                    return Err(LinalgError::DimensionMismatch(format!(
                        "row {r} outside matrix with {n_rows} rows (column {j})"
                    )));
                }
                if !v.is_finite() {
                    return Err(LinalgError::InvalidMatrix(format!(
                        "non-finite value in column {j}"
                    )));
                }
                if v != 0.0 {
                    row_idx.push(r);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Ok(SparseMat {
            n_rows,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.n_rows
    }

    pub fn cols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.col_ptr[j];
        let hi = self.col_ptr[j + 1];
        self.row_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn mat_vec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.cols() {
            return Err(LinalgError::DimensionMismatch(format!(
                "vector of length {} against matrix with {} columns",
                x.len(),
                self.cols()
            )));
        }
        let mut y = vec![0.0; self.n_rows];
        for j in 0..self.cols() {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for (i, v) in self.col(j) {
                y[i] += v * xj;
            }
        }
        Ok(y)
    }

    pub fn t_mat_vec(&self, y: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if y.len() != self.n_rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "vector of length {} against matrix with {} rows",
                y.len(),
                self.n_rows
            )));
        }
        let mut x = vec![0.0; self.cols()];
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = self.col(j).map(|(i, v)| v * y[i]).sum();
        }
        Ok(x)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.n_rows * self.cols()];
        for j in 0..self.cols() {
            for (i, v) in self.col(j) {
                dense[i * self.cols() + j] = v;
            }
        }
        dense
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_by_two() -> SparseSym {
        SparseSym::from_triplets(2, &[(0, 0, 2.0), (1, 1, 2.0), (0, 1, -1.0)]).unwrap()
    }

    #[test]
    fn mat_vec_identity() {
        let m = SparseSym::identity(2);
        assert_eq!(mat_vec(&m, &[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn mat_vec_row_sums() {
        let m = two_by_two();
        assert_eq!(mat_vec(&m, &[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn mat_vec_dimension_mismatch() {
        let m = two_by_two();
        assert!(mat_vec(&m, &[1.0]).is_err());
    }

    #[test]
    fn mat_vec_matches_dense_multiply() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 50;
        let mut triplets = Vec::new();
        for i in 0..n {
            triplets.push((i, i, 1.0 + rng.random::<f64>()));
        }
        for _ in 0..200 {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i != j {
                triplets.push((i, j, rng.random::<f64>() - 0.5));
            }
        }
        let m = SparseSym::from_triplets(n, &triplets).unwrap();
        let dense = m.to_dense();
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let sparse_y = mat_vec(&m, &x).unwrap();
        for i in 0..n {
            let yi: f64 = (0..n).map(|j| dense[i * n + j] * x[j]).sum();
            assert!((yi - sparse_y[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn gram_direct_expansion() {
        // A = [[1,1,0],[0,-1,1]], unit weights -> [[2,-1],[-1,2]].
        let f = TwoNnzFactor::new(
            2,
            vec![
                vec![(0, 1.0)],
                vec![(0, 1.0), (1, -1.0)],
                vec![(1, 1.0)],
            ],
        )
        .unwrap();
        let g = gram(&f, &DiagMatrix::identity(3)).unwrap();
        assert_eq!(g.get(0, 0), 2.0);
        assert_eq!(g.get(1, 1), 2.0);
        assert_eq!(g.get(0, 1), -1.0);
        assert_eq!(g.get(1, 0), -1.0);
    }

    #[test]
    fn gram_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 12;
        let m = 40;
        let mut cols = Vec::new();
        for _ in 0..m {
            let r1 = rng.random_range(0..n);
            let mut r2 = rng.random_range(0..n);
            while r2 == r1 {
                r2 = rng.random_range(0..n);
            }
            cols.push(vec![
                (r1, rng.random::<f64>() + 0.1),
                (r2, -(rng.random::<f64>() + 0.1)),
            ]);
        }
        let f = TwoNnzFactor::new(n, cols.clone()).unwrap();
        let w: Vec<f64> = (0..m).map(|_| rng.random::<f64>() + 0.2).collect();
        let g = gram(&f, &DiagMatrix::new(w.clone()).unwrap()).unwrap();
        // Dense A·W·Aᵀ.
        let mut a = vec![0.0; n * m];
        for (j, col) in cols.iter().enumerate() {
            for &(r, v) in col {
                a[r * m + j] = v;
            }
        }
        for i in 0..n {
            for k in 0..n {
                let expect: f64 = (0..m).map(|j| a[i * m + j] * w[j] * a[k * m + j]).sum();
                assert!((g.get(i, k) - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
            }
        }
    }

    #[test]
    fn gram_unit_weights_equals_identity_weights() {
        let f = TwoNnzFactor::new(2, vec![vec![(0, 1.0), (1, -0.5)], vec![(1, 2.0)]]).unwrap();
        let g1 = gram(&f, &DiagMatrix::identity(2)).unwrap();
        let g2 = gram(&f, &DiagMatrix::new(vec![1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn m_norm_examples() {
        let id = SparseSym::identity(2);
        assert!((m_norm(&id, &[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-14);
        let m = two_by_two();
        assert!((m_norm(&m, &[1.0, 1.0]).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(m_norm(&m, &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn m_norm_rejects_indefinite() {
        let m = SparseSym::from_triplets(2, &[(0, 0, 1.0), (1, 1, -5.0)]).unwrap();
        assert!(matches!(
            m_norm(&m, &[0.0, 1.0]),
            Err(LinalgError::NotPsd(_))
        ));
    }

    #[test]
    fn is_dd_examples() {
        assert!(is_dd(&two_by_two()));
        let bad =
            SparseSym::from_triplets(2, &[(0, 0, 2.0), (1, 1, 200.0), (0, 1, -10.0)]).unwrap();
        assert!(!is_dd(&bad));
        // D·M·D with D = diag(10^{1/2}, 10^{-1/2}): both rows become [20, -10].
        let d = DiagMatrix::new(vec![10f64.sqrt(), 10f64.powf(-0.5)]).unwrap();
        let scaled = bad.scaled(&d).unwrap();
        assert!((scaled.get(0, 0) - 20.0).abs() < 1e-12);
        assert!((scaled.get(1, 1) - 20.0).abs() < 1e-12);
        assert!((scaled.get(0, 1) + 10.0).abs() < 1e-12);
        assert!(is_dd(&scaled));
    }

    #[test]
    fn is_dd_invariant_under_column_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 8;
        let mut cols = Vec::new();
        for i in 0..n {
            cols.push(vec![(i, 1.5)]);
        }
        for _ in 0..10 {
            let r1 = rng.random_range(0..n);
            let mut r2 = rng.random_range(0..n);
            while r2 == r1 {
                r2 = rng.random_range(0..n);
            }
            cols.push(vec![(r1, 1.0), (r2, -(rng.random::<f64>() * 2.0 + 0.1))]);
        }
        let w: Vec<f64> = (0..cols.len()).map(|_| rng.random::<f64>() + 0.1).collect();
        let f = TwoNnzFactor::new(n, cols.clone()).unwrap();
        let before = is_dd(&gram(&f, &DiagMatrix::new(w.clone()).unwrap()).unwrap());
        // Reverse the column order together with the weights.
        let mut cols_rev = cols;
        cols_rev.reverse();
        let mut w_rev = w;
        w_rev.reverse();
        let f_rev = TwoNnzFactor::new(n, cols_rev).unwrap();
        let after = is_dd(&gram(&f_rev, &DiagMatrix::new(w_rev).unwrap()).unwrap());
        assert_eq!(before, after);
    }

    #[test]
    fn diag_rejects_nonpositive() {
        assert!(DiagMatrix::new(vec![1.0, 0.0]).is_err());
        assert!(DiagMatrix::new(vec![1.0, -2.0]).is_err());
        assert!(DiagMatrix::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn factor_rejects_bad_columns() {
        assert!(TwoNnzFactor::new(2, vec![vec![]]).is_err());
        assert!(TwoNnzFactor::new(2, vec![vec![(0, 1.0), (1, 1.0), (1, 1.0)]]).is_err());
        assert!(TwoNnzFactor::new(2, vec![vec![(0, 0.0)]]).is_err());
        assert!(TwoNnzFactor::new(2, vec![vec![(3, 1.0)]]).is_err());
    }
}
