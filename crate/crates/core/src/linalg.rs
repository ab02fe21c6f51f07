//! Small dense linear algebra: just enough for 2n-dimensional cost operators.
//!
//! Everything here works on row-major `Matrix` values. The eigensolver is a
//! cyclic Jacobi iteration for symmetric matrices; the linear solver is
//! Gaussian elimination with partial pivoting and rank/consistency detection;
//! `nnls` is the Lawson-Hanson active-set method.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max asymmetry {max_asym:.3e})")]
    NotSymmetric { max_asym: f64 },
    #[error("Jacobi iteration did not converge")]
    JacobiNoConvergence,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "flat data length mismatch");
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            out[i] = acc;
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    /// (M + M^T)/2; panics on non-square input.
    pub fn symmetric_part(&self) -> Matrix {
        assert!(self.is_square(), "symmetric part of non-square matrix");
        let mut s = Matrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                s.set(i, j, 0.5 * (self.get(i, j) + self.get(j, i)));
            }
        }
        s
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, a| m.max(a.abs()))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dot dimension mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Columns are the corresponding eigenvectors.
    pub vectors: Matrix,
}

impl SymEigen {
    pub fn min_value(&self) -> f64 {
        self.values[0]
    }

    pub fn max_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn vector(&self, idx: usize) -> Vec<f64> {
        (0..self.vectors.rows())
            .map(|i| self.vectors.get(i, idx))
            .collect()
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Iterates plane rotations over the upper triangle until the off-diagonal
/// Frobenius norm drops below 1e-13 * (1 + ||A||_F). Input asymmetry up to
/// 1e-9 relative is tolerated and symmetrized away.
pub fn jacobi_eigen(m: &Matrix) -> Result<SymEigen, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows, cols: m.cols });
    }
    let n = m.rows;
    let scale = 1.0 + m.frobenius_norm();
    let mut max_asym = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            max_asym = max_asym.max((m.get(i, j) - m.get(j, i)).abs());
        }
    }
    if max_asym > 1e-9 * scale {
        return Err(LinalgError::NotSymmetric { max_asym });
    }

    let mut a = m.symmetric_part();
    let mut v = Matrix::identity(n);
    let tol = 1e-13 * scale;

    const MAX_SWEEPS: usize = 100;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q) * a.get(p, q);
            }
        }
        if (2.0 * off).sqrt() <= tol {
            let mut pairs: Vec<(f64, usize)> =
                (0..n).map(|i| (a.get(i, i), i)).collect();
            pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let mut vectors = Matrix::zeros(n, n);
            for (new_col, &(_, old_col)) in pairs.iter().enumerate() {
                for i in 0..n {
                    vectors.set(i, new_col, v.get(i, old_col));
                }
            }
            return Ok(SymEigen { values, vectors });
        }

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= tol / (n as f64 * n as f64) {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e12 {
                    // rotation angle underflows; tan ~ 1/(2 theta)
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    Err(LinalgError::JacobiNoConvergence)
}

/// Outcome of solving a (possibly overdetermined) linear system exactly.
#[derive(Debug, Clone, PartialEq)]
pub enum Solve {
    Unique(Vec<f64>),
    RankDeficient,
    Inconsistent,
}

/// Gaussian elimination with partial pivoting on the stacked system `a x = b`
/// (`a` is m x n with m >= n). Pivots below `pivot_tol` (relative to the
/// largest entry) count as zero.
pub fn solve_dense(a: &Matrix, b: &[f64], pivot_tol: f64) -> Solve {
    let m = a.rows();
    let n = a.cols();
    assert_eq!(b.len(), m, "rhs length mismatch");

    // augmented working copy
    let mut w = vec![vec![0.0; n + 1]; m];
    for i in 0..m {
        w[i][..n].copy_from_slice(a.row(i));
        w[i][n] = b[i];
    }
    let scale = a.max_abs().max(b.iter().fold(0.0_f64, |s, x| s.max(x.abs())));
    let tol = pivot_tol * (1.0 + scale);

    let mut rank = 0;
    for col in 0..n {
        // partial pivot
        let mut best = rank;
        let mut best_val = w[rank][col].abs();
        for r in (rank + 1)..m {
            if w[r][col].abs() > best_val {
                best = r;
                best_val = w[r][col].abs();
            }
        }
        if best_val <= tol {
            continue;
        }
        w.swap(rank, best);
        let piv = w[rank][col];
        for r in 0..m {
            if r == rank {
                continue;
            }
            let f = w[r][col] / piv;
            if f == 0.0 {
                continue;
            }
            for c in col..=n {
                let delta = f * w[rank][c];
                w[r][c] -= delta;
            }
            w[r][col] = 0.0;
        }
        rank += 1;
        if rank == m.min(n) {
            break;
        }
    }

    // consistency: any residual row with nonzero rhs and zero coefficients
    for r in 0..m {
        let coef_max = w[r][..n].iter().fold(0.0_f64, |s, x| s.max(x.abs()));
        if coef_max <= tol && w[r][n].abs() > tol.max(1e-9 * (1.0 + scale)) {
            return Solve::Inconsistent;
        }
    }
    if rank < n {
        return Solve::RankDeficient;
    }

    // back-substitute from the reduced echelon form: each of the first n rows
    // now has a single pivot column
    let mut x = vec![0.0; n];
    let mut row_of_col = vec![usize::MAX; n];
    let mut r = 0;
    for col in 0..n {
        if r < m && w[r][col].abs() > tol {
            row_of_col[col] = r;
            r += 1;
        }
    }
    for col in 0..n {
        let r = row_of_col[col];
        if r == usize::MAX {
            return Solve::RankDeficient;
        }
        x[col] = w[r][n] / w[r][col];
    }
    Solve::Unique(x)
}

/// Lawson-Hanson nonnegative least squares: min ||a x - b|| s.t. x >= 0.
///
/// Returns the solution and the residual norm. Deterministic; intended for
/// the small systems that arise from path/flow feasibility checks.
pub fn nnls(a: &Matrix, b: &[f64], tol: f64) -> (Vec<f64>, f64) {
    let m = a.rows();
    let n = a.cols();
    assert_eq!(b.len(), m);

    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    let at = a.transpose();

    let ls_on_passive = |passive: &[bool]| -> Option<Vec<f64>> {
        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        if idx.is_empty() {
            return Some(vec![]);
        }
        let mut sub = Matrix::zeros(m, idx.len());
        for i in 0..m {
            for (c, &j) in idx.iter().enumerate() {
                sub.set(i, c, a.get(i, j));
            }
        }
        // normal equations; systems here are tiny
        let ata = sub.transpose().matmul(&sub);
        let atb = sub.transpose().matvec(b);
        match solve_dense(&ata, &atb, 1e-12) {
            Solve::Unique(z) => Some(z),
            _ => None,
        }
    };

    let max_outer = 3 * n.max(4);
    for _ in 0..max_outer {
        let resid: Vec<f64> = a
            .matvec(&x)
            .iter()
            .zip(b)
            .map(|(ax, bi)| bi - ax)
            .collect();
        let w = at.matvec(&resid);
        let mut best = None;
        let mut best_w = tol;
        for j in 0..n {
            if !passive[j] && w[j] > best_w {
                best_w = w[j];
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        passive[j] = true;

        // inner loop: restore nonnegativity on the passive set
        loop {
            let Some(z) = ls_on_passive(&passive) else {
                // singular passive set; drop the newest variable and stop growing
                passive[j] = false;
                break;
            };
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            if z.iter().all(|&v| v > 0.0) {
                for (c, &k) in idx.iter().enumerate() {
                    x[k] = z[c];
                }
                for k in 0..n {
                    if !passive[k] {
                        x[k] = 0.0;
                    }
                }
                break;
            }
            // step toward z until the first variable hits zero
            let mut alpha = f64::INFINITY;
            for (c, &k) in idx.iter().enumerate() {
                if z[c] <= 0.0 {
                    let denom = x[k] - z[c];
                    if denom > 0.0 {
                        alpha = alpha.min(x[k] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                passive[j] = false;
                break;
            }
            for (c, &k) in idx.iter().enumerate() {
                x[k] += alpha * (z[c] - x[k]);
            }
            for &k in &idx {
                if x[k] <= tol.max(1e-14) {
                    x[k] = 0.0;
                    passive[k] = false;
                }
            }
        }
    }

    let resid: Vec<f64> = a
        .matvec(&x)
        .iter()
        .zip(b)
        .map(|(ax, bi)| ax - bi)
        .collect();
    (x, norm2(&resid))
}
