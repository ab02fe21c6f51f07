//! Theoretical price-of-anarchy and bicriteria bounds: the beta machinery
//! (closed form and grid oracle), the asymmetry-based pairwise bound, and
//! matrix-split validation with the eta^2 penalty for nonseparable costs.

use thiserror::Error;

use crate::cost::{CostError, CostMatrix, SeparabilityClass};
use crate::linalg::{jacobi_eigen, LinalgError, Matrix};

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("cost matrix is not pairwise separable")]
    NotPairwiseSeparable,
    #[error("link {link} has a degenerate cost block (zero coefficient)")]
    DegenerateBlock { link: usize },
    #[error("link {link} has unequal class rows; the closed form needs shared per-link delays")]
    BlockRowsDiffer { link: usize },
    #[error("split mismatch at ({row},{col}): A = {lhs}, Q + P = {rhs}")]
    SplitMismatch { row: usize, col: usize, lhs: f64, rhs: f64 },
    #[error("Q has off-block mass at ({row},{col}): {value}")]
    QNotBlockDiagonal { row: usize, col: usize, value: f64 },
    #[error("Q block entry at ({row},{col}) is not strictly positive: {value}")]
    QNonPositiveBlock { row: usize, col: usize, value: f64 },
    #[error("symmetric part of P is not positive definite (min eigenvalue {min_eigenvalue:.3e})")]
    PNotPositiveDefinite { min_eigenvalue: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn from_cost_error(e: CostError) -> BoundsError {
    match e {
        CostError::NotPairwiseSeparable => BoundsError::NotPairwiseSeparable,
        CostError::DegenerateBlock { link } => BoundsError::DegenerateBlock { link },
        other => BoundsError::Invalid(other.to_string()),
    }
}

/// A bound value that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Finite(f64),
    Unbounded,
}

impl Bound {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(*v),
            Bound::Unbounded => None,
        }
    }
}

impl std::fmt::Display for Bound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bound::Finite(v) => write!(f, "{v}"),
            Bound::Unbounded => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaMethod {
    ClosedForm,
    GridOracle,
}

/// One link's contribution to the beta numerator.
#[derive(Debug, Clone)]
pub struct LinkBetaTerm {
    pub link: usize,
    /// max over z >= 0 of (c_i(v) - c_i(z)) (x_i + y_i)
    pub numerator: f64,
    /// the congestion-weighted mass (p x* + q y*) of the link at v
    pub weight: f64,
}

/// Value of beta(c, v) with both denominators: the definition's
/// <c(v), v> and the proof-side <A v, v> that drops the offsets.
#[derive(Debug, Clone)]
pub struct BetaValue {
    /// numerator / <A v + b, v>, with 0/0 = 0
    pub value: f64,
    /// numerator / <A v, v>, with 0/0 = 0
    pub proof_bound: f64,
    pub numerator: f64,
    pub per_link_terms: Vec<LinkBetaTerm>,
    pub method: BetaMethod,
    /// grid resolution error bar (zero for the closed form)
    pub resolution: f64,
}

/// Grid-oracle outcome: the inner maximization can diverge along a
/// coordinate ray when a zero-congestion coordinate still carries cost mass.
#[derive(Debug, Clone)]
pub enum BetaOutcome {
    Finite(BetaValue),
    Unbounded { coordinate: usize },
}

fn denominators(cost: &CostMatrix, v: &[f64]) -> (f64, f64) {
    let av = cost.coefficients().matvec(v);
    let proof: f64 = av.iter().zip(v).map(|(a, b)| a * b).sum();
    let exact: f64 = av
        .iter()
        .zip(cost.offsets())
        .zip(v)
        .map(|((a, b), x)| (a + b) * x)
        .sum();
    (exact, proof)
}

fn ratio_zero_convention(num: f64, den: f64) -> f64 {
    if den.abs() <= 1e-300 {
        0.0
    } else {
        num / den
    }
}

fn validate_v(cost: &CostMatrix, v: &[f64]) -> Result<(), BoundsError> {
    if v.len() != cost.dim() {
        return Err(BoundsError::DimensionMismatch { expected: cost.dim(), got: v.len() });
    }
    if v.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(BoundsError::Invalid("v must be nonnegative and finite".into()));
    }
    Ok(())
}

/// Closed-form beta(c, v) for pairwise-separable costs with shared per-link
/// delays: each link contributes (p x* + q y*)^2 / (4 min(p, q)) to the
/// numerator, the per-link inner maximum over the nonnegative orthant.
pub fn beta_closed_form(cost: &CostMatrix, v: &[f64]) -> Result<BetaValue, BoundsError> {
    validate_v(cost, v)?;
    if cost.classify() == SeparabilityClass::Nonseparable {
        return Err(BoundsError::NotPairwiseSeparable);
    }
    if cost.offsets().iter().any(|&b| b < 0.0) {
        return Err(BoundsError::Invalid("offsets must be nonnegative".into()));
    }

    let mut numerator = 0.0;
    let mut per_link_terms = Vec::with_capacity(cost.link_count());
    for link in 0..cost.link_count() {
        let block = cost.block(link);
        let (p, q) = (block[0][0], block[0][1]);
        if block[1] != block[0] {
            return Err(BoundsError::BlockRowsDiffer { link: link + 1 });
        }
        if p == 0.0 && q == 0.0 {
            // constant link: c(v) - c(z) vanishes identically
            per_link_terms.push(LinkBetaTerm { link: link + 1, numerator: 0.0, weight: 0.0 });
            continue;
        }
        if p <= 0.0 || q <= 0.0 {
            return Err(BoundsError::DegenerateBlock { link: link + 1 });
        }
        let weight = p * v[2 * link] + q * v[2 * link + 1];
        let term = weight * weight / (4.0 * p.min(q));
        numerator += term;
        per_link_terms.push(LinkBetaTerm { link: link + 1, numerator: term, weight });
    }

    let (exact_den, proof_den) = denominators(cost, v);
    Ok(BetaValue {
        value: ratio_zero_convention(numerator, exact_den),
        proof_bound: ratio_zero_convention(numerator, proof_den),
        numerator,
        per_link_terms,
        method: BetaMethod::ClosedForm,
        resolution: 0.0,
    })
}

/// Grid-search oracle for beta(c, v): maximizes <c(v) - c(z), z> =
/// <A(v - z), z> over a finite box that provably contains every stationary
/// point, then polishes with projected gradient ascent.
pub fn beta_grid_oracle(
    cost: &CostMatrix,
    v: &[f64],
    grid_steps: usize,
) -> Result<BetaOutcome, BoundsError> {
    validate_v(cost, v)?;
    if grid_steps < 2 {
        return Err(BoundsError::Invalid("grid_steps must be >= 2".into()));
    }
    if !cost.is_elementwise_monotone() {
        return Err(BoundsError::Invalid(
            "grid oracle requires nonnegative coefficients".into(),
        ));
    }
    let a = cost.coefficients();
    let dim = cost.dim();
    let w = a.matvec(v);

    // divergence along a coordinate ray: phi(t e_j) = t w_j - t^2 A_jj
    for j in 0..dim {
        if a.get(j, j) == 0.0 && w[j] > 1e-12 * (1.0 + crate::linalg::norm2(&w)) {
            return Ok(BetaOutcome::Unbounded { coordinate: j });
        }
    }

    let pairwise = cost.classify() != SeparabilityClass::Nonseparable;

    let phi = |z: &[f64]| -> f64 {
        let az = a.matvec(z);
        w.iter().zip(&az).zip(z).map(|((wi, ai), zi)| (wi - ai) * zi).sum()
    };

    let (numerator, resolution) = if pairwise {
        // per-block 2-D grids: the objective decomposes exactly
        let mut total = 0.0;
        let mut res = 0.0;
        for link in 0..cost.link_count() {
            let block = cost.block(link);
            let rows = [block[0], block[1]];
            let b_max = {
                let mins = rows
                    .iter()
                    .flat_map(|r| r.iter())
                    .filter(|&&c| c > 0.0)
                    .fold(f64::INFINITY, |m, &c| m.min(c));
                if !mins.is_finite() {
                    0.0
                } else {
                    (w[2 * link].max(w[2 * link + 1])) / mins
                }
            };
            if b_max <= 0.0 {
                continue;
            }
            let h = b_max / grid_steps as f64;
            let (i0, i1) = (2 * link, 2 * link + 1);
            let mut best = 0.0f64;
            let mut best_xy = (0.0, 0.0);
            for ix in 0..=grid_steps {
                let x = ix as f64 * h;
                for iy in 0..=grid_steps {
                    let y = iy as f64 * h;
                    let cx = w[i0] - (rows[0][0] * x + rows[0][1] * y);
                    let cy = w[i1] - (rows[1][0] * x + rows[1][1] * y);
                    let val = cx * x + cy * y;
                    if val > best {
                        best = val;
                        best_xy = (x, y);
                    }
                }
            }
            // ascent polish on the 2-D block objective
            let block_phi = |x: f64, y: f64| {
                let cx = w[i0] - (rows[0][0] * x + rows[0][1] * y);
                let cy = w[i1] - (rows[1][0] * x + rows[1][1] * y);
                cx * x + cy * y
            };
            let (mut x, mut y) = best_xy;
            let mut val = best;
            let mut step = h;
            for _ in 0..200 {
                let gx = w[i0] - 2.0 * rows[0][0] * x - (rows[0][1] + rows[1][0]) * y;
                let gy = w[i1] - 2.0 * rows[1][1] * y - (rows[0][1] + rows[1][0]) * x;
                let mut improved = false;
                for _ in 0..30 {
                    let nx = (x + step * gx).max(0.0);
                    let ny = (y + step * gy).max(0.0);
                    let nv = block_phi(nx, ny);
                    if nv > val {
                        x = nx;
                        y = ny;
                        val = nv;
                        improved = true;
                        break;
                    }
                    step *= 0.5;
                }
                if !improved || step < 1e-16 * (1.0 + b_max) {
                    break;
                }
            }
            total += val;
            let grad_bound = w[i0].abs() + w[i1].abs()
                + 2.0 * b_max * rows.iter().flat_map(|r| r.iter()).sum::<f64>();
            res += grad_bound * h;
        }
        (total, res)
    } else {
        if dim > 6 {
            return Err(BoundsError::Invalid(format!(
                "joint grid oracle supports up to 3 links, got {}",
                dim / 2
            )));
        }
        let boxes: Vec<f64> = (0..dim)
            .map(|j| {
                let ajj = a.get(j, j);
                if ajj > 0.0 {
                    (w[j] / ajj).max(0.0)
                } else {
                    0.0
                }
            })
            .collect();
        let steps_eff = grid_steps.min(
            (5_000_000f64.powf(1.0 / dim as f64)).floor() as usize,
        );
        let steps_eff = steps_eff.max(2);
        let mut best = 0.0f64;
        let mut best_z = vec![0.0; dim];
        let mut z = vec![0.0; dim];
        let mut idx = vec![0usize; dim];
        loop {
            for j in 0..dim {
                z[j] = boxes[j] * idx[j] as f64 / steps_eff as f64;
            }
            let val = phi(&z);
            if val > best {
                best = val;
                best_z = z.clone();
            }
            // odometer increment
            let mut j = 0;
            loop {
                if j == dim {
                    break;
                }
                idx[j] += 1;
                if idx[j] <= steps_eff {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == dim {
                break;
            }
        }
        // projected ascent polish inside the box
        let sym = a.add(&a.transpose());
        let mut zc = best_z;
        let mut val = best;
        let h_max = boxes
            .iter()
            .map(|b| b / steps_eff as f64)
            .fold(0.0f64, f64::max);
        let mut step = h_max.max(1e-6);
        for _ in 0..500 {
            let sz = sym.matvec(&zc);
            let grad: Vec<f64> = w.iter().zip(&sz).map(|(wi, si)| wi - si).collect();
            let mut improved = false;
            for _ in 0..30 {
                let cand: Vec<f64> = zc
                    .iter()
                    .zip(&grad)
                    .zip(&boxes)
                    .map(|((x, g), b)| (x + step * g).clamp(0.0, *b))
                    .collect();
                let nv = phi(&cand);
                if nv > val {
                    zc = cand;
                    val = nv;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved || step < 1e-16 {
                break;
            }
        }
        let grad_bound = crate::linalg::norm2(&w)
            + sym.frobenius_norm() * crate::linalg::norm2(&boxes);
        (val, grad_bound * h_max * (dim as f64).sqrt())
    };

    let (exact_den, proof_den) = denominators(cost, v);
    Ok(BetaOutcome::Finite(BetaValue {
        value: ratio_zero_convention(numerator, exact_den),
        proof_bound: ratio_zero_convention(numerator, proof_den),
        numerator,
        per_link_terms: Vec::new(),
        method: BetaMethod::GridOracle,
        resolution,
    }))
}

/// Price-of-anarchy bound (1 - beta)^-1; unbounded once beta reaches 1.
pub fn poa_bound_from_beta(beta_class: f64) -> Bound {
    assert!(beta_class >= 0.0, "beta must be nonnegative");
    if beta_class < 1.0 {
        Bound::Finite(1.0 / (1.0 - beta_class))
    } else {
        Bound::Unbounded
    }
}

/// Bicriteria bound 1 + beta.
pub fn bicriteria_bound_from_beta(beta_class: f64) -> f64 {
    assert!(beta_class >= 0.0, "beta must be nonnegative");
    1.0 + beta_class
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theorem {
    /// generic beta-based bound
    BetaClass,
    /// pairwise-separable bound parameterized by the degree of asymmetry
    PairwiseAsymmetry,
    /// nonseparable bound via a Q + P split
    NonseparableSplit,
}

impl Theorem {
    pub fn label(&self) -> &'static str {
        match self {
            Theorem::BetaClass => "beta-class",
            Theorem::PairwiseAsymmetry => "pairwise-asymmetry",
            Theorem::NonseparableSplit => "nonseparable-split",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundReport {
    pub k: f64,
    pub poa_bound: Bound,
    pub bicriteria_bound: f64,
    pub theorem: Theorem,
    pub applicable: bool,
    pub reason: String,
}

/// Asymmetry-parameterized bounds for pairwise-separable costs:
/// PoA <= 4/(4-k) for k < 4, bicriteria <= 1 + k/4 for any k.
pub fn bounds_pairwise(cost: &CostMatrix) -> Result<BoundReport, BoundsError> {
    let k = cost.degree_of_asymmetry().map_err(from_cost_error)?;
    let poa_bound = if k < 4.0 {
        Bound::Finite(4.0 / (4.0 - k))
    } else {
        Bound::Unbounded
    };
    let reason = if k < 4.0 {
        format!("pairwise separable with degree of asymmetry k = {k}")
    } else {
        format!("degree of asymmetry k = {k} >= 4: no finite PoA bound")
    };
    Ok(BoundReport {
        k,
        poa_bound,
        bicriteria_bound: 1.0 + k / 4.0,
        theorem: Theorem::PairwiseAsymmetry,
        applicable: true,
        reason,
    })
}

/// A validated decomposition A = Q + P with Q block-diagonal, strictly
/// positive on its blocks, and P with positive-definite symmetric part.
#[derive(Debug, Clone)]
pub struct MatrixSplit {
    pub q: Matrix,
    pub p: Matrix,
    pub k_q: f64,
    pub eta_squared: f64,
}

pub fn validate_split(a: &Matrix, q: &Matrix, p: &Matrix) -> Result<MatrixSplit, BoundsError> {
    let dim = a.rows();
    if !a.is_square() || dim % 2 != 0 || dim == 0 {
        return Err(BoundsError::Invalid(
            "A must be square with even dimension".into(),
        ));
    }
    for (m, name) in [(q, "Q"), (p, "P")] {
        if m.rows() != dim || m.cols() != dim {
            return Err(BoundsError::Invalid(format!(
                "{name} must be {dim}x{dim}, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
    }
    let scale = 1.0 + a.max_abs().max(q.max_abs()).max(p.max_abs());
    for i in 0..dim {
        for j in 0..dim {
            let lhs = a.get(i, j);
            let rhs = q.get(i, j) + p.get(i, j);
            if (lhs - rhs).abs() > 1e-12 * scale {
                return Err(BoundsError::SplitMismatch { row: i + 1, col: j + 1, lhs, rhs });
            }
        }
    }
    for i in 0..dim {
        for j in 0..dim {
            let in_block = i / 2 == j / 2;
            let v = q.get(i, j);
            if !in_block && v.abs() > 1e-12 * scale {
                return Err(BoundsError::QNotBlockDiagonal { row: i + 1, col: j + 1, value: v });
            }
            if in_block && v <= 0.0 {
                return Err(BoundsError::QNonPositiveBlock { row: i + 1, col: j + 1, value: v });
            }
        }
    }
    let eta = eta_squared(p)?;
    let k_q = block_degree_of_asymmetry(q);
    Ok(MatrixSplit { q: q.clone(), p: p.clone(), k_q, eta_squared: eta })
}

/// Degree of asymmetry of a block-diagonal matrix with strictly positive
/// block entries: max over rows of max(ratio, 1/ratio).
fn block_degree_of_asymmetry(q: &Matrix) -> f64 {
    let mut k: f64 = 1.0;
    for link in 0..q.rows() / 2 {
        for r in 0..2 {
            let p = q.get(2 * link + r, 2 * link);
            let s = q.get(2 * link + r, 2 * link + 1);
            k = k.max((p / s).max(s / p));
        }
    }
    k
}

/// The nonseparable penalty: largest eigenvalue of
/// S^{-1/2} P^T S^{-1} P S^{-1/2} with S = (P + P^T)/2.
pub fn eta_squared(p: &Matrix) -> Result<f64, BoundsError> {
    if !p.is_square() {
        return Err(BoundsError::Invalid("P must be square".into()));
    }
    let s = p.symmetric_part();
    let eig = jacobi_eigen(&s)?;
    let scale = 1.0 + s.max_abs();
    if eig.min_value() <= 1e-10 * scale {
        return Err(BoundsError::PNotPositiveDefinite { min_eigenvalue: eig.min_value() });
    }
    let n = p.rows();
    let mut s_inv_sqrt = Matrix::zeros(n, n);
    let mut s_inv = Matrix::zeros(n, n);
    for idx in 0..n {
        let lambda = eig.values[idx].max(1e-12);
        let vcol = eig.vector(idx);
        let w_sqrt = 1.0 / lambda.sqrt();
        let w_inv = 1.0 / lambda;
        for i in 0..n {
            for j in 0..n {
                let outer = vcol[i] * vcol[j];
                s_inv_sqrt.set(i, j, s_inv_sqrt.get(i, j) + w_sqrt * outer);
                s_inv.set(i, j, s_inv.get(i, j) + w_inv * outer);
            }
        }
    }
    let m = s_inv_sqrt
        .matmul(&p.transpose())
        .matmul(&s_inv)
        .matmul(p)
        .matmul(&s_inv_sqrt);
    let m_sym = m.symmetric_part();
    let eig_m = jacobi_eigen(&m_sym)?;
    Ok(eig_m.max_value())
}

/// Bounds from a validated split: PoA <= 4/(4-k_Q) + eta^2 when k_Q < 4,
/// bicriteria <= 2 + k_Q/4 for any k_Q.
pub fn bounds_nonseparable(split: &MatrixSplit) -> BoundReport {
    let poa_bound = if split.k_q < 4.0 {
        Bound::Finite(4.0 / (4.0 - split.k_q) + split.eta_squared)
    } else {
        Bound::Unbounded
    };
    let reason = if split.k_q < 4.0 {
        format!(
            "valid split with k_Q = {} and eta^2 = {}",
            split.k_q, split.eta_squared
        )
    } else {
        format!("split asymmetry k_Q = {} >= 4: no finite PoA bound", split.k_q)
    };
    BoundReport {
        k: split.k_q,
        poa_bound,
        bicriteria_bound: 2.0 + split.k_q / 4.0,
        theorem: Theorem::NonseparableSplit,
        applicable: true,
        reason,
    }
}

/// Per-row outcome of the diagonal-dominance sufficient conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct RowDominance {
    /// 1-based row index
    pub row: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Sufficient (not necessary) conditions on A for a valid split to exist:
/// each diagonal entry must dominate half the symmetrized off-block mass of
/// its row, where the row's block partner is excluded.
pub fn dominance_sufficient_conditions(a: &Matrix) -> Result<(bool, Vec<RowDominance>), BoundsError> {
    let dim = a.rows();
    if !a.is_square() || dim % 2 != 0 || dim == 0 {
        return Err(BoundsError::Invalid(
            "A must be square with even dimension".into(),
        ));
    }
    let mut rows = Vec::with_capacity(dim);
    let mut all = true;
    for i in 0..dim {
        // 1-based row index i+1; partner completes the 2x2 block
        let partner = if (i + 1) % 2 == 0 { i - 1 } else { i + 1 };
        let mut sum = 0.0;
        for j in 0..dim {
            if j == i || j == partner {
                continue;
            }
            sum += (a.get(i, j) + a.get(j, i)).abs();
        }
        let lhs = a.get(i, i);
        let rhs = 0.5 * sum;
        let holds = lhs > rhs;
        all &= holds;
        rows.push(RowDominance { row: i + 1, lhs, rhs, holds });
    }
    Ok((all, rows))
}

/// The default split: P takes the off-block mass of A plus a diagonal lift
/// c = (half the largest symmetrized off-block row sum) + margin, and
/// Q = blockdiag(A) - c I keeps the rest. Validation may still reject it.
pub fn default_split(a: &Matrix, margin: f64) -> Result<(Matrix, Matrix), BoundsError> {
    let dim = a.rows();
    if !a.is_square() || dim % 2 != 0 || dim == 0 {
        return Err(BoundsError::Invalid(
            "A must be square with even dimension".into(),
        ));
    }
    if !(margin > 0.0) {
        return Err(BoundsError::Invalid("margin must be positive".into()));
    }
    let mut worst = 0.0f64;
    for i in 0..dim {
        let mut sum = 0.0;
        for j in 0..dim {
            if i / 2 == j / 2 {
                continue;
            }
            sum += (a.get(i, j) + a.get(j, i)).abs();
        }
        worst = worst.max(0.5 * sum);
    }
    let c = worst + margin;
    let mut q = Matrix::zeros(dim, dim);
    let mut p = Matrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            if i / 2 == j / 2 {
                q.set(i, j, a.get(i, j));
            } else {
                p.set(i, j, a.get(i, j));
            }
        }
        q.set(i, i, q.get(i, i) - c);
        p.set(i, i, p.get(i, i) + c);
    }
    Ok((q, p))
}
