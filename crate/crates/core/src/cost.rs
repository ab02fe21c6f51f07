//! Affine link-cost models for two-class traffic: the platooning capacity
//! model, per-link asymmetric coefficients, the assembled 2n x 2n cost
//! operator, and its structural/monotonicity classification.

use thiserror::Error;

use crate::linalg::{jacobi_eigen, Matrix};
use crate::network::FlowVector;

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("capacity undefined at zero flow")]
    ZeroFlow,
    #[error("degenerate cost: congestion coefficient would be zero")]
    DegenerateCost,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cost matrix is not pairwise separable")]
    NotPairwiseSeparable,
    #[error("link {link} has a degenerate cost block (zero coefficient, asymmetry undefined)")]
    DegenerateBlock { link: usize },
    #[error("invalid cost model: {0}")]
    Invalid(String),
}

/// Parameters of the mixed-autonomy capacity model for one road.
///
/// `inv_gap_regular`/`inv_gap_smart` are the reciprocals of the headway time
/// gap in front of a regular / smart vehicle (1/hours).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityParams {
    pub inv_gap_regular: f64,
    pub inv_gap_smart: f64,
    pub congestion_scale: f64,
    pub free_flow_time: f64,
}

impl CapacityParams {
    pub fn new(
        inv_gap_regular: f64,
        inv_gap_smart: f64,
        congestion_scale: f64,
        free_flow_time: f64,
    ) -> Result<Self, CostError> {
        if !(inv_gap_regular > 0.0) || !(inv_gap_smart > 0.0) {
            return Err(CostError::Invalid(
                "reciprocal time gaps must be positive".into(),
            ));
        }
        if !(congestion_scale >= 0.0) || !(free_flow_time >= 0.0) {
            return Err(CostError::Invalid(
                "congestion scale and free-flow time must be nonnegative".into(),
            ));
        }
        Ok(CapacityParams {
            inv_gap_regular,
            inv_gap_smart,
            congestion_scale,
            free_flow_time,
        })
    }

    /// Road capacity (vehicles/hour) at class flows `(x, y)`.
    pub fn capacity(&self, x: f64, y: f64) -> Result<f64, CostError> {
        if x + y <= 0.0 {
            return Err(CostError::ZeroFlow);
        }
        let m = self.inv_gap_regular;
        let big_m = self.inv_gap_smart;
        Ok(m * big_m * (x + y) / (big_m * x + m * y))
    }
}

/// Which vehicle class carries the asymmetry factor in a link's cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// c = b + k*a*x + a*y
    RegularHeavy,
    /// c = b + a*x + k*a*y
    SmartHeavy,
}

/// Affine cost coefficients of one link: free-flow time plus class-weighted
/// congestion with asymmetry ratio `asymmetry` on the heavy class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkCostParams {
    pub free_flow_time: f64,
    pub coefficient: f64,
    pub asymmetry: f64,
    pub orientation: Orientation,
}

impl LinkCostParams {
    pub fn new(
        free_flow_time: f64,
        coefficient: f64,
        asymmetry: f64,
        orientation: Orientation,
    ) -> Result<Self, CostError> {
        if !(free_flow_time >= 0.0) {
            return Err(CostError::Invalid("free-flow time must be >= 0".into()));
        }
        if !(coefficient > 0.0) {
            return Err(CostError::DegenerateCost);
        }
        if !(asymmetry > 0.0) {
            return Err(CostError::Invalid("asymmetry ratio must be > 0".into()));
        }
        Ok(LinkCostParams { free_flow_time, coefficient, asymmetry, orientation })
    }

    /// Derives the affine coefficients from the capacity model:
    /// a = r/M, k = M/m, regular-heavy.
    pub fn from_capacity(params: &CapacityParams) -> Result<Self, CostError> {
        if params.congestion_scale == 0.0 {
            return Err(CostError::DegenerateCost);
        }
        LinkCostParams::new(
            params.free_flow_time,
            params.congestion_scale / params.inv_gap_smart,
            params.inv_gap_smart / params.inv_gap_regular,
            Orientation::RegularHeavy,
        )
    }

    /// The (regular, smart) coefficients of this link's cost row.
    pub fn row(&self) -> (f64, f64) {
        match self.orientation {
            Orientation::RegularHeavy => (self.asymmetry * self.coefficient, self.coefficient),
            Orientation::SmartHeavy => (self.coefficient, self.asymmetry * self.coefficient),
        }
    }

    /// Delay on this link at class flows `(x, y)`.
    pub fn delay(&self, x: f64, y: f64) -> f64 {
        let (p, q) = self.row();
        self.free_flow_time + p * x + q * y
    }
}

/// Structural class of a cost matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparabilityClass {
    Separable,
    PairwiseSeparable,
    Nonseparable,
}

impl std::fmt::Display for SeparabilityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeparabilityClass::Separable => write!(f, "separable"),
            SeparabilityClass::PairwiseSeparable => write!(f, "pairwise-separable"),
            SeparabilityClass::Nonseparable => write!(f, "nonseparable"),
        }
    }
}

/// The assembled affine cost operator c(z) = A z + b over interleaved
/// (regular, smart) link flows.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    coefficients: Matrix,
    offsets: Vec<f64>,
}

impl CostMatrix {
    /// Builds from a full 2n x 2n coefficient matrix and a per-entry offset
    /// vector whose two entries per link must agree.
    pub fn new(coefficients: Matrix, offsets: Vec<f64>) -> Result<Self, CostError> {
        if !coefficients.is_square() {
            return Err(CostError::Invalid("coefficient matrix must be square".into()));
        }
        let dim = coefficients.rows();
        if dim == 0 || dim % 2 != 0 {
            return Err(CostError::Invalid(
                "coefficient matrix dimension must be a positive even number".into(),
            ));
        }
        if offsets.len() != dim {
            return Err(CostError::DimensionMismatch { expected: dim, got: offsets.len() });
        }
        if coefficients.data().iter().any(|v| !v.is_finite())
            || offsets.iter().any(|v| !v.is_finite())
        {
            return Err(CostError::Invalid("cost entries must be finite".into()));
        }
        for i in 0..dim / 2 {
            if offsets[2 * i] != offsets[2 * i + 1] {
                return Err(CostError::Invalid(format!(
                    "offset entries for link {} differ ({} vs {})",
                    i + 1,
                    offsets[2 * i],
                    offsets[2 * i + 1]
                )));
            }
        }
        Ok(CostMatrix { coefficients, offsets })
    }

    /// Builds from per-link offsets, duplicating each across the link's pair.
    pub fn from_link_offsets(coefficients: Matrix, link_offsets: &[f64]) -> Result<Self, CostError> {
        let mut offsets = Vec::with_capacity(2 * link_offsets.len());
        for &b in link_offsets {
            offsets.push(b);
            offsets.push(b);
        }
        CostMatrix::new(coefficients, offsets)
    }

    /// Assembles the block-diagonal pairwise-separable operator from per-link
    /// coefficients.
    pub fn assemble(links: &[LinkCostParams]) -> Result<Self, CostError> {
        if links.is_empty() {
            return Err(CostError::Invalid("no link costs given".into()));
        }
        let n = links.len();
        let mut a = Matrix::zeros(2 * n, 2 * n);
        let mut offsets = Vec::with_capacity(2 * n);
        for (i, lc) in links.iter().enumerate() {
            let (p, q) = lc.row();
            a.set(2 * i, 2 * i, p);
            a.set(2 * i, 2 * i + 1, q);
            a.set(2 * i + 1, 2 * i, p);
            a.set(2 * i + 1, 2 * i + 1, q);
            offsets.push(lc.free_flow_time);
            offsets.push(lc.free_flow_time);
        }
        CostMatrix::new(a, offsets)
    }

    pub fn dim(&self) -> usize {
        self.coefficients.rows()
    }

    pub fn link_count(&self) -> usize {
        self.dim() / 2
    }

    pub fn coefficients(&self) -> &Matrix {
        &self.coefficients
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn offset_of_link(&self, link_index: usize) -> f64 {
        self.offsets[2 * link_index]
    }

    /// The 2x2 coefficient block of one link as rows [(p1,q1),(p2,q2)].
    pub fn block(&self, link_index: usize) -> [[f64; 2]; 2] {
        let i = 2 * link_index;
        [
            [self.coefficients.get(i, i), self.coefficients.get(i, i + 1)],
            [self.coefficients.get(i + 1, i), self.coefficients.get(i + 1, i + 1)],
        ]
    }

    /// Per-entry delays A z + b.
    pub fn evaluate(&self, z: &FlowVector) -> Result<Vec<f64>, CostError> {
        if z.len() != self.dim() {
            return Err(CostError::DimensionMismatch { expected: self.dim(), got: z.len() });
        }
        let mut c = self.coefficients.matvec(z.as_slice());
        for (ci, bi) in c.iter_mut().zip(&self.offsets) {
            *ci += bi;
        }
        Ok(c)
    }

    /// Total delay <c(z), z>.
    pub fn social_cost(&self, z: &FlowVector) -> Result<f64, CostError> {
        let c = self.evaluate(z)?;
        Ok(c.iter().zip(z.as_slice()).map(|(a, b)| a * b).sum())
    }

    /// Structural classification; zero tests are exact because matrices are
    /// authored, not computed.
    pub fn classify(&self) -> SeparabilityClass {
        let dim = self.dim();
        let mut diagonal = true;
        let mut block_diagonal = true;
        for i in 0..dim {
            for j in 0..dim {
                if i == j {
                    continue;
                }
                let v = self.coefficients.get(i, j);
                if v != 0.0 {
                    diagonal = false;
                    if i / 2 != j / 2 {
                        block_diagonal = false;
                    }
                }
            }
        }
        if diagonal {
            SeparabilityClass::Separable
        } else if block_diagonal {
            SeparabilityClass::PairwiseSeparable
        } else {
            SeparabilityClass::Nonseparable
        }
    }

    /// Maximum degree of asymmetry max_i max(k_i, 1/k_i) over the link
    /// blocks. All-zero blocks (constant-cost links) carry no asymmetry and
    /// are skipped; a row mixing zero and positive coefficients leaves the
    /// ratio undefined.
    pub fn degree_of_asymmetry(&self) -> Result<f64, CostError> {
        match self.classify() {
            SeparabilityClass::Nonseparable => return Err(CostError::NotPairwiseSeparable),
            SeparabilityClass::Separable | SeparabilityClass::PairwiseSeparable => {}
        }
        let mut k_max: Option<f64> = None;
        for link in 0..self.link_count() {
            let block = self.block(link);
            for row in block {
                let (p, q) = (row[0], row[1]);
                if p == 0.0 && q == 0.0 {
                    continue;
                }
                if p <= 0.0 || q <= 0.0 {
                    return Err(CostError::DegenerateBlock { link: link + 1 });
                }
                let ratio = (p / q).max(q / p);
                k_max = Some(k_max.map_or(ratio, |m: f64| m.max(ratio)));
            }
        }
        k_max.ok_or(CostError::DegenerateBlock { link: 1 })
    }

    /// True iff every coefficient entry is nonnegative: adding flow of either
    /// class never decreases any delay.
    pub fn is_elementwise_monotone(&self) -> bool {
        self.coefficients.data().iter().all(|&v| v >= 0.0)
    }

    /// True iff <c(u) - c(v), u - v> >= 0 for all u, v, i.e. the symmetric
    /// part of A is positive semidefinite (within `tol` on the minimum
    /// eigenvalue).
    pub fn is_monotone_operator(&self, tol: f64) -> bool {
        let s = self.coefficients.symmetric_part();
        let eig = jacobi_eigen(&s).expect("symmetric part eigendecomposition");
        eig.min_value() >= -tol
    }

    /// A nonnegative pair (u, v) violating monotonicity, when one exists:
    /// built from the most-negative eigenvector of the symmetric part,
    /// shifted into the nonnegative orthant. Uses the same 1e-9 eigenvalue
    /// tolerance as `is_monotone_operator`, so a monotone operator never
    /// yields a spurious witness.
    pub fn monotonicity_witness(&self) -> Option<MonotonicityWitness> {
        let s = self.coefficients.symmetric_part();
        let eig = jacobi_eigen(&s).expect("symmetric part eigendecomposition");
        if eig.min_value() >= -1e-9 {
            return None;
        }
        let w = eig.vector(0);
        let shift = w.iter().fold(0.0_f64, |s, &x| s.max(-x));
        let u: Vec<f64> = w.iter().map(|&x| x + shift).collect();
        let v = vec![shift; w.len()];
        let d: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        let ad = self.coefficients.matvec(&d);
        let inner_product: f64 = ad.iter().zip(&d).map(|(a, b)| a * b).sum();
        if inner_product >= 0.0 {
            return None;
        }
        Some(MonotonicityWitness { u, v, inner_product })
    }
}

/// A pair of nonnegative flow vectors with <c(u)-c(v), u-v> < 0.
#[derive(Debug, Clone)]
pub struct MonotonicityWitness {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub inner_product: f64,
}
