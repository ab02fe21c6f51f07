//! Built-in instances used by the verification suite, the sweep command, and
//! the examples in the docs: the two-road unbounded-ratio network, the
//! two-sided and one-sided asymmetry networks, the 2x2 nonmonotone matrix,
//! and a coupled two-road nonseparable instance with an authored split.

use thiserror::Error;

use crate::bounds::default_split;
use crate::cost::{CostMatrix, LinkCostParams, Orientation};
use crate::linalg::Matrix;
use crate::network::Network;

#[derive(Debug, Error, PartialEq)]
pub enum FixtureError {
    #[error("unknown fixture '{0}'")]
    UnknownFixture(String),
    #[error("invalid parameter for fixture '{name}': {reason}")]
    InvalidParameter { name: String, reason: String },
}

/// Closed-form values the instance is expected to reproduce, where known.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpectedValues {
    pub equilibrium_cost: Option<f64>,
    pub optimum_cost: Option<f64>,
    pub poa: Option<f64>,
    pub bicriteria: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    /// parameter name driving the family (zeta, k or mu), if any
    pub parameter: Option<(&'static str, f64)>,
    pub network: Network,
    pub cost: CostMatrix,
    pub split: Option<(Matrix, Matrix)>,
    pub expected: ExpectedValues,
}

pub const FIXTURE_NAMES: [&str; 5] = [
    "example1",
    "example2",
    "example3",
    "pigou-footnote",
    "mu-coupled",
];

/// Two parallel roads, c1 = 1 and c2 = zeta * x: the ratio of equilibrium to
/// optimal cost grows linearly in zeta.
pub fn example1(zeta: f64) -> Result<Fixture, FixtureError> {
    if !(zeta >= 1.0) {
        return Err(FixtureError::InvalidParameter {
            name: "example1".into(),
            reason: format!("zeta must be >= 1, got {zeta}"),
        });
    }
    let network = Network::parallel(2, 1.0 / (2.0 * zeta), 0.5).expect("valid demands");
    let a = Matrix::from_rows(&[
        vec![0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, zeta, 0.0],
        vec![0.0, 0.0, zeta, 0.0],
    ]);
    let cost = CostMatrix::from_link_offsets(a, &[1.0, 0.0]).expect("valid matrix");
    Ok(Fixture {
        name: "example1".into(),
        parameter: Some(("zeta", zeta)),
        network,
        cost,
        split: None,
        expected: ExpectedValues {
            equilibrium_cost: Some(0.25 / zeta + 0.25),
            optimum_cost: Some(0.5 / zeta),
            poa: Some((zeta + 1.0) / 2.0),
            bicriteria: Some((zeta + 1.0) / 2.0),
        },
    })
}

/// Two-sided asymmetry: c1 = kx + y, c2 = x + ky, unit demands per class.
pub fn example2(k: f64) -> Result<Fixture, FixtureError> {
    if !(k >= 1.0) {
        return Err(FixtureError::InvalidParameter {
            name: "example2".into(),
            reason: format!("k must be >= 1, got {k}"),
        });
    }
    let network = Network::parallel(2, 1.0, 1.0).expect("valid demands");
    let cost = CostMatrix::assemble(&[
        LinkCostParams::new(0.0, 1.0, k, Orientation::RegularHeavy).expect("valid"),
        LinkCostParams::new(0.0, 1.0, k, Orientation::SmartHeavy).expect("valid"),
    ])
    .expect("valid matrix");
    Ok(Fixture {
        name: "example2".into(),
        parameter: Some(("k", k)),
        network,
        cost,
        split: None,
        expected: ExpectedValues {
            equilibrium_cost: Some(2.0 * k),
            optimum_cost: Some(2.0),
            poa: Some(k),
            bicriteria: Some(k.sqrt()),
        },
    })
}

/// One-sided asymmetry: c1 = 1, c2 = sqrt(k) x + y/sqrt(k), demands
/// ((2 sqrt(k) - 1)/(2k), 1/2).
pub fn example3(k: f64) -> Result<Fixture, FixtureError> {
    if !(k >= 1.0) {
        return Err(FixtureError::InvalidParameter {
            name: "example3".into(),
            reason: format!("k must be >= 1, got {k}"),
        });
    }
    let sq = k.sqrt();
    let network =
        Network::parallel(2, (2.0 * sq - 1.0) / (2.0 * k), 0.5).expect("valid demands");
    let a = Matrix::from_rows(&[
        vec![0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, sq, 1.0 / sq],
        vec![0.0, 0.0, sq, 1.0 / sq],
    ]);
    let cost = CostMatrix::from_link_offsets(a, &[1.0, 0.0]).expect("valid matrix");
    Ok(Fixture {
        name: "example3".into(),
        parameter: Some(("k", k)),
        network,
        cost,
        split: None,
        expected: ExpectedValues {
            equilibrium_cost: Some((k + 2.0 * sq - 1.0) / (2.0 * k)),
            optimum_cost: Some((5.0 * sq - 2.0) / (4.0 * k)),
            poa: Some((2.0 * k + 4.0 * sq - 2.0) / (5.0 * sq - 2.0)),
            bicriteria: Some(
                ((2.0 * (k - 3.0) * sq + 1.0) / k + 8.0).sqrt() + 1.0 / sq - 2.0,
            ),
        },
    })
}

/// Single road with the 2x2 coefficient matrix `[[3,1],[3,1]]`: elementwise
/// monotone but not a monotone operator.
pub fn pigou_footnote() -> Fixture {
    let network = Network::parallel(1, 1.0, 1.0).expect("valid demands");
    let cost = CostMatrix::from_link_offsets(
        Matrix::from_rows(&[vec![3.0, 1.0], vec![3.0, 1.0]]),
        &[0.0],
    )
    .expect("valid matrix");
    Fixture {
        name: "pigou-footnote".into(),
        parameter: None,
        network,
        cost,
        split: None,
        expected: ExpectedValues::default(),
    }
}

/// Two parallel roads where congestion on road 2 spills onto road 1 with
/// weight mu; ships with the default authored split Q + P.
pub fn mu_coupled(mu: f64) -> Result<Fixture, FixtureError> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(FixtureError::InvalidParameter {
            name: "mu-coupled".into(),
            reason: format!("mu must be >= 0, got {mu}"),
        });
    }
    let network = Network::parallel(2, 1.0, 1.0).expect("valid demands");
    let a = Matrix::from_rows(&[
        vec![1.0, 1.0, mu, mu],
        vec![1.0, 1.0, mu, mu],
        vec![0.0, 0.0, 1.0, 1.0],
        vec![0.0, 0.0, 1.0, 1.0],
    ]);
    let cost = CostMatrix::from_link_offsets(a.clone(), &[0.5, 0.5]).expect("valid matrix");
    let split = default_split(&a, 0.25).ok();
    Ok(Fixture {
        name: "mu-coupled".into(),
        parameter: Some(("mu", mu)),
        network,
        cost,
        split,
        expected: ExpectedValues::default(),
    })
}

/// Looks a fixture up by name; `param` overrides the family default
/// (zeta = 2 for example1, k = 2 for example2, k = 4 for example3,
/// mu = 0.25 for mu-coupled).
pub fn by_name(name: &str, param: Option<f64>) -> Result<Fixture, FixtureError> {
    match name {
        "example1" => example1(param.unwrap_or(2.0)),
        "example2" => example2(param.unwrap_or(2.0)),
        "example3" => example3(param.unwrap_or(4.0)),
        "pigou-footnote" => {
            if param.is_some() {
                return Err(FixtureError::InvalidParameter {
                    name: name.into(),
                    reason: "fixture takes no parameter".into(),
                });
            }
            Ok(pigou_footnote())
        }
        "mu-coupled" => mu_coupled(param.unwrap_or(0.25)),
        other => Err(FixtureError::UnknownFixture(other.into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::SeparabilityClass;

    #[test]
    fn example1_instances() {
        let f = example1(2.0).unwrap();
        assert_eq!(f.network.od_pairs()[0].demand_regular, 0.25);
        assert_eq!(f.network.od_pairs()[0].demand_smart, 0.5);
        let delays = f
            .cost
            .evaluate(&crate::network::FlowVector(vec![0.0, 0.0, 1.0, 0.0]))
            .unwrap();
        assert_eq!(delays, vec![1.0, 1.0, 2.0, 2.0]);
        assert!(example1(0.5).is_err());
    }

    #[test]
    fn example2_blocks() {
        let f = example2(3.0).unwrap();
        assert_eq!(f.cost.block(0), [[3.0, 1.0], [3.0, 1.0]]);
        assert_eq!(f.cost.block(1), [[1.0, 3.0], [1.0, 3.0]]);
        assert_eq!(f.expected.equilibrium_cost, Some(6.0));
    }

    #[test]
    fn example3_demands_and_coefficients() {
        let f = example3(4.0).unwrap();
        assert_eq!(f.network.od_pairs()[0].demand_regular, 0.375);
        assert_eq!(f.network.od_pairs()[0].demand_smart, 0.5);
        assert_eq!(f.cost.block(1), [[2.0, 0.5], [2.0, 0.5]]);
    }

    #[test]
    fn mu_coupled_is_nonseparable_with_valid_split() {
        let f = mu_coupled(0.25).unwrap();
        assert_eq!(f.cost.classify(), SeparabilityClass::Nonseparable);
        let (q, p) = f.split.expect("split present");
        let split = crate::bounds::validate_split(f.cost.coefficients(), &q, &p).unwrap();
        assert!(split.k_q < 4.0);
    }

    #[test]
    fn lookup_by_name() {
        assert!(by_name("example2", Some(1.5)).is_ok());
        assert!(matches!(
            by_name("nope", None),
            Err(FixtureError::UnknownFixture(_))
        ));
        assert!(by_name("pigou-footnote", Some(1.0)).is_err());
    }
}
