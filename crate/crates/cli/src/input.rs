//! The JSON instance format: network topology, per-link or matrix costs, and
//! an optional authored Q + P split for nonseparable analyses.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use roadgame_core::cost::{CostMatrix, LinkCostParams, Orientation};
use roadgame_core::fixtures::Fixture;
use roadgame_core::linalg::Matrix;
use roadgame_core::network::{Network, OdPair};

#[derive(Debug, Error)]
pub enum InputError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// informative only; the node set is derived from links and OD pairs
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<i64>>,
    pub links: Vec<LinkSpec>,
    pub od_pairs: Vec<OdSpec>,
    /// full coefficient matrix; overrides per-link costs when present
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_cost: Option<MatrixCost>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<usize>,
    pub tail: i64,
    pub head: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum CostSpec {
    /// c = b + k*a*x + a*y (regular-heavy) or b + a*x + k*a*y (smart-heavy)
    Affine {
        b: f64,
        a: f64,
        k: f64,
        orientation: OrientationSpec,
    },
    /// capacity-model parameters: reciprocal time gaps m (regular) and M
    /// (smart), congestion scale r, free-flow time b
    Capacity {
        m: f64,
        #[serde(rename = "M")]
        m_smart: f64,
        r: f64,
        b: f64,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrientationSpec {
    RegularHeavy,
    SmartHeavy,
}

impl From<OrientationSpec> for Orientation {
    fn from(o: OrientationSpec) -> Self {
        match o {
            OrientationSpec::RegularHeavy => Orientation::RegularHeavy,
            OrientationSpec::SmartHeavy => Orientation::SmartHeavy,
        }
    }
}

impl From<Orientation> for OrientationSpec {
    fn from(o: Orientation) -> Self {
        match o {
            Orientation::RegularHeavy => OrientationSpec::RegularHeavy,
            Orientation::SmartHeavy => OrientationSpec::SmartHeavy,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdSpec {
    pub origin: i64,
    pub destination: i64,
    pub regular: f64,
    pub smart: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixCost {
    /// row-major 2n x 2n coefficients
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    /// offsets: either one entry per link or the full 2n vector with equal
    /// entries per link pair
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    #[serde(rename = "Q")]
    pub q: Vec<f64>,
    #[serde(rename = "P")]
    pub p: Vec<f64>,
}

/// A loaded, validated instance ready for analysis.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub network: Network,
    pub cost: CostMatrix,
    pub split: Option<(Matrix, Matrix)>,
}

pub fn parse_instance(text: &str) -> Result<Instance, InputError> {
    let file: InstanceFile =
        serde_json::from_str(text).map_err(|e| InputError::Parse(e.to_string()))?;
    instance_from_file(&file)
}

pub fn instance_from_file(file: &InstanceFile) -> Result<Instance, InputError> {
    if file.links.is_empty() {
        return Err(InputError::Validation("instance has no links".into()));
    }
    for (i, link) in file.links.iter().enumerate() {
        if let Some(id) = link.id {
            if id != i + 1 {
                return Err(InputError::Validation(format!(
                    "link ids must be 1..n in order: position {} has id {}",
                    i + 1,
                    id
                )));
            }
        }
    }
    let link_pairs: Vec<(i64, i64)> = file.links.iter().map(|l| (l.tail, l.head)).collect();
    let od_pairs: Vec<OdPair> = file
        .od_pairs
        .iter()
        .map(|od| OdPair {
            origin: od.origin,
            destination: od.destination,
            demand_regular: od.regular,
            demand_smart: od.smart,
        })
        .collect();
    let network = Network::new(&link_pairs, od_pairs)
        .map_err(|e| InputError::Validation(e.to_string()))?;
    let n = network.link_count();

    let cost = if let Some(mc) = &file.matrix_cost {
        let dim = 2 * n;
        if mc.a.len() != dim * dim {
            return Err(InputError::Validation(format!(
                "matrix_cost.A must have {} entries (row-major {dim}x{dim}), got {}",
                dim * dim,
                mc.a.len()
            )));
        }
        let a = Matrix::from_flat(dim, dim, mc.a.clone());
        if a.data().iter().any(|&v| v < 0.0) {
            return Err(InputError::Validation(
                "matrix_cost.A entries must be nonnegative (elementwise monotone)".into(),
            ));
        }
        let cm = if mc.b.len() == n {
            CostMatrix::from_link_offsets(a, &mc.b)
        } else if mc.b.len() == dim {
            CostMatrix::new(a, mc.b.clone())
        } else {
            return Err(InputError::Validation(format!(
                "matrix_cost.b must have {n} (per link) or {dim} entries, got {}",
                mc.b.len()
            )));
        };
        cm.map_err(|e| InputError::Validation(e.to_string()))?
    } else {
        let mut links = Vec::with_capacity(n);
        for (i, spec) in file.links.iter().enumerate() {
            let Some(cost_spec) = &spec.cost else {
                return Err(InputError::Validation(format!(
                    "link {} has no cost and no matrix_cost is given",
                    i + 1
                )));
            };
            let params = match cost_spec {
                CostSpec::Affine { b, a, k, orientation } => {
                    LinkCostParams::new(*b, *a, *k, (*orientation).into())
                }
                CostSpec::Capacity { m, m_smart, r, b } => {
                    roadgame_core::cost::CapacityParams::new(*m, *m_smart, *r, *b)
                        .and_then(|cp| LinkCostParams::from_capacity(&cp))
                }
            }
            .map_err(|e| {
                InputError::Validation(format!("link {} cost invalid: {e}", i + 1))
            })?;
            links.push(params);
        }
        CostMatrix::assemble(&links).map_err(|e| InputError::Validation(e.to_string()))?
    };

    if cost.offsets().iter().any(|&b| b < 0.0) {
        return Err(InputError::Validation(
            "free-flow times must be nonnegative".into(),
        ));
    }

    let split = match &file.split {
        None => None,
        Some(s) => {
            let dim = 2 * n;
            for (data, name) in [(&s.q, "Q"), (&s.p, "P")] {
                if data.len() != dim * dim {
                    return Err(InputError::Validation(format!(
                        "split.{name} must have {} entries, got {}",
                        dim * dim,
                        data.len()
                    )));
                }
            }
            Some((
                Matrix::from_flat(dim, dim, s.q.clone()),
                Matrix::from_flat(dim, dim, s.p.clone()),
            ))
        }
    };

    Ok(Instance {
        name: file.name.clone().unwrap_or_else(|| "instance".into()),
        network,
        cost,
        split,
    })
}

/// Serializes a built-in fixture into the instance file format.
pub fn fixture_to_file(fixture: &Fixture) -> InstanceFile {
    let net = &fixture.network;
    let n = net.link_count();
    let pairwise_rows: Option<Vec<LinkCostParams>> = extract_link_params(&fixture.cost);

    let links: Vec<LinkSpec> = net
        .links()
        .iter()
        .enumerate()
        .map(|(i, l)| LinkSpec {
            id: Some(l.id),
            tail: l.tail,
            head: l.head,
            cost: pairwise_rows.as_ref().map(|rows| {
                let p = rows[i];
                CostSpec::Affine {
                    b: p.free_flow_time,
                    a: p.coefficient,
                    k: p.asymmetry,
                    orientation: p.orientation.into(),
                }
            }),
        })
        .collect();

    let matrix_cost = if pairwise_rows.is_some() {
        None
    } else {
        Some(MatrixCost {
            a: fixture.cost.coefficients().data().to_vec(),
            b: (0..n).map(|i| fixture.cost.offset_of_link(i)).collect(),
        })
    };

    InstanceFile {
        name: Some(match fixture.parameter {
            Some((pname, pval)) => format!("{} ({pname}={pval})", fixture.name),
            None => fixture.name.clone(),
        }),
        nodes: Some(net.nodes().to_vec()),
        links,
        od_pairs: net
            .od_pairs()
            .iter()
            .map(|od| OdSpec {
                origin: od.origin,
                destination: od.destination,
                regular: od.demand_regular,
                smart: od.demand_smart,
            })
            .collect(),
        matrix_cost,
        split: fixture.split.as_ref().map(|(q, p)| SplitSpec {
            q: q.data().to_vec(),
            p: p.data().to_vec(),
        }),
    }
}

/// Per-link coefficients when every block has the shared-delay form with
/// strictly positive entries; otherwise the matrix form is required.
fn extract_link_params(cost: &CostMatrix) -> Option<Vec<LinkCostParams>> {
    use roadgame_core::cost::SeparabilityClass;
    if cost.classify() == SeparabilityClass::Nonseparable {
        return None;
    }
    let mut out = Vec::with_capacity(cost.link_count());
    for link in 0..cost.link_count() {
        let block = cost.block(link);
        if block[0] != block[1] {
            return None;
        }
        let (p, q) = (block[0][0], block[0][1]);
        if p <= 0.0 || q <= 0.0 {
            return None;
        }
        let (orientation, a, k) = if p >= q {
            (Orientation::RegularHeavy, q, p / q)
        } else {
            (Orientation::SmartHeavy, p, q / p)
        };
        out.push(LinkCostParams::new(cost.offset_of_link(link), a, k, orientation).ok()?);
    }
    Some(out)
}
