//! Routed-game structure: directed graph, two-class origin-destination
//! demands, simple-path enumeration, and the feasible-flow polytope.

use thiserror::Error;

use crate::linalg::{nnls, Matrix};

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("invalid network: {0}")]
    Invalid(String),
    #[error("no path exists for OD pair {od_index}")]
    NoPathExists { od_index: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Vehicle class: regular (human-driven) or smart (autonomy-equipped).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VehicleClass {
    Regular,
    Smart,
}

impl VehicleClass {
    pub const BOTH: [VehicleClass; 2] = [VehicleClass::Regular, VehicleClass::Smart];

    /// Offset of this class inside a link's interleaved flow pair.
    pub fn offset(self) -> usize {
        match self {
            VehicleClass::Regular => 0,
            VehicleClass::Smart => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            VehicleClass::Regular => "regular",
            VehicleClass::Smart => "smart",
        }
    }
}

/// A directed road link. Ids are 1-based and contiguous in declaration order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub id: usize,
    pub tail: i64,
    pub head: i64,
}

/// An origin-destination pair with one demand mass per vehicle class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdPair {
    pub origin: i64,
    pub destination: i64,
    pub demand_regular: f64,
    pub demand_smart: f64,
}

impl OdPair {
    pub fn demand(&self, class: VehicleClass) -> f64 {
        match class {
            VehicleClass::Regular => self.demand_regular,
            VehicleClass::Smart => self.demand_smart,
        }
    }
}

/// A simple directed path, stored as the ordered list of 1-based link ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub od_index: usize,
    pub links: Vec<usize>,
}

/// Interleaved per-link flows: entry 2i is regular mass on link i+1, entry
/// 2i+1 is smart mass on link i+1.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowVector(pub Vec<f64>);

impl FlowVector {
    pub fn zeros(link_count: usize) -> Self {
        FlowVector(vec![0.0; 2 * link_count])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn regular(&self, link_index: usize) -> f64 {
        self.0[2 * link_index]
    }

    pub fn smart(&self, link_index: usize) -> f64 {
        self.0[2 * link_index + 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// One path-flow entry: a mass of one class routed along one path.
#[derive(Debug, Clone)]
pub struct PathFlow {
    pub od_index: usize,
    pub class: VehicleClass,
    pub path: Path,
    pub mass: f64,
}

/// A full path-flow assignment; the canonical strategy representation.
#[derive(Debug, Clone, Default)]
pub struct PathFlowAssignment {
    pub flows: Vec<PathFlow>,
}

impl PathFlowAssignment {
    pub fn push(&mut self, od_index: usize, class: VehicleClass, path: Path, mass: f64) {
        self.flows.push(PathFlow { od_index, class, path, mass });
    }
}

/// Result of enumerating the simple paths of one OD pair.
#[derive(Debug, Clone)]
pub struct PathSet {
    pub paths: Vec<Path>,
    /// True when enumeration stopped at the `max_paths` budget.
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct Network {
    nodes: Vec<i64>,
    links: Vec<Link>,
    od_pairs: Vec<OdPair>,
    /// outgoing links per node, sorted by link id
    adjacency: Vec<Vec<usize>>,
}

impl Network {
    /// Builds a network from `(tail, head)` link declarations; link ids are
    /// assigned 1..n in declaration order.
    pub fn new(links: &[(i64, i64)], od_pairs: Vec<OdPair>) -> Result<Self, NetworkError> {
        if links.is_empty() {
            return Err(NetworkError::Invalid("network has no links".into()));
        }
        if od_pairs.is_empty() {
            return Err(NetworkError::Invalid("network has no OD pairs".into()));
        }
        let mut nodes: Vec<i64> = Vec::new();
        let mut link_vec = Vec::with_capacity(links.len());
        for (i, &(tail, head)) in links.iter().enumerate() {
            if tail == head {
                return Err(NetworkError::Invalid(format!(
                    "link {} is a self-loop at node {}",
                    i + 1,
                    tail
                )));
            }
            nodes.push(tail);
            nodes.push(head);
            link_vec.push(Link { id: i + 1, tail, head });
        }
        for (j, od) in od_pairs.iter().enumerate() {
            if od.origin == od.destination {
                return Err(NetworkError::Invalid(format!(
                    "OD pair {j} has origin == destination"
                )));
            }
            if od.demand_regular < 0.0 || od.demand_smart < 0.0 {
                return Err(NetworkError::Invalid(format!(
                    "OD pair {j} has a negative demand"
                )));
            }
            if !(od.demand_regular > 0.0 || od.demand_smart > 0.0) {
                return Err(NetworkError::Invalid(format!(
                    "OD pair {j} has no positive demand"
                )));
            }
            nodes.push(od.origin);
            nodes.push(od.destination);
        }
        nodes.sort_unstable();
        nodes.dedup();

        let mut adjacency = vec![Vec::new(); nodes.len()];
        for link in &link_vec {
            let tail_idx = nodes.binary_search(&link.tail).unwrap();
            adjacency[tail_idx].push(link.id - 1);
        }
        for out in &mut adjacency {
            out.sort_unstable();
        }

        let net = Network { nodes, links: link_vec, od_pairs, adjacency };
        // every OD pair must be connected so the feasible polytope is nonempty
        for j in 0..net.od_pairs.len() {
            let set = net.enumerate_paths(j, 1)?;
            debug_assert!(!set.paths.is_empty());
        }
        Ok(net)
    }

    /// Two nodes, `link_count` parallel links, a single OD pair.
    pub fn parallel(
        link_count: usize,
        demand_regular: f64,
        demand_smart: f64,
    ) -> Result<Self, NetworkError> {
        if link_count == 0 {
            return Err(NetworkError::Invalid("parallel network needs >= 1 link".into()));
        }
        let links: Vec<(i64, i64)> = (0..link_count).map(|_| (0, 1)).collect();
        Network::new(
            &links,
            vec![OdPair {
                origin: 0,
                destination: 1,
                demand_regular,
                demand_smart,
            }],
        )
    }

    /// The same topology with every class demand multiplied by `factor`.
    pub fn with_scaled_demands(&self, factor: f64) -> Result<Self, NetworkError> {
        if !(factor > 0.0) {
            return Err(NetworkError::Invalid(
                "demand scale factor must be positive".into(),
            ));
        }
        let links: Vec<(i64, i64)> = self.links.iter().map(|l| (l.tail, l.head)).collect();
        let od_pairs = self
            .od_pairs
            .iter()
            .map(|od| OdPair {
                origin: od.origin,
                destination: od.destination,
                demand_regular: od.demand_regular * factor,
                demand_smart: od.demand_smart * factor,
            })
            .collect();
        Network::new(&links, od_pairs)
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn od_pairs(&self) -> &[OdPair] {
        &self.od_pairs
    }

    pub fn nodes(&self) -> &[i64] {
        &self.nodes
    }

    fn node_index(&self, node: i64) -> Option<usize> {
        self.nodes.binary_search(&node).ok()
    }

    /// All simple directed paths of an OD pair in lexicographic-by-link-id
    /// order, truncated at `max_paths`.
    pub fn enumerate_paths(
        &self,
        od_index: usize,
        max_paths: usize,
    ) -> Result<PathSet, NetworkError> {
        assert!(max_paths >= 1, "max_paths must be >= 1");
        let od = &self.od_pairs[od_index];
        let origin = self
            .node_index(od.origin)
            .ok_or_else(|| NetworkError::Invalid(format!("unknown node {}", od.origin)))?;
        let dest = self
            .node_index(od.destination)
            .ok_or_else(|| NetworkError::Invalid(format!("unknown node {}", od.destination)))?;

        let mut paths = Vec::new();
        let mut truncated = false;
        let mut stack: Vec<usize> = Vec::new();
        let mut visited = vec![false; self.nodes.len()];
        visited[origin] = true;
        self.dfs(origin, dest, od_index, max_paths, &mut stack, &mut visited, &mut paths, &mut truncated);
        if paths.is_empty() {
            return Err(NetworkError::NoPathExists { od_index });
        }
        Ok(PathSet { paths, truncated })
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        &self,
        node: usize,
        dest: usize,
        od_index: usize,
        max_paths: usize,
        stack: &mut Vec<usize>,
        visited: &mut Vec<bool>,
        paths: &mut Vec<Path>,
        truncated: &mut bool,
    ) {
        if node == dest {
            if paths.len() < max_paths {
                paths.push(Path {
                    od_index,
                    links: stack.iter().map(|&li| li + 1).collect(),
                });
            } else {
                *truncated = true;
            }
            return;
        }
        for &link_idx in &self.adjacency[node] {
            if *truncated {
                return;
            }
            let head = self.node_index(self.links[link_idx].head).unwrap();
            if visited[head] {
                continue;
            }
            visited[head] = true;
            stack.push(link_idx);
            self.dfs(head, dest, od_index, max_paths, stack, visited, paths, truncated);
            stack.pop();
            visited[head] = false;
        }
    }

    /// Accumulates a path-flow assignment into per-link class flows.
    pub fn to_link_flows(&self, assignment: &PathFlowAssignment) -> FlowVector {
        let mut z = FlowVector::zeros(self.link_count());
        for pf in &assignment.flows {
            for &link_id in &pf.path.links {
                z.0[2 * (link_id - 1) + pf.class.offset()] += pf.mass;
            }
        }
        z
    }

    /// Checks whether `z` is induced by some feasible path-flow assignment.
    pub fn is_feasible(&self, z: &FlowVector, tol: f64) -> Result<FeasibilityReport, NetworkError> {
        if z.len() != 2 * self.link_count() {
            return Err(NetworkError::DimensionMismatch {
                expected: 2 * self.link_count(),
                got: z.len(),
            });
        }
        let mut violations = Vec::new();
        for (i, &v) in z.0.iter().enumerate() {
            if v < -tol {
                violations.push(Violation::NegativeEntry { index: i, value: v });
            }
        }
        for class in VehicleClass::BOTH {
            for &node in self.nodes.iter() {
                let mut balance = 0.0;
                for link in &self.links {
                    let f = z.0[2 * (link.id - 1) + class.offset()];
                    if link.head == node {
                        balance += f;
                    }
                    if link.tail == node {
                        balance -= f;
                    }
                }
                let mut expected = 0.0;
                for od in &self.od_pairs {
                    if od.destination == node {
                        expected += od.demand(class);
                    }
                    if od.origin == node {
                        expected -= od.demand(class);
                    }
                }
                if (balance - expected).abs() > tol * 10.0 {
                    violations.push(Violation::NodeImbalance {
                        class,
                        node,
                        imbalance: balance - expected,
                    });
                }
            }
        }

        // authoritative test: nonnegative path decomposition per class
        for class in VehicleClass::BOTH {
            let residual = self.decomposition_residual(z, class)?;
            if residual > tol.max(1e-12) * 100.0 {
                violations.push(Violation::DecompositionResidual { class, residual });
            }
        }

        Ok(FeasibilityReport { feasible: violations.is_empty(), violations })
    }

    /// Residual of the best nonnegative path decomposition for one class:
    /// rows are per-link flows plus per-OD demand totals.
    fn decomposition_residual(
        &self,
        z: &FlowVector,
        class: VehicleClass,
    ) -> Result<f64, NetworkError> {
        let mut all_paths: Vec<Path> = Vec::new();
        for od_index in 0..self.od_pairs.len() {
            let set = self.enumerate_paths(od_index, 10_000)?;
            all_paths.extend(set.paths);
        }
        let n = self.link_count();
        let m = self.od_pairs.len();
        let mut a = Matrix::zeros(n + m, all_paths.len());
        for (col, path) in all_paths.iter().enumerate() {
            for &link_id in &path.links {
                a.set(link_id - 1, col, 1.0);
            }
            a.set(n + path.od_index, col, 1.0);
        }
        let mut rhs = vec![0.0; n + m];
        for i in 0..n {
            rhs[i] = z.0[2 * i + class.offset()].max(0.0);
        }
        for (j, od) in self.od_pairs.iter().enumerate() {
            rhs[n + j] = od.demand(class);
        }
        let (_x, residual) = nnls(&a, &rhs, 1e-13);
        Ok(residual)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NegativeEntry { index: usize, value: f64 },
    NodeImbalance { class: VehicleClass, node: i64, imbalance: f64 },
    DecompositionResidual { class: VehicleClass, residual: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NegativeEntry { index, value } => {
                write!(f, "flow entry {index} is negative ({value:.3e})")
            }
            Violation::NodeImbalance { class, node, imbalance } => write!(
                f,
                "{} flow imbalance at node {node}: {imbalance:.3e}",
                class.label()
            ),
            Violation::DecompositionResidual { class, residual } => write!(
                f,
                "{} flows admit no nonnegative path decomposition (residual {residual:.3e})",
                class.label()
            ),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond() -> Network {
        // s=0, a=1, b=2, t=3: s->a, a->t, s->b, b->t, s->t
        Network::new(
            &[(0, 1), (1, 3), (0, 2), (2, 3), (0, 3)],
            vec![OdPair { origin: 0, destination: 3, demand_regular: 1.0, demand_smart: 1.0 }],
        )
        .unwrap()
    }

    #[test]
    fn parallel_two_links_two_paths() {
        let net = Network::parallel(2, 1.0, 1.0).unwrap();
        let set = net.enumerate_paths(0, 100).unwrap();
        assert_eq!(set.paths.len(), 2);
        assert!(!set.truncated);
        assert_eq!(set.paths[0].links, vec![1]);
        assert_eq!(set.paths[1].links, vec![2]);
    }

    #[test]
    fn single_link_single_path() {
        let net = Network::parallel(1, 1.0, 0.0).unwrap();
        let set = net.enumerate_paths(0, 100).unwrap();
        assert_eq!(set.paths.len(), 1);
    }

    #[test]
    fn diamond_has_three_paths() {
        // exhaustive check on the 4-node graph: {s->a->t, s->b->t, s->t}
        let net = diamond();
        let set = net.enumerate_paths(0, 100).unwrap();
        let got: Vec<Vec<usize>> = set.paths.iter().map(|p| p.links.clone()).collect();
        assert_eq!(got, vec![vec![1, 2], vec![3, 4], vec![5]]);
    }

    #[test]
    fn truncation_sets_flag() {
        let net = diamond();
        let set = net.enumerate_paths(0, 2).unwrap();
        assert_eq!(set.paths.len(), 2);
        assert!(set.truncated);
    }

    #[test]
    fn enumeration_is_deterministic() {
        let net = diamond();
        let a = net.enumerate_paths(0, 100).unwrap();
        let b = net.enumerate_paths(0, 100).unwrap();
        assert_eq!(a.paths, b.paths);
    }

    #[test]
    fn disconnected_od_is_an_error() {
        let err = Network::new(
            &[(0, 1)],
            vec![OdPair { origin: 1, destination: 0, demand_regular: 1.0, demand_smart: 0.0 }],
        )
        .unwrap_err();
        assert_eq!(err, NetworkError::NoPathExists { od_index: 0 });
    }

    #[test]
    fn self_loop_rejected() {
        let err = Network::new(
            &[(0, 0)],
            vec![OdPair { origin: 0, destination: 1, demand_regular: 1.0, demand_smart: 0.0 }],
        )
        .unwrap_err();
        assert!(matches!(err, NetworkError::Invalid(_)));
    }

    #[test]
    fn link_flows_from_single_path() {
        let net = Network::parallel(2, 1.0, 1.0).unwrap();
        let set = net.enumerate_paths(0, 10).unwrap();
        let mut asg = PathFlowAssignment::default();
        asg.push(0, VehicleClass::Regular, set.paths[0].clone(), 1.0);
        asg.push(0, VehicleClass::Smart, set.paths[0].clone(), 1.0);
        let z = net.to_link_flows(&asg);
        assert_eq!(z.0, vec![1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn link_flows_half_split() {
        let net = Network::parallel(2, 1.0, 1.0).unwrap();
        let set = net.enumerate_paths(0, 10).unwrap();
        let mut asg = PathFlowAssignment::default();
        for p in &set.paths {
            asg.push(0, VehicleClass::Regular, p.clone(), 0.5);
            asg.push(0, VehicleClass::Smart, p.clone(), 0.5);
        }
        let z = net.to_link_flows(&asg);
        assert_eq!(z.0, vec![0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn feasibility_parallel_cases() {
        let net = Network::parallel(2, 1.0, 1.0).unwrap();
        let ok = net.is_feasible(&FlowVector(vec![1.0, 1.0, 0.0, 0.0]), 1e-9).unwrap();
        assert!(ok.feasible, "{:?}", ok.violations);
        let ok2 = net.is_feasible(&FlowVector(vec![0.5, 1.0, 0.5, 0.0]), 1e-9).unwrap();
        assert!(ok2.feasible, "{:?}", ok2.violations);
        let bad = net.is_feasible(&FlowVector(vec![2.0, 1.0, 0.0, 0.0]), 1e-9).unwrap();
        assert!(!bad.feasible);
        assert!(bad
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NodeImbalance { class: VehicleClass::Regular, .. })));
    }

    #[test]
    fn feasibility_dimension_mismatch() {
        let net = Network::parallel(2, 1.0, 1.0).unwrap();
        let err = net.is_feasible(&FlowVector(vec![1.0, 1.0]), 1e-9).unwrap_err();
        assert_eq!(err, NetworkError::DimensionMismatch { expected: 4, got: 2 });
    }
}
