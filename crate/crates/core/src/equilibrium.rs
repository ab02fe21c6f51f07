//! Wardrop equilibria of the two-class game via the variational inequality:
//! residual evaluation, an extragradient/best-response iterative solver, and
//! exhaustive support enumeration for the worst-case equilibrium.

use thiserror::Error;

use crate::cost::{CostError, CostMatrix};
use crate::linalg::{solve_dense, Matrix, Solve};
use crate::network::{FlowVector, Network, NetworkError, Path, VehicleClass};

#[derive(Debug, Error)]
pub enum EquilibriumError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("flow is not feasible: {0}")]
    InfeasibleFlow(String),
    #[error("support enumeration budget exceeded ({combinations} patterns)")]
    SupportBudgetExceeded { combinations: usize },
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// VI residual below which a flow counts as an equilibrium (vehicle-hours).
    pub vi_tol: f64,
    pub max_iterations: usize,
    /// Extragradient step; `None` picks 0.9 / Lipschitz bound.
    pub initial_step: Option<f64>,
    /// Step decays as step / (1 + decay * iteration).
    pub step_decay: f64,
    /// Restarts attempted when the deterministic start stalls.
    pub multistart_count: usize,
    pub random_seed: u64,
    pub max_paths: usize,
    /// Cap on combined support patterns during exhaustive enumeration.
    pub support_budget: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            vi_tol: 1e-8,
            max_iterations: 5000,
            initial_step: None,
            step_decay: 0.002,
            multistart_count: 20,
            random_seed: 0,
            max_paths: 1000,
            support_budget: 20_000,
        }
    }
}

/// Delay of one enumerated path for one class at a reported flow.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCost {
    pub od_index: usize,
    pub class: VehicleClass,
    pub path_index: usize,
    pub cost: f64,
}

/// An (od, class, path) triple carrying positive mass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportEntry {
    pub od_index: usize,
    pub class: VehicleClass,
    pub path_index: usize,
}

#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub flow: FlowVector,
    pub vi_residual: f64,
    pub per_path_costs: Vec<PathCost>,
    pub support: Vec<SupportEntry>,
    pub converged: bool,
    pub iterations: usize,
}

/// One equilibrium found during support enumeration.
#[derive(Debug, Clone)]
pub struct EquilibriumCandidate {
    pub flow: FlowVector,
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub struct WorstEquilibrium {
    pub equilibrium: EquilibriumResult,
    pub cost: f64,
    /// False when the support budget forced a fallback to the iterative
    /// solver or path enumeration was truncated.
    pub exhaustive: bool,
    pub candidates: Vec<EquilibriumCandidate>,
}

/// Maximum VI violation of `z`: <c(z), z> minus the cheapest feasible
/// response under the fixed delays c(z). Zero exactly at Wardrop equilibria.
pub fn vi_residual(
    network: &Network,
    cost: &CostMatrix,
    z: &FlowVector,
    opts: &SolverOptions,
) -> Result<f64, EquilibriumError> {
    let report = network.is_feasible(z, 1e-7)?;
    if !report.feasible {
        let detail = report
            .violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(EquilibriumError::InfeasibleFlow(detail));
    }
    let space = PathSpace::build(network, cost, opts.max_paths)?;
    Ok(space.residual_at(z)?)
}

pub fn solve_equilibrium(
    network: &Network,
    cost: &CostMatrix,
    opts: &SolverOptions,
) -> Result<EquilibriumResult, EquilibriumError> {
    let space = PathSpace::build(network, cost, opts.max_paths)?;
    Ok(space.solve_iteratively(opts))
}

/// All vertex equilibria reachable by exhaustive support enumeration,
/// sorted by descending social cost (ties: lexicographically smaller flow).
pub fn enumerate_equilibria(
    network: &Network,
    cost: &CostMatrix,
    opts: &SolverOptions,
) -> Result<Vec<EquilibriumCandidate>, EquilibriumError> {
    let space = PathSpace::build(network, cost, opts.max_paths)?;
    let combos = space.pattern_count();
    if combos > opts.support_budget {
        return Err(EquilibriumError::SupportBudgetExceeded { combinations: combos });
    }
    Ok(space
        .enumerate_vertex_equilibria(opts)
        .into_iter()
        .map(|(_f, z, c)| EquilibriumCandidate { flow: z, cost: c })
        .collect())
}

/// The cost-maximizing Wardrop equilibrium.
///
/// Enumerates support patterns; within each pattern the Wardrop conditions
/// are affine, the social cost restricted to the pattern polytope is affine
/// as well, so the maximum over the pattern is attained at a polytope vertex
/// and vertex enumeration is exact. Falls back to the iterative solver
/// (flagged non-exhaustive) when the pattern budget is exceeded.
pub fn worst_equilibrium(
    network: &Network,
    cost: &CostMatrix,
    opts: &SolverOptions,
) -> Result<WorstEquilibrium, EquilibriumError> {
    let space = PathSpace::build(network, cost, opts.max_paths)?;
    let combos = space.pattern_count();
    if combos > opts.support_budget {
        let eq = space.solve_iteratively(opts);
        let cost_val = cost.social_cost(&eq.flow)?;
        return Ok(WorstEquilibrium {
            equilibrium: eq,
            cost: cost_val,
            exhaustive: false,
            candidates: Vec::new(),
        });
    }
    let found = space.enumerate_vertex_equilibria(opts);
    match found.first() {
        Some((f, _z, cost_val)) => {
            let eq = space.result_from_flow_vars(f, 0);
            let cost_val = *cost_val;
            let candidates = found
                .iter()
                .map(|(_f, z, c)| EquilibriumCandidate { flow: z.clone(), cost: *c })
                .collect();
            Ok(WorstEquilibrium {
                equilibrium: eq,
                cost: cost_val,
                exhaustive: !space.truncated,
                candidates,
            })
        }
        None => {
            // numerically degenerate instance; fall back to iteration
            let eq = space.solve_iteratively(opts);
            let cost_val = cost.social_cost(&eq.flow)?;
            Ok(WorstEquilibrium {
                equilibrium: eq,
                cost: cost_val,
                exhaustive: false,
                candidates: Vec::new(),
            })
        }
    }
}

/// Compares flows entrywise; used for deterministic tie-breaking.
pub fn lex_compare(a: &[f64], b: &[f64], tol: f64) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > tol {
            return x.partial_cmp(y).unwrap();
        }
    }
    std::cmp::Ordering::Equal
}

/// One (od, class) demand stream and its slice of path-flow variables.
#[derive(Debug, Clone)]
pub(crate) struct Commodity {
    pub(crate) od_index: usize,
    pub(crate) class: VehicleClass,
    pub(crate) demand: f64,
    pub(crate) var_start: usize,
    pub(crate) var_len: usize,
}

/// Path-flow coordinates for the whole game: variables are (commodity, path)
/// masses; link flows and path costs are affine images of them.
pub(crate) struct PathSpace {
    od_paths: Vec<Vec<Path>>,
    pub(crate) truncated: bool,
    pub(crate) commodities: Vec<Commodity>,
    pub(crate) total_vars: usize,
    /// flow-vector entries fed by each variable
    var_entries: Vec<Vec<usize>>,
    link_count: usize,
    /// path cost operator: costs(f) = gram * f + cost_offsets
    pub(crate) gram: Matrix,
    pub(crate) cost_offsets: Vec<f64>,
    cost_matrix: CostMatrix,
    pub(crate) demand_scale: f64,
}

impl PathSpace {
    pub(crate) fn build(
        network: &Network,
        cost: &CostMatrix,
        max_paths: usize,
    ) -> Result<Self, EquilibriumError> {
        if cost.dim() != 2 * network.link_count() {
            return Err(CostError::DimensionMismatch {
                expected: 2 * network.link_count(),
                got: cost.dim(),
            }
            .into());
        }
        let mut od_paths = Vec::with_capacity(network.od_pairs().len());
        let mut truncated = false;
        for od_index in 0..network.od_pairs().len() {
            let set = network.enumerate_paths(od_index, max_paths)?;
            truncated |= set.truncated;
            od_paths.push(set.paths);
        }

        let mut commodities = Vec::new();
        let mut var_entries = Vec::new();
        let mut total_vars = 0;
        for (od_index, od) in network.od_pairs().iter().enumerate() {
            for class in VehicleClass::BOTH {
                let demand = od.demand(class);
                if demand <= 0.0 {
                    continue;
                }
                let var_start = total_vars;
                for path in &od_paths[od_index] {
                    let entries = path
                        .links
                        .iter()
                        .map(|&lid| 2 * (lid - 1) + class.offset())
                        .collect();
                    var_entries.push(entries);
                    total_vars += 1;
                }
                commodities.push(Commodity {
                    od_index,
                    class,
                    demand,
                    var_start,
                    var_len: total_vars - var_start,
                });
            }
        }

        // gram[p][q] = d cost_p / d f_q, offsets from free-flow times
        let a = cost.coefficients();
        let mut gram = Matrix::zeros(total_vars, total_vars);
        let mut cost_offsets = vec![0.0; total_vars];
        for p in 0..total_vars {
            for &e in &var_entries[p] {
                cost_offsets[p] += cost.offsets()[e];
            }
            for q in 0..total_vars {
                let mut acc = 0.0;
                for &e in &var_entries[p] {
                    for &e2 in &var_entries[q] {
                        acc += a.get(e, e2);
                    }
                }
                gram.set(p, q, acc);
            }
        }

        let demand_scale = commodities.iter().map(|c| c.demand).sum::<f64>().max(1.0);
        Ok(PathSpace {
            od_paths,
            truncated,
            commodities,
            total_vars,
            var_entries,
            link_count: network.link_count(),
            gram,
            cost_offsets,
            cost_matrix: cost.clone(),
            demand_scale,
        })
    }

    pub(crate) fn link_flows(&self, f: &[f64]) -> FlowVector {
        let mut z = FlowVector::zeros(self.link_count);
        for (var, entries) in self.var_entries.iter().enumerate() {
            for &e in entries {
                z.0[e] += f[var];
            }
        }
        z
    }

    fn path_costs(&self, f: &[f64]) -> Vec<f64> {
        let mut c = self.gram.matvec(f);
        for (ci, oi) in c.iter_mut().zip(&self.cost_offsets) {
            *ci += oi;
        }
        c
    }

    /// VI residual of a feasible link flow under the enumerated path set.
    fn residual_at(&self, z: &FlowVector) -> Result<f64, CostError> {
        let delays = self.cost_matrix.evaluate(z)?;
        let total: f64 = delays.iter().zip(z.as_slice()).map(|(c, f)| c * f).sum();
        let mut best_total = 0.0;
        for com in &self.commodities {
            let mut best = f64::INFINITY;
            for path in &self.od_paths[com.od_index] {
                let c: f64 = path
                    .links
                    .iter()
                    .map(|&lid| delays[2 * (lid - 1) + com.class.offset()])
                    .sum();
                if c < best {
                    best = c;
                }
            }
            best_total += com.demand * best;
        }
        Ok((total - best_total).max(0.0))
    }

    fn residual_from_costs(&self, f: &[f64], costs: &[f64]) -> f64 {
        let total: f64 = costs.iter().zip(f).map(|(c, x)| c * x).sum();
        let mut best_total = 0.0;
        for com in &self.commodities {
            let mut best = f64::INFINITY;
            for v in com.var_start..com.var_start + com.var_len {
                if costs[v] < best {
                    best = costs[v];
                }
            }
            best_total += com.demand * best;
        }
        (total - best_total).max(0.0)
    }

    pub(crate) fn uniform_start(&self) -> Vec<f64> {
        let mut f = vec![0.0; self.total_vars];
        for com in &self.commodities {
            let share = com.demand / com.var_len as f64;
            for v in com.var_start..com.var_start + com.var_len {
                f[v] = share;
            }
        }
        f
    }

    /// Euclidean projection onto the product of scaled simplices.
    pub(crate) fn project(&self, f: &mut [f64]) {
        for com in &self.commodities {
            let seg = &mut f[com.var_start..com.var_start + com.var_len];
            project_simplex(seg, com.demand);
        }
    }

    fn best_response(&self, costs: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; self.total_vars];
        for com in &self.commodities {
            let mut best_v = com.var_start;
            let mut best_c = f64::INFINITY;
            for v in com.var_start..com.var_start + com.var_len {
                if costs[v] < best_c {
                    best_c = costs[v];
                    best_v = v;
                }
            }
            f[best_v] = com.demand;
        }
        f
    }

    fn lipschitz_bound(&self) -> f64 {
        self.gram.frobenius_norm().max(1e-12)
    }

    fn solve_iteratively(&self, opts: &SolverOptions) -> EquilibriumResult {
        use rand::{rngs::StdRng, Rng, SeedableRng};

        let mut starts: Vec<Vec<f64>> = vec![self.uniform_start()];
        let mut rng = StdRng::seed_from_u64(opts.random_seed);
        for _ in 0..opts.multistart_count {
            let mut f = vec![0.0; self.total_vars];
            for com in &self.commodities {
                let mut weights: Vec<f64> = (0..com.var_len)
                    .map(|_| -(rng.gen_range(1e-9..1.0_f64).ln()))
                    .collect();
                let sum: f64 = weights.iter().sum();
                for w in &mut weights {
                    *w *= com.demand / sum;
                }
                f[com.var_start..com.var_start + com.var_len].copy_from_slice(&weights);
            }
            starts.push(f);
        }

        let tol = opts.vi_tol;
        let tau0 = opts
            .initial_step
            .unwrap_or(0.9 / self.lipschitz_bound());
        // the deterministic start gets the full budget; restarts share it
        let budget_per_start =
            (opts.max_iterations / starts.len().max(1)).max(200.min(opts.max_iterations));

        let mut best_f = starts[0].clone();
        let mut best_res = f64::INFINITY;
        let mut total_iters = 0usize;

        'starts: for (si, start) in starts.iter().enumerate() {
            let budget = if si == 0 {
                opts.max_iterations.max(1)
            } else {
                budget_per_start
            };
            if si > 0 && total_iters >= opts.max_iterations.saturating_mul(2) {
                break;
            }
            let mut f = start.clone();
            let mut br_count = 0usize;
            for t in 0..budget {
                total_iters += 1;
                let costs = self.path_costs(&f);
                let res = self.residual_from_costs(&f, &costs);
                if res < best_res {
                    best_res = res;
                    best_f = f.clone();
                }
                if best_res <= tol {
                    break 'starts;
                }

                // periodic exact refinement: pin the active support and solve
                // the Wardrop conditions on it directly
                if t % 25 == 24 {
                    if let Some(snapped) = self.snap_to_support(&f, &costs) {
                        let snap_costs = self.path_costs(&snapped);
                        let snap_res = self.residual_from_costs(&snapped, &snap_costs);
                        if snap_res < best_res {
                            best_res = snap_res;
                            best_f = snapped;
                        }
                        if best_res <= tol {
                            break 'starts;
                        }
                    }
                }

                let tau = tau0 / (1.0 + opts.step_decay * t as f64);
                // extragradient: probe step, then step on the probe's costs
                let mut half: Vec<f64> =
                    f.iter().zip(&costs).map(|(x, c)| x - tau * c).collect();
                self.project(&mut half);
                let half_costs = self.path_costs(&half);
                let mut next: Vec<f64> =
                    f.iter().zip(&half_costs).map(|(x, c)| x - tau * c).collect();
                self.project(&mut next);

                // interleaved best-response averaging with diminishing weight
                if t % 5 == 4 {
                    br_count += 1;
                    let gamma = 1.0 / (br_count as f64 + 2.0);
                    let br = self.best_response(&self.path_costs(&next));
                    for (x, b) in next.iter_mut().zip(&br) {
                        *x = (1.0 - gamma) * *x + gamma * b;
                    }
                }
                f = next;
            }
        }

        let converged = best_res <= tol;
        let mut result = self.result_from_flow_vars(&best_f, total_iters);
        result.converged = converged;
        result
    }

    /// Tries to solve the Wardrop conditions exactly on the support suggested
    /// by the current iterate.
    fn snap_to_support(&self, f: &[f64], costs: &[f64]) -> Option<Vec<f64>> {
        if self.total_vars > 24 {
            return None;
        }
        let mass_tol = 1e-6 * self.demand_scale;
        let mut pattern = Vec::with_capacity(self.commodities.len());
        for com in &self.commodities {
            let mut min_cost = f64::INFINITY;
            for v in com.var_start..com.var_start + com.var_len {
                min_cost = min_cost.min(costs[v]);
            }
            let cost_tol = 1e-6 * (1.0 + min_cost.abs());
            let mut supported: Vec<usize> = (0..com.var_len)
                .filter(|&j| {
                    let v = com.var_start + j;
                    f[v] > mass_tol || costs[v] <= min_cost + cost_tol
                })
                .collect();
            if supported.is_empty() {
                supported = vec![0];
            }
            pattern.push(supported);
        }
        let vertices = self.pattern_vertices(&pattern);
        vertices.into_iter().next()
    }

    fn pattern_count(&self) -> usize {
        let mut count: usize = 1;
        for com in &self.commodities {
            let subsets = (1usize << com.var_len.min(62)) - 1;
            count = count.saturating_mul(subsets);
        }
        count
    }

    fn result_from_flow_vars(&self, f: &[f64], iterations: usize) -> EquilibriumResult {
        let z = self.link_flows(f);
        let costs = self.path_costs(f);
        let residual = self.residual_from_costs(f, &costs);
        let support = self
            .commodities
            .iter()
            .flat_map(|com| {
                (0..com.var_len).filter_map(move |j| {
                    if f[com.var_start + j] > 1e-9 * self.demand_scale {
                        Some(SupportEntry {
                            od_index: com.od_index,
                            class: com.class,
                            path_index: j,
                        })
                    } else {
                        None
                    }
                })
            })
            .collect();
        EquilibriumResult {
            per_path_costs: self.all_path_costs(&z),
            flow: z,
            vi_residual: residual,
            support,
            converged: true,
            iterations,
        }
    }

    fn all_path_costs(&self, z: &FlowVector) -> Vec<PathCost> {
        let delays = self.cost_matrix.evaluate(z).expect("dimensions match");
        let mut out = Vec::new();
        for (od_index, paths) in self.od_paths.iter().enumerate() {
            for class in VehicleClass::BOTH {
                for (path_index, path) in paths.iter().enumerate() {
                    let cost = path
                        .links
                        .iter()
                        .map(|&lid| delays[2 * (lid - 1) + class.offset()])
                        .sum();
                    out.push(PathCost { od_index, class, path_index, cost });
                }
            }
        }
        out
    }

    /// Enumerates all support patterns and collects their vertex equilibria,
    /// sorted worst-first with a lexicographic tie-break and deduplicated by
    /// link flows.
    fn enumerate_vertex_equilibria(
        &self,
        opts: &SolverOptions,
    ) -> Vec<(Vec<f64>, FlowVector, f64)> {
        let mut pattern: Vec<Vec<usize>> = vec![Vec::new(); self.commodities.len()];
        let mut found: Vec<(Vec<f64>, FlowVector, f64)> = Vec::new();
        self.walk_patterns(0, &mut pattern, &mut found, opts);

        found.sort_by(|a, b| {
            b.2.partial_cmp(&a.2)
                .unwrap()
                .then_with(|| lex_compare(a.1.as_slice(), b.1.as_slice(), 1e-12))
        });
        found.dedup_by(|a, b| {
            (a.2 - b.2).abs() <= 1e-9 * (1.0 + b.2.abs())
                && a.1
                    .as_slice()
                    .iter()
                    .zip(b.1.as_slice())
                    .all(|(x, y)| (x - y).abs() <= 1e-8 * (1.0 + self.demand_scale))
        });
        found
    }

    fn walk_patterns(
        &self,
        level: usize,
        pattern: &mut Vec<Vec<usize>>,
        found: &mut Vec<(Vec<f64>, FlowVector, f64)>,
        opts: &SolverOptions,
    ) {
        if level == self.commodities.len() {
            for f in self.pattern_vertices(pattern) {
                let z = self.link_flows(&f);
                let costs = self.path_costs(&f);
                let residual = self.residual_from_costs(&f, &costs);
                if residual <= opts.vi_tol {
                    let cost = self
                        .cost_matrix
                        .social_cost(&z)
                        .expect("dimensions match");
                    found.push((f, z, cost));
                }
            }
            return;
        }
        let len = self.commodities[level].var_len;
        for mask in 1usize..(1 << len) {
            let subset: Vec<usize> = (0..len).filter(|j| mask & (1 << j) != 0).collect();
            pattern[level] = subset;
            self.walk_patterns(level + 1, pattern, found, opts);
        }
        pattern[level] = Vec::new();
    }

    /// Vertices of one support pattern's Wardrop polytope, as full variable
    /// vectors. The polytope lives in the supported coordinates; equalities
    /// are demand sums and equal-cost conditions, inequalities are
    /// nonnegativity and no-cheaper-unsupported-path conditions.
    fn pattern_vertices(&self, pattern: &[Vec<usize>]) -> Vec<Vec<f64>> {
        // map supported (commodity, local path) to restricted columns
        let mut columns: Vec<usize> = Vec::new();
        for (ci, com) in self.commodities.iter().enumerate() {
            for &j in &pattern[ci] {
                columns.push(com.var_start + j);
            }
        }
        let d = columns.len();
        if d == 0 {
            return Vec::new();
        }

        let restricted = |row_var: usize| -> Vec<f64> {
            columns.iter().map(|&c| self.gram.get(row_var, c)).collect()
        };

        let mut eq_rows: Vec<Vec<f64>> = Vec::new();
        let mut eq_rhs: Vec<f64> = Vec::new();
        let mut in_rows: Vec<Vec<f64>> = Vec::new();
        let mut in_rhs: Vec<f64> = Vec::new();

        let mut col_cursor = 0usize;
        for (ci, com) in self.commodities.iter().enumerate() {
            let supported = &pattern[ci];
            let first_var = com.var_start + supported[0];
            // demand conservation
            let mut demand_row = vec![0.0; d];
            for k in 0..supported.len() {
                demand_row[col_cursor + k] = 1.0;
            }
            eq_rows.push(demand_row);
            eq_rhs.push(com.demand);
            // equal costs across the support
            for &j in supported.iter().skip(1) {
                let var = com.var_start + j;
                let a = restricted(var);
                let b = restricted(first_var);
                eq_rows.push(a.iter().zip(&b).map(|(x, y)| x - y).collect());
                eq_rhs.push(self.cost_offsets[first_var] - self.cost_offsets[var]);
            }
            // unsupported paths must not be cheaper
            for j in 0..com.var_len {
                if supported.contains(&j) {
                    continue;
                }
                let var = com.var_start + j;
                let a = restricted(first_var);
                let b = restricted(var);
                in_rows.push(a.iter().zip(&b).map(|(x, y)| x - y).collect());
                in_rhs.push(self.cost_offsets[var] - self.cost_offsets[first_var]);
            }
            col_cursor += supported.len();
        }
        // nonnegativity
        for k in 0..d {
            let mut row = vec![0.0; d];
            row[k] = -1.0;
            in_rows.push(row);
            in_rhs.push(0.0);
        }

        let eq_rank = matrix_rank(&eq_rows, 1e-11);
        let need = d.saturating_sub(eq_rank);
        let scale = 1.0 + self.demand_scale + self.gram.max_abs();
        let feas_tol = 1e-8 * scale;

        let mut vertices: Vec<Vec<f64>> = Vec::new();
        let mut push_candidate = |x: &[f64]| {
            // feasibility screen against every constraint
            for (row, rhs) in eq_rows.iter().zip(&eq_rhs) {
                let lhs: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
                if (lhs - rhs).abs() > feas_tol {
                    return;
                }
            }
            for (row, rhs) in in_rows.iter().zip(&in_rhs) {
                let lhs: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
                if lhs > rhs + feas_tol {
                    return;
                }
            }
            if vertices
                .iter()
                .any(|v| v.iter().zip(x).all(|(a, b)| (a - b).abs() <= 1e-9 * scale))
            {
                return;
            }
            vertices.push(x.to_vec());
        };

        for active in combinations(in_rows.len(), need) {
            let mut rows = eq_rows.clone();
            let mut rhs = eq_rhs.clone();
            for &i in &active {
                rows.push(in_rows[i].clone());
                rhs.push(in_rhs[i]);
            }
            let m = Matrix::from_rows(&rows);
            if let Solve::Unique(x) = solve_dense(&m, &rhs, 1e-11) {
                // clamp tiny negatives from elimination noise
                let x: Vec<f64> = x
                    .iter()
                    .map(|&v| if v.abs() < 1e-13 * scale { 0.0 } else { v })
                    .collect();
                push_candidate(&x);
            }
        }

        // expand restricted coordinates back to full variable vectors
        vertices
            .into_iter()
            .map(|x| {
                let mut f = vec![0.0; self.total_vars];
                for (k, &col) in columns.iter().enumerate() {
                    f[col] = x[k];
                }
                f
            })
            .collect()
    }
}

/// Euclidean projection of `v` onto the simplex {x >= 0, sum x = s}.
fn project_simplex(v: &mut [f64], s: f64) {
    let n = v.len();
    if n == 0 {
        return;
    }
    if s <= 0.0 {
        v.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = (sorted[0] - s).max(0.0);
    for (k, &u) in sorted.iter().enumerate() {
        cum += u;
        let t = (cum - s) / (k as f64 + 1.0);
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

fn matrix_rank(rows: &[Vec<f64>], tol: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let n = rows[0].len();
    let mut w: Vec<Vec<f64>> = rows.to_vec();
    let scale = w
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0_f64, |s, x| s.max(x.abs()));
    let t = tol * (1.0 + scale);
    let mut rank = 0;
    for col in 0..n {
        let mut pivot = None;
        let mut best = t;
        for (r, row) in w.iter().enumerate().skip(rank) {
            if row[col].abs() > best {
                best = row[col].abs();
                pivot = Some(r);
            }
        }
        let Some(p) = pivot else { continue };
        w.swap(rank, p);
        let piv = w[rank][col];
        for r in (rank + 1)..w.len() {
            let f = w[r][col] / piv;
            if f != 0.0 {
                for c in col..n {
                    let delta = f * w[rank][c];
                    w[r][c] -= delta;
                }
            }
        }
        rank += 1;
        if rank == w.len() {
            break;
        }
    }
    rank
}

/// All k-subsets of 0..n in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        // advance the rightmost index that can move
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{LinkCostParams, Orientation};
    use crate::linalg::Matrix as M;
    use crate::network::OdPair;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    /// Two parallel roads, c1 = 1, c2 = zeta * x2, demands (1/(2 zeta), 1/2).
    fn pigou_like(zeta: f64) -> (Network, CostMatrix) {
        let net = Network::parallel(2, 1.0 / (2.0 * zeta), 0.5).unwrap();
        let a = M::from_rows(&[
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, zeta, 0.0],
            vec![0.0, 0.0, zeta, 0.0],
        ]);
        let cm = CostMatrix::from_link_offsets(a, &[1.0, 0.0]).unwrap();
        (net, cm)
    }

    /// Two parallel roads with two-sided asymmetry: c1 = kx+y, c2 = x+ky.
    fn two_sided(k: f64) -> (Network, CostMatrix) {
        let net = Network::parallel(2, 1.0, 1.0).unwrap();
        let cm = CostMatrix::assemble(&[
            LinkCostParams::new(0.0, 1.0, k, Orientation::RegularHeavy).unwrap(),
            LinkCostParams::new(0.0, 1.0, k, Orientation::SmartHeavy).unwrap(),
        ])
        .unwrap();
        (net, cm)
    }

    /// One-sided asymmetry: c1 = 1, c2 = sqrt(k) x + y/sqrt(k).
    fn one_sided(k: f64) -> (Network, CostMatrix) {
        let sq = k.sqrt();
        let net = Network::parallel(2, (2.0 * sq - 1.0) / (2.0 * k), 0.5).unwrap();
        let a = M::from_rows(&[
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, sq, 1.0 / sq],
            vec![0.0, 0.0, sq, 1.0 / sq],
        ]);
        let cm = CostMatrix::from_link_offsets(a, &[1.0, 0.0]).unwrap();
        (net, cm)
    }

    #[test]
    fn residual_zero_at_equilibrium() {
        let (net, cm) = pigou_like(1.0);
        let z = FlowVector(vec![0.0, 0.0, 0.5, 0.5]);
        let r = vi_residual(&net, &cm, &z, &SolverOptions::default()).unwrap();
        approx(r, 0.0, 1e-12);
    }

    #[test]
    fn residual_positive_off_equilibrium() {
        let (net, cm) = pigou_like(1.0);
        let z = FlowVector(vec![0.5, 0.5, 0.0, 0.0]);
        let r = vi_residual(&net, &cm, &z, &SolverOptions::default()).unwrap();
        approx(r, 1.0, 1e-12);
    }

    #[test]
    fn residual_zero_on_single_link() {
        let net = Network::parallel(1, 1.0, 1.0).unwrap();
        let cm = CostMatrix::assemble(&[LinkCostParams::new(
            0.5,
            1.0,
            2.0,
            Orientation::RegularHeavy,
        )
        .unwrap()])
        .unwrap();
        let z = FlowVector(vec![1.0, 1.0]);
        let r = vi_residual(&net, &cm, &z, &SolverOptions::default()).unwrap();
        approx(r, 0.0, 1e-12);
    }

    #[test]
    fn residual_rejects_infeasible_flow() {
        let (net, cm) = pigou_like(1.0);
        let z = FlowVector(vec![5.0, 0.0, 0.0, 0.0]);
        let err = vi_residual(&net, &cm, &z, &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, EquilibriumError::InfeasibleFlow(_)));
    }

    #[test]
    fn solve_routes_everything_to_cheap_road() {
        for zeta in [1.0, 2.0, 5.0] {
            let (net, cm) = pigou_like(zeta);
            let eq = solve_equilibrium(&net, &cm, &SolverOptions::default()).unwrap();
            assert!(eq.converged);
            assert!(eq.vi_residual <= 1e-8);
            let c = cm.social_cost(&eq.flow).unwrap();
            approx(c, 0.25 / zeta + 0.25, 1e-7);
            approx(eq.flow.regular(1), 1.0 / (2.0 * zeta), 1e-7);
            approx(eq.flow.smart(1), 0.5, 1e-7);
        }
    }

    #[test]
    fn solve_one_sided_equilibrium_cost() {
        for k in [1.0, 2.0, 4.0] {
            let (net, cm) = one_sided(k);
            let eq = solve_equilibrium(&net, &cm, &SolverOptions::default()).unwrap();
            assert!(eq.converged, "k = {k}");
            let c = cm.social_cost(&eq.flow).unwrap();
            let expected = (k + 2.0 * k.sqrt() - 1.0) / (2.0 * k);
            approx(c, expected, 1e-7);
        }
    }

    #[test]
    fn solve_single_link_is_trivial() {
        let net = Network::parallel(1, 2.0, 3.0).unwrap();
        let cm = CostMatrix::assemble(&[LinkCostParams::new(
            0.1,
            0.5,
            1.5,
            Orientation::RegularHeavy,
        )
        .unwrap()])
        .unwrap();
        let eq = solve_equilibrium(&net, &cm, &SolverOptions::default()).unwrap();
        assert!(eq.converged);
        approx(eq.flow.regular(0), 2.0, 1e-10);
        approx(eq.flow.smart(0), 3.0, 1e-10);
        approx(eq.vi_residual, 0.0, 1e-12);
    }

    #[test]
    fn worst_case_two_sided_is_segregated() {
        let (net, cm) = two_sided(2.0);
        let worst = worst_equilibrium(&net, &cm, &SolverOptions::default()).unwrap();
        assert!(worst.exhaustive);
        approx(worst.cost, 4.0, 1e-9);
        approx(worst.equilibrium.flow.regular(0), 1.0, 1e-9);
        approx(worst.equilibrium.flow.smart(1), 1.0, 1e-9);
        // the benign equilibrium must appear among the candidates
        assert!(worst
            .candidates
            .iter()
            .any(|c| (c.cost - 2.0).abs() <= 1e-9));
    }

    #[test]
    fn both_equilibria_found_for_various_k() {
        for k in [1.0, 1.5, 2.0, 3.0] {
            let (net, cm) = two_sided(k);
            let cands =
                enumerate_equilibria(&net, &cm, &SolverOptions::default()).unwrap();
            let worst = cands.iter().map(|c| c.cost).fold(f64::MIN, f64::max);
            approx(worst, 2.0 * k, 1e-6);
            assert!(
                cands.iter().any(|c| (c.cost - 2.0).abs() <= 1e-6),
                "k = {k}: benign equilibrium missing"
            );
        }
    }

    #[test]
    fn worst_matches_unique_equilibrium_on_pigou_like() {
        let (net, cm) = pigou_like(2.0);
        let worst = worst_equilibrium(&net, &cm, &SolverOptions::default()).unwrap();
        let solved = solve_equilibrium(&net, &cm, &SolverOptions::default()).unwrap();
        let c_w = worst.cost;
        let c_s = cm.social_cost(&solved.flow).unwrap();
        approx(c_w, c_s, 1e-7);
        approx(c_w, 0.25 / 2.0 + 0.25, 1e-9);
    }

    #[test]
    fn worst_is_at_least_solved_cost() {
        for k in [1.0, 2.0, 3.5] {
            let (net, cm) = two_sided(k);
            let opts = SolverOptions::default();
            let worst = worst_equilibrium(&net, &cm, &opts).unwrap();
            let solved = solve_equilibrium(&net, &cm, &opts).unwrap();
            let c_s = cm.social_cost(&solved.flow).unwrap();
            assert!(worst.cost >= c_s - opts.vi_tol);
        }
    }

    #[test]
    fn reported_equilibria_reverify() {
        let (net, cm) = two_sided(3.0);
        let opts = SolverOptions::default();
        let worst = worst_equilibrium(&net, &cm, &opts).unwrap();
        let r = vi_residual(&net, &cm, &worst.equilibrium.flow, &opts).unwrap();
        assert!(r <= opts.vi_tol);
        approx(r, worst.equilibrium.vi_residual, 1e-10);
    }

    #[test]
    fn determinism_bitwise() {
        let (net, cm) = two_sided(2.5);
        let opts = SolverOptions { random_seed: 42, ..Default::default() };
        let a = solve_equilibrium(&net, &cm, &opts).unwrap();
        let b = solve_equilibrium(&net, &cm, &opts).unwrap();
        assert_eq!(a.flow.as_slice(), b.flow.as_slice());
        assert_eq!(a.vi_residual.to_bits(), b.vi_residual.to_bits());
        let wa = worst_equilibrium(&net, &cm, &opts).unwrap();
        let wb = worst_equilibrium(&net, &cm, &opts).unwrap();
        assert_eq!(wa.equilibrium.flow.as_slice(), wb.equilibrium.flow.as_slice());
        assert_eq!(wa.cost.to_bits(), wb.cost.to_bits());
    }

    #[test]
    fn residual_zero_iff_supported_paths_minimal() {
        let (net, cm) = two_sided(2.0);
        let opts = SolverOptions::default();
        let worst = worst_equilibrium(&net, &cm, &opts).unwrap();
        let eq = &worst.equilibrium;
        // residual ~ 0: every used path cost equals the commodity minimum
        let delays = cm.evaluate(&eq.flow).unwrap();
        let path_cost = |path: &[usize], class: VehicleClass| -> f64 {
            path.iter()
                .map(|&lid| delays[2 * (lid - 1) + class.offset()])
                .sum()
        };
        let p1 = vec![1];
        let p2 = vec![2];
        for class in VehicleClass::BOTH {
            let c1 = path_cost(&p1, class);
            let c2 = path_cost(&p2, class);
            let min = c1.min(c2);
            let mass1 = match class {
                VehicleClass::Regular => eq.flow.regular(0),
                VehicleClass::Smart => eq.flow.smart(0),
            };
            let mass2 = match class {
                VehicleClass::Regular => eq.flow.regular(1),
                VehicleClass::Smart => eq.flow.smart(1),
            };
            if mass1 > 1e-9 {
                approx(c1, min, 1e-9);
            }
            if mass2 > 1e-9 {
                approx(c2, min, 1e-9);
            }
        }
    }

    #[test]
    fn iteration_cap_reports_nonconvergence() {
        let (net, cm) = pigou_like(2.0);
        let opts = SolverOptions {
            max_iterations: 1,
            multistart_count: 0,
            vi_tol: 1e-15,
            ..Default::default()
        };
        let eq = solve_equilibrium(&net, &cm, &opts).unwrap();
        assert!(!eq.converged);
        // the best iterate so far is still reported
        assert_eq!(eq.flow.len(), 4);
    }

    #[test]
    fn support_budget_falls_back() {
        // 10 parallel links -> (2^10 - 1)^2 patterns, far over a tiny budget
        let net = Network::parallel(10, 1.0, 1.0).unwrap();
        let links: Vec<LinkCostParams> = (0..10)
            .map(|i| {
                LinkCostParams::new(0.1 * i as f64, 1.0, 1.0, Orientation::RegularHeavy).unwrap()
            })
            .collect();
        let cm = CostMatrix::assemble(&links).unwrap();
        let opts = SolverOptions { support_budget: 100, ..Default::default() };
        let worst = worst_equilibrium(&net, &cm, &opts).unwrap();
        assert!(!worst.exhaustive);
        let err = enumerate_equilibria(&net, &cm, &opts).unwrap_err();
        assert!(matches!(err, EquilibriumError::SupportBudgetExceeded { .. }));
    }

    #[test]
    fn multi_od_network_solves() {
        // diamond-ish: two OD pairs sharing a middle link
        let net = Network::new(
            &[(0, 1), (1, 2), (0, 2), (1, 2)],
            vec![
                OdPair { origin: 0, destination: 2, demand_regular: 1.0, demand_smart: 0.5 },
                OdPair { origin: 1, destination: 2, demand_regular: 0.5, demand_smart: 0.5 },
            ],
        )
        .unwrap();
        let links: Vec<LinkCostParams> = vec![
            LinkCostParams::new(0.1, 0.5, 2.0, Orientation::RegularHeavy).unwrap(),
            LinkCostParams::new(0.2, 1.0, 1.5, Orientation::RegularHeavy).unwrap(),
            LinkCostParams::new(0.3, 0.8, 1.0, Orientation::RegularHeavy).unwrap(),
            LinkCostParams::new(0.1, 1.2, 2.5, Orientation::SmartHeavy).unwrap(),
        ];
        let cm = CostMatrix::assemble(&links).unwrap();
        let opts = SolverOptions::default();
        let eq = solve_equilibrium(&net, &cm, &opts).unwrap();
        assert!(eq.converged, "residual {}", eq.vi_residual);
        let feas = net.is_feasible(&eq.flow, 1e-7).unwrap();
        assert!(feas.feasible, "{:?}", feas.violations);
        let worst = worst_equilibrium(&net, &cm, &opts).unwrap();
        assert!(worst.cost >= cm.social_cost(&eq.flow).unwrap() - opts.vi_tol);
    }
}
