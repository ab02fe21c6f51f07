//! Full instance analysis: equilibria, optimum, price of anarchy, empirical
//! bicriteria, structural classification, and the applicable bounds with
//! satisfaction flags.

use serde::Serialize;
use thiserror::Error;

use roadgame_core::bounds::{
    self, BetaMethod, BetaOutcome, Bound, BoundsError,
};
use roadgame_core::equilibrium::{self, SolverOptions};
use roadgame_core::optimum::{self, OptimumError, OptimumOptions};

use crate::input::Instance;

/// Tolerance slack when flagging measured-vs-bound satisfaction.
pub const BOUND_SLACK: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("analysis failed: {0}")]
    Failed(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisOptions {
    pub seed: u64,
    pub vi_tol: f64,
    pub grid_steps: usize,
    pub max_paths: usize,
    #[serde(skip)]
    pub beta_oracle_steps: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            seed: 0,
            vi_tol: 1e-8,
            grid_steps: 200,
            max_paths: 1000,
            beta_oracle_steps: 400,
        }
    }
}

impl AnalysisOptions {
    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            vi_tol: self.vi_tol,
            random_seed: self.seed,
            max_paths: self.max_paths,
            ..Default::default()
        }
    }

    pub fn optimum(&self) -> OptimumOptions {
        OptimumOptions {
            grid_steps: self.grid_steps,
            random_seed: self.seed,
            max_paths: self.max_paths,
            ..Default::default()
        }
    }
}

/// A report value that may be infinite or undefined for the instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReportValue {
    Value(f64),
    Unbounded,
    NotApplicable,
}

impl ReportValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            ReportValue::Value(v) => Some(*v),
            _ => None,
        }
    }

    pub fn from_bound(b: Bound) -> Self {
        match b {
            Bound::Finite(v) => ReportValue::Value(v),
            Bound::Unbounded => ReportValue::Unbounded,
        }
    }
}

impl std::fmt::Display for ReportValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReportValue::Value(v) => write!(f, "{v}"),
            ReportValue::Unbounded => write!(f, "inf"),
            ReportValue::NotApplicable => write!(f, "n/a"),
        }
    }
}

impl Serialize for ReportValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ReportValue::Value(v) => s.serialize_f64(*v),
            ReportValue::Unbounded => s.serialize_str("inf"),
            ReportValue::NotApplicable => s.serialize_str("n/a"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumSection {
    pub worst_cost: f64,
    pub worst_vi_residual: f64,
    pub worst_support_size: usize,
    pub exhaustive: bool,
    pub candidate_costs: Vec<f64>,
    pub found_cost: f64,
    pub found_vi_residual: f64,
    pub found_converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimumSection {
    pub cost: f64,
    pub certificate: String,
    pub gap_estimate: ReportValue,
}

#[derive(Debug, Clone, Serialize)]
pub struct BicriteriaSection {
    pub scale: ReportValue,
    pub scaled_cost: ReportValue,
    pub target_cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BetaSection {
    pub value: ReportValue,
    pub proof_bound: ReportValue,
    pub method: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundSection {
    pub theorem: String,
    pub k: ReportValue,
    pub poa_bound: ReportValue,
    pub bicriteria_bound: ReportValue,
    pub poa_satisfied: bool,
    pub bicriteria_satisfied: bool,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicitySection {
    pub elementwise: bool,
    pub operator: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_inner_product: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub instance: String,
    pub separability: String,
    pub degree_of_asymmetry: ReportValue,
    pub equilibrium: EquilibriumSection,
    pub optimum: OptimumSection,
    pub price_of_anarchy: ReportValue,
    pub bicriteria: BicriteriaSection,
    pub beta_at_equilibrium: BetaSection,
    pub bounds: Vec<BoundSection>,
    pub monotonicity: MonotonicitySection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split_error: Option<String>,
    pub options: AnalysisOptions,
    pub converged: bool,
}

pub fn analyze(instance: &Instance, opts: &AnalysisOptions) -> Result<AnalysisReport, AnalysisError> {
    let solver_opts = opts.solver();
    let optimum_opts = opts.optimum();
    let net = &instance.network;
    let cost = &instance.cost;

    let worst = equilibrium::worst_equilibrium(net, cost, &solver_opts)
        .map_err(|e| AnalysisError::Failed(e.to_string()))?;
    let found = equilibrium::solve_equilibrium(net, cost, &solver_opts)
        .map_err(|e| AnalysisError::Failed(e.to_string()))?;
    let found_cost = cost
        .social_cost(&found.flow)
        .map_err(|e| AnalysisError::Failed(e.to_string()))?;

    let opt = optimum::social_optimum(net, cost, &optimum_opts)
        .map_err(|e| AnalysisError::Failed(e.to_string()))?;

    let poa = match optimum::ratio_or_zero_error(worst.cost, &opt) {
        Ok(v) => ReportValue::Value(v),
        Err(OptimumError::ZeroOptimalCost) => ReportValue::Unbounded,
        Err(e) => return Err(AnalysisError::Failed(e.to_string())),
    };

    let bicriteria = match optimum::empirical_bicriteria(net, cost, worst.cost, &optimum_opts) {
        Ok(bc) => BicriteriaSection {
            scale: ReportValue::Value(bc.scale),
            scaled_cost: ReportValue::Value(bc.scaled_cost),
            target_cost: worst.cost,
            error: None,
        },
        Err(e) => BicriteriaSection {
            scale: ReportValue::NotApplicable,
            scaled_cost: ReportValue::NotApplicable,
            target_cost: worst.cost,
            error: Some(e.to_string()),
        },
    };

    let degree_of_asymmetry = match cost.degree_of_asymmetry() {
        Ok(k) => ReportValue::Value(k),
        Err(_) => ReportValue::NotApplicable,
    };

    let beta_at_equilibrium = beta_section(cost, worst.equilibrium.flow.as_slice(), opts);

    let mut sections = Vec::new();
    let mut split_error = None;
    if let Ok(report) = bounds::bounds_pairwise(cost) {
        let beta_class = report.k / 4.0;
        sections.push(bound_section(
            "beta-class",
            ReportValue::Value(report.k),
            ReportValue::from_bound(bounds::poa_bound_from_beta(beta_class)),
            ReportValue::Value(bounds::bicriteria_bound_from_beta(beta_class)),
            format!("beta(C) <= k/4 with k = {}", report.k),
            &poa,
            &bicriteria,
        ));
        sections.push(bound_section(
            report.theorem.label(),
            ReportValue::Value(report.k),
            ReportValue::from_bound(report.poa_bound),
            ReportValue::Value(report.bicriteria_bound),
            report.reason.clone(),
            &poa,
            &bicriteria,
        ));
    }
    if let Some((q, p)) = &instance.split {
        match bounds::validate_split(cost.coefficients(), q, p) {
            Ok(split) => {
                let report = bounds::bounds_nonseparable(&split);
                sections.push(bound_section(
                    report.theorem.label(),
                    ReportValue::Value(report.k),
                    ReportValue::from_bound(report.poa_bound),
                    ReportValue::Value(report.bicriteria_bound),
                    report.reason.clone(),
                    &poa,
                    &bicriteria,
                ));
            }
            Err(e) => split_error = Some(e.to_string()),
        }
    }

    let monotonicity = MonotonicitySection {
        elementwise: cost.is_elementwise_monotone(),
        operator: cost.is_monotone_operator(1e-9),
        witness_inner_product: cost.monotonicity_witness().map(|w| w.inner_product),
    };

    let converged = worst.equilibrium.vi_residual <= solver_opts.vi_tol && found.converged;

    Ok(AnalysisReport {
        instance: instance.name.clone(),
        separability: cost.classify().to_string(),
        degree_of_asymmetry,
        equilibrium: EquilibriumSection {
            worst_cost: worst.cost,
            worst_vi_residual: worst.equilibrium.vi_residual,
            worst_support_size: worst.equilibrium.support.len(),
            exhaustive: worst.exhaustive,
            candidate_costs: worst.candidates.iter().map(|c| c.cost).collect(),
            found_cost,
            found_vi_residual: found.vi_residual,
            found_converged: found.converged,
            iterations: found.iterations,
        },
        optimum: OptimumSection {
            cost: opt.cost,
            certificate: opt.certificate.label().to_string(),
            gap_estimate: match opt.gap_estimate() {
                Some(g) => ReportValue::Value(g),
                None => ReportValue::NotApplicable,
            },
        },
        price_of_anarchy: poa,
        bicriteria,
        beta_at_equilibrium,
        bounds: sections,
        monotonicity,
        split_error,
        options: opts.clone(),
        converged,
    })
}

fn beta_section(
    cost: &roadgame_core::cost::CostMatrix,
    v: &[f64],
    opts: &AnalysisOptions,
) -> BetaSection {
    match bounds::beta_closed_form(cost, v) {
        Ok(beta) => BetaSection {
            value: ReportValue::Value(beta.value),
            proof_bound: ReportValue::Value(beta.proof_bound),
            method: method_label(beta.method).into(),
        },
        Err(
            BoundsError::NotPairwiseSeparable
            | BoundsError::DegenerateBlock { .. }
            | BoundsError::BlockRowsDiffer { .. },
        ) => match bounds::beta_grid_oracle(cost, v, opts.beta_oracle_steps) {
            Ok(BetaOutcome::Finite(beta)) => BetaSection {
                value: ReportValue::Value(beta.value),
                proof_bound: ReportValue::Value(beta.proof_bound),
                method: method_label(beta.method).into(),
            },
            Ok(BetaOutcome::Unbounded { .. }) => BetaSection {
                value: ReportValue::Unbounded,
                proof_bound: ReportValue::Unbounded,
                method: "grid-oracle".into(),
            },
            Err(_) => BetaSection {
                value: ReportValue::NotApplicable,
                proof_bound: ReportValue::NotApplicable,
                method: "unavailable".into(),
            },
        },
        Err(_) => BetaSection {
            value: ReportValue::NotApplicable,
            proof_bound: ReportValue::NotApplicable,
            method: "unavailable".into(),
        },
    }
}

fn method_label(m: BetaMethod) -> &'static str {
    match m {
        BetaMethod::ClosedForm => "closed-form",
        BetaMethod::GridOracle => "grid-oracle",
    }
}

#[allow(clippy::too_many_arguments)]
fn bound_section(
    theorem: &str,
    k: ReportValue,
    poa_bound: ReportValue,
    bicriteria_bound: ReportValue,
    reason: String,
    poa_measured: &ReportValue,
    bicriteria_measured: &BicriteriaSection,
) -> BoundSection {
    let poa_satisfied = match (poa_measured.value(), poa_bound.value()) {
        (Some(m), Some(b)) => m <= b + BOUND_SLACK,
        (_, None) => matches!(poa_bound, ReportValue::Unbounded),
        (None, Some(_)) => false,
    };
    let bicriteria_satisfied = match (bicriteria_measured.scale.value(), bicriteria_bound.value()) {
        (Some(m), Some(b)) => m <= b + BOUND_SLACK,
        (_, None) => matches!(bicriteria_bound, ReportValue::Unbounded),
        (None, Some(_)) => false,
    };
    BoundSection {
        theorem: theorem.into(),
        k,
        poa_bound,
        bicriteria_bound,
        poa_satisfied,
        bicriteria_satisfied,
        reason,
    }
}

/// Human-readable rendering of the report.
pub fn render_text(report: &AnalysisReport) -> String {
    let mut out = String::new();
    use std::fmt::Write;
    let _ = writeln!(out, "instance: {}", report.instance);
    let _ = writeln!(out, "separability: {}", report.separability);
    let _ = writeln!(out, "degree of asymmetry k: {}", report.degree_of_asymmetry);
    let _ = writeln!(
        out,
        "elementwise monotone: {}; monotone operator: {}",
        report.monotonicity.elementwise, report.monotonicity.operator
    );
    if let Some(w) = report.monotonicity.witness_inner_product {
        let _ = writeln!(out, "monotonicity witness inner product: {w}");
    }
    let eq = &report.equilibrium;
    let _ = writeln!(
        out,
        "worst equilibrium cost: {} (vi residual {:.3e}, support {}, exhaustive {})",
        eq.worst_cost, eq.worst_vi_residual, eq.worst_support_size, eq.exhaustive
    );
    let _ = writeln!(
        out,
        "equilibria found by enumeration: {:?}",
        eq.candidate_costs
    );
    let _ = writeln!(
        out,
        "iterative equilibrium cost: {} (vi residual {:.3e}, converged {})",
        eq.found_cost, eq.found_vi_residual, eq.found_converged
    );
    let _ = writeln!(
        out,
        "social optimum: {} ({}, gap {})",
        report.optimum.cost, report.optimum.certificate, report.optimum.gap_estimate
    );
    let _ = writeln!(out, "price of anarchy: {}", report.price_of_anarchy);
    let _ = writeln!(
        out,
        "empirical bicriteria: {} (scaled cost {}, target {})",
        report.bicriteria.scale, report.bicriteria.scaled_cost, report.bicriteria.target_cost
    );
    let _ = writeln!(
        out,
        "beta at worst equilibrium: {} (proof-side {}, {})",
        report.beta_at_equilibrium.value,
        report.beta_at_equilibrium.proof_bound,
        report.beta_at_equilibrium.method
    );
    for b in &report.bounds {
        let _ = writeln!(
            out,
            "bound [{}]: k = {}, poa <= {} (ok: {}), bicriteria <= {} (ok: {})",
            b.theorem, b.k, b.poa_bound, b.poa_satisfied, b.bicriteria_bound, b.bicriteria_satisfied
        );
    }
    if let Some(err) = &report.split_error {
        let _ = writeln!(out, "split rejected: {err}");
    }
    let _ = writeln!(out, "converged: {}", report.converged);
    out
}
