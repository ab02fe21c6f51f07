//! Parameter sweeps over the built-in fixture families, emitting CSV rows of
//! measured price of anarchy / bicriteria against their theoretical bounds.

use thiserror::Error;

use roadgame_core::bounds::{self, Bound};
use roadgame_core::equilibrium;
use roadgame_core::fixtures::{self, Fixture, FixtureError};
use roadgame_core::optimum::{self, OptimumError};

use crate::analysis::AnalysisOptions;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("fixture '{0}' has no sweepable parameter")]
    NotSweepable(String),
    #[error("sweep evaluation failed at param {param}: {message}")]
    Evaluation { param: f64, message: String },
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub param: f64,
    pub poa_measured: f64,
    pub poa_bound: Bound,
    pub bicriteria_measured: f64,
    pub bicriteria_bound: Bound,
}

pub const CSV_HEADER: &str = "param,poa_measured,poa_bound,bicriteria_measured,bicriteria_bound";

fn fmt_bound(b: Bound) -> String {
    match b {
        Bound::Finite(v) => format!("{v:.9}"),
        Bound::Unbounded => "inf".into(),
    }
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{:.9},{:.9},{},{:.9},{}\n",
            r.param,
            r.poa_measured,
            fmt_bound(r.poa_bound),
            r.bicriteria_measured,
            fmt_bound(r.bicriteria_bound),
        ));
    }
    out
}

/// The parameter grid start, start+step, ..., clamped onto `end`.
pub fn param_values(start: f64, end: f64, step: f64) -> Result<Vec<f64>, SweepError> {
    if !(step > 0.0) {
        return Err(SweepError::InvalidRange(format!("step must be > 0, got {step}")));
    }
    if start > end {
        return Err(SweepError::InvalidRange(format!(
            "start {start} exceeds end {end}"
        )));
    }
    let mut values = Vec::new();
    let mut i = 0usize;
    loop {
        let mut p = start + i as f64 * step;
        if p > end + step * 1e-9 {
            break;
        }
        if (p - end).abs() <= step * 1e-9 {
            p = end;
        }
        values.push(p);
        if p == end {
            break;
        }
        i += 1;
    }
    Ok(values)
}

pub fn sweep(
    fixture_name: &str,
    start: f64,
    end: f64,
    step: f64,
    opts: &AnalysisOptions,
) -> Result<Vec<SweepRow>, SweepError> {
    // reject unknown names and non-parametric fixtures up front
    let probe = fixtures::by_name(fixture_name, None)?;
    if probe.parameter.is_none() {
        return Err(SweepError::NotSweepable(fixture_name.into()));
    }

    let values = param_values(start, end, step)?;
    let mut rows = Vec::with_capacity(values.len());
    for &param in &values {
        let fixture = fixtures::by_name(fixture_name, Some(param))?;
        rows.push(evaluate(&fixture, param, opts)?);
    }
    Ok(rows)
}

fn evaluate(fixture: &Fixture, param: f64, opts: &AnalysisOptions) -> Result<SweepRow, SweepError> {
    let solver_opts = opts.solver();
    let optimum_opts = opts.optimum();
    let fail = |message: String| SweepError::Evaluation { param, message };

    let worst = equilibrium::worst_equilibrium(&fixture.network, &fixture.cost, &solver_opts)
        .map_err(|e| fail(e.to_string()))?;
    let opt = optimum::social_optimum(&fixture.network, &fixture.cost, &optimum_opts)
        .map_err(|e| fail(e.to_string()))?;
    let poa = match optimum::ratio_or_zero_error(worst.cost, &opt) {
        Ok(v) => v,
        Err(OptimumError::ZeroOptimalCost) => f64::INFINITY,
        Err(e) => return Err(fail(e.to_string())),
    };
    let bc = optimum::empirical_bicriteria(&fixture.network, &fixture.cost, worst.cost, &optimum_opts)
        .map_err(|e| fail(e.to_string()))?;

    let (poa_bound, bicriteria_bound) = match bounds::bounds_pairwise(&fixture.cost) {
        Ok(report) => (report.poa_bound, Bound::Finite(report.bicriteria_bound)),
        Err(_) => match &fixture.split {
            Some((q, p)) => match bounds::validate_split(fixture.cost.coefficients(), q, p) {
                Ok(split) => {
                    let report = bounds::bounds_nonseparable(&split);
                    (report.poa_bound, Bound::Finite(report.bicriteria_bound))
                }
                Err(_) => (Bound::Unbounded, Bound::Unbounded),
            },
            None => (Bound::Unbounded, Bound::Unbounded),
        },
    };

    Ok(SweepRow {
        param,
        poa_measured: poa,
        poa_bound,
        bicriteria_measured: bc.scale,
        bicriteria_bound,
    })
}
