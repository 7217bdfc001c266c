use serde::Serialize;

use super::experiment::{loglog, TailReport, ThresholdMode};
use crate::arith::PrimeWindow;
use crate::error::{Error, Result};
use crate::model::BernoulliModel;
use crate::rate::{candidate_exponents, ldp_bracket, ldp_point, Interval, LdpPoint, PoissonLimit};
use crate::sigma::{ols, synthetic_sigma, SigmaTable, SyntheticRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitStatus {
    Ok,
    /// Every tail count is zero.
    NoEvents,
    /// Fewer than three sizes with nonzero tails.
    TooFewPoints,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentFit {
    pub epsilon: f64,
    pub mode: ThresholdMode,
    pub status: FitStatus,
    /// Slope of `log(tail / total)` against `Delta log log B`.
    pub slope: Option<f64>,
    /// `(B, log(tail / total) / (Delta log log B))` for nonzero tails.
    pub normalized: Vec<(u64, f64)>,
    pub printed_exponent: f64,
    pub assembled_exponent: f64,
    /// `-inf I` over `[0, epsilon)` for the limit `e^t - 1`.
    pub limit_exponent: f64,
    /// Exact model-side values at the same sizes, when a table is supplied.
    pub model_side: Vec<LdpPoint>,
}

/// Regresses the empirical log tail fractions against `Delta log log B`
/// for every `(epsilon, mode)` of the report. When `table` is given, the
/// model-side values `(1/a_B) log P[S_B < epsilon a_B]` over `(lo, B]` are
/// attached for comparison.
pub fn exponent_regression(report: &TailReport, table: Option<&SigmaTable>) -> Result<Vec<ExponentFit>> {
    let delta = report.delta;
    let mut keys: Vec<(f64, ThresholdMode)> = Vec::new();
    for r in &report.rows {
        if !keys.iter().any(|k| k.0 == r.epsilon && k.1 == r.mode) {
            keys.push((r.epsilon, r.mode));
        }
    }
    let mut fits = Vec::new();
    for (epsilon, mode) in keys {
        let rows: Vec<_> = report
            .rows
            .iter()
            .filter(|r| r.epsilon == epsilon && r.mode == mode)
            .collect();
        let pts: Vec<(u64, f64, f64)> = rows
            .iter()
            .filter(|r| r.tail > 0)
            .map(|r| (r.b, delta * loglog(r.b as f64), r.fraction.ln()))
            .collect();
        let (status, slope) = if pts.is_empty() {
            (FitStatus::NoEvents, None)
        } else if pts.len() < 3 {
            (FitStatus::TooFewPoints, None)
        } else {
            let xs: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.2).collect();
            (FitStatus::Ok, Some(ols(&xs, &ys).0))
        };
        let (printed, assembled) = candidate_exponents(epsilon, delta);
        let interval = Interval::half_open(0.0, epsilon)?;
        let limit = ldp_bracket(&PoissonLimit { delta: 1.0 }, &interval)?.closure;
        let model_side = match table {
            Some(t) => rows
                .iter()
                .map(|r| {
                    let hi = r.b.min(t.window().hi);
                    let m = BernoulliModel::<f64>::from_table(t, PrimeWindow::new(t.window().lo, hi))?;
                    ldp_point(&m, r.b as f64, delta, &interval)
                })
                .collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        fits.push(ExponentFit {
            epsilon,
            mode,
            status,
            slope,
            normalized: pts.iter().map(|p| (p.0, p.2 / p.1)).collect(),
            printed_exponent: printed,
            assembled_exponent: assembled,
            limit_exponent: limit,
            model_side,
        });
    }
    Ok(fits)
}

#[derive(Clone, Debug, Serialize)]
pub struct SyntheticExponentReport {
    pub epsilon: f64,
    pub delta: f64,
    pub printed_exponent: f64,
    pub assembled_exponent: f64,
    /// `-I(epsilon)` for the limit `e^t - 1`.
    pub target: f64,
    pub rows: Vec<LdpPoint>,
    /// Regression slope of `log P` against `a_B` over the sizes.
    pub slope: Option<f64>,
    /// `|value - target|` at the largest size.
    pub gap_at_largest: f64,
}

/// Model-side tail exponent for the synthetic table `sigma_p = min(Delta/p, 1)`
/// over `(2, B]`: `(1/a_B) log P[S_B < epsilon a_B]` from the exact pmf.
pub fn synthetic_exponent_report(epsilon: f64, delta: f64, b_grid: &[u64]) -> Result<SyntheticExponentReport> {
    if b_grid.is_empty() || b_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("the B grid must be nonempty and increasing"));
    }
    let b_max = *b_grid.last().unwrap();
    let table = synthetic_sigma(&SyntheticRule::DeltaOverP { delta }, PrimeWindow::new(2, b_max))?;
    let interval = Interval::half_open(0.0, epsilon)?;
    let target = ldp_bracket(&PoissonLimit { delta: 1.0 }, &interval)?.closure;
    let rows = b_grid
        .iter()
        .map(|&b| {
            let m = BernoulliModel::<f64>::from_table(&table, PrimeWindow::new(2, b))?;
            ldp_point(&m, b as f64, delta, &interval)
        })
        .collect::<Result<Vec<_>>>()?;
    let finite: Vec<&LdpPoint> = rows.iter().filter(|r| r.value.is_finite()).collect();
    let slope = (finite.len() >= 2).then(|| {
        let xs: Vec<f64> = finite.iter().map(|r| r.a_b).collect();
        let ys: Vec<f64> = finite.iter().map(|r| r.probability.ln()).collect();
        ols(&xs, &ys).0
    });
    let (printed, assembled) = candidate_exponents(epsilon, delta);
    let gap_at_largest = (rows.last().unwrap().value - target).abs();
    Ok(SyntheticExponentReport {
        epsilon,
        delta,
        printed_exponent: printed,
        assembled_exponent: assembled,
        target,
        rows,
        slope,
        gap_at_largest,
    })
}
