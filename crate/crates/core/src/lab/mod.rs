//! The empirical side: points of bounded height, tail counts and exponents.

mod enumerate;
mod experiment;
mod regression;

pub use enumerate::{
    check_point_budget, enumerate_points, for_each_point, par_fold_points, point_count, try_par_fold_points,
    DEFAULT_POINT_BUDGET,
};
pub use experiment::{
    set_algebra_audit, tail_count, truncation_gap, ExperimentConfig, GapRow, SetAlgebraAudit, TailReport, TailRow,
    ThresholdMode, WindowStrategy,
};
pub use regression::{exponent_regression, synthetic_exponent_report, ExponentFit, FitStatus, SyntheticExponentReport};
