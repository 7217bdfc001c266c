//! Scaled cumulant limits, their Legendre transforms and the large-deviation
//! bracket for intervals.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::BernoulliModel;

/// Search bracket for the supremum over `t`.
pub const T_BRACKET: f64 = 50.0;
const TOLERANCE: f64 = 1e-12;
const FLAT_SLOPE: f64 = 1e-9;

/// A convex function `Lambda` finite on the real line.
pub trait CumulantFn: Sync {
    fn value(&self, t: f64) -> f64;

    fn derivative(&self, t: f64) -> f64 {
        let h = 1e-6 * (1.0 + t.abs());
        (self.value(t + h) - self.value(t - h)) / (2.0 * h)
    }
}

/// `Lambda(t) = Delta (e^t - 1)`, the limit of the scaled log-MGF.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonLimit {
    pub delta: f64,
}

impl CumulantFn for PoissonLimit {
    fn value(&self, t: f64) -> f64 {
        self.delta * t.exp_m1()
    }

    fn derivative(&self, t: f64) -> f64 {
        self.delta * t.exp()
    }
}

impl<F: Fn(f64) -> f64 + Sync> CumulantFn for F {
    fn value(&self, t: f64) -> f64 {
        self(t)
    }
}

/// A value of a rate function; divergence is an explicit marker.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateValue {
    Finite(f64),
    Infinite,
}

impl RateValue {
    pub fn is_infinite(&self) -> bool {
        matches!(self, RateValue::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            RateValue::Finite(v) => Some(*v),
            RateValue::Infinite => None,
        }
    }

    /// `-I` as a real number, with `-infinity` for the marker.
    pub fn negated(&self) -> f64 {
        match self {
            RateValue::Finite(v) => -v,
            RateValue::Infinite => f64::NEG_INFINITY,
        }
    }
}

impl fmt::Display for RateValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateValue::Finite(v) => write!(f, "{v:.12e}"),
            RateValue::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for RateValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RateValue::Finite(v) => s.serialize_f64(*v),
            RateValue::Infinite => s.serialize_str("inf"),
        }
    }
}

/// `I(x) = sup_t { t x - Lambda(t) }`.
///
/// The stationary point `Lambda'(t) = x` is located by safeguarded Newton
/// iteration inside `[-50, 50]`. When it lies outside the bracket the slope
/// at twice the boundary decides: a slope that stays away from zero means
/// the supremum diverges, a vanishing slope means it is attained in the
/// limit and the boundary value is returned. Anything else is reported as
/// non-convergence together with the boundary value.
pub fn legendre_transform(lambda: &dyn CumulantFn, x: f64) -> Result<RateValue> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("x = {x} is not finite")));
    }
    let g = |t: f64| t * x - lambda.value(t);
    let slope = |t: f64| x - lambda.derivative(t);
    let (lo, hi) = (-T_BRACKET, T_BRACKET);
    let at_zero = g(0.0);
    for (edge, inside_sign) in [(lo, -1.0), (hi, 1.0)] {
        // the supremum lies beyond `edge` when g still increases outward there
        let s = slope(edge);
        if s * inside_sign > 0.0 {
            let far = slope(2.0 * edge);
            if (far * inside_sign) > FLAT_SLOPE {
                return Ok(RateValue::Infinite);
            }
            if far.abs() <= FLAT_SLOPE {
                return Ok(RateValue::Finite(g(edge).max(at_zero)));
            }
            return Err(Error::NonConvergence {
                t: edge,
                value: g(edge),
            });
        }
    }
    let (mut a, mut b) = (lo, hi);
    let mut t = 0.0f64.clamp(a, b);
    for _ in 0..400 {
        let s = slope(t);
        if s > 0.0 {
            a = t;
        } else {
            b = t;
        }
        let d = -lambda.derivative_second(t);
        let newton = if d < 0.0 { t - s / d } else { f64::NAN };
        let next = if newton.is_finite() && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if (next - t).abs() <= TOLERANCE * (1.0 + t.abs()) || b - a <= TOLERANCE {
            t = next;
            break;
        }
        t = next;
    }
    Ok(RateValue::Finite(g(t).max(at_zero)))
}

trait SecondDerivative {
    fn derivative_second(&self, t: f64) -> f64;
}

impl<T: CumulantFn + ?Sized> SecondDerivative for T {
    fn derivative_second(&self, t: f64) -> f64 {
        let h = 1e-5 * (1.0 + t.abs());
        (self.derivative(t + h) - self.derivative(t - h)) / (2.0 * h)
    }
}

/// `Delta I(x / Delta) = x log(x / Delta) - x + Delta`, the transform of
/// `Delta (e^t - 1)` in closed form.
pub fn poisson_rate(delta: f64, x: f64) -> RateValue {
    if x < 0.0 {
        RateValue::Infinite
    } else if x == 0.0 {
        RateValue::Finite(delta)
    } else {
        RateValue::Finite(x * (x / delta).ln() - x + delta)
    }
}

/// The alternative expression `x log x + 1 - log x`, rescaled by `Delta`
/// in the same way, reported next to the transform for comparison.
pub fn printed_rate(delta: f64, x: f64) -> RateValue {
    if x <= 0.0 {
        RateValue::Infinite
    } else {
        let y = x / delta;
        RateValue::Finite(delta * (y * y.ln() + 1.0 - y.ln()))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RatePoint {
    pub x: f64,
    pub rate: RateValue,
    pub closed_form: RateValue,
    pub closed_form_residual: Option<f64>,
    pub printed_form: RateValue,
    pub printed_form_residual: Option<f64>,
}

/// Tabulated transform of a Poisson limit with both closed forms.
#[derive(Clone, Debug, Serialize)]
pub struct RateFunction {
    pub delta: f64,
    pub grid: Vec<RatePoint>,
}

fn residual(a: RateValue, b: RateValue) -> Option<f64> {
    match (a, b) {
        (RateValue::Finite(u), RateValue::Finite(v)) => Some(u - v),
        (RateValue::Infinite, RateValue::Infinite) => Some(0.0),
        _ => None,
    }
}

impl RateFunction {
    pub fn tabulate(delta: f64, xs: &[f64]) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::invalid("Delta must be positive"));
        }
        let lambda = PoissonLimit { delta };
        let grid = xs
            .iter()
            .map(|&x| {
                let rate = legendre_transform(&lambda, x)?;
                let closed_form = poisson_rate(delta, x);
                let printed_form = printed_rate(delta, x);
                Ok(RatePoint {
                    x,
                    rate,
                    closed_form,
                    closed_form_residual: residual(rate, closed_form),
                    printed_form,
                    printed_form_residual: residual(rate, printed_form),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { delta, grid })
    }

    pub fn value_at(&self, x: f64) -> Option<RateValue> {
        self.grid.iter().find(|p| p.x == x).map(|p| p.rate)
    }

    /// `I >= 0` at every finite grid point.
    pub fn is_nonnegative(&self) -> bool {
        self.grid.iter().all(|p| p.rate.finite().is_none_or(|v| v >= -1e-12))
    }

    /// Discrete convexity over consecutive finite grid points (sorted by x).
    pub fn is_convex(&self, tol: f64) -> bool {
        let mut pts: Vec<(f64, f64)> = self
            .grid
            .iter()
            .filter_map(|p| p.rate.finite().map(|v| (p.x, v)))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts.windows(3).all(|w| {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            let (x2, y2) = w[2];
            let interp = y0 + (y2 - y0) * (x1 - x0) / (x2 - x0);
            y1 <= interp + tol * (1.0 + interp.abs())
        })
    }

    /// CSV with columns `x,I` followed by the closed forms and residuals.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |r| format!("{r:.3e}"));
        let mut out = String::from("x,I,closed_form,closed_form_residual,printed_form,printed_form_residual\n");
        for p in &self.grid {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.x,
                p.rate,
                p.closed_form,
                opt(p.closed_form_residual),
                p.printed_form,
                opt(p.printed_form_residual)
            ));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub value: f64,
    pub closed: bool,
}

/// An interval of the real line; endpoints may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Endpoint,
    pub hi: Endpoint,
}

impl Interval {
    pub fn new(lo: f64, lo_closed: bool, hi: f64, hi_closed: bool) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::invalid(format!("[{lo}, {hi}] is not an interval")));
        }
        Ok(Self {
            lo: Endpoint {
                value: lo,
                closed: lo_closed && lo.is_finite(),
            },
            hi: Endpoint {
                value: hi,
                closed: hi_closed && hi.is_finite(),
            },
        })
    }

    /// `[lo, hi)`.
    pub fn half_open(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, true, hi, false)
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo.closed { x >= self.lo.value } else { x > self.lo.value };
        let below = if self.hi.closed { x <= self.hi.value } else { x < self.hi.value };
        above && below
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo.closed { '[' } else { '(' },
            self.lo.value,
            self.hi.value,
            if self.hi.closed { ']' } else { ')' }
        )
    }
}

/// `-inf I` over the interior and over the closure of an interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bracket {
    pub interior: f64,
    pub closure: f64,
}

/// Infimum of a convex rate function with minimiser `mean` over the closed
/// interval `[lo, hi]`.
fn inf_over(lambda: &dyn CumulantFn, mean: f64, lo: f64, hi: f64) -> Result<RateValue> {
    if hi < 0.0 || lo > hi {
        return Ok(RateValue::Infinite);
    }
    let x = mean.clamp(lo.max(0.0), hi);
    legendre_transform(lambda, x)
}

/// The analytic bracket `(-inf_{A°} I, -inf_{cl A} I)`.
pub fn ldp_bracket(lambda: &dyn CumulantFn, interval: &Interval) -> Result<Bracket> {
    let mean = lambda.derivative(0.0);
    let (lo, hi) = (interval.lo.value, interval.hi.value);
    let closure = inf_over(lambda, mean, lo, hi)?;
    // the interior is (lo, hi); rate is infinite on (-inf, 0), so an
    // interior ending at or below 0 carries no finite rate
    let interior = if lo >= hi || hi <= 0.0 {
        RateValue::Infinite
    } else {
        inf_over(lambda, mean, lo, hi)?
    };
    Ok(Bracket {
        interior: interior.negated(),
        closure: closure.negated(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LdpPoint {
    pub b: f64,
    pub a_b: f64,
    pub probability: f64,
    /// `(1 / a_B) log P[S_B / a_B in A]`, `-inf` when the probability is 0.
    pub value: f64,
}

/// `(1 / a_B) log P[S_B / a_B in A]` for one model, from the exact pmf,
/// with `a_B = Delta log log B`.
pub fn ldp_point(model: &BernoulliModel<f64>, b: f64, delta: f64, interval: &Interval) -> Result<LdpPoint> {
    if !(b > std::f64::consts::E.exp()) {
        return Err(Error::invalid(format!("B = {b} must exceed e^e")));
    }
    let a_b = delta * b.ln().ln();
    let lo_k = if interval.lo.value <= 0.0 && !interval.lo.value.is_nan() {
        0.0
    } else {
        interval.lo.value * a_b
    };
    let hi_finite = interval.hi.value.is_finite();
    let cap = if hi_finite {
        ((interval.hi.value * a_b).floor().max(0.0) as usize + 1).min(model.len())
    } else {
        ((lo_k.ceil().max(0.0)) as usize + 1).min(model.len())
    };
    let pmf = model.exact_pmf(cap);
    let mut prob = 0.0;
    for (k, p) in pmf.probs.iter().enumerate() {
        if interval.contains(k as f64 / a_b) {
            prob += p;
        }
    }
    if !hi_finite && interval.contains((cap + 1) as f64 / a_b) {
        prob += pmf.overflow;
    }
    let value = if prob > 0.0 { prob.ln() / a_b } else { f64::NEG_INFINITY };
    Ok(LdpPoint {
        b,
        a_b,
        probability: prob,
        value,
    })
}

/// The two closed-form exponent candidates at `(epsilon, Delta)`:
/// `epsilon (log epsilon - 1 - log Delta)` and
/// `epsilon (1 + log Delta - log epsilon)`.
pub fn candidate_exponents(epsilon: f64, delta: f64) -> (f64, f64) {
    (
        epsilon * (epsilon.ln() - 1.0 - delta.ln()),
        epsilon * (1.0 + delta.ln() - epsilon.ln()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT: PoissonLimit = PoissonLimit { delta: 1.0 };

    #[test]
    fn transform_examples() {
        assert_eq!(legendre_transform(&UNIT, 1.0).unwrap(), RateValue::Finite(0.0));
        assert_eq!(legendre_transform(&UNIT, -0.5).unwrap(), RateValue::Infinite);
        let two = legendre_transform(&UNIT, 2.0).unwrap().finite().unwrap();
        assert!((two - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-12);
        assert!((two - 0.386294).abs() < 1e-6);
        let zero = legendre_transform(&UNIT, 0.0).unwrap().finite().unwrap();
        assert!((zero - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_closed_form_on_grid() {
        for x in [0.01, 0.1, 0.5, 1.0, 2.0, 10.0] {
            let v = legendre_transform(&UNIT, x).unwrap().finite().unwrap();
            let c = x * x.ln() - x + 1.0;
            assert!((v - c).abs() < 1e-9, "x={x}: {v} vs {c}");
        }
        for delta in [0.5, 2.0] {
            let l = PoissonLimit { delta };
            for x in [0.3, 1.0, 4.0] {
                let v = legendre_transform(&l, x).unwrap().finite().unwrap();
                assert!((v - poisson_rate(delta, x).finite().unwrap()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn generic_closure_route() {
        let quad = |t: f64| 0.5 * t * t;
        let v = legendre_transform(&quad, 3.0).unwrap().finite().unwrap();
        assert!((v - 4.5).abs() < 1e-8);
        // linear Lambda: sup diverges away from the slope
        let lin = |t: f64| 2.0 * t;
        assert_eq!(legendre_transform(&lin, 3.0).unwrap(), RateValue::Infinite);
    }

    #[test]
    fn tabulated_function_properties() {
        let xs: Vec<f64> = (-4..=60).map(|i| i as f64 * 0.05).collect();
        let f = RateFunction::tabulate(1.0, &xs).unwrap();
        assert!(f.is_nonnegative());
        assert!(f.is_convex(1e-9));
        assert_eq!(f.value_at(1.0), Some(RateValue::Finite(0.0)));
        assert!(f.value_at(-0.1).unwrap().is_infinite());
        let row = f.grid.iter().find(|p| p.x == 2.0).unwrap();
        assert!(row.closed_form_residual.unwrap().abs() < 1e-9);
        assert!(row.printed_form_residual.unwrap().abs() > 0.1);
        assert!(f.to_csv().starts_with("x,I,"));
    }

    #[test]
    fn bracket_examples() {
        let eps = 0.5;
        let br = ldp_bracket(&UNIT, &Interval::half_open(0.0, eps).unwrap()).unwrap();
        let want = -(eps * eps.ln() + 1.0 - eps);
        assert!((br.interior - want).abs() < 1e-9 && (br.closure - want).abs() < 1e-9);
        assert!((want + 0.153426).abs() < 1e-6);
        let br = ldp_bracket(&UNIT, &Interval::new(0.5, true, 2.0, true).unwrap()).unwrap();
        assert_eq!((br.interior, br.closure), (0.0, 0.0));
        let br = ldp_bracket(&UNIT, &Interval::new(-2.0, false, -1.0, false).unwrap()).unwrap();
        assert_eq!(br.interior, f64::NEG_INFINITY);
        assert_eq!(br.closure, f64::NEG_INFINITY);
        // the point 0 belongs to the closure only
        let br = ldp_bracket(&UNIT, &Interval::new(-1.0, false, 0.0, true).unwrap()).unwrap();
        assert_eq!(br.interior, f64::NEG_INFINITY);
        assert!((br.closure + 1.0).abs() < 1e-12);
    }

    #[test]
    fn ldp_points_from_pmf() {
        let m = BernoulliModel::from_probabilities(vec![0.5; 8]).unwrap();
        let whole = Interval::new(f64::NEG_INFINITY, false, f64::INFINITY, false).unwrap();
        let p = ldp_point(&m, 1e6, 1.0, &whole).unwrap();
        assert!((p.probability - 1.0).abs() < 1e-15);
        let neg = Interval::new(-2.0, false, -1.0, false).unwrap();
        assert_eq!(ldp_point(&m, 1e6, 1.0, &neg).unwrap().value, f64::NEG_INFINITY);
        let low = Interval::half_open(0.0, 0.5).unwrap();
        let p = ldp_point(&m, 1e6, 1.0, &low).unwrap();
        // a_B = log log 1e6 = 2.626; S / a_B < 0.5 means S <= 1
        assert!((p.probability - 9.0 / 256.0).abs() < 1e-15);
        let upper = Interval::new(0.5, true, f64::INFINITY, false).unwrap();
        let q = ldp_point(&m, 1e6, 1.0, &upper).unwrap();
        assert!((q.probability + p.probability - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exponent_candidates() {
        let (printed, assembled) = candidate_exponents(0.5, 1.0);
        assert!((printed + 0.846574).abs() < 1e-6);
        assert!((assembled - 0.846574).abs() < 1e-6);
    }
}
