//! Desk-scale checks of the analytic inequalities: Norton's Poisson tail
//! bound, Hardy–Ramanujan, radical sums, the Nair–Tenenbaum mean value
//! bound and the truncated exponential moment.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{factorize, omega_sieve, primes_up_to};
use crate::error::{check_budget, Error, Result};
use crate::poly::{affine_zero_count_fibered, count_zeros_mod_p, IntegerForm, Space};
use crate::scalar::CompensatedSum;

/// Additive constant in the Hardy–Ramanujan and radical-sum bounds.
pub const KAPPA: f64 = 1.5;
/// Multiplicative constant in the Hardy–Ramanujan bound.
pub const KAPPA1: f64 = 6.0;

/// Default cap on enumerated tuples or points.
pub const DEFAULT_BOUNDS_BUDGET: u64 = 10_000_000;

#[derive(Clone, Debug, Serialize)]
pub struct InequalityRow {
    pub params: Vec<(String, f64)>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl InequalityRow {
    fn new(params: &[(&str, f64)], lhs: f64, rhs: f64) -> Self {
        Self {
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            lhs,
            rhs,
            margin: rhs - lhs,
        }
    }
}

/// Rows of `lhs <= rhs` with their margins.
#[derive(Clone, Debug, Serialize)]
pub struct InequalityReport {
    pub name: String,
    pub rows: Vec<InequalityRow>,
}

impl InequalityReport {
    pub fn new(name: impl Into<String>, rows: Vec<InequalityRow>) -> Self {
        Self {
            name: name.into(),
            rows,
        }
    }

    /// True iff every margin is nonnegative.
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|r| r.margin >= 0.0)
    }

    pub fn min_margin(&self) -> f64 {
        self.rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
    }

    pub fn verdict(&self) -> &'static str {
        if self.holds() {
            "holds"
        } else {
            "fails"
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,params,lhs,rhs,margin\n");
        for r in &self.rows {
            let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(
                out,
                "{},{},{:.12e},{:.12e},{:.12e}",
                self.name,
                params.join(";"),
                r.lhs,
                r.rhs,
                r.margin
            );
        }
        out
    }

    pub fn to_text_table(&self) -> String {
        let mut out = format!("{} ({})\n", self.name, self.verdict());
        let _ = writeln!(out, "{:<28} {:>16} {:>16} {:>16}", "params", "lhs", "rhs", "margin");
        for r in &self.rows {
            let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(
                out,
                "{:<28} {:>16.6e} {:>16.6e} {:>16.6e}",
                params.join(" "),
                r.lhs,
                r.rhs,
                r.margin
            );
        }
        out
    }
}

fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).collect::<CompensatedSum>().value()
}

/// `log sum_{r >= r0} lam^r / r!`, summed until the terms fall below 1e-30
/// of the running total.
fn ln_exp_tail(lam: f64, r0: u64) -> f64 {
    if lam == 0.0 {
        return if r0 == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let ln_lam = lam.ln();
    let first = r0 as f64 * ln_lam - ln_factorial(r0);
    // terms relative to the first one
    let mut sum = 1.0;
    let mut rel = 1.0;
    let mut r = r0;
    loop {
        r += 1;
        rel *= lam / r as f64;
        sum += rel;
        if rel < 1e-30 * sum && (r as f64) > lam {
            break;
        }
    }
    first + sum.ln()
}

/// `sum_{r >= beta x} x^r / r!` against
/// `(beta - 1)^-1 (beta / (2 pi x))^(1/2) e^(beta x (1 - log beta))`.
pub fn norton_check(x: f64, beta: f64) -> Result<InequalityRow> {
    if !(x > 0.0) || !(beta > 1.0) {
        return Err(Error::invalid("Norton's bound needs x > 0 and beta > 1"));
    }
    let r0 = (beta * x).ceil() as u64;
    let lhs = ln_exp_tail(x, r0).exp();
    let rhs = (beta / (2.0 * std::f64::consts::PI * x)).sqrt() / (beta - 1.0) * (beta * x * (1.0 - beta.ln())).exp();
    Ok(InequalityRow::new(&[("x", x), ("beta", beta)], lhs, rhs))
}

pub const NORTON_X: [f64; 7] = [0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0];
pub const NORTON_BETA: [f64; 6] = [1.01, 1.1, 1.5, 2.0, 4.0, 8.0];

/// Norton's bound over a grid; `beta < 1.01` is excluded by policy since
/// the `1/(beta - 1)` factor makes the bound vacuous there.
pub fn norton_grid(xs: &[f64], betas: &[f64]) -> Result<InequalityReport> {
    if let Some(b) = betas.iter().find(|&&b| b < 1.01) {
        return Err(Error::invalid(format!("beta = {b} is below the grid floor 1.01")));
    }
    let mut rows = Vec::new();
    for &x in xs {
        for &b in betas {
            rows.push(norton_check(x, b)?);
        }
    }
    Ok(InequalityReport::new("norton", rows))
}

/// `kappa1 x / log x * (kappa + log log x)^(t-1) / (t-1)!`.
pub fn hardy_ramanujan_bound(t: u32, x: u64) -> f64 {
    let xf = x as f64;
    let base = KAPPA + xf.ln().ln();
    KAPPA1 * xf / xf.ln() * base.powi(t as i32 - 1) / ln_factorial(t as u64 - 1).exp()
}

/// `pi_t(x) = #{m <= x : omega(m) = t}` for `t = 0..=t_max`, from one sieve.
pub fn omega_counts(x: u64, t_max: u32, budget: u64) -> Result<Vec<u64>> {
    check_budget("omega sieve", x as u128, budget as u128)?;
    let om = omega_sieve(x as usize);
    let mut counts = vec![0u64; t_max as usize + 1];
    for &w in &om[1..] {
        if (w as u32) <= t_max {
            counts[w as usize] += 1;
        }
    }
    Ok(counts)
}

/// Exact `pi_t(x)` and the bound.
pub fn hardy_ramanujan_count(t: u32, x: u64, budget: u64) -> Result<InequalityRow> {
    if t == 0 || x < 2 {
        return Err(Error::invalid("Hardy–Ramanujan needs t >= 1 and x >= 2"));
    }
    let count = omega_counts(x, t, budget)?[t as usize];
    Ok(InequalityRow::new(
        &[("t", t as f64), ("x", x as f64)],
        count as f64,
        hardy_ramanujan_bound(t, x),
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct HardyRamanujanScan {
    /// Rows at powers of ten and the worst `x` for each `t`.
    pub report: InequalityReport,
    /// `(t, x, ratio)` maximising `pi_t(x) / bound` over `2 <= x <= x_max`.
    pub worst: Vec<(u32, u64, f64)>,
    /// Whether `sum_t pi_t(x) = x - 1` held at every checked `x`.
    pub partition_ok: bool,
}

/// Checks the bound at every `2 <= x <= x_max` for `1 <= t <= t_max`.
pub fn hardy_ramanujan_scan(t_max: u32, x_max: u64, budget: u64) -> Result<HardyRamanujanScan> {
    if t_max == 0 || x_max < 2 {
        return Err(Error::invalid("the scan needs t_max >= 1 and x_max >= 2"));
    }
    check_budget("omega sieve", x_max as u128, budget as u128)?;
    let om = omega_sieve(x_max as usize);
    let mut counts = vec![0u64; 64];
    let mut worst: Vec<(u32, u64, f64)> = (1..=t_max).map(|t| (t, 2, f64::NEG_INFINITY)).collect();
    let mut rows = Vec::new();
    let mut partition_ok = true;
    let mut decade = 10u64;
    for x in 2..=x_max {
        counts[om[x as usize] as usize] += 1;
        for t in 1..=t_max {
            let c = counts[t as usize];
            let ratio = c as f64 / hardy_ramanujan_bound(t, x);
            if ratio > worst[t as usize - 1].2 {
                worst[t as usize - 1] = (t, x, ratio);
            }
        }
        if x == decade || x == x_max {
            partition_ok &= counts[1..].iter().sum::<u64>() == x - 1;
            for t in 1..=t_max {
                rows.push(InequalityRow::new(
                    &[("t", t as f64), ("x", x as f64)],
                    counts[t as usize] as f64,
                    hardy_ramanujan_bound(t, x),
                ));
            }
            decade = decade.saturating_mul(10);
        }
    }
    // the worst point for each t, recounted exactly
    for &(t, x, _) in &worst {
        let c = om[1..=x as usize].iter().filter(|&&w| w as u32 == t).count();
        rows.push(InequalityRow::new(
            &[("t", t as f64), ("x", x as f64), ("worst", 1.0)],
            c as f64,
            hardy_ramanujan_bound(t, x),
        ));
    }
    Ok(HardyRamanujanScan {
        report: InequalityReport::new("hardy-ramanujan", rows),
        worst,
        partition_ok,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RadicalSum {
    pub r: u32,
    pub t: u64,
    #[serde(serialize_with = "ser_ratio")]
    pub exact: BigRational,
    pub bound: f64,
}

fn ser_ratio<S: serde::Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl RadicalSum {
    pub fn row(&self) -> InequalityRow {
        InequalityRow::new(
            &[("r", self.r as f64), ("T", self.t as f64)],
            self.exact.to_f64().unwrap_or(f64::NAN),
            self.bound,
        )
    }
}

/// `3^r (kappa + log r + log log T)^r`, with the empty-product value 1 at
/// `r = 0`.
pub fn radical_sum_bound(r: u32, t: u64) -> f64 {
    if r == 0 {
        return 1.0;
    }
    3f64.powi(r as i32) * (KAPPA + (r as f64).ln() + (t as f64).ln().ln()).powi(r as i32)
}

/// Exact `sum_{p_1..p_r <= T} 1 / rad(p_1 ... p_r)` by enumerating every
/// tuple of primes, accumulated as one fraction.
pub fn radical_sum_check(r: u32, t: u64, budget: u64) -> Result<RadicalSum> {
    let primes = primes_up_to(t);
    radical_sum_over(&primes, r, t, budget)
}

fn radical_sum_over(primes: &[u64], r: u32, t: u64, budget: u64) -> Result<RadicalSum> {
    if primes.len() > 128 {
        return Err(Error::invalid("radical sums support at most 128 primes"));
    }
    let k = primes.len();
    let tuples = (k as u128).checked_pow(r).unwrap_or(u128::MAX);
    check_budget("radical-sum tuples", tuples, budget as u128)?;
    let exact = if r == 0 {
        BigRational::one()
    } else if k == 0 {
        BigRational::zero()
    } else {
        // multiplicity of each radical, indexed by the set of primes used
        let mut by_set: BTreeMap<u128, u64> = BTreeMap::new();
        let mut idx = vec![0usize; r as usize];
        loop {
            let mask = idx.iter().fold(0u128, |m, &i| m | (1u128 << i));
            *by_set.entry(mask).or_default() += 1;
            let mut j = 0;
            loop {
                if j == idx.len() {
                    break;
                }
                idx[j] += 1;
                if idx[j] < k {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == idx.len() {
                break;
            }
        }
        let mut sum = BigRational::zero();
        for (mask, count) in by_set {
            let mut rad = BigInt::one();
            for (i, &p) in primes.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    rad *= p;
                }
            }
            sum += BigRational::new(BigInt::from(count), rad);
        }
        sum
    };
    Ok(RadicalSum {
        r,
        t,
        exact,
        bound: radical_sum_bound(r, t),
    })
}

pub fn radical_sum_grid(rs: &[u32], ts: &[u64], budget: u64) -> Result<(InequalityReport, Vec<RadicalSum>)> {
    let mut sums = Vec::new();
    for &r in rs {
        for &t in ts {
            sums.push(radical_sum_check(r, t, budget)?);
        }
    }
    let rows = sums.iter().map(RadicalSum::row).collect();
    Ok((InequalityReport::new("radical-sum", rows), sums))
}

/// A set of primes used by the restricted multiplicative functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum PrimeSet {
    All,
    Classes { modulus: u64, classes: Vec<u64> },
}

impl PrimeSet {
    pub fn contains(&self, p: u64) -> bool {
        match self {
            PrimeSet::All => true,
            PrimeSet::Classes { modulus, classes } => classes.contains(&(p % modulus)),
        }
    }
}

/// The multiplicative functions of the mean value audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum MultiplicativeFn {
    /// `f = 1`.
    One,
    /// `C^#{p in S : p | m}`.
    PowerOnSet { c: f64, set: PrimeSet },
    /// `e^(-c omega(m))`.
    ExpOmega { c: f64 },
}

impl MultiplicativeFn {
    fn at_prime(&self, p: u64) -> f64 {
        match self {
            MultiplicativeFn::One => 1.0,
            MultiplicativeFn::PowerOnSet { c, set } => {
                if set.contains(p) {
                    *c
                } else {
                    1.0
                }
            }
            MultiplicativeFn::ExpOmega { c } => (-c).exp(),
        }
    }

    fn eval(&self, m: u128) -> Result<f64> {
        Ok(match self {
            MultiplicativeFn::One => 1.0,
            MultiplicativeFn::PowerOnSet { c, set } => {
                let k = factorize(m)?
                    .primes()
                    .filter(|&p| set.contains(p as u64))
                    .count();
                c.powi(k as i32)
            }
            MultiplicativeFn::ExpOmega { c } => (-c * factorize(m)?.omega() as f64).exp(),
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NairTenenbaumRow {
    pub b: u64,
    pub lhs: f64,
    pub rhs_product: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NairTenenbaumReport {
    pub rows: Vec<NairTenenbaumRow>,
}

impl NairTenenbaumReport {
    /// No ratio exceeds ten times the ratio at the smallest B.
    pub fn bounded(&self) -> bool {
        let first = self.rows[0].ratio;
        self.rows.iter().all(|r| r.ratio <= 10.0 * first)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("B,lhs,rhs_product,rhs,ratio\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{:.12e},{:.12e},{:.12e},{:.12e}", r.b, r.lhs, r.rhs_product, r.rhs, r.ratio);
        }
        out
    }
}

fn for_each_box_point(n: usize, b: i64, f: &mut dyn FnMut(&[i64])) {
    let mut x = vec![-b; n];
    loop {
        f(&x);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            if x[i] < b {
                x[i] += 1;
                break;
            }
            x[i] = -b;
            i += 1;
        }
    }
}

fn box_budget(n: usize, b: u64, budget: u64) -> Result<()> {
    let side = 2 * b as u128 + 1;
    check_budget("box enumeration", side.saturating_pow(n as u32), budget as u128)
}

/// `sum_{x in [-B, B]^n, G(x) != 0} f(|G(x)|)` against
/// `B^n / log B * prod_{p <= B^n} (1 + f(p) rho_G(p) / p^n)`.
pub fn nair_tenenbaum_audit(
    f: &MultiplicativeFn,
    g: &IntegerForm,
    b_grid: &[u64],
    budget: u64,
) -> Result<NairTenenbaumReport> {
    if b_grid.is_empty() || b_grid.windows(2).any(|w| w[0] >= w[1]) || b_grid[0] < 3 {
        return Err(Error::invalid("B grid must be increasing and start at 3 or more"));
    }
    let n = g.nvars();
    let b_max = *b_grid.last().unwrap();
    box_budget(n, b_max, budget)?;
    let p_max = (b_max as u128).pow(n as u32);
    check_budget("Nair–Tenenbaum prime range", p_max, budget as u128)?;
    let primes = primes_up_to(p_max as u64);
    // rho_G(p) / p^n for every prime; homogeneous forms go through the
    // projective count and the cone relation
    let cone = g.is_homogeneous() && g.degree() > 0;
    let local: Vec<f64> = primes
        .par_iter()
        .map(|&p| {
            let rho = if cone {
                count_zeros_mod_p(g, p, Space::Projective, u64::MAX)?.affine_zeros
            } else {
                affine_zero_count_fibered(g, p, u64::MAX)?
            };
            Ok(f.at_prime(p) * rho as f64 / (p as f64).powi(n as i32))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for &b in b_grid {
        let mut acc = CompensatedSum::new();
        let mut err = None;
        for_each_box_point(n, b as i64, &mut |x| {
            if err.is_some() {
                return;
            }
            match g.evaluate(x) {
                Ok(0) => {}
                Ok(v) => match f.eval(v.unsigned_abs()) {
                    Ok(val) => acc.add(val),
                    Err(e) => err = Some(e),
                },
                Err(e) => err = Some(e),
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        let cutoff = (b as u128).pow(n as u32) as u64;
        let log_prod: f64 = primes
            .iter()
            .zip(&local)
            .take_while(|(p, _)| **p <= cutoff)
            .map(|(_, l)| l.ln_1p())
            .collect::<CompensatedSum>()
            .value();
        let bf = b as f64;
        let rhs_product = log_prod.exp();
        let rhs = bf.powi(n as i32) / bf.ln() * rhs_product;
        let lhs = acc.value();
        rows.push(NairTenenbaumRow {
            b,
            lhs,
            rhs_product,
            rhs,
            ratio: lhs / rhs,
        });
    }
    Ok(NairTenenbaumReport { rows })
}

#[derive(Clone, Debug, Serialize)]
pub struct TruncatedMoment {
    pub b: u64,
    pub points: u64,
    pub r0: u64,
    pub lhs: f64,
    /// `B^n / (log B)^N`.
    pub reference: f64,
    pub big_n: f64,
}

/// `sum_x sum_{r >= y log log B} (C1 + C2 omega(|G(x)|))^r / r!` over the
/// box `[-B, B]^n` (points with `G(x) = 0` skipped), next to
/// `B^n / (log B)^N`.
pub fn truncated_moment_audit(
    g: &IntegerForm,
    b: u64,
    c1: f64,
    c2: f64,
    y: f64,
    big_n: f64,
    budget: u64,
) -> Result<TruncatedMoment> {
    if b < 3 || c1 < 0.0 || c2 < 0.0 || y < 0.0 {
        return Err(Error::invalid("need B >= 3 and nonnegative C1, C2, y"));
    }
    let n = g.nvars();
    box_budget(n, b, budget)?;
    let mut hist: BTreeMap<u32, u64> = BTreeMap::new();
    let mut err = None;
    for_each_box_point(n, b as i64, &mut |x| {
        if err.is_some() {
            return;
        }
        match g.evaluate(x).and_then(|v| {
            if v == 0 {
                Ok(None)
            } else {
                factorize(v.unsigned_abs()).map(|f| Some(f.omega()))
            }
        }) {
            Ok(Some(w)) => *hist.entry(w).or_default() += 1,
            Ok(None) => {}
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let bf = b as f64;
    let r0 = (y * bf.ln().ln()).ceil().max(0.0) as u64;
    let lhs = hist
        .iter()
        .map(|(&w, &count)| count as f64 * ln_exp_tail(c1 + c2 * w as f64, r0).exp())
        .collect::<CompensatedSum>()
        .value();
    Ok(TruncatedMoment {
        b,
        points: hist.values().sum(),
        r0,
        lhs,
        reference: bf.powi(n as i32) / bf.ln().powf(big_n),
        big_n,
    })
}
