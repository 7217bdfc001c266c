//! Non-split densities `sigma_p`: exact enumeration, synthetic tables,
//! Mertens-type sums and the equidistribution cross-check.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{factorize, is_squarefree, mobius_sieve, PrimeWindow};
use crate::error::{check_budget, Error, Result};
use crate::fibration::{legendre_symbol, FibrationModel, ModelKind};
use crate::lab::try_par_fold_points;
use crate::poly::{binary_form_rational_zeros, check_prime_modulus, count_projective_points, projective_point_count};
use crate::scalar::CompensatedSum;

pub const SIGMA_SCHEMA_VERSION: u32 = 1;

/// Where the entries of a table came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Provenance {
    Enumerated,
    Synthetic(String),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Enumerated => write!(f, "enumerated"),
            Provenance::Synthetic(rule) => write!(f, "synthetic:{rule}"),
        }
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "enumerated" {
            Ok(Provenance::Enumerated)
        } else if let Some(rule) = s.strip_prefix("synthetic:") {
            Ok(Provenance::Synthetic(rule.to_string()))
        } else {
            Err(Error::invalid(format!("unknown provenance `{s}`")))
        }
    }
}

/// Exact densities over the primes of a window `(lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaTable {
    entries: Vec<(u64, Ratio<u64>)>,
    provenance: Provenance,
    bad_bound: u64,
    window: PrimeWindow,
}

impl SigmaTable {
    /// Builds a table that must list every prime of `window` exactly once.
    pub fn new(
        entries: Vec<(u64, Ratio<u64>)>,
        provenance: Provenance,
        bad_bound: u64,
        window: PrimeWindow,
    ) -> Result<Self> {
        if !window.is_bounded() {
            return Err(Error::invalid("sigma tables need a bounded window"));
        }
        if window.lo < bad_bound {
            return Err(Error::invalid("table window starts below the bad-prime bound"));
        }
        let primes = window.primes()?;
        if primes.len() != entries.len() || primes.iter().zip(&entries).any(|(p, e)| *p != e.0) {
            return Err(Error::invalid(format!(
                "table entries do not match the primes of ({}, {}]",
                window.lo, window.hi
            )));
        }
        if let Some((p, s)) = entries.iter().find(|(_, s)| *s > Ratio::from_integer(1)) {
            return Err(Error::invalid(format!("sigma_{p} = {s} exceeds 1")));
        }
        Ok(Self {
            entries,
            provenance,
            bad_bound,
            window,
        })
    }

    pub fn entries(&self) -> &[(u64, Ratio<u64>)] {
        &self.entries
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn bad_bound(&self) -> u64 {
        self.bad_bound
    }

    pub fn window(&self) -> PrimeWindow {
        self.window
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, p: u64) -> Result<Ratio<u64>> {
        if !self.window.contains(p) {
            return Err(Error::MissingEntry {
                p,
                covered: self.window.hi,
            });
        }
        self.entries
            .binary_search_by_key(&p, |e| e.0)
            .map(|i| self.entries[i].1)
            .map_err(|_| Error::invalid(format!("{p} is not prime")))
    }

    /// Restricts to the primes of a sub-window.
    pub fn restrict(&self, window: PrimeWindow) -> Result<SigmaTable> {
        if window.lo < self.window.lo || window.hi > self.window.hi {
            return Err(Error::MissingEntry {
                p: window.hi.max(window.lo),
                covered: self.window.hi,
            });
        }
        let entries = self
            .entries
            .iter()
            .filter(|(p, _)| window.contains(*p))
            .copied()
            .collect();
        Ok(SigmaTable {
            entries,
            provenance: self.provenance.clone(),
            bad_bound: self.bad_bound,
            window,
        })
    }

    pub fn values_f64(&self) -> Vec<(u64, f64)> {
        self.entries.iter().map(|&(p, s)| (p, ratio_to_f64(s))).collect()
    }

    /// Primes violating `sigma_p <= degree / p`.
    pub fn degree_bound_violations(&self, degree: u32) -> Vec<u64> {
        self.entries
            .iter()
            .filter(|&&(p, s)| p > self.bad_bound && s > Ratio::new(degree as u64, p))
            .map(|e| e.0)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# schema_version={SIGMA_SCHEMA_VERSION}")?;
        writeln!(w, "# bad_bound={}", self.bad_bound)?;
        writeln!(w, "# window={},{}", self.window.lo, self.window.hi)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["p", "sigma_numerator", "sigma_denominator", "provenance"])?;
        let prov = self.provenance.to_string();
        for (p, s) in &self.entries {
            csv.write_record([p.to_string(), s.numer().to_string(), s.denom().to_string(), prov.clone()])?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Reads a table written by [`SigmaTable::write_csv`]. Without the
    /// metadata comments the window is taken to be `(min p - 1, max p]`.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let text = std::io::read_to_string(r)?;
        let mut meta = BTreeMap::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
            }
        }
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut entries = Vec::new();
        let mut provenance = None;
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |j: usize| -> Result<u64> {
                rec.get(j)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Parse {
                        line: i + 2,
                        message: format!("bad integer in column {j}"),
                    })
            };
            let (p, num, den) = (parse(0)?, parse(1)?, parse(2)?);
            if den == 0 {
                return Err(Error::Parse {
                    line: i + 2,
                    message: "zero denominator".into(),
                });
            }
            let prov: Provenance = rec.get(3).unwrap_or("").parse()?;
            match &provenance {
                None => provenance = Some(prov),
                Some(prev) if *prev != prov => {
                    return Err(Error::invalid("mixed provenance within one table"));
                }
                _ => {}
            }
            entries.push((p, Ratio::new(num, den)));
        }
        let parse_meta = |k: &str| -> Result<Option<u64>> {
            meta.get(k)
                .map(|v| v.parse().map_err(|_| Error::invalid(format!("bad `{k}` metadata"))))
                .transpose()
        };
        let window = match meta.get("window") {
            Some(v) => {
                let (lo, hi) = v
                    .split_once(',')
                    .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                    .ok_or_else(|| Error::invalid("bad `window` metadata"))?;
                PrimeWindow::new(lo, hi)
            }
            None => {
                let lo = entries.first().map_or(1, |e| e.0 - 1);
                let hi = entries.last().map_or(1, |e| e.0);
                PrimeWindow::new(lo, hi)
            }
        };
        let bad_bound = parse_meta("bad_bound")?.unwrap_or(window.lo);
        let provenance = provenance.unwrap_or(Provenance::Synthetic("empty".into()));
        Self::new(entries, provenance, bad_bound, window)
    }
}

pub(crate) fn ratio_to_f64(r: Ratio<u64>) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Converts a decimal parameter such as `1.5` into an exact fraction.
pub fn ratio_from_f64(x: f64) -> Result<Ratio<u64>> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::invalid(format!("{x} is not a nonnegative number")));
    }
    let r = Ratio::<i64>::approximate_float(x).ok_or_else(|| Error::invalid(format!("cannot represent {x}")))?;
    Ok(Ratio::new(*r.numer() as u64, *r.denom() as u64))
}

/// `sigma_p`: the fraction of `x in P^n(F_p)` whose fibre is non-split.
///
/// For coin models these are the points on the union of the components
/// whose rule fires at `p`. For conic bundles they are the points where the
/// conic degenerates to a pair of conjugate lines or a double line.
pub fn sigma_p_exact(model: &FibrationModel, p: u64, budget: u64) -> Result<Ratio<u64>> {
    check_prime_modulus(p)?;
    if model.is_bad(p as u128) {
        return Err(Error::BadPrime {
            p,
            bound: model.bad_bound(),
        });
    }
    let n = model.n();
    let total = projective_point_count(n as u32, p);
    check_budget("sigma_p enumeration", total, budget as u128)?;
    let count = match model.kind() {
        ModelKind::Coin => {
            let firing: Vec<_> = model
                .components()
                .iter()
                .filter(|c| c.rule.fires_at(p as u128))
                .map(|c| &c.form)
                .collect();
            if firing.is_empty() {
                return Ok(Ratio::zero());
            }
            count_projective_points(n + 1, p, &|v| firing.iter().any(|f| f.eval_mod(v, p) == 0))
        }
        ModelKind::ConicBundle { a, b } => count_projective_points(2, p, &|v| {
            let (av, bv) = (a.eval_mod(v, p), b.eval_mod(v, p));
            match (av == 0, bv == 0) {
                (true, true) => true,
                (true, false) => legendre_symbol(bv as i128, p) == -1,
                (false, true) => legendre_symbol(av as i128, p) == -1,
                (false, false) => false,
            }
        }),
    };
    Ok(Ratio::new(count, total as u64))
}

/// Exact table over the primes of `window`, which must start at or above
/// the model's bad-prime bound.
pub fn enumerated_table(model: &FibrationModel, window: PrimeWindow, budget: u64) -> Result<SigmaTable> {
    model.check_window(&window)?;
    let primes = window.primes()?;
    let entries = primes
        .par_iter()
        .map(|&p| sigma_p_exact(model, p, budget).map(|s| (p, s)))
        .collect::<Result<Vec<_>>>()?;
    SigmaTable::new(entries, Provenance::Enumerated, model.bad_bound(), window)
}

/// Rules for synthetic tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SyntheticRule {
    /// `sigma_p = min(Delta / p, 1)`.
    DeltaOverP { delta: f64 },
    /// Explicit `(p, numerator, denominator)` triples.
    Custom { entries: Vec<(u64, u64, u64)> },
}

/// Builds a synthetic table over `window` (custom lists bring their own
/// primes and must cover the window exactly).
pub fn synthetic_sigma(rule: &SyntheticRule, window: PrimeWindow) -> Result<SigmaTable> {
    match rule {
        SyntheticRule::DeltaOverP { delta } => {
            let d = ratio_from_f64(*delta)?;
            let one = Ratio::from_integer(1);
            let entries = window
                .primes()?
                .into_iter()
                .map(|p| (p, (d / p).min(one)))
                .collect();
            SigmaTable::new(
                entries,
                Provenance::Synthetic(format!("delta-over-p:{d}")),
                window.lo,
                window,
            )
        }
        SyntheticRule::Custom { entries } => {
            let entries = entries
                .iter()
                .map(|&(p, num, den)| {
                    if den == 0 {
                        Err(Error::invalid("zero denominator in custom sigma"))
                    } else {
                        Ok((p, Ratio::new(num, den)))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            SigmaTable::new(entries, Provenance::Synthetic("custom".into()), window.lo, window)
        }
    }
}

/// `sum_{p <= t} sigma_p` over the table, in ascending order.
pub fn mertens_sum(table: &SigmaTable, t: u64) -> Result<f64> {
    if t > table.window.hi {
        return Err(Error::MissingEntry {
            p: t,
            covered: table.window.hi,
        });
    }
    Ok(table
        .entries
        .iter()
        .take_while(|(p, _)| *p <= t)
        .map(|&(_, s)| ratio_to_f64(s))
        .collect::<CompensatedSum>()
        .value())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MertensFit {
    pub delta_hat: f64,
    pub beta_hat: f64,
    pub grid: Vec<u64>,
    pub loglog: Vec<f64>,
    pub sums: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Least-squares fit of `S(T) = Delta log log T + beta` over the grid.
pub fn fit_delta_beta(table: &SigmaTable, grid: &[u64]) -> Result<MertensFit> {
    if grid.len() < 3 {
        return Err(Error::invalid("the fit needs at least three grid points"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) || grid[0] < 2 {
        return Err(Error::invalid("grid must be increasing and start at T >= 2"));
    }
    let loglog: Vec<f64> = grid.iter().map(|&t| (t as f64).ln().ln()).collect();
    let spread = loglog.last().unwrap() - loglog[0];
    if spread.abs() < 1e-9 {
        return Err(Error::invalid("degenerate grid: log log T values coincide"));
    }
    let sums = grid.iter().map(|&t| mertens_sum(table, t)).collect::<Result<Vec<_>>>()?;
    let (slope, intercept) = ols(&loglog, &sums);
    let residuals = loglog
        .iter()
        .zip(&sums)
        .map(|(x, y)| y - (slope * x + intercept))
        .collect();
    Ok(MertensFit {
        delta_hat: slope,
        beta_hat: intercept,
        grid: grid.to_vec(),
        loglog,
        sums,
        residuals,
    })
}

/// Ordinary least squares `y = a x + b`, returning `(a, b)`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    (slope, my - slope * mx)
}

/// `zeta(s)` for real `s > 1`: a direct partial sum plus an Euler–Maclaurin
/// tail, accurate far below 1e-12.
pub fn zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta needs s > 1");
    const N: u32 = 1000;
    let mut sum: CompensatedSum = (1..N).map(|k| (k as f64).powf(-s)).collect();
    let n = N as f64;
    sum.add(n.powf(1.0 - s) / (s - 1.0));
    sum.add(0.5 * n.powf(-s));
    // Bernoulli corrections B_2k / (2k)! * s(s+1)...(s+2k-2) N^(-s-2k+1)
    let bern = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0];
    let mut rising = s;
    let mut fact = 2.0;
    for (k, b) in bern.iter().enumerate() {
        let k2 = 2 * k as i32 + 2;
        sum.add(b / fact * rising * n.powf(1.0 - s - k2 as f64));
        rising *= (s + k2 as f64 - 1.0) * (s + k2 as f64);
        fact *= (k2 + 1) as f64 * (k2 + 2) as f64;
    }
    sum.value()
}

/// `c_n = 2^n / zeta(n + 1)`, the density of `P^n(Q)` by height.
pub fn c_n(n: usize) -> f64 {
    2f64.powi(n as i32) / zeta(n as f64 + 1.0)
}

/// How [`equidist_check`] obtained its observed count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountRoute {
    Lattice,
    Enumeration,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquidistReport {
    pub q: u64,
    pub b: u64,
    pub observed: u64,
    pub predicted: f64,
    pub relative_gap: f64,
    pub route: CountRoute,
}

impl EquidistReport {
    pub fn ratio(&self) -> f64 {
        if self.predicted == 0.0 {
            if self.observed == 0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            self.observed as f64 / self.predicted
        }
    }
}

/// Validates `Q` for [`equidist_check`] and returns its prime divisors.
fn check_modulus(model: &FibrationModel, q: u64, b: u64) -> Result<Vec<u64>> {
    if q == 0 || !is_squarefree(q)? {
        return Err(Error::invalid(format!("Q = {q} must be a positive squarefree integer")));
    }
    let primes: Vec<u64> = factorize(q as u128)?.primes().map(|p| p as u64).collect();
    if let Some(&p) = primes.iter().find(|&&p| model.is_bad(p as u128)) {
        return Err(Error::invalid(format!("Q = {q} shares the bad prime {p}")));
    }
    if (b as u128) < (q as u128).pow(6) {
        return Err(Error::invalid(format!("B = {b} is below Q^6 = {}", (q as u128).pow(6))));
    }
    Ok(primes)
}

/// Compares `#{x : H(x) <= B, F(x) != 0, theta_p(x) = 1 for all p | Q}`
/// with `c_n B^(n+1) prod_{p | Q} sigma_p`.
///
/// Coin models on `P^1` are counted by Möbius inversion over residue
/// classes mod `Q`, which scales to `B = 15^6`; everything else is
/// enumerated point by point.
pub fn equidist_check(model: &FibrationModel, q: u64, b: u64, budget: u64) -> Result<EquidistReport> {
    let primes = check_modulus(model, q, b)?;
    let mut product = 1.0;
    for &p in &primes {
        product *= ratio_to_f64(sigma_p_exact(model, p, budget)?);
    }
    let n = model.n();
    let predicted = c_n(n) * (b as f64).powi(n as i32 + 1) * product;
    let (observed, route) = if model.is_coin() && n == 1 {
        (lattice_count(model, &primes, q, b, budget)?, CountRoute::Lattice)
    } else {
        (enumerated_count(model, &primes, b, budget)?, CountRoute::Enumeration)
    };
    let relative_gap = if predicted == 0.0 {
        if observed == 0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (observed as f64 - predicted).abs() / predicted
    };
    Ok(EquidistReport {
        q,
        b,
        observed,
        predicted,
        relative_gap,
        route,
    })
}

fn all_theta(model: &FibrationModel, primes: &[u64], x: &[i64]) -> Result<bool> {
    for &p in primes {
        if model.theta_p_coords(x, p as u128)? == 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Point-by-point count used for the enumeration route.
pub fn enumerated_count(model: &FibrationModel, primes: &[u64], b: u64, budget: u64) -> Result<u64> {
    try_par_fold_points(
        model.n(),
        b,
        budget,
        || 0u64,
        |acc, x| {
            if !model.is_degenerate(x)? && all_theta(model, primes, x)? {
                *acc += 1;
            }
            Ok(())
        },
        |a, b| a + b,
    )
}

// Coin-model acceptance of a residue vector mod Q: every p | Q has a firing
// component vanishing at the reduction.
fn residue_accepts(model: &FibrationModel, primes: &[u64], r: &[u64]) -> bool {
    primes.iter().all(|&p| {
        let v: Vec<u64> = r.iter().map(|&c| c % p).collect();
        model
            .components()
            .iter()
            .any(|c| c.rule.fires_at(p as u128) && c.form.eval_mod(&v, p) == 0)
    })
}

/// `#{y in [-l, l] : y = r mod q}`.
fn residue_count(l: u64, r: u64, q: u64) -> u64 {
    let nonneg = if r <= l { (l - r) / q + 1 } else { 0 };
    let s = (q - r) % q;
    let pos = if s <= l { (l - s) / q + 1 } else { 0 } - (s == 0) as u64;
    nonneg + pos
}

fn lattice_count(model: &FibrationModel, primes: &[u64], q: u64, b: u64, budget: u64) -> Result<u64> {
    check_budget("lattice residue table", (q as u128).pow(2) + b as u128, budget as u128)?;
    let accept: Vec<bool> = (0..q * q)
        .map(|i| residue_accepts(model, primes, &[i % q, i / q]))
        .collect();
    // accepted_c[c] lists residue vectors r with c*r mod Q accepted
    let accepted_c: Vec<Vec<(u64, u64)>> = (0..q)
        .map(|c| {
            (0..q * q)
                .filter(|&i| {
                    let (r0, r1) = (i % q, i / q);
                    accept[((c * r0 % q) + q * (c * r1 % q)) as usize]
                })
                .map(|i| (i % q, i / q))
                .collect()
        })
        .collect();
    let mu = mobius_sieve(b as usize);
    // Group d by (floor(B/d), d mod Q).
    let mut groups: BTreeMap<u64, Vec<i64>> = BTreeMap::new();
    for d in 1..=b {
        let m = mu[d as usize];
        if m != 0 {
            groups.entry(b / d).or_insert_with(|| vec![0; q as usize])[(d % q) as usize] += m as i64;
        }
    }
    let mertens: i64 = mu[1..].iter().map(|&m| m as i64).sum();
    let mut total: i128 = 0;
    for (l, weights) in &groups {
        let cnt: Vec<u64> = (0..q).map(|r| residue_count(*l, r, q)).collect();
        for (c, &w) in weights.iter().enumerate() {
            if w == 0 {
                continue;
            }
            let s: u128 = accepted_c[c]
                .iter()
                .map(|&(r0, r1)| cnt[r0 as usize] as u128 * cnt[r1 as usize] as u128)
                .sum();
            total += w as i128 * s as i128;
        }
    }
    if accept[0] {
        // the zero vector was counted once for every squarefree d
        total -= mertens as i128;
    }
    let mut projective = total / 2;
    let mut zeros = Vec::new();
    for c in model.components() {
        zeros.extend(binary_form_rational_zeros(&c.form)?);
    }
    zeros.sort();
    zeros.dedup();
    for z in zeros {
        let h = z[0].unsigned_abs().max(z[1].unsigned_abs());
        if h <= b && all_theta(model, primes, &z)? {
            projective -= 1;
        }
    }
    u64::try_from(projective).map_err(|_| Error::Overflow("counting lattice points"))
}
