//! Sparse multivariate integer forms and exact zero counting over `F_p`.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{factorize, pow_mod};
use crate::error::{check_budget, Error, Result};
use crate::fibration::legendre_symbol;

/// Default cap on the number of points any exhaustive `F_p` enumeration may
/// visit.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 100_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub coeff: i64,
    pub exps: Vec<u32>,
}

impl Term {
    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }
}

/// A polynomial in `nvars` variables with integer coefficients, stored as a
/// sorted list of terms with distinct exponent vectors and nonzero
/// coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "FormRepr", into = "String")]
pub struct IntegerForm {
    nvars: usize,
    terms: Vec<Term>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FormRepr {
    Text(String),
    Rows(Vec<Vec<i64>>),
}

impl TryFrom<FormRepr> for IntegerForm {
    type Error = Error;

    fn try_from(repr: FormRepr) -> Result<Self> {
        match repr {
            FormRepr::Text(s) => IntegerForm::parse(&s),
            FormRepr::Rows(rows) => {
                let nvars = rows.first().map_or(0, |r| r.len().saturating_sub(1));
                let mut terms = Vec::with_capacity(rows.len());
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != nvars + 1 {
                        return Err(Error::Parse {
                            line: i + 1,
                            message: format!("expected {} entries, found {}", nvars + 1, row.len()),
                        });
                    }
                    let exps = row[1..]
                        .iter()
                        .map(|&e| u32::try_from(e).map_err(|_| Error::Parse {
                            line: i + 1,
                            message: format!("negative exponent {e}"),
                        }))
                        .collect::<Result<Vec<_>>>()?;
                    terms.push((row[0], exps));
                }
                IntegerForm::new(nvars, terms)
            }
        }
    }
}

impl From<IntegerForm> for String {
    fn from(f: IntegerForm) -> String {
        f.to_sparse_text()
    }
}

impl IntegerForm {
    /// Builds a form, merging duplicate exponent vectors and dropping zero
    /// coefficients. The zero polynomial is rejected.
    pub fn new(nvars: usize, terms: impl IntoIterator<Item = (i64, Vec<u32>)>) -> Result<Self> {
        if nvars == 0 {
            return Err(Error::invalid("a form needs at least one variable"));
        }
        let mut merged: BTreeMap<Vec<u32>, i64> = BTreeMap::new();
        for (coeff, exps) in terms {
            if exps.len() != nvars {
                return Err(Error::invalid(format!(
                    "exponent vector of length {} in a form of {nvars} variables",
                    exps.len()
                )));
            }
            let slot = merged.entry(exps).or_insert(0);
            *slot = slot
                .checked_add(coeff)
                .ok_or(Error::Overflow("merging form coefficients"))?;
        }
        let terms: Vec<Term> = merged
            .into_iter()
            .rev()
            .filter(|(_, c)| *c != 0)
            .map(|(exps, coeff)| Term { coeff, exps })
            .collect();
        if terms.is_empty() {
            return Err(Error::invalid("the zero polynomial is not a form"));
        }
        Ok(Self { nvars, terms })
    }

    /// The single variable `x_i` in `nvars` variables.
    pub fn variable(nvars: usize, i: usize) -> Result<Self> {
        let mut exps = vec![0; nvars];
        *exps
            .get_mut(i)
            .ok_or_else(|| Error::invalid(format!("variable x{i} out of range")))? = 1;
        Self::new(nvars, [(1, exps)])
    }

    /// Parses the sparse text format: one term per line, `coeff e0 e1 ... en`.
    /// Blank lines and `#` comments are ignored; `;` also separates terms so
    /// that a form fits on one line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut nvars = None;
        let mut terms = Vec::new();
        for (lineno, raw) in text.split(['\n', ';']).enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            let mut fields = line.split_whitespace();
            let coeff: i64 = fields
                .next()
                .unwrap()
                .parse()
                .map_err(|e| err(format!("bad coefficient: {e}")))?;
            let exps = fields
                .map(|s| s.parse::<u32>().map_err(|e| err(format!("bad exponent {s:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            match nvars {
                None => nvars = Some(exps.len()),
                Some(n) if n != exps.len() => {
                    return Err(err(format!("expected {n} exponents, found {}", exps.len())))
                }
                _ => {}
            }
            terms.push((coeff, exps));
        }
        let nvars = nvars.ok_or_else(|| Error::Parse {
            line: 0,
            message: "empty form".into(),
        })?;
        Self::new(nvars, terms)
    }

    pub fn to_sparse_text(&self) -> String {
        self.terms
            .iter()
            .map(|t| {
                let mut s = t.coeff.to_string();
                for e in &t.exps {
                    s.push(' ');
                    s.push_str(&e.to_string());
                }
                s
            })
            .collect::<Vec<_>>()
            .join("; ")
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Maximal total degree.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Term::degree).max().unwrap_or(0)
    }

    pub fn is_homogeneous(&self) -> bool {
        let d = self.degree();
        self.terms.iter().all(|t| t.degree() == d)
    }

    /// Exact value at an integer point; overflow of the 128-bit budget is an
    /// error.
    pub fn evaluate(&self, point: &[i64]) -> Result<i128> {
        if point.len() != self.nvars {
            return Err(Error::invalid(format!(
                "point has {} coordinates, form has {} variables",
                point.len(),
                self.nvars
            )));
        }
        let mut acc: i128 = 0;
        for t in &self.terms {
            let mut v = t.coeff as i128;
            for (&x, &e) in point.iter().zip(&t.exps) {
                for _ in 0..e {
                    v = v
                        .checked_mul(x as i128)
                        .ok_or(Error::Overflow("evaluating a form"))?;
                }
            }
            acc = acc.checked_add(v).ok_or(Error::Overflow("evaluating a form"))?;
        }
        Ok(acc)
    }

    /// Value modulo the prime `p` (`p < 2^32`) at a point given by residues.
    pub fn eval_mod(&self, point: &[u64], p: u64) -> u64 {
        let mut acc = 0u64;
        for t in &self.terms {
            let mut v = (t.coeff.rem_euclid(p as i64)) as u64;
            for (&x, &e) in point.iter().zip(&t.exps) {
                for _ in 0..e {
                    v = v * x % p;
                }
            }
            acc = (acc + v) % p;
        }
        acc
    }

    /// Value modulo `p` at an integer point.
    pub fn eval_mod_signed(&self, point: &[i64], p: u64) -> u64 {
        let residues: Vec<u64> = point.iter().map(|&x| x.rem_euclid(p as i64) as u64).collect();
        self.eval_mod(&residues, p)
    }

    /// Whether every coefficient is divisible by `p`.
    pub fn vanishes_mod(&self, p: u64) -> bool {
        self.terms.iter().all(|t| t.coeff.rem_euclid(p as i64) == 0)
    }

    /// Coefficient of the pure power `x_i^d` (`d` the degree), or 0.
    pub fn pure_power_coefficient(&self, i: usize) -> i64 {
        let d = self.degree();
        self.terms
            .iter()
            .find(|t| t.exps[i] == d)
            .map_or(0, |t| t.coeff)
    }

    /// The product of two forms in the same variables.
    pub fn mul(&self, other: &IntegerForm) -> Result<IntegerForm> {
        if self.nvars != other.nvars {
            return Err(Error::invalid("multiplying forms in different variables"));
        }
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let c = a
                    .coeff
                    .checked_mul(b.coeff)
                    .ok_or(Error::Overflow("multiplying forms"))?;
                let exps = a.exps.iter().zip(&b.exps).map(|(x, y)| x + y).collect();
                terms.push((c, exps));
            }
        }
        IntegerForm::new(self.nvars, terms)
    }

    /// Permutes variables: variable `i` of the result is variable `perm[i]`
    /// of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<IntegerForm> {
        if perm.len() != self.nvars {
            return Err(Error::invalid("permutation length mismatch"));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| (t.coeff, perm.iter().map(|&j| t.exps[j]).collect()));
        IntegerForm::new(self.nvars, terms)
    }
}

impl fmt::Display for IntegerForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            let mono: Vec<String> = t
                .exps
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(j, &e)| if e == 1 { format!("x{j}") } else { format!("x{j}^{e}") })
                .collect();
            let c = t.coeff;
            let sign = if c < 0 { "-" } else { "+" };
            if i == 0 {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let a = c.unsigned_abs();
            match (a, mono.is_empty()) {
                (_, true) => write!(f, "{a}")?,
                (1, false) => write!(f, "{}", mono.join("*"))?,
                _ => write!(f, "{a}*{}", mono.join("*"))?,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Affine,
    Projective,
}

/// Zero counts of a form over `F_p^nvars` and, for homogeneous forms, over
/// `P^(nvars-1)(F_p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FpZeroCount {
    pub p: u64,
    pub affine_zeros: u64,
    pub projective_zeros: Option<u64>,
}

impl FpZeroCount {
    /// `affine = 1 + (p - 1) * projective`, the cone relation for
    /// homogeneous forms.
    pub fn is_consistent(&self) -> bool {
        match self.projective_zeros {
            Some(proj) => self.affine_zeros == 1 + (self.p - 1) * proj,
            None => true,
        }
    }
}

/// `#P^n(F_p) = (p^(n+1) - 1) / (p - 1)`.
pub fn projective_point_count(n: u32, p: u64) -> u128 {
    (0..=n).map(|k| (p as u128).pow(k)).sum()
}

pub(crate) fn check_prime_modulus(p: u64) -> Result<()> {
    if p < 2 || p >= 1 << 32 || !crate::arith::is_prime(p as u128) {
        return Err(Error::invalid(format!("{p} is not a prime below 2^32")));
    }
    Ok(())
}

/// Calls `visit` on every vector of `F_p^len` (odometer order), returning
/// how many satisfied it.
fn count_vectors(len: usize, p: u64, prefix: &mut Vec<u64>, pred: &dyn Fn(&[u64]) -> bool) -> u64 {
    let start = prefix.len();
    prefix.resize(start + len, 0);
    let mut count = 0u64;
    loop {
        if pred(prefix) {
            count += 1;
        }
        let mut i = prefix.len();
        loop {
            if i == start {
                prefix.truncate(start);
                return count;
            }
            i -= 1;
            prefix[i] += 1;
            if prefix[i] < p {
                break;
            }
            prefix[i] = 0;
        }
    }
}

fn affine_zeros_exhaustive(form: &IntegerForm, p: u64) -> u64 {
    let n = form.nvars;
    (0..p)
        .into_par_iter()
        .map(|x0| {
            let mut prefix = vec![x0];
            count_vectors(n - 1, p, &mut prefix, &|v| form.eval_mod(v, p) == 0)
        })
        .sum()
}

fn projective_zeros_exhaustive(form: &IntegerForm, p: u64) -> u64 {
    count_projective_points(form.nvars, p, &|v| form.eval_mod(v, p) == 0)
}

/// Number of points of `P^(len-1)(F_p)` satisfying `pred`, visiting one
/// canonical representative (first nonzero coordinate 1) per point.
pub(crate) fn count_projective_points(len: usize, p: u64, pred: &(dyn Fn(&[u64]) -> bool + Sync)) -> u64 {
    (0..len)
        .map(|lead| {
            let free = len - lead - 1;
            if free == 0 {
                let mut v = vec![0; len];
                v[lead] = 1;
                return pred(&v) as u64;
            }
            (0..p)
                .into_par_iter()
                .map(|first_free| {
                    let mut prefix = vec![0; lead];
                    prefix.push(1);
                    prefix.push(first_free);
                    count_vectors(free - 1, p, &mut prefix, pred)
                })
                .sum::<u64>()
        })
        .sum()
}

/// Exact zero count by exhaustive enumeration of the requested space; the
/// other space is derived from the cone relation when the form is
/// homogeneous.
pub fn count_zeros_mod_p(form: &IntegerForm, p: u64, space: Space, budget: u64) -> Result<FpZeroCount> {
    check_prime_modulus(p)?;
    let n = form.nvars as u32;
    match space {
        Space::Affine => {
            check_budget("affine zero count", (p as u128).saturating_pow(n), budget as u128)?;
            let affine = affine_zeros_exhaustive(form, p);
            // the cone relation needs the origin on the zero set
            let projective = (form.is_homogeneous() && form.degree() > 0).then(|| (affine - 1) / (p - 1));
            Ok(FpZeroCount {
                p,
                affine_zeros: affine,
                projective_zeros: projective,
            })
        }
        Space::Projective => {
            if !form.is_homogeneous() || form.degree() == 0 {
                return Err(Error::invalid("projective zeros need a homogeneous form of positive degree"));
            }
            check_budget("projective zero count", projective_point_count(n - 1, p), budget as u128)?;
            let projective = projective_zeros_exhaustive(form, p);
            Ok(FpZeroCount {
                p,
                affine_zeros: 1 + (p - 1) * projective,
                projective_zeros: Some(projective),
            })
        }
    }
}

/// `#{x in F_p^n : G(x) = 0} / p^(n-1)`, the Lang–Weil normalised count.
pub fn lang_weil_ratio(form: &IntegerForm, p: u64, budget: u64) -> Result<f64> {
    let c = count_zeros_mod_p(form, p, Space::Affine, budget)?;
    Ok(c.affine_zeros as f64 / (p as f64).powi(form.nvars as i32 - 1))
}

/// Affine zero count computed fibrewise: for each point of `F_p^(n-1)` the
/// distinct roots of the restriction to the last variable are counted with
/// univariate arithmetic. Agrees with [`count_zeros_mod_p`] but visits only
/// `p^(n-1)` fibres.
pub fn affine_zero_count_fibered(form: &IntegerForm, p: u64, budget: u64) -> Result<u64> {
    check_prime_modulus(p)?;
    let n = form.nvars;
    check_budget(
        "fibred zero count",
        (p as u128).saturating_pow(n as u32 - 1),
        budget as u128,
    )?;
    let last_deg = form.terms.iter().map(|t| t.exps[n - 1]).max().unwrap_or(0) as usize;
    let fibre = |prefix: &[u64]| -> u64 {
        let mut coeffs = vec![0u64; last_deg + 1];
        for t in &form.terms {
            let mut v = t.coeff.rem_euclid(p as i64) as u64;
            for (&x, &e) in prefix.iter().zip(&t.exps) {
                for _ in 0..e {
                    v = v * x % p;
                }
            }
            let slot = &mut coeffs[t.exps[n - 1] as usize];
            *slot = (*slot + v) % p;
        }
        univariate_root_count(&coeffs, p)
    };
    if n == 1 {
        return Ok(fibre(&[]));
    }
    let total = (0..p)
        .into_par_iter()
        .map(|x0| {
            let mut prefix = vec![x0];
            let mut sum = 0u64;
            sum_over_vectors(n - 2, p, &mut prefix, &mut |v| sum += fibre(v));
            sum
        })
        .sum();
    Ok(total)
}

fn sum_over_vectors(len: usize, p: u64, prefix: &mut Vec<u64>, f: &mut dyn FnMut(&[u64])) {
    let start = prefix.len();
    prefix.resize(start + len, 0);
    loop {
        f(prefix);
        let mut i = prefix.len();
        loop {
            if i == start {
                prefix.truncate(start);
                return;
            }
            i -= 1;
            prefix[i] += 1;
            if prefix[i] < p {
                break;
            }
            prefix[i] = 0;
        }
    }
}

/// Number of distinct roots in `F_p` of `sum coeffs[k] t^k`; the zero
/// polynomial has `p` roots.
pub fn univariate_root_count(coeffs: &[u64], p: u64) -> u64 {
    let mut g: Vec<u64> = coeffs.iter().map(|c| c % p).collect();
    trim(&mut g);
    let d = g.len().saturating_sub(1);
    if g.is_empty() {
        return p;
    }
    if d == 0 {
        return 0;
    }
    if d == 1 {
        return 1;
    }
    if p <= 64 {
        return (0..p)
            .filter(|&t| {
                g.iter().rev().fold(0u64, |acc, &c| (acc * t + c) % p) == 0
            })
            .count() as u64;
    }
    if d == 2 {
        let (c, b, a) = (g[0], g[1], g[2]);
        let disc = (b * b % p + p - 4 * a % p * c % p) % p;
        return if disc == 0 {
            1
        } else {
            (1 + legendre_symbol(disc as i128, p)) as u64
        };
    }
    // deg gcd(g, t^p - t) counts the distinct roots.
    let xp = poly_pow_x(p, &g, p);
    let mut h = xp;
    if h.len() < 2 {
        h.resize(2, 0);
    }
    h[1] = (h[1] + p - 1) % p;
    trim(&mut h);
    let common = poly_gcd(g, h, p);
    common.len().saturating_sub(1) as u64
}

fn trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a as u128, (p - 2) as u128, p as u128) as u64
}

fn poly_rem(mut a: Vec<u64>, m: &[u64], p: u64) -> Vec<u64> {
    let dm = m.len() - 1;
    let lead_inv = inv_mod(m[dm], p);
    trim(&mut a);
    while a.len() > dm {
        let da = a.len() - 1;
        let q = a[da] * lead_inv % p;
        for (i, &c) in m.iter().enumerate() {
            let idx = da - dm + i;
            a[idx] = (a[idx] + p - q * c % p) % p;
        }
        trim(&mut a);
    }
    a
}

fn poly_mulmod(a: &[u64], b: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    poly_rem(out, m, p)
}

/// `t^e mod m` over `F_p`.
fn poly_pow_x(e: u64, m: &[u64], p: u64) -> Vec<u64> {
    let mut acc = vec![1u64];
    let mut base = poly_rem(vec![0, 1], m, p);
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = poly_mulmod(&acc, &base, m, p);
        }
        base = poly_mulmod(&base, &base, m, p);
        e >>= 1;
    }
    acc
}

fn poly_gcd(mut a: Vec<u64>, mut b: Vec<u64>, p: u64) -> Vec<u64> {
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        let r = poly_rem(a, &b, p);
        a = b;
        b = r;
    }
    a
}

/// Rational zeros of a binary form, as canonical coprime pairs `(a, b)`
/// (last nonzero coordinate positive). Found by the rational root theorem.
pub fn binary_form_rational_zeros(form: &IntegerForm) -> Result<Vec<[i64; 2]>> {
    if form.nvars != 2 || !form.is_homogeneous() {
        return Err(Error::invalid("rational zeros need a homogeneous binary form"));
    }
    let d = form.degree();
    // c[k] is the coefficient of x0^k x1^(d-k).
    let mut c = vec![0i64; d as usize + 1];
    for t in &form.terms {
        c[t.exps[0] as usize] = t.coeff;
    }
    let mut zeros = Vec::new();
    if c[d as usize] == 0 {
        zeros.push([1, 0]);
    }
    if c[0] == 0 {
        zeros.push([0, 1]);
    }
    let kmin = c.iter().position(|&v| v != 0).unwrap();
    let kmax = c.iter().rposition(|&v| v != 0).unwrap();
    if kmin < kmax {
        let num_divs = divisors(c[kmin].unsigned_abs())?;
        let den_divs = divisors(c[kmax].unsigned_abs())?;
        for &a in &num_divs {
            for &b in &den_divs {
                if num_integer::Integer::gcd(&a, &b) != 1 {
                    continue;
                }
                for sa in [a as i64, -(a as i64)] {
                    if form.evaluate(&[sa, b as i64])? == 0 {
                        zeros.push([sa, b as i64]);
                    }
                }
            }
        }
    }
    zeros.sort_unstable();
    zeros.dedup();
    Ok(zeros)
}

fn divisors(m: u64) -> Result<Vec<u64>> {
    let f = factorize(m as u128)?;
    let mut out = vec![1u64];
    for (p, e) in f.factors {
        let p = p as u64;
        let len = out.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                out.push(out[i] * pk);
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sum_of_squares() -> IntegerForm {
        IntegerForm::parse("1 2 0\n1 0 2").unwrap()
    }

    #[test]
    fn parse_and_evaluate() {
        let f = sum_of_squares();
        assert_eq!(f.evaluate(&[3, 4]).unwrap(), 25);
        assert_eq!(f.evaluate(&[0, 0]).unwrap(), 0);
        let g = IntegerForm::parse("# cubic\n1 3 0\n2 0 3\n").unwrap();
        assert_eq!(g.evaluate(&[1, 2]).unwrap(), 17);
        assert_eq!(g.degree(), 3);
        assert!(g.is_homogeneous());
        assert_eq!(g.to_string(), "x0^3 + 2*x1^3");
        assert_eq!(IntegerForm::parse(&g.to_sparse_text()).unwrap(), g);
    }

    #[test]
    fn parse_rejects_malformed_input() {
        assert!(IntegerForm::parse("").is_err());
        assert!(IntegerForm::parse("1 2 0\n1 2").is_err());
        assert!(IntegerForm::parse("x 1").is_err());
        assert!(IntegerForm::parse("1 -1").is_err());
        assert!(IntegerForm::parse("1 1 0\n-1 1 0").is_err());
    }

    #[test]
    fn duplicate_terms_merge() {
        let f = IntegerForm::parse("1 1 0; 2 1 0; 1 0 1").unwrap();
        assert_eq!(f.terms().len(), 2);
        assert_eq!(f.evaluate(&[1, 1]).unwrap(), 4);
    }

    #[test]
    fn overflow_is_reported() {
        let f = IntegerForm::parse("1 5 0").unwrap();
        assert!(matches!(f.evaluate(&[i64::MAX, 0]), Err(Error::Overflow(_))));
    }

    #[test]
    fn projective_counts() {
        assert_eq!(projective_point_count(1, 3), 4);
        assert_eq!(projective_point_count(2, 3), 13);
        assert_eq!(projective_point_count(1, 101), 102);
    }

    #[test]
    fn zero_counts_of_sum_of_two_squares() {
        let f = sum_of_squares();
        let b = DEFAULT_ENUMERATION_BUDGET;
        assert_eq!(count_zeros_mod_p(&f, 5, Space::Projective, b).unwrap().projective_zeros, Some(2));
        assert_eq!(count_zeros_mod_p(&f, 7, Space::Projective, b).unwrap().projective_zeros, Some(0));
        let x0 = IntegerForm::variable(2, 0).unwrap();
        assert_eq!(count_zeros_mod_p(&x0, 3, Space::Projective, b).unwrap().projective_zeros, Some(1));
    }

    #[test]
    fn lang_weil_ratios() {
        let x0 = IntegerForm::variable(2, 0).unwrap();
        let f = sum_of_squares();
        for p in [3u64, 5, 7, 11, 13, 17, 19, 23, 29] {
            assert_eq!(lang_weil_ratio(&x0, p, DEFAULT_ENUMERATION_BUDGET).unwrap(), 1.0);
            let r = lang_weil_ratio(&f, p, DEFAULT_ENUMERATION_BUDGET).unwrap();
            let expect = if p % 4 == 1 { (2 * p - 1) as f64 / p as f64 } else { 1.0 / p as f64 };
            assert!((r - expect).abs() < 1e-15, "p = {p}");
        }
    }

    #[test]
    fn budget_refusal_names_the_requirement() {
        let f = sum_of_squares();
        match count_zeros_mod_p(&f, 101, Space::Affine, 1000) {
            Err(Error::Budget { required, limit, .. }) => {
                assert_eq!(required, 101 * 101);
                assert_eq!(limit, 1000);
            }
            other => panic!("expected a budget refusal, got {other:?}"),
        }
        assert!(count_zeros_mod_p(&f, 9, Space::Affine, 1000).is_err());
    }

    #[test]
    fn affine_and_projective_counts_are_consistent() {
        let forms = [
            sum_of_squares(),
            IntegerForm::parse("1 3 0 0; 1 0 3 0; 1 0 0 3").unwrap(),
            IntegerForm::parse("1 1 1 0; -1 0 0 2").unwrap(),
        ];
        for f in &forms {
            for p in [2u64, 3, 5, 7, 11, 13] {
                let a = count_zeros_mod_p(f, p, Space::Affine, DEFAULT_ENUMERATION_BUDGET).unwrap();
                let pr = count_zeros_mod_p(f, p, Space::Projective, DEFAULT_ENUMERATION_BUDGET).unwrap();
                assert_eq!(a, pr, "{f} at p = {p}");
                assert!(a.is_consistent());
                assert!(pr.projective_zeros.unwrap() as u128 <= projective_point_count(f.nvars() as u32 - 1, p));
            }
        }
    }

    #[test]
    fn symmetric_forms_are_permutation_invariant() {
        let f = IntegerForm::parse("1 2 1 0; 1 1 2 0; 1 0 0 3; 3 1 1 1").unwrap();
        for perm in [[1usize, 0, 2], [0, 1, 2]] {
            let g = f.permute(&perm).unwrap();
            for p in [3u64, 5, 7] {
                let a = count_zeros_mod_p(&f, p, Space::Affine, DEFAULT_ENUMERATION_BUDGET).unwrap();
                let b = count_zeros_mod_p(&g, p, Space::Affine, DEFAULT_ENUMERATION_BUDGET).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn fibred_count_matches_exhaustive() {
        let forms = [
            sum_of_squares(),
            IntegerForm::parse("1 3 0; 2 0 3").unwrap(),
            IntegerForm::parse("1 1 0").unwrap(),
            IntegerForm::parse("1 0 5; -1 5 0; 3 1 4").unwrap(),
            IntegerForm::parse("1 2 0 1; 1 0 1 2; -7 0 0 3").unwrap(),
            IntegerForm::parse("1 4").unwrap(),
        ];
        for f in &forms {
            for p in [2u64, 3, 5, 67, 71, 73, 97, 101] {
                if (p as u128).pow(f.nvars() as u32) > 2_000_000 {
                    continue;
                }
                let exhaustive = count_zeros_mod_p(f, p, Space::Affine, DEFAULT_ENUMERATION_BUDGET).unwrap();
                let fibred = affine_zero_count_fibered(f, p, DEFAULT_ENUMERATION_BUDGET).unwrap();
                assert_eq!(exhaustive.affine_zeros, fibred, "{f} at p = {p}");
            }
        }
    }

    #[test]
    fn rational_zeros_of_binary_forms() {
        let x0 = IntegerForm::variable(2, 0).unwrap();
        assert_eq!(binary_form_rational_zeros(&x0).unwrap(), vec![[0, 1]]);
        // (2 x0 - 3 x1)(x0 + x1) x1 = 2x0^2x1 - x0x1^2 - 3x1^3
        let f = IntegerForm::parse("2 2 1; -1 1 2; -3 0 3").unwrap();
        assert_eq!(binary_form_rational_zeros(&f).unwrap(), vec![[-1, 1], [1, 0], [3, 2]]);
        assert!(binary_form_rational_zeros(&sum_of_squares()).unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn homogeneous_scaling(lambda in -50i64..50, x in -100i64..100, y in -100i64..100) {
            let f = IntegerForm::parse("1 3 0; -2 1 2; 5 0 3").unwrap();
            let lhs = f.evaluate(&[lambda * x, lambda * y]).unwrap();
            let rhs = (lambda as i128).pow(3) * f.evaluate(&[x, y]).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn product_zero_sets_bracket(c0 in -3i64..4, c1 in -3i64..4, pi in 0usize..5) {
            let p = [3u64, 5, 7, 11, 13][pi];
            prop_assume!(c0 != 0 || c1 != 0);
            let f1 = IntegerForm::parse(&format!("1 2 0; {c0} 0 2")).unwrap();
            let f2 = IntegerForm::new(2, [(1, vec![1, 0]), (c1, vec![0, 1])]).unwrap();
            let prod = f1.mul(&f2).unwrap();
            let count = |f: &IntegerForm| count_zeros_mod_p(f, p, Space::Affine, 1_000_000).unwrap().affine_zeros;
            let (a, b, ab) = (count(&f1), count(&f2), count(&prod));
            prop_assert!(ab >= a.max(b));
            prop_assert!(ab <= a + b);
        }
    }
}
