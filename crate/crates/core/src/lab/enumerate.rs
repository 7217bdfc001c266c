use num_integer::Integer;
use rayon::prelude::*;

use crate::error::{check_budget, Error, Result};
use crate::fibration::ProjectivePoint;

/// Default cap on `(2B+1)^(n+1)` for point enumeration.
pub const DEFAULT_POINT_BUDGET: u64 = 1_000_000_000;

/// Checks the enumeration budget for `P^n` up to height `b`.
pub fn check_point_budget(n: usize, b: u64, budget: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("projective space needs n >= 1"));
    }
    if b == 0 || b > i64::MAX as u64 / 4 {
        return Err(Error::invalid(format!("height bound {b} out of range")));
    }
    let side = 2 * b as u128 + 1;
    let required = (0..=n).fold(1u128, |acc, _| acc.saturating_mul(side));
    check_budget("point enumeration", required, budget as u128)
}

// A block fixes the index `k` of the last nonzero coordinate and its
// (positive) value; the coordinates before it run over [-B, B].
fn blocks(n: usize, b: u64) -> Vec<(usize, i64)> {
    let mut out = vec![(0usize, 1i64)];
    for k in 1..=n {
        out.extend((1..=b as i64).map(|v| (k, v)));
    }
    out
}

fn visit_block(n: usize, b: i64, k: usize, v: i64, f: &mut impl FnMut(&[i64])) {
    let mut x = vec![0i64; n + 1];
    x[k] = v;
    if k == 0 {
        f(&x);
        return;
    }
    for xi in x.iter_mut().take(k) {
        *xi = -b;
    }
    loop {
        if v == 1 || is_primitive(&x[..k], v) {
            f(&x);
        }
        let mut i = 0;
        loop {
            if i == k {
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

fn is_primitive(head: &[i64], v: i64) -> bool {
    let mut g = v.unsigned_abs();
    for &c in head {
        g = g.gcd(&c.unsigned_abs());
        if g == 1 {
            return true;
        }
    }
    g == 1
}

/// Visits every point of `P^n(Q)` of height at most `b` once, as its
/// canonical primitive representative, in a fixed order: by the index of the
/// last nonzero coordinate, then its value, then odometer order (first
/// coordinate fastest) over the remaining coordinates.
pub fn for_each_point(n: usize, b: u64, budget: u64, mut f: impl FnMut(&[i64])) -> Result<()> {
    check_point_budget(n, b, budget)?;
    for (k, v) in blocks(n, b) {
        visit_block(n, b as i64, k, v, &mut f);
    }
    Ok(())
}

/// Parallel fold over the same point set. `reduce` must be associative and
/// commutative for the result to be independent of scheduling.
pub fn par_fold_points<T, ID, F, R>(n: usize, b: u64, budget: u64, identity: ID, fold: F, reduce: R) -> Result<T>
where
    T: Send,
    ID: Fn() -> T + Sync + Send,
    F: Fn(&mut T, &[i64]) + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
{
    check_point_budget(n, b, budget)?;
    Ok(blocks(n, b)
        .into_par_iter()
        .fold(&identity, |mut acc, (k, v)| {
            visit_block(n, b as i64, k, v, &mut |x| fold(&mut acc, x));
            acc
        })
        .reduce(&identity, reduce))
}

/// Fallible variant of [`par_fold_points`]; the first error in block order
/// is reported.
pub fn try_par_fold_points<T, ID, F, R>(
    n: usize,
    b: u64,
    budget: u64,
    identity: ID,
    fold: F,
    reduce: R,
) -> Result<T>
where
    T: Send,
    ID: Fn() -> T + Sync + Send,
    F: Fn(&mut T, &[i64]) -> Result<()> + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
{
    check_point_budget(n, b, budget)?;
    blocks(n, b)
        .into_par_iter()
        .map(|(k, v)| {
            let mut acc = identity();
            let mut err = None;
            visit_block(n, b as i64, k, v, &mut |x| {
                if err.is_none() {
                    if let Err(e) = fold(&mut acc, x) {
                        err = Some(e);
                    }
                }
            });
            match err {
                Some(e) => Err(e),
                None => Ok(acc),
            }
        })
        .try_reduce(&identity, |a, b| Ok(reduce(a, b)))
}

/// `#{x in P^n(Q) : H(x) <= b}` by enumeration.
pub fn point_count(n: usize, b: u64, budget: u64) -> Result<u64> {
    par_fold_points(n, b, budget, || 0u64, |c, _| *c += 1, |a, b| a + b)
}

/// Collects the points of height at most `b`, in enumeration order.
pub fn enumerate_points(n: usize, b: u64, budget: u64) -> Result<Vec<ProjectivePoint>> {
    let mut out = Vec::new();
    for_each_point(n, b, budget, |x| out.push(ProjectivePoint::from_canonical(x.to_vec())))?;
    Ok(out)
}
