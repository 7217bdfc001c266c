//! Quadratic residue and Hilbert symbols.

use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Jacobi symbol `(a / n)` for odd `n`.
pub fn jacobi(a: i128, n: u128) -> i8 {
    debug_assert!(n % 2 == 1);
    let mut a = if a >= 0 {
        (a as u128) % n
    } else {
        let r = a.unsigned_abs() % n;
        if r == 0 {
            0
        } else {
            n - r
        }
    };
    let mut n = n;
    let mut sign = 1i8;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                sign = -sign;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            sign = -sign;
        }
        a %= n;
    }
    if n == 1 {
        sign
    } else {
        0
    }
}

/// Legendre symbol `(a / p)` for an odd prime `p`.
pub fn legendre_symbol(a: i128, p: u64) -> i8 {
    jacobi(a, p as u128)
}

/// A place of `Q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Place {
    Prime(u128),
    Infinity,
}

fn split_valuation(mut m: i128, p: u128) -> (u32, i128) {
    let mut v = 0;
    let pi = p as i128;
    while m % pi == 0 {
        m /= pi;
        v += 1;
    }
    (v, m)
}

/// Hilbert symbol of two nonzero integers at `place`.
pub fn hilbert_symbol_int(a: i128, b: i128, place: Place) -> Result<i8> {
    if a == 0 || b == 0 {
        return Err(Error::invalid("Hilbert symbol of zero"));
    }
    let p = match place {
        Place::Infinity => return Ok(if a < 0 && b < 0 { -1 } else { 1 }),
        Place::Prime(p) => p,
    };
    if p > i128::MAX as u128 {
        return Err(Error::invalid("prime out of range"));
    }
    let (alpha, u) = split_valuation(a, p);
    let (beta, v) = split_valuation(b, p);
    if p == 2 {
        let u8_ = u.rem_euclid(8) as u32;
        let v8 = v.rem_euclid(8) as u32;
        let eps = |x: u32| ((x - 1) / 2) % 2;
        let omega = |x: u32| ((x * x - 1) / 8) % 2;
        let e = eps(u8_) * eps(v8) + alpha * omega(v8) + beta * omega(u8_);
        return Ok(if e % 2 == 0 { 1 } else { -1 });
    }
    let mut s: i8 = if (alpha as u128 * beta as u128 % 2 == 1) && (p % 4 == 3) {
        -1
    } else {
        1
    };
    if beta % 2 == 1 {
        s *= jacobi(u, p);
    }
    if alpha % 2 == 1 {
        s *= jacobi(v, p);
    }
    Ok(s)
}

/// Integer in the same square class as the rational `q`.
fn square_class_rep(q: &Ratio<i128>) -> Result<i128> {
    if q.is_zero() {
        return Err(Error::invalid("Hilbert symbol of zero"));
    }
    q.numer()
        .checked_mul(*q.denom())
        .ok_or(Error::Overflow("reducing a rational to its square class"))
}

/// Hilbert symbol `(a, b)_v`: +1 iff `z^2 = a x^2 + b y^2` has a nontrivial
/// solution over `Q_v`.
pub fn hilbert_symbol(a: &Ratio<i128>, b: &Ratio<i128>, place: Place) -> Result<i8> {
    let (a, b) = (square_class_rep(a)?, square_class_rep(b)?);
    hilbert_symbol_int(a, b, place)
}

/// Places at which `(a, b)_v` can be -1: infinity, 2 and the primes
/// dividing `ab`.
pub fn relevant_places(a: i128, b: i128) -> Result<Vec<Place>> {
    let mut places = vec![Place::Infinity, Place::Prime(2)];
    for m in [a, b] {
        let f = crate::arith::factorize(m.unsigned_abs())?;
        for p in f.primes() {
            if p != 2 {
                places.push(Place::Prime(p));
            }
        }
    }
    places.sort();
    places.dedup();
    Ok(places)
}

pub(crate) fn is_perfect_square(a: i64) -> bool {
    if a < 0 {
        return false;
    }
    let r = crate::arith::integer_sqrt(a as u64);
    r * r == a as u64
}
