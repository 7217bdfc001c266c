//! Integer factorization within the 128-bit budget: trial division by the
//! primes below [`TRIAL_BOUND`], then Miller–Rabin and Brent's variant of
//! Pollard rho for whatever cofactor remains.

use std::sync::OnceLock;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sieve::primes_up_to;
use crate::error::{Error, Result};

pub const TRIAL_BOUND: u64 = 1000;

/// Seed for the rho walk parameters, fixed so every run factors identically.
pub const FACTOR_SEED: u64 = 0x6c64_705f_7268_6f31;

fn trial_primes() -> &'static [u64] {
    static CELL: OnceLock<Vec<u64>> = OnceLock::new();
    CELL.get_or_init(|| primes_up_to(TRIAL_BOUND))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    pub value: u128,
    /// `(prime, exponent)` pairs sorted by prime.
    pub factors: Vec<(u128, u32)>,
}

impl Factorization {
    pub fn omega(&self) -> u32 {
        self.factors.len() as u32
    }

    pub fn tau(&self) -> u64 {
        self.factors.iter().map(|&(_, e)| e as u64 + 1).product()
    }

    pub fn rad(&self) -> u128 {
        self.factors.iter().map(|&(p, _)| p).product()
    }

    pub fn primes(&self) -> impl Iterator<Item = u128> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    /// Recomputes the value from the factor list, `None` on overflow.
    pub fn reconstruct(&self) -> Option<u128> {
        let mut acc: u128 = 1;
        for &(p, e) in &self.factors {
            for _ in 0..e {
                acc = acc.checked_mul(p)?;
            }
        }
        Some(acc)
    }
}

pub fn factorize(m: u128) -> Result<Factorization> {
    if m == 0 {
        return Err(Error::invalid("cannot factorize 0"));
    }
    let mut rest = m;
    let mut factors: Vec<(u128, u32)> = Vec::new();
    for &p in trial_primes() {
        let p = p as u128;
        if p * p > rest {
            break;
        }
        if rest % p == 0 {
            let mut e = 0;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            factors.push((p, e));
        }
    }
    if rest > 1 {
        let bound = TRIAL_BOUND as u128;
        if rest < bound * bound {
            factors.push((rest, 1));
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(FACTOR_SEED);
            let mut big = Vec::new();
            split_large(rest, &mut rng, &mut big);
            big.sort_unstable();
            for p in big {
                match factors.last_mut() {
                    Some((q, e)) if *q == p => *e += 1,
                    _ => factors.push((p, 1)),
                }
            }
        }
    }
    Ok(Factorization { value: m, factors })
}

fn split_large(n: u128, rng: &mut ChaCha8Rng, out: &mut Vec<u128>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = brent_rho(n, rng);
    split_large(d, rng, out);
    split_large(n / d, rng, out);
}

/// `a * b mod m` without overflow for any `m < 2^128`.
pub fn mul_mod(a: u128, b: u128, m: u128) -> u128 {
    if m <= u64::MAX as u128 {
        return ((a % m) * (b % m)) % m;
    }
    let (mut a, mut b) = (a % m, b % m);
    let mut acc: u128 = 0;
    while b > 0 {
        if b & 1 == 1 {
            acc = add_mod(acc, a, m);
        }
        a = add_mod(a, a, m);
        b >>= 1;
    }
    acc
}

fn add_mod(a: u128, b: u128, m: u128) -> u128 {
    let (s, carry) = a.overflowing_add(b);
    if carry || s >= m {
        s.wrapping_sub(m)
    } else {
        s
    }
}

pub fn pow_mod(mut base: u128, mut exp: u128, m: u128) -> u128 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u128;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Miller–Rabin. Deterministic below 3.3e24 (the first thirteen prime
/// bases); above that the twenty bases used make an error astronomically
/// unlikely but not impossible.
pub fn is_prime(n: u128) -> bool {
    const BASES: [u128; 20] = [
        2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
    ];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'bases: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

fn abs_diff(a: u128, b: u128) -> u128 {
    a.abs_diff(b)
}

/// Returns a nontrivial divisor of the odd composite `n`.
fn brent_rho(n: u128, rng: &mut ChaCha8Rng) -> u128 {
    if n % 2 == 0 {
        return 2;
    }
    const BATCH: u64 = 128;
    loop {
        let c = rng.gen_range(1..n);
        let mut y = rng.gen_range(0..n);
        let f = |v: u128| add_mod(mul_mod(v, v, n), c, n);
        let (mut g, mut r, mut q) = (1u128, 1u64, 1u128);
        let mut x = y;
        let mut ys = y;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..BATCH.min(r - k) {
                    y = f(y);
                    q = mul_mod(q, abs_diff(x, y), n);
                }
                g = q.gcd(&n);
                k += BATCH;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = abs_diff(x, ys).gcd(&n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
    }
}

pub fn omega(m: u128) -> Result<u32> {
    Ok(factorize(m)?.omega())
}

pub fn tau(m: u128) -> Result<u64> {
    Ok(factorize(m)?.tau())
}

pub fn rad(m: u128) -> Result<u128> {
    Ok(factorize(m)?.rad())
}
