//! Primes, factorization and the basic multiplicative functions.

mod factor;
mod sieve;
mod window;

pub use factor::{
    factorize, is_prime, mul_mod, omega, pow_mod, rad, tau, Factorization, FACTOR_SEED,
    TRIAL_BOUND,
};
pub use sieve::{integer_sqrt, mobius_sieve, omega_sieve, primes_in_range, primes_up_to};
pub use window::{window_from_b, PrimeWindow, WindowBounds};

use crate::scalar::CompensatedSum;

/// `sum_{p <= T} 1/p`, accumulated in ascending order with compensation.
pub fn prime_reciprocal_sum(t: u64) -> f64 {
    primes_up_to(t)
        .into_iter()
        .map(|p| 1.0 / p as f64)
        .collect::<CompensatedSum>()
        .value()
}

pub fn gcd_u64(a: u64, b: u64) -> u64 {
    num_integer::Integer::gcd(&a, &b)
}

/// Whether `q` has no repeated prime factor.
pub fn is_squarefree(q: u64) -> Result<bool, crate::Error> {
    Ok(factorize(q as u128)?.factors.iter().all(|&(_, e)| e == 1))
}
