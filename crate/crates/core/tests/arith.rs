use ldp_core::arith::{factorize, is_prime, mobius_sieve, omega_sieve, primes_in_range, primes_up_to};
use proptest::prelude::*;

fn naive_sieve(n: usize) -> Vec<bool> {
    let mut is_p = vec![true; n + 1];
    is_p[0] = false;
    if n >= 1 {
        is_p[1] = false;
    }
    let mut i = 2;
    while i * i <= n {
        if is_p[i] {
            let mut j = i * i;
            while j <= n {
                is_p[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    is_p
}

#[test]
fn prime_count_to_1e8_matches_plain_sieve() {
    let n = 100_000_000u64;
    let segmented = primes_up_to(n).len();
    let plain = naive_sieve(n as usize).iter().filter(|&&b| b).count();
    assert_eq!(segmented, plain);
    assert_eq!(segmented, 5_761_455);
}

#[test]
fn prime_counts_at_powers_of_ten() {
    let known = [4usize, 25, 168, 1229, 9592, 78498, 664_579];
    for (k, &pi) in known.iter().enumerate() {
        assert_eq!(primes_up_to(10u64.pow(k as u32 + 1)).len(), pi);
    }
}

#[test]
fn omega_and_mobius_sieves_match_factorization() {
    let n = 50_000;
    let om = omega_sieve(n);
    let mu = mobius_sieve(n);
    for m in 1..=n {
        let f = factorize(m as u128).unwrap();
        assert_eq!(om[m] as u32, f.omega(), "omega({m})");
        let squarefree = f.factors.iter().all(|&(_, e)| e == 1);
        let expect = if squarefree {
            if f.omega() % 2 == 0 {
                1
            } else {
                -1
            }
        } else {
            0
        };
        assert_eq!(mu[m], expect, "mu({m})");
    }
}

fn next_prime(mut n: u64) -> u64 {
    while !is_prime(n as u128) {
        n += 1;
    }
    n
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn segments_agree_with_the_plain_sieve(lo in 0u64..200_000, len in 0u64..50_000) {
        let hi = lo + len;
        let table = naive_sieve(hi as usize);
        let expect: Vec<u64> = ((lo + 1)..=hi).filter(|&m| table[m as usize]).collect();
        prop_assert_eq!(primes_in_range(lo, hi), expect);
    }

    #[test]
    fn semiprimes_split_into_their_factors(a in 1u64 << 20..1u64 << 26, b in 1u64 << 40..1u64 << 62) {
        let (p, q) = (next_prime(a), next_prime(b));
        let f = factorize(p as u128 * q as u128).unwrap();
        let mut expect = vec![(p.min(q) as u128, 1u32), (p.max(q) as u128, 1)];
        if p == q {
            expect = vec![(p as u128, 2)];
        }
        prop_assert_eq!(f.factors, expect);
    }

    #[test]
    fn factorization_round_trips(m in 1u128..1u128 << 64) {
        let f = factorize(m).unwrap();
        prop_assert_eq!(f.reconstruct(), Some(m));
        for &(p, _) in &f.factors {
            prop_assert!(is_prime(p));
        }
        prop_assert!(f.factors.windows(2).all(|w| w[0].0 < w[1].0));
    }
}
