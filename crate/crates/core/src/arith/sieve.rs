//! Segmented sieve of Eratosthenes over odd numbers.

const SEGMENT_ODDS: u64 = 1 << 18;

/// Plain (unsegmented) sieve, used for the base primes below `sqrt(n)`.
fn small_primes(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// All primes `p` with `lo < p <= hi`, ascending.
pub fn primes_in_range(lo: u64, hi: u64) -> Vec<u64> {
    let mut out = Vec::new();
    if hi < 2 || hi <= lo {
        return out;
    }
    if lo < 2 {
        out.push(2);
    }
    // Odd candidates 2k+1 with lo < 2k+1 <= hi.
    let first_odd = if lo < 3 { 3 } else { (lo + 1) | 1 };
    if first_odd > hi {
        return out;
    }
    let base = small_primes(integer_sqrt(hi));
    let mut seg = vec![false; SEGMENT_ODDS as usize];
    let mut start = first_odd;
    while start <= hi {
        let end = hi.min(start + 2 * (SEGMENT_ODDS - 1));
        let len = ((end - start) / 2 + 1) as usize;
        seg[..len].iter_mut().for_each(|c| *c = false);
        for &p in base.iter().skip(1) {
            let pp = p * p;
            if pp > end {
                break;
            }
            // Smallest odd multiple of p that is >= max(start, p*p).
            let mut m = if pp >= start {
                pp
            } else {
                let k = start.div_ceil(p);
                let m = k * p;
                if m % 2 == 0 {
                    m + p
                } else {
                    m
                }
            };
            while m <= end {
                seg[((m - start) / 2) as usize] = true;
                m += 2 * p;
            }
        }
        for (i, &c) in seg[..len].iter().enumerate() {
            if !c {
                out.push(start + 2 * i as u64);
            }
        }
        start = end + 2;
    }
    out
}

/// Exactly the primes `<= n`, ascending.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    primes_in_range(0, n)
}

pub fn integer_sqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r.saturating_mul(r) > n {
        r -= 1;
    }
    while (r + 1).saturating_mul(r + 1) <= n {
        r += 1;
    }
    r
}

/// Number of distinct prime factors of every `m <= n` (index 0 and 1 are 0).
pub fn omega_sieve(n: usize) -> Vec<u8> {
    let mut om = vec![0u8; n + 1];
    for p in 2..=n {
        if om[p] != 0 {
            continue;
        }
        let mut m = p;
        while m <= n {
            om[m] += 1;
            m += p;
        }
    }
    om
}

/// Möbius function on `0..=n` by a linear sieve (`mu[0]` is unused and 0).
pub fn mobius_sieve(n: usize) -> Vec<i8> {
    let mut mu = vec![0i8; n + 1];
    if n >= 1 {
        mu[1] = 1;
    }
    let mut is_comp = vec![false; n + 1];
    let mut primes: Vec<usize> = Vec::new();
    for i in 2..=n {
        if !is_comp[i] {
            primes.push(i);
            mu[i] = -1;
        }
        for &p in &primes {
            let ip = i * p;
            if ip > n {
                break;
            }
            is_comp[ip] = true;
            if i % p == 0 {
                mu[ip] = 0;
                break;
            }
            mu[ip] = -mu[i];
        }
    }
    mu
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division_primes(n: u64) -> Vec<u64> {
        (2..=n)
            .filter(|&m| (2..m).take_while(|d| d * d <= m).all(|d| m % d != 0))
            .collect()
    }

    #[test]
    fn small_examples() {
        assert_eq!(primes_up_to(20), vec![2, 3, 5, 7, 11, 13, 17, 19]);
        assert!(primes_up_to(1).is_empty());
        assert!(primes_up_to(0).is_empty());
        assert_eq!(primes_up_to(2), vec![2]);
    }

    #[test]
    fn agrees_with_trial_division_up_to_ten_thousand() {
        let reference = trial_division_primes(10_000);
        for n in [2u64, 3, 4, 9, 10, 97, 100, 1000, 4096, 9973, 10_000] {
            let expect: Vec<u64> = reference.iter().copied().filter(|&p| p <= n).collect();
            assert_eq!(primes_up_to(n), expect, "n = {n}");
        }
    }

    #[test]
    fn ranges_cross_segment_boundaries() {
        let all = primes_up_to(2_000_000);
        for (lo, hi) in [(0, 10), (2, 3), (3, 3), (524_000, 525_000), (1_000, 1_999_999)] {
            let expect: Vec<u64> = all.iter().copied().filter(|&p| p > lo && p <= hi).collect();
            assert_eq!(primes_in_range(lo, hi), expect, "({lo}, {hi}]");
        }
    }

    #[test]
    fn mobius_small_values() {
        let mu = mobius_sieve(12);
        assert_eq!(&mu[1..], &[1, -1, -1, 0, -1, 1, -1, 0, 0, 1, -1, 0]);
    }

    #[test]
    fn omega_sieve_small_values() {
        let om = omega_sieve(30);
        assert_eq!(om[30], 3);
        assert_eq!(om[16], 1);
        assert_eq!(om[1], 0);
    }
}
