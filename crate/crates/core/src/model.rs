//! Independent Bernoulli indicators `Y_p` and their sum `S`.

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{primes_up_to, PrimeWindow};
use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Scalar};
use crate::sigma::SigmaTable;

/// Number of Monte Carlo shards; fixed so that results do not depend on
/// the thread count.
pub const SAMPLE_SHARDS: usize = 64;

/// `S = sum_p Y_p` with independent `Y_p ~ Bernoulli(sigma_p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BernoulliModel<S> {
    probs: Vec<(u64, S)>,
}

impl<S: Scalar> BernoulliModel<S> {
    /// `probs` must be labelled by strictly increasing primes and lie in
    /// `[0, 1]`.
    pub fn new(probs: Vec<(u64, S)>) -> Result<Self> {
        if probs.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::invalid("model primes must be strictly increasing"));
        }
        if let Some((p, _)) = probs
            .iter()
            .find(|(_, s)| !(*s >= S::zero() && *s <= S::one()))
        {
            return Err(Error::invalid(format!("probability for {p} is outside [0, 1]")));
        }
        Ok(Self { probs })
    }

    /// Labels the given probabilities with the first primes.
    pub fn from_probabilities(values: Vec<S>) -> Result<Self> {
        let mut bound = 16u64;
        let primes = loop {
            let ps = primes_up_to(bound);
            if ps.len() >= values.len() {
                break ps;
            }
            bound *= 2;
        };
        Self::new(primes.into_iter().zip(values).collect())
    }

    /// The model over the primes of `window`, read from an exact table.
    pub fn from_table(table: &SigmaTable, window: PrimeWindow) -> Result<Self> {
        let sub = table.restrict(window)?;
        Self::new(
            sub.entries()
                .iter()
                .map(|(p, s)| (*p, S::from_ratio(*s.numer(), *s.denom())))
                .collect(),
        )
    }

    pub fn probs(&self) -> &[(u64, S)] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `E[S] = sum sigma_p`.
    pub fn mean(&self) -> S {
        self.probs.iter().fold(S::zero(), |acc, (_, s)| acc + s.clone())
    }

    pub fn map_probs(&self, f: impl Fn(&S) -> S) -> Result<Self> {
        Self::new(self.probs.iter().map(|(p, s)| (*p, f(s))).collect())
    }

    /// `P[S = k]` for `k <= cap` and the overflow mass `P[S > cap]`, by
    /// sequential convolution.
    pub fn exact_pmf(&self, cap: usize) -> Pmf<S> {
        let mut dp = vec![S::zero(); cap + 1];
        dp[0] = S::one();
        let mut overflow = S::zero();
        let mut reach = 0usize;
        for (_, s) in &self.probs {
            let q = S::one() - s.clone();
            if reach == cap {
                overflow = overflow + dp[cap].clone() * s.clone();
            } else {
                reach += 1;
            }
            for k in (1..=reach).rev() {
                dp[k] = dp[k].clone() * q.clone() + dp[k - 1].clone() * s.clone();
            }
            dp[0] = dp[0].clone() * q;
        }
        Pmf { probs: dp, overflow }
    }

    /// `E[S^r] = sum_k k^r P[S = k]` over the complete distribution.
    pub fn moment_exact(&self, r: u32) -> S {
        let pmf = self.exact_pmf(self.len());
        pmf.probs
            .iter()
            .enumerate()
            .fold(S::zero(), |acc, (k, pk)| acc + S::from_u64((k as u64).pow(r)) * pk.clone())
    }

    /// `E[S^j]` for `j <= r`, by the binomial recursion
    /// `E[(S + Y)^j] = sum_i C(j, i) E[S^i] E[Y^(j-i)]`. Linear in the number
    /// of indicators, so it reaches windows where the full pmf does not.
    pub fn moments_by_recursion(&self, r: u32) -> Vec<S> {
        let r = r as usize;
        let binom = binomials(r);
        let mut m = vec![S::zero(); r + 1];
        m[0] = S::one();
        for (_, s) in &self.probs {
            let mut next = vec![S::zero(); r + 1];
            for (j, slot) in next.iter_mut().enumerate() {
                let mut acc = m[j].clone();
                for i in 0..j {
                    acc = acc + S::from_u64(binom[j][i]) * m[i].clone() * s.clone();
                }
                *slot = acc;
            }
            m = next;
        }
        m
    }
}

fn binomials(r: usize) -> Vec<Vec<u64>> {
    let mut c = vec![vec![0u64; r + 1]; r + 1];
    for j in 0..=r {
        c[j][0] = 1;
        for i in 1..=j {
            c[j][i] = c[j - 1][i - 1] + if i < j { c[j - 1][i] } else { 0 };
        }
    }
    c
}

impl<S: Scalar + Float> BernoulliModel<S> {
    /// `log E[e^(tS)] = sum log1p(sigma_p (e^t - 1))`.
    pub fn log_mgf(&self, t: S) -> S {
        let u = t.exp_m1();
        let mut sum = S::zero();
        let mut comp = S::zero();
        for (_, s) in &self.probs {
            let term = (*s * u).ln_1p();
            let next = sum + term;
            comp = comp
                + if sum.abs() >= term.abs() {
                    (sum - next) + term
                } else {
                    (term - next) + sum
                };
            sum = next;
        }
        sum + comp
    }

    /// `E[e^(tS)] = prod (1 + sigma_p (e^t - 1))`.
    pub fn mgf_exact(&self, t: S) -> S {
        self.log_mgf(t).exp()
    }

    /// `log E[e^(tS)] / log log B`.
    pub fn normalized_log_mgf(&self, t: S, b: f64) -> Result<S> {
        if !(b > std::f64::consts::E.exp()) {
            return Err(Error::invalid(format!("B = {b} must exceed e^e")));
        }
        Ok(self.log_mgf(t) / <S as num_traits::NumCast>::from(b.ln().ln()).expect("finite"))
    }
}

impl BernoulliModel<f64> {
    /// Seeded Monte Carlo histogram of `S`. The samples are split over a
    /// fixed number of shards whose seeds derive from `seed`, so the result
    /// is independent of the thread pool.
    pub fn sample(&self, seed: u64, n_samples: u64) -> Result<Histogram> {
        if n_samples == 0 {
            return Err(Error::invalid("at least one sample is required"));
        }
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let seeds: Vec<u64> = (0..SAMPLE_SHARDS).map(|_| master.gen()).collect();
        let per = n_samples / SAMPLE_SHARDS as u64;
        let extra = n_samples % SAMPLE_SHARDS as u64;
        let shards: Vec<Vec<u64>> = seeds
            .par_iter()
            .enumerate()
            .map(|(i, &s)| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let count = per + ((i as u64) < extra) as u64;
                let mut hist = vec![0u64; self.len() + 1];
                for _ in 0..count {
                    let k = self.probs.iter().filter(|(_, p)| rng.gen::<f64>() < *p).count();
                    hist[k] += 1;
                }
                hist
            })
            .collect();
        let mut counts = vec![0u64; self.len() + 1];
        for h in shards {
            for (c, x) in counts.iter_mut().zip(h) {
                *c += x;
            }
        }
        while counts.len() > 1 && *counts.last().unwrap() == 0 {
            counts.pop();
        }
        Ok(Histogram {
            counts,
            n_samples,
        })
    }
}

/// Distribution of `S` truncated at `cap`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf<S> {
    pub probs: Vec<S>,
    /// `P[S > cap]`.
    pub overflow: S,
}

impl<S: Scalar> Pmf<S> {
    pub fn cap(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn total(&self) -> S {
        self.probs.iter().fold(self.overflow.clone(), |a, b| a + b.clone())
    }

    /// `P[S <= k]`; `k` must not exceed the cap.
    pub fn cdf(&self, k: usize) -> S {
        self.probs[..=k].iter().fold(S::zero(), |a, b| a + b.clone())
    }
}

impl Pmf<f64> {
    /// `sum_k e^(tk) P[S = k]`; meaningful when the overflow mass is zero.
    pub fn mgf(&self, t: f64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(k, p)| (t * k as f64 + p.ln()).exp())
            .collect::<CompensatedSum>()
            .value()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,prob\n");
        for (k, p) in self.probs.iter().enumerate() {
            out.push_str(&format!("{k},{p:e}\n"));
        }
        out.push_str(&format!(">{},{:e}\n", self.cap(), self.overflow));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub counts: Vec<u64>,
    pub n_samples: u64,
}

impl Histogram {
    pub fn frequency(&self, k: usize) -> f64 {
        self.counts.get(k).copied().unwrap_or(0) as f64 / self.n_samples as f64
    }

    /// Sample mean of `e^(tS)` and its standard error.
    pub fn mgf_estimate(&self, t: f64) -> (f64, f64) {
        let n = self.n_samples as f64;
        let (mut m1, mut m2) = (0.0, 0.0);
        for (k, &c) in self.counts.iter().enumerate() {
            let v = (t * k as f64).exp();
            m1 += c as f64 * v;
            m2 += c as f64 * v * v;
        }
        let mean = m1 / n;
        let var = (m2 / n - mean * mean).max(0.0);
        (mean, (var / n).sqrt())
    }
}
