use serde::{Deserialize, Serialize};

use super::sieve::primes_in_range;
use crate::error::{Error, Result};

/// Half-open prime window `(lo, hi]`.
///
/// `hi = u64::MAX` stands for an unbounded window; such windows can be
/// tested for membership but never enumerated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeWindow {
    pub lo: u64,
    pub hi: u64,
}

impl PrimeWindow {
    pub const UNBOUNDED: u64 = u64::MAX;

    pub fn new(lo: u64, hi: u64) -> Self {
        Self { lo, hi }
    }

    /// `(lo, infinity)`.
    pub fn above(lo: u64) -> Self {
        Self {
            lo,
            hi: Self::UNBOUNDED,
        }
    }

    pub fn empty() -> Self {
        Self { lo: 2, hi: 2 }
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo || self.hi < 2
    }

    pub fn is_bounded(&self) -> bool {
        self.hi != Self::UNBOUNDED
    }

    pub fn contains(&self, p: u64) -> bool {
        p > self.lo && p <= self.hi
    }

    /// The primes of the window, ascending. Unbounded windows are rejected.
    pub fn primes(&self) -> Result<Vec<u64>> {
        if !self.is_bounded() {
            return Err(Error::invalid("cannot enumerate an unbounded prime window"));
        }
        Ok(primes_in_range(self.lo, self.hi))
    }

    pub fn intersect(&self, other: &PrimeWindow) -> PrimeWindow {
        PrimeWindow {
            lo: self.lo.max(other.lo),
            hi: self.hi.min(other.hi),
        }
    }
}

/// The two real cut-offs `t0 = (log B)^M` and `t1 = B^(1/(log log B)^M)`
/// together with the integer window they induce.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WindowBounds {
    pub t0: f64,
    pub t1: f64,
    pub window: PrimeWindow,
    pub empty: bool,
}

/// Computes the truncation window for height bound `b` and exponent `m`.
///
/// `b` must exceed `e^e` so that `log log B > 1`. A lower cut-off below 2 is
/// raised to 2. Emptiness (`t1 <= t0`) is reported, not treated as an error.
pub fn window_from_b(b: f64, m: f64) -> Result<WindowBounds> {
    if !b.is_finite() || b <= std::f64::consts::E.exp() {
        return Err(Error::invalid(format!(
            "height bound {b} must exceed e^e for the truncation window"
        )));
    }
    if !(m >= 0.0) || !m.is_finite() {
        return Err(Error::invalid(format!("window exponent M = {m} must be >= 0")));
    }
    let log_b = b.ln();
    let loglog_b = log_b.ln();
    let t0 = log_b.powf(m);
    let t1 = (log_b / loglog_b.powf(m)).exp();
    let lo = (floor_snapped(t0) as u64).max(2);
    let hi = if t1 >= u64::MAX as f64 {
        u64::MAX - 1
    } else {
        floor_snapped(t1) as u64
    };
    let window = PrimeWindow::new(lo, hi);
    Ok(WindowBounds {
        t0,
        t1,
        window,
        empty: t1 <= t0 || window.is_empty(),
    })
}

// exp(log B) can land a few ulps below an integer B
fn floor_snapped(t: f64) -> f64 {
    let r = t.round();
    if (t - r).abs() <= 1e-12 * t.abs().max(1.0) {
        r
    } else {
        t.floor()
    }
}
