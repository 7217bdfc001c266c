use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A rational point of `P^n` in canonical form: coprime integer coordinates
/// whose last nonzero entry is positive.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct ProjectivePoint {
    coords: Vec<i64>,
}

impl ProjectivePoint {
    /// Canonicalizes any nonzero integer tuple.
    pub fn new(mut coords: Vec<i64>) -> Result<Self> {
        let g = coords
            .iter()
            .fold(0u64, |g, &c| num_integer::Integer::gcd(&g, &c.unsigned_abs()));
        if g == 0 {
            return Err(Error::invalid("the zero vector is not a projective point"));
        }
        let last = *coords.iter().rev().find(|&&c| c != 0).unwrap();
        let sign: i64 = if last < 0 { -1 } else { 1 };
        for c in coords.iter_mut() {
            *c = (*c / g as i64) * sign;
        }
        Ok(Self { coords })
    }

    /// Wraps coordinates already known to be canonical.
    pub(crate) fn from_canonical(coords: Vec<i64>) -> Self {
        debug_assert!(Self::is_canonical(&coords));
        Self { coords }
    }

    pub fn is_canonical(coords: &[i64]) -> bool {
        let g = coords
            .iter()
            .fold(0u64, |g, &c| num_integer::Integer::gcd(&g, &c.unsigned_abs()));
        g == 1 && coords.iter().rev().find(|&&c| c != 0).is_some_and(|&c| c > 0)
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    /// Dimension `n` of the ambient `P^n`.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// Naive height: the largest absolute coordinate.
    pub fn height(&self) -> u64 {
        height_of(&self.coords)
    }
}

pub(crate) fn height_of(coords: &[i64]) -> u64 {
    coords.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
}

impl TryFrom<Vec<i64>> for ProjectivePoint {
    type Error = Error;

    fn try_from(v: Vec<i64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProjectivePoint> for Vec<i64> {
    fn from(p: ProjectivePoint) -> Self {
        p.coords
    }
}

impl fmt::Display for ProjectivePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(":"))
    }
}
