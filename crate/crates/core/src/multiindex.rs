//! Multi-indices `i = (i^1, ..., i^m)` with non-negative entries.
//!
//! Every enumeration in the crate uses the graded-lexicographic order
//! implemented by [`Ord`] for [`MultiIndex`]: first by the norm `|i|`, then
//! lexicographically with larger leading entries first, so that for `m = 2`
//! the order starts `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MultiIndexError {
    #[error("multi-index length mismatch: {left} vs {right}")]
    Dimension { left: usize, right: usize },
    #[error("invalid multi-index text {0:?}")]
    Syntax(String),
}

/// An element of `Z^m_+`. Directions are 0-based in the API.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zero(m: usize) -> Self {
        MultiIndex(vec![0; m])
    }

    /// The index `(μ)` with a single 1 in direction `mu`.
    pub fn unit(m: usize, mu: usize) -> Self {
        let mut v = vec![0; m];
        v[mu] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, mu: usize) -> u32 {
        self.0[mu]
    }

    /// `|i| = i^1 + ... + i^m`.
    pub fn norm(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn add(&self, other: &MultiIndex) -> Result<MultiIndex, MultiIndexError> {
        self.check_dim(other)?;
        Ok(MultiIndex(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    /// Componentwise difference, absent when it leaves `Z^m_+`.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if self.dim() != other.dim() {
            return None;
        }
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// `i + (μ)`.
    pub fn raised(&self, mu: usize) -> MultiIndex {
        let mut v = self.0.clone();
        v[mu] += 1;
        MultiIndex(v)
    }

    /// `i - (μ)`, absent when `i^μ = 0`.
    pub fn lowered(&self, mu: usize) -> Option<MultiIndex> {
        if self.0[mu] == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[mu] -= 1;
        Some(MultiIndex(v))
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `∏_μ C(i^μ, k^μ)`, zero when some `k^μ > i^μ`.
    pub fn binom(&self, k: &MultiIndex) -> BigInt {
        assert_eq!(self.dim(), k.dim(), "binom of multi-indices of different length");
        let mut acc = BigInt::one();
        for (&n, &r) in self.0.iter().zip(&k.0) {
            if r > n {
                return BigInt::zero();
            }
            acc *= binomial(n, r);
        }
        acc
    }

    /// All `k ≤ self` componentwise, in graded-lexicographic order.
    pub fn lower_set(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex(Vec::with_capacity(self.dim()))];
        for &n in &self.0 {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..=n).map(move |e| {
                        let mut v = prefix.0.clone();
                        v.push(e);
                        MultiIndex(v)
                    })
                })
                .collect();
        }
        out.sort();
        out
    }

    fn check_dim(&self, other: &MultiIndex) -> Result<(), MultiIndexError> {
        if self.dim() != other.dim() {
            return Err(MultiIndexError::Dimension { left: self.dim(), right: other.dim() });
        }
        Ok(())
    }
}

fn binomial(n: u32, r: u32) -> BigInt {
    let r = r.min(n - r);
    let mut acc = BigInt::one();
    for t in 0..r {
        acc = acc * BigInt::from(n - t) / BigInt::from(t + 1);
    }
    acc
}

/// All multi-indices of length `m` with `|i| ≤ norm_bound`, graded-lex ordered.
pub fn enumerate_upto(norm_bound: u32, m: usize) -> Vec<MultiIndex> {
    (0..=norm_bound).flat_map(|n| enumerate_exact(n, m)).collect()
}

/// All multi-indices of length `m` with `|i| = norm`, graded-lex ordered.
pub fn enumerate_exact(norm: u32, m: usize) -> Vec<MultiIndex> {
    fn rec(rest: u32, slots: usize, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if slots == 1 {
            prefix.push(rest);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for e in (0..=rest).rev() {
            prefix.push(e);
            rec(rest - e, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    if m == 0 {
        return if norm == 0 { vec![MultiIndex(vec![])] } else { vec![] };
    }
    let mut out = Vec::new();
    rec(norm, m, &mut Vec::with_capacity(m), &mut out);
    out
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.norm()
            .cmp(&other.norm())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (n, e) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for MultiIndex {
    type Err = MultiIndexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let inner = t
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| MultiIndexError::Syntax(s.to_string()))?;
        inner
            .split(',')
            .map(|p| p.trim().parse::<u32>().map_err(|_| MultiIndexError::Syntax(s.to_string())))
            .collect::<Result<Vec<_>, _>>()
            .map(MultiIndex)
    }
}
