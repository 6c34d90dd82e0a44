//! Multi-indices of symmetric tensors and the counting functions attached
//! to them. Indices are 1-based.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{arg, Result, TensorError};

/// Sorted (canonical) representative of a permutation class of indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct MultiIndex(Vec<usize>);

impl TryFrom<Vec<usize>> for MultiIndex {
    type Error = TensorError;

    fn try_from(mut v: Vec<usize>) -> Result<Self> {
        if v.is_empty() {
            return arg("multi-index must have at least one entry");
        }
        if let Some(&bad) = v.iter().find(|&&e| e == 0) {
            return Err(TensorError::Index { entry: bad, dim: usize::MAX });
        }
        v.sort_unstable();
        Ok(Self(v))
    }
}

impl From<MultiIndex> for Vec<usize> {
    fn from(m: MultiIndex) -> Self {
        m.0
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl MultiIndex {
    /// Sort `raw` after checking every entry lies in `1..=n`.
    pub fn canonicalize(raw: &[usize], n: usize) -> Result<Self> {
        if raw.is_empty() {
            return arg("multi-index must have at least one entry");
        }
        if let Some(&bad) = raw.iter().find(|&&e| e == 0 || e > n) {
            return Err(TensorError::Index { entry: bad, dim: n });
        }
        let mut v = raw.to_vec();
        v.sort_unstable();
        Ok(Self(v))
    }

    /// `(j, j, ..., j)` of length `m`.
    pub fn diagonal(j: usize, m: usize) -> Self {
        Self(vec![j; m])
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn max_entry(&self) -> usize {
        *self.0.last().expect("multi-index is never empty")
    }

    pub fn is_diagonal(&self) -> bool {
        self.0[0] == self.max_entry()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn tight_pair(&self) -> TightPair {
        let mut distinct = Vec::new();
        let mut powers = Vec::new();
        for &e in &self.0 {
            if distinct.last() == Some(&e) {
                *powers.last_mut().expect("pushed together") += 1;
            } else {
                distinct.push(e);
                powers.push(1);
            }
        }
        TightPair { distinct, powers }
    }

    /// Number of distinct orderings of the entries, `m! / prod(alpha_k!)`.
    pub fn permutation_count(&self) -> u64 {
        self.tight_pair().multinomial()
    }

    /// `prod_k x[i_k]` over the entries (1-based into `x`).
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0.iter().map(|&e| x[e - 1]).product()
    }
}

/// Run-length encoding of a multi-index: distinct entries and their
/// multiplicities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TightPair {
    pub distinct: Vec<usize>,
    pub powers: Vec<usize>,
}

impl TightPair {
    pub fn len(&self) -> usize {
        self.distinct.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distinct.is_empty()
    }

    pub fn order(&self) -> usize {
        self.powers.iter().sum()
    }

    pub fn to_multi_index(&self) -> MultiIndex {
        let mut v = Vec::with_capacity(self.order());
        for (&j, &a) in self.distinct.iter().zip(&self.powers) {
            v.extend(std::iter::repeat(j).take(a));
        }
        MultiIndex(v)
    }

    /// `m! / prod(alpha_k!)`.
    pub fn multinomial(&self) -> u64 {
        multinomial(&self.powers)
    }

    /// Orderings of the index with `distinct[k]` fixed in the first slot:
    /// `(m-1)! / prod_t (alpha_t - [t = k])!`. `k` is a 0-based slot into
    /// `distinct`.
    pub fn slice_count(&self, k: usize) -> Result<u64> {
        if k >= self.len() {
            return arg(format!("slot {k} out of range for {} distinct indices", self.len()));
        }
        let mut p = self.powers.clone();
        p[k] -= 1;
        Ok(multinomial(&p))
    }

    /// Slice counts for every slot.
    pub fn slice_counts(&self) -> Vec<u64> {
        (0..self.len()).map(|k| self.slice_count(k).expect("slot in range")).collect()
    }

    /// `c = prod_k slice_count(k)^alpha_k`, exactly.
    pub fn c_constant(&self) -> Result<BigUint> {
        if self.len() < 2 {
            return arg("c constant is defined for off-diagonal indices only");
        }
        Ok(self
            .slice_counts()
            .iter()
            .zip(&self.powers)
            .map(|(&s, &a)| BigUint::from(s).pow(a as u32))
            .product())
    }

    /// `c^(1/m)` evaluated in logarithms.
    pub fn c_root(&self) -> Result<f64> {
        if self.len() < 2 {
            return arg("c constant is defined for off-diagonal indices only");
        }
        let log_c: f64 = self
            .slice_counts()
            .iter()
            .zip(&self.powers)
            .map(|(&s, &a)| a as f64 * (s as f64).ln())
            .sum();
        Ok((log_c / self.order() as f64).exp())
    }
}

/// `(sum a)! / prod(a_k!)`, built as a product of binomials so intermediate
/// values stay within the result's size.
///
/// Panics if the result does not fit in `u64`.
pub fn multinomial(parts: &[usize]) -> u64 {
    let mut total = 0u128;
    let mut acc = 1u128;
    for &a in parts {
        for i in 1..=a as u128 {
            total += 1;
            acc = acc * total / i;
            assert!(acc <= u64::MAX as u128, "multinomial coefficient exceeds u64");
        }
    }
    acc as u64
}

/// All canonical multi-indices of order `m` over `1..=n` with at least two
/// distinct entries, in lexicographic order.
pub fn enumerate_offdiagonal(n: usize, m: usize) -> Result<Vec<MultiIndex>> {
    if m < 2 {
        return arg("off-diagonal indices need order at least 2");
    }
    if n == 0 {
        return arg("dimension must be at least 1");
    }
    Ok(enumerate_all(n, m).into_iter().filter(|i| !i.is_diagonal()).collect())
}

/// All canonical multi-indices of order `m` over `1..=n`, lexicographic.
pub fn enumerate_all(n: usize, m: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    if n == 0 || m == 0 {
        return out;
    }
    let mut cur = vec![1usize; m];
    loop {
        out.push(MultiIndex(cur.clone()));
        // Advance to the next nondecreasing tuple.
        let Some(pos) = (0..m).rev().find(|&p| cur[p] < n) else {
            return out;
        };
        let v = cur[pos] + 1;
        for e in &mut cur[pos..] {
            *e = v;
        }
    }
}
