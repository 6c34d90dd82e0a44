//! Sparse symmetric tensors keyed by canonical multi-index.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{arg, Result, TensorError};
use crate::index::MultiIndex;

/// Relative tolerance under which duplicate input entries are considered equal.
const DUPLICATE_TOL: f64 = 1e-12;

/// Order-`m`, dimension-`n` real symmetric tensor. Only nonzero entries are
/// stored, one per permutation class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorFile", into = "TensorFile")]
pub struct SymmetricTensor {
    order: usize,
    dim: usize,
    entries: BTreeMap<MultiIndex, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorFile {
    order: usize,
    dim: usize,
    entries: Vec<EntryFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EntryFile {
    idx: Vec<usize>,
    val: f64,
}

impl TryFrom<TensorFile> for SymmetricTensor {
    type Error = TensorError;

    fn try_from(f: TensorFile) -> Result<Self> {
        Self::from_entries(f.order, f.dim, f.entries.into_iter().map(|e| (e.idx, e.val)))
    }
}

impl From<SymmetricTensor> for TensorFile {
    fn from(t: SymmetricTensor) -> Self {
        TensorFile {
            order: t.order,
            dim: t.dim,
            entries: t
                .entries
                .into_iter()
                .map(|(idx, val)| EntryFile { idx: idx.into(), val })
                .collect(),
        }
    }
}

fn check_shape(order: usize, dim: usize) -> Result<()> {
    if order == 0 || dim == 0 {
        return arg(format!("order and dimension must be positive, got order {order}, dim {dim}"));
    }
    Ok(())
}

impl SymmetricTensor {
    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        check_shape(order, dim)?;
        Ok(Self { order, dim, entries: BTreeMap::new() })
    }

    /// Build from raw `(index, value)` pairs. Indices may be unsorted;
    /// repeated classes must agree to a relative `1e-12`.
    pub fn from_entries<I>(order: usize, dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        check_shape(order, dim)?;
        let mut map: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (raw, val) in entries {
            if raw.len() != order {
                return arg(format!("index {raw:?} has length {}, tensor order is {order}", raw.len()));
            }
            if !val.is_finite() {
                return arg(format!("entry {raw:?} is not finite"));
            }
            let idx = MultiIndex::canonicalize(&raw, dim)?;
            if let Some(&prev) = map.get(&idx) {
                if (prev - val).abs() > DUPLICATE_TOL * prev.abs().max(val.abs()) {
                    return Err(TensorError::Conflict { idx: idx.into(), first: prev, second: val });
                }
                continue;
            }
            map.insert(idx, val);
        }
        map.retain(|_, v| *v != 0.0);
        Ok(Self { order, dim, entries: map })
    }

    pub(crate) fn from_map(order: usize, dim: usize, mut entries: BTreeMap<MultiIndex, f64>) -> Self {
        entries.retain(|_, v| *v != 0.0);
        Self { order, dim, entries }
    }

    /// Diagonal tensor with the given diagonal.
    pub fn diagonal(order: usize, diag: &[f64]) -> Result<Self> {
        Self::from_entries(order, diag.len(), diag.iter().enumerate().map(|(j, &v)| (vec![j + 1; order], v)))
    }

    /// The tensor with unit diagonal and zeros elsewhere.
    pub fn identity(order: usize, dim: usize) -> Result<Self> {
        Self::diagonal(order, &vec![1.0; dim])
    }

    /// Every entry equal to one.
    pub fn ones(order: usize, dim: usize) -> Result<Self> {
        check_shape(order, dim)?;
        let entries = crate::index::enumerate_all(dim, order).into_iter().map(|i| (i, 1.0)).collect();
        Ok(Self::from_map(order, dim, entries))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| TensorError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tensor serialization cannot fail")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored (nonzero) entries in lexicographic order.
    pub fn entries(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.entries.iter().map(|(i, &v)| (i, v))
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, idx: &MultiIndex) -> f64 {
        self.entries.get(idx).copied().unwrap_or(0.0)
    }

    /// Entry at an arbitrary (unsorted) raw index.
    pub fn get_raw(&self, raw: &[usize]) -> Result<f64> {
        if raw.len() != self.order {
            return arg(format!("index {raw:?} has length {}, tensor order is {}", raw.len(), self.order));
        }
        Ok(self.get(&MultiIndex::canonicalize(raw, self.dim)?))
    }

    /// `a_{jj...j}` for `j = 1..=n`.
    pub fn diagonal_entries(&self) -> Vec<f64> {
        (1..=self.dim).map(|j| self.get(&MultiIndex::diagonal(j, self.order))).collect()
    }

    /// Nonzero entries with at least two distinct indices.
    pub fn offdiagonal(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.entries().filter(|(i, _)| !i.is_diagonal())
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.order != other.order || self.dim != other.dim {
            return arg(format!(
                "shape mismatch: ({}, {}) vs ({}, {})",
                self.order, self.dim, other.order, other.dim
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut map = self.entries.clone();
        for (i, v) in other.entries() {
            *map.entry(i.clone()).or_insert(0.0) += v;
        }
        Ok(Self::from_map(self.order, self.dim, map))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.mul_scalar(-1.0))
    }

    pub fn mul_scalar(&self, c: f64) -> Self {
        let map = self.entries.iter().map(|(i, v)| (i.clone(), c * v)).collect();
        Self::from_map(self.order, self.dim, map)
    }

    /// `A + c I`.
    pub fn shift_diagonal(&self, c: f64) -> Self {
        let mut map = self.entries.clone();
        for j in 1..=self.dim {
            *map.entry(MultiIndex::diagonal(j, self.order)).or_insert(0.0) += c;
        }
        Self::from_map(self.order, self.dim, map)
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return arg(format!("vector has length {}, tensor dimension is {}", x.len(), self.dim));
        }
        Ok(())
    }

    /// `A x^m`, the full symmetric sum.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        Ok(self.entries().map(|(i, v)| i.permutation_count() as f64 * v * i.monomial(x)).sum())
    }

    /// `A x^(m-1)`, the vector with components `sum a_{j i_2 ... i_m} x_{i_2} ... x_{i_m}`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let mut y = vec![0.0; self.dim];
        for (i, v) in self.entries() {
            let tp = i.tight_pair();
            for (k, &j) in tp.distinct.iter().enumerate() {
                // Drop one occurrence of j from the monomial.
                let mut skipped = false;
                let mut prod = 1.0;
                for &e in i.entries() {
                    if e == j && !skipped {
                        skipped = true;
                    } else {
                        prod *= x[e - 1];
                    }
                }
                y[j - 1] += tp.slice_count(k).expect("slot in range") as f64 * v * prod;
            }
        }
        Ok(y)
    }

    /// Diagonal entries replaced by absolute values, off-diagonal entries by
    /// negated absolute values.
    pub fn comparison_tensor(&self) -> Self {
        let map = self
            .entries
            .iter()
            .map(|(i, &v)| (i.clone(), if i.is_diagonal() { v.abs() } else { -v.abs() }))
            .collect();
        Self::from_map(self.order, self.dim, map)
    }

    /// `A D D ... D`: each entry multiplied by `prod_k d_{i_k}`.
    pub fn scale(&self, d: &DiagonalScaling) -> Result<Self> {
        if d.d.len() != self.dim {
            return arg(format!("scaling has length {}, tensor dimension is {}", d.d.len(), self.dim));
        }
        let map = self.entries.iter().map(|(i, &v)| (i.clone(), v * i.monomial(&d.d))).collect();
        Ok(Self::from_map(self.order, self.dim, map))
    }

    /// Full off-diagonal absolute row sums `sum |a_{j i_2 ... i_m}|` over all
    /// `(i_2, ..., i_m) != (j, ..., j)`.
    pub fn offdiagonal_row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.dim];
        for (i, v) in self.offdiagonal() {
            let tp = i.tight_pair();
            for (k, &j) in tp.distinct.iter().enumerate() {
                sums[j - 1] += tp.slice_count(k).expect("slot in range") as f64 * v.abs();
            }
        }
        sums
    }

    /// `|a_jj...j| - row_sum_j` for each row.
    pub fn dominance_margins(&self) -> Vec<f64> {
        self.diagonal_entries().iter().zip(self.offdiagonal_row_sums()).map(|(d, s)| d.abs() - s).collect()
    }

    pub fn is_dd(&self) -> bool {
        self.dominance_margins().iter().all(|&m| m >= 0.0)
    }

    pub fn is_dd_plus(&self) -> bool {
        self.diagonal_entries().iter().all(|&d| d >= 0.0) && self.is_dd()
    }

    pub fn is_z_tensor(&self) -> bool {
        self.offdiagonal().all(|(_, v)| v <= 0.0)
    }

    pub fn is_diagonal(&self) -> bool {
        self.offdiagonal().next().is_none()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries.values().all(|&v| v >= 0.0)
    }
}

/// Positive diagonal scaling `D = diag(d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalScaling {
    d: Vec<f64>,
}

impl DiagonalScaling {
    pub fn new(d: Vec<f64>) -> Result<Self> {
        if let Some(bad) = d.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
            return arg(format!("scaling components must be positive and finite, got {bad}"));
        }
        Ok(Self { d })
    }

    pub fn ones(n: usize) -> Self {
        Self { d: vec![1.0; n] }
    }

    pub fn values(&self) -> &[f64] {
        &self.d
    }

    pub fn inverse(&self) -> Self {
        Self { d: self.d.iter().map(|v| 1.0 / v).collect() }
    }
}
