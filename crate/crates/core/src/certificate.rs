//! Certificates of generalized diagonal dominance: per-component diagonal
//! shares `b^i_j`, their verification, and the induced sparse decomposition.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{arg, Result, TensorError};
use crate::index::MultiIndex;
use crate::tensor::{DiagonalScaling, SymmetricTensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareEntry {
    pub idx: MultiIndex,
    /// The distinct index of `idx` this share belongs to (1-based).
    pub j: usize,
    pub val: f64,
}

/// Intermediate value `v^i_level` of the power-cone chain of `idx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxEntry {
    pub idx: MultiIndex,
    pub level: usize,
    pub val: f64,
}

/// Witness that a tensor is a sum of sparse GDD+ components plus a
/// nonnegative diagonal. Entries are kept sorted by `(idx, j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GddCertificate {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub b: Vec<ShareEntry>,
    #[serde(default)]
    pub aux: Vec<AuxEntry>,
    pub diag_slack: Vec<f64>,
    pub tol: f64,
}

impl GddCertificate {
    /// Assemble a certificate from shares; sorts entries and recomputes the
    /// diagonal slacks from `a`.
    pub fn new(a: &SymmetricTensor, mut b: Vec<ShareEntry>, mut aux: Vec<AuxEntry>, tol: f64) -> Self {
        b.sort_by(|x, y| (&x.idx, x.j).cmp(&(&y.idx, y.j)));
        aux.sort_by(|x, y| (&x.idx, x.level).cmp(&(&y.idx, y.level)));
        let diag_slack = slacks(a, &b);
        Self { order: Some(a.order()), dim: Some(a.dim()), b, aux, diag_slack, tol }
    }

    /// The explicit certificate of a DD+ tensor: `b^i_j = slice_count * |a_i|`.
    pub fn from_dominance(a: &SymmetricTensor) -> Result<Self> {
        if !a.is_dd_plus() {
            return arg("tensor is not DD+");
        }
        let mut b = Vec::new();
        for (idx, v) in a.offdiagonal() {
            let tp = idx.tight_pair();
            for (k, &j) in tp.distinct.iter().enumerate() {
                b.push(ShareEntry { idx: idx.clone(), j, val: tp.slice_count(k)? as f64 * v.abs() });
            }
        }
        Ok(Self::new(a, b, Vec::new(), 0.0))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| TensorError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("certificate serialization cannot fail")
    }

    /// Shares grouped by component, in certificate order.
    pub fn components(&self) -> BTreeMap<&MultiIndex, Vec<(usize, f64)>> {
        let mut map: BTreeMap<&MultiIndex, Vec<(usize, f64)>> = BTreeMap::new();
        for e in &self.b {
            map.entry(&e.idx).or_default().push((e.j, e.val));
        }
        map
    }
}

fn slacks(a: &SymmetricTensor, b: &[ShareEntry]) -> Vec<f64> {
    let mut sums = vec![0.0; a.dim()];
    for e in b {
        if (1..=a.dim()).contains(&e.j) {
            sums[e.j - 1] += e.val;
        }
    }
    a.diagonal_entries().iter().zip(&sums).map(|(d, s)| d - s).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub constraint: String,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub ok: bool,
    /// Smallest `prod b^alpha / (c |a|^m) - 1` over components.
    pub worst_product_margin: f64,
    /// Smallest `(a_jj - sum b_j) / max|a|` over rows.
    pub worst_row_margin: f64,
    pub violations: Vec<Violation>,
}

/// Structural consistency of `cert` with `a`; any mismatch is an error.
fn check_indices(a: &SymmetricTensor, cert: &GddCertificate) -> Result<()> {
    let (m, n) = (a.order(), a.dim());
    if cert.order.is_some_and(|o| o != m) || cert.dim.is_some_and(|d| d != n) {
        return arg(format!(
            "certificate is for shape ({:?}, {:?}), tensor has order {m} and dimension {n}",
            cert.order, cert.dim
        ));
    }
    if cert.diag_slack.len() != n {
        return arg(format!("certificate has {} diagonal slacks, tensor dimension is {n}", cert.diag_slack.len()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for e in &cert.b {
        if e.idx.order() != m || e.idx.max_entry() > n {
            return arg(format!("certificate index {} does not fit order {m}, dimension {n}", e.idx));
        }
        if e.idx.is_diagonal() || !e.idx.contains(e.j) {
            return arg(format!("share j={} is not a distinct index of off-diagonal {}", e.j, e.idx));
        }
        if !seen.insert((&e.idx, e.j)) {
            return arg(format!("duplicate share for {} at j={}", e.idx, e.j));
        }
    }
    for e in &cert.aux {
        if e.idx.order() != m || e.idx.max_entry() > n {
            return arg(format!("certificate index {} does not fit order {m}, dimension {n}", e.idx));
        }
    }
    for (idx, _) in a.offdiagonal() {
        for j in idx.tight_pair().distinct {
            if !seen.contains(&(idx, j)) {
                return arg(format!("certificate has no share for {idx} at j={j}"));
            }
        }
    }
    Ok(())
}

/// Check both inequality families of the certificate by direct evaluation:
/// shares nonnegative, `prod_k b_{j_k}^alpha_k >= c |a_i|^m` per component
/// (relative tolerance), and `a_jj - sum b_j >= -tol max|a|` per row. The
/// reported `diag_slack` must match the recomputed one.
pub fn verify_certificate(a: &SymmetricTensor, cert: &GddCertificate, tol: f64) -> Result<VerifyReport> {
    check_indices(a, cert)?;
    let m = a.order() as f64;
    let scale = if a.max_abs() > 0.0 { a.max_abs() } else { 1.0 };
    let mut violations = Vec::new();
    let mut worst_product = f64::INFINITY;
    for e in &cert.b {
        if e.val < -tol * scale || !e.val.is_finite() {
            violations.push(Violation { constraint: format!("share {} j={} is negative", e.idx, e.j), margin: e.val });
        }
    }
    let comps = cert.components();
    for (idx, v) in a.offdiagonal() {
        let tp = idx.tight_pair();
        let shares = &comps[idx];
        let mut log_prod = 0.0;
        for (&j, &alpha) in tp.distinct.iter().zip(&tp.powers) {
            let b = shares.iter().find(|s| s.0 == j).expect("checked above").1;
            log_prod += alpha as f64 * if b > 0.0 { b.ln() } else { f64::NEG_INFINITY };
        }
        let log_target = m * tp.c_root()?.ln() + m * v.abs().ln();
        let margin = (log_prod - log_target).exp() - 1.0;
        worst_product = worst_product.min(margin);
        if margin < -tol || margin.is_nan() {
            violations.push(Violation { constraint: format!("product inequality at {idx}"), margin });
        }
    }
    let recomputed = slacks(a, &cert.b);
    let mut worst_row = f64::INFINITY;
    for (j, (&s, &given)) in recomputed.iter().zip(&cert.diag_slack).enumerate() {
        let margin = s / scale;
        worst_row = worst_row.min(margin);
        if margin < -tol {
            violations.push(Violation { constraint: format!("diagonal row {}", j + 1), margin });
        }
        if (s - given).abs() > tol * scale || !given.is_finite() {
            violations.push(Violation {
                constraint: format!("diag_slack[{}] disagrees with recomputed slack", j + 1),
                margin: -(s - given).abs() / scale,
            });
        }
    }
    Ok(VerifyReport {
        ok: violations.is_empty(),
        worst_product_margin: worst_product,
        worst_row_margin: worst_row,
        violations,
    })
}

fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite value")
}

/// Exact rational check of the same inequalities with zero tolerance. The
/// stored `diag_slack` values are derived data and are not compared.
pub fn verify_certificate_exact(a: &SymmetricTensor, cert: &GddCertificate) -> Result<VerifyReport> {
    check_indices(a, cert)?;
    if let Some(e) = cert.b.iter().find(|e| !e.val.is_finite()) {
        return arg(format!("share {} j={} is not finite", e.idx, e.j));
    }
    let m = a.order();
    let scale = if a.max_abs() > 0.0 { a.max_abs() } else { 1.0 };
    let mut violations = Vec::new();
    for e in &cert.b {
        if e.val < 0.0 {
            violations.push(Violation { constraint: format!("share {} j={} is negative", e.idx, e.j), margin: e.val });
        }
    }
    let comps = cert.components();
    let mut worst_product = f64::INFINITY;
    for (idx, v) in a.offdiagonal() {
        let tp = idx.tight_pair();
        let shares = &comps[idx];
        let mut prod = BigRational::from_integer(BigInt::from(1));
        for (&j, &alpha) in tp.distinct.iter().zip(&tp.powers) {
            let b = shares.iter().find(|s| s.0 == j).expect("checked above").1;
            prod *= num_traits::pow(exact(b), alpha);
        }
        let target = BigRational::from_integer(BigInt::from(tp.c_constant()?)) * num_traits::pow(exact(v).abs(), m);
        let margin = ((&prod - &target) / &target).to_f64().unwrap_or(f64::NEG_INFINITY);
        worst_product = worst_product.min(margin);
        if prod < target {
            violations.push(Violation { constraint: format!("product inequality at {idx}"), margin });
        }
    }
    let mut sums = vec![BigRational::zero(); a.dim()];
    for e in &cert.b {
        sums[e.j - 1] += exact(e.val);
    }
    let mut worst_row = f64::INFINITY;
    for (j, (d, s)) in a.diagonal_entries().iter().zip(&sums).enumerate() {
        let slack = exact(*d) - s;
        let margin = slack.to_f64().unwrap_or(0.0) / scale;
        worst_row = worst_row.min(margin);
        if slack.is_negative() {
            violations.push(Violation { constraint: format!("diagonal row {}", j + 1), margin });
        }
    }
    Ok(VerifyReport {
        ok: violations.is_empty(),
        worst_product_margin: worst_product,
        worst_row_margin: worst_row,
        violations,
    })
}

/// Sparse component carrying `a` at `idx` and `b_j` on the touched diagonals.
pub fn component_tensor(order: usize, dim: usize, idx: &MultiIndex, a: f64, shares: &[(usize, f64)]) -> SymmetricTensor {
    let mut map = BTreeMap::new();
    map.insert(idx.clone(), a);
    for &(j, b) in shares {
        map.insert(MultiIndex::diagonal(j, order), b);
    }
    SymmetricTensor::from_map(order, dim, map)
}

/// Split `a` into one sparse component per certificate component plus a
/// diagonal remainder holding the slacks (last). Fails unless the
/// certificate verifies at `tol`.
pub fn decompose(a: &SymmetricTensor, cert: &GddCertificate, tol: f64) -> Result<Vec<SymmetricTensor>> {
    let report = verify_certificate(a, cert, tol)?;
    if !report.ok {
        return arg(format!(
            "certificate does not verify: {}",
            report.violations.first().map(|v| v.constraint.as_str()).unwrap_or("")
        ));
    }
    let (m, n) = (a.order(), a.dim());
    let mut out: Vec<SymmetricTensor> = cert
        .components()
        .into_iter()
        .map(|(idx, shares)| component_tensor(m, n, idx, a.get(idx), &shares))
        .collect();
    out.push(SymmetricTensor::diagonal(m, &slacks(a, &cert.b))?);
    Ok(out)
}

/// Per-component positive scaling making a sparse component diagonally
/// dominant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentScaling {
    pub idx: MultiIndex,
    pub distinct: Vec<usize>,
    pub d: Vec<f64>,
}

impl ComponentScaling {
    /// Full-length scaling with ones outside the component's indices.
    pub fn to_diagonal_scaling(&self, n: usize) -> Result<DiagonalScaling> {
        let mut d = vec![1.0; n];
        for (&j, &v) in self.distinct.iter().zip(&self.d) {
            if j > n {
                return Err(TensorError::Index { entry: j, dim: n });
            }
            d[j - 1] = v;
        }
        DiagonalScaling::new(d)
    }
}

/// `d_{j_k} = (slice_count_k / b_k)^(1/m)`; `b` holds one share per distinct
/// index of `idx`, in order. A zero share is only allowed when `a_i = 0`, in
/// which case that component of `d` is 1.
pub fn component_scaling(idx: &MultiIndex, a: f64, b: &[f64]) -> Result<ComponentScaling> {
    let tp = idx.tight_pair();
    if tp.len() < 2 {
        return arg("component scaling needs an off-diagonal index");
    }
    if b.len() != tp.len() {
        return arg(format!("expected {} shares for {idx}, got {}", tp.len(), b.len()));
    }
    let m = idx.order() as f64;
    let mut d = Vec::with_capacity(b.len());
    for (k, &bk) in b.iter().enumerate() {
        if !(bk >= 0.0 && bk.is_finite()) {
            return arg(format!("share {bk} for {idx} is not a nonnegative number"));
        }
        if bk == 0.0 {
            if a != 0.0 {
                return Err(TensorError::Degenerate(format!("zero share for {idx} with nonzero entry {a}")));
            }
            d.push(1.0);
        } else {
            d.push((tp.slice_count(k)? as f64 / bk).powf(1.0 / m));
        }
    }
    Ok(ComponentScaling { idx: idx.clone(), distinct: tp.distinct, d })
}

/// Scalings for every component of a certificate.
pub fn certificate_scalings(a: &SymmetricTensor, cert: &GddCertificate) -> Result<Vec<ComponentScaling>> {
    cert.components()
        .into_iter()
        .map(|(idx, shares)| {
            let vals: Vec<f64> = shares.iter().map(|s| s.1).collect();
            component_scaling(idx, a.get(idx), &vals)
        })
        .collect()
}
