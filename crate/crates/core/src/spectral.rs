//! Minimum H-eigenvalues of symmetric M-tensors: a single conic program and
//! an independent power-iteration oracle on `A = sI - D`.

use htensor_conic::SolverConfig;
use log::debug;
use serde::Serialize;
use std::collections::BTreeMap;

use crate::error::{arg, Result, TensorError};
use crate::index::MultiIndex;
use crate::membership::{is_m_tensor, max_diagonal_shift, VerdictKind};
use crate::tensor::SymmetricTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EigMethod {
    Conic,
    PowerIteration,
    Bisection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigResult {
    pub lambda: f64,
    pub method: EigMethod,
    /// `||A x^(m-1) - lambda x^[m-1]||_inf` for the power-iteration
    /// eigenvector; solver or bracket accuracy for the other methods.
    pub residual: f64,
    pub iterations: usize,
    /// The iteration ran on `D + epsilon * ones` after failing on `D`.
    pub perturbed: bool,
    #[serde(skip)]
    pub epsilon: f64,
    #[serde(skip)]
    pub eigenvector: Option<Vec<f64>>,
}

/// `A = s I - D` with `D` entrywise nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct MTensorForm {
    pub s: f64,
    pub d: SymmetricTensor,
}

/// Split a Z-tensor as `s I - D` with `s = max(0, max_j a_jj)`.
pub fn to_m_form(a: &SymmetricTensor) -> Result<MTensorForm> {
    if !a.is_z_tensor() {
        return arg("tensor has a positive off-diagonal entry, so it is not a Z-tensor");
    }
    let s = a.diagonal_entries().into_iter().fold(0.0, f64::max);
    let d = a.mul_scalar(-1.0).shift_diagonal(s);
    Ok(MTensorForm { s, d })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 10_000 }
    }
}

struct PowerRun {
    lambda: f64,
    x: Vec<f64>,
    iterations: usize,
}

/// Power iteration on a nonnegative tensor with every entry of `x` kept
/// positive. Returns `None` if the min/max ratio bracket does not close.
fn nqz(d: &SymmetricTensor, cfg: &PowerConfig) -> Option<PowerRun> {
    let (m, n) = (d.order(), d.dim());
    let mut x = vec![(1.0 / n as f64).powf(1.0 / m as f64); n];
    for it in 1..=cfg.max_iter {
        let y = d.apply(&x).expect("length matches");
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (yi, xi) in y.iter().zip(&x) {
            let r = yi / xi.powi(m as i32 - 1);
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if !(lo.is_finite() && hi.is_finite()) {
            return None;
        }
        if hi - lo <= cfg.tol * (1.0 + hi) {
            return Some(PowerRun { lambda: 0.5 * (lo + hi), x, iterations: it });
        }
        let mut next: Vec<f64> = y.iter().map(|v| v.max(0.0).powf(1.0 / (m - 1) as f64)).collect();
        let norm = next.iter().map(|v| v.powi(m as i32)).sum::<f64>().powf(1.0 / m as f64);
        if !(norm > 0.0 && norm.is_finite()) || next.iter().any(|&v| v <= 0.0) {
            return None;
        }
        next.iter_mut().for_each(|v| *v /= norm);
        x = next;
    }
    None
}

/// Indices grouped into classes that share an off-diagonal entry.
fn coupled_blocks(d: &SymmetricTensor) -> Vec<Vec<usize>> {
    let n = d.dim();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for (idx, _) in d.offdiagonal() {
        let tp = idx.tight_pair();
        let r0 = find(&mut parent, tp.distinct[0] - 1);
        for &j in &tp.distinct[1..] {
            let r = find(&mut parent, j - 1);
            parent[r] = r0;
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i + 1);
    }
    groups.into_values().collect()
}

fn restrict(d: &SymmetricTensor, block: &[usize]) -> SymmetricTensor {
    let pos = |j: usize| block.iter().position(|&b| b == j);
    let entries = d
        .entries()
        .filter(|(i, _)| block.contains(&i.entries()[0]))
        .map(|(i, v)| (i.entries().iter().map(|&e| pos(e).expect("same block") + 1).collect(), v));
    SymmetricTensor::from_entries(d.order(), block.len(), entries).expect("restriction is well formed")
}

fn residual(t: &SymmetricTensor, lambda: f64, x: &[f64]) -> f64 {
    let m = t.order() as i32;
    let y = t.apply(x).expect("length matches");
    y.iter().zip(x).map(|(yi, xi)| (yi - lambda * xi.powi(m - 1)).abs()).fold(0.0, f64::max)
}

/// Spectral radius of a symmetric nonnegative tensor. Decoupled blocks are
/// handled separately; a block on which the bracket does not close is retried
/// once as `D + epsilon * ones` with `epsilon = tol / 10`.
pub fn rho_nonnegative(d: &SymmetricTensor, cfg: &PowerConfig) -> Result<EigResult> {
    if !d.is_nonnegative() {
        return arg("tensor has a negative entry");
    }
    if d.nnz() == 0 {
        return arg("tensor is identically zero");
    }
    if !(cfg.tol > 0.0) {
        return arg("tolerance must be positive");
    }
    let (m, n) = (d.order(), d.dim());
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut perturbed = false;
    let epsilon = cfg.tol / 10.0;
    for block in coupled_blocks(d) {
        let sub = restrict(d, &block);
        let (lambda, xb) = if block.len() == 1 {
            (sub.get(&MultiIndex::diagonal(1, m)), vec![1.0])
        } else if sub.nnz() == 0 {
            (0.0, vec![(1.0 / block.len() as f64).powf(1.0 / m as f64); block.len()])
        } else {
            let run = match nqz(&sub, cfg) {
                Some(r) => r,
                None => {
                    debug!("power iteration stalled on a block of size {}, perturbing", block.len());
                    perturbed = true;
                    let shifted = sub.add(&SymmetricTensor::ones(m, block.len())?.mul_scalar(epsilon))?;
                    let r = nqz(&shifted, cfg).ok_or(TensorError::Convergence(cfg.max_iter))?;
                    iterations += cfg.max_iter;
                    r
                }
            };
            iterations += run.iterations;
            (run.lambda, run.x)
        };
        if best.as_ref().map_or(true, |(b, _)| lambda > *b) {
            let mut x = vec![0.0; n];
            for (&j, v) in block.iter().zip(xb) {
                x[j - 1] = v;
            }
            best = Some((lambda, x));
        }
    }
    let (lambda, x) = best.expect("at least one block");
    Ok(EigResult {
        lambda,
        method: EigMethod::PowerIteration,
        residual: residual(d, lambda, &x),
        iterations,
        perturbed,
        epsilon: if perturbed { epsilon } else { 0.0 },
        eigenvector: Some(x),
    })
}

/// `s - rho(D)` for `A = sI - D`.
pub fn min_h_eigenvalue_oracle(a: &SymmetricTensor, cfg: &PowerConfig) -> Result<EigResult> {
    let form = to_m_form(a)?;
    if form.d.nnz() == 0 {
        let x = vec![(1.0 / a.dim() as f64).powf(1.0 / a.order() as f64); a.dim()];
        return Ok(EigResult {
            lambda: form.s,
            method: EigMethod::PowerIteration,
            residual: residual(a, form.s, &x),
            iterations: 0,
            perturbed: false,
            epsilon: 0.0,
            eigenvector: Some(x),
        });
    }
    let rho = rho_nonnegative(&form.d, cfg)?;
    let lambda = form.s - rho.lambda;
    let x = rho.eigenvector.clone().expect("power iteration returns a vector");
    Ok(EigResult { lambda, residual: residual(a, lambda, &x), ..rho })
}

fn require_m_tensor(a: &SymmetricTensor, cfg: &SolverConfig) -> Result<()> {
    let v = is_m_tensor(a, cfg)?;
    if v.kind == VerdictKind::NotMember {
        return arg(format!("not an M-tensor: {}", v.note.unwrap_or_default()));
    }
    Ok(())
}

/// Largest `lambda` with `A - lambda I` in GDD+, for an M-tensor `A`.
pub fn min_h_eigenvalue_conic(a: &SymmetricTensor, cfg: &SolverConfig) -> Result<EigResult> {
    require_m_tensor(a, cfg)?;
    let sol = max_diagonal_shift(a, cfg)?;
    Ok(EigResult {
        lambda: sol.lambda,
        method: EigMethod::Conic,
        residual: cfg.gap_tol * a.max_abs().max(1.0),
        iterations: sol.iterations,
        perturbed: false,
        epsilon: 0.0,
        eigenvector: None,
    })
}

/// `(lo, hi)` with `hi` the smallest diagonal entry and `lo = hi - max off-diagonal row sum`.
pub fn default_bracket(a: &SymmetricTensor) -> (f64, f64) {
    let hi = a.diagonal_entries().into_iter().fold(f64::INFINITY, f64::min);
    let width = a.offdiagonal_row_sums().into_iter().fold(0.0, f64::max);
    (hi - width, hi)
}

/// Whether `A - lambda I` is an M-tensor, read from the sign of the optimal
/// margin so that the decision is sharp near the boundary.
fn shifted_feasible(a: &SymmetricTensor, lambda: f64, cfg: &SolverConfig) -> Result<bool> {
    let v = is_m_tensor(&a.shift_diagonal(-lambda), cfg)?;
    Ok(match v.margin {
        Some(t) => t >= 0.0,
        None => v.kind != VerdictKind::NotMember,
    })
}

/// Bisection on `lambda` using M-tensor membership of `A - lambda I`; the
/// feasible set is a downward ray.
pub fn bisection_fallback(a: &SymmetricTensor, lo: f64, hi: f64, tol: f64, cfg: &SolverConfig) -> Result<EigResult> {
    if !(lo <= hi) || !(tol > 0.0) {
        return arg(format!("invalid bracket [{lo}, {hi}] or tolerance {tol}"));
    }
    if !a.is_z_tensor() {
        return arg("not an M-tensor: tensor has a positive off-diagonal entry");
    }
    // `lo` may sit exactly on the boundary, so only a clear NotMember rejects it
    if is_m_tensor(&a.shift_diagonal(-lo), cfg)?.kind == VerdictKind::NotMember {
        return arg(format!("invalid bracket: A - {lo} I is not an M-tensor"));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut iterations = 1;
    if shifted_feasible(a, hi, cfg)? {
        lo = hi;
    }
    iterations += 1;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if shifted_feasible(a, mid, cfg)? {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(EigResult {
        lambda: 0.5 * (lo + hi),
        method: EigMethod::Bisection,
        residual: hi - lo,
        iterations,
        perturbed: false,
        epsilon: 0.0,
        eigenvector: None,
    })
}
