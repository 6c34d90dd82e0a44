//! Forms induced by DD+ and GDD+ tensors, lower bounds for
//! `min A x^m / sum x_i^m`, and explicit square decompositions of the
//! quartic basis forms.

use htensor_conic::{solve, ConicProblem, SolverConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use std::collections::BTreeMap;

use crate::error::{arg, Result, TensorError};
use crate::index::{multinomial, MultiIndex};
use crate::membership::{is_h_plus, max_diagonal_shift, MembershipVerdict};
use crate::poly::{Coefficient, Exponent, Poly};
use crate::tensor::SymmetricTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn apply<T: Coefficient>(self, v: T) -> T {
        match self {
            Sign::Plus => v,
            Sign::Minus => -v,
        }
    }
}

fn exponent_of(idx: &MultiIndex, n: usize) -> Exponent {
    let mut e = vec![0u32; n];
    for &j in idx.entries() {
        e[j - 1] += 1;
    }
    e
}

fn index_of(exp: &[u32]) -> Result<MultiIndex> {
    let raw: Vec<usize> = exp.iter().enumerate().flat_map(|(j, &k)| std::iter::repeat(j + 1).take(k as usize)).collect();
    MultiIndex::canonicalize(&raw, exp.len())
}

/// `p(x) = A x^m`: each coefficient is the entry times its permutation count.
pub fn poly_from_tensor(a: &SymmetricTensor) -> Poly<f64> {
    let n = a.dim();
    Poly::from_terms(
        a.order(),
        n,
        a.entries().map(|(idx, v)| (exponent_of(idx, n), idx.permutation_count() as f64 * v)),
    )
    .expect("exponents come from valid indices")
}

/// The unique symmetric tensor with `A x^m = p(x)`.
pub fn tensor_from_poly(p: &Poly<f64>) -> Result<SymmetricTensor> {
    let mut map = BTreeMap::new();
    for (exp, &c) in p.terms() {
        let idx = index_of(exp)?;
        map.insert(idx.clone(), c / idx.permutation_count() as f64);
    }
    if p.degree() == 0 || p.nvars() == 0 {
        return arg("polynomial needs positive degree and at least one variable");
    }
    let entries = map.into_iter().map(|(i, v)| (Vec::from(i), v));
    SymmetricTensor::from_entries(p.degree(), p.nvars(), entries)
}

fn check_offdiagonal(idx: &MultiIndex, n: usize) -> Result<()> {
    if idx.is_diagonal() {
        return arg(format!("{idx} is a diagonal index"));
    }
    if idx.max_entry() > n {
        return Err(TensorError::Index { entry: idx.max_entry(), dim: n });
    }
    Ok(())
}

/// `sum_k slice_count_k x_{j_k}^m +/- multinomial(alpha) x_{i_1} ... x_{i_m}`.
pub fn basis_f<T: Coefficient>(idx: &MultiIndex, sign: Sign, n: usize) -> Result<Poly<T>> {
    check_offdiagonal(idx, n)?;
    let tp = idx.tight_pair();
    let m = idx.order();
    let mut terms = Vec::new();
    for (k, &j) in tp.distinct.iter().enumerate() {
        let mut e = vec![0u32; n];
        e[j - 1] = m as u32;
        terms.push((e, T::from_count(tp.slice_count(k)?)));
    }
    terms.push((exponent_of(idx, n), sign.apply(T::from_count(tp.multinomial()))));
    Poly::from_terms(m, n, terms)
}

/// `sum_k beta_k x_{j_k}^m +/- multinomial(alpha) mu x_{i_1} ... x_{i_m}` with
/// `mu = (prod beta_k^alpha_k / prod slice_count_k^alpha_k)^(1/m)`. In exact
/// arithmetic `mu` must be rational.
pub fn basis_g<T: Coefficient>(idx: &MultiIndex, sign: Sign, beta: &[T], n: usize) -> Result<Poly<T>> {
    check_offdiagonal(idx, n)?;
    let tp = idx.tight_pair();
    let m = idx.order();
    if beta.len() != tp.len() {
        return arg(format!("{idx} needs {} weights, got {}", tp.len(), beta.len()));
    }
    if beta.iter().any(|b| *b < T::zero()) {
        return arg("weights must be nonnegative");
    }
    let mut num = T::one();
    let mut den = T::one();
    for (k, (b, &alpha)) in beta.iter().zip(&tp.powers).enumerate() {
        let s = T::from_count(tp.slice_count(k)?);
        for _ in 0..alpha {
            num = num * b.clone();
            den = den * s.clone();
        }
    }
    let ratio = num.div(&den);
    let mu = ratio.root(m as u32).ok_or_else(|| TensorError::NotPerfectPower(format!("{ratio:?}")))?;
    let mut terms = Vec::new();
    for (&j, b) in tp.distinct.iter().zip(beta) {
        let mut e = vec![0u32; n];
        e[j - 1] = m as u32;
        terms.push((e, b.clone()));
    }
    terms.push((exponent_of(idx, n), sign.apply(T::from_count(tp.multinomial()) * mu)));
    Poly::from_terms(m, n, terms)
}

/// Whether the form's tensor is DD+.
pub fn is_ddth(p: &Poly<f64>) -> Result<bool> {
    Ok(tensor_from_poly(p)?.is_dd_plus())
}

/// H+ membership of the form's tensor.
pub fn is_gddth(p: &Poly<f64>, cfg: &SolverConfig) -> Result<MembershipVerdict> {
    is_h_plus(&tensor_from_poly(p)?, cfg)
}

fn require_even(a: &SymmetricTensor) -> Result<()> {
    if a.order() % 2 != 0 || a.order() == 0 {
        return arg(format!("bounds need an even order, got {}", a.order()));
    }
    Ok(())
}

/// Largest `lambda` with `A - lambda I` DD+, in closed form.
pub fn lower_bound_ddth(a: &SymmetricTensor) -> Result<f64> {
    require_even(a)?;
    Ok(a
        .diagonal_entries()
        .iter()
        .zip(a.offdiagonal_row_sums())
        .map(|(d, s)| d - s)
        .fold(f64::INFINITY, f64::min))
}

/// The same bound as a linear program with `|a_i| <= u_i` modelled by two
/// inequalities per off-diagonal entry.
pub fn lower_bound_ddth_lp(a: &SymmetricTensor, cfg: &SolverConfig) -> Result<f64> {
    require_even(a)?;
    let scale = if a.max_abs() > 0.0 { a.max_abs() } else { 1.0 };
    let diag = a.diagonal_entries();
    // lambda = offset - v with v >= 0, since lambda never exceeds a diagonal entry
    let offset = diag.iter().fold(f64::INFINITY, |m, &d| m.min(d)) / scale;
    let mut p = ConicProblem::new();
    let v_lambda = p.add_var();
    p.add_objective(v_lambda, -1.0);
    let mut nonneg = vec![v_lambda];
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); a.dim()];
    for (idx, v) in a.offdiagonal() {
        let u = p.add_var();
        let s = p.add_vars(2);
        p.add_eq(vec![(u, 1.0), (s[0], -1.0)], v / scale);
        p.add_eq(vec![(u, 1.0), (s[1], -1.0)], -v / scale);
        nonneg.extend(s);
        nonneg.push(u);
        let tp = idx.tight_pair();
        for (k, &j) in tp.distinct.iter().enumerate() {
            rows[j - 1].push((u, tp.slice_count(k)? as f64));
        }
    }
    for (j, mut coefs) in rows.into_iter().enumerate() {
        let w = p.add_var();
        nonneg.push(w);
        coefs.push((v_lambda, -1.0));
        coefs.push((w, 1.0));
        p.add_eq(coefs, diag[j] / scale - offset);
    }
    p.add_nonneg(nonneg);
    // a pure LP converges cleanly, so it can serve as a sharp cross-check
    let cfg = SolverConfig { feas_tol: cfg.feas_tol.min(1e-11), gap_tol: cfg.gap_tol.min(1e-11), ..cfg.clone() };
    let res = solve(&p, &cfg)?;
    if !res.status.has_solution() {
        return Err(TensorError::Solver { status: res.status, iterations: res.iterations });
    }
    Ok((offset + res.obj) * scale)
}

/// Largest `lambda` with `A - lambda I` GDD+.
pub fn lower_bound_gddth(a: &SymmetricTensor, cfg: &SolverConfig) -> Result<f64> {
    require_even(a)?;
    Ok(max_diagonal_shift(a, cfg)?.lambda)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    pub samples: usize,
    /// Coordinate-descent sweeps applied to the best sample.
    pub refine_steps: usize,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { samples: 10_000, refine_steps: 50, seed: 0 }
    }
}

fn rayleigh(a: &SymmetricTensor, x: &[f64]) -> f64 {
    let m = a.order() as i32;
    a.evaluate(x).expect("length matches") / x.iter().map(|v| v.powi(m)).sum::<f64>()
}

/// Smallest value of `A x^m / sum x_i^m` found over coordinate vectors and
/// random directions, refined by coordinate descent. An upper bound on the
/// minimum H-eigenvalue for even order.
pub fn sampled_upper_bound(a: &SymmetricTensor, cfg: &SamplingConfig) -> Result<f64> {
    require_even(a)?;
    if cfg.samples == 0 {
        return arg("need at least one sample");
    }
    // gains at rounding level are ignored
    let better = |r: f64, best: f64| r < best - 4.0 * f64::EPSILON * best.abs();
    let n = a.dim();
    let mut best_x = vec![0.0; n];
    best_x[0] = 1.0;
    let mut best = rayleigh(a, &best_x);
    for j in 1..n {
        let mut x = vec![0.0; n];
        x[j] = 1.0;
        let r = rayleigh(a, &x);
        if r < best {
            best = r;
            best_x = x;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.samples {
        let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x: Vec<f64> = x.iter().map(|v| v / norm).collect();
        let r = rayleigh(a, &x);
        if better(r, best) {
            best = r;
            best_x = x;
        }
    }
    let mut h = 0.5;
    for _ in 0..cfg.refine_steps {
        let mut improved = false;
        for i in 0..n {
            for dir in [1.0, -1.0] {
                let mut x = best_x.clone();
                x[i] += dir * h;
                if x.iter().all(|&v| v == 0.0) {
                    continue;
                }
                let r = rayleigh(a, &x);
                if better(r, best) {
                    best = r;
                    best_x = x;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    Ok(best)
}

/// Weighted sum of squared quadratic forms claimed to equal `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareDecomposition<T> {
    pub target: Poly<T>,
    pub squares: Vec<(T, Poly<T>)>,
}

impl<T: Coefficient> SquareDecomposition<T> {
    pub fn expand(&self) -> Poly<T> {
        let mut sum = Poly::zero(self.target.degree(), self.target.nvars());
        for (w, q) in &self.squares {
            sum = sum.add(&q.square().scale(w)).expect("quartic forms in the same variables");
        }
        sum
    }

    /// `expand() == target` with exact coefficient comparison.
    pub fn is_exact(&self) -> bool {
        self.expand() == self.target
    }
}

impl SquareDecomposition<f64> {
    /// Largest coefficient difference relative to the largest target coefficient.
    pub fn relative_error(&self) -> f64 {
        let diff = self.expand().sub(&self.target).expect("same shape");
        diff.max_abs() / self.target.max_abs().max(f64::MIN_POSITIVE)
    }
}

/// Representative off-diagonal index of each quartic case, in four variables.
pub fn case_index(case: u8) -> Result<MultiIndex> {
    let raw: &[usize] = match case {
        1 => &[1, 2, 3, 4],
        2 => &[1, 1, 2, 3],
        3 => &[1, 1, 1, 2],
        4 => &[1, 1, 2, 2],
        _ => return arg(format!("quartic case must be 1..=4, got {case}")),
    };
    MultiIndex::canonicalize(raw, 4)
}

fn quad<T: Coefficient>(terms: Vec<(T, [u32; 4])>) -> Poly<T> {
    Poly::from_terms(2, 4, terms.into_iter().map(|(c, e)| (e.to_vec(), c))).expect("quadratic monomials")
}

fn count<T: Coefficient>(n: u64) -> T {
    T::from_count(n)
}

/// Explicit weighted squares for the quartic basis forms in four variables:
/// `basis_f` when `beta` is `None`, `basis_g` with the given weights
/// otherwise. Cases are `(1,2,3,4)`, `(1,1,2,3)`, `(1,1,1,2)` and `(1,1,2,2)`.
pub fn appendix_identity<T: Coefficient>(case: u8, sign: Sign, beta: Option<&[T]>) -> Result<SquareDecomposition<T>> {
    let idx = case_index(case)?;
    let s = |v: T| sign.apply(v);
    const X1X1: [u32; 4] = [2, 0, 0, 0];
    const X2X2: [u32; 4] = [0, 2, 0, 0];
    const X3X3: [u32; 4] = [0, 0, 2, 0];
    const X4X4: [u32; 4] = [0, 0, 0, 2];
    const X1X2: [u32; 4] = [1, 1, 0, 0];
    const X1X3: [u32; 4] = [1, 0, 1, 0];
    const X3X4: [u32; 4] = [0, 0, 1, 1];
    let one = T::one;
    let Some(beta) = beta else {
        let squares = match case {
            1 => vec![
                (count(6), quad(vec![(one(), X1X1), (-one(), X2X2)])),
                (count(6), quad(vec![(one(), X3X3), (-one(), X4X4)])),
                (count(12), quad(vec![(one(), X1X2), (s(one()), X3X4)])),
            ],
            2 => vec![
                (count(3), quad(vec![(one(), X1X1), (-one(), X2X2)])),
                (count(3), quad(vec![(one(), X1X1), (-one(), X3X3)])),
                (count(6), quad(vec![(one(), X1X2), (s(one()), X1X3)])),
            ],
            3 => vec![
                (one(), quad(vec![(one(), X1X1), (-one(), X2X2)])),
                (count(2), quad(vec![(one(), X1X1), (s(one()), X1X2)])),
            ],
            _ => vec![(count(3), quad(vec![(one(), X1X1), (s(one()), X2X2)]))],
        };
        return Ok(SquareDecomposition { target: basis_f(&idx, sign, 4)?, squares });
    };
    let target = basis_g(&idx, sign, beta, 4)?;
    let root = |v: T, k: u32| v.root(k).ok_or_else(|| TensorError::NotPerfectPower(format!("{v:?}")));
    let b = |k: usize| beta[k].clone();
    let squares = match case {
        1 => vec![
            (one(), quad(vec![(root(b(0), 2)?, X1X1), (-root(b(1), 2)?, X2X2)])),
            (one(), quad(vec![(root(b(2), 2)?, X3X3), (-root(b(3), 2)?, X4X4)])),
            (count(2), quad(vec![(root(b(0) * b(1), 4)?, X1X2), (s(root(b(2) * b(3), 4)?), X3X4)])),
        ],
        2 => {
            let half = b(0).div(&count(2));
            vec![
                (one(), quad(vec![(root(half.clone(), 2)?, X1X1), (-root(b(1), 2)?, X2X2)])),
                (one(), quad(vec![(root(half.clone(), 2)?, X1X1), (-root(b(2), 2)?, X3X3)])),
                (
                    count(2),
                    quad(vec![(root(half.clone() * b(1), 4)?, X1X2), (s(root(half * b(2), 4)?), X1X3)]),
                ),
            ]
        }
        3 => {
            let third = b(0).div(&count(3));
            vec![
                (one(), quad(vec![(root(third.clone(), 2)?, X1X1), (-root(b(1), 2)?, X2X2)])),
                (
                    count(2),
                    quad(vec![(root(third.clone() * third.clone(), 4)?, X1X1), (s(root(third * b(1), 4)?), X1X2)]),
                ),
            ]
        }
        _ => vec![(one(), quad(vec![(root(b(0), 2)?, X1X1), (s(root(b(1), 2)?), X2X2)]))],
    };
    Ok(SquareDecomposition { target, squares })
}

/// `multinomial(m; alpha)` for an exponent vector.
pub fn exponent_multinomial(exp: &[u32]) -> u64 {
    multinomial(&exp.iter().map(|&k| k as usize).collect::<Vec<_>>())
}
