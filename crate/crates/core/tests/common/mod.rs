//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use htensor::{DiagonalScaling, SymmetricTensor};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// The order-4, dimension-2 tensor with entries 4, -2, -1, 64/3, 1000.
pub fn worked_example() -> SymmetricTensor {
    SymmetricTensor::from_entries(
        4,
        2,
        vec![
            (vec![1, 1, 1, 1], 4.0),
            (vec![1, 1, 1, 2], -2.0),
            (vec![1, 1, 2, 2], -1.0),
            (vec![1, 2, 2, 2], 64.0 / 3.0),
            (vec![2, 2, 2, 2], 1000.0),
        ],
    )
    .unwrap()
}

pub fn tensor(order: usize, dim: usize, e: &[(&[usize], f64)]) -> SymmetricTensor {
    SymmetricTensor::from_entries(order, dim, e.iter().map(|(i, v)| (i.to_vec(), *v))).unwrap()
}

/// Every index tuple in `[1, n]^m`, in lexicographic order.
pub fn all_tuples(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|t| {
                (1..=n).map(move |j| {
                    let mut t = t.clone();
                    t.push(j);
                    t
                })
            })
            .collect();
    }
    out
}

/// Dense evaluation `sum over all tuples a_{i_1..i_m} x_{i_1}..x_{i_m}`.
pub fn dense_evaluate(a: &SymmetricTensor, x: &[f64]) -> f64 {
    all_tuples(a.dim(), a.order())
        .iter()
        .map(|t| a.get_raw(t).unwrap() * t.iter().map(|&i| x[i - 1]).product::<f64>())
        .sum()
}

/// Dense `A x^(m-1)`.
pub fn dense_apply(a: &SymmetricTensor, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.dim()];
    for t in all_tuples(a.dim(), a.order()) {
        y[t[0] - 1] += a.get_raw(&t).unwrap() * t[1..].iter().map(|&i| x[i - 1]).product::<f64>();
    }
    y
}

pub fn abs_tensor(a: &SymmetricTensor) -> SymmetricTensor {
    SymmetricTensor::from_entries(a.order(), a.dim(), a.entries().map(|(i, v)| (i.entries().to_vec(), v.abs()))).unwrap()
}

/// Dense off-diagonal absolute row sums.
pub fn dense_row_sums(a: &SymmetricTensor) -> Vec<f64> {
    let mut s = vec![0.0; a.dim()];
    for t in all_tuples(a.dim(), a.order()) {
        if t.iter().any(|&i| i != t[0]) {
            s[t[0] - 1] += a.get_raw(&t).unwrap().abs();
        }
    }
    s
}

pub fn random_tensor(rng: &mut ChaCha8Rng, m: usize, n: usize, density: f64) -> SymmetricTensor {
    let entries: Vec<(Vec<usize>, f64)> = htensor::index::enumerate_all(n, m)
        .into_iter()
        .filter_map(|i| (rng.gen::<f64>() < density).then(|| (i.into(), rng.gen_range(-1.0..1.0))))
        .collect();
    SymmetricTensor::from_entries(m, n, entries).unwrap()
}

/// Random off-diagonal part with diagonal set to the row sum times a factor
/// in `[1.05, 2)`, so the result is strictly DD+.
pub fn random_dd_plus(rng: &mut ChaCha8Rng, m: usize, n: usize) -> SymmetricTensor {
    let off: Vec<(Vec<usize>, f64)> = htensor::enumerate_offdiagonal(n, m)
        .unwrap()
        .into_iter()
        .filter_map(|i| (rng.gen::<f64>() < 0.6).then(|| (i.into(), rng.gen_range(-1.0..1.0))))
        .collect();
    let a = SymmetricTensor::from_entries(m, n, off).unwrap();
    let sums = a.offdiagonal_row_sums();
    let diag: Vec<f64> = sums.iter().map(|s| s.max(0.1) * rng.gen_range(1.05..2.0)).collect();
    a.add(&SymmetricTensor::diagonal(m, &diag).unwrap()).unwrap()
}

pub fn random_scaling(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> DiagonalScaling {
    DiagonalScaling::new((0..n).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

/// Dense random nonnegative tensor with entries in `[0, 1)`.
pub fn random_nonnegative(rng: &mut ChaCha8Rng, m: usize, n: usize) -> SymmetricTensor {
    let entries: Vec<(Vec<usize>, f64)> =
        htensor::index::enumerate_all(n, m).into_iter().map(|i| (i.into(), rng.gen::<f64>())).collect();
    SymmetricTensor::from_entries(m, n, entries).unwrap()
}

/// Maximum over `samples` random points of the simplex of `D x^m / sum x^m`
/// at the m-norm-normalized point, i.e. a lower estimate of `rho(D)`.
pub fn sampled_rho_lower(rng: &mut ChaCha8Rng, d: &SymmetricTensor, samples: usize) -> f64 {
    let m = d.order() as i32;
    let mut best = 0.0f64;
    for _ in 0..samples {
        let x: Vec<f64> = (0..d.dim()).map(|_| rng.gen::<f64>()).collect();
        let norm: f64 = x.iter().map(|v| v.powi(m)).sum();
        best = best.max(dense_evaluate(d, &x) / norm);
    }
    best
}

/// Generalized diagonal dominance of a symmetric matrix by search over a
/// log-spaced grid of positive scalings (first component fixed to 1).
/// Returns the best `min_i (|a_ii| d_i - sum_j |a_ij| d_j) / (d_i max|a|)`.
pub fn grid_gdd_margin(a: &[Vec<f64>], points: usize, range: f64) -> f64 {
    let n = a.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let grid: Vec<f64> = (0..points).map(|k| range.powf(2.0 * k as f64 / (points - 1) as f64 - 1.0)).collect();
    let mut best = f64::NEG_INFINITY;
    let mut d = vec![1.0; n];
    let mut counter = vec![0usize; n - 1];
    loop {
        for (k, &c) in counter.iter().enumerate() {
            d[k + 1] = grid[c];
        }
        let mut worst = f64::INFINITY;
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[i][j].abs() * d[j]).sum();
            worst = worst.min((a[i][i] * d[i] - off) / (d[i] * scale));
        }
        best = best.max(worst);
        let mut k = 0;
        loop {
            if k == n - 1 {
                return best;
            }
            counter[k] += 1;
            if counter[k] < points {
                break;
            }
            counter[k] = 0;
            k += 1;
        }
    }
}

pub fn to_matrix(a: &SymmetricTensor) -> Vec<Vec<f64>> {
    let n = a.dim();
    (1..=n).map(|i| (1..=n).map(|j| a.get_raw(&[i, j]).unwrap()).collect()).collect()
}

/// Whether `a + shift I` admits a Cholesky factorization.
pub fn cholesky_ok(a: &[Vec<f64>], shift: f64) -> bool {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j] + if i == j { shift } else { 0.0 };
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return false;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    true
}

/// Comparison matrix: absolute diagonal, negated absolute off-diagonal.
pub fn comparison_matrix(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..a.len())
        .map(|i| (0..a.len()).map(|j| if i == j { a[i][j].abs() } else { -a[i][j].abs() }).collect())
        .collect()
}

fn gdd_margin_at(a: &[Vec<f64>], d: &[f64], scale: f64) -> f64 {
    let n = a.len();
    (0..n)
        .map(|i| {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[i][j].abs() * d[j]).sum();
            (a[i][i] * d[i] - off) / (d[i] * scale)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Log-grid search as in [`grid_gdd_margin`], then a compass search in
/// log-scaling space from the best grid point until the step drops below
/// `1e-12`.
pub fn refined_gdd_margin(a: &[Vec<f64>], points: usize, range: f64) -> f64 {
    let n = a.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let step = 2.0 * range.ln() / (points - 1) as f64;
    let at = |logd: &[f64]| gdd_margin_at(a, &logd.iter().map(|v| v.exp()).collect::<Vec<_>>(), scale);
    let mut best_log = vec![0.0; n];
    let mut best = f64::NEG_INFINITY;
    let mut counter = vec![0usize; n - 1];
    'grid: loop {
        let logd: Vec<f64> = std::iter::once(0.0)
            .chain(counter.iter().map(|&c| -range.ln() + c as f64 * step))
            .collect();
        let v = at(&logd);
        if v > best {
            best = v;
            best_log = logd;
        }
        for k in 0..n - 1 {
            counter[k] += 1;
            if counter[k] < points {
                continue 'grid;
            }
            counter[k] = 0;
        }
        break;
    }
    let mut h = step;
    while h > 1e-12 {
        let mut improved = false;
        for k in 1..n {
            for dir in [1.0, -1.0] {
                let mut trial = best_log.clone();
                trial[k] += dir * h;
                let v = at(&trial);
                if v > best {
                    best = v;
                    best_log = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    best
}
