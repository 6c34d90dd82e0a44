//! Cone definitions and the barrier oracles used by the interior-point method.
//!
//! The three-dimensional power cone with exponent `alpha` is
//!
//! ```text
//! K_alpha = { (x1, x2, z) : x1 >= 0, x2 >= 0, x1^alpha * x2^(1 - alpha) >= |z| }
//! ```
//!
//! and its dual is
//!
//! ```text
//! K_alpha^* = { (u1, u2, w) : u1, u2 >= 0, (u1/alpha)^alpha * (u2/(1-alpha))^(1-alpha) >= |w| }.
//! ```
//!
//! The interior-point method uses the logarithmically homogeneous barrier
//!
//! ```text
//! f(x) = -log(x1^(2 alpha) x2^(2 (1 - alpha)) - z^2) - (1 - alpha) log x1 - alpha log x2
//! ```
//!
//! with barrier parameter 3.

use crate::error::ConicError;

/// Three-dimensional power cone `K_alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerCone3 {
    alpha: f64,
}

impl PowerCone3 {
    pub fn new(alpha: f64) -> Result<Self, ConicError> {
        if alpha.is_finite() && alpha > 0.0 && alpha < 1.0 {
            Ok(Self { alpha })
        } else {
            Err(ConicError::InvalidAlpha(alpha))
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Membership test with absolute tolerance `tol`.
    ///
    /// Negative bases within the tolerance are clipped to zero before the
    /// geometric mean is taken.
    pub fn member(&self, x1: f64, x2: f64, z: f64, tol: f64) -> bool {
        if x1 < -tol || x2 < -tol {
            return false;
        }
        self.geometric_mean(x1, x2) >= z.abs() - tol
    }

    /// `x1^alpha * x2^(1-alpha)` with negative arguments clipped to zero.
    pub fn geometric_mean(&self, x1: f64, x2: f64) -> f64 {
        let (a, b) = (x1.max(0.0), x2.max(0.0));
        a.powf(self.alpha) * b.powf(1.0 - self.alpha)
    }

    /// Signed distance-like margin: the smallest of `x1`, `x2` and
    /// `x1^alpha x2^(1-alpha) - |z|`. Nonnegative exactly on the cone.
    pub fn margin(&self, x1: f64, x2: f64, z: f64) -> f64 {
        x1.min(x2).min(self.geometric_mean(x1, x2) - z.abs())
    }

    pub fn dual_member(&self, u1: f64, u2: f64, w: f64, tol: f64) -> bool {
        if u1 < -tol || u2 < -tol {
            return false;
        }
        let a = self.alpha;
        let gm = (u1.max(0.0) / a).powf(a) * (u2.max(0.0) / (1.0 - a)).powf(1.0 - a);
        gm >= w.abs() - tol
    }
}

pub(crate) type Vec3 = [f64; 3];
pub(crate) type Mat3 = [[f64; 3]; 3];

pub(crate) fn power_interior(alpha: f64, x: &Vec3) -> bool {
    if !(x[0] > 0.0 && x[1] > 0.0) || !x.iter().all(|v| v.is_finite()) {
        return false;
    }
    if x[2] == 0.0 {
        return true;
    }
    alpha * x[0].ln() + (1.0 - alpha) * x[1].ln() > x[2].abs().ln()
}

pub(crate) fn power_dual_interior(alpha: f64, u: &Vec3) -> bool {
    if !(u[0] > 0.0 && u[1] > 0.0) || !u.iter().all(|v| v.is_finite()) {
        return false;
    }
    if u[2] == 0.0 {
        return true;
    }
    let beta = 1.0 - alpha;
    alpha * (u[0] / alpha).ln() + beta * (u[1] / beta).ln() > u[2].abs().ln()
}

/// Gradient and Hessian of the power-cone barrier at an interior point.
pub(crate) fn power_barrier(alpha: f64, x: &Vec3) -> Option<(Vec3, Mat3)> {
    if !power_interior(alpha, x) {
        return None;
    }
    let beta = 1.0 - alpha;
    let (x1, x2, z) = (x[0], x[1], x[2]);
    let psi = (2.0 * alpha * x1.ln() + 2.0 * beta * x2.ln()).exp();
    let phi = psi - z * z;
    if !(phi > 0.0) {
        return None;
    }
    let dphi = [2.0 * alpha * psi / x1, 2.0 * beta * psi / x2, -2.0 * z];
    let grad = [
        -dphi[0] / phi - beta / x1,
        -dphi[1] / phi - alpha / x2,
        -dphi[2] / phi,
    ];
    let mut d2phi = [[0.0; 3]; 3];
    d2phi[0][0] = 2.0 * alpha * (2.0 * alpha - 1.0) * psi / (x1 * x1);
    d2phi[1][1] = 2.0 * beta * (2.0 * beta - 1.0) * psi / (x2 * x2);
    d2phi[0][1] = 4.0 * alpha * beta * psi / (x1 * x2);
    d2phi[1][0] = d2phi[0][1];
    d2phi[2][2] = -2.0;
    let mut hess = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            hess[i][j] = -d2phi[i][j] / phi + dphi[i] * dphi[j] / (phi * phi);
        }
    }
    hess[0][0] += beta / (x1 * x1);
    hess[1][1] += alpha / (x2 * x2);
    Some((grad, hess))
}

/// Point on the central ray: `e = -grad f(e)`.
pub(crate) fn power_central_point(alpha: f64) -> Vec3 {
    [(1.0 + alpha).sqrt(), (2.0 - alpha).sqrt(), 0.0]
}

/// Solve `h w = r` for a symmetric positive definite 3x3 `h`.
///
/// Near the cone boundary the barrier Hessian is a huge rank-one term plus
/// a moderate remainder, and Cholesky can meet a rounded-negative pivot.
/// Symmetric diagonal scaling followed by elimination with partial pivoting
/// does not depend on pivot signs.
pub(crate) fn spd3_solve(h: &Mat3, r: &Vec3) -> Option<Vec3> {
    let mut s = [0.0; 3];
    for i in 0..3 {
        if !(h[i][i] > 0.0) || !h[i][i].is_finite() {
            return None;
        }
        s[i] = 1.0 / h[i][i].sqrt();
    }
    let mut a = [[0.0; 4]; 3];
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] = s[i] * h[i][j] * s[j];
        }
        a[i][3] = s[i] * r[i];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))?;
        a.swap(col, piv);
        if !(a[col][col].abs() > 1e-300) {
            return None;
        }
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut w = [0.0; 3];
    for i in (0..3).rev() {
        let tail: f64 = (i + 1..3).map(|k| a[i][k] * w[k]).sum();
        w[i] = (a[i][3] - tail) / a[i][i];
    }
    let w = [w[0] * s[0], w[1] * s[1], w[2] * s[2]];
    w.iter().all(|v| v.is_finite()).then_some(w)
}

/// Largest `t` in `[0, t_max]` (up to bisection resolution) such that
/// `point + t * dir` stays inside the region described by `inside`.
/// `point` itself must be inside.
pub(crate) fn max_step3(point: &Vec3, dir: &Vec3, t_max: f64, inside: impl Fn(&Vec3) -> bool) -> f64 {
    let at = |t: f64| [point[0] + t * dir[0], point[1] + t * dir[1], point[2] + t * dir[2]];
    if inside(&at(t_max)) {
        return t_max;
    }
    let (mut lo, mut hi) = (0.0, t_max);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if inside(&at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * t_max {
            break;
        }
    }
    lo
}
