//! Primal-dual interior-point method on the homogeneous self-dual embedding.
//!
//! Internally the problem is `minimize c.x  s.t.  A x = b, x in K` with
//! `c = -objective`. The embedding
//!
//! ```text
//! A x - b tau = 0,   -A^T y - z + c tau = 0,   b.y - c.x - kappa = 0
//! ```
//!
//! always has the interior starting point `x = z = e, y = 0, tau = kappa = 1`,
//! and its limit either has `tau > 0` (an optimal pair after dividing by
//! `tau`) or `kappa > 0` (a Farkas-type certificate of infeasibility).
//!
//! Power cones are handled without symmetric scaling: the Newton system uses
//! `mu * hess f(x)` as the primal-dual linearization, and iterates are kept in
//! a neighbourhood of the central path measured in the local norm of the
//! primal barrier.

use log::{debug, trace};

use crate::cone::{
    max_step3, power_barrier, power_central_point, power_dual_interior, power_interior, spd3_solve, Mat3, Vec3,
};
use crate::error::ConicError;
use crate::ldl::{sym_matvec, Ldl};
use crate::presolve::{independent_rows, RowReduction};
use crate::problem::{ConeKind, ConicProblem};
use crate::tower;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerMode {
    /// Power cones enter the barrier directly.
    Direct,
    /// Every power cone with a rational exponent is first rewritten as a
    /// tower of `alpha = 1/2` cones.
    SocTower,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
    /// Declare infeasibility or unboundedness once `tau / kappa` drops below this.
    pub infeas_ratio: f64,
    pub power_mode: PowerMode,
    /// When progress stalls, an iterate within this factor of every
    /// tolerance is reported as `NearOptimal` instead of `IllConditioned`.
    pub reduced_tol_factor: f64,
    /// Keep a per-iteration trace in the result.
    pub record_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            max_iter: 200,
            step_fraction: 0.99,
            infeas_ratio: 1e-10,
            power_mode: PowerMode::Direct,
            reduced_tol_factor: 100.0,
            record_iterates: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), ConicError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.feas_tol) || !positive(self.gap_tol) || !positive(self.infeas_ratio) {
            return Err(ConicError::Config("tolerances must be positive and finite".into()));
        }
        if !(self.reduced_tol_factor.is_finite() && self.reduced_tol_factor >= 1.0) {
            return Err(ConicError::Config("reduced tolerance factor must be at least 1".into()));
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err(ConicError::Config("step fraction must lie in (0, 1)".into()));
        }
        if self.max_iter == 0 {
            return Err(ConicError::Config("iteration cap must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// Stalled within `reduced_tol_factor` of the requested tolerances.
    NearOptimal,
    Infeasible,
    Unbounded,
    IllConditioned,
}

impl SolveStatus {
    /// `Optimal` or `NearOptimal`: the returned point is usable.
    pub fn has_solution(self) -> bool {
        matches!(self, Self::Optimal | Self::NearOptimal)
    }
}

/// Relative residuals of the final iterate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub iter: usize,
    pub mu: f64,
    pub tau: f64,
    pub kappa: f64,
    pub sigma: f64,
    pub step: f64,
    pub residuals: Residuals,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Primal point. For `Unbounded` this is an improving ray normalized to
    /// unit objective gain.
    pub x: Vec<f64>,
    /// Equality multipliers, one per input row (zero for dropped dependent
    /// rows). For `Infeasible` this is a Farkas ray normalized to `b.y = 1`.
    pub y: Vec<f64>,
    /// Dual slack for the cone variables.
    pub z: Vec<f64>,
    /// Objective value `objective . x` (maximization sense).
    pub obj: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub trace: Vec<IterateRecord>,
}

/// Solve with a fresh workspace.
pub fn solve(p: &ConicProblem, config: &SolverConfig) -> Result<SolveResult, ConicError> {
    config.validate()?;
    p.validate()?;
    match config.power_mode {
        PowerMode::Direct => solve_direct(p, config),
        PowerMode::SocTower => {
            let rewritten = tower::to_tower(p)?;
            let mut res = solve_direct(&rewritten, config)?;
            res.x.truncate(p.num_vars());
            res.z.truncate(p.num_vars());
            res.y.truncate(p.rows().len());
            res.obj = p.objective_value(&res.x);
            for rec in &mut res.trace {
                rec.x.truncate(p.num_vars());
            }
            Ok(res)
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Nonneg,
    Power(f64),
}

#[derive(Debug, Clone)]
struct Block {
    kind: Kind,
    vars: Vec<usize>,
}

struct Data {
    n: usize,
    m: usize,
    /// (row, col, value)
    a: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
    c: Vec<f64>,
    /// Original `b = sb * b`, `c = sc * c`.
    sb: f64,
    sc: f64,
    blocks: Vec<Block>,
    is_free: Vec<bool>,
    nu: f64,
    kept_rows: Vec<usize>,
}

impl Data {
    fn a_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for &(r, j, v) in &self.a {
            out[r] += v * x[j];
        }
        out
    }

    fn at_mul(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for &(r, j, v) in &self.a {
            out[j] += v * y[r];
        }
        out
    }
}

#[derive(Debug, Clone)]
struct Point {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    tau: f64,
    kappa: f64,
}

struct Direction {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    tau: f64,
    kappa: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn get3(v: &[f64], idx: &[usize]) -> Vec3 {
    [v[idx[0]], v[idx[1]], v[idx[2]]]
}

const STATIC_REG: f64 = 1e-8;
const DYN_REG_EPS: f64 = 1e-13;
const DYN_REG_DELTA: f64 = 2e-7;
const REFINE_STEPS: usize = 5;
/// Neighbourhood radius for power cones (local-norm proximity).
const ETA: f64 = 0.95;
/// Neighbourhood floor for nonnegative pairs: `x_i z_i >= GAMMA * mu`.
const GAMMA: f64 = 1e-4;
const BACKTRACK: f64 = 0.8;
/// Centering steps are taken after a predictor until the proximity drops
/// below this.
const ETA_CENTER: f64 = 0.5;
const MAX_CORRECTORS: usize = 2;
const STALL_LIMIT: usize = 5;

fn build_data(p: &ConicProblem) -> Result<Result<Data, usize>, ConicError> {
    let n = p.num_vars();
    let kept_rows = match independent_rows(p.rows(), 1e-11) {
        RowReduction::Keep(k) => k,
        RowReduction::Inconsistent(r) => return Ok(Err(r)),
    };
    let mut a = Vec::new();
    let mut b = Vec::with_capacity(kept_rows.len());
    for (new_r, &r) in kept_rows.iter().enumerate() {
        let row = &p.rows()[r];
        let mut coefs = row.coefs.clone();
        coefs.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for (j, v) in coefs {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += v,
                _ => merged.push((j, v)),
            }
        }
        for (j, v) in merged {
            if v != 0.0 {
                a.push((new_r, j, v));
            }
        }
        b.push(row.rhs);
    }
    let mut c: Vec<f64> = p.objective_dense().iter().map(|v| -v).collect();
    // Scale b and c to unit size so that iterates stay O(1).
    let nonzero_norm = |v: &[f64]| Some(inf_norm(v)).filter(|s| *s > 0.0).unwrap_or(1.0);
    let (sb, sc) = (nonzero_norm(&b), nonzero_norm(&c));
    b.iter_mut().for_each(|v| *v /= sb);
    c.iter_mut().for_each(|v| *v /= sc);
    let mut is_free = vec![true; n];
    let mut nu = 0.0;
    let blocks = p
        .cones()
        .iter()
        .map(|blk| {
            for &v in &blk.vars {
                is_free[v] = false;
            }
            nu += blk.degree() as f64;
            Block {
                kind: match blk.kind {
                    ConeKind::Nonneg => Kind::Nonneg,
                    ConeKind::Power3(cone) => Kind::Power(cone.alpha()),
                },
                vars: blk.vars.clone(),
            }
        })
        .collect();
    Ok(Ok(Data { n, m: kept_rows.len(), a, b, c, sb, sc, blocks, is_free, nu, kept_rows }))
}

fn solve_direct(p: &ConicProblem, config: &SolverConfig) -> Result<SolveResult, ConicError> {
    let data = match build_data(p)? {
        Ok(d) => d,
        Err(row) => {
            debug!("presolve: equality row {row} is inconsistent with earlier rows");
            return Ok(SolveResult {
                status: SolveStatus::Infeasible,
                x: vec![0.0; p.num_vars()],
                y: vec![0.0; p.rows().len()],
                z: vec![0.0; p.num_vars()],
                obj: f64::NAN,
                residuals: Residuals::default(),
                iterations: 0,
                trace: Vec::new(),
            });
        }
    };
    let mut ipm = Ipm::new(&data, config);
    let mut out = ipm.run();
    let (fx, fyz) = match out.status {
        SolveStatus::Optimal | SolveStatus::NearOptimal | SolveStatus::IllConditioned => (data.sb, data.sc),
        SolveStatus::Unbounded => (1.0 / data.sc, 1.0),
        SolveStatus::Infeasible => (1.0, 1.0 / data.sb),
    };
    out.x.iter_mut().for_each(|v| *v *= fx);
    out.y.iter_mut().chain(out.z.iter_mut()).for_each(|v| *v *= fyz);
    for rec in &mut out.trace {
        rec.x.iter_mut().for_each(|v| *v *= data.sb);
    }
    let mut y = vec![0.0; p.rows().len()];
    for (k, &r) in data.kept_rows.iter().enumerate() {
        y[r] = out.y[k];
    }
    let obj = match out.status {
        SolveStatus::Optimal | SolveStatus::NearOptimal | SolveStatus::IllConditioned => p.objective_value(&out.x),
        SolveStatus::Unbounded => f64::INFINITY,
        SolveStatus::Infeasible => f64::NEG_INFINITY,
    };
    Ok(SolveResult {
        status: out.status,
        x: out.x,
        y,
        z: out.z,
        obj,
        residuals: out.residuals,
        iterations: out.iterations,
        trace: out.trace,
    })
}

struct Outcome {
    status: SolveStatus,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    residuals: Residuals,
    iterations: usize,
    trace: Vec<IterateRecord>,
}

struct Ipm<'a> {
    d: &'a Data,
    cfg: &'a SolverConfig,
    entries: Vec<(usize, usize)>,
    values: Vec<f64>,
    signs: Vec<f64>,
    ldl: Ldl,
    /// Index into `values` of each `x` diagonal entry.
    diag_pos: Vec<usize>,
    /// Positions of the 3x3 upper blocks (diagonal then off-diagonal) for power cones.
    power_pos: Vec<[usize; 6]>,
    /// Per-iteration linearization.
    h_diag: Vec<f64>,
    hess: Vec<Mat3>,
    grad: Vec<f64>,
}

impl<'a> Ipm<'a> {
    fn new(d: &'a Data, cfg: &'a SolverConfig) -> Self {
        let dim = d.n + d.m;
        let mut entries: Vec<(usize, usize)> = (0..dim).map(|i| (i, i)).collect();
        let diag_pos: Vec<usize> = (0..d.n).collect();
        let mut power_pos = Vec::new();
        for blk in &d.blocks {
            if let Kind::Power(_) = blk.kind {
                let v = &blk.vars;
                let mut pos = [v[0], v[1], v[2], 0, 0, 0];
                for (k, (i, j)) in [(0, 1), (0, 2), (1, 2)].into_iter().enumerate() {
                    let (a, b) = (v[i].min(v[j]), v[i].max(v[j]));
                    pos[3 + k] = entries.len();
                    entries.push((a, b));
                }
                power_pos.push(pos);
            }
        }
        for &(r, j, _) in &d.a {
            entries.push((j, d.n + r));
        }
        let signs = (0..dim).map(|i| if i < d.n { 1.0 } else { -1.0 }).collect();
        let ldl = Ldl::new(dim, &entries);
        debug!("KKT dimension {dim}, {} entries, {} nonzeros in L", entries.len(), ldl.nnz_l());
        let values = vec![0.0; entries.len()];
        Self {
            d,
            cfg,
            entries,
            values,
            signs,
            ldl,
            diag_pos,
            power_pos,
            h_diag: vec![0.0; d.n],
            hess: Vec::new(),
            grad: vec![0.0; d.n],
        }
    }

    fn initial_point(&self) -> Point {
        let d = self.d;
        let mut x = vec![0.0; d.n];
        for blk in &d.blocks {
            match blk.kind {
                Kind::Nonneg => blk.vars.iter().for_each(|&v| x[v] = 1.0),
                Kind::Power(a) => {
                    let e = power_central_point(a);
                    for k in 0..3 {
                        x[blk.vars[k]] = e[k];
                    }
                }
            }
        }
        Point { z: x.clone(), x, y: vec![0.0; d.m], tau: 1.0, kappa: 1.0 }
    }

    fn mu(&self, pt: &Point) -> f64 {
        (dot(&pt.x, &pt.z) + pt.tau * pt.kappa) / (self.d.nu + 1.0)
    }

    /// Barrier gradient at `x` and the linearization `H` for the Newton system.
    fn linearize(&mut self, pt: &Point, mu: f64) -> bool {
        self.hess.clear();
        self.grad.iter_mut().for_each(|g| *g = 0.0);
        self.h_diag.iter_mut().for_each(|h| *h = 0.0);
        for blk in &self.d.blocks {
            match blk.kind {
                Kind::Nonneg => {
                    for &v in &blk.vars {
                        self.grad[v] = -1.0 / pt.x[v];
                        self.h_diag[v] = pt.z[v] / pt.x[v];
                    }
                }
                Kind::Power(a) => {
                    let Some((g, h)) = power_barrier(a, &get3(&pt.x, &blk.vars)) else {
                        return false;
                    };
                    let mut hm = h;
                    for row in hm.iter_mut() {
                        for e in row.iter_mut() {
                            *e *= mu;
                        }
                    }
                    for k in 0..3 {
                        self.grad[blk.vars[k]] = g[k];
                    }
                    self.hess.push(hm);
                }
            }
        }
        true
    }

    /// Assemble KKT values; `reg` adds the static regularization.
    fn assemble(&mut self, reg: bool) {
        let d = self.d;
        self.values.iter_mut().for_each(|v| *v = 0.0);
        let delta = if reg { STATIC_REG } else { 0.0 };
        for j in 0..d.n {
            self.values[self.diag_pos[j]] = self.h_diag[j] + delta;
        }
        for r in 0..d.m {
            self.values[d.n + r] = -delta;
        }
        for (h, pos) in self.hess.iter().zip(&self.power_pos) {
            for k in 0..3 {
                self.values[pos[k]] += h[k][k];
            }
            self.values[pos[3]] = h[0][1];
            self.values[pos[4]] = h[0][2];
            self.values[pos[5]] = h[1][2];
        }
        let base = d.n + d.m + 3 * self.power_pos.len();
        for (k, &(_, _, v)) in d.a.iter().enumerate() {
            self.values[base + k] = v;
        }
    }

    fn factor(&mut self) -> Result<(), usize> {
        self.assemble(false);
        let exact = self.values.clone();
        self.assemble(true);
        let bumped = self.ldl.factor(&self.values, &self.signs, DYN_REG_EPS, DYN_REG_DELTA)?;
        if bumped > 0 {
            trace!("dynamic regularization on {bumped} pivots");
        }
        self.values = exact;
        Ok(())
    }

    /// Solve with the regularized factors, refining against the exact matrix.
    fn kkt_solve(&mut self, rhs: &[f64]) -> Vec<f64> {
        let dim = rhs.len();
        let mut sol = rhs.to_vec();
        self.ldl.solve(&mut sol);
        let rnorm = inf_norm(rhs).max(1e-300);
        let mut last_err = f64::INFINITY;
        for _ in 0..REFINE_STEPS {
            let ks = sym_matvec(dim, &self.entries, &self.values, &sol);
            let mut e: Vec<f64> = rhs.iter().zip(&ks).map(|(r, k)| r - k).collect();
            let err = inf_norm(&e);
            if err <= 1e-14 * rnorm || err >= 0.5 * last_err {
                break;
            }
            last_err = err;
            self.ldl.solve(&mut e);
            for (s, de) in sol.iter_mut().zip(&e) {
                *s += de;
            }
        }
        sol
    }

    fn direction(
        &mut self,
        pt: &Point,
        res: &ResidualVecs,
        mu: f64,
        sigma: f64,
        base: &(Vec<f64>, Vec<f64>),
    ) -> Direction {
        let d = self.d;
        // r_z = -z - sigma mu g(x)
        let mut rz = vec![0.0; d.n];
        for j in 0..d.n {
            if !d.is_free[j] {
                rz[j] = -pt.z[j] - sigma * mu * self.grad[j];
            }
        }
        let mut rhs = vec![0.0; d.n + d.m];
        for j in 0..d.n {
            rhs[j] = -(1.0 - sigma) * res.rd[j] + rz[j];
        }
        for r in 0..d.m {
            rhs[d.n + r] = -(1.0 - sigma) * res.rp[r];
        }
        let sol1 = self.kkt_solve(&rhs);
        let (u1, w1) = sol1.split_at(d.n);
        let (u2, w2) = (&base.0, &base.1);
        let num = -(1.0 - sigma) * res.rg + dot(&d.b, w1) + dot(&d.c, u1) + (sigma * mu - pt.tau * pt.kappa) / pt.tau;
        let den = -dot(&d.b, w2) - dot(&d.c, u2) + pt.kappa / pt.tau;
        let dtau = num / den;
        let dx: Vec<f64> = u1.iter().zip(u2).map(|(a, b)| a + dtau * b).collect();
        let dy: Vec<f64> = w1.iter().zip(w2).map(|(a, b)| -(a + dtau * b)).collect();
        let mut dz = vec![0.0; d.n];
        let mut hp = 0;
        for blk in &d.blocks {
            match blk.kind {
                Kind::Nonneg => {
                    for &v in &blk.vars {
                        dz[v] = rz[v] - self.h_diag[v] * dx[v];
                    }
                }
                Kind::Power(_) => {
                    let h = &self.hess[hp];
                    hp += 1;
                    for i in 0..3 {
                        let hv: f64 = (0..3).map(|k| h[i][k] * dx[blk.vars[k]]).sum();
                        dz[blk.vars[i]] = rz[blk.vars[i]] - hv;
                    }
                }
            }
        }
        let dkappa = (sigma * mu - pt.tau * pt.kappa - pt.kappa * dtau) / pt.tau;
        Direction { x: dx, y: dy, z: dz, tau: dtau, kappa: dkappa }
    }

    /// Largest step in `[0, cap]` keeping `x`, `z`, `tau`, `kappa` interior.
    fn max_step(&self, pt: &Point, dir: &Direction, cap: f64) -> f64 {
        let mut t = cap;
        let lin = |v: f64, dv: f64, t: &mut f64| {
            if dv < 0.0 {
                *t = t.min(-v / dv);
            }
        };
        lin(pt.tau, dir.tau, &mut t);
        lin(pt.kappa, dir.kappa, &mut t);
        for blk in &self.d.blocks {
            if let Kind::Nonneg = blk.kind {
                for &v in &blk.vars {
                    lin(pt.x[v], dir.x[v], &mut t);
                    lin(pt.z[v], dir.z[v], &mut t);
                }
            }
        }
        for blk in &self.d.blocks {
            if let Kind::Power(a) = blk.kind {
                let (x, dx) = (get3(&pt.x, &blk.vars), get3(&dir.x, &blk.vars));
                t = max_step3(&x, &dx, t, |p| power_interior(a, p));
                let (z, dz) = (get3(&pt.z, &blk.vars), get3(&dir.z, &blk.vars));
                t = max_step3(&z, &dz, t, |p| power_dual_interior(a, p));
            }
        }
        t
    }

    fn take(pt: &Point, dir: &Direction, t: f64) -> Point {
        let add = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + t * y).collect::<Vec<f64>>();
        Point {
            x: add(&pt.x, &dir.x),
            y: add(&pt.y, &dir.y),
            z: add(&pt.z, &dir.z),
            tau: pt.tau + t * dir.tau,
            kappa: pt.kappa + t * dir.kappa,
        }
    }

    /// Worst local-norm distance of the power-cone pairs from the central
    /// path, or `None` if the point leaves the cones or a nonnegative pair
    /// falls below `GAMMA * mu`.
    fn centrality(&self, pt: &Point) -> Option<f64> {
        let mu = self.mu(pt);
        if !(mu > 0.0) || !(pt.tau > 0.0) || !(pt.kappa > 0.0) || pt.tau * pt.kappa < GAMMA * mu {
            return None;
        }
        let mut worst: f64 = 0.0;
        for blk in &self.d.blocks {
            match blk.kind {
                Kind::Nonneg => {
                    for &v in &blk.vars {
                        if !(pt.x[v] > 0.0 && pt.z[v] > 0.0) || pt.x[v] * pt.z[v] < GAMMA * mu {
                            return None;
                        }
                    }
                }
                Kind::Power(a) => {
                    let x = get3(&pt.x, &blk.vars);
                    let z = get3(&pt.z, &blk.vars);
                    if !power_dual_interior(a, &z) {
                        return None;
                    }
                    let (g, h) = power_barrier(a, &x)?;
                    let psi = [z[0] / mu + g[0], z[1] / mu + g[1], z[2] / mu + g[2]];
                    let w = spd3_solve(&h, &psi)?;
                    let prox = psi[0] * w[0] + psi[1] * w[1] + psi[2] * w[2];
                    if !prox.is_finite() {
                        return None;
                    }
                    worst = worst.max(prox.max(0.0).sqrt());
                }
            }
        }
        Some(worst)
    }

    fn residuals(&self, pt: &Point) -> ResidualVecs {
        let d = self.d;
        let ax = d.a_mul(&pt.x);
        let aty = d.at_mul(&pt.y);
        let rp: Vec<f64> = ax.iter().zip(&d.b).map(|(a, b)| a - b * pt.tau).collect();
        let rd: Vec<f64> = (0..d.n).map(|j| -aty[j] - pt.z[j] + d.c[j] * pt.tau).collect();
        let cx = dot(&d.c, &pt.x);
        let by = dot(&d.b, &pt.y);
        let rg = by - cx - pt.kappa;
        ResidualVecs { rp, rd, rg, ax, aty, cx, by }
    }

    fn relative(&self, pt: &Point, res: &ResidualVecs) -> Residuals {
        let d = self.d;
        // measured in the units of the original data
        let t = pt.tau;
        let primal = d.sb * (0..d.m).map(|r| (res.ax[r] / t - d.b[r]).abs()).fold(0.0, f64::max)
            / (1.0 + d.sb * inf_norm(&d.b));
        let dual = d.sc * (0..d.n).map(|j| (res.aty[j] / t + pt.z[j] / t - d.c[j]).abs()).fold(0.0, f64::max)
            / (1.0 + d.sc * inf_norm(&d.c));
        let (pobj, dobj) = (d.sb * d.sc * res.cx / t, d.sb * d.sc * res.by / t);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs().min(dobj.abs()));
        Residuals { primal, dual, gap }
    }

    /// One Newton step from `pt`: a predictor (with a centering fallback) or
    /// a pure centering step. Returns the new point, the centering parameter
    /// and the step length.
    fn newton_step(&mut self, pt: &Point, predictor: bool) -> Option<(Point, f64, f64)> {
        let d = self.d;
        let res = self.residuals(pt);
        let mu = self.mu(pt);
        if !self.linearize(pt, mu) || self.factor().is_err() {
            return None;
        }
        let mut rhs2 = vec![0.0; d.n + d.m];
        for j in 0..d.n {
            rhs2[j] = -d.c[j];
        }
        for r in 0..d.m {
            rhs2[d.n + r] = d.b[r];
        }
        let sol2 = self.kkt_solve(&rhs2);
        let base = (sol2[..d.n].to_vec(), sol2[d.n..].to_vec());

        let mut sigmas = vec![1.0];
        if predictor {
            let aff = self.direction(pt, &res, mu, 0.0, &base);
            let alpha_aff = self.max_step(pt, &aff, 1.0);
            sigmas.insert(0, (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0));
        }
        for sigma in sigmas {
            let dir = self.direction(pt, &res, mu, sigma, &base);
            let tmax = self.max_step(pt, &dir, 2.0);
            let mut t = (self.cfg.step_fraction * tmax).min(1.0);
            while t > 1e-10 {
                let trial = Self::take(pt, &dir, t);
                if self.centrality(&trial).is_some_and(|c| c <= ETA) {
                    return Some((trial, sigma, t));
                }
                t *= BACKTRACK;
            }
        }
        None
    }

    fn run(&mut self) -> Outcome {
        let d = self.d;
        let cfg = self.cfg;
        let mut pt = self.initial_point();
        let mut trace = Vec::new();
        let mut best: Option<(f64, Point, Residuals)> = None;
        let scaled = |pt: &Point, s: f64| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
            (
                pt.x.iter().map(|v| v / s).collect(),
                pt.y.iter().map(|v| v / s).collect(),
                pt.z.iter().map(|v| v / s).collect(),
            )
        };
        let finish = |status, pt: &Point, s: f64, residuals, iterations, trace| {
            let (x, y, z) = scaled(pt, s);
            Outcome { status, x, y, z, residuals, iterations, trace }
        };

        let mut iterations = 0;
        let mut stalled = 0;
        for iter in 0..=cfg.max_iter {
            iterations = iter;
            let res = self.residuals(&pt);
            let mu = self.mu(&pt);
            let rel = self.relative(&pt, &res);
            debug!(
                "iter {iter:3} mu {mu:.3e} tau {:.3e} kappa {:.3e} pres {:.3e} dres {:.3e} gap {:.3e}",
                pt.tau, pt.kappa, rel.primal, rel.dual, rel.gap
            );
            let merit = rel.primal.max(rel.dual).max(rel.gap);
            if best.as_ref().map_or(true, |b| merit < b.0) {
                best = Some((merit, pt.clone(), rel));
            }
            if rel.primal <= cfg.feas_tol && rel.dual <= cfg.feas_tol && rel.gap <= cfg.gap_tol {
                return finish(SolveStatus::Optimal, &pt, pt.tau, rel, iter, trace);
            }
            // Farkas-type certificates.
            if res.by > 0.0 {
                let aty_z = inf_norm(&(0..d.n).map(|j| res.aty[j] + pt.z[j]).collect::<Vec<_>>());
                if (aty_z <= cfg.feas_tol * res.by && pt.tau < pt.kappa) || pt.tau < cfg.infeas_ratio * pt.kappa {
                    return finish(SolveStatus::Infeasible, &pt, res.by, rel, iter, trace);
                }
            }
            if res.cx < 0.0 {
                let ax = inf_norm(&res.ax);
                if (ax <= cfg.feas_tol * -res.cx && pt.tau < pt.kappa) || pt.tau < cfg.infeas_ratio * pt.kappa {
                    return finish(SolveStatus::Unbounded, &pt, -res.cx, rel, iter, trace);
                }
            }
            if pt.tau < cfg.infeas_ratio * pt.kappa || iter == cfg.max_iter {
                break;
            }

            let Some((next, sigma, step)) = self.newton_step(&pt, true) else {
                debug!("no acceptable step at iteration {iter}");
                break;
            };
            if cfg.record_iterates {
                trace.push(IterateRecord {
                    iter,
                    mu,
                    tau: pt.tau,
                    kappa: pt.kappa,
                    sigma,
                    step,
                    residuals: rel,
                    x: pt.x.iter().map(|v| v / pt.tau).collect(),
                });
            }
            // Stop early when mu has stalled at the floating-point floor.
            let new_mu = self.mu(&next);
            stalled = if new_mu > 0.999 * mu { stalled + 1 } else { 0 };
            if stalled >= STALL_LIMIT {
                debug!("progress stalled at iteration {iter}");
                break;
            }
            pt = next;
            for _ in 0..MAX_CORRECTORS {
                if self.centrality(&pt).map_or(true, |c| c <= ETA_CENTER) {
                    break;
                }
                match self.newton_step(&pt, false) {
                    Some((next, _, _)) => pt = next,
                    None => break,
                }
            }
        }
        let (_, bpt, brel) = best.expect("at least one iterate");
        let f = cfg.reduced_tol_factor;
        let status = if brel.primal <= f * cfg.feas_tol && brel.dual <= f * cfg.feas_tol && brel.gap <= f * cfg.gap_tol {
            SolveStatus::NearOptimal
        } else {
            SolveStatus::IllConditioned
        };
        finish(status, &bpt, bpt.tau, brel, iterations, trace)
    }
}

struct ResidualVecs {
    rp: Vec<f64>,
    rd: Vec<f64>,
    rg: f64,
    ax: Vec<f64>,
    aty: Vec<f64>,
    cx: f64,
    by: f64,
}
