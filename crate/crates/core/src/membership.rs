//! Membership in the cone of symmetric H+ (GDD+) tensors, decided by a
//! power-cone program over per-component diagonal shares.
//!
//! For every nonzero off-diagonal `a_i` with tight pair `(j, alpha)` the
//! shares must satisfy `prod_k b_{j_k}^alpha_k >= c(i) |a_i|^m`, and every
//! row must satisfy `a_jj >= sum_i b^i_j`. The product constraint is written
//! as a chain of `m - 1` three-dimensional power cones.

use htensor_conic::{solve, ConicProblem, PowerCone3, SolveResult, SolveStatus, SolverConfig};
use log::debug;
use serde::Serialize;

use crate::certificate::{verify_certificate, AuxEntry, GddCertificate, ShareEntry};
use crate::error::{arg, Result, TensorError};
use crate::index::MultiIndex;
use crate::tensor::{DiagonalScaling, SymmetricTensor};

/// Margins within this multiple of the feasibility tolerance are reported as
/// [`VerdictKind::Marginal`].
pub const MARGINAL_FACTOR: f64 = 10.0;

/// What the program optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProgramObjective {
    /// Maximize `t` subject to `a_jj (1 - t) >= sum_i b^i_j` for every row;
    /// the tensor is a member iff the optimum is nonnegative.
    RelativeMargin,
    /// Maximize `lambda` subject to `a_jj - lambda >= sum_i b^i_j`.
    DiagonalShift,
}

/// Variables of one off-diagonal component.
#[derive(Debug, Clone)]
pub struct ChainLayout {
    pub idx: MultiIndex,
    pub value: f64,
    /// `(distinct index j, variable holding b_j)`.
    pub b_vars: Vec<(usize, usize)>,
    /// Chain values `v_1 .. v_{m-2}`.
    pub aux_vars: Vec<usize>,
    /// Pinned coordinate `c^(1/m) |a_i|` (scaled).
    pub z_var: usize,
}

#[derive(Debug, Clone)]
pub struct FeasibilityLayout {
    pub objective: ProgramObjective,
    /// Nonnegative `u`; the optimized quantity is `objective_offset - u`.
    pub objective_var: usize,
    /// Upper bound of the optimized quantity in scaled units: 1 for the
    /// relative margin, the smallest scaled diagonal entry for the shift.
    pub objective_offset: f64,
    pub chains: Vec<ChainLayout>,
    /// `(row j, slack variable)` for each diagonal row in the program.
    pub row_slacks: Vec<(usize, usize)>,
    /// The tensor entries are divided by this before entering the program.
    pub scale: f64,
}

#[derive(Debug, Clone)]
pub struct FeasibilityProgram {
    pub problem: ConicProblem,
    pub layout: FeasibilityLayout,
}

/// Program whose optimum is the largest relative diagonal margin.
pub fn build_feasibility(a: &SymmetricTensor) -> Result<FeasibilityProgram> {
    build(a, ProgramObjective::RelativeMargin)
}

/// Program whose optimum is the largest `lambda` with `A - lambda I` in GDD+.
pub fn build_shift_program(a: &SymmetricTensor) -> Result<FeasibilityProgram> {
    build(a, ProgramObjective::DiagonalShift)
}

fn build(a: &SymmetricTensor, objective: ProgramObjective) -> Result<FeasibilityProgram> {
    let (m, n) = (a.order(), a.dim());
    if m < 2 {
        return arg(format!("membership needs order at least 2, got {m}"));
    }
    let diag = a.diagonal_entries();
    let min_diag = diag.iter().fold(f64::INFINITY, |m, &d| m.min(d));
    // The shift program only sees diagonal entries relative to the smallest
    // one, so a large common diagonal must not set the scale.
    let magnitude = match objective {
        ProgramObjective::RelativeMargin => a.max_abs(),
        ProgramObjective::DiagonalShift => a
            .offdiagonal()
            .map(|(_, v)| v.abs())
            .chain(diag.iter().map(|d| d - min_diag))
            .fold(0.0, f64::max),
    };
    let scale = if magnitude > 0.0 { magnitude } else { 1.0 };
    // Both quantities have an a priori upper bound, so they enter as
    // `offset - u` with `u >= 0`; free variables stall the interior point.
    let offset = match objective {
        ProgramObjective::RelativeMargin => 1.0,
        ProgramObjective::DiagonalShift => min_diag / scale,
    };
    let mut p = ConicProblem::new();
    let obj = p.add_var();
    p.add_objective(obj, -1.0);
    let mut row_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut chains = Vec::new();

    for (idx, value) in a.offdiagonal() {
        let tp = idx.tight_pair();
        let slots = idx.entries();
        let mut b_vars: Vec<(usize, usize)> = Vec::new();
        let mut aux_vars = Vec::new();
        let mut z_var = 0;
        let bind = |p: &mut ConicProblem, var: usize, j: usize, b_vars: &mut Vec<(usize, usize)>| {
            match b_vars.iter().find(|(jj, _)| *jj == j) {
                Some(&(_, first)) => {
                    p.add_eq(vec![(var, 1.0), (first, -1.0)], 0.0);
                }
                None => b_vars.push((j, var)),
            }
        };
        let mut prev_aux: Option<usize> = None;
        // Cone l (1-based) of the chain.
        for l in 1..m {
            let last = l == m - 1;
            let alpha = if last { 0.5 } else { 1.0 / (m - l + 1) as f64 };
            let v = p.add_vars(3);
            p.add_power(PowerCone3::new(alpha)?, v[0], v[1], v[2]);
            bind(&mut p, v[0], slots[l - 1], &mut b_vars);
            if last {
                bind(&mut p, v[1], slots[m - 1], &mut b_vars);
            } else {
                aux_vars.push(v[1]);
            }
            match prev_aux {
                None => {
                    z_var = v[2];
                    p.add_eq(vec![(v[2], 1.0)], tp.c_root()? * value.abs() / scale);
                }
                Some(u) => {
                    p.add_eq(vec![(v[2], 1.0), (u, -1.0)], 0.0);
                }
            }
            prev_aux = Some(v[1]);
        }
        for &(j, var) in &b_vars {
            row_terms[j - 1].push((var, 1.0));
        }
        chains.push(ChainLayout { idx: idx.clone(), value, b_vars, aux_vars, z_var });
    }

    let mut row_slacks = Vec::new();
    for (j, terms) in row_terms.into_iter().enumerate() {
        let ajj = diag[j] / scale;
        let mut coefs = terms;
        // a_jj (1 - t) = a_jj u  or  a_jj - lambda = a_jj - offset + u
        let rhs = match objective {
            ProgramObjective::RelativeMargin => {
                if coefs.is_empty() && ajj == 0.0 {
                    continue;
                }
                if ajj != 0.0 {
                    coefs.push((obj, -ajj));
                }
                0.0
            }
            ProgramObjective::DiagonalShift => {
                coefs.push((obj, -1.0));
                ajj - offset
            }
        };
        let w = p.add_var();
        coefs.push((w, 1.0));
        p.add_eq(coefs, rhs);
        row_slacks.push((j + 1, w));
    }
    let mut nonneg: Vec<usize> = row_slacks.iter().map(|&(_, w)| w).collect();
    nonneg.push(obj);
    p.add_nonneg(nonneg);
    Ok(FeasibilityProgram {
        problem: p,
        layout: FeasibilityLayout { objective, objective_var: obj, objective_offset: offset, chains, row_slacks, scale },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Member,
    NotMember,
    Marginal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipVerdict {
    pub kind: VerdictKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<GddCertificate>,
    /// Optimal relative diagonal margin, when the solver ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub iterations: usize,
}

impl MembershipVerdict {
    fn not_member(note: String) -> Self {
        Self { kind: VerdictKind::NotMember, certificate: None, margin: None, note: Some(note), iterations: 0 }
    }

    /// `true` unless the verdict is `NotMember`.
    pub fn is_feasible(&self) -> bool {
        self.kind != VerdictKind::NotMember
    }
}

fn run(problem: &ConicProblem, cfg: &SolverConfig) -> Result<SolveResult> {
    let res = solve(problem, cfg)?;
    debug!(
        "solve: {:?} after {} iterations, obj {:.3e}, residuals {:?}",
        res.status, res.iterations, res.obj, res.residuals
    );
    Ok(res)
}

/// Positive scaling that turns every nonzero diagonal entry into 1.
/// Membership and the relative margin do not change under it, and the
/// balanced program is far better conditioned when the diagonal spans
/// several orders of magnitude.
fn balancing(a: &SymmetricTensor) -> Vec<f64> {
    let m = a.order() as f64;
    a.diagonal_entries().iter().map(|&d| if d > 0.0 { d.powf(-1.0 / m) } else { 1.0 }).collect()
}

/// Certificate for `a` from a solver point of the program of `a` scaled by
/// `d`: shares are mapped back by `d_j^-m`, clipped at zero and rescaled per
/// component so the product inequality holds; chain values and slacks are
/// recomputed.
fn extract_certificate(a: &SymmetricTensor, prog: &FeasibilityProgram, x: &[f64], d: &[f64], tol: f64) -> GddCertificate {
    let m = a.order();
    let scale = prog.layout.scale;
    let mut shares = Vec::new();
    let mut aux = Vec::new();
    for chain in &prog.layout.chains {
        let tp = chain.idx.tight_pair();
        let value = a.get(&chain.idx);
        let mut b: Vec<f64> =
            chain.b_vars.iter().map(|&(j, v)| x[v].max(0.0) * scale / d[j - 1].powi(m as i32)).collect();
        let log_prod: f64 = b.iter().zip(&tp.powers).map(|(v, &al)| al as f64 * v.ln()).sum();
        let log_target = m as f64 * (tp.c_root().expect("off-diagonal").ln() + value.abs().ln());
        if log_prod.is_finite() {
            if log_prod < log_target {
                let f = ((log_target - log_prod) / m as f64).exp() * (1.0 + 1e-12);
                b.iter_mut().for_each(|v| *v *= f);
            }
        } else {
            // A share collapsed to zero; fall back to the dominance shares
            // of this component alone.
            for (k, v) in b.iter_mut().enumerate() {
                *v = tp.slice_count(k).expect("slot in range") as f64 * value.abs();
            }
        }
        let at = |slot: usize| b[tp.distinct.iter().position(|&j| j == chain.idx.entries()[slot]).expect("slot")];
        if m >= 3 {
            let mut v = vec![0.0; m - 2];
            v[m - 3] = (at(m - 2) * at(m - 1)).sqrt();
            for l in (1..m - 2).rev() {
                let e = (m - l) as f64;
                v[l - 1] = at(l).powf(1.0 / e) * v[l].powf((e - 1.0) / e);
            }
            for (l, val) in v.into_iter().enumerate() {
                aux.push(AuxEntry { idx: chain.idx.clone(), level: l + 1, val });
            }
        }
        for (&(j, _), val) in chain.b_vars.iter().zip(b) {
            shares.push(ShareEntry { idx: chain.idx.clone(), j, val });
        }
    }
    GddCertificate::new(a, shares, aux, tol)
}

/// Decide whether `a` is a symmetric H+ tensor (equivalently GDD+).
pub fn is_h_plus(a: &SymmetricTensor, cfg: &SolverConfig) -> Result<MembershipVerdict> {
    if a.order() < 2 {
        return arg(format!("membership needs order at least 2, got {}", a.order()));
    }
    let diag = a.diagonal_entries();
    if let Some(j) = diag.iter().position(|&d| d < 0.0) {
        return Ok(MembershipVerdict::not_member(format!("diagonal entry {} is negative", j + 1)));
    }
    for (idx, _) in a.offdiagonal() {
        if let Some(&j) = idx.tight_pair().distinct.iter().find(|&&j| diag[j - 1] == 0.0) {
            return Ok(MembershipVerdict::not_member(format!(
                "diagonal entry {j} is zero but off-diagonal {idx} is not"
            )));
        }
    }
    let tol = MARGINAL_FACTOR * cfg.feas_tol;
    if a.is_diagonal() {
        let cert = GddCertificate::new(a, Vec::new(), Vec::new(), tol);
        return Ok(MembershipVerdict {
            kind: VerdictKind::Member,
            certificate: Some(cert),
            margin: None,
            note: None,
            iterations: 0,
        });
    }

    let d = balancing(a);
    let prog = build_feasibility(&a.scale(&DiagonalScaling::new(d.clone())?)?)?;
    let res = run(&prog.problem, cfg)?;
    match res.status {
        SolveStatus::Optimal | SolveStatus::NearOptimal => {}
        SolveStatus::Infeasible => {
            return Ok(MembershipVerdict {
                iterations: res.iterations,
                ..MembershipVerdict::not_member("power-cone system is infeasible".into())
            })
        }
        status => return Err(TensorError::Solver { status, iterations: res.iterations }),
    }
    let t = prog.layout.objective_offset + res.obj;
    // The undecided band follows the accuracy the solver actually reached.
    let r = res.residuals;
    let tol = MARGINAL_FACTOR * cfg.feas_tol.max(r.primal).max(r.dual).max(r.gap);
    let cert = extract_certificate(a, &prog, &res.x, &d, tol);
    let mut verdict = MembershipVerdict {
        kind: VerdictKind::Member,
        certificate: Some(cert),
        margin: Some(t),
        note: None,
        iterations: res.iterations,
    };
    if t < -tol {
        verdict.kind = VerdictKind::NotMember;
        verdict.certificate = None;
        verdict.note = Some(format!("largest relative diagonal margin is {t:.3e} < 0"));
    } else if t <= tol {
        verdict.kind = VerdictKind::Marginal;
        verdict.note = Some(format!("relative diagonal margin {t:.3e} is within {tol:.1e} of zero"));
    } else {
        let report = verify_certificate(a, verdict.certificate.as_ref().expect("set above"), tol)?;
        if !report.ok {
            verdict.kind = VerdictKind::Marginal;
            verdict.note = Some(format!(
                "margin {t:.3e} but the extracted certificate fails: {}",
                report.violations[0].constraint
            ));
        }
    }
    Ok(verdict)
}

/// M-tensor test: Z-structure plus H+ membership.
pub fn is_m_tensor(a: &SymmetricTensor, cfg: &SolverConfig) -> Result<MembershipVerdict> {
    if a.order() < 2 {
        return arg(format!("membership needs order at least 2, got {}", a.order()));
    }
    if let Some((idx, v)) = a.offdiagonal().find(|(_, v)| *v > 0.0) {
        return Ok(MembershipVerdict::not_member(format!("off-diagonal entry {idx} = {v} is positive")));
    }
    is_h_plus(a, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSolution {
    pub lambda: f64,
    pub iterations: usize,
}

/// Largest `lambda` such that `A - lambda I` is GDD+.
pub fn max_diagonal_shift(a: &SymmetricTensor, cfg: &SolverConfig) -> Result<ShiftSolution> {
    if a.order() < 2 {
        return arg(format!("order must be at least 2, got {}", a.order()));
    }
    if a.is_diagonal() {
        let lambda = a.diagonal_entries().into_iter().fold(f64::INFINITY, f64::min);
        return Ok(ShiftSolution { lambda, iterations: 0 });
    }
    let prog = build_shift_program(a)?;
    let res = run(&prog.problem, cfg)?;
    if !res.status.has_solution() {
        return Err(TensorError::Solver { status: res.status, iterations: res.iterations });
    }
    Ok(ShiftSolution { lambda: (prog.layout.objective_offset + res.obj) * prog.layout.scale, iterations: res.iterations })
}
