//! Conic program model: linear objective (maximized), linear equalities, and a
//! product of nonnegative orthants and three-dimensional power cones.

use std::fmt::Write as _;

use crate::cone::PowerCone3;
use crate::error::ConicError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConeKind {
    Nonneg,
    Power3(PowerCone3),
}

/// A cone block and the variables it constrains. A power-cone block always
/// has exactly three variables `(x1, x2, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeBlock {
    pub kind: ConeKind,
    pub vars: Vec<usize>,
}

impl ConeBlock {
    pub fn size(&self) -> usize {
        self.vars.len()
    }

    /// Barrier parameter of the block.
    pub fn degree(&self) -> usize {
        match self.kind {
            ConeKind::Nonneg => self.vars.len(),
            ConeKind::Power3(_) => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqRow {
    pub coefs: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// `maximize objective . x` subject to the equality rows and cone blocks.
/// Variables not covered by any block are free.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicProblem {
    num_vars: usize,
    objective: Vec<(usize, f64)>,
    rows: Vec<EqRow>,
    cones: Vec<ConeBlock>,
}

impl ConicProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_vars(num_vars: usize) -> Self {
        Self { num_vars, ..Self::default() }
    }

    /// Append a new variable and return its index.
    pub fn add_var(&mut self) -> usize {
        self.num_vars += 1;
        self.num_vars - 1
    }

    pub fn add_vars(&mut self, count: usize) -> Vec<usize> {
        (0..count).map(|_| self.add_var()).collect()
    }

    /// Add `coef` to the objective coefficient of `var`.
    pub fn add_objective(&mut self, var: usize, coef: f64) {
        self.objective.push((var, coef));
    }

    pub fn add_eq(&mut self, coefs: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.rows.push(EqRow { coefs, rhs });
        self.rows.len() - 1
    }

    pub fn add_nonneg(&mut self, vars: Vec<usize>) {
        self.cones.push(ConeBlock { kind: ConeKind::Nonneg, vars });
    }

    /// Constrain `(x1, x2, z)` to the power cone `cone`.
    pub fn add_power(&mut self, cone: PowerCone3, x1: usize, x2: usize, z: usize) {
        self.cones.push(ConeBlock { kind: ConeKind::Power3(cone), vars: vec![x1, x2, z] });
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn rows(&self) -> &[EqRow] {
        &self.rows
    }

    pub fn cones(&self) -> &[ConeBlock] {
        &self.cones
    }

    /// Dense objective vector (duplicate entries summed).
    pub fn objective_dense(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.num_vars];
        for &(j, v) in &self.objective {
            c[j] += v;
        }
        c
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, v)| v * x[j]).sum()
    }

    /// Per-variable owning block, `None` for free variables.
    pub fn owners(&self) -> Vec<Option<usize>> {
        let mut owner = vec![None; self.num_vars];
        for (b, block) in self.cones.iter().enumerate() {
            for &v in &block.vars {
                if v < self.num_vars {
                    owner[v] = Some(b);
                }
            }
        }
        owner
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        let n = self.num_vars;
        let check = |index: usize| {
            if index < n {
                Ok(())
            } else {
                Err(ConicError::VariableOutOfRange { index, num_vars: n })
            }
        };
        for &(j, v) in &self.objective {
            check(j)?;
            if !v.is_finite() {
                return Err(ConicError::Config(format!("objective coefficient of variable {j} is not finite")));
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(ConicError::NonFinite { row: r });
            }
            for &(j, v) in &row.coefs {
                check(j)?;
                if !v.is_finite() {
                    return Err(ConicError::NonFinite { row: r });
                }
            }
        }
        let mut seen = vec![false; n];
        for block in &self.cones {
            if let ConeKind::Power3(_) = block.kind {
                if block.vars.len() != 3 {
                    return Err(ConicError::Config("power cone block needs exactly three variables".into()));
                }
            }
            for &v in &block.vars {
                check(v)?;
                if seen[v] {
                    return Err(ConicError::VariableInTwoCones(v));
                }
                seen[v] = true;
            }
        }
        Ok(())
    }

    /// Plain-text dump for cross-checking with other tools.
    ///
    /// ```text
    /// vars <n>
    /// maximize <j>:<c> ...
    /// eq <rhs> <j>:<a> ...
    /// nonneg <j> ...
    /// pow <alpha> <x1> <x2> <z>
    /// ```
    ///
    /// Indices are 0-based; variables not listed in a cone line are free.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "vars {}", self.num_vars);
        out.push_str("maximize");
        for &(j, v) in &self.objective {
            let _ = write!(out, " {j}:{v:e}");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "eq {:e}", row.rhs);
            for &(j, v) in &row.coefs {
                let _ = write!(out, " {j}:{v:e}");
            }
            out.push('\n');
        }
        for block in &self.cones {
            match block.kind {
                ConeKind::Nonneg => out.push_str("nonneg"),
                ConeKind::Power3(c) => {
                    let _ = write!(out, "pow {:e}", c.alpha());
                }
            }
            for v in &block.vars {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Feasibility report for a candidate point, computed directly from the
/// problem data.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// Largest absolute equality violation.
    pub max_eq_violation: f64,
    /// Per-block membership margin (negative means outside the cone).
    pub cone_margins: Vec<f64>,
    pub objective: f64,
}

impl ResidualReport {
    pub fn worst_cone_margin(&self) -> f64 {
        self.cone_margins.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest violation over equalities and cones.
    pub fn max_violation(&self) -> f64 {
        self.max_eq_violation.max((-self.worst_cone_margin()).max(0.0))
    }

    pub fn feasible(&self, tol: f64) -> bool {
        self.max_violation() <= tol
    }
}

pub fn check_solution(p: &ConicProblem, x: &[f64]) -> Result<ResidualReport, ConicError> {
    if x.len() != p.num_vars() {
        return Err(ConicError::DimensionMismatch { expected: p.num_vars(), got: x.len() });
    }
    p.validate()?;
    let max_eq_violation = p
        .rows()
        .iter()
        .map(|row| (row.coefs.iter().map(|&(j, a)| a * x[j]).sum::<f64>() - row.rhs).abs())
        .fold(0.0, f64::max);
    let cone_margins = p
        .cones()
        .iter()
        .map(|block| match block.kind {
            ConeKind::Nonneg => block.vars.iter().map(|&v| x[v]).fold(f64::INFINITY, f64::min),
            ConeKind::Power3(c) => c.margin(x[block.vars[0]], x[block.vars[1]], x[block.vars[2]]),
        })
        .collect();
    Ok(ResidualReport { max_eq_violation, cone_margins, objective: p.objective_value(x) })
}
