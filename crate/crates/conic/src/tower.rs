//! Rewriting of power cones with rational exponents into towers of
//! `alpha = 1/2` cones (rotated quadratic cones).
//!
//! For `alpha = p/q` and `L = 2^k >= q`, `(x1, x2, z) in K_{p/q}` holds iff
//! some `w >= |z|` satisfies `w^L <= x1^p x2^(q-p) w^(L-q)`. The right-hand
//! side is a product of `L` leaves, and the geometric mean of `L` leaves is a
//! binary tree of `K_{1/2}` cones.

use crate::cone::PowerCone3;
use crate::error::ConicError;
use crate::problem::{ConeKind, ConicProblem};

/// `alpha = p/q` in lowest terms with `q <= 64`, if such a fraction matches
/// to within `1e-12`.
pub fn rational_exponent(alpha: f64) -> Option<(u32, u32)> {
    (1..=64u32).find_map(|q| {
        let p = (alpha * q as f64).round();
        if p >= 1.0 && p < q as f64 && (p / q as f64 - alpha).abs() <= 1e-12 {
            Some((p as u32, q))
        } else {
            None
        }
    })
}

/// Equivalent problem using only `alpha = 1/2` power cones and nonnegative
/// slacks. The original variables and rows keep their indices; new ones are
/// appended.
pub fn to_tower(p: &ConicProblem) -> Result<ConicProblem, ConicError> {
    let mut out = ConicProblem::with_vars(p.num_vars());
    let obj = p.objective_dense();
    for (j, &c) in obj.iter().enumerate() {
        if c != 0.0 {
            out.add_objective(j, c);
        }
    }
    for row in p.rows() {
        out.add_eq(row.coefs.clone(), row.rhs);
    }
    let half = PowerCone3::new(0.5)?;
    for block in p.cones() {
        let cone = match block.kind {
            ConeKind::Nonneg => {
                out.add_nonneg(block.vars.clone());
                continue;
            }
            ConeKind::Power3(c) => c,
        };
        let (x1, x2, z) = (block.vars[0], block.vars[1], block.vars[2]);
        let (num, den) = rational_exponent(cone.alpha()).ok_or_else(|| {
            ConicError::Config(format!("exponent {} has no small rational form", cone.alpha()))
        })?;
        if den == 2 {
            out.add_power(half, x1, x2, z);
            continue;
        }
        let leaves_len = den.next_power_of_two();
        let mut leaves = Vec::with_capacity(leaves_len as usize);
        let copies = |out: &mut ConicProblem, var: usize, count: u32, leaves: &mut Vec<usize>| {
            for k in 0..count {
                if k == 0 {
                    leaves.push(var);
                } else {
                    let c = out.add_var();
                    out.add_eq(vec![(c, 1.0), (var, -1.0)], 0.0);
                    leaves.push(c);
                }
            }
        };
        copies(&mut out, x1, num, &mut leaves);
        copies(&mut out, x2, den - num, &mut leaves);
        let w = if leaves_len > den {
            let w = out.add_var();
            copies(&mut out, w, leaves_len - den, &mut leaves);
            Some(w)
        } else {
            None
        };
        let mut level = leaves;
        while level.len() > 2 {
            let mut next = Vec::with_capacity(level.len() / 2);
            for pair in level.chunks(2) {
                // The node value sits in the z-slot of one cone and in a base
                // slot of its parent, so it needs two linked variables.
                let u = out.add_vars(2);
                out.add_power(half, pair[0], pair[1], u[0]);
                out.add_eq(vec![(u[1], 1.0), (u[0], -1.0)], 0.0);
                next.push(u[1]);
            }
            level = next;
        }
        match w {
            None => out.add_power(half, level[0], level[1], z),
            Some(w) => {
                let root = out.add_var();
                out.add_power(half, level[0], level[1], root);
                out.add_eq(vec![(root, 1.0), (w, -1.0)], 0.0);
                let s = out.add_vars(2);
                out.add_eq(vec![(w, 1.0), (z, -1.0), (s[0], -1.0)], 0.0);
                out.add_eq(vec![(w, 1.0), (z, 1.0), (s[1], -1.0)], 0.0);
                out.add_nonneg(s);
            }
        }
    }
    Ok(out)
}
