//! Removal of linearly dependent equality rows.

use std::collections::{BTreeMap, HashMap};

use crate::problem::EqRow;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum RowReduction {
    /// Indices of the rows to keep, in their original order.
    Keep(Vec<usize>),
    /// A combination of rows reads `0 = nonzero`.
    Inconsistent(usize),
}

/// Sparse Gaussian elimination over the rows in order. A row that reduces to
/// zero is dependent on earlier rows and dropped, unless its reduced
/// right-hand side is nonzero.
pub(crate) fn independent_rows(rows: &[EqRow], tol: f64) -> RowReduction {
    struct Pivot {
        col: usize,
        coefs: BTreeMap<usize, f64>,
        rhs: f64,
    }
    let mut pivots: Vec<Pivot> = Vec::new();
    let mut pivot_of_col: HashMap<usize, usize> = HashMap::new();
    let mut keep = Vec::new();

    for (r, row) in rows.iter().enumerate() {
        let mut coefs: BTreeMap<usize, f64> = BTreeMap::new();
        for &(j, a) in &row.coefs {
            *coefs.entry(j).or_insert(0.0) += a;
        }
        let scale = coefs.values().fold(row.rhs.abs(), |m, v| m.max(v.abs())).max(1.0);
        let mut rhs = row.rhs;
        loop {
            let next = coefs
                .iter()
                .filter(|(_, v)| **v != 0.0)
                .filter_map(|(j, _)| pivot_of_col.get(j).copied())
                .min();
            let Some(p) = next else { break };
            let piv = &pivots[p];
            let factor = coefs[&piv.col] / piv.coefs[&piv.col];
            for (&j, &v) in &piv.coefs {
                *coefs.entry(j).or_insert(0.0) -= factor * v;
            }
            coefs.remove(&piv.col);
            rhs -= factor * piv.rhs;
        }
        coefs.retain(|_, v| v.abs() > tol * scale);
        match coefs.iter().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(a.0))) {
            Some((&col, _)) => {
                pivot_of_col.insert(col, pivots.len());
                pivots.push(Pivot { col, coefs, rhs });
                keep.push(r);
            }
            None => {
                if rhs.abs() > tol.sqrt() * scale {
                    return RowReduction::Inconsistent(r);
                }
            }
        }
    }
    RowReduction::Keep(keep)
}
