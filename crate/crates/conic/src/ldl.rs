//! Sparse LDL^T factorization of symmetric quasi-definite matrices, with a
//! deterministic minimum-degree fill-reducing ordering.
//!
//! The matrix is given once as a list of upper-triangular coordinates; the
//! numeric values can then be refactored many times on the same pattern.

use std::collections::BTreeSet;

/// Greedy minimum-degree ordering on the explicit elimination graph. Ties are
/// broken by the smallest node index, so the result is deterministic.
pub(crate) fn min_degree_order(n: usize, entries: &[(usize, usize)]) -> Vec<usize> {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &(i, j) in entries {
        if i != j {
            adj[i].insert(j);
            adj[j].insert(i);
        }
    }
    let mut degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (degree[v], v)).collect();
    let mut order = Vec::with_capacity(n);
    while let Some((_, v)) = queue.pop_first() {
        order.push(v);
        let nbrs: Vec<usize> = std::mem::take(&mut adj[v]).into_iter().collect();
        for &u in &nbrs {
            adj[u].remove(&v);
        }
        for (k, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[k + 1..] {
                if adj[a].insert(b) {
                    adj[b].insert(a);
                }
            }
        }
        for &u in &nbrs {
            queue.remove(&(degree[u], u));
            degree[u] = adj[u].len();
            queue.insert((degree[u], u));
        }
    }
    order
}

#[derive(Debug, Clone)]
pub(crate) struct Ldl {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    ap: Vec<usize>,
    ai: Vec<usize>,
    ax: Vec<f64>,
    /// Position in `ax` of each input entry.
    slot: Vec<usize>,
    parent: Vec<Option<usize>>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    lnz: Vec<usize>,
    y: Vec<f64>,
    pattern: Vec<usize>,
    flag: Vec<usize>,
    work: Vec<f64>,
}

impl Ldl {
    /// Symbolic analysis for the upper-triangular pattern `entries`
    /// (coordinates with `i <= j`, duplicates allowed and summed). Every
    /// diagonal position should be present.
    pub(crate) fn new(n: usize, entries: &[(usize, usize)]) -> Self {
        let perm = min_degree_order(n, entries);
        let mut pinv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            pinv[old] = new;
        }
        let permuted: Vec<(usize, usize)> = entries
            .iter()
            .map(|&(i, j)| {
                let (a, b) = (pinv[i], pinv[j]);
                (a.min(b), a.max(b))
            })
            .collect();

        // Column-compressed storage, merging duplicates.
        let mut by_col: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (e, &(r, c)) in permuted.iter().enumerate() {
            by_col[c].push((r, e));
        }
        let mut ap = vec![0; n + 1];
        let mut ai = Vec::new();
        let mut slot = vec![0; entries.len()];
        for c in 0..n {
            by_col[c].sort_unstable();
            let mut last = None;
            for &(r, e) in &by_col[c] {
                if last != Some(r) {
                    ai.push(r);
                    last = Some(r);
                }
                slot[e] = ai.len() - 1;
            }
            ap[c + 1] = ai.len();
        }

        // Elimination tree and column counts of L.
        let mut parent = vec![None; n];
        let mut lnz = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        for k in 0..n {
            flag[k] = k;
            for p in ap[k]..ap[k + 1] {
                let mut i = ai[p];
                while i < k && flag[i] != k {
                    if parent[i].is_none() {
                        parent[i] = Some(k);
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i].expect("parent set above");
                }
            }
        }
        let mut lp = vec![0; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        let nnz_l = lp[n];
        Self {
            n,
            perm,
            ax: vec![0.0; ai.len()],
            ap,
            ai,
            slot,
            parent,
            lp,
            li: vec![0; nnz_l],
            lx: vec![0.0; nnz_l],
            d: vec![0.0; n],
            lnz,
            y: vec![0.0; n],
            pattern: vec![0; n],
            flag,
            work: vec![0.0; n],
        }
    }

    pub(crate) fn nnz_l(&self) -> usize {
        self.lp[self.n]
    }

    /// Numeric factorization. `signs[i]` is the expected sign of the pivot for
    /// original index `i`; pivots with `sign * d < eps` are replaced by
    /// `sign * delta`. Returns the number of replaced pivots.
    pub(crate) fn factor(&mut self, values: &[f64], signs: &[f64], eps: f64, delta: f64) -> Result<usize, usize> {
        let n = self.n;
        self.ax.iter_mut().for_each(|v| *v = 0.0);
        for (e, &v) in values.iter().enumerate() {
            self.ax[self.slot[e]] += v;
        }
        let mut bumped = 0;
        for k in 0..n {
            self.y[k] = 0.0;
            let mut top = n;
            self.flag[k] = k;
            self.lnz[k] = 0;
            for p in self.ap[k]..self.ap[k + 1] {
                let mut i = self.ai[p];
                self.y[i] += self.ax[p];
                let mut len = 0;
                while self.flag[i] != k {
                    self.pattern[len] = i;
                    len += 1;
                    self.flag[i] = k;
                    i = match self.parent[i] {
                        Some(q) => q,
                        None => break,
                    };
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    self.pattern[top] = self.pattern[len];
                }
            }
            let mut dk = self.y[k];
            self.y[k] = 0.0;
            for t in top..n {
                let i = self.pattern[t];
                let yi = self.y[i];
                self.y[i] = 0.0;
                let p2 = self.lp[i] + self.lnz[i];
                for p in self.lp[i]..p2 {
                    self.y[self.li[p]] -= self.lx[p] * yi;
                }
                let lki = yi / self.d[i];
                dk -= lki * yi;
                self.li[p2] = k;
                self.lx[p2] = lki;
                self.lnz[i] += 1;
            }
            let sign = signs[self.perm[k]];
            if !dk.is_finite() {
                return Err(self.perm[k]);
            }
            if sign * dk < eps {
                dk = sign * delta;
                bumped += 1;
            }
            self.d[k] = dk;
        }
        Ok(bumped)
    }

    /// Solve in place using the most recent factorization.
    pub(crate) fn solve(&mut self, b: &mut [f64]) {
        let n = self.n;
        let x = &mut self.work;
        for k in 0..n {
            x[k] = b[self.perm[k]];
        }
        for j in 0..n {
            let xj = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                x[self.li[p]] -= self.lx[p] * xj;
            }
        }
        for j in 0..n {
            x[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut s = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                s -= self.lx[p] * x[self.li[p]];
            }
            x[j] = s;
        }
        for k in 0..n {
            b[self.perm[k]] = x[k];
        }
    }
}

/// `y = M x` for the symmetric matrix given by upper-triangular coordinates.
pub(crate) fn sym_matvec(n: usize, entries: &[(usize, usize)], values: &[f64], x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for (&(i, j), &v) in entries.iter().zip(values) {
        y[i] += v * x[j];
        if i != j {
            y[j] += v * x[i];
        }
    }
    y
}
