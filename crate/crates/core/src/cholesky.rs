//! Sparse Cholesky factorization of the interior-point normal matrix
//! `M = A·D·Aᵀ`.
//!
//! The symbolic phase runs once per model: a minimum-degree ordering, the
//! elimination tree and the column pattern of `L`. The numeric phase is an
//! up-looking factorization (one row of `L` per step) and is repeated every
//! iteration with new `D`. A pivot that breaks down is replaced by
//! `r·M_kk`, with `r` starting at 1e-10; callers escalate `r` by 10× up to
//! 1e-6 through [`NormalEquations::refactor`] when solves are inaccurate.

use thiserror::Error;

use crate::sparse::CsMatrix;

/// First nonzero regularization and its cap, relative to each diagonal entry.
pub const REG_START: f64 = 1e-10;
pub const REG_MAX: f64 = 1e-6;

/// Models up to this many rows get an exact minimum-degree ordering; larger
/// ones fall back to ordering by initial degree.
const EXACT_MIN_DEGREE_LIMIT: usize = 1500;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CholeskyError {
    #[error("factorization broke down at pivot {pivot} even with regularization {regularization:e}")]
    NotPositiveDefinite { pivot: usize, regularization: f64 },
    #[error("non-finite entry in normal matrix")]
    NonFinite,
}

/// Symbolic analysis plus the most recent numeric factor of `A·D·Aᵀ`.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    m: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// Upper triangle of the permuted `M` in CSC, rows ascending per column.
    c_ptr: Vec<usize>,
    c_idx: Vec<usize>,
    c_val: Vec<f64>,
    /// For every column `k` of `A`: positions in `c_val` receiving
    /// `a_ik a_jk d_k`, one per pair `(s, q ≥ s)` of its entries.
    scatter: Vec<Vec<usize>>,
    parent: Vec<usize>,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    diag_pos: Vec<usize>,
    /// Regularization used by the current factor (absolute).
    regularization: f64,
    perturbed: usize,
    factored: bool,
}

const NONE: usize = usize::MAX;

impl NormalEquations {
    pub fn analyze(a: &CsMatrix) -> Self {
        let m = a.nrows();
        let perm = min_degree_order(a);
        let mut iperm = vec![0; m];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }

        // Pattern of the permuted upper triangle, including the diagonal.
        let mut cols: Vec<Vec<usize>> = (0..m).map(|k| vec![k]).collect();
        for k in 0..a.ncols() {
            let rows: Vec<usize> = a.col(k).map(|(i, _)| iperm[i]).collect();
            for &p in &rows {
                for &q in &rows {
                    if p < q {
                        cols[q].push(p);
                    }
                }
            }
        }
        let mut c_ptr = vec![0; m + 1];
        let mut c_idx = Vec::new();
        for (k, col) in cols.iter_mut().enumerate() {
            col.sort_unstable();
            col.dedup();
            c_idx.extend_from_slice(col);
            c_ptr[k + 1] = c_idx.len();
        }
        let find = |row: usize, col: usize| -> usize {
            let s = &c_idx[c_ptr[col]..c_ptr[col + 1]];
            c_ptr[col] + s.binary_search(&row).expect("entry in pattern")
        };
        let scatter = (0..a.ncols())
            .map(|k| {
                let rows: Vec<usize> = a.col(k).map(|(i, _)| iperm[i]).collect();
                let mut pos = Vec::with_capacity(rows.len() * (rows.len() + 1) / 2);
                for (s, &p) in rows.iter().enumerate() {
                    for &q in &rows[s..] {
                        let (r, c) = if p <= q { (p, q) } else { (q, p) };
                        pos.push(find(r, c));
                    }
                }
                pos
            })
            .collect();

        let parent = etree(m, &c_ptr, &c_idx);
        // Column counts of L via the row patterns.
        let mut counts = vec![1usize; m];
        let mut stack = vec![0; m];
        let mut mark = vec![false; m];
        for k in 0..m {
            let top = ereach(k, &c_ptr, &c_idx, &parent, &mut stack, &mut mark);
            for &i in &stack[top..m] {
                counts[i] += 1;
            }
        }
        let mut l_ptr = vec![0; m + 1];
        for k in 0..m {
            l_ptr[k + 1] = l_ptr[k] + counts[k];
        }
        let nnz_l = l_ptr[m];
        let nnz_c = c_idx.len();
        NormalEquations {
            m,
            perm,
            c_ptr,
            c_idx,
            c_val: vec![0.0; nnz_c],
            scatter,
            parent,
            diag_pos: l_ptr[..m].to_vec(),
            l_ptr,
            l_idx: vec![0; nnz_l],
            l_val: vec![0.0; nnz_l],
            regularization: 0.0,
            perturbed: 0,
            factored: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn factor_nnz(&self) -> usize {
        self.l_ptr[self.m]
    }

    /// Relative regularization `r` of the current factor.
    pub fn regularization(&self) -> f64 {
        self.regularization
    }

    /// Assembles `A·diag(d)·Aᵀ` and factors it. On pivot breakdown the
    /// factorization is repeated with regularization [`REG_START`].
    pub fn factor(&mut self, a: &CsMatrix, d: &[f64]) -> Result<(), CholeskyError> {
        assert_eq!(d.len(), a.ncols());
        self.c_val.iter_mut().for_each(|v| *v = 0.0);
        for (k, pos) in self.scatter.iter().enumerate() {
            let vals: Vec<f64> = a.col(k).map(|(_, v)| v).collect();
            let mut t = 0;
            for s in 0..vals.len() {
                for q in s..vals.len() {
                    self.c_val[pos[t]] += vals[s] * vals[q] * d[k];
                    t += 1;
                }
            }
        }
        if self.c_val.iter().any(|v| !v.is_finite()) {
            self.factored = false;
            return Err(CholeskyError::NonFinite);
        }
        match self.numeric(0.0) {
            Ok(_) => {
                self.regularization = 0.0;
                self.factored = true;
                Ok(())
            }
            Err(_) => self.refactor(REG_START),
        }
    }

    /// Refactors the assembled matrix, replacing every pivot that breaks
    /// down by `rel·M_kk`. `rel` must not exceed [`REG_MAX`].
    pub fn refactor(&mut self, rel: f64) -> Result<(), CholeskyError> {
        assert!(rel > 0.0 && rel <= REG_MAX * 1.000001);
        match self.numeric(rel) {
            Ok(n) => {
                self.regularization = rel;
                self.perturbed = n;
                self.factored = true;
                Ok(())
            }
            Err(pivot) => {
                self.factored = false;
                Err(CholeskyError::NotPositiveDefinite {
                    pivot: self.perm[pivot],
                    regularization: rel,
                })
            }
        }
    }

    /// Number of pivots replaced in the current factor.
    pub fn perturbed_pivots(&self) -> usize {
        if self.regularization > 0.0 {
            self.perturbed
        } else {
            0
        }
    }

    /// Up-looking factorization of the assembled matrix `M`. With `rel = 0`
    /// the first pivot that breaks down is returned as an error; otherwise
    /// such pivots are replaced by `rel·M_kk` and counted.
    fn numeric(&mut self, rel: f64) -> Result<usize, usize> {
        let m = self.m;
        let mut next = self.l_ptr[..m].to_vec();
        let mut x = vec![0.0; m];
        let mut stack = vec![0; m];
        let mut mark = vec![false; m];
        let mut perturbed = 0;
        for k in 0..m {
            let top = ereach(k, &self.c_ptr, &self.c_idx, &self.parent, &mut stack, &mut mark);
            let mut diag = 0.0;
            for p in self.c_ptr[k]..self.c_ptr[k + 1] {
                let i = self.c_idx[p];
                if i == k {
                    diag = self.c_val[p];
                } else {
                    x[i] = self.c_val[p];
                }
            }
            let mut d = diag;
            for &i in &stack[top..m] {
                let lki = x[i] / self.l_val[self.l_ptr[i]];
                x[i] = 0.0;
                for p in self.l_ptr[i] + 1..next[i] {
                    x[self.l_idx[p]] -= self.l_val[p] * lki;
                }
                d -= lki * lki;
                let p = next[i];
                next[i] += 1;
                self.l_idx[p] = k;
                self.l_val[p] = lki;
            }
            // Relative pivot test: a pivot that lost all but 1e-14 of its
            // diagonal is numerically zero.
            if !(d > 1e-14 * diag) || !d.is_finite() {
                if rel == 0.0 || !(diag > 0.0) || !d.is_finite() {
                    return Err(k);
                }
                d = rel * diag;
                perturbed += 1;
            }
            let p = next[k];
            next[k] += 1;
            debug_assert_eq!(p, self.diag_pos[k]);
            self.l_idx[p] = k;
            self.l_val[p] = d.sqrt();
        }
        Ok(perturbed)
    }

    /// Solves with the current factor (which includes any regularization).
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert!(self.factored, "solve before successful factor");
        let m = self.m;
        let mut w: Vec<f64> = self.perm.iter().map(|&old| rhs[old]).collect();
        // L w' = w
        for j in 0..m {
            let p0 = self.l_ptr[j];
            w[j] /= self.l_val[p0];
            let wj = w[j];
            for p in p0 + 1..self.l_ptr[j + 1] {
                w[self.l_idx[p]] -= self.l_val[p] * wj;
            }
        }
        // Lᵀ v = w'
        for j in (0..m).rev() {
            let p0 = self.l_ptr[j];
            let mut s = w[j];
            for p in p0 + 1..self.l_ptr[j + 1] {
                s -= self.l_val[p] * w[self.l_idx[p]];
            }
            w[j] = s / self.l_val[p0];
        }
        let mut out = vec![0.0; m];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = w[new];
        }
        out
    }

    /// Solves `A·D·Aᵀ v = rhs` with up to `max_refine` steps of iterative
    /// refinement against the unregularized operator. Returns the solution
    /// and its normwise backward error `‖r‖∞ / (‖M‖∞‖v‖∞ + ‖rhs‖∞)`.
    pub fn solve_refined(
        &self,
        a: &CsMatrix,
        d: &[f64],
        rhs: &[f64],
        max_refine: usize,
    ) -> (Vec<f64>, f64) {
        let mut v = self.solve(rhs);
        let mnorm = self.assembled_norm_inf();
        let rnorm = crate::sparse::norm_inf(rhs);
        let mut err = backward_error(a, d, rhs, &v, mnorm, rnorm).0;
        for _ in 0..max_refine {
            if err <= 1e-14 {
                break;
            }
            let (_, r) = backward_error(a, d, rhs, &v, mnorm, rnorm);
            let dv = self.solve(&r);
            let cand: Vec<f64> = v.iter().zip(&dv).map(|(a, b)| a + b).collect();
            let (e, _) = backward_error(a, d, rhs, &cand, mnorm, rnorm);
            if e < err {
                v = cand;
                err = e;
            } else {
                break;
            }
        }
        (v, err)
    }

    /// ∞-norm of the assembled (unregularized) symmetric matrix.
    fn assembled_norm_inf(&self) -> f64 {
        let mut sums = vec![0.0; self.m];
        for k in 0..self.m {
            for p in self.c_ptr[k]..self.c_ptr[k + 1] {
                let i = self.c_idx[p];
                let v = self.c_val[p].abs();
                sums[k] += v;
                if i != k {
                    sums[i] += v;
                }
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }
}

/// `(backward error, residual)` of `v` for `A·D·Aᵀ v = rhs`.
fn backward_error(
    a: &CsMatrix,
    d: &[f64],
    rhs: &[f64],
    v: &[f64],
    mnorm: f64,
    rnorm: f64,
) -> (f64, Vec<f64>) {
    let mut t = a.tmul_vec(v);
    t.iter_mut().zip(d).for_each(|(t, d)| *t *= d);
    let mv = a.mul_vec(&t);
    let r: Vec<f64> = rhs.iter().zip(&mv).map(|(b, m)| b - m).collect();
    let denom = mnorm * crate::sparse::norm_inf(v) + rnorm;
    let err = if denom > 0.0 {
        crate::sparse::norm_inf(&r) / denom
    } else {
        0.0
    };
    (err, r)
}

/// Elimination tree of a symmetric matrix given by its upper triangle in CSC.
fn etree(m: usize, c_ptr: &[usize], c_idx: &[usize]) -> Vec<usize> {
    let mut parent = vec![NONE; m];
    let mut ancestor = vec![NONE; m];
    for k in 0..m {
        for &i0 in &c_idx[c_ptr[k]..c_ptr[k + 1]] {
            let mut i = i0;
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

/// Nonzero pattern of row `k` of `L` (excluding the diagonal), written to
/// `stack[top..m]` in an order where every entry precedes its etree parent.
fn ereach(
    k: usize,
    c_ptr: &[usize],
    c_idx: &[usize],
    parent: &[usize],
    stack: &mut [usize],
    mark: &mut [bool],
) -> usize {
    let m = parent.len();
    let mut top = m;
    mark[k] = true;
    for &i0 in &c_idx[c_ptr[k]..c_ptr[k + 1]] {
        if i0 > k {
            continue;
        }
        let mut len = 0;
        let mut i = i0;
        while !mark[i] {
            stack[len] = i;
            len += 1;
            mark[i] = true;
            i = parent[i];
        }
        while len > 0 {
            top -= 1;
            len -= 1;
            stack[top] = stack[len];
        }
    }
    for &i in &stack[top..m] {
        mark[i] = false;
    }
    mark[k] = false;
    top
}

/// Minimum-degree ordering of the graph of `A·Aᵀ`. Ties break on the lower
/// index, so the ordering is deterministic.
fn min_degree_order(a: &CsMatrix) -> Vec<usize> {
    let m = a.nrows();
    if m > EXACT_MIN_DEGREE_LIMIT {
        return static_degree_order(a);
    }
    let words = m.div_ceil(64);
    let mut adj = vec![0u64; m * words];
    let set = |adj: &mut [u64], i: usize, j: usize| adj[i * words + j / 64] |= 1 << (j % 64);
    for k in 0..a.ncols() {
        let rows: Vec<usize> = a.col(k).map(|(i, _)| i).collect();
        for &p in &rows {
            for &q in &rows {
                if p != q {
                    set(&mut adj, p, q);
                }
            }
        }
    }
    let mut alive = vec![true; m];
    let mut degree: Vec<u32> = (0..m)
        .map(|i| adj[i * words..(i + 1) * words].iter().map(|w| w.count_ones()).sum())
        .collect();
    let mut order = Vec::with_capacity(m);
    let mut nbrs = Vec::new();
    for _ in 0..m {
        let v = (0..m)
            .filter(|&i| alive[i])
            .min_by_key(|&i| (degree[i], i))
            .unwrap();
        alive[v] = false;
        order.push(v);
        nbrs.clear();
        for w in 0..words {
            let mut bits = adj[v * words + w];
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                nbrs.push(w * 64 + b);
                bits &= bits - 1;
            }
        }
        let row_v: Vec<u64> = adj[v * words..(v + 1) * words].to_vec();
        for &u in &nbrs {
            let row_u = &mut adj[u * words..(u + 1) * words];
            for (x, y) in row_u.iter_mut().zip(&row_v) {
                *x |= *y;
            }
            row_u[u / 64] &= !(1 << (u % 64));
            row_u[v / 64] &= !(1 << (v % 64));
            degree[u] = row_u.iter().map(|w| w.count_ones()).sum();
        }
    }
    order
}

fn static_degree_order(a: &CsMatrix) -> Vec<usize> {
    let m = a.nrows();
    let mut deg = vec![0usize; m];
    for k in 0..a.ncols() {
        let t = a.col_nnz(k);
        for (i, _) in a.col(k) {
            deg[i] += t - 1;
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| (deg[i], i));
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_normal(a: &CsMatrix, d: &[f64]) -> Vec<Vec<f64>> {
        let ad = a.to_dense();
        let m = a.nrows();
        let mut out = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..m {
                out[i][j] = (0..a.ncols()).map(|k| ad[i][k] * d[k] * ad[j][k]).sum();
            }
        }
        out
    }

    fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize, density: f64) -> CsMatrix {
        let mut t = Vec::new();
        for i in 0..m {
            t.push((i, rng.gen_range(0..n), rng.gen_range(0.5..2.0)));
        }
        for i in 0..m {
            for j in 0..n {
                if rng.gen::<f64>() < density {
                    t.push((i, j, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        CsMatrix::from_triplets(m, n, &t)
    }

    #[test]
    fn scalar_system() {
        let a = CsMatrix::from_dense(&[vec![2.0]]);
        let mut ne = NormalEquations::analyze(&a);
        ne.factor(&a, &[3.0]).unwrap();
        assert!((ne.solve(&[12.0])[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matches_dense_product_on_random_full_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..20 {
            let m = 5 + trial;
            let n = 2 * m;
            let a = random_matrix(&mut rng, m, n, 0.2);
            // Full row rank: append an identity block.
            let mut t = a.triplets();
            for i in 0..m {
                t.push((i, n + i, 1.0));
            }
            let a = CsMatrix::from_triplets(m, n + m, &t);
            let d: Vec<f64> = (0..n + m).map(|_| 10f64.powf(rng.gen_range(-3.0..3.0))).collect();
            let mut ne = NormalEquations::analyze(&a);
            ne.factor(&a, &d).unwrap();
            assert_eq!(ne.regularization(), 0.0);
            let x_true: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let md = dense_normal(&a, &d);
            let rhs: Vec<f64> = md
                .iter()
                .map(|row| row.iter().zip(&x_true).map(|(a, b)| a * b).sum())
                .collect();
            let (x, err) = ne.solve_refined(&a, &d, &rhs, 3);
            assert!(err < 1e-14, "backward error {err}");
            for (u, v) in x.iter().zip(&x_true) {
                assert!((u - v).abs() < 1e-7 * (1.0 + v.abs()), "{u} vs {v}");
            }
        }
    }

    #[test]
    fn dependent_rows_trigger_regularization() {
        // Row 2 = row 0 + row 1.
        let a = CsMatrix::from_dense(&[
            vec![1.0, 0.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.0, 1.0],
            vec![1.0, 1.0, 1.0, 1.0],
        ]);
        let d = vec![1.0; 4];
        let mut ne = NormalEquations::analyze(&a);
        ne.factor(&a, &d).unwrap();
        assert!(ne.regularization() > 0.0);
        assert_eq!(ne.perturbed_pivots(), 1);
        // Consistent right-hand side: M·(1, 2, 0)
        let rhs = vec![2.0, 4.0, 6.0];
        let (v, err) = ne.solve_refined(&a, &d, &rhs, 10);
        assert!(err < 1e-10, "backward error {err}");
        assert!(v.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 6, 10, 0.3);
        let mut ne = NormalEquations::analyze(&a);
        ne.factor(&a, &[1.0; 10]).unwrap();
        assert!(ne.solve(&[0.0; 6]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ordering_is_a_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(&mut rng, 40, 60, 0.05);
        let mut p = min_degree_order(&a);
        p.sort_unstable();
        assert_eq!(p, (0..40).collect::<Vec<_>>());
        let mut p = static_degree_order(&a);
        p.sort_unstable();
        assert_eq!(p, (0..40).collect::<Vec<_>>());
    }
}
