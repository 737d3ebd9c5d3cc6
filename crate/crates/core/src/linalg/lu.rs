//! Left-looking sparse LU with threshold partial pivoting (Gilbert–Peierls).
//!
//! Columns are eliminated in nested-dissection order; within a column the
//! diagonal entry is kept as pivot whenever it is within a factor
//! [`DIAGONAL_PREFERENCE`] of the largest candidate, which preserves the
//! symmetric fill pattern for SPD blocks while still pivoting through the
//! zero diagonal blocks of saddle-point systems. Once the remaining columns
//! are nearly full, the Schur complement is formed and factored densely with
//! blocked partial pivoting.

use super::ordering::{nested_dissection, Graph};
use super::{norm2, LinalgError, SparseOperator};

const DIAGONAL_PREFERENCE: f64 = 0.1;
const REFINEMENT_STEPS: usize = 3;
const TARGET_RESIDUAL: f64 = 1e-13;
const MAX_ACCEPTED_RESIDUAL: f64 = 1e-8;
/// Switch to dense elimination once a column of L fills this fraction of the
/// remaining rows.
const DENSE_SWITCH: f64 = 0.25;
const DENSE_MIN: usize = 200;
const DENSE_MAX: usize = 6000;
const PANEL: usize = 32;

/// Factorization `P A Q = L U` of a square sparse matrix.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    n: usize,
    /// column elimination order: step k eliminates column `q[k]`
    q: Vec<usize>,
    /// row permutation: step k pivots on row `p[k]`
    p: Vec<usize>,
    // L: unit lower triangular, CSC, diagonal stored first, row indices in step numbering
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    // U: upper triangular, CSC, diagonal stored last
    u_ptr: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    /// copy of A for residual checks and iterative refinement
    a: SparseOperator,
}

impl LuFactorization {
    pub fn new(a: &SparseOperator) -> Result<Self, LinalgError> {
        if a.nrows() != a.ncols() {
            return Err(LinalgError::NotSquare {
                nrows: a.nrows(),
                ncols: a.ncols(),
            });
        }
        let n = a.nrows();
        let graph = Graph::from_pattern(n, a.row_ptr(), a.col_idx());
        let q = nested_dissection(&graph);

        // Column-compressed copy of A.
        let (c_ptr, c_idx, c_val) = to_csc(a);

        let mut pinv = vec![usize::MAX; n];
        let mut l_ptr = Vec::with_capacity(n + 1);
        let mut u_ptr = Vec::with_capacity(n + 1);
        let cap = 4 * a.nnz() + n;
        let mut l_idx: Vec<usize> = Vec::with_capacity(cap);
        let mut l_val: Vec<f64> = Vec::with_capacity(cap);
        let mut u_idx: Vec<usize> = Vec::with_capacity(cap);
        let mut u_val: Vec<f64> = Vec::with_capacity(cap);

        let mut x = vec![0.0; n];
        let mut xi = vec![0usize; n];
        let mut marked = vec![false; n];
        let mut stack = vec![0usize; n];
        let mut pstack = vec![0usize; n];
        let mut dense_from = n;

        for k in 0..n {
            l_ptr.push(l_idx.len());
            u_ptr.push(u_idx.len());
            let col = q[k];
            let top = sparse_solve(
                col, &c_ptr, &c_idx, &c_val, &pinv, &l_ptr, &l_idx, &l_val, &mut x, &mut marked, &mut xi, &mut stack,
                &mut pstack,
            );

            // Pivot selection among rows not yet pivotal.
            let mut ipiv = usize::MAX;
            let mut amax = -1.0f64;
            for &i in &xi[top..n] {
                if pinv[i] == usize::MAX {
                    let t = x[i].abs();
                    if t > amax {
                        amax = t;
                        ipiv = i;
                    }
                } else {
                    u_idx.push(pinv[i]);
                    u_val.push(x[i]);
                }
            }
            if ipiv == usize::MAX || amax <= 0.0 || !amax.is_finite() {
                return Err(LinalgError::Singular { column: col, step: k });
            }
            if pinv[col] == usize::MAX && x[col].abs() >= DIAGONAL_PREFERENCE * amax {
                ipiv = col;
            }
            let pivot = x[ipiv];
            u_idx.push(k);
            u_val.push(pivot);
            pinv[ipiv] = k;
            l_idx.push(ipiv);
            l_val.push(1.0);
            for &i in &xi[top..n] {
                if pinv[i] == usize::MAX {
                    l_idx.push(i);
                    l_val.push(x[i] / pivot);
                }
                x[i] = 0.0;
            }

            let below = l_idx.len() - l_ptr[k] - 1;
            let rest = n - k - 1;
            if (DENSE_MIN..=DENSE_MAX).contains(&rest) && below as f64 >= DENSE_SWITCH * rest as f64 {
                dense_from = k + 1;
                break;
            }
        }

        if dense_from < n {
            let m = dense_from;
            let nd = n - m;
            l_ptr.push(l_idx.len());
            u_ptr.push(u_idx.len());
            // Schur complement of the eliminated columns, column-major.
            let rows: Vec<usize> = (0..n).filter(|&i| pinv[i] == usize::MAX).collect();
            let mut local = vec![usize::MAX; n];
            for (r, &i) in rows.iter().enumerate() {
                local[i] = r;
            }
            let mut s = vec![0.0; nd * nd];
            let mut upper: Vec<Vec<(usize, f64)>> = Vec::with_capacity(nd);
            for t in 0..nd {
                let top = sparse_solve(
                    q[m + t], &c_ptr, &c_idx, &c_val, &pinv, &l_ptr, &l_idx, &l_val, &mut x, &mut marked, &mut xi,
                    &mut stack, &mut pstack,
                );
                let mut col_u = Vec::new();
                for &i in &xi[top..n] {
                    if pinv[i] == usize::MAX {
                        s[local[i] + nd * t] = x[i];
                    } else if x[i] != 0.0 {
                        col_u.push((pinv[i], x[i]));
                    }
                    x[i] = 0.0;
                }
                upper.push(col_u);
            }
            let mut perm: Vec<usize> = (0..nd).collect();
            dense_lu(&mut s, nd, &mut perm).map_err(|t| LinalgError::Singular { column: q[m + t], step: m + t })?;
            for t in 0..nd {
                if t > 0 {
                    l_ptr.push(l_idx.len());
                    u_ptr.push(u_idx.len());
                }
                let column = &s[nd * t..nd * (t + 1)];
                for &(i, v) in &upper[t] {
                    u_idx.push(i);
                    u_val.push(v);
                }
                for (i, &v) in column[..t].iter().enumerate() {
                    if v != 0.0 {
                        u_idx.push(m + i);
                        u_val.push(v);
                    }
                }
                u_idx.push(m + t);
                u_val.push(column[t]);
                pinv[rows[perm[t]]] = m + t;
                l_idx.push(rows[perm[t]]);
                l_val.push(1.0);
                for (i, &v) in column.iter().enumerate().skip(t + 1) {
                    if v != 0.0 {
                        l_idx.push(rows[perm[i]]);
                        l_val.push(v);
                    }
                }
            }
        }
        l_ptr.push(l_idx.len());
        u_ptr.push(u_idx.len());
        // Renumber L rows to elimination steps.
        for i in l_idx.iter_mut() {
            *i = pinv[*i];
        }
        let mut p = vec![0usize; n];
        for (row, &step) in pinv.iter().enumerate() {
            p[step] = row;
        }
        Ok(LuFactorization {
            n,
            q,
            p,
            l_ptr,
            l_idx,
            l_val,
            u_ptr,
            u_idx,
            u_val,
            a: a.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of `L + U`.
    pub fn fill(&self) -> usize {
        self.l_idx.len() + self.u_idx.len()
    }

    fn solve_once(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = (0..n).map(|k| b[self.p[k]]).collect();
        for j in 0..n {
            let yj = y[j];
            if yj != 0.0 {
                for p in (self.l_ptr[j] + 1)..self.l_ptr[j + 1] {
                    y[self.l_idx[p]] -= self.l_val[p] * yj;
                }
            }
        }
        for j in (0..n).rev() {
            let last = self.u_ptr[j + 1] - 1;
            y[j] /= self.u_val[last];
            let yj = y[j];
            if yj != 0.0 {
                for p in self.u_ptr[j]..last {
                    y[self.u_idx[p]] -= self.u_val[p] * yj;
                }
            }
        }
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[self.q[k]] = y[k];
        }
        x
    }

    /// Solves `A x = b` with a few steps of iterative refinement.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n,
                actual: b.len(),
            });
        }
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok(vec![0.0; self.n]);
        }
        let mut x = self.solve_once(b);
        let mut res = residual(&self.a, &x, b);
        let mut rel = norm2(&res) / bnorm;
        for _ in 0..REFINEMENT_STEPS {
            if !(rel > TARGET_RESIDUAL) {
                break;
            }
            let dx = self.solve_once(&res);
            let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let cres = residual(&self.a, &candidate, b);
            let crel = norm2(&cres) / bnorm;
            if crel < rel {
                x = candidate;
                res = cres;
                rel = crel;
            } else {
                break;
            }
        }
        if !rel.is_finite() || rel > MAX_ACCEPTED_RESIDUAL {
            return Err(LinalgError::IllConditioned { residual: rel });
        }
        Ok(x)
    }
}

/// `x = L \ A(:, col)` over the columns of L computed so far. The nonzero
/// pattern is left in `xi[top..]`, which is returned.
#[allow(clippy::too_many_arguments)]
fn sparse_solve(
    col: usize,
    c_ptr: &[usize],
    c_idx: &[usize],
    c_val: &[f64],
    pinv: &[usize],
    l_ptr: &[usize],
    l_idx: &[usize],
    l_val: &[f64],
    x: &mut [f64],
    marked: &mut [bool],
    xi: &mut [usize],
    stack: &mut [usize],
    pstack: &mut [usize],
) -> usize {
    let n = x.len();
    let mut top = n;
    for p in c_ptr[col]..c_ptr[col + 1] {
        let i = c_idx[p];
        if !marked[i] {
            top = reach_dfs(i, pinv, l_ptr, l_idx, marked, xi, top, stack, pstack);
        }
    }
    for &i in &xi[top..n] {
        marked[i] = false;
        x[i] = 0.0;
    }
    for p in c_ptr[col]..c_ptr[col + 1] {
        x[c_idx[p]] = c_val[p];
    }
    // Sparse forward substitution in topological order.
    for px in top..n {
        let j = xi[px];
        let jj = pinv[j];
        if jj == usize::MAX {
            continue;
        }
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        // skip the unit diagonal (first entry)
        for p in (l_ptr[jj] + 1)..l_ptr[jj + 1] {
            x[l_idx[p]] -= l_val[p] * xj;
        }
    }
    top
}

fn axpy(y: &mut [f64], x: &[f64], a: f64) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi -= a * xi;
    }
}

/// Subtracts `a[k, j] · a[from.., k]` from `a[from.., j]` for every `k` in
/// `ks`; `j` lies right of all `ks`.
fn update_column(a: &mut [f64], nd: usize, j: usize, ks: std::ops::Range<usize>, from: impl Fn(usize) -> usize) {
    let (left, right) = a.split_at_mut(nd * j);
    let target = &mut right[..nd];
    for k in ks {
        let u = target[k];
        if u != 0.0 {
            let f = from(k);
            axpy(&mut target[f..], &left[nd * k + f..nd * (k + 1)], u);
        }
    }
}

/// In-place blocked LU with partial pivoting of a column-major `nd × nd`
/// matrix. Row interchanges are applied to whole rows and recorded in `perm`.
/// Returns the failing step on a zero pivot.
fn dense_lu(a: &mut [f64], nd: usize, perm: &mut [usize]) -> Result<(), usize> {
    for k0 in (0..nd).step_by(PANEL) {
        let k1 = (k0 + PANEL).min(nd);
        for k in k0..k1 {
            let col = &a[nd * k..nd * (k + 1)];
            let (mut ipiv, mut amax) = (k, -1.0f64);
            for (i, v) in col.iter().enumerate().skip(k) {
                if v.abs() > amax {
                    amax = v.abs();
                    ipiv = i;
                }
            }
            if amax <= 0.0 || !amax.is_finite() {
                return Err(k);
            }
            if ipiv != k {
                perm.swap(ipiv, k);
                for j in 0..nd {
                    a.swap(ipiv + nd * j, k + nd * j);
                }
            }
            let pivot = a[k + nd * k];
            for v in &mut a[nd * k + k + 1..nd * (k + 1)] {
                *v /= pivot;
            }
            for j in (k + 1)..k1 {
                update_column(a, nd, j, k..k + 1, |k| k + 1);
            }
        }
        for j in k1..nd {
            // U block row, then the trailing update
            for k in k0..k1 {
                let u = a[k + nd * j];
                if u != 0.0 {
                    for i in (k + 1)..k1 {
                        a[i + nd * j] -= a[i + nd * k] * u;
                    }
                }
            }
            update_column(a, nd, j, k0..k1, |_| k1);
        }
    }
    Ok(())
}

fn residual(a: &SparseOperator, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x);
    b.iter().zip(ax).map(|(bi, axi)| bi - axi).collect()
}

fn to_csc(a: &SparseOperator) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let n = a.ncols();
    let mut ptr = vec![0usize; n + 1];
    for &j in a.col_idx() {
        ptr[j + 1] += 1;
    }
    for j in 0..n {
        ptr[j + 1] += ptr[j];
    }
    let mut fill = ptr.clone();
    let mut idx = vec![0usize; a.nnz()];
    let mut val = vec![0.0; a.nnz()];
    let rp = a.row_ptr();
    for i in 0..a.nrows() {
        for p in rp[i]..rp[i + 1] {
            let j = a.col_idx()[p];
            idx[fill[j]] = i;
            val[fill[j]] = a.values()[p];
            fill[j] += 1;
        }
    }
    (ptr, idx, val)
}

/// Iterative depth-first search from row `start` through the columns of L
/// already computed; pushes finished nodes onto `xi[..top]` in reverse
/// topological order and returns the new `top`.
#[allow(clippy::too_many_arguments)]
fn reach_dfs(
    start: usize,
    pinv: &[usize],
    l_ptr: &[usize],
    l_idx: &[usize],
    marked: &mut [bool],
    xi: &mut [usize],
    mut top: usize,
    stack: &mut [usize],
    pstack: &mut [usize],
) -> usize {
    let mut head = 0usize;
    stack[0] = start;
    loop {
        let j = stack[head];
        let jj = pinv[j];
        if !marked[j] {
            marked[j] = true;
            // skip the diagonal entry, which is row j itself
            pstack[head] = if jj == usize::MAX { 0 } else { l_ptr[jj] + 1 };
        }
        let mut done = true;
        if jj != usize::MAX {
            let end = l_ptr[jj + 1];
            let mut p = pstack[head];
            while p < end {
                let i = l_idx[p];
                if !marked[i] {
                    pstack[head] = p;
                    head += 1;
                    stack[head] = i;
                    done = false;
                    break;
                }
                p += 1;
            }
        }
        if done {
            top -= 1;
            xi[top] = j;
            if head == 0 {
                return top;
            }
            head -= 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::assemble;

    #[test]
    fn identity_solve_returns_rhs() {
        let a = SparseOperator::identity(4);
        let b = [1.0, -2.0, 3.5, 0.25];
        let x = LuFactorization::new(&a).unwrap().solve(&b).unwrap();
        assert_eq!(x, b.to_vec());
    }

    #[test]
    fn diagonal_solve() {
        let a = SparseOperator::from_diagonal(&[2.0, 4.0]);
        let x = crate::linalg::factor_solve(&a, &[2.0, 8.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
    }

    #[test]
    fn zero_diagonal_saddle_needs_pivoting() {
        // [[0, 1], [1, 1]] x = [1, 3] -> x = [2, 1]
        let a = assemble(2, 2, [(0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        let x = crate::linalg::factor_solve(&a, &[1.0, 3.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_matrix_reports_column() {
        // column 1 is identically zero
        let a = assemble(3, 3, [(0, 0, 1.0), (2, 2, 1.0), (1, 0, 1.0)]).unwrap();
        match LuFactorization::new(&a) {
            Err(LinalgError::Singular { column, .. }) => assert_eq!(column, 1),
            other => panic!("expected singular, got {other:?}"),
        }
    }

    #[test]
    fn dependent_columns_are_singular() {
        let a = assemble(2, 2, [(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 4.0)]).unwrap();
        assert!(matches!(LuFactorization::new(&a), Err(LinalgError::Singular { .. })));
    }

    #[test]
    fn dense_tail_with_zero_diagonal() {
        // fully coupled 300 × 300 matrix with a zero diagonal
        let n = 300;
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut entries = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    entries.push((i, j, next()));
                }
            }
        }
        let a = assemble(n, n, entries).unwrap();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = a.mul_vec(&x_true);
        let x = crate::linalg::factor_solve(&a, &b).unwrap();
        let err = x.iter().zip(&x_true).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn non_square_is_rejected() {
        let a = SparseOperator::zeros(2, 3);
        assert!(matches!(LuFactorization::new(&a), Err(LinalgError::NotSquare { .. })));
    }
}
