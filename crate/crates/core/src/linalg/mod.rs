//! Sparse operators, assembly accumulation and direct solves.
//!
//! Every linear system in the crate (stiffness, elasticity, the reduced
//! saddle-point system and the Newton system) goes through the same sparse
//! LU path in [`lu`], so SPD and indefinite systems are handled alike.

mod block;
mod lu;
mod ordering;

pub use block::{BlockLayout, BlockSystem};
pub use lu::LuFactorization;

use std::io::{self, Write};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("entry ({row}, {col}) is outside a {nrows}x{ncols} operator")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },
    #[error("operator is {nrows}x{ncols} but a square matrix is required")]
    NotSquare { nrows: usize, ncols: usize },
    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("matrix is singular: no admissible pivot in column {column} (elimination step {step})")]
    Singular { column: usize, step: usize },
    #[error("solve is inaccurate: relative residual {residual:.3e}")]
    IllConditioned { residual: f64 },
}

/// Compressed-row sparse matrix of doubles.
///
/// Built through [`assemble`] or [`TripletBuilder`]; duplicate entries are
/// summed during construction and rows keep their column indices sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Sums a stream of `(row, col, value)` contributions into a sparse operator.
pub fn assemble<I>(nrows: usize, ncols: usize, contributions: I) -> Result<SparseOperator, LinalgError>
where
    I: IntoIterator<Item = (usize, usize, f64)>,
{
    let mut builder = TripletBuilder::new(nrows, ncols);
    for (i, j, v) in contributions {
        builder.try_push(i, j, v)?;
    }
    Ok(builder.build())
}

/// Accumulates coordinate entries; duplicates are summed by [`TripletBuilder::build`].
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, capacity: usize) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            entries: Vec::with_capacity(capacity),
        }
    }

    pub fn try_push(&mut self, row: usize, col: usize, value: f64) -> Result<(), LinalgError> {
        if row >= self.nrows || col >= self.ncols {
            return Err(LinalgError::IndexOutOfRange {
                row,
                col,
                nrows: self.nrows,
                ncols: self.ncols,
            });
        }
        self.entries.push((row, col, value));
        Ok(())
    }

    /// Pushes an entry whose indices the caller has already validated.
    ///
    /// # Panics
    ///
    /// Panics if the entry is out of range.
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        assert!(
            row < self.nrows && col < self.ncols,
            "entry ({row}, {col}) outside {}x{}",
            self.nrows,
            self.ncols
        );
        self.entries.push((row, col, value));
    }

    /// Adds `scale * op` with its top-left corner at `(row_offset, col_offset)`.
    pub fn push_operator(&mut self, row_offset: usize, col_offset: usize, op: &SparseOperator, scale: f64) {
        for (i, j, v) in op.iter() {
            self.push(row_offset + i, col_offset + j, scale * v);
        }
    }

    /// Adds `scale * opᵀ` with its top-left corner at `(row_offset, col_offset)`.
    pub fn push_transposed(&mut self, row_offset: usize, col_offset: usize, op: &SparseOperator, scale: f64) {
        for (i, j, v) in op.iter() {
            self.push(row_offset + j, col_offset + i, scale * v);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn build(mut self) -> SparseOperator {
        // Stable sort keeps the summation order of duplicates deterministic.
        self.entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in &self.entries {
            if last == Some((i, j)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseOperator {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

impl SparseOperator {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseOperator {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseOperator {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut op = Self::identity(diag.len());
        op.values.copy_from_slice(diag);
        op
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Number of stored entries (explicit zeros included).
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "operand length");
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// Computes `selfᵀ x`.
    pub fn mul_vec_transposed(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "operand length");
        let mut y = vec![0.0; self.ncols];
        for (i, j, v) in self.iter() {
            y[j] += v * x[i];
        }
        y
    }

    /// Bilinear pairing `yᵀ A x`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        assert_eq!(y.len(), self.nrows, "left operand length");
        assert_eq!(x.len(), self.ncols, "right operand length");
        (0..self.nrows)
            .map(|i| y[i] * self.row(i).map(|(j, v)| v * x[j]).sum::<f64>())
            .sum()
    }

    pub fn scaled(&self, s: f64) -> SparseOperator {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn transpose(&self) -> SparseOperator {
        let mut b = TripletBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        b.push_transposed(0, 0, self, 1.0);
        b.build()
    }

    /// Largest `|a_ij - a_ji|`; zero for exactly symmetric storage.
    pub fn max_asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        self.iter()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.iter() {
            d[i][j] += v;
        }
        d
    }

    /// Restricts the operator to the given rows and columns (in the given order).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SparseOperator {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut b = TripletBuilder::new(rows.len(), cols.len());
        for (r, &i) in rows.iter().enumerate() {
            for (j, v) in self.row(i) {
                if col_map[j] != usize::MAX {
                    b.push(r, col_map[j], v);
                }
            }
        }
        b.build()
    }

    /// Writes the operator in MatrixMarket coordinate format (1-based indices).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (i, j, v) in self.iter() {
            writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
        }
        Ok(())
    }

    pub(crate) fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub(crate) fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Factorizes `a` and solves `a x = b`.
pub fn factor_solve(a: &SparseOperator, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    LuFactorization::new(a)?.solve(b)
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let a = assemble(1, 1, [(0, 0, 1.0), (0, 0, 2.0)]).unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(0, 0), 3.0);
    }

    #[test]
    fn empty_stream_is_zero_operator() {
        let a = assemble(3, 2, std::iter::empty()).unwrap();
        assert_eq!(a.nnz(), 0);
        assert_eq!(a.mul_vec(&[1.0, 2.0]), vec![0.0; 3]);
    }

    #[test]
    fn out_of_range_is_rejected() {
        let err = assemble(2, 2, [(0, 2, 1.0)]).unwrap_err();
        assert!(matches!(err, LinalgError::IndexOutOfRange { row: 0, col: 2, .. }));
    }

    #[test]
    fn two_triangle_square_laplacian() {
        // Unit square split along the diagonal 0-2; vertices 0=(0,0), 1=(1,0), 2=(1,1), 3=(0,1).
        // Each right triangle contributes [[1,-1,0],[-1,2,-1],[0,-1,1]]/2 at (acute, right, acute).
        let tri_a = [1usize, 0, 2]; // right angle at vertex 1
        let tri_b = [3usize, 0, 2]; // right angle at vertex 3
        let local = [[0.5, -0.5, 0.0], [-0.5, 1.0, -0.5], [0.0, -0.5, 0.5]];
        let mut contrib = Vec::new();
        for tri in [tri_a, tri_b] {
            // reorder so the right-angle vertex sits in the middle slot
            let order = [tri[1], tri[0], tri[2]];
            for a in 0..3 {
                for b in 0..3 {
                    contrib.push((order[a], order[b], local[a][b]));
                }
            }
        }
        let k = assemble(4, 4, contrib).unwrap();
        let expected = [
            [1.0, -0.5, 0.0, -0.5],
            [-0.5, 1.0, -0.5, 0.0],
            [0.0, -0.5, 1.0, -0.5],
            [-0.5, 0.0, -0.5, 1.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(k.get(i, j), expected[i][j], "({i},{j})");
            }
        }
        assert_eq!(k.max_asymmetry(), 0.0);
    }

    #[test]
    fn transpose_and_products_agree() {
        let a = assemble(2, 3, [(0, 0, 1.0), (0, 2, 2.0), (1, 1, -3.0)]).unwrap();
        let at = a.transpose();
        assert_eq!(at.nrows(), 3);
        let x = [1.0, 2.0];
        assert_eq!(a.mul_vec_transposed(&x), at.mul_vec(&x));
        assert_eq!(a.bilinear(&x, &[1.0, 1.0, 1.0]), 1.0 + 2.0 - 6.0);
    }

    #[test]
    fn matrix_market_export() {
        let a = assemble(2, 2, [(1, 0, 0.5)]).unwrap();
        let mut out = Vec::new();
        a.write_matrix_market(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real general\n2 2 1\n2 1 5.0"));
    }
}
