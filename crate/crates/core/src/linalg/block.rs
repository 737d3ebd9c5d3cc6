use super::{LinalgError, LuFactorization, SparseOperator, TripletBuilder};

/// Named, contiguous blocks of unknowns (or equations).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLayout {
    names: Vec<&'static str>,
    offsets: Vec<usize>,
}

impl BlockLayout {
    pub fn new(blocks: &[(&'static str, usize)]) -> Self {
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        offsets.push(0);
        for &(_, size) in blocks {
            offsets.push(offsets.last().copied().unwrap_or(0) + size);
        }
        BlockLayout {
            names: blocks.iter().map(|&(n, _)| n).collect(),
            offsets,
        }
    }

    pub fn total(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index(&self, name: &str) -> usize {
        self.names
            .iter()
            .position(|&n| n == name)
            .unwrap_or_else(|| panic!("unknown block {name:?}"))
    }

    pub fn offset(&self, block: usize) -> usize {
        self.offsets[block]
    }

    pub fn size(&self, block: usize) -> usize {
        self.offsets[block + 1] - self.offsets[block]
    }

    pub fn name(&self, block: usize) -> &'static str {
        self.names[block]
    }

    /// Block containing the global index `i`.
    pub fn locate(&self, i: usize) -> (usize, usize) {
        let b = self.offsets.partition_point(|&o| o <= i) - 1;
        (b, i - self.offsets[b])
    }

    pub fn slice<'a>(&self, x: &'a [f64], name: &str) -> &'a [f64] {
        let b = self.index(name);
        &x[self.offsets[b]..self.offsets[b + 1]]
    }
}

/// A square block system `A x = b` over one layout used for both rows and
/// unknowns. Blocks that are never added stay structurally zero.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    layout: BlockLayout,
    matrix: TripletBuilder,
    rhs: Vec<f64>,
}

impl BlockSystem {
    pub fn new(layout: BlockLayout) -> Self {
        let n = layout.total();
        BlockSystem {
            matrix: TripletBuilder::new(n, n),
            rhs: vec![0.0; n],
            layout,
        }
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    fn checked(&self, row: &str, col: &str, op_rows: usize, op_cols: usize) -> (usize, usize) {
        let (r, c) = (self.layout.index(row), self.layout.index(col));
        assert_eq!(self.layout.size(r), op_rows, "row block {row} size");
        assert_eq!(self.layout.size(c), op_cols, "column block {col} size");
        (self.layout.offset(r), self.layout.offset(c))
    }

    /// Adds `scale * op` into block `(row, col)`.
    pub fn add(&mut self, row: &str, col: &str, op: &SparseOperator, scale: f64) {
        let (ro, co) = self.checked(row, col, op.nrows(), op.ncols());
        self.matrix.push_operator(ro, co, op, scale);
    }

    /// Adds `scale * opᵀ` into block `(row, col)`.
    pub fn add_transposed(&mut self, row: &str, col: &str, op: &SparseOperator, scale: f64) {
        let (ro, co) = self.checked(row, col, op.ncols(), op.nrows());
        self.matrix.push_transposed(ro, co, op, scale);
    }

    pub fn set_rhs(&mut self, row: &str, values: &[f64]) {
        let b = self.layout.index(row);
        assert_eq!(values.len(), self.layout.size(b), "rhs block {row} size");
        let o = self.layout.offset(b);
        self.rhs[o..o + values.len()].copy_from_slice(values);
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn matrix(&self) -> SparseOperator {
        self.matrix.clone().build()
    }

    /// Assembles and solves; the solution is laid out like the unknowns.
    pub fn solve(self) -> Result<Vec<f64>, LinalgError> {
        let a = self.matrix.build();
        LuFactorization::new(&a)?.solve(&self.rhs)
    }
}
