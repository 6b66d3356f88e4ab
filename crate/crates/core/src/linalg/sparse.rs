use std::io::Write;

use crate::error::{FemError, Result};

/// Triplet accumulator; duplicates are summed by [`CooBuilder::finalize`].
#[derive(Debug, Clone, Default)]
pub struct CooBuilder {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl CooBuilder {
    pub fn new(rows: usize, cols: usize) -> Self {
        CooBuilder { rows, cols, entries: Vec::new() }
    }

    pub fn with_capacity(rows: usize, cols: usize, capacity: usize) -> Self {
        CooBuilder { rows, cols, entries: Vec::with_capacity(capacity) }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Adds `v` to entry `(i, j)`.
    ///
    /// # Panics
    /// If `(i, j)` is outside the matrix.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.rows && j < self.cols, "entry ({i}, {j}) outside {}x{}", self.rows, self.cols);
        self.entries.push((i, j, v));
    }

    /// Adds a dense local block `block[a][b]` at rows `ri` and columns `ci`.
    pub fn add_block(&mut self, ri: &[usize], ci: &[usize], block: &[Vec<f64>]) {
        for (a, &i) in ri.iter().enumerate() {
            for (b, &j) in ci.iter().enumerate() {
                self.add(i, j, block[a][b]);
            }
        }
    }

    /// Appends all triplets of another builder of the same shape, in order.
    pub fn extend(&mut self, other: CooBuilder) {
        assert_eq!(self.shape(), other.shape(), "builder shapes differ");
        self.entries.extend(other.entries);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sorts the triplets by `(row, column)` and sums duplicates.
    ///
    /// Duplicates are summed in insertion order, so the result only depends
    /// on the order in which triplets were added.
    pub fn finalize(mut self) -> SparseMatrix {
        // stable sort keeps insertion order among duplicates
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut offsets = vec![0usize; self.rows + 1];
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in &self.entries {
            if last == Some((i, j)) {
                *values.last_mut().expect("previous entry exists") += v;
            } else {
                indices.push(j);
                values.push(v);
                offsets[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.rows {
            offsets[i + 1] += offsets[i];
        }
        SparseMatrix { rows: self.rows, cols: self.cols, offsets, indices, values }
    }
}

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from raw CSR arrays, validating the invariants.
    pub fn from_csr(
        rows: usize,
        cols: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if offsets.len() != rows + 1 || offsets[0] != 0 || offsets[rows] != indices.len() {
            return Err(FemError::Dimension("inconsistent CSR row offsets".into()));
        }
        if indices.len() != values.len() {
            return Err(FemError::Dimension("CSR index and value arrays differ in length".into()));
        }
        for i in 0..rows {
            if offsets[i] > offsets[i + 1] {
                return Err(FemError::Dimension(format!("row offsets decrease at row {i}")));
            }
            let row = &indices[offsets[i]..offsets[i + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) || row.iter().any(|&j| j >= cols) {
                return Err(FemError::Dimension(format!(
                    "column indices of row {i} are not sorted, unique and in range"
                )));
            }
        }
        Ok(SparseMatrix { rows, cols, offsets, indices, values })
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix { rows: n, cols: n, offsets: (0..=n).collect(), indices: (0..n).collect(), values: vec![1.0; n] }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CooBuilder::new(rows, cols).finalize()
    }

    /// Drops exact zeros from a dense matrix.
    pub fn from_dense(a: &[Vec<f64>]) -> Self {
        let rows = a.len();
        let cols = a.first().map_or(0, Vec::len);
        let mut b = CooBuilder::new(rows, cols);
        for (i, row) in a.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    b.add(i, j, v);
                }
            }
        }
        b.finalize()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    /// Stored value at `(i, j)`, zero if absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.matvec_into(x, &mut y);
        y
    }

    /// `y = A x`.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols, "matvec: x has wrong length");
        assert_eq!(y.len(), self.rows, "matvec: y has wrong length");
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.offsets[i]..self.offsets[i + 1] {
                s += self.values[k] * x[self.indices[k]];
            }
            *yi = s;
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut b = CooBuilder::with_capacity(self.cols, self.rows, self.nnz());
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                b.add(j, i, v);
            }
        }
        b.finalize()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        d
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `alpha * self + beta * other`.
    pub fn add_scaled(&self, alpha: f64, other: &SparseMatrix, beta: f64) -> Result<SparseMatrix> {
        if self.shape() != other.shape() {
            return Err(FemError::Dimension(format!("cannot add {:?} and {:?} matrices", self.shape(), other.shape())));
        }
        let mut b = CooBuilder::with_capacity(self.rows, self.cols, self.nnz() + other.nnz());
        for i in 0..self.rows {
            let (c1, v1) = self.row(i);
            for (&j, &v) in c1.iter().zip(v1) {
                b.add(i, j, alpha * v);
            }
            let (c2, v2) = other.row(i);
            for (&j, &v) in c2.iter().zip(v2) {
                b.add(i, j, beta * v);
            }
        }
        Ok(b.finalize())
    }

    pub fn scaled(&self, alpha: f64) -> SparseMatrix {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= alpha);
        m
    }

    /// Largest `|A_ij - A_ji|` over all stored entries.
    pub fn symmetry_deviation(&self) -> f64 {
        let mut dev = 0.0f64;
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let t = if j < self.rows { self.get(j, i) } else { 0.0 };
                dev = dev.max((v - t).abs());
            }
        }
        dev
    }

    /// Rows flagged in `rows` become unit rows `e_k^T`.
    pub fn with_identity_rows(&self, rows: &[bool]) -> SparseMatrix {
        assert_eq!(rows.len(), self.rows);
        let mut b = CooBuilder::with_capacity(self.rows, self.cols, self.nnz());
        for i in 0..self.rows {
            if rows[i] {
                b.add(i, i, 1.0);
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                b.add(i, j, v);
            }
        }
        b.finalize()
    }

    /// Submatrix on the kept rows and columns, renumbered consecutively.
    pub fn submatrix(&self, keep_rows: &[usize], keep_cols: &[usize]) -> SparseMatrix {
        let mut col_map = vec![usize::MAX; self.cols];
        for (new, &old) in keep_cols.iter().enumerate() {
            col_map[old] = new;
        }
        let mut b = CooBuilder::new(keep_rows.len(), keep_cols.len());
        for (new_i, &i) in keep_rows.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if col_map[j] != usize::MAX {
                    b.add(new_i, col_map[j], v);
                }
            }
        }
        b.finalize()
    }

    /// MatrixMarket coordinate format (1-based indices).
    pub fn write_matrix_market(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.rows, self.cols, self.nnz())?;
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut b = CooBuilder::new(2, 2);
        b.add(1, 0, 1.0);
        b.add(0, 1, 2.0);
        b.add(1, 0, 0.5);
        let m = b.finalize();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(1, 0), 1.5);
        assert_eq!(m.get(0, 0), 0.0);
        assert_eq!(m.offsets(), &[0, 1, 2]);
    }

    #[test]
    fn csr_validation() {
        assert!(SparseMatrix::from_csr(1, 2, vec![0, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::from_csr(1, 2, vec![0, 2], vec![0, 1], vec![1.0, 1.0]).is_ok());
    }

    #[test]
    fn transpose_and_symmetry() {
        let m = SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(m.transpose().to_dense(), vec![vec![1.0, 3.0], vec![2.0, 4.0]]);
        assert_eq!(m.symmetry_deviation(), 1.0);
    }

    #[test]
    fn identity_rows_and_submatrix() {
        let m = SparseMatrix::from_dense(&[vec![2.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 2.0]]);
        let r = m.with_identity_rows(&[true, false, false]);
        assert_eq!(r.to_dense()[0], vec![1.0, 0.0, 0.0]);
        let s = m.submatrix(&[1, 2], &[1, 2]);
        assert_eq!(s.to_dense(), vec![vec![2.0, -1.0], vec![-1.0, 2.0]]);
    }

    #[test]
    fn matrix_market_output() {
        let mut buf = Vec::new();
        SparseMatrix::identity(2).write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("%%MatrixMarket"));
        assert_eq!(text.lines().count(), 4);
    }
}
