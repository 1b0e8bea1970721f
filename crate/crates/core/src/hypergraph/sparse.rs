//! Compressed sparse row matrices.
//!
//! Used for the incidence matrix, the hyperedge adjacency and its powers, the
//! node feature matrix, and the constant aggregation operators of the GNN.

use crate::error::{Error, Result};

/// Row-compressed sparse matrix of `f64` values.
///
/// Column indices within a row are strictly increasing, so no `(row, col)`
/// pair is stored twice.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// An all-zero `rows x cols` matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Build from `(row, col, value)` triplets. Duplicate coordinates are
    /// summed and explicit zeros are dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::InvalidArgument(format!(
                    "entry ({r}, {c}) outside {rows}x{cols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("SparseMatrix::from_triplets"));
            }
            per_row[r].push((c, v));
        }
        Ok(Self::from_row_lists(rows, cols, per_row))
    }

    /// Build from per-row `(col, value)` lists; columns may be unsorted or repeated.
    pub(crate) fn from_row_lists(rows: usize, cols: usize, per_row: Vec<Vec<(usize, f64)>>) -> Self {
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in per_row {
            row.sort_by_key(|&(c, _)| c);
            let mut i = 0;
            while i < row.len() {
                let c = row[i].0;
                let mut v = 0.0;
                while i < row.len() && row[i].0 == c {
                    v += row[i].1;
                    i += 1;
                }
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        SparseMatrix {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    /// Convert a dense row-major buffer, keeping non-zero entries only.
    pub fn from_dense(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols);
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for r in 0..rows {
            for c in 0..cols {
                let v = data[r * cols + c];
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        SparseMatrix {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.indptr[r + 1] - self.indptr[r]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (idx, val) = self.row(r);
        match idx.binary_search(&c) {
            Ok(p) => val[p],
            Err(_) => 0.0,
        }
    }

    /// Iterate all stored entries as `(row, col, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (idx, val) = self.row(r);
            idx.iter().zip(val).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows * self.cols];
        for (r, c, v) in self.iter() {
            out[r * self.cols + c] = v;
        }
        out
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.cols {
            counts[c + 1] += counts[c];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for (r, c, v) in self.iter() {
            let p = next[c];
            indices[p] = r;
            values[p] = v;
            next[c] += 1;
        }
        SparseMatrix {
            rows: self.cols,
            cols: self.rows,
            indptr,
            indices,
            values,
        }
    }

    /// Sparse-sparse product `self * other`.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.cols != other.rows {
            return Err(Error::shape(
                "SparseMatrix::matmul",
                format!("{}x{} * {}x{}", self.rows, self.cols, other.rows, other.cols),
            ));
        }
        let mut acc = vec![0.0; other.cols];
        let mut touched = vec![false; other.cols];
        let mut marks: Vec<usize> = Vec::new();
        let mut indptr = Vec::with_capacity(self.rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for r in 0..self.rows {
            let (ia, va) = self.row(r);
            for (&k, &a) in ia.iter().zip(va) {
                let (ib, vb) = other.row(k);
                for (&c, &b) in ib.iter().zip(vb) {
                    if !touched[c] {
                        touched[c] = true;
                        marks.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            marks.sort_unstable();
            for &c in &marks {
                if acc[c] != 0.0 {
                    indices.push(c);
                    values.push(acc[c]);
                }
                acc[c] = 0.0;
                touched[c] = false;
            }
            marks.clear();
            indptr.push(indices.len());
        }
        Ok(SparseMatrix {
            rows: self.rows,
            cols: other.cols,
            indptr,
            indices,
            values,
        })
    }

    /// Dense product `self * dense` where `dense` is row-major `self.cols x width`.
    pub fn mul_dense(&self, dense: &[f64], width: usize) -> Vec<f64> {
        assert_eq!(dense.len(), self.cols * width);
        let mut out = vec![0.0; self.rows * width];
        for r in 0..self.rows {
            let (idx, val) = self.row(r);
            let o = &mut out[r * width..(r + 1) * width];
            for (&k, &a) in idx.iter().zip(val) {
                let d = &dense[k * width..(k + 1) * width];
                for (x, y) in o.iter_mut().zip(d) {
                    *x += a * y;
                }
            }
        }
        out
    }

    /// `self^T * dense` where `dense` is row-major `self.rows x width`.
    pub fn transpose_mul_dense(&self, dense: &[f64], width: usize) -> Vec<f64> {
        assert_eq!(dense.len(), self.rows * width);
        let mut out = vec![0.0; self.cols * width];
        for r in 0..self.rows {
            let (idx, val) = self.row(r);
            let d = &dense[r * width..(r + 1) * width];
            for (&k, &a) in idx.iter().zip(val) {
                let o = &mut out[k * width..(k + 1) * width];
                for (x, y) in o.iter_mut().zip(d) {
                    *x += a * y;
                }
            }
        }
        out
    }

    /// Copy with the diagonal removed.
    pub fn without_diagonal(&self) -> SparseMatrix {
        let per_row = (0..self.rows)
            .map(|r| {
                let (idx, val) = self.row(r);
                idx.iter()
                    .zip(val)
                    .filter(|(&c, _)| c != r)
                    .map(|(&c, &v)| (c, v))
                    .collect()
            })
            .collect();
        Self::from_row_lists(self.rows, self.cols, per_row)
    }

    /// Stack the listed rows into a new matrix.
    pub fn select_rows(&self, rows: &[usize]) -> SparseMatrix {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for &r in rows {
            let (idx, val) = self.row(r);
            indices.extend_from_slice(idx);
            values.extend_from_slice(val);
            indptr.push(indices.len());
        }
        SparseMatrix {
            rows: rows.len(),
            cols: self.cols,
            indptr,
            indices,
            values,
        }
    }

    /// Principal submatrix on `keep` (rows and columns re-indexed in `keep` order).
    pub fn submatrix(&self, keep: &[usize]) -> SparseMatrix {
        let mut pos = vec![usize::MAX; self.cols];
        for (i, &k) in keep.iter().enumerate() {
            pos[k] = i;
        }
        let per_row = keep
            .iter()
            .map(|&r| {
                let (idx, val) = self.row(r);
                idx.iter()
                    .zip(val)
                    .filter(|(&c, _)| pos[c] != usize::MAX)
                    .map(|(&c, &v)| (pos[c], v))
                    .collect()
            })
            .collect();
        Self::from_row_lists(keep.len(), keep.len(), per_row)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols && self.iter().all(|(r, c, v)| (self.get(c, r) - v).abs() <= tol)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r).1.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (_, c, v) in self.iter() {
            out[c] += v;
        }
        out
    }

    pub fn map_values(&self, f: impl Fn(usize, usize, f64) -> f64) -> SparseMatrix {
        let mut out = self.clone();
        for r in 0..self.rows {
            for p in self.indptr[r]..self.indptr[r + 1] {
                out.values[p] = f(r, self.indices[p], self.values[p]);
            }
        }
        out
    }
}
