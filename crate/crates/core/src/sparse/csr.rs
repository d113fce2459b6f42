use rayon::prelude::*;

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Rows at or above this count are multiplied in parallel.
const PAR_ROWS: usize = 2048;

/// Compressed sparse-row matrix of `f64`.
///
/// Construction always validates the structure: offsets are nondecreasing and
/// span the value arrays, column indices are in bounds and strictly increasing
/// within each row, and every stored value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != rows + 1 {
            return Err(Error::InvalidStructure(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                rows + 1
            )));
        }
        if row_offsets[0] != 0 {
            return Err(Error::InvalidStructure("row_offsets[0] != 0".into()));
        }
        if col_indices.len() != values.len() || row_offsets[rows] != values.len() {
            return Err(Error::InvalidStructure(format!(
                "row_offsets[rows] = {}, col_indices = {}, values = {}",
                row_offsets[rows],
                col_indices.len(),
                values.len()
            )));
        }
        for r in 0..rows {
            let (lo, hi) = (row_offsets[r], row_offsets[r + 1]);
            if lo > hi {
                return Err(Error::InvalidStructure(format!(
                    "row_offsets decreases at row {r}"
                )));
            }
            let cols_r = &col_indices[lo..hi];
            for (k, &c) in cols_r.iter().enumerate() {
                if c >= cols {
                    return Err(Error::InvalidStructure(format!(
                        "column index {c} out of bounds in row {r} (cols = {cols})"
                    )));
                }
                if k > 0 && cols_r[k - 1] >= c {
                    return Err(Error::InvalidStructure(format!(
                        "column indices not strictly increasing in row {r}"
                    )));
                }
            }
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "CsrMatrix values",
                index: i,
            });
        }
        Ok(Self {
            rows,
            cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Canonical CSR from unordered `(row, col, value)` triplets: entries are
    /// sorted, duplicates summed and zeros (including cancelled sums) dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        Self::assemble(rows, cols, triplets, true)
    }

    /// Like [`CsrMatrix::from_triplets`] but explicit zeros survive.
    pub(crate) fn from_triplets_keep_zeros(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        Self::assemble(rows, cols, triplets, false)
    }

    fn assemble(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
        drop_zeros: bool,
    ) -> Result<Self> {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::InvalidStructure(format!(
                    "entry ({r}, {c}) outside {rows}x{cols}"
                )));
            }
            per_row[r].push((c, v));
        }
        Self::from_row_lists(cols, per_row, drop_zeros)
    }

    /// Builds from one `(col, value)` list per row. Lists may be unsorted and
    /// contain duplicates.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        Self::from_row_lists(cols, rows, true)
    }

    fn from_row_lists(
        cols: usize,
        rows: Vec<Vec<(usize, f64)>>,
        drop_zeros: bool,
    ) -> Result<Self> {
        let n_rows = rows.len();
        let nnz_hint: usize = rows.iter().map(Vec::len).sum();
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::with_capacity(nnz_hint);
        let mut values = Vec::with_capacity(nnz_hint);
        row_offsets.push(0);
        for (r, mut entries) in rows.into_iter().enumerate() {
            entries.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < entries.len() {
                let c = entries[k].0;
                if c >= cols {
                    return Err(Error::InvalidStructure(format!(
                        "column index {c} out of bounds in row {r}"
                    )));
                }
                let mut v = entries[k].1;
                k += 1;
                while k < entries.len() && entries[k].0 == c {
                    v += entries[k].1;
                    k += 1;
                }
                if !drop_zeros || v != 0.0 {
                    col_indices.push(c);
                    values.push(v);
                }
            }
            row_offsets.push(values.len());
        }
        Self::new(n_rows, cols, row_offsets, col_indices, values)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_offsets: vec![0; rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let rows = (0..m.nrows())
            .map(|i| {
                m.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j, *v))
                    .collect()
            })
            .collect();
        Self::from_row_lists(m.ncols(), rows, true).expect("dense matrix entries are finite")
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                d[(r, c)] = v;
            }
        }
        d
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Fraction of structurally zero entries, `1 − nnz/(rows·cols)`.
    pub fn sparsity(&self) -> f64 {
        let total = self.rows as f64 * self.cols as f64;
        if total == 0.0 {
            return 1.0;
        }
        1.0 - self.nnz() as f64 / total
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        self.row(r).1.iter().sum()
    }

    /// Maximum absolute row sum `‖·‖∞`.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|r| self.row(r).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_value(&self) -> Option<f64> {
        self.values.iter().copied().reduce(f64::max)
    }

    pub fn min_value(&self) -> Option<f64> {
        self.values.iter().copied().reduce(f64::min)
    }

    /// Iterates over stored entries as `(row, col, value)` in row order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// `M·v`. Each row is summed sequentially in ascending column order, so
    /// the result does not depend on the number of threads.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.rows];
        self.matvec_into(v, &mut out)?;
        Ok(out)
    }

    pub fn matvec_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "matvec input",
                expected: self.cols,
                got: v.len(),
            });
        }
        if out.len() != self.rows {
            return Err(Error::DimensionMismatch {
                context: "matvec output",
                expected: self.rows,
                got: out.len(),
            });
        }
        let row_dot = |r: usize| {
            let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
            let mut s = 0.0;
            for k in lo..hi {
                s += self.values[k] * v[self.col_indices[k]];
            }
            s
        };
        if self.rows >= PAR_ROWS && rayon::current_num_threads() > 1 {
            out.par_iter_mut()
                .enumerate()
                .for_each(|(r, o)| *o = row_dot(r));
        } else {
            for (r, o) in out.iter_mut().enumerate() {
                *o = row_dot(r);
            }
        }
        if let Some(r) = out.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                context: "matvec row",
                index: r,
            });
        }
        Ok(())
    }

    /// Structural transpose in canonical order (counting sort by column).
    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.cols {
            counts[c + 1] += counts[c];
        }
        let row_offsets = counts.clone();
        let mut next = counts;
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let dst = next[c];
                col_indices[dst] = r;
                values[dst] = v;
                next[c] += 1;
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn frob_norm(&self) -> f64 {
        super::vector::norm2(&self.values)
    }

    /// `‖self − other‖_F` by a merged walk over both sparsity patterns.
    pub fn frob_diff(&self, other: &CsrMatrix) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                context: "frob_diff",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut acc = 0.0;
        for r in 0..self.rows {
            let (ca, va) = self.row(r);
            let (cb, vb) = other.row(r);
            let (mut i, mut j) = (0, 0);
            while i < ca.len() || j < cb.len() {
                let d = if j >= cb.len() || (i < ca.len() && ca[i] < cb[j]) {
                    i += 1;
                    va[i - 1]
                } else if i >= ca.len() || cb[j] < ca[i] {
                    j += 1;
                    -vb[j - 1]
                } else {
                    i += 1;
                    j += 1;
                    va[i - 1] - vb[j - 1]
                };
                acc += d * d;
            }
        }
        Ok(acc.sqrt())
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// Keeps only entries for which `keep(row, col, value)` holds.
    pub fn filter(&self, mut keep: impl FnMut(usize, usize, f64) -> bool) -> Self {
        let mut row_offsets = Vec::with_capacity(self.rows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                if keep(r, c, v) {
                    col_indices.push(c);
                    values.push(v);
                }
            }
            row_offsets.push(values.len());
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Dense `self · other` for desk-scale products such as `B·A`.
    pub fn matmul_dense(&self, other: &CsrMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                context: "sparse product",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let (ca, va) = self.row(r);
            let dst = out.row_mut(r);
            for (&k, &a) in ca.iter().zip(va) {
                let (cb, vb) = other.row(k);
                for (&c, &b) in cb.iter().zip(vb) {
                    dst[c] += a * b;
                }
            }
        }
        Ok(out)
    }
}
