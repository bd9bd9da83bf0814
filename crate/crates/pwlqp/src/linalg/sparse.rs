//! Compressed sparse column matrices.
//!
//! Minimal container tailored to what the solver needs: triplet construction,
//! transposition, matrix-vector products, and symmetric products from an
//! upper-triangle representation. Indices are zero-based and sorted within
//! each column.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SparseError {
    #[error("entry ({row},{col}) outside {nrows}x{ncols} matrix")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },
    #[error("non-finite value at ({row},{col})")]
    NotFinite { row: usize, col: usize },
}

/// Sparse matrix in compressed sparse column form.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CscMatrix {
            nrows,
            ncols,
            col_ptr: vec![0; ncols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CscMatrix {
            nrows: n,
            ncols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds from coordinate triplets. Duplicate entries are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, SparseError> {
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(SparseError::IndexOutOfBounds {
                    row: r,
                    col: c,
                    nrows,
                    ncols,
                });
            }
            if !v.is_finite() {
                return Err(SparseError::NotFinite { row: r, col: c });
            }
        }
        let mut count = vec![0usize; ncols + 1];
        for &(_, c, _) in triplets {
            count[c + 1] += 1;
        }
        for j in 0..ncols {
            count[j + 1] += count[j];
        }
        let col_ptr_raw = count.clone();
        let mut pos = count;
        let nnz = triplets.len();
        let mut rows = vec![0usize; nnz];
        let mut vals = vec![0f64; nnz];
        for &(r, c, v) in triplets {
            let p = pos[c];
            rows[p] = r;
            vals[p] = v;
            pos[c] += 1;
        }
        // Sort within each column and merge duplicates in place.
        let mut out_rows = Vec::with_capacity(nnz);
        let mut out_vals = Vec::with_capacity(nnz);
        let mut col_ptr = vec![0usize; ncols + 1];
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for j in 0..ncols {
            scratch.clear();
            for p in col_ptr_raw[j]..col_ptr_raw[j + 1] {
                scratch.push((rows[p], vals[p]));
            }
            scratch.sort_unstable_by_key(|&(r, _)| r);
            for &(r, v) in scratch.iter() {
                if let Some(last) = out_rows.last() {
                    if *last == r && out_rows.len() > col_ptr[j] {
                        *out_vals.last_mut().unwrap() += v;
                        continue;
                    }
                }
                out_rows.push(r);
                out_vals.push(v);
            }
            col_ptr[j + 1] = out_rows.len();
        }
        Ok(CscMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx: out_rows,
            values: out_vals,
        })
    }

    /// Builds from raw CSC arrays; rows must be sorted within each column.
    pub fn from_parts(
        nrows: usize,
        ncols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(col_ptr.len(), ncols + 1);
        debug_assert_eq!(*col_ptr.last().unwrap(), row_idx.len());
        debug_assert_eq!(row_idx.len(), values.len());
        debug_assert!((0..ncols).all(|j| col_ptr[j] <= col_ptr[j + 1]));
        debug_assert!(
            (0..ncols).all(|j| {
                (col_ptr[j]..col_ptr[j + 1].saturating_sub(1)).all(|p| row_idx[p] < row_idx[p + 1])
            }),
            "rows must be strictly increasing within each column"
        );
        debug_assert!(row_idx.iter().all(|&r| r < nrows));
        CscMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Builds from a dense row-major slice, dropping exact zeros.
    pub fn from_dense(nrows: usize, ncols: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), nrows * ncols);
        let mut trips = Vec::new();
        for i in 0..nrows {
            for j in 0..ncols {
                let v = entries[i * ncols + j];
                if v != 0.0 {
                    trips.push((i, j, v));
                }
            }
        }
        CscMatrix::from_triplets(nrows, ncols, &trips).expect("indices in range by construction")
    }

    /// Diagonal matrix from a slice (zeros kept so the pattern stays square).
    pub fn from_diag(d: &[f64]) -> Self {
        let n = d.len();
        CscMatrix {
            nrows: n,
            ncols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: d.to_vec(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row indices and values of column `j`.
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let lo = self.col_ptr[j];
        let hi = self.col_ptr[j + 1];
        (&self.row_idx[lo..hi], &self.values[lo..hi])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |j| {
            let (rows, vals) = self.col(j);
            rows.iter().zip(vals).map(move |(&r, &v)| (r, j, v))
        })
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        y.fill(0.0);
        self.matvec_add(1.0, x, y);
    }

    /// y += alpha * A x
    pub fn matvec_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for j in 0..self.ncols {
            let xj = alpha * x[j];
            if xj == 0.0 {
                continue;
            }
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                y[i] += v * xj;
            }
        }
    }

    /// y = A^T x
    pub fn matvec_transpose(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.ncols);
        for j in 0..self.ncols {
            let (rows, vals) = self.col(j);
            let mut acc = 0.0;
            for (&i, &v) in rows.iter().zip(vals) {
                acc += v * x[i];
            }
            y[j] = acc;
        }
    }

    pub fn transpose(&self) -> CscMatrix {
        let mut count = vec![0usize; self.nrows + 1];
        for &r in &self.row_idx {
            count[r + 1] += 1;
        }
        for i in 0..self.nrows {
            count[i + 1] += count[i];
        }
        let col_ptr = count.clone();
        let mut pos = count;
        let mut rows = vec![0usize; self.nnz()];
        let mut vals = vec![0f64; self.nnz()];
        for j in 0..self.ncols {
            let (rs, vs) = self.col(j);
            for (&r, &v) in rs.iter().zip(vs) {
                let p = pos[r];
                rows[p] = j;
                vals[p] = v;
                pos[r] += 1;
            }
        }
        // Columns of the transpose inherit sorted order from the column sweep.
        CscMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            col_ptr,
            row_idx: rows,
            values: vals,
        }
    }

    /// Treats `self` as the upper triangle (diagonal included) of a symmetric
    /// matrix and computes y = Sym(self) x.
    pub fn sym_matvec_upper(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(self.nrows, self.ncols);
        y.fill(0.0);
        for j in 0..self.ncols {
            let (rows, vals) = self.col(j);
            let xj = x[j];
            for (&i, &v) in rows.iter().zip(vals) {
                debug_assert!(i <= j, "entry below the diagonal in upper-triangle matrix");
                y[i] += v * xj;
                if i != j {
                    y[j] += v * x[i];
                }
            }
        }
    }

    /// Largest |A_ij - A_ji| over the pattern; 0 for an exactly symmetric matrix.
    pub fn asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let t = self.transpose();
        let mut worst = 0f64;
        let mut dense_col = vec![0f64; self.nrows];
        for j in 0..self.ncols {
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                dense_col[i] = v;
            }
            let (trows, tvals) = t.col(j);
            for (&i, &tv) in trows.iter().zip(tvals) {
                worst = worst.max((dense_col[i] - tv).abs());
                dense_col[i] = 0.0;
            }
            // Entries present in A but absent in A^T.
            for (&i, _) in rows.iter().zip(vals) {
                worst = worst.max(dense_col[i].abs());
                dense_col[i] = 0.0;
            }
        }
        worst
    }

    /// Dense row-major copy; intended for small matrices in tests and debugging.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0f64; self.nrows * self.ncols];
        for (i, j, v) in self.iter() {
            out[i * self.ncols + j] += v;
        }
        out
    }
}
