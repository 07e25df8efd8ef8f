//! Sparse matrices in CSR form, block restriction, and a direct LU solve.
//!
//! Assembly accumulates coordinate triplets and compresses them; duplicate
//! entries are summed in a deterministic order (stable sort by row, column,
//! insertion). The factorization is delegated to faer's unsymmetric sparse
//! LU behind [`lu_solve`]; everything else in the crate only sees [`CsrMatrix`].

use std::io::{self, Write};

use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("failed to build sparse matrix: {0}")]
    Construction(String),
    #[error("sparse LU factorization failed (singular or structurally deficient): {0}")]
    Factorization(String),
    #[error("solver residual {achieved:.3e} exceeds tolerance {tol:.3e}")]
    ResidualTooLarge { achieved: f64, tol: f64 },
    #[error("dimension mismatch: matrix is {rows}x{cols}, rhs has length {rhs}")]
    DimensionMismatch { rows: usize, cols: usize, rhs: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Compress triplets, summing duplicates. Stable sort keeps the
    /// accumulation order deterministic.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> CsrMatrix {
        for &(r, c, _) in &triplets {
            debug_assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of bounds");
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_counts = vec![0usize; nrows + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_counts[r + 1] += 1;
                last = Some((r, c));
            }
        }
        let mut row_ptr = row_counts;
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for r in 0..self.nrows {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[r] = s;
        }
        y
    }

    /// Entry (r, c), zero if not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.cols[lo..hi].binary_search(&c) {
            Ok(k) => self.vals[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    /// Submatrix with rows `rows` (in the given order) and columns renumbered
    /// by `col_map` (None drops the column). Row entries stay sorted by the
    /// new column index.
    pub fn restrict(&self, rows: &[usize], col_map: &[Option<usize>], ncols_new: usize) -> CsrMatrix {
        assert_eq!(col_map.len(), self.ncols);
        let mut row_ptr = vec![0usize; rows.len() + 1];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut row_buf: Vec<(usize, f64)> = Vec::new();
        for (new_r, &r) in rows.iter().enumerate() {
            row_buf.clear();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if let Some(nc) = col_map[self.cols[k]] {
                    row_buf.push((nc, self.vals[k]));
                }
            }
            row_buf.sort_by_key(|&(c, _)| c);
            for &(c, v) in &row_buf {
                cols.push(c);
                vals.push(v);
            }
            row_ptr[new_r + 1] = cols.len();
        }
        CsrMatrix {
            nrows: rows.len(),
            ncols: ncols_new,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Infinity norm (max absolute row sum), over the given row range.
    pub fn inf_norm_rows(&self, rows: std::ops::Range<usize>) -> f64 {
        rows.map(|r| {
            self.vals[self.row_ptr[r]..self.row_ptr[r + 1]]
                .iter()
                .map(|v| v.abs())
                .sum::<f64>()
        })
        .fold(0.0_f64, f64::max)
    }

    pub fn inf_norm(&self) -> f64 {
        self.inf_norm_rows(0..self.nrows)
    }

    /// max |A - A^T| over all stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        let mut m = 0.0_f64;
        for (r, c, v) in self.triplets() {
            m = m.max((v - self.get(c, r)).abs());
        }
        m
    }

    /// Coordinate text dump: one `row col value` line per entry.
    pub fn write_coo_text(&self, w: &mut impl Write) -> io::Result<()> {
        for (r, c, v) in self.triplets() {
            writeln!(w, "{} {} {:.16e}", r, c, v)?;
        }
        Ok(())
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Direct unsymmetric sparse LU solve of `a x = b` via faer, with a few
/// iterative refinement passes to push the residual to rounding level.
pub fn lu_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>, SolveError> {
    if a.nrows != b.len() || a.nrows != a.ncols {
        return Err(SolveError::DimensionMismatch {
            rows: a.nrows,
            cols: a.ncols,
            rhs: b.len(),
        });
    }
    let trips: Vec<Triplet<usize, usize, f64>> = a
        .triplets()
        .map(|(r, c, v)| Triplet::new(r, c, v))
        .collect();
    let mat = SparseColMat::try_new_from_triplets(a.nrows, a.ncols, &trips)
        .map_err(|e| SolveError::Construction(format!("{e:?}")))?;
    let lu = mat
        .sp_lu()
        .map_err(|e| SolveError::Factorization(format!("{e:?}")))?;
    let solve_vec = |rhs: &[f64]| -> Vec<f64> {
        let m = faer::Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let x = lu.solve(&m);
        (0..rhs.len()).map(|i| x[(i, 0)]).collect()
    };
    let mut x = solve_vec(b);
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    for _ in 0..3 {
        let r = sub(b, &a.matvec(&x));
        if norm2(&r) <= 1e-14 * bnorm {
            break;
        }
        let dx = solve_vec(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
    }
    Ok(x)
}
