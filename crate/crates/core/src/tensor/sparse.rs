//! Compressed sparse row matrices used as constant message-passing
//! operators in front of dense tensors.

use crate::error::{Error, Result};
use crate::graph::BinaryAdjacency;
use crate::transforms::NormalizedAdjacency;

/// Immutable CSR matrix. Appears on the tape only as a constant; gradients
/// flow through the dense operand of [`super::Tape::spmm`].
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from triplets sorted by (row, col) with no duplicates.
    pub fn from_sorted_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<CsrMatrix> {
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut prev: Option<(usize, usize)> = None;
        for &(i, j, v) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::Index(format!(
                    "triplet ({i}, {j}) outside a {n_rows}x{n_cols} matrix"
                )));
            }
            if prev.is_some_and(|p| p >= (i, j)) {
                return Err(Error::Invalid(
                    "triplets must be sorted by (row, col) without duplicates".into(),
                ));
            }
            prev = Some((i, j));
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Binary adjacency as an unnormalized 0/1 operator (neighbor sums).
    pub fn from_binary(a: &BinaryAdjacency) -> CsrMatrix {
        let triplets: Vec<(usize, usize, f64)> =
            a.entries().map(|(i, j)| (i, j, 1.0)).collect();
        CsrMatrix::from_sorted_triplets(a.n(), a.n(), &triplets)
            .expect("adjacency entries are sorted and in range")
    }

    pub fn from_normalized(a: &NormalizedAdjacency) -> CsrMatrix {
        CsrMatrix::from_sorted_triplets(a.n(), a.n(), a.entries())
            .expect("normalized entries are sorted and in range")
    }

    /// Stack square blocks along the diagonal; index offsets accumulate.
    pub fn block_diagonal(blocks: &[CsrMatrix]) -> CsrMatrix {
        let total: usize = blocks.iter().map(|b| b.n_rows).sum();
        let nnz: usize = blocks.iter().map(|b| b.values.len()).sum();
        let mut row_ptr = Vec::with_capacity(total + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        let mut offset = 0;
        for block in blocks {
            debug_assert_eq!(block.n_rows, block.n_cols, "blocks must be square");
            for row in 0..block.n_rows {
                let (lo, hi) = (block.row_ptr[row], block.row_ptr[row + 1]);
                col_idx.extend(block.col_idx[lo..hi].iter().map(|&j| j + offset));
                values.extend_from_slice(&block.values[lo..hi]);
                row_ptr.push(col_idx.len());
            }
            offset += block.n_rows;
        }
        CsrMatrix {
            n_rows: total,
            n_cols: total,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(pos) => self.values[lo + pos],
            Err(_) => 0.0,
        }
    }

    /// Row-major dense product: self[n_rows, n_cols] x x[n_cols, p].
    pub(super) fn multiply_dense(&self, x: &[f64], p: usize) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n_cols * p);
        let mut out = vec![0.0; self.n_rows * p];
        for i in 0..self.n_rows {
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                let (j, v) = (self.col_idx[idx], self.values[idx]);
                let xrow = &x[j * p..(j + 1) * p];
                let orow = &mut out[i * p..(i + 1) * p];
                for (o, &xv) in orow.iter_mut().zip(xrow) {
                    *o += v * xv;
                }
            }
        }
        out
    }

    /// Transposed product self^T x g, computed by scattering rows of g.
    pub(super) fn multiply_dense_transposed(&self, g: &[f64], p: usize) -> Vec<f64> {
        debug_assert_eq!(g.len(), self.n_rows * p);
        let mut out = vec![0.0; self.n_cols * p];
        for i in 0..self.n_rows {
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                let (j, v) = (self.col_idx[idx], self.values[idx]);
                let grow = &g[i * p..(i + 1) * p];
                let orow = &mut out[j * p..(j + 1) * p];
                for (o, &gv) in orow.iter_mut().zip(grow) {
                    *o += v * gv;
                }
            }
        }
        out
    }
}
