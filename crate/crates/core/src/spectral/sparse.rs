//! Compressed sparse row storage for symmetric real matrices.

use nalgebra::DMatrix;

use super::eigen::SymOperator;

/// A symmetric matrix with sorted column indices per row. Both triangles are
/// stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    offsets: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SymMatrix {
    /// Builds from per-row `(col, value)` lists; the caller guarantees symmetry.
    pub(crate) fn from_rows(rows: Vec<Vec<(u32, f64)>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        for mut row in rows {
            row.sort_unstable_by_key(|&(c, _)| c);
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            offsets.push(cols.len());
        }
        SymMatrix { offsets, cols, vals }
    }

    /// Symmetric matrix from a dense one; only exact nonzeros are kept.
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
        let rows = (0..m.nrows())
            .map(|i| (0..m.ncols()).filter(|&j| m[(i, j)] != 0.0).map(|j| (j as u32, m[(i, j)])).collect())
            .collect();
        Self::from_rows(rows)
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.cols[range.clone()].iter().zip(&self.vals[range]).map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.offsets[i]..self.offsets[i + 1];
        match self.cols[range.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.vals[self.offsets[i]..self.offsets[i + 1]].iter().sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Copy with the rows and columns in `drop` zeroed (and removed from
    /// storage).
    pub fn zero_rows_cols(&self, drop: &[bool]) -> SymMatrix {
        let rows = (0..self.n())
            .map(|i| {
                if drop[i] {
                    Vec::new()
                } else {
                    self.row(i).filter(|&(j, _)| !drop[j]).map(|(j, v)| (j as u32, v)).collect()
                }
            })
            .collect();
        SymMatrix::from_rows(rows)
    }

    /// The principal submatrix without row and column `skip`, relabelled.
    pub fn without_node(&self, skip: usize) -> SymMatrix {
        let shift = |j: usize| (if j > skip { j - 1 } else { j }) as u32;
        let rows = (0..self.n())
            .filter(|&i| i != skip)
            .map(|i| self.row(i).filter(|&(j, _)| j != skip).map(|(j, v)| (shift(j), v)).collect())
            .collect();
        SymMatrix::from_rows(rows)
    }
}

impl SymOperator for SymMatrix {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        let n = self.n();
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        for b in 0..x.ncols() {
            let xcol = &xs[b * n..(b + 1) * n];
            let ocol = &mut os[b * n..(b + 1) * n];
            for i in 0..n {
                let mut acc = 0.0;
                for k in self.offsets[i]..self.offsets[i + 1] {
                    acc += self.vals[k] * xcol[self.cols[k] as usize];
                }
                ocol[i] = acc;
            }
        }
    }

    fn frobenius_norm(&self) -> f64 {
        self.vals.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn norm_bound(&self) -> f64 {
        (0..self.n())
            .map(|i| self.vals[self.offsets[i]..self.offsets[i + 1]].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}
