//! Real sparse matrices in compressed-row form.
//!
//! This is the universal carrier for every stencil and space-time operator in
//! the crate. Matrices are canonical: entries are sorted by `(row, col)`,
//! duplicates are summed at construction, and exact zeros are dropped, so two
//! matrices are equal iff their entry lists are equal.

use crate::error::{Error, Result};
use crate::march::OpCounter;
use nalgebra::DMatrix;
use std::fmt::Write as _;
use std::path::Path;

/// Sparse real matrix, compressed-row storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Build from coordinate triplets. Duplicates are summed, exact zeros dropped.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        for &(r, c, _) in &triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::numerical(format!(
                    "triplet ({r}, {c}) out of range for {n_rows}x{n_cols} matrix"
                )));
            }
        }
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());

        let mut i = 0;
        while i < triplets.len() {
            let (r, c, mut v) = triplets[i];
            i += 1;
            while i < triplets.len() && triplets[i].0 == r && triplets[i].1 == c {
                v += triplets[i].2;
                i += 1;
            }
            if v != 0.0 {
                row_ptr[r + 1] += 1;
                col_idx.push(c);
                values.push(v);
            }
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
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

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    /// Entries of one row as `(col, value)` pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        self.col_idx[lo..hi]
            .iter()
            .zip(&self.values[lo..hi])
            .map(|(&c, &v)| (c, v))
    }

    /// All entries in canonical `(row, col, value)` order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r)
            .find(|&(cc, _)| cc == c)
            .map_or(0.0, |(_, v)| v)
    }

    /// Maximum number of nonzeros in any row (the oracle-model sparsity `s`).
    pub fn sparsity(&self) -> usize {
        (0..self.n_rows)
            .map(|r| self.row_ptr[r + 1] - self.row_ptr[r])
            .max()
            .unwrap_or(0)
    }

    /// Exact symmetry test on the canonical entry lists.
    pub fn symmetric(&self) -> bool {
        self.is_square() && self.transpose() == *self
    }

    /// Exact antisymmetry test (`Aᵀ == -A`).
    pub fn antisymmetric(&self) -> bool {
        self.is_square() && self.transpose() == self.scaled(-1.0)
    }

    pub fn transpose(&self) -> SparseMatrix {
        let triplets = self.entries().map(|(r, c, v)| (c, r, v)).collect();
        SparseMatrix::from_triplets(self.n_cols, self.n_rows, triplets)
            .expect("transpose of a valid matrix is valid")
    }

    pub fn scaled(&self, factor: f64) -> SparseMatrix {
        let triplets = self.entries().map(|(r, c, v)| (r, c, factor * v)).collect();
        SparseMatrix::from_triplets(self.n_rows, self.n_cols, triplets)
            .expect("scaling preserves validity")
    }

    /// Scale each row by the corresponding diagonal factor.
    pub fn row_scaled(&self, factors: &[f64]) -> Result<SparseMatrix> {
        if factors.len() != self.n_rows {
            return Err(Error::numerical("row scaling length mismatch"));
        }
        let triplets = self
            .entries()
            .map(|(r, c, v)| (r, c, factors[r] * v))
            .collect();
        SparseMatrix::from_triplets(self.n_rows, self.n_cols, triplets)
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols, "matvec dimension mismatch");
        let mut y = vec![0.0; self.n_rows];
        for r in 0..self.n_rows {
            let mut acc = 0.0;
            for (c, v) in self.row(r) {
                acc += v * x[c];
            }
            y[r] = acc;
        }
        y
    }

    /// `y = A x` with operation counting (one mul + one add per stored entry).
    pub fn matvec_counted(&self, x: &[f64], ops: &mut OpCounter) -> Vec<f64> {
        ops.muls += self.nnz() as u64;
        ops.adds += self.nnz() as u64;
        self.matvec(x)
    }

    /// `y = Aᵀ x`.
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_rows, "matvec_transpose dimension mismatch");
        let mut y = vec![0.0; self.n_cols];
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                y[c] += v * x[r];
            }
        }
        y
    }

    /// Sparse product `A * B`.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.n_cols != other.n_rows {
            return Err(Error::numerical("matmul dimension mismatch"));
        }
        let mut triplets = Vec::new();
        for r in 0..self.n_rows {
            for (k, va) in self.row(r) {
                for (c, vb) in other.row(k) {
                    triplets.push((r, c, va * vb));
                }
            }
        }
        SparseMatrix::from_triplets(self.n_rows, other.n_cols, triplets)
    }

    /// Sparse sum `A + factor * B`.
    pub fn add_scaled(&self, other: &SparseMatrix, factor: f64) -> Result<SparseMatrix> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::numerical("add dimension mismatch"));
        }
        let mut triplets: Vec<(usize, usize, f64)> = self.entries().collect();
        triplets.extend(other.entries().map(|(r, c, v)| (r, c, factor * v)));
        SparseMatrix::from_triplets(self.n_rows, self.n_cols, triplets)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Off-diagonal absolute row sums (Gershgorin radii).
    pub fn offdiag_row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_rows];
        for (r, c, v) in self.entries() {
            if r != c {
                sums[r] += v.abs();
            }
        }
        sums
    }

    /// Off-diagonal absolute column sums.
    pub fn offdiag_col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_cols];
        for (r, c, v) in self.entries() {
            if r != c {
                sums[c] += v.abs();
            }
        }
        sums
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn from_dense(m: &DMatrix<f64>) -> SparseMatrix {
        let mut triplets = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)] != 0.0 {
                    triplets.push((r, c, m[(r, c)]));
                }
            }
        }
        SparseMatrix::from_triplets(m.nrows(), m.ncols(), triplets)
            .expect("dense conversion is in range")
    }

    /// Coordinate text format: `row col value` per line, 0-based, with a
    /// '%'-prefixed comment header.
    pub fn to_coordinate_text(&self, header: &str) -> String {
        let mut out = String::new();
        for line in header.lines() {
            let _ = writeln!(out, "% {line}");
        }
        let _ = writeln!(out, "% rows {} cols {} nnz {}", self.n_rows, self.n_cols, self.nnz());
        for (r, c, v) in self.entries() {
            let _ = writeln!(out, "{r} {c} {v:.17e}");
        }
        out
    }

    pub fn write_coordinate(&self, path: &Path, header: &str) -> Result<()> {
        std::fs::write(path, self.to_coordinate_text(header))?;
        Ok(())
    }

    pub fn from_coordinate_text(text: &str) -> Result<SparseMatrix> {
        let mut n_rows = 0usize;
        let mut n_cols = 0usize;
        let mut triplets = Vec::new();
        let mut size_seen = false;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('%') {
                let toks: Vec<&str> = rest.split_whitespace().collect();
                if toks.len() >= 4 && toks[0] == "rows" && toks[2] == "cols" {
                    n_rows = toks[1]
                        .parse()
                        .map_err(|_| Error::numerical("bad size header"))?;
                    n_cols = toks[3]
                        .parse()
                        .map_err(|_| Error::numerical("bad size header"))?;
                    size_seen = true;
                }
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(Error::numerical(format!("bad coordinate line: {line}")));
            }
            let r: usize = toks[0]
                .parse()
                .map_err(|_| Error::numerical("bad row index"))?;
            let c: usize = toks[1]
                .parse()
                .map_err(|_| Error::numerical("bad col index"))?;
            let v: f64 = toks[2]
                .parse()
                .map_err(|_| Error::numerical("bad value"))?;
            triplets.push((r, c, v));
        }
        if !size_seen {
            return Err(Error::numerical("missing size header"));
        }
        SparseMatrix::from_triplets(n_rows, n_cols, triplets)
    }
}

/// Write a vector as one value per line.
pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut out = String::new();
    for x in v {
        let _ = writeln!(out, "{x:.17e}");
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_sums_duplicates_and_drops_zeros() {
        let m = SparseMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, 1.0), (0, 0, 2.0), (1, 1, 5.0), (1, 0, 3.0), (1, 0, -3.0)],
        )
        .unwrap();
        let entries: Vec<_> = m.entries().collect();
        assert_eq!(entries, vec![(0, 0, 3.0), (1, 1, 5.0)]);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn out_of_range_triplet_rejected() {
        assert!(SparseMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn sparsity_counts_max_row_nonzeros() {
        let m = SparseMatrix::from_triplets(
            3,
            3,
            vec![(0, 0, 1.0), (0, 1, 1.0), (0, 2, 1.0), (1, 1, 1.0)],
        )
        .unwrap();
        assert_eq!(m.sparsity(), 3);
    }

    #[test]
    fn symmetry_predicates_are_exact() {
        let sym =
            SparseMatrix::from_triplets(2, 2, vec![(0, 1, 2.0), (1, 0, 2.0), (0, 0, 1.0)]).unwrap();
        assert!(sym.symmetric());
        assert!(!sym.antisymmetric());
        let anti = SparseMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, -1.0)]).unwrap();
        assert!(anti.antisymmetric());
        assert!(!anti.symmetric());
    }

    #[test]
    fn matvec_and_transpose_agree_with_dense() {
        let m = SparseMatrix::from_triplets(
            3,
            2,
            vec![(0, 0, 1.0), (0, 1, -2.0), (1, 0, 4.0), (2, 1, 0.5)],
        )
        .unwrap();
        let x = [1.0, 3.0];
        let y = m.matvec(&x);
        assert_eq!(y, vec![-5.0, 4.0, 1.5]);
        let z = m.matvec_transpose(&[1.0, 1.0, 2.0]);
        assert_eq!(z, vec![5.0, -1.0]);
    }

    #[test]
    fn matmul_small() {
        let a = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 1, 3.0)])
            .unwrap();
        let b = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 4.0), (1, 0, 1.0), (1, 1, 1.0)])
            .unwrap();
        let c = a.matmul(&b).unwrap();
        let entries: Vec<_> = c.entries().collect();
        assert_eq!(entries, vec![(0, 0, 6.0), (0, 1, 2.0), (1, 0, 3.0), (1, 1, 3.0)]);
    }

    #[test]
    fn coordinate_round_trip_is_identical() {
        let m = SparseMatrix::from_triplets(
            3,
            3,
            vec![(0, 0, -2.0), (0, 1, 1.0), (2, 1, 1.0 / 3.0), (2, 2, 1e-17)],
        )
        .unwrap();
        let text = m.to_coordinate_text("test matrix h=0.1");
        let back = SparseMatrix::from_coordinate_text(&text).unwrap();
        assert_eq!(m, back);
        assert!(text.starts_with("% test matrix"));
    }
}
