use std::io::Write;

use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Builds from `(row, col, value)` triplets. Duplicates are summed in input order,
    /// so the result is bit-reproducible for a fixed triplet sequence.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::InvalidArgument(format!("triplet ({i}, {j}) outside {nrows}x{ncols}")));
            }
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        // Bucket by row (stable), then sort each row by column (stable) and merge.
        let mut order = vec![0usize; triplets.len()];
        let mut next = counts.clone();
        for (k, &(i, _, _)) in triplets.iter().enumerate() {
            order[next[i]] = k;
            next[i] += 1;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for i in 0..nrows {
            let row = &mut order[counts[i]..counts[i + 1]];
            row.sort_by_key(|&k| triplets[k].1);
            let mut last: Option<usize> = None;
            for &k in row.iter() {
                let (_, j, v) = triplets[k];
                if last == Some(j) {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    values.push(v);
                    last = Some(j);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self { nrows, ncols, indptr, indices, values })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![T::one(); n])
    }

    pub fn from_diagonal(d: &[T]) -> Self {
        let n = d.len();
        Self { nrows: n, ncols: n, indptr: (0..=n).collect(), indices: (0..n).collect(), values: d.to_vec() }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, indptr: vec![0; nrows + 1], indices: vec![], values: vec![] }
    }

    /// Dense row-major input; exact zeros are dropped.
    pub fn from_dense(rows: &[Vec<T>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != T::zero() {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, &triplets).expect("dense input in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(T::zero(), |k| vals[k])
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// `y = A x`
    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn try_mul_vec(&self, x: &[T]) -> Result<Vec<T>> {
        check_len(self.ncols, x.len())?;
        Ok(self.mul_vec(x))
    }

    /// `x^T A x`
    pub fn quad_form(&self, x: &[T]) -> T {
        crate::scalar::vec::dot(x, &self.mul_vec(x))
    }

    pub fn transpose(&self) -> Self {
        let triplets: Vec<_> = self.iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &triplets).expect("transpose in range")
    }

    /// `a * self + b * other` over the union pattern.
    pub fn lincomb(&self, a: T, other: &Self, b: T) -> Result<Self> {
        check_len(self.nrows, other.nrows)?;
        check_len(self.ncols, other.ncols)?;
        let triplets: Vec<_> =
            self.iter().map(|(i, j, v)| (i, j, a * v)).chain(other.iter().map(|(i, j, v)| (i, j, b * v))).collect();
        Self::from_triplets(self.nrows, self.ncols, &triplets)
    }

    pub fn scaled(&self, a: T) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= a);
        out
    }

    /// `self + shift * I`
    pub fn shifted(&self, shift: T) -> Self {
        self.lincomb(T::one(), &Self::identity(self.nrows), shift).expect("square matrix")
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.lincomb(T::one(), other, -T::one())
            .map(|d| d.values.iter().fold(T::zero(), |m, v| m.max(v.abs())))
            .unwrap_or(T::infinity())
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Symmetric within `rel_tol * max|a_ij|`.
    pub fn is_symmetric(&self, rel_tol: T) -> bool {
        self.nrows == self.ncols && self.max_abs_diff(&self.transpose()) <= rel_tol * self.max_abs()
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut out = vec![vec![T::zero(); self.ncols]; self.nrows];
        for (i, j, v) in self.iter() {
            out[i][j] = v;
        }
        out
    }

    /// Principal submatrix on `keep` (in the given order).
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        let mut new_index = vec![usize::MAX; self.ncols];
        for (k, &i) in keep.iter().enumerate() {
            new_index[i] = k;
        }
        let mut triplets = Vec::new();
        for (k, &i) in keep.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if new_index[j] != usize::MAX {
                    triplets.push((k, new_index[j], v));
                }
            }
        }
        Self::from_triplets(keep.len(), keep.len(), &triplets).expect("indices in range")
    }

    /// Assembles a block matrix from `(block_row, block_col, matrix)` entries with the
    /// given block sizes.
    pub fn from_blocks(sizes: &[usize], blocks: &[(usize, usize, &Self)]) -> Result<Self> {
        let offsets: Vec<usize> = sizes
            .iter()
            .scan(0, |acc, &s| {
                let o = *acc;
                *acc += s;
                Some(o)
            })
            .collect();
        let n: usize = sizes.iter().sum();
        let mut triplets = Vec::new();
        for &(bi, bj, m) in blocks {
            check_len(sizes[bi], m.nrows)?;
            check_len(sizes[bj], m.ncols)?;
            triplets.extend(m.iter().map(|(i, j, v)| (offsets[bi] + i, offsets[bj] + j, v)));
        }
        Self::from_triplets(n, n, &triplets)
    }

    /// Coordinate-format dump, one `i j value` line per stored entry, row-major.
    pub fn write_coo<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, j, v) in self.iter() {
            writeln!(w, "{i} {j} {:.17e}", v.as_f64())?;
        }
        Ok(())
    }
}
