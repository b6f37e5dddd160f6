//! Envelope (skyline) `L D L^T` factorization of sparse symmetric matrices.
//!
//! The matrix is first permuted by reverse Cuthill-McKee to shrink the envelope.
//! Pivoting is static: the factorization succeeds whenever every leading principal
//! minor of the permuted matrix is nonsingular. That covers SPD matrices and the
//! saddle-point systems used by the ADMM baselines when primal unknowns precede
//! their constraint rows (see [`interleaved_order`]).

use std::collections::VecDeque;

use super::csr::CsrMatrix;
use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;

/// Reverse Cuthill-McKee ordering of the symmetric sparsity graph of `a`.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee<T: Scalar>(a: &CsrMatrix<T>) -> Vec<usize> {
    let n = a.nrows();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut seeds: Vec<usize> = (0..n).collect();
    seeds.sort_by_key(|&i| (degree[i], i));
    for &seed in &seeds {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(a, seed, &degree);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a.row(v).0.iter().copied().filter(|&w| !visited[w]).collect();
            nbrs.sort_by_key(|&w| (degree[w], w));
            for w in nbrs {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels<T: Scalar>(a: &CsrMatrix<T>, start: usize) -> Vec<Vec<usize>> {
    let mut seen = std::collections::HashSet::from([start]);
    let mut levels = vec![vec![start]];
    loop {
        let mut next = Vec::new();
        for &v in levels.last().unwrap() {
            for &w in a.row(v).0 {
                if seen.insert(w) {
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return levels;
        }
        levels.push(next);
    }
}

fn pseudo_peripheral<T: Scalar>(a: &CsrMatrix<T>, seed: usize, degree: &[usize]) -> usize {
    let mut v = seed;
    let mut depth = bfs_levels(a, v).len();
    for _ in 0..8 {
        let levels = bfs_levels(a, v);
        let last = levels.last().unwrap();
        let cand = *last.iter().min_by_key(|&&w| (degree[w], w)).unwrap();
        let cand_depth = bfs_levels(a, cand).len();
        if cand_depth <= depth {
            break;
        }
        v = cand;
        depth = cand_depth;
    }
    v
}

/// Ordering for a block system whose unknowns are `blocks` groups of `n` entries each
/// (block `b` holds global indices `b*n..(b+1)*n`). Nodes are ordered by RCM on
/// `pattern` and the block entries of each node are kept adjacent, block 0 first.
pub fn interleaved_order<T: Scalar>(pattern: &CsrMatrix<T>, blocks: usize) -> Vec<usize> {
    let n = pattern.nrows();
    reverse_cuthill_mckee(pattern).into_iter().flat_map(|node| (0..blocks).map(move |b| b * n + node)).collect()
}

#[derive(Debug, Clone)]
pub struct SkylineLdl<T> {
    perm: Vec<usize>,
    /// First column of the envelope in each (permuted) row.
    first: Vec<usize>,
    /// Offset of each row's strictly-lower envelope in `lower`.
    offset: Vec<usize>,
    lower: Vec<T>,
    diag: Vec<T>,
}

impl<T: Scalar> SkylineLdl<T> {
    /// Factorizes an SPD matrix; fails on a non-positive pivot.
    pub fn factor_spd(a: &CsrMatrix<T>) -> Result<Self> {
        let perm = reverse_cuthill_mckee(a);
        Self::factor_with(a, perm, true)
    }

    /// Factorizes a symmetric matrix with the given ordering (`perm[new] = old`),
    /// allowing negative pivots.
    pub fn factor_indefinite(a: &CsrMatrix<T>, perm: Vec<usize>) -> Result<Self> {
        Self::factor_with(a, perm, false)
    }

    pub fn factor_with(a: &CsrMatrix<T>, perm: Vec<usize>, require_positive: bool) -> Result<Self> {
        let n = a.nrows();
        check_len(n, a.ncols())?;
        check_len(n, perm.len())?;
        let mut inv = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n || inv[old] != usize::MAX {
                return Err(Error::InvalidArgument("ordering is not a permutation".into()));
            }
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new_i, &old_i) in perm.iter().enumerate() {
            for &old_j in a.row(old_i).0 {
                let new_j = inv[old_j];
                if new_j < new_i {
                    first[new_i] = first[new_i].min(new_j);
                }
            }
        }
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + (i - first[i]));
        }
        let mut lower = vec![T::zero(); offset[n]];
        let mut diag = vec![T::zero(); n];
        for (new_i, &old_i) in perm.iter().enumerate() {
            let (cols, vals) = a.row(old_i);
            for (&old_j, &v) in cols.iter().zip(vals) {
                let new_j = inv[old_j];
                if new_j < new_i {
                    lower[offset[new_i] + new_j - first[new_i]] += v;
                } else if new_j == new_i {
                    diag[new_i] += v;
                }
            }
        }
        let scale = diag.iter().fold(T::zero(), |m, d| m.max(d.abs())).max(T::min_positive_value());
        let tiny = T::epsilon() * T::lit(1e-4) * scale;
        // Row-by-row elimination. While row i is processed, `lower[row i]` holds
        // L_ik * d_k for finished columns k; it is rescaled to L_ik at the end.
        for i in 0..n {
            let fi = first[i];
            let (done, rest) = lower.split_at_mut(offset[i]);
            let row_i = &mut rest[..i - fi];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let row_j = &done[offset[j]..offset[j] + (j - fj)];
                let mut s = row_i[j - fi];
                for k in lo..j {
                    s -= row_i[k - fi] * row_j[k - fj];
                }
                row_i[j - fi] = s;
            }
            let mut d = diag[i];
            for k in fi..i {
                let u = row_i[k - fi];
                let l = u / diag[k];
                d -= u * l;
                row_i[k - fi] = l;
            }
            if require_positive && !(d > tiny) {
                return Err(Error::NotPositiveDefinite { row: perm[i], pivot: d.as_f64() });
            }
            if d.abs() <= tiny || !d.is_finite() {
                return Err(Error::ZeroPivot { row: perm[i] });
            }
            diag[i] = d;
        }
        Ok(Self { perm, first, offset, lower, diag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn envelope_size(&self) -> usize {
        self.lower.len()
    }

    /// Number of negative pivots (inertia check for saddle systems).
    pub fn negative_pivots(&self) -> usize {
        self.diag.iter().filter(|&&d| d < T::zero()).count()
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.dim();
        check_len(n, b.len())?;
        let mut z: Vec<T> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.lower[self.offset[i]..self.offset[i + 1]];
            let s: T = row.iter().zip(&z[fi..i]).map(|(&l, &v)| l * v).sum();
            z[i] -= s;
        }
        for (zi, &d) in z.iter_mut().zip(&self.diag) {
            *zi /= d;
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let xi = z[i];
            let row = &self.lower[self.offset[i]..self.offset[i + 1]];
            for (zk, &l) in z[fi..i].iter_mut().zip(row) {
                *zk -= l * xi;
            }
        }
        let mut x = vec![T::zero(); n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = z[new];
        }
        Ok(x)
    }

    /// Solve followed by `steps` rounds of iterative refinement against `a`.
    pub fn solve_refined(&self, a: &CsrMatrix<T>, b: &[T], steps: usize) -> Result<Vec<T>> {
        let mut x = self.solve(b)?;
        for _ in 0..steps {
            let ax = a.mul_vec(&x);
            let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &v)| bi - v).collect();
            let dx = self.solve(&r)?;
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi += d;
            }
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::vec::{norm2, sub};

    fn laplacian_1d(n: usize) -> CsrMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn rcm_is_permutation() {
        let a = laplacian_1d(30);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort_unstable();
        assert_eq!(p, (0..30).collect::<Vec<_>>());
    }

    #[test]
    fn spd_solve_tridiagonal() {
        let a = laplacian_1d(50);
        let x_true: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&x_true);
        let f = SkylineLdl::factor_spd(&a).unwrap();
        let x = f.solve(&b).unwrap();
        assert!(norm2(&sub(&x, &x_true)) < 1e-10);
    }

    #[test]
    fn rejects_indefinite_as_spd() {
        let a = CsrMatrix::<f64>::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(SkylineLdl::factor_spd(&a), Err(Error::NotPositiveDefinite { .. })));
        let f = SkylineLdl::factor_indefinite(&a, vec![0, 1]).unwrap();
        assert_eq!(f.negative_pivots(), 1);
        let x = f.solve(&[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_leading_pivot_is_reported() {
        let a = CsrMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(matches!(SkylineLdl::factor_indefinite(&a, vec![0, 1]), Err(Error::ZeroPivot { .. })));
    }

    #[test]
    fn saddle_system_with_interleaved_order() {
        // [[I, B^T], [B, 0]] with B = tridiagonal, primal entries before multipliers.
        let n = 20;
        let b = laplacian_1d(n);
        let i = CsrMatrix::identity(n);
        let k = CsrMatrix::from_blocks(&[n, n], &[(0, 0, &i), (0, 1, &b), (1, 0, &b)]).unwrap();
        let f = SkylineLdl::factor_indefinite(&k, interleaved_order(&b, 2)).unwrap();
        assert_eq!(f.negative_pivots(), n);
        let x_true: Vec<f64> = (0..2 * n).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let rhs = k.mul_vec(&x_true);
        let x = f.solve_refined(&k, &rhs, 1).unwrap();
        assert!(norm2(&sub(&x, &x_true)) < 1e-10);
    }
}
