//! The 2x2 block saddle-point system of the adjoint subproblem and its
//! block-triangular-factored preconditioner.
//!
//! System (unknowns stacked as `[p; y]`):
//!
//! ```text
//! [ M   -alpha K ] [p]   [r1]
//! [ K^T  M       ] [y] = [r2]
//! ```
//!
//! Preconditioner `B = [[M, -alpha K], [K, M + 2 sqrt(alpha) K]]`. Because both
//! off-diagonal blocks are the same `K`, applying `B^{-1}` costs two solves with
//! the single SPD matrix `Q = M + sqrt(alpha) K`, and the eigenvalues of `B^{-1} A`
//! lie in `[1/2, 1]`.

use nalgebra::{DMatrix, Schur};

use super::csr::CsrMatrix;
use super::factor::{spd_factorize, SpdFactor};
use super::krylov::{LinearOperator, Preconditioner};
use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct SaddleOperator<'a, T> {
    pub mass: &'a CsrMatrix<T>,
    pub stiffness: &'a CsrMatrix<T>,
    pub alpha: T,
}

impl<'a, T: Scalar> SaddleOperator<'a, T> {
    pub fn new(mass: &'a CsrMatrix<T>, stiffness: &'a CsrMatrix<T>, alpha: T) -> Result<Self> {
        check_len(mass.nrows(), stiffness.nrows())?;
        if !(alpha > T::zero()) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { mass, stiffness, alpha })
    }

    pub fn block_dim(&self) -> usize {
        self.mass.nrows()
    }
}

impl<T: Scalar> LinearOperator<T> for SaddleOperator<'_, T> {
    fn dim(&self) -> usize {
        2 * self.mass.nrows()
    }

    fn apply(&self, x: &[T], out: &mut [T]) {
        let n = self.block_dim();
        let (p, y) = x.split_at(n);
        let (top, bottom) = out.split_at_mut(n);
        let mp = self.mass.mul_vec(p);
        let ky = self.stiffness.mul_vec(y);
        let my = self.mass.mul_vec(y);
        // K is symmetric, so K^T p = K p.
        let kp = self.stiffness.mul_vec(p);
        for i in 0..n {
            top[i] = mp[i] - self.alpha * ky[i];
            bottom[i] = kp[i] + my[i];
        }
    }
}

#[derive(Debug, Clone)]
pub struct SaddlePreconditioner<T> {
    q_factor: SpdFactor<T>,
    mass: CsrMatrix<T>,
    stiffness: CsrMatrix<T>,
    alpha: T,
    sqrt_alpha: T,
}

impl<T: Scalar> SaddlePreconditioner<T> {
    pub fn new(mass: &CsrMatrix<T>, stiffness: &CsrMatrix<T>, alpha: T) -> Result<Self> {
        if !(alpha > T::zero()) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        let sqrt_alpha = alpha.sqrt();
        let q = mass.lincomb(T::one(), stiffness, sqrt_alpha)?;
        Ok(Self { q_factor: spd_factorize(&q)?, mass: mass.clone(), stiffness: stiffness.clone(), alpha, sqrt_alpha })
    }

    pub fn block_dim(&self) -> usize {
        self.mass.nrows()
    }

    /// Solves `B [v1; v2] = [r1; r2]` with two solves against `Q`.
    pub fn apply(&self, r1: &[T], r2: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let n = self.block_dim();
        check_len(n, r1.len())?;
        check_len(n, r2.len())?;
        let rhs_g: Vec<T> = r1.iter().zip(r2).map(|(&a, &b)| a + self.sqrt_alpha * b).collect();
        let g = self.q_factor.solve(&rhs_g)?;
        let mg = self.mass.mul_vec(&g);
        let rhs_h: Vec<T> = r1.iter().zip(&mg).map(|(&a, &b)| a - b).collect();
        let h = self.q_factor.solve(&rhs_h)?;
        let inv_sqrt = self.sqrt_alpha.recip();
        let v1 = g.iter().zip(&h).map(|(&a, &b)| a + b).collect();
        let v2 = h.iter().map(|&b| -inv_sqrt * b).collect();
        Ok((v1, v2))
    }

    /// Forward product `B [x1; x2]`.
    pub fn apply_matrix(&self, x1: &[T], x2: &[T]) -> (Vec<T>, Vec<T>) {
        let mx1 = self.mass.mul_vec(x1);
        let kx2 = self.stiffness.mul_vec(x2);
        let kx1 = self.stiffness.mul_vec(x1);
        let mx2 = self.mass.mul_vec(x2);
        let two_sqrt = T::lit(2.0) * self.sqrt_alpha;
        let top = mx1.iter().zip(&kx2).map(|(&a, &b)| a - self.alpha * b).collect();
        let bottom = (0..x1.len()).map(|i| kx1[i] + mx2[i] + two_sqrt * kx2[i]).collect();
        (top, bottom)
    }
}

impl<T: Scalar> Preconditioner<T> for SaddlePreconditioner<T> {
    fn apply_inverse(&self, r: &[T], z: &mut [T]) -> Result<()> {
        let n = self.block_dim();
        check_len(2 * n, r.len())?;
        let (v1, v2) = self.apply(&r[..n], &r[n..])?;
        z[..n].copy_from_slice(&v1);
        z[n..].copy_from_slice(&v2);
        Ok(())
    }
}

/// Largest operator dimension [`spectrum_check`] will densify.
pub const SPECTRUM_DIM_LIMIT: usize = 600;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumBounds {
    pub min_real: f64,
    pub max_real: f64,
    pub max_abs_imag: f64,
}

/// Densifies `P^{-1} A` column by column and returns the extreme real parts of its
/// eigenvalues. Diagnostic utility for small systems.
pub fn spectrum_check<T, A, P>(op: &A, precond: &P, dim: usize) -> Result<SpectrumBounds>
where
    T: Scalar,
    A: LinearOperator<T> + ?Sized,
    P: Preconditioner<T> + ?Sized,
{
    if dim > SPECTRUM_DIM_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "spectrum check limited to dimension {SPECTRUM_DIM_LIMIT}, got {dim}"
        )));
    }
    check_len(dim, op.dim())?;
    let mut dense = DMatrix::<f64>::zeros(dim, dim);
    let mut e = vec![T::zero(); dim];
    let mut ae = vec![T::zero(); dim];
    let mut col = vec![T::zero(); dim];
    for j in 0..dim {
        e[j] = T::one();
        op.apply(&e, &mut ae);
        precond.apply_inverse(&ae, &mut col)?;
        for i in 0..dim {
            dense[(i, j)] = col[i].as_f64();
        }
        e[j] = T::zero();
    }
    let eig = [1e-14, 1e-12, 1e-10]
        .into_iter()
        .find_map(|eps| Schur::try_new(dense.clone(), eps, 100 * dim.max(1)))
        .ok_or_else(|| Error::NoConvergence("Schur iteration".into()))?
        .complex_eigenvalues();
    let mut bounds = SpectrumBounds { min_real: f64::INFINITY, max_real: f64::NEG_INFINITY, max_abs_imag: 0.0 };
    for z in eig.iter() {
        bounds.min_real = bounds.min_real.min(z.re);
        bounds.max_real = bounds.max_real.max(z.re);
        bounds.max_abs_imag = bounds.max_abs_imag.max(z.im.abs());
    }
    Ok(bounds)
}
