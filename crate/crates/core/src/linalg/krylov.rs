//! Krylov solvers: right-preconditioned restarted GMRES and conjugate gradients.

use super::csr::CsrMatrix;
use crate::error::{check_len, Result};
use crate::scalar::vec::{axpy, dot, norm2};
use crate::scalar::Scalar;

/// Square linear map applied to a vector.
pub trait LinearOperator<T> {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T], y: &mut [T]);
}

/// Approximate inverse applied as `z = P^{-1} r`.
pub trait Preconditioner<T> {
    fn apply_inverse(&self, r: &[T], z: &mut [T]) -> Result<()>;
}

impl<T: Scalar> LinearOperator<T> for CsrMatrix<T> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        self.mul_vec_into(x, y)
    }
}

/// Wraps a closure as an operator.
pub struct FnOperator<F> {
    pub dim: usize,
    pub f: F,
}

impl<T, F: Fn(&[T], &mut [T])> LinearOperator<T> for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        (self.f)(x, y)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPreconditioner;

impl<T: Scalar> Preconditioner<T> for IdentityPreconditioner {
    fn apply_inverse(&self, r: &[T], z: &mut [T]) -> Result<()> {
        z.copy_from_slice(r);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions<T> {
    /// Relative residual target `||b - Ax|| <= tol ||b||`.
    pub tol: T,
    /// Total Arnoldi steps across restarts.
    pub max_iter: usize,
    pub restart: usize,
}

impl<T: Scalar> Default for GmresOptions<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-10), max_iter: 500, restart: 50 }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    /// True relative residual `||b - Ax|| / ||b||` of the returned iterate.
    pub relative_residual: T,
    pub converged: bool,
    /// Arnoldi produced a zero vector: the Krylov space is invariant.
    pub breakdown: bool,
}

/// Right-preconditioned restarted GMRES, solving `A P^{-1} w = b`, `x = P^{-1} w`.
///
/// Arnoldi uses modified Gram-Schmidt with one reorthogonalization pass. The true
/// residual is recomputed at every restart and at exit.
pub fn gmres<T, A, P>(op: &A, precond: &P, b: &[T], x0: Option<&[T]>, opts: &GmresOptions<T>) -> Result<GmresOutcome<T>>
where
    T: Scalar,
    A: LinearOperator<T> + ?Sized,
    P: Preconditioner<T> + ?Sized,
{
    let n = op.dim();
    check_len(n, b.len())?;
    let mut x = match x0 {
        Some(x0) => {
            check_len(n, x0.len())?;
            x0.to_vec()
        }
        None => vec![T::zero(); n],
    };
    let bnorm = norm2(b);
    if bnorm == T::zero() {
        return Ok(GmresOutcome {
            x: vec![T::zero(); n],
            iterations: 0,
            relative_residual: T::zero(),
            converged: true,
            breakdown: false,
        });
    }
    let target = opts.tol * bnorm;
    let restart = opts.restart.max(1);
    let mut iterations = 0;
    let mut breakdown = false;
    let mut r = residual(op, b, &x);
    let mut rnorm = norm2(&r);
    let mut work = vec![T::zero(); n];
    let mut z = vec![T::zero(); n];

    while rnorm > target && iterations < opts.max_iter && !breakdown {
        let mut basis: Vec<Vec<T>> = Vec::with_capacity(restart + 1);
        basis.push(r.iter().map(|&v| v / rnorm).collect());
        // Hessenberg columns after Givens rotation (upper triangular part).
        let mut h: Vec<Vec<T>> = Vec::with_capacity(restart);
        let mut cs: Vec<T> = Vec::with_capacity(restart);
        let mut sn: Vec<T> = Vec::with_capacity(restart);
        let mut g = vec![rnorm];
        while basis.len() <= restart && iterations < opts.max_iter {
            let j = basis.len() - 1;
            precond.apply_inverse(&basis[j], &mut z)?;
            op.apply(&z, &mut work);
            let wnorm = norm2(&work);
            let mut col = vec![T::zero(); j + 2];
            for _pass in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(&work, v);
                    col[i] += c;
                    axpy(-c, v, &mut work);
                }
            }
            let hnext = norm2(&work);
            col[j + 1] = hnext;
            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = (col[j] * col[j] + col[j + 1] * col[j + 1]).sqrt();
            let (c, s) = if denom == T::zero() { (T::one(), T::zero()) } else { (col[j] / denom, col[j + 1] / denom) };
            col[j] = c * col[j] + s * col[j + 1];
            col.truncate(j + 1);
            cs.push(c);
            sn.push(s);
            let gj = g[j];
            g[j] = c * gj;
            g.push(-s * gj);
            let estimate = g[j + 1].abs();
            h.push(col);
            iterations += 1;
            if hnext <= T::lit(1e-14) * wnorm {
                breakdown = true;
                break;
            }
            basis.push(work.iter().map(|&v| v / hnext).collect());
            if estimate <= target {
                break;
            }
        }
        // Back substitution for the least-squares coefficients.
        let m = h.len();
        let mut y = vec![T::zero(); m];
        for i in (0..m).rev() {
            let mut s = g[i];
            for k in i + 1..m {
                s -= h[k][i] * y[k];
            }
            y[i] = if h[i][i] != T::zero() { s / h[i][i] } else { T::zero() };
        }
        let mut update = vec![T::zero(); n];
        for (k, &yk) in y.iter().enumerate() {
            axpy(yk, &basis[k], &mut update);
        }
        precond.apply_inverse(&update, &mut z)?;
        let candidate: Vec<T> = x.iter().zip(&z).map(|(&a, &b)| a + b).collect();
        let r_new = residual(op, b, &candidate);
        let r_new_norm = norm2(&r_new);
        if r_new_norm <= rnorm {
            x = candidate;
            r = r_new;
            rnorm = r_new_norm;
        } else {
            // Rounding made the cycle worse; keep the best iterate and stop.
            break;
        }
    }
    Ok(GmresOutcome { x, iterations, relative_residual: rnorm / bnorm, converged: rnorm <= target, breakdown })
}

fn residual<T: Scalar, A: LinearOperator<T> + ?Sized>(op: &A, b: &[T], x: &[T]) -> Vec<T> {
    let mut ax = vec![T::zero(); b.len()];
    op.apply(x, &mut ax);
    b.iter().zip(&ax).map(|(&bi, &v)| bi - v).collect()
}

#[derive(Debug, Clone)]
pub struct CgOutcome<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    pub relative_residual: T,
    pub converged: bool,
}

/// Jacobi-preconditioned conjugate gradients for SPD `a`.
pub fn conjugate_gradient<T: Scalar>(a: &CsrMatrix<T>, b: &[T], tol: T, max_iter: usize) -> Result<CgOutcome<T>> {
    let n = a.nrows();
    check_len(n, b.len())?;
    let inv_diag: Vec<T> = a.diagonal().into_iter().map(|d| if d > T::zero() { d.recip() } else { T::one() }).collect();
    let bnorm = norm2(b);
    let mut x = vec![T::zero(); n];
    if bnorm == T::zero() {
        return Ok(CgOutcome { x, iterations: 0, relative_residual: T::zero(), converged: true });
    }
    let mut r = b.to_vec();
    let mut z: Vec<T> = r.iter().zip(&inv_diag).map(|(&ri, &d)| ri * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![T::zero(); n];
    let mut iterations = 0;
    let mut rnorm = bnorm;
    while rnorm > tol * bnorm && iterations < max_iter {
        a.mul_vec_into(&p, &mut ap);
        let step = rz / dot(&p, &ap);
        axpy(step, &p, &mut x);
        axpy(-step, &ap, &mut r);
        rnorm = norm2(&r);
        for ((zi, &ri), &d) in z.iter_mut().zip(&r).zip(&inv_diag) {
            *zi = ri * d;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, &zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        iterations += 1;
    }
    Ok(CgOutcome { x, iterations, relative_residual: rnorm / bnorm, converged: rnorm <= tol * bnorm })
}
