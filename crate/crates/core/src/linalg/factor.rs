use super::csr::CsrMatrix;
use super::krylov::conjugate_gradient;
use super::ldl::SkylineLdl;
use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;

/// Solve handle for a sparse SPD matrix: a direct envelope factorization, or a
/// conjugate-gradient wrapper with a fixed relative tolerance.
#[derive(Debug, Clone)]
pub enum SpdFactor<T> {
    Direct(SkylineLdl<T>),
    Iterative { matrix: CsrMatrix<T>, tol: T, max_iter: usize },
}

/// Direct factorization; aborts with a diagnostic when a pivot is not positive.
pub fn spd_factorize<T: Scalar>(a: &CsrMatrix<T>) -> Result<SpdFactor<T>> {
    check_len(a.nrows(), a.ncols())?;
    Ok(SpdFactor::Direct(SkylineLdl::factor_spd(a)?))
}

impl<T: Scalar> SpdFactor<T> {
    pub fn conjugate_gradient(a: &CsrMatrix<T>, tol: T) -> Result<Self> {
        check_len(a.nrows(), a.ncols())?;
        if a.diagonal().iter().any(|&d| !(d > T::zero())) {
            return Err(Error::InvalidArgument("matrix has a non-positive diagonal entry".into()));
        }
        Ok(Self::Iterative { matrix: a.clone(), tol, max_iter: 10 * a.nrows() + 100 })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Direct(f) => f.dim(),
            Self::Iterative { matrix, .. } => matrix.nrows(),
        }
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        match self {
            Self::Direct(f) => f.solve(b),
            Self::Iterative { matrix, tol, max_iter } => {
                let out = conjugate_gradient(matrix, b, *tol, *max_iter)?;
                if !out.converged {
                    return Err(Error::InvalidArgument(format!(
                        "conjugate gradients stalled at relative residual {:e}",
                        out.relative_residual.as_f64()
                    )));
                }
                Ok(out.x)
            }
        }
    }
}
