//! Sparse matrices, factorizations and Krylov solvers.

pub mod csr;
pub mod factor;
pub mod krylov;
pub mod ldl;
pub mod saddle;

pub use csr::CsrMatrix;
pub use factor::{spd_factorize, SpdFactor};
pub use krylov::{
    conjugate_gradient, gmres, CgOutcome, FnOperator, GmresOptions, GmresOutcome, IdentityPreconditioner,
    LinearOperator, Preconditioner,
};
pub use ldl::{interleaved_order, reverse_cuthill_mckee, SkylineLdl};
pub use saddle::{spectrum_check, SaddleOperator, SaddlePreconditioner, SpectrumBounds, SPECTRUM_DIM_LIMIT};
