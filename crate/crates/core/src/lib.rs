//! Finite-element solvers for elliptic optimal control with an integral
//! constraint on the state gradient and box constraints on the control.
//!
//! The crate is generic over the floating-point type; the aliases at the root
//! fix it to `f64`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod problems;
pub mod projections;
pub mod scalar;
pub mod solvers;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use solvers::{Algorithm, SolverConfig};

pub type Mesh = mesh::Mesh<f64>;
pub type FemSystem = fem::FemSystem<f64>;
pub type CsrMatrix = linalg::CsrMatrix<f64>;
pub type ProblemSpec = problems::ProblemSpec<f64>;
pub type BoxSet = projections::BoxSet<f64>;
pub type EllipsoidSet = projections::EllipsoidSet<f64>;
pub type SolverReport = solvers::SolverReport<f64>;
pub type KktContext<'a> = solvers::KktContext<'a, f64>;
