//! Shape optimisation of planar domains with P1 finite elements.
//!
//! The crate moves a polygonal subdomain `Ω` embedded in a triangulated
//! hold-all box `D`. Descent directions are Lipschitz deformation fields with
//! a pointwise spectral-norm bound on their Jacobian, computed by ADMM (first
//! order or damped Newton type) or by `p`-Laplacian relaxations for
//! comparison. Shape derivatives of first and second order are assembled
//! through a Lagrangian (state / adjoint / sensitivity) pipeline for
//! integral functionals constrained by a Poisson problem, a split bi-Laplace
//! problem, or the first Dirichlet eigenvalue.
//!
//! Module map:
//!
//! * [`mesh`] triangulations, generators, deformation, I/O.
//! * [`fem`] quadrature, assembly, sparse Cholesky, the smallest eigenpair.
//! * [`problems`] integrands, data, state and adjoint solves, presets.
//! * [`shape`] first derivative covectors and the matrix-free Hessian.
//! * [`descent`] ADMM and `p`-Laplacian direction finding.
//! * [`optimize`] Armijo line search, area projection, the outer loop.
//! * [`audit`] finite-difference consistency checks of the derivatives.

pub mod audit;
pub mod error;
pub mod fem;
pub mod mat2;
pub mod mesh;
pub mod problems;
pub mod shape;
pub mod descent;
pub mod optimize;

pub use error::{Error, Result};
pub use mat2::{Mat2, Vec2};
