//! P1 finite elements: fields, quadrature, assembly, sparse direct solves and
//! the smallest generalised eigenpair.

mod assembly;
mod eigen;
mod field;
pub mod krylov;
mod quadrature;
mod space;
mod sparse;

pub use assembly::{
    assemble_load, assemble_mass, assemble_matrix, assemble_stiffness, assemble_vector, element_mass,
    element_stiffness, integrate, support_triangles, ElementMatrix,
};
pub use eigen::{smallest_eigenpair, smallest_eigenpair_with, EigenPair, SIMPLICITY_GAP};
pub use field::{DualVector, ScalarField, VectorField};
pub use quadrature::QuadratureRule;
pub use space::{FeSpace, Support};
pub use sparse::{reverse_cuthill_mckee, solve_spd, solve_with, Cholesky, SparseMatrix};
