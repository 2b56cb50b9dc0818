//! Descent directions: ADMM for the Lipschitz steepest-descent and
//! Newton-type problems, and `p`-Laplacian reference directions.

mod admm;
mod ops;
mod plaplace;

pub use admm::{admm_direction, AdmmOptions, AdmmRecord, AdmmResult, AdmmState, Diagnostics};
pub use ops::FieldOps;
pub use plaplace::{p_direction, p_direction_with_history, PDirection};

use crate::fem::{DualVector, VectorField};
use crate::mesh::Mesh;
use crate::shape::HessianOperator;
use crate::{Error, Result};

/// Symmetric bilinear form given by its action `V ↦ B[V, ·]`.
pub trait QuadraticForm {
    fn apply(&self, v: &VectorField) -> Result<DualVector>;
}

impl QuadraticForm for HessianOperator<'_> {
    fn apply(&self, v: &VectorField) -> Result<DualVector> {
        HessianOperator::apply(self, v)
    }
}

/// Inputs of a direction solve.
#[derive(Clone, Copy)]
pub struct DirectionRequest<'a> {
    pub mesh: &'a Mesh,
    pub grad: &'a DualVector,
    pub hess: Option<&'a dyn QuadraticForm>,
    pub newton_t: f64,
    pub area_constrained: bool,
}

impl<'a> DirectionRequest<'a> {
    pub fn first_order(mesh: &'a Mesh, grad: &'a DualVector, area_constrained: bool) -> Self {
        Self {
            mesh,
            grad,
            hess: None,
            newton_t: 0.0,
            area_constrained,
        }
    }

    pub fn newton(
        mesh: &'a Mesh,
        grad: &'a DualVector,
        hess: &'a dyn QuadraticForm,
        newton_t: f64,
        area_constrained: bool,
    ) -> Self {
        Self {
            mesh,
            grad,
            hess: Some(hess),
            newton_t,
            area_constrained,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.grad.len() != self.mesh.num_vertices() {
            return Err(Error::Contract("gradient does not match the mesh".into()));
        }
        if !(self.grad.norm() > 0.0) {
            return Err(Error::Direction("gradient is zero or not finite".into()));
        }
        if !(self.newton_t >= 0.0) {
            return Err(Error::Config(format!("newton_t = {} must be non-negative", self.newton_t)));
        }
        if self.newton_t > 0.0 && self.hess.is_none() {
            return Err(Error::Config("newton_t > 0 needs a Hessian".into()));
        }
        if self.newton_t >= 1.0 {
            return Err(Error::Config(format!("newton_t = {} must be below 1", self.newton_t)));
        }
        Ok(())
    }
}

/// `t/2 B[V,V] + ⟨grad, V⟩`
pub fn directional_value(grad: &DualVector, hess: Option<&dyn QuadraticForm>, t: f64, v: &VectorField) -> Result<f64> {
    let mut value = grad.pair(v);
    if t != 0.0 {
        if let Some(h) = hess {
            value += 0.5 * t * h.apply(v)?.pair(v);
        }
    }
    Ok(value)
}
