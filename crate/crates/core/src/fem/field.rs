use std::ops::{AddAssign, Index};

use crate::mat2::Vec2;
use crate::mesh::Mesh;

/// P1 scalar function given by its values at every hold-all vertex.
///
/// States and adjoints are supported on `Ω`: their values vanish on `∂Ω` and
/// at every vertex that is not in the closure of `Ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(num_vertices: usize) -> Self {
        Self {
            values: vec![0.0; num_vertices],
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values at the three vertices of a triangle.
    #[inline]
    pub fn local(&self, ids: [usize; 3]) -> [f64; 3] {
        ids.map(|i| self.values[i])
    }
}

impl Index<usize> for ScalarField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// P1 vector field on the hold-all mesh, zero on `∂D`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    values: Vec<Vec2>,
}

impl VectorField {
    pub fn zeros(num_vertices: usize) -> Self {
        Self {
            values: vec![Vec2::zeros(); num_vertices],
        }
    }

    /// Raw vertex values; the caller is responsible for the `∂D` condition.
    pub fn from_values(values: Vec<Vec2>) -> Self {
        Self { values }
    }

    /// Interpolates `f` and zeroes the `∂D` vertices.
    pub fn from_fn(mesh: &Mesh, f: impl Fn(Vec2) -> Vec2) -> Self {
        let values = mesh
            .vertices()
            .iter()
            .enumerate()
            .map(|(i, &x)| if mesh.is_on_hold_all_boundary(i) { Vec2::zeros() } else { f(x) })
            .collect();
        Self { values }
    }

    pub fn values(&self) -> &[Vec2] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Vec2] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn local(&self, ids: [usize; 3]) -> [Vec2; 3] {
        ids.map(|i| self.values[i])
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// `self + s·other`
    pub fn add_scaled(&self, s: f64, other: &VectorField) -> Self {
        Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect(),
        }
    }

    /// Euclidean dot product of the nodal values.
    pub fn dot(&self, other: &VectorField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a.dot(b)).sum()
    }

    /// True if every `∂D` value is exactly zero.
    pub fn vanishes_on_hold_all_boundary(&self, mesh: &Mesh) -> bool {
        mesh.dirichlet_d().into_iter().all(|v| self.values[v] == Vec2::zeros())
    }
}

/// Covector on vector-field degrees of freedom: one 2-vector per vertex,
/// zero at `∂D`. Evaluation against a field is the nodal dot product.
#[derive(Clone, Debug, PartialEq)]
pub struct DualVector {
    values: Vec<Vec2>,
}

impl DualVector {
    pub fn zeros(num_vertices: usize) -> Self {
        Self {
            values: vec![Vec2::zeros(); num_vertices],
        }
    }

    pub fn from_values(values: Vec<Vec2>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[Vec2] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Vec2] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `⟨self, V⟩`
    pub fn pair(&self, field: &VectorField) -> f64 {
        self.values.iter().zip(field.values()).map(|(a, b)| a.dot(b)).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt()
    }

    /// Zeroes the `∂D` entries.
    pub fn apply_dirichlet(&mut self, mesh: &Mesh) {
        for v in mesh.dirichlet_d() {
            self.values[v] = Vec2::zeros();
        }
    }
}

impl AddAssign<&DualVector> for DualVector {
    fn add_assign(&mut self, rhs: &DualVector) {
        for (a, b) in self.values.iter_mut().zip(&rhs.values) {
            *a += b;
        }
    }
}
