use super::{FeSpace, QuadratureRule, SparseMatrix, Support};
use crate::mat2::Vec2;
use crate::mesh::{Element, Mesh};
use crate::{Error, Result};

pub type ElementMatrix = [[f64; 3]; 3];

/// `∫_T ∇φ_a·∇φ_b`
pub fn element_stiffness(e: &Element) -> ElementMatrix {
    let mut k = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            k[a][b] = e.area * e.grads[a].dot(&e.grads[b]);
        }
    }
    k
}

/// `∫_T φ_a φ_b = |T|/12 (1 + δ_ab)`
pub fn element_mass(e: &Element) -> ElementMatrix {
    let mut m = [[e.area / 12.0; 3]; 3];
    for (a, row) in m.iter_mut().enumerate() {
        row[a] *= 2.0;
    }
    m
}

/// Sums element matrices over the support triangles, keeping only rows and
/// columns of free degrees of freedom.
pub fn assemble_matrix(
    mesh: &Mesh,
    space: &FeSpace,
    mut local: impl FnMut(usize, &Element) -> ElementMatrix,
) -> Result<SparseMatrix> {
    let mut triplets = Vec::with_capacity(9 * space.triangles().len());
    for &t in space.triangles() {
        let e = mesh.element(t);
        if !(e.area > 0.0) {
            return Err(Error::DegenerateTriangle(t));
        }
        let k = local(t, &e);
        let dofs = e.ids.map(|v| space.dof(v));
        for a in 0..3 {
            let Some(i) = dofs[a] else { continue };
            for b in 0..3 {
                if let Some(j) = dofs[b] {
                    triplets.push((i, j, k[a][b]));
                }
            }
        }
    }
    Ok(SparseMatrix::from_triplets(space.num_dofs(), triplets))
}

pub fn assemble_stiffness(mesh: &Mesh, space: &FeSpace) -> Result<SparseMatrix> {
    assemble_matrix(mesh, space, |_, e| element_stiffness(e))
}

pub fn assemble_mass(mesh: &Mesh, space: &FeSpace) -> Result<SparseMatrix> {
    assemble_matrix(mesh, space, |_, e| element_mass(e))
}

/// `(∫ f φ_a)_a` over the support. `f` receives the triangle index, the
/// element, the physical point and its barycentric coordinates.
pub fn assemble_vector(
    mesh: &Mesh,
    space: &FeSpace,
    rule: &QuadratureRule,
    f: impl Fn(usize, &Element, Vec2, &[f64; 3]) -> f64,
) -> Vec<f64> {
    let mut out = vec![0.0; space.num_dofs()];
    for &t in space.triangles() {
        let e = mesh.element(t);
        let mut local = [0.0; 3];
        for (x, w, b) in rule.on(&e) {
            let fx = w * f(t, &e, x, b);
            for a in 0..3 {
                local[a] += fx * b[a];
            }
        }
        for a in 0..3 {
            if let Some(i) = space.dof(e.ids[a]) {
                out[i] += local[a];
            }
        }
    }
    out
}

/// Load vector `∫ F φ_a`.
pub fn assemble_load(mesh: &Mesh, space: &FeSpace, rule: &QuadratureRule, f: impl Fn(Vec2) -> f64) -> Vec<f64> {
    assemble_vector(mesh, space, rule, |_, _, x, _| f(x))
}

/// Triangles of `support` in the mesh.
pub fn support_triangles(mesh: &Mesh, support: Support) -> Vec<usize> {
    match support {
        Support::Omega => mesh.omega_triangles(),
        Support::HoldAll => (0..mesh.num_triangles()).collect(),
    }
}

/// `∫ f` over the support with the given rule; `f` sees the triangle
/// index, the physical point and its barycentric coordinates.
pub fn integrate(
    mesh: &Mesh,
    rule: &QuadratureRule,
    support: Support,
    f: impl Fn(usize, Vec2, &[f64; 3]) -> f64,
) -> f64 {
    let mut total = 0.0;
    for t in support_triangles(mesh, support) {
        let e = mesh.element(t);
        let local: f64 = rule
            .points()
            .iter()
            .zip(rule.weights())
            .map(|(b, w)| w * f(t, e.point(b), b))
            .sum();
        total += e.area * local;
    }
    total
}
