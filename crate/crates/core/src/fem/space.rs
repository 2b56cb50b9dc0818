use super::ScalarField;
use crate::mesh::Mesh;

/// Triangles a space lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Support {
    Omega,
    HoldAll,
}

/// Scalar P1 degrees of freedom on a support, with the Dirichlet vertices
/// (`∂Ω` or `∂D`) eliminated.
#[derive(Clone, Debug)]
pub struct FeSpace {
    support: Support,
    num_vertices: usize,
    dof_of_vertex: Vec<Option<usize>>,
    vertex_of_dof: Vec<usize>,
    triangles: Vec<usize>,
}

impl FeSpace {
    pub fn new(mesh: &Mesh, support: Support) -> Self {
        Self::build(mesh, support, true)
    }

    /// Every vertex of the support closure is a degree of freedom.
    pub fn unconstrained(mesh: &Mesh, support: Support) -> Self {
        Self::build(mesh, support, false)
    }

    fn build(mesh: &Mesh, support: Support, dirichlet: bool) -> Self {
        let nv = mesh.num_vertices();
        let (triangles, in_closure, fixed) = match support {
            Support::Omega => (mesh.omega_triangles(), mesh.omega_closure_flags(), mesh.omega_boundary_flags()),
            Support::HoldAll => (
                (0..mesh.num_triangles()).collect(),
                vec![true; nv],
                (0..nv).map(|v| mesh.is_on_hold_all_boundary(v)).collect(),
            ),
        };
        let mut dof_of_vertex = vec![None; nv];
        let mut vertex_of_dof = Vec::new();
        for v in 0..nv {
            if in_closure[v] && !(dirichlet && fixed[v]) {
                dof_of_vertex[v] = Some(vertex_of_dof.len());
                vertex_of_dof.push(v);
            }
        }
        Self {
            support,
            num_vertices: nv,
            dof_of_vertex,
            vertex_of_dof,
            triangles,
        }
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn num_dofs(&self) -> usize {
        self.vertex_of_dof.len()
    }

    pub fn dof(&self, vertex: usize) -> Option<usize> {
        self.dof_of_vertex[vertex]
    }

    pub fn vertex(&self, dof: usize) -> usize {
        self.vertex_of_dof[dof]
    }

    /// Triangles of the support.
    pub fn triangles(&self) -> &[usize] {
        &self.triangles
    }

    pub fn gather(&self, field: &ScalarField) -> Vec<f64> {
        self.vertex_of_dof.iter().map(|&v| field[v]).collect()
    }

    /// Vertex values; zero outside the degrees of freedom.
    pub fn scatter(&self, coeffs: &[f64]) -> ScalarField {
        assert_eq!(coeffs.len(), self.num_dofs());
        let mut f = ScalarField::zeros(self.num_vertices);
        for (&v, &c) in self.vertex_of_dof.iter().zip(coeffs) {
            f.values_mut()[v] = c;
        }
        f
    }
}
