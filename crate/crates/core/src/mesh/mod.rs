//! Triangulations of the hold-all box with an embedded subdomain `Ω`.
//!
//! A [`Mesh`] never changes topology: deformation moves vertices and keeps
//! connectivity and the per-triangle `in_omega` flags. The set of `∂Ω`
//! vertices is recomputed from the flags whenever it is needed.

mod generate;
mod io;
mod vtk;

use std::collections::HashMap;

pub use generate::{box_with_disk, box_with_ellipse, box_with_rectangle, Rect};
pub use io::{read_text, write_text};
pub use vtk::VtkExport;

use crate::fem::VectorField;
use crate::mat2::{spectral_norm, Mat2, Vec2};
use crate::{Error, Result};

/// Geometry of one triangle with the gradients of its barycentric
/// coordinates.
#[derive(Clone, Copy, Debug)]
pub struct Element {
    pub ids: [usize; 3],
    pub x: [Vec2; 3],
    /// Signed area, positive for counter-clockwise vertex order.
    pub area: f64,
    pub grads: [Vec2; 3],
}

impl Element {
    pub fn new(ids: [usize; 3], x: [Vec2; 3]) -> Self {
        let e1 = x[1] - x[0];
        let e2 = x[2] - x[0];
        let twice = e1.x * e2.y - e1.y * e2.x;
        let area = 0.5 * twice;
        let grads = [
            Vec2::new(x[1].y - x[2].y, x[2].x - x[1].x) / twice,
            Vec2::new(x[2].y - x[0].y, x[0].x - x[2].x) / twice,
            Vec2::new(x[0].y - x[1].y, x[1].x - x[0].x) / twice,
        ];
        Self {
            ids,
            x,
            area,
            grads,
        }
    }

    /// Point with barycentric coordinates `bary`.
    #[inline]
    pub fn point(&self, bary: &[f64; 3]) -> Vec2 {
        self.x[0] * bary[0] + self.x[1] * bary[1] + self.x[2] * bary[2]
    }

    /// Constant gradient of the P1 function with vertex values `vals`.
    #[inline]
    pub fn gradient(&self, vals: [f64; 3]) -> Vec2 {
        self.grads[0] * vals[0] + self.grads[1] * vals[1] + self.grads[2] * vals[2]
    }

    /// Constant Jacobian `DV` of the P1 vector field with vertex values `vals`.
    #[inline]
    pub fn jacobian(&self, vals: [Vec2; 3]) -> Mat2 {
        vals[0] * self.grads[0].transpose()
            + vals[1] * self.grads[1].transpose()
            + vals[2] * self.grads[2].transpose()
    }
}

/// Outcome of moving the vertices of a mesh by `t·V`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeformationReport {
    /// `min det(I + t DV)` over all triangles.
    pub min_jacobian_det: f64,
    /// `max |DV|` (spectral norm) over all triangles.
    pub max_spectral_dv: f64,
    pub valid: bool,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Vec2>,
    triangles: Vec<[usize; 3]>,
    in_omega: Vec<bool>,
    on_hold_all_boundary: Vec<bool>,
}

impl Mesh {
    /// Builds a mesh and checks every structural invariant: positive
    /// orientation, conformity, `Ω` edge-connected and away from `∂D`.
    pub fn new(vertices: Vec<Vec2>, triangles: Vec<[usize; 3]>, in_omega: Vec<bool>) -> Result<Self> {
        if in_omega.len() != triangles.len() {
            return Err(Error::InvalidMesh(format!(
                "{} flags for {} triangles",
                in_omega.len(),
                triangles.len()
            )));
        }
        let nv = vertices.len();
        if let Some(t) = triangles.iter().position(|t| t.iter().any(|&i| i >= nv)) {
            return Err(Error::InvalidMesh(format!("triangle {t} has an out-of-range vertex")));
        }
        let edges = edge_map(&triangles)?;
        let mut on_boundary = vec![false; nv];
        for (&(a, b), tris) in &edges {
            if tris.len() == 1 {
                on_boundary[a] = true;
                on_boundary[b] = true;
            }
        }
        let mesh = Self {
            vertices,
            triangles,
            in_omega,
            on_hold_all_boundary: on_boundary,
        };
        if let Some(t) = (0..mesh.num_triangles()).find(|&t| !(mesh.element(t).area > 0.0)) {
            return Err(Error::InvalidMesh(format!("triangle {t} is not positively oriented")));
        }
        for (t, tri) in mesh.triangles.iter().enumerate() {
            if mesh.in_omega[t] && tri.iter().any(|&v| mesh.on_hold_all_boundary[v]) {
                return Err(Error::InvalidMesh(format!("Ω triangle {t} touches ∂D")));
            }
        }
        if !mesh.omega_is_edge_connected(&edges) {
            return Err(Error::InvalidMesh("Ω is not edge-connected".into()));
        }
        Ok(mesh)
    }

    fn omega_is_edge_connected(&self, edges: &HashMap<(usize, usize), Vec<usize>>) -> bool {
        let omega: Vec<usize> = (0..self.num_triangles()).filter(|&t| self.in_omega[t]).collect();
        let Some(&start) = omega.first() else {
            return true;
        };
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.num_triangles()];
        for tris in edges.values() {
            if tris.len() == 2 && self.in_omega[tris[0]] && self.in_omega[tris[1]] {
                adj[tris[0]].push(tris[1]);
                adj[tris[1]].push(tris[0]);
            }
        }
        let mut seen = vec![false; self.num_triangles()];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 0;
        while let Some(t) = stack.pop() {
            count += 1;
            for &s in &adj[t] {
                if !seen[s] {
                    seen[s] = true;
                    stack.push(s);
                }
            }
        }
        count == omega.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn in_omega(&self) -> &[bool] {
        &self.in_omega
    }

    pub fn is_on_hold_all_boundary(&self, v: usize) -> bool {
        self.on_hold_all_boundary[v]
    }

    /// Vertex indices on `∂D`.
    pub fn dirichlet_d(&self) -> Vec<usize> {
        (0..self.num_vertices()).filter(|&v| self.on_hold_all_boundary[v]).collect()
    }

    /// Per-vertex flag: the vertex belongs to some `Ω` triangle.
    pub fn omega_closure_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.num_vertices()];
        for (t, tri) in self.triangles.iter().enumerate() {
            if self.in_omega[t] {
                for &v in tri {
                    flags[v] = true;
                }
            }
        }
        flags
    }

    /// Per-vertex flag for `∂Ω`: incident to an `Ω` triangle and to a
    /// triangle outside `Ω` (or lying on `∂D`).
    pub fn omega_boundary_flags(&self) -> Vec<bool> {
        let mut inside = vec![false; self.num_vertices()];
        let mut outside = self.on_hold_all_boundary.clone();
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                if self.in_omega[t] {
                    inside[v] = true;
                } else {
                    outside[v] = true;
                }
            }
        }
        inside.iter().zip(&outside).map(|(&i, &o)| i && o).collect()
    }

    /// Vertex indices on `∂Ω`.
    pub fn dirichlet_omega(&self) -> Vec<usize> {
        let flags = self.omega_boundary_flags();
        (0..self.num_vertices()).filter(|&v| flags[v]).collect()
    }

    pub fn element(&self, t: usize) -> Element {
        let ids = self.triangles[t];
        Element::new(ids, ids.map(|i| self.vertices[i]))
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        (0..self.num_triangles()).map(move |t| self.element(t))
    }

    /// Indices of the triangles in `Ω`.
    pub fn omega_triangles(&self) -> Vec<usize> {
        (0..self.num_triangles()).filter(|&t| self.in_omega[t]).collect()
    }

    /// Sum of the signed areas of the `Ω` triangles.
    pub fn omega_area(&self) -> f64 {
        self.omega_triangles().into_iter().map(|t| self.element(t).area).sum()
    }

    /// Area-weighted centroid of `Ω`.
    pub fn omega_barycenter(&self) -> Vec2 {
        let mut acc = Vec2::zeros();
        let mut area = 0.0;
        for t in self.omega_triangles() {
            let e = self.element(t);
            acc += e.area * (e.x[0] + e.x[1] + e.x[2]) / 3.0;
            area += e.area;
        }
        acc / area
    }

    pub fn min_triangle_area(&self) -> f64 {
        self.elements().map(|e| e.area).fold(f64::INFINITY, f64::min)
    }

    pub fn is_valid(&self) -> bool {
        self.min_triangle_area() > 0.0
    }

    /// Per-triangle Jacobian `DV`.
    pub fn jacobians(&self, field: &VectorField) -> Vec<Mat2> {
        self.elements()
            .map(|e| e.jacobian(e.ids.map(|i| field.values()[i])))
            .collect()
    }

    /// Largest per-triangle spectral norm of `DV`.
    pub fn max_spectral_jacobian(&self, field: &VectorField) -> f64 {
        self.jacobians(field).iter().map(spectral_norm).fold(0.0, f64::max)
    }

    /// Moves every vertex `x ↦ x + t V(x)`.
    ///
    /// Invalid results are reported, not refused.
    pub fn deform(&self, field: &VectorField, t: f64) -> (Mesh, DeformationReport) {
        assert_eq!(field.len(), self.num_vertices(), "field/mesh size mismatch");
        let mut min_det = f64::INFINITY;
        let mut max_dv: f64 = 0.0;
        for dv in self.jacobians(field) {
            min_det = min_det.min((Mat2::identity() + t * dv).determinant());
            max_dv = max_dv.max(spectral_norm(&dv));
        }
        let vertices = self
            .vertices
            .iter()
            .zip(field.values())
            .map(|(x, v)| x + t * v)
            .collect();
        let report = DeformationReport {
            min_jacobian_det: min_det,
            max_spectral_dv: max_dv,
            valid: min_det > 0.0,
        };
        (self.with_vertices(vertices), report)
    }

    /// Same connectivity with new vertex positions; no validation.
    pub fn with_vertices(&self, vertices: Vec<Vec2>) -> Mesh {
        assert_eq!(vertices.len(), self.num_vertices());
        Mesh {
            vertices,
            triangles: self.triangles.clone(),
            in_omega: self.in_omega.clone(),
            on_hold_all_boundary: self.on_hold_all_boundary.clone(),
        }
    }

    /// Closed polygons bounding `Ω`, counter-clockwise for outer loops.
    pub fn omega_boundary_loops(&self) -> Vec<Vec<usize>> {
        // directed edges of Ω triangles whose twin is not an Ω edge
        let mut directed: HashMap<(usize, usize), ()> = HashMap::new();
        for t in self.omega_triangles() {
            let [a, b, c] = self.triangles[t];
            for e in [(a, b), (b, c), (c, a)] {
                directed.insert(e, ());
            }
        }
        let mut next: HashMap<usize, usize> = HashMap::new();
        let mut boundary: Vec<(usize, usize)> = directed
            .keys()
            .filter(|&&(a, b)| !directed.contains_key(&(b, a)))
            .copied()
            .collect();
        boundary.sort_unstable();
        for &(a, b) in &boundary {
            next.insert(a, b);
        }
        let mut used: HashMap<usize, bool> = HashMap::new();
        let mut loops = Vec::new();
        for &(start, _) in &boundary {
            if used.contains_key(&start) {
                continue;
            }
            let mut lp = vec![start];
            used.insert(start, true);
            let mut cur = next[&start];
            while cur != start {
                lp.push(cur);
                used.insert(cur, true);
                cur = next[&cur];
            }
            loops.push(lp);
        }
        loops
    }
}

/// Undirected edge → adjacent triangles; rejects non-conforming input.
fn edge_map(triangles: &[[usize; 3]]) -> Result<HashMap<(usize, usize), Vec<usize>>> {
    let mut edges: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for (t, &[a, b, c]) in triangles.iter().enumerate() {
        for (p, q) in [(a, b), (b, c), (c, a)] {
            if p == q {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
            if let Some(other) = directed.insert((p, q), t) {
                return Err(Error::InvalidMesh(format!(
                    "edge ({p},{q}) used with the same orientation by triangles {other} and {t}"
                )));
            }
            edges.entry((p.min(q), p.max(q))).or_default().push(t);
        }
    }
    if let Some((e, _)) = edges.iter().find(|(_, ts)| ts.len() > 2) {
        return Err(Error::InvalidMesh(format!("edge {e:?} shared by more than two triangles")));
    }
    Ok(edges)
}

/// Shoelace area of a closed polygon.
pub fn shoelace_area(points: &[Vec2]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| {
            let p = points[i];
            let q = points[(i + 1) % n];
            p.x * q.y - q.x * p.y
        })
        .sum::<f64>()
        * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_triangle() -> Mesh {
        Mesh::new(
            vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
            vec![[0, 1, 2]],
            vec![false],
        )
        .unwrap()
    }

    fn square_mesh() -> Mesh {
        box_with_rectangle(Rect::new(-2.0, -2.0, 2.0, 2.0), Rect::new(-1.0, -1.0, 1.0, 1.0), 4).unwrap()
    }

    #[test]
    fn element_gradients_of_unit_triangle() {
        let e = single_triangle().element(0);
        assert_eq!(e.area, 0.5);
        assert_eq!(e.grads[0], Vec2::new(-1.0, -1.0));
        assert_eq!(e.grads[1], Vec2::new(1.0, 0.0));
        assert_eq!(e.grads[2], Vec2::new(0.0, 1.0));
    }

    #[test]
    fn rejects_clockwise_triangle() {
        let err = Mesh::new(
            vec![Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0)],
            vec![[0, 1, 2]],
            vec![false],
        );
        assert!(matches!(err, Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn deform_with_zero_step_is_identity() {
        let m = square_mesh();
        let v = VectorField::from_fn(&m, |x| Vec2::new(x.y.sin(), x.x * x.y));
        let (d, rep) = m.deform(&v, 0.0);
        assert_eq!(d.vertices(), m.vertices());
        assert_eq!(rep.min_jacobian_det, 1.0);
        assert!(rep.valid);
    }

    #[test]
    fn reflection_inducing_field_is_invalid() {
        // V = (-2x, 0): det(I + t DV) = 1 - 2t, a mirror image at t = 1
        let m = single_triangle();
        let v = VectorField::from_values(
            m.vertices().iter().map(|x| Vec2::new(-2.0 * x.x, 0.0)).collect(),
        );
        let (moved, rep) = m.deform(&v, 1.0);
        assert!(!rep.valid);
        assert!(rep.min_jacobian_det < 0.0);
        assert!(!moved.is_valid());
    }

    #[test]
    fn omega_area_of_empty_omega_is_zero() {
        assert_eq!(single_triangle().omega_area(), 0.0);
    }

    #[test]
    fn boundary_loop_area_matches_omega_area() {
        let m = square_mesh();
        let loops = m.omega_boundary_loops();
        assert_eq!(loops.len(), 1);
        let pts: Vec<Vec2> = loops[0].iter().map(|&i| m.vertices()[i]).collect();
        assert!((shoelace_area(&pts) - 4.0).abs() < 1e-12);
        assert!((m.omega_area() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_sets() {
        let m = square_mesh();
        // 16x16 cells on the box, boundary grid vertices only
        assert_eq!(m.dirichlet_d().len(), 4 * 16);
        assert_eq!(m.dirichlet_omega().len(), 4 * 8);
        for v in m.dirichlet_omega() {
            assert!(!m.is_on_hold_all_boundary(v));
        }
    }
}
