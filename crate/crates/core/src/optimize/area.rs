use crate::mesh::Mesh;
use crate::{Error, Result, Vec2};

/// Graph distance (in vertex-adjacency hops) over which the dilation fades
/// out: vertices at distance `d` move with weight `1 − d/3`.
const BLEND_LAYERS: usize = 2;

const AREA_TOL: f64 = 1e-10;

/// Vertex-adjacency distance to the closure of `Ω`, capped at
/// `BLEND_LAYERS + 1`.
fn distance_to_omega(mesh: &Mesh) -> Vec<usize> {
    let far = BLEND_LAYERS + 1;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); mesh.num_vertices()];
    for t in mesh.triangles() {
        for k in 0..3 {
            adj[t[k]].push(t[(k + 1) % 3]);
            adj[t[(k + 1) % 3]].push(t[k]);
        }
    }
    let mut dist: Vec<usize> = mesh.omega_closure_flags().iter().map(|&c| if c { 0 } else { far }).collect();
    let mut front: Vec<usize> = (0..dist.len()).filter(|&v| dist[v] == 0).collect();
    for d in 1..far {
        let mut next = Vec::new();
        for v in front {
            for &w in &adj[v] {
                if dist[w] > d {
                    dist[w] = d;
                    next.push(w);
                }
            }
        }
        front = next;
    }
    dist
}

/// Dilates `Ω` about its barycentre so that its area becomes `target`,
/// fading the displacement out over the neighbouring layers of the
/// hold-all mesh.
pub fn project_area(mesh: &Mesh, target: f64) -> Result<Mesh> {
    let area = mesh.omega_area();
    if !(area > 0.0) || !(target > 0.0) {
        return Err(Error::Projection(format!("cannot scale area {area} to {target}")));
    }
    let dist = distance_to_omega(mesh);
    let far = (BLEND_LAYERS + 1) as f64;
    let weight: Vec<f64> = dist
        .iter()
        .enumerate()
        .map(|(v, &d)| {
            if mesh.is_on_hold_all_boundary(v) {
                0.0
            } else {
                1.0 - d as f64 / far
            }
        })
        .collect();
    let c = mesh.omega_barycenter();
    let dilate = |s: f64| -> Mesh {
        let verts: Vec<Vec2> = mesh
            .vertices()
            .iter()
            .zip(&weight)
            .map(|(x, &w)| if w > 0.0 { x + (x - c) * (w * (s - 1.0)) } else { *x })
            .collect();
        mesh.with_vertices(verts)
    };

    let mut s = (target / area).sqrt();
    let mut out = dilate(s);
    let a = out.omega_area();
    // A(s) = s² area up to rounding
    s -= (a - target) * s / (2.0 * a);
    out = dilate(s);
    if !out.is_valid() {
        return Err(Error::Projection(format!(
            "scaling by {s} inverts a triangle (min area {:e})",
            out.min_triangle_area()
        )));
    }
    let err = (out.omega_area() - target).abs();
    if err > AREA_TOL * target.max(1.0) {
        return Err(Error::Projection(format!("area misses the target by {err:e}")));
    }
    Ok(out)
}
