//! Structured criss-cross meshes of a box containing a rectangle, a disk or
//! an ellipse.

use super::Mesh;
use crate::mat2::Vec2;
use crate::{Error, Result};

/// Axis-aligned rectangle `(x0, x1) × (y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn square(half: f64) -> Self {
        Self::new(-half, -half, half, half)
    }

    fn strictly_inside(&self, outer: &Rect) -> bool {
        self.x0 > outer.x0 && self.x1 < outer.x1 && self.y0 > outer.y0 && self.y1 < outer.y1
    }
}

const GRID_EPS: f64 = 1e-9;

/// Number of grid steps of width `1/n` in `len`, if integral.
fn grid_steps(len: f64, n: usize) -> Option<usize> {
    let k = len * n as f64;
    let r = k.round();
    ((k - r).abs() < GRID_EPS && r >= 0.0).then_some(r as usize)
}

/// Criss-cross triangulation of `outer` with `n` cells per unit length;
/// the triangles of cells inside `inner` form `Ω`.
///
/// Every grid cell is split into four triangles through its centre.
pub fn box_with_rectangle(outer: Rect, inner: Rect, n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::Config("subdivision count must be positive".into()));
    }
    if !inner.strictly_inside(&outer) || inner.x0 >= inner.x1 || inner.y0 >= inner.y1 {
        return Err(Error::Config(format!("inner {inner:?} is not strictly inside {outer:?}")));
    }
    let steps = |len: f64, what: &str| {
        grid_steps(len, n).ok_or_else(|| Error::Config(format!("{what} = {len} is not a multiple of 1/{n}")))
    };
    let nx = steps(outer.x1 - outer.x0, "box width")?;
    let ny = steps(outer.y1 - outer.y0, "box height")?;
    let ix0 = steps(inner.x0 - outer.x0, "inner x0 offset")?;
    let ix1 = steps(inner.x1 - outer.x0, "inner x1 offset")?;
    let iy0 = steps(inner.y0 - outer.y0, "inner y0 offset")?;
    let iy1 = steps(inner.y1 - outer.y0, "inner y1 offset")?;

    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) + nx * ny);
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Vec2::new(outer.x0 + i as f64 * h, outer.y0 + j as f64 * h));
        }
    }
    let centre0 = vertices.len();
    for j in 0..ny {
        for i in 0..nx {
            vertices.push(Vec2::new(
                outer.x0 + (i as f64 + 0.5) * h,
                outer.y0 + (j as f64 + 0.5) * h,
            ));
        }
    }
    let node = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(4 * nx * ny);
    let mut in_omega = Vec::with_capacity(4 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let c = centre0 + j * nx + i;
            let (v00, v10, v11, v01) = (node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1));
            let inside = (ix0..ix1).contains(&i) && (iy0..iy1).contains(&j);
            for tri in [[v00, v10, c], [v10, v11, c], [v11, v01, c], [v01, v00, c]] {
                triangles.push(tri);
                in_omega.push(inside);
            }
        }
    }
    Mesh::new(vertices, triangles, in_omega)
}

/// Mesh of `outer` with `Ω` approximating the ellipse centred at `center`
/// with semiaxes `(a, b)`.
///
/// A grid-aligned rectangle of (nearly) the same area is meshed first and
/// mapped onto the ellipse by sending the level sets of the max-norm to the
/// level sets of the elliptic norm. The map is blended linearly back to the
/// identity over a frame that stops one cell short of `∂D`.
pub fn box_with_ellipse(outer: Rect, center: Vec2, semiaxes: (f64, f64), n: usize) -> Result<Mesh> {
    let (a, b) = semiaxes;
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Config(format!("semiaxes must be positive, got ({a}, {b})")));
    }
    if n == 0 {
        return Err(Error::Config("subdivision count must be positive".into()));
    }
    let h = 1.0 / n as f64;
    let ellipse_box = Rect::new(center.x - a, center.y - b, center.x + a, center.y + b);
    if !ellipse_box.strictly_inside(&outer) {
        return Err(Error::Config("ellipse is not strictly inside the box".into()));
    }
    for (off, what) in [(center.x - outer.x0, "centre x"), (center.y - outer.y0, "centre y")] {
        if grid_steps(off, n).is_none() {
            return Err(Error::Config(format!("{what} is not on the grid of width 1/{n}")));
        }
    }
    // square of equal area: half side = semiaxis * sqrt(pi)/2
    let snap = |s: f64| ((s * std::f64::consts::PI.sqrt() / 2.0) / h).round().max(1.0) * h;
    let (hx, hy) = (snap(a), snap(b));
    let inner = Rect::new(center.x - hx, center.y - hy, center.x + hx, center.y + hy);
    let base = box_with_rectangle(outer, inner, n)?;

    let blend_end = [
        (center.x - outer.x0 - h) / hx,
        (outer.x1 - center.x - h) / hx,
        (center.y - outer.y0 - h) / hy,
        (outer.y1 - center.y - h) / hy,
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    if blend_end <= 1.0 + h {
        return Err(Error::Generator("no room between the ellipse and ∂D for blending; enlarge the box".into()));
    }

    let map = |p: Vec2| -> Vec2 {
        let u = (p.x - center.x) / hx;
        let v = (p.y - center.y) / hy;
        let s = u.abs().max(v.abs());
        let r = u.hypot(v);
        if r == 0.0 {
            return p;
        }
        let on_ellipse = center + Vec2::new(a * u * s / r, b * v * s / r);
        let theta = ((s - 1.0) / (blend_end - 1.0)).clamp(0.0, 1.0);
        on_ellipse * (1.0 - theta) + p * theta
    };
    let vertices: Vec<Vec2> = base
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, &p)| if base.is_on_hold_all_boundary(i) { p } else { map(p) })
        .collect();
    let mapped = base.with_vertices(vertices);
    if !mapped.is_valid() {
        return Err(Error::Generator(format!(
            "square-to-ellipse map inverted a triangle at n = {n}; use a larger n"
        )));
    }
    Ok(mapped)
}

/// Disk of the given radius; identical to the ellipse with equal semiaxes.
pub fn box_with_disk(outer: Rect, center: Vec2, radius: f64, n: usize) -> Result<Mesh> {
    box_with_ellipse(outer, center, (radius, radius), n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shoelace_area;
    use std::f64::consts::PI;

    fn hold_all() -> Rect {
        Rect::square(2.0)
    }

    #[test]
    fn square_in_box_has_exact_area() {
        let m = box_with_rectangle(hold_all(), Rect::square(1.0), 8).unwrap();
        assert_eq!(m.omega_area(), 4.0);
        assert_eq!(m.num_triangles(), 4 * 32 * 32);
    }

    #[test]
    fn offset_rectangle_has_unit_area() {
        let m = box_with_rectangle(hold_all(), Rect::new(-1.5, -1.0, -1.0, 1.0), 8).unwrap();
        assert!((m.omega_area() - 1.0).abs() < 1e-14);
        for v in m.dirichlet_omega() {
            assert!(!m.is_on_hold_all_boundary(v));
        }
    }

    #[test]
    fn misaligned_inner_rectangle_is_refused() {
        let r = box_with_rectangle(hold_all(), Rect::new(-1.3, -1.0, 1.0, 1.0), 2);
        assert!(matches!(r, Err(Error::Config(_))));
        let r = box_with_rectangle(hold_all(), Rect::new(-2.0, -1.0, 1.0, 1.0), 2);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn disk_area_within_one_percent() {
        let r = 2.0 / PI.sqrt();
        let m = box_with_disk(hold_all(), Vec2::zeros(), r, 16).unwrap();
        let area = m.omega_area();
        assert!((area - 4.0).abs() <= 0.04, "area {area}");
        // inscribed polygon: never larger than the disk
        assert!(area < 4.0);
        let loops = m.omega_boundary_loops();
        assert_eq!(loops.len(), 1);
        for &v in &loops[0] {
            assert!((m.vertices()[v].norm() - r).abs() < 1e-12);
        }
        let pts: Vec<Vec2> = loops[0].iter().map(|&i| m.vertices()[i]).collect();
        assert!((shoelace_area(&pts) - area).abs() < 1e-12 * area);
    }

    #[test]
    fn disk_equals_ellipse_with_equal_semiaxes() {
        let r = 2.0 / PI.sqrt();
        let d = box_with_disk(hold_all(), Vec2::zeros(), r, 8).unwrap();
        let e = box_with_ellipse(hold_all(), Vec2::zeros(), (r, r), 8).unwrap();
        assert_eq!(d.vertices(), e.vertices());
        assert_eq!(d.triangles(), e.triangles());
    }

    #[test]
    fn ellipse_area() {
        let m = box_with_ellipse(hold_all(), Vec2::zeros(), (2.0 / PI.sqrt(), 1.0 / PI.sqrt()), 16).unwrap();
        assert!((m.omega_area() - 2.0).abs() < 0.02);
    }

    #[test]
    fn zero_radius_is_an_error() {
        assert!(box_with_disk(hold_all(), Vec2::zeros(), 0.0, 8).is_err());
    }
}
