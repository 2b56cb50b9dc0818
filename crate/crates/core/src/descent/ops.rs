//! Linear algebra on deformation fields over the hold-all mesh.

use crate::fem::{assemble_stiffness, Cholesky, DualVector, FeSpace, SparseMatrix, Support, VectorField};
use crate::mat2::{spectral_norm, Mat2, Vec2};
use crate::mesh::{Element, Mesh};
use crate::Result;

/// `∫_Ω div V = ⟨a, V⟩` with cached `L⁻¹a`.
#[derive(Clone, Debug)]
struct AreaRow {
    a: DualVector,
    l_inv_a: VectorField,
    a_l_inv_a: f64,
}

/// Vector Laplacian `L` (`⟨LV, W⟩ = ∫_D DV : DW`), its factor, and the
/// element Jacobian maps.
#[derive(Clone, Debug)]
pub struct FieldOps<'m> {
    mesh: &'m Mesh,
    space: FeSpace,
    laplace: SparseMatrix,
    chol: Cholesky,
    elements: Vec<Element>,
    area: Option<AreaRow>,
}

impl<'m> FieldOps<'m> {
    pub fn new(mesh: &'m Mesh, area_constrained: bool) -> Result<Self> {
        let space = FeSpace::new(mesh, Support::HoldAll);
        let laplace = assemble_stiffness(mesh, &space)?;
        let chol = Cholesky::factor(&laplace)?;
        let elements: Vec<Element> = mesh.elements().collect();
        let mut ops = Self {
            mesh,
            space,
            laplace,
            chol,
            elements,
            area: None,
        };
        if area_constrained {
            let mut a = vec![Vec2::zeros(); mesh.num_vertices()];
            for (e, &inside) in ops.elements.iter().zip(mesh.in_omega()) {
                if inside {
                    for k in 0..3 {
                        a[e.ids[k]] += e.grads[k] * e.area;
                    }
                }
            }
            let mut a = DualVector::from_values(a);
            a.apply_dirichlet(mesh);
            let l_inv_a = ops.laplace_solve(&a);
            let a_l_inv_a = a.pair(&l_inv_a);
            ops.area = Some(AreaRow { a, l_inv_a, a_l_inv_a });
        }
        Ok(ops)
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn num_vertices(&self) -> usize {
        self.mesh.num_vertices()
    }

    pub fn is_area_constrained(&self) -> bool {
        self.area.is_some()
    }

    /// Covector of `V ↦ ∫_Ω div V`.
    pub fn area_covector(&self) -> Option<&DualVector> {
        self.area.as_ref().map(|r| &r.a)
    }

    /// `∫_Ω div V`
    pub fn area_rate(&self, v: &VectorField) -> f64 {
        self.area.as_ref().map_or(0.0, |r| r.a.pair(v))
    }

    /// Per-element `DV` over all of `D`.
    pub fn jacobians(&self, v: &VectorField) -> Vec<Mat2> {
        self.elements.iter().map(|e| e.jacobian(v.local(e.ids))).collect()
    }

    pub fn max_spectral(&self, dv: &[Mat2]) -> f64 {
        dv.iter().map(spectral_norm).fold(0.0, f64::max)
    }

    /// `(∫ |q|_F²)^{1/2}` for element-constant matrices.
    pub fn l2_norm(&self, q: &[Mat2]) -> f64 {
        self.elements
            .iter()
            .zip(q)
            .map(|(e, m)| e.area * m.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    /// `W ↦ ∫ q : DW`
    pub fn div_t(&self, q: &[Mat2]) -> DualVector {
        let mut out = vec![Vec2::zeros(); self.num_vertices()];
        for (e, m) in self.elements.iter().zip(q) {
            for k in 0..3 {
                out[e.ids[k]] += m * e.grads[k] * e.area;
            }
        }
        let mut d = DualVector::from_values(out);
        d.apply_dirichlet(self.mesh);
        d
    }

    /// `L V`
    pub fn laplace(&self, v: &VectorField) -> DualVector {
        let mut out = vec![Vec2::zeros(); self.num_vertices()];
        for k in 0..2 {
            let x: Vec<f64> = (0..self.space.num_dofs())
                .map(|i| v.values()[self.space.vertex(i)][k])
                .collect();
            let y = self.laplace.mul_vec(&x);
            for (i, yi) in y.into_iter().enumerate() {
                out[self.space.vertex(i)][k] = yi;
            }
        }
        DualVector::from_values(out)
    }

    /// `L⁻¹ d`; the `∂D` entries of `d` are ignored.
    pub fn laplace_solve(&self, d: &DualVector) -> VectorField {
        let mut out = vec![Vec2::zeros(); self.num_vertices()];
        for k in 0..2 {
            let b: Vec<f64> = (0..self.space.num_dofs())
                .map(|i| d.values()[self.space.vertex(i)][k])
                .collect();
            let x = self.chol.solve(&b);
            for (i, xi) in x.into_iter().enumerate() {
                out[self.space.vertex(i)][k] = xi;
            }
        }
        VectorField::from_values(out)
    }

    /// Solves `L V = d − μ a` with `⟨a, V⟩ = 0` when constrained.
    pub fn constrained_laplace_solve(&self, d: &DualVector) -> VectorField {
        let v = self.laplace_solve(d);
        match &self.area {
            Some(r) => {
                let mu = r.a.pair(&v) / r.a_l_inv_a;
                v.add_scaled(-mu, &r.l_inv_a)
            }
            None => v,
        }
    }

    /// `Πᵀ d = d − a ⟨L⁻¹a, d⟩ / ⟨a, L⁻¹a⟩`: removes the multiplier
    /// direction from a residual.
    pub(crate) fn project_dual(&self, d: &mut DualVector) {
        if let Some(r) = &self.area {
            let s = d.pair(&r.l_inv_a) / r.a_l_inv_a;
            for (x, a) in d.values_mut().iter_mut().zip(r.a.values()) {
                *x -= a * s;
            }
        }
    }

    /// `Π V = V − L⁻¹a ⟨a, V⟩ / ⟨a, L⁻¹a⟩`: maps onto `⟨a, V⟩ = 0`.
    pub(crate) fn project_field(&self, v: &mut VectorField) {
        if let Some(r) = &self.area {
            let s = r.a.pair(v) / r.a_l_inv_a;
            for (x, l) in v.values_mut().iter_mut().zip(r.l_inv_a.values()) {
                *x -= l * s;
            }
        }
    }

    pub(crate) fn zero_boundary(&self, v: &mut VectorField) {
        for i in self.mesh.dirichlet_d() {
            v.values_mut()[i] = Vec2::zeros();
        }
    }
}

pub(crate) fn flatten(v: &[Vec2]) -> Vec<f64> {
    v.iter().flat_map(|p| [p.x, p.y]).collect()
}

pub(crate) fn unflatten(x: &[f64]) -> Vec<Vec2> {
    x.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect()
}
