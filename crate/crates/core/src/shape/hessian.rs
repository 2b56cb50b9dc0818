//! Matrix-free second shape derivative.

use super::forms::{abrack_coefficient, cal_a, dbrack_coefficient};
use super::{at_point, ElemCache, LocalCovector, Sensitivity, ShapeContext};
use crate::fem::{DualVector, ScalarField, VectorField};
use crate::mat2::{Mat2, Vec2};
use crate::problems::{dot, interp, Adjoint, State};
use crate::Result;

/// `W ↦ d²J[V, W]` for fixed `V`, reusing the factorisations of the
/// context. Each application costs one sensitivity and one second adjoint
/// solve.
#[derive(Clone, Copy, Debug)]
pub struct HessianOperator<'c> {
    ctx: &'c ShapeContext<'c>,
}

impl<'c> HessianOperator<'c> {
    pub(super) fn new(ctx: &'c ShapeContext<'c>) -> Self {
        Self { ctx }
    }

    pub fn context(&self) -> &ShapeContext<'c> {
        self.ctx
    }

    /// `d²J[V, ·]` as a covector.
    pub fn apply(&self, v: &VectorField) -> Result<DualVector> {
        let ctx = self.ctx;
        let sens = ctx.sensitivity(v)?;
        Ok(match (&ctx.state, &ctx.adjoint, &sens) {
            (State::NoPde, _, _) => ctx.assemble_covector(Some(v), |c, dv, vl, l| add_objective_vv(c, dv, vl, l)),
            (State::Poisson { y }, Adjoint::Poisson { p }, Sensitivity::Poisson { s }) => {
                let ops = ctx.ops();
                let h1 = ctx.assemble_scalar(v, |c, dv, vl, l| {
                    l.flux += cal_a(dv) * c.grad(p) * c.e.area;
                    objective_adjoint_terms(c, dv, vl, s, l);
                });
                let g = ops.field(&ops.solve(&h1)?);
                ctx.assemble_covector(Some(v), |c, dv, vl, l| {
                    add_objective_vv(c, dv, vl, l);
                    add_objective_yv(c, s, l);
                    ShapeContext::add_stiffness(c, s, p, 1.0, l);
                    l.m += abrack_coefficient(dv, &c.grad(y), &c.grad(p)) * c.e.area;
                    add_source_vv(c, dv, vl, p, l);
                    ShapeContext::add_stiffness(c, y, &g, -1.0, l);
                    ShapeContext::add_source(c, &g, -1.0, l);
                })
            }
            (State::Coupled { y1, y2 }, Adjoint::Coupled { p1, p2 }, Sensitivity::Coupled { s1, s2 }) => {
                let ops = ctx.ops();
                let h1_1 = ctx.assemble_scalar(v, |c, dv, vl, l| {
                    l.flux += cal_a(dv) * c.grad(p2) * c.e.area;
                    objective_adjoint_terms(c, dv, vl, s1, l);
                });
                let h1_2 = ctx.assemble_scalar(v, |c, dv, _, l| {
                    l.flux += cal_a(dv) * c.grad(p1) * c.e.area;
                    let div = dv.trace();
                    let pl = p2.local(c.e.ids);
                    for q in &c.pts {
                        l.at(q, -q.w * div * interp(pl, &q.b));
                    }
                });
                let g2c = ops.solve(&h1_1)?;
                let mut rhs = ops.mass.mul_vec(&g2c);
                rhs.iter_mut().zip(&h1_2).for_each(|(a, b)| *a += b);
                let g1 = ops.field(&ops.solve(&rhs)?);
                let g2 = ops.field(&g2c);
                ctx.assemble_covector(Some(v), |c, dv, vl, l| {
                    add_objective_vv(c, dv, vl, l);
                    add_objective_yv(c, s1, l);
                    ShapeContext::add_stiffness(c, s1, p2, 1.0, l);
                    ShapeContext::add_mass(c, s2, p2, -1.0, l);
                    ShapeContext::add_stiffness(c, s2, p1, 1.0, l);
                    let a = c.e.area;
                    l.m += (abrack_coefficient(dv, &c.grad(y1), &c.grad(p2))
                        + abrack_coefficient(dv, &c.grad(y2), &c.grad(p1)))
                        * a;
                    add_mass_vv(c, dv, y2, p2, -1.0, l);
                    add_source_vv(c, dv, vl, p1, l);
                    ShapeContext::add_stiffness(c, y1, &g2, -1.0, l);
                    ShapeContext::add_mass(c, y2, &g2, 1.0, l);
                    ShapeContext::add_stiffness(c, y2, &g1, -1.0, l);
                    ShapeContext::add_source(c, &g1, -1.0, l);
                })
            }
            (State::Eigen { z, lambda, .. }, Adjoint::Eigen { .. }, Sensitivity::Eigen { s, dlambda }) => {
                let ops = ctx.ops();
                let lambda = *lambda;
                let sigma = *dlambda;
                let (zc, mz, _, _) = ctx.eigen_data();
                let mut h1_z = ctx.pencil_residual(v, z, lambda, z);
                h1_z.iter_mut().zip(&mz).for_each(|(h, m)| *h -= sigma * m);
                let h1_lambda = -0.5 * ctx.mass_derivative(v, z, z);
                let zh = dot(&zc, &h1_z);
                let g_mu = -0.5 * zh;
                let rhs: Vec<f64> = h1_z.iter().zip(&mz).map(|(h, m)| h - zh * m).collect();
                let mut gz = ctx.deflated_solve(&rhs)?;
                gz.iter_mut().zip(&zc).for_each(|(g, z)| *g -= h1_lambda * z);
                let gz = ops.field(&gz);
                ctx.assemble_covector(Some(v), |c, dv, _, l| {
                    ShapeContext::add_stiffness(c, z, s, 1.0, l);
                    ShapeContext::add_mass(c, z, s, -lambda, l);
                    ShapeContext::add_mass(c, z, z, -sigma, l);
                    l.m += abrack_coefficient(dv, &c.grad(z), &c.grad(z)) * c.e.area;
                    add_mass_vv(c, dv, z, z, -lambda, l);
                    ShapeContext::add_stiffness(c, &gz, z, -1.0, l);
                    ShapeContext::add_mass(c, &gz, z, lambda, l);
                    ShapeContext::add_mass(c, z, z, g_mu, l);
                })
            }
            _ => unreachable!("context checked state/adjoint consistency"),
        })
    }

    /// `d²J[V, W]`
    pub fn bilin(&self, v: &VectorField, w: &VectorField) -> Result<f64> {
        Ok(self.apply(v)?.pair(w))
    }
}

/// `Q[j_yy s φ] + Q[(j_y div V + j_yx·V) φ]`
fn objective_adjoint_terms(
    c: &ElemCache,
    dv: &Mat2,
    vl: &[Vec2; 3],
    s: &ScalarField,
    l: &mut super::LocalScalar,
) {
    let div = dv.trace();
    let sl = s.local(c.e.ids);
    for q in &c.pts {
        let jet = q.jet.expect("integrand data");
        let vq = at_point(vl, &q.b);
        l.at(q, q.w * (jet.jyy * interp(sl, &q.b) + jet.jy * div + jet.jyx.dot(&vq)));
    }
}

/// `W ↦ J_VV[V, W]`
fn add_objective_vv(c: &ElemCache, dv: &Mat2, vl: &[Vec2; 3], l: &mut LocalCovector) {
    let div = dv.trace();
    let d = dbrack_coefficient(dv);
    for q in &c.pts {
        let jet = q.jet.expect("integrand data");
        let vq = at_point(vl, &q.b);
        l.m += d * (q.w * jet.j);
        l.iso += q.w * jet.jx.dot(&vq);
        l.at(q, (jet.jx * div + jet.jxx * vq) * q.w);
    }
}

/// `W ↦ J_yV[s, W]`
fn add_objective_yv(c: &ElemCache, s: &ScalarField, l: &mut LocalCovector) {
    let sl = s.local(c.e.ids);
    for q in &c.pts {
        let jet = q.jet.expect("integrand data");
        let sq = q.w * interp(sl, &q.b);
        l.iso += sq * jet.jy;
        l.at(q, jet.jyx * sq);
    }
}

/// `W ↦ −∫ g (𝔻[V,W] F + div V ∇F·W + div W ∇F·V + D²F V·W)`
fn add_source_vv(c: &ElemCache, dv: &Mat2, vl: &[Vec2; 3], g: &ScalarField, l: &mut LocalCovector) {
    let div = dv.trace();
    let d = dbrack_coefficient(dv);
    let gl = g.local(c.e.ids);
    for q in &c.pts {
        let src = q.src.expect("source data");
        let vq = at_point(vl, &q.b);
        let gq = q.w * interp(gl, &q.b);
        l.m -= d * (gq * src.f);
        l.iso -= gq * src.gf.dot(&vq);
        l.at(q, (src.gf * div + src.hf * vq) * -gq);
    }
}

/// `W ↦ sign ∫ 𝔻[V,W] u v`
fn add_mass_vv(c: &ElemCache, dv: &Mat2, u: &ScalarField, v: &ScalarField, sign: f64, l: &mut LocalCovector) {
    let d = dbrack_coefficient(dv);
    let (ul, vl) = (u.local(c.e.ids), v.local(c.e.ids));
    let mut total = 0.0;
    for q in &c.pts {
        total += q.w * interp(ul, &q.b) * interp(vl, &q.b);
    }
    l.m += d * (sign * total);
}
