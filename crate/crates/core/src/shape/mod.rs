//! First and second shape derivatives of the discrete functionals.
//!
//! Everything is assembled on the reference mesh: a perturbation field `V`
//! moves the vertices to `x + V(x)`, and the derivatives are those of the
//! discrete energy (derivative quadrature) with respect to the vertex
//! positions. Covectors live on all vertices and vanish at `∂D`.

mod forms;
mod hessian;

pub use forms::{
    abrack, abrack_coefficient, cal_a, cal_a_coefficient, dbrack, dbrack_coefficient, matrix_forms, MatrixForms,
};
pub use hessian::HessianOperator;

use crate::fem::krylov::pcg;
use crate::fem::{DualVector, QuadratureRule, ScalarField, VectorField};
use crate::mat2::{Mat2, Vec2};
use crate::mesh::{Element, Mesh};
use crate::problems::{interp, Adjoint, PdeOperators, ProblemKind, ProblemSpec, Solver, State};
use crate::{Error, Result};

/// Tolerance of the deflated eigen solves.
const DEFLATED_TOL: f64 = 1e-12;
const DEFLATED_MAX_ITER: usize = 2000;

/// Directional derivative of the state with respect to `V`.
#[derive(Clone, Debug, PartialEq)]
pub enum Sensitivity {
    NoPde,
    Poisson { s: ScalarField },
    Coupled { s1: ScalarField, s2: ScalarField },
    /// `z'` and `λ'`
    Eigen { s: ScalarField, dlambda: f64 },
}

/// The two pieces of the first derivative assembled separately.
#[derive(Clone, Debug)]
pub struct DerivativeParts {
    /// `J_V` (explicit dependence of the energy on `V`)
    pub objective: DualVector,
    /// `⟨e_V[·], adjoint⟩`
    pub constraint: DualVector,
}

impl DerivativeParts {
    pub fn total(&self) -> DualVector {
        let mut t = self.objective.clone();
        t += &self.constraint;
        t
    }
}

#[derive(Clone, Copy, Debug)]
struct Jet {
    j: f64,
    jx: Vec2,
    jy: f64,
    jyy: f64,
    jyx: Vec2,
    jxx: Mat2,
}

#[derive(Clone, Copy, Debug)]
struct SourceJet {
    f: f64,
    gf: Vec2,
    hf: Mat2,
}

#[derive(Clone, Debug)]
struct QPoint {
    w: f64,
    b: [f64; 3],
    jet: Option<Jet>,
    src: Option<SourceJet>,
}

#[derive(Clone, Debug)]
struct ElemCache {
    e: Element,
    pts: Vec<QPoint>,
}

impl ElemCache {
    fn grad(&self, f: &ScalarField) -> Vec2 {
        self.e.gradient(f.local(self.e.ids))
    }
}

#[inline]
fn at_point(vl: &[Vec2; 3], b: &[f64; 3]) -> Vec2 {
    vl[0] * b[0] + vl[1] * b[1] + vl[2] * b[2]
}

/// Element contribution `W ↦ M : DW + iso div W + Σ_a nodal_a · W_a`.
#[derive(Clone, Copy, Debug, Default)]
struct LocalCovector {
    m: Mat2,
    iso: f64,
    nodal: [Vec2; 3],
}

impl LocalCovector {
    fn at(&mut self, q: &QPoint, v: Vec2) {
        for a in 0..3 {
            self.nodal[a] += v * q.b[a];
        }
    }

    fn scatter(&self, e: &Element, out: &mut [Vec2]) {
        let g = self.m + Mat2::identity() * self.iso;
        for a in 0..3 {
            out[e.ids[a]] += g * e.grads[a] + self.nodal[a];
        }
    }
}

/// Element contribution `φ_i ↦ flux·∇φ_i + nodal_i` to a scalar dual vector.
#[derive(Clone, Copy, Debug, Default)]
struct LocalScalar {
    flux: Vec2,
    nodal: [f64; 3],
}

impl LocalScalar {
    fn at(&mut self, q: &QPoint, v: f64) {
        for a in 0..3 {
            self.nodal[a] += v * q.b[a];
        }
    }
}

/// State, adjoint and cached quadrature data on one mesh; the entry point
/// for all derivative computations.
#[derive(Clone, Debug)]
pub struct ShapeContext<'a> {
    problem: &'a ProblemSpec,
    mesh: &'a Mesh,
    ops: Option<PdeOperators>,
    state: State,
    adjoint: Adjoint,
    cache: Vec<ElemCache>,
    energy: f64,
}

impl<'a> ShapeContext<'a> {
    /// Solves state and adjoint on `mesh`.
    pub fn new(problem: &'a ProblemSpec, mesh: &'a Mesh) -> Result<Self> {
        let solver = Solver::new(problem, mesh)?;
        let state = solver.state()?;
        let adjoint = solver.adjoint(&state)?;
        Self::build(solver, state, adjoint)
    }

    /// Uses a state and adjoint computed elsewhere.
    pub fn with_solution(problem: &'a ProblemSpec, mesh: &'a Mesh, state: State, adjoint: Adjoint) -> Result<Self> {
        let solver = Solver::new(problem, mesh)?;
        Self::build(solver, state, adjoint)
    }

    fn build(solver: Solver<'a>, state: State, adjoint: Adjoint) -> Result<Self> {
        let (problem, mesh) = (solver.problem(), solver.mesh());
        let energy = solver.energy_with(&state, &QuadratureRule::order2());
        let consistent = matches!(
            (&state, &adjoint, problem.kind()),
            (State::NoPde, Adjoint::NoPde, ProblemKind::NoPde)
                | (State::Poisson { .. }, Adjoint::Poisson { .. }, ProblemKind::Poisson)
                | (State::Coupled { .. }, Adjoint::Coupled { .. }, ProblemKind::CoupledPoisson)
                | (State::Eigen { .. }, Adjoint::Eigen { .. }, ProblemKind::Eigenvalue)
        );
        if !consistent {
            return Err(Error::Contract(format!(
                "state/adjoint do not belong to a {} problem",
                problem.kind()
            )));
        }
        let rule = QuadratureRule::order4();
        let tracked = state.tracked();
        let mut cache = Vec::new();
        for t in mesh.omega_triangles() {
            let e = mesh.element(t);
            let ul = tracked.map(|u| u.local(e.ids));
            let pts = rule
                .on(&e)
                .map(|(x, w, b)| {
                    let jet = problem.integrand().map(|j| {
                        let y = ul.map_or(0.0, |u| interp(u, b));
                        Jet {
                            j: j.j(x, y),
                            jx: j.j_x(x, y),
                            jy: j.j_y(x, y),
                            jyy: j.j_yy(x, y),
                            jyx: j.j_yx(x, y),
                            jxx: j.j_xx(x, y),
                        }
                    });
                    let src = problem.source().map(|f| SourceJet {
                        f: f.value(x),
                        gf: f.gradient(x),
                        hf: f.hessian(x),
                    });
                    QPoint { w, b: *b, jet, src }
                })
                .collect();
            cache.push(ElemCache { e, pts });
        }
        Ok(Self {
            problem,
            mesh,
            ops: solver.into_operators(),
            state,
            adjoint,
            cache,
            energy,
        })
    }

    pub fn problem(&self) -> &ProblemSpec {
        self.problem
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn adjoint(&self) -> &Adjoint {
        &self.adjoint
    }

    pub fn operators(&self) -> Option<&PdeOperators> {
        self.ops.as_ref()
    }

    /// Reported energy (order-2 quadrature, or the eigenvalue).
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Energy with the derivative quadrature.
    pub fn transported_energy(&self) -> f64 {
        match &self.state {
            State::Eigen { lambda, .. } => *lambda,
            _ => self
                .cache
                .iter()
                .flat_map(|c| &c.pts)
                .map(|q| q.w * q.jet.map_or(0.0, |j| j.j))
                .sum(),
        }
    }

    pub fn hessian(&self) -> HessianOperator<'_> {
        HessianOperator::new(self)
    }

    fn ops(&self) -> &PdeOperators {
        self.ops.as_ref().expect("PDE operators for PDE kinds")
    }

    fn num_vertices(&self) -> usize {
        self.mesh.num_vertices()
    }

    fn finish(&self, values: Vec<Vec2>) -> DualVector {
        let mut d = DualVector::from_values(values);
        d.apply_dirichlet(self.mesh);
        d
    }

    /// Assembles a covector in `W` from element contributions.
    fn assemble_covector(
        &self,
        v: Option<&VectorField>,
        mut f: impl FnMut(&ElemCache, &Mat2, &[Vec2; 3], &mut LocalCovector),
    ) -> DualVector {
        let mut out = vec![Vec2::zeros(); self.num_vertices()];
        for c in &self.cache {
            let vl = v.map_or([Vec2::zeros(); 3], |v| v.local(c.e.ids));
            let dv = c.e.jacobian(vl);
            let mut l = LocalCovector::default();
            f(c, &dv, &vl, &mut l);
            l.scatter(&c.e, &mut out);
        }
        self.finish(out)
    }

    /// Assembles a dual vector on the `Ω` degrees of freedom.
    fn assemble_scalar(
        &self,
        v: &VectorField,
        mut f: impl FnMut(&ElemCache, &Mat2, &[Vec2; 3], &mut LocalScalar),
    ) -> Vec<f64> {
        let space = &self.ops().space;
        let mut out = vec![0.0; space.num_dofs()];
        for c in &self.cache {
            let vl = v.local(c.e.ids);
            let dv = c.e.jacobian(vl);
            let mut l = LocalScalar::default();
            f(c, &dv, &vl, &mut l);
            for a in 0..3 {
                if let Some(i) = space.dof(c.e.ids[a]) {
                    out[i] += l.flux.dot(&c.e.grads[a]) + l.nodal[a];
                }
            }
        }
        out
    }

    /// `J_V`
    fn add_objective(c: &ElemCache, l: &mut LocalCovector) {
        for q in &c.pts {
            if let Some(jet) = q.jet {
                l.iso += q.w * jet.j;
                l.at(q, jet.jx * q.w);
            }
        }
    }

    /// `W ↦ −∫ g (F div W + ∇F·W)` scaled by `sign`.
    fn add_source(c: &ElemCache, g: &ScalarField, sign: f64, l: &mut LocalCovector) {
        let gl = g.local(c.e.ids);
        for q in &c.pts {
            let src = q.src.expect("source data");
            let gq = sign * q.w * interp(gl, &q.b);
            l.iso -= gq * src.f;
            l.at(q, src.gf * -gq);
        }
    }

    /// `W ↦ ∫ u v div W` scaled by `sign`.
    fn add_mass(c: &ElemCache, u: &ScalarField, v: &ScalarField, sign: f64, l: &mut LocalCovector) {
        let (ul, vl) = (u.local(c.e.ids), v.local(c.e.ids));
        for q in &c.pts {
            l.iso += sign * q.w * interp(ul, &q.b) * interp(vl, &q.b);
        }
    }

    /// `W ↦ ∫ 𝒜[W]∇u·∇v` scaled by `sign`.
    fn add_stiffness(c: &ElemCache, u: &ScalarField, v: &ScalarField, sign: f64, l: &mut LocalCovector) {
        l.m += cal_a_coefficient(&c.grad(u), &c.grad(v)) * (sign * c.e.area);
    }

    /// Shape derivative covector `dJ`, with `dJ(W) = J_V[W] + ⟨e_V[W], p⟩`.
    pub fn first_derivative(&self) -> DualVector {
        self.assemble_covector(None, |c, _, _, l| {
            Self::add_objective(c, l);
            match (&self.state, &self.adjoint) {
                (State::Poisson { y }, Adjoint::Poisson { p }) => {
                    Self::add_stiffness(c, y, p, 1.0, l);
                    Self::add_source(c, p, 1.0, l);
                }
                (State::Coupled { y1, y2 }, Adjoint::Coupled { p1, p2 }) => {
                    Self::add_stiffness(c, y1, p2, 1.0, l);
                    Self::add_mass(c, y2, p2, -1.0, l);
                    Self::add_stiffness(c, y2, p1, 1.0, l);
                    Self::add_source(c, p1, 1.0, l);
                }
                (State::Eigen { z, lambda, .. }, Adjoint::Eigen { q, mu }) => {
                    Self::add_stiffness(c, z, q, 1.0, l);
                    Self::add_mass(c, z, q, -lambda, l);
                    Self::add_mass(c, z, z, -mu, l);
                }
                _ => {}
            }
        })
    }

    /// The same covector assembled by probing each nodal basis field
    /// `e_k φ_a` through the matrix forms, with `J_V` and the constraint
    /// term kept apart.
    pub fn first_derivative_parts(&self) -> DerivativeParts {
        let n = self.num_vertices();
        let mut objective = vec![Vec2::zeros(); n];
        let mut constraint = vec![Vec2::zeros(); n];
        let rule = QuadratureRule::order4();
        let j = self.problem.integrand();
        let f = self.problem.source();
        let u = self.state.tracked();
        for t in self.mesh.omega_triangles() {
            let e = self.mesh.element(t);
            let grad = |s: &ScalarField| e.gradient(s.local(e.ids));
            let val = |s: &ScalarField, b: &[f64; 3]| interp(s.local(e.ids), b);
            for a in 0..3 {
                for k in 0..2 {
                    let mut dir = Vec2::zeros();
                    dir[k] = 1.0;
                    let dw = dir * e.grads[a].transpose();
                    let div = dw.trace();
                    let stiff = |x: &ScalarField, y: &ScalarField| e.area * (cal_a(&dw) * grad(y)).dot(&grad(x));
                    let mut obj = 0.0;
                    let mut con = 0.0;
                    for (x, w, b) in rule.on(&e) {
                        let wq = dir * b[a];
                        if let Some(j) = j {
                            let y = u.map_or(0.0, |u| val(u, b));
                            obj += w * (j.j(x, y) * div + j.j_x(x, y).dot(&wq));
                        }
                        let load = |g: &ScalarField| {
                            let f = f.expect("source data");
                            w * val(g, b) * (f.value(x) * div + f.gradient(x).dot(&wq))
                        };
                        match (&self.state, &self.adjoint) {
                            (State::Poisson { .. }, Adjoint::Poisson { p }) => con -= load(p),
                            (State::Coupled { y2, .. }, Adjoint::Coupled { p1, p2 }) => {
                                con -= w * div * val(y2, b) * val(p2, b) + load(p1);
                            }
                            (State::Eigen { z, lambda, .. }, Adjoint::Eigen { q, mu }) => {
                                con -= w * div * (lambda * val(z, b) * val(q, b) + mu * val(z, b).powi(2));
                            }
                            _ => {}
                        }
                    }
                    con += match (&self.state, &self.adjoint) {
                        (State::Poisson { y }, Adjoint::Poisson { p }) => stiff(y, p),
                        (State::Coupled { y1, y2 }, Adjoint::Coupled { p1, p2 }) => stiff(y1, p2) + stiff(y2, p1),
                        (State::Eigen { z, .. }, Adjoint::Eigen { q, .. }) => stiff(z, q),
                        _ => 0.0,
                    };
                    objective[e.ids[a]][k] += obj;
                    constraint[e.ids[a]][k] += con;
                }
            }
        }
        DerivativeParts {
            objective: self.finish(objective),
            constraint: self.finish(constraint),
        }
    }

    /// `(∫ 𝒜[V]∇u·∇φ_i − ∫ (F div V + ∇F·V) φ_i)_i`, the derivative of `K u − b`.
    fn source_residual(&self, v: &VectorField, u: &ScalarField) -> Vec<f64> {
        self.assemble_scalar(v, |c, dv, vl, l| {
            l.flux += cal_a(dv) * c.grad(u) * c.e.area;
            let div = dv.trace();
            for q in &c.pts {
                let src = q.src.expect("source data");
                l.at(q, -q.w * (src.f * div + src.gf.dot(&at_point(vl, &q.b))));
            }
        })
    }

    /// `(∫ 𝒜[V]∇u·∇φ_i − c ∫ div V w φ_i)_i`, the derivative of `(K u − c M w)`.
    fn pencil_residual(&self, v: &VectorField, u: &ScalarField, c_mass: f64, w: &ScalarField) -> Vec<f64> {
        self.assemble_scalar(v, |c, dv, _, l| {
            l.flux += cal_a(dv) * c.grad(u) * c.e.area;
            let div = dv.trace();
            let wl = w.local(c.e.ids);
            for q in &c.pts {
                l.at(q, -c_mass * q.w * div * interp(wl, &q.b));
            }
        })
    }

    /// `∫ div V u v`
    fn mass_derivative(&self, v: &VectorField, u: &ScalarField, w: &ScalarField) -> f64 {
        self.cache
            .iter()
            .map(|c| {
                let div = c.e.jacobian(v.local(c.e.ids)).trace();
                let (ul, wl) = (u.local(c.e.ids), w.local(c.e.ids));
                c.pts.iter().map(|q| q.w * div * interp(ul, &q.b) * interp(wl, &q.b)).sum::<f64>()
            })
            .sum()
    }

    fn eigen_data(&self) -> (Vec<f64>, Vec<f64>, f64, f64) {
        let State::Eigen { z, lambda, gap_ratio } = &self.state else {
            unreachable!("eigen data requested for a non-eigen state")
        };
        let ops = self.ops();
        let zc = ops.coeffs(z);
        let mz = ops.mass.mul_vec(&zc);
        (zc, mz, *lambda, *gap_ratio)
    }

    /// Solves `(K − λM) x = r` on the `M`-orthogonal complement of `z`,
    /// preconditioned by the stiffness factor.
    fn deflated_solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let ops = self.ops();
        let (zc, mz, lambda, gap) = self.eigen_data();
        let proj = |v: &mut [f64]| {
            let s = crate::problems::dot(&mz, v);
            v.iter_mut().zip(&zc).for_each(|(x, z)| *x -= s * z);
        };
        let proj_t = |v: &mut [f64]| {
            let s = crate::problems::dot(&zc, v);
            v.iter_mut().zip(&mz).for_each(|(x, m)| *x -= s * m);
        };
        let mut b = rhs.to_vec();
        proj_t(&mut b);
        let n = b.len();
        let mut tmp = vec![0.0; n];
        let mut mtmp = vec![0.0; n];
        let apply = |v: &[f64], out: &mut [f64]| {
            tmp.copy_from_slice(v);
            proj(&mut tmp);
            ops.stiffness.mul_vec_into(&tmp, out);
            ops.mass.mul_vec_into(&tmp, &mut mtmp);
            out.iter_mut().zip(&mtmp).for_each(|(o, m)| *o -= lambda * m);
            proj_t(out);
        };
        let precond = |r: &[f64], out: &mut [f64]| {
            let mut rr = r.to_vec();
            proj_t(&mut rr);
            out.copy_from_slice(&ops.chol.solve(&rr));
            proj(out);
        };
        let mut x = vec![0.0; n];
        let outcome = pcg(apply, precond, &b, &mut x, DEFLATED_TOL, DEFLATED_MAX_ITER);
        if !outcome.converged {
            return Err(Error::Multiplicity { gap });
        }
        proj(&mut x);
        Ok(x)
    }

    /// State derivative in direction `V`.
    pub fn sensitivity(&self, v: &VectorField) -> Result<Sensitivity> {
        let neg = |x: Vec<f64>| x.into_iter().map(|v| -v).collect::<Vec<_>>();
        match &self.state {
            State::NoPde => Ok(Sensitivity::NoPde),
            State::Poisson { y } => {
                let ops = self.ops();
                let s = ops.solve(&neg(self.source_residual(v, y)))?;
                Ok(Sensitivity::Poisson { s: ops.field(&s) })
            }
            State::Coupled { y1, y2 } => {
                let ops = self.ops();
                let s2 = ops.solve(&neg(self.source_residual(v, y2)))?;
                let r = self.pencil_residual(v, y1, 1.0, y2);
                let mut rhs = ops.mass.mul_vec(&s2);
                rhs.iter_mut().zip(&r).for_each(|(a, b)| *a -= b);
                let s1 = ops.solve(&rhs)?;
                Ok(Sensitivity::Coupled {
                    s1: ops.field(&s1),
                    s2: ops.field(&s2),
                })
            }
            State::Eigen { z, lambda, .. } => {
                let ops = self.ops();
                let (zc, mz, _, _) = self.eigen_data();
                let t = self.pencil_residual(v, z, *lambda, z);
                let sigma = crate::problems::dot(&zc, &t);
                let rhs: Vec<f64> = t.iter().zip(&mz).map(|(t, m)| -t + sigma * m).collect();
                let mut s = self.deflated_solve(&rhs)?;
                let c = -0.5 * self.mass_derivative(v, z, z);
                s.iter_mut().zip(&zc).for_each(|(s, z)| *s += c * z);
                Ok(Sensitivity::Eigen {
                    s: ops.field(&s),
                    dlambda: sigma,
                })
            }
        }
    }
}

/// `dJ` for a state and adjoint computed elsewhere.
pub fn first_derivative(problem: &ProblemSpec, mesh: &Mesh, state: &State, adjoint: &Adjoint) -> Result<DualVector> {
    Ok(ShapeContext::with_solution(problem, mesh, state.clone(), adjoint.clone())?.first_derivative())
}

pub fn sensitivity(problem: &ProblemSpec, mesh: &Mesh, state: &State, v: &VectorField) -> Result<Sensitivity> {
    let solver = Solver::new(problem, mesh)?;
    let adjoint = solver.adjoint(state)?;
    ShapeContext::build(solver, state.clone(), adjoint)?.sensitivity(v)
}

#[cfg(test)]
mod tests;
