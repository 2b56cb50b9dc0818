//! Problem definitions, state and adjoint solves, and energies.

pub mod functions;
mod presets;

use std::fmt;
use std::sync::Arc;

pub use functions::{Integrand, SourceData};
pub use presets::{builtin_experiments, experiment, hold_all, Experiment, InitialDomain, EXPERIMENT_NAMES};

use crate::fem::{
    assemble_load, assemble_mass, assemble_stiffness, assemble_vector, integrate, smallest_eigenpair_with, solve_with,
    Cholesky, FeSpace, QuadratureRule, ScalarField, SparseMatrix, Support,
};
use crate::mesh::Mesh;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    NoPde,
    Poisson,
    CoupledPoisson,
    Eigenvalue,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProblemKind::NoPde => "no-pde",
            ProblemKind::Poisson => "poisson",
            ProblemKind::CoupledPoisson => "coupled-poisson",
            ProblemKind::Eigenvalue => "eigenvalue",
        };
        f.write_str(s)
    }
}

/// Energy and constraint of a shape optimisation problem.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    kind: ProblemKind,
    integrand: Option<Arc<dyn Integrand>>,
    source: Option<Arc<dyn SourceData>>,
    area_target: Option<f64>,
}

impl ProblemSpec {
    /// `∫_Ω j(x)` without a state equation.
    pub fn no_pde(j: impl Integrand + 'static) -> Self {
        Self {
            kind: ProblemKind::NoPde,
            integrand: Some(Arc::new(j)),
            source: None,
            area_target: None,
        }
    }

    /// `∫_Ω j(x, y)` with `−Δy = F`, `y = 0` on `∂Ω`.
    pub fn poisson(j: impl Integrand + 'static, f: impl SourceData + 'static) -> Self {
        Self {
            kind: ProblemKind::Poisson,
            integrand: Some(Arc::new(j)),
            source: Some(Arc::new(f)),
            area_target: None,
        }
    }

    /// `∫_Ω j(x, y₁)` with `−Δy₂ = F`, `−Δy₁ = y₂`, both zero on `∂Ω`.
    pub fn coupled(j: impl Integrand + 'static, f: impl SourceData + 'static) -> Self {
        Self {
            kind: ProblemKind::CoupledPoisson,
            integrand: Some(Arc::new(j)),
            source: Some(Arc::new(f)),
            area_target: None,
        }
    }

    /// First Dirichlet eigenvalue of the Laplacian on `Ω`.
    pub fn eigenvalue() -> Self {
        Self {
            kind: ProblemKind::Eigenvalue,
            integrand: None,
            source: None,
            area_target: None,
        }
    }

    pub fn with_area_constraint(mut self, target: f64) -> Self {
        self.area_target = Some(target);
        self
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn area_target(&self) -> Option<f64> {
        self.area_target
    }

    pub fn is_area_constrained(&self) -> bool {
        self.area_target.is_some()
    }

    pub fn integrand(&self) -> Option<&dyn Integrand> {
        self.integrand.as_deref()
    }

    pub fn source(&self) -> Option<&dyn SourceData> {
        self.source.as_deref()
    }

    pub(crate) fn j(&self) -> &dyn Integrand {
        self.integrand.as_deref().expect("integrand present for this kind")
    }

    pub(crate) fn f(&self) -> &dyn SourceData {
        self.source.as_deref().expect("source present for this kind")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum State {
    NoPde,
    Poisson { y: ScalarField },
    Coupled { y1: ScalarField, y2: ScalarField },
    Eigen { z: ScalarField, lambda: f64, gap_ratio: f64 },
}

impl State {
    /// The scalar the integrand sees: `y`, `y₁`, or none.
    pub fn tracked(&self) -> Option<&ScalarField> {
        match self {
            State::Poisson { y } => Some(y),
            State::Coupled { y1, .. } => Some(y1),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Adjoint {
    NoPde,
    Poisson { p: ScalarField },
    Coupled { p1: ScalarField, p2: ScalarField },
    Eigen { q: ScalarField, mu: f64 },
}

/// Stiffness and mass matrices on `Ω` with a factor of the stiffness.
#[derive(Clone, Debug)]
pub struct PdeOperators {
    pub space: FeSpace,
    pub stiffness: SparseMatrix,
    pub mass: SparseMatrix,
    pub chol: Cholesky,
}

impl PdeOperators {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let space = FeSpace::new(mesh, Support::Omega);
        if space.num_dofs() == 0 {
            return Err(Error::Contract("Ω has no interior vertex".into()));
        }
        let stiffness = assemble_stiffness(mesh, &space)?;
        let mass = assemble_mass(mesh, &space)?;
        let chol = Cholesky::factor(&stiffness)?;
        Ok(Self {
            space,
            stiffness,
            mass,
            chol,
        })
    }

    /// `K x = b`
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        solve_with(&self.chol, &self.stiffness, b)
    }

    pub fn coeffs(&self, f: &ScalarField) -> Vec<f64> {
        self.space.gather(f)
    }

    pub fn field(&self, c: &[f64]) -> ScalarField {
        self.space.scatter(c)
    }
}

#[inline]
pub(crate) fn interp(vals: [f64; 3], b: &[f64; 3]) -> f64 {
    vals[0] * b[0] + vals[1] * b[1] + vals[2] * b[2]
}

/// Reusable solver for one problem on one mesh.
#[derive(Clone, Debug)]
pub struct Solver<'a> {
    problem: &'a ProblemSpec,
    mesh: &'a Mesh,
    ops: Option<PdeOperators>,
}

impl<'a> Solver<'a> {
    pub fn new(problem: &'a ProblemSpec, mesh: &'a Mesh) -> Result<Self> {
        if mesh.omega_triangles().is_empty() {
            return Err(Error::Contract("Ω is empty".into()));
        }
        let ops = match problem.kind() {
            ProblemKind::NoPde => None,
            _ => Some(PdeOperators::new(mesh)?),
        };
        Ok(Self { problem, mesh, ops })
    }

    pub fn problem(&self) -> &'a ProblemSpec {
        self.problem
    }

    pub fn mesh(&self) -> &'a Mesh {
        self.mesh
    }

    pub fn operators(&self) -> Option<&PdeOperators> {
        self.ops.as_ref()
    }

    pub fn into_operators(self) -> Option<PdeOperators> {
        self.ops
    }

    fn ops(&self) -> &PdeOperators {
        self.ops.as_ref().expect("PDE operators for PDE kinds")
    }

    /// `(∫ F φ_i)_i` with the derivative quadrature.
    pub fn load(&self) -> Vec<f64> {
        let f = self.problem.f();
        assemble_load(self.mesh, &self.ops().space, &QuadratureRule::order4(), |x| f.value(x))
    }

    /// `(∫ j_y(x, y) φ_i)_i`
    pub fn state_load(&self, y: &ScalarField) -> Vec<f64> {
        let j = self.problem.j();
        assemble_vector(self.mesh, &self.ops().space, &QuadratureRule::order4(), |_, e, x, b| {
            j.j_y(x, interp(y.local(e.ids), b))
        })
    }

    pub fn state(&self) -> Result<State> {
        match self.problem.kind() {
            ProblemKind::NoPde => Ok(State::NoPde),
            ProblemKind::Poisson => {
                let ops = self.ops();
                let y = ops.solve(&self.load())?;
                Ok(State::Poisson { y: ops.field(&y) })
            }
            ProblemKind::CoupledPoisson => {
                let ops = self.ops();
                let y2 = ops.solve(&self.load())?;
                let y1 = ops.solve(&ops.mass.mul_vec(&y2))?;
                Ok(State::Coupled {
                    y1: ops.field(&y1),
                    y2: ops.field(&y2),
                })
            }
            ProblemKind::Eigenvalue => {
                let ops = self.ops();
                let pair = smallest_eigenpair_with(&ops.stiffness, &ops.chol, &ops.mass)?;
                Ok(State::Eigen {
                    z: ops.field(&pair.z),
                    lambda: pair.lambda,
                    gap_ratio: pair.gap_ratio,
                })
            }
        }
    }

    pub fn adjoint(&self, state: &State) -> Result<Adjoint> {
        match (self.problem.kind(), state) {
            (ProblemKind::NoPde, State::NoPde) => Ok(Adjoint::NoPde),
            (ProblemKind::Poisson, State::Poisson { y }) => {
                let ops = self.ops();
                let rhs: Vec<f64> = self.state_load(y).iter().map(|v| -v).collect();
                Ok(Adjoint::Poisson {
                    p: ops.field(&ops.solve(&rhs)?),
                })
            }
            (ProblemKind::CoupledPoisson, State::Coupled { y1, .. }) => {
                let ops = self.ops();
                let rhs: Vec<f64> = self.state_load(y1).iter().map(|v| -v).collect();
                let p2 = ops.solve(&rhs)?;
                let p1 = ops.solve(&ops.mass.mul_vec(&p2))?;
                Ok(Adjoint::Coupled {
                    p1: ops.field(&p1),
                    p2: ops.field(&p2),
                })
            }
            (ProblemKind::Eigenvalue, State::Eigen { z, lambda, .. }) => {
                let ops = self.ops();
                let zc = ops.coeffs(z);
                // (K − λM) q − 2μ M z = 0 and zᵀ M q = 1 at (q, μ) = (z, 0)
                let kz = ops.stiffness.mul_vec(&zc);
                let mz = ops.mass.mul_vec(&zc);
                let r: Vec<f64> = kz.iter().zip(&mz).map(|(a, b)| a - lambda * b).collect();
                let rel = norm(&r) / norm(&kz);
                let normalisation = (1.0 - dot(&zc, &mz)).abs();
                if rel > 1e-8 || normalisation > 1e-8 {
                    return Err(Error::Contract(format!(
                        "eigen adjoint relation violated: residual {rel:e}, normalisation {normalisation:e}"
                    )));
                }
                Ok(Adjoint::Eigen { q: z.clone(), mu: 0.0 })
            }
            (kind, _) => Err(Error::Contract(format!("state does not belong to a {kind} problem"))),
        }
    }

    /// Energy of a solved state with the given quadrature rule.
    pub fn energy_with(&self, state: &State, rule: &QuadratureRule) -> f64 {
        match state {
            State::Eigen { lambda, .. } => *lambda,
            State::NoPde => {
                let j = self.problem.j();
                integrate(self.mesh, rule, Support::Omega, |_, x, _| j.j(x, 0.0))
            }
            State::Poisson { y } | State::Coupled { y1: y, .. } => {
                let j = self.problem.j();
                let tris = self.mesh.triangles();
                integrate(self.mesh, rule, Support::Omega, |t, x, b| j.j(x, interp(y.local(tris[t]), b)))
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn solve_state(problem: &ProblemSpec, mesh: &Mesh) -> Result<State> {
    Solver::new(problem, mesh)?.state()
}

pub fn solve_adjoint(problem: &ProblemSpec, mesh: &Mesh, state: &State) -> Result<Adjoint> {
    Solver::new(problem, mesh)?.adjoint(state)
}

/// Reported energy: order-2 quadrature, or the eigenvalue.
pub fn energy(problem: &ProblemSpec, mesh: &Mesh, state: &State) -> Result<f64> {
    Ok(Solver::new(problem, mesh)?.energy_with(state, &QuadratureRule::order2()))
}

/// Solves the state on `mesh` and returns the energy evaluated with the
/// derivative quadrature; this is the functional whose derivatives the
/// shape module computes.
pub fn transported_energy(problem: &ProblemSpec, mesh: &Mesh) -> Result<f64> {
    let s = Solver::new(problem, mesh)?;
    let state = s.state()?;
    Ok(s.energy_with(&state, &QuadratureRule::order4()))
}

/// Solves the state and returns the reported energy.
pub fn evaluate(problem: &ProblemSpec, mesh: &Mesh) -> Result<f64> {
    let s = Solver::new(problem, mesh)?;
    let state = s.state()?;
    Ok(s.energy_with(&state, &QuadratureRule::order2()))
}

#[cfg(test)]
mod tests {
    use super::functions::*;
    use super::*;
    use crate::mesh::{box_with_rectangle, Rect};
    use std::f64::consts::PI;

    fn square(n: usize) -> Mesh {
        box_with_rectangle(Rect::square(2.0), Rect::square(1.0), n).unwrap()
    }

    #[test]
    fn zero_source_gives_zero_state() {
        let m = square(4);
        let p = ProblemSpec::poisson(StateValue, Constant(0.0));
        let State::Poisson { y } = solve_state(&p, &m).unwrap() else { panic!() };
        assert!(y.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn state_independent_integrand_has_zero_adjoint() {
        let m = square(4);
        let p = ProblemSpec::poisson(CosinePlateau, Constant(1.0));
        let s = solve_state(&p, &m).unwrap();
        let Adjoint::Poisson { p: adj } = solve_adjoint(&p, &m, &s).unwrap() else { panic!() };
        assert!(adj.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_integrand_adjoint_solves_negative_unit_load() {
        let m = square(4);
        let p = ProblemSpec::poisson(StateValue, KidneySource);
        let solver = Solver::new(&p, &m).unwrap();
        let s = solver.state().unwrap();
        let Adjoint::Poisson { p: adj } = solver.adjoint(&s).unwrap() else { panic!() };
        let ops = solver.operators().unwrap();
        let unit = assemble_load(&m, &ops.space, &QuadratureRule::order4(), |_| 1.0);
        let k_adj = ops.stiffness.mul_vec(&ops.coeffs(&adj));
        for (a, b) in k_adj.iter().zip(&unit) {
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn coupled_state_is_poisson_applied_twice() {
        let m = square(4);
        let f = BiharmonicOfBump;
        let coupled = ProblemSpec::coupled(Tracking::new(Bump { offset: 0.05 }), f);
        let State::Coupled { y1, y2 } = solve_state(&coupled, &m).unwrap() else { panic!() };
        let State::Poisson { y } = solve_state(&ProblemSpec::poisson(StateValue, f), &m).unwrap() else { panic!() };
        assert_eq!(y, y2);
        let ops = PdeOperators::new(&m).unwrap();
        let again = ops.solve(&ops.mass.mul_vec(&ops.coeffs(&y))).unwrap();
        assert_eq!(ops.field(&again), y1);
    }

    #[test]
    fn coupled_adjoint_ordering() {
        let m = square(4);
        let p = ProblemSpec::coupled(Tracking::new(Bump { offset: 0.05 }), BiharmonicOfBump);
        let solver = Solver::new(&p, &m).unwrap();
        let s = solver.state().unwrap();
        let Adjoint::Coupled { p1, p2 } = solver.adjoint(&s).unwrap() else { panic!() };
        let ops = solver.operators().unwrap();
        let lhs = ops.stiffness.mul_vec(&ops.coeffs(&p1));
        let rhs = ops.mass.mul_vec(&ops.coeffs(&p2));
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn eigen_adjoint_is_the_eigenfunction() {
        let m = square(4);
        let p = ProblemSpec::eigenvalue();
        let s = solve_state(&p, &m).unwrap();
        let State::Eigen { z, lambda, .. } = &s else { panic!() };
        assert_eq!(energy(&p, &m, &s).unwrap(), *lambda);
        let Adjoint::Eigen { q, mu } = solve_adjoint(&p, &m, &s).unwrap() else { panic!() };
        assert_eq!(&q, z);
        assert_eq!(mu, 0.0);
    }

    #[test]
    fn nopde1_energy_on_the_square() {
        let p = experiment("nopde1").unwrap().problem;
        let e = evaluate(&p, &square(16)).unwrap();
        let target = -16.0 / (PI * PI);
        assert!((e - target).abs() < 1e-3 * target.abs(), "{e}");
    }

    #[test]
    fn poisson2_energy_on_disk_approaches_target() {
        let exp = experiment("poisson2").unwrap();
        let r = 2.0 / PI.sqrt();
        let disk = crate::mesh::box_with_disk(hold_all(), crate::Vec2::zeros(), r, 16).unwrap();
        let e = evaluate(&exp.problem, &disk).unwrap();
        let target = 6.0 / (PI * PI);
        assert!((e - target).abs() < 0.05 * target, "{e} vs {target}");
    }

    #[test]
    fn kind_mismatch_is_a_contract_error() {
        let m = square(2);
        let p = ProblemSpec::eigenvalue();
        assert!(matches!(solve_adjoint(&p, &m, &State::NoPde), Err(Error::Contract(_))));
    }
}
