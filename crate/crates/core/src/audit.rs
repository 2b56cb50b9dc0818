//! Finite-difference consistency checks of the shape derivatives against
//! the transported energy on deformed meshes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fem::VectorField;
use crate::mesh::Mesh;
use crate::problems::{transported_energy, ProblemSpec};
use crate::shape::ShapeContext;
use crate::{Error, Result, Vec2};

pub const DERIVATIVE_STEPS: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];
pub const TAYLOR_STEPS: [f64; 4] = [1e-2, 5e-3, 2.5e-3, 1.25e-3];

pub const MIN_DERIVATIVE_ORDER: f64 = 1.9;
pub const MIN_TAYLOR_ORDER: f64 = 2.9;
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Smooth random field vanishing on the boundary of the box `(−h, h)²`
/// enclosing the mesh: a few random Fourier modes times a bubble.
pub fn random_field(mesh: &Mesh, rng: &mut impl Rng) -> VectorField {
    let h = mesh.vertices().iter().map(|x| x.x.abs().max(x.y.abs())).fold(0.0, f64::max);
    let modes: Vec<(Vec2, f64, Vec2)> = (0..4)
        .map(|_| {
            let k = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let amp = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            (k, phase, amp)
        })
        .collect();
    VectorField::from_fn(mesh, |x| {
        let bubble = (1.0 - (x.x / h).powi(2)) * (1.0 - (x.y / h).powi(2));
        let mut v = Vec2::zeros();
        for (k, phase, amp) in &modes {
            v += amp * (k.dot(&x) + phase).sin();
        }
        v * (0.25 * bubble)
    })
}

/// Transported energy on `(id + t V)(mesh)`.
pub fn energy_along(problem: &ProblemSpec, mesh: &Mesh, v: &VectorField, t: f64) -> Result<f64> {
    let (m, report) = mesh.deform(v, t);
    if !report.valid {
        return Err(Error::InvalidMesh(format!("audit step {t:e} inverts a triangle")));
    }
    transported_energy(problem, &m)
}

/// Least-squares slope of `log err` against `log step`, over the points
/// not dominated by rounding in the energy differences.
pub fn observed_order(steps: &[f64], errors: &[f64], floor: impl Fn(f64) -> f64) -> f64 {
    let pts: Vec<(f64, f64)> = steps
        .iter()
        .zip(errors)
        .filter(|(&h, &e)| e > 0.0 && e > 10.0 * floor(h))
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        // nothing measurable above rounding: the difference quotient is exact
        return f64::INFINITY;
    }
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Debug)]
pub struct DerivativeAudit {
    pub derivative: f64,
    pub steps: Vec<f64>,
    /// `|(J(εV) − J(−εV)) / 2ε − J'[V]|`
    pub errors: Vec<f64>,
    pub order: f64,
}

impl DerivativeAudit {
    pub fn passed(&self) -> bool {
        self.order >= MIN_DERIVATIVE_ORDER
    }
}

pub fn derivative_audit(problem: &ProblemSpec, mesh: &Mesh, v: &VectorField, steps: &[f64]) -> Result<DerivativeAudit> {
    let ctx = ShapeContext::new(problem, mesh)?;
    let derivative = ctx.first_derivative().pair(v);
    let j0 = ctx.transported_energy();
    let mut errors = Vec::with_capacity(steps.len());
    for &h in steps {
        let fd = (energy_along(problem, mesh, v, h)? - energy_along(problem, mesh, v, -h)?) / (2.0 * h);
        errors.push((fd - derivative).abs());
    }
    let scale = j0.abs().max(derivative.abs()).max(1e-300);
    let order = observed_order(steps, &errors, |h| 1e2 * f64::EPSILON * scale / h);
    Ok(DerivativeAudit {
        derivative,
        steps: steps.to_vec(),
        errors,
        order,
    })
}

#[derive(Clone, Debug)]
pub struct SymmetryAudit {
    pub pairs: usize,
    /// Largest `|B(V,W) − B(W,V)| / (|B(V,V)| + |B(W,W)|)`.
    pub worst: f64,
}

impl SymmetryAudit {
    pub fn passed(&self) -> bool {
        self.worst <= SYMMETRY_TOL
    }
}

pub fn hessian_symmetry(problem: &ProblemSpec, mesh: &Mesh, pairs: usize, seed: u64) -> Result<SymmetryAudit> {
    let ctx = ShapeContext::new(problem, mesh)?;
    let hess = ctx.hessian();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let v = random_field(mesh, &mut rng);
        let w = random_field(mesh, &mut rng);
        let hv = hess.apply(&v)?;
        let hw = hess.apply(&w)?;
        let scale = hv.pair(&v).abs() + hw.pair(&w).abs();
        let diff = (hv.pair(&w) - hw.pair(&v)).abs();
        worst = worst.max(if scale > 0.0 { diff / scale } else { diff });
    }
    Ok(SymmetryAudit { pairs, worst })
}

#[derive(Clone, Debug)]
pub struct TaylorAudit {
    pub steps: Vec<f64>,
    /// `|J(tV) − J − t J'[V] − t²/2 J''[V,V]|`
    pub remainders: Vec<f64>,
    pub order: f64,
}

impl TaylorAudit {
    pub fn passed(&self) -> bool {
        self.order >= MIN_TAYLOR_ORDER
    }
}

pub fn taylor_audit(problem: &ProblemSpec, mesh: &Mesh, v: &VectorField, steps: &[f64]) -> Result<TaylorAudit> {
    let ctx = ShapeContext::new(problem, mesh)?;
    let j0 = ctx.transported_energy();
    let d1 = ctx.first_derivative().pair(v);
    let d2 = ctx.hessian().bilin(v, v)?;
    let mut remainders = Vec::with_capacity(steps.len());
    for &t in steps {
        let j = energy_along(problem, mesh, v, t)?;
        remainders.push((j - j0 - t * d1 - 0.5 * t * t * d2).abs());
    }
    let scale = j0.abs().max(1e-300);
    let order = observed_order(steps, &remainders, |_| 1e2 * f64::EPSILON * scale);
    Ok(TaylorAudit {
        steps: steps.to_vec(),
        remainders,
        order,
    })
}

/// All audits of one preset on its initial mesh.
#[derive(Clone, Debug)]
pub struct CheckReport {
    pub experiment: String,
    pub derivative: DerivativeAudit,
    pub symmetry: SymmetryAudit,
    pub taylor: TaylorAudit,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.derivative.passed() && self.symmetry.passed() && self.taylor.passed()
    }

    /// One `PASS`/`FAIL` line per audit.
    pub fn lines(&self) -> Vec<String> {
        let tag = |ok: bool| if ok { "PASS" } else { "FAIL" };
        vec![
            format!(
                "{} {}: first derivative order {:.3} (>= {MIN_DERIVATIVE_ORDER})",
                tag(self.derivative.passed()),
                self.experiment,
                self.derivative.order
            ),
            format!(
                "{} {}: Hessian asymmetry {:.3e} over {} pairs (<= {SYMMETRY_TOL:e})",
                tag(self.symmetry.passed()),
                self.experiment,
                self.symmetry.worst,
                self.symmetry.pairs
            ),
            format!(
                "{} {}: Taylor remainder order {:.3} (>= {MIN_TAYLOR_ORDER})",
                tag(self.taylor.passed()),
                self.experiment,
                self.taylor.order
            ),
        ]
    }
}

pub fn check_experiment(name: &str, n: usize, seed: u64) -> Result<CheckReport> {
    let e = crate::problems::experiment(name)?;
    let mesh = e.initial_mesh(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = random_field(&mesh, &mut rng);
    Ok(CheckReport {
        experiment: e.name.to_string(),
        derivative: derivative_audit(&e.problem, &mesh, &v, &DERIVATIVE_STEPS)?,
        symmetry: hessian_symmetry(&e.problem, &mesh, 20, rng.gen())?,
        taylor: taylor_audit(&e.problem, &mesh, &v, &TAYLOR_STEPS)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::experiment;

    #[test]
    fn observed_order_of_exact_powers() {
        let steps = [1e-1, 1e-2, 1e-3];
        let errs: Vec<f64> = steps.iter().map(|h: &f64| 3.0 * h.powi(2)).collect();
        assert!((observed_order(&steps, &errs, |_| 0.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rounding_dominated_points_are_ignored() {
        let steps = [1e-1, 1e-2, 1e-3, 1e-4];
        let errs = [1e-2, 1e-4, 1e-6, 1e-6];
        let order = observed_order(&steps, &errs, |h| 1e-9 / h);
        assert!((order - 2.0).abs() < 1e-12);
    }

    #[test]
    fn random_fields_vanish_on_the_box() {
        let m = experiment("poisson1").unwrap().initial_mesh(4).unwrap();
        let v = random_field(&m, &mut ChaCha8Rng::seed_from_u64(3));
        for i in m.dirichlet_d() {
            assert!(v.values()[i].norm() < 1e-15);
        }
    }

    #[test]
    fn central_differences_have_second_order() {
        let e = experiment("poisson1").unwrap();
        let m = e.initial_mesh(4).unwrap();
        let v = random_field(&m, &mut ChaCha8Rng::seed_from_u64(1));
        let a = derivative_audit(&e.problem, &m, &v, &DERIVATIVE_STEPS).unwrap();
        assert!(a.passed(), "{a:?}");
    }
}
