//! ADMM for `min ⟨grad, V⟩ + t/2 B[V,V]` subject to `|DV| ≤ 1` per element.

use std::fmt::Write as _;
use std::path::Path;

use super::ops::{flatten, unflatten, FieldOps};
use super::plaplace::{normalise, p2_raw};
use super::{directional_value, DirectionRequest, QuadraticForm};
use crate::fem::krylov::pcg;
use crate::fem::{DualVector, VectorField};
use crate::mat2::{project_spectral_ball, Mat2};
use crate::{Error, Result};

/// Growth of the V-step Krylov residual read as loss of definiteness.
const BREAKDOWN_GROWTH: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmmOptions {
    pub tau0: f64,
    /// Stopping tolerance on `R`; `None` means `1e−6 · sqrt(#triangles)`.
    pub tol: Option<f64>,
    pub max_iter: usize,
    /// Iterations between penalty updates.
    pub balance_every: usize,
    /// Relative tolerance of the Newton-type V-step Krylov solve.
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        Self {
            tau0: 1.0,
            tol: None,
            max_iter: 5000,
            balance_every: 10,
            cg_tol: 1e-10,
            cg_max_iter: 2000,
        }
    }
}

impl AdmmOptions {
    pub fn tolerance(&self, num_triangles: usize) -> f64 {
        self.tol.unwrap_or(1e-6 * (num_triangles as f64).sqrt())
    }
}

/// Iterates of the method: element matrices `q`, `λ`, the field and `τ`.
#[derive(Clone, Debug)]
pub struct AdmmState {
    pub q: Vec<Mat2>,
    pub lambda: Vec<Mat2>,
    pub v: VectorField,
    pub tau: f64,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmmRecord {
    pub iteration: usize,
    pub tau: f64,
    /// `R = (‖λʲ − λʲ⁻¹‖² + τ²‖DVʲ − DVʲ⁻¹‖²)^{1/2}`
    pub residual: f64,
    /// `‖DV − q‖`
    pub primal: f64,
    /// `τ ‖DVʲ − DVʲ⁻¹‖`
    pub dual: f64,
    pub objective: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    pub records: Vec<AdmmRecord>,
    pub iterations: usize,
    pub converged: bool,
    pub tolerance: f64,
    /// Objective of the returned field.
    pub objective: f64,
    /// Factor applied to the last iterate to restore `|DV| ≤ 1`.
    pub rescale: f64,
    /// The quadratic term was dropped after detecting negative curvature.
    pub first_order_fallback: bool,
}

impl Diagnostics {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,tau,residual,primal,dual,objective\n");
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{:e},{:e},{:e}",
                r.iteration, r.tau, r.residual, r.primal, r.dual, r.objective
            );
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct AdmmResult {
    pub v: VectorField,
    pub state: AdmmState,
    pub diagnostics: Diagnostics,
}

/// `τ L V + t B V`
fn apply_operator(
    ops: &FieldOps<'_>,
    hess: &dyn QuadraticForm,
    t: f64,
    tau: f64,
    v: &VectorField,
) -> Result<DualVector> {
    let mut out = ops.laplace(v).scaled(tau);
    out += &hess.apply(v)?.scaled(t);
    Ok(out)
}

/// Solves `(τL + tB) V = rhs − μ a`, `⟨a, V⟩ = 0` by projected PCG
/// preconditioned with `τL`, warm-started at the feasible `x0`. Returns
/// `None` on negative curvature.
fn newton_v_step(
    ops: &FieldOps<'_>,
    hess: &dyn QuadraticForm,
    t: f64,
    tau: f64,
    rhs: &DualVector,
    x0: &VectorField,
    opts: &AdmmOptions,
) -> Result<Option<VectorField>> {
    let mut r0 = rhs.clone();
    r0 += &apply_operator(ops, hess, t, tau, x0)?.scaled(-1.0);
    ops.project_dual(&mut r0);
    let b = flatten(r0.values());
    // near convergence the warm start leaves a residual far below the
    // roundoff of the full system, so accuracy is measured against the
    // projected right-hand side as in a cold start
    let mut full = rhs.clone();
    ops.project_dual(&mut full);
    let full = flatten(full.values());
    let full_norm = full.iter().map(|x| x * x).sum::<f64>().sqrt();
    let b_norm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rel_tol = if b_norm > 0.0 {
        (opts.cg_tol * full_norm / b_norm).min(0.5)
    } else {
        opts.cg_tol
    };
    let mut failure: Option<Error> = None;
    let apply = |x: &[f64], out: &mut [f64]| {
        let mut w = VectorField::from_values(unflatten(x));
        ops.zero_boundary(&mut w);
        ops.project_field(&mut w);
        match apply_operator(ops, hess, t, tau, &w) {
            Ok(mut d) => {
                ops.project_dual(&mut d);
                out.copy_from_slice(&flatten(d.values()));
            }
            Err(e) => {
                failure.get_or_insert(e);
                out.iter_mut().for_each(|o| *o = 0.0);
            }
        }
    };
    let precond = |r: &[f64], out: &mut [f64]| {
        let mut d = DualVector::from_values(unflatten(r));
        d.apply_dirichlet(ops.mesh());
        ops.project_dual(&mut d);
        let z = ops.laplace_solve(&d).scaled(1.0 / tau);
        out.copy_from_slice(&flatten(z.values()));
    };
    let mut x = vec![0.0; b.len()];
    let outcome = pcg(apply, precond, &b, &mut x, rel_tol, opts.cg_max_iter);
    if let Some(e) = failure {
        return Err(e);
    }
    // CG on an indefinite operator need not meet pᵀAp ≤ 0 exactly; a
    // residual that grows past its initial size is treated the same way
    if outcome.negative_curvature || (!outcome.converged && outcome.relative_residual > BREAKDOWN_GROWTH) {
        return Ok(None);
    }
    if !outcome.converged {
        return Err(Error::Direction(format!(
            "V-step Krylov solve stopped at relative residual {:e} after {} iterations",
            outcome.relative_residual * b_norm / full_norm.max(f64::MIN_POSITIVE),
            outcome.iterations
        )));
    }
    let mut delta = VectorField::from_values(unflatten(&x));
    ops.zero_boundary(&mut delta);
    ops.project_field(&mut delta);
    Ok(Some(x0.add_scaled(1.0, &delta)))
}

fn l2_diff(ops: &FieldOps<'_>, a: &[Mat2], b: &[Mat2]) -> f64 {
    let d: Vec<Mat2> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    ops.l2_norm(&d)
}

/// Lipschitz steepest-descent (`newton_t = 0`) or Newton-type direction.
pub fn admm_direction(req: &DirectionRequest<'_>, opts: &AdmmOptions) -> Result<AdmmResult> {
    req.validate()?;
    if !(opts.tau0 > 0.0) {
        return Err(Error::Config(format!("tau0 = {} must be positive", opts.tau0)));
    }
    let ops = FieldOps::new(req.mesh, req.area_constrained)?;
    let grad = req.grad;
    let tol = opts.tolerance(req.mesh.num_triangles());
    let mut t = req.newton_t;
    let hess = req.hess.filter(|_| t > 0.0);
    let mut fallback = false;

    let mut v = normalise(&ops, p2_raw(&ops, grad))?;
    let mut dv = ops.jacobians(&v);
    let mut lambda = vec![Mat2::zeros(); dv.len()];
    let mut q = dv.clone();
    let mut tau = opts.tau0;
    let mut records = Vec::new();
    let mut converged = false;
    let mut residual = f64::INFINITY;

    for it in 1..=opts.max_iter {
        q = dv.iter().zip(&lambda).map(|(a, l)| project_spectral_ball(&(a + l / tau))).collect();
        let target: Vec<Mat2> = q.iter().zip(&lambda).map(|(q, l)| q * tau - l).collect();
        let mut rhs = ops.div_t(&target);
        rhs += &grad.scaled(-1.0);

        let mut step = None;
        if let (Some(h), false) = (hess, fallback) {
            step = newton_v_step(&ops, h, t, tau, &rhs, &v, opts)?;
            if step.is_none() {
                log::warn!("negative curvature in the Newton-type V-step; continuing with the first-order problem");
                fallback = true;
                t = 0.0;
            }
        }
        let v_new = match step {
            Some(v) => v,
            None => ops.constrained_laplace_solve(&rhs).scaled(1.0 / tau),
        };
        let dv_new = ops.jacobians(&v_new);
        let diff: Vec<Mat2> = dv_new.iter().zip(&q).map(|(a, b)| a - b).collect();
        for (l, d) in lambda.iter_mut().zip(&diff) {
            *l += d * tau;
        }
        let primal = ops.l2_norm(&diff);
        let dual = tau * l2_diff(&ops, &dv_new, &dv);
        residual = (tau * tau * primal * primal + dual * dual).sqrt();

        // at the V-step solution, t B[V,V] = ⟨rhs, V⟩ − τ ⟨L V, V⟩
        let linear = grad.pair(&v_new);
        let objective = if t > 0.0 && !fallback {
            let quad = rhs.pair(&v_new) - tau * ops.laplace(&v_new).pair(&v_new);
            linear + 0.5 * quad
        } else {
            linear
        };
        records.push(AdmmRecord {
            iteration: it,
            tau,
            residual,
            primal,
            dual,
            objective,
        });
        v = v_new;
        dv = dv_new;
        if residual <= tol {
            converged = true;
            break;
        }
        if opts.balance_every > 0 && it % opts.balance_every == 0 {
            if primal > 10.0 * dual {
                tau *= 2.0;
            } else if dual > 10.0 * primal {
                tau *= 0.5;
            }
        }
    }
    if !converged {
        log::warn!(
            "ADMM stopped after {} iterations with R = {residual:e} > {tol:e}",
            opts.max_iter
        );
    }

    let m = ops.max_spectral(&dv);
    let rescale = if m > 1.0 + 1e-8 { 1.0 / m } else { 1.0 };
    if rescale != 1.0 {
        v = v.scaled(rescale);
    }
    let objective = directional_value(grad, if fallback { None } else { hess }, t, &v)?;
    let diagnostics = Diagnostics {
        iterations: records.len(),
        records,
        converged,
        tolerance: tol,
        objective,
        rescale,
        first_order_fallback: fallback,
    };
    Ok(AdmmResult {
        state: AdmmState {
            q,
            lambda,
            v: v.clone(),
            tau,
            residual,
        },
        v,
        diagnostics,
    })
}
