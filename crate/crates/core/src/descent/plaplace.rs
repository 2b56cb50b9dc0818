//! Reference directions minimising `⟨grad, V⟩ + (1/p) ∫ |DV|_F^p` for
//! `p ∈ {2, 4}`, rescaled to unit sup-seminorm.

use super::ops::FieldOps;
use super::DirectionRequest;
use crate::fem::{Cholesky, DualVector, SparseMatrix, VectorField};
use crate::mat2::{Mat2, Vec2};
use crate::{Error, Result};

const P4_TOL: f64 = 1e-9;
const P4_MAX_ITER: usize = 200;
const P4_MAX_HALVINGS: usize = 40;

/// Direction with the residual norms of the nonlinear solve (empty for
/// `p = 2`).
#[derive(Clone, Debug)]
pub struct PDirection {
    pub v: VectorField,
    pub residuals: Vec<f64>,
}

/// Unit sup-seminorm `p`-Laplacian direction for `p ∈ {2, 4}`.
pub fn p_direction(p: u32, req: &DirectionRequest<'_>) -> Result<VectorField> {
    Ok(p_direction_with_history(p, req)?.v)
}

pub fn p_direction_with_history(p: u32, req: &DirectionRequest<'_>) -> Result<PDirection> {
    req.validate()?;
    let ops = FieldOps::new(req.mesh, req.area_constrained)?;
    let (v, residuals) = match p {
        2 => (p2_raw(&ops, req.grad), Vec::new()),
        4 => p4_raw(&ops, req.grad)?,
        other => return Err(Error::Config(format!("p = {other} is not supported (expected 2 or 4)"))),
    };
    Ok(PDirection {
        v: normalise(&ops, v)?,
        residuals,
    })
}

pub(crate) fn p2_raw(ops: &FieldOps<'_>, grad: &DualVector) -> VectorField {
    ops.constrained_laplace_solve(&grad.scaled(-1.0))
}

/// Scales `v` to `max_T |DV|_T = 1`.
pub(crate) fn normalise(ops: &FieldOps<'_>, v: VectorField) -> Result<VectorField> {
    let m = ops.max_spectral(&ops.jacobians(&v));
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Direction(format!("direction has sup-seminorm {m}")));
    }
    Ok(v.scaled(1.0 / m))
}

/// `∫ |DV|² DV : DW + ⟨grad, W⟩`
fn p4_residual(ops: &FieldOps<'_>, grad: &DualVector, v: &VectorField) -> DualVector {
    let q: Vec<Mat2> = ops.jacobians(v).into_iter().map(|a| a * a.norm_squared()).collect();
    let mut r = ops.div_t(&q);
    r += grad;
    r
}

/// Residual with the best multiplier multiple of the area row removed.
fn kkt_residual(ops: &FieldOps<'_>, r: &DualVector) -> f64 {
    match ops.area_covector() {
        Some(a) => {
            let aa: f64 = a.values().iter().map(|x| x.norm_squared()).sum();
            let ar: f64 = a.values().iter().zip(r.values()).map(|(x, y)| x.dot(y)).sum();
            r.values()
                .iter()
                .zip(a.values())
                .map(|(x, y)| (x - y * (ar / aa)).norm_squared())
                .sum::<f64>()
                .sqrt()
        }
        None => r.norm(),
    }
}

/// Jacobian `|A|² DV:DW + 2 (A:DV)(A:DW)` plus `reg ∫ DV:DW`, on
/// interleaved free dofs.
fn p4_jacobian(ops: &FieldOps<'_>, dv: &[Mat2], free: &[Option<usize>], reg: f64) -> SparseMatrix {
    let mut triplets = Vec::new();
    for (e, a) in ops.elements().iter().zip(dv) {
        let n2 = a.norm_squared() + reg;
        let ag: [Vec2; 3] = [a * e.grads[0], a * e.grads[1], a * e.grads[2]];
        for i in 0..3 {
            let Some(di) = free[e.ids[i]] else { continue };
            for j in 0..3 {
                let Some(dj) = free[e.ids[j]] else { continue };
                let gg = e.grads[i].dot(&e.grads[j]);
                for k in 0..2 {
                    for l in 0..2 {
                        let mut val = 2.0 * ag[i][k] * ag[j][l];
                        if k == l {
                            val += n2 * gg;
                        }
                        triplets.push((2 * di + k, 2 * dj + l, e.area * val));
                    }
                }
            }
        }
    }
    let n = free.iter().flatten().count();
    SparseMatrix::from_triplets(2 * n, triplets)
}

fn gather(d: &[Vec2], free: &[Option<usize>], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; 2 * n];
    for (v, f) in free.iter().enumerate() {
        if let Some(i) = f {
            out[2 * i] = d[v].x;
            out[2 * i + 1] = d[v].y;
        }
    }
    out
}

fn scatter(x: &[f64], free: &[Option<usize>]) -> Vec<Vec2> {
    free.iter()
        .map(|f| f.map_or(Vec2::zeros(), |i| Vec2::new(x[2 * i], x[2 * i + 1])))
        .collect()
}

fn p4_raw(ops: &FieldOps<'_>, grad: &DualVector) -> Result<(VectorField, Vec<f64>)> {
    let mesh = ops.mesh();
    let mut count = 0;
    let free: Vec<Option<usize>> = (0..mesh.num_vertices())
        .map(|v| {
            (!mesh.is_on_hold_all_boundary(v)).then(|| {
                count += 1;
                count - 1
            })
        })
        .collect();
    let n = count;

    // start on the ray of the p = 2 direction at the minimiser along it
    let v2 = p2_raw(ops, grad);
    let dv2 = ops.jacobians(&v2);
    let quartic: f64 = ops
        .elements()
        .iter()
        .zip(&dv2)
        .map(|(e, a)| e.area * a.norm_squared().powi(2))
        .sum();
    let c = (-grad.pair(&v2) / quartic).cbrt();
    let mut v = v2.scaled(c);

    let scale = grad.norm();
    let mut r = p4_residual(ops, grad, &v);
    let mut res = kkt_residual(ops, &r);
    let mut history = vec![res];
    for _ in 0..P4_MAX_ITER {
        if res <= P4_TOL * scale {
            return Ok((v, history));
        }
        let dv = ops.jacobians(&v);
        let amax = dv.iter().map(|a| a.norm_squared()).fold(0.0, f64::max);
        let jac = p4_jacobian(ops, &dv, &free, 1e-10 * amax);
        let chol = Cholesky::factor(&jac)?;
        let rhs: Vec<f64> = gather(r.values(), &free, n).into_iter().map(|x| -x).collect();
        let mut step = chol.solve(&rhs);
        if let Some(a) = ops.area_covector() {
            let af = gather(a.values(), &free, n);
            let x2 = chol.solve(&af);
            let mu = dot(&af, &step) / dot(&af, &x2);
            step.iter_mut().zip(&x2).for_each(|(s, x)| *s -= mu * x);
        }
        let delta = VectorField::from_values(scatter(&step, &free));
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..P4_MAX_HALVINGS {
            let trial = v.add_scaled(t, &delta);
            let r_trial = p4_residual(ops, grad, &trial);
            let res_trial = kkt_residual(ops, &r_trial);
            if res_trial < res {
                v = trial;
                r = r_trial;
                res = res_trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::Direction(format!(
                "p = 4 Newton stagnated at residual {res:e} (relative {:e})",
                res / scale
            )));
        }
        history.push(res);
    }
    if res <= P4_TOL * scale {
        return Ok((v, history));
    }
    Err(Error::Direction(format!(
        "p = 4 Newton did not reach {P4_TOL:e} in {P4_MAX_ITER} iterations (residual {:e})",
        res / scale
    )))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
