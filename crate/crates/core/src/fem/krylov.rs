//! Preconditioned conjugate gradients on closures.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// `‖b − A x‖ / ‖b‖` (recursive residual)
    pub relative_residual: f64,
    pub converged: bool,
    /// `pᵀ A p ≤ 0` was met; `x` holds the last iterate before it.
    pub negative_curvature: bool,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` starting from the given `x`.
///
/// `apply(v, out)` computes `out = A v`; `precond(r, out)` computes
/// `out = P⁻¹ r` for an SPD `P`.
pub fn pcg(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    mut precond: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> CgOutcome {
    let n = b.len();
    let nb = dot(b, b).sqrt();
    if nb == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
            negative_curvature: false,
        };
    }
    let mut ap = vec![0.0; n];
    apply(x, &mut ap);
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(bi, a)| bi - a).collect();
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = dot(&r, &r).sqrt() / nb;
    for it in 0..max_iter {
        if res <= rel_tol {
            return CgOutcome {
                iterations: it,
                relative_residual: res,
                converged: true,
                negative_curvature: false,
            };
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return CgOutcome {
                iterations: it,
                relative_residual: res,
                converged: false,
                negative_curvature: true,
            };
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = dot(&r, &r).sqrt() / nb;
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    CgOutcome {
        iterations: max_iter,
        relative_residual: res,
        converged: res <= rel_tol,
        negative_curvature: false,
    }
}
