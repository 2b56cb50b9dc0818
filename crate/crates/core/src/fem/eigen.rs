//! Smallest eigenpair of `K z = λ M z` by inverse subspace iteration.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::krylov::dot;
use super::sparse::{Cholesky, SparseMatrix};
use crate::{Error, Result};

/// Gap ratios below this trigger the simplicity warning.
pub const SIMPLICITY_GAP: f64 = 1e-6;

const BLOCK: usize = 3;
const LAMBDA_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-8;
const MAX_ITER: usize = 500;

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub lambda: f64,
    /// Coefficients with `zᵀMz = 1`, largest-magnitude entry positive.
    pub z: Vec<f64>,
    /// `(λ₂ − λ₁)/λ₁` from the Ritz values.
    pub gap_ratio: f64,
    /// `‖Kz − λMz‖_{M⁻¹}`
    pub residual: f64,
    pub iterations: usize,
}

impl EigenPair {
    pub fn is_simple(&self) -> bool {
        self.gap_ratio >= SIMPLICITY_GAP
    }
}

fn m_inverse_norm(m_chol: &Cholesky, r: &[f64]) -> f64 {
    dot(r, &m_chol.solve(r)).max(0.0).sqrt()
}

/// Rayleigh–Ritz on the columns of `w`; returns ascending Ritz values and
/// M-orthonormal Ritz vectors.
fn rayleigh_ritz(k: &SparseMatrix, m: &SparseMatrix, w: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let p = w.len();
    let kw: Vec<Vec<f64>> = w.iter().map(|v| k.mul_vec(v)).collect();
    let mw: Vec<Vec<f64>> = w.iter().map(|v| m.mul_vec(v)).collect();
    let kr = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&w[i], &kw[j]) + dot(&w[j], &kw[i])));
    let mr = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&w[i], &mw[j]) + dot(&w[j], &mw[i])));
    let l = mr
        .cholesky()
        .ok_or_else(|| Error::NoConvergence("subspace lost rank in eigen iteration".into()))?
        .l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NoConvergence("subspace lost rank in eigen iteration".into()))?;
    let c = &linv * kr * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut idx: Vec<usize> = (0..p).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let coeffs = linv.transpose() * &eig.eigenvectors;
    let n = w[0].len();
    let mut values = Vec::with_capacity(p);
    let mut vectors = Vec::with_capacity(p);
    for &c_idx in &idx {
        values.push(eig.eigenvalues[c_idx]);
        let mut v = vec![0.0; n];
        for (j, wj) in w.iter().enumerate() {
            let cj = coeffs[(j, c_idx)];
            for (vi, wi) in v.iter_mut().zip(wj) {
                *vi += cj * wi;
            }
        }
        vectors.push(v);
    }
    Ok((values, vectors))
}

/// Smallest eigenpair of the SPD pencil `(K, M)` using a given factor of `K`.
pub fn smallest_eigenpair_with(k: &SparseMatrix, k_chol: &Cholesky, m: &SparseMatrix) -> Result<EigenPair> {
    let n = k.n();
    if n == 0 {
        return Err(Error::Contract("empty eigenproblem".into()));
    }
    let m_chol = Cholesky::factor(m)?;
    let p = BLOCK.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut basis: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            (0..n)
                .map(|_| if j == 0 { 1.0 } else { rng.gen_range(-1.0..1.0) })
                .collect()
        })
        .collect();
    let mut prev = f64::INFINITY;
    for it in 1..=MAX_ITER {
        let w: Vec<Vec<f64>> = basis.iter().map(|v| k_chol.solve(&m.mul_vec(v))).collect();
        let (values, vectors) = rayleigh_ritz(k, m, &w)?;
        basis = vectors;
        let lambda = values[0];
        let z = &basis[0];
        let kz = k.mul_vec(z);
        let mz = m.mul_vec(z);
        let r: Vec<f64> = kz.iter().zip(&mz).map(|(a, b)| a - lambda * b).collect();
        let residual = m_inverse_norm(&m_chol, &r);
        let converged = (prev - lambda).abs() <= LAMBDA_TOL * lambda.abs() && residual <= RESIDUAL_TOL;
        prev = lambda;
        if converged || (p == n && it > 1) {
            let gap_ratio = if p > 1 { (values[1] - lambda) / lambda.abs() } else { f64::INFINITY };
            let mut z = basis.swap_remove(0);
            let norm = dot(&z, &m.mul_vec(&z)).sqrt();
            let imax = (0..n).max_by(|&a, &b| z[a].abs().total_cmp(&z[b].abs())).unwrap();
            let s = z[imax].signum() / norm;
            z.iter_mut().for_each(|v| *v *= s);
            if gap_ratio < SIMPLICITY_GAP {
                log::warn!("smallest eigenvalue {lambda} may not be simple (gap ratio {gap_ratio:e})");
            }
            return Ok(EigenPair {
                lambda,
                z,
                gap_ratio,
                residual,
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence(format!(
        "eigen iteration did not converge in {MAX_ITER} steps"
    )))
}

pub fn smallest_eigenpair(k: &SparseMatrix, m: &SparseMatrix) -> Result<EigenPair> {
    let k_chol = Cholesky::factor(k)?;
    smallest_eigenpair_with(k, &k_chol, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_mass, assemble_stiffness, FeSpace, Support};
    use crate::mat2::Vec2;
    use crate::mesh::{box_with_rectangle, Rect};
    use std::f64::consts::PI;

    fn square_pair(n: usize, scale: f64) -> EigenPair {
        let m = box_with_rectangle(Rect::square(2.0), Rect::square(1.0), n).unwrap();
        let m = m.with_vertices(m.vertices().iter().map(|x| x * scale).collect::<Vec<Vec2>>());
        let s = FeSpace::new(&m, Support::Omega);
        let k = assemble_stiffness(&m, &s).unwrap();
        let mass = assemble_mass(&m, &s).unwrap();
        smallest_eigenpair(&k, &mass).unwrap()
    }

    #[test]
    fn diagonal_pencil() {
        let k = SparseMatrix::from_triplets(3, vec![(0, 0, 3.0), (1, 1, 1.0), (2, 2, 2.0)]);
        let m = SparseMatrix::identity(3);
        let e = smallest_eigenpair(&k, &m).unwrap();
        assert!((e.lambda - 1.0).abs() < 1e-12);
        assert!((e.z[1] - 1.0).abs() < 1e-10);
        assert!((e.gap_ratio - 1.0).abs() < 1e-10);
    }

    #[test]
    fn square_eigenvalue_from_above_within_one_percent() {
        let exact = PI * PI / 2.0;
        let coarse = square_pair(4, 1.0);
        let fine = square_pair(32, 1.0);
        assert!(fine.lambda > exact);
        assert!((fine.lambda - exact) / exact < 0.01, "{}", fine.lambda);
        assert!(coarse.lambda >= fine.lambda);
        assert!(fine.residual <= 1e-8);
        assert!(fine.is_simple());
    }

    #[test]
    fn eigenvalues_decrease_under_nested_refinement() {
        let l: Vec<f64> = [2, 4, 8].iter().map(|&n| square_pair(n, 1.0).lambda).collect();
        assert!(l[0] >= l[1] && l[1] >= l[2], "{l:?}");
    }

    #[test]
    fn normalisation_and_sign() {
        let m = box_with_rectangle(Rect::square(2.0), Rect::square(1.0), 4).unwrap();
        let s = FeSpace::new(&m, Support::Omega);
        let k = assemble_stiffness(&m, &s).unwrap();
        let mass = assemble_mass(&m, &s).unwrap();
        let e = smallest_eigenpair(&k, &mass).unwrap();
        assert!((mass.bilinear(&e.z, &e.z) - 1.0).abs() < 1e-12);
        let max = e.z.iter().fold(0.0f64, |a, b| if b.abs() > a.abs() { *b } else { a });
        assert!(max > 0.0);
    }

    #[test]
    fn dilation_scales_eigenvalue() {
        let a = square_pair(4, 1.0).lambda;
        let b = square_pair(4, 1.5).lambda;
        assert!((b - a / 2.25).abs() < 1e-9 * a);
    }
}
