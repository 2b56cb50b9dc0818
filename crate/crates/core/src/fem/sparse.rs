//! Compressed sparse rows and an envelope Cholesky factorisation under a
//! reverse Cuthill–McKee ordering.

use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Square sparse matrix in CSR form with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Sums duplicate entries. Triplets are sorted stably by position, so
    /// the summation order only depends on the input order.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i},{j}) out of range for n = {n}");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols());
        let mut t = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.nrows(), t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `xᵀ A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.n).map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>()).sum()
    }

    /// `a·self + b·other`, union of the sparsity patterns.
    pub fn linear_combination(&self, a: f64, other: &SparseMatrix, b: f64) -> SparseMatrix {
        assert_eq!(self.n, other.n);
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            t.extend(self.row(i).map(|(j, v)| (i, j, a * v)));
            t.extend(other.row(i).map(|(j, v)| (i, j, b * v)));
        }
        SparseMatrix::from_triplets(self.n, t)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// Largest `|a_ij − a_ji|` relative to the largest `|a_ij|`.
    pub fn asymmetry(&self) -> f64 {
        let mut max_abs: f64 = 0.0;
        let mut max_diff: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                max_abs = max_abs.max(v.abs());
                max_diff = max_diff.max((v - self.get(j, i)).abs());
            }
        }
        if max_abs == 0.0 {
            0.0
        } else {
            max_diff / max_abs
        }
    }
}

/// Reverse Cuthill–McKee permutation: `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &SparseMatrix) -> Vec<usize> {
    let n = a.n();
    let adj: Vec<Vec<usize>> = (0..n).map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect()).collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_levels = |start: usize, visited: &[bool]| -> (usize, usize) {
        // (eccentricity, a minimum-degree node in the last level)
        let mut dist = vec![usize::MAX; n];
        dist[start] = 0;
        let mut q = VecDeque::from([start]);
        let mut last = start;
        while let Some(u) = q.pop_front() {
            last = u;
            for &w in &adj[u] {
                if !visited[w] && dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    q.push_back(w);
                }
            }
        }
        let ecc = dist[last];
        let far = (0..n)
            .filter(|&v| dist[v] == ecc)
            .min_by_key(|&v| (degree[v], v))
            .unwrap_or(last);
        (ecc, far)
    };

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral start node
        let mut start = seed;
        let (mut ecc, mut far) = bfs_levels(start, &visited);
        for _ in 0..8 {
            let (e2, f2) = bfs_levels(far, &visited);
            if e2 <= ecc {
                break;
            }
            start = far;
            ecc = e2;
            far = f2;
        }
        visited[start] = true;
        let mut q = VecDeque::from([start]);
        while let Some(u) = q.pop_front() {
            order.push(u);
            let mut next: Vec<usize> = adj[u].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                q.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// `P A Pᵀ = L Lᵀ` with `L` stored row-wise over its envelope.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    perm: Vec<usize>,
    /// first column of the envelope of each (permuted) row
    first: Vec<usize>,
    /// offset of row i's envelope in `data`; row i holds columns first[i]..=i
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        let n = a.n();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old_i in 0..n {
            let i = inv[old_i];
            for (old_j, _) in a.row(old_i) {
                let j = inv[old_j];
                if j < i {
                    first[i] = first[i].min(j);
                }
            }
        }
        let mut offset = vec![0usize; n + 1];
        for i in 0..n {
            offset[i + 1] = offset[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; offset[n]];
        for old_i in 0..n {
            let i = inv[old_i];
            for (old_j, v) in a.row(old_i) {
                let j = inv[old_j];
                if j <= i {
                    data[offset[i] + j - first[i]] = v;
                }
            }
        }
        let scale = a.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs()));
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let (ri, rj) = (offset[i], offset[j]);
                let mut s = data[ri + j - fi];
                for k in k0..j {
                    s -= data[ri + k - fi] * data[rj + k - fj];
                }
                if j < i {
                    data[ri + j - fi] = s / data[rj + j - fj];
                } else {
                    if !(s > 1e-14 * scale) {
                        return Err(Error::Singular(format!(
                            "Cholesky pivot {s:e} at row {i} of {n} is not positive"
                        )));
                    }
                    data[ri + i - fi] = s.sqrt();
                }
            }
        }
        Ok(Self {
            n,
            perm,
            first,
            offset,
            data,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        // L y = P b
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            let mut s = y[i];
            for k in fi..i {
                s -= row[k - fi] * y[k];
            }
            y[i] = s / row[i - fi];
        }
        // Lᵀ x = y, column-oriented over the row storage
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for k in fi..i {
                y[k] -= row[k - fi] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    /// Number of stored factor entries.
    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Direct solve with up to two steps of iterative refinement; guarantees
/// `‖Ax − b‖ ≤ 1e−10 ‖b‖` or reports failure.
pub fn solve_with(chol: &Cholesky, a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let nb = norm(b);
    if nb == 0.0 {
        return Ok(vec![0.0; b.len()]);
    }
    let mut x = chol.solve(b);
    for _ in 0..3 {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        if norm(&r) <= 1e-10 * nb {
            return Ok(x);
        }
        let dx = chol.solve(&r);
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
    }
    let ax = a.mul_vec(&x);
    let rn = norm(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>());
    if rn <= 1e-10 * nb {
        Ok(x)
    } else {
        Err(Error::Singular(format!("residual {:e} above tolerance after refinement", rn / nb)))
    }
}

/// Solves `A x = b` for symmetric positive definite `A`.
pub fn solve_spd(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let chol = Cholesky::factor(a)?;
    solve_with(&chol, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        &b * b.transpose() + DMatrix::identity(n, n) * 0.5
    }

    /// Dense Gaussian elimination with partial pivoting.
    fn gauss(a: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m = a.clone();
        let mut x = b.to_vec();
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| m[(i, c)].abs().total_cmp(&m[(j, c)].abs())).unwrap();
            m.swap_rows(c, p);
            x.swap(c, p);
            for r in c + 1..n {
                let f = m[(r, c)] / m[(c, c)];
                for k in c..n {
                    m[(r, k)] -= f * m[(c, k)];
                }
                x[r] -= f * x[c];
            }
        }
        for c in (0..n).rev() {
            for k in c + 1..n {
                x[c] -= m[(c, k)] * x[k];
            }
            x[c] /= m[(c, c)];
        }
        x
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = SparseMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0)]);
        assert_eq!(a.get(0, 0), 4.0);
        assert_eq!(a.get(1, 0), 2.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn identity_system() {
        let b = vec![1.0, -2.0, 3.5];
        assert_eq!(solve_spd(&SparseMatrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn zero_rhs() {
        let a = SparseMatrix::from_dense(&random_spd(4, 1));
        assert_eq!(solve_spd(&a, &[0.0; 4]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn random_spd_matches_dense_elimination() {
        for seed in 0..10 {
            let d = random_spd(5, seed);
            let a = SparseMatrix::from_dense(&d);
            let b: Vec<f64> = (0..5).map(|i| (i as f64).sin() + 0.3).collect();
            let x = solve_spd(&a, &b).unwrap();
            let y = gauss(&d, &b);
            for (xi, yi) in x.iter().zip(&y) {
                assert!((xi - yi).abs() < 1e-10 * (1.0 + yi.abs()));
            }
        }
    }

    #[test]
    fn indefinite_is_singular_error() {
        let a = SparseMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(matches!(Cholesky::factor(&a), Err(Error::Singular(_))));
    }

    #[test]
    fn rcm_is_a_permutation_and_shrinks_bandwidth() {
        // path graph numbered badly
        let n = 30;
        let label = |k: usize| (k * 7) % n;
        let mut t = Vec::new();
        for k in 0..n {
            t.push((label(k), label(k), 4.0));
            if k + 1 < n {
                t.push((label(k), label(k + 1), -1.0));
                t.push((label(k + 1), label(k), -1.0));
            }
        }
        let a = SparseMatrix::from_triplets(n, t);
        let p = reverse_cuthill_mckee(&a);
        let mut sorted = p.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        let chol = Cholesky::factor(&a).unwrap();
        // tridiagonal after reordering: 2 entries per row except the first
        assert_eq!(chol.envelope_size(), 2 * n - 1);
    }
}
