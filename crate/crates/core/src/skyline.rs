//! Envelope (skyline) storage and Cholesky factorization for sparse SPD
//! matrices, with a reverse Cuthill–McKee ordering to keep envelopes narrow.

use crate::error::{Error, Result};
use crate::scalar::Real;
use std::collections::VecDeque;

/// Lower triangle stored row by row from the first nonzero column to the
/// diagonal.
#[derive(Debug, Clone)]
pub struct SkylineMatrix<T> {
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<T>,
}

impl<T: Real> SkylineMatrix<T> {
    /// Zero matrix with row `i` occupying columns `first[i]..=i`.
    pub fn zeros(first: Vec<usize>) -> Self {
        let mut start = Vec::with_capacity(first.len() + 1);
        let mut offset = 0;
        for (i, &f) in first.iter().enumerate() {
            assert!(f <= i, "envelope must stay below the diagonal");
            start.push(offset);
            offset += i - f + 1;
        }
        start.push(offset);
        SkylineMatrix {
            first,
            start,
            data: vec![T::zero(); offset],
        }
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    /// Stored entry count.
    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    fn row(&self, i: usize) -> &[T] {
        &self.data[self.start[i]..self.start[i + 1]]
    }

    /// Adds `v` at `(i, j)` with `j ≤ i`.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(j <= i && j >= self.first[i]);
        let idx = self.start[i] + j - self.first[i];
        self.data[idx] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if j < self.first[i] {
            T::zero()
        } else {
            self.data[self.start[i] + j - self.first[i]]
        }
    }

    /// Replaces row and column `p` by the unit vector.
    pub fn pin(&mut self, p: usize) {
        let (s, e) = (self.start[p], self.start[p + 1]);
        for v in &mut self.data[s..e] {
            *v = T::zero();
        }
        self.data[e - 1] = T::one();
        for i in p + 1..self.dim() {
            if self.first[i] <= p {
                let idx = self.start[i] + p - self.first[i];
                self.data[idx] = T::zero();
            }
        }
    }

    /// In-place `L Lᵀ` factorization; fails on a nonpositive pivot.
    pub fn factorize(mut self) -> Result<SkylineCholesky<T>> {
        let n = self.dim();
        let tiny = T::default_epsilon() * T::lit(64.0);
        for i in 0..n {
            let fi = self.first[i];
            let si = self.start[i];
            for j in fi..i {
                let fj = self.first[j];
                let k0 = fi.max(fj);
                let sj = self.start[j];
                let (lo, hi) = self.data.split_at_mut(si);
                let row_j = &lo[sj + k0 - fj..sj + j - fj];
                let row_i = &hi[k0 - fi..j - fi];
                let dot = row_i
                    .iter()
                    .zip(row_j)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b);
                let diag_j = lo[sj + j - fj];
                hi[j - fi] = (hi[j - fi] - dot) / diag_j;
            }
            let row = &self.data[si..self.start[i + 1]];
            let a_ii = row[i - fi];
            let d = a_ii - row[..i - fi].iter().fold(T::zero(), |acc, &v| acc + v * v);
            if !(d > tiny * a_ii.abs()) || !d.is_finite() {
                return Err(Error::SingularSystem {
                    pivot: i,
                    reason: format!("pivot {:e} against diagonal {:e}", d, a_ii),
                });
            }
            self.data[si + i - fi] = d.sqrt();
        }
        Ok(SkylineCholesky { l: self })
    }
}

/// Cholesky factor in the same envelope.
#[derive(Debug, Clone)]
pub struct SkylineCholesky<T> {
    l: SkylineMatrix<T>,
}

impl<T: Real> SkylineCholesky<T> {
    pub fn dim(&self) -> usize {
        self.l.dim()
    }

    /// Overwrites `b` with `A⁻¹ b`.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let l = &self.l;
        for i in 0..n {
            let fi = l.first[i];
            let row = l.row(i);
            let dot = row[..i - fi]
                .iter()
                .zip(&b[fi..i])
                .fold(T::zero(), |acc, (&a, &x)| acc + a * x);
            b[i] = (b[i] - dot) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = l.first[i];
            let row = l.row(i);
            b[i] /= row[i - fi];
            let xi = b[i];
            for (bj, &lij) in b[fi..i].iter_mut().zip(&row[..i - fi]) {
                *bj -= lij * xi;
            }
        }
    }
}

/// Reverse Cuthill–McKee order over all connected components, starting each
/// component from the lowest-degree node reached, after first seeding with
/// `start`. Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(adjacency: &[Vec<usize>], start: usize) -> Vec<usize> {
    let n = adjacency.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    let mut seeds = std::iter::once(start).chain(0..n);
    while order.len() < n {
        let seed = match seeds.find(|&s| !visited[s]) {
            Some(s) => s,
            None => break,
        };
        visited[seed] = true;
        queue.push_back(seed);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adjacency[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (adjacency[w].len(), w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Row envelope of a symmetric pattern under a permutation (`inv[old] = new`).
pub fn envelope(adjacency: &[Vec<usize>], inv: &[usize]) -> Vec<usize> {
    let mut first: Vec<usize> = (0..adjacency.len()).collect();
    for (old, nbrs) in adjacency.iter().enumerate() {
        let i = inv[old];
        for &w in nbrs {
            let j = inv[w];
            if j < i {
                first[i] = first[i].min(j);
            }
        }
    }
    first
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn path_laplacian(n: usize) -> (Vec<Vec<usize>>, DMatrix<f64>) {
        let mut adj = vec![Vec::new(); n];
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = 2.5;
            if i + 1 < n {
                adj[i].push(i + 1);
                adj[i + 1].push(i);
                a[(i, i + 1)] = -1.0;
                a[(i + 1, i)] = -1.0;
            }
        }
        (adj, a)
    }

    fn to_skyline(a: &DMatrix<f64>, first: Vec<usize>) -> SkylineMatrix<f64> {
        let mut s = SkylineMatrix::zeros(first.clone());
        for i in 0..a.nrows() {
            for j in first[i]..=i {
                s.add(i, j, a[(i, j)]);
            }
        }
        s
    }

    #[test]
    fn solves_tridiagonal() {
        let (adj, a) = path_laplacian(12);
        let ident: Vec<usize> = (0..12).collect();
        let s = to_skyline(&a, envelope(&adj, &ident));
        assert_eq!(s.envelope_size(), 12 + 11);
        let f = s.factorize().unwrap();
        let rhs = DVector::from_fn(12, |i, _| (i as f64).sin());
        let mut x: Vec<f64> = rhs.iter().copied().collect();
        f.solve_in_place(&mut x);
        let r = &a * DVector::from_vec(x) - rhs;
        assert!(r.norm() < 1e-13);
    }

    #[test]
    fn rejects_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let s = to_skyline(&a, vec![0, 0]);
        assert!(matches!(s.factorize(), Err(Error::SingularSystem { pivot: 1, .. })));
    }

    #[test]
    fn pin_makes_identity_row() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let mut s = to_skyline(&a, vec![0, 0, 1]);
        s.pin(1);
        assert_eq!(s.get(1, 1), 1.0);
        assert_eq!(s.get(1, 0), 0.0);
        assert_eq!(s.get(2, 1), 0.0);
        assert_eq!(s.get(0, 0), 2.0);
    }

    #[test]
    fn rcm_is_a_permutation() {
        let adj = vec![vec![3], vec![2], vec![1], vec![0, 4], vec![3]];
        let mut p = reverse_cuthill_mckee(&adj, 0);
        p.sort();
        assert_eq!(p, vec![0, 1, 2, 3, 4]);
    }

    proptest! {
        #[test]
        fn random_banded_spd(n in 2usize..30, band in 1usize..5, seed in proptest::collection::vec(-1.0f64..1.0, 30 * 30)) {
            // Diagonally dominant banded matrix in a random envelope.
            let mut a = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i.saturating_sub(band)..i {
                    let v = seed[i * 30 + j];
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
            }
            for i in 0..n {
                let row: f64 = (0..n).map(|j| a[(i, j)].abs()).sum();
                a[(i, i)] = row + 1.0;
            }
            let first: Vec<usize> = (0..n).map(|i| i.saturating_sub(band)).collect();
            let f = to_skyline(&a, first).factorize().unwrap();
            let b = DVector::from_fn(n, |i, _| seed[i] + 0.5);
            let mut x: Vec<f64> = b.iter().copied().collect();
            f.solve_in_place(&mut x);
            let r = &a * DVector::from_vec(x) - &b;
            prop_assert!(r.norm() < 1e-12 * (1.0 + b.norm()));
        }
    }
}
