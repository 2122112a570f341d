//! Sparse symmetric matrices and an envelope (skyline) Cholesky factorization
//! under reverse Cuthill-McKee ordering.
//!
//! The matrices assembled for localization are graph Laplacians plus a
//! diagonal anchor term, so a bandwidth-reducing ordering followed by a
//! profile factorization keeps fill proportional to the envelope of a
//! near-planar graph.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Symmetric matrix stored as a diagonal plus, for each row, the sorted
/// off-diagonal entries of that row (both triangles are stored).
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSym {
    diag: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseSym {
    pub fn zeros(n: usize) -> Self {
        Self { diag: vec![0.0; n], rows: vec![Vec::new(); n] }
    }

    /// Builds from the upper (or lower) triangle; duplicate entries are summed.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut m = Self::zeros(n);
        for (i, j, v) in triplets {
            m.add(i, j, v);
        }
        m
    }

    /// Adds `v` at `(i, j)` and, when off-diagonal, at `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            self.diag[i] += v;
            return;
        }
        for (r, c) in [(i, j), (j, i)] {
            let row = &mut self.rows[r];
            match row.binary_search_by_key(&c, |e| e.0) {
                Ok(pos) => row[pos].1 += v,
                Err(pos) => row.insert(pos, (c, v)),
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal entries of row `i`, sorted by column.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        match self.rows[i].binary_search_by_key(&j, |e| e.0) {
            Ok(pos) => self.rows[i][pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn nnz_offdiag(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                for &(j, v) in &self.rows[i] {
                    acc += v * x[j];
                }
                acc
            })
            .collect()
    }

    /// Product with `self ⊗ I_dim` on a vector of `dim`-blocks.
    pub fn kron_mul_vec(&self, x: &[f64], dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for i in 0..self.dim() {
            let o = &mut out[i * dim..(i + 1) * dim];
            for c in 0..dim {
                o[c] = self.diag[i] * x[i * dim + c];
            }
            for &(j, v) in &self.rows[i] {
                for c in 0..dim {
                    o[c] += v * x[j * dim + c];
                }
            }
        }
        out
    }

    /// Principal submatrix on `indices`, renumbered `0..indices.len()` in the given order.
    pub fn principal_submatrix(&self, indices: &[usize]) -> SparseSym {
        let mut local = std::collections::HashMap::with_capacity(indices.len());
        for (k, &i) in indices.iter().enumerate() {
            local.insert(i, k);
        }
        let mut sub = SparseSym::zeros(indices.len());
        for (k, &i) in indices.iter().enumerate() {
            sub.diag[k] = self.diag[i];
            sub.rows[k] = self.rows[i]
                .iter()
                .filter_map(|&(j, v)| local.get(&j).map(|&lj| (lj, v)))
                .collect();
            sub.rows[k].sort_unstable_by_key(|e| e.0);
        }
        sub
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            d[i][i] = self.diag[i];
            for &(j, v) in &self.rows[i] {
                d[i][j] = v;
            }
        }
        d
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim()).all(|i| self.rows[i].iter().all(|&(j, v)| self.get(j, i) == v))
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        self.rows.iter().map(|r| r.iter().map(|e| e.0).collect()).collect()
    }
}

/// Reverse Cuthill-McKee ordering. Returns `perm` with `perm[new] = old`.
/// Each connected component starts from a pseudo-peripheral node.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let mut seeds: Vec<usize> = (0..n).collect();
    seeds.sort_by_key(|&i| (degree[i], i));

    for &seed in &seeds {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(adj, &degree, seed);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        let mut next = Vec::new();
        while let Some(v) = queue.pop_front() {
            order.push(v);
            next.clear();
            next.extend(adj[v].iter().copied().filter(|&w| !visited[w]));
            next.sort_by_key(|&w| (degree[w], w));
            for &w in &next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(adj: &[Vec<usize>], start: usize) -> (Vec<usize>, usize) {
    let mut level = vec![usize::MAX; adj.len()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut reached = Vec::new();
    let mut depth = 0;
    while let Some(v) = queue.pop_front() {
        reached.push(v);
        depth = depth.max(level[v]);
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    let last: Vec<usize> = reached.into_iter().filter(|&v| level[v] == depth).collect();
    (last, depth)
}

fn pseudo_peripheral(adj: &[Vec<usize>], degree: &[usize], seed: usize) -> usize {
    let mut current = seed;
    let (mut last, mut depth) = bfs_levels(adj, current);
    loop {
        let candidate = *last.iter().min_by_key(|&&v| (degree[v], v)).unwrap();
        let (cand_last, cand_depth) = bfs_levels(adj, candidate);
        if cand_depth <= depth {
            return current;
        }
        current = candidate;
        last = cand_last;
        depth = cand_depth;
    }
}

/// Cholesky factor `L` of a symmetric positive definite matrix, stored row-wise
/// over each row's envelope `first[i]..=i` in the permuted numbering.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Relative pivot threshold used by [`EnvelopeCholesky::factor`].
    pub const DEFAULT_PIVOT_TOL: f64 = 1e-12;

    pub fn factor(a: &SparseSym) -> Result<Self> {
        Self::factor_with_tol(a, Self::DEFAULT_PIVOT_TOL)
    }

    /// Fails with [`Error::Factorization`] when a pivot drops to
    /// `rel_tol * a_ii` or below.
    pub fn factor_with_tol(a: &SparseSym, rel_tol: f64) -> Result<Self> {
        let n = a.dim();
        let perm = reverse_cuthill_mckee(&a.adjacency());
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let mut first = vec![0; n];
        for i in 0..n {
            first[i] = a.rows[perm[i]].iter().map(|&(j, _)| inv[j]).fold(i, usize::min);
        }
        let mut start = vec![0; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut values = vec![0.0; start[n]];
        for i in 0..n {
            let old = perm[i];
            values[start[i] + (i - first[i])] = a.diag[old];
            for &(j, v) in &a.rows[old] {
                let jn = inv[j];
                if jn < i {
                    values[start[i] + (jn - first[i])] = v;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = values[start[i] + (j - fi)];
                let ri = &values[start[i] + (k0 - fi)..start[i] + (j - fi)];
                let rj = &values[start[j] + (k0 - fj)..start[j] + (j - fj)];
                for (x, y) in ri.iter().zip(rj) {
                    s -= x * y;
                }
                values[start[i] + (j - fi)] = s / values[start[j + 1] - 1];
            }
            let row = &values[start[i]..start[i + 1] - 1];
            let d = values[start[i + 1] - 1] - row.iter().map(|v| v * v).sum::<f64>();
            let scale = a.diag[perm[i]].abs();
            if !(d > rel_tol * scale) || !d.is_finite() {
                return Err(Error::Factorization { row: perm[i], pivot: d });
            }
            values[start[i + 1] - 1] = d.sqrt();
        }
        Ok(Self { perm, first, start, values })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Number of stored entries of `L` (the envelope size).
    pub fn profile(&self) -> usize {
        self.values.len()
    }

    fn diag(&self, i: usize) -> f64 {
        self.values[self.start[i + 1] - 1]
    }

    fn forward(&self, y: &mut [f64], from: usize) {
        for i in from..self.dim() {
            let fi = self.first[i].max(from);
            let base = self.start[i] + (fi - self.first[i]);
            let row = &self.values[base..self.start[i + 1] - 1];
            let mut s = y[i];
            for (l, yk) in row.iter().zip(&y[fi..i]) {
                s -= l * yk;
            }
            y[i] = s / self.diag(i);
        }
    }

    fn backward(&self, y: &mut [f64]) {
        for i in (0..self.dim()).rev() {
            y[i] /= self.diag(i);
            let yi = y[i];
            let fi = self.first[i];
            let row = &self.values[self.start[i]..self.start[i + 1] - 1];
            for (l, yk) in row.iter().zip(&mut y[fi..i]) {
                *yk -= l * yi;
            }
        }
    }

    /// Solves `A z = rhs` in place.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let mut y: Vec<f64> = self.perm.iter().map(|&old| rhs[old]).collect();
        self.forward(&mut y, 0);
        self.backward(&mut y);
        for (new, &old) in self.perm.iter().enumerate() {
            rhs[old] = y[new];
        }
    }

    /// Solves `(A ⊗ I_dim) z = rhs` for a vector of `dim`-blocks.
    pub fn solve_kron(&self, rhs: &[f64], dim: usize) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; rhs.len()];
        let mut col = vec![0.0; n];
        for c in 0..dim {
            for i in 0..n {
                col[i] = rhs[i * dim + c];
            }
            self.solve_in_place(&mut col);
            for i in 0..n {
                out[i * dim + c] = col[i];
            }
        }
        out
    }

    /// `trace(A^{-1})`, computed as `sum_i |L^{-1} e_i|^2`.
    pub fn inverse_trace(&self) -> f64 {
        let n = self.dim();
        let column = |i: usize| {
            let mut y = vec![0.0; n];
            y[i] = 1.0;
            self.forward(&mut y, i);
            y[i..].iter().map(|v| v * v).sum::<f64>()
        };
        #[cfg(feature = "parallel")]
        let parts: Vec<f64> = (0..n).into_par_iter().map(column).collect();
        #[cfg(not(feature = "parallel"))]
        let parts: Vec<f64> = (0..n).map(column).collect();
        parts.iter().sum()
    }
}
