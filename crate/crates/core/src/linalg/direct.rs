//! Direct solvers: banded LU with partial pivoting after a reverse
//! Cuthill-McKee reordering, and dense Gaussian elimination.

use std::collections::VecDeque;

use log::debug;

use super::sparse::SparseMatrix;
use crate::error::{FemError, Result};

/// Largest band storage (in entries) the direct solver accepts; equal to a
/// dense matrix with 5000 unknowns.
pub const MAX_DIRECT_STORAGE: usize = 5000 * 5000;

/// Reverse Cuthill-McKee permutation of the symmetrized sparsity pattern:
/// `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &SparseMatrix) -> Vec<usize> {
    let n = a.rows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &j in a.row(i).0 {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(seed, &adj, &degree);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// George-Liu style search: repeat BFS from the farthest low-degree node
/// while the eccentricity grows.
fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let levels = |s: usize| -> (usize, Vec<usize>) {
        let mut dist = std::collections::HashMap::new();
        dist.insert(s, 0usize);
        let mut queue = VecDeque::from([s]);
        let mut last_level = vec![s];
        let mut depth = 0;
        while let Some(v) = queue.pop_front() {
            let d = dist[&v];
            for &w in &adj[v] {
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(w) {
                    e.insert(d + 1);
                    queue.push_back(w);
                    if d + 1 > depth {
                        depth = d + 1;
                        last_level.clear();
                    }
                    if d + 1 == depth {
                        last_level.push(w);
                    }
                }
            }
        }
        (depth, last_level)
    };
    let mut current = seed;
    let (mut ecc, mut far) = levels(current);
    for _ in 0..8 {
        let Some(&cand) = far.iter().min_by_key(|&&v| (degree[v], v)) else { break };
        let (e, f) = levels(cand);
        if e <= ecc {
            break;
        }
        current = cand;
        ecc = e;
        far = f;
    }
    current
}

/// Solves `A x = b` for a square nonsingular sparse `A`.
///
/// The matrix is reordered by reverse Cuthill-McKee and factored in band
/// storage with partial pivoting. Systems whose band would need more than
/// [`MAX_DIRECT_STORAGE`] entries are refused.
pub fn lu_solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if !a.is_square() || b.len() != n {
        return Err(FemError::Dimension(format!(
            "lu: matrix is {:?}, right-hand side has length {}",
            a.shape(),
            b.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if b.iter().chain(a.values()).any(|v| !v.is_finite()) {
        return Err(FemError::Numeric("system contains NaN or infinity".into()));
    }
    let perm = reverse_cuthill_mckee(a);
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let (mut kl, mut ku) = (0usize, 0usize);
    for i in 0..n {
        for &j in a.row(i).0 {
            let (pi, pj) = (inv[i], inv[j]);
            if pi > pj {
                kl = kl.max(pi - pj);
            } else {
                ku = ku.max(pj - pi);
            }
        }
    }
    let width = 2 * kl + ku + 1;
    if n.saturating_mul(width) > MAX_DIRECT_STORAGE {
        return Err(FemError::InvalidArgument(format!(
            "system with {n} unknowns and bandwidth {kl}+{ku} exceeds the direct solver limit"
        )));
    }
    let mut band = Band::new(n, kl, ku);
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            *band.at(inv[i], inv[j]) += v;
        }
    }
    let scale = a.max_abs();
    let mut rhs: Vec<f64> = perm.iter().map(|&old| b[old]).collect();
    band.factor(scale)?;
    band.solve(&mut rhs);
    let mut x = vec![0.0; n];
    for (new, &old) in perm.iter().enumerate() {
        x[old] = rhs[new];
    }
    debug!("lu: n = {n}, bandwidth {kl}+{ku}");
    Ok(x)
}

/// Row-wise band storage; row `i` holds columns `i - kl ..= i + kl + ku`.
struct Band {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
}

impl Band {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Band { n, kl, ku, width, data: vec![0.0; n * width], pivots: vec![0; n] }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.idx(i, j);
        &mut self.data[k]
    }

    fn factor(&mut self, scale: f64) -> Result<()> {
        let n = self.n;
        let tiny = n as f64 * f64::EPSILON * scale;
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + self.kl + self.ku).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tiny) {
                return Err(FemError::Singular { pivot: k });
            }
            self.pivots[k] = p;
            if p != k {
                for c in k..=last_col {
                    let (a, b) = (self.idx(k, c), self.idx(p, c));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l == 0.0 {
                    continue;
                }
                let (row_i, row_k) = (self.idx(i, k + 1), self.idx(k, k + 1));
                for off in 0..last_col - k {
                    self.data[row_i + off] -= l * self.data[row_k + off];
                }
            }
        }
        Ok(())
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            b.swap(k, self.pivots[k]);
            let bk = b[k];
            for i in k + 1..=(k + self.kl).min(n - 1) {
                b[i] -= self.data[self.idx(i, k)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for c in k + 1..=(k + self.kl + self.ku).min(n - 1) {
                s -= self.data[self.idx(k, c)] * b[c];
            }
            b[k] = s / self.data[self.idx(k, k)];
        }
    }
}

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = a.len();
    if b.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(FemError::Dimension("dense_solve needs a square system".into()));
    }
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let tiny = n as f64 * f64::EPSILON * scale;
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).expect("non-empty range");
        if !(a[p][k].abs() > tiny) {
            return Err(FemError::Singular { pivot: k });
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let l = a[i][k] / a[k][k];
            if l == 0.0 {
                continue;
            }
            for j in k..n {
                a[i][j] -= l * a[k][j];
            }
            b[i] -= l * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Ok(x)
}

/// Cholesky test: `true` if the dense symmetric matrix is positive definite.
pub fn is_positive_definite(a: &[Vec<f64>]) -> bool {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let d = a[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if !(d > 0.0) {
            return false;
        }
        l[j][j] = d.sqrt();
        for i in j + 1..n {
            let s = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            l[i][j] = s / l[j][j];
        }
    }
    true
}
