use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Multi-index `α = (α₁, …, αₙ)` labelling the tensor Hermite function `Φ_α`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Self {
        Self(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    /// `e_j` scaled by `k`.
    pub fn axis(dim: usize, j: usize, k: usize) -> Self {
        let mut v = vec![0; dim];
        v[j] = k;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total degree `|α|`.
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, j: usize) -> usize {
        self.0[j]
    }

    pub fn with(&self, j: usize, value: usize) -> Self {
        let mut v = self.0.clone();
        v[j] = value;
        Self(v)
    }

    pub fn add(&self, other: &MultiIndex) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self ≤ other` componentwise.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn factorial_ln(&self) -> f64 {
        self.0.iter().map(|&a| ln_factorial(a)).sum()
    }
}

impl From<Vec<usize>> for MultiIndex {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

/// All multi-indices of dimension `dim` with `|α| = degree`, in descending
/// lexicographic order (`(k,0,…)` first).
pub fn indices_of_degree(dim: usize, degree: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0; dim];
    fill(dim, 0, degree, &mut cur, &mut out);
    out
}

fn fill(dim: usize, pos: usize, remaining: usize, cur: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
    if dim == 0 {
        if remaining == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return;
    }
    if pos + 1 == dim {
        cur[pos] = remaining;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for a in (0..=remaining).rev() {
        cur[pos] = a;
        fill(dim, pos + 1, remaining - a, cur, out);
    }
    cur[pos] = 0;
}

/// The enumeration of `{α : |α| ≤ N}` shared by every dense coefficient
/// vector and matrix in the crate: ordered by total degree, then
/// descending lexicographic within a degree. `E_k` is therefore always a
/// prefix of `E_N` for `k ≤ N`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteBasis {
    dim: usize,
    degree: usize,
    indices: Vec<MultiIndex>,
    level_start: Vec<usize>,
    lookup: HashMap<MultiIndex, usize>,
}

impl HermiteBasis {
    pub fn new(dim: usize, degree: usize) -> Self {
        assert!(dim >= 1, "spatial dimension must be positive");
        let mut indices = Vec::new();
        let mut level_start = Vec::with_capacity(degree + 2);
        for d in 0..=degree {
            level_start.push(indices.len());
            indices.extend(indices_of_degree(dim, d));
        }
        level_start.push(indices.len());
        let lookup = indices.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        Self { dim, degree, indices, level_start, lookup }
    }

    pub fn shared(dim: usize, degree: usize) -> Arc<Self> {
        Arc::new(Self::new(dim, degree))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn index_of(&self, alpha: &MultiIndex) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    /// Number of basis functions with `|α| ≤ k` (the size of `E_k`).
    pub fn prefix_len(&self, k: usize) -> usize {
        self.level_start[(k + 1).min(self.degree + 1)]
    }

    /// Range of positions holding level `|α| = k`.
    pub fn level_range(&self, k: usize) -> std::ops::Range<usize> {
        if k > self.degree {
            return self.len()..self.len();
        }
        self.level_start[k]..self.level_start[k + 1]
    }
}

/// `dim E_N = C(N+n, n)`.
pub fn span_dimension(dim: usize, degree: usize) -> usize {
    let mut num: u128 = 1;
    for i in 1..=dim as u128 {
        num = num * (degree as u128 + i) / i;
    }
    num as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_is_degree_then_lex() {
        let b = HermiteBasis::new(2, 2);
        let got: Vec<Vec<usize>> = b.indices().iter().map(|a| a.entries().to_vec()).collect();
        assert_eq!(got, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(b.prefix_len(0), 1);
        assert_eq!(b.prefix_len(1), 3);
        assert_eq!(b.level_range(2), 3..6);
    }

    #[test]
    fn sizes_match_binomial() {
        for dim in 1..=3 {
            for n in 0..8 {
                assert_eq!(HermiteBasis::new(dim, n).len(), span_dimension(dim, n));
            }
        }
    }

    #[test]
    fn lookup_is_inverse_of_enumeration() {
        let b = HermiteBasis::new(3, 4);
        for (i, a) in b.indices().iter().enumerate() {
            assert_eq!(b.index_of(a), Some(i));
            assert_eq!(a.order(), a.entries().iter().sum::<usize>());
        }
    }
}
