//! Integer partitions and the bits of Young-diagram geometry the rest of the
//! crate needs: conjugation, hooks and contents, boxes, complements and
//! horizontal strips.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};
use std::fmt;

/// A weakly decreasing sequence of positive integers. Trailing zeros are
/// trimmed on construction, so the empty partition is `parts == []`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    /// Sorts and trims, so any multiset of part sizes is accepted.
    pub fn new(mut parts: Vec<usize>) -> Self {
        parts.sort_unstable_by(|a, b| b.cmp(a));
        while parts.last() == Some(&0) {
            parts.pop();
        }
        Partition { parts }
    }

    pub fn empty() -> Self {
        Partition { parts: Vec::new() }
    }

    /// The rectangle `(n^k)`: `k` rows of length `n`.
    pub fn rectangle(n: usize, k: usize) -> Self {
        Partition::new(vec![n; k])
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// `λ_i` with zero past the end (rows are 0-indexed).
    pub fn part(&self, i: usize) -> usize {
        self.parts.get(i).copied().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn length(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn contains(&self, mu: &Partition) -> bool {
        mu.length() <= self.length() && mu.parts.iter().enumerate().all(|(i, &m)| m <= self.parts[i])
    }

    pub fn fits_in_box(&self, k: usize, n: usize) -> bool {
        self.length() <= k && self.part(0) <= n
    }

    /// Cells `(i, j)`, 0-indexed row and column.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parts.iter().enumerate().flat_map(|(i, &l)| (0..l).map(move |j| (i, j)))
    }

    /// `n(λ) = Σ (i-1) λ_i`.
    pub fn n_statistic(&self) -> usize {
        self.parts.iter().enumerate().map(|(i, &l)| i * l).sum()
    }

    /// Number of standard tableaux, `|λ|! / ∏ hooks`.
    pub fn dim(&self) -> BigInt {
        let cd = cell_data(self);
        let hp = cd.hooks.iter().fold(BigInt::one(), |a, &h| a * BigInt::from(h));
        crate::ring::factorial(self.size() as u64) / hp
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "∅");
        }
        let s: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

impl From<Vec<usize>> for Partition {
    fn from(v: Vec<usize>) -> Self {
        Partition::new(v)
    }
}

/// Hooks and contents of every cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellData {
    pub hooks: Vec<usize>,
    pub contents: Vec<i64>,
}

pub fn conjugate(lambda: &Partition) -> Partition {
    let m = lambda.part(0);
    let parts = (0..m).map(|j| lambda.parts.iter().filter(|&&l| l > j).count()).collect();
    Partition::new(parts)
}

pub fn cell_data(lambda: &Partition) -> CellData {
    let conj = conjugate(lambda);
    let mut hooks = Vec::with_capacity(lambda.size());
    let mut contents = Vec::with_capacity(lambda.size());
    for (i, j) in lambda.cells() {
        let arm = lambda.parts[i] - j - 1;
        let leg = conj.part(j) - i - 1;
        hooks.push(arm + leg + 1);
        contents.push(j as i64 - i as i64);
    }
    CellData { hooks, contents }
}

/// Partitions of `m` with at most `k` parts, each at most `n`, in reverse
/// lexicographic order (largest first part first).
pub fn enumerate_box(k: usize, n: usize, m: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    if m > k * n {
        return out;
    }
    let mut cur = Vec::with_capacity(k);
    fill_box(k, n, m, &mut cur, &mut out);
    out
}

fn fill_box(rows: usize, max: usize, rem: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
    if rem == 0 {
        out.push(Partition::new(cur.clone()));
        return;
    }
    if rows == 0 || rem > rows * max {
        return;
    }
    let hi = max.min(rem);
    // The first part must be large enough that the remaining rows can finish.
    let lo = rem.div_ceil(rows);
    for p in (lo..=hi).rev() {
        cur.push(p);
        fill_box(rows - 1, p, rem - p, cur, out);
        cur.pop();
    }
}

/// All partitions of `m` (no box constraint).
pub fn partitions_of(m: usize) -> Vec<Partition> {
    enumerate_box(m, m, m)
}

/// `μ^c_i = N - μ_{k+1-i}` inside the `k × N` box.
pub fn box_complement(mu: &Partition, k: usize, n: usize) -> Result<Partition> {
    if !mu.fits_in_box(k, n) {
        return Err(Error::BoxViolation(mu.to_string(), k, n));
    }
    Ok(Partition::new((0..k).map(|i| n - mu.part(k - 1 - i)).collect()))
}

/// All `ν ⊆ λ` with `λ/ν` a horizontal strip of `j` cells, i.e.
/// `λ_{i+1} ≤ ν_i ≤ λ_i`.
pub fn horizontal_strip_predecessors(lambda: &Partition, j: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    if j > lambda.size() {
        return out;
    }
    let l = lambda.length();
    let mut cur = vec![0usize; l];
    strip_rec(lambda, 0, j, &mut cur, &mut out);
    out
}

fn strip_rec(lambda: &Partition, i: usize, rem: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
    let l = lambda.length();
    if i == l {
        if rem == 0 {
            out.push(Partition::new(cur.clone()));
        }
        return;
    }
    // Capacity left in rows i.. bounds how much we can still remove.
    let cap: usize = (i..l).map(|r| lambda.part(r) - lambda.part(r + 1)).sum();
    if rem > cap {
        return;
    }
    let hi = lambda.part(i);
    let lo = lambda.part(i + 1);
    for v in (lo..=hi).rev() {
        let removed = hi - v;
        if removed > rem {
            break;
        }
        cur[i] = v;
        strip_rec(lambda, i + 1, rem - removed, cur, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[usize]) -> Partition {
        Partition::new(v.to_vec())
    }

    #[test]
    fn conjugates() {
        assert_eq!(conjugate(&p(&[3])), p(&[1, 1, 1]));
        assert_eq!(conjugate(&p(&[2, 1])), p(&[2, 1]));
        assert_eq!(conjugate(&p(&[4, 2, 1])), p(&[3, 2, 1, 1]));
        assert_eq!(conjugate(&Partition::empty()), Partition::empty());
    }

    #[test]
    fn hooks_and_contents() {
        let sorted = |mut v: Vec<usize>| {
            v.sort();
            v
        };
        let sorted_i = |mut v: Vec<i64>| {
            v.sort();
            v
        };
        let cd = cell_data(&p(&[1]));
        assert_eq!((cd.hooks, cd.contents), (vec![1], vec![0]));
        let cd = cell_data(&p(&[2, 1]));
        assert_eq!(sorted(cd.hooks), vec![1, 1, 3]);
        assert_eq!(sorted_i(cd.contents), vec![-1, 0, 1]);
        let cd = cell_data(&p(&[2, 2]));
        assert_eq!(sorted(cd.hooks), vec![1, 2, 2, 3]);
        assert_eq!(sorted_i(cd.contents), vec![-1, 0, 0, 1]);
    }

    #[test]
    fn box_enumeration() {
        assert_eq!(enumerate_box(2, 2, 2), vec![p(&[2]), p(&[1, 1])]);
        assert_eq!(enumerate_box(1, 3, 2), vec![p(&[2])]);
        assert!(enumerate_box(2, 2, 5).is_empty());
        assert_eq!(enumerate_box(3, 3, 0), vec![Partition::empty()]);
    }

    #[test]
    fn complements() {
        assert_eq!(box_complement(&Partition::empty(), 2, 2).unwrap(), p(&[2, 2]));
        assert_eq!(box_complement(&p(&[1]), 2, 2).unwrap(), p(&[2, 1]));
        assert_eq!(box_complement(&p(&[2, 2]), 2, 2).unwrap(), Partition::empty());
        assert!(box_complement(&p(&[3]), 2, 2).is_err());
    }

    #[test]
    fn strips() {
        assert_eq!(horizontal_strip_predecessors(&p(&[2, 1]), 1), vec![p(&[2]), p(&[1, 1])]);
        assert!(horizontal_strip_predecessors(&p(&[2, 1]), 3).is_empty());
        for n in 0..6 {
            for j in 0..=n {
                assert_eq!(horizontal_strip_predecessors(&p(&[n]), j), vec![p(&[n - j])]);
            }
        }
    }

    #[test]
    fn dims_square_sum() {
        for r in 0..=8 {
            let s: BigInt = partitions_of(r).iter().map(|l| l.dim() * l.dim()).sum();
            assert_eq!(s, crate::ring::factorial(r as u64));
        }
    }
}
