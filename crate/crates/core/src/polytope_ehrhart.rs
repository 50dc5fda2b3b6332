//! Lattice-point counts of the Birkhoff, sub-Birkhoff and transportation
//! polytopes by bounded coefficient extraction, a backtracking oracle, and
//! exact interpolation of the Ehrhart polynomial.

use crate::error::{Error, Result};
use crate::partitions::Partition;
use crate::ring::{q, Q};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt::Debug;
use std::ops::{Add, Mul};

/// Coefficient rings a [`BoundedMultiPoly`] can carry.
pub trait Coef: Clone + Debug + PartialEq + Zero + One + Add<Output = Self> + Mul<Output = Self> {}
impl<T: Clone + Debug + PartialEq + Zero + One + Add<Output = T> + Mul<Output = T>> Coef for T {}

/// Polynomial in `caps.len()` variables truncated to `x_i^{caps[i]}`. Any
/// product exponent past a cap is dropped on the spot, so only the
/// coefficients that can still be read survive.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundedMultiPoly<T = BigInt> {
    caps: Vec<usize>,
    terms: BTreeMap<Vec<usize>, T>,
}

impl<T: Coef> BoundedMultiPoly<T> {
    pub fn zero(caps: Vec<usize>) -> Self {
        BoundedMultiPoly { caps, terms: BTreeMap::new() }
    }

    pub fn one(caps: Vec<usize>) -> Self {
        let mut p = Self::zero(caps);
        let n = p.caps.len();
        p.terms.insert(vec![0; n], T::one());
        p
    }

    pub fn nvars(&self) -> usize {
        self.caps.len()
    }

    pub fn caps(&self) -> &[usize] {
        &self.caps
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &T)> {
        self.terms.iter()
    }

    fn fits(&self, e: &[usize]) -> bool {
        e.iter().zip(&self.caps).all(|(a, c)| a <= c)
    }

    /// Adds `c·x^e`; silently ignored if `e` is past a cap.
    pub fn insert(&mut self, e: Vec<usize>, c: T) {
        assert_eq!(e.len(), self.caps.len());
        if !self.fits(&e) || c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e.clone()).or_insert_with(T::zero);
        *slot = slot.clone() + c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn coeff(&self, e: &[usize]) -> T {
        self.terms.get(e).cloned().unwrap_or_else(T::zero)
    }

    /// `h_d[X]` (all monomials of total degree `d`) inside the caps.
    pub fn complete_homogeneous(caps: Vec<usize>, d: usize) -> Self {
        let mut p = Self::zero(caps);
        let n = p.caps.len();
        let mut cur = vec![0; n];
        fill_homogeneous(&p.caps.clone(), 0, d, &mut cur, &mut |e| p.insert(e.to_vec(), T::one()));
        p
    }

    /// `∏ 1/(1 - x_i)` truncated at the caps: every monomial, coefficient 1.
    pub fn all_monomials(caps: Vec<usize>) -> Self {
        let mut p = Self::one(caps.clone());
        for i in 0..caps.len() {
            let mut g = Self::zero(caps.clone());
            for e in 0..=caps[i] {
                let mut ex = vec![0; caps.len()];
                ex[i] = e;
                g.insert(ex, T::one());
            }
            p = p.mul(&g);
        }
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.caps, other.caps);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert(e.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, s: &T) -> Self {
        let mut out = Self::zero(self.caps.clone());
        for (e, c) in &self.terms {
            out.insert(e.clone(), c.clone() * s.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.caps, other.caps, "cap vectors differ");
        let mut acc: HashMap<Vec<usize>, T> = HashMap::new();
        let mut e = vec![0; self.caps.len()];
        for (ea, ca) in &self.terms {
            'inner: for (eb, cb) in &other.terms {
                for i in 0..e.len() {
                    e[i] = ea[i] + eb[i];
                    if e[i] > self.caps[i] {
                        continue 'inner;
                    }
                }
                let prod = ca.clone() * cb.clone();
                match acc.get_mut(&e) {
                    Some(v) => *v = v.clone() + prod,
                    None => {
                        acc.insert(e.clone(), prod);
                    }
                }
            }
        }
        let terms = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        BoundedMultiPoly { caps: self.caps.clone(), terms }
    }

    pub fn pow(&self, n: usize) -> Self {
        let mut out = Self::one(self.caps.clone());
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }
}

fn fill_homogeneous(caps: &[usize], i: usize, rem: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if i == caps.len() {
        if rem == 0 {
            f(cur);
        }
        return;
    }
    let room: usize = caps[i + 1..].iter().sum();
    let lo = rem.saturating_sub(room);
    for v in lo..=caps[i].min(rem) {
        cur[i] = v;
        fill_homogeneous(caps, i + 1, rem - v, cur, f);
    }
    cur[i] = 0;
}

fn guard(k: usize, t: usize) -> Result<()> {
    if (t + 1).saturating_pow(k as u32) > 2_000_000 {
        return Err(Error::ResourceLimit(format!("(t+1)^k = {}^{k} monomials", t + 1)));
    }
    Ok(())
}

/// `L(t, B_k) = [X^t] h_t[X]^k`.
pub fn ehrhart_birkhoff(k: usize, t: usize) -> Result<BigInt> {
    if k == 0 {
        return Err(Error::Range("k must be at least 1".into()));
    }
    guard(k, t)?;
    let h = BoundedMultiPoly::<BigInt>::complete_homogeneous(vec![t; k], t);
    Ok(h.pow(k).coeff(&vec![t; k]))
}

/// `L(t, S_k) = [X^t] H[X] h_t[1 + X]^k`, where the row slacks contribute the
/// full (capped) `H[X]` and not just its terms of degree at most `t`.
pub fn ehrhart_subbirkhoff(k: usize, t: usize) -> Result<BigInt> {
    if k == 0 {
        return Err(Error::Range("k must be at least 1".into()));
    }
    guard(k, t)?;
    let caps = vec![t; k];
    let mut col = BoundedMultiPoly::<BigInt>::zero(caps.clone());
    for s in 0..=t {
        col = col.add(&BoundedMultiPoly::complete_homogeneous(caps.clone(), s));
    }
    let slack = BoundedMultiPoly::all_monomials(caps.clone());
    Ok(slack.mul(&col.pow(k)).coeff(&caps))
}

/// `L(ℓ, T_{λ,μ}) = [X^{ℓλ}] ∏_j h_{ℓμ_j}[X]`.
pub fn ehrhart_transport(lambda: &Partition, mu: &Partition, l: usize) -> Result<BigInt> {
    if lambda.size() != mu.size() {
        return Err(Error::SizeMismatch(lambda.size(), mu.size()));
    }
    if lambda.is_empty() {
        return Ok(BigInt::one());
    }
    let caps: Vec<usize> = lambda.parts().iter().map(|p| p * l).collect();
    let cells: usize = caps.iter().map(|c| c + 1).product();
    if cells > 2_000_000 {
        return Err(Error::ResourceLimit(format!("{cells} monomials")));
    }
    let mut acc = BoundedMultiPoly::<BigInt>::one(caps.clone());
    for &m in mu.parts() {
        acc = acc.mul(&BoundedMultiPoly::complete_homogeneous(caps.clone(), l * m));
    }
    Ok(acc.coeff(&caps))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SumMode {
    Equal,
    AtMost,
}

/// Direct enumeration of nonnegative integer matrices with the given row and
/// column sums (exact, or bounded above). Only for tiny inputs.
pub fn brute_force_count(rows: &[usize], cols: &[usize], mode: SumMode) -> BigInt {
    let mut col_left = cols.to_vec();
    let mut count = BigInt::zero();
    brute_row(rows, 0, &mut col_left, mode, &mut count);
    count
}

fn brute_row(rows: &[usize], r: usize, col_left: &mut Vec<usize>, mode: SumMode, count: &mut BigInt) {
    if r == rows.len() {
        if mode == SumMode::AtMost || col_left.iter().all(|&c| c == 0) {
            *count += 1;
        }
        return;
    }
    brute_entry(rows, r, 0, rows[r], col_left, mode, count);
}

fn brute_entry(
    rows: &[usize],
    r: usize,
    j: usize,
    left: usize,
    col_left: &mut Vec<usize>,
    mode: SumMode,
    count: &mut BigInt,
) {
    if j == col_left.len() {
        if mode == SumMode::AtMost || left == 0 {
            brute_row(rows, r + 1, col_left, mode, count);
        }
        return;
    }
    for v in 0..=left.min(col_left[j]) {
        col_left[j] -= v;
        brute_entry(rows, r, j + 1, left - v, col_left, mode, count);
        col_left[j] += v;
    }
}

/// Exact polynomial in `t` (coefficients in increasing degree).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EhrhartPolynomial {
    pub coefficients: Vec<Q>,
    pub polytope: String,
}

impl EhrhartPolynomial {
    pub fn degree(&self) -> usize {
        self.coefficients.iter().rposition(|c| !c.is_zero()).unwrap_or(0)
    }

    pub fn leading(&self) -> Q {
        self.coefficients[self.degree()].clone()
    }

    pub fn eval(&self, t: &Q) -> Q {
        self.coefficients.iter().rev().fold(Q::zero(), |acc, c| acc * t + c)
    }
}

/// Newton interpolation through the first `degree + 1` samples; any further
/// samples must lie on the result.
pub fn interpolate_ehrhart(samples: &[(i64, BigInt)], degree: usize, polytope: &str) -> Result<EhrhartPolynomial> {
    if samples.len() < degree + 1 {
        return Err(Error::DegreeDeficiency { needed: degree + 1, got: samples.len() });
    }
    let (fit, extra) = samples.split_at(degree + 1);
    let xs: Vec<Q> = fit.iter().map(|(t, _)| q(*t)).collect();
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            if xs[i] == xs[j] {
                return Err(Error::Range(format!("repeated node t = {}", fit[i].0)));
            }
        }
    }
    // divided-difference table, in place
    let mut dd: Vec<Q> = fit.iter().map(|(_, v)| Q::from_integer(v.clone())).collect();
    for lvl in 1..dd.len() {
        for i in (lvl..dd.len()).rev() {
            dd[i] = (&dd[i] - &dd[i - 1]) / (&xs[i] - &xs[i - lvl]);
        }
    }
    // expand the Newton form into monomial coefficients
    let mut coeffs = vec![Q::zero(); dd.len()];
    for i in (0..dd.len()).rev() {
        // coeffs := coeffs·(t - x_i) + dd[i]
        let mut next = vec![Q::zero(); dd.len()];
        for (d, c) in coeffs.iter().enumerate() {
            if d + 1 < next.len() {
                next[d + 1] += c;
            }
            next[d] -= c * &xs[i];
        }
        next[0] += &dd[i];
        coeffs = next;
    }
    let poly = EhrhartPolynomial { coefficients: coeffs, polytope: polytope.to_string() };
    for (t, v) in extra {
        if poly.eval(&q(*t)) != Q::from_integer(v.clone()) {
            return Err(Error::Residual(*t));
        }
    }
    Ok(poly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::qf;

    #[test]
    fn birkhoff_small() {
        assert_eq!(ehrhart_birkhoff(3, 0).unwrap(), BigInt::one());
        assert_eq!(ehrhart_birkhoff(3, 1).unwrap(), BigInt::from(6));
        assert_eq!(ehrhart_birkhoff(3, 2).unwrap(), BigInt::from(21));
    }

    #[test]
    fn subbirkhoff_small() {
        let want = [1, 7, 26, 70];
        for (t, w) in want.iter().enumerate() {
            assert_eq!(ehrhart_subbirkhoff(2, t).unwrap(), BigInt::from(*w));
        }
        for t in 0..6 {
            assert_eq!(ehrhart_subbirkhoff(1, t).unwrap(), BigInt::from(t + 1));
        }
    }

    #[test]
    fn transport_small() {
        let p = |v: &[usize]| Partition::new(v.to_vec());
        assert_eq!(ehrhart_transport(&p(&[3]), &p(&[3]), 2).unwrap(), BigInt::one());
        assert_eq!(ehrhart_transport(&p(&[1, 1]), &p(&[1, 1]), 1).unwrap(), BigInt::from(2));
        assert_eq!(ehrhart_transport(&p(&[2, 1]), &p(&[2, 1]), 1).unwrap(), BigInt::from(2));
        assert!(ehrhart_transport(&p(&[2]), &p(&[1]), 1).is_err());
    }

    #[test]
    fn brute_small() {
        assert_eq!(brute_force_count(&[0, 0], &[0, 0], SumMode::Equal), BigInt::one());
        assert_eq!(brute_force_count(&[1, 1, 1], &[1, 1, 1], SumMode::Equal), BigInt::from(6));
        assert_eq!(brute_force_count(&[1, 1], &[1, 1], SumMode::AtMost), BigInt::from(7));
    }

    #[test]
    fn interpolation() {
        let s: Vec<_> = (0..4).map(|t| (t, BigInt::from(t + 1))).collect();
        let p = interpolate_ehrhart(&s, 1, "B_2").unwrap();
        assert_eq!(p.coefficients, vec![q(1), q(1)]);
        let s: Vec<_> = (0..5).map(|t| (t as i64, ehrhart_birkhoff(3, t).unwrap())).collect();
        assert_eq!(interpolate_ehrhart(&s, 4, "B_3").unwrap().leading(), qf(1, 8));
        assert!(matches!(interpolate_ehrhart(&s[..2], 4, "B_3"), Err(Error::DegreeDeficiency { .. })));
        let mut bad = s.clone();
        bad.push((5, BigInt::from(0)));
        assert_eq!(interpolate_ehrhart(&bad, 4, "B_3"), Err(Error::Residual(5)));
    }
}
