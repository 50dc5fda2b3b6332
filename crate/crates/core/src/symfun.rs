//! Truncated complete homogeneous series `(h_0, …, h_D)` for the alphabets
//! the crate evaluates, and the Schur-type quantities built on them:
//! rectangular Jacobi–Trudi determinants, Weyl dimensions, skew counts in
//! `m` letters and Kostka numbers.

use crate::error::{Error, Result};
use crate::partitions::{cell_data, horizontal_strip_predecessors, Partition};
use crate::ring::{binomial, det_bigint, Scalar, Q};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::HashMap;

/// `h_0, …, h_D` of some alphabet, over a scalar ring.
#[derive(Clone, Debug, PartialEq)]
pub struct HSeries<T> {
    scalars: Vec<T>,
}

impl<T: Scalar> HSeries<T> {
    pub fn from_scalars(scalars: Vec<T>) -> Self {
        assert!(!scalars.is_empty(), "an h-series holds at least h_0");
        HSeries { scalars }
    }

    pub fn degree_cap(&self) -> usize {
        self.scalars.len() - 1
    }

    /// `h_m`, with the Jacobi–Trudi convention `h_m = 0` for `m < 0`.
    pub fn h(&self, m: i64) -> T {
        if m < 0 {
            return T::zero();
        }
        self.scalars[m as usize].clone()
    }

    pub fn scalars(&self) -> &[T] {
        &self.scalars
    }

    /// Series product, i.e. the h-series of the union of the two alphabets.
    pub fn union(&self, other: &Self) -> Self {
        let d = self.degree_cap().min(other.degree_cap());
        let mut out = vec![T::zero(); d + 1];
        for (i, a) in self.scalars.iter().take(d + 1).enumerate() {
            for (j, b) in other.scalars.iter().take(d + 1 - i).enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        HSeries { scalars: out }
    }
}

/// Expands `∏ (1 - t x_i)^{-1}` to degree `d`, one geometric factor at a time.
pub fn hseries_from_points<T: Scalar>(points: &[T], d: usize) -> HSeries<T> {
    let mut h = vec![T::zero(); d + 1];
    h[0] = T::one();
    for x in points {
        // Multiplying by 1/(1 - t x) is the prefix recurrence h_m += x h_{m-1}.
        for m in 1..=d {
            h[m] = h[m].clone() + x.clone() * h[m - 1].clone();
        }
    }
    HSeries { scalars: h }
}

/// `h_m[1^κ] = κ(κ+1)…(κ+m-1)/m!`.
pub fn hseries_ones(kappa: &Q, d: usize) -> HSeries<Q> {
    assert!(*kappa > Q::zero(), "κ must be positive");
    let mut h = Vec::with_capacity(d + 1);
    let mut cur = Q::one();
    h.push(cur.clone());
    for m in 1..=d {
        cur = cur * (kappa + Q::from_integer(BigInt::from(m as i64 - 1))) / Q::from_integer(BigInt::from(m as i64));
        h.push(cur.clone());
    }
    HSeries { scalars: h }
}

/// Coefficients of `∏(1 - t y_j) / ∏(1 - t x_i)`.
pub fn hseries_supersym<T: Scalar>(x: &[T], y: &[T], d: usize) -> HSeries<T> {
    let mut h = hseries_from_points(x, d).scalars;
    for yj in y {
        // Multiplying by (1 - t y) runs the recurrence downwards.
        for m in (1..=d).rev() {
            h[m] = h[m].clone() - yj.clone() * h[m - 1].clone();
        }
    }
    HSeries { scalars: h }
}

/// `s_{N^k} = det(h_{N + j - i})_{1 ≤ i,j ≤ k}`.
pub fn schur_rect_jacobi_trudi<T: Scalar>(n: usize, k: usize, hs: &HSeries<T>) -> Result<T> {
    if k == 0 {
        return Ok(T::one());
    }
    let needed = n + k - 1;
    if hs.degree_cap() < needed {
        return Err(Error::CapExceeded { cap: hs.degree_cap(), needed });
    }
    let m = (0..k)
        .map(|i| (0..k).map(|j| hs.h(n as i64 + j as i64 - i as i64)).collect())
        .collect();
    Ok(T::det(m))
}

/// General Jacobi–Trudi `det(h_{λ_i - μ_j - i + j})` for a skew shape.
pub fn schur_skew_jacobi_trudi<T: Scalar>(lambda: &Partition, mu: &Partition, hs: &HSeries<T>) -> Result<T> {
    if !lambda.contains(mu) {
        return Err(Error::Containment { inner: mu.to_string(), outer: lambda.to_string() });
    }
    let l = lambda.length();
    if l == 0 {
        return Ok(T::one());
    }
    let needed = lambda.part(0);
    if hs.degree_cap() < needed {
        return Err(Error::CapExceeded { cap: hs.degree_cap(), needed });
    }
    let m = (0..l)
        .map(|i| {
            (0..l)
                .map(|j| hs.h(lambda.part(i) as i64 - mu.part(j) as i64 - i as i64 + j as i64))
                .collect()
        })
        .collect();
    Ok(T::det(m))
}

/// `s_λ(1^n) = ∏_{i<j} (λ_i - λ_j + j - i)/(j - i)`.
pub fn weyl_dimension(lambda: &Partition, n: usize) -> Result<BigInt> {
    if lambda.length() > n {
        return Err(Error::Length { len: lambda.length(), n });
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..n {
        for j in i + 1..n {
            num *= BigInt::from(lambda.part(i) as i64 - lambda.part(j) as i64 + (j - i) as i64);
            den *= BigInt::from((j - i) as i64);
        }
    }
    Ok(num / den)
}

/// Hook-content form `∏ (n + c)/h`; an independent route to [`weyl_dimension`].
pub fn hook_content_dimension(lambda: &Partition, n: usize) -> BigInt {
    let cd = cell_data(lambda);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for (h, c) in cd.hooks.iter().zip(&cd.contents) {
        num *= BigInt::from(n as i64 + c);
        den *= BigInt::from(*h as i64);
    }
    num / den
}

/// Number of semistandard fillings of `λ/μ` with `m` letters:
/// `det(C(λ_i - μ_j - i + j + m - 1, m - 1))`.
pub fn skew_schur_ones(lambda: &Partition, mu: &Partition, m: usize) -> Result<BigInt> {
    if !lambda.contains(mu) {
        return Err(Error::Containment { inner: mu.to_string(), outer: lambda.to_string() });
    }
    let l = lambda.length();
    let h = |r: i64| -> BigInt {
        if r < 0 {
            BigInt::zero()
        } else if m == 0 {
            if r == 0 {
                BigInt::one()
            } else {
                BigInt::zero()
            }
        } else {
            binomial(r + m as i64 - 1, m as i64 - 1)
        }
    };
    let a = (0..l)
        .map(|i| {
            (0..l)
                .map(|j| h(lambda.part(i) as i64 - mu.part(j) as i64 - i as i64 + j as i64))
                .collect()
        })
        .collect();
    Ok(det_bigint(a))
}

/// Kostka number `K_{λ,μ}` for a composition `μ`, by peeling off the
/// largest letter as a horizontal strip. The memo lives for one call.
pub fn kostka(lambda: &Partition, mu: &[usize]) -> Result<BigInt> {
    let total: usize = mu.iter().sum();
    if total != lambda.size() {
        return Err(Error::SizeMismatch(lambda.size(), total));
    }
    let mut memo = HashMap::new();
    Ok(kostka_rec(lambda, mu, &mut memo))
}

fn kostka_rec(lambda: &Partition, mu: &[usize], memo: &mut HashMap<(Partition, usize), BigInt>) -> BigInt {
    if mu.is_empty() {
        return if lambda.is_empty() { BigInt::one() } else { BigInt::zero() };
    }
    // A tableau in r letters has at most r rows.
    if lambda.length() > mu.len() {
        return BigInt::zero();
    }
    let key = (lambda.clone(), mu.len());
    if let Some(v) = memo.get(&key) {
        return v.clone();
    }
    let (last, rest) = mu.split_last().unwrap();
    let mut acc = BigInt::zero();
    for nu in horizontal_strip_predecessors(lambda, *last) {
        acc += kostka_rec(&nu, rest, memo);
    }
    memo.insert(key, acc.clone());
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{q, C64};

    fn p(v: &[usize]) -> Partition {
        Partition::new(v.to_vec())
    }

    #[test]
    fn point_series() {
        let h = hseries_from_points(&[q(7)], 5);
        for m in 0..=5 {
            assert_eq!(h.h(m), q(7i64.pow(m as u32)));
        }
        let h = hseries_from_points(&[q(1), q(1)], 6);
        for m in 0..=6 {
            assert_eq!(h.h(m), q(m + 1));
        }
        assert_eq!(hseries_from_points(&[q(2), q(3)], 2).h(2), q(19));
        assert_eq!(hseries_from_points::<Q>(&[], 3).h(3), q(0));
    }

    #[test]
    fn ones_series() {
        let h = hseries_ones(&q(2), 5);
        for m in 0..=5 {
            assert_eq!(h.h(m), q(m + 1));
        }
        assert_eq!(hseries_ones(&q(3), 2).h(2), q(6));
        assert!(hseries_ones(&q(1), 4).scalars().iter().all(|v| *v == q(1)));
    }

    #[test]
    fn supersym_series() {
        let (x, y) = (q(5), q(3));
        let h = hseries_supersym(&[x.clone()], &[y.clone()], 3);
        assert_eq!(h.h(1), &x - &y);
        assert_eq!(h.h(2), &x * &x - &x * &y);
        let h = hseries_supersym(&[q(1), q(1)], &[q(1)], 6);
        assert!(h.scalars().iter().all(|v| *v == q(1)));
        let xs = [q(2), q(-3), q(5)];
        let h = hseries_supersym(&xs, &xs, 6);
        assert_eq!(h.h(0), q(1));
        assert!(h.scalars()[1..].iter().all(|v| v.is_zero()));
    }

    #[test]
    fn rectangles() {
        let hs = hseries_from_points(&[q(2), q(3)], 4);
        assert_eq!(schur_rect_jacobi_trudi(1, 1, &hs).unwrap(), q(5));
        assert_eq!(schur_rect_jacobi_trudi(2, 2, &hseries_ones(&q(4), 4)).unwrap(), q(20));
        for n in 0..8 {
            assert_eq!(schur_rect_jacobi_trudi(n, 1, &hseries_ones(&q(2), n)).unwrap(), q(n as i64 + 1));
        }
        assert!(schur_rect_jacobi_trudi(3, 3, &hseries_ones(&q(2), 4)).is_err());
        // complex ring reproduces the exact value
        let hc = hseries_from_points(&[C64::new(1.0, 0.0); 4], 4);
        assert!((schur_rect_jacobi_trudi(2, 2, &hc).unwrap() - C64::new(20.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn dimensions() {
        assert_eq!(weyl_dimension(&p(&[1]), 7).unwrap(), BigInt::from(7));
        assert_eq!(weyl_dimension(&p(&[9]), 2).unwrap(), BigInt::from(10));
        assert_eq!(weyl_dimension(&p(&[2, 2]), 4).unwrap(), BigInt::from(20));
        assert!(weyl_dimension(&p(&[1, 1, 1]), 2).is_err());
        for lam in crate::partitions::partitions_of(6) {
            for n in lam.length()..7 {
                assert_eq!(weyl_dimension(&lam, n).unwrap(), hook_content_dimension(&lam, n));
            }
        }
    }

    #[test]
    fn skew_counts() {
        assert_eq!(skew_schur_ones(&p(&[3, 1]), &p(&[3, 1]), 3).unwrap(), BigInt::one());
        assert_eq!(skew_schur_ones(&p(&[2]), &p(&[]), 1).unwrap(), BigInt::one());
        assert_eq!(skew_schur_ones(&p(&[2, 2]), &p(&[1]), 2).unwrap(), BigInt::from(2));
        assert!(skew_schur_ones(&p(&[1]), &p(&[2]), 2).is_err());
    }

    #[test]
    fn kostkas() {
        assert_eq!(kostka(&p(&[3, 1]), &[3, 1]).unwrap(), BigInt::one());
        assert_eq!(kostka(&p(&[2, 1]), &[1, 1, 1]).unwrap(), BigInt::from(2));
        assert_eq!(kostka(&p(&[2, 2]), &[1, 1, 1, 1]).unwrap(), BigInt::from(2));
        assert!(kostka(&p(&[2, 2]), &[1, 1]).is_err());
    }
}
