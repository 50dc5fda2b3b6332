//! The two scalar rings: exact rationals and complex doubles.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::ops::Neg;

pub type Q = BigRational;
pub type C64 = Complex64;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn q_to_f64(x: &Q) -> f64 {
    // to_f64 on BigRational handles huge numerators and denominators.
    x.to_f64().unwrap_or_else(|| {
        let n = x.numer().to_f64().unwrap_or(f64::NAN);
        let d = x.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

pub fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 || n < 0 || k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Scalars the symmetric-function engine works over.
pub trait Scalar:
    Clone
    + std::fmt::Debug
    + Zero
    + One
    + Neg<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Div<Output = Self>
    + Send
    + Sync
{
    fn from_i64(n: i64) -> Self;
    fn from_q(x: &Q) -> Self;
    fn det(m: Vec<Vec<Self>>) -> Self;
}

impl Scalar for Q {
    fn from_i64(n: i64) -> Self {
        q(n)
    }
    fn from_q(x: &Q) -> Self {
        x.clone()
    }
    fn det(m: Vec<Vec<Self>>) -> Self {
        det_fraction_free(m)
    }
}

impl Scalar for C64 {
    fn from_i64(n: i64) -> Self {
        C64::new(n as f64, 0.0)
    }
    fn from_q(x: &Q) -> Self {
        C64::new(q_to_f64(x), 0.0)
    }
    fn det(m: Vec<Vec<Self>>) -> Self {
        det_partial_pivot(m)
    }
}

/// Bareiss elimination. Exact; every intermediate is a minor of the input.
pub fn det_fraction_free(mut a: Vec<Vec<Q>>) -> Q {
    let n = a.len();
    if n == 0 {
        return Q::one();
    }
    let mut sign = Q::one();
    let mut prev = Q::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return Q::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    sign * a[n - 1][n - 1].clone()
}

/// Bareiss over the integers; divisions are exact.
pub fn det_bigint(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut neg = false;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    neg = !neg;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    if neg {
        -d
    } else {
        d
    }
}

pub fn det_partial_pivot(mut a: Vec<Vec<C64>>) -> C64 {
    let n = a.len();
    let mut det = C64::one();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].norm().partial_cmp(&a[j][k].norm()).unwrap())
            .unwrap();
        if a[p][k].norm() == 0.0 {
            return C64::zero();
        }
        if p != k {
            a.swap(p, k);
            det = -det;
        }
        det *= a[k][k];
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                let v = a[k][j];
                a[i][j] -= f * v;
            }
        }
    }
    det
}

pub fn abs_q(x: &Q) -> Q {
    x.abs()
}
