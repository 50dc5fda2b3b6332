//! Exact finite-`N` values of the CUE functionals, each reduced to a
//! symmetric-function evaluation.

use crate::error::{Error, Result};
use crate::partitions::{box_complement, cell_data, enumerate_box, partitions_of, Partition};
use crate::polytope_ehrhart::BoundedMultiPoly;
use crate::ring::{q, Scalar, C64, Q};
use crate::symfun::{
    hseries_from_points, hseries_ones, hseries_supersym, kostka, schur_rect_jacobi_trudi, skew_schur_ones,
    weyl_dimension,
};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::HashMap;
use std::f64::consts::PI;

/// `E|Z_{U_N}(1)|^{2k} = s_{N^k}[1^{2k}]`, by Jacobi–Trudi and checked
/// against the Weyl dimension of `(N^k)` in `GL_{2k}`.
pub fn ks_moment(n: usize, k: usize) -> Result<BigInt> {
    if n < 1 || k < 1 {
        return Err(Error::Range(format!("ks_moment needs N, k >= 1 (got {n}, {k})")));
    }
    let hs = hseries_ones(&q(2 * k as i64), n + k - 1);
    let jt = schur_rect_jacobi_trudi(n, k, &hs)?;
    let wd = weyl_dimension(&Partition::rectangle(n, k), 2 * k)?;
    if jt != Q::from_integer(wd.clone()) {
        return Err(Error::Inconsistent(format!("Jacobi–Trudi {jt} vs Weyl {wd} at N={n}, k={k}")));
    }
    Ok(wd)
}

/// `E|sc_m(U_N)|^{2k}`: the number of SSYT of shape `(N^k)` with content
/// `(m^k, (N-m)^k)`.
pub fn secular_moment(n: usize, m: usize, k: usize) -> Result<BigInt> {
    if m > n {
        return Err(Error::Range(format!("secular_moment needs m <= N (got m={m}, N={n})")));
    }
    let mut content = vec![m; k];
    content.extend(std::iter::repeat_n(n - m, k));
    kostka(&Partition::rectangle(n, k), &content)
}

/// `I_k(m, N) = E|[x^m] det(I - xU)^k|^2`, as the box-complement sum
/// `Σ_{μ ⊆ k×N, |μ|=m} s_μ(1^k) s_{μ^c}(1^k)`. The sum includes the
/// `sc_0` terms of the coefficient-extraction definition.
pub fn kr3g_moment(n: usize, m: usize, k: usize) -> Result<BigInt> {
    if m > k * n {
        return Err(Error::Range(format!("kr3g_moment needs m <= kN (got m={m}, kN={})", k * n)));
    }
    let mut acc = BigInt::zero();
    for mu in enumerate_box(k, n, m) {
        let c = box_complement(&mu, k, n)?;
        acc += weyl_dimension(&mu, k)? * weyl_dimension(&c, k)?;
    }
    Ok(acc)
}

/// `MoM(N|k,β) = [X^{Nβ}] s_{N^{kβ}}[X·1^{2β}]` for `X = {x_1..x_k}`: a sum over
/// chains `∅ ⊆ λ^1 ⊆ … ⊆ λ^k = (N^{kβ})` with `|λ^j/λ^{j-1}| = Nβ`, each
/// step weighted by the skew count in `2β` letters.
pub fn mom_moment(n: usize, k: usize, beta: usize) -> Result<BigInt> {
    if n < 1 || k < 1 || beta < 1 {
        return Err(Error::Range("mom_moment needs N, k, β >= 1".into()));
    }
    let rows = k * beta;
    let step = n * beta;
    let letters = 2 * beta;
    // level j holds the weighted count of chains ending at each λ^j
    let mut level: HashMap<Partition, BigInt> = HashMap::new();
    level.insert(Partition::empty(), BigInt::one());
    for j in 1..=k {
        let targets = if j == k { vec![Partition::rectangle(n, rows)] } else { enumerate_box(rows, n, j * step) };
        let mut next = HashMap::new();
        for lam in targets {
            let mut acc = BigInt::zero();
            for (mu, w) in &level {
                if !lam.contains(mu) {
                    continue;
                }
                // A skew shape with a column longer than the alphabet has no fillings.
                if (0..lam.length()).any(|i| i + letters < lam.length() && lam.part(i + letters) > mu.part(i)) {
                    continue;
                }
                let s = skew_schur_ones(&lam, mu, letters)?;
                if !s.is_zero() {
                    acc += w * s;
                }
            }
            if !acc.is_zero() {
                next.insert(lam, acc);
            }
        }
        level = next;
    }
    Ok(level.get(&Partition::rectangle(n, rows)).cloned().unwrap_or_default())
}

/// `E|Z_{U_N,t}(λ)|^{2k} = [X^t Y^t] H[X + Y + λ² XY]` (for `N ≥ tk`).
///
/// The `Y` extraction is done in closed form, `[Y^t] H[Y(1 + λ²X)] =
/// h_t[1 + λ²X]^k`, leaving a bounded extraction in the `k` variables `X`:
/// `[X^t] H[X] (Σ_{s ≤ t} λ^{2s} h_s[X])^k`.
pub fn truncated_moment_lambda(k: usize, t: usize, lambda2: &Q) -> Result<Q> {
    if lambda2 < &Q::zero() {
        return Err(Error::Range("λ² must be nonnegative".into()));
    }
    if k == 0 {
        return Ok(Q::one());
    }
    if (t + 1).pow(k as u32) > 5_000_000 {
        return Err(Error::ResourceLimit(format!("(t+1)^k = {}^{k} terms", t + 1)));
    }
    let caps = vec![t; k];
    let mut row = BoundedMultiPoly::<Q>::zero(caps.clone());
    let mut w = Q::one();
    for s in 0..=t {
        row = row.add(&BoundedMultiPoly::complete_homogeneous(caps.clone(), s).scale(&w));
        w = &w * lambda2;
    }
    let geometric = BoundedMultiPoly::<Q>::all_monomials(caps.clone());
    let prod = geometric.mul(&row.pow(k));
    Ok(prod.coeff(&vec![t; k]))
}

/// Test oracle for [`truncated_moment_lambda`]: the literal 2k-variable
/// extraction `[X^t Y^t] ∏(1-x_i)^{-1} ∏(1-y_j)^{-1} ∏(1-λ² x_i y_j)^{-1}`.
pub fn truncated_moment_lambda_2k(k: usize, t: usize, lambda2: &Q) -> Result<Q> {
    if (t + 1).pow(2 * k as u32) > 2_000_000 {
        return Err(Error::ResourceLimit("2k-variable extraction too large".into()));
    }
    let caps = vec![t; 2 * k];
    let mut acc = BoundedMultiPoly::<Q>::all_monomials(caps.clone());
    for i in 0..k {
        for j in 0..k {
            // 1/(1 - λ² x_i y_j) truncated at the cap
            let mut f = BoundedMultiPoly::<Q>::zero(caps.clone());
            let mut w = Q::one();
            for e in 0..=t {
                let mut ex = vec![0; 2 * k];
                ex[i] = e;
                ex[k + j] = e;
                f.insert(ex, w.clone());
                w = &w * lambda2;
            }
            acc = acc.mul(&f);
        }
    }
    Ok(acc.coeff(&vec![t; 2 * k]))
}

fn unit_points(n: usize, pts: &[C64]) -> Vec<C64> {
    pts.iter().map(|x| (C64::i() * 2.0 * PI * x / n as f64).exp()).collect()
}

/// `R_N(X, Y) = s_{N^k}[e^{2πiX/N} - e^{2πiY/N}]`. Points are complex so that
/// denominators strictly inside the disc (where the ratio is integrable
/// against Haar measure) can be used as well as unit-modulus ones.
pub fn ratio_moment(n: usize, k: usize, x: &[C64], y: &[C64]) -> Result<C64> {
    if x.len() < y.len() {
        return Err(Error::Range("ratio_moment needs |X| >= |Y|".into()));
    }
    let a = unit_points(n, x);
    let b = unit_points(n, y);
    for p in &a {
        for r in &b {
            if (p - r).norm() < 1e-12 {
                return Err(Error::Coincidence("an X point equals a Y point".into()));
            }
        }
    }
    let hs = hseries_supersym(&a, &b, n + k);
    schur_rect_jacobi_trudi(n, k, &hs)
}

fn check_distinct(pts: &[C64], what: &str) -> Result<()> {
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if (pts[i] - pts[j]).norm() < 1e-12 {
                return Err(Error::Coincidence(format!("repeated point in {what}")));
            }
        }
    }
    Ok(())
}

fn vandermonde(z: &[C64]) -> C64 {
    let mut v = C64::one();
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            v *= z[j] - z[i];
        }
    }
    v
}

/// `E ∏_j Z(e^{2πix_j/N}) conj(Z(e^{2πiy_j/N}))` as
/// `det K_{N+k}(a_j, b_l) / (Δ(a) conj Δ(b))` with
/// `K_M(z, w) = Σ_{j=0}^{M-1} (z w̄)^j` (see the README for the index range).
pub fn autocorr_det(n: usize, x: &[C64], y: &[C64]) -> Result<C64> {
    if x.len() != y.len() {
        return Err(Error::Range("autocorr_det needs |X| = |Y|".into()));
    }
    check_distinct(x, "X")?;
    check_distinct(y, "Y")?;
    let k = x.len();
    let a = unit_points(n, x);
    let b: Vec<C64> = y.iter().map(|v| (C64::i() * 2.0 * PI * v.conj() / n as f64).exp()).collect();
    let m = n + k;
    let kern = |z: C64, w: C64| -> C64 {
        let r = z * w.conj();
        let mut s = C64::zero();
        let mut p = C64::one();
        for _ in 0..m {
            s += p;
            p *= r;
        }
        s
    };
    let mat = (0..k).map(|i| (0..k).map(|j| kern(a[i], b[j])).collect()).collect();
    Ok(C64::det(mat) / (vandermonde(&a) * vandermonde(&b).conj()))
}

/// Schur route for the same autocorrelation:
/// `(∏ b̄_l)^N s_{N^k}(a_1..a_k, 1/b̄_1..1/b̄_k)`.
pub fn autocorr_schur(n: usize, x: &[C64], y: &[C64]) -> Result<C64> {
    let k = x.len();
    let a = unit_points(n, x);
    let b: Vec<C64> = y.iter().map(|v| (C64::i() * 2.0 * PI * v.conj() / n as f64).exp()).collect();
    let mut pts = a.clone();
    let mut pre = C64::one();
    for bl in &b {
        pts.push(C64::one() / bl.conj());
        pre *= bl.conj().powu(n as u32);
    }
    let hs = hseries_from_points(&pts, n + k);
    Ok(pre * schur_rect_jacobi_trudi(n, k, &hs)?)
}

/// `(1/r!) Σ_{λ⊢r} d_λ² ∏_{□∈λ} (k+c)(-N+c)/(2k+c)`, the normalised joint
/// moment `E[|Z|^{2k}(iZ'/Z)^r] / E|Z|^{2k}` as stated in the literature.
/// Which derivative (in `x` or in `θ`) the factor `iZ'/Z` refers to is not
/// settled here; the value is reported as the formula gives it.
pub fn dehaye_derivative_ratio(n: usize, k: usize, r: usize) -> Result<Q> {
    let mut acc = Q::zero();
    for lam in partitions_of(r) {
        let d = lam.dim();
        let mut term = Q::from_integer(&d * &d);
        for c in cell_data(&lam).contents {
            let den = 2 * k as i64 + c;
            if den == 0 {
                return Err(Error::Pole(format!("2k + c = 0 in λ = {lam}")));
            }
            term = term * q((k as i64 + c) * (c - n as i64)) / q(den);
        }
        acc += term;
    }
    Ok(acc / Q::from_integer(crate::ring::factorial(r as u64)))
}

/// Direct `N = 1` evaluation of `E[|1 - e^{iθ}|^{2k} (i d/dθ log(1 - e^{iθ}))^r]
/// / E|1 - e^{iθ}|^{2k}` by trapezoidal quadrature on the circle. This is the
/// `θ`-derivative reading of the Dehaye normalisation; only a diagnostic.
pub fn dehaye_theta_reading_n1(k: usize, r: usize) -> f64 {
    let m = 1 << 16;
    let (mut num, mut den) = (C64::zero(), 0.0);
    for j in 0..m {
        let th = 2.0 * PI * (j as f64 + 0.5) / m as f64;
        let z = C64::new(0.0, th).exp();
        let w = (C64::one() - z).norm_sqr().powi(k as i32);
        // d/dθ log(1 - e^{iθ}) = -i e^{iθ} / (1 - e^{iθ})
        let lg = -C64::i() * z / (C64::one() - z);
        num += w * (C64::i() * lg).powu(r as u32);
        den += w;
    }
    (num / den).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::qf;

    #[test]
    fn ks_small() {
        assert_eq!(ks_moment(1, 1).unwrap(), BigInt::from(2));
        assert_eq!(ks_moment(2, 2).unwrap(), BigInt::from(20));
        for n in 1..10 {
            assert_eq!(ks_moment(n, 1).unwrap(), BigInt::from(n + 1));
        }
    }

    #[test]
    fn secular_small() {
        assert_eq!(secular_moment(5, 0, 3).unwrap(), BigInt::one());
        assert_eq!(secular_moment(2, 1, 2).unwrap(), BigInt::from(2));
        assert_eq!(secular_moment(4, 2, 2).unwrap(), BigInt::from(3));
        assert!(secular_moment(2, 3, 1).is_err());
    }

    #[test]
    fn kr3g_small() {
        assert_eq!(kr3g_moment(4, 0, 3).unwrap(), BigInt::one());
        assert_eq!(kr3g_moment(2, 1, 2).unwrap(), BigInt::from(4));
        for n in 1..6 {
            for m in 0..=n {
                assert_eq!(kr3g_moment(n, m, 1).unwrap(), BigInt::one());
            }
        }
    }

    #[test]
    fn mom_small() {
        assert_eq!(mom_moment(1, 2, 1).unwrap(), BigInt::from(4));
        assert_eq!(mom_moment(3, 1, 2).unwrap(), ks_moment(3, 2).unwrap());
    }

    #[test]
    fn truncated_small() {
        for t in 0..5 {
            assert_eq!(truncated_moment_lambda(1, t, &q(1)).unwrap(), q(t as i64 + 1));
        }
        let l2 = qf(1, 4);
        let geo: Q = (0..=3).map(|j| num_traits::pow(l2.clone(), j)).sum();
        assert_eq!(truncated_moment_lambda(1, 3, &l2).unwrap(), geo);
        assert_eq!(truncated_moment_lambda(2, 1, &q(1)).unwrap(), q(7));
        assert_eq!(truncated_moment_lambda_2k(2, 2, &qf(3, 2)).unwrap(), truncated_moment_lambda(2, 2, &qf(3, 2)).unwrap());
    }

    #[test]
    fn dehaye_small() {
        assert_eq!(dehaye_derivative_ratio(5, 3, 0).unwrap(), q(1));
        assert_eq!(dehaye_derivative_ratio(7, 3, 1).unwrap(), qf(-7, 2));
        let (n, k) = (q(6), q(3));
        let expect = (k.clone() * (&k + q(1)) * &n * (&n - q(1)) / (q(2) * &k * (q(2) * &k + q(1)))
            + k.clone() * (&k - q(1)) * &n * (&n + q(1)) / (q(2) * &k * (q(2) * &k - q(1))))
            / q(2);
        assert_eq!(dehaye_derivative_ratio(6, 3, 2).unwrap(), expect);
    }

    #[test]
    fn autocorr_diagonal() {
        for n in [1usize, 7, 50] {
            let v = autocorr_det(n, &[C64::new(0.3, 0.0)], &[C64::new(0.3, 0.0)]).unwrap();
            assert!((v - C64::new(n as f64 + 1.0, 0.0)).norm() < 1e-9 * n as f64);
        }
    }
}
