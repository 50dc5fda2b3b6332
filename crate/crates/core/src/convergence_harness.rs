//! Finite-`N` exact values against the limiting constants: rescaling by the
//! shared exponent table, first-order Richardson extrapolation, rate checks.

use crate::error::{Error, Result};
use crate::exact_functionals::{autocorr_det, kr3g_moment, ks_moment, mom_moment, ratio_moment, secular_moment};
use crate::limit_constants::{evaluate_constant, Budget, FunctionalKind, LimitEstimate, LimitFunctionalSpec};
use crate::polytope_ehrhart::{ehrhart_birkhoff, ehrhart_subbirkhoff};
use crate::ring::{q_to_f64, C64, Q};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A finite-`N` value: exact rational, or complex double where the
/// functional is evaluated at non-rational points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ExactValue {
    Rational(Q),
    Complex(C64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub exact: ExactValue,
    pub rescaled: C64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub kind: FunctionalKind,
    pub exponent: i64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn pairs(&self) -> Vec<(usize, C64)> {
        self.rows.iter().map(|r| (r.n, r.rescaled)).collect()
    }
}

fn floor_mul(x: &Q, n: usize) -> usize {
    (x * Q::from_integer(BigInt::from(n))).floor().to_integer().to_usize().unwrap_or(0)
}

/// The exact finite-`N` quantity whose rescaling converges to the constant.
/// For the polytope constants `N` plays the role of the dilation `t`; for ZT
/// the sub-Birkhoff count is exact only for `ρ ≤ 1/k`.
pub fn finite_value(spec: &LimitFunctionalSpec, n: usize) -> Result<ExactValue> {
    let k = spec.k;
    let int = |v: BigInt| ExactValue::Rational(Q::from_integer(v));
    Ok(match spec.kind {
        FunctionalKind::Ks => int(ks_moment(n, k)?),
        FunctionalKind::Sc => int(secular_moment(n, floor_mul(spec.rho.as_ref().unwrap(), n), k)?),
        FunctionalKind::Kr3g => int(kr3g_moment(n, floor_mul(spec.c.as_ref().unwrap(), n), k)?),
        FunctionalKind::Mom => int(mom_moment(n, k, spec.beta.unwrap_or(1))?),
        FunctionalKind::VolB => int(ehrhart_birkhoff(k, n)?),
        FunctionalKind::VolS => int(ehrhart_subbirkhoff(k, n)?),
        FunctionalKind::Zt => {
            let rho = spec.rho.as_ref().unwrap();
            if rho * Q::from_integer(BigInt::from(k)) > Q::one() {
                return Err(Error::UnknownFunctional(format!(
                    "no exact finite-N ZT value for ρ = {rho} > 1/{k}"
                )));
            }
            int(ehrhart_subbirkhoff(k, floor_mul(rho, n))?)
        }
        FunctionalKind::Autocorr => ExactValue::Complex(autocorr_det(n, &spec.x, &spec.y)?),
        FunctionalKind::Ratio => ExactValue::Complex(ratio_moment(n, k, &spec.x, &spec.y)?),
    })
}

fn rescale(v: &ExactValue, n: usize, exponent: i64) -> C64 {
    match v {
        ExactValue::Rational(x) => {
            // exact division first, float only at the end
            let p = Q::from_integer(num_traits::pow(BigInt::from(n), exponent.unsigned_abs() as usize));
            let r = if exponent >= 0 { x / p } else { x * p };
            C64::new(q_to_f64(&r), 0.0)
        }
        ExactValue::Complex(z) => z / (n as f64).powi(exponent as i32),
    }
}

/// `v_N = exact(N) / N^{order}` for each `N` (rows computed in parallel).
pub fn convergence_table(spec: &LimitFunctionalSpec, ns: &[usize]) -> Result<ConvergenceTable> {
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Range("N list must be strictly increasing".into()));
    }
    if ns.first() == Some(&0) {
        return Err(Error::Range("N must be positive".into()));
    }
    let exponent = spec.scaling_exponent();
    let rows = ns
        .par_iter()
        .map(|&n| {
            let exact = finite_value(spec, n)?;
            let rescaled = rescale(&exact, n, exponent);
            Ok(ConvergenceRow { n, exact, rescaled })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable { kind: spec.kind, exponent, rows })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub limit: C64,
    pub error: f64,
    /// `2v_{2N} - v_N` for every `(N, 2N)` pair, in increasing `N`.
    pub estimates: Vec<(usize, C64)>,
}

/// First-order Richardson on every `(N, 2N)` pair. The limit is the estimate
/// from the largest pair; the error is the spread of the estimates (or, with
/// a single pair, the size of the correction).
pub fn richardson(values: &[(usize, C64)]) -> Result<Extrapolation> {
    let mut estimates = Vec::new();
    for (n, v) in values {
        if let Some((_, v2)) = values.iter().find(|(m, _)| *m == 2 * n) {
            estimates.push((*n, v2 * 2.0 - v));
        }
    }
    estimates.sort_by_key(|e| e.0);
    let Some(&(n_last, limit)) = estimates.last() else {
        return Err(Error::DegreeDeficiency { needed: 2, got: values.len() });
    };
    let error = if estimates.len() > 1 {
        estimates.iter().map(|(_, e)| (e - limit).norm()).fold(0.0, f64::max)
    } else {
        let v2 = values.iter().find(|(m, _)| *m == 2 * n_last).unwrap().1;
        (limit - v2).norm()
    };
    Ok(Extrapolation { limit, error, estimates })
}

/// `|v_{2N} - L| / |v_N - L|` for each `(N, 2N)` pair; ≈ 1/2 at first order.
pub fn rate_ratios(values: &[(usize, C64)], limit: C64) -> Vec<(usize, f64)> {
    values
        .iter()
        .filter_map(|(n, v)| {
            let (_, v2) = values.iter().find(|(m, _)| *m == 2 * n)?;
            Some((*n, (v2 - limit).norm() / (v - limit).norm()))
        })
        .collect()
}

/// Everything the `converge` command reports for one functional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub table: ConvergenceTable,
    pub extrapolation: Extrapolation,
    pub constant: LimitEstimate,
    pub rel_diff: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn compare(spec: &LimitFunctionalSpec, ns: &[usize], budget: &Budget, tolerance: f64) -> Result<Comparison> {
    let table = convergence_table(spec, ns)?;
    let extrapolation = richardson(&table.pairs())?;
    let constant = evaluate_constant(spec, budget)?;
    let rel_diff = (extrapolation.limit - constant.value).norm() / constant.value.norm().max(f64::MIN_POSITIVE);
    Ok(Comparison { table, extrapolation, constant, rel_diff, tolerance, pass: rel_diff <= tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::qf;

    #[test]
    fn richardson_exact_on_first_order() {
        let v: Vec<_> = [10usize, 20, 40].iter().map(|&n| (n, C64::new(3.0 + 5.0 / n as f64, 0.0))).collect();
        let r = richardson(&v).unwrap();
        assert!((r.limit.re - 3.0).abs() < 1e-12 && r.error < 1e-12);
        let c: Vec<_> = [4usize, 8].iter().map(|&n| (n, C64::new(2.0, 0.0))).collect();
        let r = richardson(&c).unwrap();
        assert_eq!(r.limit.re, 2.0);
        assert_eq!(r.error, 0.0);
        assert!(richardson(&[(3, C64::new(1.0, 0.0)), (5, C64::new(1.0, 0.0))]).is_err());
    }

    #[test]
    fn sc_small_table() {
        let spec = LimitFunctionalSpec::sc(qf(1, 2), 2).unwrap();
        let t = convergence_table(&spec, &[2, 4, 6]).unwrap();
        let want = [1.0, 0.75, 2.0 / 3.0];
        for (row, w) in t.rows.iter().zip(want) {
            assert!((row.rescaled.re - w).abs() < 1e-15);
        }
    }

    #[test]
    fn ks_table_decreases() {
        let spec = LimitFunctionalSpec::ks(2).unwrap();
        let t = convergence_table(&spec, &[10, 100]).unwrap();
        let n = 10f64;
        assert!((t.rows[0].rescaled.re - (n + 1.0) * (n + 2.0).powi(2) * (n + 3.0) / (12.0 * n.powi(4))).abs() < 1e-14);
        assert!(t.rows[1].rescaled.re < t.rows[0].rescaled.re);
        assert!(convergence_table(&spec, &[10, 5]).is_err());
    }
}
