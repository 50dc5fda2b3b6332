//! Limiting constants: Φ-integrals against squared Vandermonde weights, the
//! Hankel route for the Keating–Snaith constant, and the auxiliary closed
//! forms (Barnes factor, `₂F₁(k, k; 1; z)`).
//!
//! Every Φ is written with tilde kernels at `0 ∪ x`, e.g.
//! `Φ_KS = e^{-2πiΣx} h̃^{(2k)}_k`. The phases and the prefactor
//! `(2π)^{v(v-1)}/v!` live here, in the spec builder; the kernel module only
//! knows `h̃`.

use crate::error::{Error, Result};
use crate::limit_kernels::{
    fourier_moment, kernel_supersym_closed_form, kernel_tilde_complex, kernel_tilde_fast, seeded_rng,
    uniform_sum_spline, BetaFactor,
};
use crate::quad::composite_rule;
use crate::ring::{det_fraction_free, factorial, q, q_to_f64, qf, C64, Q};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FunctionalKind {
    Ks,
    Sc,
    Zt,
    Kr3g,
    Mom,
    VolB,
    VolS,
    Autocorr,
    Ratio,
}

impl FunctionalKind {
    pub const ALL: [FunctionalKind; 9] = [
        FunctionalKind::Ks,
        FunctionalKind::Sc,
        FunctionalKind::Zt,
        FunctionalKind::Kr3g,
        FunctionalKind::Mom,
        FunctionalKind::VolB,
        FunctionalKind::VolS,
        FunctionalKind::Autocorr,
        FunctionalKind::Ratio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FunctionalKind::Ks => "KS",
            FunctionalKind::Sc => "SC",
            FunctionalKind::Zt => "ZT",
            FunctionalKind::Kr3g => "KR3G",
            FunctionalKind::Mom => "MOM",
            FunctionalKind::VolB => "VOL_B",
            FunctionalKind::VolS => "VOL_S",
            FunctionalKind::Autocorr => "AUTOCORR",
            FunctionalKind::Ratio => "RATIO",
        }
    }

    /// Label of the defining Φ, carried by every report.
    pub fn anchor(self) -> &'static str {
        match self {
            FunctionalKind::Ks => "EqPhi:KS",
            FunctionalKind::Sc => "EqPhi:MidCoeff",
            FunctionalKind::Zt => "EqPhi:TruncatedCharpolIn1",
            FunctionalKind::Kr3g => "EqPhi:KR3G",
            FunctionalKind::Mom => "EqPhi:MoMo",
            FunctionalKind::VolB => "EqPhi:VolumeBirkoffPolytopeRMT",
            FunctionalKind::VolS => "EqPhi:VolumeSubBirkoffPolytopeRMT",
            FunctionalKind::Autocorr => "EqPhi:Autocorrels",
            FunctionalKind::Ratio => "EqPhi:Ratios",
        }
    }
}

impl fmt::Display for FunctionalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FunctionalKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_uppercase();
        FunctionalKind::ALL
            .into_iter()
            .find(|k| k.name().replace('_', "") == norm)
            .ok_or_else(|| Error::UnknownFunctional(s.to_string()))
    }
}

// ---------------------------------------------------------------------------
// Rescaling exponents, shared with the convergence harness

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    /// `k²`
    KSquared,
    /// `(k-1)²`
    KMinusOneSquared,
    /// `k² - 1`
    KSquaredMinusOne,
    /// `k·m`
    KTimesM,
    /// `(kβ)² + 1 - k`
    Mom,
    /// `k(ℓ - m - k)`
    Ratio,
}

pub const ORDER_TABLE: [(FunctionalKind, Order); 9] = [
    (FunctionalKind::Ks, Order::KSquared),
    (FunctionalKind::Sc, Order::KMinusOneSquared),
    (FunctionalKind::Zt, Order::KSquared),
    (FunctionalKind::Kr3g, Order::KSquaredMinusOne),
    (FunctionalKind::Mom, Order::Mom),
    (FunctionalKind::VolB, Order::KMinusOneSquared),
    (FunctionalKind::VolS, Order::KSquared),
    (FunctionalKind::Autocorr, Order::KTimesM),
    (FunctionalKind::Ratio, Order::Ratio),
];

/// Parameters the exponent may depend on: `k`, `β`, `ℓ = |X|`, `m = |Y|`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OrderParams {
    pub k: usize,
    pub beta: usize,
    pub l: usize,
    pub m: usize,
}

pub fn order_exponent(kind: FunctionalKind, p: &OrderParams) -> i64 {
    let order = ORDER_TABLE.iter().find(|(k, _)| *k == kind).expect("every kind is tabulated").1;
    let (k, b, l, m) = (p.k as i64, p.beta as i64, p.l as i64, p.m as i64);
    match order {
        Order::KSquared => k * k,
        Order::KMinusOneSquared => (k - 1) * (k - 1),
        Order::KSquaredMinusOne => k * k - 1,
        Order::KTimesM => k * m,
        Order::Mom => (k * b) * (k * b) + 1 - k,
        Order::Ratio => k * (l - m - k),
    }
}

// ---------------------------------------------------------------------------
// Spec builder

/// Squared Vandermonde weight: of `0 ∪ x`, or of the outer variables only
/// (VOL_S and ZT, whose `k + 1` kernel points include a pinned 0 that the
/// weight does not see).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weight {
    WithOrigin,
    OuterOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitFunctionalSpec {
    pub kind: FunctionalKind,
    pub k: usize,
    pub rho: Option<Q>,
    pub c: Option<Q>,
    pub beta: Option<usize>,
    pub x: Vec<C64>,
    pub y: Vec<C64>,
    pub outer_dim: usize,
    /// `v` in the prefactor `(2π)^{v(v-1)}/v!`.
    pub vandermonde_points: usize,
    pub weight: Weight,
}

fn open_unit(name: &str, v: &Q, hi: &Q) -> Result<()> {
    if !v.is_positive() || v >= hi {
        return Err(Error::Range(format!("{name} = {v} must lie in (0, {hi})")));
    }
    Ok(())
}

impl LimitFunctionalSpec {
    fn base(kind: FunctionalKind, k: usize, outer_dim: usize, v: usize, weight: Weight) -> Self {
        LimitFunctionalSpec {
            kind,
            k,
            rho: None,
            c: None,
            beta: None,
            x: vec![],
            y: vec![],
            outer_dim,
            vandermonde_points: v,
            weight,
        }
    }

    pub fn ks(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Range("KS needs k ≥ 1".into()));
        }
        Ok(Self::base(FunctionalKind::Ks, k, k - 1, k, Weight::WithOrigin))
    }

    /// Mid secular coefficient `sc_{⌊ρN⌋}`. At `k = 1` the moment is
    /// identically 1 and Φ does not describe it; the constant is then 1.
    pub fn sc(rho: Q, k: usize) -> Result<Self> {
        open_unit("ρ", &rho, &q(1))?;
        if k == 0 {
            return Err(Error::Range("SC needs k ≥ 1".into()));
        }
        let mut s = Self::base(FunctionalKind::Sc, k, k - 1, k, Weight::WithOrigin);
        s.rho = Some(rho);
        Ok(s)
    }

    pub fn zt(rho: Q, k: usize) -> Result<Self> {
        open_unit("ρ", &rho, &q(1))?;
        if k == 0 {
            return Err(Error::Range("ZT needs k ≥ 1".into()));
        }
        let mut s = Self::base(FunctionalKind::Zt, k, k, k, Weight::OuterOnly);
        s.rho = Some(rho);
        Ok(s)
    }

    /// `k = 1` is degenerate (`I_1(m, N) = 1`), like SC.
    pub fn kr3g(c: Q, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Range("KR3G needs k ≥ 1".into()));
        }
        open_unit("c", &c, &q(k as i64))?;
        let mut s = Self::base(FunctionalKind::Kr3g, k, k - 1, k, Weight::WithOrigin);
        s.c = Some(c);
        Ok(s)
    }

    pub fn mom(k: usize, beta: usize) -> Result<Self> {
        if k == 0 || beta == 0 {
            return Err(Error::Range("MOM needs k, β ≥ 1".into()));
        }
        let v = k * beta;
        let mut s = Self::base(FunctionalKind::Mom, k, v - 1, v, Weight::WithOrigin);
        s.beta = Some(beta);
        Ok(s)
    }

    pub fn vol_b(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Range("VOL_B needs k ≥ 1".into()));
        }
        Ok(Self::base(FunctionalKind::VolB, k, k - 1, k, Weight::WithOrigin))
    }

    pub fn vol_s(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Range("VOL_S needs k ≥ 1".into()));
        }
        Ok(Self::base(FunctionalKind::VolS, k, k, k, Weight::OuterOnly))
    }

    /// `|X| = |Y| = k`, distinct points within each set.
    pub fn autocorr(x: Vec<C64>, y: Vec<C64>) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::Range("AUTOCORR needs |X| = |Y| ≥ 1".into()));
        }
        distinct(&x, "X")?;
        distinct(&y, "Y")?;
        let k = x.len();
        let mut s = Self::base(FunctionalKind::Autocorr, k, k - 1, k, Weight::WithOrigin);
        s.x = x;
        s.y = y;
        Ok(s)
    }

    /// Needs `|X| > |Y|`, and `|X| ≥ |Y| + 2` once there is an outer
    /// integral, so that the supersymmetric kernel decays.
    pub fn ratio(k: usize, x: Vec<C64>, y: Vec<C64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::Range("RATIO needs k ≥ 1".into()));
        }
        let need = y.len() + if k == 1 { 1 } else { 2 };
        if x.len() < need {
            return Err(Error::Range(format!("RATIO at k = {k} needs |X| ≥ {need}")));
        }
        for a in &x {
            for b in &y {
                if (a - b).norm() < 1e-12 {
                    return Err(Error::Coincidence("an X point equals a Y point".into()));
                }
            }
        }
        let mut s = Self::base(FunctionalKind::Ratio, k, k - 1, k, Weight::WithOrigin);
        s.x = x;
        s.y = y;
        Ok(s)
    }

    /// `(2π)^{v(v-1)}/v!`.
    pub fn prefactor(&self) -> f64 {
        let v = self.vandermonde_points;
        (2.0 * PI).powi((v * v.saturating_sub(1)) as i32) / q_to_f64(&Q::from_integer(factorial(v as u64)))
    }

    pub fn order_params(&self) -> OrderParams {
        OrderParams { k: self.k, beta: self.beta.unwrap_or(0), l: self.x.len(), m: self.y.len() }
    }

    pub fn scaling_exponent(&self) -> i64 {
        order_exponent(self.kind, &self.order_params())
    }

    /// Human-readable parameter list for reports.
    pub fn parameters(&self) -> Vec<(String, String)> {
        let mut p = vec![("k".to_string(), self.k.to_string())];
        if let Some(r) = &self.rho {
            p.push(("rho".into(), r.to_string()));
        }
        if let Some(c) = &self.c {
            p.push(("c".into(), c.to_string()));
        }
        if let Some(b) = self.beta {
            p.push(("beta".into(), b.to_string()));
        }
        if !self.x.is_empty() {
            p.push(("X".into(), fmt_points(&self.x)));
        }
        if !self.y.is_empty() || self.kind == FunctionalKind::Ratio {
            p.push(("Y".into(), fmt_points(&self.y)));
        }
        p
    }

    fn rho_f(&self) -> f64 {
        self.rho.as_ref().map(q_to_f64).unwrap_or(f64::NAN)
    }

    /// `Φ(0, x)`, phases included, prefactor and weight excluded.
    pub fn phi(&self, outer: &[f64]) -> C64 {
        let mut pts = Vec::with_capacity(outer.len() + 1);
        pts.push(0.0);
        pts.extend_from_slice(outer);
        let sum: f64 = outer.iter().sum();
        let rot = C64::new(0.0, -2.0 * PI * sum).exp();
        let k = self.k as i32;
        match self.kind {
            FunctionalKind::Ks => rot * kernel_tilde_fast(self.k as f64, 2 * self.k, &pts),
            FunctionalKind::Mom => {
                let b = self.beta.unwrap_or(1);
                rot * kernel_tilde_fast(b as f64, 2 * b, &pts).powi(k)
            }
            FunctionalKind::Kr3g => {
                let c = self.c.as_ref().map(q_to_f64).unwrap_or(f64::NAN);
                rot * kernel_tilde_fast(c, self.k, &pts) * kernel_tilde_fast(self.k as f64 - c, self.k, &pts)
            }
            FunctionalKind::Sc => {
                let r = self.rho_f();
                rot * (kernel_tilde_fast(r, 1, &pts) * kernel_tilde_fast(1.0 - r, 1, &pts)).powi(k)
            }
            FunctionalKind::Zt => {
                let r = self.rho_f();
                let diff = kernel_tilde_fast(1.0, 1, &pts) - kernel_tilde_fast(1.0 - r, 1, &pts);
                rot * kernel_tilde_fast(r, 1, &pts).powi(k) * diff.powi(k)
            }
            FunctionalKind::VolB | FunctionalKind::VolS => {
                C64::new(kernel_tilde_fast(1.0, 1, &pts).norm_sqr().powi(k), 0.0)
            }
            FunctionalKind::Ratio => {
                let shift = |set: &[C64]| -> Vec<C64> {
                    pts.iter().flat_map(|&t| set.iter().map(move |p| p + t)).collect()
                };
                rot * kernel_supersym_closed_form(self.k as f64, &shift(&self.x), &shift(&self.y))
            }
            FunctionalKind::Autocorr => C64::new(f64::NAN, 0.0),
        }
    }

    pub fn weight_at(&self, outer: &[f64]) -> f64 {
        let mut w = 1.0;
        for i in 0..outer.len() {
            if self.weight == Weight::WithOrigin {
                w *= outer[i] * outer[i];
            }
            for j in i + 1..outer.len() {
                let d = outer[j] - outer[i];
                w *= d * d;
            }
        }
        w
    }

    fn integrand(&self, outer: &[f64]) -> C64 {
        self.phi(outer) * self.weight_at(outer)
    }
}

fn fmt_points(p: &[C64]) -> String {
    let parts: Vec<String> =
        p.iter().map(|z| if z.im == 0.0 { format!("{}", z.re) } else { format!("{}{:+}i", z.re, z.im) }).collect();
    format!("[{}]", parts.join(","))
}

fn distinct(p: &[C64], what: &str) -> Result<()> {
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if (p[i] - p[j]).norm() < 1e-12 {
                return Err(Error::Coincidence(format!("repeated point in {what}")));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Estimates

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Exact piecewise-polynomial (spline) calculus.
    Spline,
    /// Hankel determinant of spline derivatives (KS only); exact.
    Hankel,
    /// Closed form with no integral left (zero outer dimension, AUTOCORR).
    ClosedForm,
    /// Tensor Gauss–Legendre on a box with Richardson extrapolation in the
    /// box radius.
    Quad,
    /// Randomly shifted Kronecker lattice on the box.
    Qmc,
    /// Plain Monte Carlo on the box.
    Mc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Spline => "spline",
            Method::Hankel => "hankel",
            Method::ClosedForm => "closed-form",
            Method::Quad => "quad",
            Method::Qmc => "qmc",
            Method::Mc => "mc",
        }
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, Method::Qmc | Method::Mc)
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spline" | "exact-spline" => Ok(Method::Spline),
            "hankel" => Ok(Method::Hankel),
            "closed-form" | "closed" => Ok(Method::ClosedForm),
            "quad" | "quadrature" => Ok(Method::Quad),
            "qmc" | "quasi-mc" => Ok(Method::Qmc),
            "mc" => Ok(Method::Mc),
            _ => Err(Error::Range(format!("unknown method '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub dimension: usize,
    pub radius: Option<f64>,
    pub nodes: Option<u64>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub value: C64,
    pub abs_error: f64,
    pub method: Method,
    /// Present when the route is exact.
    pub exact: Option<Q>,
    pub diagnostics: Diagnostics,
}

impl LimitEstimate {
    fn exact(v: Q, method: Method, dimension: usize) -> Self {
        LimitEstimate {
            value: C64::new(q_to_f64(&v), 0.0),
            abs_error: 0.0,
            method,
            exact: Some(v),
            diagnostics: Diagnostics { dimension, ..Default::default() },
        }
    }
}

/// Knobs for [`evaluate_constant`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Largest acceptable error estimate for the deterministic routes.
    pub tol: f64,
    /// Deterministic quadrature is used up to this outer dimension.
    pub dim_cap: usize,
    /// Box radius `T` (the first of the Richardson levels); per-dimension
    /// default when `None`.
    pub radius: Option<f64>,
    pub panels_per_unit: usize,
    pub order: usize,
    /// Points per shift (QMC) or per batch (MC).
    pub samples: usize,
    pub shifts: usize,
    pub seed: Option<u64>,
    pub method: Option<Method>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            tol: 1e-4,
            dim_cap: 2,
            radius: None,
            panels_per_unit: 0,
            order: 8,
            samples: 1 << 16,
            shifts: 16,
            seed: None,
            method: None,
        }
    }
}

// ---------------------------------------------------------------------------
// Exact one-dimensional route

/// `Σ coef · ∏ E e^{2πixσD}`: a product of two-point kernels expanded.
#[derive(Clone, Debug)]
struct SplineTerm {
    coef: Q,
    factors: Vec<BetaFactor>,
}

type SplineExpr = Vec<SplineTerm>;

/// `h̃^{(κ)}_c(0, x) = c^{2κ-1}/(2κ-1)! · E e^{2πicxD}`, `D ~ Beta(κ, κ)`;
/// the conjugate flips the sign of `c`.
fn two_point(c: &Q, kappa: usize, conj: bool) -> SplineExpr {
    let coef = num_traits::pow(c.clone(), 2 * kappa - 1) / Q::from_integer(factorial(2 * kappa as u64 - 1));
    let sigma = if conj { -c.clone() } else { c.clone() };
    vec![SplineTerm { coef, factors: vec![BetaFactor { sigma, kappa }] }]
}

fn expr_mul(a: &SplineExpr, b: &SplineExpr) -> SplineExpr {
    let mut out = Vec::new();
    for s in a {
        for t in b {
            let mut f = s.factors.clone();
            f.extend(t.factors.iter().cloned());
            out.push(SplineTerm { coef: &s.coef * &t.coef, factors: f });
        }
    }
    out
}

fn expr_pow(a: &SplineExpr, n: usize) -> SplineExpr {
    let mut out = vec![SplineTerm { coef: q(1), factors: vec![] }];
    for _ in 0..n {
        out = expr_mul(&out, a);
    }
    out
}

fn expr_sub(a: &SplineExpr, b: &SplineExpr) -> SplineExpr {
    let mut out = a.clone();
    out.extend(b.iter().map(|t| SplineTerm { coef: -t.coef.clone(), factors: t.factors.clone() }));
    out
}

impl LimitFunctionalSpec {
    /// `(Φ expanded, A, n)` with `Φ(0,x)·weight = e^{2πiAx} x^n Σ …`, when the
    /// constant reduces to one-dimensional spline moments.
    fn spline_form(&self) -> Option<(SplineExpr, Q, usize)> {
        if self.outer_dim != 1 {
            return None;
        }
        let n = if self.weight == Weight::WithOrigin { 2 } else { 0 };
        let one = q(1);
        let (expr, a) = match self.kind {
            FunctionalKind::Ks => (two_point(&q(2), 4, false), q(-1)),
            FunctionalKind::Mom => {
                let b = self.beta?;
                (expr_pow(&two_point(&q(b as i64), 2 * b, false), self.k), q(-1))
            }
            FunctionalKind::Kr3g => {
                let c = self.c.clone()?;
                (expr_mul(&two_point(&c, 2, false), &two_point(&(q(2) - &c), 2, false)), q(-1))
            }
            FunctionalKind::Sc => {
                let r = self.rho.clone()?;
                let pair = expr_mul(&two_point(&r, 1, false), &two_point(&(q(1) - &r), 1, false));
                (expr_pow(&pair, 2), q(-1))
            }
            FunctionalKind::Zt => {
                let r = self.rho.clone()?;
                let diff = expr_sub(&two_point(&one, 1, false), &two_point(&(q(1) - &r), 1, false));
                (expr_mul(&two_point(&r, 1, false), &diff), q(-1))
            }
            FunctionalKind::VolB | FunctionalKind::VolS => {
                let sq = expr_mul(&two_point(&one, 1, false), &two_point(&one, 1, true));
                (expr_pow(&sq, self.k), Q::zero())
            }
            FunctionalKind::Autocorr | FunctionalKind::Ratio => return None,
        };
        Some((expr, a, n))
    }

    /// Exact value by spline calculus, if this spec admits it.
    pub fn exact_spline(&self) -> Option<Result<Q>> {
        let (expr, a, n) = self.spline_form()?;
        // prefactor · (-2πi)^{-n}: v = 2, n = 2 gives -1/2; v = 1, n = 0 gives 1
        let scale = match (self.vandermonde_points, n) {
            (2, 2) => qf(-1, 2),
            (1, 0) => q(1),
            _ => return None,
        };
        let mut acc = Q::zero();
        for t in &expr {
            match fourier_moment(&t.factors, &a, n) {
                Ok(v) => acc += &t.coef * v,
                Err(e) => return Some(Err(e)),
            }
        }
        Some(Ok(scale * acc))
    }

    /// Exact value at zero outer dimension: `∏ h̃` at the single point 0.
    fn exact_origin(&self) -> Option<Q> {
        if self.outer_dim != 0 {
            return None;
        }
        // one-point kernel: c^{κ-1}/(κ-1)!
        let one_point = |c: i64, kappa: usize| {
            num_traits::pow(q(c), kappa - 1) / Q::from_integer(factorial(kappa as u64 - 1))
        };
        match self.kind {
            FunctionalKind::Ks => Some(one_point(1, 2)),
            FunctionalKind::Mom => Some(one_point(1, 2)),
            FunctionalKind::VolB => Some(q(1)),
            FunctionalKind::Sc | FunctionalKind::Kr3g => Some(q(1)),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Numerical routes

fn default_radius(d: usize) -> f64 {
    match d {
        0 | 1 => 32.0,
        2 => 8.0,
        _ => 6.0,
    }
}

fn default_ppu(d: usize) -> usize {
    if d <= 1 {
        4
    } else {
        2
    }
}

/// Tensor composite Gauss–Legendre over `[-T, T]^d`. Rows of the first
/// coordinate are summed in parallel and merged in order.
fn tensor_box(spec: &LimitFunctionalSpec, t: f64, ppu: usize, order: usize) -> (C64, u64) {
    let d = spec.outer_dim;
    let panels = ((2.0 * t * ppu as f64).ceil() as usize).max(1);
    let (xs, ws) = composite_rule(-t, t, panels, order);
    let n = xs.len();
    let rest = n.pow(d as u32 - 1);
    let rows: Vec<C64> = (0..n)
        .into_par_iter()
        .map(|i0| {
            let mut idx = vec![0usize; d - 1];
            let mut pt = vec![0.0; d];
            let mut acc = C64::zero();
            for _ in 0..rest {
                pt[0] = xs[i0];
                let mut w = ws[i0];
                for (j, &ij) in idx.iter().enumerate() {
                    pt[j + 1] = xs[ij];
                    w *= ws[ij];
                }
                acc += spec.integrand(&pt) * w;
                for slot in idx.iter_mut() {
                    *slot += 1;
                    if *slot < n {
                        break;
                    }
                    *slot = 0;
                }
            }
            acc
        })
        .collect();
    (rows.iter().sum(), (n as u64).pow(d as u32))
}

fn quadrature(spec: &LimitFunctionalSpec, budget: &Budget) -> Result<LimitEstimate> {
    let d = spec.outer_dim;
    let t0 = budget.radius.unwrap_or_else(|| default_radius(d));
    let ppu = if budget.panels_per_unit == 0 { default_ppu(d) } else { budget.panels_per_unit };
    // three radii, first-order Richardson on consecutive pairs
    let levels: Vec<(C64, u64)> = [1.0, 2.0, 4.0].iter().map(|m| tensor_box(spec, m * t0, ppu, budget.order)).collect();
    let r1 = levels[1].0 * 2.0 - levels[0].0;
    let r2 = levels[2].0 * 2.0 - levels[1].0;
    let pre = spec.prefactor();
    let value = r2 * pre;
    let abs_error = (r2 - r1).norm() * pre;
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::Convergence("non-finite quadrature value".into()));
    }
    if abs_error > budget.tol.max(1e-12 * value.norm()) {
        return Err(Error::Convergence(format!(
            "{} quadrature error estimate {abs_error:.3e} exceeds tol {:.1e} (value {value})",
            spec.kind, budget.tol
        )));
    }
    Ok(LimitEstimate {
        value,
        abs_error,
        method: Method::Quad,
        exact: None,
        diagnostics: Diagnostics {
            dimension: d,
            radius: Some(4.0 * t0),
            nodes: Some(levels.iter().map(|l| l.1).sum()),
            samples: None,
            seed: None,
        },
    })
}

/// `frac(1/φ_d^j)`, `φ_d` the positive root of `x^{d+1} = x + 1`.
fn kronecker_alpha(d: usize) -> Vec<f64> {
    let mut phi = 2.0f64;
    for _ in 0..200 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    (1..=d).map(|j| (1.0 / phi.powi(j as i32)).fract()).collect()
}

/// Randomised box sampling: each shift/batch gives a Richardson combination
/// `2v(2T) - v(T)` from the same unit-cube points; mean and standard error
/// are taken over shifts.
fn sampled(spec: &LimitFunctionalSpec, budget: &Budget, method: Method) -> Result<LimitEstimate> {
    let seed = budget
        .seed
        .ok_or_else(|| Error::Range(format!("{} needs an explicit seed", method.name())))?;
    let d = spec.outer_dim;
    if budget.samples == 0 || budget.shifts < 2 {
        return Err(Error::Range("need samples ≥ 1 and at least 2 shifts".into()));
    }
    let t = budget.radius.unwrap_or_else(|| default_radius(d));
    let alpha = kronecker_alpha(d);
    let n = budget.samples;
    let chunk = 4096usize;
    let vol = |r: f64| (2.0 * r).powi(d as i32);
    let per_shift: Vec<C64> = (0..budget.shifts)
        .map(|s| {
            let mut rng = seeded_rng(seed, s as u64);
            let shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let parts: Vec<(C64, C64)> = (0..n.div_ceil(chunk))
                .into_par_iter()
                .map(|c| {
                    // MC draws come from a per-(shift, chunk) stream
                    let mut crng = seeded_rng(seed, ((s as u64) << 32) | (c as u64 + 1));
                    let mut u = vec![0.0; d];
                    let mut p = vec![0.0; d];
                    let (mut a1, mut a2) = (C64::zero(), C64::zero());
                    for i in c * chunk..((c + 1) * chunk).min(n) {
                        for j in 0..d {
                            u[j] = match method {
                                Method::Qmc => (shift[j] + i as f64 * alpha[j]).fract(),
                                _ => crng.random::<f64>(),
                            };
                        }
                        for (pj, uj) in p.iter_mut().zip(&u) {
                            *pj = (2.0 * uj - 1.0) * t;
                        }
                        a1 += spec.integrand(&p);
                        for pj in p.iter_mut() {
                            *pj *= 2.0;
                        }
                        a2 += spec.integrand(&p);
                    }
                    (a1, a2)
                })
                .collect();
            let (s1, s2) = parts.iter().fold((C64::zero(), C64::zero()), |(x, y), (a, b)| (x + a, y + b));
            let v1 = s1 * vol(t) / n as f64;
            let v2 = s2 * vol(2.0 * t) / n as f64;
            v2 * 2.0 - v1
        })
        .collect();
    let m = per_shift.len() as f64;
    let mean = per_shift.iter().sum::<C64>() / m;
    let var = per_shift.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (m - 1.0);
    let pre = spec.prefactor();
    Ok(LimitEstimate {
        value: mean * pre,
        abs_error: (var / m).sqrt() * pre,
        method,
        exact: None,
        diagnostics: Diagnostics {
            dimension: d,
            radius: Some(2.0 * t),
            nodes: None,
            samples: Some((n * budget.shifts) as u64),
            seed: Some(seed),
        },
    })
}

// ---------------------------------------------------------------------------
// Closed-form pieces

/// `lim N^{-k²} autocorr_det(N, X, Y) = det(h̃_1(0, x_j - y_l)) / ((2π)^{k(k-1)} Δ(X) Δ(Y))`.
pub fn autocorr_limit(x: &[C64], y: &[C64]) -> Result<C64> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::Range("autocorr_limit needs |X| = |Y| ≥ 1".into()));
    }
    distinct(x, "X")?;
    distinct(y, "Y")?;
    let k = x.len();
    let m: Vec<Vec<C64>> = x
        .iter()
        .map(|&a| y.iter().map(|&b| kernel_tilde_complex(1.0, 1, &[C64::zero(), a - b])).collect())
        .collect();
    let vdm = |z: &[C64]| {
        let mut v = C64::one();
        for i in 0..z.len() {
            for j in i + 1..z.len() {
                v *= z[j] - z[i];
            }
        }
        v
    };
    let det = crate::ring::det_partial_pivot(m);
    Ok(det / ((2.0 * PI).powi((k * (k - 1)) as i32) * vdm(x) * vdm(y)))
}

/// `M_k = ∏_{ℓ<k} ℓ!/(ℓ+k)!`.
pub fn barnes_mk(k: usize) -> Q {
    (0..k).fold(q(1), |acc, l| acc * Q::new(factorial(l as u64), factorial((l + k) as u64)))
}

/// The Keating–Snaith constant as a Hankel determinant of derivatives of
/// the density of `W = Σ_{i≤2k} (U_i - 1/2)`, evaluated at `a = (k²-1)/k`:
/// `(-1)^{k(k-1)/2} k^{k²} det(f_W^{(i+j)}(a))_{0≤i,j<k}`.
pub fn hankel_ks(k: usize) -> Result<Q> {
    if k == 0 {
        return Err(Error::Range("hankel_ks needs k ≥ 1".into()));
    }
    let w = uniform_sum_spline(&vec![q(1); 2 * k], &q(-(k as i64)))?;
    let a = Q::new(BigInt::from(k * k - 1), BigInt::from(k));
    let d: Vec<Q> = (0..2 * k - 1).map(|m| w.eval_deriv_continuous(&a, m)).collect::<Result<_>>()?;
    let h: Vec<Vec<Q>> = (0..k).map(|i| (0..k).map(|j| d[i + j].clone()).collect()).collect();
    let sign = if (k * (k - 1) / 2) % 2 == 0 { q(1) } else { q(-1) };
    let scale = Q::from_integer(num_traits::pow(BigInt::from(k), k * k));
    Ok(sign * scale * det_fraction_free(h))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesSum {
    pub value: f64,
    /// Bound on the neglected tail.
    pub remainder_bound: f64,
    pub terms: usize,
}

/// `₂F₁(k, k; 1; z) = Σ_ℓ (k^{↑ℓ}/ℓ!)² z^ℓ` for `0 ≤ z < 1`. The term ratio
/// `((k+ℓ)/(ℓ+1))² z` decreases in `ℓ`, so once it is below 1 the tail is
/// bounded by a geometric series.
pub fn hypergeom_2f1_kk1(k: usize, z: f64) -> Result<SeriesSum> {
    if !(z < 1.0) {
        return Err(Error::Divergence(format!("₂F₁(k,k;1;z) diverges at z = {z} ≥ 1")));
    }
    if z < 0.0 || z.is_nan() {
        return Err(Error::Range(format!("z = {z} outside [0, 1)")));
    }
    let mut sum = 1.0;
    let mut term = 1.0;
    let ratio = |l: usize| {
        let r = (k + l) as f64 / (l + 1) as f64;
        r * r * z
    };
    for l in 0..50_000_000usize {
        let next = term * ratio(l);
        let r = ratio(l + 1);
        if r < 1.0 {
            let tail = next / (1.0 - r);
            if tail <= 0.5 * f64::EPSILON * sum {
                return Ok(SeriesSum { value: sum, remainder_bound: tail, terms: l + 1 });
            }
        }
        sum += next;
        term = next;
    }
    Err(Error::Convergence(format!("₂F₁({k},{k};1;{z}) did not converge")))
}

// ---------------------------------------------------------------------------
// Driver

/// Evaluate a limiting constant with the method ladder: exact (spline,
/// Hankel, closed form) when available, then tensor quadrature up to
/// `budget.dim_cap` outer dimensions, then quasi-MC. An explicit
/// `budget.method` overrides the ladder.
pub fn evaluate_constant(spec: &LimitFunctionalSpec, budget: &Budget) -> Result<LimitEstimate> {
    let d = spec.outer_dim;
    if spec.kind == FunctionalKind::Autocorr {
        let v = autocorr_limit(&spec.x, &spec.y)?;
        return Ok(LimitEstimate {
            value: v,
            abs_error: 1e-14 * v.norm(),
            method: Method::ClosedForm,
            exact: None,
            diagnostics: Diagnostics::default(),
        });
    }
    let method = match budget.method {
        Some(m) => m,
        None if d == 0 => Method::ClosedForm,
        None if spec.spline_form().is_some() => Method::Spline,
        None if spec.kind == FunctionalKind::Ks => Method::Hankel,
        None if d <= budget.dim_cap => Method::Quad,
        None => Method::Qmc,
    };
    match method {
        Method::Hankel => {
            if spec.kind != FunctionalKind::Ks {
                return Err(Error::Range(format!("the Hankel route exists for KS only, not {}", spec.kind)));
            }
            Ok(LimitEstimate::exact(hankel_ks(spec.k)?, Method::Hankel, d))
        }
        Method::Spline => match spec.exact_spline() {
            Some(v) => Ok(LimitEstimate::exact(v?, Method::Spline, d)),
            None => match spec.exact_origin() {
                Some(v) => Ok(LimitEstimate::exact(v, Method::Spline, d)),
                None if spec.kind == FunctionalKind::Ks => Ok(LimitEstimate::exact(hankel_ks(spec.k)?, Method::Hankel, d)),
                None => Err(Error::Range(format!("no exact spline route for {} at k = {}", spec.kind, spec.k))),
            },
        },
        Method::ClosedForm => {
            if d != 0 {
                return Err(Error::Range("closed form needs zero outer dimension".into()));
            }
            if let Some(v) = spec.exact_origin() {
                return Ok(LimitEstimate::exact(v, Method::ClosedForm, 0));
            }
            let v = spec.phi(&[]) * spec.prefactor();
            Ok(LimitEstimate {
                value: v,
                abs_error: 1e-13 * v.norm(),
                method: Method::ClosedForm,
                exact: None,
                diagnostics: Diagnostics::default(),
            })
        }
        Method::Quad => {
            if d == 0 {
                return evaluate_constant(spec, &Budget { method: Some(Method::ClosedForm), ..budget.clone() });
            }
            if d > budget.dim_cap {
                return Err(Error::DimensionCap { dim: d, cap: budget.dim_cap });
            }
            quadrature(spec, budget)
        }
        Method::Qmc | Method::Mc => {
            if d == 0 {
                return evaluate_constant(spec, &Budget { method: Some(Method::ClosedForm), ..budget.clone() });
            }
            sampled(spec, budget, method)
        }
    }
}

/// Both sides of the claimed proportionality `SC_ρ = ZT_ρ·(2k-2)!/((k-1)!)²`
/// at `ρ = 1/k`. Reported, never asserted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkScZtProbe {
    pub k: usize,
    pub rho: Q,
    pub sc: LimitEstimate,
    pub zt: LimitEstimate,
    pub factor: Q,
    pub lhs: f64,
    pub rhs: f64,
}

pub fn link_sc_zt_probe(k: usize, budget: &Budget) -> Result<LinkScZtProbe> {
    let rho = Q::new(BigInt::one(), BigInt::from(k));
    let sc = evaluate_constant(&LimitFunctionalSpec::sc(rho.clone(), k)?, budget)?;
    let zt = evaluate_constant(&LimitFunctionalSpec::zt(rho.clone(), k)?, budget)?;
    let factor = Q::new(factorial(2 * k as u64 - 2), factorial(k as u64 - 1).pow(2));
    let (lhs, rhs) = (sc.value.re, zt.value.re * q_to_f64(&factor));
    Ok(LinkScZtProbe { k, rho, sc, zt, factor, lhs, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(spec: LimitFunctionalSpec) -> Q {
        evaluate_constant(&spec, &Budget::default()).unwrap().exact.unwrap()
    }

    #[test]
    fn barnes() {
        assert_eq!(barnes_mk(1), q(1));
        assert_eq!(barnes_mk(2), qf(1, 12));
        assert_eq!(barnes_mk(3), qf(1, 6) * qf(1, 24) * qf(2, 120));
    }

    #[test]
    fn hankel_matches_barnes() {
        for k in 1..=4 {
            assert_eq!(hankel_ks(k).unwrap(), barnes_mk(k), "k = {k}");
        }
    }

    #[test]
    fn spline_constants() {
        assert_eq!(exact(LimitFunctionalSpec::ks(2).unwrap()), qf(1, 12));
        assert_eq!(exact(LimitFunctionalSpec::ks(1).unwrap()), q(1));
        assert_eq!(exact(LimitFunctionalSpec::vol_b(2).unwrap()), q(1));
        assert_eq!(exact(LimitFunctionalSpec::vol_s(1).unwrap()), q(1));
        assert_eq!(exact(LimitFunctionalSpec::sc(qf(1, 2), 2).unwrap()), qf(1, 2));
        assert_eq!(exact(LimitFunctionalSpec::mom(1, 2).unwrap()), qf(1, 12));
        assert_eq!(exact(LimitFunctionalSpec::mom(2, 1).unwrap()), qf(1, 6));
        for r in [qf(1, 3), qf(1, 2), qf(3, 4)] {
            assert_eq!(exact(LimitFunctionalSpec::zt(r.clone(), 1).unwrap()), r);
        }
        let j = exact(LimitFunctionalSpec::kr3g(qf(1, 2), 2).unwrap());
        assert_eq!(j, exact(LimitFunctionalSpec::kr3g(qf(3, 2), 2).unwrap()));
        assert_eq!(exact(LimitFunctionalSpec::kr3g(q(1), 2).unwrap()), qf(1, 6));
    }

    #[test]
    fn quad_agrees_with_spline_in_one_dimension() {
        let b = Budget { method: Some(Method::Quad), ..Budget::default() };
        for (spec, want) in [
            (LimitFunctionalSpec::ks(2).unwrap(), 1.0 / 12.0),
            (LimitFunctionalSpec::vol_b(2).unwrap(), 1.0),
            (LimitFunctionalSpec::sc(qf(1, 2), 2).unwrap(), 0.5),
            (LimitFunctionalSpec::zt(qf(1, 3), 1).unwrap(), 1.0 / 3.0),
        ] {
            let e = evaluate_constant(&spec, &b).unwrap();
            assert!((e.value - want).norm() < 1e-5 + e.abs_error, "{}: {:?}", spec.kind, e);
        }
    }

    #[test]
    fn hypergeometric() {
        assert_eq!(hypergeom_2f1_kk1(3, 0.0).unwrap().value, 1.0);
        for z in [0.1, 0.5, 0.9] {
            let s = hypergeom_2f1_kk1(1, z).unwrap();
            assert!((s.value - 1.0 / (1.0 - z)).abs() < 1e-12 * s.value);
        }
        let s = hypergeom_2f1_kk1(2, 0.25).unwrap();
        // ₂F₁(2,2;1;z) = (1+z)/(1-z)³
        assert!((s.value - 1.25 / 0.75f64.powi(3)).abs() < 1e-12);
        assert!(s.remainder_bound < 1e-12);
        assert!(matches!(hypergeom_2f1_kk1(2, 1.0), Err(Error::Divergence(_))));
    }

    #[test]
    fn kind_parsing() {
        for k in FunctionalKind::ALL {
            assert_eq!(k.name().parse::<FunctionalKind>().unwrap(), k);
        }
        assert_eq!("vol-b".parse::<FunctionalKind>().unwrap(), FunctionalKind::VolB);
        assert!("foo".parse::<FunctionalKind>().is_err());
    }

    #[test]
    fn order_table() {
        let p = |k, beta, l, m| OrderParams { k, beta, l, m };
        assert_eq!(order_exponent(FunctionalKind::Ks, &p(2, 0, 0, 0)), 4);
        assert_eq!(order_exponent(FunctionalKind::Sc, &p(2, 0, 0, 0)), 1);
        assert_eq!(order_exponent(FunctionalKind::Kr3g, &p(2, 0, 0, 0)), 3);
        assert_eq!(order_exponent(FunctionalKind::Mom, &p(2, 2, 0, 0)), 15);
        assert_eq!(order_exponent(FunctionalKind::Ratio, &p(1, 0, 3, 1)), 1);
    }
}
