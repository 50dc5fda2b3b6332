//! The limiting kernels `h^{(κ)}_{c,∞}` and their supersymmetric versions.
//!
//! Four independent evaluations are provided: the defining oscillatory
//! integral (adaptive quadrature plus an analytic tail), a closed form as a
//! divided difference of `z ↦ e^{2πicz}` (Opitz' formula, which handles
//! repeated nodes), Dirichlet Monte Carlo, and — for one-dimensional
//! reductions — exact piecewise-polynomial densities.
//!
//! Conventions: `K = kκ` is the number of nodes once each point is repeated
//! `κ` times, and `h̃ = e^{iπcκΣx} h`. The closed form is naturally `h̃`:
//! `h̃ = F[x_1^κ, …, x_k^κ] / (2πi)^{K-1}` with `F(z) = e^{2πicz}`.

use crate::error::{Error, Result};
use crate::quad;
use crate::ring::{binomial, factorial, q, q_to_f64, C64, Q};
use crate::symfun::hseries_from_points;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

// ---------------------------------------------------------------------------
// Piecewise polynomials

/// Which one-sided value to take at a breakpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// Exact piecewise polynomial: `pieces[i]` (coefficients in increasing powers
/// of `x`) lives on `[breaks[i], breaks[i+1]]`; the function is 0 outside
/// `[breaks[0], breaks[last]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePoly {
    breaks: Vec<Q>,
    pieces: Vec<Vec<Q>>,
}

fn poly_eval(p: &[Q], x: &Q) -> Q {
    p.iter().rev().fold(Q::zero(), |acc, c| acc * x + c)
}

fn poly_deriv(p: &[Q]) -> Vec<Q> {
    p.iter().enumerate().skip(1).map(|(i, c)| c * q(i as i64)).collect()
}

fn poly_mul(a: &[Q], b: &[Q]) -> Vec<Q> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Q::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add_into(acc: &mut Vec<Q>, p: &[Q]) {
    if acc.len() < p.len() {
        acc.resize(p.len(), Q::zero());
    }
    for (i, c) in p.iter().enumerate() {
        acc[i] += c;
    }
}

/// `p(α + βx)` as a polynomial in `x`.
fn poly_compose_linear(p: &[Q], alpha: &Q, beta: &Q) -> Vec<Q> {
    let lin = vec![alpha.clone(), beta.clone()];
    let mut out = Vec::new();
    for c in p.iter().rev() {
        out = poly_mul(&out, &lin);
        if out.is_empty() {
            out.push(Q::zero());
        }
        out[0] += c;
    }
    out
}

fn trim(mut p: Vec<Q>) -> Vec<Q> {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

impl PiecewisePoly {
    pub fn new(breaks: Vec<Q>, pieces: Vec<Vec<Q>>) -> Result<Self> {
        if breaks.len() != pieces.len() + 1 || breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Range("breakpoints must be strictly increasing, one more than pieces".into()));
        }
        Ok(PiecewisePoly { breaks, pieces: pieces.into_iter().map(trim).collect() })
    }

    /// Density of a uniform variable on `[0, 1]`.
    pub fn uniform() -> Self {
        PiecewisePoly { breaks: vec![q(0), q(1)], pieces: vec![vec![q(1)]] }
    }

    /// Density of `Beta(κ, κ)`: `u^{κ-1}(1-u)^{κ-1} (2κ-1)!/((κ-1)!)²`.
    pub fn beta_symmetric(kappa: usize) -> Self {
        assert!(kappa >= 1);
        let km = kappa as i64 - 1;
        let norm = Q::from_integer(factorial(2 * kappa as u64 - 1))
            / Q::from_integer(factorial(km as u64) * factorial(km as u64));
        // u^{κ-1} (1-u)^{κ-1} = Σ_j C(κ-1, j) (-1)^j u^{κ-1+j}
        let mut p = vec![Q::zero(); 2 * kappa - 1];
        for j in 0..=km {
            let s = if j % 2 == 0 { 1 } else { -1 };
            p[(km + j) as usize] = &norm * Q::from_integer(binomial(km, j) * BigInt::from(s));
        }
        PiecewisePoly { breaks: vec![q(0), q(1)], pieces: vec![p] }
    }

    pub fn breaks(&self) -> &[Q] {
        &self.breaks
    }

    pub fn pieces(&self) -> &[Vec<Q>] {
        &self.pieces
    }

    pub fn support(&self) -> (Q, Q) {
        (self.breaks[0].clone(), self.breaks[self.breaks.len() - 1].clone())
    }

    /// Density of `aX + b` when `self` is the density of `X` (`a ≠ 0`).
    pub fn affine(&self, a: &Q, b: &Q) -> Self {
        assert!(!a.is_zero());
        let inv = Q::one() / a;
        let jac = inv.abs();
        // f_Y(y) = f_X((y - b)/a) / |a|
        let alpha = -(b * &inv);
        let mut breaks: Vec<Q> = self.breaks.iter().map(|t| a * t + b).collect();
        let mut pieces: Vec<Vec<Q>> = self
            .pieces
            .iter()
            .map(|p| poly_compose_linear(p, &alpha, &inv).into_iter().map(|c| c * &jac).collect())
            .collect();
        if a.is_negative() {
            breaks.reverse();
            pieces.reverse();
        }
        PiecewisePoly { breaks, pieces: pieces.into_iter().map(trim).collect() }
    }

    /// Density of `X + Y` for independent `X ~ self`, `Y ~ other`.
    pub fn convolve(&self, other: &Self) -> Self {
        let mut bps: Vec<Q> = Vec::new();
        for a in &self.breaks {
            for b in &other.breaks {
                bps.push(a + b);
            }
        }
        bps.sort();
        bps.dedup();
        let mut out: Vec<Vec<Q>> = vec![Vec::new(); bps.len() - 1];
        for (i, p) in self.pieces.iter().enumerate() {
            let (alo, ahi) = (&self.breaks[i], &self.breaks[i + 1]);
            for (j, g) in other.pieces.iter().enumerate() {
                let (blo, bhi) = (&other.breaks[j], &other.breaks[j + 1]);
                if p.is_empty() || g.is_empty() {
                    continue;
                }
                let anti = antiderivative_in_y(p, g);
                let (lo, hi) = (alo + blo, ahi + bhi);
                for t in 0..bps.len() - 1 {
                    let (u, v) = (&bps[t], &bps[t + 1]);
                    if u < &lo || v > &hi {
                        continue;
                    }
                    let mid = (u + v) / q(2);
                    // y ranges over [max(a_lo, x - b_hi), min(a_hi, x - b_lo)]
                    let lower = if &mid - bhi > *alo { (-bhi.clone(), q(1)) } else { (alo.clone(), q(0)) };
                    let upper = if &mid - blo < *ahi { (-blo.clone(), q(1)) } else { (ahi.clone(), q(0)) };
                    let top = substitute_y(&anti, &upper.0, &upper.1);
                    let bot = substitute_y(&anti, &lower.0, &lower.1);
                    poly_add_into(&mut out[t], &top);
                    let neg: Vec<Q> = bot.into_iter().map(|c| -c).collect();
                    poly_add_into(&mut out[t], &neg);
                }
            }
        }
        PiecewisePoly { breaks: bps, pieces: out.into_iter().map(trim).collect() }
    }

    pub fn derivative(&self, m: usize) -> Self {
        let mut pieces = self.pieces.clone();
        for _ in 0..m {
            pieces = pieces.iter().map(|p| poly_deriv(p)).collect();
        }
        PiecewisePoly { breaks: self.breaks.clone(), pieces }
    }

    /// `f^{(m)}(x)` from the given side. Outside the support this is 0.
    pub fn eval_deriv(&self, x: &Q, m: usize, side: Side) -> Q {
        let n = self.breaks.len();
        if x < &self.breaks[0] || x > &self.breaks[n - 1] {
            return Q::zero();
        }
        // index of the piece that owns x from the requested side
        let idx = match self.breaks.binary_search(x) {
            Ok(i) => match side {
                Side::Left if i == 0 => return Q::zero(),
                Side::Left => i - 1,
                Side::Right if i == n - 1 => return Q::zero(),
                Side::Right => i,
            },
            Err(i) => i - 1,
        };
        let mut p = self.pieces[idx].clone();
        for _ in 0..m {
            p = poly_deriv(&p);
        }
        poly_eval(&p, x)
    }

    pub fn eval(&self, x: &Q, side: Side) -> Q {
        self.eval_deriv(x, 0, side)
    }

    /// Both one-sided values of `f^{(m)}(x)`; they differ only at breakpoints.
    pub fn one_sided(&self, x: &Q, m: usize) -> (Q, Q) {
        (self.eval_deriv(x, m, Side::Left), self.eval_deriv(x, m, Side::Right))
    }

    /// `f^{(m)}(x)`, or an error if the two one-sided values disagree.
    pub fn eval_deriv_continuous(&self, x: &Q, m: usize) -> Result<Q> {
        let (l, r) = self.one_sided(x, m);
        if l != r {
            return Err(Error::Inconsistent(format!(
                "derivative {m} jumps at {x} ({l} vs {r}); the reduced integral does not converge"
            )));
        }
        Ok(l)
    }

    /// `∫ f` over the support, exactly.
    pub fn integral(&self) -> Q {
        let mut total = Q::zero();
        for (i, p) in self.pieces.iter().enumerate() {
            let anti: Vec<Q> =
                std::iter::once(Q::zero()).chain(p.iter().enumerate().map(|(j, c)| c / q(j as i64 + 1))).collect();
            total += poly_eval(&anti, &self.breaks[i + 1]) - poly_eval(&anti, &self.breaks[i]);
        }
        total
    }
}

/// Antiderivative in `y` of `p(y) g(x - y)`, stored as `c[i][j] x^i y^j`.
fn antiderivative_in_y(p: &[Q], g: &[Q]) -> Vec<Vec<Q>> {
    let dx = g.len();
    let dy = g.len() + p.len();
    let mut b = vec![vec![Q::zero(); dy + 1]; dx];
    // g(x - y) = Σ_b g_b Σ_j C(b, j) x^{b-j} (-y)^j
    for (bdeg, gb) in g.iter().enumerate() {
        if gb.is_zero() {
            continue;
        }
        for j in 0..=bdeg {
            let sign = if j % 2 == 0 { 1 } else { -1 };
            let c = gb * Q::from_integer(binomial(bdeg as i64, j as i64) * BigInt::from(sign));
            for (a, pa) in p.iter().enumerate() {
                b[bdeg - j][j + a] += &c * pa;
            }
        }
    }
    // integrate in y
    let mut out = vec![vec![Q::zero(); dy + 2]; dx];
    for i in 0..dx {
        for j in 0..=dy {
            if !b[i][j].is_zero() {
                out[i][j + 1] = &b[i][j] / q(j as i64 + 1);
            }
        }
    }
    out
}

/// `A(x, α + βx)` as a polynomial in `x`.
fn substitute_y(a: &[Vec<Q>], alpha: &Q, beta: &Q) -> Vec<Q> {
    let mut out = Vec::new();
    for (i, row) in a.iter().enumerate() {
        let yp = poly_compose_linear(row, alpha, beta);
        let mut shifted = vec![Q::zero(); i];
        shifted.extend(yp);
        poly_add_into(&mut out, &shifted);
    }
    out
}

/// Exact density of `Σ a_i U_i + b` with `U_i` i.i.d. uniform on `[0, 1]`.
pub fn uniform_sum_spline(weights: &[Q], shift: &Q) -> Result<PiecewisePoly> {
    if weights.is_empty() || weights.iter().any(|w| w.is_zero()) {
        return Err(Error::Range("weights must be nonempty and nonzero".into()));
    }
    let u = PiecewisePoly::uniform();
    let mut acc = u.affine(&weights[0], shift);
    for w in &weights[1..] {
        acc = acc.convolve(&u.affine(w, &Q::zero()));
    }
    Ok(acc)
}

/// One factor `E exp(2πi x σ D)` with `D ~ Beta(κ, κ)` of a product of
/// two-point kernel characteristic functions.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaFactor {
    pub sigma: Q,
    pub kappa: usize,
}

/// Exact density of `Σ σ_i D_i`, `D_i ~ Beta(κ_i, κ_i)` independent.
pub fn beta_sum_density(factors: &[BetaFactor]) -> Result<PiecewisePoly> {
    let mut acc: Option<PiecewisePoly> = None;
    for f in factors.iter().filter(|f| !f.sigma.is_zero()) {
        let d = PiecewisePoly::beta_symmetric(f.kappa).affine(&f.sigma, &Q::zero());
        acc = Some(match acc {
            None => d,
            Some(a) => a.convolve(&d),
        });
    }
    acc.ok_or_else(|| Error::Range("all factors have zero scale; the integral diverges".into()))
}

/// `(-2πi)^n ∫ e^{2πiAx} x^n ∏_i E e^{2πixσ_iD_i} dx = f_Z^{(n)}(-A)` with
/// `Z = Σ σ_i D_i`. Returns the rational right-hand side; an error if the
/// density's `n`-th derivative jumps at `-A` (the integral then diverges).
pub fn fourier_moment(factors: &[BetaFactor], a: &Q, n: usize) -> Result<Q> {
    let f = beta_sum_density(factors)?;
    f.eval_deriv_continuous(&-a.clone(), n)
}

// ---------------------------------------------------------------------------
// Kernel specification and closed form

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub c: f64,
    pub kappa: usize,
    pub points: Vec<f64>,
}

impl KernelSpec {
    pub fn new(c: f64, kappa: usize, points: Vec<f64>) -> Result<Self> {
        if !(c > 0.0) || kappa == 0 || points.is_empty() {
            return Err(Error::Range(format!("kernel needs c > 0, κ ≥ 1, k ≥ 1 (c={c}, κ={kappa}, k={})", points.len())));
        }
        Ok(KernelSpec { c, kappa, points })
    }

    pub fn k(&self) -> usize {
        self.points.len()
    }

    /// `K = kκ`.
    pub fn total(&self) -> usize {
        self.k() * self.kappa
    }

    /// `e^{iπcκΣx}`, the factor between `h` and `h̃`.
    pub fn tilde_phase(&self) -> C64 {
        C64::new(0.0, PI * self.c * self.kappa as f64 * self.points.iter().sum::<f64>()).exp()
    }

    /// `c^{K-1}/Γ(K)`, the kernel at the origin.
    pub fn origin_value(&self) -> f64 {
        let kk = self.total();
        ((kk as f64 - 1.0) * self.c.ln() - ln_factorial(kk - 1)).exp()
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// Value with an absolute error estimate (or standard error, for MC).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Approx {
    pub value: C64,
    pub error: f64,
}

/// Opitz: `G[z_1, …, z_K]` for `G(z) = e^{az} ∏_r (z - q_r)` is the top-right
/// entry of `G(J)`, `J` bidiagonal with the nodes on the diagonal and ones
/// above it. `exp(aJ)` is taken by scaling and squaring.
pub fn divided_difference_exp(nodes: &[C64], a: C64, qs: &[C64]) -> C64 {
    let n = nodes.len();
    assert!(n >= 1);
    // Divided differences are shift-invariant in the nodes once the e^{aμ}
    // factor is pulled out; centring keeps the matrix norm small.
    let mu = nodes.iter().sum::<C64>() / n as f64;
    let z: Vec<C64> = nodes.iter().map(|x| x - mu).collect();
    let idx = |i: usize, j: usize| i * n + j;
    let mut m = vec![C64::zero(); n * n];
    for i in 0..n {
        m[idx(i, i)] = a * z[i];
        if i + 1 < n {
            m[idx(i, i + 1)] = a;
        }
    }
    let norm = (0..n).map(|i| m[idx(i, i)].norm() + if i + 1 < n { a.norm() } else { 0.0 }).fold(0.0, f64::max);
    let mut s = 0u32;
    while norm / 2f64.powi(s as i32) > 0.25 {
        s += 1;
    }
    let scale = 2f64.powi(-(s as i32));
    for v in m.iter_mut() {
        *v *= scale;
    }
    let upper_mul = |x: &[C64], y: &[C64]| -> Vec<C64> {
        let mut out = vec![C64::zero(); n * n];
        for i in 0..n {
            for l in i..n {
                let xil = x[idx(i, l)];
                if xil == C64::zero() {
                    continue;
                }
                for j in l..n {
                    out[idx(i, j)] += xil * y[idx(l, j)];
                }
            }
        }
        out
    };
    // Taylor series of exp on the scaled matrix
    let mut e = vec![C64::zero(); n * n];
    let mut term = vec![C64::zero(); n * n];
    for i in 0..n {
        e[idx(i, i)] = C64::one();
        term[idx(i, i)] = C64::one();
    }
    for p in 1..=24 {
        term = upper_mul(&term, &m);
        for v in term.iter_mut() {
            *v /= p as f64;
        }
        for (ev, tv) in e.iter_mut().zip(&term) {
            *ev += tv;
        }
        if term.iter().all(|t| t.norm() < 1e-18 * e[0].norm().max(1.0)) {
            break;
        }
    }
    for _ in 0..s {
        e = upper_mul(&e, &e);
    }
    // first row of exp(aJ) times ∏(J - q_r); J - q_r is centred by μ too
    let mut row: Vec<C64> = (0..n).map(|j| e[idx(0, j)]).collect();
    for qr in qs {
        let shift = qr - mu;
        let mut next = vec![C64::zero(); n];
        for j in 0..n {
            next[j] = row[j] * (z[j] - shift);
            if j > 0 {
                next[j] += row[j - 1];
            }
        }
        row = next;
    }
    (a * mu).exp() * row[n - 1]
}

/// `h̃^{(κ)}_{c,∞}` by the divided-difference closed form.
pub fn kernel_closed_form_tilde(spec: &KernelSpec) -> C64 {
    let nodes: Vec<C64> =
        spec.points.iter().flat_map(|&x| std::iter::repeat_n(C64::new(x, 0.0), spec.kappa)).collect();
    let a = C64::new(0.0, 2.0 * PI * spec.c);
    let kk = nodes.len() as i32;
    divided_difference_exp(&nodes, a, &[]) / C64::new(0.0, 2.0 * PI).powi(kk - 1)
}

/// `h^{(κ)}_{c,∞}` by the divided-difference closed form.
pub fn kernel_closed_form(spec: &KernelSpec) -> C64 {
    kernel_closed_form_tilde(spec) / spec.tilde_phase()
}

/// Same closed form for complex points (the divided difference is entire in
/// the nodes); used by the autocorrelation and ratio constants.
pub fn kernel_tilde_complex(c: f64, kappa: usize, points: &[C64]) -> C64 {
    let nodes: Vec<C64> = points.iter().flat_map(|&x| std::iter::repeat_n(x, kappa)).collect();
    let kk = nodes.len() as i32;
    divided_difference_exp(&nodes, C64::new(0.0, 2.0 * PI * c), &[]) / C64::new(0.0, 2.0 * PI).powi(kk - 1)
}

// ---------------------------------------------------------------------------
// Quadrature of the defining integral

/// `h̃^{(κ)}_{c,∞}` for integrand evaluation in outer integrals: the plain
/// residue sum when `κ = 1` and the points are well separated (where it is
/// both accurate and several times cheaper), Opitz otherwise.
pub fn kernel_tilde_fast(c: f64, kappa: usize, points: &[f64]) -> C64 {
    let n = points.len();
    let separated =
        kappa == 1 && (0..n).all(|i| (i + 1..n).all(|j| (points[i] - points[j]).abs() >= 0.5));
    if !separated {
        let nodes: Vec<C64> =
            points.iter().flat_map(|&x| std::iter::repeat_n(C64::new(x, 0.0), kappa)).collect();
        return divided_difference_exp(&nodes, C64::new(0.0, 2.0 * PI * c), &[])
            / C64::new(0.0, 2.0 * PI).powi(nodes.len() as i32 - 1);
    }
    let mut s = C64::zero();
    for j in 0..n {
        let mut den = 1.0;
        for i in 0..n {
            if i != j {
                den *= points[j] - points[i];
            }
        }
        s += C64::new(0.0, 2.0 * PI * c * points[j]).exp() / den;
    }
    s / C64::new(0.0, 2.0 * PI).powi(n as i32 - 1)
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// `∫ e^{iπc(K-2)θ} ∏_j (c·sinc(πc(θ+x_j)))^{κ_j} ∏_r (θ + y_r) dθ` over ℝ.
/// The middle `[-T, T]` is done adaptively; the two tails come from the
/// Laurent expansion of the rational part against the trigonometric part.
fn sinc_product_integral(c: f64, nodes: &[(f64, usize)], ys: &[C64], tol: f64) -> Result<Approx> {
    let kk: usize = nodes.iter().map(|n| n.1).sum();
    let m = ys.len();
    if kk < m + 2 {
        return Err(Error::Range(format!("integral needs K - M ≥ 2 (K={kk}, M={m})")));
    }
    let alpha = PI * c * (kk as f64 - 2.0);
    let integrand = |t: f64| -> C64 {
        let mut v = C64::new(0.0, alpha * t).exp();
        for &(x, kap) in nodes {
            v *= (c * sinc(PI * c * (t + x))).powi(kap as i32);
        }
        for y in ys {
            v *= t + y;
        }
        v
    };
    let maxabs = nodes
        .iter()
        .map(|n| n.0.abs())
        .chain(ys.iter().map(|y| y.norm()))
        .fold(1.0, f64::max);
    let t = (8.0 * maxabs).max(48.0 / (2.0 * PI * c)).max(6.0 / c).ceil();

    // trigonometric part: e^{iπc(K-2)θ} ∏ sin(πc(θ+x))^κ = Σ_s A_s e^{iω_s θ},
    // ω_s = 2πc(s-1), A_s = (2i)^{-K} [z^s] ∏ (z e^{iπcx} - e^{-iπcx})
    let mut poly = vec![C64::one()];
    for &(x, kap) in nodes {
        let ep = C64::new(0.0, PI * c * x).exp();
        for _ in 0..kap {
            let mut next = vec![C64::zero(); poly.len() + 1];
            for (i, p) in poly.iter().enumerate() {
                next[i + 1] += p * ep;
                next[i] -= p / ep;
            }
            poly = next;
        }
    }
    let pref = C64::new(0.0, 2.0).powi(-(kk as i32));
    // rational part: ∏(θ+y) / ∏ (π(θ+x))^κ = π^{-K} Σ_n r_n θ^{M-K-n}
    let nterms = 48;
    let mut r = vec![C64::zero(); nterms];
    r[0] = C64::one();
    for y in ys {
        for i in (1..nterms).rev() {
            let prev = r[i - 1];
            r[i] += prev * y;
        }
    }
    for &(x, kap) in nodes {
        for _ in 0..kap {
            // multiply by 1/(1 + x u) = Σ (-x u)^j
            for i in 1..nterms {
                let prev = r[i - 1];
                r[i] -= prev * x;
            }
        }
    }
    let pik = PI.powi(-(kk as i32));
    let mut tail = C64::zero();
    let mut tail_err = 0.0;
    for (s, a_s) in poly.iter().enumerate() {
        let a_s = a_s * pref;
        if a_s.norm() == 0.0 {
            continue;
        }
        let omega = 2.0 * PI * c * (s as f64 - 1.0);
        for (n, rn) in r.iter().enumerate() {
            let p = (kk - m + n) as i32;
            let coef = a_s * rn * pik;
            if coef.norm() < 1e-300 {
                continue;
            }
            let (ip, ep) = power_tail(omega, p, t);
            let (im, em) = power_tail(-omega, p, t);
            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
            tail += coef * (ip + im * sign);
            tail_err += coef.norm() * (ep + em);
        }
        // truncation of the Laurent series: next term bounded geometrically
        let last = r[nterms - 1].norm() * pik * a_s.norm() * t.powi(1 - (kk - m + nterms) as i32);
        tail_err += last;
    }
    let init = ((2.0 * t * c).ceil() as usize).max(8);
    let (mid, mid_err) = quad::adaptive(integrand, -t, t, init, tol * 0.5, 200_000)?;
    Ok(Approx { value: mid + tail, error: mid_err + tail_err })
}

/// `∫_T^∞ e^{iωθ} θ^{-p} dθ` (p ≥ 2) with an error estimate.
fn power_tail(omega: f64, p: i32, t: f64) -> (C64, f64) {
    if omega == 0.0 {
        return (C64::new(t.powi(1 - p) / (p as f64 - 1.0), 0.0), 0.0);
    }
    // -e^{iωT} Σ_j (p)_j / ((iω)^{j+1} T^{p+j}), asymptotic; stop at the smallest term
    let iw = C64::new(0.0, omega);
    let mut sum = C64::zero();
    let mut term = C64::one() / (iw * t.powi(p));
    let mut last = term.norm();
    for j in 0..60 {
        sum += term;
        let next = term * ((p + j) as f64) / (iw * t);
        if next.norm() >= last {
            break;
        }
        last = next.norm();
        term = next;
    }
    (-C64::new(0.0, omega * t).exp() * sum, last)
}

/// `h^{(κ)}_{c,∞}(x)` from its defining integral.
pub fn kernel_quadrature(spec: &KernelSpec, tol: f64) -> Result<Approx> {
    if spec.total() < 2 {
        return Err(Error::Range("kernel integral needs kκ ≥ 2".into()));
    }
    let nodes: Vec<(f64, usize)> = spec.points.iter().map(|&x| (x, spec.kappa)).collect();
    let r = sinc_product_integral(spec.c, &nodes, &[], tol)?;
    if r.error > tol {
        return Err(Error::Convergence(format!("kernel quadrature error {:.2e} > {tol:.1e}", r.error)));
    }
    Ok(r)
}

/// `h^{(κ)}_{c,∞}(x)` by Dirichlet Monte Carlo: `c^{K-1}/Γ(K)` times
/// `E exp(2πic Σ x_j (D_j - κ/2))`, `D ~ Dirichlet(κ, …, κ)`. Batches use
/// independent ChaCha streams of the one seed, merged in order.
pub fn kernel_mc(spec: &KernelSpec, samples: usize, seed: u64) -> Result<Approx> {
    if samples == 0 {
        return Err(Error::Range("at least one sample".into()));
    }
    let batches = samples.clamp(1, 64);
    let per = samples.div_ceil(batches);
    let gamma = Gamma::new(spec.kappa as f64, 1.0).map_err(|e| Error::Range(e.to_string()))?;
    let shift = spec.kappa as f64 / 2.0;
    let means: Vec<C64> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let n = per.min(samples - (b * per).min(samples));
            let mut acc = C64::zero();
            let mut g = vec![0.0; spec.k()];
            for _ in 0..n {
                let mut s = 0.0;
                for v in g.iter_mut() {
                    *v = gamma.sample(&mut rng);
                    s += *v;
                }
                let phase: f64 = spec.points.iter().zip(&g).map(|(x, gv)| x * (gv / s - shift)).sum();
                acc += C64::new(0.0, 2.0 * PI * spec.c * phase).exp();
            }
            if n == 0 {
                C64::new(f64::NAN, 0.0)
            } else {
                acc / n as f64
            }
        })
        .collect();
    let means: Vec<C64> = means.into_iter().filter(|m| !m.re.is_nan()).collect();
    let nb = means.len() as f64;
    let mean = means.iter().sum::<C64>() / nb;
    let var = if means.len() > 1 {
        means.iter().map(|m| (m - mean).norm_sqr()).sum::<f64>() / (nb - 1.0)
    } else {
        0.0
    };
    let scale = spec.origin_value();
    Ok(Approx { value: mean * scale, error: scale * (var / nb).sqrt() })
}

/// Uniform draws for callers that need the generator directly.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn uniform01<R: Rng>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

// ---------------------------------------------------------------------------
// Supersymmetric kernels

/// `Σ_j e^{2πicx_j} ∏_r (y_r - x_j) / ∏_{i≠j} (x_i - x_j)`, the raw residue
/// sum. Requires distinct `x`.
pub fn supersym_residue_sum(c: f64, x: &[C64], y: &[C64]) -> Result<C64> {
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            if (x[i] - x[j]).norm() < 1e-9 {
                return Err(Error::Coincidence("residue route needs distinct X points".into()));
            }
        }
    }
    let mut s = C64::zero();
    for j in 0..x.len() {
        let mut t = (C64::new(0.0, 2.0 * PI * c) * x[j]).exp();
        for yr in y {
            t *= yr - x[j];
        }
        for i in 0..x.len() {
            if i != j {
                t /= x[i] - x[j];
            }
        }
        s += t;
    }
    Ok(s)
}

/// `(-2πi)^{-(K-M-1)}`, the residue-route constant (see [`calibrate_supersym`]).
pub fn supersym_residue_constant(k: usize, m: usize) -> C64 {
    C64::new(0.0, -2.0 * PI).powi(-((k as i32) - (m as i32) - 1))
}

/// `(-2πi)^M`, the constant in front of the integral form.
pub fn supersym_integral_constant(m: usize) -> C64 {
    C64::new(0.0, -2.0 * PI).powi(m as i32)
}

/// Raw integral `c^K ∫ e^{iπc(K-2)θ} ∏ sinc(πc(x_j+θ)) ∏ (θ + y_r) dθ`.
pub fn supersym_integral_raw(c: f64, x: &[f64], y: &[C64], tol: f64) -> Result<Approx> {
    let nodes: Vec<(f64, usize)> = x.iter().map(|&v| (v, 1)).collect();
    sinc_product_integral(c, &nodes, y, tol)
}

/// How a supersymmetric kernel value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SupersymRoute {
    Residue,
    Integral,
}

/// `h̃_{c,∞}[X - Y] = lim N^{-(K-M-1)} h_{⌊cN⌋}[e^{2πiX/N} - e^{2πiY/N}]`
/// (the phase `e^{iπcΣx}` is included). Residue route for distinct `X`,
/// integral route otherwise.
pub fn kernel_supersym(c: f64, x: &[f64], y: &[f64], tol: f64) -> Result<(Approx, SupersymRoute)> {
    let (k, m) = (x.len(), y.len());
    if k < m + 1 {
        return Err(Error::Range("kernel_supersym needs |X| > |Y|".into()));
    }
    let xc: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
    let yc: Vec<C64> = y.iter().map(|&v| C64::new(v, 0.0)).collect();
    match supersym_residue_sum(c, &xc, &yc) {
        Ok(r) => Ok((Approx { value: r * supersym_residue_constant(k, m), error: 1e-14 * r.norm() }, SupersymRoute::Residue)),
        Err(Error::Coincidence(_)) => {
            let raw = supersym_integral_raw(c, x, &yc, tol)?;
            let phase = C64::new(0.0, PI * c * x.iter().sum::<f64>()).exp();
            let k0 = supersym_integral_constant(m);
            Ok((Approx { value: raw.value * k0 * phase, error: raw.error * k0.norm() }, SupersymRoute::Integral))
        }
        Err(e) => Err(e),
    }
}

/// Closed form for `h̃_{c,∞}[X - Y]` valid for any (also confluent) `X`:
/// `(2πi)^{-(K-M-1)} F[x_1..x_K]` with `F(z) = e^{2πicz} ∏ (z - y_r)`.
pub fn kernel_supersym_closed_form(c: f64, x: &[C64], y: &[C64]) -> C64 {
    let (k, m) = (x.len() as i32, y.len() as i32);
    divided_difference_exp(x, C64::new(0.0, 2.0 * PI * c), y) / C64::new(0.0, 2.0 * PI).powi(k - m - 1)
}

/// `h_{⌊cN⌋}[e^{2πiX/N} - e^{2πiY/N}]`, exactly (complex doubles).
pub fn finite_n_supersym(n: usize, c: f64, x: &[f64], y: &[f64]) -> Result<C64> {
    let deg = (c * n as f64).floor() as usize;
    if deg.saturating_mul(x.len() + y.len()) > 50_000_000 {
        return Err(Error::Overflow(format!("⌊cN⌋ = {deg} too large")));
    }
    let e = |v: f64| C64::new(0.0, 2.0 * PI * v / n as f64).exp();
    let xs: Vec<C64> = x.iter().map(|&v| e(v)).collect();
    let ys: Vec<C64> = y.iter().map(|&v| e(v)).collect();
    Ok(crate::symfun::hseries_supersym(&xs, &ys, deg).h(deg as i64))
}

/// A constant snapped to the nearest `±(2π)^n i^j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapped {
    pub measured: C64,
    pub pi_power: i32,
    pub i_power: u8,
    pub snapped: C64,
    pub rel_residual: f64,
}

pub fn snap_to_two_pi_power(z: C64) -> Snapped {
    let n = (z.norm().ln() / (2.0 * PI).ln()).round() as i32;
    let j = ((z.arg() / (PI / 2.0)).round() as i64).rem_euclid(4) as u8;
    let snapped = C64::new(2.0 * PI, 0.0).powi(n) * C64::i().powi(j as i32);
    Snapped { measured: z, pi_power: n, i_power: j, snapped, rel_residual: (z - snapped).norm() / snapped.norm() }
}

/// The calibration of both supersymmetric constants against a finite-`N`
/// evaluation: `finite / residue_sum` and `finite / (phase · raw integral)`
/// are measured and snapped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub n: usize,
    pub residue: Snapped,
    pub integral: Snapped,
    /// `(integral constant) / (residue constant)` measured between the two
    /// limit forms only, without the finite-`N` side.
    pub integral_vs_residue: Snapped,
}

pub fn calibrate_supersym(c: f64, x: &[f64], y: &[f64], n: usize, tol: f64) -> Result<Calibration> {
    let (k, m) = (x.len(), y.len());
    if k < m + 2 {
        return Err(Error::Range("calibration needs |X| - |Y| ≥ 2".into()));
    }
    let scaled = finite_n_supersym(n, c, x, y)? * (n as f64).powi(-((k - m - 1) as i32));
    let xc: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
    let yc: Vec<C64> = y.iter().map(|&v| C64::new(v, 0.0)).collect();
    let r = supersym_residue_sum(c, &xc, &yc)?;
    let raw = supersym_integral_raw(c, x, &yc, tol)?;
    let phase = C64::new(0.0, PI * c * x.iter().sum::<f64>()).exp();
    Ok(Calibration {
        n,
        residue: snap_to_two_pi_power(scaled / r),
        integral: snap_to_two_pi_power(scaled / (raw.value * phase)),
        integral_vs_residue: snap_to_two_pi_power(r / (raw.value * phase)),
    })
}

// ---------------------------------------------------------------------------
// Finite-N kernels and the exact identities behind the limits

/// `h^{(κ)}_{⌊cN⌋}(e^{2πix_1/N}, …)`, each point repeated `κ` times.
pub fn finite_n_kernel(n: usize, c: f64, kappa: usize, x: &[f64]) -> Result<C64> {
    let deg = (c * n as f64).floor();
    if deg < 0.0 {
        return Err(Error::Range("⌊cN⌋ must be nonnegative".into()));
    }
    let deg = deg as usize;
    if deg.saturating_mul(x.len() * kappa) > 50_000_000 {
        return Err(Error::Overflow(format!("⌊cN⌋·kκ = {} too large", deg * x.len() * kappa)));
    }
    let pts: Vec<C64> = x
        .iter()
        .flat_map(|&v| std::iter::repeat_n(C64::new(0.0, 2.0 * PI * v / n as f64).exp(), kappa))
        .collect();
    Ok(hseries_from_points(&pts, deg).h(deg as i64))
}

/// Negative-binomial evaluation of `h_n[X·1^κ]`: `(kκ)^{↑n}/n!` times the
/// conditional expectation of `∏ x_ℓ^{G_ℓ}` given `Σ G_ℓ = n`, enumerated
/// exactly over the (finite) conditional law.
pub fn negbin_h(n: usize, kappa: usize, x: &[Q]) -> Q {
    let k = x.len();
    let kk = (k * kappa) as i64;
    // P(G = g | ΣG = n) = ∏ C(g_ℓ+κ-1, g_ℓ) / C(n+kκ-1, n)
    let norm = Q::from_integer(binomial(n as i64 + kk - 1, n as i64));
    let mut cond = Q::zero();
    let mut g = vec![0usize; k];
    compositions(n, 0, &mut g, &mut |g| {
        let mut w = Q::one();
        for (l, &gl) in g.iter().enumerate() {
            w *= Q::from_integer(binomial((gl + kappa - 1) as i64, gl as i64)) * num_traits::pow(x[l].clone(), gl);
        }
        cond += w / &norm;
    });
    let rising = Q::from_integer((0..n as i64).fold(BigInt::one(), |a, i| a * BigInt::from(kk + i)));
    rising / Q::from_integer(factorial(n as u64)) * cond
}

fn compositions(rem: usize, i: usize, g: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if i + 1 == g.len() {
        g[i] = rem;
        f(g);
        return;
    }
    for v in 0..=rem {
        g[i] = v;
        compositions(rem - v, i + 1, g, f);
    }
}

/// Gamma-moment evaluation of `h_n[X·1^κ] = E[(Σ x_j γ_j)^n]/n!`, expanded
/// multinomially with `E γ_κ^m = κ^{↑m}`.
pub fn gamma_moment_h(n: usize, kappa: usize, x: &[Q]) -> Q {
    let k = x.len();
    let mut total = Q::zero();
    let mut g = vec![0usize; k];
    compositions(n, 0, &mut g, &mut |g| {
        let mut multi = Q::from_integer(factorial(n as u64));
        for (l, &gl) in g.iter().enumerate() {
            let rising = (0..gl as i64).fold(BigInt::one(), |a, i| a * BigInt::from(kappa as i64 + i));
            multi = multi / Q::from_integer(factorial(gl as u64)) * Q::from_integer(rising) * num_traits::pow(x[l].clone(), gl);
        }
        total += multi;
    });
    total / Q::from_integer(factorial(n as u64))
}

/// `f64` view of a rational, for reports.
pub fn qf64(x: &Q) -> f64 {
    q_to_f64(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::qf;

    #[test]
    fn splines_from_spec() {
        let f = uniform_sum_spline(&[q(1)], &q(0)).unwrap();
        assert_eq!(f.eval(&qf(1, 2), Side::Left), q(1));
        let f = uniform_sum_spline(&[q(1), q(1)], &q(0)).unwrap();
        assert_eq!(f.eval(&q(1), Side::Left), q(1));
        let f = uniform_sum_spline(&vec![q(1); 4], &q(0)).unwrap();
        assert_eq!(f.eval_deriv_continuous(&q(2), 0).unwrap(), qf(2, 3));
        assert_eq!(f.eval_deriv_continuous(&q(2), 2).unwrap(), q(-2));
        assert_eq!(f.integral(), q(1));
        for t in 0..9 {
            let x = qf(t, 2);
            assert_eq!(f.eval(&x, Side::Left), f.eval(&(q(4) - &x), Side::Right));
        }
    }

    #[test]
    fn one_sided_at_edges() {
        let f = uniform_sum_spline(&[q(1)], &q(0)).unwrap();
        assert_eq!(f.one_sided(&q(0), 0), (q(0), q(1)));
        assert_eq!(f.one_sided(&q(1), 0), (q(1), q(0)));
        assert!(f.eval_deriv_continuous(&q(1), 0).is_err());
    }

    #[test]
    fn beta_mass_and_affine() {
        for kap in 1..5 {
            let b = PiecewisePoly::beta_symmetric(kap);
            assert_eq!(b.integral(), q(1));
            assert_eq!(b.affine(&q(-3), &qf(1, 2)).integral(), q(1));
        }
    }

    #[test]
    fn closed_form_two_points() {
        for &x in &[0.0, 0.3, -1.7, 2.5] {
            let s = KernelSpec::new(1.0, 1, vec![0.0, x]).unwrap();
            let v = kernel_closed_form(&s);
            assert!((v - C64::new(sinc(PI * x), 0.0)).norm() < 1e-12, "{x}: {v}");
        }
        let s = KernelSpec::new(1.0, 2, vec![0.0, 0.0]).unwrap();
        assert!((kernel_closed_form(&s) - C64::new(1.0 / 6.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let s = KernelSpec::new(0.5, 1, vec![0.0, 0.7, -1.3]).unwrap();
        let a = kernel_quadrature(&s, 1e-10).unwrap();
        assert!((a.value - kernel_closed_form(&s)).norm() < 1e-8, "{:?} vs {}", a, kernel_closed_form(&s));
    }

    #[test]
    fn negbin_and_gamma() {
        let x = vec![qf(1, 2), qf(-2, 3), q(3)];
        for kap in 1..3 {
            let rep: Vec<Q> = x.iter().flat_map(|v| std::iter::repeat_n(v.clone(), kap)).collect();
            let hs = hseries_from_points(&rep, 5);
            for n in 0..=5 {
                assert_eq!(negbin_h(n, kap, &x), hs.h(n as i64));
                assert_eq!(gamma_moment_h(n, kap, &x), hs.h(n as i64));
            }
        }
    }
}
