//! The acceptance suite, shared by the `acceptance` integration test and the
//! CLI's `selftest` command. Each criterion collects its sub-checks and
//! reports one PASS/FAIL line; probes (criterion 12) always pass and only
//! print what they measured.

use crate::convergence_harness::{convergence_table, rate_ratios, richardson};
use crate::cue_sampler::{estimate_functional, sample_chain, Observable};
use crate::exact_functionals::{
    dehaye_derivative_ratio, dehaye_theta_reading_n1, kr3g_moment, ks_moment, mom_moment, secular_moment,
    truncated_moment_lambda,
};
use crate::limit_constants::{
    barnes_mk, evaluate_constant, hankel_ks, hypergeom_2f1_kk1, link_sc_zt_probe, Budget, LimitFunctionalSpec, Method,
};
use crate::limit_kernels::{
    finite_n_kernel, finite_n_supersym, gamma_moment_h, kernel_closed_form, kernel_closed_form_tilde, kernel_mc,
    kernel_quadrature, negbin_h, seeded_rng, sinc, supersym_integral_constant, supersym_integral_raw,
    supersym_residue_constant, supersym_residue_sum, uniform_sum_spline, KernelSpec, Side,
};
use crate::partitions::{partitions_of, Partition};
use crate::polytope_ehrhart::{
    brute_force_count, ehrhart_birkhoff, ehrhart_subbirkhoff, ehrhart_transport, interpolate_ehrhart, SumMode,
};
use crate::ring::{q, qf, C64, Q};
use crate::symfun::{hseries_from_points, weyl_dimension};
use num_bigint::BigInt;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::time::Instant;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: String,
    pub pass: bool,
    /// Probes never fail the suite.
    pub assertive: bool,
    pub details: Vec<String>,
    pub runtime_ms: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        let kind = if self.assertive { "" } else { " (probe)" };
        format!("[{tag}] {:>2}. {}{kind} ({:.1} s)", self.id, self.title, self.runtime_ms / 1000.0)
    }
}

#[derive(Default)]
struct Checker {
    ok: bool,
    details: Vec<String>,
}

impl Checker {
    fn new() -> Self {
        Checker { ok: true, details: vec![] }
    }

    fn check(&mut self, cond: bool, msg: impl Into<String>) {
        let m = msg.into();
        if !cond {
            self.ok = false;
            self.details.push(format!("FAILED: {m}"));
        } else {
            self.details.push(m);
        }
    }

    /// Folds a `Result` into the check list.
    fn try_check<T>(&mut self, r: crate::Result<T>, what: &str) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.check(false, format!("{what}: {e}"));
                None
            }
        }
    }

    fn note(&mut self, msg: impl Into<String>) {
        self.details.push(msg.into());
    }
}

pub const TITLES: [&str; 12] = [
    "exact Keating-Snaith moments",
    "Keating-Snaith limit",
    "secular coefficients",
    "polytopes",
    "truncation bridge",
    "KR3G",
    "moments of moments",
    "limit kernels",
    "local CLT with speed",
    "supersymmetric kernel calibration",
    "sampler cross-checks",
    "diagnostic probes",
];

/// Runs one criterion (1–12).
pub fn run_criterion(id: u8) -> CriterionResult {
    let start = Instant::now();
    let mut c = Checker::new();
    let (assertive, budget_s) = match id {
        1 => (true, Some(5.0)),
        2 | 3 => (true, Some(60.0)),
        4 => (true, Some(120.0)),
        12 => (false, None),
        _ => (true, None),
    };
    match id {
        1 => c1(&mut c),
        2 => c2(&mut c),
        3 => c3(&mut c),
        4 => c4(&mut c),
        5 => c5(&mut c),
        6 => c6(&mut c),
        7 => c7(&mut c),
        8 => c8(&mut c),
        9 => c9(&mut c),
        10 => c10(&mut c),
        11 => c11(&mut c),
        12 => c12(&mut c),
        _ => c.check(false, format!("no criterion {id}")),
    }
    let secs = start.elapsed().as_secs_f64();
    if let Some(b) = budget_s {
        c.check(secs < b, format!("runtime {secs:.2} s < {b} s"));
    }
    CriterionResult {
        id,
        title: TITLES.get(id as usize - 1).unwrap_or(&"?").to_string(),
        pass: c.ok || !assertive,
        assertive,
        details: c.details,
        runtime_ms: secs * 1000.0,
    }
}

pub fn run_all() -> Vec<CriterionResult> {
    (1..=12).map(run_criterion).collect()
}

fn big(n: i64) -> BigInt {
    BigInt::from(n)
}

fn c1(c: &mut Checker) {
    let mut bad = vec![];
    for k in 1..=4usize {
        for n in 1..=12usize {
            let js = ks_moment(n, k);
            let wd = weyl_dimension(&Partition::rectangle(n, k), 2 * k);
            if js.is_err() || js != wd {
                bad.push(format!("(N={n},k={k}): {js:?} vs {wd:?}"));
            }
        }
    }
    c.check(bad.is_empty(), format!("Jacobi–Trudi = Weyl dimension for 1 ≤ N ≤ 12, k ≤ 4 {bad:?}"));
    c.check(ks_moment(2, 2) == Ok(big(20)), "ks_moment(2,2) = 20");
    let lin = (1..=12).all(|n| ks_moment(n, 1) == Ok(big(n as i64 + 1)));
    c.check(lin, "ks_moment(N,1) = N+1 for N ≤ 12");
}

fn c2(c: &mut Checker) {
    let spec = LimitFunctionalSpec::ks(2).unwrap();
    if let Some(t) = c.try_check(convergence_table(&spec, &[100, 200, 400]), "KS table") {
        if let Some(r) = c.try_check(richardson(&t.pairs()), "Richardson") {
            let rel = (r.limit.re - 1.0 / 12.0).abs() * 12.0;
            c.check(rel < 0.01, format!("Richardson limit {:.8} within 1% of 1/12 (rel {rel:.2e})", r.limit.re));
        }
    }
    for k in 2..=4 {
        let h = hankel_ks(k);
        c.check(h.as_ref() == Ok(&barnes_mk(k)), format!("hankel_ks({k}) = barnes_mk({k}) = {}", barnes_mk(k)));
    }
    let b = Budget { method: Some(Method::Quad), ..Budget::default() };
    if let Some(e) = c.try_check(evaluate_constant(&spec, &b), "KS quadrature") {
        let d = (e.value - 1.0 / 12.0).norm();
        c.check(d < 1e-3, format!("KS k=2 by quadrature = {:.10} (|Δ| = {d:.1e})", e.value.re));
    }
}

fn c3(c: &mut Checker) {
    for (n, m, want) in [(2, 1, 2), (4, 2, 3), (6, 3, 4)] {
        c.check(secular_moment(n, m, 2) == Ok(big(want)), format!("secular_moment({n},{m},2) = {want}"));
    }
    let unit = (0..=8usize).all(|n| (0..=n).all(|m| secular_moment(n, m, 1) == Ok(big(1))));
    c.check(unit, "E|sc_m|² = 1 for 0 ≤ m ≤ N ≤ 8");
    let spec = LimitFunctionalSpec::sc(qf(1, 2), 2).unwrap();
    if let Some(e) = c.try_check(evaluate_constant(&spec, &Budget::default()), "SC spline") {
        c.check(
            e.exact == Some(qf(1, 2)) && (e.value.re - 0.5).abs() < 1e-3,
            format!("SC(1/2, 2) = {:?} by {}", e.exact, e.method.name()),
        );
    }
    // ⌊ρN⌋ = N/2 needs even N
    let ns: Vec<usize> = (2..=40).step_by(2).collect();
    if let Some(t) = c.try_check(convergence_table(&spec, &ns), "SC table") {
        let v: Vec<f64> = t.rows.iter().map(|r| r.rescaled.re).collect();
        let mono = v.windows(2).all(|w| w[1] < w[0] && w[1] > 0.5);
        c.check(mono, format!("v_N decreases monotonically to 1/2 (v_2 = {}, v_40 = {:.6})", v[0], v[v.len() - 1]));
        let rates = rate_ratios(&t.pairs(), C64::new(0.5, 0.0));
        let ok = !rates.is_empty() && rates.iter().all(|(_, r)| (0.4..=0.6).contains(r));
        c.check(ok, format!("first-order rate: |v_2N − ½|/|v_N − ½| ∈ [0.4, 0.6] on {} pairs", rates.len()));
    }
}

fn c4(c: &mut Checker) {
    let mut bad = vec![];
    for k in 1..=3 {
        for t in 0..=4 {
            if ehrhart_birkhoff(k, t).ok() != Some(brute_force_count(&vec![t; k], &vec![t; k], SumMode::Equal)) {
                bad.push(format!("B_{k}, t={t}"));
            }
        }
    }
    for k in 1..=2 {
        for t in 0..=4 {
            if ehrhart_subbirkhoff(k, t).ok() != Some(brute_force_count(&vec![t; k], &vec![t; k], SumMode::AtMost)) {
                bad.push(format!("S_{k}, t={t}"));
            }
        }
    }
    let mut cases = 0;
    for n in 1..=5 {
        for lam in partitions_of(n) {
            for mu in partitions_of(n) {
                for l in 1..=2 {
                    let rows: Vec<usize> = lam.parts().iter().map(|p| p * l).collect();
                    let cols: Vec<usize> = mu.parts().iter().map(|p| p * l).collect();
                    cases += 1;
                    if ehrhart_transport(&lam, &mu, l).ok() != Some(brute_force_count(&rows, &cols, SumMode::Equal)) {
                        bad.push(format!("T_{{{lam},{mu}}}, ℓ={l}"));
                    }
                }
            }
        }
    }
    c.check(bad.is_empty(), format!("extraction = brute force on B_k, S_k and {cases} transportation cases {bad:?}"));
    let samples: Vec<(i64, BigInt)> = (0..=4).map(|t| (t, ehrhart_birkhoff(3, t as usize).unwrap_or_default())).collect();
    if let Some(p) = c.try_check(interpolate_ehrhart(&samples, 4, "B_3"), "B_3 interpolation") {
        c.check(p.leading() == qf(1, 8), format!("leading coefficient of L(t,B_3) = {}", p.leading()));
    }
    let s2: Vec<_> = (0..=3).map(|t| ehrhart_subbirkhoff(2, t).ok()).collect();
    c.check(s2 == [1, 7, 26, 70].map(|v| Some(big(v))), format!("L(t,S_2), t=0..3: {s2:?}"));
    for (spec, name) in [(LimitFunctionalSpec::vol_b(2), "VOL_B(2)"), (LimitFunctionalSpec::vol_s(1), "VOL_S(1)")] {
        if let Some(e) = c.try_check(evaluate_constant(&spec.unwrap(), &Budget::default()), name) {
            c.check((e.value - 1.0).norm() < 1e-4, format!("{name} = {} by {}", e.value.re, e.method.name()));
        }
    }
}

fn c5(c: &mut Checker) {
    let mut bad = vec![];
    for k in 1..=2 {
        for t in 0..=4 {
            let a = truncated_moment_lambda(k, t, &q(1)).ok();
            let b = ehrhart_subbirkhoff(k, t).ok().map(Q::from_integer);
            if a.is_none() || a != b {
                bad.push((k, t));
            }
        }
    }
    c.check(bad.is_empty(), format!("truncated_moment_lambda(k,t,1) = L(t,S_k), k ≤ 2, t ≤ 4 {bad:?}"));
    let mut geo_ok = true;
    for l2 in [qf(1, 4), q(1), q(4)] {
        for t in 0..=6 {
            let mut want = Q::from_integer(big(0));
            let mut p = q(1);
            for _ in 0..=t {
                want += &p;
                p *= &l2;
            }
            geo_ok &= truncated_moment_lambda(1, t, &l2).ok() == Some(want);
        }
    }
    c.check(geo_ok, "k = 1: Σ_{m≤t} λ^{2m} at λ² ∈ {1/4, 1, 4}, t ≤ 6");
    let mut worst: f64 = 0.0;
    for i in 0..=19 {
        let z = i as f64 * 0.05;
        match hypergeom_2f1_kk1(1, z) {
            Ok(s) => worst = worst.max((s.value - 1.0 / (1.0 - z)).abs()),
            Err(_) => worst = f64::INFINITY,
        }
    }
    c.check(worst < 1e-12, format!("₂F₁(1,1;1;z) = 1/(1−z) on z = 0, 0.05, …, 0.95 (max |Δ| = {worst:.1e})"));
}

fn c6(c: &mut Checker) {
    c.check(kr3g_moment(2, 1, 2) == Ok(big(4)), "kr3g_moment(2,1,2) = 4");
    let mut bad = vec![];
    for k in 1..=3 {
        for n in 0..=6 {
            for m in 0..=k * n {
                if kr3g_moment(n, m, k).is_err() || kr3g_moment(n, m, k) != kr3g_moment(n, k * n - m, k) {
                    bad.push((k, n, m));
                }
            }
        }
    }
    c.check(bad.is_empty(), format!("I_k(m,N) = I_k(kN−m,N) for k ≤ 3, N ≤ 6 {bad:?}"));
    let ones = (0..=6usize).all(|n| (0..=n).all(|m| kr3g_moment(n, m, 1) == Ok(big(1))));
    c.check(ones, "kr3g_moment(N,m,1) = 1");
    let spec = LimitFunctionalSpec::kr3g(q(1), 2).unwrap();
    let t = c.try_check(convergence_table(&spec, &[40, 80]), "KR3G table");
    let e = c.try_check(evaluate_constant(&spec, &Budget::default()), "KR3G constant");
    if let (Some(t), Some(e)) = (t, e) {
        if let Some(r) = c.try_check(richardson(&t.pairs()), "Richardson") {
            let rel = (r.limit - e.value).norm() / e.value.norm();
            c.check(
                rel < 0.05,
                format!("Richardson {:.6} vs constant {:?} = {:.6} (rel {rel:.1e})", r.limit.re, e.exact, e.value.re),
            );
        }
    }
}

fn c7(c: &mut Checker) {
    c.check(mom_moment(1, 2, 1) == Ok(big(4)), "mom_moment(1,2,1) = 4");
    let a = (1..=8).all(|n| (1..=3).all(|b| mom_moment(n, 1, b).is_ok() && mom_moment(n, 1, b) == ks_moment(n, b)));
    c.check(a, "mom_moment(N,1,β) = ks_moment(N,β), N ≤ 8, β ≤ 3");
    let b = (1..=5).all(|n| (1..=2).all(|b| mom_moment(n, 2, b).is_ok() && mom_moment(n, 2, b) == kr3g_moment(n, b * n, 2 * b)));
    c.check(b, "mom_moment(N,2,β) = kr3g_moment(N,βN,2β), N ≤ 5, β ≤ 2");
    if let Some(e) = c.try_check(evaluate_constant(&LimitFunctionalSpec::mom(1, 2).unwrap(), &Budget::default()), "MOM") {
        c.check((e.value - 1.0 / 12.0).norm() < 1e-3, format!("MOM(k=1, β=2) = {} by {}", e.value.re, e.method.name()));
    }
}

fn c8(c: &mut Checker) {
    let kq = |cc: f64, kappa: usize, pts: Vec<f64>| kernel_quadrature(&KernelSpec::new(cc, kappa, pts).unwrap(), 1e-10);
    if let Some(v) = c.try_check(kq(1.0, 1, vec![0.0, 0.0]), "h(1,1,(0,0))") {
        c.check((v.value - 1.0).norm() < 1e-8, format!("h^(1)_1(0,0) = {}", v.value));
    }
    let mut worst: f64 = 0.0;
    for i in -4..=4 {
        let x = 0.75 * i as f64 + 0.1;
        match kq(1.0, 1, vec![0.0, x]) {
            Ok(v) => worst = worst.max((v.value - sinc(PI * x)).norm()),
            Err(_) => worst = f64::INFINITY,
        }
    }
    c.check(worst < 1e-6, format!("h^(1)_1(0,x) = sinc(πx) on 9 points (max |Δ| = {worst:.1e})"));
    if let Some(v) = c.try_check(kq(1.0, 2, vec![0.0, 0.0]), "h(1,2,(0,0))") {
        c.check((v.value - 1.0 / 6.0).norm() < 1e-8, format!("h^(2)_1(0,0) = {}", v.value));
    }
    let spec = KernelSpec::new(1.0, 2, vec![0.0, 0.7]).unwrap();
    let quad = c.try_check(kernel_quadrature(&spec, 1e-10), "quadrature");
    let mc = c.try_check(kernel_mc(&spec, 1_000_000, 20_240_601), "Dirichlet MC");
    if let (Some(qv), Some(m)) = (quad, mc) {
        let z = (m.value - qv.value).norm() / m.error;
        c.check(z < 3.0, format!("MC {:.6} ± {:.1e} vs quadrature {:.6} ({z:.2} SE)", m.value, m.error, qv.value));
    }
    let pts = [qf(1, 2), qf(-1, 3), q(2)];
    let mut ok = true;
    for kappa in 1..=2 {
        for k in 1..=3 {
            let x = &pts[..k];
            let rep: Vec<Q> = x.iter().flat_map(|p| std::iter::repeat_n(p.clone(), kappa)).collect();
            let hs = hseries_from_points(&rep, 6);
            for n in 0..=6 {
                ok &= negbin_h(n, kappa, x) == hs.h(n as i64) && gamma_moment_h(n, kappa, x) == hs.h(n as i64);
            }
        }
    }
    c.check(ok, "negative-binomial (and gamma) representation of h_n[X·1^κ], n ≤ 6, k ≤ 3, κ ∈ {1,2}");
    if let Some(s4) = c.try_check(uniform_sum_spline(&vec![q(1); 4], &q(0)), "S_4 spline") {
        c.check(s4.integral() == q(1), "Irwin–Hall S_4 has mass 1 exactly");
        c.check(s4.eval(&q(2), Side::Left) == qf(2, 3), "f_{S_4}(2) = 2/3");
        c.check(s4.eval_deriv_continuous(&q(2), 2) == Ok(q(-2)), "f''_{S_4}(2) = −2");
    }
}

fn c9(c: &mut Checker) {
    let grid = [-2.0, -0.7, 0.5, 1.5, 3.0];
    for (cc, kappa) in [(1.0, 1usize), (0.5, 1), (1.0, 2)] {
        let k = 2usize;
        let mut errs = vec![];
        for n in [64usize, 128, 256, 512] {
            let mut sup: f64 = 0.0;
            for &x in &grid {
                let spec = KernelSpec::new(cc, kappa, vec![0.0, x]).unwrap();
                let lim = kernel_closed_form_tilde(&spec);
                match finite_n_kernel(n, cc, kappa, &[0.0, x]) {
                    Ok(v) => sup = sup.max((v * (n as f64).powi(1 - (k * kappa) as i32) - lim).norm()),
                    Err(_) => sup = f64::INFINITY,
                }
            }
            errs.push(sup);
        }
        let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
        let ok = ratios.iter().all(|r| (1.6..=2.4).contains(r));
        let es: Vec<String> = errs.iter().map(|e| format!("{e:.2e}")).collect();
        c.check(ok, format!("(c,κ,k) = ({cc},{kappa},{k}): sup errors {es:?}, ratios {ratios:.3?}"));
    }
}

fn c10(c: &mut Checker) {
    let mut rng = seeded_rng(10, 0);
    let mut draw = |n: usize| -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            let sep = (0..n).all(|i| (i + 1..n).all(|j| (v[i] - v[j]).abs() > 0.05));
            if sep {
                return v;
            }
        }
    };
    let shapes = [(2usize, 0usize), (3, 0), (3, 1), (4, 1), (4, 2), (5, 2), (5, 3), (6, 2)];
    for &(k, m) in shapes.iter() {
        let cc = 1.0;
        let mut all = draw(k + m);
        let y = all.split_off(k);
        let x = all;
        let xc: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
        let yc: Vec<C64> = y.iter().map(|&v| C64::new(v, 0.0)).collect();
        let Some(r) = c.try_check(supersym_residue_sum(cc, &xc, &yc), "residue") else { continue };
        let residue = r * supersym_residue_constant(k, m);
        let Some(raw) = c.try_check(supersym_integral_raw(cc, &x, &yc, 1e-11), "integral") else { continue };
        let phase = C64::new(0.0, PI * cc * x.iter().sum::<f64>()).exp();
        let integral = raw.value * supersym_integral_constant(m) * phase;
        let rel_int = (integral - residue).norm() / residue.norm();
        let Some(fin) = c.try_check(finite_n_supersym(512, cc, &x, &y), "finite N") else { continue };
        let scaled = fin * 512f64.powi(-((k - m - 1) as i32));
        let rel_fin = (scaled - residue).norm() / residue.norm();
        c.check(
            rel_int < 1e-6 && rel_fin < 0.02,
            format!("(K,M)=({k},{m}), c={cc}: residue vs integral {rel_int:.1e}, vs N=512 {rel_fin:.2e}"),
        );
    }
}

fn c11(c: &mut Checker) {
    let cases = [
        (6usize, Observable::TraceAbs2, 1.0, 111u64),
        (6, Observable::CharPolyAbs { k: 1 }, 7.0, 112),
        (4, Observable::SecularAbs { m: 2, k: 2 }, 3.0, 113),
    ];
    for (n, f, want, seed) in cases {
        let est = sample_chain(n, 101_000, 1_000, seed).and_then(|ch| estimate_functional(ch, &f, 100));
        if let Some(e) = c.try_check(est, &f.describe()) {
            let z = (e.mean.re - want).abs() / e.stderr;
            c.check(
                z < 4.0 && e.samples == 100_000,
                format!("N={n} E{} = {:.4} ± {:.4} vs {want} ({z:.2} SE, acceptance {:.2})", f.describe(), e.mean.re, e.stderr, e.acceptance),
            );
        }
    }
}

fn c12(c: &mut Checker) {
    match link_sc_zt_probe(2, &Budget::default()) {
        Ok(p) => {
            c.note(format!(
                "LinkScZt (Eq:LinkScZt) at k=2, ρ=1/2: SC = {:.6} [{}], ZT·(2k−2)!/((k−1)!)² = {:.6}·{} = {:.6} [{}]; ratio {:.3}",
                p.lhs,
                p.sc.method.name(),
                p.zt.value.re,
                p.factor,
                p.rhs,
                p.zt.method.name(),
                p.lhs / p.rhs
            ));
        }
        Err(e) => c.note(format!("LinkScZt probe could not be evaluated: {e}")),
    }
    for (k, r) in [(1usize, 1usize), (1, 2), (2, 1), (2, 2)] {
        let formula = dehaye_derivative_ratio(1, k, r).map(|v| v.to_string()).unwrap_or_else(|e| e.to_string());
        let theta = dehaye_theta_reading_n1(k, r);
        c.note(format!(
            "Dehaye sign probe (Eq:POD:derivativeExpansion) N=1, k={k}, r={r}: formula {formula}, θ-derivative reading {theta:.6}"
        ));
    }
    // the closed-form kernel against its own phase convention, printed for reference
    let spec = KernelSpec::new(1.0, 1, vec![0.0, 0.5]).unwrap();
    c.note(format!("h_1(0, 1/2) = {:.6} (closed form)", kernel_closed_form(&spec)));
}
