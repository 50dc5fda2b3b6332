use cue_lab::convergence_harness::{convergence_table, richardson};
use cue_lab::cue_sampler::{estimate_functional, sample_chain, Observable};
use cue_lab::exact_functionals::{
    autocorr_det, dehaye_derivative_ratio, kr3g_moment, ks_moment, mom_moment, ratio_moment, secular_moment,
};
use cue_lab::limit_constants::{autocorr_limit, barnes_mk, evaluate_constant, hankel_ks, Budget};
use cue_lab::partitions::Partition;
use cue_lab::polytope_ehrhart::{
    brute_force_count, ehrhart_subbirkhoff, ehrhart_transport, interpolate_ehrhart, SumMode,
};
use cue_lab::ring::{q, qf, C64, Q};
use cue_lab::LimitFunctionalSpec;
use num_bigint::BigInt;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kr3g_is_palindromic(k in 1usize..=3, n in 1usize..=5, frac in 0.0f64..=1.0) {
        let m = (frac * (k * n) as f64).round() as usize;
        prop_assert_eq!(kr3g_moment(n, m, k).unwrap(), kr3g_moment(n, k * n - m, k).unwrap());
    }

    #[test]
    fn secular_second_moment_is_one(n in 1usize..=10, frac in 0.0f64..=1.0) {
        let m = (frac * n as f64).round() as usize;
        prop_assert_eq!(secular_moment(n, m, 1).unwrap(), BigInt::from(1));
    }

    #[test]
    fn secular_is_symmetric_in_m(n in 1usize..=8, frac in 0.0f64..=1.0, k in 1usize..=3) {
        let m = (frac * n as f64).round() as usize;
        prop_assert_eq!(secular_moment(n, m, k).unwrap(), secular_moment(n, n - m, k).unwrap());
    }

    #[test]
    fn mom_with_one_block_is_ks(n in 1usize..=6, beta in 1usize..=3) {
        prop_assert_eq!(mom_moment(n, 1, beta).unwrap(), ks_moment(n, beta).unwrap());
    }

    #[test]
    fn transport_matches_brute_force(a in 1usize..=3, b in 0usize..=2, c in 1usize..=3, l in 1usize..=2) {
        // λ = (a+b, a) rearranged, μ of the same size
        let lam = Partition::new(vec![a + b, a]);
        let mu = Partition::new(vec![(2 * a + b).div_ceil(2) + c.min(a), (2 * a + b) / 2 - c.min(a)]);
        let rows: Vec<usize> = lam.parts().iter().map(|p| p * l).collect();
        let cols: Vec<usize> = mu.parts().iter().map(|p| p * l).collect();
        prop_assert_eq!(ehrhart_transport(&lam, &mu, l).unwrap(), brute_force_count(&rows, &cols, SumMode::Equal));
    }

    #[test]
    fn autocorr_diagonal_is_n_plus_one(n in 1usize..=12, x in -3.0f64..3.0) {
        let v = autocorr_det(n, &[C64::new(x, 0.0)], &[C64::new(x, 0.0)]).unwrap();
        prop_assert!((v - C64::new(n as f64 + 1.0, 0.0)).norm() < 1e-9 * (n as f64 + 1.0));
    }
}

#[test]
fn hankel_route_is_barnes() {
    for k in 1..=4 {
        assert_eq!(hankel_ks(k).unwrap(), barnes_mk(k));
    }
    assert_eq!(barnes_mk(2), qf(1, 12));
}

#[test]
fn dehaye_small_orders() {
    for n in 1..=4usize {
        for k in 2..=3usize {
            assert_eq!(dehaye_derivative_ratio(n, k, 0).unwrap(), q(1));
            assert_eq!(dehaye_derivative_ratio(n, k, 1).unwrap(), qf(-(n as i64), 2));
            let (nq, kq) = (q(n as i64), q(k as i64));
            let want = qf(1, 2)
                * (&kq * (&kq + q(1)) * &nq * (&nq - q(1)) / (q(2) * &kq * (q(2) * &kq + q(1)))
                    + &kq * (&kq - q(1)) * &nq * (&nq + q(1)) / (q(2) * &kq * (q(2) * &kq - q(1))));
            assert_eq!(dehaye_derivative_ratio(n, k, 2).unwrap(), want);
        }
    }
}

#[test]
fn single_point_ratio_is_a_power() {
    let x = C64::new(0.3, 0.0);
    for n in 1..=6 {
        let v = ratio_moment(n, 1, &[x], &[]).unwrap();
        let want = (C64::i() * 2.0 * std::f64::consts::PI * x / n as f64).exp().powi(n as i32);
        assert!((v - want).norm() < 1e-12, "N={n}: {v} vs {want}");
    }
}

#[test]
fn autocorr_rescaled_limit() {
    let x = [C64::new(-0.7, 0.0), C64::new(0.2, 0.0)];
    let y = [C64::new(-0.3, 0.0), C64::new(0.5, 0.0)];
    let lim = autocorr_limit(&x, &y).unwrap();
    let spec = LimitFunctionalSpec::autocorr(x.to_vec(), y.to_vec()).unwrap();
    let t = convergence_table(&spec, &[200, 400, 800]).unwrap();
    let r = richardson(&t.pairs()).unwrap();
    assert!((r.limit - lim).norm() < 1e-3 * lim.norm(), "{} vs {lim}", r.limit);
}

// VOL_S(2), 16·ZT(1/2, 2) and the leading coefficient of L(t, S_2) are one
// number seen three ways.
#[test]
fn sub_birkhoff_volume_three_ways() {
    let samples: Vec<(i64, BigInt)> = (0..=5).map(|t| (t, ehrhart_subbirkhoff(2, t as usize).unwrap())).collect();
    let lead = interpolate_ehrhart(&samples, 4, "S_2").unwrap().leading();
    assert_eq!(lead, qf(1, 6));
    let b = Budget::default();
    let vol = evaluate_constant(&LimitFunctionalSpec::vol_s(2).unwrap(), &b).unwrap();
    let zt = evaluate_constant(&LimitFunctionalSpec::zt(qf(1, 2), 2).unwrap(), &b).unwrap();
    assert!((vol.value.re - 1.0 / 6.0).abs() < 1e-4 + vol.abs_error, "{:?}", vol);
    assert!((16.0 * zt.value.re - 1.0 / 6.0).abs() < 1e-3, "{:?}", zt);
}

#[test]
fn zt_is_rho_at_k1() {
    for rho in [qf(1, 4), qf(1, 2), qf(3, 4)] {
        let e = evaluate_constant(&LimitFunctionalSpec::zt(rho.clone(), 1).unwrap(), &Budget::default()).unwrap();
        let want: f64 = cue_lab::ring::q_to_f64(&rho);
        assert!((e.value.re - want).abs() < 1e-4, "ZT({rho},1) = {:?}", e.value);
    }
}

#[test]
fn mom_and_kr3g_constants() {
    let b = Budget::default();
    let kr = evaluate_constant(&LimitFunctionalSpec::kr3g(q(1), 2).unwrap(), &b).unwrap();
    assert!((kr.value.re - 1.0 / 6.0).abs() < 1e-4);
    let mom = evaluate_constant(&LimitFunctionalSpec::mom(2, 1).unwrap(), &b).unwrap();
    assert!((mom.value.re - 1.0 / 6.0).abs() < 1e-4);
    // MoM(N|2,1) = I_2(N, N)
    let ks: Vec<Q> = (1..=5).map(|n| Q::from_integer(mom_moment(n, 2, 1).unwrap())).collect();
    let kr: Vec<Q> = (1..=5).map(|n| Q::from_integer(kr3g_moment(n, n, 2).unwrap())).collect();
    assert_eq!(ks, kr);
}

#[test]
fn chain_is_deterministic() {
    let a: Vec<_> = sample_chain(5, 300, 100, 42).unwrap().map(|s| s.angles).collect();
    let b: Vec<_> = sample_chain(5, 300, 100, 42).unwrap().map(|s| s.angles).collect();
    let c: Vec<_> = sample_chain(5, 300, 100, 43).unwrap().map(|s| s.angles).collect();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.len(), 200);
    assert!(a.iter().flatten().all(|t| (0.0..1.0).contains(t)));
}

#[test]
fn one_eigenangle_is_uniform() {
    let mut xs: Vec<f64> = sample_chain(1, 101_000, 1_000, 5).unwrap().map(|s| s.angles[0]).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max);
    assert!(d < 0.01, "Kolmogorov distance {d}");
}

// Two eigenangles: the gap δ = θ₁ − θ₂ mod 1 has density 2 sin²(πδ).
#[test]
fn two_eigenangle_gap_law() {
    let bins = 10;
    let mut counts = vec![0usize; bins];
    let mut total = 0;
    for (i, s) in sample_chain(2, 201_000, 1_000, 9).unwrap().enumerate() {
        if i % 10 != 0 {
            continue; // thin to make the draws nearly independent
        }
        let d = (s.angles[0] - s.angles[1]).rem_euclid(1.0);
        counts[((d * bins as f64) as usize).min(bins - 1)] += 1;
        total += 1;
    }
    let mut chi2 = 0.0;
    for (b, &c) in counts.iter().enumerate() {
        let (a, z) = (b as f64 / bins as f64, (b + 1) as f64 / bins as f64);
        // ∫ 2 sin²(πδ) dδ = δ − sin(2πδ)/(2π)
        let cdf = |t: f64| t - (2.0 * std::f64::consts::PI * t).sin() / (2.0 * std::f64::consts::PI);
        let e = total as f64 * (cdf(z) - cdf(a));
        chi2 += (c as f64 - e).powi(2) / e;
    }
    // 9 degrees of freedom; 99.9% quantile is 27.9
    assert!(chi2 < 27.9, "χ² = {chi2}, counts {counts:?}");
}

#[test]
fn secular_second_moment_by_sampling() {
    let e = estimate_functional(sample_chain(4, 51_000, 1_000, 77).unwrap(), &Observable::SecularAbs { m: 2, k: 1 }, 50)
        .unwrap();
    assert!((e.mean.re - 1.0).abs() < 4.0 * e.stderr, "{e:?}");
}
