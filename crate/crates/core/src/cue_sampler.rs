//! Metropolis sampling of CUE eigenangles from the Weyl density
//! `∝ ∏_{i<j} |e^{2πiθ_i} - e^{2πiθ_j}|²`, and batch-means estimates of
//! functionals of the characteristic polynomial.

use crate::error::{Error, Result};
use crate::limit_kernels::seeded_rng;
use crate::ring::C64;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const TARGET_ACCEPTANCE: f64 = 0.4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenangleSample {
    /// Eigenangles in `[0, 1)`; eigenvalues are `e^{2πiθ}`.
    pub angles: Vec<f64>,
    pub seed: u64,
    /// Sweeps done so far, burn-in included.
    pub sweep: usize,
    /// Post-burn-in acceptance rate so far.
    pub acceptance: f64,
}

/// One Metropolis chain. Iterating yields one sample per post-burn-in sweep.
pub struct Chain {
    angles: Vec<f64>,
    width: f64,
    rng: ChaCha8Rng,
    seed: u64,
    sweep: usize,
    sweeps: usize,
    accepted: u64,
    proposed: u64,
}

/// `log|sin π(a - b)|`; the pair contributes twice this to the log-density.
fn log_sin(a: f64, b: f64) -> f64 {
    (PI * (a - b)).sin().abs().ln()
}

impl Chain {
    fn new(n: usize, seed: u64, stream: u64) -> Self {
        let mut rng = seeded_rng(seed, stream);
        // equispaced start with a little jitter: already a typical configuration
        let angles = (0..n).map(|i| ((i as f64 + 0.25 * rng.random::<f64>()) / n as f64).fract()).collect();
        Chain { angles, width: 0.5 / n as f64, rng, seed, sweep: 0, sweeps: 0, accepted: 0, proposed: 0 }
    }

    /// One pass of single-angle wrapped-Gaussian proposals; returns the
    /// number of accepted moves.
    fn do_sweep(&mut self) -> usize {
        let n = self.angles.len();
        let mut acc = 0;
        for i in 0..n {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            let prop = (self.angles[i] + self.width * z).rem_euclid(1.0);
            let mut delta = 0.0;
            for j in 0..n {
                if j != i {
                    delta += log_sin(prop, self.angles[j]) - log_sin(self.angles[i], self.angles[j]);
                }
            }
            let u: f64 = self.rng.random();
            if u.ln() < 2.0 * delta {
                self.angles[i] = prop;
                acc += 1;
            }
        }
        self.sweep += 1;
        acc
    }

    /// Burn-in with Robbins–Monro tuning of the proposal width toward 40%
    /// acceptance; the width is frozen afterwards.
    fn burn_in(&mut self, sweeps: usize) {
        let n = self.angles.len() as f64;
        for s in 0..sweeps {
            let rate = self.do_sweep() as f64 / n;
            let gain = 1.0 / (1.0 + s as f64).sqrt();
            self.width = (self.width * (gain * (rate - TARGET_ACCEPTANCE)).exp()).clamp(1e-5, 1.0);
        }
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn acceptance(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

impl Iterator for Chain {
    type Item = EigenangleSample;
    fn next(&mut self) -> Option<EigenangleSample> {
        if self.sweep >= self.sweeps {
            return None;
        }
        let a = self.do_sweep();
        self.accepted += a as u64;
        self.proposed += self.angles.len() as u64;
        Some(EigenangleSample { angles: self.angles.clone(), seed: self.seed, sweep: self.sweep, acceptance: self.acceptance() })
    }
}

/// A chain of `sweeps` sweeps, the first `burn_in` of which are discarded
/// (and used to tune the proposal).
pub fn sample_chain(n: usize, sweeps: usize, burn_in: usize, seed: u64) -> Result<Chain> {
    sample_chain_stream(n, sweeps, burn_in, seed, 0)
}

/// Same, on an explicit ChaCha stream of the seed (independent chains).
pub fn sample_chain_stream(n: usize, sweeps: usize, burn_in: usize, seed: u64, stream: u64) -> Result<Chain> {
    if n == 0 || sweeps <= burn_in {
        return Err(Error::Range(format!("need N ≥ 1 and sweeps > burn_in (N={n}, {sweeps} ≤ {burn_in})")));
    }
    let mut c = Chain::new(n, seed, stream);
    c.burn_in(burn_in);
    c.sweeps = sweeps;
    Ok(c)
}

// ---------------------------------------------------------------------------
// Observables

/// A per-sample functional of the eigenvalues `z_j = e^{2πiθ_j}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Observable {
    /// `|tr U|²`.
    TraceAbs2,
    /// `|Z(1)|^{2k} = ∏|1 - z_j|^{2k}`.
    CharPolyAbs { k: usize },
    /// `|sc_m|^{2k}` with `sc_m = e_m(z)`.
    SecularAbs { m: usize, k: usize },
    /// `|Σ_{m≤t} (-λ)^m sc_m|^{2k}`, the truncated characteristic polynomial.
    TruncatedAbs { t: usize, k: usize, lambda: f64 },
    /// `(-1)^{kN} det(U)^{-k} ∏_j det(I - a_jU) / ∏_r det(I - b_rU)` with
    /// `a = e^{2πix/N}`, `b = e^{2πiy/N}`; needs `Im y > 0` (`|b| < 1`).
    Ratio { k: usize, x: Vec<C64>, y: Vec<C64> },
}

/// `e_0, …, e_m` of the points by the one-pass recursion.
pub fn elementary(z: &[C64], m: usize) -> Vec<C64> {
    let mut e = vec![C64::zero(); m + 1];
    e[0] = C64::one();
    for (i, zi) in z.iter().enumerate() {
        for j in (1..=m.min(i + 1)).rev() {
            let prev = e[j - 1];
            e[j] += zi * prev;
        }
    }
    e
}

impl Observable {
    /// Rejects parameters whose values would overflow `f64`.
    pub fn check(&self, n: usize) -> Result<()> {
        let too_big = |log2: f64| log2 > 1000.0;
        match self {
            Observable::CharPolyAbs { k } if too_big((2 * k * n) as f64) => {
                Err(Error::Overflow(format!("|Z(1)|^{} at N = {n} can reach 2^{}", 2 * k, 2 * k * n)))
            }
            Observable::SecularAbs { m, k } | Observable::TruncatedAbs { t: m, k, .. }
                if too_big(2.0 * *k as f64 * (n as f64).min(*m as f64 + 1.0) * (n as f64).log2().max(1.0)) =>
            {
                Err(Error::Overflow(format!("|sc|^{} at N = {n} overflows", 2 * k)))
            }
            Observable::Ratio { y, .. } if y.iter().any(|v| v.im <= 0.0) => {
                Err(Error::Range("ratio observable needs Im y > 0 so that |e^{2πiy/N}| < 1".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, angles: &[f64]) -> C64 {
        let z: Vec<C64> = angles.iter().map(|t| C64::new(0.0, 2.0 * PI * t).exp()).collect();
        let n = z.len();
        match self {
            Observable::TraceAbs2 => C64::new(z.iter().sum::<C64>().norm_sqr(), 0.0),
            Observable::CharPolyAbs { k } => {
                C64::new(z.iter().map(|zj| (C64::one() - zj).norm_sqr()).product::<f64>().powi(*k as i32), 0.0)
            }
            Observable::SecularAbs { m, k } => {
                let v = if *m > n { 0.0 } else { elementary(&z, *m)[*m].norm_sqr() };
                C64::new(v.powi(*k as i32), 0.0)
            }
            Observable::TruncatedAbs { t, k, lambda } => {
                let e = elementary(&z, (*t).min(n));
                let mut s = C64::zero();
                let mut p = 1.0;
                for em in &e {
                    s += em * p;
                    p *= -lambda;
                }
                C64::new(s.norm_sqr().powi(*k as i32), 0.0)
            }
            Observable::Ratio { k, x, y } => {
                let nf = n as f64;
                let pt = |v: &C64| (C64::i() * 2.0 * PI * v / nf).exp();
                let mut acc = if (k * n) % 2 == 0 { C64::one() } else { -C64::one() };
                for zj in &z {
                    acc *= zj.powi(-(*k as i32));
                    for a in x {
                        acc *= C64::one() - pt(a) * zj;
                    }
                    for b in y {
                        acc /= C64::one() - pt(b) * zj;
                    }
                }
                acc
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Observable::TraceAbs2 => "|tr U|^2".into(),
            Observable::CharPolyAbs { k } => format!("|Z(1)|^{}", 2 * k),
            Observable::SecularAbs { m, k } => format!("|sc_{m}|^{}", 2 * k),
            Observable::TruncatedAbs { t, k, lambda } => format!("|Z_(T={t})({lambda})|^{}", 2 * k),
            Observable::Ratio { k, .. } => format!("ratio (k={k})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: C64,
    /// Batch-means standard error.
    pub stderr: f64,
    pub samples: usize,
    pub batches: usize,
    pub acceptance: f64,
    pub seed: u64,
}

fn batch_stats(batch_means: &[C64]) -> (C64, f64) {
    let b = batch_means.len() as f64;
    let mean = batch_means.iter().sum::<C64>() / b;
    if batch_means.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = batch_means.iter().map(|m| (m - mean).norm_sqr()).sum::<f64>() / (b - 1.0);
    (mean, (var / b).sqrt())
}

fn batch_means<I: Iterator<Item = EigenangleSample>>(samples: I, f: &Observable, batches: usize) -> (Vec<C64>, usize, f64, u64) {
    let all: Vec<EigenangleSample> = samples.collect();
    let n = all.len();
    let (acc, seed) = all.last().map(|s| (s.acceptance, s.seed)).unwrap_or((0.0, 0));
    let per = n / batches.max(1);
    let means = (0..batches)
        .filter(|_| per > 0)
        .map(|b| all[b * per..(b + 1) * per].iter().map(|s| f.evaluate(&s.angles)).sum::<C64>() / per as f64)
        .collect();
    (means, per * batches, acc, seed)
}

/// Batch-means estimate of `E f` from one sample stream. Leftover samples
/// beyond a whole number of batches are dropped.
pub fn estimate_functional<I: IntoIterator<Item = EigenangleSample>>(
    samples: I,
    f: &Observable,
    batches: usize,
) -> Result<McEstimate> {
    if batches < 2 {
        return Err(Error::Range("batch means need at least 2 batches".into()));
    }
    let mut it = samples.into_iter().peekable();
    if let Some(s) = it.peek() {
        f.check(s.angles.len())?;
    }
    let (means, used, acceptance, seed) = batch_means(it, f, batches);
    if means.len() < 2 {
        return Err(Error::Range(format!("too few samples for {batches} batches")));
    }
    let (mean, stderr) = batch_stats(&means);
    Ok(McEstimate { mean, stderr, samples: used, batches: means.len(), acceptance, seed })
}

/// `chains` independent chains (streams `0..chains` of `seed`) in parallel;
/// batch means are pooled in chain order.
pub fn estimate_parallel(
    n: usize,
    f: &Observable,
    chains: usize,
    samples_per_chain: usize,
    burn_in: usize,
    batches_per_chain: usize,
    seed: u64,
) -> Result<McEstimate> {
    f.check(n)?;
    if chains == 0 || batches_per_chain == 0 {
        return Err(Error::Range("need at least one chain and one batch per chain".into()));
    }
    let per_chain: Vec<(Vec<C64>, usize, f64)> = (0..chains)
        .into_par_iter()
        .map(|c| {
            let chain = sample_chain_stream(n, burn_in + samples_per_chain, burn_in, seed, c as u64)?;
            let (m, used, acc, _) = batch_means(chain, f, batches_per_chain);
            Ok((m, used, acc))
        })
        .collect::<Result<_>>()?;
    let means: Vec<C64> = per_chain.iter().flat_map(|(m, _, _)| m.iter().copied()).collect();
    if means.len() < 2 {
        return Err(Error::Range("too few batches".into()));
    }
    let (mean, stderr) = batch_stats(&means);
    Ok(McEstimate {
        mean,
        stderr,
        samples: per_chain.iter().map(|p| p.1).sum(),
        batches: means.len(),
        acceptance: per_chain.iter().map(|p| p.2).sum::<f64>() / chains as f64,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elementary_of_roots_of_unity() {
        // z^3 - 1: e_1 = e_2 = 0, e_3 = 1
        let z: Vec<C64> = (0..3).map(|j| C64::new(0.0, 2.0 * PI * j as f64 / 3.0).exp()).collect();
        let e = elementary(&z, 3);
        assert!(e[1].norm() < 1e-14 && e[2].norm() < 1e-14);
        assert!((e[3] - 1.0).norm() < 1e-14);
    }

    #[test]
    fn deterministic() {
        let a: Vec<_> = sample_chain(5, 300, 100, 9).unwrap().collect();
        let b: Vec<_> = sample_chain(5, 300, 100, 9).unwrap().collect();
        assert_eq!(a, b);
        assert_eq!(a.len(), 200);
        assert!(a.iter().all(|s| s.angles.iter().all(|t| (0.0..1.0).contains(t))));
    }

    #[test]
    fn tuned_acceptance() {
        let c: Vec<_> = sample_chain(8, 3000, 1000, 1).unwrap().collect();
        let acc = c.last().unwrap().acceptance;
        assert!((0.3..0.5).contains(&acc), "acceptance {acc}");
    }

    #[test]
    fn overflow_guard() {
        assert!(matches!(Observable::CharPolyAbs { k: 100 }.check(10), Err(Error::Overflow(_))));
        assert!(Observable::CharPolyAbs { k: 2 }.check(10).is_ok());
    }
}
