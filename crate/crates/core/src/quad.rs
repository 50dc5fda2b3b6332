//! One-dimensional quadrature: adaptive Gauss–Kronrod (7/15) for complex
//! integrands, and Gauss–Legendre nodes for tensor-product rules.

use crate::error::{Error, Result};
use crate::ring::C64;
use num_traits::Zero;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    (kron * h, ((kron - gauss) * h).norm())
}

struct Panel {
    err: f64,
    a: f64,
    b: f64,
    val: C64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive GK15 on `[a, b]`, starting from `init` equal panels.
/// Returns the value and the summed Kronrod–Gauss error estimate.
pub fn adaptive<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, init: usize, tol: f64, max_panels: usize) -> Result<(C64, f64)> {
    let mut heap = BinaryHeap::new();
    let w = (b - a) / init as f64;
    for i in 0..init {
        let (lo, hi) = (a + w * i as f64, a + w * (i + 1) as f64);
        let (val, err) = gk15(&f, lo, hi);
        heap.push(Panel { err, a: lo, b: hi, val });
    }
    loop {
        let total_err: f64 = heap.iter().map(|p| p.err).sum();
        if total_err <= tol {
            break;
        }
        if heap.len() >= max_panels {
            let total: C64 = heap.iter().fold(C64::zero(), |s, p| s + p.val);
            return Err(Error::Convergence(format!(
                "adaptive quadrature: error {total_err:.3e} > tol {tol:.1e} after {} panels (value {total})",
                heap.len()
            )));
        }
        let p = heap.pop().expect("nonempty");
        let m = 0.5 * (p.a + p.b);
        for (lo, hi) in [(p.a, m), (m, p.b)] {
            let (val, err) = gk15(&f, lo, hi);
            heap.push(Panel { err, a: lo, b: hi, val });
        }
    }
    // Sum in position order so the result does not depend on heap layout.
    let mut panels = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let val = panels.iter().fold(C64::zero(), |s, p| s + p.val);
    let err = panels.iter().map(|p| p.err).sum();
    Ok((val, err))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss–Legendre rule on `[a, b]`: `panels` equal panels of
/// `order` nodes each.
pub fn composite_rule(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * order);
    let mut ws = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let c = a + h * (p as f64 + 0.5);
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(c + 0.5 * h * x);
            ws.push(0.5 * h * w);
        }
    }
    (xs, ws)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_exact_on_polys() {
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_oscillatory() {
        let (v, _) = adaptive(|x| C64::new(0.0, 10.0 * x).exp(), 0.0, 1.0, 4, 1e-13, 1000).unwrap();
        let exact = (C64::new(0.0, 10.0).exp() - 1.0) / C64::new(0.0, 10.0);
        assert!((v - exact).norm() < 1e-12);
    }
}
