//! Shared fixtures for the criterion benches.

use cue_lab::ring::C64;

/// Distinct real points in `[-1/2, 1/2]`, evenly spread.
pub fn spread_points(n: usize) -> Vec<f64> {
    (0..n).map(|i| -0.5 + (i as f64 + 0.5) / n as f64).collect()
}

pub fn complex_points(n: usize, shift: f64) -> Vec<C64> {
    spread_points(n).into_iter().map(|x| C64::new(x + shift, 0.0)).collect()
}
