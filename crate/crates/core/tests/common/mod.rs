//! Independent reference implementations shared by the integration tests
//! and the acceptance suite. Everything here is deliberately literal.

#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_signal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `(cos, sin)` of `2 pi j / n` for `j in 0..n`.
fn twiddles(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / n as f64;
            (a.cos(), a.sin())
        })
        .collect()
}

/// O(n^2) DFT as (re, im) pairs.
pub fn naive_dft(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len();
    let w = twiddles(n);
    (0..n)
        .map(|k| {
            x.iter().enumerate().fold((0.0, 0.0), |(re, im), (t, &v)| {
                let (c, s) = w[k * t % n];
                (re + v * c, im - v * s)
            })
        })
        .collect()
}

/// O(n^2) inverse DFT, real part only.
pub fn naive_idft_real(x: &[(f64, f64)]) -> Vec<f64> {
    let n = x.len();
    let w = twiddles(n);
    (0..n)
        .map(|t| {
            x.iter()
                .enumerate()
                .map(|(k, &(re, im))| {
                    let (c, s) = w[k * t % n];
                    re * c - im * s
                })
                .sum::<f64>()
                / n as f64
        })
        .collect()
}

pub fn in_high_band(k: usize, n: usize, cutoff: f64) -> bool {
    k != 0 && (k.min(n - k) as f64 / n as f64) >= cutoff
}

/// Zero the bins outside the band, invert, and measure the time-domain norm.
pub fn masked_time_domain_energy(x: &[f64], cutoff: f64, high: bool) -> f64 {
    let n = x.len();
    if n == 0 {
        return 0.0;
    }
    let spec: Vec<(f64, f64)> = naive_dft(x)
        .into_iter()
        .enumerate()
        .map(|(k, c)| if in_high_band(k, n, cutoff) == high { c } else { (0.0, 0.0) })
        .collect();
    norm2(&naive_idft_real(&spec)).sqrt()
}

/// Fraction of (positive, negative) pairs ranked correctly, ties worth one
/// half, by explicit enumeration.
pub fn pairwise_auroc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut twice, mut pairs) = (0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1;
            twice += match scores[i].partial_cmp(&scores[j]).unwrap() {
                std::cmp::Ordering::Greater => 2,
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Less => 0,
            };
        }
    }
    twice as f64 / (2 * pairs) as f64
}

/// Central differences of `f` at `x` with step `h`.
pub fn central_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Literal wrap-around second difference.
pub fn literal_circular_laplacian(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| 2.0 * x[i] - x[(i + n - 1) % n] - x[(i + 1) % n])
        .collect()
}
