//! Single- and multi-level Daubechies-4 (8-tap) analysis.
//!
//! Index conventions, with `h` the low-pass and `g` the high-pass filter:
//!
//! * `Zero` / `Symmetric`: full convolution followed by keeping the odd
//!   output samples. Equivalently `a[i] = sum_j h[j] * e(2i + j - 6)` for
//!   `i in 0..(n + 7) / 2`, where `e(p)` is the signal extended beyond
//!   `0..n` by the padding rule. Symmetric extension is half-sample
//!   (`x1 x0 | x0 x1 ... x_{n-1} | x_{n-1} x_{n-2}`).
//! * `Periodic`: periodization. Odd lengths are first extended by repeating
//!   the last sample; then `a[i] = sum_j h[j] * x[(2i + j) mod n]` for
//!   `i in 0..n / 2`. This variant is an orthonormal transform, so
//!   `||a||^2 + ||d||^2 = ||x||^2` for even `n`.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

const TAPS: usize = 8;

// Low-pass reconstruction-order coefficients, refined to full double
// precision so the orthonormality identities hold well below 1e-12.
const DB4_LOW: [f64; TAPS] = [
    0.2303778133088965,
    0.7148465705529157,
    0.6308807679298589,
    -0.02798376941685985,
    -0.18703481171909309,
    0.03084138183556076,
    0.032883011666885203,
    -0.010597401785069033,
];

const IDENTITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Padding {
    Zero,
    Symmetric,
    Periodic,
}

impl fmt::Display for Padding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Padding::Zero => "zero",
            Padding::Symmetric => "symmetric",
            Padding::Periodic => "periodic",
        })
    }
}

impl std::str::FromStr for Padding {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "zero" => Ok(Padding::Zero),
            "symmetric" => Ok(Padding::Symmetric),
            "periodic" => Ok(Padding::Periodic),
            _ => Err(crate::Error::Config(format!("unknown padding `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Db4Filters {
    pub low: [f64; TAPS],
    pub high: [f64; TAPS],
}

impl Db4Filters {
    fn new() -> Self {
        let low = DB4_LOW;
        let mut high = [0.0; TAPS];
        for (k, g) in high.iter_mut().enumerate() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            *g = sign * low[TAPS - 1 - k];
        }
        Db4Filters { low, high }
    }

    /// Largest absolute residual over the defining identities: unit DC gain
    /// `sum h = sqrt 2`, double-shift orthonormality of `h`, orthogonality of
    /// `h` and `g`, and the four vanishing moments of `g`.
    pub fn identity_residual(&self) -> f64 {
        let (h, g) = (&self.low, &self.high);
        let mut worst = (h.iter().sum::<f64>() - std::f64::consts::SQRT_2).abs();
        for m in 0..TAPS / 2 {
            let delta = if m == 0 { 1.0 } else { 0.0 };
            let hh: f64 = (0..TAPS - 2 * m).map(|k| h[k] * h[k + 2 * m]).sum();
            let gg: f64 = (0..TAPS - 2 * m).map(|k| g[k] * g[k + 2 * m]).sum();
            worst = worst.max((hh - delta).abs()).max((gg - delta).abs());
        }
        for shift in -(TAPS as isize - 2)..=(TAPS as isize - 2) {
            if shift % 2 != 0 {
                continue;
            }
            let hg: f64 = (0..TAPS as isize)
                .filter(|&k| (0..TAPS as isize).contains(&(k + shift)))
                .map(|k| h[k as usize] * g[(k + shift) as usize])
                .sum();
            worst = worst.max(hg.abs());
        }
        for p in 0..4 {
            let moment: f64 = g.iter().enumerate().map(|(k, v)| (k as f64).powi(p) * v).sum();
            worst = worst.max(moment.abs());
        }
        worst
    }
}

/// The db4 filter pair. Its identities are checked on first use.
pub fn db4_filters() -> &'static Db4Filters {
    static FILTERS: OnceLock<Db4Filters> = OnceLock::new();
    FILTERS.get_or_init(|| {
        let f = Db4Filters::new();
        let r = f.identity_residual();
        assert!(r < IDENTITY_TOL, "db4 filter identities violated: residual {r:e}");
        f
    })
}

fn symmetric_index(p: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let q = p.rem_euclid(period) as usize;
    if q < n {
        q
    } else {
        2 * n - 1 - q
    }
}

/// One analysis level: returns `(approximation, detail)`.
pub fn dwt_level1(x: &[f64], padding: Padding) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let f = db4_filters();
    match padding {
        Padding::Periodic => {
            let mut xp = x.to_vec();
            if n % 2 == 1 {
                xp.push(x[n - 1]);
            }
            let np = xp.len();
            let mut approx = Vec::with_capacity(np / 2);
            let mut detail = Vec::with_capacity(np / 2);
            for i in 0..np / 2 {
                let (mut a, mut d) = (0.0, 0.0);
                for j in 0..TAPS {
                    let v = xp[(2 * i + j) % np];
                    a += f.low[j] * v;
                    d += f.high[j] * v;
                }
                approx.push(a);
                detail.push(d);
            }
            (approx, detail)
        }
        Padding::Zero | Padding::Symmetric => {
            let ext = |p: isize| -> f64 {
                if (0..n as isize).contains(&p) {
                    x[p as usize]
                } else if padding == Padding::Zero {
                    0.0
                } else {
                    x[symmetric_index(p, n)]
                }
            };
            let out_len = (n + TAPS - 1) / 2;
            let mut approx = Vec::with_capacity(out_len);
            let mut detail = Vec::with_capacity(out_len);
            for i in 0..out_len {
                let (mut a, mut d) = (0.0, 0.0);
                for j in 0..TAPS {
                    let v = ext(2 * i as isize + j as isize - (TAPS as isize - 2));
                    a += f.low[j] * v;
                    d += f.high[j] * v;
                }
                approx.push(a);
                detail.push(d);
            }
            (approx, detail)
        }
    }
}

/// Detail coefficients of levels `1..=levels`, each level recursing on the
/// previous approximation. Stops early once the approximation is empty.
pub fn wavelet_detail_levels(x: &[f64], padding: Padding, levels: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(levels);
    let mut current = x.to_vec();
    for _ in 0..levels {
        if current.is_empty() {
            break;
        }
        let (approx, detail) = dwt_level1(&current, padding);
        out.push(detail);
        current = approx;
    }
    out
}

/// Square root of the pooled squared detail coefficients over all levels.
pub fn wavelet_high_energy(x: &[f64], padding: Padding, levels: usize) -> f64 {
    wavelet_detail_levels(x, padding, levels)
        .iter()
        .flatten()
        .map(|d| d * d)
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm2(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum()
    }

    fn pseudo(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                (s % 10_000) as f64 / 10_000.0
            })
            .collect()
    }

    #[test]
    fn filter_identities_hold() {
        let f = db4_filters();
        assert!(f.identity_residual() < 1e-12);
        assert!(f.high.iter().sum::<f64>().abs() < 1e-12);
        assert!((norm2(&f.low) - 1.0).abs() < 1e-12);
        assert!((norm2(&f.high) - 1.0).abs() < 1e-12);
        let shift2: f64 = (0..6).map(|k| f.low[k] * f.low[k + 2]).sum();
        assert!(shift2.abs() < 1e-12);
    }

    #[test]
    fn constant_has_no_periodic_detail() {
        for n in [8, 9, 16, 33] {
            let (_, d) = dwt_level1(&vec![0.37; n], Padding::Periodic);
            assert!(d.iter().all(|v| v.abs() < 1e-12));
            assert!(wavelet_high_energy(&vec![0.37; n], Padding::Periodic, 1) < 1e-12);
        }
    }

    #[test]
    fn periodic_conserves_energy_on_even_lengths() {
        let x = pseudo(16, 99);
        let (a, d) = dwt_level1(&x, Padding::Periodic);
        assert_eq!(a.len(), 8);
        assert!((norm2(&a) + norm2(&d) - norm2(&x)).abs() < 1e-9);
    }

    #[test]
    fn zero_padding_matches_literal_pad_convolve_downsample() {
        let x = pseudo(8, 5);
        let f = db4_filters();
        // pad 7 zeros on both sides, full convolution with the analysis
        // (time-reversed) filters, keep odd indices
        let mut padded = vec![0.0; 7];
        padded.extend_from_slice(&x);
        padded.extend(std::iter::repeat_n(0.0, 7));
        let dec_lo: Vec<f64> = f.low.iter().rev().copied().collect();
        let dec_hi: Vec<f64> = f.high.iter().rev().copied().collect();
        let conv = |filt: &[f64]| -> Vec<f64> {
            // y[m] = sum_k filt[k] * x[m - k], m = 0..n+7-1
            (0..x.len() + 7)
                .map(|m| (0..8).map(|k| filt[k] * padded[m + 7 - k]).sum())
                .collect()
        };
        let lo: Vec<f64> = conv(&dec_lo).into_iter().skip(1).step_by(2).collect();
        let hi: Vec<f64> = conv(&dec_hi).into_iter().skip(1).step_by(2).collect();
        let (a, d) = dwt_level1(&x, Padding::Zero);
        assert_eq!(a.len(), lo.len());
        assert_eq!(a.len(), 7);
        for (u, v) in a.iter().zip(&lo).chain(d.iter().zip(&hi)) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn output_lengths() {
        for n in 1..20 {
            let (a, d) = dwt_level1(&pseudo(n, n as u64 + 1), Padding::Symmetric);
            assert_eq!(a.len(), (n + 7) / 2);
            assert_eq!(d.len(), (n + 7) / 2);
            let (a, _) = dwt_level1(&pseudo(n, 3), Padding::Periodic);
            assert_eq!(a.len(), n.div_ceil(2));
        }
        assert_eq!(dwt_level1(&[], Padding::Zero), (vec![], vec![]));
        assert_eq!(wavelet_high_energy(&[], Padding::Zero, 2), 0.0);
    }

    #[test]
    fn symmetric_extension_reflects_half_sample() {
        let n = 3;
        let got: Vec<usize> = (-4..7).map(|p| symmetric_index(p, n)).collect();
        assert_eq!(got, vec![2, 2, 1, 0, 0, 1, 2, 2, 1, 0, 0]);
    }

    #[test]
    fn impulse_detail_energy_is_even_tap_norm() {
        let mut x = vec![0.0; 16];
        x[0] = 1.0;
        let f = db4_filters();
        let even: f64 = f.high.iter().step_by(2).map(|g| g * g).sum();
        let (a, d) = dwt_level1(&x, Padding::Periodic);
        assert!((norm2(&d) - even).abs() < 1e-12);
        assert!((norm2(&a) + norm2(&d) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deeper_levels_never_lose_energy() {
        let x = pseudo(32, 17);
        for pad in [Padding::Zero, Padding::Symmetric, Padding::Periodic] {
            let e1 = wavelet_high_energy(&x, pad, 1);
            let e2 = wavelet_high_energy(&x, pad, 2);
            assert!(e2 >= e1);
        }
    }
}
