use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Band {
    High,
    Low,
    Full,
}

/// Unnormalized forward DFT, `X[k] = sum_t x[t] exp(-2 pi i k t / n)`.
pub fn dft(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    if !buf.is_empty() {
        PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(&mut buf));
    }
    buf
}

/// Inverse of [`dft`], including the `1/n` factor.
pub fn inverse_dft(spectrum: &[Complex64]) -> Vec<Complex64> {
    let n = spectrum.len();
    let mut buf = spectrum.to_vec();
    if n > 0 {
        PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut buf));
        let scale = 1.0 / n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
    }
    buf
}

/// Whether DFT bin `k` of an `n`-point transform belongs to the high band.
///
/// The normalized frequency of bin `k` is `min(k, n - k) / n`. The comparison
/// against the cutoff is inclusive, so a cutoff of 0.5 still keeps the
/// Nyquist bin of an even-length signal. DC is never part of the high band.
pub fn high_band_contains(k: usize, n: usize, cutoff: f64) -> bool {
    debug_assert!(k < n);
    k != 0 && (k.min(n - k) as f64) / (n as f64) >= cutoff
}

/// Energy `sqrt((1/n) * sum_{k in band} |X[k]|^2)` of one frequency band.
///
/// The low band is the complement of the high band (so it always holds DC)
/// and the full band is every bin, which makes the three bands satisfy
/// `high^2 + low^2 = full^2 = ||x||^2`.
pub fn fourier_band_energy(x: &[f64], cutoff: f64, band: Band) -> Result<f64> {
    if !(0.0..=0.5).contains(&cutoff) {
        return Err(Error::Config(format!("fourier cutoff {cutoff} outside [0, 0.5]")));
    }
    let n = x.len();
    if n == 0 {
        return Ok(0.0);
    }
    let spectrum = dft(x);
    let sum: f64 = spectrum
        .iter()
        .enumerate()
        .filter(|&(k, _)| match band {
            Band::High => high_band_contains(k, n, cutoff),
            Band::Low => !high_band_contains(k, n, cutoff),
            Band::Full => true,
        })
        .map(|(_, c)| c.norm_sqr())
        .sum();
    Ok((sum / n as f64).sqrt())
}
