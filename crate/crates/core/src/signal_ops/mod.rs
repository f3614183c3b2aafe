//! Spectral operators mapping a one-dimensional attention signal to a
//! scalar high-frequency energy.
//!
//! Every function here is pure. Signals that are too short for an operator
//! (empty signals everywhere, length 1 for the Fourier high band, fewer than
//! three samples for the interior Laplacian) produce an energy of exactly 0.

mod fourier;
mod laplacian;
mod stats;
mod wavelet;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fourier::{dft, fourier_band_energy, high_band_contains, inverse_dft, Band};
pub use laplacian::{circular_laplacian, interior_laplacian, laplacian_energy, LaplacianBoundary};
pub use stats::{attention_entropy, attention_variance};
pub use wavelet::{db4_filters, dwt_level1, wavelet_detail_levels, wavelet_high_energy, Db4Filters, Padding};

pub use num_complex::Complex64;
use rustfft::num_complex;

/// Default normalized cutoff for the Fourier high band.
pub const DEFAULT_CUTOFF: f64 = 0.45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operator {
    FourierHigh,
    FourierLow,
    FourierFull,
    WaveletHigh,
    Laplacian,
    Entropy,
    Variance,
}

impl Operator {
    pub const ALL: [Operator; 7] = [
        Operator::FourierHigh,
        Operator::FourierLow,
        Operator::FourierFull,
        Operator::WaveletHigh,
        Operator::Laplacian,
        Operator::Entropy,
        Operator::Variance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Operator::FourierHigh => "fourier-high",
            Operator::FourierLow => "fourier-low",
            Operator::FourierFull => "fourier-full",
            Operator::WaveletHigh => "wavelet-high",
            Operator::Laplacian => "laplacian",
            Operator::Entropy => "entropy",
            Operator::Variance => "variance",
        }
    }

    /// Fourier, wavelet and Laplacian energies are norms and therefore
    /// absolutely homogeneous in the input.
    pub fn is_homogeneous(self) -> bool {
        !matches!(self, Operator::Entropy | Operator::Variance)
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Operator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Operator::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown operator `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub operator: Operator,
    pub fourier_cutoff: f64,
    pub wavelet_padding: Padding,
    pub wavelet_levels: usize,
    pub laplacian_boundary: LaplacianBoundary,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            operator: Operator::FourierHigh,
            fourier_cutoff: DEFAULT_CUTOFF,
            wavelet_padding: Padding::Zero,
            wavelet_levels: 1,
            laplacian_boundary: LaplacianBoundary::Interior,
        }
    }
}

impl SpectralConfig {
    pub fn new(operator: Operator) -> Self {
        SpectralConfig {
            operator,
            ..Default::default()
        }
    }

    pub fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.fourier_cutoff = cutoff;
        self
    }

    pub fn with_padding(mut self, padding: Padding) -> Self {
        self.wavelet_padding = padding;
        self
    }

    pub fn with_levels(mut self, levels: usize) -> Self {
        self.wavelet_levels = levels;
        self
    }

    pub fn with_boundary(mut self, boundary: LaplacianBoundary) -> Self {
        self.laplacian_boundary = boundary;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.fourier_cutoff) {
            return Err(Error::Config(format!(
                "fourier cutoff {} outside [0, 0.5]",
                self.fourier_cutoff
            )));
        }
        if self.wavelet_levels == 0 {
            return Err(Error::Config("wavelet levels must be >= 1".into()));
        }
        Ok(())
    }

    /// Short human-readable tag, e.g. `fourier-high@0.45`.
    pub fn label(&self) -> String {
        match self.operator {
            Operator::FourierHigh | Operator::FourierLow => {
                format!("{}@{}", self.operator, self.fourier_cutoff)
            }
            Operator::WaveletHigh => format!(
                "{}/{}/L{}",
                self.operator, self.wavelet_padding, self.wavelet_levels
            ),
            Operator::Laplacian => format!("{}/{}", self.operator, self.laplacian_boundary),
            _ => self.operator.to_string(),
        }
    }

    /// Applies the configured operator to `x`. The configuration must have
    /// been validated; an out-of-range cutoff panics here.
    pub fn energy(&self, x: &[f64]) -> f64 {
        match self.operator {
            Operator::FourierHigh => self.fourier(x, Band::High),
            Operator::FourierLow => self.fourier(x, Band::Low),
            Operator::FourierFull => self.fourier(x, Band::Full),
            Operator::WaveletHigh => wavelet_high_energy(x, self.wavelet_padding, self.wavelet_levels),
            Operator::Laplacian => laplacian_energy(x, self.laplacian_boundary),
            Operator::Entropy => attention_entropy(x),
            Operator::Variance => attention_variance(x),
        }
    }

    fn fourier(&self, x: &[f64], band: Band) -> f64 {
        fourier_band_energy(x, self.fourier_cutoff, band).expect("validated cutoff")
    }
}
