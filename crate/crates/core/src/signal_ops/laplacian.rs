use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LaplacianBoundary {
    /// Stencil evaluated only where both neighbours exist (`n - 2` outputs).
    Interior,
    /// Indices wrap modulo `n` (`n` outputs).
    Circular,
}

impl fmt::Display for LaplacianBoundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LaplacianBoundary::Interior => "interior",
            LaplacianBoundary::Circular => "circular",
        })
    }
}

impl std::str::FromStr for LaplacianBoundary {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "interior" => Ok(LaplacianBoundary::Interior),
            "circular" => Ok(LaplacianBoundary::Circular),
            _ => Err(crate::Error::Config(format!("unknown laplacian boundary `{s}`"))),
        }
    }
}

/// Second differences `x[j+1] - 2 x[j] + x[j-1]` for `j = 1..n-1`.
pub fn interior_laplacian(x: &[f64]) -> Vec<f64> {
    x.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect()
}

/// Second differences with wrap-around indexing.
pub fn circular_laplacian(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|j| x[(j + 1) % n] - 2.0 * x[j] + x[(j + n - 1) % n])
        .collect()
}

/// l2 norm of the discrete Laplacian response (square root of the
/// Dirichlet-type roughness). Interior signals shorter than 3 give 0.
pub fn laplacian_energy(x: &[f64], boundary: LaplacianBoundary) -> f64 {
    let y = match boundary {
        LaplacianBoundary::Interior => interior_laplacian(x),
        LaplacianBoundary::Circular => circular_laplacian(x),
    };
    y.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_ops::dft;
    use std::f64::consts::PI;

    #[test]
    fn ramp_is_annihilated() {
        assert_eq!(laplacian_energy(&[0.0, 1.0, 2.0, 3.0, 4.0], LaplacianBoundary::Interior), 0.0);
    }

    #[test]
    fn single_bump() {
        assert_eq!(laplacian_energy(&[0.0, 1.0, 0.0], LaplacianBoundary::Interior), 2.0);
    }

    #[test]
    fn short_interior_signals_are_zero() {
        assert_eq!(laplacian_energy(&[], LaplacianBoundary::Interior), 0.0);
        assert_eq!(laplacian_energy(&[1.0, 5.0], LaplacianBoundary::Interior), 0.0);
        assert_eq!(laplacian_energy(&[], LaplacianBoundary::Circular), 0.0);
        assert_eq!(laplacian_energy(&[3.0], LaplacianBoundary::Circular), 0.0);
    }

    #[test]
    fn circular_sinusoid_follows_transfer_function() {
        let n = 32;
        let x: Vec<f64> = (0..n).map(|t| (2.0 * PI * 3.0 * t as f64 / n as f64).cos()).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let gain = 2.0 - 2.0 * (2.0 * PI * 3.0 / n as f64).cos();
        let e = laplacian_energy(&x, LaplacianBoundary::Circular);
        assert!((e - gain * norm).abs() < 1e-9);
    }

    #[test]
    fn circular_response_per_bin() {
        let x: Vec<f64> = (0..20).map(|t| ((t * 37 % 11) as f64).sin()).collect();
        let n = x.len();
        let xs = dft(&x);
        let ys = dft(&circular_laplacian(&x));
        for k in 0..n {
            let gain = 2.0 - 2.0 * (2.0 * PI * k as f64 / n as f64).cos();
            assert!((ys[k].norm() - gain * xs[k].norm()).abs() < 1e-9);
        }
    }
}
