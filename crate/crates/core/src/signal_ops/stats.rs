//! Allocation statistics used as non-spectral baselines.

/// Shannon entropy (nats) of `x` after normalizing it to unit mass.
/// An all-zero or empty signal has entropy 0.
pub fn attention_entropy(x: &[f64]) -> f64 {
    let total: f64 = x.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    -x.iter()
        .map(|v| v / total)
        .filter(|&a| a > 0.0)
        .map(|a| a * a.ln())
        .sum::<f64>()
}

/// Population variance.
pub fn attention_variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_examples() {
        assert!((attention_entropy(&[0.125; 8]) - 8f64.ln()).abs() < 1e-12);
        assert_eq!(attention_entropy(&[0.0, 1.0, 0.0]), 0.0);
        assert_eq!(attention_entropy(&[0.0, 0.0]), 0.0);
        assert_eq!(attention_entropy(&[]), 0.0);

        let x = [0.5, 0.25, 0.25];
        let mut oracle = 0.0;
        for a in x {
            oracle -= a * f64::ln(a);
        }
        let got = attention_entropy(&x);
        assert!((got - oracle).abs() < 1e-12);
        assert!((got - 1.5 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn entropy_ignores_scale() {
        let x = [0.2, 0.1, 0.05];
        let y: Vec<f64> = x.iter().map(|v| v * 7.0).collect();
        assert!((attention_entropy(&x) - attention_entropy(&y)).abs() < 1e-12);
    }

    #[test]
    fn variance_examples() {
        assert_eq!(attention_variance(&[0.3; 5]), 0.0);
        assert_eq!(attention_variance(&[0.0, 1.0]), 0.25);
        assert_eq!(attention_variance(&[]), 0.0);

        let x: Vec<f64> = (0..50).map(|i| ((i * 13) % 7) as f64 / 9.0).collect();
        let mut mean = 0.0;
        for v in &x {
            mean += v;
        }
        mean /= 50.0;
        let mut ss = 0.0;
        for v in &x {
            ss += (v - mean).powi(2);
        }
        assert!((attention_variance(&x) - ss / 50.0).abs() < 1e-12);
    }
}
