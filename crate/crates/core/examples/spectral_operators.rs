//! Compares every operator on a smooth and a jagged attention row.
//!
//!     cargo run --example spectral_operators

use spectral_attn::signal_ops::{Operator, SpectralConfig};

fn main() {
    let n = 48;
    let smooth: Vec<f64> = (0..n)
        .map(|j| (-((j as f64 - 20.0) / 8.0).powi(2)).exp())
        .collect();
    let total: f64 = smooth.iter().sum();
    let smooth: Vec<f64> = smooth.iter().map(|v| v / total).collect();
    let mean = 1.0 / n as f64;
    let jagged: Vec<f64> = smooth
        .iter()
        .enumerate()
        .map(|(j, v)| if (16..32).contains(&j) { (v + if j % 2 == 0 { mean } else { -mean }).max(0.0) } else { *v })
        .collect();

    println!("{:<22} {:>12} {:>12}", "operator", "smooth", "jagged");
    for op in Operator::ALL {
        let cfg = SpectralConfig::new(op);
        println!("{:<22} {:>12.6} {:>12.6}", cfg.label(), cfg.energy(&smooth), cfg.energy(&jagged));
    }
}
