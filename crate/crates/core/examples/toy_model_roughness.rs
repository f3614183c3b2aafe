//! Monte-Carlo roughness of single-layer attention as the number of
//! topics grows.
//!
//!     cargo run --release --example toy_model_roughness

use spectral_attn::toy_model::{estimate_switch_probability, roughness_curve, ToyModelConfig};

fn main() -> spectral_attn::Result<()> {
    let (t, tau, delta, trials) = (64, 0.5, 2.0, 5000);
    println!("{:>3} {:>10} {:>10} {:>10} {:>10}", "K", "roughness", "se", "E[ds^2]", "bound");
    for row in roughness_curve(&[1, 2, 4, 8, 16], t, tau, delta, trials, 42)? {
        println!(
            "{:>3} {:>10.5} {:>10.1e} {:>10.4} {:>10.4}",
            row.k, row.roughness.mean, row.roughness.std_error, row.logit_energy, row.logit_energy_bound
        );
    }

    let cfg = ToyModelConfig::equally_spaced(4, t, delta, tau, trials, 7)?;
    let p = estimate_switch_probability(&cfg)?;
    println!("K=4 switch probability {:.4} +- {:.4} (expected 0.75)", p.mean, p.std_error);
    Ok(())
}
