//! Low, high and full band ablation plus a cutoff sweep.
//!
//!     cargo run --release --example band_ablation

use spectral_attn::classifier::TrainConfig;
use spectral_attn::data_io::{split_dataset, synthesize, SyntheticSpec};
use spectral_attn::evaluation::{band_variants, cutoff_sweep, default_cutoff_grid, run_ablation, AblationSpec};
use spectral_attn::signal_ops::SpectralConfig;

fn main() -> spectral_attn::Result<()> {
    let (manifest, corpus) = synthesize(&SyntheticSpec {
        n_examples: 300,
        seed: 21,
        ..Default::default()
    })?;
    let (tr, va, te) = split_dataset(&manifest, [0.8, 0.1, 0.1], 2)?;
    let parts = corpus.split_like(&[&tr, &va, &te]);
    let base = SpectralConfig::default();
    let spec = AblationSpec {
        base,
        window: 1,
        train: TrainConfig::default(),
    };

    let mut variants = band_variants(&base);
    variants.extend(cutoff_sweep(&base, &default_cutoff_grid()));
    for row in run_ablation(&parts[0], &parts[1], &parts[2], &spec, &variants)? {
        println!("{:<24} AUROC {:.4}  F1 {:.4}", row.variant, row.report.auroc, row.report.f1);
    }
    Ok(())
}
