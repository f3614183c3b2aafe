//! Token-level versus span-level detection on the same split.
//!
//!     cargo run --release --example span_detection

use spectral_attn::classifier::TrainConfig;
use spectral_attn::data_io::{split_dataset, synthesize, FeatureSource, SyntheticSpec};
use spectral_attn::evaluation::fit_and_evaluate;
use spectral_attn::signal_ops::{Padding, SpectralConfig};

fn main() -> spectral_attn::Result<()> {
    let spec = SyntheticSpec {
        n_examples: 300,
        seed: 5,
        ..Default::default()
    };
    let (manifest, corpus) = synthesize(&spec)?;
    let (tr, va, te) = split_dataset(&manifest, [0.8, 0.1, 0.1], 1)?;
    let parts = corpus.split_like(&[&tr, &va, &te]);

    for (window, cfg) in [
        (1, SpectralConfig::default()),
        (8, SpectralConfig::default().with_padding(Padding::Symmetric)),
    ] {
        let m: Vec<_> = parts.iter().map(|p| p.extract(&cfg, window)).collect::<Result<_, _>>()?;
        let (_, report) = fit_and_evaluate(&m[0], &m[1], &m[2], &TrainConfig::default())?;
        println!("window {window}: {} rows, {}", m[2].n_rows(), report.summary());
    }
    Ok(())
}
