//! Generates a planted corpus on disk, extracts Fourier high-band features,
//! trains a detector and reports token-level test metrics.
//!
//!     cargo run --release --example synthetic_pipeline

use spectral_attn::classifier::TrainConfig;
use spectral_attn::data_io::{generate_synthetic, split_dataset, DumpSet, FeatureSource, SyntheticSpec};
use spectral_attn::evaluation::fit_and_evaluate;
use spectral_attn::signal_ops::SpectralConfig;

fn main() -> spectral_attn::Result<()> {
    let dir = std::env::temp_dir().join("spectral-attn-pipeline");
    let spec = SyntheticSpec {
        n_examples: 200,
        seed: 11,
        ..Default::default()
    };
    let manifest = generate_synthetic(&spec, &dir)?;
    println!("wrote {} examples to {}", manifest.examples.len(), dir.display());

    let set = DumpSet::open(&dir.join("manifest.json"))?;
    let (tr, va, te) = split_dataset(&set.manifest, [0.8, 0.1, 0.1], 0)?;
    let cfg = SpectralConfig::default();
    let train = set.subset(tr).extract(&cfg, 1)?;
    let val = set.subset(va).extract(&cfg, 1)?;
    let test = set.subset(te).extract(&cfg, 1)?;
    println!("{} train rows, {} columns", train.n_rows(), train.n_cols());

    let (model, report) = fit_and_evaluate(&train, &val, &test, &TrainConfig::default())?;
    println!("converged in {} iterations, threshold {:.4}", model.iterations_used, model.threshold);
    println!("{}", report.summary());
    Ok(())
}
