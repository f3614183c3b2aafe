//! Layer and head importance from a trained model, and how AUROC changes
//! when only the top-k heads or one attention type are kept.
//!
//!     cargo run --release --example head_analysis

use spectral_attn::classifier::{train, TrainConfig};
use spectral_attn::data_io::{split_dataset, synthesize, FeatureSource, SyntheticSpec};
use spectral_attn::evaluation::{layer_importance, run_ablation, top_k_heads, AblationSpec, Variant};
use spectral_attn::features::AttentionType;
use spectral_attn::signal_ops::SpectralConfig;

fn main() -> spectral_attn::Result<()> {
    let (manifest, corpus) = synthesize(&SyntheticSpec {
        n_examples: 300,
        seed: 8,
        ..Default::default()
    })?;
    let (tr, va, te) = split_dataset(&manifest, [0.8, 0.1, 0.1], 3)?;
    let parts = corpus.split_like(&[&tr, &va, &te]);
    let base = SpectralConfig::default();

    let model = train(&parts[0].extract(&base, 1)?, &TrainConfig::default())?;
    for l in layer_importance(&model)? {
        println!("layer {}: mean |w| {:.4} (std {:.4})", l.layer, l.mean, l.std);
    }
    println!("top 4 heads: {:?}", top_k_heads(&model, 4)?);

    let spec = AblationSpec {
        base,
        window: 1,
        train: TrainConfig::default(),
    };
    let variants = [
        Variant::Operator { config: base },
        Variant::TopK { k: 8 },
        Variant::TopK { k: 2 },
        Variant::KeepType { keep: AttentionType::Context },
        Variant::KeepType { keep: AttentionType::Generated },
    ];
    for row in run_ablation(&parts[0], &parts[1], &parts[2], &spec, &variants)? {
        println!("{:<20} {:>3} features  AUROC {:.4}", row.variant, row.n_features, row.report.auroc);
    }
    Ok(())
}
