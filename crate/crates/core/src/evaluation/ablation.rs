use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_and_evaluate, fmt_sig10, top_k_heads, EvalReport};
use crate::classifier::{train, TrainConfig};
use crate::data_io::FeatureSource;
use crate::error::{Error, Result, ResultExt};
use crate::features::{drop_attention_type, select_head_subset, AttentionType, FeatureMatrix};
use crate::signal_ops::{Operator, SpectralConfig};

/// One row of an ablation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Variant {
    /// Replace the spectral operator configuration.
    Operator { config: SpectralConfig },
    /// Keep only the ctx or only the gen block of the base features.
    KeepType { keep: AttentionType },
    /// Retrain on the `k` heads ranked highest by a full base model.
    TopK { k: usize },
}

impl Variant {
    pub fn name(&self) -> String {
        match self {
            Variant::Operator { config } => config.label(),
            Variant::KeepType { keep } => format!("{keep}-only"),
            Variant::TopK { k } => format!("top-{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AblationSpec {
    /// Configuration used by the `KeepType` and `TopK` variants.
    pub base: SpectralConfig,
    pub window: usize,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub spec: Variant,
    pub n_features: usize,
    pub report: EvalReport,
}

/// Fourier low, high and full band at the base cutoff.
pub fn band_variants(base: &SpectralConfig) -> Vec<Variant> {
    [Operator::FourierLow, Operator::FourierHigh, Operator::FourierFull]
        .into_iter()
        .map(|operator| Variant::Operator {
            config: SpectralConfig { operator, ..*base },
        })
        .collect()
}

/// 0.05, 0.10, ..., 0.50.
pub fn default_cutoff_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 * 0.05).map(|c| (c * 100.0).round() / 100.0).collect()
}

/// Fourier high-band variants over `cutoffs`.
pub fn cutoff_sweep(base: &SpectralConfig, cutoffs: &[f64]) -> Vec<Variant> {
    cutoffs
        .iter()
        .map(|&c| Variant::Operator {
            config: SpectralConfig {
                operator: Operator::FourierHigh,
                fourier_cutoff: c,
                ..*base
            },
        })
        .collect()
}

type Splits = [FeatureMatrix; 3];

fn extract_splits<S: FeatureSource>(sources: [&S; 3], config: &SpectralConfig, window: usize) -> Result<Splits> {
    let [a, b, c] = sources;
    Ok([
        a.extract(config, window).context(|| "train split".into())?,
        b.extract(config, window).context(|| "validation split".into())?,
        c.extract(config, window).context(|| "test split".into())?,
    ])
}

fn map_splits(splits: &Splits, f: impl Fn(&FeatureMatrix) -> Result<FeatureMatrix>) -> Result<Splits> {
    Ok([f(&splits[0])?, f(&splits[1])?, f(&splits[2])?])
}

/// Evaluates every variant on the same train/validation/test split: train,
/// pick the threshold on validation, report on test. Features are extracted
/// once per distinct operator configuration; variants then run in parallel.
pub fn run_ablation<S: FeatureSource>(
    train_set: &S,
    val: &S,
    test: &S,
    spec: &AblationSpec,
    variants: &[Variant],
) -> Result<Vec<AblationRow>> {
    if variants.is_empty() {
        return Err(Error::Config("ablation needs at least one variant".into()));
    }
    let sources = [train_set, val, test];
    let needs_base = variants.iter().any(|v| !matches!(v, Variant::Operator { .. }));

    let mut configs: Vec<SpectralConfig> = Vec::new();
    if needs_base {
        configs.push(spec.base);
    }
    for v in variants {
        if let Variant::Operator { config } = v {
            if !configs.contains(config) {
                configs.push(*config);
            }
        }
    }
    let features: Vec<(SpectralConfig, Splits)> = configs
        .iter()
        .map(|c| Ok((*c, extract_splits(sources, c, spec.window).context(|| c.label())?)))
        .collect::<Result<_>>()?;
    let lookup = |c: &SpectralConfig| &features.iter().find(|(k, _)| k == c).unwrap().1;

    let ranking_model = if variants.iter().any(|v| matches!(v, Variant::TopK { .. })) {
        Some(train(&lookup(&spec.base)[0], &spec.train).context(|| "top-k ranking model".into())?)
    } else {
        None
    };

    variants
        .par_iter()
        .map(|v| {
            let name = v.name();
            let run = || -> Result<AblationRow> {
                let splits = match v {
                    Variant::Operator { config } => lookup(config).clone(),
                    Variant::KeepType { keep } => map_splits(lookup(&spec.base), |m| drop_attention_type(m, *keep))?,
                    Variant::TopK { k } => {
                        let heads = top_k_heads(ranking_model.as_ref().unwrap(), *k)?;
                        map_splits(lookup(&spec.base), |m| select_head_subset(m, &heads))?
                    }
                };
                let (_, report) = fit_and_evaluate(&splits[0], &splits[1], &splits[2], &spec.train)?;
                Ok(AblationRow {
                    variant: name.clone(),
                    spec: v.clone(),
                    n_features: splits[0].n_cols(),
                    report,
                })
            };
            run().context(|| format!("variant `{name}`"))
        })
        .collect()
}

pub fn write_ablation_csv(path: &Path, rows: &[AblationRow]) -> Result<()> {
    let mut out = String::from("variant,f1,auroc,n_pos,n_neg\n");
    for r in rows {
        out += &format!(
            "{},{},{},{},{}\n",
            r.variant,
            fmt_sig10(r.report.f1),
            fmt_sig10(r.report.auroc),
            r.report.n_pos,
            r.report.n_neg
        );
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::{split_dataset, synthesize, SyntheticSpec};
    use crate::evaluation::fit_and_evaluate;

    fn corpus() -> Vec<crate::data_io::InMemoryCorpus> {
        let spec = SyntheticSpec {
            n_examples: 40,
            context_len: 24,
            gen_len: 16,
            layers: 2,
            heads: 2,
            halluc_rate: 0.2,
            jag_amplitude: 1.0,
            seed: 3,
            ..Default::default()
        };
        let (manifest, corpus) = synthesize(&spec).unwrap();
        let (a, b, c) = split_dataset(&manifest, [0.6, 0.2, 0.2], 1).unwrap();
        corpus.split_like(&[&a, &b, &c])
    }

    fn spec() -> AblationSpec {
        AblationSpec {
            base: SpectralConfig::default(),
            window: 1,
            train: TrainConfig::default(),
        }
    }

    #[test]
    fn grid_and_band_cardinality() {
        let grid = default_cutoff_grid();
        assert_eq!(grid.len(), 10);
        assert_eq!(grid[0], 0.05);
        assert_eq!(grid[9], 0.5);
        assert_eq!(cutoff_sweep(&SpectralConfig::default(), &grid).len(), 10);
        let names: Vec<String> = band_variants(&SpectralConfig::default()).iter().map(Variant::name).collect();
        assert_eq!(names.len(), 3);
        assert!(names.iter().all(|n| n.starts_with("fourier-")));
    }

    #[test]
    fn baseline_matches_direct_run() {
        let parts = corpus();
        let s = spec();
        let rows = run_ablation(
            &parts[0],
            &parts[1],
            &parts[2],
            &s,
            &[Variant::Operator { config: s.base }],
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        let m: Vec<_> = parts.iter().map(|p| p.extract(&s.base, 1).unwrap()).collect();
        let (_, direct) = fit_and_evaluate(&m[0], &m[1], &m[2], &s.train).unwrap();
        assert_eq!(rows[0].report, direct);
    }

    #[test]
    fn subset_variants_shrink_features() {
        let parts = corpus();
        let rows = run_ablation(
            &parts[0],
            &parts[1],
            &parts[2],
            &spec(),
            &[
                Variant::KeepType { keep: AttentionType::Context },
                Variant::KeepType { keep: AttentionType::Generated },
                Variant::TopK { k: 4 },
                Variant::TopK { k: 1 },
            ],
        )
        .unwrap();
        let widths: Vec<usize> = rows.iter().map(|r| r.n_features).collect();
        assert_eq!(widths, vec![4, 4, 8, 2]);
        assert_eq!(rows[0].variant, "ctx-only");
        assert_eq!(rows[3].variant, "top-1");
    }

    #[test]
    fn failing_variant_is_named() {
        let parts = corpus();
        let err = run_ablation(&parts[0], &parts[1], &parts[2], &spec(), &[Variant::TopK { k: 99 }]).unwrap_err();
        assert!(err.to_string().contains("top-99"), "{err}");
        assert_eq!(err.class(), crate::ErrorClass::Config);
    }
}
