//! Detection metrics and the model-analysis drivers built on them.

mod ablation;
mod analysis;

use serde::{Deserialize, Serialize};

use crate::classifier::{f1_from_counts, predict_proba, select_threshold, train, LinearModel, TrainConfig};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Granularity};
use crate::signal_ops::SpectralConfig;

pub use ablation::{
    band_variants, cutoff_sweep, default_cutoff_grid, run_ablation, write_ablation_csv, AblationRow, AblationSpec,
    Variant,
};
pub use analysis::{
    head_importance, layer_importance, top_k_heads, write_head_importance_csv, write_layer_importance_csv,
    HeadImportance, LayerImportance,
};

/// Area under the ROC curve: the probability that a random positive
/// outscores a random negative, ties counting one half. Computed from
/// average ranks (Mann-Whitney U) in exact integer arithmetic.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Structural(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numeric("AUROC over NaN scores".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count() as u128;
    let n_neg = labels.len() as u128 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Data("AUROC is undefined without both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Twice the rank sum of the positives. A tie group occupying sorted
    // positions i..j shares the average rank (i + 1 + j) / 2.
    let mut rank_sum2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let pos_in_group = order[i..j].iter().filter(|&&k| labels[k]).count() as u128;
        rank_sum2 += pos_in_group * (i as u128 + 1 + j as u128);
        i = j;
    }
    let u2 = rank_sum2 - n_pos * (n_pos + 1);
    Ok(u2 as f64 / (2 * n_pos * n_neg) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        f1_from_counts(self.tp, self.fp, self.fn_)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Confusion counts with the rule "positive iff score >= threshold".
pub fn f1_at_threshold(scores: &[f64], labels: &[bool], threshold: f64) -> Confusion {
    let mut c = Confusion::default();
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub auroc: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub confusion: Confusion,
    pub threshold_used: f64,
    pub granularity: Granularity,
    pub operator_config: SpectralConfig,
}

impl EvalReport {
    pub fn from_scores(
        scores: &[f64],
        labels: &[bool],
        threshold: f64,
        granularity: Granularity,
        operator_config: SpectralConfig,
    ) -> Result<Self> {
        let confusion = f1_at_threshold(scores, labels, threshold);
        Ok(EvalReport {
            f1: confusion.f1(),
            precision: confusion.precision(),
            recall: confusion.recall(),
            auroc: auroc(scores, labels)?,
            n_pos: confusion.tp + confusion.fn_,
            n_neg: confusion.fp + confusion.tn,
            confusion,
            threshold_used: threshold,
            granularity,
            operator_config,
        })
    }

    pub fn summary(&self) -> String {
        format!(
            "{} {}: AUROC {:.4}  F1 {:.4}  P {:.4}  R {:.4}  (threshold {:.4}, {} pos / {} neg)",
            self.granularity,
            self.operator_config.label(),
            self.auroc,
            self.f1,
            self.precision,
            self.recall,
            self.threshold_used,
            self.n_pos,
            self.n_neg
        )
    }
}

/// Scores `features` with the model at its stored threshold.
pub fn evaluate_model(model: &LinearModel, features: &FeatureMatrix) -> Result<EvalReport> {
    let scores = predict_proba(model, features)?;
    EvalReport::from_scores(
        &scores,
        &features.labels(),
        model.threshold,
        features.granularity(),
        features.config,
    )
}

/// Train on `train`, pick the threshold on `val`, report on `test`.
pub fn fit_and_evaluate(
    train_set: &FeatureMatrix,
    val: &FeatureMatrix,
    test: &FeatureMatrix,
    cfg: &TrainConfig,
) -> Result<(LinearModel, EvalReport)> {
    let mut model = train(train_set, cfg)?;
    model.threshold = select_threshold(&model, val)?.threshold;
    let report = evaluate_model(&model, test)?;
    Ok((model, report))
}

/// `%.10g`-style formatting used by every metrics CSV.
pub fn fmt_sig10(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..10).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.9e}");
        let (mantissa, e) = s.split_once('e').unwrap();
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{e}")
    }
}
