use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::fmt_sig10;
use crate::classifier::LinearModel;
use crate::error::{Error, Result};
use crate::features::{Granularity, HeadId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadImportance {
    pub head: HeadId,
    /// Mean absolute standardized-space coefficient over the head's columns.
    pub importance: f64,
    /// The same average over raw-unit coefficients.
    pub raw_importance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerImportance {
    pub layer: usize,
    pub mean: f64,
    /// Population standard deviation over the layer's heads.
    pub std: f64,
}

/// Per-head importances in (layer, head) order for every head that has at
/// least one column in the model's layout.
pub fn head_importance(model: &LinearModel) -> Vec<HeadImportance> {
    let raw = model.raw_weights();
    let mut acc: BTreeMap<HeadId, (f64, f64, usize)> = BTreeMap::new();
    for (j, col) in model.layout.columns.iter().enumerate() {
        let e = acc.entry(col.head_id()).or_default();
        e.0 += model.weights[j].abs();
        e.1 += raw[j].abs();
        e.2 += 1;
    }
    acc.into_iter()
        .map(|(head, (s, r, n))| HeadImportance {
            head,
            importance: s / n as f64,
            raw_importance: r / n as f64,
        })
        .collect()
}

fn require_full(model: &LinearModel, what: &str) -> Result<()> {
    if !model.layout.is_full() {
        return Err(Error::Structural(format!(
            "{what} needs a model trained on the full layout, got {}",
            model.layout.describe()
        )));
    }
    Ok(())
}

pub fn layer_importance(model: &LinearModel) -> Result<Vec<LayerImportance>> {
    require_full(model, "layer importance")?;
    let heads = head_importance(model);
    let h = model.layout.heads;
    Ok(heads
        .chunks(h)
        .enumerate()
        .map(|(i, chunk)| {
            let mean = chunk.iter().map(|x| x.importance).sum::<f64>() / h as f64;
            let var = chunk.iter().map(|x| (x.importance - mean).powi(2)).sum::<f64>() / h as f64;
            LayerImportance {
                layer: i + 1,
                mean,
                std: var.sqrt(),
            }
        })
        .collect())
}

/// The `k` most important heads; ties go to the lower (layer, head).
pub fn top_k_heads(model: &LinearModel, k: usize) -> Result<Vec<HeadId>> {
    require_full(model, "top-k head ranking")?;
    let total = model.layout.layers * model.layout.heads;
    if k == 0 || k > total {
        return Err(Error::Config(format!("top-k k = {k} outside 1..={total}")));
    }
    let mut heads = head_importance(model);
    heads.sort_by(|a, b| b.importance.total_cmp(&a.importance).then(a.head.cmp(&b.head)));
    Ok(heads.into_iter().take(k).map(|h| h.head).collect())
}

fn write_text(path: &Path, text: String) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_layer_importance_csv(path: &Path, rows: &[LayerImportance], granularity: Granularity) -> Result<()> {
    let mut out = String::from("layer,mean_importance,std_importance,granularity\n");
    for r in rows {
        out += &format!("{},{},{},{}\n", r.layer, fmt_sig10(r.mean), fmt_sig10(r.std), granularity);
    }
    write_text(path, out)
}

pub fn write_head_importance_csv(path: &Path, rows: &[HeadImportance]) -> Result<()> {
    let mut out = String::from("layer,head,importance,raw_importance\n");
    for r in rows {
        out += &format!(
            "{},{},{},{}\n",
            r.head.layer,
            r.head.head,
            fmt_sig10(r.importance),
            fmt_sig10(r.raw_importance)
        );
    }
    write_text(path, out)
}
