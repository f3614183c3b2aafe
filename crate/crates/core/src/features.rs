//! Per-step attention records and the high-frequency energy feature vectors
//! built from them.
//!
//! Column layout of a full feature vector with `L` layers and `H` heads
//! (layers and heads 1-based):
//!
//! ```text
//! index(l, h, ctx) = (l - 1) * H + (h - 1)
//! index(l, h, gen) = L * H + (l - 1) * H + (h - 1)
//! ```
//!
//! This layout is versioned ([`LAYOUT_VERSION`]) and serialized alongside
//! every feature file and model so coefficients map back to heads.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal_ops::SpectralConfig;

pub const LAYOUT_VERSION: u32 = 1;

/// Row sums above `1 + ROW_MASS_TOL` are rejected.
pub const ROW_MASS_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttentionType {
    Context,
    Generated,
}

impl fmt::Display for AttentionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttentionType::Context => "ctx",
            AttentionType::Generated => "gen",
        })
    }
}

/// A `(layer, head)` pair, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HeadId {
    pub layer: usize,
    pub head: usize,
}

impl HeadId {
    pub fn new(layer: usize, head: usize) -> Self {
        HeadId { layer, head }
    }
}

impl fmt::Display for HeadId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}H{}", self.layer, self.head)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Column {
    pub layer: usize,
    pub head: usize,
    pub kind: AttentionType,
}

impl Column {
    pub fn head_id(&self) -> HeadId {
        HeadId::new(self.layer, self.head)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub layers: usize,
    pub heads: usize,
    pub columns: Vec<Column>,
}

impl FeatureLayout {
    pub fn full(layers: usize, heads: usize) -> Self {
        let mut columns = Vec::with_capacity(2 * layers * heads);
        for kind in [AttentionType::Context, AttentionType::Generated] {
            for layer in 1..=layers {
                for head in 1..=heads {
                    columns.push(Column { layer, head, kind });
                }
            }
        }
        FeatureLayout { layers, heads, columns }
    }

    pub fn is_full(&self) -> bool {
        *self == FeatureLayout::full(self.layers, self.heads)
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn full_index(&self, head: HeadId, kind: AttentionType) -> usize {
        let block = match kind {
            AttentionType::Context => 0,
            AttentionType::Generated => self.layers * self.heads,
        };
        block + (head.layer - 1) * self.heads + (head.head - 1)
    }

    pub fn contains_head(&self, head: HeadId) -> bool {
        head.layer >= 1 && head.layer <= self.layers && head.head >= 1 && head.head <= self.heads
    }

    /// Short description used in error messages.
    pub fn describe(&self) -> String {
        format!("L={} H={} columns={}", self.layers, self.heads, self.columns.len())
    }
}

/// One generation step's attention over every layer and head.
///
/// `weights` is laid out `[layer][head][position]` with
/// `context_len + step_index - 1` positions per row: the context positions
/// first, then the previously generated positions.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionRecord {
    pub example_id: String,
    pub step_index: usize,
    pub context_len: usize,
    pub layers: usize,
    pub heads: usize,
    pub weights: Vec<f32>,
}

impl AttentionRecord {
    pub fn row_len(&self) -> usize {
        self.context_len + self.step_index - 1
    }

    pub fn gen_prefix_len(&self) -> usize {
        self.step_index - 1
    }

    /// Row for 1-based `(layer, head)`.
    pub fn row(&self, layer: usize, head: usize) -> &[f32] {
        let len = self.row_len();
        let start = ((layer - 1) * self.heads + (head - 1)) * len;
        &self.weights[start..start + len]
    }

    /// Checks the shape against declared dimensions and the weight
    /// invariants (finite, non-negative, row mass at most `1 + 1e-3`).
    pub fn validate(&self, layers: usize, heads: usize, context_len: usize) -> Result<()> {
        let who = || format!("record {}#{}", self.example_id, self.step_index);
        if self.step_index == 0 {
            return Err(Error::Structural(format!("{}: step index must be >= 1", who())));
        }
        if self.layers != layers || self.heads != heads || self.context_len != context_len {
            return Err(Error::Structural(format!(
                "{}: shape L={} H={} N={} does not match declared L={layers} H={heads} N={context_len}",
                who(),
                self.layers,
                self.heads,
                self.context_len
            )));
        }
        let expected = layers * heads * self.row_len();
        if self.weights.len() != expected {
            return Err(Error::Structural(format!(
                "{}: expected {expected} weights, found {}",
                who(),
                self.weights.len()
            )));
        }
        for layer in 1..=layers {
            for head in 1..=heads {
                let row = self.row(layer, head);
                if let Some(p) = row.iter().position(|w| !w.is_finite() || *w < 0.0) {
                    return Err(Error::Data(format!(
                        "{}: invalid weight {} at layer {layer} head {head} position {}",
                        who(),
                        row[p],
                        p + 1
                    )));
                }
                let mass: f64 = row.iter().map(|&w| w as f64).sum();
                if mass > 1.0 + ROW_MASS_TOL {
                    return Err(Error::Data(format!(
                        "{}: attention mass {mass} exceeds 1 at layer {layer} head {head}",
                        who()
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub example_id: String,
    pub step_index: usize,
    pub label: bool,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub layout: FeatureLayout,
    pub config: SpectralConfig,
    /// Span window the rows were aggregated over; 1 for token level.
    pub window: usize,
    pub rows: Vec<FeatureVector>,
}

impl FeatureMatrix {
    pub fn new(layout: FeatureLayout, config: SpectralConfig, window: usize) -> Self {
        FeatureMatrix {
            layout,
            config,
            window,
            rows: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.layout.len()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn granularity(&self) -> Granularity {
        if self.window <= 1 {
            Granularity::Token
        } else {
            Granularity::Span
        }
    }

    pub fn check(&self) -> Result<()> {
        let width = self.n_cols();
        for row in &self.rows {
            if row.values.len() != width {
                return Err(Error::Structural(format!(
                    "row {}#{} has {} values, layout has {width}",
                    row.example_id,
                    row.step_index,
                    row.values.len()
                )));
            }
        }
        Ok(())
    }

    fn with_columns(&self, keep: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            layout: FeatureLayout {
                layers: self.layout.layers,
                heads: self.layout.heads,
                columns: keep.iter().map(|&c| self.layout.columns[c]).collect(),
            },
            config: self.config,
            window: self.window,
            rows: self
                .rows
                .iter()
                .map(|r| FeatureVector {
                    values: keep.iter().map(|&c| r.values[c]).collect(),
                    ..r.clone()
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    Token,
    Span,
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Token => "token",
            Granularity::Span => "span",
        })
    }
}

/// Builds the full `2 * L * H` feature vector for one record. The record
/// must already satisfy [`AttentionRecord::validate`].
pub fn extract_token_features(
    record: &AttentionRecord,
    config: &SpectralConfig,
    label: bool,
) -> FeatureVector {
    let (layers, heads) = (record.layers, record.heads);
    let block = layers * heads;
    let mut values = vec![0.0; 2 * block];
    let mut signal = Vec::with_capacity(record.row_len());
    for layer in 1..=layers {
        for head in 1..=heads {
            let row = record.row(layer, head);
            let (ctx, gen) = row.split_at(record.context_len);
            let idx = (layer - 1) * heads + (head - 1);

            signal.clear();
            signal.extend(ctx.iter().map(|&w| w as f64));
            values[idx] = config.energy(&signal);

            signal.clear();
            signal.extend(gen.iter().map(|&w| w as f64));
            values[block + idx] = config.energy(&signal);
        }
    }
    FeatureVector {
        example_id: record.example_id.clone(),
        step_index: record.step_index,
        label,
        values,
    }
}

/// Mean-pools consecutive, non-overlapping windows of steps within each
/// example. A window is labeled positive when any of its tokens is. The
/// trailing window may be shorter than `window`; windows never cross
/// example boundaries.
pub fn aggregate_spans(matrix: &FeatureMatrix, window: usize) -> Result<FeatureMatrix> {
    if window == 0 {
        return Err(Error::Config("span window must be >= 1".into()));
    }
    if matrix.window != 1 {
        return Err(Error::Structural(format!(
            "span aggregation expects token-level rows, found window {}",
            matrix.window
        )));
    }
    matrix.check()?;

    let mut order: Vec<usize> = (0..matrix.rows.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&matrix.rows[a], &matrix.rows[b]);
        ra.example_id
            .cmp(&rb.example_id)
            .then(ra.step_index.cmp(&rb.step_index))
    });

    let width = matrix.n_cols();
    let mut out = FeatureMatrix::new(matrix.layout.clone(), matrix.config, window);
    let mut start = 0;
    while start < order.len() {
        let id = &matrix.rows[order[start]].example_id;
        let mut end = start + 1;
        while end < order.len() && matrix.rows[order[end]].example_id == *id {
            let (prev, cur) = (&matrix.rows[order[end - 1]], &matrix.rows[order[end]]);
            if cur.step_index != prev.step_index + 1 {
                return Err(Error::Structural(format!(
                    "example {id}: non-contiguous steps {} -> {}",
                    prev.step_index, cur.step_index
                )));
            }
            end += 1;
        }
        for chunk in order[start..end].chunks(window) {
            let mut mean = vec![0.0; width];
            let mut label = false;
            for &i in chunk {
                let row = &matrix.rows[i];
                for (m, v) in mean.iter_mut().zip(&row.values) {
                    *m += v;
                }
                label |= row.label;
            }
            let k = chunk.len() as f64;
            mean.iter_mut().for_each(|m| *m /= k);
            let first = &matrix.rows[chunk[0]];
            out.rows.push(FeatureVector {
                example_id: first.example_id.clone(),
                step_index: first.step_index,
                label,
                values: mean,
            });
        }
        start = end;
    }
    Ok(out)
}

/// Keeps the ctx and gen columns of the selected heads, in their original
/// column order.
pub fn select_head_subset(matrix: &FeatureMatrix, heads: &[HeadId]) -> Result<FeatureMatrix> {
    let mut seen = HashSet::new();
    for h in heads {
        if !matrix.layout.contains_head(*h) {
            return Err(Error::Config(format!(
                "head {h} outside dims L={} H={}",
                matrix.layout.layers, matrix.layout.heads
            )));
        }
        if !seen.insert(*h) {
            return Err(Error::Config(format!("head {h} selected twice")));
        }
    }
    let keep: Vec<usize> = matrix
        .layout
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| seen.contains(&c.head_id()))
        .map(|(i, _)| i)
        .collect();
    let present: HashSet<HeadId> = keep.iter().map(|&i| matrix.layout.columns[i].head_id()).collect();
    if let Some(missing) = heads.iter().find(|h| !present.contains(h)) {
        return Err(Error::Structural(format!("head {missing} has no columns in this matrix")));
    }
    Ok(matrix.with_columns(&keep))
}

/// Keeps only the context block or only the generated block.
pub fn drop_attention_type(matrix: &FeatureMatrix, keep: AttentionType) -> Result<FeatureMatrix> {
    let kinds: HashSet<AttentionType> = matrix.layout.columns.iter().map(|c| c.kind).collect();
    if kinds.len() != 2 {
        return Err(Error::Structural(format!(
            "matrix must carry both ctx and gen columns ({})",
            matrix.layout.describe()
        )));
    }
    let cols: Vec<usize> = matrix
        .layout
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.kind == keep)
        .map(|(i, _)| i)
        .collect();
    Ok(matrix.with_columns(&cols))
}
