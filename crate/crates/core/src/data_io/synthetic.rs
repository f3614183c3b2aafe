//! Synthetic attention corpora with a planted high-frequency signal.
//!
//! Every attention row starts from a positive random walk (`exp` of a
//! Gaussian walk) smoothed by a centred moving average. Rows of hallucinated
//! tokens additionally get an alternating-sign perturbation on a random
//! contiguous segment, `+-jag_amplitude` relative to the row's mean base
//! value, before clamping at zero. Rows are then scaled to a total mass of
//! [`ROW_MASS`]. Each layer/head gets an independent realization.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dump::{write_dump, AttentionDump, DumpShape};
use super::manifest::{DumpManifest, ExampleEntry, InMemoryCorpus, MANIFEST_FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::rng::stream;

/// Mass left on the dumped positions; the rest stands in for special tokens.
pub const ROW_MASS: f64 = 0.97;
const WALK_STEP_STD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_examples: usize,
    pub context_len: usize,
    pub gen_len: usize,
    pub layers: usize,
    pub heads: usize,
    pub halluc_rate: f64,
    pub smooth_kernel_width: usize,
    pub jag_amplitude: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_examples: 100,
            context_len: 48,
            gen_len: 32,
            layers: 4,
            heads: 4,
            halluc_rate: 0.1,
            smooth_kernel_width: 5,
            jag_amplitude: 0.2,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("n_examples", self.n_examples),
            ("context_len", self.context_len),
            ("gen_len", self.gen_len),
            ("layers", self.layers),
            ("heads", self.heads),
            ("smooth_kernel_width", self.smooth_kernel_width),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("synthetic {name} must be >= 1")));
        }
        if !(self.halluc_rate > 0.0 && self.halluc_rate < 1.0) {
            return Err(Error::Config(format!("halluc_rate {} outside (0, 1)", self.halluc_rate)));
        }
        if !(self.jag_amplitude >= 0.0 && self.jag_amplitude.is_finite()) {
            return Err(Error::Config(format!("jag_amplitude {} must be >= 0", self.jag_amplitude)));
        }
        Ok(())
    }
}

fn moving_average(x: &[f64], width: usize) -> Vec<f64> {
    if width <= 1 {
        return x.to_vec();
    }
    let n = x.len();
    let left = (width - 1) / 2;
    let right = width - 1 - left;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|j| {
            let lo = j.saturating_sub(left);
            let hi = (j + right + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

fn attention_row<R: Rng>(rng: &mut R, len: usize, spec: &SyntheticSpec, jagged: bool) -> Vec<f32> {
    let mut walk = Vec::with_capacity(len);
    let mut level: f64 = rng.sample::<f64, _>(StandardNormal) * 0.5;
    for _ in 0..len {
        level += WALK_STEP_STD * rng.sample::<f64, _>(StandardNormal);
        walk.push(level.exp());
    }
    let mut row = moving_average(&walk, spec.smooth_kernel_width);

    let seg_len = (len / 3).max(2).min(len);
    let start = rng.random_range(0..=len - seg_len);
    if jagged {
        let mean = row.iter().sum::<f64>() / len as f64;
        let phase = rng.random_range(0..2usize);
        for (k, v) in row[start..start + seg_len].iter_mut().enumerate() {
            let sign = if (k + phase) % 2 == 0 { 1.0 } else { -1.0 };
            *v = (*v + sign * spec.jag_amplitude * mean).max(0.0);
        }
    }

    let total: f64 = row.iter().sum();
    if total <= 0.0 {
        return vec![(ROW_MASS / len as f64) as f32; len];
    }
    let scale = ROW_MASS / total;
    row.iter().map(|v| (v * scale) as f32).collect()
}

fn synthesize_example(spec: &SyntheticSpec, index: usize) -> (ExampleEntry, AttentionDump) {
    let mut rng = stream(spec.seed, index as u64);
    let labels: Vec<u8> = (0..spec.gen_len)
        .map(|_| rng.random_bool(spec.halluc_rate) as u8)
        .collect();
    let shape = DumpShape {
        context_len: spec.context_len,
        gen_len: spec.gen_len,
        layers: spec.layers,
        heads: spec.heads,
    };
    let steps = (1..=spec.gen_len)
        .map(|i| {
            let len = spec.context_len + i - 1;
            let jagged = labels[i - 1] == 1;
            let mut step = Vec::with_capacity(shape.step_len(i));
            for _ in 0..spec.layers * spec.heads {
                step.extend(attention_row(&mut rng, len, spec, jagged));
            }
            step
        })
        .collect();
    let id = format!("ex{index:05}");
    let entry = ExampleEntry {
        attention_file: format!("{id}.bin"),
        id,
        context_len: spec.context_len,
        gen_len: spec.gen_len,
        labels,
    };
    (entry, AttentionDump { shape, steps })
}

/// Generates the corpus in memory along with its manifest.
pub fn synthesize(spec: &SyntheticSpec) -> Result<(DumpManifest, InMemoryCorpus)> {
    spec.validate()?;
    let examples: Vec<_> = (0..spec.n_examples).map(|i| synthesize_example(spec, i)).collect();
    let manifest = DumpManifest {
        format_version: MANIFEST_FORMAT_VERSION,
        model_name: "synthetic".into(),
        num_layers: spec.layers,
        num_heads: spec.heads,
        examples: examples.iter().map(|(e, _)| e.clone()).collect(),
    };
    let corpus = InMemoryCorpus {
        layers: spec.layers,
        heads: spec.heads,
        examples,
    };
    Ok((manifest, corpus))
}

/// Writes `manifest.json` plus one binary dump per example into `out_dir`.
pub fn generate_synthetic(spec: &SyntheticSpec, out_dir: &Path) -> Result<DumpManifest> {
    let (manifest, corpus) = synthesize(spec)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for (entry, dump) in &corpus.examples {
        write_dump(&out_dir.join(&entry.attention_file), dump)?;
    }
    manifest.save(&out_dir.join("manifest.json"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::AttentionRecord;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            n_examples: 3,
            context_len: 10,
            gen_len: 6,
            layers: 2,
            heads: 2,
            ..Default::default()
        }
    }

    #[test]
    fn moving_average_edges() {
        assert_eq!(moving_average(&[1.0, 2.0, 3.0], 1), vec![1.0, 2.0, 3.0]);
        assert_eq!(moving_average(&[3.0, 0.0, 3.0, 0.0], 3), vec![1.5, 2.0, 1.0, 1.5]);
    }

    #[test]
    fn rows_satisfy_record_invariants() {
        let (manifest, corpus) = synthesize(&small()).unwrap();
        manifest.validate().unwrap();
        for (entry, dump) in &corpus.examples {
            dump.check().unwrap();
            for rec in dump.records(&entry.id) {
                let rec: AttentionRecord = rec;
                rec.validate(2, 2, 10).unwrap();
            }
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(SyntheticSpec { halluc_rate: 1.0, ..small() }.validate().is_err());
        assert!(SyntheticSpec { gen_len: 0, ..small() }.validate().is_err());
        assert!(SyntheticSpec { jag_amplitude: -1.0, ..small() }.validate().is_err());
    }
}
