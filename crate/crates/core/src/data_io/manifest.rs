use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dump::{read_dump, read_json_dump, AttentionDump, DumpError, DumpShape};
use crate::error::{Error, Result, ResultExt};
use crate::features::{aggregate_spans, extract_token_features, FeatureLayout, FeatureMatrix, FeatureVector};
use crate::signal_ops::SpectralConfig;

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleEntry {
    pub id: String,
    pub context_len: usize,
    pub gen_len: usize,
    /// One 0/1 flag per generated token; 1 marks a hallucinated token.
    pub labels: Vec<u8>,
    /// Path relative to the manifest's directory. Files ending in `.json`
    /// are read as JSON fixtures, everything else as binary dumps.
    pub attention_file: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpManifest {
    pub format_version: u32,
    pub model_name: String,
    pub num_layers: usize,
    pub num_heads: usize,
    pub examples: Vec<ExampleEntry>,
}

impl DumpManifest {
    pub fn validate(&self) -> Result<()> {
        if self.format_version != MANIFEST_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "manifest format version {} unsupported (expected {MANIFEST_FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.num_layers == 0 || self.num_heads == 0 {
            return Err(Error::Structural("manifest declares zero layers or heads".into()));
        }
        let mut ids = HashSet::new();
        for e in &self.examples {
            if !ids.insert(e.id.as_str()) {
                return Err(Error::Structural(format!("duplicate example id `{}`", e.id)));
            }
            if e.context_len == 0 || e.gen_len == 0 {
                return Err(Error::Structural(format!("example `{}` has an empty context or generation", e.id)));
            }
            if e.labels.len() != e.gen_len {
                return Err(Error::Structural(format!(
                    "example `{}`: {} labels for gen_len {}",
                    e.id,
                    e.labels.len(),
                    e.gen_len
                )));
            }
            if let Some(l) = e.labels.iter().find(|&&l| l > 1) {
                return Err(Error::Data(format!("example `{}`: label {l} is not 0/1", e.id)));
            }
        }
        Ok(())
    }

    pub fn shape_of(&self, entry: &ExampleEntry) -> DumpShape {
        DumpShape {
            context_len: entry.context_len,
            gen_len: entry.gen_len,
            layers: self.num_layers,
            heads: self.num_heads,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: DumpManifest = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })?;
        m.validate().context(|| path.display().to_string())?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn with_examples(&self, examples: Vec<ExampleEntry>) -> Self {
        DumpManifest {
            examples,
            ..self.clone()
        }
    }
}

/// Anything that can produce a feature matrix for a spectral configuration.
pub trait FeatureSource: Sync {
    fn extract(&self, config: &SpectralConfig, window: usize) -> Result<FeatureMatrix>;
}

fn example_features(
    entry: &ExampleEntry,
    dump: &AttentionDump,
    layers: usize,
    heads: usize,
    config: &SpectralConfig,
) -> Result<Vec<FeatureVector>> {
    dump.records(&entry.id)
        .map(|rec| {
            rec.validate(layers, heads, entry.context_len)?;
            let label = entry.labels[rec.step_index - 1] == 1;
            Ok(extract_token_features(&rec, config, label))
        })
        .collect()
}

fn assemble(
    layers: usize,
    heads: usize,
    config: &SpectralConfig,
    window: usize,
    per_example: Vec<Vec<FeatureVector>>,
) -> Result<FeatureMatrix> {
    let mut m = FeatureMatrix::new(FeatureLayout::full(layers, heads), *config, 1);
    m.rows = per_example.into_iter().flatten().collect();
    if window > 1 {
        m = aggregate_spans(&m, window)?;
    }
    Ok(m)
}

fn check_window(config: &SpectralConfig, window: usize) -> Result<()> {
    config.validate()?;
    if window == 0 {
        return Err(Error::Config("span window must be >= 1".into()));
    }
    Ok(())
}

/// A manifest together with the directory its attention files live in.
#[derive(Debug, Clone)]
pub struct DumpSet {
    pub root: PathBuf,
    pub manifest: DumpManifest,
}

impl DumpSet {
    pub fn open(manifest_path: &Path) -> Result<Self> {
        let manifest = DumpManifest::load(manifest_path)?;
        let root = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(DumpSet { root, manifest })
    }

    pub fn subset(&self, manifest: DumpManifest) -> Self {
        DumpSet {
            root: self.root.clone(),
            manifest,
        }
    }

    pub fn load_example(&self, entry: &ExampleEntry) -> Result<AttentionDump> {
        let path = self.root.join(&entry.attention_file);
        let dump = if entry.attention_file.ends_with(".json") {
            read_json_dump(&path)?
        } else {
            read_dump(&path)?
        };
        let want = self.manifest.shape_of(entry);
        let p = path.display().to_string();
        for (field, found, expected) in [
            ("N", dump.shape.context_len, want.context_len),
            ("T", dump.shape.gen_len, want.gen_len),
            ("L", dump.shape.layers, want.layers),
            ("H", dump.shape.heads, want.heads),
        ] {
            if found != expected {
                return Err(DumpError::ShapeMismatch {
                    path: p,
                    field,
                    found,
                    expected,
                }
                .into());
            }
        }
        Ok(dump)
    }
}

impl FeatureSource for DumpSet {
    fn extract(&self, config: &SpectralConfig, window: usize) -> Result<FeatureMatrix> {
        check_window(config, window)?;
        let (l, h) = (self.manifest.num_layers, self.manifest.num_heads);
        let per_example = self
            .manifest
            .examples
            .par_iter()
            .map(|e| {
                let dump = self.load_example(e)?;
                example_features(e, &dump, l, h, config).context(|| format!("example `{}`", e.id))
            })
            .collect::<Result<Vec<_>>>()?;
        assemble(l, h, config, window, per_example)
    }
}

/// Examples held in memory, e.g. straight from the synthetic generator.
#[derive(Debug, Clone)]
pub struct InMemoryCorpus {
    pub layers: usize,
    pub heads: usize,
    pub examples: Vec<(ExampleEntry, AttentionDump)>,
}

impl InMemoryCorpus {
    pub fn select(&self, ids: &HashSet<&str>) -> Self {
        InMemoryCorpus {
            layers: self.layers,
            heads: self.heads,
            examples: self
                .examples
                .iter()
                .filter(|(e, _)| ids.contains(e.id.as_str()))
                .cloned()
                .collect(),
        }
    }

    /// Splits by example at the given manifests (see `split_dataset`).
    pub fn split_like(&self, parts: &[&DumpManifest]) -> Vec<InMemoryCorpus> {
        parts
            .iter()
            .map(|m| self.select(&m.examples.iter().map(|e| e.id.as_str()).collect()))
            .collect()
    }
}

impl FeatureSource for InMemoryCorpus {
    fn extract(&self, config: &SpectralConfig, window: usize) -> Result<FeatureMatrix> {
        check_window(config, window)?;
        let per_example = self
            .examples
            .par_iter()
            .map(|(e, dump)| {
                example_features(e, dump, self.layers, self.heads, config)
                    .context(|| format!("example `{}`", e.id))
            })
            .collect::<Result<Vec<_>>>()?;
        assemble(self.layers, self.heads, config, window, per_example)
    }
}
