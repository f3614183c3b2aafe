//! Binary attention dumps.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "ATTN"
//! 4       4     format_version (u32)
//! 8       4     N, context length (u32)
//! 12      4     T, generated length (u32)
//! 16      4     L, layers (u32)
//! 20      4     H, heads (u32)
//! 24      ...   for step i = 1..=T: L * H * (N + i - 1) f32 values,
//!               layer-major, then head, then position (context first)
//! ```
//!
//! Total size is `24 + 4 * sum_{i=1..T} L * H * (N + i - 1)` bytes.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::AttentionRecord;

pub const MAGIC: [u8; 4] = *b"ATTN";
pub const DUMP_FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 24;

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("{path}: bad magic {found:?}, expected \"ATTN\"")]
    BadMagic { path: String, found: [u8; 4] },

    #[error("{path}: format version {found}, expected {expected}")]
    VersionMismatch { path: String, found: u32, expected: u32 },

    #[error("{path}: size mismatch, expected {expected} bytes, found {found}")]
    SizeMismatch { path: String, expected: u64, found: u64 },

    #[error("{path}: invalid weight {value} at byte offset {offset}")]
    InvalidValue { path: String, offset: u64, value: f32 },

    #[error("{path}: header declares zero {field}")]
    ZeroDimension { path: String, field: &'static str },

    #[error("{path}: header {field}={found} but manifest says {expected}")]
    ShapeMismatch {
        path: String,
        field: &'static str,
        found: usize,
        expected: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed JSON dump: {message}")]
    Json { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpShape {
    pub context_len: usize,
    pub gen_len: usize,
    pub layers: usize,
    pub heads: usize,
}

impl DumpShape {
    pub fn step_len(&self, step: usize) -> usize {
        self.layers * self.heads * (self.context_len + step - 1)
    }

    pub fn n_floats(&self) -> usize {
        (1..=self.gen_len).map(|i| self.step_len(i)).sum()
    }

    pub fn file_size(&self) -> u64 {
        HEADER_LEN as u64 + 4 * self.n_floats() as u64
    }
}

/// All steps of one example. `steps[i - 1]` holds step `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionDump {
    pub shape: DumpShape,
    pub steps: Vec<Vec<f32>>,
}

impl AttentionDump {
    pub fn check(&self) -> Result<(), String> {
        if self.steps.len() != self.shape.gen_len {
            return Err(format!(
                "dump has {} steps, shape says {}",
                self.steps.len(),
                self.shape.gen_len
            ));
        }
        for (i, s) in self.steps.iter().enumerate() {
            let want = self.shape.step_len(i + 1);
            if s.len() != want {
                return Err(format!("step {} has {} floats, expected {want}", i + 1, s.len()));
            }
        }
        Ok(())
    }

    pub fn records<'a>(&'a self, example_id: &'a str) -> impl Iterator<Item = AttentionRecord> + 'a {
        self.steps.iter().enumerate().map(move |(i, w)| AttentionRecord {
            example_id: example_id.to_string(),
            step_index: i + 1,
            context_len: self.shape.context_len,
            layers: self.shape.layers,
            heads: self.shape.heads,
            weights: w.clone(),
        })
    }
}

fn io_err(path: &Path, source: std::io::Error) -> DumpError {
    DumpError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn encode_dump(dump: &AttentionDump) -> Vec<u8> {
    let s = dump.shape;
    let mut out = Vec::with_capacity(s.file_size() as usize);
    out.extend_from_slice(&MAGIC);
    for v in [DUMP_FORMAT_VERSION, s.context_len as u32, s.gen_len as u32, s.layers as u32, s.heads as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for step in &dump.steps {
        for w in step {
            out.extend_from_slice(&w.to_le_bytes());
        }
    }
    out
}

pub fn write_dump(path: &Path, dump: &AttentionDump) -> Result<(), DumpError> {
    if let Err(message) = dump.check() {
        return Err(DumpError::Json {
            path: path.display().to_string(),
            message,
        });
    }
    let mut f = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(&encode_dump(dump)).map_err(|e| io_err(path, e))
}

pub fn decode_dump(bytes: &[u8], path: &str) -> Result<AttentionDump, DumpError> {
    if bytes.len() < HEADER_LEN {
        return Err(DumpError::SizeMismatch {
            path: path.into(),
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(DumpError::BadMagic {
            path: path.into(),
            found: magic,
        });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    let version = word(0);
    if version != DUMP_FORMAT_VERSION {
        return Err(DumpError::VersionMismatch {
            path: path.into(),
            found: version,
            expected: DUMP_FORMAT_VERSION,
        });
    }
    let shape = DumpShape {
        context_len: word(1) as usize,
        gen_len: word(2) as usize,
        layers: word(3) as usize,
        heads: word(4) as usize,
    };
    for (field, v) in [
        ("N", shape.context_len),
        ("T", shape.gen_len),
        ("L", shape.layers),
        ("H", shape.heads),
    ] {
        if v == 0 {
            return Err(DumpError::ZeroDimension {
                path: path.into(),
                field,
            });
        }
    }
    let expected = shape.file_size();
    if bytes.len() as u64 != expected {
        return Err(DumpError::SizeMismatch {
            path: path.into(),
            expected,
            found: bytes.len() as u64,
        });
    }
    let mut offset = HEADER_LEN;
    let mut steps = Vec::with_capacity(shape.gen_len);
    for i in 1..=shape.gen_len {
        let len = shape.step_len(i);
        let mut step = Vec::with_capacity(len);
        for chunk in bytes[offset..offset + 4 * len].chunks_exact(4) {
            let v = f32::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() || v < 0.0 {
                return Err(DumpError::InvalidValue {
                    path: path.into(),
                    offset: (offset + 4 * step.len()) as u64,
                    value: v,
                });
            }
            step.push(v);
        }
        offset += 4 * len;
        steps.push(step);
    }
    Ok(AttentionDump { shape, steps })
}

pub fn read_dump(path: &Path) -> Result<AttentionDump, DumpError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| io_err(path, e))?;
    decode_dump(&bytes, &path.display().to_string())
}

/// Hand-written fixture format: the same logical content as JSON,
/// `{"context_len", "layers", "heads", "steps": [[[[f32; N+i-1]; H]; L]; T]}`.
#[derive(Debug, Serialize, Deserialize)]
struct JsonDump {
    context_len: usize,
    layers: usize,
    heads: usize,
    steps: Vec<Vec<Vec<Vec<f32>>>>,
}

pub fn read_json_dump(path: &Path) -> Result<AttentionDump, DumpError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let p = path.display().to_string();
    let raw: JsonDump = serde_json::from_str(&text).map_err(|e| DumpError::Json {
        path: p.clone(),
        message: e.to_string(),
    })?;
    let shape = DumpShape {
        context_len: raw.context_len,
        gen_len: raw.steps.len(),
        layers: raw.layers,
        heads: raw.heads,
    };
    let mut steps = Vec::with_capacity(raw.steps.len());
    for (i, step) in raw.steps.into_iter().enumerate() {
        let row_len = shape.context_len + i;
        if step.len() != shape.layers || step.iter().any(|l| l.len() != shape.heads) {
            return Err(DumpError::Json {
                path: p,
                message: format!("step {} is not {} x {}", i + 1, shape.layers, shape.heads),
            });
        }
        let mut flat = Vec::with_capacity(shape.step_len(i + 1));
        for row in step.into_iter().flatten() {
            if row.len() != row_len {
                return Err(DumpError::Json {
                    path: p,
                    message: format!("step {} has a row of {} values, expected {row_len}", i + 1, row.len()),
                });
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(DumpError::InvalidValue {
                    path: p,
                    offset: 0,
                    value: *v,
                });
            }
            flat.extend(row);
        }
        steps.push(flat);
    }
    Ok(AttentionDump { shape, steps })
}

pub fn write_json_dump(path: &Path, dump: &AttentionDump) -> Result<(), DumpError> {
    let s = dump.shape;
    let steps = dump
        .steps
        .iter()
        .enumerate()
        .map(|(i, flat)| {
            let row_len = s.context_len + i;
            flat.chunks(row_len.max(1))
                .take(s.layers * s.heads)
                .collect::<Vec<_>>()
                .chunks(s.heads)
                .map(|heads| heads.iter().map(|r| r.to_vec()).collect())
                .collect()
        })
        .collect();
    let raw = JsonDump {
        context_len: s.context_len,
        layers: s.layers,
        heads: s.heads,
        steps,
    };
    let text = serde_json::to_string(&raw).map_err(|e| DumpError::Json {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> AttentionDump {
        AttentionDump {
            shape: DumpShape {
                context_len: 1,
                gen_len: 1,
                layers: 1,
                heads: 1,
            },
            steps: vec![vec![0.75]],
        }
    }

    #[test]
    fn minimal_dump_size() {
        let bytes = encode_dump(&minimal());
        assert_eq!(bytes.len(), 28);
        assert_eq!(minimal().shape.file_size(), 28);
        assert_eq!(&bytes[..4], b"ATTN");
        assert_eq!(decode_dump(&bytes, "m").unwrap(), minimal());
    }

    #[test]
    fn size_formula() {
        let s = DumpShape {
            context_len: 5,
            gen_len: 3,
            layers: 2,
            heads: 4,
        };
        // 8 * (5 + 6 + 7) floats
        assert_eq!(s.n_floats(), 144);
        assert_eq!(s.file_size(), 24 + 576);
    }

    #[test]
    fn truncated_file_names_expected_size() {
        let mut bytes = encode_dump(&minimal());
        bytes.pop();
        let err = decode_dump(&bytes, "t.bin").unwrap_err();
        assert!(matches!(err, DumpError::SizeMismatch { expected: 28, found: 27, .. }));
        assert!(err.to_string().contains("28"));
    }

    #[test]
    fn distinct_error_kinds() {
        let good = encode_dump(&minimal());

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode_dump(&bad, "f"), Err(DumpError::BadMagic { .. })));

        let mut bad = good.clone();
        bad[4] = 9;
        assert!(matches!(
            decode_dump(&bad, "f"),
            Err(DumpError::VersionMismatch { found: 9, expected: 1, .. })
        ));

        let mut bad = good.clone();
        bad[24..28].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            decode_dump(&bad, "f"),
            Err(DumpError::InvalidValue { offset: 24, .. })
        ));

        let mut bad = good;
        bad[8..12].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(decode_dump(&bad, "f"), Err(DumpError::ZeroDimension { field: "N", .. })));

        assert!(matches!(decode_dump(b"AT", "f"), Err(DumpError::SizeMismatch { .. })));
    }

    #[test]
    fn json_fixture_round_trip() {
        let dump = AttentionDump {
            shape: DumpShape {
                context_len: 2,
                gen_len: 2,
                layers: 1,
                heads: 2,
            },
            steps: vec![vec![0.1, 0.2, 0.3, 0.4], vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.0]],
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.json");
        write_json_dump(&p, &dump).unwrap();
        assert_eq!(read_json_dump(&p).unwrap(), dump);
    }
}
