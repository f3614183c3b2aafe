//! Feature CSV files: `example_id,step_index,label,f_0,..,f_{d-1}`, with a
//! JSON sidecar (`<file>.meta.json`) carrying the column layout, operator
//! configuration, span window and reproducibility block.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureLayout, FeatureMatrix, FeatureVector, LAYOUT_VERSION};
use crate::repro::Reproducibility;
use crate::signal_ops::SpectralConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureFileMeta {
    pub layout_version: u32,
    pub layout: FeatureLayout,
    pub operator_config: SpectralConfig,
    pub window: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reproducibility: Option<Reproducibility>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn csv_err(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.into(),
        source,
    }
}

pub fn write_features(path: &Path, matrix: &FeatureMatrix, repro: Option<Reproducibility>) -> Result<()> {
    matrix.check()?;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut header = vec!["example_id".to_string(), "step_index".into(), "label".into()];
    header.extend((0..matrix.n_cols()).map(|j| format!("f_{j}")));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for row in &matrix.rows {
        let mut rec = vec![
            row.example_id.clone(),
            row.step_index.to_string(),
            (row.label as u8).to_string(),
        ];
        // Debug formatting is the shortest representation that round-trips
        rec.extend(row.values.iter().map(|v| format!("{v:?}")));
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let meta = FeatureFileMeta {
        layout_version: LAYOUT_VERSION,
        layout: matrix.layout.clone(),
        operator_config: matrix.config,
        window: matrix.window,
        reproducibility: repro,
    };
    let side = sidecar_path(path);
    let text = serde_json::to_string_pretty(&meta).map_err(|source| Error::Json {
        path: side.clone(),
        source,
    })?;
    std::fs::write(&side, text + "\n").map_err(|e| Error::io(&side, e))
}

pub fn read_feature_meta(path: &Path) -> Result<FeatureFileMeta> {
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: FeatureFileMeta = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: side.clone(),
        source,
    })?;
    if meta.layout_version != LAYOUT_VERSION {
        return Err(Error::Data(format!(
            "{}: layout version {} unsupported",
            side.display(),
            meta.layout_version
        )));
    }
    Ok(meta)
}

pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let meta = read_feature_meta(path)?;
    let d = meta.layout.len();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.len() != d + 3 {
        return Err(Error::Structural(format!(
            "{}: {} columns in header, layout ({}) needs {}",
            path.display(),
            header.len(),
            meta.layout.describe(),
            d + 3
        )));
    }
    let mut m = FeatureMatrix::new(meta.layout, meta.operator_config, meta.window);
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let bad = |what: &str| Error::Data(format!("{}: row {}: bad {what}", path.display(), line + 1));
        if rec.len() != d + 3 {
            return Err(bad("column count"));
        }
        let step_index = rec[1].parse().map_err(|_| bad("step_index"))?;
        let label = match &rec[2] {
            "0" => false,
            "1" => true,
            _ => return Err(bad("label")),
        };
        let values = (3..d + 3)
            .map(|j| rec[j].parse::<f64>().map_err(|_| bad(&format!("f_{}", j - 3))))
            .collect::<Result<Vec<_>>>()?;
        m.rows.push(FeatureVector {
            example_id: rec[0].to_string(),
            step_index,
            label,
            values,
        });
    }
    Ok(m)
}
