//! L2-regularized logistic regression on standardized features.
//!
//! Training minimizes
//!
//! ```text
//! J(w, b) = (1/n) * sum_i [ softplus(m_i) - y_i * m_i ] + (lambda / 2) * ||w||^2,
//! m_i = w . z_i + b
//! ```
//!
//! where `z_i` is the z-scored feature row. The bias is not penalized.
//! The optimizer is L-BFGS from a zero start with an Armijo backtracking
//! line search, so the objective never increases from one iteration to the
//! next and two runs on identical input are bitwise identical.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureLayout, FeatureMatrix};
use crate::repro::Reproducibility;
use crate::signal_ops::SpectralConfig;

pub const MODEL_FORMAT: &str = "spectral-attn-linear-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

pub const DEFAULT_MAX_ITER: usize = 1000;
pub const DEFAULT_TOL: f64 = 1e-6;

const LBFGS_MEMORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
/// Columns with a training standard deviation below this are treated as
/// constant and get a unit scale.
const MIN_STD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// `None` selects `1 / n_samples`.
    pub l2_lambda: Option<f64>,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_lambda: None,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub format: String,
    pub format_version: u32,
    pub layout: FeatureLayout,
    pub operator_config: SpectralConfig,
    pub window: usize,
    /// Coefficients in standardized feature space.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    pub threshold: f64,
    pub l2_lambda: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub converged: bool,
    pub iterations_used: usize,
    pub final_objective: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reproducibility: Option<Reproducibility>,
}

impl LinearModel {
    /// A model with all-zero coefficients; handy for tests and analysis.
    pub fn zeros(layout: FeatureLayout) -> Self {
        let d = layout.len();
        LinearModel {
            format: MODEL_FORMAT.into(),
            format_version: MODEL_FORMAT_VERSION,
            layout,
            operator_config: SpectralConfig::default(),
            window: 1,
            weights: vec![0.0; d],
            bias: 0.0,
            feature_means: vec![0.0; d],
            feature_stds: vec![1.0; d],
            threshold: 0.5,
            l2_lambda: 0.0,
            max_iter: 0,
            tol: DEFAULT_TOL,
            converged: true,
            iterations_used: 0,
            final_objective: 0.0,
            reproducibility: None,
        }
    }

    /// Coefficients mapped back to raw feature units (`w_j / std_j`).
    pub fn raw_weights(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.feature_stds)
            .map(|(w, s)| w / s)
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: LinearModel = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })?;
        if model.format != MODEL_FORMAT || model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "{}: unsupported model format {} v{}",
                path.display(),
                model.format,
                model.format_version
            )));
        }
        let d = model.layout.len();
        if model.weights.len() != d || model.feature_means.len() != d || model.feature_stds.len() != d {
            return Err(Error::Structural(format!(
                "{}: coefficient vectors do not match layout ({})",
                path.display(),
                model.layout.describe()
            )));
        }
        Ok(model)
    }
}

/// Column means and standard deviations of a training matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(matrix: &FeatureMatrix) -> Self {
        let d = matrix.n_cols();
        let n = matrix.n_rows().max(1) as f64;
        let mut means = vec![0.0; d];
        for row in &matrix.rows {
            for (m, v) in means.iter_mut().zip(&row.values) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; d];
        for row in &matrix.rows {
            for ((s, v), m) in vars.iter_mut().zip(&row.values).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let stds = vars
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd < MIN_STD {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Standardizer { means, stds }
    }

    /// Row-major standardized copy of the matrix values.
    pub fn transform(&self, matrix: &FeatureMatrix) -> Vec<f64> {
        let mut out = Vec::with_capacity(matrix.n_rows() * matrix.n_cols());
        for row in &matrix.rows {
            out.extend(
                row.values
                    .iter()
                    .zip(&self.means)
                    .zip(&self.stds)
                    .map(|((v, m), s)| (v - m) / s),
            );
        }
        out
    }
}

pub(crate) fn sigmoid(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        let e = m.exp();
        e / (1.0 + e)
    }
}

fn softplus(m: f64) -> f64 {
    m.max(0.0) + (-m.abs()).exp().ln_1p()
}

/// Regularized mean negative log-likelihood over a standardized design.
/// Parameters are packed as `[w_0, .., w_{d-1}, b]`.
#[derive(Debug, Clone, Copy)]
pub struct LogisticObjective<'a> {
    z: &'a [f64],
    y: &'a [f64],
    d: usize,
    lambda: f64,
}

impl<'a> LogisticObjective<'a> {
    pub fn new(z: &'a [f64], y: &'a [f64], d: usize, lambda: f64) -> Self {
        assert_eq!(z.len(), y.len() * d, "design is not n x d");
        LogisticObjective { z, y, d, lambda }
    }

    pub fn dim(&self) -> usize {
        self.d + 1
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        self.evaluate(theta, None)
    }

    pub fn value_and_gradient(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.dim()];
        let f = self.evaluate(theta, Some(&mut grad));
        (f, grad)
    }

    fn evaluate(&self, theta: &[f64], mut grad: Option<&mut Vec<f64>>) -> f64 {
        let d = self.d;
        let (w, b) = (&theta[..d], theta[d]);
        let n = self.y.len() as f64;
        let mut loss = 0.0;
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        for (row, &y) in self.z.chunks_exact(d.max(1)).zip(self.y) {
            let row = &row[..d];
            let m = b + row.iter().zip(w).map(|(z, w)| z * w).sum::<f64>();
            loss += softplus(m) - y * m;
            if let Some(g) = grad.as_deref_mut() {
                let r = sigmoid(m) - y;
                for (gj, z) in g[..d].iter_mut().zip(row) {
                    *gj += r * z;
                }
                g[d] += r;
            }
        }
        let penalty = 0.5 * self.lambda * w.iter().map(|v| v * v).sum::<f64>();
        if let Some(g) = grad {
            g.iter_mut().for_each(|v| *v /= n);
            for (gj, wj) in g[..d].iter_mut().zip(w) {
                *gj += self.lambda * wj;
            }
        }
        loss / n + penalty
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub theta: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Objective at the start and after every accepted iteration.
    pub trace: Vec<f64>,
}

/// Deterministic L-BFGS with Armijo backtracking.
pub fn minimize_lbfgs(obj: &LogisticObjective<'_>, max_iter: usize, tol: f64) -> OptimResult {
    let dim = obj.dim();
    let mut theta = vec![0.0; dim];
    let (mut f, mut g) = obj.value_and_gradient(&theta);
    let mut trace = vec![f];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let mut converged = max_abs(&g) < tol;

    while !converged && iterations < max_iter {
        let mut dir = two_loop(&g, &history);
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&g, &dir);
        }
        let mut step = if history.is_empty() {
            (1.0 / dot(&g, &g).sqrt()).min(1.0)
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = theta.iter().zip(&dir).map(|(t, p)| t + step * p).collect();
            let (ft, gt) = obj.value_and_gradient(&trial);
            if ft.is_finite() && ft <= f + ARMIJO_C1 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((next, f_next, g_next)) = accepted else {
            if history.is_empty() {
                break;
            }
            history.clear();
            continue;
        };

        let s: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if history.len() == LBFGS_MEMORY {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        theta = next;
        f = f_next;
        g = g_next;
        iterations += 1;
        trace.push(f);
        converged = max_abs(&g) < tol;
    }

    OptimResult {
        theta,
        converged,
        iterations,
        trace,
    }
}

fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn check_training_data(features: &FeatureMatrix) -> Result<()> {
    features.check()?;
    if features.n_cols() == 0 {
        return Err(Error::Structural("training needs at least one feature column".into()));
    }
    for row in &features.rows {
        if let Some(j) = row.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite feature f_{j} in row {}#{}",
                row.example_id, row.step_index
            )));
        }
    }
    let pos = features.rows.iter().filter(|r| r.label).count();
    if pos == 0 || pos == features.n_rows() {
        return Err(Error::Data(format!(
            "training needs both classes, found {pos} positive of {}",
            features.n_rows()
        )));
    }
    Ok(())
}

/// Fits a model and also returns the per-iteration objective trace.
pub fn train_with_trace(features: &FeatureMatrix, cfg: &TrainConfig) -> Result<(LinearModel, Vec<f64>)> {
    check_training_data(features)?;
    let n = features.n_rows();
    let d = features.n_cols();
    let lambda = cfg.l2_lambda.unwrap_or(1.0 / n as f64);
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!("l2 lambda must be finite and >= 0, got {lambda}")));
    }
    let scaler = Standardizer::fit(features);
    let z = scaler.transform(features);
    let y: Vec<f64> = features.rows.iter().map(|r| if r.label { 1.0 } else { 0.0 }).collect();
    let obj = LogisticObjective::new(&z, &y, d, lambda);
    let res = minimize_lbfgs(&obj, cfg.max_iter, cfg.tol);
    if res.theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("training diverged to non-finite coefficients".into()));
    }
    let final_objective = *res.trace.last().expect("trace starts non-empty");
    let model = LinearModel {
        format: MODEL_FORMAT.into(),
        format_version: MODEL_FORMAT_VERSION,
        layout: features.layout.clone(),
        operator_config: features.config,
        window: features.window,
        weights: res.theta[..d].to_vec(),
        bias: res.theta[d],
        feature_means: scaler.means,
        feature_stds: scaler.stds,
        threshold: 0.5,
        l2_lambda: lambda,
        max_iter: cfg.max_iter,
        tol: cfg.tol,
        converged: res.converged,
        iterations_used: res.iterations,
        final_objective,
        reproducibility: None,
    };
    Ok((model, res.trace))
}

pub fn train(features: &FeatureMatrix, cfg: &TrainConfig) -> Result<LinearModel> {
    train_with_trace(features, cfg).map(|(m, _)| m)
}

/// `sigma(w . z + b)` per row, `z` standardized with the training statistics.
pub fn predict_proba(model: &LinearModel, features: &FeatureMatrix) -> Result<Vec<f64>> {
    if model.layout != features.layout {
        return Err(Error::Structural(format!(
            "model layout ({}) does not match feature layout ({})",
            model.layout.describe(),
            features.layout.describe()
        )));
    }
    features.check()?;
    Ok(features
        .rows
        .iter()
        .map(|row| {
            let m = model.bias
                + row
                    .values
                    .iter()
                    .zip(&model.weights)
                    .zip(model.feature_means.iter().zip(&model.feature_stds))
                    .map(|((x, w), (mu, sd))| w * (x - mu) / sd)
                    .sum::<f64>();
            sigmoid(m)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdChoice {
    pub threshold: f64,
    pub f1: f64,
    /// True when validation had a single class and 0.5 was used.
    pub fallback: bool,
}

/// F1-maximizing threshold over midpoints of consecutive distinct scores
/// plus 0.5. Ties go to the candidate nearest 0.5, then to the lower one.
pub fn select_threshold_from_scores(scores: &[f64], labels: &[bool]) -> ThresholdChoice {
    assert_eq!(scores.len(), labels.len());
    let mut pairs: Vec<(f64, bool)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total_pos = pairs.iter().filter(|p| p.1).count();
    // pos_below[i] = positives among the i smallest scores
    let mut pos_below = Vec::with_capacity(pairs.len() + 1);
    pos_below.push(0usize);
    for p in &pairs {
        pos_below.push(pos_below.last().unwrap() + p.1 as usize);
    }
    let f1_at = |c: f64| -> f64 {
        let below = pairs.partition_point(|p| p.0 < c);
        let tp = total_pos - pos_below[below];
        let predicted = pairs.len() - below;
        let fp = predicted - tp;
        let fneg = total_pos - tp;
        f1_from_counts(tp, fp, fneg)
    };

    if total_pos == 0 || total_pos == pairs.len() {
        return ThresholdChoice {
            threshold: 0.5,
            f1: f1_at(0.5),
            fallback: true,
        };
    }

    let mut candidates = vec![0.5];
    for w in pairs.windows(2) {
        if w[1].0 > w[0].0 {
            candidates.push(0.5 * (w[0].0 + w[1].0));
        }
    }
    let mut best = ThresholdChoice {
        threshold: 0.5,
        f1: f1_at(0.5),
        fallback: false,
    };
    for &c in &candidates[1..] {
        let f1 = f1_at(c);
        let better = f1 > best.f1
            || (f1 == best.f1
                && ((c - 0.5).abs() < (best.threshold - 0.5).abs()
                    || ((c - 0.5).abs() == (best.threshold - 0.5).abs() && c < best.threshold)));
        if better {
            best = ThresholdChoice {
                threshold: c,
                f1,
                fallback: false,
            };
        }
    }
    best
}

pub fn select_threshold(model: &LinearModel, validation: &FeatureMatrix) -> Result<ThresholdChoice> {
    let scores = predict_proba(model, validation)?;
    Ok(select_threshold_from_scores(&scores, &validation.labels()))
}

pub(crate) fn f1_from_counts(tp: usize, fp: usize, fneg: usize) -> f64 {
    let denom = 2 * tp + fp + fneg;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}
