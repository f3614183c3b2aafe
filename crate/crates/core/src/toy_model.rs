//! Monte-Carlo simulator for the single-layer topic-switching attention model.
//!
//! Tokens `1..t-1` carry i.i.d. uniform topic labels `c_j` in `{0..K-1}`.
//! The query at position `t` sees logits `s_j = m[c_j] + tau * g_j` with
//! standard normal `g_j`, where `m` are the topic means projected onto the
//! query direction and `tau` the projected noise scale. Attention is
//! `softmax(s)` and its roughness is the sum of squared adjacent differences.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::fmt_sig10;
use crate::rng::{derive_seed, stream};

pub const MIN_SWITCH_TRIALS: usize = 100;
pub const MIN_ENERGY_TRIALS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyModelConfig {
    /// Number of mixture components.
    pub k: usize,
    /// Prediction position; positions `1..t-1` are attended.
    pub t: usize,
    pub projected_means: Vec<f64>,
    pub noise_std: f64,
    pub trials: usize,
    pub rng_seed: u64,
}

impl ToyModelConfig {
    pub fn new(projected_means: Vec<f64>, t: usize, noise_std: f64, trials: usize, rng_seed: u64) -> Result<Self> {
        let c = ToyModelConfig {
            k: projected_means.len(),
            t,
            projected_means,
            noise_std,
            trials,
            rng_seed,
        };
        c.validate()?;
        Ok(c)
    }

    /// Means `0, delta, 2 delta, ...`, so every adjacent pair of topics is
    /// exactly `delta` apart.
    pub fn equally_spaced(k: usize, t: usize, delta: f64, noise_std: f64, trials: usize, rng_seed: u64) -> Result<Self> {
        Self::new((0..k).map(|r| r as f64 * delta).collect(), t, noise_std, trials, rng_seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("toy model needs K >= 1".into()));
        }
        if self.projected_means.len() != self.k {
            return Err(Error::Config(format!(
                "{} projected means for K = {}",
                self.projected_means.len(),
                self.k
            )));
        }
        if self.t < 3 {
            return Err(Error::Config(format!("prediction position t = {} must be >= 3", self.t)));
        }
        if self.trials == 0 {
            return Err(Error::Config("toy model needs at least one trial".into()));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config(format!("noise_std {} must be finite and >= 0", self.noise_std)));
        }
        if self.projected_means.iter().any(|m| !m.is_finite()) {
            return Err(Error::Config("projected means must be finite".into()));
        }
        if let Some(d) = self.separation() {
            if d <= 0.0 {
                return Err(Error::Config(format!(
                    "projected means must be pairwise distinct, minimum gap is {d}"
                )));
            }
        }
        Ok(())
    }

    /// Minimum pairwise gap between projected means; `None` when `K = 1`.
    pub fn separation(&self) -> Option<f64> {
        let mut m = self.projected_means.clone();
        m.sort_by(f64::total_cmp);
        m.windows(2).map(|w| w[1] - w[0]).min_by(f64::total_cmp)
    }

    /// Number of attended positions, `t - 1`.
    pub fn positions(&self) -> usize {
        self.t - 1
    }

    /// Lower bound on the expected squared logit gap between neighbours:
    /// `2 tau^2 + (1 - 1/K) Delta^2`.
    pub fn logit_gap_bound(&self) -> f64 {
        let delta = self.separation().unwrap_or(0.0);
        2.0 * self.noise_std * self.noise_std + (1.0 - 1.0 / self.k as f64) * delta * delta
    }

    fn require_trials(&self, min: usize, what: &str) -> Result<()> {
        if self.trials < min {
            return Err(Error::Config(format!(
                "{what} needs at least {min} trials, got {}",
                self.trials
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    /// Topic labels, 0-based.
    pub labels: Vec<usize>,
    pub logits: Vec<f64>,
    pub alphas: Vec<f64>,
    pub roughness: f64,
    pub switch_count: usize,
    /// `alpha_j + alpha_{j+1}` per adjacent pair.
    pub pair_masses: Vec<f64>,
    /// `s_{j+1} - s_j` per adjacent pair.
    pub logit_gaps: Vec<f64>,
}

impl TrialResult {
    /// Largest deviation from `alpha_{j+1} - alpha_j = m tanh(ds / 2)` over
    /// the adjacent pairs.
    pub fn tanh_identity_residual(&self) -> f64 {
        self.alphas
            .windows(2)
            .zip(self.pair_masses.iter().zip(&self.logit_gaps))
            .map(|(a, (m, ds))| ((a[1] - a[0]) - m * (ds / 2.0).tanh()).abs())
            .fold(0.0, f64::max)
    }
}

pub fn softmax(s: &[f64]) -> Vec<f64> {
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = s.iter().map(|v| (v - max).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// Adjacent-difference energy `sum_j (a_{j+1} - a_j)^2`.
pub fn roughness(alpha: &[f64]) -> f64 {
    alpha.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum()
}

pub fn simulate_trial<R: Rng>(config: &ToyModelConfig, rng: &mut R) -> TrialResult {
    let n = config.positions();
    let mut labels = Vec::with_capacity(n);
    let mut logits = Vec::with_capacity(n);
    for _ in 0..n {
        let c = rng.random_range(0..config.k);
        let g: f64 = rng.sample(StandardNormal);
        labels.push(c);
        logits.push(config.projected_means[c] + config.noise_std * g);
    }
    let alphas = softmax(&logits);
    TrialResult {
        roughness: roughness(&alphas),
        switch_count: labels.windows(2).filter(|w| w[0] != w[1]).count(),
        pair_masses: alphas.windows(2).map(|w| w[0] + w[1]).collect(),
        logit_gaps: logits.windows(2).map(|w| w[1] - w[0]).collect(),
        labels,
        logits,
        alphas,
    }
}

/// Runs every trial on its own seeded stream and maps it through `f`.
/// The result is independent of the thread count.
pub fn map_trials<T: Send>(config: &ToyModelConfig, f: impl Fn(&TrialResult) -> T + Sync) -> Vec<T> {
    (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(config.rng_seed, i as u64);
            f(&simulate_trial(config, &mut rng))
        })
        .collect()
}

/// A Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    /// Sample mean and `s / sqrt(n)`.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Estimate {
            mean,
            std_error: (var / n).sqrt(),
        }
    }

    pub fn within(&self, target: f64, n_se: f64) -> bool {
        (self.mean - target).abs() <= n_se * self.std_error
    }
}

/// Fraction of adjacent label pairs that differ, pooled over pairs and
/// trials. Label indicators of distinct pairs are pairwise independent, so
/// the binomial standard error applies.
pub fn estimate_switch_probability(config: &ToyModelConfig) -> Result<Estimate> {
    config.validate()?;
    config.require_trials(MIN_SWITCH_TRIALS, "switch probability")?;
    let switches: usize = map_trials(config, |r| r.switch_count).into_iter().sum();
    let pairs = (config.trials * (config.positions() - 1)) as f64;
    let p = switches as f64 / pairs;
    Ok(Estimate {
        mean: p,
        std_error: (p * (1.0 - p) / pairs).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogitGapEnergy {
    /// Estimate of `E[(ds)^2]`; the standard error is taken over per-trial
    /// averages.
    pub estimate: Estimate,
    pub bound: f64,
}

impl LogitGapEnergy {
    pub fn respects_bound(&self, n_se: f64) -> bool {
        self.estimate.mean >= self.bound - n_se * self.estimate.std_error
    }
}

pub fn estimate_logit_gap_energy(config: &ToyModelConfig) -> Result<LogitGapEnergy> {
    config.validate()?;
    if config.k < 2 {
        return Err(Error::Config("logit gap energy needs K >= 2".into()));
    }
    config.require_trials(MIN_ENERGY_TRIALS, "logit gap energy")?;
    let per_trial = map_trials(config, |r| {
        r.logit_gaps.iter().map(|d| d * d).sum::<f64>() / r.logit_gaps.len() as f64
    });
    Ok(LogitGapEnergy {
        estimate: Estimate::from_samples(&per_trial),
        bound: config.logit_gap_bound(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoughnessRow {
    pub k: usize,
    pub t: usize,
    pub tau: f64,
    pub delta: f64,
    pub trials: usize,
    pub roughness: Estimate,
    pub switch_prob: f64,
    pub logit_energy: f64,
    pub logit_energy_bound: f64,
}

impl RoughnessRow {
    /// True when `next`'s mean roughness is not below this row's by more
    /// than `n_se` pooled standard errors.
    pub fn not_above(&self, next: &RoughnessRow, n_se: f64) -> bool {
        let pooled = (self.roughness.std_error.powi(2) + next.roughness.std_error.powi(2)).sqrt();
        next.roughness.mean >= self.roughness.mean - n_se * pooled
    }
}

/// Mean roughness per `K` for equally spaced means with separation `delta`.
/// Each `K` gets its own seed derived from `seed`.
pub fn roughness_curve(
    ks: &[usize],
    t: usize,
    tau: f64,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<RoughnessRow>> {
    ks.iter()
        .map(|&k| {
            let config = ToyModelConfig::equally_spaced(k, t, delta, tau, trials, derive_seed(seed, k as u64))?;
            let stats = map_trials(&config, |r| {
                let gap2 = r.logit_gaps.iter().map(|d| d * d).sum::<f64>();
                (r.roughness, r.switch_count, gap2)
            });
            let pairs = (trials * (t - 2)) as f64;
            let rough: Vec<f64> = stats.iter().map(|s| s.0).collect();
            Ok(RoughnessRow {
                k,
                t,
                tau,
                delta,
                trials,
                roughness: Estimate::from_samples(&rough),
                switch_prob: stats.iter().map(|s| s.1).sum::<usize>() as f64 / pairs,
                logit_energy: stats.iter().map(|s| s.2).sum::<f64>() / pairs,
                logit_energy_bound: config.logit_gap_bound(),
            })
        })
        .collect()
}

pub fn write_roughness_csv(path: &Path, rows: &[RoughnessRow]) -> Result<()> {
    let mut out = String::from(
        "K,t,tau,delta,trials,mean_roughness,std_error,switch_prob_est,logit_energy_est,logit_energy_bound\n",
    );
    for r in rows {
        out += &format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.k,
            r.t,
            fmt_sig10(r.tau),
            fmt_sig10(r.delta),
            r.trials,
            fmt_sig10(r.roughness.mean),
            fmt_sig10(r.roughness.std_error),
            fmt_sig10(r.switch_prob),
            fmt_sig10(r.logit_energy),
            fmt_sig10(r.logit_energy_bound)
        );
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyCell {
    pub eta: f64,
    pub b: f64,
    /// Fraction of adjacent pairs with `alpha_j + alpha_{j+1} >= eta`.
    pub pr_mass: f64,
    /// Fraction of adjacent pairs with `|ds| <= b`.
    pub pr_gap: f64,
    /// Fraction with both.
    pub pr_joint: f64,
}

/// Grid used when the caller supplies none: `eta` at multiples of the
/// uniform pair mass `2 / (t - 1)`, `b` from 0.5 to 8.
pub fn default_nondegeneracy_grid(t: usize) -> (Vec<f64>, Vec<f64>) {
    let uniform = 2.0 / (t - 1) as f64;
    let etas = [0.25, 0.5, 1.0, 2.0]
        .iter()
        .map(|f| (f * uniform).min(1.0))
        .collect();
    (etas, vec![0.5, 1.0, 2.0, 4.0, 8.0])
}

/// Empirical frequency of the non-degeneracy event per `(eta, b)` pair,
/// pooled over adjacent pairs and trials. Diagnostic only.
pub fn nondegeneracy_report(config: &ToyModelConfig, etas: &[f64], bs: &[f64]) -> Result<Vec<NondegeneracyCell>> {
    config.validate()?;
    config.require_trials(MIN_ENERGY_TRIALS, "non-degeneracy report")?;
    let cells = etas.len() * bs.len();
    // Per trial: counts of [mass, gap, joint] hits for every cell.
    let counts = map_trials(config, |r| {
        let mut c = vec![[0usize; 3]; cells];
        for (m, ds) in r.pair_masses.iter().zip(&r.logit_gaps) {
            for (i, eta) in etas.iter().enumerate() {
                for (j, b) in bs.iter().enumerate() {
                    let (hm, hg) = (*m >= *eta, ds.abs() <= *b);
                    let cell = &mut c[i * bs.len() + j];
                    cell[0] += hm as usize;
                    cell[1] += hg as usize;
                    cell[2] += (hm && hg) as usize;
                }
            }
        }
        c
    });
    let mut total = vec![[0usize; 3]; cells];
    for c in counts {
        for (t, x) in total.iter_mut().zip(c) {
            for q in 0..3 {
                t[q] += x[q];
            }
        }
    }
    let pairs = (config.trials * (config.positions() - 1)) as f64;
    Ok(etas
        .iter()
        .flat_map(|&eta| bs.iter().map(move |&b| (eta, b)))
        .zip(total)
        .map(|((eta, b), c)| NondegeneracyCell {
            eta,
            b,
            pr_mass: c[0] as f64 / pairs,
            pr_gap: c[1] as f64 / pairs,
            pr_joint: c[2] as f64 / pairs,
        })
        .collect())
}
