//! Command-line front end: `spectral-attn <subcommand>`.
//!
//! Every subcommand's flags may also come from a TOML file given with
//! `--config`. Keys live in a table named after the subcommand and use the
//! flag names, e.g.
//!
//! ```toml
//! [extract]
//! operator = "wavelet-high"
//! levels = 2
//! ```
//!
//! Flags given on the command line win over the file. Boolean switches can
//! only be turned on from the command line, never off.
//!
//! Exit codes: 0 success, 1 usage, 2 configuration, 3 data, 4 structural,
//! 5 numeric.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::classifier::{select_threshold, train, LinearModel, TrainConfig, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::data_io::{
    generate_synthetic, read_features, sidecar_path, split_dataset, split_indices, write_features,
    DumpSet, FeatureSource, SyntheticSpec, DEFAULT_VALIDATION_FRACTION,
};
use crate::error::{Error, Result, ResultExt};
use crate::evaluation::{
    band_variants, cutoff_sweep, default_cutoff_grid, evaluate_model, head_importance, layer_importance,
    run_ablation, write_ablation_csv, write_head_importance_csv, write_layer_importance_csv, AblationRow,
    AblationSpec, Variant,
};
use crate::features::{AttentionType, FeatureMatrix, Granularity};
use crate::repro::Reproducibility;
use crate::signal_ops::{LaplacianBoundary, Operator, Padding, SpectralConfig, DEFAULT_CUTOFF};
use crate::toy_model::{
    default_nondegeneracy_grid, nondegeneracy_report, roughness_curve, write_roughness_csv, ToyModelConfig,
};

/// Environment variable read for the worker thread count.
pub const THREADS_ENV: &str = "ATTN_SPECTRAL_THREADS";
/// Span window used by `--span` when `--window` is not given.
pub const DEFAULT_SPAN_WINDOW: usize = 8;
const DEFAULT_SPLIT: [f64; 3] = [0.8, 0.1, 0.1];

#[derive(Debug, Parser)]
#[command(name = "spectral-attn", version, about = "Hallucination detection from high-frequency attention energy")]
pub struct Cli {
    /// TOML file with per-subcommand defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn attention dumps into a feature CSV.
    Extract(ExtractArgs),
    /// Fit the logistic-regression detector.
    Train(TrainArgs),
    /// Score a feature file with a trained model.
    Eval(EvalArgs),
    /// Compare operator, band and feature-subset variants on one split.
    Ablate(AblateArgs),
    /// Layer importance, top-k heads and ctx/gen ablation.
    Analyze(AnalyzeArgs),
    /// Monte-Carlo roughness study of the topic-switching toy model.
    ToySim(ToySimArgs),
    /// Write a synthetic corpus with planted high-frequency hallucinations.
    GenSynth(GenSynthArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Extract(_) => "extract",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Ablate(_) => "ablate",
            Command::Analyze(_) => "analyze",
            Command::ToySim(_) => "toy-sim",
            Command::GenSynth(_) => "gen-synth",
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct OperatorArgs {
    /// fourier, wavelet, laplacian, entropy, variance, or a full name such
    /// as fourier-low.
    #[arg(long)]
    pub operator: Option<String>,
    /// Fourier band: high, low or full.
    #[arg(long)]
    pub band: Option<String>,
    /// Normalized Fourier cutoff in [0, 0.5].
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Wavelet padding: zero, symmetric or periodic.
    #[arg(long)]
    pub padding: Option<String>,
    /// Wavelet decomposition levels.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Laplacian boundary: interior or circular.
    #[arg(long)]
    pub boundary: Option<String>,
    /// Span window; values above 1 aggregate tokens into spans.
    #[arg(long)]
    pub window: Option<usize>,
    /// Span mode with the default window of 8.
    #[arg(long)]
    #[serde(default)]
    pub span: bool,
}

impl OperatorArgs {
    pub fn window(&self) -> usize {
        self.window.unwrap_or(if self.span { DEFAULT_SPAN_WINDOW } else { 1 })
    }

    pub fn spectral_config(&self) -> Result<SpectralConfig> {
        let name = self.operator.as_deref().unwrap_or("fourier");
        let operator = match name {
            "fourier" => match self.band.as_deref().unwrap_or("high") {
                "high" => Operator::FourierHigh,
                "low" => Operator::FourierLow,
                "full" => Operator::FourierFull,
                b => return Err(Error::Config(format!("unknown band `{b}` (high, low, full)"))),
            },
            "wavelet" => Operator::WaveletHigh,
            other => {
                if self.band.is_some() {
                    return Err(Error::Config("--band only applies to --operator fourier".into()));
                }
                other.parse()?
            }
        };
        // Zero padding at token level, symmetric for spans.
        let default_padding = if self.window() > 1 { Padding::Symmetric } else { Padding::Zero };
        let config = SpectralConfig {
            operator,
            fourier_cutoff: self.cutoff.unwrap_or(DEFAULT_CUTOFF),
            wavelet_padding: match &self.padding {
                Some(p) => p.parse()?,
                None => default_padding,
            },
            wavelet_levels: self.levels.unwrap_or(1),
            laplacian_boundary: match &self.boundary {
                Some(b) => b.parse()?,
                None => LaplacianBoundary::Interior,
            },
        };
        config.validate()?;
        if self.window() == 0 {
            return Err(Error::Config("--window must be >= 1".into()));
        }
        Ok(config)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SplitArgs {
    /// Train/validation/test fractions of the examples.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub split_ratios: Option<Vec<f64>>,
    /// Seed for the example-level split.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl SplitArgs {
    fn ratios(&self) -> Result<[f64; 3]> {
        match &self.split_ratios {
            None => Ok(DEFAULT_SPLIT),
            Some(v) => <[f64; 3]>::try_from(v.as_slice())
                .map_err(|_| Error::Config(format!("--split-ratios needs 3 values, got {}", v.len()))),
        }
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn open(&self, manifest: &Path) -> Result<[DumpSet; 3]> {
        let set = DumpSet::open(manifest)?;
        let (a, b, c) = split_dataset(&set.manifest, self.ratios()?, self.seed())?;
        for (name, part) in [("train", &a), ("validation", &b), ("test", &c)] {
            if part.examples.is_empty() {
                return Err(Error::Config(format!("{name} split is empty")));
            }
        }
        Ok([set.subset(a), set.subset(b), set.subset(c)])
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainingArgs {
    /// L2 strength; defaults to 1 / n_samples.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Gradient tolerance for convergence.
    #[arg(long)]
    pub tol: Option<f64>,
}

impl TrainingArgs {
    fn train_config(&self) -> Result<TrainConfig> {
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("--lambda {l} must be finite and >= 0")));
            }
        }
        let tol = self.tol.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0) {
            return Err(Error::Config(format!("--tol {tol} must be > 0")));
        }
        Ok(TrainConfig {
            l2_lambda: self.lambda,
            max_iter: self.max_iter.unwrap_or(DEFAULT_MAX_ITER),
            tol,
        })
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExtractArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub op: OperatorArgs,
    /// Only extract one part of the example-level split: train, val or test.
    #[arg(long)]
    pub split: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub splitting: SplitArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainArgs {
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Validation features for threshold selection. Without it a seeded 10%
    /// of the training examples is held out.
    #[arg(long)]
    pub val_features: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub training: TrainingArgs,
    /// Seed for the validation carve-out.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_model: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct EvalArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct AblateArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub op: OperatorArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub splitting: SplitArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub training: TrainingArgs,
    /// Fourier low, high and full band at the base cutoff.
    #[arg(long)]
    #[serde(default)]
    pub band_sweep: bool,
    /// Fourier high band over 0.05, 0.10, ..., 0.50 (or --cutoffs).
    #[arg(long)]
    #[serde(default)]
    pub cutoff_sweep: bool,
    #[arg(long, value_delimiter = ',')]
    pub cutoffs: Option<Vec<f64>>,
    /// Every operator at its defaults.
    #[arg(long)]
    #[serde(default)]
    pub operator_sweep: bool,
    /// ctx-only and gen-only variants of the base operator.
    #[arg(long)]
    #[serde(default)]
    pub types: bool,
    #[arg(long, value_delimiter = ',')]
    pub top_k: Option<Vec<usize>>,
    /// Output CSV; a `.meta.json` sidecar holds the full reports.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct AnalyzeArgs {
    /// Trained full-layout model to read importances from.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Dumps for the top-k and ctx/gen retraining runs.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub op: OperatorArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub splitting: SplitArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub training: TrainingArgs,
    /// Head budgets; each is capped at L*H.
    #[arg(long, value_delimiter = ',')]
    pub top_k: Option<Vec<usize>>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ToySimArgs {
    /// Mixture sizes to simulate.
    #[arg(long, value_delimiter = ',')]
    pub k_sweep: Option<Vec<usize>>,
    /// Prediction position.
    #[arg(long)]
    pub t: Option<usize>,
    /// Projected noise scale.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Separation between neighbouring topic means.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the non-degeneracy diagnostic grid here.
    #[arg(long)]
    pub nondegeneracy: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenSynthArgs {
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub n_examples: Option<usize>,
    #[arg(long)]
    pub context_len: Option<usize>,
    #[arg(long)]
    pub gen_len: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub halluc_rate: Option<f64>,
    #[arg(long)]
    pub smooth_width: Option<usize>,
    #[arg(long)]
    pub jag_amplitude: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn required<'a, T>(v: &'a Option<T>, flag: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::Config(format!("--{flag} is required")))
}

/// Values from the command line replace the file's; `null` and `false`
/// leave them alone.
fn overlay(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match v {
                    Value::Null | Value::Bool(false) => {}
                    Value::Object(_) => overlay(b.entry(k).or_insert(Value::Object(Default::default())), v),
                    v => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

fn load_config_table(path: &Path, command: &str) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: toml::Table = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if let Some(k) = doc.keys().find(|k| !CLI_SECTIONS.contains(&k.as_str())) {
        return Err(Error::Config(format!(
            "{}: unknown section `{k}` (expected one of {})",
            path.display(),
            CLI_SECTIONS.join(", ")
        )));
    }
    match doc.get(command) {
        None => Ok(Value::Object(Default::default())),
        Some(section) => serde_json::to_value(section).map_err(|e| Error::Config(e.to_string())),
    }
}

const CLI_SECTIONS: [&str; 7] = ["extract", "train", "eval", "ablate", "analyze", "toy-sim", "gen-synth"];

fn merged<T: Serialize + DeserializeOwned + Default>(args: &T, config: Option<&Path>, command: &str) -> Result<T> {
    let cli = serde_json::to_value(args).expect("argument structs always encode");
    let Some(path) = config else {
        return Ok(serde_json::from_value(cli).expect("argument structs round-trip"));
    };
    let mut base = load_config_table(path, command)?;
    let known = serde_json::to_value(T::default()).expect("argument structs always encode");
    if let (Value::Object(b), Value::Object(k)) = (&base, &known) {
        if let Some(key) = b.keys().find(|key| !k.contains_key(*key)) {
            return Err(Error::Config(format!("{} [{command}]: unknown key `{key}`", path.display())));
        }
    }
    overlay(&mut base, cli);
    serde_json::from_value(base).map_err(|e| Error::Config(format!("{} [{command}]: {e}", path.display())))
}

fn repro<T: Serialize>(command: &str, args: &T, seed: Option<u64>) -> Reproducibility {
    Reproducibility::new(&json!({ "command": command, "args": args }), seed)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.class().exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let config = cli.config.as_deref();
    let name = cli.command.name();
    match &cli.command {
        Command::Extract(a) => extract(&merged(a, config, name)?),
        Command::Train(a) => train_cmd(&merged(a, config, name)?),
        Command::Eval(a) => eval_cmd(&merged(a, config, name)?),
        Command::Ablate(a) => ablate(&merged(a, config, name)?),
        Command::Analyze(a) => analyze(&merged(a, config, name)?),
        Command::ToySim(a) => toy_sim(&merged(a, config, name)?),
        Command::GenSynth(a) => gen_synth(&merged(a, config, name)?),
    }
}

pub fn extract(args: &ExtractArgs) -> Result<()> {
    let manifest = required(&args.manifest, "manifest")?;
    let out = required(&args.out, "out")?;
    let config = args.op.spectral_config()?;
    let window = args.op.window();
    let set = match args.split.as_deref() {
        None => DumpSet::open(manifest)?,
        Some(part) => {
            let idx = match part {
                "train" => 0,
                "val" => 1,
                "test" => 2,
                p => return Err(Error::Config(format!("unknown split `{p}` (train, val, test)"))),
            };
            args.splitting.open(manifest)?[idx].clone()
        }
    };
    let matrix = set.extract(&config, window)?;
    let seed = args.split.as_ref().map(|_| args.splitting.seed());
    write_features(out, &matrix, Some(repro("extract", args, seed)))?;
    println!(
        "wrote {} {} rows x {} features ({}) to {}",
        matrix.n_rows(),
        matrix.granularity(),
        matrix.n_cols(),
        config.label(),
        out.display()
    );
    Ok(())
}

/// Holds out a seeded fraction of the examples (never fewer than one).
fn carve_validation(m: &FeatureMatrix, seed: u64) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let ids: Vec<&str> = m
        .rows
        .iter()
        .map(|r| r.example_id.as_str())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    if ids.len() < 2 {
        return Err(Error::Data(
            "need at least two examples to hold out validation data; pass --val-features".into(),
        ));
    }
    let n_val = ((ids.len() as f64 * DEFAULT_VALIDATION_FRACTION).round() as usize).max(1);
    let frac = n_val as f64 / ids.len() as f64;
    let [_, val_idx, _] = split_indices(ids.len(), [1.0 - frac, frac, 0.0], seed)?;
    let val_ids: HashSet<&str> = val_idx.into_iter().map(|i| ids[i]).collect();
    let (mut tr, mut va) = (m.clone(), m.clone());
    tr.rows.retain(|r| !val_ids.contains(r.example_id.as_str()));
    va.rows.retain(|r| val_ids.contains(r.example_id.as_str()));
    Ok((tr, va))
}

pub fn train_cmd(args: &TrainArgs) -> Result<()> {
    let features = required(&args.features, "features")?;
    let out = required(&args.out_model, "out-model")?;
    let cfg = args.training.train_config()?;
    let all = read_features(features)?;
    let (train_set, val) = match &args.val_features {
        Some(p) => (all, read_features(p)?),
        None => carve_validation(&all, args.seed.unwrap_or(0))?,
    };
    let mut model = train(&train_set, &cfg)?;
    let choice = select_threshold(&model, &val)?;
    model.threshold = choice.threshold;
    let seed = args.val_features.is_none().then(|| args.seed.unwrap_or(0));
    model.reproducibility = Some(repro("train", args, seed));
    model.save(out)?;
    println!(
        "trained on {} rows x {} features: converged={} after {} iterations, objective {:.6}",
        train_set.n_rows(),
        train_set.n_cols(),
        model.converged,
        model.iterations_used,
        model.final_objective
    );
    println!(
        "threshold {:.6} (validation F1 {:.4}{}) -> {}",
        choice.threshold,
        choice.f1,
        if choice.fallback { ", single-class fallback" } else { "" },
        out.display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct EvalOutput<'a> {
    #[serde(flatten)]
    report: &'a crate::evaluation::EvalReport,
    model: String,
    features: String,
    reproducibility: Reproducibility,
}

pub fn eval_cmd(args: &EvalArgs) -> Result<()> {
    let model_path = required(&args.model, "model")?;
    let features = required(&args.features, "features")?;
    let model = LinearModel::load(model_path)?;
    let m = read_features(features)?;
    let report = evaluate_model(&model, &m).context(|| features.display().to_string())?;
    println!("{}", report.summary());
    if let Some(path) = &args.report {
        write_json(
            path,
            &EvalOutput {
                report: &report,
                model: model_path.display().to_string(),
                features: features.display().to_string(),
                reproducibility: repro("eval", args, None),
            },
        )?;
    }
    Ok(())
}

fn ablation_variants(args: &AblateArgs, base: &SpectralConfig) -> Vec<Variant> {
    let mut v = Vec::new();
    if args.band_sweep {
        v.extend(band_variants(base));
    }
    if args.cutoff_sweep || args.cutoffs.is_some() {
        let grid = args.cutoffs.clone().unwrap_or_else(default_cutoff_grid);
        v.extend(cutoff_sweep(base, &grid));
    }
    if args.operator_sweep {
        v.extend(Operator::ALL.into_iter().map(|op| Variant::Operator {
            config: SpectralConfig {
                operator: op,
                ..*base
            },
        }));
    }
    if args.types {
        v.extend([AttentionType::Context, AttentionType::Generated].map(|keep| Variant::KeepType { keep }));
    }
    for &k in args.top_k.iter().flatten() {
        v.push(Variant::TopK { k });
    }
    if v.is_empty() {
        v.push(Variant::Operator { config: *base });
    }
    v
}

#[derive(Debug, Serialize)]
struct TableMeta<'a> {
    rows: &'a [AblationRow],
    reproducibility: Reproducibility,
}

fn print_rows(rows: &[AblationRow]) {
    for r in rows {
        println!(
            "{:<28} features {:>5}  AUROC {:.4}  F1 {:.4}",
            r.variant, r.n_features, r.report.auroc, r.report.f1
        );
    }
}

pub fn ablate(args: &AblateArgs) -> Result<()> {
    let manifest = required(&args.manifest, "manifest")?;
    let out = required(&args.out, "out")?;
    let base = args.op.spectral_config()?;
    let spec = AblationSpec {
        base,
        window: args.op.window(),
        train: args.training.train_config()?,
    };
    let variants = ablation_variants(args, &base);
    let [tr, va, te] = args.splitting.open(manifest)?;
    let rows = run_ablation(&tr, &va, &te, &spec, &variants)?;
    write_ablation_csv(out, &rows)?;
    write_json(
        &sidecar_path(out),
        &TableMeta {
            rows: &rows,
            reproducibility: repro("ablate", args, Some(args.splitting.seed())),
        },
    )?;
    print_rows(&rows);
    Ok(())
}

pub fn analyze(args: &AnalyzeArgs) -> Result<()> {
    let out_dir = required(&args.out_dir, "out-dir")?;
    if args.model.is_none() && args.manifest.is_none() {
        return Err(Error::Config("analyze needs --model, --manifest or both".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let seed = args.manifest.as_ref().map(|_| args.splitting.seed());
    let rp = repro("analyze", args, seed);
    let base = args.op.spectral_config()?;
    let spec = AblationSpec {
        base,
        window: args.op.window(),
        train: args.training.train_config()?,
    };
    let splits = args.manifest.as_deref().map(|m| args.splitting.open(m)).transpose()?;

    let model = match (&args.model, &splits) {
        (Some(p), _) => LinearModel::load(p)?,
        (None, Some([tr, _, _])) => train(&tr.extract(&base, spec.window)?, &spec.train)?,
        (None, None) => unreachable!(),
    };
    let granularity = if model.window > 1 { Granularity::Span } else { Granularity::Token };
    let layers = layer_importance(&model)?;
    write_layer_importance_csv(&out_dir.join("layer_importance.csv"), &layers, granularity)?;
    write_head_importance_csv(&out_dir.join("head_importance.csv"), &head_importance(&model))?;
    write_json(&out_dir.join("analysis.meta.json"), &json!({ "reproducibility": rp }))?;
    for l in &layers {
        println!("layer {:>3}: importance {:.6} +- {:.6}", l.layer, l.mean, l.std);
    }

    let Some([tr, va, te]) = &splits else {
        return Ok(());
    };
    let total = model.layout.layers * model.layout.heads;
    let mut ks: Vec<usize> = Vec::new();
    for &k in args.top_k.as_deref().unwrap_or(&[100, 50, 10]) {
        let k = k.min(total);
        if k == 0 {
            return Err(Error::Config("--top-k values must be >= 1".into()));
        }
        if !ks.contains(&k) {
            ks.push(k);
        }
    }
    let mut variants = vec![Variant::Operator { config: base }];
    variants.extend(ks.iter().map(|&k| Variant::TopK { k }));
    let mut topk = run_ablation(tr, va, te, &spec, &variants)?;
    topk[0].variant = "all-heads".into();
    write_ablation_csv(&out_dir.join("top_k.csv"), &topk)?;

    let types = [
        Variant::Operator { config: base },
        Variant::KeepType { keep: AttentionType::Context },
        Variant::KeepType { keep: AttentionType::Generated },
    ];
    let mut by_type = run_ablation(tr, va, te, &spec, &types)?;
    by_type[0].variant = "ctx+gen".into();
    write_ablation_csv(&out_dir.join("attention_type.csv"), &by_type)?;
    write_json(
        &out_dir.join("analysis.meta.json"),
        &json!({ "top_k": topk, "attention_type": by_type, "reproducibility": rp }),
    )?;
    print_rows(&topk);
    print_rows(&by_type[1..]);
    Ok(())
}

pub fn toy_sim(args: &ToySimArgs) -> Result<()> {
    let out = required(&args.out, "out")?;
    let ks = args.k_sweep.clone().unwrap_or_else(|| vec![1, 2, 4, 8, 16]);
    let (t, tau, delta) = (args.t.unwrap_or(64), args.tau.unwrap_or(0.5), args.delta.unwrap_or(2.0));
    let (trials, seed) = (args.trials.unwrap_or(10_000), args.seed.unwrap_or(0));
    let rows = roughness_curve(&ks, t, tau, delta, trials, seed)?;
    write_roughness_csv(out, &rows)?;
    let rp = repro("toy-sim", args, Some(seed));
    let mut meta = json!({ "rows": rows, "reproducibility": rp });
    for r in &rows {
        println!(
            "K={:>3}  roughness {:.6e} +- {:.2e}  switch {:.4}  logit energy {:.4} (bound {:.4})",
            r.k, r.roughness.mean, r.roughness.std_error, r.switch_prob, r.logit_energy, r.logit_energy_bound
        );
    }
    if let Some(path) = &args.nondegeneracy {
        let (etas, bs) = default_nondegeneracy_grid(t);
        let mut out = String::from("K,eta,B,pr_mass,pr_gap,pr_joint\n");
        let mut by_k = BTreeMap::new();
        for &k in &ks {
            let config = ToyModelConfig::equally_spaced(k, t, delta, tau, trials, crate::rng::derive_seed(seed, k as u64))?;
            let cells = nondegeneracy_report(&config, &etas, &bs)?;
            for c in &cells {
                out += &format!(
                    "{k},{},{},{},{},{}\n",
                    crate::evaluation::fmt_sig10(c.eta),
                    crate::evaluation::fmt_sig10(c.b),
                    crate::evaluation::fmt_sig10(c.pr_mass),
                    crate::evaluation::fmt_sig10(c.pr_gap),
                    crate::evaluation::fmt_sig10(c.pr_joint)
                );
            }
            by_k.insert(k, cells);
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))?;
        meta["nondegeneracy"] = json!(by_k);
    }
    write_json(&sidecar_path(out), &meta)
}

pub fn gen_synth(args: &GenSynthArgs) -> Result<()> {
    let out_dir = required(&args.out_dir, "out-dir")?;
    let d = SyntheticSpec::default();
    let spec = SyntheticSpec {
        n_examples: args.n_examples.unwrap_or(d.n_examples),
        context_len: args.context_len.unwrap_or(d.context_len),
        gen_len: args.gen_len.unwrap_or(d.gen_len),
        layers: args.layers.unwrap_or(d.layers),
        heads: args.heads.unwrap_or(d.heads),
        halluc_rate: args.halluc_rate.unwrap_or(d.halluc_rate),
        smooth_kernel_width: args.smooth_width.unwrap_or(d.smooth_kernel_width),
        jag_amplitude: args.jag_amplitude.unwrap_or(d.jag_amplitude),
        seed: args.seed.unwrap_or(d.seed),
    };
    let manifest = generate_synthetic(&spec, out_dir)?;
    write_json(
        &out_dir.join("synthetic.meta.json"),
        &json!({ "spec": spec, "reproducibility": repro("gen-synth", args, Some(spec.seed)) }),
    )?;
    let tokens: usize = manifest.examples.iter().map(|e| e.gen_len).sum();
    let positives: usize = manifest.examples.iter().flat_map(|e| &e.labels).map(|&l| l as usize).sum();
    println!(
        "wrote {} examples ({} tokens, {} hallucinated) to {}",
        manifest.examples.len(),
        tokens,
        positives,
        out_dir.display()
    );
    Ok(())
}
