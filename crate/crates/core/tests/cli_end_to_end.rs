use std::path::Path;
use std::process::{Command, Output};

use spectral_attn::classifier::LinearModel;
use spectral_attn::data_io::{read_features, write_dump, AttentionDump, DumpManifest, DumpShape, ExampleEntry};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_spectral-attn"));
    c.env_remove("ATTN_SPECTRAL_THREADS");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    let out = bin().current_dir(dir).args(args).output().unwrap();
    if !out.status.success() {
        eprintln!("stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?} failed");
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path) {
    ok(
        dir,
        &[
            "gen-synth", "--out-dir", "syn", "--n-examples", "60", "--context-len", "24", "--gen-len", "16",
            "--layers", "2", "--heads", "3", "--seed", "5",
        ],
    );
}

#[test]
fn pipeline_extract_train_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d);
    for part in ["train", "val", "test"] {
        ok(
            d,
            &["extract", "--manifest", "syn/manifest.json", "--split", part, "--out", &format!("{part}.csv")],
        );
    }
    let m = read_features(&d.join("train.csv")).unwrap();
    assert_eq!(m.n_cols(), 2 * 2 * 3);

    let train_args = ["train", "--features", "train.csv", "--val-features", "val.csv", "--out-model", "m1.json"];
    ok(d, &train_args);
    let first = std::fs::read(d.join("m1.json")).unwrap();
    ok(d, &train_args);
    assert!(first == std::fs::read(d.join("m1.json")).unwrap(), "training must be deterministic");
    let model = LinearModel::load(&d.join("m1.json")).unwrap();
    assert!(model.converged);
    assert!(model.reproducibility.is_some());

    let stdout = ok(d, &["eval", "--model", "m1.json", "--features", "test.csv", "--report", "r.json"]);
    assert!(stdout.contains("AUROC"));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("r.json")).unwrap()).unwrap();
    let c = &report["confusion"];
    let (tp, fp, fneg) = (c["tp"].as_f64().unwrap(), c["fp"].as_f64().unwrap(), c["fn_"].as_f64().unwrap());
    let f1 = if tp == 0.0 { 0.0 } else { 2.0 * tp / (2.0 * tp + fp + fneg) };
    assert!((report["f1"].as_f64().unwrap() - f1).abs() < 1e-12);
    assert!(report["reproducibility"]["config_hash"].is_string());

    // eval on the training data of the planted set separates perfectly
    ok(d, &["eval", "--model", "m1.json", "--features", "train.csv", "--report", "tr.json"]);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("tr.json")).unwrap()).unwrap();
    assert!(report["auroc"].as_f64().unwrap() > 0.99);

    // carve-out path
    ok(d, &["train", "--features", "train.csv", "--out-model", "m3.json"]);
}

#[test]
fn span_extraction_and_layout_mismatch() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d);
    ok(d, &["extract", "--manifest", "syn/manifest.json", "--span", "--out", "span.csv"]);
    let m = read_features(&d.join("span.csv")).unwrap();
    assert_eq!(m.window, 8);
    assert_eq!(m.n_rows(), 60 * 2);

    ok(d, &["extract", "--manifest", "syn/manifest.json", "--out", "tok.csv"]);
    ok(d, &["train", "--features", "tok.csv", "--out-model", "m.json"]);
    // a model with a different layout cannot score these features
    ok(d, &["gen-synth", "--out-dir", "syn2", "--n-examples", "4", "--layers", "1", "--heads", "1"]);
    ok(d, &["extract", "--manifest", "syn2/manifest.json", "--out", "small.csv"]);
    let out = run(d, &["eval", "--model", "m.json", "--features", "small.csv"]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("L=2 H=3") && err.contains("L=1 H=1"), "{err}");
}

#[test]
fn ablate_and_analyze_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d);
    ok(d, &["ablate", "--manifest", "syn/manifest.json", "--band-sweep", "--out", "bands.csv"]);
    let text = std::fs::read_to_string(d.join("bands.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "variant,f1,auroc,n_pos,n_neg");
    assert_eq!(lines.len(), 4);
    assert!(d.join("bands.csv.meta.json").exists());

    ok(d, &["ablate", "--manifest", "syn/manifest.json", "--cutoff-sweep", "--out", "cut.csv"]);
    assert_eq!(std::fs::read_to_string(d.join("cut.csv")).unwrap().lines().count(), 11);

    ok(
        d,
        &["analyze", "--manifest", "syn/manifest.json", "--top-k", "100,50,10,2", "--out-dir", "an"],
    );
    let layers = std::fs::read_to_string(d.join("an/layer_importance.csv")).unwrap();
    assert_eq!(layers.lines().next().unwrap(), "layer,mean_importance,std_importance,granularity");
    assert_eq!(layers.lines().count(), 3);
    let topk = std::fs::read_to_string(d.join("an/top_k.csv")).unwrap();
    // 100 and 50 and 10 all cap to L*H = 6 and collapse into one row
    let names: Vec<&str> = topk.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(names, vec!["all-heads", "top-6", "top-2"]);
    let types = std::fs::read_to_string(d.join("an/attention_type.csv")).unwrap();
    assert_eq!(types.lines().count(), 4);
}

#[test]
fn toy_sim_writes_curve() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "toy-sim", "--k-sweep", "2,4,8,16", "--t", "16", "--trials", "1000", "--out", "curve.csv",
            "--nondegeneracy", "nd.csv",
        ],
    );
    let text = std::fs::read_to_string(d.join("curve.csv")).unwrap();
    assert!(text.starts_with(
        "K,t,tau,delta,trials,mean_roughness,std_error,switch_prob_est,logit_energy_est,logit_energy_bound\n"
    ));
    assert_eq!(text.lines().count(), 5);
    assert!(d.join("curve.csv.meta.json").exists());
    assert_eq!(std::fs::read_to_string(d.join("nd.csv")).unwrap().lines().count(), 1 + 4 * 20);
}

#[test]
fn minimal_dump_extracts_to_one_row() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let dump = AttentionDump {
        shape: DumpShape {
            context_len: 1,
            gen_len: 1,
            layers: 1,
            heads: 1,
        },
        steps: vec![vec![1.0]],
    };
    write_dump(&d.join("a.bin"), &dump).unwrap();
    assert_eq!(std::fs::metadata(d.join("a.bin")).unwrap().len(), 28);
    DumpManifest {
        format_version: 1,
        model_name: "tiny".into(),
        num_layers: 1,
        num_heads: 1,
        examples: vec![ExampleEntry {
            id: "only".into(),
            context_len: 1,
            gen_len: 1,
            labels: vec![0],
            attention_file: "a.bin".into(),
        }],
    }
    .save(&d.join("manifest.json"))
    .unwrap();
    ok(d, &["extract", "--manifest", "manifest.json", "--out", "f.csv"]);
    let text = std::fs::read_to_string(d.join("f.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "example_id,step_index,label,f_0,f_1");
}

#[test]
fn exit_codes_and_config_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(run(d, &["extract", "--manifest", "missing.json", "--out", "x.csv"]).status.code(), Some(3));
    synth(d);
    let bad_cutoff = run(d, &["extract", "--manifest", "syn/manifest.json", "--cutoff", "0.9", "--out", "x.csv"]);
    assert_eq!(bad_cutoff.status.code(), Some(2));
    assert_eq!(run(d, &["train", "--out-model", "m.json"]).status.code(), Some(2));
    assert_eq!(run(d, &["no-such-command"]).status.code(), Some(1));

    // truncated dump
    let bin_path = d.join("syn/ex00000.bin");
    let bytes = std::fs::read(&bin_path).unwrap();
    std::fs::write(&bin_path, &bytes[..bytes.len() - 4]).unwrap();
    let out = run(d, &["extract", "--manifest", "syn/manifest.json", "--out", "x.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ex00000.bin"));
    std::fs::write(&bin_path, &bytes).unwrap();

    std::fs::write(d.join("c.toml"), "[extract]\noperator = \"wavelet\"\nlevels = 2\n").unwrap();
    ok(d, &["--config", "c.toml", "extract", "--manifest", "syn/manifest.json", "--out", "w.csv"]);
    let m = read_features(&d.join("w.csv")).unwrap();
    assert_eq!(m.config.wavelet_levels, 2);
    ok(
        d,
        &["--config", "c.toml", "extract", "--manifest", "syn/manifest.json", "--levels", "3", "--out", "w3.csv"],
    );
    assert_eq!(read_features(&d.join("w3.csv")).unwrap().config.wavelet_levels, 3);

    // thread count does not change results
    let mut c = bin();
    c.current_dir(d)
        .env("ATTN_SPECTRAL_THREADS", "1")
        .args(["extract", "--manifest", "syn/manifest.json", "--out", "t1.csv"]);
    assert!(c.status().unwrap().success());
    ok(d, &["--threads", "3", "extract", "--manifest", "syn/manifest.json", "--out", "t3.csv"]);
    assert_eq!(std::fs::read(d.join("t1.csv")).unwrap(), std::fs::read(d.join("t3.csv")).unwrap());
}
