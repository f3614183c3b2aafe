use spectral_attn::classifier::TrainConfig;
use spectral_attn::data_io::{generate_synthetic, split_dataset, synthesize, FeatureSource, SyntheticSpec};
use spectral_attn::evaluation::fit_and_evaluate;
use spectral_attn::signal_ops::{fourier_band_energy, Band, Operator, SpectralConfig};

/// High-band energy of every full attention row, split by token label.
fn row_energies(spec: &SyntheticSpec) -> Vec<(usize, usize, usize, bool, f64)> {
    let (_, corpus) = synthesize(spec).unwrap();
    let mut out = Vec::new();
    for (ex, (entry, dump)) in corpus.examples.iter().enumerate() {
        for (i, step) in dump.steps.iter().enumerate() {
            let len = spec.context_len + i;
            for (h, row) in step.chunks(len).enumerate() {
                let x: Vec<f64> = row.iter().map(|&v| v as f64).collect();
                let e = fourier_band_energy(&x, 0.45, Band::High).unwrap();
                out.push((ex, i, h, entry.labels[i] == 1, e));
            }
        }
    }
    out
}

fn mean_gap(spec: &SyntheticSpec) -> f64 {
    let rows = row_energies(spec);
    let mean = |lab: bool| {
        let v: Vec<f64> = rows.iter().filter(|r| r.3 == lab).map(|r| r.4).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    mean(true) - mean(false)
}

#[test]
fn generation_is_byte_identical() {
    let spec = SyntheticSpec {
        n_examples: 8,
        seed: 99,
        ..Default::default()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate_synthetic(&spec, a.path()).unwrap();
    generate_synthetic(&spec, b.path()).unwrap();
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 9);
    for name in names {
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert!(x == y, "{name:?} differs");
    }
}

#[test]
fn no_planted_signal_means_chance_auroc() {
    let spec = SyntheticSpec {
        n_examples: 210,
        jag_amplitude: 0.0,
        seed: 17,
        ..Default::default()
    };
    let (manifest, corpus) = synthesize(&spec).unwrap();
    let (tr, va, te) = split_dataset(&manifest, [0.6, 0.1, 0.3], 3).unwrap();
    let parts = corpus.split_like(&[&tr, &va, &te]);
    let cfg = SpectralConfig::new(Operator::FourierHigh);
    let m: Vec<_> = parts.iter().map(|p| p.extract(&cfg, 1).unwrap()).collect();
    assert!(m[2].n_rows() >= 1900);
    let (_, report) = fit_and_evaluate(&m[0], &m[1], &m[2], &TrainConfig::default()).unwrap();
    assert!((0.4..=0.6).contains(&report.auroc), "auroc {}", report.auroc);
}

#[test]
fn unsmoothed_jag_wins_paired_comparisons() {
    let spec = SyntheticSpec {
        n_examples: 40,
        smooth_kernel_width: 1,
        jag_amplitude: 3.0,
        seed: 4,
        ..Default::default()
    };
    let rows = row_energies(&spec);
    let (mut wins, mut total) = (0usize, 0usize);
    // pair each hallucinated row with the nearest grounded step of the same
    // example and head
    for r in rows.iter().filter(|r| r.3) {
        let partner = rows
            .iter()
            .filter(|g| !g.3 && g.0 == r.0 && g.2 == r.2)
            .min_by_key(|g| g.1.abs_diff(r.1));
        if let Some(g) = partner {
            total += 1;
            wins += (r.4 > g.4) as usize;
        }
    }
    assert!(total > 500);
    let frac = wins as f64 / total as f64;
    assert!(frac >= 0.95, "win fraction {frac}");
}

#[test]
fn energy_gap_grows_with_amplitude() {
    let gaps: Vec<f64> = [0.1, 0.3, 1.0]
        .iter()
        .map(|&a| {
            mean_gap(&SyntheticSpec {
                n_examples: 30,
                jag_amplitude: a,
                seed: 8,
                ..Default::default()
            })
        })
        .collect();
    assert!(gaps[0] > 0.0);
    assert!(gaps.windows(2).all(|w| w[1] >= w[0]), "{gaps:?}");
}
