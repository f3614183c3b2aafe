use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::manifest::DumpManifest;
use crate::error::{Error, Result};

/// Validation carve-out used when no validation split is supplied.
pub const DEFAULT_VALIDATION_FRACTION: f64 = 0.1;

/// Partitions `0..n` into three index sets of sizes `round(r0 n)`,
/// `round(r1 n)` and the remainder, after a seeded shuffle. Each set is
/// returned in ascending order.
pub fn split_indices(n: usize, ratios: [f64; 3], seed: u64) -> Result<[Vec<usize>; 3]> {
    if ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "split ratios {ratios:?} must be non-negative and sum to 1"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((ratios[0] * n as f64).round() as usize).min(n);
    let n_val = ((ratios[1] * n as f64).round() as usize).min(n - n_train);
    let mut parts = [
        order[..n_train].to_vec(),
        order[n_train..n_train + n_val].to_vec(),
        order[n_train + n_val..].to_vec(),
    ];
    parts.iter_mut().for_each(|p| p.sort_unstable());
    Ok(parts)
}

/// Example-level train/validation/test split.
pub fn split_dataset(
    manifest: &DumpManifest,
    ratios: [f64; 3],
    seed: u64,
) -> Result<(DumpManifest, DumpManifest, DumpManifest)> {
    let [a, b, c] = split_indices(manifest.examples.len(), ratios, seed)?;
    let pick = |idx: Vec<usize>| manifest.with_examples(idx.into_iter().map(|i| manifest.examples[i].clone()).collect());
    Ok((pick(a), pick(b), pick(c)))
}
