use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::{TraceDataset, TraceError};

/// Splits a dataset into train and test by whole simulation runs, so windows
/// never straddle the boundary. `subsample`, when given, keeps the prefix of
/// train runs whose packet count is closest to the requested fraction.
/// Deterministic for a given seed; both halves keep ascending sim_id order.
pub fn make_split(
    dataset: &TraceDataset,
    test_fraction: f64,
    subsample: Option<f64>,
    seed: u64,
) -> Result<(TraceDataset, TraceDataset), TraceError> {
    dataset.validate()?;
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(TraceError::Validation(format!(
            "test_fraction in (0,1), got {test_fraction}"
        )));
    }
    if let Some(f) = subsample {
        if !(f > 0.0 && f <= 1.0) {
            return Err(TraceError::Validation(format!(
                "subsample in (0,1], got {f}"
            )));
        }
    }
    let n_runs = dataset.runs.len();
    let n_test = ((n_runs as f64 * test_fraction).round() as usize).max(1);
    if n_test >= n_runs {
        return Err(TraceError::SplitInfeasible(format!(
            "{n_runs} runs cannot honor test_fraction {test_fraction}"
        )));
    }

    let mut indices: Vec<usize> = (0..n_runs).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let mut test_idx: Vec<usize> = indices[..n_test].to_vec();
    let mut train_idx: Vec<usize> = indices[n_test..].to_vec();
    test_idx.sort_unstable();
    train_idx.sort_unstable();

    let mut train_runs: Vec<_> = train_idx.iter().map(|&i| dataset.runs[i].clone()).collect();
    let test_runs: Vec<_> = test_idx.iter().map(|&i| dataset.runs[i].clone()).collect();

    if let Some(frac) = subsample {
        let total: usize = train_runs.iter().map(|r| r.len()).sum();
        let target = frac * total as f64;
        let mut best_k = 1;
        let mut best_err = f64::INFINITY;
        let mut cum = 0usize;
        for (k, run) in train_runs.iter().enumerate() {
            cum += run.len();
            let err = (cum as f64 - target).abs();
            if err < best_err {
                best_err = err;
                best_k = k + 1;
            }
        }
        train_runs.truncate(best_k);
    }

    let train = TraceDataset::new(train_runs, dataset.meta.clone())?;
    let test = TraceDataset::new(test_runs, dataset.meta.clone())?;
    Ok((train, test))
}
