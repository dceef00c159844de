use std::fmt::Display;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::regression::percentile;
use super::EconError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub replications: usize,
    pub master_seed: u64,
    /// Statistic on the original sample.
    pub estimate: f64,
    /// 2.5th percentile of successful replicates.
    pub ci_lower: f64,
    /// 97.5th percentile of successful replicates.
    pub ci_upper: f64,
    /// Share of successful replicates with a strictly positive statistic.
    pub fraction_positive: f64,
    pub failures: usize,
    /// Per-replicate statistic in replicate order; `None` marks a failure.
    pub replicates: Vec<Option<f64>>,
}

/// Case-resampling indices for replicate `replicate`. Each replicate draws
/// from its own ChaCha stream keyed by `(master_seed, replicate)`, so the
/// result does not depend on how replicates are scheduled.
pub fn resample_indices(n: usize, master_seed: u64, replicate: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replicate);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Percentile bootstrap of `statistic` over `b` case resamples of `data`.
/// Replicates where the statistic errors are counted in `failures` and left
/// out of the interval and the positive share.
pub fn bootstrap<T, E, F>(data: &[T], statistic: F, b: usize, master_seed: u64) -> Result<BootstrapSummary, EconError>
where
    T: Clone + Sync,
    E: Display,
    F: Fn(&[T]) -> Result<f64, E> + Sync,
{
    if b == 0 || data.is_empty() {
        return Err(EconError::EmptyBootstrap);
    }
    let estimate = statistic(data).map_err(|e| EconError::Statistic(e.to_string()))?;
    let replicates: Vec<Option<f64>> = (0..b as u64)
        .into_par_iter()
        .map(|r| {
            let sample: Vec<T> = resample_indices(data.len(), master_seed, r)
                .into_iter()
                .map(|i| data[i].clone())
                .collect();
            statistic(&sample).ok().filter(|v| !v.is_nan())
        })
        .collect();
    let mut ok: Vec<f64> = replicates.iter().flatten().copied().collect();
    if ok.is_empty() {
        return Err(EconError::AllReplicatesFailed(b));
    }
    let positive = ok.iter().filter(|v| **v > 0.0).count();
    let fraction_positive = positive as f64 / ok.len() as f64;
    ok.sort_by(f64::total_cmp);
    Ok(BootstrapSummary {
        replications: b,
        master_seed,
        estimate,
        ci_lower: percentile(&ok, 2.5),
        ci_upper: percentile(&ok, 97.5),
        fraction_positive,
        failures: b - ok.len(),
        replicates,
    })
}
