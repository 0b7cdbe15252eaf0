//! Seeded index partitions.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{OelError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SplitScheme {
    /// One split with `round(ratio * n)` training points.
    Holdout { ratio: f64 },
    /// `k` folds of near-equal size; each fold is the validation set once.
    KFold { k: usize },
    /// `reps` independent holdout splits.
    RepeatedSubsample { ratio: f64, reps: usize },
}

/// One (train, validation) pair; both sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
}

fn holdout_size(n: usize, ratio: f64) -> Result<usize> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(OelError::param(
            "ratio",
            format!("must be in (0, 1), got {ratio}"),
        ));
    }
    let n_train = (ratio * n as f64).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(OelError::param(
            "ratio",
            format!("{ratio} of {n} points leaves an empty train or validation set"),
        ));
    }
    Ok(n_train)
}

fn shuffled(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

/// Partition `0..n`. The result depends only on `(scheme, seed, n)`.
pub fn split(n: usize, scheme: SplitScheme, seed: u64) -> Result<Vec<Fold>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match scheme {
        SplitScheme::Holdout { ratio } => {
            let n_train = holdout_size(n, ratio)?;
            let idx = shuffled(n, &mut rng);
            Ok(vec![Fold {
                train: sorted(idx[..n_train].to_vec()),
                val: sorted(idx[n_train..].to_vec()),
            }])
        }
        SplitScheme::RepeatedSubsample { ratio, reps } => {
            if reps == 0 {
                return Err(OelError::param("reps", "must be at least 1"));
            }
            let n_train = holdout_size(n, ratio)?;
            Ok((0..reps)
                .map(|_| {
                    let idx = shuffled(n, &mut rng);
                    Fold {
                        train: sorted(idx[..n_train].to_vec()),
                        val: sorted(idx[n_train..].to_vec()),
                    }
                })
                .collect())
        }
        SplitScheme::KFold { k } => {
            if k < 2 {
                return Err(OelError::param(
                    "folds",
                    format!("need at least 2, got {k}"),
                ));
            }
            if k > n {
                return Err(OelError::param(
                    "folds",
                    format!("{k} folds for only {n} points"),
                ));
            }
            let idx = shuffled(n, &mut rng);
            let (base, extra) = (n / k, n % k);
            let mut start = 0;
            let mut folds = Vec::with_capacity(k);
            for f in 0..k {
                let len = base + usize::from(f < extra);
                let val = sorted(idx[start..start + len].to_vec());
                let train = sorted(
                    idx[..start]
                        .iter()
                        .chain(&idx[start + len..])
                        .copied()
                        .collect(),
                );
                folds.push(Fold { train, val });
                start += len;
            }
            Ok(folds)
        }
    }
}
