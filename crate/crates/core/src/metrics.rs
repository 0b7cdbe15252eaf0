//! Task losses and scores.

use crate::decode::Ranking;
use crate::error::{OelError, Result};
use crate::kernels::Permutation;

/// Squared RKHS distance `k(y,y) + k(p,p) - 2 k(y,p)`.
///
/// Values down to `-1e-10` are rounding and clamp to zero; anything below
/// `-1e-8` means the three kernel values cannot come from one PSD kernel.
pub fn rkhs_loss(k_yy: f64, k_pp: f64, k_yp: f64) -> Result<f64> {
    let loss = k_yy + k_pp - 2.0 * k_yp;
    if loss < -1e-8 {
        return Err(OelError::InvalidInput(format!(
            "negative RKHS distance {loss:.3e}: inconsistent kernel values"
        )));
    }
    Ok(loss.max(0.0))
}

/// Example-based F1 between two label sets given as sorted or unsorted
/// index lists. Two empty sets score 1.
pub fn f1_example(truth: &[usize], pred: &[usize]) -> f64 {
    if truth.is_empty() && pred.is_empty() {
        return 1.0;
    }
    let mut t = truth.to_vec();
    t.sort_unstable();
    t.dedup();
    let mut p = pred.to_vec();
    p.sort_unstable();
    p.dedup();
    let (mut i, mut j, mut common) = (0, 0, 0usize);
    while i < t.len() && j < p.len() {
        match t[i].cmp(&p[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    2.0 * common as f64 / (t.len() + p.len()) as f64
}

/// Mean example-based F1 over a test set.
pub fn f1_mean(truth: &[Vec<usize>], pred: &[Vec<usize>]) -> Result<f64> {
    if truth.len() != pred.len() {
        return Err(OelError::dims("f1 example count", truth.len(), pred.len()));
    }
    if truth.is_empty() {
        return Err(OelError::InvalidInput("f1 over an empty test set".into()));
    }
    let total: f64 = truth.iter().zip(pred).map(|(t, p)| f1_example(t, p)).sum();
    Ok(total / truth.len() as f64)
}

/// Fraction of queries whose true candidate is ranked within the top `k`,
/// for every `k` in `ks`.
///
/// A truth index missing from a ranking counts as a miss; if it was not in
/// the query's candidate set at all a warning is logged.
pub fn topk_accuracy(
    rankings: &[Ranking],
    truth: &[Option<usize>],
    ks: &[usize],
) -> Result<Vec<f64>> {
    if rankings.len() != truth.len() {
        return Err(OelError::dims(
            "top-k query count",
            rankings.len(),
            truth.len(),
        ));
    }
    if rankings.is_empty() {
        return Err(OelError::InvalidInput(
            "top-k accuracy over zero queries".into(),
        ));
    }
    let missing = truth.iter().filter(|t| t.is_none()).count();
    if missing > 0 {
        log::warn!(
            "{missing} queries have no true candidate in their candidate set; counted as misses"
        );
    }
    let ranks: Vec<Option<usize>> = rankings
        .iter()
        .zip(truth)
        .map(|(r, t)| t.and_then(|t| r.rank_of(t)))
        .collect();
    Ok(ks
        .iter()
        .map(|&k| {
            let hits = ranks
                .iter()
                .filter(|r| matches!(r, Some(rank) if *rank <= k))
                .count();
            hits as f64 / rankings.len() as f64
        })
        .collect())
}

/// Kendall's tau between two rankings of the same `K >= 2` items.
pub fn kendall_tau(a: &Permutation, b: &Permutation) -> Result<f64> {
    let k = a.len();
    if b.len() != k {
        return Err(OelError::dims("kendall tau length", k, b.len()));
    }
    if k < 2 {
        return Err(OelError::InvalidInput(
            "kendall tau needs at least two items".into(),
        ));
    }
    let (ra, rb) = (a.ranks(), b.ranks());
    let mut balance = 0i64;
    for i in 0..k {
        for j in (i + 1)..k {
            let sa = (ra[j] as i64 - ra[i] as i64).signum();
            let sb = (rb[j] as i64 - rb[i] as i64).signum();
            balance += sa * sb;
        }
    }
    Ok(balance as f64 / (k * (k - 1) / 2) as f64)
}

/// Number of positions where two binary vectors differ.
pub fn hamming(a: &[bool], b: &[bool]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(OelError::dims("hamming length", a.len(), b.len()));
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count())
}

/// Hamming distance between label sets over a universe of `dim` labels.
pub fn hamming_sets(a: &[usize], b: &[usize], dim: usize) -> Result<usize> {
    let to_bits = |s: &[usize]| -> Result<Vec<bool>> {
        let mut bits = vec![false; dim];
        for &i in s {
            if i >= dim {
                return Err(OelError::InvalidInput(format!(
                    "label {i} outside universe of {dim}"
                )));
            }
            bits[i] = true;
        }
        Ok(bits)
    };
    hamming(&to_bits(a)?, &to_bits(b)?)
}

/// Mean and standard error of a metric over repetitions (folds, splits).
#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub name: String,
    pub mean: f64,
    /// `None` with fewer than two repetitions.
    pub std_error: Option<f64>,
    pub repetitions: usize,
}

impl MetricReport {
    pub fn from_values(name: impl Into<String>, values: &[f64]) -> Self {
        let r = values.len();
        let mean = if r == 0 {
            f64::NAN
        } else {
            values.iter().sum::<f64>() / r as f64
        };
        let std_error = (r >= 2).then(|| {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
            (var / r as f64).sqrt()
        });
        Self {
            name: name.into(),
            mean,
            std_error,
            repetitions: r,
        }
    }
}

/// Render reports as an aligned text table.
pub fn format_table(reports: &[MetricReport]) -> String {
    let width = reports
        .iter()
        .map(|r| r.name.len())
        .max()
        .unwrap_or(6)
        .max(6);
    let mut out = format!(
        "{:<width$}  {:>12}  {:>12}  {:>5}\n",
        "metric", "mean", "std_error", "reps"
    );
    for r in reports {
        let se = r
            .std_error
            .map_or_else(|| "-".to_string(), |s| format!("{s:.6}"));
        out.push_str(&format!(
            "{:<width$}  {:>12.6}  {:>12}  {:>5}\n",
            r.name, r.mean, se, r.repetitions
        ));
    }
    out
}

/// Render reports as tab-separated values with a header row.
pub fn format_tsv(reports: &[MetricReport]) -> String {
    let mut out = String::from("metric\tmean\tstd_error\trepetitions\n");
    for r in reports {
        let se = r.std_error.map_or_else(String::new, |s| s.to_string());
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.name, r.mean, se, r.repetitions
        ));
    }
    out
}
