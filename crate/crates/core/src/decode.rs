//! Candidate-set decoding.
//!
//! A candidate `y` is scored by `||psi(y)||^2 - 2 <prediction, psi(y)>`,
//! the squared RKHS distance to the prediction minus the query-constant
//! `||prediction||^2`. Scores are therefore only comparable within a query.
//! The `k` lowest scores are returned, ties broken by ascending candidate
//! index.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;
use std::io::Write;

use ndarray::{s, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;

use crate::error::{OelError, Result};

/// Number of queries scored per dense block.
const QUERY_BLOCK: usize = 64;

/// Candidates of one query, best first.
#[derive(Clone, Debug, PartialEq)]
pub struct Ranking {
    pub indices: Vec<usize>,
    pub scores: Vec<f64>,
}

impl Ranking {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn top(&self) -> Option<usize> {
        self.indices.first().copied()
    }

    /// 1-based rank of candidate `idx`, if it was retained.
    pub fn rank_of(&self, idx: usize) -> Option<usize> {
        self.indices.iter().position(|&i| i == idx).map(|r| r + 1)
    }
}

#[derive(Clone, Copy, Debug)]
struct Scored {
    score: f64,
    index: usize,
}

impl PartialEq for Scored {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scored {}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scored {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then(self.index.cmp(&other.index))
    }
}

/// Bounded selection of the `k` smallest `(score, index)` pairs.
#[derive(Clone, Debug)]
pub struct TopK {
    k: usize,
    heap: BinaryHeap<Scored>,
}

impl TopK {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    #[inline]
    pub fn push(&mut self, index: usize, score: f64) {
        let item = Scored { score, index };
        if self.heap.len() < self.k {
            self.heap.push(item);
        } else if let Some(worst) = self.heap.peek() {
            if item < *worst {
                self.heap.pop();
                self.heap.push(item);
            }
        }
    }

    pub fn into_ranking(self) -> Ranking {
        let sorted = self.heap.into_sorted_vec();
        Ranking {
            indices: sorted.iter().map(|s| s.index).collect(),
            scores: sorted.iter().map(|s| s.score).collect(),
        }
    }
}

fn check_common(
    left: ArrayView2<'_, f64>,
    right: ArrayView2<'_, f64>,
    self_norms: ArrayView1<'_, f64>,
    k: usize,
    query_cands: Option<&[Vec<usize>]>,
) -> Result<()> {
    if k == 0 {
        return Err(OelError::param("k", "must be at least 1"));
    }
    if left.nrows() != right.nrows() {
        return Err(OelError::dims(
            "decode inner dimension",
            left.nrows(),
            right.nrows(),
        ));
    }
    if right.ncols() != self_norms.len() {
        return Err(OelError::dims(
            "candidate self-norms",
            right.ncols(),
            self_norms.len(),
        ));
    }
    if right.ncols() == 0 {
        return Err(OelError::InvalidInput("empty candidate set".into()));
    }
    if let Some(lists) = query_cands {
        if lists.len() != left.ncols() {
            return Err(OelError::dims(
                "per-query candidate lists",
                left.ncols(),
                lists.len(),
            ));
        }
        let n_cand = right.ncols();
        for (q, list) in lists.iter().enumerate() {
            if list.is_empty() {
                return Err(OelError::InvalidInput(format!(
                    "query {q} has an empty candidate list"
                )));
            }
            if let Some(&bad) = list.iter().find(|&&c| c >= n_cand) {
                return Err(OelError::InvalidInput(format!(
                    "query {q} references candidate {bad} (only {n_cand} candidates)"
                )));
            }
        }
    }
    Ok(())
}

/// Score every query (column of `left`) against every candidate (column of
/// `right`): `self_norms[c] - 2 <left[:, q], right[:, c]>`.
fn decode_inner(
    left: ArrayView2<'_, f64>,
    right: ArrayView2<'_, f64>,
    self_norms: ArrayView1<'_, f64>,
    k: usize,
    query_cands: Option<&[Vec<usize>]>,
) -> Result<Vec<Ranking>> {
    check_common(left, right, self_norms, k, query_cands)?;
    let t = left.ncols();
    let rankings = match query_cands {
        None => {
            let blocks: Vec<usize> = (0..t).step_by(QUERY_BLOCK).collect();
            blocks
                .into_par_iter()
                .flat_map_iter(|start| {
                    let end = (start + QUERY_BLOCK).min(t);
                    let inner = left.slice(s![.., start..end]).t().dot(&right);
                    inner
                        .axis_iter(Axis(0))
                        .map(|row| {
                            let mut top = TopK::new(k);
                            for (c, (&ip, &norm)) in row.iter().zip(self_norms.iter()).enumerate() {
                                top.push(c, norm - 2.0 * ip);
                            }
                            top.into_ranking()
                        })
                        .collect::<Vec<_>>()
                })
                .collect()
        }
        Some(lists) => (0..t)
            .into_par_iter()
            .map(|q| {
                let query = left.column(q);
                let mut top = TopK::new(k);
                for &c in &lists[q] {
                    top.push(c, self_norms[c] - 2.0 * query.dot(&right.column(c)));
                }
                top.into_ranking()
            })
            .collect(),
    };
    Ok(rankings)
}

/// Decode in the learned `p`-dimensional space.
///
/// `z_test` is `p x t` (embedded predictions), `z_cand` is `p x N`
/// (embedded candidates). Cost per query is `O(p N)`.
pub fn decode_oel(
    z_test: ArrayView2<'_, f64>,
    z_cand: ArrayView2<'_, f64>,
    self_norms: ArrayView1<'_, f64>,
    k: usize,
    query_cands: Option<&[Vec<usize>]>,
) -> Result<Vec<Ranking>> {
    decode_inner(z_test, z_cand, self_norms, k, query_cands)
}

/// Decode with the plain regressor.
///
/// `a_test` is `n x t` (weight columns `alpha(x)`), `c_s` is `n x N`
/// (kernel columns of candidates against the training outputs). Cost per
/// query is `O(n N)`.
pub fn decode_iokr(
    a_test: ArrayView2<'_, f64>,
    c_s: ArrayView2<'_, f64>,
    self_norms: ArrayView1<'_, f64>,
    k: usize,
    query_cands: Option<&[Vec<usize>]>,
) -> Result<Vec<Ranking>> {
    decode_inner(a_test, c_s, self_norms, k, query_cands)
}

/// Score a block of candidates starting at global index `offset` into
/// per-query accumulators. Used to stream very large candidate sets.
pub fn accumulate_block(
    left: ArrayView2<'_, f64>,
    right_block: ArrayView2<'_, f64>,
    norms_block: ArrayView1<'_, f64>,
    offset: usize,
    accumulators: &mut [TopK],
) -> Result<()> {
    if left.nrows() != right_block.nrows() {
        return Err(OelError::dims(
            "decode inner dimension",
            left.nrows(),
            right_block.nrows(),
        ));
    }
    if accumulators.len() != left.ncols() || norms_block.len() != right_block.ncols() {
        return Err(OelError::dims(
            "streamed decode block",
            format!(
                "{} queries, {} candidates",
                left.ncols(),
                right_block.ncols()
            ),
            format!(
                "{} accumulators, {} norms",
                accumulators.len(),
                norms_block.len()
            ),
        ));
    }
    let inner: Array2<f64> = left.t().dot(&right_block);
    accumulators
        .par_iter_mut()
        .zip(inner.axis_iter(Axis(0)).into_par_iter())
        .for_each(|(top, row)| {
            for (c, (&ip, &norm)) in row.iter().zip(norms_block.iter()).enumerate() {
                top.push(offset + c, norm - 2.0 * ip);
            }
        });
    Ok(())
}

/// Format with six significant digits, `%g` style.
pub fn format_score(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Write one line per query: the query id, then tab-separated
/// `candidate_id:score` pairs.
pub fn write_rankings<W: Write>(
    mut out: W,
    query_ids: &[String],
    candidate_ids: &[String],
    rankings: &[Ranking],
) -> std::io::Result<()> {
    let mut line = String::new();
    for (qid, ranking) in query_ids.iter().zip(rankings) {
        line.clear();
        line.push_str(qid);
        for (&c, &score) in ranking.indices.iter().zip(&ranking.scores) {
            let _ = write!(line, "\t{}:{}", candidate_ids[c], format_score(score));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// One parsed line of a rankings file.
#[derive(Clone, Debug, PartialEq)]
pub struct RankingLine {
    pub query_id: String,
    pub entries: Vec<(String, f64)>,
}

/// Parse the output of [`write_rankings`].
pub fn parse_rankings(text: &str, origin: &std::path::Path) -> Result<Vec<RankingLine>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let query_id = fields.next().unwrap_or_default().to_string();
        let mut entries = Vec::new();
        for field in fields {
            let (id, score) = field.rsplit_once(':').ok_or_else(|| OelError::Parse {
                file: origin.to_path_buf(),
                line: lineno + 1,
                reason: format!("expected `candidate:score`, got `{field}`"),
            })?;
            let score: f64 = score.parse().map_err(|_| OelError::Parse {
                file: origin.to_path_buf(),
                line: lineno + 1,
                reason: format!("bad score `{score}`"),
            })?;
            entries.push((id.to_string(), score));
        }
        out.push(RankingLine { query_id, entries });
    }
    Ok(out)
}
