//! Decoding cost benchmark.
//!
//! Times the scoring step of both decoders on the same queries: the plain
//! regressor scores `n`-dimensional weight vectors against `n x N` kernel
//! columns, the learned embedding scores `p`-dimensional vectors against
//! `p x N` candidate embeddings. Candidate operands are computed once per
//! candidate set in practice, so their construction is not timed.
//! Candidates are streamed in blocks so `N = 10^5` with `n = 2000` needs
//! only one block of kernel columns in memory; the block's contents are
//! random and reused, which does not change the cost.

use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use oel::decode::{accumulate_block, TopK};
use oel::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub n: usize,
    pub p: usize,
    pub candidates: Vec<usize>,
    pub queries: usize,
    pub block: usize,
    pub repeats: usize,
    pub k: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            p: 100,
            candidates: vec![1_000, 10_000, 100_000],
            queries: 64,
            block: 10_000,
            repeats: 3,
            k: 10,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub p: usize,
    pub candidates: usize,
    pub queries: usize,
    pub iokr_ms_per_query: f64,
    pub oel_ms_per_query: f64,
}

impl BenchRow {
    pub fn speedup(&self) -> f64 {
        self.iokr_ms_per_query / self.oel_ms_per_query
    }
}

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-1.0..1.0))
}

/// Time to score `total` candidates streamed through `right` (`dim x block`).
/// Each block is timed separately and the per-block minimum over `repeats`
/// is summed, so long runs are no more exposed to scheduler noise than short
/// ones.
pub fn time_scoring(
    left: &Array2<f64>,
    right: &Array2<f64>,
    total: usize,
    k: usize,
    repeats: usize,
) -> Result<Duration> {
    let block = right.ncols();
    let norms = Array1::<f64>::ones(block);
    let mut best = vec![Duration::MAX; total.div_ceil(block)];
    for _ in 0..repeats.max(1) {
        let mut acc: Vec<TopK> = (0..left.ncols()).map(|_| TopK::new(k)).collect();
        for (i, slot) in best.iter_mut().enumerate() {
            let offset = i * block;
            let b = block.min(total - offset);
            let r = right.slice(ndarray::s![.., ..b]);
            let start = Instant::now();
            accumulate_block(
                left.view(),
                r,
                norms.slice(ndarray::s![..b]),
                offset,
                &mut acc,
            )?;
            *slot = (*slot).min(start.elapsed());
        }
        std::hint::black_box(acc.into_iter().map(TopK::into_ranking).collect::<Vec<_>>());
    }
    Ok(best.into_iter().sum())
}

pub fn run(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let max_n = cfg.candidates.iter().copied().max().unwrap_or(0);
    let block = cfg.block.min(max_n).max(1);
    let alpha = random(cfg.n, cfg.queries, &mut rng);
    let c_s = random(cfg.n, block, &mut rng);
    let z_test = random(cfg.p, cfg.queries, &mut rng);
    let z_cand = random(cfg.p, block, &mut rng);
    let per_query = |d: Duration| d.as_secs_f64() * 1e3 / cfg.queries as f64;
    cfg.candidates
        .iter()
        .map(|&total| {
            let iokr = time_scoring(&alpha, &c_s, total, cfg.k, cfg.repeats)?;
            let oel = time_scoring(&z_test, &z_cand, total, cfg.k, cfg.repeats)?;
            log::info!(
                "N = {total}: iokr {:.4} ms/query, oel {:.4} ms/query",
                per_query(iokr),
                per_query(oel)
            );
            Ok(BenchRow {
                n: cfg.n,
                p: cfg.p,
                candidates: total,
                queries: cfg.queries,
                iokr_ms_per_query: per_query(iokr),
                oel_ms_per_query: per_query(oel),
            })
        })
        .collect()
}

pub fn format_rows(rows: &[BenchRow]) -> String {
    let mut out =
        String::from("n\tp\tcandidates\tqueries\tiokr_ms_per_query\toel_ms_per_query\tspeedup\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.3}\n",
            r.n,
            r.p,
            r.candidates,
            r.queries,
            r.iokr_ms_per_query,
            r.oel_ms_per_query,
            r.speedup()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_bench_runs() {
        let cfg = BenchConfig {
            n: 50,
            p: 5,
            candidates: vec![100, 300],
            queries: 4,
            block: 128,
            repeats: 1,
            k: 3,
            seed: 1,
        };
        let rows = run(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows
            .iter()
            .all(|r| r.iokr_ms_per_query > 0.0 && r.oel_ms_per_query > 0.0));
        assert_eq!(format_rows(&rows).lines().count(), 3);
    }
}
