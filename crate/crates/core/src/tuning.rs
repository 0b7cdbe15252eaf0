//! Hyperparameter search: repeated subsample validation and nested
//! cross-validation over `(sigma2, q, lambda, p, c)` grids.
//!
//! Unlabeled outputs are shared by every fold and never drawn from the
//! supervised pool, so no validation or test output leaks into training.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::dataio::{split, Fold, Inputs, Outputs, SplitScheme};
use crate::error::{OelError, Result};
use crate::kernels::KernelSpec;
use crate::metrics::MetricReport;
use crate::oel::EigMethod;
use crate::pipeline::{
    decode, evaluate_predictions, fit_embedding, fit_regressor, locate, surrogate_errors,
    test_weights, OutputColumns, OutputGrams, Regressor, Trained,
};
use crate::seed;

/// Validation criterion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Metric {
    /// Mean `||P h(x) - psi(y)||^2`; no decoding.
    SurrogateMse,
    /// Mean RKHS loss of the decoded output.
    RkhsLoss,
    F1,
    Hamming,
    KendallTau,
    /// Top-k accuracy against the candidate set.
    TopK(usize),
}

impl Metric {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "mse" => Metric::SurrogateMse,
            "rkhs_loss" => Metric::RkhsLoss,
            "f1" => Metric::F1,
            "hamming" => Metric::Hamming,
            "kendall_tau" => Metric::KendallTau,
            other => match other.strip_prefix("top").and_then(|k| k.parse().ok()) {
                Some(k) if k >= 1 => Metric::TopK(k),
                _ => {
                    return Err(OelError::param(
                        "tune.metric",
                        format!(
                        "unknown metric `{other}` (mse, rkhs_loss, f1, hamming, kendall_tau, topK)"
                    ),
                    ))
                }
            },
        })
    }

    pub fn name(&self) -> String {
        match self {
            Metric::SurrogateMse => "mse".into(),
            Metric::RkhsLoss => "rkhs_loss".into(),
            Metric::F1 => "f1".into(),
            Metric::Hamming => "hamming".into(),
            Metric::KendallTau => "kendall_tau".into(),
            Metric::TopK(k) => format!("top{k}"),
        }
    }

    pub fn minimize(&self) -> bool {
        matches!(
            self,
            Metric::SurrogateMse | Metric::RkhsLoss | Metric::Hamming
        )
    }

    fn decode_depth(&self) -> usize {
        match self {
            Metric::TopK(k) => *k,
            _ => 1,
        }
    }
}

/// One hyperparameter setting.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    /// Input kernel width; `None` keeps the configured kernel.
    pub input_sigma2: Option<f64>,
    pub nystrom_q: Option<usize>,
    pub lambda: f64,
    pub p: usize,
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchSpace {
    pub input_sigma2: Vec<f64>,
    pub nystrom_q: Vec<usize>,
    pub lambda: Vec<f64>,
    pub p: Vec<usize>,
    pub c: Vec<f64>,
}

impl SearchSpace {
    /// `lambda` in `10^-7 .. 10^0`, `p` in `2, 4, 8, ...` up to `n + m`
    /// (plus `n + m` itself), `c` in `{0, 0.25, 0.5, 0.75, 1}`.
    pub fn default_for(n: usize, m: usize) -> Self {
        let dim = n + m;
        let mut p: Vec<usize> = std::iter::successors(Some(2usize), |&v| Some(v * 2))
            .take_while(|&v| v < dim)
            .collect();
        p.push(dim);
        let c = if m == 0 {
            vec![1.0]
        } else {
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        };
        Self {
            input_sigma2: Vec::new(),
            nystrom_q: Vec::new(),
            lambda: (0..8).map(|e| 10f64.powi(e - 7)).collect(),
            p,
            c,
        }
    }

    /// Check the grids and cap `p` at `max_dim`. `c < 1` needs `m > 0`.
    pub fn validated(&self, max_dim: usize, m: usize) -> Result<SearchSpace> {
        if self.lambda.is_empty() || self.p.is_empty() || self.c.is_empty() {
            return Err(OelError::param(
                "tune",
                "lambda, p and c grids must be nonempty",
            ));
        }
        if let Some(l) = self.lambda.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(OelError::param(
                "tune.lambda",
                format!("grid value {l} is not > 0"),
            ));
        }
        if let Some(c) = self.c.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(OelError::param(
                "tune.c",
                format!("grid value {c} is outside [0, 1]"),
            ));
        }
        if m == 0 && self.c.iter().any(|&c| c < 1.0) {
            return Err(OelError::param(
                "tune.c",
                "values below 1 need unlabeled outputs",
            ));
        }
        if self.p.contains(&0) {
            return Err(OelError::param("tune.p", "grid values must be >= 1"));
        }
        let mut p: Vec<usize> = self.p.iter().map(|&v| v.min(max_dim)).collect();
        if p != self.p {
            log::warn!("p grid capped at {max_dim}");
        }
        p.dedup();
        Ok(SearchSpace { p, ..self.clone() })
    }

    /// Grid points in a fixed order: width, anchors, lambda, then p and c
    /// innermost, so points sharing a regressor are contiguous.
    pub fn points(&self) -> Vec<GridPoint> {
        let sig: Vec<Option<f64>> = if self.input_sigma2.is_empty() {
            vec![None]
        } else {
            self.input_sigma2.iter().copied().map(Some).collect()
        };
        let qs: Vec<Option<usize>> = if self.nystrom_q.is_empty() {
            vec![None]
        } else {
            self.nystrom_q.iter().copied().map(Some).collect()
        };
        let mut out = Vec::new();
        for &s in &sig {
            for &q in &qs {
                for &lambda in &self.lambda {
                    for &p in &self.p {
                        for &c in &self.c {
                            out.push(GridPoint {
                                input_sigma2: s,
                                nystrom_q: q,
                                lambda,
                                p,
                                c,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// Everything fixed during a search.
#[derive(Clone, Copy, Debug)]
pub struct Problem<'a> {
    pub input_kernel: &'a KernelSpec,
    pub output_kernel: &'a KernelSpec,
    /// Supervised pool.
    pub x: &'a Inputs,
    pub y: &'a Outputs,
    /// Unlabeled outputs, shared by every fold.
    pub u: &'a Outputs,
    /// Candidates for decoded metrics.
    pub candidates: &'a Outputs,
    pub eig: EigMethod,
    pub iokr_only: bool,
    /// Reuse one regressor across all `(p, c)` sharing `(sigma2, q, lambda)`.
    pub share_krr: bool,
    pub seed: u64,
}

/// One row of the result table.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    /// `search`, `inner` or `outer`.
    pub stage: &'static str,
    pub outer_fold: Option<usize>,
    pub point: usize,
    pub params: GridPoint,
    pub rep: usize,
    pub score: std::result::Result<f64, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointSummary {
    pub point: usize,
    pub params: GridPoint,
    /// `None` if any repetition failed.
    pub report: Option<MetricReport>,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub metric: Metric,
    pub rows: Vec<TableRow>,
    pub summaries: Vec<PointSummary>,
    pub best: usize,
}

impl SearchResult {
    pub fn best_params(&self) -> &GridPoint {
        &self.summaries[self.best].params
    }

    pub fn best_score(&self) -> f64 {
        self.summaries[self.best]
            .report
            .as_ref()
            .expect("best point succeeded")
            .mean
    }
}

#[derive(Clone, Debug)]
pub struct OuterFold {
    pub fold: usize,
    pub selected: GridPoint,
    pub inner_score: f64,
    pub test_score: f64,
}

#[derive(Clone, Debug)]
pub struct NestedResult {
    pub metric: Metric,
    pub folds: Vec<OuterFold>,
    pub rows: Vec<TableRow>,
    pub report: MetricReport,
}

fn input_kernel_for(problem: &Problem<'_>, point: &GridPoint) -> Result<KernelSpec> {
    match point.input_sigma2 {
        Some(s) => problem.input_kernel.with_sigma2(s),
        None => Ok(problem.input_kernel.clone()),
    }
}

/// Per-fold material that does not depend on hyperparameters.
struct FoldData {
    x_train: Inputs,
    x_val: Inputs,
    grams: OutputGrams,
    truth: OutputColumns,
    cands: Option<OutputColumns>,
    truth_outputs: Outputs,
    truth_idx: Vec<Option<usize>>,
}

impl FoldData {
    fn new(problem: &Problem<'_>, fold: &Fold, metric: Metric) -> Result<Self> {
        let y_train = problem.y.subset(&fold.train);
        let y_val = problem.y.subset(&fold.val);
        let ky = problem.output_kernel;
        let grams = OutputGrams::new(ky, &y_train, problem.u)?;
        let truth = OutputColumns::new(ky, &y_train, problem.u, &y_val)?;
        let cands = match metric {
            Metric::SurrogateMse => None,
            _ => Some(OutputColumns::new(
                ky,
                &y_train,
                problem.u,
                problem.candidates,
            )?),
        };
        let truth_idx = match metric {
            Metric::TopK(_) => locate(&y_val, problem.candidates),
            _ => Vec::new(),
        };
        Ok(Self {
            x_train: problem.x.subset(&fold.train),
            x_val: problem.x.subset(&fold.val),
            grams,
            truth,
            cands,
            truth_outputs: y_val,
            truth_idx,
        })
    }
}

fn fit_point_regressor(
    problem: &Problem<'_>,
    data: &FoldData,
    point: &GridPoint,
) -> Result<(Regressor, ndarray::Array2<f64>)> {
    let kx = input_kernel_for(problem, point)?;
    let reg = fit_regressor(
        &kx,
        &data.x_train,
        point.lambda,
        point.nystrom_q,
        seed::derive(problem.seed, seed::ANCHORS),
    )?;
    let alpha = test_weights(&reg.krr, &kx, &data.x_train, &data.x_val)?;
    Ok((reg, alpha))
}

fn score_point(
    problem: &Problem<'_>,
    data: &FoldData,
    point: &GridPoint,
    metric: Metric,
    reg: &Regressor,
    alpha: &ndarray::Array2<f64>,
) -> Result<f64> {
    let oel = if problem.iokr_only {
        None
    } else {
        Some(fit_embedding(
            &reg.weights,
            &data.grams,
            point.c,
            point.p,
            problem.eig,
        )?)
    };
    let model = Trained {
        krr: reg.krr.clone(),
        oel,
    };
    if metric == Metric::SurrogateMse {
        let e = surrogate_errors(&model, alpha.view(), &data.truth, Some(&data.grams.k_ss))?;
        return Ok(e.mean().unwrap_or(f64::NAN));
    }
    let cands = data
        .cands
        .as_ref()
        .expect("decoded metrics precompute candidates");
    let depth = metric.decode_depth().min(cands.len());
    let rankings = decode(&model, alpha.view(), cands, depth, None)?;
    if let Metric::TopK(k) = metric {
        let hits = rankings
            .iter()
            .zip(&data.truth_idx)
            .filter(|(r, t)| matches!(t.and_then(|t| r.rank_of(t)), Some(rank) if rank <= k))
            .count();
        return Ok(hits as f64 / rankings.len() as f64);
    }
    let reports = evaluate_predictions(
        problem.output_kernel,
        problem.candidates,
        &rankings,
        &data.truth_outputs,
    )?;
    let name = metric.name();
    reports
        .iter()
        .find(|r| r.name == name)
        .map(|r| r.mean)
        .ok_or_else(|| {
            OelError::param(
                "tune.metric",
                format!("`{name}` does not apply to these outputs"),
            )
        })
}

/// Scores of every point on one fold, in point order.
fn evaluate_fold(
    problem: &Problem<'_>,
    points: &[GridPoint],
    fold: &Fold,
    metric: Metric,
) -> Vec<std::result::Result<f64, String>> {
    let data = match FoldData::new(problem, fold, metric) {
        Ok(d) => d,
        Err(e) => return vec![Err(e.to_string()); points.len()],
    };
    if problem.share_krr {
        // Group contiguous points with the same regressor settings.
        let mut groups: Vec<(usize, usize)> = Vec::new();
        for (i, p) in points.iter().enumerate() {
            match groups.last_mut() {
                Some((start, end))
                    if {
                        let q = &points[*start];
                        q.input_sigma2 == p.input_sigma2
                            && q.nystrom_q == p.nystrom_q
                            && q.lambda == p.lambda
                    } =>
                {
                    *end = i + 1
                }
                _ => groups.push((i, i + 1)),
            }
        }
        groups
            .par_iter()
            .flat_map_iter(|&(start, end)| {
                let shared = fit_point_regressor(problem, &data, &points[start]);
                (start..end)
                    .map(|i| match &shared {
                        Ok((reg, alpha)) => {
                            score_point(problem, &data, &points[i], metric, reg, alpha)
                        }
                        Err(e) => Err(OelError::InvalidInput(e.to_string())),
                    })
                    .map(|r| r.map_err(|e| e.to_string()))
                    .collect::<Vec<_>>()
            })
            .collect()
    } else {
        points
            .par_iter()
            .map(|p| {
                let (reg, alpha) = fit_point_regressor(problem, &data, p)?;
                score_point(problem, &data, p, metric, &reg, &alpha)
            })
            .map(|r| r.map_err(|e| e.to_string()))
            .collect()
    }
}

fn better(metric: Metric, a: (f64, &GridPoint), b: (f64, &GridPoint)) -> bool {
    if a.0 != b.0 {
        return if metric.minimize() {
            a.0 < b.0
        } else {
            a.0 > b.0
        };
    }
    if a.1.p != b.1.p {
        return a.1.p < b.1.p;
    }
    a.1.lambda > b.1.lambda
}

/// Grid search over `folds` (global pool indices).
fn search_on_folds(
    problem: &Problem<'_>,
    points: &[GridPoint],
    folds: &[Fold],
    metric: Metric,
    stage: &'static str,
    outer_fold: Option<usize>,
) -> Result<SearchResult> {
    let per_fold: Vec<_> = folds
        .iter()
        .map(|f| evaluate_fold(problem, points, f, metric))
        .collect();
    let mut rows = Vec::with_capacity(points.len() * folds.len());
    for (pi, params) in points.iter().enumerate() {
        for (rep, scores) in per_fold.iter().enumerate() {
            rows.push(TableRow {
                stage,
                outer_fold,
                point: pi,
                params: params.clone(),
                rep,
                score: scores[pi].clone(),
            });
        }
    }
    let summaries: Vec<PointSummary> = points
        .iter()
        .enumerate()
        .map(|(pi, params)| {
            let scores: Option<Vec<f64>> = rows
                .iter()
                .filter(|r| r.point == pi)
                .map(|r| r.score.as_ref().ok().copied().filter(|s| s.is_finite()))
                .collect();
            PointSummary {
                point: pi,
                params: params.clone(),
                report: scores.map(|s| MetricReport::from_values(metric.name(), &s)),
            }
        })
        .collect();
    let mut best: Option<usize> = None;
    for s in &summaries {
        if let Some(r) = &s.report {
            let take = match best {
                None => true,
                Some(b) => {
                    let bs = &summaries[b];
                    better(
                        metric,
                        (r.mean, &s.params),
                        (bs.report.as_ref().expect("scored").mean, &bs.params),
                    )
                }
            };
            if take {
                best = Some(s.point);
            }
        }
    }
    for r in rows.iter().filter(|r| r.score.is_err()) {
        log::warn!(
            "grid point {} rep {} failed: {}",
            r.point,
            r.rep,
            r.score.as_ref().unwrap_err()
        );
    }
    let best = best.ok_or(OelError::AllGridPointsFailed(points.len()))?;
    Ok(SearchResult {
        metric,
        rows,
        summaries,
        best,
    })
}

fn prepared_points(
    problem: &Problem<'_>,
    space: &SearchSpace,
    min_train: usize,
) -> Result<Vec<GridPoint>> {
    let space = space.validated(min_train + problem.u.len(), problem.u.len())?;
    let mut points = space.points();
    if problem.iokr_only {
        // p and c are unused without the embedding.
        points.dedup_by(|a, b| {
            a.input_sigma2 == b.input_sigma2 && a.nystrom_q == b.nystrom_q && a.lambda == b.lambda
        });
        for p in &mut points {
            p.p = 0;
            p.c = 1.0;
        }
    }
    Ok(points)
}

fn check_problem(problem: &Problem<'_>) -> Result<()> {
    if problem.x.len() != problem.y.len() {
        return Err(OelError::dims(
            "supervised outputs vs inputs",
            problem.x.len(),
            problem.y.len(),
        ));
    }
    Ok(())
}

/// Repeated random subsample validation: `reps` splits with `ratio` of the
/// pool for training, best mean score wins.
pub fn grid_search_ssv(
    problem: &Problem<'_>,
    space: &SearchSpace,
    reps: usize,
    ratio: f64,
    metric: Metric,
) -> Result<SearchResult> {
    check_problem(problem)?;
    let folds = split(
        problem.x.len(),
        SplitScheme::RepeatedSubsample { ratio, reps },
        seed::derive(problem.seed, seed::SPLITS),
    )?;
    let points = prepared_points(problem, space, folds[0].train.len())?;
    search_on_folds(problem, &points, &folds, metric, "search", None)
}

/// Scores of fixed settings over `folds` of the pool, without selection.
pub fn cross_validate(
    problem: &Problem<'_>,
    point: &GridPoint,
    folds: &[Fold],
    metric: Metric,
) -> Result<Vec<f64>> {
    folds
        .iter()
        .map(|f| {
            evaluate_fold(problem, std::slice::from_ref(point), f, metric)
                .pop()
                .expect("one point")
                .map_err(OelError::InvalidInput)
        })
        .collect()
}

/// Outer folds for nested CV, as used by [`nested_cv`].
pub fn outer_folds(n: usize, outer: usize, root_seed: u64) -> Result<Vec<Fold>> {
    split(
        n,
        SplitScheme::KFold { k: outer },
        seed::derive(root_seed, seed::SPLITS),
    )
}

/// Nested cross-validation: an inner `inner`-fold grid search on each outer
/// training part selects the settings evaluated once on the outer fold.
pub fn nested_cv(
    problem: &Problem<'_>,
    space: &SearchSpace,
    outer: usize,
    inner: usize,
    metric: Metric,
) -> Result<NestedResult> {
    check_problem(problem)?;
    let folds = outer_folds(problem.x.len(), outer, problem.seed)?;
    let mut rows = Vec::new();
    let mut out = Vec::with_capacity(folds.len());
    for (fi, of) in folds.iter().enumerate() {
        let inner_seed = seed::derive(problem.seed, &format!("{}/inner{fi}", seed::SPLITS));
        let local = split(of.train.len(), SplitScheme::KFold { k: inner }, inner_seed)?;
        let mapped: Vec<Fold> = local
            .iter()
            .map(|f| Fold {
                train: f.train.iter().map(|&i| of.train[i]).collect(),
                val: f.val.iter().map(|&i| of.train[i]).collect(),
            })
            .collect();
        let points = prepared_points(
            problem,
            space,
            mapped.iter().map(|f| f.train.len()).min().unwrap_or(0),
        )?;
        let res = search_on_folds(problem, &points, &mapped, metric, "inner", Some(fi))?;
        let selected = res.best_params().clone();
        let test = evaluate_fold(problem, std::slice::from_ref(&selected), of, metric)
            .pop()
            .expect("one point");
        rows.extend(res.rows.iter().cloned());
        rows.push(TableRow {
            stage: "outer",
            outer_fold: Some(fi),
            point: res.best,
            params: selected.clone(),
            rep: 0,
            score: test.clone(),
        });
        let test_score =
            test.map_err(|e| OelError::InvalidInput(format!("outer fold {fi}: {e}")))?;
        out.push(OuterFold {
            fold: fi,
            selected,
            inner_score: res.best_score(),
            test_score,
        });
    }
    let scores: Vec<f64> = out.iter().map(|f| f.test_score).collect();
    Ok(NestedResult {
        metric,
        report: MetricReport::from_values(metric.name(), &scores),
        folds: out,
        rows,
    })
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Tab-separated result table, one row per (point, repetition).
pub fn format_rows(rows: &[TableRow], metric: Metric) -> String {
    let mut out = format!(
        "stage\touter_fold\tpoint\tinput_sigma2\tnystrom_q\tlambda\tp\tc\trep\t{}\terror\n",
        metric.name()
    );
    for r in rows {
        let (score, err) = match &r.score {
            Ok(s) => (s.to_string(), String::new()),
            Err(e) => (String::new(), e.replace(['\t', '\n'], " ")),
        };
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.stage,
            fmt_opt(r.outer_fold),
            r.point,
            fmt_opt(r.params.input_sigma2),
            fmt_opt(r.params.nystrom_q),
            r.params.lambda,
            r.params.p,
            r.params.c,
            r.rep,
            score,
            err
        );
    }
    out
}
