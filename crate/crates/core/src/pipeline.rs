//! Fit and predict on datasets: the glue between kernels, regression,
//! embedding learning and decoding.

use std::collections::HashMap;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};

use crate::dataio::{input_kernel, Inputs, Outputs};
use crate::decode::{decode_iokr, decode_oel, Ranking};
use crate::error::{OelError, Result};
use crate::kernels::KernelSpec;
use crate::krr::{fit_krr, fit_krr_nystrom, select_anchors, KrrModel, SupervisedWeights};
use crate::metrics::{
    f1_example, hamming_sets, kendall_tau, rkhs_loss, topk_accuracy, MetricReport,
};
use crate::oel::{assemble_mixed_gram, fit_subspace, EigMethod, OelModel};

/// Hyperparameters of one fit.
#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub lambda: f64,
    /// Nystrom anchor count; `None` for exact regression.
    pub nystrom_q: Option<usize>,
    pub anchor_seed: u64,
    pub c: f64,
    pub p: usize,
    pub eig: EigMethod,
    /// Skip embedding learning and decode with the plain regressor.
    pub iokr_only: bool,
}

/// Fitted regressor with the training weights it implies.
#[derive(Clone, Debug)]
pub struct Regressor {
    pub krr: KrrModel,
    pub weights: SupervisedWeights,
}

/// Output Gram blocks among supervised (`s`) and unlabeled (`u`) outputs.
#[derive(Clone, Debug)]
pub struct OutputGrams {
    pub k_ss: Array2<f64>,
    pub k_su: Array2<f64>,
    pub k_uu: Array2<f64>,
}

impl OutputGrams {
    pub fn new(kernel: &KernelSpec, y: &Outputs, u: &Outputs) -> Result<Self> {
        let (ys, us) = (y.samples(), u.samples());
        Ok(Self {
            k_ss: kernel.self_gram(&ys)?,
            k_su: kernel.gram(&ys, &us)?,
            k_uu: kernel.self_gram(&us)?,
        })
    }
}

/// A trained model.
#[derive(Clone, Debug)]
pub struct Trained {
    pub krr: KrrModel,
    pub oel: Option<OelModel>,
}

/// Kernel columns of a set of outputs against the training outputs, plus
/// their self-kernels. These are everything decoding needs to know about
/// candidates.
#[derive(Clone, Debug)]
pub struct OutputColumns {
    /// `n x N`
    pub c_s: Array2<f64>,
    /// `m x N`
    pub c_u: Array2<f64>,
    pub norms: Array1<f64>,
}

impl OutputColumns {
    pub fn new(kernel: &KernelSpec, y: &Outputs, u: &Outputs, targets: &Outputs) -> Result<Self> {
        let ts = targets.samples();
        Ok(Self {
            c_s: kernel.gram(&y.samples(), &ts)?,
            c_u: kernel.gram(&u.samples(), &ts)?,
            norms: kernel.self_norms(&ts)?,
        })
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }
}

/// Fit the regressor on `x` (exact or Nystrom).
pub fn fit_regressor(
    kernel: &KernelSpec,
    x: &Inputs,
    lambda: f64,
    nystrom_q: Option<usize>,
    anchor_seed: u64,
) -> Result<Regressor> {
    match nystrom_q {
        None => {
            let k = input_kernel(kernel, x, x)?;
            let krr = fit_krr(k.view(), lambda)?;
            let weights = krr.training_weights(k.view())?;
            Ok(Regressor { krr, weights })
        }
        Some(q) => {
            let anchors = select_anchors(x.len(), q, anchor_seed)?;
            let xq = x.subset(&anchors);
            let k_nq = input_kernel(kernel, x, &xq)?;
            let k_qq = input_kernel(kernel, &xq, &xq)?;
            let krr = fit_krr_nystrom(k_nq.view(), k_qq.view(), lambda, &anchors)?;
            let weights = krr.training_weights(k_nq.view())?;
            Ok(Regressor { krr, weights })
        }
    }
}

/// Learn the embedding on top of a fitted regressor.
pub fn fit_embedding(
    weights: &SupervisedWeights,
    grams: &OutputGrams,
    c: f64,
    p: usize,
    eig: EigMethod,
) -> Result<OelModel> {
    let gram = assemble_mixed_gram(
        weights,
        grams.k_ss.view(),
        grams.k_su.view(),
        grams.k_uu.view(),
        c,
    )?;
    let subspace = fit_subspace(&gram, p, eig)?;
    OelModel::new(subspace, weights, grams.k_ss.view(), grams.k_su.view(), c)
}

/// Full training: regression, then embedding learning unless `iokr_only`.
pub fn fit(
    input: &KernelSpec,
    output: &KernelSpec,
    x: &Inputs,
    y: &Outputs,
    u: &Outputs,
    cfg: &FitConfig,
) -> Result<Trained> {
    if y.len() != x.len() {
        return Err(OelError::dims(
            "supervised outputs vs inputs",
            x.len(),
            y.len(),
        ));
    }
    let reg = fit_regressor(input, x, cfg.lambda, cfg.nystrom_q, cfg.anchor_seed)?;
    let oel = if cfg.iokr_only {
        None
    } else {
        let grams = OutputGrams::new(output, y, u)?;
        Some(fit_embedding(&reg.weights, &grams, cfg.c, cfg.p, cfg.eig)?)
    };
    Ok(Trained { krr: reg.krr, oel })
}

/// Weight columns `alpha(x)` for new inputs, `n x t`.
pub fn test_weights(
    krr: &KrrModel,
    kernel: &KernelSpec,
    x_train: &Inputs,
    x_new: &Inputs,
) -> Result<Array2<f64>> {
    let basis = match krr.anchors() {
        Some(a) => x_train.subset(a),
        None => x_train.clone(),
    };
    let kappa = input_kernel(kernel, x_new, &basis)?.reversed_axes();
    krr.predict_alpha(kappa.view())
}

/// Rank candidates for every query column of `alpha`.
pub fn decode(
    model: &Trained,
    alpha: ArrayView2<'_, f64>,
    cands: &OutputColumns,
    k: usize,
    lists: Option<&[Vec<usize>]>,
) -> Result<Vec<Ranking>> {
    match &model.oel {
        Some(oel) => {
            let z_test = oel.embed_tests(alpha)?;
            let z_cand = oel.embed_candidates(cands.c_s.view(), cands.c_u.view())?;
            decode_oel(z_test.view(), z_cand.view(), cands.norms.view(), k, lists)
        }
        None => decode_iokr(alpha, cands.c_s.view(), cands.norms.view(), k, lists),
    }
}

/// Surrogate errors `||P h(x_j) - psi(y_j)||^2` per query, with `P = I` for
/// a plain regressor. `k_ss` is only used in that case.
pub fn surrogate_errors(
    model: &Trained,
    alpha: ArrayView2<'_, f64>,
    truth: &OutputColumns,
    k_ss: Option<&Array2<f64>>,
) -> Result<Array1<f64>> {
    if truth.len() != alpha.ncols() {
        return Err(OelError::dims(
            "truth outputs vs queries",
            alpha.ncols(),
            truth.len(),
        ));
    }
    let (sq, cross) = match &model.oel {
        Some(oel) => {
            let z = oel.embed_tests(alpha)?;
            let zy = oel.embed_candidates(truth.c_s.view(), truth.c_u.view())?;
            (
                z.mapv(|v| v * v).sum_axis(Axis(0)),
                (&z * &zy).sum_axis(Axis(0)),
            )
        }
        None => {
            let k_ss =
                k_ss.ok_or_else(|| OelError::InvalidInput("surrogate error needs K_ss".into()))?;
            let ka = k_ss.dot(&alpha);
            (
                (&ka * &alpha).sum_axis(Axis(0)),
                (&truth.c_s * &alpha).sum_axis(Axis(0)),
            )
        }
    };
    let mut out = Array1::zeros(sq.len());
    Zip::from(&mut out)
        .and(&sq)
        .and(&cross)
        .and(&truth.norms)
        .for_each(|o, &s, &c, &n| *o = (s - 2.0 * c + n).max(0.0));
    Ok(out)
}

/// Row of `truth[j]` within `candidates`, by exact equality of the stored
/// representation.
pub fn locate(truth: &Outputs, candidates: &Outputs) -> Vec<Option<usize>> {
    match (truth, candidates) {
        (Outputs::Indices(t), Outputs::Indices(c)) => {
            let mut pos = HashMap::new();
            for (i, &v) in c.iter().enumerate() {
                pos.entry(v).or_insert(i);
            }
            t.iter().map(|v| pos.get(v).copied()).collect()
        }
        _ => {
            let rows = |o: &Outputs| -> Vec<Vec<u64>> {
                match o.samples() {
                    crate::kernels::Samples::Features(f) => f
                        .rows()
                        .into_iter()
                        .map(|r| r.iter().map(|v| v.to_bits()).collect())
                        .collect(),
                    crate::kernels::Samples::Indices(_) => Vec::new(),
                }
            };
            let mut pos = HashMap::new();
            for (i, r) in rows(candidates).into_iter().enumerate() {
                pos.entry(r).or_insert(i);
            }
            let t = rows(truth);
            if t.len() != truth.len() {
                return vec![None; truth.len()];
            }
            t.into_iter().map(|r| pos.get(&r).copied()).collect()
        }
    }
}

/// Task metrics for top-1 predictions against the truth, one report per
/// metric applicable to the output kind. `values` are per-query, so the
/// standard error is across queries.
pub fn evaluate_predictions(
    output: &KernelSpec,
    candidates: &Outputs,
    rankings: &[Ranking],
    truth: &Outputs,
) -> Result<Vec<MetricReport>> {
    if rankings.len() != truth.len() {
        return Err(OelError::dims(
            "rankings vs truth",
            truth.len(),
            rankings.len(),
        ));
    }
    let top: Vec<usize> = rankings
        .iter()
        .enumerate()
        .map(|(q, r)| {
            r.top()
                .ok_or_else(|| OelError::InvalidInput(format!("query {q} has an empty ranking")))
        })
        .collect::<Result<_>>()?;
    let pred = candidates.subset(&top);
    let mut reports = vec![MetricReport::from_values(
        "rkhs_loss",
        &pairwise_losses(output, &pred, truth)?,
    )];

    if let (Some(ts), Some(ps), Outputs::Bitsets { sets, .. }) =
        (truth.label_sets(), pred.label_sets(), truth)
    {
        let f1: Vec<f64> = ts.iter().zip(ps).map(|(t, p)| f1_example(t, p)).collect();
        let ham = ts
            .iter()
            .zip(ps)
            .map(|(t, p)| hamming_sets(t, p, sets.dim).map(|h| h as f64))
            .collect::<Result<Vec<_>>>()?;
        reports.push(MetricReport::from_values("f1", &f1));
        reports.push(MetricReport::from_values("hamming", &ham));
    }
    if let (Some(ts), Some(ps)) = (truth.permutations(), pred.permutations()) {
        let tau = ts
            .iter()
            .zip(ps)
            .map(|(t, p)| kendall_tau(t, p))
            .collect::<Result<Vec<_>>>()?;
        reports.push(MetricReport::from_values("kendall_tau", &tau));
    }

    let idx = locate(truth, candidates);
    if idx.iter().any(Option::is_some) {
        let depth = rankings.iter().map(Ranking::len).min().unwrap_or(0);
        for k in [1usize, 5, 10].into_iter().filter(|&k| k <= depth) {
            let hits: Vec<f64> = rankings
                .iter()
                .zip(&idx)
                .map(|(r, t)| match t.and_then(|t| r.rank_of(t)) {
                    Some(rank) if rank <= k => 1.0,
                    _ => 0.0,
                })
                .collect();
            debug_assert_eq!(
                topk_accuracy(rankings, &idx, &[k]).ok().map(|v| v[0]),
                Some(hits.iter().sum::<f64>() / hits.len() as f64)
            );
            reports.push(MetricReport::from_values(format!("top{k}"), &hits));
        }
    }
    Ok(reports)
}

/// `||psi(a_j) - psi(b_j)||^2` for paired outputs.
pub fn pairwise_losses(kernel: &KernelSpec, a: &Outputs, b: &Outputs) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(OelError::dims("paired outputs", a.len(), b.len()));
    }
    let na = kernel.self_norms(&a.samples())?;
    let nb = kernel.self_norms(&b.samples())?;
    (0..a.len())
        .map(|j| {
            let (aj, bj) = (a.subset(&[j]), b.subset(&[j]));
            let k = kernel.gram(&aj.samples(), &bj.samples())?[[0, 0]];
            rkhs_loss(na[j], nb[j], k)
        })
        .collect()
}
