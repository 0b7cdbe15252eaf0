//! Kernel ridge regression into the output feature space.
//!
//! The regressor is `h(x) = sum_i alpha_i(x) psi(y_i)` with
//! `alpha(x) = (K_x + n lambda I)^{-1} kappa(x)`; only the weight vectors
//! `alpha` are ever computed, the output features stay implicit.

use std::collections::HashSet;

use ndarray::{Array2, ArrayView2};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{OelError, Result};
use crate::linalg::{symmetrize, RegularizedSolver};

/// How the ridge system was solved.
#[derive(Clone, Debug)]
pub enum KrrFit {
    /// Cholesky factor of `K_x + n lambda I`.
    Exact(RegularizedSolver),
    /// Subsampled (Nystrom) normal equations over `anchors`.
    ///
    /// `factor` is `K_nq M^{-1}` with `M = K_qn K_nq + n lambda K_qq`, so that
    /// `alpha(x) = factor * kappa_q(x)`.
    Nystrom {
        anchors: Vec<usize>,
        factor: Array2<f64>,
    },
}

#[derive(Clone, Debug)]
pub struct KrrModel {
    lambda: f64,
    n: usize,
    fit: KrrFit,
}

impl KrrModel {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Number of training points.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn fit(&self) -> &KrrFit {
        &self.fit
    }

    pub fn is_nystrom(&self) -> bool {
        matches!(self.fit, KrrFit::Nystrom { .. })
    }

    /// Anchor indices in Nystrom mode.
    pub fn anchors(&self) -> Option<&[usize]> {
        match &self.fit {
            KrrFit::Nystrom { anchors, .. } => Some(anchors),
            KrrFit::Exact(_) => None,
        }
    }

    /// Rows expected in the test kernel block: `n`, or `q` in Nystrom mode.
    pub fn kernel_rows(&self) -> usize {
        match &self.fit {
            KrrFit::Exact(s) => s.dim(),
            KrrFit::Nystrom { anchors, .. } => anchors.len(),
        }
    }

    /// Rebuild a model from stored parts.
    pub fn from_parts(lambda: f64, n: usize, fit: KrrFit) -> Result<Self> {
        check_lambda(lambda)?;
        let rows = match &fit {
            KrrFit::Exact(s) => s.dim(),
            KrrFit::Nystrom { factor, anchors } => {
                if factor.ncols() != anchors.len() {
                    return Err(OelError::dims(
                        "nystrom factor columns",
                        anchors.len(),
                        factor.ncols(),
                    ));
                }
                factor.nrows()
            }
        };
        if rows != n {
            return Err(OelError::dims("krr model size", n, rows));
        }
        Ok(Self { lambda, n, fit })
    }

    /// `W = (K_x + n lambda I)^{-1}`, exact mode only.
    pub fn materialize_w(&self) -> Result<Array2<f64>> {
        match &self.fit {
            KrrFit::Exact(s) => s.inverse(),
            KrrFit::Nystrom { .. } => Err(OelError::InvalidInput(
                "W is not defined for a Nystrom model".into(),
            )),
        }
    }

    /// Columns `alpha(x_j)` for the test kernel block (`n x t`, or `q x t`
    /// against the anchors in Nystrom mode).
    pub fn predict_alpha(&self, kappa: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if kappa.nrows() != self.kernel_rows() {
            return Err(OelError::dims(
                "test kernel rows",
                self.kernel_rows(),
                kappa.nrows(),
            ));
        }
        match &self.fit {
            KrrFit::Exact(s) => s.solve(kappa),
            KrrFit::Nystrom { factor, .. } => Ok(factor.dot(&kappa)),
        }
    }

    /// `A` with row `i` equal to `alpha(x_i)` for every training input.
    ///
    /// `k_train` is the training Gram `K_x` (exact mode) or the training
    /// columns against the anchors `K_nq` (Nystrom mode).
    pub fn training_weights(&self, k_train: ArrayView2<'_, f64>) -> Result<SupervisedWeights> {
        match &self.fit {
            KrrFit::Exact(s) => {
                if k_train.dim() != (self.n, self.n) {
                    return Err(OelError::dims(
                        "training gram",
                        format!("{0}x{0}", self.n),
                        format!("{}x{}", k_train.nrows(), k_train.ncols()),
                    ));
                }
                let cols = s.solve(k_train)?;
                Ok(SupervisedWeights::Dense(
                    cols.reversed_axes().as_standard_layout().to_owned(),
                ))
            }
            KrrFit::Nystrom { factor, anchors } => {
                if k_train.dim() != (self.n, anchors.len()) {
                    return Err(OelError::dims(
                        "training anchor columns",
                        format!("{}x{}", self.n, anchors.len()),
                        format!("{}x{}", k_train.nrows(), k_train.ncols()),
                    ));
                }
                Ok(SupervisedWeights::LowRank {
                    left: k_train.to_owned(),
                    right: factor.t().to_owned(),
                })
            }
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(OelError::param(
            "lambda",
            format!("must be > 0, got {lambda}"),
        ));
    }
    Ok(())
}

/// Exact KRR on the training Gram matrix.
pub fn fit_krr(k_x: ArrayView2<'_, f64>, lambda: f64) -> Result<KrrModel> {
    check_lambda(lambda)?;
    let n = k_x.nrows();
    if n == 0 {
        return Err(OelError::InvalidInput("empty training set".into()));
    }
    let solver = RegularizedSolver::new(k_x, n as f64 * lambda)?;
    Ok(KrrModel {
        lambda,
        n,
        fit: KrrFit::Exact(solver),
    })
}

/// Nystrom KRR from the training columns `K_nq` against `anchors` and the
/// anchor block `K_qq`.
///
/// Solves the subsampled normal equations
/// `(K_qn K_nq + n lambda K_qq) a = K_qn y` for every output coordinate.
/// If the system is singular, `1e-10 * trace(K_qq) / q` is added to the
/// anchor block once before giving up.
pub fn fit_krr_nystrom(
    k_nq: ArrayView2<'_, f64>,
    k_qq: ArrayView2<'_, f64>,
    lambda: f64,
    anchors: &[usize],
) -> Result<KrrModel> {
    check_lambda(lambda)?;
    let (n, q) = k_nq.dim();
    if q == 0 || q > n {
        return Err(OelError::param(
            "nystrom_q",
            format!("must be in 1..={n}, got {q}"),
        ));
    }
    if anchors.len() != q {
        return Err(OelError::dims("anchor count", q, anchors.len()));
    }
    if k_qq.dim() != (q, q) {
        return Err(OelError::dims(
            "anchor gram",
            format!("{q}x{q}"),
            format!("{}x{}", k_qq.nrows(), k_qq.ncols()),
        ));
    }
    let mut seen = HashSet::with_capacity(q);
    for &a in anchors {
        if a >= n {
            return Err(OelError::InvalidInput(format!(
                "anchor {a} out of range (n = {n})"
            )));
        }
        if !seen.insert(a) {
            return Err(OelError::InvalidInput(format!("duplicate anchor {a}")));
        }
    }
    let reg = n as f64 * lambda;
    let mut m = k_nq.t().dot(&k_nq) + &k_qq * reg;
    symmetrize(&mut m);
    let k_qn = k_nq.t().to_owned();
    let solved = match spd_solve(&m, &k_qn) {
        Ok(x) => x,
        Err(_) => {
            let jitter = 1e-10 * k_qq.diag().sum() / q as f64;
            log::warn!("nystrom anchor block is rank deficient; adding jitter {jitter:.3e}");
            m.diag_mut().mapv_inplace(|v| v + reg * jitter);
            spd_solve(&m, &k_qn)?
        }
    };
    Ok(KrrModel {
        lambda,
        n,
        fit: KrrFit::Nystrom {
            anchors: anchors.to_vec(),
            factor: solved.reversed_axes().as_standard_layout().to_owned(),
        },
    })
}

fn spd_solve(m: &Array2<f64>, rhs: &Array2<f64>) -> Result<Array2<f64>> {
    crate::linalg::cholesky_solve(m.view(), rhs.view())
}

/// Uniform anchor selection without replacement, sorted.
pub fn select_anchors(n: usize, q: usize, seed: u64) -> Result<Vec<usize>> {
    if q == 0 || q > n {
        return Err(OelError::param(
            "nystrom_q",
            format!("must be in 1..={n}, got {q}"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, n, q).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// The matrix `A` whose row `i` is `alpha(x_i)`.
///
/// Exact KRR gives a dense `n x n` matrix; Nystrom KRR gives the rank-`q`
/// product `left * right`.
#[derive(Clone, Debug)]
pub enum SupervisedWeights {
    Dense(Array2<f64>),
    LowRank {
        left: Array2<f64>,
        right: Array2<f64>,
    },
}

impl SupervisedWeights {
    pub fn n(&self) -> usize {
        match self {
            SupervisedWeights::Dense(a) => a.nrows(),
            SupervisedWeights::LowRank { left, .. } => left.nrows(),
        }
    }

    /// `A X`.
    pub fn dot(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        match self {
            SupervisedWeights::Dense(a) => a.dot(&x),
            SupervisedWeights::LowRank { left, right } => left.dot(&right.dot(&x)),
        }
    }

    /// `A^T X`.
    pub fn t_dot(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        match self {
            SupervisedWeights::Dense(a) => a.t().dot(&x),
            SupervisedWeights::LowRank { left, right } => right.t().dot(&left.t().dot(&x)),
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        match self {
            SupervisedWeights::Dense(a) => a.clone(),
            SupervisedWeights::LowRank { left, right } => left.dot(right),
        }
    }
}
