//! Output embedding learning: a `p`-dimensional subspace of the output
//! feature space estimated from regressed training outputs and unlabeled
//! outputs.
//!
//! The spanning vectors are `sqrt(c/n) h(x_i)` for the `n` training inputs
//! and `sqrt((1-c)/m) psi(y_j)` for the `m` unlabeled outputs. Their Gram
//! matrix is diagonalized; the top eigenpairs `(mu_l, u_l)` give the
//! coefficients `beta_l = u_l / sqrt(mu_l)` of an orthonormal basis of the
//! subspace, expressed over the spanning vectors.

use ndarray::{s, Array1, Array2, ArrayView2};

use crate::error::{OelError, Result};
use crate::krr::SupervisedWeights;
use crate::linalg::{
    eig_topk_exact, eig_topk_randomized, symmetrize, DEFAULT_OVERSAMPLE, DEFAULT_POWER_ITERS,
};

/// Eigenvalues below `DROP_THRESHOLD * mu_1` are discarded.
pub const DROP_THRESHOLD: f64 = 1e-10;

/// Gram matrix of the `n + m` scaled spanning vectors.
#[derive(Clone, Debug)]
pub struct MixedGram {
    pub k: Array2<f64>,
    pub n: usize,
    pub m: usize,
    pub c: f64,
}

impl MixedGram {
    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    /// Scaling of the supervised block, the cross blocks and the unlabeled block.
    pub fn scales(&self) -> (f64, f64, f64) {
        block_scales(self.c, self.n, self.m)
    }

    pub fn trace(&self) -> f64 {
        self.k.diag().sum()
    }
}

fn block_scales(c: f64, n: usize, m: usize) -> (f64, f64, f64) {
    let sup = c / n as f64;
    let (cross, unsup) = if m == 0 {
        (0.0, 0.0)
    } else {
        (
            (c * (1.0 - c) / (n as f64 * m as f64)).sqrt(),
            (1.0 - c) / m as f64,
        )
    };
    (sup, cross, unsup)
}

fn check_balance(c: f64, m: usize) -> Result<()> {
    if !(0.0..=1.0).contains(&c) {
        return Err(OelError::param("c", format!("must lie in [0, 1], got {c}")));
    }
    if m == 0 && c != 1.0 {
        return Err(OelError::param(
            "c",
            format!("without unlabeled outputs (m = 0) c must be 1, got {c}"),
        ));
    }
    Ok(())
}

fn shape(a: ArrayView2<'_, f64>) -> String {
    format!("{}x{}", a.nrows(), a.ncols())
}

/// Assemble the mixed Gram matrix
///
/// ```text
/// [ c/n A K_ss A^T                 sqrt(c(1-c)/(nm)) A K_su ]
/// [ sqrt(c(1-c)/(nm)) K_su^T A^T   (1-c)/m K_uu             ]
/// ```
///
/// where row `i` of `A` is `alpha(x_i)`.
pub fn assemble_mixed_gram(
    a: &SupervisedWeights,
    k_ss: ArrayView2<'_, f64>,
    k_su: ArrayView2<'_, f64>,
    k_uu: ArrayView2<'_, f64>,
    c: f64,
) -> Result<MixedGram> {
    let n = a.n();
    let m = k_uu.nrows();
    check_balance(c, m)?;
    if k_ss.dim() != (n, n) {
        return Err(OelError::dims(
            "K_y supervised block",
            format!("{n}x{n}"),
            shape(k_ss),
        ));
    }
    if k_su.dim() != (n, m) {
        return Err(OelError::dims(
            "K_y cross block",
            format!("{n}x{m}"),
            shape(k_su),
        ));
    }
    if k_uu.ncols() != m {
        return Err(OelError::dims(
            "K_y unlabeled block",
            format!("{m}x{m}"),
            shape(k_uu),
        ));
    }
    let (sup, cross, unsup) = block_scales(c, n, m);
    let mut k = Array2::zeros((n + m, n + m));
    if c > 0.0 {
        let a_kss = a.dot(k_ss);
        let k_h = a.dot(a_kss.t());
        k.slice_mut(s![..n, ..n]).assign(&(k_h * sup));
        if m > 0 && c < 1.0 {
            let k_hy = a.dot(k_su) * cross;
            k.slice_mut(s![..n, n..]).assign(&k_hy);
            k.slice_mut(s![n.., ..n]).assign(&k_hy.t());
        }
    }
    if m > 0 && c < 1.0 {
        k.slice_mut(s![n.., n..]).assign(&(&k_uu * unsup));
    }
    symmetrize(&mut k);
    Ok(MixedGram { k, n, m, c })
}

/// Eigensolver used for the subspace estimation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EigMethod {
    Exact,
    Randomized {
        oversample: usize,
        power_iters: usize,
        seed: u64,
    },
}

impl EigMethod {
    pub fn randomized(seed: u64) -> Self {
        EigMethod::Randomized {
            oversample: DEFAULT_OVERSAMPLE,
            power_iters: DEFAULT_POWER_ITERS,
            seed,
        }
    }
}

/// Result of diagonalizing the mixed Gram matrix.
#[derive(Clone, Debug)]
pub struct Subspace {
    /// `(n + m) x p` coefficients, column `l` is `u_l / sqrt(mu_l)`.
    pub beta: Array2<f64>,
    /// Retained eigenvalues, descending and strictly positive.
    pub values: Array1<f64>,
    /// The `p` that was asked for; `values.len()` may be smaller.
    pub requested_p: usize,
}

impl Subspace {
    pub fn p(&self) -> usize {
        self.values.len()
    }

    /// Training embeddings `K beta`: row `k` is the embedding of the `k`-th
    /// scaled spanning vector.
    pub fn training_embedding(&self, gram: &MixedGram) -> Array2<f64> {
        gram.k.dot(&self.beta)
    }

    /// Value of the reconstruction objective
    /// `c/n sum ||(P - I) h(x_i)||^2 + (1-c)/m sum ||(P - I) psi(y_j)||^2`
    /// at the learned projection: `trace(K) - sum_l mu_l`.
    pub fn objective(&self, gram: &MixedGram) -> f64 {
        (gram.trace() - self.values.sum()).max(0.0)
    }
}

/// Diagonalize the mixed Gram matrix and keep the top `p` directions.
///
/// Directions with `mu_l < 1e-10 mu_1` are dropped with a warning, so the
/// effective dimension can be smaller than `p`.
pub fn fit_subspace(gram: &MixedGram, p: usize, method: EigMethod) -> Result<Subspace> {
    let dim = gram.dim();
    if p == 0 || p > dim {
        return Err(OelError::param(
            "p",
            format!("must be in 1..={dim}, got {p}"),
        ));
    }
    let eig = match method {
        EigMethod::Exact => eig_topk_exact(gram.k.view(), p)?,
        EigMethod::Randomized {
            oversample,
            power_iters,
            seed,
        } => {
            // Clip the oversampling at the matrix dimension.
            let oversample = oversample.min(dim - p);
            eig_topk_randomized(gram.k.view(), p, oversample, power_iters, seed)?
        }
    };
    let top = eig.values[0];
    if !(top > 0.0) {
        return Err(OelError::InvalidInput(
            "mixed Gram matrix is zero; no embedding direction can be learned".into(),
        ));
    }
    let keep = eig
        .values
        .iter()
        .take_while(|&&mu| mu >= DROP_THRESHOLD * top)
        .count();
    if keep < p {
        log::warn!("only {keep} of {p} eigenvalues above the drop threshold; effective p = {keep}");
    }
    let values = eig.values.slice(s![..keep]).to_owned();
    let mut beta = eig.vectors.slice(s![.., ..keep]).to_owned();
    for (mut col, &mu) in beta.columns_mut().into_iter().zip(values.iter()) {
        col.mapv_inplace(|v| v / mu.sqrt());
    }
    Ok(Subspace {
        beta,
        values,
        requested_p: p,
    })
}

/// Learned output embedding ready to embed test predictions and candidates.
#[derive(Clone, Debug)]
pub struct OelModel {
    subspace: Subspace,
    c: f64,
    n: usize,
    m: usize,
    /// `sqrt(c/n) A^T beta_top`, `n x p`.
    cand_sup: Array2<f64>,
    /// `sqrt((1-c)/m) beta_bottom`, `m x p`.
    cand_unsup: Array2<f64>,
    /// `K_ss cand_sup + K_su cand_unsup`, `n x p`.
    test_proj: Array2<f64>,
}

impl OelModel {
    /// Precompute the embedding operators from a fitted subspace.
    pub fn new(
        subspace: Subspace,
        weights: &SupervisedWeights,
        k_ss: ArrayView2<'_, f64>,
        k_su: ArrayView2<'_, f64>,
        c: f64,
    ) -> Result<Self> {
        let n = weights.n();
        let m = k_su.ncols();
        check_balance(c, m)?;
        if subspace.beta.nrows() != n + m {
            return Err(OelError::dims("beta rows", n + m, subspace.beta.nrows()));
        }
        if k_ss.dim() != (n, n) || k_su.nrows() != n {
            return Err(OelError::dims(
                "output gram blocks",
                format!("{n}x{n} and {n}x{m}"),
                format!("{} and {}", shape(k_ss), shape(k_su)),
            ));
        }
        let (sup, _, unsup) = block_scales(c, n, m);
        let beta_top = subspace.beta.slice(s![..n, ..]);
        let beta_bot = subspace.beta.slice(s![n.., ..]);
        let cand_sup = weights.t_dot(beta_top) * sup.sqrt();
        let cand_unsup = beta_bot.to_owned() * unsup.sqrt();
        let test_proj = k_ss.dot(&cand_sup) + k_su.dot(&cand_unsup);
        Ok(Self {
            subspace,
            c,
            n,
            m,
            cand_sup,
            cand_unsup,
            test_proj,
        })
    }

    /// Rebuild from stored operators.
    pub fn from_parts(
        subspace: Subspace,
        c: f64,
        cand_sup: Array2<f64>,
        cand_unsup: Array2<f64>,
        test_proj: Array2<f64>,
    ) -> Result<Self> {
        let n = cand_sup.nrows();
        let m = cand_unsup.nrows();
        let p = subspace.p();
        check_balance(c, m)?;
        if subspace.beta.nrows() != n + m
            || cand_sup.ncols() != p
            || cand_unsup.ncols() != p
            || test_proj.dim() != (n, p)
        {
            return Err(OelError::dims(
                "stored embedding operators",
                format!("n={n}, m={m}, p={p}"),
                "inconsistent shapes",
            ));
        }
        Ok(Self {
            subspace,
            c,
            n,
            m,
            cand_sup,
            cand_unsup,
            test_proj,
        })
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    pub fn beta(&self) -> &Array2<f64> {
        &self.subspace.beta
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.subspace.values
    }

    pub fn p(&self) -> usize {
        self.subspace.p()
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn candidate_operators(&self) -> (&Array2<f64>, &Array2<f64>) {
        (&self.cand_sup, &self.cand_unsup)
    }

    pub fn test_operator(&self) -> &Array2<f64> {
        &self.test_proj
    }

    /// Embed candidates from their kernel columns against the supervised
    /// (`n x N`) and unlabeled (`m x N`) training outputs. Returns `p x N`.
    pub fn embed_candidates(
        &self,
        c_s: ArrayView2<'_, f64>,
        c_u: ArrayView2<'_, f64>,
    ) -> Result<Array2<f64>> {
        if c_s.nrows() != self.n {
            return Err(OelError::dims(
                "candidate columns vs supervised outputs",
                self.n,
                c_s.nrows(),
            ));
        }
        if c_u.nrows() != self.m {
            return Err(OelError::dims(
                "candidate columns vs unlabeled outputs",
                self.m,
                c_u.nrows(),
            ));
        }
        if c_s.ncols() != c_u.ncols() {
            return Err(OelError::dims("candidate count", c_s.ncols(), c_u.ncols()));
        }
        let mut z = self.cand_sup.t().dot(&c_s);
        if self.m > 0 {
            z += &self.cand_unsup.t().dot(&c_u);
        }
        Ok(z)
    }

    /// Embed regressed test outputs from their weight columns `alpha(x)`
    /// (`n x t`). Returns `p x t`.
    pub fn embed_tests(&self, a_test: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if a_test.nrows() != self.n {
            return Err(OelError::dims("test weight rows", self.n, a_test.nrows()));
        }
        Ok(self.test_proj.t().dot(&a_test))
    }
}

/// Algorithm-level convenience: assemble, diagonalize, and build the model.
pub fn fit_oel(
    weights: &SupervisedWeights,
    k_ss: ArrayView2<'_, f64>,
    k_su: ArrayView2<'_, f64>,
    k_uu: ArrayView2<'_, f64>,
    c: f64,
    p: usize,
    method: EigMethod,
) -> Result<OelModel> {
    let gram = assemble_mixed_gram(weights, k_ss, k_su, k_uu, c)?;
    let subspace = fit_subspace(&gram, p, method)?;
    OelModel::new(subspace, weights, k_ss, k_su, c)
}
