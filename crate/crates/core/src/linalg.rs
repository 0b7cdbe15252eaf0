//! Regularized symmetric solves and top-p symmetric eigendecompositions.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use ndarray_linalg::{Cholesky, Diag, Eigh, SolveTriangular, QR, UPLO};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{OelError, Result};
use crate::kernels::max_asymmetry;

/// Symmetry tolerance accepted by [`RegularizedSolver::new`].
pub const SOLVE_SYMMETRY_TOL: f64 = 1e-8;
/// Eigenvalues in `[-CLAMP_TOL * max(1, mu_max), 0)` are clamped to zero.
pub const CLAMP_TOL: f64 = 1e-10;

pub const DEFAULT_OVERSAMPLE: usize = 10;
pub const DEFAULT_POWER_ITERS: usize = 2;

/// Cholesky factorization of `K + shift * I`.
#[derive(Clone, Debug)]
pub struct RegularizedSolver {
    lower: Array2<f64>,
    shift: f64,
}

impl RegularizedSolver {
    pub fn new(k: ArrayView2<'_, f64>, shift: f64) -> Result<Self> {
        if !(shift.is_finite() && shift > 0.0) {
            return Err(OelError::param(
                "shift",
                format!("must be > 0, got {shift}"),
            ));
        }
        if k.nrows() != k.ncols() {
            return Err(OelError::dims(
                "regularized solve",
                "square matrix",
                format!("{}x{}", k.nrows(), k.ncols()),
            ));
        }
        let max_asym = max_asymmetry(k);
        if max_asym > SOLVE_SYMMETRY_TOL {
            return Err(OelError::NotSymmetric {
                max_asym,
                tol: SOLVE_SYMMETRY_TOL,
            });
        }
        let mut shifted = k.to_owned();
        shifted.diag_mut().mapv_inplace(|v| v + shift);
        match shifted.cholesky(UPLO::Lower) {
            Ok(lower) => Ok(Self { lower, shift }),
            Err(_) => {
                let (index, min_pivot) = first_bad_pivot(shifted.view());
                Err(OelError::Factorization { min_pivot, index })
            }
        }
    }

    /// Rebuild from a stored lower Cholesky factor.
    pub fn from_factor(lower: Array2<f64>, shift: f64) -> Result<Self> {
        if lower.nrows() != lower.ncols() {
            return Err(OelError::dims(
                "cholesky factor",
                "square",
                format!("{}x{}", lower.nrows(), lower.ncols()),
            ));
        }
        Ok(Self { lower, shift })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn factor(&self) -> &Array2<f64> {
        &self.lower
    }

    /// `(K + shift I)^{-1} B`.
    pub fn solve(&self, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if b.nrows() != self.dim() {
            return Err(OelError::dims(
                "regularized solve rhs rows",
                self.dim(),
                b.nrows(),
            ));
        }
        if b.ncols() == 0 {
            return Ok(Array2::zeros((self.dim(), 0)));
        }
        let y = self
            .lower
            .solve_triangular(UPLO::Lower, Diag::NonUnit, &b.to_owned())
            .map_err(lapack("forward substitution"))?;
        self.lower
            .t()
            .solve_triangular(UPLO::Upper, Diag::NonUnit, &y)
            .map_err(lapack("back substitution"))
    }

    pub fn solve_vec(&self, b: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        let col = b.to_owned().insert_axis(Axis(1));
        Ok(self.solve(col.view())?.column(0).to_owned())
    }

    /// Materialize `(K + shift I)^{-1}`.
    pub fn inverse(&self) -> Result<Array2<f64>> {
        self.solve(Array2::eye(self.dim()).view())
    }
}

/// Solve `M X = B` for symmetric positive definite `M`.
pub fn cholesky_solve(m: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if m.nrows() != b.nrows() {
        return Err(OelError::dims(
            "cholesky solve rhs rows",
            m.nrows(),
            b.nrows(),
        ));
    }
    let lower = m.cholesky(UPLO::Lower).map_err(|_| {
        let (index, min_pivot) = first_bad_pivot(m);
        OelError::Factorization { min_pivot, index }
    })?;
    let y = lower
        .solve_triangular(UPLO::Lower, Diag::NonUnit, &b.to_owned())
        .map_err(lapack("forward substitution"))?;
    lower
        .t()
        .solve_triangular(UPLO::Upper, Diag::NonUnit, &y)
        .map_err(lapack("back substitution"))
}

fn lapack(context: &'static str) -> impl Fn(ndarray_linalg::error::LinalgError) -> OelError {
    move |e| OelError::Lapack {
        context,
        detail: e.to_string(),
    }
}

/// Unblocked Cholesky run to locate the first non-positive pivot; only used
/// to report a failure LAPACK already detected.
fn first_bad_pivot(a: ArrayView2<'_, f64>) -> (usize, f64) {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > 0.0) {
            return (j, d);
        }
        let dj = d.sqrt();
        l[[j, j]] = dj;
        for i in (j + 1)..n {
            let mut v = a[[i, j]];
            for k in 0..j {
                v -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = v / dj;
        }
    }
    (n, f64::NAN)
}

/// Top eigenpairs of a symmetric PSD matrix, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct EigPair {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

impl EigPair {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_rank(k: ArrayView2<'_, f64>, p: usize) -> Result<()> {
    if k.nrows() != k.ncols() {
        return Err(OelError::dims(
            "eigendecomposition",
            "square matrix",
            format!("{}x{}", k.nrows(), k.ncols()),
        ));
    }
    if p == 0 || p > k.nrows() {
        return Err(OelError::param(
            "p",
            format!("must be in 1..={}, got {p}", k.nrows()),
        ));
    }
    Ok(())
}

/// Full symmetric eigendecomposition, descending, without clamping.
fn eigh_desc(k: ArrayView2<'_, f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let (vals, vecs) = k
        .eigh(UPLO::Upper)
        .map_err(lapack("symmetric eigensolver"))?;
    let n = vals.len();
    let order: Vec<usize> = (0..n).rev().collect();
    let values = order.iter().map(|&i| vals[i]).collect();
    let vectors = vecs.select(Axis(1), &order);
    Ok((values, vectors))
}

/// Clamp tiny negative eigenvalues, reject real negatives, fix column signs.
fn finish(mut values: Array1<f64>, mut vectors: Array2<f64>, spectrum_min: f64) -> Result<EigPair> {
    let top = values.first().copied().unwrap_or(0.0);
    let tol = CLAMP_TOL * top.abs().max(1.0);
    if spectrum_min < -tol {
        return Err(OelError::NegativeEigenvalue {
            value: spectrum_min,
        });
    }
    values.mapv_inplace(|v| v.max(0.0));
    fix_signs(&mut vectors);
    Ok(EigPair { values, vectors })
}

/// Make the largest-magnitude entry of every column positive.
/// Ties go to the first such entry.
pub fn fix_signs(vectors: &mut Array2<f64>) {
    for mut col in vectors.columns_mut() {
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for &v in col.iter() {
            if v.abs() > best {
                best = v.abs();
                sign = v.signum();
            }
        }
        if sign < 0.0 {
            col.mapv_inplace(|v| -v);
        }
    }
}

/// The `p` largest eigenpairs of a symmetric PSD matrix.
pub fn eig_topk_exact(k: ArrayView2<'_, f64>, p: usize) -> Result<EigPair> {
    check_rank(k, p)?;
    let (values, vectors) = eigh_desc(k)?;
    let spectrum_min = values[values.len() - 1];
    finish(
        values.slice(s![..p]).to_owned(),
        vectors.slice(s![.., ..p]).to_owned(),
        spectrum_min,
    )
}

/// Orthonormal basis of the column space via Householder QR.
fn orthonormalize(y: &Array2<f64>) -> Result<Array2<f64>> {
    let (q, _) = y.qr().map_err(lapack("QR"))?;
    Ok(q)
}

/// Randomized range-finder eigendecomposition.
///
/// A Gaussian test matrix of width `p + oversample` (drawn from ChaCha8
/// seeded with `seed`) is pushed through `K`, followed by `power_iters`
/// rounds of re-orthonormalized subspace iteration, each applying `K` twice,
/// so the sampled range is that of `K^(2 q + 1) Omega`. The Rayleigh-Ritz
/// projection `Q^T K Q` is then diagonalized exactly and truncated to `p`.
pub fn eig_topk_randomized(
    k: ArrayView2<'_, f64>,
    p: usize,
    oversample: usize,
    power_iters: usize,
    seed: u64,
) -> Result<EigPair> {
    check_rank(k, p)?;
    let n = k.nrows();
    let width = p + oversample;
    if width > n {
        return Err(OelError::param(
            "oversample",
            format!("sketch width p + oversample = {width} exceeds dimension {n}"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = Array2::from_shape_simple_fn((n, width), || {
        let z: f64 = StandardNormal.sample(&mut rng);
        z
    });
    let mut q = orthonormalize(&k.dot(&omega))?;
    for _ in 0..power_iters {
        q = orthonormalize(&k.dot(&q))?;
        q = orthonormalize(&k.dot(&q))?;
    }
    let kq = k.dot(&q);
    let mut b = q.t().dot(&kq);
    symmetrize(&mut b);
    let (values, small_vecs) = eigh_desc(b.view())?;
    let spectrum_min = values[values.len() - 1];
    let vectors = q.dot(&small_vecs.slice(s![.., ..p]));
    finish(values.slice(s![..p]).to_owned(), vectors, spectrum_min)
}

/// Replace `m` by `(m + m^T) / 2`.
pub fn symmetrize(m: &mut Array2<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[[i, j]] + m[[j, i]]);
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
}

/// Largest absolute entry of `U^T U - I`.
pub fn orthonormality_defect(u: ArrayView2<'_, f64>) -> f64 {
    let g = u.t().dot(&u);
    let mut worst = 0.0f64;
    for ((i, j), &v) in g.indexed_iter() {
        let target = if i == j { 1.0 } else { 0.0 };
        worst = worst.max((v - target).abs());
    }
    worst
}
