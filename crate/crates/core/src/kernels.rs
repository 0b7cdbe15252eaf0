//! Input and output kernels.
//!
//! Every kernel maps a pair of sample sets to a Gram matrix. Feature kernels
//! consume dense row matrices, the precomputed kernel consumes row indices
//! into a stored symmetric matrix.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};

use crate::error::{OelError, Result};

/// Symmetry tolerance for precomputed self-Gram matrices.
pub const PRECOMPUTED_SYMMETRY_TOL: f64 = 1e-10;

/// A kernel on inputs or outputs.
#[derive(Clone, Debug)]
pub enum KernelSpec {
    /// `exp(-||a - b||^2 / (2 sigma2))`
    Gaussian { sigma2: f64 },
    /// `<a, b>`
    Linear,
    /// `<a, b> / (||a||^2 + ||b||^2 - <a, b>)`
    Tanimoto,
    /// Gaussian of the distance induced by the Tanimoto kernel.
    GaussianTanimoto { sigma2: f64 },
    /// Entries looked up in a stored matrix by sample index.
    Precomputed(PrecomputedGram),
}

/// A stored square, symmetric Gram matrix addressed by item index.
#[derive(Clone)]
pub struct PrecomputedGram {
    matrix: Arc<Array2<f64>>,
}

impl fmt::Debug for PrecomputedGram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "PrecomputedGram({}x{})",
            self.matrix.nrows(),
            self.matrix.ncols()
        )
    }
}

impl PrecomputedGram {
    pub fn new(matrix: Array2<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(OelError::dims(
                "precomputed gram",
                "square matrix",
                format!("{}x{}", matrix.nrows(), matrix.ncols()),
            ));
        }
        check_symmetric(matrix.view(), PRECOMPUTED_SYMMETRY_TOL)?;
        Ok(Self {
            matrix: Arc::new(matrix),
        })
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    fn check_indices(&self, idx: &[usize]) -> Result<()> {
        let n = self.len();
        match idx.iter().find(|&&i| i >= n) {
            Some(&bad) => Err(OelError::InvalidInput(format!(
                "precomputed kernel index {bad} out of range (size {n})"
            ))),
            None => Ok(()),
        }
    }
}

/// Samples handed to a kernel.
#[derive(Clone, Copy, Debug)]
pub enum Samples<'a> {
    /// One sample per row.
    Features(ArrayView2<'a, f64>),
    /// Indices into a precomputed Gram matrix.
    Indices(&'a [usize]),
}

impl<'a> Samples<'a> {
    pub fn len(&self) -> usize {
        match self {
            Samples::Features(x) => x.nrows(),
            Samples::Indices(idx) => idx.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn same_as(&self, other: &Samples<'_>) -> bool {
        match (self, other) {
            (Samples::Features(a), Samples::Features(b)) => {
                a.shape() == b.shape() && a.strides() == b.strides() && a.as_ptr() == b.as_ptr()
            }
            (Samples::Indices(a), Samples::Indices(b)) => {
                a.len() == b.len() && a.as_ptr() == b.as_ptr()
            }
            _ => false,
        }
    }
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Gaussian { sigma2 } | KernelSpec::GaussianTanimoto { sigma2 } => {
                if !(sigma2.is_finite() && *sigma2 > 0.0) {
                    return Err(OelError::param(
                        "sigma2",
                        format!("must be > 0, got {sigma2}"),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Name used in configuration files and manifests.
    pub fn kind_name(&self) -> &'static str {
        match self {
            KernelSpec::Gaussian { .. } => "gaussian",
            KernelSpec::Linear => "linear",
            KernelSpec::Tanimoto => "tanimoto",
            KernelSpec::GaussianTanimoto { .. } => "gaussian_tanimoto",
            KernelSpec::Precomputed(_) => "precomputed",
        }
    }

    pub fn sigma2(&self) -> Option<f64> {
        match self {
            KernelSpec::Gaussian { sigma2 } | KernelSpec::GaussianTanimoto { sigma2 } => {
                Some(*sigma2)
            }
            _ => None,
        }
    }

    /// The same kernel family with a different width.
    pub fn with_sigma2(&self, sigma2: f64) -> Result<KernelSpec> {
        let k = match self {
            KernelSpec::Gaussian { .. } => KernelSpec::Gaussian { sigma2 },
            KernelSpec::GaussianTanimoto { .. } => KernelSpec::GaussianTanimoto { sigma2 },
            other => {
                return Err(OelError::param(
                    "sigma2",
                    format!("the {} kernel has no width to set", other.kind_name()),
                ))
            }
        };
        k.validate()?;
        Ok(k)
    }

    /// True when `k(y, y) = 1` for every admissible `y`.
    pub fn is_normalized(&self) -> bool {
        matches!(
            self,
            KernelSpec::Gaussian { .. }
                | KernelSpec::Tanimoto
                | KernelSpec::GaussianTanimoto { .. }
        )
    }

    /// Gram matrix `K[i, j] = k(a_i, b_j)`.
    ///
    /// When `a` and `b` are the same samples the upper triangle is computed
    /// and mirrored so the result is exactly symmetric.
    pub fn gram(&self, a: &Samples<'_>, b: &Samples<'_>) -> Result<Array2<f64>> {
        self.validate()?;
        let symmetric = a.same_as(b);
        match (self, a, b) {
            (KernelSpec::Precomputed(pre), Samples::Indices(ia), Samples::Indices(ib)) => {
                pre.check_indices(ia)?;
                pre.check_indices(ib)?;
                let m = pre.matrix();
                let out = Array2::from_shape_fn((ia.len(), ib.len()), |(i, j)| m[[ia[i], ib[j]]]);
                Ok(out)
            }
            (KernelSpec::Precomputed(_), _, _) => Err(OelError::InvalidInput(
                "precomputed kernel expects sample indices, got feature rows".into(),
            )),
            (_, Samples::Features(xa), Samples::Features(xb)) => {
                let mut out = self.feature_gram(*xa, *xb, symmetric)?;
                if symmetric {
                    mirror_upper(&mut out);
                }
                Ok(out)
            }
            _ => Err(OelError::InvalidInput(format!(
                "{} kernel expects feature rows, got sample indices",
                self.kind_name()
            ))),
        }
    }

    /// Convenience wrapper for `gram(a, a)`.
    pub fn self_gram(&self, a: &Samples<'_>) -> Result<Array2<f64>> {
        self.gram(a, a)
    }

    /// `k(y_i, y_i)` for every sample.
    pub fn self_norms(&self, y: &Samples<'_>) -> Result<Array1<f64>> {
        self.validate()?;
        match (self, y) {
            (KernelSpec::Precomputed(pre), Samples::Indices(idx)) => {
                pre.check_indices(idx)?;
                Ok(idx.iter().map(|&i| pre.matrix()[[i, i]]).collect())
            }
            (KernelSpec::Precomputed(_), _) => Err(OelError::InvalidInput(
                "precomputed kernel expects sample indices, got feature rows".into(),
            )),
            (
                KernelSpec::Gaussian { .. } | KernelSpec::GaussianTanimoto { .. },
                Samples::Features(x),
            ) => {
                if matches!(self, KernelSpec::GaussianTanimoto { .. }) {
                    check_nonzero_rows(*x)?;
                }
                Ok(Array1::ones(x.nrows()))
            }
            (KernelSpec::Tanimoto, Samples::Features(x)) => {
                check_nonzero_rows(*x)?;
                Ok(Array1::ones(x.nrows()))
            }
            (KernelSpec::Linear, Samples::Features(x)) => Ok(sq_norms(*x)),
            (_, Samples::Indices(_)) => Err(OelError::InvalidInput(format!(
                "{} kernel expects feature rows, got sample indices",
                self.kind_name()
            ))),
        }
    }

    fn feature_gram(
        &self,
        a: ArrayView2<'_, f64>,
        b: ArrayView2<'_, f64>,
        symmetric: bool,
    ) -> Result<Array2<f64>> {
        if a.ncols() != b.ncols() {
            return Err(OelError::dims(
                "kernel feature dimension",
                a.ncols(),
                b.ncols(),
            ));
        }
        let mut inner = a.dot(&b.t());
        match self {
            KernelSpec::Linear => {}
            KernelSpec::Gaussian { sigma2 } => {
                let na = sq_norms(a);
                let nb = sq_norms(b);
                let scale = -1.0 / (2.0 * sigma2);
                Zip::indexed(&mut inner).par_for_each(|(i, j), v| {
                    let d2 = if symmetric && i == j {
                        0.0
                    } else {
                        (na[i] + nb[j] - 2.0 * *v).max(0.0)
                    };
                    *v = (scale * d2).exp();
                });
            }
            KernelSpec::Tanimoto | KernelSpec::GaussianTanimoto { .. } => {
                check_nonzero_rows(a)?;
                if !symmetric {
                    check_nonzero_rows(b)?;
                }
                let na = sq_norms(a);
                let nb = sq_norms(b);
                let gauss_scale = self.sigma2().map(|s2| -1.0 / (2.0 * s2));
                Zip::indexed(&mut inner).par_for_each(|(i, j), v| {
                    let t = if symmetric && i == j {
                        1.0
                    } else {
                        *v / (na[i] + nb[j] - *v)
                    };
                    *v = match gauss_scale {
                        // k_T(a, a) = k_T(b, b) = 1 for nonzero rows.
                        Some(scale) => (scale * (2.0 - 2.0 * t).max(0.0)).exp(),
                        None => t,
                    };
                });
            }
            KernelSpec::Precomputed(_) => unreachable!("handled by caller"),
        }
        Ok(inner)
    }
}

fn sq_norms(x: ArrayView2<'_, f64>) -> Array1<f64> {
    x.map_axis(Axis(1), |row| row.dot(&row))
}

fn check_nonzero_rows(x: ArrayView2<'_, f64>) -> Result<()> {
    match x
        .axis_iter(Axis(0))
        .position(|row| row.iter().all(|&v| v == 0.0))
    {
        Some(i) => Err(OelError::InvalidInput(format!(
            "tanimoto kernel undefined on all-zero row {i}"
        ))),
        None => Ok(()),
    }
}

/// Copy the upper triangle onto the lower one.
pub(crate) fn mirror_upper(m: &mut Array2<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            m[[j, i]] = m[[i, j]];
        }
    }
}

/// Largest absolute asymmetry `|m[i,j] - m[j,i]|`.
pub fn max_asymmetry(m: ArrayView2<'_, f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[[i, j]] - m[[j, i]]).abs());
        }
    }
    worst
}

pub(crate) fn check_symmetric(m: ArrayView2<'_, f64>, tol: f64) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(OelError::dims(
            "symmetric matrix",
            "square",
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    let max_asym = max_asymmetry(m);
    if max_asym > tol {
        return Err(OelError::NotSymmetric { max_asym, tol });
    }
    Ok(())
}

/// A ranking of `K` items: `ranks[i]` is the (1-based) rank of item `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    ranks: Vec<usize>,
}

impl Permutation {
    pub fn new(ranks: Vec<usize>) -> Result<Self> {
        let k = ranks.len();
        let mut seen = vec![false; k];
        for &r in &ranks {
            if r == 0 || r > k || seen[r - 1] {
                return Err(OelError::InvalidInput(format!(
                    "not a permutation of 1..={k}: {ranks:?}"
                )));
            }
            seen[r - 1] = true;
        }
        Ok(Self { ranks })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            ranks: (1..=k).collect(),
        }
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn reversed(&self) -> Self {
        let k = self.ranks.len();
        Self {
            ranks: self.ranks.iter().map(|&r| k + 1 - r).collect(),
        }
    }
}

/// Kemeny embedding: one `sign(ranks[j] - ranks[i])` entry per pair `i < j`,
/// pairs in lexicographic order. Unnormalized.
pub fn kemeny_embed(sigma: &Permutation) -> Array1<f64> {
    let r = sigma.ranks();
    let k = r.len();
    let mut out = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    for i in 0..k {
        for j in (i + 1)..k {
            out.push(if r[j] > r[i] { 1.0 } else { -1.0 });
        }
    }
    Array1::from(out)
}

/// Stack Kemeny embeddings of several permutations as rows.
pub fn kemeny_matrix(perms: &[Permutation]) -> Result<Array2<f64>> {
    let k = perms.first().map(Permutation::len).unwrap_or(0);
    let d = k * k.saturating_sub(1) / 2;
    let mut out = Array2::zeros((perms.len(), d));
    for (i, p) in perms.iter().enumerate() {
        if p.len() != k {
            return Err(OelError::dims("permutation length", k, p.len()));
        }
        out.row_mut(i).assign(&kemeny_embed(p));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use ndarray_linalg::{Eigh, UPLO};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn k1(spec: &KernelSpec, a: &[f64], b: &[f64]) -> f64 {
        let a = Array2::from_shape_vec((1, a.len()), a.to_vec()).unwrap();
        let b = Array2::from_shape_vec((1, b.len()), b.to_vec()).unwrap();
        spec.gram(&Samples::Features(a.view()), &Samples::Features(b.view()))
            .unwrap()[[0, 0]]
    }

    #[test]
    fn gaussian_examples() {
        let g = KernelSpec::Gaussian { sigma2: 1.0 };
        assert_eq!(k1(&g, &[0.0, 0.0], &[0.0, 0.0]), 1.0);
        assert_abs_diff_eq!(
            k1(&g, &[0.0, 0.0], &[2f64.sqrt(), 0.0]),
            (-1.0f64).exp(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn tanimoto_example() {
        let t = KernelSpec::Tanimoto;
        assert_abs_diff_eq!(
            k1(&t, &[1.0, 1.0, 0.0], &[1.0, 0.0, 1.0]),
            1.0 / 3.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn tanimoto_rejects_zero_row() {
        let a = array![[1.0, 0.0], [0.0, 0.0]];
        let err = KernelSpec::Tanimoto.self_gram(&Samples::Features(a.view()));
        assert!(err.is_err());
        assert!(KernelSpec::GaussianTanimoto { sigma2: 1.0 }
            .self_norms(&Samples::Features(a.view()))
            .is_err());
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let a = array![[1.0, 0.0]];
        let b = array![[1.0, 0.0, 2.0]];
        assert!(KernelSpec::Linear
            .gram(&Samples::Features(a.view()), &Samples::Features(b.view()))
            .is_err());
    }

    #[test]
    fn invalid_sigma_rejected() {
        let a = array![[1.0]];
        assert!(KernelSpec::Gaussian { sigma2: 0.0 }
            .self_gram(&Samples::Features(a.view()))
            .is_err());
    }

    #[test]
    fn self_norm_examples() {
        let y = array![[3.0, 4.0], [1.0, 0.0]];
        let s = Samples::Features(y.view());
        assert_eq!(KernelSpec::Linear.self_norms(&s).unwrap()[0], 25.0);
        assert_eq!(
            KernelSpec::Gaussian { sigma2: 0.3 }.self_norms(&s).unwrap()[0],
            1.0
        );
        let b = array![[1.0, 0.0, 1.0, 1.0]];
        assert_eq!(
            KernelSpec::Tanimoto
                .self_norms(&Samples::Features(b.view()))
                .unwrap()[0],
            1.0
        );
    }

    #[test]
    fn precomputed_lookup_and_bounds() {
        let m = array![[2.0, 1.0, 0.5], [1.0, 3.0, 0.0], [0.5, 0.0, 1.0]];
        let spec = KernelSpec::Precomputed(PrecomputedGram::new(m).unwrap());
        let g = spec
            .gram(&Samples::Indices(&[2, 0]), &Samples::Indices(&[1, 0]))
            .unwrap();
        assert_eq!(g, array![[0.0, 0.5], [1.0, 2.0]]);
        assert_eq!(
            spec.self_norms(&Samples::Indices(&[1])).unwrap(),
            array![3.0]
        );
        assert!(spec
            .gram(&Samples::Indices(&[3]), &Samples::Indices(&[0]))
            .is_err());
        assert!(PrecomputedGram::new(array![[1.0, 0.2], [0.1, 1.0]]).is_err());
    }

    fn random_binary(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Array2<f64> {
        let mut x = Array2::from_shape_fn((n, d), |_| if rng.gen_bool(0.4) { 1.0 } else { 0.0 });
        for mut row in x.rows_mut() {
            if row.iter().all(|&v| v == 0.0) {
                row[rng.gen_range(0..d)] = 1.0;
            }
        }
        x
    }

    #[test]
    fn self_grams_symmetric_psd_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..10 {
            let n = 5 + trial * 3;
            let real = Array2::from_shape_fn((n, 4), |_| rng.gen_range(-2.0..2.0));
            let bin = random_binary(&mut rng, n, 12);
            let cases: Vec<(KernelSpec, &Array2<f64>)> = vec![
                (KernelSpec::Gaussian { sigma2: 0.7 }, &real),
                (KernelSpec::Linear, &real),
                (KernelSpec::Tanimoto, &bin),
                (KernelSpec::GaussianTanimoto { sigma2: 0.5 }, &bin),
            ];
            for (spec, x) in cases {
                let k = spec.self_gram(&Samples::Features(x.view())).unwrap();
                assert!(max_asymmetry(k.view()) <= 1e-10);
                let (ev, _) = k.eigh(UPLO::Upper).unwrap();
                let top = ev[ev.len() - 1];
                assert!(ev[0] >= -1e-8 * top, "{spec:?}: {} vs {}", ev[0], top);
                match spec {
                    KernelSpec::Gaussian { .. } | KernelSpec::GaussianTanimoto { .. } => {
                        assert!(k.iter().all(|&v| v > 0.0 && v <= 1.0))
                    }
                    KernelSpec::Tanimoto => assert!(k.iter().all(|&v| (0.0..=1.0).contains(&v))),
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn rkhs_distance_matches_explicit_features_under_linear_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = Array2::from_shape_fn((6, 5), |_| rng.gen_range(-1.0..1.0));
        let s = Samples::Features(y.view());
        let k = KernelSpec::Linear.self_gram(&s).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let diff = &y.row(i) - &y.row(j);
                let explicit = diff.dot(&diff);
                let via_kernel = k[[i, i]] + k[[j, j]] - 2.0 * k[[i, j]];
                assert_abs_diff_eq!(explicit, via_kernel, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn kemeny_examples() {
        let e = |r: Vec<usize>| kemeny_embed(&Permutation::new(r).unwrap()).to_vec();
        assert_eq!(e(vec![1, 2, 3]), vec![1.0, 1.0, 1.0]);
        assert_eq!(e(vec![3, 2, 1]), vec![-1.0, -1.0, -1.0]);
        assert_eq!(e(vec![1, 3, 2]), vec![1.0, 1.0, -1.0]);
    }

    #[test]
    fn permutation_validation() {
        assert!(Permutation::new(vec![1, 1, 3]).is_err());
        assert!(Permutation::new(vec![0, 1]).is_err());
        assert!(Permutation::new(vec![2, 3]).is_err());
        assert_eq!(
            Permutation::new(vec![2, 3, 1]).unwrap().reversed().ranks(),
            &[2, 1, 3]
        );
    }
}
