//! Reference implementations used to check the `oel` crates.
//!
//! Everything here is written directly on `ndarray` with textbook algorithms
//! (cyclic Jacobi, Cholesky, modified Gram-Schmidt) so that it shares no
//! numerical code path with the library under test.

extern crate blas_src;

use ndarray::{s, Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;

/// Matrix with i.i.d. standard normal entries.
pub fn normal_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

/// Full symmetric eigendecomposition by cyclic Jacobi rotations.
/// Eigenvalues descending; eigenvectors in the columns.
pub fn jacobi_eigh(a: ArrayView2<'_, f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "square matrix expected");
    let mut m = a.to_owned();
    let mut v = Array2::<f64>::eye(n);
    let norm: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[[i, j]] * m[[i, j]];
            }
        }
        if off.sqrt() <= 1e-15 * norm.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[[k, p]], m[[k, q]]);
                    m[[k, p]] = c * mkp - sn * mkq;
                    m[[k, q]] = sn * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[[p, k]], m[[q, k]]);
                    m[[p, k]] = c * mpk - sn * mqk;
                    m[[q, k]] = sn * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = c * vkp - sn * vkq;
                    v[[k, q]] = sn * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[[y, y]].total_cmp(&m[[x, x]]));
    let values = Array1::from_iter(order.iter().map(|&i| m[[i, i]]));
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).assign(&v.column(src));
    }
    (values, vectors)
}

/// Solve `a x = b` for symmetric positive definite `a`.
pub fn cholesky_solve(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        assert!(d > 0.0, "matrix is not positive definite");
        l[[j, j]] = d.sqrt();
        for i in (j + 1)..n {
            let mut x = a[[i, j]];
            for k in 0..j {
                x -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = x / l[[j, j]];
        }
    }
    let mut x = b.to_owned();
    for mut col in x.columns_mut() {
        for i in 0..n {
            let mut v = col[i];
            for k in 0..i {
                v -= l[[i, k]] * col[k];
            }
            col[i] = v / l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut v = col[i];
            for k in (i + 1)..n {
                v -= l[[k, i]] * col[k];
            }
            col[i] = v / l[[i, i]];
        }
    }
    x
}

/// Random orthogonal matrix: Gram-Schmidt (applied twice) on a Gaussian matrix.
pub fn random_orthogonal<R: Rng>(n: usize, rng: &mut R) -> Array2<f64> {
    let mut q = normal_matrix(n, n, rng);
    for j in 0..n {
        for _ in 0..2 {
            for k in 0..j {
                let proj = q.column(k).dot(&q.column(j));
                let qk = q.column(k).to_owned();
                q.column_mut(j).scaled_add(-proj, &qk);
            }
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        q.column_mut(j).mapv_inplace(|v| v / norm);
    }
    q
}

/// `exp(-||a_i - b_j||^2 / (2 sigma2))`
pub fn gaussian_gram(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>, sigma2: f64) -> Array2<f64> {
    Array2::from_shape_fn((a.nrows(), b.nrows()), |(i, j)| {
        let d: f64 = a
            .row(i)
            .iter()
            .zip(b.row(j))
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        (-d / (2.0 * sigma2)).exp()
    })
}

/// Scaled spanning vectors of the learned subspace as explicit rows:
/// `sqrt(c/n) A Y` on top of `sqrt((1-c)/m) U`, where row `i` of `A` holds
/// the regression weights of training input `i`.
pub fn spanning_rows(
    a: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    u: ArrayView2<'_, f64>,
    c: f64,
) -> Array2<f64> {
    let (n, m, d) = (y.nrows(), u.nrows(), y.ncols());
    let mut phi = Array2::zeros((n + m, d));
    phi.slice_mut(s![..n, ..])
        .assign(&(a.dot(&y) * (c / n as f64).sqrt()));
    if m > 0 {
        phi.slice_mut(s![n.., ..])
            .assign(&(&u * ((1.0 - c) / m as f64).sqrt()));
    }
    phi
}

/// Projection onto the span of the top `p` right singular vectors of `phi`,
/// with the full spectrum of `phi^T phi` (descending).
pub fn top_projection(phi: ArrayView2<'_, f64>, p: usize) -> (Array2<f64>, Array1<f64>) {
    let (values, vectors) = jacobi_eigh(phi.t().dot(&phi).view());
    let v = vectors.slice(s![.., ..p]);
    (v.dot(&v.t()), values)
}

/// Numerical rank: eigenvalues above `tol * max`.
pub fn rank(values: &Array1<f64>, tol: f64) -> usize {
    let top = values.iter().cloned().fold(0.0, f64::max);
    values.iter().filter(|&&v| v > tol * top).count()
}

/// `P(Binomial(n, 1/2) >= wins)`: one-sided sign test p-value.
pub fn sign_test_p(wins: usize, n: usize) -> f64 {
    let mut total = 0.0;
    for k in wins..=n {
        let mut c = 1.0;
        for i in 0..k {
            c *= (n - i) as f64 / (i + 1) as f64;
        }
        total += c;
    }
    total / 2f64.powi(n as i32)
}

/// All permutations of `0..k` in lexicographic order.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

/// Kendall's tau by counting concordant and discordant pairs.
pub fn kendall_by_pairs(a: &[usize], b: &[usize]) -> f64 {
    let k = a.len();
    let (mut conc, mut disc) = (0i64, 0i64);
    for i in 0..k {
        for j in (i + 1)..k {
            let s = (a[i] as i64 - a[j] as i64) * (b[i] as i64 - b[j] as i64);
            if s > 0 {
                conc += 1;
            } else {
                disc += 1;
            }
        }
    }
    (conc - disc) as f64 / (k * (k - 1) / 2) as f64
}

/// Max absolute entry of `a - b`.
pub fn max_abs_diff(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
