//! Synthetic data for the supervised-benefit construction.
//!
//! Inputs are `x ~ N(0, sx2)` and outputs are the 2-vectors `(x, z)` with
//! independent `z ~ N(0, sz2)`. With `sz2 > sx2` the leading principal
//! direction of the outputs is the `z` axis, which carries no information
//! about `x`, while the supervised signal lives on the `x` axis.

use ndarray::{concatenate, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::dataset::{Dataset, Inputs, Outputs};
use crate::error::{OelError, Result};

/// Draw `n` supervised pairs, `m` unlabeled outputs and `n_test` test pairs.
///
/// Candidates are all generated outputs: supervised, then unlabeled, then
/// test. `sz2 = 0` is allowed (outputs on a line) with a warning, as is any
/// other regime outside `sz2 > sx2`.
pub fn synth_remark1(
    n: usize,
    m: usize,
    n_test: usize,
    sx2: f64,
    sz2: f64,
    seed: u64,
) -> Result<Dataset> {
    if !(sx2.is_finite() && sx2 > 0.0) {
        return Err(OelError::param(
            "sigma_x2",
            format!("must be > 0, got {sx2}"),
        ));
    }
    if !(sz2.is_finite() && sz2 >= 0.0) {
        return Err(OelError::param(
            "sigma_z2",
            format!("must be >= 0, got {sz2}"),
        ));
    }
    if n == 0 {
        return Err(OelError::param("n", "must be at least 1"));
    }
    if sz2 <= sx2 {
        log::warn!(
            "sigma_z2 = {sz2} <= sigma_x2 = {sx2}: unsupervised PCA already finds the x axis"
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nx = Normal::new(0.0, sx2.sqrt()).expect("valid std");
    let nz = Normal::new(0.0, sz2.sqrt()).expect("valid std");
    let mut draw = |count: usize| -> (Array2<f64>, Array2<f64>) {
        let x: Vec<f64> = (0..count).map(|_| nx.sample(&mut rng)).collect();
        let z: Vec<f64> = (0..count).map(|_| nz.sample(&mut rng)).collect();
        let inputs = Array2::from_shape_vec((count, 1), x.clone()).expect("shape");
        let outputs = Array2::from_shape_fn((count, 2), |(i, j)| if j == 0 { x[i] } else { z[i] });
        (inputs, outputs)
    };
    let (x_train, y_train) = draw(n);
    let (_, y_unsup) = draw(m);
    let (x_test, y_test) = draw(n_test);

    let candidates = concatenate![Axis(0), y_train.view(), y_unsup.view(), y_test.view()];
    let ds = Dataset {
        x_train: Inputs::Features(x_train),
        y_train: Outputs::Dense(y_train),
        y_unsup: Outputs::Dense(y_unsup),
        x_test: (n_test > 0).then_some(Inputs::Features(x_test)),
        y_test: (n_test > 0).then_some(Outputs::Dense(y_test)),
        test_ids: (0..n_test).map(|i| format!("q{i}")).collect(),
        candidate_ids: (0..candidates.nrows()).map(|i| format!("c{i}")).collect(),
        candidates: Outputs::Dense(candidates),
        candidate_lists: None,
    };
    ds.validate()?;
    Ok(ds)
}
