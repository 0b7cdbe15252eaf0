//! In-memory datasets and loading from files.

use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ndarray::{concatenate, Array2, Axis};
use sha2::{Digest, Sha256};

use super::formats::{self, Bitsets};
use crate::error::{OelError, Result};
use crate::kernels::{kemeny_matrix, KernelSpec, Permutation, PrecomputedGram, Samples};

/// Input side of a dataset.
#[derive(Clone, Debug)]
pub enum Inputs {
    /// One feature row per example.
    Features(Array2<f64>),
    /// Rows of a precomputed kernel block whose columns index the training
    /// pool. For the training pool itself `block` is the square train Gram
    /// and `rows` are pool indices.
    Gram {
        block: Arc<Array2<f64>>,
        rows: Vec<usize>,
    },
}

impl Inputs {
    pub fn len(&self) -> usize {
        match self {
            Inputs::Features(x) => x.nrows(),
            Inputs::Gram { rows, .. } => rows.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn subset(&self, idx: &[usize]) -> Inputs {
        match self {
            Inputs::Features(x) => Inputs::Features(x.select(Axis(0), idx)),
            Inputs::Gram { block, rows } => Inputs::Gram {
                block: Arc::clone(block),
                rows: idx.iter().map(|&i| rows[i]).collect(),
            },
        }
    }

    fn fingerprint_into(&self, h: &mut Sha256) {
        match self {
            Inputs::Features(x) => {
                h.update(b"features");
                hash_matrix(h, x);
            }
            Inputs::Gram { block, rows } => {
                h.update(b"gram");
                for &i in rows {
                    for &j in rows {
                        h.update(block[[i, j]].to_le_bytes());
                    }
                }
            }
        }
    }
}

/// Input kernel block `k(a_i, b_j)`, `|a| x |b|`.
///
/// In precomputed mode `b` must be a subset of the training pool (its rows
/// are read as column indices of `a`'s block), and `kernel` is ignored.
pub fn input_kernel(kernel: &KernelSpec, a: &Inputs, b: &Inputs) -> Result<Array2<f64>> {
    match (a, b) {
        (Inputs::Features(xa), Inputs::Features(xb)) => {
            kernel.gram(&Samples::Features(xa.view()), &Samples::Features(xb.view()))
        }
        (Inputs::Gram { block, rows: ra }, Inputs::Gram { rows: rb, .. }) => {
            if let Some(&bad) = rb.iter().find(|&&j| j >= block.ncols()) {
                return Err(OelError::dims(
                    "precomputed input block columns",
                    block.ncols(),
                    bad + 1,
                ));
            }
            Ok(Array2::from_shape_fn((ra.len(), rb.len()), |(i, j)| {
                block[[ra[i], rb[j]]]
            }))
        }
        _ => Err(OelError::InvalidInput(
            "cannot mix feature inputs with precomputed input Gram blocks".into(),
        )),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputKind {
    Dense,
    Bitset,
    Permutation,
    Gram,
}

impl OutputKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(OutputKind::Dense),
            "bitset" => Ok(OutputKind::Bitset),
            "permutation" => Ok(OutputKind::Permutation),
            "gram" => Ok(OutputKind::Gram),
            other => Err(OelError::param(
                "data.output_kind",
                format!("unknown output kind `{other}` (dense, bitset, permutation, gram)"),
            )),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OutputKind::Dense => "dense",
            OutputKind::Bitset => "bitset",
            OutputKind::Permutation => "permutation",
            OutputKind::Gram => "gram",
        }
    }
}

/// Output objects. Bitsets and permutations keep their feature
/// representation (0/1 indicators, Kemeny embedding) next to the raw form.
#[derive(Clone, Debug)]
pub enum Outputs {
    Dense(Array2<f64>),
    Bitsets {
        sets: Bitsets,
        features: Array2<f64>,
    },
    Permutations {
        perms: Vec<Permutation>,
        features: Array2<f64>,
    },
    /// Rows of the precomputed output Gram.
    Indices(Vec<usize>),
}

impl Outputs {
    pub fn from_bitsets(sets: Bitsets) -> Self {
        let features = sets.to_dense();
        Outputs::Bitsets { sets, features }
    }

    pub fn from_permutations(perms: Vec<Permutation>) -> Result<Self> {
        let features = kemeny_matrix(&perms)?;
        Ok(Outputs::Permutations { perms, features })
    }

    /// An empty set of the same kind and feature width.
    pub fn empty_like(&self) -> Self {
        match self {
            Outputs::Dense(y) => Outputs::Dense(Array2::zeros((0, y.ncols()))),
            Outputs::Bitsets { sets, .. } => Outputs::from_bitsets(Bitsets {
                dim: sets.dim,
                sets: Vec::new(),
            }),
            Outputs::Permutations { features, .. } => Outputs::Permutations {
                perms: Vec::new(),
                features: Array2::zeros((0, features.ncols())),
            },
            Outputs::Indices(_) => Outputs::Indices(Vec::new()),
        }
    }

    pub fn kind(&self) -> OutputKind {
        match self {
            Outputs::Dense(_) => OutputKind::Dense,
            Outputs::Bitsets { .. } => OutputKind::Bitset,
            Outputs::Permutations { .. } => OutputKind::Permutation,
            Outputs::Indices(_) => OutputKind::Gram,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Outputs::Dense(y) => y.nrows(),
            Outputs::Bitsets { features, .. } | Outputs::Permutations { features, .. } => {
                features.nrows()
            }
            Outputs::Indices(idx) => idx.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Feature width, `None` for precomputed outputs.
    pub fn width(&self) -> Option<usize> {
        match self {
            Outputs::Dense(y) => Some(y.ncols()),
            Outputs::Bitsets { features, .. } | Outputs::Permutations { features, .. } => {
                Some(features.ncols())
            }
            Outputs::Indices(_) => None,
        }
    }

    pub fn samples(&self) -> Samples<'_> {
        match self {
            Outputs::Dense(y) => Samples::Features(y.view()),
            Outputs::Bitsets { features, .. } | Outputs::Permutations { features, .. } => {
                Samples::Features(features.view())
            }
            Outputs::Indices(idx) => Samples::Indices(idx),
        }
    }

    pub fn subset(&self, idx: &[usize]) -> Outputs {
        match self {
            Outputs::Dense(y) => Outputs::Dense(y.select(Axis(0), idx)),
            Outputs::Bitsets { sets, features } => Outputs::Bitsets {
                sets: Bitsets {
                    dim: sets.dim,
                    sets: idx.iter().map(|&i| sets.sets[i].clone()).collect(),
                },
                features: features.select(Axis(0), idx),
            },
            Outputs::Permutations { perms, features } => Outputs::Permutations {
                perms: idx.iter().map(|&i| perms[i].clone()).collect(),
                features: features.select(Axis(0), idx),
            },
            Outputs::Indices(v) => Outputs::Indices(idx.iter().map(|&i| v[i]).collect()),
        }
    }

    pub fn slice(&self, range: Range<usize>) -> Result<Outputs> {
        if range.end > self.len() || range.start > range.end {
            return Err(OelError::InvalidInput(format!(
                "row range {}..{} outside 0..{}",
                range.start,
                range.end,
                self.len()
            )));
        }
        Ok(self.subset(&range.collect::<Vec<_>>()))
    }

    /// Concatenation; both sides must have the same kind and width.
    pub fn concat(&self, other: &Outputs) -> Result<Outputs> {
        check_compatible("concatenated outputs", self, other)?;
        Ok(match (self, other) {
            (Outputs::Dense(a), Outputs::Dense(b)) => {
                Outputs::Dense(concatenate![Axis(0), a.view(), b.view()])
            }
            (
                Outputs::Bitsets {
                    sets: a,
                    features: fa,
                },
                Outputs::Bitsets {
                    sets: b,
                    features: fb,
                },
            ) => Outputs::Bitsets {
                sets: Bitsets {
                    dim: a.dim,
                    sets: a.sets.iter().chain(&b.sets).cloned().collect(),
                },
                features: concatenate![Axis(0), fa.view(), fb.view()],
            },
            (
                Outputs::Permutations {
                    perms: a,
                    features: fa,
                },
                Outputs::Permutations {
                    perms: b,
                    features: fb,
                },
            ) => Outputs::Permutations {
                perms: a.iter().chain(b).cloned().collect(),
                features: concatenate![Axis(0), fa.view(), fb.view()],
            },
            (Outputs::Indices(a), Outputs::Indices(b)) => {
                Outputs::Indices(a.iter().chain(b).copied().collect())
            }
            _ => unreachable!("kinds checked"),
        })
    }

    /// Label sets, for bitset outputs.
    pub fn label_sets(&self) -> Option<&[Vec<usize>]> {
        match self {
            Outputs::Bitsets { sets, .. } => Some(&sets.sets),
            _ => None,
        }
    }

    pub fn permutations(&self) -> Option<&[Permutation]> {
        match self {
            Outputs::Permutations { perms, .. } => Some(perms),
            _ => None,
        }
    }

    fn fingerprint_into(&self, h: &mut Sha256) {
        h.update(self.kind().name().as_bytes());
        match self {
            Outputs::Dense(y) => hash_matrix(h, y),
            Outputs::Bitsets { features, .. } | Outputs::Permutations { features, .. } => {
                hash_matrix(h, features)
            }
            Outputs::Indices(idx) => {
                h.update((idx.len() as u64).to_le_bytes());
                for &i in idx {
                    h.update((i as u64).to_le_bytes());
                }
            }
        }
    }
}

fn check_compatible(context: &'static str, a: &Outputs, b: &Outputs) -> Result<()> {
    if a.kind() != b.kind() {
        return Err(OelError::dims(context, a.kind().name(), b.kind().name()));
    }
    if a.width() != b.width() {
        return Err(OelError::dims(
            context,
            format!("width {:?}", a.width()),
            format!("width {:?}", b.width()),
        ));
    }
    Ok(())
}

fn hash_matrix(h: &mut Sha256, m: &Array2<f64>) {
    h.update((m.nrows() as u64).to_le_bytes());
    h.update((m.ncols() as u64).to_le_bytes());
    for v in m.iter() {
        h.update(v.to_le_bytes());
    }
}

/// A supervised training pool, optional unlabeled outputs, an optional test
/// set and the candidate outputs used for decoding.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub x_train: Inputs,
    pub y_train: Outputs,
    pub y_unsup: Outputs,
    pub x_test: Option<Inputs>,
    pub y_test: Option<Outputs>,
    pub test_ids: Vec<String>,
    pub candidates: Outputs,
    pub candidate_ids: Vec<String>,
    /// Per test query, rows of `candidates` to score.
    pub candidate_lists: Option<Vec<Vec<usize>>>,
}

impl Dataset {
    /// Check the pairing and kind invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.x_train.len();
        if n == 0 {
            return Err(OelError::InvalidInput("the training set is empty".into()));
        }
        if self.y_train.len() != n {
            return Err(OelError::dims(
                "supervised outputs vs inputs",
                n,
                self.y_train.len(),
            ));
        }
        check_compatible("unlabeled outputs", &self.y_train, &self.y_unsup)?;
        check_compatible("candidate outputs", &self.y_train, &self.candidates)?;
        if self.candidate_ids.len() != self.candidates.len() {
            return Err(OelError::dims(
                "candidate ids",
                self.candidates.len(),
                self.candidate_ids.len(),
            ));
        }
        match (&self.x_train, &self.x_test) {
            (Inputs::Features(a), Some(Inputs::Features(b))) if a.ncols() != b.ncols() => {
                return Err(OelError::dims("test input width", a.ncols(), b.ncols()));
            }
            (Inputs::Gram { block, .. }, Some(Inputs::Gram { block: tb, .. }))
                if tb.ncols() != block.ncols() =>
            {
                return Err(OelError::dims(
                    "test Gram block columns",
                    block.ncols(),
                    tb.ncols(),
                ));
            }
            (Inputs::Features(_), Some(Inputs::Gram { .. }))
            | (Inputs::Gram { .. }, Some(Inputs::Features(_))) => {
                return Err(OelError::InvalidInput(
                    "train and test inputs use different representations".into(),
                ));
            }
            _ => {}
        }
        let t = self.x_test.as_ref().map_or(0, Inputs::len);
        if let Some(y) = &self.y_test {
            if self.x_test.is_none() {
                return Err(OelError::InvalidInput(
                    "test outputs given without test inputs".into(),
                ));
            }
            check_compatible("test outputs", &self.y_train, y)?;
            if y.len() != t {
                return Err(OelError::dims("test outputs vs test inputs", t, y.len()));
            }
        }
        if self.test_ids.len() != t {
            return Err(OelError::dims("test ids", t, self.test_ids.len()));
        }
        if let Some(lists) = &self.candidate_lists {
            if lists.len() != t {
                return Err(OelError::dims(
                    "candidate lists vs test queries",
                    t,
                    lists.len(),
                ));
            }
            let nc = self.candidates.len();
            if let Some(bad) = lists.iter().flatten().find(|&&c| c >= nc) {
                return Err(OelError::InvalidInput(format!(
                    "candidate row {bad} out of range ({nc} candidates)"
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.x_train.len()
    }

    pub fn m(&self) -> usize {
        self.y_unsup.len()
    }

    /// Check precomputed output indices against the output kernel.
    pub fn check_output_kernel(&self, kernel: &KernelSpec) -> Result<()> {
        let sets = [
            Some(&self.y_train),
            Some(&self.y_unsup),
            Some(&self.candidates),
            self.y_test.as_ref(),
        ];
        match kernel {
            KernelSpec::Precomputed(g) => {
                for y in sets.into_iter().flatten() {
                    match y {
                        Outputs::Indices(idx) => {
                            if let Some(&bad) = idx.iter().find(|&&i| i >= g.len()) {
                                return Err(OelError::InvalidInput(format!(
                                    "output index {bad} out of range for a {}-item output Gram",
                                    g.len()
                                )));
                            }
                        }
                        _ => {
                            return Err(OelError::InvalidInput(
                                "a precomputed output kernel needs `gram` output kind".into(),
                            ))
                        }
                    }
                }
                Ok(())
            }
            _ if self.y_train.kind() == OutputKind::Gram => Err(OelError::InvalidInput(
                "`gram` output kind needs a precomputed output kernel".into(),
            )),
            _ => Ok(()),
        }
    }

    /// SHA-256 over the training material (inputs, supervised and
    /// unlabeled outputs).
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        self.x_train.fingerprint_into(&mut h);
        self.y_train.fingerprint_into(&mut h);
        self.y_unsup.fingerprint_into(&mut h);
        hex::encode(h.finalize())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputFormat {
    Dense,
    Sparse,
    Gram,
}

impl InputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(InputFormat::Dense),
            "sparse" => Ok(InputFormat::Sparse),
            "gram" => Ok(InputFormat::Gram),
            other => Err(OelError::param(
                "data.input_format",
                format!("unknown input format `{other}` (dense, sparse, gram)"),
            )),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InputFormat::Dense => "dense",
            InputFormat::Sparse => "sparse",
            InputFormat::Gram => "gram",
        }
    }
}

/// File locations and formats of a dataset.
#[derive(Clone, Debug)]
pub struct DataSpec {
    pub input_format: InputFormat,
    pub output_kind: OutputKind,
    pub train_inputs: PathBuf,
    pub train_outputs: PathBuf,
    pub unsup_outputs: Option<PathBuf>,
    pub test_inputs: Option<PathBuf>,
    pub test_outputs: Option<PathBuf>,
    pub test_ids: Option<PathBuf>,
    /// Candidate outputs; defaults to the supervised training outputs.
    pub candidates: Option<PathBuf>,
    pub candidate_ids: Option<PathBuf>,
    pub candidate_lists: Option<PathBuf>,
    /// Rows of the training files to use as the supervised pool.
    pub train_rows: Option<Range<usize>>,
    /// Rows of the unlabeled output file to use.
    pub unsup_rows: Option<Range<usize>>,
}

impl DataSpec {
    pub fn new(
        input_format: InputFormat,
        output_kind: OutputKind,
        train_inputs: PathBuf,
        train_outputs: PathBuf,
    ) -> Self {
        Self {
            input_format,
            output_kind,
            train_inputs,
            train_outputs,
            unsup_outputs: None,
            test_inputs: None,
            test_outputs: None,
            test_ids: None,
            candidates: None,
            candidate_ids: None,
            candidate_lists: None,
            train_rows: None,
            unsup_rows: None,
        }
    }
}

/// Read a matrix in the binary format (`.bin`) or as dense CSV.
pub fn read_matrix_any(path: &Path) -> Result<Array2<f64>> {
    if path.extension().is_some_and(|e| e == "bin") {
        formats::read_matrix(path)
    } else {
        formats::read_dense(path)
    }
}

fn read_inputs(format: InputFormat, path: &Path, train_dim: Option<usize>) -> Result<Array2<f64>> {
    match format {
        InputFormat::Dense => formats::read_dense(path),
        InputFormat::Sparse => {
            let s = formats::read_sparse(path)?;
            if let Some(d) = train_dim {
                if s.dim != d {
                    return Err(OelError::dims("sparse input dimension", d, s.dim));
                }
            }
            Ok(s.to_dense())
        }
        InputFormat::Gram => read_matrix_any(path),
    }
}

pub fn read_outputs(kind: OutputKind, path: &Path) -> Result<Outputs> {
    match kind {
        OutputKind::Dense => Ok(Outputs::Dense(formats::read_dense(path)?)),
        OutputKind::Bitset => Ok(Outputs::from_bitsets(formats::read_bitsets(path)?)),
        OutputKind::Permutation => Outputs::from_permutations(formats::read_permutations(path)?),
        OutputKind::Gram => Ok(Outputs::Indices(formats::read_index_list(path)?)),
    }
}

fn default_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// Load and validate a dataset. Length mismatches fail here rather than at
/// fit time.
pub fn load_dataset(spec: &DataSpec) -> Result<Dataset> {
    let raw_x = read_inputs(spec.input_format, &spec.train_inputs, None)?;
    let y_all = read_outputs(spec.output_kind, &spec.train_outputs)?;
    let pool = raw_x.nrows();
    if y_all.len() != pool {
        return Err(OelError::dims(
            "supervised outputs vs inputs",
            format!("{pool} rows in {}", spec.train_inputs.display()),
            format!("{} rows in {}", y_all.len(), spec.train_outputs.display()),
        ));
    }
    let rows: Vec<usize> = match &spec.train_rows {
        Some(r) => {
            if r.end > pool || r.start >= r.end {
                return Err(OelError::InvalidInput(format!(
                    "train row range {}..{} outside 0..{pool}",
                    r.start, r.end
                )));
            }
            r.clone().collect()
        }
        None => (0..pool).collect(),
    };
    let y_train = y_all.subset(&rows);

    let (x_train, train_dim) = match spec.input_format {
        InputFormat::Gram => {
            // Validates squareness and symmetry; values are kept as stored.
            let g = PrecomputedGram::new(raw_x)?;
            let block = Arc::new(g.matrix().clone());
            (Inputs::Gram { block, rows }, None)
        }
        _ => {
            let d = raw_x.ncols();
            (Inputs::Features(raw_x.select(Axis(0), &rows)), Some(d))
        }
    };

    let y_unsup = match &spec.unsup_outputs {
        Some(p) => {
            let u = read_outputs(spec.output_kind, p)?;
            match &spec.unsup_rows {
                Some(r) => u.slice(r.clone())?,
                None => u,
            }
        }
        None => y_train.empty_like(),
    };

    let x_test = match &spec.test_inputs {
        Some(p) => {
            let t = read_inputs(spec.input_format, p, train_dim)?;
            Some(match spec.input_format {
                InputFormat::Gram => {
                    let rows = (0..t.nrows()).collect();
                    Inputs::Gram {
                        block: Arc::new(t),
                        rows,
                    }
                }
                _ => Inputs::Features(t),
            })
        }
        None => None,
    };
    let y_test = spec
        .test_outputs
        .as_ref()
        .map(|p| read_outputs(spec.output_kind, p))
        .transpose()?;
    let t = x_test.as_ref().map_or(0, Inputs::len);
    let test_ids = match &spec.test_ids {
        Some(p) => formats::read_id_list(p)?,
        None => default_ids(t),
    };

    let candidates = match &spec.candidates {
        Some(p) => read_outputs(spec.output_kind, p)?,
        None => y_train.clone(),
    };
    let candidate_ids = match &spec.candidate_ids {
        Some(p) => formats::read_id_list(p)?,
        None => default_ids(candidates.len()),
    };
    let candidate_lists = spec
        .candidate_lists
        .as_ref()
        .map(|p| formats::read_candidate_lists(p, t))
        .transpose()?;

    let ds = Dataset {
        x_train,
        y_train,
        y_unsup,
        x_test,
        y_test,
        test_ids,
        candidates,
        candidate_ids,
        candidate_lists,
    };
    ds.validate()?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::fs;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn short_outputs_fail_at_load() {
        let dir = tempfile::tempdir().unwrap();
        let x = write(dir.path(), "x.csv", "#3,1\n1\n2\n3\n");
        let y = write(dir.path(), "y.csv", "#2,1\n1\n2\n");
        let spec = DataSpec::new(InputFormat::Dense, OutputKind::Dense, x, y);
        assert!(matches!(
            load_dataset(&spec),
            Err(OelError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn loads_bitsets_with_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let x = write(dir.path(), "x.txt", "#dim 4\n0:1\n3:2 1:1\n");
        let y = write(dir.path(), "y.txt", "#dim 3\n0 2\n1\n");
        let spec = DataSpec::new(InputFormat::Sparse, OutputKind::Bitset, x, y);
        let ds = load_dataset(&spec).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.m(), 0);
        assert_eq!(ds.candidates.len(), 2);
        assert_eq!(ds.candidate_ids, vec!["0", "1"]);
        match &ds.x_train {
            Inputs::Features(x) => assert_eq!(x.row(1).to_vec(), vec![0.0, 1.0, 0.0, 2.0]),
            _ => panic!(),
        }
        assert_eq!(ds.y_train.label_sets().unwrap()[0], vec![0, 2]);
    }

    #[test]
    fn mismatched_kinds_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let x = write(dir.path(), "x.csv", "#2,1\n1\n2\n");
        let y = write(dir.path(), "y.csv", "#2,2\n1,0\n0,1\n");
        let u = write(dir.path(), "u.csv", "#1,3\n1,0,0\n");
        let mut spec = DataSpec::new(InputFormat::Dense, OutputKind::Dense, x, y);
        spec.unsup_outputs = Some(u);
        assert!(load_dataset(&spec).is_err());
    }

    #[test]
    fn precomputed_gram_is_kept_verbatim() {
        let dir = tempfile::tempdir().unwrap();
        let g = array![[2.0, 0.1], [0.1, 3.0]];
        let gp = dir.path().join("g.bin");
        formats::write_matrix(&gp, &g).unwrap();
        let y = write(dir.path(), "y.csv", "#2,1\n1\n2\n");
        let t = dir.path().join("t.bin");
        formats::write_matrix(&t, &array![[0.5, 0.25]]).unwrap();
        let mut spec = DataSpec::new(InputFormat::Gram, OutputKind::Dense, gp, y);
        spec.test_inputs = Some(t);
        let ds = load_dataset(&spec).unwrap();
        let k = input_kernel(&KernelSpec::Linear, &ds.x_train, &ds.x_train).unwrap();
        assert_eq!(k, g);
        let kt = input_kernel(
            &KernelSpec::Linear,
            ds.x_test.as_ref().unwrap(),
            &ds.x_train.subset(&[1]),
        )
        .unwrap();
        assert_eq!(kt, array![[0.25]]);

        let asym = dir.path().join("a.bin");
        formats::write_matrix(&asym, &array![[1.0, 0.5], [0.4, 1.0]]).unwrap();
        let y2 = write(dir.path(), "y2.csv", "#2,1\n1\n2\n");
        assert!(load_dataset(&DataSpec::new(
            InputFormat::Gram,
            OutputKind::Dense,
            asym,
            y2
        ))
        .is_err());
    }

    #[test]
    fn train_row_range_selects_pool() {
        let dir = tempfile::tempdir().unwrap();
        let x = write(dir.path(), "x.csv", "#4,1\n1\n2\n3\n4\n");
        let y = write(dir.path(), "y.csv", "#4,1\n10\n20\n30\n40\n");
        let u = write(dir.path(), "u.csv", "#4,1\n10\n20\n30\n40\n");
        let mut spec = DataSpec::new(InputFormat::Dense, OutputKind::Dense, x, y);
        spec.train_rows = Some(0..2);
        spec.unsup_outputs = Some(u);
        spec.unsup_rows = Some(2..4);
        let ds = load_dataset(&spec).unwrap();
        assert_eq!(ds.n(), 2);
        match (&ds.y_train, &ds.y_unsup) {
            (Outputs::Dense(a), Outputs::Dense(b)) => {
                assert_eq!(a.column(0).to_vec(), vec![10.0, 20.0]);
                assert_eq!(b.column(0).to_vec(), vec![30.0, 40.0]);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn fingerprint_tracks_training_data() {
        let dir = tempfile::tempdir().unwrap();
        let x = write(dir.path(), "x.csv", "#2,1\n1\n2\n");
        let y = write(dir.path(), "y.csv", "#2,1\n1\n2\n");
        let spec = DataSpec::new(InputFormat::Dense, OutputKind::Dense, x.clone(), y);
        let a = load_dataset(&spec).unwrap().fingerprint();
        let y2 = write(dir.path(), "y2.csv", "#2,1\n1\n2.5\n");
        let b = load_dataset(&DataSpec::new(InputFormat::Dense, OutputKind::Dense, x, y2))
            .unwrap()
            .fingerprint();
        assert_ne!(a, b);
        assert_eq!(a.len(), 64);
    }
}
