//! Flat key-value run configuration.
//!
//! The file is TOML restricted to dotted scalar keys (`krr.lambda = 1e-3`)
//! and arrays of scalars for grids. Nested tables are flattened, so
//! `[krr]\nlambda = 1e-3` is equivalent. Precedence, lowest first: built-in
//! defaults, the config file, `--set key=value`, dedicated flags (`--seed`,
//! `--threads`, `--iokr-only`, `--share-krr`).
//!
//! Every value read is recorded, defaults included, and written back as the
//! resolved snapshot of a run. Relative paths are resolved against the
//! directory of the file that set them and snapshotted as absolute paths.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use oel::{OelError, Result};
use toml::Value;

/// Recognized keys with a one-line description (rendered by `oel keys`).
pub const KEYS: &[(&str, &str)] = &[
    (
        "seed",
        "root seed; component seeds are derived from it by name",
    ),
    ("threads", "worker threads (0 = all cores)"),
    (
        "iokr_only",
        "skip embedding learning and decode with the plain regressor",
    ),
    ("model", "model bundle directory (default: <out>/model)"),
    ("data.input_format", "dense | sparse | gram"),
    ("data.output_kind", "dense | bitset | permutation | gram"),
    (
        "data.train_inputs",
        "training inputs (features, or square train Gram for `gram`)",
    ),
    (
        "data.train_outputs",
        "supervised outputs, one per training input",
    ),
    ("data.unsup_outputs", "unlabeled outputs (optional)"),
    (
        "data.test_inputs",
        "test inputs (features, or test-vs-train Gram block)",
    ),
    (
        "data.test_outputs",
        "test ground truth (optional, used by evaluate)",
    ),
    (
        "data.test_ids",
        "query ids, one per line (default: row numbers)",
    ),
    (
        "data.candidates",
        "candidate outputs (default: the supervised outputs)",
    ),
    (
        "data.candidate_ids",
        "candidate ids, one per line (default: row numbers)",
    ),
    (
        "data.candidate_lists",
        "per-query candidate rows: `query<TAB>row row ...`",
    ),
    (
        "data.train_rows",
        "row range `a..b` of the training files to use",
    ),
    (
        "data.unsup_rows",
        "row range `a..b` of the unlabeled output file to use",
    ),
    (
        "kernel.input.kind",
        "gaussian | linear | tanimoto | gaussian_tanimoto | precomputed",
    ),
    (
        "kernel.input.sigma2",
        "width of Gaussian-type input kernels",
    ),
    (
        "kernel.output.kind",
        "gaussian | linear | tanimoto | gaussian_tanimoto | precomputed",
    ),
    (
        "kernel.output.sigma2",
        "width of Gaussian-type output kernels",
    ),
    (
        "kernel.output.path",
        "output Gram over all output objects, for `precomputed`",
    ),
    ("krr.lambda", "ridge parameter"),
    ("krr.nystrom_q", "Nystrom anchors (0 = exact regression)"),
    (
        "krr.seed",
        "anchor selection seed (default: derived from seed)",
    ),
    (
        "oel.c",
        "balance between supervised (1) and unlabeled (0) outputs",
    ),
    ("oel.p", "embedding dimension"),
    ("oel.method", "exact | randomized"),
    ("oel.seed", "sketch seed (default: derived from seed)"),
    ("oel.oversample", "randomized eigensolver oversampling"),
    ("oel.power_iters", "randomized eigensolver power iterations"),
    ("predict.k", "candidates kept per query"),
    (
        "evaluate.rankings",
        "rankings file to evaluate (default: <out>/rankings.tsv)",
    ),
    (
        "tune.protocol",
        "ssv (repeated subsample validation) | nested",
    ),
    (
        "tune.metric",
        "mse | rkhs_loss | f1 | hamming | kendall_tau | topK",
    ),
    ("tune.reps", "ssv repetitions"),
    ("tune.ratio", "ssv training fraction"),
    ("tune.outer", "nested CV outer folds"),
    ("tune.inner", "nested CV inner folds"),
    ("tune.lambda", "lambda grid (default 1e-7 .. 1)"),
    ("tune.p", "p grid (default 2, 4, 8, ... up to n + m)"),
    ("tune.c", "c grid (default 0, 0.25, 0.5, 0.75, 1)"),
    (
        "tune.input_sigma2",
        "input kernel width grid (default: configured width only)",
    ),
    (
        "tune.nystrom_q",
        "anchor count grid (default: krr.nystrom_q only)",
    ),
    (
        "tune.share_krr",
        "reuse regression fits across (p, c) grid points",
    ),
    ("bench.n", "training outputs (IOKR decode dimension)"),
    ("bench.p", "embedding dimension (OEL decode dimension)"),
    ("bench.candidates", "candidate set sizes"),
    ("bench.queries", "queries per timing run"),
    ("bench.block", "candidates scored per streamed block"),
    (
        "bench.repeats",
        "timing repeats (per-block minima are summed)",
    ),
    ("synth.n", "supervised pairs"),
    ("synth.m", "unlabeled outputs"),
    ("synth.n_test", "test pairs"),
    ("synth.sigma_x2", "input variance"),
    ("synth.sigma_z2", "noise-coordinate variance"),
];

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

fn usage(reason: String) -> OelError {
    OelError::InvalidParameter {
        name: "config",
        reason,
    }
}

#[derive(Clone, Debug)]
struct Entry {
    value: Value,
    base: PathBuf,
}

#[derive(Clone, Debug, Default)]
pub struct Config {
    values: BTreeMap<String, Entry>,
    resolved: BTreeMap<String, Value>,
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.clone())),
        }
    }
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| OelError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let base = path
            .parent()
            .map(Path::to_path_buf)
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or_else(|| PathBuf::from("."));
        let mut cfg = Config::default();
        cfg.merge_text(&text, &base)
            .map_err(|e| usage(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn merge_text(&mut self, text: &str, base: &Path) -> std::result::Result<(), String> {
        let table: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
        let mut flat = Vec::new();
        flatten("", &table, &mut flat);
        for (k, v) in flat {
            self.set(&k, v, base)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: Value, base: &Path) -> std::result::Result<(), String> {
        if !known(key) {
            return Err(format!("unknown key `{key}`"));
        }
        self.values.insert(
            key.to_string(),
            Entry {
                value,
                base: base.to_path_buf(),
            },
        );
        Ok(())
    }

    /// Apply `key=value`; the value is parsed as a TOML value, falling back
    /// to a plain string.
    pub fn set_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| usage(format!("`--set {assignment}` is not `key=value`")))?;
        let (k, v) = (k.trim(), v.trim());
        let value = toml::from_str::<toml::Table>(&format!("v = {v}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(v.to_string()));
        let cwd = std::env::current_dir().unwrap_or_else(|_| PathBuf::from("."));
        self.set(k, value, &cwd).map_err(usage)
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn record(&mut self, key: &str, v: Value) {
        self.resolved.insert(key.to_string(), v);
    }

    fn raw(&self, key: &str) -> Option<&Value> {
        debug_assert!(known(key), "undocumented key {key}");
        self.values.get(key).map(|e| &e.value)
    }

    fn type_err(key: &str, want: &str, got: &Value) -> OelError {
        usage(format!("`{key}` must be {want}, got `{got}`"))
    }

    pub fn opt_f64(&mut self, key: &str) -> Result<Option<f64>> {
        let v = match self.raw(key) {
            None => return Ok(None),
            Some(Value::Float(f)) => *f,
            Some(Value::Integer(i)) => *i as f64,
            Some(other) => return Err(Self::type_err(key, "a number", other)),
        };
        self.record(key, Value::Float(v));
        Ok(Some(v))
    }

    pub fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = self.opt_f64(key)?.unwrap_or(default);
        self.record(key, Value::Float(v));
        Ok(v)
    }

    pub fn opt_u64(&mut self, key: &str) -> Result<Option<u64>> {
        let v = match self.raw(key) {
            None => return Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => *i as u64,
            // Seeds above i64::MAX round-trip as strings.
            Some(Value::String(s)) if s.parse::<u64>().is_ok() => s.parse().expect("checked"),
            Some(other) => return Err(Self::type_err(key, "a non-negative integer", other)),
        };
        self.record(key, u64_value(v));
        Ok(Some(v))
    }

    pub fn u64_or(&mut self, key: &str, default: u64) -> Result<u64> {
        let v = self.opt_u64(key)?.unwrap_or(default);
        self.record(key, u64_value(v));
        Ok(v)
    }

    pub fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        Ok(self.u64_or(key, default as u64)? as usize)
    }

    pub fn bool_or(&mut self, key: &str, default: bool) -> Result<bool> {
        let v = match self.raw(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(other) => return Err(Self::type_err(key, "true or false", other)),
        };
        self.record(key, Value::Boolean(v));
        Ok(v)
    }

    pub fn opt_str(&mut self, key: &str) -> Result<Option<String>> {
        let v = match self.raw(key) {
            None => return Ok(None),
            Some(Value::String(s)) => s.clone(),
            Some(other) => return Err(Self::type_err(key, "a string", other)),
        };
        self.record(key, Value::String(v.clone()));
        Ok(Some(v))
    }

    pub fn str_or(&mut self, key: &str, default: &str) -> Result<String> {
        let v = self.opt_str(key)?.unwrap_or_else(|| default.to_string());
        self.record(key, Value::String(v.clone()));
        Ok(v)
    }

    /// A path, resolved against the directory of the file that set it.
    pub fn opt_path(&mut self, key: &str) -> Result<Option<PathBuf>> {
        let Some(entry) = self.values.get(key).cloned() else {
            return Ok(None);
        };
        let s = match &entry.value {
            Value::String(s) => s.clone(),
            other => return Err(Self::type_err(key, "a path string", other)),
        };
        let p = Path::new(&s);
        let full = if p.is_absolute() {
            p.to_path_buf()
        } else {
            entry.base.join(p)
        };
        let full = full.canonicalize().unwrap_or(full);
        self.record(key, Value::String(full.display().to_string()));
        Ok(Some(full))
    }

    pub fn path(&mut self, key: &str) -> Result<PathBuf> {
        self.opt_path(key)?
            .ok_or_else(|| usage(format!("missing required key `{key}`")))
    }

    pub fn opt_f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        let v = match self.raw(key) {
            None => return Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|x| match x {
                    Value::Float(f) => Ok(*f),
                    Value::Integer(i) => Ok(*i as f64),
                    other => Err(Self::type_err(key, "an array of numbers", other)),
                })
                .collect::<Result<Vec<_>>>()?,
            Some(Value::Float(f)) => vec![*f],
            Some(Value::Integer(i)) => vec![*i as f64],
            Some(other) => return Err(Self::type_err(key, "an array of numbers", other)),
        };
        self.record_f64_list(key, &v);
        Ok(Some(v))
    }

    pub fn record_f64_list(&mut self, key: &str, v: &[f64]) {
        self.record(
            key,
            Value::Array(v.iter().map(|&f| Value::Float(f)).collect()),
        );
    }

    pub fn opt_usize_list(&mut self, key: &str) -> Result<Option<Vec<usize>>> {
        let v = match self.raw(key) {
            None => return Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|x| match x {
                    Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                    other => Err(Self::type_err(
                        key,
                        "an array of non-negative integers",
                        other,
                    )),
                })
                .collect::<Result<Vec<_>>>()?,
            Some(Value::Integer(i)) if *i >= 0 => vec![*i as usize],
            Some(other) => {
                return Err(Self::type_err(
                    key,
                    "an array of non-negative integers",
                    other,
                ))
            }
        };
        self.record_usize_list(key, &v);
        Ok(Some(v))
    }

    pub fn record_usize_list(&mut self, key: &str, v: &[usize]) {
        self.record(
            key,
            Value::Array(v.iter().map(|&i| Value::Integer(i as i64)).collect()),
        );
    }

    /// Record a value chosen by the program (e.g. a tuned setting).
    pub fn record_value(&mut self, key: &str, v: Value) {
        self.record(key, v);
    }

    /// The configuration as run: explicit values plus every default read.
    pub fn resolved(&self) -> BTreeMap<String, Value> {
        let mut out: BTreeMap<String, Value> = self
            .values
            .iter()
            .map(|(k, e)| (k.clone(), e.value.clone()))
            .collect();
        out.extend(self.resolved.iter().map(|(k, v)| (k.clone(), v.clone())));
        out
    }

    pub fn snapshot_text(&self) -> String {
        render(&self.resolved())
    }

    pub fn write_snapshot(&self, path: &Path) -> Result<()> {
        fs::write(path, self.snapshot_text()).map_err(|e| OelError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

fn u64_value(v: u64) -> Value {
    i64::try_from(v).map_or_else(|_| Value::String(v.to_string()), Value::Integer)
}

/// One `key = value` line per entry, sorted by key.
pub fn render(values: &BTreeMap<String, Value>) -> String {
    let mut out = String::new();
    for (k, v) in values {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

/// Parse a `a..b` row range.
pub fn parse_range(key: &str, s: &str) -> Result<std::ops::Range<usize>> {
    let bad = || usage(format!("`{key}` must look like `a..b`, got `{s}`"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a >= b {
        return Err(bad());
    }
    Ok(a..b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_tables_flatten() {
        let mut c = Config::default();
        c.merge_text(
            "[krr]\nlambda = 0.5\n[kernel.input]\nkind = \"linear\"\n",
            Path::new("."),
        )
        .unwrap();
        assert_eq!(c.f64_or("krr.lambda", 1.0).unwrap(), 0.5);
        assert_eq!(c.str_or("kernel.input.kind", "gaussian").unwrap(), "linear");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut c = Config::default();
        assert!(c.merge_text("krr.lamda = 1\n", Path::new(".")).is_err());
        assert!(c.set_override("oel.q=3").is_err());
    }

    #[test]
    fn overrides_parse_toml_scalars() {
        let mut c = Config::default();
        c.merge_text("oel.p = 3\n", Path::new(".")).unwrap();
        c.set_override("oel.p=7").unwrap();
        c.set_override("oel.method=randomized").unwrap();
        c.set_override("tune.lambda=[0.1, 1]").unwrap();
        assert_eq!(c.usize_or("oel.p", 1).unwrap(), 7);
        assert_eq!(c.str_or("oel.method", "exact").unwrap(), "randomized");
        assert_eq!(
            c.opt_f64_list("tune.lambda").unwrap().unwrap(),
            vec![0.1, 1.0]
        );
    }

    #[test]
    fn snapshot_reproduces_values() {
        let mut c = Config::default();
        // Too large for a TOML integer: kept as a string.
        c.set_override("seed=18446744073709551615").unwrap();
        let seed = c.u64_or("seed", 0).unwrap();
        assert_eq!(seed, u64::MAX);
        c.f64_or("krr.lambda", 1e-3).unwrap();
        c.bool_or("iokr_only", false).unwrap();
        let text = c.snapshot_text();
        let mut d = Config::default();
        d.merge_text(&text, Path::new(".")).unwrap();
        assert_eq!(d.u64_or("seed", 0).unwrap(), u64::MAX);
        assert_eq!(d.f64_or("krr.lambda", 9.0).unwrap(), 1e-3);
        assert_eq!(d.snapshot_text(), text);
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("k", "0..1000").unwrap(), 0..1000);
        assert!(parse_range("k", "5..5").is_err());
        assert!(parse_range("k", "a..b").is_err());
    }
}
