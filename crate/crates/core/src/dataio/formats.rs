//! Text and binary file formats.
//!
//! * Dense matrix: CSV with a `#rows,cols` first line.
//! * Sparse rows: `#dim D` first line, then one row per line of `index:value`
//!   pairs (0-based indices).
//! * Bitsets: `#dim L` first line, then one line of whitespace-separated
//!   active label indices per example (empty line for no labels).
//! * Permutations: one line of comma-separated 1-based ranks per example.
//! * Index lists: one non-negative integer per line.
//! * Binary matrices: 8-byte magic, `u64` rows and cols, then row-major
//!   `f64`, all little-endian.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{OelError, Result};
use crate::kernels::Permutation;

pub const MATRIX_MAGIC: &[u8; 8] = b"OELMAT01";

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| OelError::io(path, e))
}

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> OelError {
    OelError::Parse {
        file: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

/// Trimmed lines with their 1-based line numbers, skipping `%` comments.
/// Blank lines are kept: in the row formats they are empty examples.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.starts_with('%'))
}

fn parse_header<'a>(
    path: &Path,
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    prefix: &str,
) -> Result<(usize, &'a str)> {
    for (no, line) in lines.by_ref() {
        if line.is_empty() {
            continue;
        }
        return match line.strip_prefix(prefix) {
            Some(rest) => Ok((no, rest.trim())),
            None => Err(parse_err(
                path,
                no,
                format!("expected header line `{prefix}...`"),
            )),
        };
    }
    Err(parse_err(
        path,
        1,
        format!("missing header line `{prefix}...`"),
    ))
}

fn parse_usize(path: &Path, line: usize, s: &str, what: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("invalid {what} `{s}`")))
}

fn parse_f64(path: &Path, line: usize, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("invalid number `{s}`")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite value `{s}`")));
    }
    Ok(v)
}

/// Dense CSV matrix with a `#rows,cols` header.
pub fn read_dense(path: &Path) -> Result<Array2<f64>> {
    let text = read_text(path)?;
    parse_dense(&text, path)
}

pub fn parse_dense(text: &str, path: &Path) -> Result<Array2<f64>> {
    let mut lines = content_lines(text);
    let (hline, header) = parse_header(path, &mut lines, "#")?;
    let (r, c) = header
        .split_once(',')
        .ok_or_else(|| parse_err(path, hline, "header must be `#rows,cols`"))?;
    let rows = parse_usize(path, hline, r, "row count")?;
    let cols = parse_usize(path, hline, c, "column count")?;
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (no, line) in lines {
        if line.is_empty() {
            continue;
        }
        seen += 1;
        if seen > rows {
            return Err(parse_err(
                path,
                no,
                format!("more than the declared {rows} rows"),
            ));
        }
        let before = data.len();
        for field in line.split(',') {
            data.push(parse_f64(path, no, field)?);
        }
        let got = data.len() - before;
        if got != cols {
            return Err(parse_err(
                path,
                no,
                format!("expected {cols} columns, got {got}"),
            ));
        }
    }
    if seen != rows {
        return Err(parse_err(
            path,
            text.lines().count(),
            format!("expected {rows} rows, got {seen}"),
        ));
    }
    Ok(Array2::from_shape_vec((rows, cols), data).expect("shape checked"))
}

pub fn write_dense(path: &Path, m: &Array2<f64>) -> Result<()> {
    let mut out = format!("#{},{}\n", m.nrows(), m.ncols());
    for row in m.rows() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| OelError::io(path, e))
}

/// Rows of `(index, value)` pairs over a declared dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRows {
    pub dim: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.rows.len(), self.dim));
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[[i, j]] = v;
            }
        }
        m
    }
}

pub fn read_sparse(path: &Path) -> Result<SparseRows> {
    let text = read_text(path)?;
    parse_sparse(&text, path)
}

pub fn parse_sparse(text: &str, path: &Path) -> Result<SparseRows> {
    let mut lines = content_lines(text);
    let (hline, header) = parse_header(path, &mut lines, "#dim")?;
    let dim = parse_usize(path, hline, header, "dimension")?;
    let mut rows = Vec::new();
    for (no, line) in lines {
        let mut row = Vec::new();
        for tok in line.split_whitespace() {
            let (i, v) = tok.split_once(':').ok_or_else(|| {
                parse_err(path, no, format!("expected `index:value`, got `{tok}`"))
            })?;
            let i = parse_usize(path, no, i, "index")?;
            if i >= dim {
                return Err(parse_err(
                    path,
                    no,
                    format!("index {i} out of range for dimension {dim}"),
                ));
            }
            row.push((i, parse_f64(path, no, v)?));
        }
        rows.push(row);
    }
    Ok(SparseRows { dim, rows })
}

/// Label sets over a universe of `dim` labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Bitsets {
    pub dim: usize,
    pub sets: Vec<Vec<usize>>,
}

impl Bitsets {
    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.sets.len(), self.dim));
        for (i, set) in self.sets.iter().enumerate() {
            for &j in set {
                m[[i, j]] = 1.0;
            }
        }
        m
    }
}

pub fn read_bitsets(path: &Path) -> Result<Bitsets> {
    let text = read_text(path)?;
    parse_bitsets(&text, path)
}

/// Every line after the header is one example; a blank line is an empty
/// label set.
pub fn parse_bitsets(text: &str, path: &Path) -> Result<Bitsets> {
    let mut lines = content_lines(text);
    let (hline, header) = parse_header(path, &mut lines, "#dim")?;
    let dim = parse_usize(path, hline, header, "dimension")?;
    let mut sets = Vec::new();
    for (no, line) in lines {
        let mut set = Vec::new();
        for tok in line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
        {
            let i = parse_usize(path, no, tok, "label index")?;
            if i >= dim {
                return Err(parse_err(
                    path,
                    no,
                    format!("label {i} out of range for dimension {dim}"),
                ));
            }
            set.push(i);
        }
        set.sort_unstable();
        set.dedup();
        sets.push(set);
    }
    Ok(Bitsets { dim, sets })
}

pub fn write_bitsets(path: &Path, b: &Bitsets) -> Result<()> {
    let mut out = format!("#dim {}\n", b.dim);
    for set in &b.sets {
        let s: Vec<String> = set.iter().map(|i| i.to_string()).collect();
        out.push_str(&s.join(" "));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| OelError::io(path, e))
}

pub fn read_permutations(path: &Path) -> Result<Vec<Permutation>> {
    let text = read_text(path)?;
    parse_permutations(&text, path)
}

pub fn parse_permutations(text: &str, path: &Path) -> Result<Vec<Permutation>> {
    let mut out: Vec<Permutation> = Vec::new();
    for (no, line) in content_lines(text) {
        if line.is_empty() {
            continue;
        }
        let ranks = line
            .split(',')
            .map(|t| parse_usize(path, no, t, "rank"))
            .collect::<Result<Vec<_>>>()?;
        let perm = Permutation::new(ranks).map_err(|e| parse_err(path, no, e.to_string()))?;
        if let Some(first) = out.first() {
            if first.len() != perm.len() {
                return Err(parse_err(
                    path,
                    no,
                    format!(
                        "permutation of length {} after length {}",
                        perm.len(),
                        first.len()
                    ),
                ));
            }
        }
        out.push(perm);
    }
    Ok(out)
}

pub fn write_permutations(path: &Path, perms: &[Permutation]) -> Result<()> {
    let mut out = String::new();
    for p in perms {
        let s: Vec<String> = p.ranks().iter().map(|r| r.to_string()).collect();
        out.push_str(&s.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| OelError::io(path, e))
}

pub fn read_index_list(path: &Path) -> Result<Vec<usize>> {
    let text = read_text(path)?;
    content_lines(&text)
        .filter(|(_, l)| !l.is_empty())
        .map(|(no, l)| parse_usize(path, no, l, "index"))
        .collect()
}

pub fn read_id_list(path: &Path) -> Result<Vec<String>> {
    let text = read_text(path)?;
    Ok(content_lines(&text)
        .filter(|(_, l)| !l.is_empty())
        .map(|(_, l)| l.to_string())
        .collect())
}

/// Per-query candidate lists: `query_index<TAB>row row row ...`, where the
/// rows index the candidate file. Every query in `0..n_queries` must appear
/// exactly once.
pub fn read_candidate_lists(path: &Path, n_queries: usize) -> Result<Vec<Vec<usize>>> {
    let text = read_text(path)?;
    parse_candidate_lists(&text, path, n_queries)
}

pub fn parse_candidate_lists(text: &str, path: &Path, n_queries: usize) -> Result<Vec<Vec<usize>>> {
    let mut lists: Vec<Option<Vec<usize>>> = vec![None; n_queries];
    for (no, line) in content_lines(text) {
        if line.is_empty() {
            continue;
        }
        let (q, rest) = line
            .split_once(|c: char| c == '\t' || c == ' ')
            .unwrap_or((line, ""));
        let q = parse_usize(path, no, q, "query index")?;
        if q >= n_queries {
            return Err(parse_err(
                path,
                no,
                format!("query {q} out of range ({n_queries} queries)"),
            ));
        }
        if lists[q].is_some() {
            return Err(parse_err(path, no, format!("query {q} listed twice")));
        }
        let rows = rest
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| parse_usize(path, no, t, "candidate row"))
            .collect::<Result<Vec<_>>>()?;
        if rows.is_empty() {
            return Err(parse_err(path, no, format!("query {q} has no candidates")));
        }
        lists[q] = Some(rows);
    }
    lists
        .into_iter()
        .enumerate()
        .map(|(q, l)| {
            l.ok_or_else(|| parse_err(path, 0, format!("query {q} has no candidate list")))
        })
        .collect()
}

/// Encode a matrix in the binary format.
pub fn encode_matrix(m: &Array2<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 8 * m.len());
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for v in m.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_matrix(bytes: &[u8], origin: &Path) -> Result<Array2<f64>> {
    let bad = |reason: &str| OelError::Bundle(format!("{}: {reason}", origin.display()));
    if bytes.len() < 24 {
        return Err(bad("truncated header"));
    }
    if &bytes[..8] != MATRIX_MAGIC {
        return Err(bad("bad magic or unsupported matrix format version"));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let cols = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes")) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| bad("dimension overflow"))?;
    if bytes.len() - 24 != expected {
        return Err(bad(&format!(
            "payload of {} bytes does not match {rows}x{cols}",
            bytes.len() - 24
        )));
    }
    let data = bytes[24..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(Array2::from_shape_vec((rows, cols), data).expect("shape checked"))
}

pub fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<Vec<u8>> {
    let bytes = encode_matrix(m);
    let mut f = fs::File::create(path).map_err(|e| OelError::io(path, e))?;
    f.write_all(&bytes).map_err(|e| OelError::io(path, e))?;
    Ok(bytes)
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| OelError::io(path, e))?;
    decode_matrix(&bytes, path)
}
