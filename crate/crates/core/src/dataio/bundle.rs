//! Model persistence.
//!
//! A bundle directory holds `manifest.toml` and one binary matrix file per
//! stored matrix. The manifest's last line is `checksum = "<sha256>"` over
//! all preceding bytes, and every matrix entry records the SHA-256 of its
//! file, so any edit to either is detected at load time.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::formats::{decode_matrix, encode_matrix};
use crate::error::{OelError, Result};
use crate::krr::{KrrFit, KrrModel};
use crate::linalg::RegularizedSolver;
use crate::oel::{OelModel, Subspace};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.toml";
const CHECKSUM_PREFIX: &str = "checksum = \"";

/// Kernel as recorded in a manifest or config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelDesc {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sigma2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub path: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub file: String,
    pub rows: usize,
    pub cols: usize,
    pub sha256: String,
}

/// Caller-provided description of how a model was trained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub input_kernel: KernelDesc,
    pub output_kernel: KernelDesc,
    /// `exact` or `randomized`, with sketch parameters when randomized.
    pub eig_method: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub oversample: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub power_iters: Option<usize>,
    /// Named seed streams, as decimal strings (TOML integers are signed).
    pub seeds: BTreeMap<String, String>,
    pub train_fingerprint: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub library_version: String,
    pub lambda: f64,
    pub n: usize,
    pub m: usize,
    pub krr_mode: String,
    pub anchors: Vec<usize>,
    pub oel: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub requested_p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<usize>,
    pub meta: BundleMeta,
    pub matrices: BTreeMap<String, MatrixEntry>,
}

/// A trained model: the regressor and, unless it is a plain regression
/// model, the learned embedding.
#[derive(Clone, Debug)]
pub struct ModelBundle {
    pub meta: BundleMeta,
    pub krr: KrrModel,
    pub oel: Option<OelModel>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn stored_matrices(bundle: &ModelBundle) -> Vec<(&'static str, Array2<f64>)> {
    let mut out = Vec::new();
    match bundle.krr.fit() {
        KrrFit::Exact(s) => out.push(("krr_cholesky", s.factor().clone())),
        KrrFit::Nystrom { factor, .. } => out.push(("krr_nystrom_factor", factor.clone())),
    }
    if let Some(oel) = &bundle.oel {
        let (cs, cu) = oel.candidate_operators();
        out.push(("beta", oel.beta().clone()));
        out.push(("mu", oel.values().clone().insert_axis(Axis(1))));
        out.push(("cand_sup", cs.clone()));
        out.push(("cand_unsup", cu.clone()));
        out.push(("test_proj", oel.test_operator().clone()));
    }
    out
}

/// Write `bundle` into `dir` (created if needed). Returns the manifest.
pub fn save_model(bundle: &ModelBundle, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| OelError::io(dir, e))?;
    let mut matrices = BTreeMap::new();
    for (name, m) in stored_matrices(bundle) {
        let file = format!("{name}.bin");
        let bytes = encode_matrix(&m);
        let path = dir.join(&file);
        fs::write(&path, &bytes).map_err(|e| OelError::io(&path, e))?;
        matrices.insert(
            name.to_string(),
            MatrixEntry {
                file,
                rows: m.nrows(),
                cols: m.ncols(),
                sha256: sha256_hex(&bytes),
            },
        );
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        lambda: bundle.krr.lambda(),
        n: bundle.krr.n(),
        m: bundle.oel.as_ref().map_or(0, OelModel::m),
        krr_mode: if bundle.krr.is_nystrom() {
            "nystrom"
        } else {
            "exact"
        }
        .to_string(),
        anchors: bundle
            .krr
            .anchors()
            .map(<[usize]>::to_vec)
            .unwrap_or_default(),
        oel: bundle.oel.is_some(),
        c: bundle.oel.as_ref().map(OelModel::c),
        requested_p: bundle.oel.as_ref().map(|o| o.subspace().requested_p),
        p: bundle.oel.as_ref().map(OelModel::p),
        meta: bundle.meta.clone(),
        matrices,
    };
    let body = toml::to_string(&manifest)
        .map_err(|e| OelError::Bundle(format!("cannot serialize manifest: {e}")))?;
    let text = format!("{body}{CHECKSUM_PREFIX}{}\"\n", sha256_hex(body.as_bytes()));
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, text).map_err(|e| OelError::io(&path, e))?;
    Ok(manifest)
}

/// Split off and verify the trailing checksum line.
fn verified_body(text: &str) -> Result<&str> {
    let trimmed = text.strip_suffix('\n').unwrap_or(text);
    let cut = trimmed.rfind('\n').map_or(0, |i| i + 1);
    let (body, last) = trimmed.split_at(cut);
    let expected = last
        .strip_prefix(CHECKSUM_PREFIX)
        .and_then(|s| s.strip_suffix('"'))
        .ok_or_else(|| OelError::Bundle("manifest has no trailing checksum line".into()))?;
    if sha256_hex(body.as_bytes()) != expected {
        return Err(OelError::Checksum(MANIFEST_FILE.into()));
    }
    Ok(body)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| OelError::io(&path, e))?;
    let body = verified_body(&text)?;
    let manifest: Manifest =
        toml::from_str(body).map_err(|e| OelError::Bundle(format!("malformed manifest: {e}")))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(OelError::Bundle(format!(
            "bundle format version {} is not supported (expected {FORMAT_VERSION})",
            manifest.format_version
        )));
    }
    Ok(manifest)
}

fn load_matrix(dir: &Path, manifest: &Manifest, name: &str) -> Result<Array2<f64>> {
    let entry = manifest
        .matrices
        .get(name)
        .ok_or_else(|| OelError::Bundle(format!("missing matrix `{name}` in manifest")))?;
    let path = dir.join(&entry.file);
    let bytes = fs::read(&path)
        .map_err(|e| OelError::Bundle(format!("missing matrix file {}: {e}", path.display())))?;
    if sha256_hex(&bytes) != entry.sha256 {
        return Err(OelError::Checksum(entry.file.clone()));
    }
    let m = decode_matrix(&bytes, &path)?;
    if m.dim() != (entry.rows, entry.cols) {
        return Err(OelError::dims(
            "stored matrix",
            format!("{}x{}", entry.rows, entry.cols),
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(m)
}

pub fn load_model(dir: &Path) -> Result<ModelBundle> {
    let manifest = read_manifest(dir)?;
    let shift = manifest.n as f64 * manifest.lambda;
    let fit = match manifest.krr_mode.as_str() {
        "exact" => KrrFit::Exact(RegularizedSolver::from_factor(
            load_matrix(dir, &manifest, "krr_cholesky")?,
            shift,
        )?),
        "nystrom" => KrrFit::Nystrom {
            anchors: manifest.anchors.clone(),
            factor: load_matrix(dir, &manifest, "krr_nystrom_factor")?,
        },
        other => return Err(OelError::Bundle(format!("unknown krr mode `{other}`"))),
    };
    let krr = KrrModel::from_parts(manifest.lambda, manifest.n, fit)?;
    let oel = if manifest.oel {
        let c = manifest
            .c
            .ok_or_else(|| OelError::Bundle("manifest lacks `c`".into()))?;
        let requested_p = manifest
            .requested_p
            .ok_or_else(|| OelError::Bundle("manifest lacks `requested_p`".into()))?;
        let mu = load_matrix(dir, &manifest, "mu")?;
        let values: Array1<f64> = mu.column(0).to_owned();
        let subspace = Subspace {
            beta: load_matrix(dir, &manifest, "beta")?,
            values,
            requested_p,
        };
        let model = OelModel::from_parts(
            subspace,
            c,
            load_matrix(dir, &manifest, "cand_sup")?,
            load_matrix(dir, &manifest, "cand_unsup")?,
            load_matrix(dir, &manifest, "test_proj")?,
        )?;
        if model.n() != manifest.n || model.m() != manifest.m || Some(model.p()) != manifest.p {
            return Err(OelError::Bundle(
                "stored operators disagree with the manifest".into(),
            ));
        }
        Some(model)
    } else {
        None
    };
    Ok(ModelBundle {
        meta: manifest.meta,
        krr,
        oel,
    })
}
