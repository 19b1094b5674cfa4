//! On-disk sequences of block-4×4 systems.
//!
//! A manifest is a JSON file:
//!
//! ```json
//! {
//!   "format": "hybrid-kkt-sequence/1",
//!   "systems": [
//!     { "n_x": 40, "m_c": 10, "m_d": 8,
//!       "h": "k000_h.mtx", "j": "k000_j.mtx", "j_d": "k000_jd.mtx",
//!       "vectors": "k000_vectors.json" }
//!   ]
//! }
//! ```
//!
//! Paths are relative to the manifest's directory. `h` is a symmetric Matrix Market file,
//! `j` and `j_d` are general ones, and the vectors file holds the named arrays `d_x`, `d_s`,
//! `r_x_tilde`, `r_s`, `r_y` and `r_yd`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::BlockKkt4x4;
use crate::error::{Error, Result};
use crate::mtx::{read_matrix_market, write_matrix_market, Symmetry};

pub const MANIFEST_FORMAT: &str = "hybrid-kkt-sequence/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceManifest {
    pub format: String,
    pub systems: Vec<SystemEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemEntry {
    pub n_x: usize,
    pub m_c: usize,
    pub m_d: usize,
    pub h: PathBuf,
    pub j: PathBuf,
    pub j_d: PathBuf,
    pub vectors: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemVectors {
    pub d_x: Vec<f64>,
    pub d_s: Vec<f64>,
    pub r_x_tilde: Vec<f64>,
    pub r_s: Vec<f64>,
    pub r_y: Vec<f64>,
    pub r_yd: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LoadedSequence {
    pub systems: Vec<BlockKkt4x4>,
    /// All systems share dimensions and the sparsity patterns of `H`, `J` and `J_d`.
    pub pattern_uniform: bool,
}

fn manifest_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Manifest {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn read_manifest(path: &Path) -> Result<SequenceManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: SequenceManifest =
        serde_json::from_str(&text).map_err(|e| manifest_error(path, e.to_string()))?;
    if manifest.format != MANIFEST_FORMAT {
        return Err(manifest_error(
            path,
            format!("unsupported format {:?}", manifest.format),
        ));
    }
    Ok(manifest)
}

fn load_entry(base: &Path, entry: &SystemEntry, manifest_path: &Path) -> Result<BlockKkt4x4> {
    let h = read_matrix_market(&base.join(&entry.h))?.matrix;
    let j = read_matrix_market(&base.join(&entry.j))?.matrix;
    let j_d = read_matrix_market(&base.join(&entry.j_d))?.matrix;
    let vec_path = base.join(&entry.vectors);
    let text = fs::read_to_string(&vec_path).map_err(|e| Error::io(&vec_path, e))?;
    let v: SystemVectors =
        serde_json::from_str(&text).map_err(|e| manifest_error(&vec_path, e.to_string()))?;

    let declared = (entry.n_x, entry.m_c, entry.m_d);
    let found = (h.nrows(), j.nrows(), j_d.nrows());
    if declared != found {
        return Err(manifest_error(
            manifest_path,
            format!("declared (n_x, m_c, m_d) = {declared:?} but files give {found:?}"),
        ));
    }
    BlockKkt4x4::new(h, j, j_d, v.d_x, v.d_s, v.r_x_tilde, v.r_s, v.r_y, v.r_yd)
}

/// Loads every system listed in a manifest. An empty list is an error.
pub fn load_sequence(manifest_path: &Path) -> Result<LoadedSequence> {
    let manifest = read_manifest(manifest_path)?;
    if manifest.systems.is_empty() {
        return Err(manifest_error(manifest_path, "manifest lists no systems"));
    }
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let systems = manifest
        .systems
        .iter()
        .map(|e| load_entry(base, e, manifest_path))
        .collect::<Result<Vec<_>>>()?;
    let pattern_uniform = systems.windows(2).all(|w| w[0].same_pattern(&w[1]));
    Ok(LoadedSequence {
        systems,
        pattern_uniform,
    })
}

/// Writes systems as `k{index:03}_*` files plus `manifest.json` into `dir`, returning the
/// manifest path. Stored zeros are written, so patterns survive the round trip.
pub fn write_sequence(dir: &Path, systems: &[BlockKkt4x4]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(systems.len());
    for (k, sys) in systems.iter().enumerate() {
        let entry = SystemEntry {
            n_x: sys.n_x(),
            m_c: sys.m_c(),
            m_d: sys.m_d(),
            h: format!("k{k:03}_h.mtx").into(),
            j: format!("k{k:03}_j.mtx").into(),
            j_d: format!("k{k:03}_jd.mtx").into(),
            vectors: format!("k{k:03}_vectors.json").into(),
        };
        write_matrix_market(&dir.join(&entry.h), &sys.h, Symmetry::Symmetric)?;
        write_matrix_market(&dir.join(&entry.j), &sys.j, Symmetry::General)?;
        write_matrix_market(&dir.join(&entry.j_d), &sys.j_d, Symmetry::General)?;
        let vectors = SystemVectors {
            d_x: sys.d_x.clone(),
            d_s: sys.d_s.clone(),
            r_x_tilde: sys.r_x_tilde.clone(),
            r_s: sys.r_s.clone(),
            r_y: sys.r_y.clone(),
            r_yd: sys.r_yd.clone(),
        };
        let vec_path = dir.join(&entry.vectors);
        let json = serde_json::to_string(&vectors).expect("vectors serialize");
        fs::write(&vec_path, json).map_err(|e| Error::io(&vec_path, e))?;
        entries.push(entry);
    }
    let manifest = SequenceManifest {
        format: MANIFEST_FORMAT.to_string(),
        systems: entries,
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
