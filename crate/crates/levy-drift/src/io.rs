//! File outputs: CSV tables and the raw skeleton dump.
//!
//! CSV numbers use Rust's shortest round-trip formatting, so they parse back
//! to the exact `f64`.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use levy_drift_core::analyzer::Verification;
use levy_drift_core::simulator::PathEnsemble;

use crate::error::CliError;
use crate::report::{PsiRow, SnapshotOut, TvPointOut};

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|source| CliError::Write {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(OutDir {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }
}

pub fn verification_csv(v: &Verification) -> String {
    let mut s = String::from("norm_x,direction,lv,bound,margin,est_error\n");
    for r in &v.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.norm_x, r.direction, r.lv, r.bound, r.margin, r.est_error
        );
    }
    s
}

pub fn tv_csv(points: &[TvPointOut]) -> String {
    let mut s = String::from("t,estimate,ci_lo,ci_hi\n");
    for p in points {
        let _ = writeln!(s, "{},{},{},{}", p.t, p.estimate, p.ci_lo, p.ci_hi);
    }
    s
}

pub fn snapshots_csv(rows: &[SnapshotOut], dim: usize) -> String {
    let mut s = String::from("t");
    for k in 0..dim {
        let _ = write!(s, ",mean_x{}", k + 1);
    }
    s.push_str(",mean_norm,mean_v,se_v\n");
    for r in rows {
        let _ = write!(s, "{}", r.t);
        for m in &r.mean {
            let _ = write!(s, ",{m}");
        }
        let _ = writeln!(s, ",{},{},{}", r.mean_norm, r.mean_v, r.se_v);
    }
    s
}

pub fn psi_csv(rows: &[PsiRow]) -> String {
    let mut s = String::from("t,psi\n");
    for r in rows {
        let _ = writeln!(s, "{},{}", r.t, r.psi);
    }
    s
}

/// Little-endian layout: `u64` dimension, `u64` path count, `u64` snapshot
/// count, then the states as `f64`, path-major, then snapshot, then
/// coordinate. Exploded paths hold NaN after the explosion.
pub fn skeleton_bytes(e: &PathEnsemble) -> Vec<u8> {
    let raw = e.raw();
    let mut out = Vec::with_capacity(24 + 8 * raw.len());
    for h in [e.dim(), e.n_paths(), e.n_snapshots()] {
        out.write_all(&(h as u64).to_le_bytes()).unwrap();
    }
    for v in raw {
        out.write_all(&v.to_le_bytes()).unwrap();
    }
    out
}

/// Parses [`skeleton_bytes`] back into `(dim, paths, snapshots, data)`.
pub fn read_skeleton(bytes: &[u8]) -> Option<(usize, usize, usize, Vec<f64>)> {
    let word = |i: usize| -> Option<[u8; 8]> { bytes.get(8 * i..8 * i + 8)?.try_into().ok() };
    let d = u64::from_le_bytes(word(0)?) as usize;
    let n = u64::from_le_bytes(word(1)?) as usize;
    let k = u64::from_le_bytes(word(2)?) as usize;
    let len = d.checked_mul(n)?.checked_mul(k)?;
    if bytes.len() != 24 + 8 * len {
        return None;
    }
    let data = (0..len).map(|i| f64::from_le_bytes(word(3 + i).unwrap())).collect();
    Some((d, n, k, data))
}
