//! Dataset writers: CSV at fixed precision, JSON sidecars, run directories.
//!
//! All floating-point output carries 12 significant digits with LF line
//! endings, so reruns of the same configuration diff bit-exactly.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// 12 significant digits; non-finite values spelled out so every cell stays
/// machine-parseable.
pub fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut out = String::with_capacity(64 + rows.len() * header.len() * 20);
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    s.push('\n');
    fs::write(path, s)
}

/// A run's output directory `<outdir>/<experiment>/<stamp>/`.
pub struct RunDir {
    pub root: PathBuf,
    pub stamp: String,
}

impl RunDir {
    /// With an explicit stamp the directory is reused (reruns overwrite, so
    /// outputs can be diffed in place); an automatic stamp never collides —
    /// a numeric suffix is appended if the second-resolution name exists.
    pub fn create(outdir: &Path, experiment: &str, stamp: Option<&str>) -> io::Result<Self> {
        let base = outdir.join(experiment);
        fs::create_dir_all(&base)?;
        match stamp {
            Some(s) => {
                let root = base.join(s);
                fs::create_dir_all(&root)?;
                Ok(Self { root, stamp: s.to_string() })
            }
            None => {
                let auto = chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string();
                let mut candidate = auto.clone();
                for k in 1.. {
                    match fs::create_dir(base.join(&candidate)) {
                        Ok(()) => break,
                        Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                            candidate = format!("{auto}-{k}");
                        }
                        Err(e) => return Err(e),
                    }
                }
                Ok(Self { root: base.join(&candidate), stamp: candidate })
            }
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }
}

/// One entry of the failure manifest: which point failed and why.
#[derive(Debug, Serialize)]
pub struct Failure {
    pub point: serde_json::Value,
    pub error: String,
}
