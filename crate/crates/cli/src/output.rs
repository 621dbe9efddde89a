//! File emission: CSV with 17 significant digits, LF endings, pinned
//! headers; JSON through serde_json (sorted keys, shortest round-trip
//! floats). Both are byte-stable across reruns.

use std::fs;
use std::path::{Path, PathBuf};

use scmac_core::coupled::Constellation;

use crate::commands::CliError;

pub fn sig17(v: f64) -> String {
    if v.is_nan() {
        return "nan".to_string();
    }
    format!("{v:.16e}")
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::Io(format!("write {}: {e}", path.display())))?;
    Ok(path)
}

pub fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("serialize {name}: {e}")))?;
    text.push('\n');
    write_text(dir, name, &text)
}

pub fn constellation_csv(c: &Constellation) -> String {
    let (x1, x2) = c.rows();
    let l = c.half_len() as i64;
    let mut s = String::from("i,x1,x2\n");
    for (k, i) in (-l..=l).enumerate() {
        s.push_str(&format!("{i},{},{}\n", sig17(x1[k]), sig17(x2[k])));
    }
    s
}

/// Inclusive evenly spaced grid.
pub fn linspace(start: f64, end: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![start];
    }
    (0..points)
        .map(|k| start + (end - start) * k as f64 / (points - 1) as f64)
        .collect()
}
