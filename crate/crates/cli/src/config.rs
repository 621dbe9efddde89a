//! Flat key = value config files and flag/file/default resolution.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use crate::commands::CliError;

/// Keys the file may contain; aliases fold into the canonical name.
const KNOWN_KEYS: &[&str] = &[
    "l1", "r1", "l2", "r2", "half_len", "window", "m", "eps", "chi", "trials", "seed", "tol",
    "tol_eps", "max_sweeps", "schedule", "schedule_seed", "shape_tol", "grid_start", "grid_end",
    "grid_points", "R1", "R2", "out_dir", "format", "jobs",
];

pub struct FileConfig(HashMap<String, String>);

impl FileConfig {
    pub fn empty() -> Self {
        FileConfig(HashMap::new())
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::empty());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        let mut map = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Validation(format!(
                    "config {} line {}: expected `key = value`",
                    path.display(),
                    lineno + 1
                )));
            };
            let key = match key.trim() {
                "L" => "half_len",
                "w" => "window",
                "M" => "m",
                k => k,
            };
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::Validation(format!(
                    "config {} line {}: unknown key `{key}`",
                    path.display(),
                    lineno + 1
                )));
            }
            map.insert(key.to_string(), value.trim().to_string());
        }
        Ok(FileConfig(map))
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                CliError::Validation(format!("config key `{key}`: cannot parse `{raw}`"))
            }),
        }
    }

    /// Comma-separated list value.
    pub fn parse_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|item| {
                    item.trim().parse().map_err(|_| {
                        CliError::Validation(format!("config key `{key}`: cannot parse `{item}`"))
                    })
                })
                .collect::<Result<Vec<T>, CliError>>()
                .map(Some),
        }
    }
}

/// Flag value, else config-file value, else nothing.
pub fn resolve<T: FromStr>(
    flag: Option<T>,
    file: &FileConfig,
    key: &str,
) -> Result<Option<T>, CliError> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.parse(key),
    }
}

pub fn required<T>(value: Option<T>, key: &str) -> Result<T, CliError> {
    value.ok_or_else(|| {
        CliError::Validation(format!("missing `{key}` (flag --{} or config key {key})", key.replace('_', "-")))
    })
}
