//! Flag/file configuration merging, value lists and config echoes.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// A problem with the invocation itself rather than with the run; exits with code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

/// Integer list given either as `a,b,c` or as an inclusive range `lo..hi`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntList(pub Vec<usize>);

impl FromStr for IntList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = |part: &str| format!("`{part}` is not a nonnegative integer");
        if let Some((lo, hi)) = s.split_once("..") {
            let lo: usize = lo.trim().parse().map_err(|_| bad(lo))?;
            let hi: usize = hi.trim().parse().map_err(|_| bad(hi))?;
            if lo > hi {
                return Err(format!("empty range {s}"));
            }
            return Ok(IntList((lo..=hi).collect()));
        }
        s.split(',')
            .map(|p| p.trim().parse().map_err(|_| bad(p)))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(IntList)
    }
}

pub fn read_config_file(path: &Path) -> Result<Map<String, Value>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config file {}", path.display()))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(usage(format!("config file {} must hold a JSON object", path.display()))),
        Err(e) => Err(usage(format!("config file {}: {e}", path.display()))),
    }
}

/// Defaults < file < flags. Flags left unset serialize as `null` and do not override.
/// Keys in the file that the command does not know are ignored, so one file can
/// serve several commands.
pub fn resolve<C: DeserializeOwned>(file: Option<&Map<String, Value>>, flags: &impl Serialize) -> Result<C> {
    let mut merged = file.cloned().unwrap_or_default();
    if let Value::Object(set) = serde_json::to_value(flags)? {
        merged.extend(set.into_iter().filter(|(_, v)| !v.is_null()));
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| usage(format!("configuration: {e}")))
}

/// Writes the resolved configuration, tagged with the command name.
pub fn echo(path: &Path, command: &str, config: &impl Serialize) -> Result<()> {
    let mut doc = Map::new();
    doc.insert("command".into(), command.into());
    if let Value::Object(fields) = serde_json::to_value(config)? {
        doc.extend(fields);
    }
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, serde_json::to_string_pretty(&Value::Object(doc))? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

/// Echo location for a command whose output is a single file: `data.json` → `data.config.json`.
pub fn echo_path_for_file(out: &Path) -> PathBuf {
    out.with_extension("config.json")
}

pub fn warn_off_grid(name: &str, value: f64, grid: &[f64]) {
    if !grid.iter().any(|&g| (g - value).abs() <= 1e-12 * g.abs().max(1.0)) {
        log::warn!("{name} = {value} is outside the usual grid {grid:?}");
    }
}
