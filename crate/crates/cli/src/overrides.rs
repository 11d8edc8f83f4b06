//! Simulation-config loading with preset/file expansion and `key=value`
//! overrides on the expanded JSON tree.

use std::path::Path;

use ringpair::config::ResonanceSource;
use ringpair::{Config, Resonance};
use serde_json::Value;

use crate::CliError;

const RESONANCE_KEYS: [&str; 3] = ["pump_resonance", "signal_resonance", "idler_resonance"];

/// Parses a config and rewrites preset names and resonance file references
/// into inline parameter objects; defaults are filled in.
pub fn expand(text: &str, base_dir: &Path) -> Result<Value, CliError> {
    let mut v: Value = serde_json::from_str(text).map_err(|e| CliError::input(format!("config: {e}")))?;
    for key in RESONANCE_KEYS {
        let Some(Value::String(name)) = v.get(key).cloned() else { continue };
        let res: Resonance = if name.ends_with(".json") {
            let path = base_dir.join(&name);
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
        } else {
            ResonanceSource::Preset(name).resolve()?
        };
        v[key] = serde_json::to_value(res).expect("resonance serializes");
    }
    let cfg: Config = serde_json::from_value(v).map_err(|e| CliError::input(format!("config: {e}")))?;
    Ok(serde_json::to_value(cfg).expect("config serializes"))
}

/// Dotted paths of all scalar (or null) leaves.
pub fn leaf_keys(v: &Value) -> Vec<String> {
    fn walk(v: &Value, prefix: &str, out: &mut Vec<String>) {
        match v {
            Value::Object(map) => {
                for (k, child) in map {
                    let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(child, &path, out);
                }
            }
            _ => out.push(prefix.to_string()),
        }
    }
    let mut out = Vec::new();
    walk(v, "", &mut out);
    out.sort();
    out
}

fn unknown_key(key: &str, v: &Value) -> CliError {
    CliError::input(format!("unknown key `{key}`; valid keys:\n  {}", leaf_keys(v).join("\n  ")))
}

/// Sets `key` (dotted path into the expanded config) to `raw`, parsed as
/// JSON when possible and as a string otherwise.
pub fn apply(v: &mut Value, key: &str, raw: &str) -> Result<(), CliError> {
    let parsed: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = &mut *v;
    for part in key.split('.') {
        match node.get_mut(part) {
            Some(child) => node = child,
            None => return Err(unknown_key(key, v)),
        }
    }
    *node = parsed;
    Ok(())
}

/// Checks that `key` names an existing path without modifying the tree.
pub fn check_key(v: &Value, key: &str) -> Result<(), CliError> {
    let mut node = v;
    for part in key.split('.') {
        node = node.get(part).ok_or_else(|| unknown_key(key, v))?;
    }
    Ok(())
}

pub fn parse_assignment(s: &str) -> Result<(String, String), CliError> {
    let (k, val) = s.split_once('=').ok_or_else(|| CliError::input(format!("override `{s}` is not of the form key=value")))?;
    Ok((k.trim().to_string(), val.trim().to_string()))
}

pub fn to_config(v: &Value) -> Result<Config, CliError> {
    serde_json::from_value(v.clone()).map_err(|e| CliError::input(format!("config after overrides: {e}")))
}
