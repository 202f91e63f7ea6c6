//! Config files are TOML documents whose keys are long flag names. Top-level
//! scalars set global flags, a table named after the subcommand sets its
//! flags. Flags the file sets are removed from the command line and the file's
//! values appended, so the file wins even for list-valued flags.

use std::ffi::OsString;
use std::path::Path;

use toml::Value;

pub fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

/// The first argument naming a known subcommand.
pub fn subcommand_of<'a>(args: &'a [OsString], names: &[&str]) -> Option<&'a str> {
    args.iter()
        .skip(1)
        .filter_map(|a| a.to_str())
        .find(|a| names.contains(a))
}

fn render(value: &Value) -> Result<Option<String>, String> {
    Ok(match value {
        Value::String(s) => Some(s.clone()),
        Value::Integer(i) => Some(i.to_string()),
        Value::Float(f) => Some(f.to_string()),
        Value::Boolean(_) => None,
        Value::Array(items) => {
            let parts = items
                .iter()
                .map(|v| match v {
                    Value::Integer(i) => Ok(i.to_string()),
                    Value::Float(f) => Ok(f.to_string()),
                    Value::String(s) => Ok(s.clone()),
                    _ => Err("arrays may hold only numbers or strings".to_string()),
                })
                .collect::<Result<Vec<_>, _>>()?;
            Some(parts.join(","))
        }
        _ => return Err("unsupported value type".into()),
    })
}

fn push_pair(out: &mut Vec<OsString>, key: &str, value: &Value) -> Result<(), String> {
    match (value, render(value).map_err(|e| format!("`{key}`: {e}"))?) {
        (Value::Boolean(true), _) => out.push(format!("--{key}").into()),
        (Value::Boolean(false), _) => {}
        (_, Some(v)) => {
            out.push(format!("--{key}").into());
            out.push(v.into());
        }
        (_, None) => {}
    }
    Ok(())
}

/// Flags encoded by the document for `subcommand`.
pub fn config_args(text: &str, subcommand: Option<&str>) -> Result<Vec<OsString>, String> {
    let doc: toml::Table = text.parse().map_err(|e| format!("invalid config: {e}"))?;
    let mut out = Vec::new();
    for (key, value) in &doc {
        if key == "config" {
            return Err("a config file cannot name another config file".into());
        }
        match value {
            Value::Table(table) => {
                if Some(key.as_str()) != subcommand {
                    continue;
                }
                for (k, v) in table {
                    if matches!(v, Value::Table(_)) {
                        return Err(format!("`{key}.{k}`: nested tables are not supported"));
                    }
                    push_pair(&mut out, k, v)?;
                }
            }
            _ => push_pair(&mut out, key, value)?,
        }
    }
    Ok(out)
}

/// Drops every occurrence of the flags in `keys` from `args`. `takes_value`
/// tells whether a flag consumes the following token.
pub fn strip_flags(
    args: Vec<OsString>,
    keys: &[String],
    takes_value: impl Fn(&str) -> bool,
) -> Vec<OsString> {
    let mut out = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy().into_owned();
        let Some(name) = s.strip_prefix("--") else {
            out.push(a);
            continue;
        };
        let (name, inline) = match name.split_once('=') {
            Some((n, _)) => (n, true),
            None => (name, false),
        };
        if !keys.iter().any(|k| k == name) {
            out.push(a);
            continue;
        }
        if !inline && takes_value(name) {
            it.next();
        }
    }
    out
}

/// Names of the flags among config-produced arguments.
pub fn flag_names(config_args: &[OsString]) -> Vec<String> {
    config_args
        .iter()
        .filter_map(|a| a.to_str()?.strip_prefix("--").map(str::to_owned))
        .collect()
}

pub fn read_config_args(path: &Path, subcommand: Option<&str>) -> Result<Vec<OsString>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    config_args(&text, subcommand)
}
