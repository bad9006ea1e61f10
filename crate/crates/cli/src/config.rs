//! `--config file.json`: each key `some_flag` becomes `--some-flag value`,
//! inserted right after the subcommand name so explicit flags override it.

use std::ffi::OsString;

use serde_json::Value;

use crate::Failure;

const GLOBAL_WITH_VALUE: [&str; 2] = ["--threads", "--config"];

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter().skip(1);
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

/// Index of the subcommand token.
fn subcommand_index(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if GLOBAL_WITH_VALUE.contains(&s.as_ref()) {
            i += 2;
            continue;
        }
        if s.starts_with('-') {
            i += 1;
            continue;
        }
        return Some(i);
    }
    None
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

/// Flag tokens for one config object.
pub fn tokens(obj: &serde_json::Map<String, Value>) -> Result<Vec<String>, Failure> {
    let mut out = Vec::new();
    for (key, v) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => out.push(flag),
            Value::Array(items) => {
                let parts: Option<Vec<String>> = items.iter().map(scalar).collect();
                let parts = parts
                    .ok_or_else(|| Failure::usage(format!("config key {key:?}: nested values")))?;
                out.push(flag);
                out.push(parts.join(","));
            }
            Value::Object(_) => {
                return Err(Failure::usage(format!("config key {key:?}: nested object")));
            }
            other => {
                out.push(flag);
                out.push(scalar(other).expect("scalar"));
            }
        }
    }
    Ok(out)
}

pub fn expand(mut args: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| {
        Failure::input(format!("cannot read config {}: {e}", path.to_string_lossy()))
    })?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("malformed config {}: {e}", path.to_string_lossy())))?;
    let Value::Object(obj) = value else {
        return Err(Failure::usage("config must be a JSON object"));
    };
    let Some(at) = subcommand_index(&args) else {
        return Ok(args);
    };
    let extra = tokens(&obj)?;
    args.splice(at + 1..at + 1, extra.into_iter().map(OsString::from));
    Ok(args)
}
