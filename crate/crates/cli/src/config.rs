//! Layered settings: command-line flags over a JSON config file over defaults.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// A range argument `a:b:s` or a single value. In a config file it may be a
/// JSON string or a number.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct RangeArg(pub String);

impl std::str::FromStr for RangeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        gibbslab_core::io::parse_range(s)?;
        Ok(RangeArg(s.to_string()))
    }
}

impl<'de> Deserialize<'de> for RangeArg {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let s = match Raw::deserialize(d)? {
            Raw::Num(x) => x.to_string(),
            Raw::Text(s) => s,
        };
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl RangeArg {
    pub fn values(&self) -> Vec<f64> {
        gibbslab_core::io::parse_range(&self.0).expect("validated on construction")
    }
}

fn load_file(path: &Path, command: &str) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {} is not valid JSON: {e}", path.display())))?;
    let Value::Object(mut map) = value else {
        return Err(CliError::Usage(format!("config {} must be a JSON object", path.display())));
    };
    if let Some(c) = map.remove("command") {
        if c.as_str() != Some(command) {
            return Err(CliError::Usage(format!("config {} is for command {c}, not {command:?}", path.display())));
        }
    }
    Ok(map)
}

/// Overlays the non-null flags onto the config file and parses the result.
pub fn layered<T: Serialize + DeserializeOwned>(command: &str, flags: &T, file: Option<&Path>) -> Result<T, CliError> {
    let mut merged = match file {
        Some(p) => load_file(p, command)?,
        None => Map::new(),
    };
    if let Value::Object(f) = serde_json::to_value(flags).expect("flags serialize") {
        for (k, v) in f {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Usage(format!("config: {e}")))
}

/// The effective settings as a JSON object with a `command` key; null fields
/// are dropped and keys follow field order.
pub fn effective<T: Serialize>(command: &str, settings: &T) -> Value {
    let mut out = Map::new();
    out.insert("command".into(), Value::String(command.into()));
    if let Value::Object(f) = serde_json::to_value(settings).expect("settings serialize") {
        for (k, v) in f {
            if !v.is_null() {
                out.insert(k, v);
            }
        }
    }
    Value::Object(out)
}

pub fn required<T>(value: Option<T>, name: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("missing required setting `{name}` (flag --{} or config key)", name.replace('_', "-"))))
}
