//! Variant resolution: preset defaults, then JSON overlay files.

use std::fs;
use std::path::Path;

use rcacf_core::filter::FilterConfig;
use rcacf_core::tracker::Variant;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

/// Read a JSON object of `FilterConfig` fields.
pub fn load_overlay(path: &Path) -> CliResult<Map<String, Value>> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::input(format!("failed to read {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(CliError::input(format!(
            "{}: config must be a JSON object",
            path.display()
        ))),
        Err(e) => Err(CliError::input(format!("{}: {e}", path.display()))),
    }
}

/// Replace top-level fields of `base` with those in `overlay`.
pub fn merge_config(base: &FilterConfig, overlay: &Map<String, Value>) -> CliResult<FilterConfig> {
    let mut value = serde_json::to_value(base).map_err(|e| CliError::internal(e.to_string()))?;
    let fields = value.as_object_mut().expect("config serializes to an object");
    for (k, v) in overlay {
        fields.insert(k.clone(), v.clone());
    }
    let cfg: FilterConfig =
        serde_json::from_value(value).map_err(|e| CliError::input(format!("invalid filter config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

/// A preset by name with an optional overlay on top.
pub fn resolve_variant(name: &str, overlay: Option<&Map<String, Value>>) -> CliResult<Variant> {
    let preset = Variant::preset(name)?;
    match overlay {
        None => Ok(preset),
        Some(o) => Ok(Variant::new(name, merge_config(&preset.config, o)?)?),
    }
}
