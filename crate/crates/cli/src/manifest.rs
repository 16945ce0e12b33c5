//! Benchmark manifests.
//!
//! ```json
//! {
//!   "sequences": ["data/Basketball", {"synth": {"name": "slide", "size": [320, 160], ...}}],
//!   "variants": ["base", "ca", "rcacf", {"name": "rcacf-lr05", "preset": "rcacf", "config": {"learning_rate": 0.05}}],
//!   "output_dir": "out",
//!   "workers": 4,
//!   "seed": 7,
//!   "attributes": "data/attributes.txt"
//! }
//! ```
//!
//! Relative paths are resolved against the manifest's directory. A synthetic
//! entry without `texture_seed` gets `seed + index`, and one without `name`
//! gets `synth-<index>`, where `index` is its position in `sequences`.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rcacf_core::filter::FilterConfig;
use rcacf_core::sequence::SynthSpec;
use rcacf_core::tracker::Variant;
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::config::{merge_config, resolve_variant};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub sequences: Vec<SequenceEntry>,
    pub variants: Vec<VariantEntry>,
    pub output_dir: PathBuf,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub attributes: Option<PathBuf>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SequenceEntry {
    Dir(PathBuf),
    Synth(SynthEntry),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthEntry {
    pub synth: Map<String, Value>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum VariantEntry {
    Preset(String),
    Custom(CustomVariant),
}

/// `config` overlays the named preset, or the default config when `preset` is absent.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomVariant {
    pub name: String,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub config: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SequenceSource {
    Dir(PathBuf),
    Synth(SynthSpec),
}

/// Command-line values that take precedence over the manifest.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    /// Applied on top of every variant's config.
    pub config: Option<Map<String, Value>>,
}

/// A validated manifest with paths resolved and variants built.
#[derive(Debug, Clone)]
pub struct Plan {
    pub sequences: Vec<SequenceSource>,
    pub variants: Vec<Variant>,
    pub output_dir: PathBuf,
    pub workers: usize,
    pub seed: u64,
    pub attributes: Option<PathBuf>,
}

impl RunManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::input(format!("failed to read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    }

    /// Resolve against `base_dir` with `overrides` taking precedence.
    pub fn plan(&self, base_dir: &Path, overrides: &Overrides) -> CliResult<Plan> {
        let workers = overrides.workers.unwrap_or(self.workers);
        let seed = overrides.seed.unwrap_or(self.seed);
        if workers == 0 {
            return Err(CliError::input("workers must be at least 1"));
        }
        if self.sequences.is_empty() || self.variants.is_empty() {
            return Err(CliError::input(
                "a manifest needs at least one sequence and one variant",
            ));
        }

        let mut sequences = Vec::with_capacity(self.sequences.len());
        for (i, entry) in self.sequences.iter().enumerate() {
            sequences.push(match entry {
                SequenceEntry::Dir(p) => SequenceSource::Dir(base_dir.join(p)),
                SequenceEntry::Synth(s) => SequenceSource::Synth(synth_spec(&s.synth, i, seed)?),
            });
        }
        let names: Vec<String> = sequences.iter().map(source_name).collect();
        if let Some(dup) = first_duplicate(&names) {
            return Err(CliError::input(format!("sequence name {dup:?} appears more than once")));
        }

        let mut variants = Vec::with_capacity(self.variants.len());
        for entry in &self.variants {
            let v = match entry {
                VariantEntry::Preset(name) => resolve_variant(name, None)?,
                VariantEntry::Custom(c) => {
                    let base = match &c.preset {
                        Some(p) => Variant::preset(p)?.config,
                        None => FilterConfig::default(),
                    };
                    Variant::new(c.name.clone(), merge_config(&base, &c.config)?)?
                }
            };
            variants.push(match &overrides.config {
                Some(o) => Variant::new(v.name.clone(), merge_config(&v.config, o)?)?,
                None => v,
            });
        }
        let names: Vec<String> = variants.iter().map(|v| v.name.clone()).collect();
        if let Some(dup) = first_duplicate(&names) {
            return Err(CliError::input(format!("variant name {dup:?} appears more than once")));
        }

        Ok(Plan {
            sequences,
            variants,
            output_dir: base_dir.join(&self.output_dir),
            workers,
            seed,
            attributes: self.attributes.as_ref().map(|p| base_dir.join(p)),
        })
    }
}

fn synth_spec(fields: &Map<String, Value>, index: usize, seed: u64) -> CliResult<SynthSpec> {
    let mut fields = fields.clone();
    fields
        .entry("texture_seed")
        .or_insert_with(|| Value::from(seed.wrapping_add(index as u64)));
    fields
        .entry("name")
        .or_insert_with(|| Value::from(format!("synth-{index}")));
    let spec: SynthSpec = serde_json::from_value(Value::Object(fields))
        .map_err(|e| CliError::input(format!("sequence {index}: invalid synthetic spec: {e}")))?;
    spec.validate()?;
    Ok(spec)
}

/// Directory name for paths, spec name for synthetic entries.
pub fn source_name(s: &SequenceSource) -> String {
    match s {
        SequenceSource::Dir(p) => p
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| p.display().to_string()),
        SequenceSource::Synth(spec) => spec.name.clone(),
    }
}

fn first_duplicate(names: &[String]) -> Option<&str> {
    let mut seen = BTreeSet::new();
    names.iter().find(|n| !seen.insert(n.as_str())).map(String::as_str)
}
