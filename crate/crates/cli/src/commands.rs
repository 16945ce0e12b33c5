use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rcacf_core::eval::{build_report, evaluate_sequence, EvalReport, Failure, SequenceScores};
use rcacf_core::sequence::{
    load_attribute_sidecar, load_result, load_sequence, render_sequence, save_result, SequenceMeta, SynthSpec,
    GROUNDTRUTH_FILE,
};
use rcacf_core::tracker::{run_sequence, TrackResult, Variant};
use serde_json::{Map, Value};

use crate::config::resolve_variant;
use crate::error::{CliError, CliResult};
use crate::manifest::{source_name, Overrides, Plan, RunManifest, SequenceSource};
use crate::report::{build_tables, common_sequences, write_reports, write_tables};

pub const RESULT_DIR: &str = "results";
pub const SEQUENCE_DIR: &str = "sequences";
pub const ATTRIBUTE_FILE: &str = "attributes.txt";

/// Headline scores for one evaluated variant.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantSummary {
    pub label: String,
    pub fingerprint: String,
    pub sequences: usize,
    pub precision_at_20: Option<f64>,
    pub success_auc: Option<f64>,
}

impl VariantSummary {
    fn of(label: &str, report: &EvalReport) -> Self {
        Self {
            label: label.to_string(),
            fingerprint: report.variant.clone(),
            sequences: report.per_sequence.len(),
            precision_at_20: report.overall.as_ref().map(|o| o.precision_at_20),
            success_auc: report.overall.as_ref().map(|o| o.success_auc),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub variants: Vec<VariantSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSummary {
    pub variants: Vec<VariantSummary>,
    /// `(variant, failure)` pairs.
    pub failures: Vec<(String, Failure)>,
    pub result_files: usize,
    /// Sequences left out of the comparison tables because some variant failed on them.
    pub untabulated: Vec<String>,
}

/// Track the annotated frames of a loaded sequence.
pub fn track_sequence(meta: &SequenceMeta, variant: &Variant) -> rcacf_core::Result<TrackResult> {
    run_sequence(
        &meta.name,
        meta.frames().take(meta.ground_truth.len()),
        meta.ground_truth[0],
        variant,
    )
}

pub fn cmd_track(seq: &Path, variant: &str, out: &Path, config: Option<&Map<String, Value>>) -> CliResult<TrackResult> {
    let variant = resolve_variant(variant, config)?;
    let meta = load_sequence(seq)?;
    let result = track_sequence(&meta, &variant)?;
    save_result(&result, out)?;
    Ok(result)
}

pub fn cmd_synth(spec: &Path, out: &Path, seed: Option<u64>) -> CliResult<SequenceMeta> {
    let text =
        fs::read_to_string(spec).map_err(|e| CliError::input(format!("failed to read {}: {e}", spec.display())))?;
    let mut spec: SynthSpec =
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", spec.display())))?;
    if let Some(s) = seed {
        spec.texture_seed = s;
    }
    spec.validate()?;
    Ok(render_sequence(&spec, out)?)
}

fn expand_results(patterns: &[String]) -> CliResult<Vec<PathBuf>> {
    let mut paths = BTreeSet::new();
    for p in patterns {
        let matches = glob::glob(p).map_err(|e| CliError::input(format!("bad pattern {p:?}: {e}")))?;
        let before = paths.len();
        for m in matches {
            let path = m.map_err(|e| CliError::input(e.to_string()))?;
            if path.is_file() {
                paths.insert(path);
            }
        }
        if paths.len() == before && !Path::new(p).is_file() {
            return Err(CliError::input(format!("no result files match {p:?}")));
        }
    }
    Ok(paths.into_iter().collect())
}

fn apply_attributes(metas: &mut [SequenceMeta], sidecar: &Path) -> CliResult<()> {
    let attrs = load_attribute_sidecar(sidecar)?;
    for m in metas {
        if let Some(a) = attrs.get(&m.name) {
            m.attributes = a.clone();
        }
    }
    Ok(())
}

/// Each path is a sequence directory or a dataset root holding sequence
/// directories (and optionally an `attributes.txt`).
pub fn load_metas(paths: &[PathBuf], attributes: Option<&Path>) -> CliResult<Vec<SequenceMeta>> {
    let mut metas = Vec::new();
    for p in paths {
        if p.join(GROUNDTRUTH_FILE).is_file() {
            metas.push(load_sequence(p)?);
            continue;
        }
        if !p.is_dir() {
            return Err(CliError::input(format!(
                "{}: not a sequence directory or dataset root",
                p.display()
            )));
        }
        let entries = fs::read_dir(p).map_err(|e| CliError::input(format!("failed to read {}: {e}", p.display())))?;
        let mut dirs: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|d| d.join(GROUNDTRUTH_FILE).is_file())
            .collect();
        dirs.sort();
        if dirs.is_empty() {
            return Err(CliError::input(format!(
                "no {GROUNDTRUTH_FILE} in {} or its subdirectories",
                p.display()
            )));
        }
        let mut group = dirs.iter().map(|d| load_sequence(d)).collect::<Result<Vec<_>, _>>()?;
        let sidecar = p.join(ATTRIBUTE_FILE);
        if sidecar.is_file() {
            apply_attributes(&mut group, &sidecar)?;
        }
        metas.extend(group);
    }
    if let Some(a) = attributes {
        apply_attributes(&mut metas, a)?;
    }
    let mut seen = BTreeSet::new();
    for m in &metas {
        if !seen.insert(m.name.as_str()) {
            return Err(CliError::consistency(format!(
                "sequence {:?} is given more than once",
                m.name
            )));
        }
    }
    Ok(metas)
}

/// Report labels: variant names when they identify configs uniquely, fingerprints otherwise.
fn labels(fingerprints: &[String]) -> Vec<String> {
    let names: Vec<&str> = fingerprints
        .iter()
        .map(|f| f.rsplit_once('-').map_or(f.as_str(), |(n, _)| n))
        .collect();
    let unique = names.iter().collect::<BTreeSet<_>>().len() == names.len();
    if unique {
        names.into_iter().map(String::from).collect()
    } else {
        fingerprints.to_vec()
    }
}

pub fn cmd_eval(
    patterns: &[String],
    meta_paths: &[PathBuf],
    attributes: Option<&Path>,
    out: &Path,
) -> CliResult<EvalSummary> {
    let metas = load_metas(meta_paths, attributes)?;
    let by_name: BTreeMap<&str, &SequenceMeta> = metas.iter().map(|m| (m.name.as_str(), m)).collect();

    let mut groups: BTreeMap<String, BTreeMap<String, SequenceScores>> = BTreeMap::new();
    for path in expand_results(patterns)? {
        let r = load_result(&path)?;
        let meta = by_name.get(r.sequence_id.as_str()).ok_or_else(|| {
            CliError::consistency(format!("{}: unknown sequence {:?}", path.display(), r.sequence_id))
        })?;
        let scores = evaluate_sequence(&meta.name, &r.boxes, &meta.ground_truth)?;
        let group = groups.entry(r.variant.clone()).or_default();
        if group.insert(r.sequence_id.clone(), scores).is_some() {
            return Err(CliError::consistency(format!(
                "{}: second result for {} under {}",
                path.display(),
                r.sequence_id,
                r.variant
            )));
        }
    }

    let fingerprints: Vec<String> = groups.keys().cloned().collect();
    let mut reports = Vec::new();
    for (label, (fp, rows)) in labels(&fingerprints).into_iter().zip(groups) {
        reports.push((
            label,
            build_report(&fp, rows.into_values().collect(), &metas, Vec::new())?,
        ));
    }
    let common = common_sequences(&reports);
    if reports.iter().any(|(_, r)| r.per_sequence.len() != common.len()) {
        return Err(CliError::consistency(
            "variants were evaluated on different sequence sets",
        ));
    }
    let tables = build_tables(&reports, &common)?;
    write_reports(out, &reports)?;
    write_tables(out, &tables)?;
    Ok(EvalSummary {
        variants: reports.iter().map(|(l, r)| VariantSummary::of(l, r)).collect(),
    })
}

pub fn cmd_bench(manifest: &Path, overrides: &Overrides) -> CliResult<BenchSummary> {
    let base = manifest
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let plan = RunManifest::load(manifest)?.plan(base, overrides)?;
    run_plan(&plan)
}

fn render_attributes(specs: &[&SynthSpec]) -> String {
    let mut out = String::new();
    for s in specs.iter().filter(|s| !s.attributes.is_empty()) {
        let codes: Vec<String> = s.attributes.iter().map(|a| a.to_string()).collect();
        out.push_str(&format!("{}: {}\n", s.name, codes.join(",")));
    }
    out
}

/// Run every (sequence, variant) pair and write results, reports and tables.
pub fn run_plan(plan: &Plan) -> CliResult<BenchSummary> {
    let out = &plan.output_dir;
    let results_dir = out.join(RESULT_DIR);
    fs::create_dir_all(&results_dir)
        .map_err(|e| CliError::internal(format!("failed to create {}: {e}", results_dir.display())))?;
    let sidecar = plan.attributes.as_deref().map(load_attribute_sidecar).transpose()?;

    let synth: Vec<&SynthSpec> = plan
        .sequences
        .iter()
        .filter_map(|s| match s {
            SequenceSource::Synth(spec) => Some(spec),
            SequenceSource::Dir(_) => None,
        })
        .collect();
    if !synth.is_empty() {
        let dir = out.join(SEQUENCE_DIR);
        fs::create_dir_all(&dir).map_err(|e| CliError::internal(format!("failed to create {}: {e}", dir.display())))?;
        fs::write(dir.join(ATTRIBUTE_FILE), render_attributes(&synth))
            .map_err(|e| CliError::internal(format!("failed to write attributes: {e}")))?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| CliError::internal(e.to_string()))?;

    let loaded: Vec<(String, Result<SequenceMeta, String>)> = pool.install(|| {
        plan.sequences
            .par_iter()
            .map(|src| {
                let meta = match src {
                    SequenceSource::Dir(p) => load_sequence(p),
                    SequenceSource::Synth(spec) => render_sequence(spec, &out.join(SEQUENCE_DIR).join(&spec.name)),
                };
                let meta = meta.map(|mut m| {
                    if let Some(a) = sidecar.as_ref().and_then(|s| s.get(&m.name)) {
                        m.attributes = a.clone();
                    }
                    m
                });
                (source_name(src), meta.map_err(|e| e.to_string()))
            })
            .collect()
    });

    let jobs: Vec<(usize, usize)> = (0..loaded.len())
        .flat_map(|s| (0..plan.variants.len()).map(move |v| (s, v)))
        .collect();
    let outcomes: Vec<Result<SequenceScores, String>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(s, v)| {
                let meta = loaded[s].1.as_ref().map_err(Clone::clone)?;
                let variant = &plan.variants[v];
                let run = || -> rcacf_core::Result<SequenceScores> {
                    let result = track_sequence(meta, variant)?;
                    save_result(
                        &result,
                        &results_dir.join(format!("{}__{}.txt", meta.name, variant.name)),
                    )?;
                    evaluate_sequence(&meta.name, &result.boxes, &meta.ground_truth)
                };
                run().map_err(|e| e.to_string())
            })
            .collect()
    });

    let metas: Vec<SequenceMeta> = loaded.iter().filter_map(|(_, m)| m.as_ref().ok().cloned()).collect();
    let mut rows: Vec<Vec<SequenceScores>> = vec![Vec::new(); plan.variants.len()];
    let mut failures: Vec<Vec<Failure>> = vec![Vec::new(); plan.variants.len()];
    let mut result_files = 0;
    for (&(s, v), outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(scores) => {
                rows[v].push(scores);
                result_files += 1;
            }
            Err(reason) => failures[v].push(Failure {
                sequence: loaded[s].0.clone(),
                reason,
            }),
        }
    }

    let mut reports = Vec::new();
    for ((variant, rows), fails) in plan.variants.iter().zip(rows).zip(failures) {
        reports.push((
            variant.name.clone(),
            build_report(&variant.fingerprint(), rows, &metas, fails)?,
        ));
    }
    write_reports(out, &reports)?;

    let common = common_sequences(&reports);
    let untabulated: Vec<String> = loaded
        .iter()
        .map(|(n, _)| n.clone())
        .filter(|n| !common.contains(n))
        .collect();
    if !common.is_empty() {
        write_tables(out, &build_tables(&reports, &common)?)?;
    }

    Ok(BenchSummary {
        variants: reports.iter().map(|(l, r)| VariantSummary::of(l, r)).collect(),
        failures: reports
            .iter()
            .flat_map(|(l, r)| r.failures.iter().map(move |f| (l.clone(), f.clone())))
            .collect(),
        result_files,
        untabulated,
    })
}
