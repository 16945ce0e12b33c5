//! Writing evaluation reports and comparison tables to disk.
//!
//! Layout under the output directory:
//! - `reports/<label>.json`: the full report
//! - `reports/<label>_precision.csv`, `reports/<label>_success.csv`: overall curves
//! - `reports/<label>_<ATTR>_precision.csv`, `..._success.csv`: attribute curves
//! - `comparison_success_auc.{txt,csv}`, `comparison_success_rate50.{txt,csv}`: sequences × variants, ×100

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rcacf_core::eval::{comparison_table, ComparisonTable, EvalReport, SequenceScores};

use crate::error::{CliError, CliResult};

pub const REPORT_DIR: &str = "reports";

type TableSpec = (&'static str, &'static str, fn(&SequenceScores) -> f64);

/// File stem, title and the per-sequence score each table holds.
const TABLES: [TableSpec; 2] = [
    ("comparison_success_auc", "Success AUC (x100)", |s| {
        s.success_auc * 100.0
    }),
    ("comparison_success_rate50", "Success rate at IoU > 0.5 (x100)", |s| {
        s.success_rate_at_half * 100.0
    }),
];

fn write(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::internal(format!("failed to write {}: {e}", path.display())))
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::internal(format!("failed to create {}: {e}", path.display())))
}

/// Write each `(label, report)` with its curve CSVs.
pub fn write_reports(out: &Path, reports: &[(String, EvalReport)]) -> CliResult<()> {
    let dir = out.join(REPORT_DIR);
    create_dir(&dir)?;
    for (label, report) in reports {
        let mut json = serde_json::to_string_pretty(report).map_err(|e| CliError::internal(e.to_string()))?;
        json.push('\n');
        write(&dir.join(format!("{label}.json")), json)?;
        if let Some(all) = &report.overall {
            write(&dir.join(format!("{label}_precision.csv")), all.precision.to_csv())?;
            write(&dir.join(format!("{label}_success.csv")), all.success.to_csv())?;
        }
        for (attr, agg) in &report.per_attribute {
            write(
                &dir.join(format!("{label}_{attr}_precision.csv")),
                agg.precision.to_csv(),
            )?;
            write(&dir.join(format!("{label}_{attr}_success.csv")), agg.success.to_csv())?;
        }
    }
    Ok(())
}

/// Sequences scored by every report.
pub fn common_sequences(reports: &[(String, EvalReport)]) -> BTreeSet<String> {
    let mut sets = reports
        .iter()
        .map(|(_, r)| r.per_sequence.iter().map(|s| s.name.clone()).collect::<BTreeSet<_>>());
    let first = sets.next().unwrap_or_default();
    sets.fold(first, |acc, s| acc.intersection(&s).cloned().collect())
}

/// Comparison tables over `sequences`; every report must score all of them.
pub fn build_tables(
    reports: &[(String, EvalReport)],
    sequences: &BTreeSet<String>,
) -> CliResult<Vec<(&'static str, ComparisonTable)>> {
    TABLES
        .iter()
        .map(|&(stem, metric, score)| {
            let columns: BTreeMap<String, BTreeMap<String, f64>> = reports
                .iter()
                .map(|(label, r)| {
                    let col = r
                        .per_sequence
                        .iter()
                        .filter(|s| sequences.contains(&s.name))
                        .map(|s| (s.name.clone(), score(s)))
                        .collect();
                    (label.clone(), col)
                })
                .collect();
            Ok((stem, comparison_table(metric, &columns)?))
        })
        .collect()
}

pub fn write_tables(out: &Path, tables: &[(&str, ComparisonTable)]) -> CliResult<()> {
    create_dir(out)?;
    for (stem, t) in tables {
        write(&out.join(format!("{stem}.txt")), t.to_text())?;
        write(&out.join(format!("{stem}.csv")), t.to_csv())?;
    }
    Ok(())
}
