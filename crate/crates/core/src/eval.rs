//! One-pass evaluation metrics: center-location error, overlap, precision and
//! success curves, attribute rollups and comparison tables.
//!
//! Conventions: precision thresholds are 0..=50 px in 1 px steps and count
//! `error <= t`; success thresholds are 0, 0.05, .., 1 and count `overlap > t`;
//! AUC is the plain mean of the 21 success values. Aggregates average
//! per-sequence curves rather than pooling frames.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::sequence::{Attribute, SequenceMeta};

pub const PRECISION_HEADLINE_PX: usize = 20;
pub const PRECISION_MAX_PX: usize = 50;
pub const SUCCESS_STEPS: usize = 20;

pub fn center_error(a: &BBox, b: &BBox) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (ax - bx).hypot(ay - by)
}

/// Intersection over union.
pub fn overlap(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    // areas through the same arithmetic as the intersection so overlap(a, a) is exactly 1
    let union = a.intersection_area(a) + b.intersection_area(b) - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub thresholds: Vec<f64>,
    pub values: Vec<f64>,
}

impl Curve {
    pub fn value_at(&self, threshold: f64) -> Option<f64> {
        self.thresholds
            .iter()
            .position(|t| *t == threshold)
            .map(|i| self.values[i])
    }

    pub fn mean_value(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Pointwise mean of curves sharing the same thresholds.
    pub fn mean(curves: &[&Curve]) -> Result<Curve> {
        let first = curves
            .first()
            .ok_or_else(|| Error::param("cannot average zero curves"))?;
        if curves.iter().any(|c| c.thresholds != first.thresholds) {
            return Err(Error::Consistency("curves use different thresholds".into()));
        }
        let n = curves.len() as f64;
        let values = (0..first.values.len())
            .map(|i| curves.iter().map(|c| c.values[i]).sum::<f64>() / n)
            .collect();
        Ok(Curve {
            thresholds: first.thresholds.clone(),
            values,
        })
    }

    /// `threshold,value` lines with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,value\n");
        for (t, v) in self.thresholds.iter().zip(&self.values) {
            let _ = writeln!(out, "{t},{v}");
        }
        out
    }
}

pub fn precision_thresholds() -> Vec<f64> {
    (0..=PRECISION_MAX_PX).map(|t| t as f64).collect()
}

pub fn success_thresholds() -> Vec<f64> {
    (0..=SUCCESS_STEPS).map(|i| i as f64 / SUCCESS_STEPS as f64).collect()
}

/// Fraction of frames with center error `<= t`, for t in 0..=50 px.
pub fn precision_curve(errors: &[f64]) -> Result<Curve> {
    if errors.is_empty() {
        return Err(Error::param("precision curve needs at least one frame"));
    }
    let thresholds = precision_thresholds();
    let n = errors.len() as f64;
    let values = thresholds
        .iter()
        .map(|t| errors.iter().filter(|e| **e <= *t).count() as f64 / n)
        .collect();
    Ok(Curve { thresholds, values })
}

/// Fraction of frames with overlap `> t` over 21 thresholds, plus the AUC.
pub fn success_curve(overlaps: &[f64]) -> Result<(Curve, f64)> {
    if overlaps.is_empty() {
        return Err(Error::param("success curve needs at least one frame"));
    }
    let thresholds = success_thresholds();
    let n = overlaps.len() as f64;
    let values = thresholds
        .iter()
        .map(|t| overlaps.iter().filter(|o| **o > *t).count() as f64 / n)
        .collect();
    let curve = Curve { thresholds, values };
    let auc = curve.mean_value();
    Ok((curve, auc))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceScores {
    pub name: String,
    pub frames: usize,
    pub precision_at_20: f64,
    pub success_auc: f64,
    /// Fraction of frames with overlap above 0.5.
    pub success_rate_at_half: f64,
    pub mean_center_error: f64,
    pub mean_overlap: f64,
    pub precision: Curve,
    pub success: Curve,
}

/// Score predicted boxes against ground truth over the annotated frames.
pub fn evaluate_sequence(name: &str, predicted: &[BBox], ground_truth: &[BBox]) -> Result<SequenceScores> {
    if ground_truth.is_empty() {
        return Err(Error::param(format!("{name}: no ground truth")));
    }
    if predicted.len() < ground_truth.len() {
        return Err(Error::Consistency(format!(
            "{name}: {} predicted boxes for {} annotated frames",
            predicted.len(),
            ground_truth.len()
        )));
    }
    let pairs = predicted.iter().zip(ground_truth);
    let errors: Vec<f64> = pairs.clone().map(|(p, g)| center_error(p, g)).collect();
    let overlaps: Vec<f64> = pairs.map(|(p, g)| overlap(p, g)).collect();
    let precision = precision_curve(&errors)?;
    let (success, success_auc) = success_curve(&overlaps)?;
    let n = errors.len() as f64;
    Ok(SequenceScores {
        name: name.to_string(),
        frames: errors.len(),
        precision_at_20: precision.values[PRECISION_HEADLINE_PX],
        success_auc,
        success_rate_at_half: success.values[SUCCESS_STEPS / 2],
        mean_center_error: errors.iter().sum::<f64>() / n,
        mean_overlap: overlaps.iter().sum::<f64>() / n,
        precision,
        success,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateScores {
    pub sequences: Vec<String>,
    pub precision_at_20: f64,
    pub success_auc: f64,
    pub precision: Curve,
    pub success: Curve,
}

/// Mean curves over a set of sequences.
pub fn aggregate(rows: &[&SequenceScores]) -> Result<AggregateScores> {
    let precision = Curve::mean(&rows.iter().map(|r| &r.precision).collect::<Vec<_>>())?;
    let success = Curve::mean(&rows.iter().map(|r| &r.success).collect::<Vec<_>>())?;
    Ok(AggregateScores {
        sequences: rows.iter().map(|r| r.name.clone()).collect(),
        precision_at_20: precision.values[PRECISION_HEADLINE_PX],
        success_auc: success.mean_value(),
        precision,
        success,
    })
}

/// Mean curves per attribute over the sequences carrying it; attributes
/// without members are left out.
pub fn attribute_rollup(
    rows: &[SequenceScores],
    meta: &[SequenceMeta],
) -> Result<BTreeMap<Attribute, AggregateScores>> {
    let attrs: BTreeMap<&str, &BTreeSet<Attribute>> = meta.iter().map(|m| (m.name.as_str(), &m.attributes)).collect();
    let mut groups: BTreeMap<Attribute, Vec<&SequenceScores>> = BTreeMap::new();
    for row in rows {
        let set = attrs
            .get(row.name.as_str())
            .ok_or_else(|| Error::Consistency(format!("no metadata for sequence {:?}", row.name)))?;
        for a in *set {
            groups.entry(*a).or_default().push(row);
        }
    }
    groups
        .into_iter()
        .map(|(a, members)| Ok((a, aggregate(&members)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub sequence: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub variant: String,
    pub per_sequence: Vec<SequenceScores>,
    pub overall: Option<AggregateScores>,
    pub per_attribute: BTreeMap<Attribute, AggregateScores>,
    pub failures: Vec<Failure>,
}

/// Assemble a report; rows are sorted by sequence name.
pub fn build_report(
    variant: &str,
    mut rows: Vec<SequenceScores>,
    meta: &[SequenceMeta],
    mut failures: Vec<Failure>,
) -> Result<EvalReport> {
    rows.sort_by(|a, b| a.name.cmp(&b.name));
    failures.sort_by(|a, b| a.sequence.cmp(&b.sequence));
    let overall = if rows.is_empty() {
        None
    } else {
        Some(aggregate(&rows.iter().collect::<Vec<_>>())?)
    };
    let per_attribute = attribute_rollup(&rows, meta)?;
    Ok(EvalReport {
        variant: variant.to_string(),
        per_sequence: rows,
        overall,
        per_attribute,
        failures,
    })
}

/// Sequences × variants grid with a mean row; rows and columns sorted by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub metric: String,
    pub variants: Vec<String>,
    pub sequences: Vec<String>,
    /// `cells[sequence][variant]`.
    pub cells: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
}

pub fn comparison_table(metric: &str, scores: &BTreeMap<String, BTreeMap<String, f64>>) -> Result<ComparisonTable> {
    let mut columns = scores.iter();
    let (_, first) = columns
        .next()
        .ok_or_else(|| Error::param("comparison table needs at least one variant"))?;
    let sequences: Vec<String> = first.keys().cloned().collect();
    if sequences.is_empty() {
        return Err(Error::param("comparison table needs at least one sequence"));
    }
    for (variant, col) in columns {
        if !col.keys().eq(first.keys()) {
            return Err(Error::Consistency(format!(
                "variant {variant:?} covers a different sequence set"
            )));
        }
    }
    let variants: Vec<String> = scores.keys().cloned().collect();
    let cells: Vec<Vec<f64>> = sequences
        .iter()
        .map(|s| variants.iter().map(|v| scores[v][s]).collect())
        .collect();
    let n = sequences.len() as f64;
    let mean = (0..variants.len())
        .map(|j| cells.iter().map(|row| row[j]).sum::<f64>() / n)
        .collect();
    Ok(ComparisonTable {
        metric: metric.to_string(),
        variants,
        sequences,
        cells,
        mean,
    })
}

impl ComparisonTable {
    /// Plain-text grid with two decimals.
    pub fn to_text(&self) -> String {
        let width = self
            .sequences
            .iter()
            .map(String::len)
            .chain([8, "Sequence".len()])
            .max()
            .unwrap_or(8);
        let col = self.variants.iter().map(String::len).max().unwrap_or(0).max(8);
        let mut out = format!("{}\n", self.metric);
        let _ = write!(out, "{:<width$}", "Sequence");
        for v in &self.variants {
            let _ = write!(out, " | {v:>col$}");
        }
        out.push('\n');
        let rows = self
            .sequences
            .iter()
            .map(String::as_str)
            .zip(self.cells.iter())
            .chain(std::iter::once(("Mean", &self.mean)));
        for (name, values) in rows {
            let _ = write!(out, "{name:<width$}");
            for v in values {
                let _ = write!(out, " | {v:>col$.2}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("sequence,{}\n", self.variants.join(","));
        let rows = self
            .sequences
            .iter()
            .map(String::as_str)
            .zip(self.cells.iter())
            .chain(std::iter::once(("mean", &self.mean)));
        for (name, values) in rows {
            let vals: Vec<String> = values.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{name},{}", vals.join(","));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn center_error_examples() {
        let a = BBox::new(0.0, 0.0, 10.0, 10.0);
        let b = BBox::new(3.0, 4.0, 10.0, 10.0);
        assert_eq!(center_error(&a, &a), 0.0);
        assert_eq!(center_error(&a, &b), 5.0);
        assert_eq!(center_error(&b, &a), 5.0);
    }

    #[test]
    fn overlap_examples() {
        let a = BBox::new(0.0, 0.0, 10.0, 10.0);
        assert_eq!(overlap(&a, &a), 1.0);
        assert_eq!(overlap(&a, &BBox::new(20.0, 0.0, 10.0, 10.0)), 0.0);
        assert!((overlap(&a, &BBox::new(5.0, 0.0, 10.0, 10.0)) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn precision_examples() {
        let c = precision_curve(&[0.0, 10.0, 30.0]).unwrap();
        assert_eq!(c.thresholds.len(), 51);
        assert!((c.value_at(20.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let c = precision_curve(&[0.0; 5]).unwrap();
        assert!(c.values.iter().all(|v| *v == 1.0));
        assert!(precision_curve(&[]).is_err());
    }

    #[test]
    fn success_examples() {
        let (c, auc) = success_curve(&[0.5]).unwrap();
        assert_eq!(c.values.len(), 21);
        for (t, v) in c.thresholds.iter().zip(&c.values) {
            assert_eq!(*v, if *t < 0.5 { 1.0 } else { 0.0 });
        }
        assert!((auc - 10.0 / 21.0).abs() < 1e-15);
        let (_, auc) = success_curve(&[0.0, 0.0]).unwrap();
        assert_eq!(auc, 0.0);
        let (_, auc) = success_curve(&[1.0]).unwrap();
        assert!((auc - 20.0 / 21.0).abs() < 1e-15);
        assert!(success_curve(&[]).is_err());
    }

    fn meta(name: &str, attrs: &[Attribute]) -> SequenceMeta {
        SequenceMeta {
            name: name.into(),
            frame_paths: vec![],
            ground_truth: vec![],
            attributes: attrs.iter().copied().collect(),
        }
    }

    fn row(name: &str, overlaps: &[f64]) -> SequenceScores {
        let gt: Vec<BBox> = overlaps.iter().map(|_| BBox::new(0.0, 0.0, 10.0, 10.0)).collect();
        // shift horizontally so that IoU = o: (10 - d) / (10 + d) = o
        let pred: Vec<BBox> = overlaps
            .iter()
            .map(|o| BBox::new(10.0 * (1.0 - o) / (1.0 + o), 0.0, 10.0, 10.0))
            .collect();
        evaluate_sequence(name, &pred, &gt).unwrap()
    }

    #[test]
    fn rollup_examples() {
        let a = row("a", &[0.42]);
        let b = row("b", &[0.62]);
        let metas = [meta("a", &[Attribute::LR, Attribute::BC]), meta("b", &[Attribute::BC])];
        let roll = attribute_rollup(&[a.clone(), b.clone()], &metas).unwrap();
        assert_eq!(roll[&Attribute::LR].success, a.success);
        assert_eq!(roll[&Attribute::LR].precision, a.precision);
        assert!(!roll.contains_key(&Attribute::IV));
        // threshold 0.4: a counts 1, b counts 1; threshold 0.6: a 0, b 1 -> mean 0.5
        assert_eq!(roll[&Attribute::BC].success.values[12], 0.5);
        assert!(attribute_rollup(&[row("zzz", &[0.5])], &metas).is_err());
    }

    #[test]
    fn table_mean_of_published_column() {
        let column = [
            ("Tiger2", 86.85),
            ("Tiger1", 100.0),
            ("Animal", 97.18),
            ("Jumping", 100.0),
            ("Cliffbar", 98.48),
            ("Woman", 22.39),
            ("Surfer", 80.32),
            ("Sylvester", 88.85),
            ("Cardark", 100.0),
            ("Faceocc1", 100.0),
            ("Faceocc2", 100.0),
            ("Twinning", 94.68),
            ("Box", 60.94),
        ];
        let mut scores = BTreeMap::new();
        scores.insert(
            "RCACF".to_string(),
            column.iter().map(|(s, v)| (s.to_string(), *v)).collect(),
        );
        let t = comparison_table("success", &scores).unwrap();
        assert_eq!(t.sequences.len(), 13);
        assert!((t.mean[0] - 86.90).abs() <= 0.02);
        assert!(t.to_text().contains("86.90"));
    }

    #[test]
    fn table_is_order_normalized() {
        let mut a = BTreeMap::new();
        a.insert(
            "x".to_string(),
            BTreeMap::from([("s2".to_string(), 1.0), ("s1".to_string(), 2.0)]),
        );
        a.insert(
            "y".to_string(),
            BTreeMap::from([("s1".to_string(), 3.0), ("s2".to_string(), 4.0)]),
        );
        let t = comparison_table("m", &a).unwrap();
        assert_eq!(t.sequences, vec!["s1", "s2"]);
        assert_eq!(t.cells, vec![vec![2.0, 3.0], vec![1.0, 4.0]]);
        assert_eq!(t.mean, vec![1.5, 3.5]);

        let single = BTreeMap::from([("v".to_string(), BTreeMap::from([("s".to_string(), 42.0)]))]);
        let t = comparison_table("m", &single).unwrap();
        assert_eq!((t.cells.clone(), t.mean.clone()), (vec![vec![42.0]], vec![42.0]));

        a.get_mut("y").unwrap().remove("s2");
        assert!(matches!(comparison_table("m", &a), Err(Error::Consistency(_))));
    }

    #[test]
    fn report_orders_rows() {
        let rows = vec![row("b", &[0.9]), row("a", &[0.1])];
        let metas = [meta("a", &[]), meta("b", &[Attribute::OCC])];
        let r = build_report("v", rows, &metas, vec![]).unwrap();
        assert_eq!(r.per_sequence[0].name, "a");
        let overall = r.overall.unwrap();
        assert!(
            (overall.success_auc - (r.per_sequence[0].success_auc + r.per_sequence[1].success_auc) / 2.0).abs() < 1e-15
        );
        assert_eq!(r.per_attribute.len(), 1);
    }

    fn arb_box() -> impl Strategy<Value = BBox> {
        (-50.0..50.0f64, -50.0..50.0f64, 0.5..40.0f64, 0.5..40.0f64).prop_map(|(x, y, w, h)| BBox::new(x, y, w, h))
    }

    proptest! {
        #[test]
        fn overlap_is_bounded_and_symmetric(a in arb_box(), b in arb_box()) {
            let o = overlap(&a, &b);
            prop_assert!((0.0..=1.0).contains(&o));
            prop_assert_eq!(o, overlap(&b, &a));
            prop_assert_eq!(overlap(&a, &a), 1.0);
        }

        #[test]
        fn curves_are_monotone(
            errors in proptest::collection::vec(0.0..80.0f64, 1..50),
            overlaps in proptest::collection::vec(0.0..=1.0f64, 1..50),
        ) {
            let p = precision_curve(&errors).unwrap();
            prop_assert!(p.values.windows(2).all(|w| w[0] <= w[1]));
            let (s, auc) = success_curve(&overlaps).unwrap();
            prop_assert!(s.values.windows(2).all(|w| w[0] >= w[1]));
            prop_assert_eq!(auc, s.values.iter().sum::<f64>() / 21.0);
        }
    }
}
