//! Result files: a `# seq=<name> variant=<fingerprint> frames=<n>` header,
//! then one 0-based `x,y,w,h` line per frame.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::tracker::TrackResult;

pub fn format_result(r: &TrackResult) -> Result<String> {
    if r.boxes.is_empty() {
        return Err(Error::param("refusing to save a result with no boxes"));
    }
    for (what, s) in [("sequence id", &r.sequence_id), ("variant", &r.variant)] {
        if s.is_empty() || s.chars().any(|c| c.is_whitespace() || c == '=') {
            return Err(Error::param(format!(
                "{what} {s:?} cannot be written to a result header"
            )));
        }
    }
    let mut out = format!(
        "# seq={} variant={} frames={}\n",
        r.sequence_id,
        r.variant,
        r.boxes.len()
    );
    for b in &r.boxes {
        out.push_str(&format!("{},{},{},{}\n", b.x, b.y, b.w, b.h));
    }
    Ok(out)
}

pub fn parse_result(text: &str, path: &Path) -> Result<TrackResult> {
    let err = |line: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty result file".into()))?;
    let fields = header
        .strip_prefix('#')
        .ok_or_else(|| err(1, "missing `#` header".into()))?;
    let (mut seq, mut variant, mut frames) = (None, None, None);
    for field in fields.split_whitespace() {
        match field.split_once('=') {
            Some(("seq", v)) => seq = Some(v.to_string()),
            Some(("variant", v)) => variant = Some(v.to_string()),
            Some(("frames", v)) => {
                frames = Some(
                    v.parse::<usize>()
                        .map_err(|_| err(1, format!("bad frame count {v:?}")))?,
                )
            }
            _ => return Err(err(1, format!("unexpected header field {field:?}"))),
        }
    }
    let (Some(sequence_id), Some(variant), Some(frames)) = (seq, variant, frames) else {
        return Err(err(1, "header needs seq, variant and frames".into()));
    };

    let mut boxes = Vec::with_capacity(frames);
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| err(i + 1, e.to_string()))?;
        if v.len() != 4 {
            return Err(err(i + 1, format!("expected 4 values, found {}", v.len())));
        }
        boxes.push(BBox::new(v[0], v[1], v[2], v[3]));
    }
    if boxes.len() != frames {
        return Err(Error::Consistency(format!(
            "{}: header declares {frames} frames but {} boxes follow",
            path.display(),
            boxes.len()
        )));
    }
    Ok(TrackResult {
        sequence_id,
        variant,
        boxes,
    })
}

pub fn save_result(r: &TrackResult, path: &Path) -> Result<()> {
    let text = format_result(r)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn load_result(path: &Path) -> Result<TrackResult> {
    let text = fs::read_to_string(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    parse_result(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> TrackResult {
        TrackResult {
            sequence_id: "Tiger2".into(),
            variant: "rcacf-0123456789ab".into(),
            boxes: vec![BBox::new(1.0, 2.0, 3.0, 4.0), BBox::new(-0.5, 2.25, 3.0, 4.0)],
        }
    }

    #[test]
    fn header_format() {
        let text = format_result(&sample()).unwrap();
        assert!(text.starts_with("# seq=Tiger2 variant=rcacf-0123456789ab frames=2\n1,2,3,4\n-0.5,2.25,3,4\n"));
    }

    #[test]
    fn frame_count_mismatch_is_rejected() {
        let text = "# seq=a variant=b frames=3\n1,2,3,4\n";
        assert!(matches!(
            parse_result(text, Path::new("r.txt")),
            Err(Error::Consistency(_))
        ));
        let text = "seq=a variant=b frames=1\n1,2,3,4\n";
        assert!(matches!(
            parse_result(text, Path::new("r.txt")),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn empty_results_are_refused() {
        let mut r = sample();
        r.boxes.clear();
        let dir = tempfile::tempdir().unwrap();
        assert!(save_result(&r, &dir.path().join("x.txt")).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.txt");
        save_result(&sample(), &path).unwrap();
        assert_eq!(load_result(&path).unwrap(), sample());
    }

    proptest! {
        #[test]
        fn text_round_trip_is_lossless(
            raw in proptest::collection::vec((-1e4..1e4f64, -1e4..1e4f64, 1e-3..1e3f64, 1e-3..1e3f64), 1..40)
        ) {
            let r = TrackResult {
                sequence_id: "seq_1".into(),
                variant: "custom-ffffffffffff".into(),
                boxes: raw.iter().map(|(x, y, w, h)| BBox::new(*x, *y, *w, *h)).collect(),
            };
            let back = parse_result(&format_result(&r).unwrap(), Path::new("p")).unwrap();
            prop_assert_eq!(back, r);
        }
    }
}
