use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dsp::GrayFrame;
use crate::error::{Error, Result};
use crate::geometry::BBox;

pub const GROUNDTRUTH_FILE: &str = "groundtruth_rect.txt";
pub const IMAGE_DIR: &str = "img";

const IMAGE_EXTENSIONS: [&str; 4] = ["jpg", "jpeg", "png", "bmp"];

/// OTB challenge attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Attribute {
    IV,
    SV,
    OCC,
    DEF,
    MB,
    FM,
    IPR,
    OPR,
    OV,
    BC,
    LR,
}

impl Attribute {
    pub const ALL: [Attribute; 11] = [
        Attribute::IV,
        Attribute::SV,
        Attribute::OCC,
        Attribute::DEF,
        Attribute::MB,
        Attribute::FM,
        Attribute::IPR,
        Attribute::OPR,
        Attribute::OV,
        Attribute::BC,
        Attribute::LR,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Attribute::IV => "IV",
            Attribute::SV => "SV",
            Attribute::OCC => "OCC",
            Attribute::DEF => "DEF",
            Attribute::MB => "MB",
            Attribute::FM => "FM",
            Attribute::IPR => "IPR",
            Attribute::OPR => "OPR",
            Attribute::OV => "OV",
            Attribute::BC => "BC",
            Attribute::LR => "LR",
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Attribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Attribute::ALL
            .into_iter()
            .find(|a| a.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::param(format!("unknown attribute code {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceMeta {
    pub name: String,
    pub frame_paths: Vec<PathBuf>,
    pub ground_truth: Vec<BBox>,
    pub attributes: BTreeSet<Attribute>,
}

impl SequenceMeta {
    /// Lazily decoded frames, in order.
    pub fn frames(&self) -> impl Iterator<Item = Result<GrayFrame>> + '_ {
        self.frame_paths.iter().map(|p| load_frame(p))
    }
}

/// Parse one ground-truth line. OTB stores 1-based corners; the result is 0-based.
pub fn parse_box_line(line: &str) -> std::result::Result<BBox, String> {
    let fields: Vec<&str> = line
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 fields, found {}", fields.len()));
    }
    let mut v = [0.0f64; 4];
    for (slot, field) in v.iter_mut().zip(&fields) {
        *slot = field.parse::<f64>().map_err(|_| format!("not a number: {field:?}"))?;
        if !slot.is_finite() {
            return Err(format!("not a finite number: {field:?}"));
        }
    }
    if v[2] <= 0.0 || v[3] <= 0.0 {
        return Err(format!("non-positive box size {}x{}", v[2], v[3]));
    }
    Ok(BBox::new(v[0] - 1.0, v[1] - 1.0, v[2], v[3]))
}

pub fn parse_groundtruth(text: &str, path: &Path) -> Result<Vec<BBox>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            parse_box_line(l).map_err(|reason| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                reason,
            })
        })
        .collect()
}

/// Serialize boxes in the OTB 1-based convention.
pub fn format_groundtruth(boxes: &[BBox]) -> String {
    boxes
        .iter()
        .map(|b| format!("{},{},{},{}\n", b.x + 1.0, b.y + 1.0, b.w, b.h))
        .collect()
}

fn numeric_key(path: &Path) -> (u64, String) {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    let digits: String = stem.chars().filter(|c| c.is_ascii_digit()).collect();
    (digits.parse().unwrap_or(u64::MAX), stem.to_string())
}

fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::Load {
        path: dir.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut frames = Vec::new();
    for entry in entries {
        let path = entry?.path();
        let is_image = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| x.eq_ignore_ascii_case(e)));
        if is_image {
            frames.push(path);
        }
    }
    frames.sort_by_key(|p| numeric_key(p));
    Ok(frames)
}

/// Load an OTB-layout sequence directory: `img/` frames plus `groundtruth_rect.txt`.
/// The sequence name is the directory name.
pub fn load_sequence(dir: &Path) -> Result<SequenceMeta> {
    let gt_path = dir.join(GROUNDTRUTH_FILE);
    let text = fs::read_to_string(&gt_path).map_err(|e| Error::Load {
        path: gt_path.clone(),
        reason: e.to_string(),
    })?;
    let ground_truth = parse_groundtruth(&text, &gt_path)?;
    let frame_paths = list_frames(&dir.join(IMAGE_DIR))?;
    if frame_paths.is_empty() {
        return Err(Error::Load {
            path: dir.join(IMAGE_DIR),
            reason: "no frames found".into(),
        });
    }
    if ground_truth.is_empty() {
        return Err(Error::Load {
            path: gt_path,
            reason: "no ground-truth boxes".into(),
        });
    }
    if ground_truth.len() > frame_paths.len() {
        return Err(Error::Load {
            path: gt_path,
            reason: format!(
                "{} ground-truth boxes but only {} frames",
                ground_truth.len(),
                frame_paths.len()
            ),
        });
    }
    let name = dir
        .canonicalize()
        .unwrap_or_else(|_| dir.to_path_buf())
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("sequence")
        .to_string();
    Ok(SequenceMeta {
        name,
        frame_paths,
        ground_truth,
        attributes: BTreeSet::new(),
    })
}

/// Decode an image as intensities in `[0,1]`; color images go through
/// `0.299R + 0.587G + 0.114B`.
pub fn load_frame(path: &Path) -> Result<GrayFrame> {
    let img = image::open(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = match img {
        image::DynamicImage::ImageLuma8(g) => g.into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| {
                let [r, g, b] = p.0;
                ((0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64) / 255.0).clamp(0.0, 1.0)
            })
            .collect(),
    };
    GrayFrame::new(w, h, data)
}

/// Parse `<sequence-name>: IV,SV,...` lines. Blank lines and `#` comments are skipped.
pub fn parse_attribute_sidecar(text: &str, path: &Path) -> Result<BTreeMap<String, BTreeSet<Attribute>>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            reason,
        };
        let (name, codes) = line
            .split_once(':')
            .ok_or_else(|| err("expected `<name>: CODE,CODE,...`".into()))?;
        let attrs = codes
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|c| c.parse::<Attribute>().map_err(|e| err(e.to_string())))
            .collect::<Result<BTreeSet<_>>>()?;
        out.insert(name.trim().to_string(), attrs);
    }
    Ok(out)
}

pub fn load_attribute_sidecar(path: &Path) -> Result<BTreeMap<String, BTreeSet<Attribute>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    parse_attribute_sidecar(&text, path)
}
