//! Background-patch pool around the target and nearest-patch selection.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dsp::{extract_centered, forward_spectrum, preprocess_patch, GrayFrame, RealGrid, Spectrum};
use crate::error::{Error, Result};
use crate::geometry::BBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ContextTag {
    Up,
    Down,
    Left,
    Right,
}

impl ContextTag {
    pub const ALL: [ContextTag; 4] = [ContextTag::Up, ContextTag::Down, ContextTag::Left, ContextTag::Right];

    /// Unit displacement in `(x, y)`, image rows growing downward.
    pub fn direction(self) -> (f64, f64) {
        match self {
            ContextTag::Up => (0.0, -1.0),
            ContextTag::Down => (0.0, 1.0),
            ContextTag::Left => (-1.0, 0.0),
            ContextTag::Right => (1.0, 0.0),
        }
    }
}

impl fmt::Display for ContextTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ContextTag::Up => "up",
            ContextTag::Down => "down",
            ContextTag::Left => "left",
            ContextTag::Right => "right",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextPatch {
    pub bbox: BBox,
    pub center: (f64, f64),
    /// Transform of the preprocessed patch, same size as the tracker window.
    pub spectrum: Spectrum,
    pub tag: ContextTag,
}

/// Centers of the four cardinal background patches, in tag order.
pub fn context_centers(target: &BBox, offset_factor: f64) -> [(ContextTag, (f64, f64)); 4] {
    let (cx, cy) = target.center();
    ContextTag::ALL.map(|tag| {
        let (ux, uy) = tag.direction();
        (
            tag,
            (cx + ux * target.w * offset_factor, cy + uy * target.h * offset_factor),
        )
    })
}

/// Up, Down, Left and Right background patches displaced by `offset_factor`
/// target sizes from the target center. Each patch is cropped at the window's
/// size, preprocessed with `window` and transformed.
pub fn generate_context_patches(
    frame: &GrayFrame,
    target: &BBox,
    offset_factor: f64,
    window: &RealGrid,
) -> Result<Vec<ContextPatch>> {
    if !target.is_valid() {
        return Err(Error::param(format!("degenerate target box {target:?}")));
    }
    if !(offset_factor > 0.0) || !offset_factor.is_finite() {
        return Err(Error::param(format!(
            "offset factor must be positive, got {offset_factor}"
        )));
    }
    context_centers(target, offset_factor)
        .into_iter()
        .map(|(tag, center)| {
            let raw = extract_centered(frame, center, window.width(), window.height());
            let spectrum = forward_spectrum(&preprocess_patch(&raw, window)?)?;
            Ok(ContextPatch {
                bbox: BBox::from_center(center, target.w, target.h),
                center,
                spectrum,
                tag,
            })
        })
        .collect()
}

pub fn patch_distance(patch_center: (f64, f64), predicted_center: (f64, f64)) -> f64 {
    (patch_center.0 - predicted_center.0).hypot(patch_center.1 - predicted_center.1)
}

/// The patch whose center is closest to `predicted_center`; the first in list
/// order wins exact ties.
pub fn select_nearest_patch(patches: &[ContextPatch], predicted_center: (f64, f64)) -> Result<&ContextPatch> {
    let mut best: Option<(&ContextPatch, f64)> = None;
    for p in patches {
        let d = patch_distance(p.center, predicted_center);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((p, d));
        }
    }
    best.map(|(p, _)| p)
        .ok_or_else(|| Error::param("cannot select from an empty patch list"))
}
