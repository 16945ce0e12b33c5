//! Per-frame tracking pipeline.
//!
//! Each frame runs two localizations. The running model gives a coarse
//! position; background patches are cut around the previous box and the one
//! nearest that coarse position (or all of them, or none, depending on
//! [`ContextMode`]) regularizes a fresh filter learned at the coarse position.
//! The fresh filter, which also carries the first-frame anchor term, gives the
//! final position and is then blended into the running model.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::context::{generate_context_patches, select_nearest_patch, ContextTag};
use crate::dsp::{
    extract_centered, forward_spectrum, gaussian_label, hann_window, padded_size, preprocess_patch, GrayFrame, Spectrum,
};
use crate::error::{Error, Result};
use crate::filter::{
    add_anchor_term, add_context_terms, filter_response, learn_data_term, CfModel, ContextMode, FilterConfig,
    FilterParts, Restoration,
};
use crate::geometry::BBox;

/// A named filter configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    pub config: FilterConfig,
}

pub const PRESETS: [&str; 3] = ["base", "ca", "rcacf"];

impl Variant {
    pub fn new(name: impl Into<String>, config: FilterConfig) -> Result<Self> {
        let name = name.into();
        if name.is_empty()
            || !name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        {
            return Err(Error::param(format!(
                "variant name {name:?} must be non-empty and use [A-Za-z0-9_.-]"
            )));
        }
        config.validate()?;
        Ok(Self { name, config })
    }

    /// Plain ridge-regression filter: no context, no anchor, no restoration.
    pub fn base() -> Self {
        Self {
            name: "base".into(),
            config: FilterConfig {
                lambda2: 0.0,
                anchor_weight: 0.0,
                restoration: Restoration::None,
                context: ContextMode::None,
                ..FilterConfig::default()
            },
        }
    }

    /// Context-aware filter using all four background patches.
    pub fn ca() -> Self {
        Self {
            name: "ca".into(),
            config: FilterConfig {
                lambda2: 20.0,
                anchor_weight: 0.0,
                restoration: Restoration::None,
                context: ContextMode::All,
                ..FilterConfig::default()
            },
        }
    }

    /// Single nearest background patch, first-frame anchor and Wiener restoration.
    pub fn rcacf() -> Self {
        Self {
            name: "rcacf".into(),
            config: FilterConfig {
                lambda2: 20.0,
                anchor_weight: 0.25,
                restoration: Restoration::Wiener { k: None },
                context: ContextMode::Nearest,
                ..FilterConfig::default()
            },
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "base" => Ok(Self::base()),
            "ca" => Ok(Self::ca()),
            "rcacf" => Ok(Self::rcacf()),
            other => Err(Error::param(format!(
                "unknown variant preset {other:?} (expected one of {})",
                PRESETS.join(", ")
            ))),
        }
    }

    /// `<name>-<12 hex digits>` where the digits hash the canonical JSON of the config.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(&self.config).expect("config serializes");
        let digest = Sha256::digest(&json);
        let hex: String = digest[..6].iter().map(|b| format!("{b:02x}")).collect();
        format!("{}-{hex}", self.name)
    }
}

/// Tracked boxes for one sequence under one variant.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackResult {
    pub sequence_id: String,
    pub variant: String,
    pub boxes: Vec<BBox>,
}

impl TrackResult {
    /// Variant name: the fingerprint without its hash suffix.
    pub fn variant_name(&self) -> &str {
        match self.variant.rsplit_once('-') {
            Some((name, hash)) if hash.len() == 12 && hash.chars().all(|c| c.is_ascii_hexdigit()) => name,
            _ => &self.variant,
        }
    }
}

/// What happened inside one `track_frame` call.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTrace {
    pub frame_index: usize,
    pub previous_box: BBox,
    pub coarse_center: (f64, f64),
    /// Background patch centers considered this frame, in tag order.
    pub context_centers: Vec<(ContextTag, (f64, f64))>,
    /// Patch chosen by nearest-distance selection, when that mode is active.
    pub selected: Option<ContextTag>,
    pub final_center: (f64, f64),
    pub bbox: BBox,
}

#[derive(Debug, Clone)]
pub struct Tracker {
    model: CfModel,
    current_box: BBox,
    patch_size: (usize, usize),
    frame_index: usize,
    frame_dims: (usize, usize),
}

impl Tracker {
    pub fn init(frame: &GrayFrame, b: BBox, cfg: FilterConfig) -> Result<Self> {
        cfg.validate()?;
        if !b.is_valid() {
            return Err(Error::param(format!("degenerate initial box {b:?}")));
        }
        if !b.intersects_frame(frame.width(), frame.height()) {
            return Err(Error::param(format!("initial box {b:?} lies outside the frame")));
        }
        let (pw, ph) = padded_size(&b, cfg.padding)?;
        let window = hann_window(pw, ph)?;
        let sigma = cfg.sigma_factor * ((pw * ph) as f64).sqrt();
        let label = gaussian_label(pw, ph, sigma)?;
        let label_spec = forward_spectrum(&label.centered_at_origin())?;

        let target = transformed_patch(frame, b.center(), &window)?;
        let parts = learn_data_term(&target, &label_spec, &cfg)?;
        let parts = add_anchor_term(parts, &target, &label_spec, cfg.anchor_weight)?;
        let model = CfModel::new(parts, label_spec, target, window, cfg)?;

        Ok(Self {
            model,
            current_box: b,
            patch_size: (pw, ph),
            frame_index: 0,
            frame_dims: frame.dims(),
        })
    }

    pub fn model(&self) -> &CfModel {
        &self.model
    }

    pub fn current_box(&self) -> BBox {
        self.current_box
    }

    pub fn patch_size(&self) -> (usize, usize) {
        self.patch_size
    }

    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    pub fn track_frame(&mut self, frame: &GrayFrame) -> Result<FrameTrace> {
        if frame.dims() != self.frame_dims {
            return Err(Error::dim(format!(
                "frame is {:?}, sequence is {:?}",
                frame.dims(),
                self.frame_dims
            )));
        }
        let cfg = self.model.cfg;
        let window = &self.model.window;
        let previous_box = self.current_box;
        let center = previous_box.center();

        let z = transformed_patch(frame, center, window)?;
        let coarse = self.model.response(&z)?.peak_offset();
        let coarse_center = (center.0 + coarse.0 as f64, center.1 + coarse.1 as f64);

        let (pool, selected) = match cfg.context {
            ContextMode::None => (Vec::new(), None),
            ContextMode::All => (
                generate_context_patches(frame, &previous_box, cfg.context_offset, window)?,
                None,
            ),
            ContextMode::Nearest => {
                let pool = generate_context_patches(frame, &previous_box, cfg.context_offset, window)?;
                let tag = select_nearest_patch(&pool, coarse_center)?.tag;
                (pool, Some(tag))
            }
        };
        let context: Vec<Spectrum> = pool
            .iter()
            .filter(|p| selected.is_none_or(|t| t == p.tag))
            .map(|p| p.spectrum.clone())
            .collect();

        let refined_patch = transformed_patch(frame, coarse_center, window)?;
        let refined = self.refined_filter(&refined_patch, &context)?;
        let fine = filter_response(&refined, &refined_patch)?.peak_offset();
        let final_center = (coarse_center.0 + fine.0 as f64, coarse_center.1 + fine.1 as f64);

        let bbox = BBox::from_center(final_center, previous_box.w, previous_box.h)
            .clamp_to_frame(frame.width(), frame.height());
        self.model.update(&refined, cfg.learning_rate)?;
        self.current_box = bbox;
        self.frame_index += 1;

        Ok(FrameTrace {
            frame_index: self.frame_index,
            previous_box,
            coarse_center,
            context_centers: pool.iter().map(|p| (p.tag, p.center)).collect(),
            selected,
            final_center,
            bbox,
        })
    }

    fn refined_filter(&self, patch: &Spectrum, context: &[Spectrum]) -> Result<FilterParts> {
        let cfg = &self.model.cfg;
        let y = &self.model.label_spec;
        let parts = learn_data_term(patch, y, cfg)?;
        let parts = add_context_terms(parts, context, cfg.lambda2)?;
        add_anchor_term(parts, &self.model.anchor_spec, y, cfg.anchor_weight)
    }
}

fn transformed_patch(frame: &GrayFrame, center: (f64, f64), window: &crate::dsp::RealGrid) -> Result<Spectrum> {
    let raw = extract_centered(frame, center, window.width(), window.height());
    forward_spectrum(&preprocess_patch(&raw, window)?)
}

/// Track a whole sequence from its first frame; also returns the per-frame traces.
pub fn run_sequence_traced<I>(
    sequence_id: &str,
    frames: I,
    init_box: BBox,
    variant: &Variant,
) -> Result<(TrackResult, Vec<FrameTrace>)>
where
    I: IntoIterator<Item = Result<GrayFrame>>,
{
    let mut frames = frames.into_iter();
    let first = frames.next().ok_or_else(|| Error::param("sequence has no frames"))??;
    let mut tracker = Tracker::init(&first, init_box, variant.config)?;
    let mut boxes = vec![init_box];
    let mut traces = Vec::new();
    for frame in frames {
        let trace = tracker.track_frame(&frame?)?;
        boxes.push(trace.bbox);
        traces.push(trace);
    }
    let result = TrackResult {
        sequence_id: sequence_id.to_string(),
        variant: variant.fingerprint(),
        boxes,
    };
    Ok((result, traces))
}

pub fn run_sequence<I>(sequence_id: &str, frames: I, init_box: BBox, variant: &Variant) -> Result<TrackResult>
where
    I: IntoIterator<Item = Result<GrayFrame>>,
{
    run_sequence_traced(sequence_id, frames, init_box, variant).map(|(r, _)| r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn textured_frame(w: usize, h: usize) -> GrayFrame {
        GrayFrame::from_fn(w, h, |x, y| {
            let v = (x * 37 + y * 91 + (x * y) % 13) % 29;
            v as f64 / 28.0
        })
        .unwrap()
    }

    #[test]
    fn presets_match_their_definitions() {
        let base = Variant::base().config;
        assert_eq!(
            (base.lambda2, base.anchor_weight, base.restoration),
            (0.0, 0.0, Restoration::None)
        );
        let ca = Variant::ca().config;
        assert_eq!((ca.lambda2, ca.context), (20.0, ContextMode::All));
        let rcacf = Variant::rcacf().config;
        assert_eq!(rcacf.lambda2, 20.0);
        assert_eq!(rcacf.anchor_weight, 0.25);
        assert_eq!(rcacf.context, ContextMode::Nearest);
        assert_eq!(rcacf.restoration, Restoration::Wiener { k: None });
        assert!(Variant::preset("kcf").is_err());
    }

    #[test]
    fn fingerprint_tracks_config() {
        let a = Variant::rcacf();
        let mut b = Variant::rcacf();
        b.config.lambda2 = 0.0;
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), Variant::rcacf().fingerprint());
        assert!(a.fingerprint().starts_with("rcacf-"));
        let r = TrackResult {
            sequence_id: "s".into(),
            variant: a.fingerprint(),
            boxes: vec![],
        };
        assert_eq!(r.variant_name(), "rcacf");
        assert!(Variant::new("has space", FilterConfig::default()).is_err());
    }

    #[test]
    fn init_model_matches_term_algebra() {
        let frame = textured_frame(80, 60);
        let b = BBox::new(30.0, 20.0, 12.0, 10.0);
        let cfg = FilterConfig {
            restoration: Restoration::None,
            anchor_weight: 0.25,
            ..FilterConfig::default()
        };
        let t = Tracker::init(&frame, b, cfg).unwrap();
        let m = t.model();
        assert_eq!(t.patch_size(), (24, 20));
        for ((n, y), p) in m
            .parts
            .numerator
            .data()
            .iter()
            .zip(m.label_spec.data())
            .zip(m.anchor_spec.data())
        {
            let expected = Complex64::new(1.25, 0.0) * y * p.conj();
            assert!((n - expected).norm() < 1e-12 * (1.0 + expected.norm()));
        }

        let pure = Tracker::init(
            &frame,
            b,
            FilterConfig {
                anchor_weight: 0.0,
                ..cfg
            },
        )
        .unwrap();
        let eq1 =
            crate::filter::learn_base_filter(&pure.model().anchor_spec, &pure.model().label_spec, cfg.lambda1).unwrap();
        assert_eq!(pure.model().parts, eq1);
    }

    #[test]
    fn same_frame_response_is_centered() {
        let frame = textured_frame(80, 60);
        let b = BBox::new(30.0, 20.0, 12.0, 10.0);
        let mut t = Tracker::init(&frame, b, Variant::rcacf().config).unwrap();
        let trace = t.track_frame(&frame).unwrap();
        assert_eq!(trace.coarse_center, b.center());
        assert_eq!(trace.bbox, b);
        assert_eq!(t.frame_index(), 1);
    }

    #[test]
    fn init_rejects_bad_boxes() {
        let frame = textured_frame(40, 40);
        let cfg = FilterConfig::default();
        assert!(matches!(
            Tracker::init(&frame, BBox::new(5.0, 5.0, 0.0, 4.0), cfg),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            Tracker::init(&frame, BBox::new(100.0, 5.0, 4.0, 4.0), cfg),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn frame_size_mismatch_is_rejected() {
        let frame = textured_frame(40, 40);
        let mut t = Tracker::init(&frame, BBox::new(10.0, 10.0, 8.0, 8.0), FilterConfig::default()).unwrap();
        assert!(matches!(
            t.track_frame(&textured_frame(41, 40)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn single_frame_sequence() {
        let frame = textured_frame(40, 40);
        let b = BBox::new(10.0, 10.0, 8.0, 8.0);
        let r = run_sequence("one", vec![Ok(frame)], b, &Variant::rcacf()).unwrap();
        assert_eq!(r.boxes, vec![b]);
        assert!(matches!(
            run_sequence("none", Vec::new(), b, &Variant::rcacf()),
            Err(Error::Parameter(_))
        ));
    }
}
