//! Seeded synthetic sequences with exact ground truth.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::otb::{format_groundtruth, load_sequence, Attribute, SequenceMeta, GROUNDTRUTH_FILE, IMAGE_DIR};
use crate::dsp::GrayFrame;
use crate::error::{Error, Result};
use crate::geometry::BBox;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Motion {
    Static,
    /// Constant velocity in pixels per frame.
    Linear {
        vx: f64,
        vy: f64,
    },
    /// Horizontal oscillation `amplitude·sin(2πk/period)`.
    Sinusoidal {
        amplitude: f64,
        period: f64,
    },
}

impl Motion {
    fn displacement(&self, k: usize) -> (f64, f64) {
        let k = k as f64;
        match *self {
            Motion::Static => (0.0, 0.0),
            Motion::Linear { vx, vy } => (vx * k, vy * k),
            Motion::Sinusoidal { amplitude, period } => (amplitude * (2.0 * PI * k / period).sin(), 0.0),
        }
    }
}

/// A pixel-identical copy of the target moving with constant velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Distractor {
    /// Top-left corner in frame 0.
    pub start: (f64, f64),
    #[serde(default)]
    pub velocity: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    #[serde(default = "default_name")]
    pub name: String,
    /// Frame `(width, height)`.
    pub size: (usize, usize),
    pub frames: usize,
    pub target_size: (usize, usize),
    /// Target top-left corner in frame 0; centered in the frame when absent.
    #[serde(default)]
    pub start: Option<(f64, f64)>,
    pub motion: Motion,
    pub texture_seed: u64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub distractor: Option<Distractor>,
    /// Per-frame illumination slope: frame `k` is scaled by `1 + slope·k`.
    #[serde(default)]
    pub illumination_ramp: Option<f64>,
    #[serde(default)]
    pub attributes: BTreeSet<Attribute>,
}

fn default_name() -> String {
    "synthetic".into()
}

impl SynthSpec {
    pub fn new(size: (usize, usize), frames: usize, target_size: (usize, usize), motion: Motion, seed: u64) -> Self {
        Self {
            name: default_name(),
            size,
            frames,
            target_size,
            start: None,
            motion,
            texture_seed: seed,
            noise_sigma: 0.0,
            distractor: None,
            illumination_ramp: None,
            attributes: BTreeSet::new(),
        }
    }

    fn start(&self) -> (f64, f64) {
        self.start.unwrap_or((
            ((self.size.0 - self.target_size.0) / 2) as f64,
            ((self.size.1 - self.target_size.1) / 2) as f64,
        ))
    }

    /// Rendered target box for frame `k`; positions snap to the pixel grid.
    pub fn box_at(&self, k: usize) -> BBox {
        let (sx, sy) = self.start();
        let (dx, dy) = self.motion.displacement(k);
        BBox::new(
            (sx + dx).round(),
            (sy + dy).round(),
            self.target_size.0 as f64,
            self.target_size.1 as f64,
        )
    }

    fn distractor_at(&self, k: usize) -> Option<(i64, i64)> {
        self.distractor.map(|d| {
            let kf = k as f64;
            (
                (d.start.0 + d.velocity.0 * kf).round() as i64,
                (d.start.1 + d.velocity.1 * kf).round() as i64,
            )
        })
    }

    pub fn validate(&self) -> Result<()> {
        let (w, h) = self.size;
        let (tw, th) = self.target_size;
        if self.frames == 0 {
            return Err(Error::Spec("at least one frame is required".into()));
        }
        if tw < 2 || th < 2 || tw > w || th > h {
            return Err(Error::Spec(format!(
                "target size {tw}x{th} must be at least 2x2 and fit the {w}x{h} frame"
            )));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::Spec(format!("noise sigma {} must be >= 0", self.noise_sigma)));
        }
        if let Motion::Sinusoidal { period, amplitude } = self.motion {
            if !(period > 0.0) || !amplitude.is_finite() {
                return Err(Error::Spec("sinusoidal motion needs a positive period".into()));
            }
        }
        if let Some(slope) = self.illumination_ramp {
            if !slope.is_finite() {
                return Err(Error::Spec("illumination slope must be finite".into()));
            }
        }
        if self.name.is_empty() || self.name.chars().any(char::is_whitespace) {
            return Err(Error::Spec(format!(
                "sequence name {:?} must be non-empty without spaces",
                self.name
            )));
        }
        for k in 0..self.frames {
            let b = self.box_at(k);
            let inside = b.x + b.w >= 1.0 && b.y + b.h >= 1.0 && b.x <= (w - 1) as f64 && b.y <= (h - 1) as f64;
            if !b.is_valid() || !inside {
                return Err(Error::Spec(format!("target leaves the frame at frame {k}: {b:?}")));
            }
        }
        Ok(())
    }
}

/// Blocky high-contrast texture for the target.
fn target_texture(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Vec<f64> {
    const CELL: usize = 2;
    let cw = w.div_ceil(CELL);
    let ch = h.div_ceil(CELL);
    let cells: Vec<f64> = (0..cw * ch).map(|_| rng.random_range(0.05..0.95)).collect();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            out.push(cells[(y / CELL) * cw + x / CELL]);
        }
    }
    out
}

/// Smooth low-contrast background built from a few random plane waves.
fn background_texture(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Vec<f64> {
    let waves: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| {
            let period = rng.random_range(24.0..64.0);
            let angle = rng.random_range(0.0..2.0 * PI);
            let phase = rng.random_range(0.0..2.0 * PI);
            (angle.cos() * 2.0 * PI / period, angle.sin() * 2.0 * PI / period, phase)
        })
        .collect();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let s: f64 = waves
                .iter()
                .map(|(fx, fy, ph)| (fx * x as f64 + fy * y as f64 + ph).sin())
                .sum();
            out.push(0.45 + 0.05 * s);
        }
    }
    out
}

fn paste(canvas: &mut [f64], size: (usize, usize), tex: &[f64], tsize: (usize, usize), at: (i64, i64)) {
    for ty in 0..tsize.1 {
        let fy = at.1 + ty as i64;
        if fy < 0 || fy >= size.1 as i64 {
            continue;
        }
        for tx in 0..tsize.0 {
            let fx = at.0 + tx as i64;
            if fx < 0 || fx >= size.0 as i64 {
                continue;
            }
            canvas[fy as usize * size.0 + fx as usize] = tex[ty * tsize.0 + tx];
        }
    }
}

fn quantize(v: f64) -> f64 {
    (v.clamp(0.0, 1.0) * 255.0).round() / 255.0
}

/// Render a synthetic sequence. Frames are quantized to 8-bit levels so they
/// survive a round trip through image files unchanged.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<(Vec<GrayFrame>, SequenceMeta)> {
    spec.validate()?;
    let (w, h) = spec.size;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.texture_seed);
    let target = target_texture(&mut rng, spec.target_size.0, spec.target_size.1);
    let background = background_texture(&mut rng, w, h);
    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE)).map_err(|e| Error::Spec(e.to_string()))?;

    let mut frames = Vec::with_capacity(spec.frames);
    let mut ground_truth = Vec::with_capacity(spec.frames);
    for k in 0..spec.frames {
        let mut canvas = background.clone();
        if let Some(at) = spec.distractor_at(k) {
            paste(&mut canvas, spec.size, &target, spec.target_size, at);
        }
        let b = spec.box_at(k);
        paste(
            &mut canvas,
            spec.size,
            &target,
            spec.target_size,
            (b.x as i64, b.y as i64),
        );

        if let Some(slope) = spec.illumination_ramp {
            let gain = 1.0 + slope * k as f64;
            canvas.iter_mut().for_each(|v| *v = (*v * gain).clamp(0.0, 1.0));
        }
        if spec.noise_sigma > 0.0 {
            let mut frame_rng = ChaCha8Rng::seed_from_u64(spec.texture_seed);
            frame_rng.set_stream(k as u64 + 1);
            canvas.iter_mut().for_each(|v| *v += noise.sample(&mut frame_rng));
        }
        canvas.iter_mut().for_each(|v| *v = quantize(*v));
        frames.push(GrayFrame::new(w, h, canvas)?);
        ground_truth.push(b);
    }
    let meta = SequenceMeta {
        name: spec.name.clone(),
        frame_paths: Vec::new(),
        ground_truth,
        attributes: spec.attributes.clone(),
    };
    Ok((frames, meta))
}

/// Write frames as 8-bit grayscale PNGs in OTB layout.
pub fn write_sequence(dir: &Path, frames: &[GrayFrame], ground_truth: &[BBox]) -> Result<()> {
    let img_dir = dir.join(IMAGE_DIR);
    fs::create_dir_all(&img_dir)?;
    for (i, f) in frames.iter().enumerate() {
        let bytes: Vec<u8> = f.data().iter().map(|v| (v * 255.0).round() as u8).collect();
        let img =
            image::GrayImage::from_raw(f.width() as u32, f.height() as u32, bytes).expect("buffer matches frame size");
        img.save(img_dir.join(format!("{:04}.png", i + 1)))?;
    }
    fs::write(dir.join(GROUNDTRUTH_FILE), format_groundtruth(ground_truth))?;
    Ok(())
}

/// Generate, write to `dir` in OTB layout and load back through the regular loader.
pub fn render_sequence(spec: &SynthSpec, dir: &Path) -> Result<SequenceMeta> {
    let (frames, meta) = generate_synthetic(spec)?;
    write_sequence(dir, &frames, &meta.ground_truth)?;
    let mut loaded = load_sequence(dir)?;
    loaded.attributes = meta.attributes;
    Ok(loaded)
}
