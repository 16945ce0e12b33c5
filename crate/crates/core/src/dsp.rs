//! Signal-processing primitives shared by the filter, context and tracker code:
//! 2D spectra, windows, Gaussian regression targets, patch extraction and
//! patch conditioning.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::geometry::BBox;

/// Dense row-major 2D array.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

pub type RealGrid = Grid<f64>;

/// Complex 2D spectrum, unnormalized forward-transform convention.
pub type Spectrum = Grid<Complex64>;

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::dim(format!(
                "{} values do not fill a {width}x{height} grid",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.data[y * self.width + x] = value;
    }

    pub fn same_dims<U>(&self, other: &Grid<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn ensure_same_dims<U>(&self, other: &Grid<U>, what: &str) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::dim(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn zip_map<U, V>(&self, other: &Grid<U>, mut f: impl FnMut(&T, &U) -> V) -> Result<Grid<V>> {
        self.ensure_same_dims(other, "elementwise operands differ")?;
        Ok(Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect(),
        })
    }
}

impl RealGrid {
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Circularly shift contents so that the cell at `(x, y)` moves to `(x + dx, y + dy)`.
    pub fn circshift(&self, dx: isize, dy: isize) -> Self {
        let (w, h) = (self.width as isize, self.height as isize);
        Self::from_fn(self.width, self.height, |x, y| {
            let sx = (x as isize - dx).rem_euclid(w) as usize;
            let sy = (y as isize - dy).rem_euclid(h) as usize;
            *self.get(sx, sy)
        })
    }
}

/// Single-channel intensity image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayFrame {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayFrame {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::dim("frame must be non-empty"));
        }
        if data.len() != width * height {
            return Err(Error::dim(format!(
                "{} pixels do not fill a {width}x{height} frame",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(Error::param(format!("pixel value {bad} outside [0,1]")));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let grid = RealGrid::from_fn(width, height, f);
        Self::new(width, height, grid.into_vec())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Sample with nearest-edge replication for out-of-frame coordinates.
    pub fn get_clamped(&self, x: i64, y: i64) -> f64 {
        let cx = x.clamp(0, self.width as i64 - 1) as usize;
        let cy = y.clamp(0, self.height as i64 - 1) as usize;
        self.data[cy * self.width + cx]
    }
}

/// Gaussian regression target peaking at `(floor(W/2), floor(H/2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    pub sigma: f64,
    pub grid: RealGrid,
}

impl LabelMap {
    pub fn center(&self) -> (usize, usize) {
        (self.grid.width() / 2, self.grid.height() / 2)
    }

    /// The label with its peak moved circularly to the origin.
    pub fn centered_at_origin(&self) -> RealGrid {
        let (cx, cy) = self.center();
        self.grid.circshift(-(cx as isize), -(cy as isize))
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

/// In-place unnormalized 2D transform: rows first, then columns.
fn fft2d_in_place(data: &mut [Complex64], width: usize, height: usize, dir: Direction) {
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let (row_fft, col_fft) = match dir {
            Direction::Forward => (planner.plan_fft_forward(width), planner.plan_fft_forward(height)),
            Direction::Inverse => (planner.plan_fft_inverse(width), planner.plan_fft_inverse(height)),
        };
        row_fft.process(data);

        let mut column = vec![Complex64::new(0.0, 0.0); height];
        for x in 0..width {
            for (y, c) in column.iter_mut().enumerate() {
                *c = data[y * width + x];
            }
            col_fft.process(&mut column);
            for (y, c) in column.iter().enumerate() {
                data[y * width + x] = *c;
            }
        }
    });
}

/// Standard unnormalized 2D DFT of a real matrix.
pub fn forward_spectrum(m: &RealGrid) -> Result<Spectrum> {
    if m.is_empty() {
        return Err(Error::dim("cannot transform an empty matrix"));
    }
    let mut data: Vec<Complex64> = m.data().iter().map(|v| Complex64::new(*v, 0.0)).collect();
    fft2d_in_place(&mut data, m.width(), m.height(), Direction::Forward);
    Grid::from_vec(m.width(), m.height(), data)
}

/// Forward transform of a complex matrix.
pub fn forward_complex(m: &Spectrum) -> Result<Spectrum> {
    if m.is_empty() {
        return Err(Error::dim("cannot transform an empty matrix"));
    }
    let mut out = m.clone();
    fft2d_in_place(out.data_mut(), m.width(), m.height(), Direction::Forward);
    Ok(out)
}

/// Inverse DFT scaled by `1/(W·H)`, complex result.
pub fn inverse_complex(s: &Spectrum) -> Result<Spectrum> {
    if s.is_empty() {
        return Err(Error::dim("cannot transform an empty spectrum"));
    }
    let mut out = s.clone();
    fft2d_in_place(out.data_mut(), s.width(), s.height(), Direction::Inverse);
    let scale = 1.0 / s.len() as f64;
    out.data_mut().iter_mut().for_each(|c| *c *= scale);
    Ok(out)
}

/// Imaginary residue allowed after an inverse transform, relative to the largest magnitude.
pub const IMAG_RESIDUE_TOL: f64 = 1e-6;

/// Inverse DFT of a (conjugate-symmetric) spectrum, returning the real part.
///
/// Fails when the imaginary residue exceeds [`IMAG_RESIDUE_TOL`] of the largest
/// output magnitude, which means the spectrum did not come from a real signal.
pub fn inverse_spectrum(s: &Spectrum) -> Result<RealGrid> {
    if s.data().iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Numeric("spectrum contains non-finite values".into()));
    }
    let complex = inverse_complex(s)?;
    let max_mag = complex.data().iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let max_imag = complex.data().iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
    if max_imag > IMAG_RESIDUE_TOL * max_mag {
        return Err(Error::Numeric(format!(
            "imaginary residue {max_imag:e} exceeds tolerance (max magnitude {max_mag:e})"
        )));
    }
    Ok(complex.map(|c| c.re))
}

/// 1D Hann window `0.5·(1 − cos(2πi/(N−1)))`.
pub fn hann_1d(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::dim(format!("Hann window needs at least 2 samples, got {n}")));
    }
    let denom = (n - 1) as f64;
    Ok((0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / denom).cos()))
        .collect())
}

/// Separable 2D Hann window (outer product of the row and column windows).
pub fn hann_window(w: usize, h: usize) -> Result<RealGrid> {
    let wx = hann_1d(w)?;
    let wy = hann_1d(h)?;
    Ok(RealGrid::from_fn(w, h, |x, y| wx[x] * wy[y]))
}

pub fn gaussian_label(w: usize, h: usize, sigma: f64) -> Result<LabelMap> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::param(format!("label sigma must be positive, got {sigma}")));
    }
    if w == 0 || h == 0 {
        return Err(Error::dim("label grid must be non-empty"));
    }
    let (cx, cy) = ((w / 2) as f64, (h / 2) as f64);
    let denom = 2.0 * sigma * sigma;
    let grid = RealGrid::from_fn(w, h, |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        (-(dx * dx + dy * dy) / denom).exp()
    });
    Ok(LabelMap { sigma, grid })
}

/// Padded patch size for a box: `(round(w·padding), round(h·padding))`.
pub fn padded_size(b: &BBox, padding: f64) -> Result<(usize, usize)> {
    if !b.is_valid() {
        return Err(Error::param(format!("degenerate box {b:?}")));
    }
    if !(padding >= 1.0) || !padding.is_finite() {
        return Err(Error::param(format!("padding must be >= 1, got {padding}")));
    }
    let pw = (b.w * padding).round() as usize;
    let ph = (b.h * padding).round() as usize;
    Ok((pw.max(1), ph.max(1)))
}

/// Crop a `width`×`height` window centered on `center`, replicating edge pixels
/// outside the frame. The top-left sample is `round(center − size/2)`.
pub fn extract_centered(f: &GrayFrame, center: (f64, f64), width: usize, height: usize) -> RealGrid {
    let x0 = (center.0 - width as f64 / 2.0).round() as i64;
    let y0 = (center.1 - height as f64 / 2.0).round() as i64;
    RealGrid::from_fn(width, height, |x, y| f.get_clamped(x0 + x as i64, y0 + y as i64))
}

/// Crop of size `round(b.w·padding)`×`round(b.h·padding)` centered on the box.
pub fn extract_patch(f: &GrayFrame, b: &BBox, padding: f64) -> Result<RealGrid> {
    let (pw, ph) = padded_size(b, padding)?;
    Ok(extract_centered(f, b.center(), pw, ph))
}

const NORM_GUARD: f64 = 1e-12;

/// `log(1+p)`, zero mean, unit L2 norm (skipped for flat input), then windowed.
pub fn preprocess_patch(p: &RealGrid, win: &RealGrid) -> Result<RealGrid> {
    p.ensure_same_dims(win, "patch and window differ")?;
    let mut out: Vec<f64> = p.data().iter().map(|v| v.ln_1p()).collect();
    let mean = out.iter().sum::<f64>() / out.len() as f64;
    out.iter_mut().for_each(|v| *v -= mean);
    let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm >= NORM_GUARD {
        out.iter_mut().for_each(|v| *v /= norm);
    } else {
        // flat patch: what is left after mean removal is rounding noise
        out.iter_mut().for_each(|v| *v = 0.0);
    }
    out.iter_mut().zip(win.data()).for_each(|(v, w)| *v *= w);
    RealGrid::from_vec(p.width(), p.height(), out)
}
