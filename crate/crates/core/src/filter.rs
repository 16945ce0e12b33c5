//! Correlation-filter learning in the Fourier domain.
//!
//! Filters are kept in factored form: a complex numerator and a real, strictly
//! positive denominator. Their ratio `numerator / denominator` is the
//! conjugated filter, so the correlation response to a patch `z` is
//! `inverse(ẑ ⊙ numerator / denominator)`. With a training patch `p`, label `y`
//! and ridge weight `λ1` this solves `min ‖C(p)·w − y‖² + λ1‖w‖²`, where the
//! rows of `C(p)` are all circular shifts of `p`.

use serde::{Deserialize, Serialize};

use crate::dsp::{forward_spectrum, inverse_spectrum, RealGrid, Spectrum};
use crate::error::{Error, Result};

/// How the denominator of the data term is reshaped before context terms are added.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Restoration {
    #[default]
    None,
    /// Noise-to-signal constant `k` replaces the ridge weight; `None` means `k = λ1`.
    Wiener {
        #[serde(default)]
        k: Option<f64>,
    },
    /// Laplacian smoothness penalty `γ·|L̂|²` added on top of the ridge weight.
    Cls { gamma: f64 },
}

/// Which background patches enter the refined filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ContextMode {
    /// No background patches.
    None,
    /// All four cardinal patches.
    All,
    /// Only the patch nearest the coarse prediction.
    #[default]
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Ridge weight on the filter norm.
    pub lambda1: f64,
    /// Weight of the background patches regressed to zero.
    pub lambda2: f64,
    /// Weight of the first-frame target patch regressed to the label.
    pub anchor_weight: f64,
    pub restoration: Restoration,
    pub learning_rate: f64,
    /// Label sigma as a fraction of `sqrt(w·h)` of the padded patch.
    pub sigma_factor: f64,
    pub padding: f64,
    pub context: ContextMode,
    /// Displacement of background patches in units of the target size.
    pub context_offset: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            lambda1: 1e-3,
            lambda2: 20.0,
            anchor_weight: 0.25,
            restoration: Restoration::None,
            learning_rate: 0.025,
            sigma_factor: 0.1,
            padding: 2.0,
            context: ContextMode::Nearest,
            context_offset: 1.0,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str, v: f64| {
            if ok && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(format!("{what} out of range: {v}")))
            }
        };
        check(self.lambda1 > 0.0, "lambda1", self.lambda1)?;
        check(self.lambda2 >= 0.0, "lambda2", self.lambda2)?;
        check(self.anchor_weight >= 0.0, "anchor_weight", self.anchor_weight)?;
        check(
            (0.0..=1.0).contains(&self.learning_rate),
            "learning_rate",
            self.learning_rate,
        )?;
        check(self.sigma_factor > 0.0, "sigma_factor", self.sigma_factor)?;
        check(self.padding >= 1.0, "padding", self.padding)?;
        check(self.context_offset > 0.0, "context_offset", self.context_offset)?;
        match self.restoration {
            Restoration::None => Ok(()),
            Restoration::Wiener { k: Some(k) } => check(k >= 0.0, "wiener k", k),
            Restoration::Wiener { k: None } => Ok(()),
            Restoration::Cls { gamma } => check(gamma >= 0.0, "cls gamma", gamma),
        }
    }
}

/// Factored filter: `numerator / denominator` is the conjugated filter spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterParts {
    pub numerator: Spectrum,
    pub denominator: RealGrid,
}

impl FilterParts {
    /// Per-bin ratio `numerator / denominator` (the conjugate of the filter spectrum).
    pub fn conj_filter(&self) -> Spectrum {
        self.numerator
            .zip_map(&self.denominator, |n, d| n / d)
            .expect("parts share dimensions")
    }

    /// Filter spectrum `ŵ`.
    pub fn filter(&self) -> Spectrum {
        self.conj_filter().map(|c| c.conj())
    }

    /// Spatial filter `w`.
    pub fn spatial_filter(&self) -> Result<RealGrid> {
        inverse_spectrum(&self.filter())
    }
}

fn data_term(p0: &Spectrum, y: &Spectrum) -> Result<(Spectrum, RealGrid)> {
    let numerator = y.zip_map(p0, |y, p| y * p.conj())?;
    let power = p0.map(|p| p.norm_sqr());
    Ok((numerator, power))
}

/// Closed-form ridge regression: `ŷ⊙conj(p̂0) / (|p̂0|² + λ1)`.
pub fn learn_base_filter(p0: &Spectrum, y: &Spectrum, lambda1: f64) -> Result<FilterParts> {
    if !(lambda1 > 0.0) {
        return Err(Error::param(format!("lambda1 must be positive, got {lambda1}")));
    }
    let (numerator, power) = data_term(p0, y)?;
    Ok(FilterParts {
        numerator,
        denominator: power.map(|p| p + lambda1),
    })
}

/// Add `λ2·Σ|p̂ᵢ|²` to the denominator: background patches regressed to zero.
pub fn add_context_terms(mut parts: FilterParts, context: &[Spectrum], lambda2: f64) -> Result<FilterParts> {
    if !(lambda2 >= 0.0) {
        return Err(Error::param(format!("lambda2 must be non-negative, got {lambda2}")));
    }
    let mut background = RealGrid::filled(parts.denominator.width(), parts.denominator.height(), 0.0);
    for c in context {
        c.ensure_same_dims(&background, "context patch does not match filter")?;
        background
            .data_mut()
            .iter_mut()
            .zip(c.data())
            .for_each(|(acc, p)| *acc += p.norm_sqr());
    }
    parts
        .denominator
        .data_mut()
        .iter_mut()
        .zip(background.data())
        .for_each(|(d, b)| *d += lambda2 * b);
    Ok(parts)
}

/// Context-aware ridge regression: target regressed to `y`, background patches to zero.
pub fn learn_ca_filter(
    p0: &Spectrum,
    context: &[Spectrum],
    y: &Spectrum,
    lambda1: f64,
    lambda2: f64,
) -> Result<FilterParts> {
    let base = learn_base_filter(p0, y, lambda1)?;
    add_context_terms(base, context, lambda2)
}

/// `|L̂|²` for the 3×3 discrete Laplacian zero-padded to `w`×`h`.
pub fn laplacian_power(w: usize, h: usize) -> Result<RealGrid> {
    let mut kernel = RealGrid::filled(w, h, 0.0);
    let taps: [(isize, isize, f64); 5] = [(0, 0, 4.0), (1, 0, -1.0), (-1, 0, -1.0), (0, 1, -1.0), (0, -1, -1.0)];
    for (dx, dy, v) in taps {
        let x = dx.rem_euclid(w as isize) as usize;
        let y = dy.rem_euclid(h as isize) as usize;
        let cur = *kernel.get(x, y);
        kernel.set(x, y, cur + v);
    }
    Ok(forward_spectrum(&kernel)?.map(|c| c.norm_sqr()))
}

/// Restoration-reshaped data term.
///
/// Wiener: `|p̂0|² + K`. Constrained least squares: `|p̂0|² + λ1 + γ|L̂|²`.
/// The numerator is the plain data term in both cases.
pub fn apply_restoration(p0: &Spectrum, y: &Spectrum, cfg: &FilterConfig) -> Result<FilterParts> {
    let (numerator, power) = data_term(p0, y)?;
    let denominator = match cfg.restoration {
        Restoration::None => return Err(Error::param("apply_restoration called without a restoration filter")),
        Restoration::Wiener { k } => {
            let k = k.unwrap_or(cfg.lambda1);
            if !(k >= 0.0) {
                return Err(Error::param(format!("wiener k must be non-negative, got {k}")));
            }
            power.map(|p| p + k)
        }
        Restoration::Cls { gamma } => {
            if !(gamma >= 0.0) {
                return Err(Error::param(format!("cls gamma must be non-negative, got {gamma}")));
            }
            let lap = laplacian_power(p0.width(), p0.height())?;
            power.zip_map(&lap, |p, l| p + cfg.lambda1 + gamma * l)?
        }
    };
    if denominator.data().iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Numeric("restored denominator is not strictly positive".into()));
    }
    Ok(FilterParts { numerator, denominator })
}

/// Data term for one training patch, honouring the configured restoration.
pub fn learn_data_term(p0: &Spectrum, y: &Spectrum, cfg: &FilterConfig) -> Result<FilterParts> {
    match cfg.restoration {
        Restoration::None => learn_base_filter(p0, y, cfg.lambda1),
        _ => apply_restoration(p0, y, cfg),
    }
}

/// Fold a fixed appearance patch into the filter with weight `weight`, regressed to `y`.
pub fn add_anchor_term(mut parts: FilterParts, anchor: &Spectrum, y: &Spectrum, weight: f64) -> Result<FilterParts> {
    if !(weight >= 0.0) {
        return Err(Error::param(format!(
            "anchor weight must be non-negative, got {weight}"
        )));
    }
    anchor.ensure_same_dims(&parts.numerator, "anchor does not match filter")?;
    y.ensure_same_dims(&parts.numerator, "label does not match filter")?;
    for ((n, d), (a, yv)) in parts
        .numerator
        .data_mut()
        .iter_mut()
        .zip(parts.denominator.data_mut())
        .zip(anchor.data().iter().zip(y.data()))
    {
        *n += weight * (yv * a.conj());
        *d += weight * a.norm_sqr();
    }
    Ok(parts)
}

/// Correlation response with its peak.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMap {
    pub data: RealGrid,
    /// Cell of the maximum; ties go to the smallest row-major index.
    pub peak: (usize, usize),
    pub peak_value: f64,
}

impl ResponseMap {
    pub fn from_grid(data: RealGrid) -> Self {
        let mut best = 0;
        for (i, v) in data.data().iter().enumerate() {
            if *v > data.data()[best] {
                best = i;
            }
        }
        let peak = (best % data.width(), best / data.width());
        let peak_value = data.data()[best];
        Self { data, peak, peak_value }
    }

    /// Peak displacement from the origin with wrap-around: cells past half the
    /// grid size are negative offsets.
    pub fn peak_offset(&self) -> (isize, isize) {
        let wrap = |p: usize, n: usize| {
            if p > n / 2 {
                p as isize - n as isize
            } else {
                p as isize
            }
        };
        (
            wrap(self.peak.0, self.data.width()),
            wrap(self.peak.1, self.data.height()),
        )
    }
}

/// Response of a factored filter to a patch spectrum.
pub fn filter_response(parts: &FilterParts, z: &Spectrum) -> Result<ResponseMap> {
    z.ensure_same_dims(&parts.numerator, "patch does not match filter")?;
    let product = z.zip_map(&parts.conj_filter(), |a, b| a * b)?;
    Ok(ResponseMap::from_grid(inverse_spectrum(&product)?))
}

/// Learned filter state for one tracking session.
#[derive(Debug, Clone, PartialEq)]
pub struct CfModel {
    pub parts: FilterParts,
    /// Label spectrum with the peak shifted to the origin.
    pub label_spec: Spectrum,
    /// First-frame target spectrum; never updated.
    pub anchor_spec: Spectrum,
    pub window: RealGrid,
    pub cfg: FilterConfig,
}

impl CfModel {
    pub fn new(
        parts: FilterParts,
        label_spec: Spectrum,
        anchor_spec: Spectrum,
        window: RealGrid,
        cfg: FilterConfig,
    ) -> Result<Self> {
        parts
            .numerator
            .ensure_same_dims(&parts.denominator, "numerator/denominator")?;
        parts.numerator.ensure_same_dims(&label_spec, "numerator/label")?;
        parts.numerator.ensure_same_dims(&anchor_spec, "numerator/anchor")?;
        parts.numerator.ensure_same_dims(&window, "numerator/window")?;
        if parts.denominator.data().iter().any(|d| !(*d > 0.0)) {
            return Err(Error::Numeric("denominator must be strictly positive".into()));
        }
        Ok(Self {
            parts,
            label_spec,
            anchor_spec,
            window,
            cfg,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.parts.numerator.dims()
    }

    pub fn response(&self, z: &Spectrum) -> Result<ResponseMap> {
        filter_response(&self.parts, z)
    }

    /// Running average: `old ← (1−η)·old + η·new` for numerator and denominator.
    pub fn update(&mut self, fresh: &FilterParts, eta: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::param(format!("learning rate must lie in [0,1], got {eta}")));
        }
        fresh
            .numerator
            .ensure_same_dims(&self.parts.numerator, "update numerator")?;
        fresh
            .denominator
            .ensure_same_dims(&self.parts.denominator, "update denominator")?;
        let keep = 1.0 - eta;
        for (old, new) in self.parts.numerator.data_mut().iter_mut().zip(fresh.numerator.data()) {
            *old = *old * keep + new * eta;
        }
        for (old, new) in self
            .parts
            .denominator
            .data_mut()
            .iter_mut()
            .zip(fresh.denominator.data())
        {
            *old = *old * keep + new * eta;
        }
        Ok(())
    }
}

/// Value-returning form of [`CfModel::update`].
pub fn update_model(mut model: CfModel, fresh: &FilterParts, eta: f64) -> Result<CfModel> {
    model.update(fresh, eta)?;
    Ok(model)
}
